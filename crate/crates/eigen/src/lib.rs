//! Covariance estimation and eigenspace tools.
//!
//! Eigenpairs are returned in descending eigenvalue order. After
//! [`EigenSplit::split`] the leading `rho` eigenvectors span the jamming
//! subspace and the rest the noise subspace.

use faer::linalg::matmul::triangular::{matmul as herk, BlockStructure};
use faer::{c64, Accum, Col, ColRef, Mat, MatRef, Par, Side};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("invalid argument: {0}")]
    Argument(String),
}

pub type Result<T> = std::result::Result<T, EigenError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceKind {
    /// Estimated from every echo sample, target included.
    Full,
    /// Estimated from a subset of echo samples.
    Training,
    /// Built from known steering vectors and powers.
    Analytic,
}

#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    pub values: Mat<c64>,
    pub sample_count: usize,
    pub kind: CovarianceKind,
}

impl CovarianceMatrix {
    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    /// `w^H R w`.
    pub fn quadratic_form(&self, w: ColRef<'_, c64>) -> f64 {
        let rw = &self.values * w;
        let q: c64 = w.adjoint() * &rw;
        q.re
    }

    /// Copy with `load` added to the diagonal.
    pub fn loaded(&self, load: f64) -> Self {
        let mut values = self.values.clone();
        for i in 0..values.nrows() {
            values[(i, i)] += c64::new(load, 0.0);
        }
        Self { values, ..*self }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.values[(i, i)].re).sum()
    }

    /// Largest deviation from Hermitian symmetry relative to the largest entry.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let (mut defect, mut scale) = (0.0f64, 0.0f64);
        for j in 0..n {
            for i in 0..n {
                scale = scale.max(self.values[(i, j)].norm());
                defect = defect.max((self.values[(i, j)] - self.values[(j, i)].conj()).norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            defect / scale
        }
    }
}

fn mirror_lower(m: &mut Mat<c64>) {
    let n = m.nrows();
    for j in 0..n {
        m[(j, j)] = c64::new(m[(j, j)].re, 0.0);
        for i in j + 1..n {
            m[(j, i)] = m[(i, j)].conj();
        }
    }
}

/// `R = X X^H / K` for `K` snapshot columns.
pub fn sample_covariance(snapshots: MatRef<'_, c64>) -> Result<CovarianceMatrix> {
    let k = snapshots.ncols();
    if k == 0 {
        return Err(EigenError::Argument("covariance needs at least one snapshot".into()));
    }
    let n = snapshots.nrows();
    let mut values = Mat::<c64>::zeros(n, n);
    herk(
        values.as_mut(),
        BlockStructure::TriangularLower,
        Accum::Replace,
        snapshots,
        BlockStructure::Rectangular,
        snapshots.adjoint(),
        BlockStructure::Rectangular,
        c64::new(1.0 / k as f64, 0.0),
        Par::Seq,
    );
    mirror_lower(&mut values);
    if values.as_ref().has_nan() || !values.as_ref().is_all_finite() {
        return Err(EigenError::Numeric("covariance contains non-finite values".into()));
    }
    Ok(CovarianceMatrix { values, sample_count: k, kind: CovarianceKind::Full })
}

/// `sum_q p_q v_q v_q^H + noise * I`.
pub fn analytic_covariance(components: &[(f64, ColRef<'_, c64>)], noise: f64) -> Result<CovarianceMatrix> {
    let n = components
        .first()
        .map(|(_, v)| v.nrows())
        .ok_or_else(|| EigenError::Argument("analytic covariance needs at least one component".into()))?;
    let mut values = Mat::<c64>::zeros(n, n);
    for (p, v) in components {
        if v.nrows() != n {
            return Err(EigenError::Argument("component dimensions differ".into()));
        }
        for j in 0..n {
            let vj = v[j].conj() * *p;
            for i in 0..n {
                values[(i, j)] += v[i] * vj;
            }
        }
    }
    for i in 0..n {
        values[(i, i)] += c64::new(noise, 0.0);
    }
    Ok(CovarianceMatrix { values, sample_count: 0, kind: CovarianceKind::Analytic })
}

#[derive(Debug, Clone)]
pub struct EigenSplit {
    /// Descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// Column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: Mat<c64>,
    rank: Option<usize>,
}

/// Relative Hermitian defect tolerated before decomposition is refused.
pub const HERMITIAN_TOLERANCE: f64 = 1e-9;

pub fn eig_descending(r: &CovarianceMatrix) -> Result<EigenSplit> {
    let defect = r.hermitian_defect();
    if !defect.is_finite() || defect > HERMITIAN_TOLERANCE {
        return Err(EigenError::Numeric(format!("matrix is not Hermitian (relative defect {defect:e})")));
    }
    let evd = r
        .values
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| EigenError::Numeric(format!("eigen-decomposition failed: {e:?}")))?;
    let n = r.dim();
    let s = evd.S().column_vector();
    let u = evd.U();
    let eigenvalues = (0..n).map(|i| s[n - 1 - i].re.max(0.0)).collect();
    let eigenvectors = Mat::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    Ok(EigenSplit { eigenvalues, eigenvectors, rank: None })
}

pub fn split_subspaces(eigen: EigenSplit, rho: usize) -> Result<EigenSplit> {
    eigen.split(rho)
}

impl EigenSplit {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn rank(&self) -> Option<usize> {
        self.rank
    }

    /// Marks the first `rho` eigenvectors as the jamming subspace.
    pub fn split(mut self, rho: usize) -> Result<Self> {
        if rho > self.dim() {
            return Err(EigenError::Argument(format!(
                "subspace dimension {rho} exceeds matrix size {}",
                self.dim()
            )));
        }
        self.rank = Some(rho);
        Ok(self)
    }

    fn require_rank(&self) -> Result<usize> {
        self.rank.ok_or_else(|| EigenError::Argument("subspaces have not been split".into()))
    }

    /// Leading `count` eigenvectors.
    pub fn leading(&self, count: usize) -> MatRef<'_, c64> {
        self.eigenvectors.as_ref().subcols(0, count.min(self.dim()))
    }

    pub fn jamming_subspace(&self) -> Result<MatRef<'_, c64>> {
        Ok(self.leading(self.require_rank()?))
    }

    pub fn noise_subspace(&self) -> Result<MatRef<'_, c64>> {
        let rho = self.require_rank()?;
        Ok(self.eigenvectors.as_ref().subcols(rho, self.dim() - rho))
    }

    /// `U_n U_n^H v`.
    pub fn project_noise(&self, v: ColRef<'_, c64>) -> Result<Col<c64>> {
        let un = self.noise_subspace()?;
        if v.nrows() != self.dim() {
            return Err(EigenError::Argument("vector length does not match the subspace".into()));
        }
        let coeffs = un.adjoint() * v;
        Ok(un * &coeffs)
    }

    /// `U_n U_n^H`.
    pub fn noise_projector(&self) -> Result<Mat<c64>> {
        let un = self.noise_subspace()?;
        Ok(un * un.adjoint())
    }
}
