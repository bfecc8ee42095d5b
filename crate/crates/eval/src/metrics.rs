//! Output SINR, MVDR weights, beampatterns and Capon spectra.

use faer::linalg::solvers::Solve;
use faer::{c64, Col, ColRef, Mat, Side};
use stca_array::steering_from_frequency;
use stca_eigen::CovarianceMatrix;
use stca_nsjm::{BeamWeight, Provenance};

use crate::{EvalError, Result};

pub const SINR_FLOOR_DB: f64 = -100.0;

/// `10 log10(p_s |w^H v|^2 / (w^H R w))`, floored at [`SINR_FLOOR_DB`].
pub fn sinr_db(w: ColRef<'_, c64>, target: ColRef<'_, c64>, signal_power: f64, incm: &CovarianceMatrix) -> Result<f64> {
    if w.nrows() != target.nrows() || w.nrows() != incm.dim() {
        return Err(EvalError::Numeric("weight, steering vector and covariance sizes differ".into()));
    }
    let den = incm.quadratic_form(w);
    if den.is_nan() || den <= 0.0 {
        return Err(EvalError::Numeric("interference-plus-noise power of the weight is not positive".into()));
    }
    let g: c64 = w.adjoint() * target;
    let ratio = signal_power * g.norm_sqr() / den;
    Ok(if ratio > 0.0 { (10.0 * ratio.log10()).max(SINR_FLOOR_DB) } else { SINR_FLOOR_DB })
}

/// Solves `R x = rhs` by Cholesky, retrying with diagonal loading when `R`
/// is not numerically positive definite.
pub(crate) fn hpd_solve(r: &CovarianceMatrix, rhs: &Mat<c64>) -> Result<Mat<c64>> {
    if let Ok(llt) = r.values.llt(Side::Lower) {
        return Ok(llt.solve(rhs));
    }
    let load = 1e-6 * (r.trace() / r.dim() as f64).max(1e-12);
    log::warn!("covariance is not positive definite; loading the diagonal by {load:e}");
    let loaded = r.loaded(load);
    let llt = loaded
        .values
        .llt(Side::Lower)
        .map_err(|e| EvalError::Numeric(format!("covariance cannot be factored even after loading: {e:?}")))?;
    Ok(llt.solve(rhs))
}

/// `R^{-1} v`, scaled to unit response at `v`.
pub fn mvdr_weight(incm: &CovarianceMatrix, v: ColRef<'_, c64>) -> Result<BeamWeight> {
    let x = hpd_solve(incm, &v.to_owned().as_mat().to_owned())?;
    Ok(BeamWeight::normalized(x.col(0).to_owned(), v, Provenance::Mvdr)?)
}

/// `n` points evenly covering `[-0.5, 0.5)`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| -0.5 + i as f64 / n as f64).collect()
}

/// Response over a transmit-by-receive frequency grid in dB, normalised so
/// the maximum is 0 dB.
#[derive(Debug, Clone)]
pub struct PatternGrid {
    pub f_t: Vec<f64>,
    pub f_r: Vec<f64>,
    /// Indexed `[i_t * f_r.len() + i_r]`.
    pub values_db: Vec<f64>,
}

impl PatternGrid {
    pub fn at(&self, i_t: usize, i_r: usize) -> f64 {
        self.values_db[i_t * self.f_r.len() + i_r]
    }

    /// Grid indices of the maximum.
    pub fn argmax(&self) -> (usize, usize) {
        let i = self
            .values_db
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        (i / self.f_r.len(), i % self.f_r.len())
    }

    fn from_linear(f_t: &[f64], f_r: &[f64], linear: Vec<f64>) -> Self {
        let peak = linear.iter().cloned().fold(0.0, f64::max).max(1e-300);
        let values_db = linear.iter().map(|&p| (10.0 * (p / peak).max(1e-30).log10()).max(-300.0)).collect();
        Self { f_t: f_t.to_vec(), f_r: f_r.to_vec(), values_db }
    }
}

fn steering_matrix(len: usize, grid: &[f64]) -> Mat<c64> {
    let cols: Vec<Col<c64>> = grid.iter().map(|&f| steering_from_frequency(len, f)).collect();
    Mat::from_fn(len, grid.len(), |i, j| cols[j][i])
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|f| !(-0.5..0.5).contains(f)) {
        return Err(EvalError::Config("frequency grids must be non-empty and lie in [-0.5, 0.5)".into()));
    }
    Ok(())
}

/// `|W^H (b(f_R) ⊗ a(f_T))|^2` over the grid.
pub fn pattern_2d(w: ColRef<'_, c64>, num_tx: usize, num_rx: usize, f_t: &[f64], f_r: &[f64]) -> Result<PatternGrid> {
    check_grid(f_t)?;
    check_grid(f_r)?;
    if w.nrows() != num_tx * num_rx {
        return Err(EvalError::Numeric("weight length does not match the array".into()));
    }
    // W^H (b ⊗ a) = b^T conj(Wm) a with Wm[n, m] = W[n M + m].
    let wm = Mat::from_fn(num_rx, num_tx, |n, m| w[n * num_tx + m].conj());
    let a = steering_matrix(num_tx, f_t);
    let b = steering_matrix(num_rx, f_r);
    let resp = b.transpose() * &wm * &a;
    let mut linear = Vec::with_capacity(f_t.len() * f_r.len());
    for i_t in 0..f_t.len() {
        for i_r in 0..f_r.len() {
            linear.push(resp[(i_r, i_t)].norm_sqr());
        }
    }
    Ok(PatternGrid::from_linear(f_t, f_r, linear))
}

/// Capon spectrum `1 / (v^H R^{-1} v)` over the grid.
pub fn capon_2d(r: &CovarianceMatrix, num_tx: usize, num_rx: usize, f_t: &[f64], f_r: &[f64]) -> Result<PatternGrid> {
    check_grid(f_t)?;
    check_grid(f_r)?;
    if r.dim() != num_tx * num_rx {
        return Err(EvalError::Numeric("covariance size does not match the array".into()));
    }
    let a = steering_matrix(num_tx, f_t);
    let b = steering_matrix(num_rx, f_r);
    let mut linear = vec![0.0; f_t.len() * f_r.len()];
    // Process one receive frequency at a time to bound memory.
    for (i_r, _) in f_r.iter().enumerate() {
        let v = Mat::from_fn(num_tx * num_rx, f_t.len(), |i, j| b[(i / num_tx, i_r)] * a[(i % num_tx, j)]);
        let x = hpd_solve(r, &v)?;
        for i_t in 0..f_t.len() {
            let q: c64 = v.col(i_t).adjoint() * x.col(i_t);
            linear[i_t * f_r.len() + i_r] = if q.re > 0.0 { 1.0 / q.re } else { 0.0 };
        }
    }
    Ok(PatternGrid::from_linear(f_t, f_r, linear))
}
