//! Noise-subspace jamming mitigation.
//!
//! The weight is the presumed target steering vector projected onto the noise
//! subspace of a target-free interference-plus-noise covariance:
//! `W_n = U_n U_n^H v_s0`. Anything in the jamming subspace is annihilated.

use faer::{c64, Col, ColRef, Mat};
use serde::{Deserialize, Serialize};
use stca_eigen::{EigenError, EigenSplit};
use stca_scene::DataCube;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum NsjmError {
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

pub type Result<T> = std::result::Result<T, NsjmError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Nsjm,
    Mrbc,
    Rjns,
    Mvdr,
    Baseline,
}

impl Provenance {
    pub fn name(&self) -> &'static str {
        match self {
            Provenance::Nsjm => "nsjm",
            Provenance::Mrbc => "mrbc",
            Provenance::Rjns => "rjns",
            Provenance::Mvdr => "mvdr",
            Provenance::Baseline => "baseline",
        }
    }
}

/// Relative projection norm below which the target is treated as lying inside the jamming subspace.
pub const DEGENERATE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct BeamWeight {
    /// Scaled so that `W^H v_s0 = 1`.
    pub values: Col<c64>,
    pub provenance: Provenance,
}

impl BeamWeight {
    /// Scales `values` to unit response at `reference`.
    pub fn normalized(values: Col<c64>, reference: ColRef<'_, c64>, provenance: Provenance) -> Result<Self> {
        if values.nrows() != reference.nrows() {
            return Err(NsjmError::Dimension(format!(
                "weight has {} entries, steering vector {}",
                values.nrows(),
                reference.nrows()
            )));
        }
        let gain: c64 = values.adjoint() * reference;
        let scale = values.norm_l2() * reference.norm_l2();
        if !gain.norm().is_finite() || gain.norm() <= DEGENERATE_TOLERANCE * scale {
            return Err(NsjmError::Degenerate("weight has no response at the presumed target".into()));
        }
        let k = gain.conj().inv();
        let values = Col::from_fn(values.nrows(), |i| values[i] * k);
        Ok(Self { values, provenance })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// `W^H x`.
    pub fn response(&self, x: ColRef<'_, c64>) -> c64 {
        self.values.adjoint() * x
    }
}

pub fn nsjm_weight(e: &EigenSplit, v_s0: ColRef<'_, c64>) -> Result<BeamWeight> {
    if v_s0.nrows() != e.dim() {
        return Err(NsjmError::Dimension("steering vector length does not match covariance".into()));
    }
    let projected = e.project_noise(v_s0)?;
    if projected.norm_l2() <= DEGENERATE_TOLERANCE * v_s0.norm_l2() {
        return Err(NsjmError::Degenerate(
            "presumed target lies inside the jamming subspace".into(),
        ));
    }
    BeamWeight::normalized(projected, v_s0, Provenance::Nsjm)
}

#[derive(Debug, Clone)]
pub struct RangeProfile {
    /// Filter output, `bins x pulses`.
    pub outputs: Mat<c64>,
    /// Root-mean-square output magnitude over pulses, per bin.
    pub magnitude: Vec<f64>,
}

impl RangeProfile {
    pub fn magnitude_db(&self) -> Vec<f64> {
        self.magnitude.iter().map(|m| 20.0 * m.max(1e-300).log10()).collect()
    }
}

pub fn apply_weight(w: &BeamWeight, cube: &DataCube) -> Result<RangeProfile> {
    if w.len() != cube.virtual_len() {
        return Err(NsjmError::Dimension(format!(
            "weight has {} entries, cube channels {}",
            w.len(),
            cube.virtual_len()
        )));
    }
    let y = w.values.adjoint() * cube.snapshots();
    let (bins, pulses) = (cube.num_bins(), cube.num_pulses());
    let outputs = Mat::from_fn(bins, pulses, |b, p| y[b * pulses + p]);
    let magnitude = (0..bins)
        .map(|b| ((0..pulses).map(|p| outputs[(b, p)].norm_sqr()).sum::<f64>() / pulses as f64).sqrt())
        .collect();
    Ok(RangeProfile { outputs, magnitude })
}
