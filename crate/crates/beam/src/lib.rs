//! Multi-region beampattern control (MRBC) for the transmit weight, and the
//! robust joint noise-subspace (RJNS) weight built from it.
//!
//! MRBC starts from `w_0 = a(f0)` and repeatedly adds a correction
//! `A_k xi_k` that pins the normalised response
//! `L(f) = w^H a(f) / w^H a(f0)` at the worst grid point of each region to a
//! prescribed magnitude while keeping its current phase. Mainlobe regions are
//! held near unit response (flat top); null regions are pushed below a depth.
//!
//! Each region remembers its last few controlled points and all of them are
//! re-solved jointly every iteration. With a memory of one this is the plain
//! one-point-per-region iteration, which tends to oscillate between points.

use std::collections::VecDeque;

use faer::linalg::solvers::Solve;
use faer::{c64, Col, ColRef, Mat};
use serde::{Deserialize, Serialize};
use stca_array::{kron, steering_from_frequency, wrap_frequency};
use stca_eigen::EigenSplit;
use stca_nsjm::{BeamWeight, NsjmError, Provenance, DEGENERATE_TOLERANCE};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum BeamError {
    #[error("invalid control region: {0}")]
    Region(String),
    #[error("degenerate response: {0}")]
    Degenerate(String),
    #[error("control point is singular: {0}")]
    ControlPoint(String),
    #[error(transparent)]
    Nsjm(#[from] NsjmError),
}

pub type Result<T> = std::result::Result<T, BeamError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Mainlobe,
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlRegion {
    pub kind: RegionKind,
    pub center: f64,
    pub half_width: f64,
    /// Magnitude the response is driven to at controlled points.
    pub target: f64,
    /// Allowed deviation before the region needs control.
    pub threshold: f64,
}

impl ControlRegion {
    /// Flat-top mainlobe kept within `ripple_db` of unit response.
    pub fn mainlobe(center: f64, half_width: f64, ripple_db: f64) -> Self {
        Self {
            kind: RegionKind::Mainlobe,
            center: wrap_frequency(center),
            half_width,
            target: 1.0,
            threshold: 1.0 - 10f64.powf(-ripple_db / 20.0),
        }
    }

    /// Null band whose response must stay below `depth_db`. Controlled points
    /// are driven 10 dB deeper so a few iterations clear the whole band.
    pub fn null(center: f64, half_width: f64, depth_db: f64) -> Self {
        let target = 10f64.powf((depth_db - 10.0) / 20.0);
        Self {
            kind: RegionKind::Null,
            center: wrap_frequency(center),
            half_width,
            target,
            threshold: 10f64.powf(depth_db / 20.0) - target,
        }
    }

    pub fn contains(&self, f: f64) -> bool {
        wrap_frequency(f - self.center).abs() <= self.half_width + 1e-12
    }

    /// Grid points inside the region, ordered from its left edge. A region
    /// narrower than the grid is represented by its centre.
    pub fn grid_points(&self, step: f64) -> Vec<f64> {
        if self.half_width.is_nan() || self.half_width < 0.0 {
            return vec![];
        }
        let n = (1.0 / step).round() as i64;
        let lo = ((self.center - self.half_width + 0.5) / step).floor() as i64 - 1;
        let hi = ((self.center + self.half_width + 0.5) / step).ceil() as i64 + 1;
        let pts: Vec<f64> = (lo..=hi)
            .map(|i| -0.5 + i.rem_euclid(n) as f64 * step)
            .filter(|&f| self.contains(f))
            .collect();
        if pts.is_empty() {
            vec![self.center]
        } else {
            pts
        }
    }

    /// Deviation of a response from the region's requirement: absolute for
    /// the mainlobe, signed excess magnitude for nulls.
    pub fn deviation(&self, response: c64) -> f64 {
        match self.kind {
            RegionKind::Mainlobe => (response.norm() - self.target).abs(),
            RegionKind::Null => response.norm() - self.target,
        }
    }
}

pub fn validate_regions(regions: &[ControlRegion]) -> Result<()> {
    if regions.is_empty() {
        return Err(BeamError::Region("at least one region is required".into()));
    }
    for r in regions {
        if !(r.half_width.is_finite() && r.half_width >= 0.0 && r.half_width < 0.5) {
            return Err(BeamError::Region(format!("half width {} out of range", r.half_width)));
        }
        if !(r.target.is_finite() && r.target >= 0.0 && r.threshold.is_finite() && r.threshold > 0.0) {
            return Err(BeamError::Region("target and threshold must be finite, threshold positive".into()));
        }
    }
    for (i, a) in regions.iter().enumerate() {
        for b in &regions[i + 1..] {
            if wrap_frequency(a.center - b.center).abs() <= a.half_width + b.half_width {
                return Err(BeamError::Region(format!(
                    "regions around {} and {} overlap",
                    a.center, b.center
                )));
            }
        }
    }
    let ml = regions.iter().filter(|r| r.kind == RegionKind::Mainlobe).map(|r| r.target).fold(f64::NAN, f64::min);
    if regions.iter().any(|r| r.kind == RegionKind::Null && r.target >= ml) {
        return Err(BeamError::Region("null targets must be below the mainlobe target".into()));
    }
    Ok(())
}

/// `L(f) = w^H a(f) / w^H a(f0)`.
pub fn normalized_response(w: ColRef<'_, c64>, f: f64, f0: f64) -> Result<c64> {
    let m = w.nrows();
    let den: c64 = w.adjoint() * &steering_from_frequency(m, f0);
    if den.norm() <= 1e-14 * w.norm_l2() * (m as f64).sqrt() {
        return Err(BeamError::Degenerate("weight has no response at the mainlobe centre".into()));
    }
    let num: c64 = w.adjoint() * &steering_from_frequency(m, f);
    Ok(num / den)
}

/// Response of `w` in dB relative to its mainlobe, over `grid`.
pub fn pattern_db(w: ColRef<'_, c64>, f0: f64, grid: &[f64]) -> Result<Vec<f64>> {
    grid.iter()
        .map(|&f| Ok(20.0 * normalized_response(w, f, f0)?.norm().max(1e-300).log10()))
        .collect()
}

/// Single-point correction `xi` such that `w = w_prev + xi a(f_q)` has
/// `L(f_q) = rho e^{j phi}`.
pub fn single_point_xi(w_prev: ColRef<'_, c64>, f_q: f64, f0: f64, rho: f64, phi: f64) -> Result<c64> {
    let m = w_prev.nrows();
    let a0 = steering_from_frequency(m, f0);
    let aq = steering_from_frequency(m, f_q);
    let psi = c64::from_polar(rho, -phi);
    let a0w: c64 = a0.adjoint() * w_prev;
    let aqw: c64 = aq.adjoint() * w_prev;
    let a0aq: c64 = a0.adjoint() * &aq;
    let den = c64::new(m as f64, 0.0) - psi * a0aq;
    if den.norm() <= 1e-12 * m as f64 {
        return Err(BeamError::ControlPoint(format!("denominator vanishes at f = {f_q}")));
    }
    Ok((psi * a0w - aqw) / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlPoint {
    pub region: usize,
    pub frequency: f64,
    pub deviation: f64,
}

/// Worst grid point of each region for the current weight.
pub fn select_control_points(
    w: ColRef<'_, c64>,
    f0: f64,
    regions: &[ControlRegion],
    grid_step: f64,
) -> Result<Vec<ControlPoint>> {
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(BeamError::Region("grid step must be positive".into()));
    }
    regions
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let pts = r.grid_points(grid_step);
            if pts.is_empty() {
                return Err(BeamError::Region(format!("region around {} contains no grid points", r.center)));
            }
            let mut best = ControlPoint { region: i, frequency: pts[0], deviation: f64::NEG_INFINITY };
            for f in pts {
                let d = r.deviation(normalized_response(w, f, f0)?);
                if d > best.deviation {
                    best = ControlPoint { region: i, frequency: f, deviation: d };
                }
            }
            Ok(best)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MrbcConfig {
    pub grid_step: f64,
    pub max_iter: usize,
    /// Controlled points remembered per mainlobe region.
    pub mainlobe_memory: usize,
    /// Controlled points remembered per null region.
    pub null_memory: usize,
}

impl Default for MrbcConfig {
    fn default() -> Self {
        Self { grid_step: 1e-3, max_iter: 200, mainlobe_memory: 2, null_memory: 3 }
    }
}

#[derive(Debug, Clone)]
pub struct ControlState {
    pub weight: Col<c64>,
    /// Number of corrections applied.
    pub iteration: usize,
    /// Worst point of each region before the last correction.
    pub selected: Vec<ControlPoint>,
    /// Every point constrained in the last correction.
    pub controlled: Vec<f64>,
    /// Target responses `rho e^{-j phi}` of the controlled points.
    pub psi: Vec<c64>,
    /// Steering vectors of the controlled points, one per column.
    pub steering: Mat<c64>,
    pub xi: Vec<c64>,
    /// Current worst deviation of each region.
    pub deviations: Vec<f64>,
    pub converged: bool,
    /// Largest `|L(f_p) - rho_p e^{j phi_p}|` right after the last correction.
    pub constraint_residual: f64,
    /// Worst deviation-to-threshold ratio per iteration.
    pub history: Vec<f64>,
}

impl ControlState {
    fn score(&self, regions: &[ControlRegion]) -> f64 {
        self.deviations.iter().zip(regions).map(|(d, r)| d / r.threshold).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Solves the square system, falling back to the minimum-norm least-squares
/// solution when it is singular.
fn solve_system(s: &Mat<c64>, rhs: &Col<c64>) -> Col<c64> {
    let lu = s.full_piv_lu();
    let x = lu.solve(rhs.as_mat()).col(0).to_owned();
    let residual = (s * &x - rhs).norm_l2();
    if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) && residual <= 1e-9 * rhs.norm_l2().max(1e-300) {
        return x;
    }
    log::warn!("control system is singular (residual {residual:e}); using minimum-norm solution");
    let pinv = s.svd().map(|svd| svd.pseudoinverse()).unwrap_or_else(|_| Mat::zeros(s.ncols(), s.nrows()));
    &pinv * rhs
}

pub struct Mrbc {
    f0: f64,
    regions: Vec<ControlRegion>,
    config: MrbcConfig,
    active: Vec<VecDeque<f64>>,
    state: ControlState,
}

impl Mrbc {
    pub fn new(f0: f64, num_tx: usize, regions: &[ControlRegion], config: MrbcConfig) -> Result<Self> {
        validate_regions(regions)?;
        if config.max_iter == 0 {
            return Err(BeamError::Region("max_iter must be at least 1".into()));
        }
        if config.mainlobe_memory == 0 || config.null_memory == 0 {
            return Err(BeamError::Region("region memory must be at least 1".into()));
        }
        let weight = steering_from_frequency(num_tx, f0);
        let selected = select_control_points(weight.as_ref(), f0, regions, config.grid_step)?;
        let deviations = selected.iter().map(|p| p.deviation).collect();
        let state = ControlState {
            weight,
            iteration: 0,
            selected,
            controlled: vec![],
            psi: vec![],
            steering: Mat::zeros(num_tx, 0),
            xi: vec![],
            deviations,
            converged: false,
            constraint_residual: 0.0,
            history: vec![],
        };
        let mut s = Self { f0, regions: regions.to_vec(), config, active: vec![VecDeque::new(); regions.len()], state };
        s.state.converged = s.satisfied();
        Ok(s)
    }

    pub fn state(&self) -> &ControlState {
        &self.state
    }

    fn satisfied(&self) -> bool {
        self.state.deviations.iter().zip(&self.regions).all(|(d, r)| *d <= r.threshold)
    }

    /// One correction. Does nothing once every region meets its threshold.
    pub fn step(&mut self) -> Result<()> {
        if self.satisfied() {
            self.state.converged = true;
            return Ok(());
        }
        let m = self.state.weight.nrows();
        for p in &self.state.selected {
            let r = &self.regions[p.region];
            if p.deviation > r.threshold {
                let cap = match r.kind {
                    RegionKind::Mainlobe => self.config.mainlobe_memory,
                    RegionKind::Null => self.config.null_memory,
                };
                let mem = &mut self.active[p.region];
                mem.retain(|f| (f - p.frequency).abs() > 1e-12);
                mem.push_back(p.frequency);
                while mem.len() > cap {
                    mem.pop_front();
                }
            }
        }
        let points: Vec<(f64, f64)> = self
            .active
            .iter()
            .enumerate()
            .flat_map(|(i, mem)| mem.iter().map(move |&f| (f, i)))
            .map(|(f, i)| (f, self.regions[i].target))
            .collect();
        let w = &self.state.weight;
        let a0 = steering_from_frequency(m, self.f0);
        let a = Mat::from_fn(m, points.len(), |i, j| steering_from_frequency(m, points[j].0)[i]);
        let psi: Vec<c64> = points
            .iter()
            .map(|&(f, rho)| Ok(c64::from_polar(rho, -normalized_response(w.as_ref(), f, self.f0)?.arg())))
            .collect::<Result<_>>()?;
        let a0w: c64 = a0.adjoint() * w;
        let a0a = a0.adjoint() * &a;
        let aha = a.adjoint() * &a;
        let s = Mat::from_fn(points.len(), points.len(), |i, j| aha[(i, j)] - psi[i] * a0a[j]);
        let aw = a.adjoint() * w;
        let rhs = Col::from_fn(points.len(), |i| a0w * psi[i] - aw[i]);
        let xi = solve_system(&s, &rhs);
        let next = w + &a * &xi;
        if next.norm_l2() == 0.0 || !next.norm_l2().is_finite() {
            return Err(BeamError::Degenerate("correction produced a zero or non-finite weight".into()));
        }

        let mut residual = 0.0f64;
        for (j, &(f, _)) in points.iter().enumerate() {
            let l = normalized_response(next.as_ref(), f, self.f0)?;
            residual = residual.max((l - psi[j].conj()).norm());
        }
        let selected = select_control_points(next.as_ref(), self.f0, &self.regions, self.config.grid_step)?;
        self.state = ControlState {
            deviations: selected.iter().map(|p| p.deviation).collect(),
            weight: next,
            iteration: self.state.iteration + 1,
            selected,
            controlled: points.iter().map(|p| p.0).collect(),
            psi,
            steering: a,
            xi: xi.iter().copied().collect(),
            converged: false,
            constraint_residual: residual,
            history: std::mem::take(&mut self.state.history),
        };
        let score = self.state.score(&self.regions);
        self.state.history.push(score);
        self.state.converged = self.satisfied();
        Ok(())
    }

    /// Iterates until every region is satisfied or `max_iter` corrections
    /// were made. Without convergence the best state seen is returned with
    /// `converged = false`.
    pub fn run(mut self) -> Result<ControlState> {
        let mut best = self.state.clone();
        while !self.state.converged && self.state.iteration < self.config.max_iter {
            self.step()?;
            if self.state.score(&self.regions) < best.score(&self.regions) || self.state.converged {
                best = self.state.clone();
            }
        }
        if self.state.converged {
            return Ok(self.state);
        }
        best.history = self.state.history;
        log::warn!("beampattern control did not converge in {} iterations", self.config.max_iter);
        Ok(best)
    }
}

pub fn mrbc_iterate(f0: f64, num_tx: usize, regions: &[ControlRegion], config: MrbcConfig) -> Result<ControlState> {
    Mrbc::new(f0, num_tx, regions, config)?.run()
}

/// Robust weight `U_n U_n^H (w_R ⊗ w_T)`, scaled to unit response at `v_s0`.
pub fn rjns_weight(
    w_t: ColRef<'_, c64>,
    w_r: ColRef<'_, c64>,
    e: &EigenSplit,
    v_s0: ColRef<'_, c64>,
) -> Result<BeamWeight> {
    let joint = kron(&w_r.to_owned(), &w_t.to_owned());
    if joint.nrows() != e.dim() || v_s0.nrows() != e.dim() {
        return Err(NsjmError::Dimension("joint weight does not match the covariance size".into()).into());
    }
    let projected = e.project_noise(joint.as_ref()).map_err(NsjmError::from)?;
    if projected.norm_l2() <= DEGENERATE_TOLERANCE * joint.norm_l2() {
        return Err(NsjmError::Degenerate("controlled weight lies inside the jamming subspace".into()).into());
    }
    Ok(BeamWeight::normalized(projected, v_s0, Provenance::Rjns)?)
}
