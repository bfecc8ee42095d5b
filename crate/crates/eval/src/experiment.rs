//! Monte Carlo pipeline: simulate, locate the target, form weights, score.

use std::fmt;
use std::str::FromStr;

use faer::{c64, Col};
use serde::{Deserialize, Serialize};
use stca_array::{receive_steering, RadarParams};
use stca_beam::{mrbc_iterate, rjns_weight, BeamError, ControlRegion, ControlState};
use stca_eigen::{analytic_covariance, eig_descending, sample_covariance, CovarianceMatrix, EigenSplit};
use stca_nhss::{locate_target, DetectionThresholds, NhssResult};
use stca_nsjm::{nsjm_weight, BeamWeight, NsjmError, Provenance};
use stca_scene::{synthesize_cube, Component, DataCube, Scenario};

use crate::config::ExperimentConfig;
use crate::metrics::{mvdr_weight, sinr_db, SINR_FLOOR_DB};
use crate::{EvalError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// MVDR with the exact interference-plus-noise covariance.
    Mvdr,
    /// Null steering from the CS-NHSS training set.
    Nsjm,
    /// Null steering trained on every sampled segment, target included.
    NsjmContaminated,
    /// Range-controlled transmit beam projected onto the noise subspace.
    Rjns,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mvdr, Method::Nsjm, Method::NsjmContaminated, Method::Rjns];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mvdr => "mvdr",
            Method::Nsjm => "nsjm",
            Method::NsjmContaminated => "nsjm_contaminated",
            Method::Rjns => "rjns",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Method {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| EvalError::Config(format!("unknown method `{s}` (expected mvdr, nsjm, nsjm_contaminated or rjns)")))
    }
}

fn covariance_of(components: &[Component]) -> Result<CovarianceMatrix> {
    let list: Vec<(f64, _)> = components.iter().map(|c| (c.power, c.steering.as_ref())).collect();
    Ok(analytic_covariance(&list, 1.0)?)
}

/// Exact interference-plus-noise covariance of the simulated false targets.
pub fn true_incm(scenario: &Scenario) -> Result<CovarianceMatrix> {
    let jammers: Vec<Component> = scenario
        .true_components()?
        .into_iter()
        .filter(|c| c.kind != stca_scene::ComponentKind::Target)
        .collect();
    covariance_of(&jammers)
}

/// Interference-plus-noise covariance at the nominal (error-free) jammer parameters.
pub fn nominal_incm(scenario: &Scenario) -> Result<CovarianceMatrix> {
    covariance_of(&scenario.nominal_jammers()?)
}

fn target_power(scenario: &Scenario) -> Result<f64> {
    let t = scenario
        .target
        .as_ref()
        .ok_or_else(|| EvalError::Config("scenario has no target".into()))?;
    Ok(10f64.powf(t.snr_db / 10.0))
}

/// Everything that stays fixed across trials.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub scenario: Scenario,
    pub thresholds: DetectionThresholds,
    /// Presumed target steering vector.
    pub presumed: Col<c64>,
    pub true_incm: CovarianceMatrix,
    pub mvdr: BeamWeight,
    /// Controlled transmit beam; `None` when the regions cannot be built.
    pub mrbc: Option<ControlState>,
    pub regions: Vec<ControlRegion>,
    /// Conventional receive beam toward the target.
    pub receive_weight: Col<c64>,
}

impl Pipeline {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let scenario = cfg.scenario()?;
        Self::from_parts(scenario, cfg)
    }

    /// Builds the fixed parts for `scenario`, taking thresholds, regions and
    /// solver settings from `cfg`.
    pub fn from_parts(scenario: Scenario, cfg: &ExperimentConfig) -> Result<Self> {
        scenario.validate()?;
        let presumed = scenario.presumed_target_steering()?;
        let true_incm = true_incm(&scenario)?;
        let mvdr = mvdr_weight(&true_incm, presumed.as_ref())?;
        let theta = scenario.target.as_ref().map(|t| t.angle_deg.to_radians()).unwrap_or(0.0);
        let receive_weight = receive_steering(&scenario.params, theta)?.values;
        let (mrbc, regions) = match cfg.regions(&scenario) {
            Ok(regions) => {
                let f0 = scenario.presumed_target_frequency()?;
                let state = mrbc_iterate(f0, scenario.params.num_tx, &regions, cfg.solver)?;
                if !state.converged {
                    log::warn!(
                        "range-controlled beam did not converge; using the best state (iteration {}, largest deviation {:.3e})",
                        state.iteration,
                        state.deviations.iter().cloned().fold(0.0, f64::max)
                    );
                }
                (Some(state), regions)
            }
            Err(e) => {
                log::warn!("range-controlled beam unavailable: {e}");
                (None, Vec::new())
            }
        };
        Ok(Self { scenario, thresholds: cfg.thresholds, presumed, true_incm, mvdr, mrbc, regions, receive_weight })
    }

    pub fn params(&self) -> &RadarParams {
        &self.scenario.params
    }

    /// Same pipeline with a different target SNR.
    pub fn with_target_snr(&self, snr_db: f64) -> Self {
        let mut p = self.clone();
        p.scenario = p.scenario.with_target_snr(snr_db);
        p
    }

    pub fn simulate(&self, seed: u64, trial: u64) -> Result<DataCube> {
        let opts = stca_scene::SynthesisOptions { include_noise: true, trial };
        Ok(stca_scene::synthesize_cube_with(&self.scenario, seed, &opts)?)
    }

    /// Runs detection and forms every weight for one echo.
    pub fn process(&self, cube: &DataCube) -> Result<Processed> {
        let full = sample_covariance(cube.snapshots())?;
        let full_eigen = eig_descending(&full)?;
        let nhss = locate_target(cube, &full_eigen, self.presumed.as_ref(), &self.thresholds, self.params().pulse_bins())?;

        let training_eigen = if nhss.training.ncols() > 0 {
            eig_descending(&nhss.training_covariance()?)?.split(nhss.jamming_dimension())?
        } else {
            eig_descending(&full)?.split(0)?
        };
        let contaminated_bins: Vec<usize> = nhss.segments.iter().flat_map(|s| s.bins()).collect();
        let contaminated_eigen = if contaminated_bins.is_empty() {
            training_eigen.clone()
        } else {
            let r = sample_covariance(cube.gather_bins(&contaminated_bins).as_ref())?;
            eig_descending(&r)?.split(nhss.segments.len())?
        };

        let nsjm = degenerate_as_none(nsjm_weight(&training_eigen, self.presumed.as_ref()))?;
        let mut contaminated = degenerate_as_none(nsjm_weight(&contaminated_eigen, self.presumed.as_ref()))?;
        if let Some(w) = contaminated.as_mut() {
            w.provenance = Provenance::Nsjm;
        }
        let rjns = match &self.mrbc {
            Some(state) => degenerate_as_none(
                rjns_weight(state.weight.as_ref(), self.receive_weight.as_ref(), &training_eigen, self.presumed.as_ref()),
            )?,
            None => None,
        };
        Ok(Processed {
            nhss,
            full_covariance: full,
            training_eigen,
            weights: vec![
                (Method::Mvdr, Some(self.mvdr.clone())),
                (Method::Nsjm, nsjm),
                (Method::NsjmContaminated, contaminated),
                (Method::Rjns, rjns),
            ],
        })
    }

    /// Output SINR of `w` against the true covariance; `None` scores the floor.
    pub fn sinr(&self, w: Option<&BeamWeight>) -> Result<f64> {
        match w {
            Some(w) => sinr_db(w.values.as_ref(), self.presumed.as_ref(), target_power(&self.scenario)?, &self.true_incm),
            None => Ok(SINR_FLOOR_DB),
        }
    }
}

fn degenerate_as_none<E>(r: std::result::Result<BeamWeight, E>) -> Result<Option<BeamWeight>>
where
    E: Into<EvalError> + IsDegenerate,
{
    match r {
        Ok(w) => Ok(Some(w)),
        Err(e) if e.is_degenerate() => {
            log::warn!("weight is degenerate; scoring it at the SINR floor");
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

trait IsDegenerate {
    fn is_degenerate(&self) -> bool;
}

impl IsDegenerate for NsjmError {
    fn is_degenerate(&self) -> bool {
        matches!(self, NsjmError::Degenerate(_))
    }
}

impl IsDegenerate for BeamError {
    fn is_degenerate(&self) -> bool {
        matches!(self, BeamError::Nsjm(NsjmError::Degenerate(_)))
    }
}

#[derive(Debug, Clone)]
pub struct Processed {
    pub nhss: NhssResult,
    pub full_covariance: CovarianceMatrix,
    pub training_eigen: EigenSplit,
    pub weights: Vec<(Method, Option<BeamWeight>)>,
}

impl Processed {
    pub fn weight(&self, m: Method) -> Option<&BeamWeight> {
        self.weights.iter().find(|(k, _)| *k == m).and_then(|(_, w)| w.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub trial: u64,
    pub detected_bin: Option<usize>,
    /// One-based index of the target among the sampled segments.
    pub q_star: Option<usize>,
    pub gamma: f64,
    pub segments: usize,
}

impl DetectionRecord {
    pub fn from_result(trial: u64, r: &NhssResult) -> Self {
        Self {
            trial,
            detected_bin: r.target_range_bin,
            q_star: r.target_segment_index,
            gamma: r.correlation.gamma,
            segments: r.segments.len(),
        }
    }
}

pub fn detection_run(p: &Pipeline, seed: u64, trials: usize) -> Result<Vec<DetectionRecord>> {
    (0..trials as u64)
        .map(|t| {
            let cube = p.simulate(seed, t)?;
            let full = sample_covariance(cube.snapshots())?;
            let e = eig_descending(&full)?;
            let r = locate_target(&cube, &e, p.presumed.as_ref(), &p.thresholds, p.params().pulse_bins())?;
            Ok(DetectionRecord::from_result(t, &r))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinrPoint {
    pub snr_db: f64,
    pub method: Method,
    pub mean_sinr_db: f64,
    pub std_db: f64,
    pub trials: usize,
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Output SINR per method over SNR. Trial `t` uses the same noise stream at
/// every SNR.
pub fn sinr_sweep(p: &Pipeline, snrs: &[f64], methods: &[Method], seed: u64, trials: usize) -> Result<Vec<SinrPoint>> {
    if trials == 0 {
        return Err(EvalError::Config("at least one trial is required".into()));
    }
    let methods: Vec<Method> = methods
        .iter()
        .copied()
        .filter(|&m| {
            let ok = m != Method::Rjns || p.mrbc.is_some();
            if !ok {
                log::warn!("skipping rjns: no range-controlled beam for this scene");
            }
            ok
        })
        .collect();
    let mut out = Vec::new();
    for &snr in snrs {
        let ps = p.with_target_snr(snr);
        let mut per: Vec<Vec<f64>> = vec![Vec::with_capacity(trials); methods.len()];
        for t in 0..trials as u64 {
            let cube = ps.simulate(seed, t)?;
            let proc = ps.process(&cube)?;
            for (i, &m) in methods.iter().enumerate() {
                per[i].push(ps.sinr(proc.weight(m))?);
            }
        }
        for (i, &m) in methods.iter().enumerate() {
            let (mean, std) = mean_std(&per[i]);
            log::info!("snr {snr:6.1} dB  {m:<18} {mean:8.3} dB");
            out.push(SinrPoint { snr_db: snr, method: m, mean_sinr_db: mean, std_db: std, trials });
        }
    }
    Ok(out)
}

/// Output SINR of weights designed from the nominal scene and scored on the
/// perturbed one.
#[derive(Debug, Clone, PartialEq)]
pub struct MismatchRow {
    pub method: Method,
    pub nominal_db: f64,
    pub perturbed_db: f64,
}

impl MismatchRow {
    pub fn loss_db(&self) -> f64 {
        self.nominal_db - self.perturbed_db
    }
}

/// Designs MVDR, NSJM and RJNS from the nominal covariance (no errors) and
/// scores each on the error-free and the perturbed truth.
pub fn mismatch_study(cfg: &ExperimentConfig) -> Result<Vec<MismatchRow>> {
    let perturbed = cfg.scenario()?;
    let mut nominal_cfg = cfg.clone();
    nominal_cfg.errors = Default::default();
    let nominal = Pipeline::new(&nominal_cfg)?;
    let incm = nominal_incm(&perturbed)?;
    let q = perturbed.jammers.len();
    let e = eig_descending(&incm)?.split(q)?;
    let v = nominal.presumed.as_ref();
    let state = nominal
        .mrbc
        .as_ref()
        .ok_or_else(|| EvalError::Config("control regions are required for the mismatch study".into()))?;
    let weights = [
        (Method::Mvdr, mvdr_weight(&incm, v)?),
        (Method::Nsjm, nsjm_weight(&e, v)?),
        (Method::Rjns, rjns_weight(state.weight.as_ref(), nominal.receive_weight.as_ref(), &e, v)?),
    ];
    let truth = true_incm(&perturbed)?;
    let ps = target_power(&perturbed)?;
    weights
        .iter()
        .map(|(m, w)| {
            Ok(MismatchRow {
                method: *m,
                nominal_db: nominal.sinr(Some(w))?,
                perturbed_db: sinr_db(w.values.as_ref(), v, ps, &truth)?,
            })
        })
        .collect()
}

/// Quick synthesis helper for callers that only need the echo.
pub fn simulate(cfg: &ExperimentConfig, seed: u64, trial: u64) -> Result<DataCube> {
    let s = cfg.scenario()?;
    if trial == 0 {
        Ok(synthesize_cube(&s, seed)?)
    } else {
        let opts = stca_scene::SynthesisOptions { include_noise: true, trial };
        Ok(stca_scene::synthesize_cube_with(&s, seed, &opts)?)
    }
}

/// Correlation statistics used to place the detection thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSample {
    pub trial: u64,
    pub target_present: bool,
    /// Best correlation with the full-echo eigenvectors.
    pub gamma: f64,
    /// Jump of the cumulative correlation at the target segment, if sampled.
    pub target_jump: Option<f64>,
    /// Largest jump over the other segments.
    pub other_jump: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub samples: Vec<CalibrationSample>,
    pub chi: Option<f64>,
    pub zeta: Option<f64>,
}

/// Runs the search with thresholds that never stop early, with and without
/// the target, and places `chi` and `zeta` between the two populations.
pub fn calibrate(cfg: &ExperimentConfig, seed: u64, trials: usize) -> Result<Calibration> {
    let mut open = cfg.clone();
    open.thresholds.chi = f64::MIN_POSITIVE;
    open.thresholds.zeta = f64::MAX;
    let present = Pipeline::new(&open)?;
    let mut absent_cfg = open.clone();
    absent_cfg.scenario.target = false;
    let absent = absent_cfg.scenario()?;
    let target_bin = present.scenario.target.as_ref().map(|t| t.range_bin);

    let mut samples = Vec::new();
    for t in 0..trials as u64 {
        for with_target in [true, false] {
            let scene = if with_target { present.scenario.clone() } else { absent.clone() };
            let opts = stca_scene::SynthesisOptions { include_noise: true, trial: t };
            let cube = stca_scene::synthesize_cube_with(&scene, seed, &opts)?;
            let e = eig_descending(&sample_covariance(cube.snapshots())?)?;
            let r = locate_target(&cube, &e, present.presumed.as_ref(), &open.thresholds, present.params().pulse_bins())?;
            let mut previous = 0.0;
            let mut target_jump = None;
            let mut other_jump: f64 = 0.0;
            for (seg, g) in r.segments.iter().zip(&r.gamma_trace) {
                let jump = (g - previous).abs();
                previous = *g;
                if with_target && target_bin.is_some_and(|b| seg.contains(b)) {
                    target_jump = Some(jump);
                } else {
                    other_jump = other_jump.max(jump);
                }
            }
            samples.push(CalibrationSample { trial: t, target_present: with_target, gamma: r.correlation.gamma, target_jump, other_jump });
        }
    }
    let gamma_absent: Vec<f64> = samples.iter().filter(|s| !s.target_present).map(|s| s.gamma).collect();
    let gamma_present: Vec<f64> = samples.iter().filter(|s| s.target_present).map(|s| s.gamma).collect();
    // Without the target the search runs at an arbitrary rank; only present runs inform zeta.
    let jumps_other: Vec<f64> = samples.iter().filter(|s| s.target_present).map(|s| s.other_jump).collect();
    let jumps_target: Vec<f64> = samples.iter().filter_map(|s| s.target_jump).collect();
    Ok(Calibration {
        chi: stca_nhss::calibrate_threshold(&gamma_absent, &gamma_present),
        zeta: stca_nhss::calibrate_threshold(&jumps_other, &jumps_target),
        samples,
    })
}
