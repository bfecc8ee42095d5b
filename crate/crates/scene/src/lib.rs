//! Scenario description and synthetic echo generation.
//!
//! A [`DataCube`] holds the matched-filtered virtual snapshots of one coherent
//! processing interval: one `MN`-length column per (range bin, pulse), stored
//! bin-major so that all pulses of a bin are contiguous.

mod waveform;

use faer::{c64, Col, ColRef, Mat, MatRef};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use stca_array::{spatial_frequencies, virtual_steering, ArrayError, RadarParams, SPEED_OF_LIGHT};

pub use waveform::{validate_matched_filter, WaveformCheck, WaveformModel};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error(transparent)]
    Array(#[from] ArrayError),
}

pub type Result<T> = std::result::Result<T, SceneError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub angle_deg: f64,
    pub range_m: f64,
    pub snr_db: f64,
    /// First range bin of the target return.
    pub range_bin: usize,
}

/// A deceptive false target produced by a mainlobe jammer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JammerSpec {
    pub angle_deg: f64,
    /// Apparent slant range of the false target.
    pub range_m: f64,
    pub jnr_db: f64,
    pub range_bin: usize,
}

impl JammerSpec {
    /// False target generated by a repeater at `jammer_range_m` that forwards
    /// the intercepted pulse after `forward_delay_s`.
    pub fn from_forward_delay(
        angle_deg: f64,
        jammer_range_m: f64,
        forward_delay_s: f64,
        jnr_db: f64,
        range_bin: usize,
    ) -> Self {
        Self {
            angle_deg,
            range_m: jammer_range_m + SPEED_OF_LIGHT * forward_delay_s / 2.0,
            jnr_db,
            range_bin,
        }
    }
}

/// Errors applied to the simulated truth of every jammer. Processing keeps
/// using the nominal values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorInjection {
    pub doa_error_deg: f64,
    pub range_bin_error: i64,
}

impl ErrorInjection {
    pub fn is_none(&self) -> bool {
        self.doa_error_deg == 0.0 && self.range_bin_error == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentKind {
    Target,
    Jammer(usize),
}

/// A simulated echo as it actually appears in the data.
#[derive(Debug, Clone)]
pub struct Component {
    pub kind: ComponentKind,
    pub angle_rad: f64,
    pub range_m: f64,
    /// Linear power relative to unit noise.
    pub power: f64,
    pub start_bin: usize,
    pub num_bins: usize,
    pub steering: Col<c64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: RadarParams,
    pub target: Option<TargetSpec>,
    pub jammers: Vec<JammerSpec>,
    pub errors: ErrorInjection,
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl Scenario {
    /// Target at 43 km and three false targets at 64, 66 and 84 km, all at broadside.
    pub fn reference() -> Self {
        Self {
            params: RadarParams::default(),
            target: Some(TargetSpec { angle_deg: 0.0, range_m: 43e3, snr_db: 20.0, range_bin: 1221 }),
            jammers: vec![
                JammerSpec { angle_deg: 0.0, range_m: 64e3, jnr_db: 30.0, range_bin: 321 },
                JammerSpec { angle_deg: 0.0, range_m: 66e3, jnr_db: 30.0, range_bin: 431 },
                JammerSpec { angle_deg: 0.0, range_m: 84e3, jnr_db: 30.0, range_bin: 1601 },
            ],
            errors: ErrorInjection::default(),
        }
    }

    /// Two false targets; used for detection walk-throughs.
    pub fn two_jammer() -> Self {
        Self {
            params: RadarParams::default(),
            target: Some(TargetSpec { angle_deg: 0.0, range_m: 43e3, snr_db: 20.0, range_bin: 651 }),
            jammers: vec![
                JammerSpec { angle_deg: 0.0, range_m: 64e3, jnr_db: 30.0, range_bin: 501 },
                JammerSpec { angle_deg: 0.0, range_m: 84e3, jnr_db: 30.0, range_bin: 1201 },
            ],
            errors: ErrorInjection::default(),
        }
    }

    /// Same layout as [`Scenario::reference`], with slant ranges adjusted by a
    /// few tens of metres so that the transmit frequencies sit at 0.135 (target)
    /// and -0.15, -0.39, 0.42 (false targets).
    pub fn robust() -> Self {
        let mut s = Self::reference();
        let p = &s.params;
        let place = |f: f64, near: f64| p.range_for_transmit_frequency(f, 0.0, near).expect("non-zero delay");
        let target_range = place(0.135, 43e3);
        let ranges = [place(-0.15, 64e3), place(-0.39, 66e3), place(0.42, 84e3)];
        if let Some(t) = s.target.as_mut() {
            t.range_m = target_range;
        }
        for (j, r) in s.jammers.iter_mut().zip(ranges) {
            j.range_m = r;
        }
        s
    }

    pub fn with_params(mut self, params: RadarParams) -> Self {
        self.params = params;
        self
    }

    pub fn with_errors(mut self, errors: ErrorInjection) -> Self {
        self.errors = errors;
        self
    }

    pub fn with_target_snr(mut self, snr_db: f64) -> Self {
        if let Some(t) = self.target.as_mut() {
            t.snr_db = snr_db;
        }
        self
    }

    /// Warning text when the jammer count reaches the transmit-array capacity.
    pub fn capacity_warning(&self) -> Option<String> {
        (self.jammers.len() + 1 > self.params.num_tx).then(|| {
            format!(
                "{} false targets with {} transmit elements: at most {} can be suppressed",
                self.jammers.len(),
                self.params.num_tx,
                self.params.num_tx.saturating_sub(1)
            )
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let width = self.params.pulse_bins();
        let bins = self.params.num_range_bins;
        let check = |name: String, start: i64, range: f64, angle: f64, db: f64| -> Result<()> {
            if start < 0 || start as usize + width > bins {
                return Err(SceneError::Config(format!(
                    "{name} occupies bins {start}..{} outside 0..{bins}",
                    start + width as i64
                )));
            }
            if !(range.is_finite() && range >= 0.0) {
                return Err(SceneError::Config(format!("{name} range must be non-negative")));
            }
            if !(angle.is_finite() && angle.abs() <= 90.0) {
                return Err(SceneError::Config(format!("{name} angle must lie in [-90, 90] degrees")));
            }
            if !db.is_finite() {
                return Err(SceneError::Config(format!("{name} power must be finite")));
            }
            Ok(())
        };
        if let Some(t) = &self.target {
            check("target".into(), t.range_bin as i64, t.range_m, t.angle_deg, t.snr_db)?;
        }
        for (q, j) in self.jammers.iter().enumerate() {
            check(
                format!("false target {}", q + 1),
                j.range_bin as i64 + self.errors.range_bin_error,
                j.range_m + self.errors.range_bin_error as f64 * self.params.range_bin_size(),
                j.angle_deg + self.errors.doa_error_deg,
                j.jnr_db,
            )?;
        }
        Ok(())
    }

    /// Steering vector the processor presumes for the target.
    pub fn presumed_target_steering(&self) -> Result<Col<c64>> {
        let t = self
            .target
            .as_ref()
            .ok_or_else(|| SceneError::Config("scenario has no target".into()))?;
        Ok(virtual_steering(&self.params, t.angle_deg.to_radians(), t.range_m)?.values)
    }

    /// Presumed transmit spatial frequency of the target.
    pub fn presumed_target_frequency(&self) -> Result<f64> {
        let t = self
            .target
            .as_ref()
            .ok_or_else(|| SceneError::Config("scenario has no target".into()))?;
        Ok(spatial_frequencies(&self.params, t.angle_deg.to_radians(), t.range_m)?.transmit)
    }

    /// Nominal (presumed) transmit spatial frequencies of the false targets.
    pub fn nominal_jammer_frequencies(&self) -> Result<Vec<f64>> {
        self.jammers
            .iter()
            .map(|j| Ok(spatial_frequencies(&self.params, j.angle_deg.to_radians(), j.range_m)?.transmit))
            .collect()
    }

    /// Jammer components at their nominal parameters.
    pub fn nominal_jammers(&self) -> Result<Vec<Component>> {
        self.jammer_components(ErrorInjection::default())
    }

    /// Every echo as simulated, with the configured errors applied to the jammers.
    pub fn true_components(&self) -> Result<Vec<Component>> {
        self.validate()?;
        let mut out = Vec::with_capacity(self.jammers.len() + 1);
        if let Some(t) = &self.target {
            out.push(Component {
                kind: ComponentKind::Target,
                angle_rad: t.angle_deg.to_radians(),
                range_m: t.range_m,
                power: db_to_linear(t.snr_db),
                start_bin: t.range_bin,
                num_bins: self.params.pulse_bins(),
                steering: virtual_steering(&self.params, t.angle_deg.to_radians(), t.range_m)?.values,
            });
        }
        out.extend(self.jammer_components(self.errors)?);
        Ok(out)
    }

    fn jammer_components(&self, errors: ErrorInjection) -> Result<Vec<Component>> {
        let bin = self.params.range_bin_size();
        self.jammers
            .iter()
            .enumerate()
            .map(|(q, j)| {
                let angle = (j.angle_deg + errors.doa_error_deg).to_radians();
                let range = j.range_m + errors.range_bin_error as f64 * bin;
                let start = j.range_bin as i64 + errors.range_bin_error;
                if start < 0 {
                    return Err(SceneError::Config(format!("false target {} shifted before bin 0", q + 1)));
                }
                Ok(Component {
                    kind: ComponentKind::Jammer(q),
                    angle_rad: angle,
                    range_m: range,
                    power: db_to_linear(j.jnr_db),
                    start_bin: start as usize,
                    num_bins: self.params.pulse_bins(),
                    steering: virtual_steering(&self.params, angle, range)?.values,
                })
            })
            .collect()
    }
}

/// Where a component sits in the cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Occupancy {
    pub kind: ComponentKind,
    pub start_bin: usize,
    pub num_bins: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthesisOptions {
    pub include_noise: bool,
    /// Monte Carlo trial index; selects an independent random stream.
    pub trial: u64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self { include_noise: true, trial: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct DataCube {
    data: Mat<c64>,
    num_bins: usize,
    num_pulses: usize,
    pub occupancy: Vec<Occupancy>,
    pub seed: u64,
    pub trial: u64,
}

impl DataCube {
    pub fn virtual_len(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn num_pulses(&self) -> usize {
        self.num_pulses
    }

    /// All snapshots, one column per (bin, pulse) with column index `bin * pulses + pulse`.
    pub fn snapshots(&self) -> MatRef<'_, c64> {
        self.data.as_ref()
    }

    pub fn snapshot(&self, bin: usize, pulse: usize) -> ColRef<'_, c64> {
        self.data.col(bin * self.num_pulses + pulse)
    }

    /// The `MN x pulses` block of one range bin.
    pub fn bin_block(&self, bin: usize) -> MatRef<'_, c64> {
        self.data.as_ref().subcols(bin * self.num_pulses, self.num_pulses)
    }

    /// Snapshots of the given bins, concatenated in the order given.
    pub fn gather_bins(&self, bins: &[usize]) -> Mat<c64> {
        let p = self.num_pulses;
        let mut out = Mat::zeros(self.virtual_len(), bins.len() * p);
        for (i, &b) in bins.iter().enumerate() {
            out.as_mut().subcols_mut(i * p, p).copy_from(self.bin_block(b));
        }
        out
    }

    /// Mean power per channel and pulse in one bin.
    pub fn bin_power(&self, bin: usize) -> f64 {
        let block = self.bin_block(bin);
        let mut acc = 0.0;
        for j in 0..block.ncols() {
            for x in block.col(j).iter() {
                acc += x.norm_sqr();
            }
        }
        acc / (block.nrows() * block.ncols()) as f64
    }

    pub fn power_profile(&self) -> Vec<f64> {
        (0..self.num_bins).map(|b| self.bin_power(b)).collect()
    }
}

/// Independent random stream for `(seed, trial)`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Complex echo phase for a round trip to `range`, `exp(-j 2 pi f0 2R/c)`.
fn echo_phase(params: &RadarParams, range: f64) -> c64 {
    let cycles = params.carrier_frequency * 2.0 * range / SPEED_OF_LIGHT;
    let frac = cycles - cycles.floor();
    let (s, c) = (-2.0 * std::f64::consts::PI * frac).sin_cos();
    c64::new(c, s)
}

pub fn synthesize_cube(scenario: &Scenario, seed: u64) -> Result<DataCube> {
    synthesize_cube_with(scenario, seed, &SynthesisOptions::default())
}

pub fn synthesize_cube_with(scenario: &Scenario, seed: u64, options: &SynthesisOptions) -> Result<DataCube> {
    let components = scenario.true_components()?;
    if let Some(w) = scenario.capacity_warning() {
        log::warn!("{w}");
    }
    let p = &scenario.params;
    let (mn, bins, pulses) = (p.virtual_len(), p.num_range_bins, p.num_pulses);
    let mut data = Mat::<c64>::zeros(mn, bins * pulses);
    if options.include_noise {
        let mut rng = trial_rng(seed, options.trial);
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        for j in 0..bins * pulses {
            for x in data.col_mut(j).iter_mut() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                *x = c64::new(re * scale, im * scale);
            }
        }
    }
    let mut occupancy = Vec::with_capacity(components.len());
    for comp in &components {
        let amplitude = echo_phase(p, comp.range_m) * comp.power.sqrt();
        let echo: Col<c64> = Col::from_fn(mn, |i| comp.steering[i] * amplitude);
        for bin in comp.start_bin..comp.start_bin + comp.num_bins {
            for pulse in 0..pulses {
                let mut col = data.col_mut(bin * pulses + pulse);
                col += &echo;
            }
        }
        occupancy.push(Occupancy { kind: comp.kind, start_bin: comp.start_bin, num_bins: comp.num_bins });
    }
    Ok(DataCube { data, num_bins: bins, num_pulses: pulses, occupancy, seed, trial: options.trial })
}
