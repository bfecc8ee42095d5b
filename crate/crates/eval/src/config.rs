//! TOML experiment configuration.
//!
//! Every section is optional. A minimal file selects a preset:
//!
//! ```toml
//! [scenario]
//! preset = "robust"
//!
//! [errors]
//! doa_error_deg = 1.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use stca_array::RadarParams;
use stca_beam::{validate_regions, ControlRegion, MrbcConfig};
use stca_nhss::DetectionThresholds;
use stca_scene::{ErrorInjection, JammerSpec, Scenario, TargetSpec};

use crate::experiment::Method;
use crate::{EvalError, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Target at 43 km, false targets at 64, 66 and 84 km.
    #[default]
    Reference,
    /// Reference layout nudged so the transmit frequencies are well separated.
    Robust,
    TwoJammer,
}

impl Preset {
    pub fn scenario(self) -> Scenario {
        match self {
            Preset::Reference => Scenario::reference(),
            Preset::Robust => Scenario::robust(),
            Preset::TwoJammer => Scenario::two_jammer(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub preset: Preset,
    /// Set to false to simulate the false targets only.
    pub target: bool,
    /// Zero the transmit delay (conventional MIMO).
    pub traditional_mimo: bool,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self { preset: Preset::default(), target: true, traditional_mimo: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MainlobeSection {
    pub halfwidth: f64,
    pub ripple_db: f64,
}

impl Default for MainlobeSection {
    fn default() -> Self {
        Self { halfwidth: 0.015, ripple_db: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullSection {
    pub center: f64,
    #[serde(default = "default_null_halfwidth")]
    pub halfwidth: f64,
    #[serde(default = "default_null_depth")]
    pub depth_db: f64,
}

fn default_null_halfwidth() -> f64 {
    0.02
}

fn default_null_depth() -> f64 {
    -50.0
}

/// Width and depth of the nulls placed automatically on each false target
/// when no `[[null_region]]` is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NullDefaults {
    pub halfwidth: f64,
    pub depth_db: f64,
}

impl Default for NullDefaults {
    fn default() -> Self {
        Self { halfwidth: default_null_halfwidth(), depth_db: default_null_depth() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub snr_min_db: f64,
    pub snr_max_db: f64,
    pub snr_step_db: f64,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            snr_min_db: -10.0,
            snr_max_db: 30.0,
            snr_step_db: 2.0,
            trials: 100,
            seed: 1,
            methods: Method::ALL.to_vec(),
        }
    }
}

impl SweepSection {
    pub fn snr_points(&self) -> Result<Vec<f64>> {
        let ordered = self.snr_max_db.partial_cmp(&self.snr_min_db).is_some_and(|o| o.is_ge());
        if self.snr_step_db.is_nan() || self.snr_step_db <= 0.0 || !ordered {
            return Err(EvalError::Config("sweep needs snr_step_db > 0 and snr_max_db >= snr_min_db".into()));
        }
        let n = ((self.snr_max_db - self.snr_min_db) / self.snr_step_db + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| self.snr_min_db + i as f64 * self.snr_step_db).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatternSection {
    pub ft_points: usize,
    pub fr_points: usize,
}

impl Default for PatternSection {
    fn default() -> Self {
        Self { ft_points: 128, fr_points: 64 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSection,
    /// Replaces the preset's radar parameters; omitted keys keep their defaults.
    pub radar: Option<RadarParams>,
    pub target: Option<TargetSpec>,
    /// Replaces the preset's false targets.
    pub jammer: Option<Vec<JammerSpec>>,
    pub errors: ErrorInjection,
    pub thresholds: DetectionThresholds,
    pub mainlobe_region: MainlobeSection,
    pub null_region: Option<Vec<NullSection>>,
    pub nulls: NullDefaults,
    pub solver: MrbcConfig,
    pub sweep: SweepSection,
    pub pattern: PatternSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| EvalError::Config(e.to_string()))?;
        cfg.thresholds.validate()?;
        cfg.sweep.snr_points()?;
        if cfg.pattern.ft_points == 0 || cfg.pattern.fr_points == 0 {
            return Err(EvalError::Config("pattern grids need at least one point".into()));
        }
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EvalError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            EvalError::Config(m) => EvalError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Scenario after applying the preset and every override.
    pub fn scenario(&self) -> Result<Scenario> {
        let mut s = self.scenario.preset.scenario();
        if let Some(radar) = &self.radar {
            s.params = radar.clone();
        }
        if self.scenario.traditional_mimo {
            s.params = s.params.traditional();
        }
        if let Some(t) = &self.target {
            s.target = Some(t.clone());
        }
        if !self.scenario.target {
            s.target = None;
        }
        if let Some(j) = &self.jammer {
            s.jammers = j.clone();
        }
        s.errors = self.errors;
        s.validate()?;
        if let Some(w) = s.capacity_warning() {
            log::warn!("{w}");
        }
        Ok(s)
    }

    /// Mainlobe on the presumed target plus one null per false target (or the
    /// explicit `[[null_region]]` list).
    pub fn regions(&self, scenario: &Scenario) -> Result<Vec<ControlRegion>> {
        let f0 = scenario.presumed_target_frequency()?;
        let mut regions = vec![ControlRegion::mainlobe(f0, self.mainlobe_region.halfwidth, self.mainlobe_region.ripple_db)];
        match &self.null_region {
            Some(list) => regions.extend(list.iter().map(|n| ControlRegion::null(n.center, n.halfwidth, n.depth_db))),
            None => regions.extend(
                scenario
                    .nominal_jammer_frequencies()?
                    .into_iter()
                    .map(|f| ControlRegion::null(f, self.nulls.halfwidth, self.nulls.depth_db)),
            ),
        }
        validate_regions(&regions)?;
        Ok(regions)
    }
}
