//! CSV artifacts and the drivers behind each command.

use std::fs;
use std::path::{Path, PathBuf};

use stca_array::spatial_frequencies;
use stca_beam::pattern_db;
use stca_nsjm::{apply_weight, BeamWeight, Provenance};
use stca_scene::DataCube;

use crate::config::ExperimentConfig;
use crate::experiment::{calibrate, detection_run, sinr_sweep, Calibration, DetectionRecord, Method, Pipeline, SinrPoint};
use crate::metrics::{capon_2d, pattern_2d, uniform_grid, PatternGrid};
use crate::{EvalError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    pub trials: usize,
    pub out_dir: PathBuf,
}

impl RunOptions {
    /// Seed and trial count from the `[sweep]` section.
    pub fn from_config(cfg: &ExperimentConfig, out_dir: impl Into<PathBuf>) -> Self {
        Self { seed: cfg.sweep.seed, trials: cfg.sweep.trials, out_dir: out_dir.into() }
    }

    fn path(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir)?;
        Ok(self.out_dir.join(name))
    }
}

fn db(x: f64) -> String {
    format!("{x:.4}")
}

fn freq(x: f64) -> String {
    format!("{x:.6}")
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    Ok(w)
}

pub fn write_sinr_sweep(path: &Path, points: &[SinrPoint]) -> Result<()> {
    let mut w = writer(path, &["snr_db", "method", "mean_sinr_db", "std", "trials"])?;
    for p in points {
        w.write_record([db(p.snr_db), p.method.to_string(), db(p.mean_sinr_db), db(p.std_db), p.trials.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pattern(path: &Path, grid: &PatternGrid) -> Result<()> {
    let mut w = writer(path, &["f_T", "f_R", "db"])?;
    for (i_t, &ft) in grid.f_t.iter().enumerate() {
        for (i_r, &fr) in grid.f_r.iter().enumerate() {
            w.write_record([freq(ft), freq(fr), db(grid.at(i_t, i_r))])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_detection(path: &Path, records: &[DetectionRecord]) -> Result<()> {
    let mut w = writer(path, &["trial", "detected_bin", "q_star", "gamma", "segments"])?;
    for r in records {
        w.write_record([
            r.trial.to_string(),
            opt(r.detected_bin),
            opt(r.q_star),
            format!("{:.6}", r.gamma),
            r.segments.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_profile(path: &Path, mag_db: &[f64]) -> Result<()> {
    let mut w = writer(path, &["bin", "mag_db"])?;
    for (b, m) in mag_db.iter().enumerate() {
        w.write_record([b.to_string(), db(*m)])?;
    }
    w.flush()?;
    Ok(())
}

/// Every sample of the echo: one row per bin, pulse and virtual channel.
pub fn write_cube(path: &Path, cube: &DataCube) -> Result<()> {
    let mut w = writer(path, &["bin", "pulse", "channel", "re", "im"])?;
    for b in 0..cube.num_bins() {
        for p in 0..cube.num_pulses() {
            let x = cube.snapshot(b, p);
            for (c, v) in x.iter().enumerate() {
                w.write_record([b.to_string(), p.to_string(), c.to_string(), format!("{:.6e}", v.re), format!("{:.6e}", v.im)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_calibration(path: &Path, cal: &Calibration) -> Result<()> {
    let mut w = writer(path, &["trial", "target_present", "gamma", "target_jump", "other_jump"])?;
    for s in &cal.samples {
        w.write_record([
            s.trial.to_string(),
            s.target_present.to_string(),
            format!("{:.6}", s.gamma),
            s.target_jump.map(|j| format!("{j:.6}")).unwrap_or_default(),
            format!("{:.6}", s.other_jump),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn matched_filter(p: &Pipeline) -> Result<BeamWeight> {
    Ok(BeamWeight::normalized(p.presumed.clone(), p.presumed.as_ref(), Provenance::Baseline)?)
}

fn profile_db(w: &BeamWeight, cube: &DataCube) -> Result<Vec<f64>> {
    Ok(apply_weight(w, cube)?.magnitude_db())
}

fn grids(cfg: &ExperimentConfig) -> (Vec<f64>, Vec<f64>) {
    (uniform_grid(cfg.pattern.ft_points), uniform_grid(cfg.pattern.fr_points))
}

/// Synthesises trial 0 and writes the matched-filter range profile, plus the
/// raw samples when `dump_cube` is set.
pub fn run_simulate(cfg: &ExperimentConfig, opts: &RunOptions, dump_cube: bool) -> Result<Vec<PathBuf>> {
    let p = Pipeline::new(cfg)?;
    let cube = p.simulate(opts.seed, 0)?;
    let mut files = vec![opts.path("profile_raw.csv")?];
    write_profile(&files[0], &profile_db(&matched_filter(&p)?, &cube)?)?;
    if dump_cube {
        let path = opts.path("cube.csv")?;
        write_cube(&path, &cube)?;
        files.push(path);
    }
    Ok(files)
}

pub fn run_detect(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(Vec<DetectionRecord>, PathBuf)> {
    let p = Pipeline::new(cfg)?;
    let records = detection_run(&p, opts.seed, opts.trials)?;
    let path = opts.path("detection.csv")?;
    write_detection(&path, &records)?;
    Ok((records, path))
}

/// Forms one weight on trial 0 and writes its range profile and 2-D pattern.
/// Fails with [`EvalError::NonConvergence`] (after writing) when the
/// range-controlled beam behind `rjns` did not converge.
pub fn run_suppress(cfg: &ExperimentConfig, opts: &RunOptions, method: Method) -> Result<Vec<PathBuf>> {
    let p = Pipeline::new(cfg)?;
    let cube = p.simulate(opts.seed, 0)?;
    let proc = p.process(&cube)?;
    let w = proc
        .weight(method)
        .ok_or_else(|| EvalError::Numeric(format!("{method} weight could not be formed for this scene")))?;
    let profile = opts.path(&format!("profile_{method}.csv"))?;
    write_profile(&profile, &profile_db(w, &cube)?)?;
    let (ft, fr) = grids(cfg);
    let pattern = opts.path(&format!("pattern_{method}.csv"))?;
    write_pattern(&pattern, &pattern_2d(w.values.as_ref(), p.params().num_tx, p.params().num_rx, &ft, &fr)?)?;
    log::info!("{method}: output SINR {:.2} dB", p.sinr(Some(w))?);
    if method == Method::Rjns {
        if let Some(state) = &p.mrbc {
            if !state.converged {
                return Err(EvalError::NonConvergence(format!(
                    "range-controlled beam missed its thresholds within {} iterations",
                    cfg.solver.max_iter
                )));
            }
        }
    }
    Ok(vec![profile, pattern])
}

/// Capon spectrum of the full echo and the controlled transmit pattern.
pub fn run_pattern(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<PathBuf>> {
    let p = Pipeline::new(cfg)?;
    let cube = p.simulate(opts.seed, 0)?;
    let r = stca_eigen::sample_covariance(cube.snapshots())?;
    let (ft, fr) = grids(cfg);
    let capon = opts.path("pattern_capon.csv")?;
    write_pattern(&capon, &capon_2d(&r, p.params().num_tx, p.params().num_rx, &ft, &fr)?)?;
    let mut files = vec![capon];
    if let Some(state) = &p.mrbc {
        let f0 = p.scenario.presumed_target_frequency()?;
        let theta = p.scenario.target.as_ref().map(|t| t.angle_deg.to_radians()).unwrap_or(0.0);
        let range = p.scenario.target.as_ref().map(|t| t.range_m).unwrap_or(0.0);
        let f_r = spatial_frequencies(p.params(), theta, range)?.receive;
        let fine = uniform_grid(1000);
        let values = pattern_db(state.weight.as_ref(), f0, &fine)?;
        let grid = PatternGrid { f_t: fine, f_r: vec![f_r], values_db: values };
        let path = opts.path("pattern_mrbc.csv")?;
        write_pattern(&path, &grid)?;
        files.push(path);
        if !state.converged {
            return Err(EvalError::NonConvergence(format!(
                "range-controlled beam missed its thresholds within {} iterations",
                cfg.solver.max_iter
            )));
        }
    }
    Ok(files)
}

pub fn run_sinr_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(Vec<SinrPoint>, PathBuf)> {
    let p = Pipeline::new(cfg)?;
    let points = sinr_sweep(&p, &cfg.sweep.snr_points()?, &cfg.sweep.methods, opts.seed, opts.trials)?;
    let path = opts.path("sinr_sweep.csv")?;
    write_sinr_sweep(&path, &points)?;
    Ok((points, path))
}

pub fn run_calibrate(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(Calibration, PathBuf)> {
    let cal = calibrate(cfg, opts.seed, opts.trials)?;
    let path = opts.path("calibration.csv")?;
    write_calibration(&path, &cal)?;
    Ok((cal, path))
}

/// Writes every artifact: detection, SINR sweep, patterns and range profiles.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<PathBuf>> {
    let p = Pipeline::new(cfg)?;
    let mut files = Vec::new();

    let records = detection_run(&p, opts.seed, opts.trials)?;
    let path = opts.path("detection.csv")?;
    write_detection(&path, &records)?;
    files.push(path);

    let points = sinr_sweep(&p, &cfg.sweep.snr_points()?, &cfg.sweep.methods, opts.seed, opts.trials)?;
    let path = opts.path("sinr_sweep.csv")?;
    write_sinr_sweep(&path, &points)?;
    files.push(path);

    let cube = p.simulate(opts.seed, 0)?;
    let proc = p.process(&cube)?;
    let (ft, fr) = grids(cfg);
    let (m, n) = (p.params().num_tx, p.params().num_rx);

    let path = opts.path("pattern_capon.csv")?;
    write_pattern(&path, &capon_2d(&proc.full_covariance, m, n, &ft, &fr)?)?;
    files.push(path);

    let path = opts.path("profile_raw.csv")?;
    write_profile(&path, &profile_db(&matched_filter(&p)?, &cube)?)?;
    files.push(path);

    for method in [Method::Nsjm, Method::Rjns, Method::Mvdr] {
        let Some(w) = proc.weight(method) else { continue };
        let path = opts.path(&format!("profile_{method}.csv"))?;
        write_profile(&path, &profile_db(w, &cube)?)?;
        files.push(path);
        let path = opts.path(&format!("pattern_{method}.csv"))?;
        write_pattern(&path, &pattern_2d(w.values.as_ref(), m, n, &ft, &fr)?)?;
        files.push(path);
    }
    Ok(files)
}
