use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use stca_eval::experiment::mismatch_study;
use stca_eval::output::{
    run_calibrate, run_detect, run_experiment, run_pattern, run_simulate, run_sinr_sweep, run_suppress, RunOptions,
};
use stca_eval::{EvalError, ExperimentConfig, Method, Result};
use stca_scene::{validate_matched_filter, WaveformModel};

/// Mainlobe deceptive-jamming suppression with a MIMO-STCA radar.
#[derive(Debug, Parser)]
#[command(name = "stca", version)]
struct Cli {
    /// TOML scenario and experiment settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Zero the transmit delay (conventional MIMO).
    #[arg(long, global = true)]
    traditional_mimo: bool,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuppressMethod {
    Nsjm,
    Rjns,
    Mvdr,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    Narrowband,
    DelayedChirp,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesise one echo and write its matched-filter range profile.
    Simulate {
        /// Also write every raw sample to cube.csv.
        #[arg(long)]
        dump_cube: bool,
    },
    /// Locate the target among the sampled segments for each trial.
    Detect,
    /// Form one suppression weight and write its range profile and pattern.
    Suppress {
        #[arg(long, value_enum)]
        method: SuppressMethod,
    },
    /// Capon spectrum of the echo and the controlled transmit pattern.
    Pattern,
    /// Mean output SINR against input SNR.
    SinrSweep,
    /// Check the matched-filter phase of each transmit element.
    ValidateWaveform {
        #[arg(long, value_enum, default_value = "narrowband")]
        model: Model,
    },
    /// Place the correlation thresholds from target-present and target-absent runs.
    Calibrate,
    /// Output SINR of nominally designed weights under the configured errors.
    Mismatch,
    /// Every artifact in one go.
    Run,
}

fn load(cli: &Cli) -> Result<(ExperimentConfig, RunOptions)> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    if cli.traditional_mimo {
        cfg.scenario.traditional_mimo = true;
    }
    let mut opts = RunOptions::from_config(&cfg, &cli.out_dir);
    if let Some(s) = cli.seed {
        opts.seed = s;
    }
    if let Some(t) = cli.trials {
        opts.trials = t;
    }
    if opts.trials == 0 {
        return Err(EvalError::Config("--trials must be at least 1".into()));
    }
    Ok((cfg, opts))
}

fn report(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: &Cli) -> Result<()> {
    let (cfg, opts) = load(cli)?;
    match &cli.command {
        Command::Simulate { dump_cube } => report(&run_simulate(&cfg, &opts, *dump_cube)?),
        Command::Detect => {
            let (records, path) = run_detect(&cfg, &opts)?;
            let hits = records.iter().filter(|r| r.detected_bin.is_some()).count();
            println!("target located in {hits}/{} trials", records.len());
            report(&[path]);
        }
        Command::Suppress { method } => {
            let m = match method {
                SuppressMethod::Nsjm => Method::Nsjm,
                SuppressMethod::Rjns => Method::Rjns,
                SuppressMethod::Mvdr => Method::Mvdr,
            };
            report(&run_suppress(&cfg, &opts, m)?);
        }
        Command::Pattern => report(&run_pattern(&cfg, &opts)?),
        Command::SinrSweep => {
            let (points, path) = run_sinr_sweep(&cfg, &opts)?;
            for p in &points {
                println!("{:6.1} dB  {:<18} {:8.3} dB (std {:.3})", p.snr_db, p.method, p.mean_sinr_db, p.std_db);
            }
            report(&[path]);
        }
        Command::ValidateWaveform { model } => {
            let s = cfg.scenario()?;
            let model = match model {
                Model::Narrowband => WaveformModel::Narrowband,
                Model::DelayedChirp => WaveformModel::DelayedChirp,
            };
            let (theta, range) = s.target.as_ref().map(|t| (t.angle_deg.to_radians(), t.range_m)).unwrap_or((0.0, 0.0));
            let check = validate_matched_filter(&s.params, theta, range, model)?;
            println!("element  measured  expected  residual (rad)");
            for (m, ((a, b), r)) in check.measured.iter().zip(&check.expected).zip(&check.residuals).enumerate() {
                println!("{m:7}  {a:8.4}  {b:8.4}  {r:9.2e}");
            }
            println!("max |residual| = {:.3e} rad", check.max_abs_residual);
            if check.max_abs_residual > 1e-2 {
                return Err(EvalError::Numeric("matched-filter phase does not follow the transmit steering vector".into()));
            }
        }
        Command::Calibrate => {
            let (cal, path) = run_calibrate(&cfg, &opts)?;
            let show = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into());
            println!("chi  = {}", show(cal.chi));
            println!("zeta = {}", show(cal.zeta));
            report(&[path]);
        }
        Command::Mismatch => {
            println!("method              nominal  perturbed   loss (dB)");
            for r in mismatch_study(&cfg)? {
                println!("{:<18} {:8.3} {:10.3} {:10.3}", r.method, r.nominal_db, r.perturbed_db, r.loss_db());
            }
        }
        Command::Run => report(&run_experiment(&cfg, &opts)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
