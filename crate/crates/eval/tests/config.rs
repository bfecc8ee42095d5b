use stca_eval::config::{ExperimentConfig, Preset};
use stca_eval::{EvalError, Method};

#[test]
fn empty_file_is_the_default_configuration() {
    let cfg = ExperimentConfig::from_toml_str("").unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
    assert_eq!(cfg.scenario.preset, Preset::Reference);
    assert_eq!(cfg.sweep.snr_points().unwrap().len(), 21);
    assert_eq!(cfg.sweep.trials, 100);
    let s = cfg.scenario().unwrap();
    assert_eq!(s.jammers.len(), 3);
    assert_eq!(s.target.as_ref().unwrap().range_bin, 1221);
}

#[test]
fn unknown_key_reports_its_line() {
    let err = ExperimentConfig::from_toml_str("[scenario]\npreset = \"robust\"\n\n[errors]\ndoa_eror_deg = 1.0\n").unwrap_err();
    let EvalError::Config(msg) = &err else { panic!("{err:?}") };
    assert!(msg.contains("line 5"), "{msg}");
    assert!(msg.contains("doa_eror_deg"), "{msg}");
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn unknown_preset_is_rejected() {
    assert!(matches!(ExperimentConfig::from_toml_str("[scenario]\npreset = \"nope\"\n"), Err(EvalError::Config(_))));
}

#[test]
fn overrides_are_applied() {
    let text = r#"
[scenario]
preset = "robust"
traditional_mimo = true

[radar]
num_pulses = 10

[[jammer]]
angle_deg = 0.0
range_m = 64000.0
jnr_db = 25.0
range_bin = 321

[errors]
doa_error_deg = 1.0
range_bin_error = 1

[sweep]
methods = ["nsjm", "rjns"]
"#;
    let cfg = ExperimentConfig::from_toml_str(text).unwrap();
    let s = cfg.scenario().unwrap();
    assert_eq!(s.params.transmit_delay, 0.0);
    assert_eq!(s.params.num_pulses, 10);
    assert_eq!(s.params.num_tx, 16);
    assert_eq!(s.jammers.len(), 1);
    assert_eq!(s.errors.range_bin_error, 1);
    assert_eq!(cfg.sweep.methods, vec![Method::Nsjm, Method::Rjns]);
}

#[test]
fn target_can_be_removed() {
    let cfg = ExperimentConfig::from_toml_str("[scenario]\ntarget = false\n").unwrap();
    assert!(cfg.scenario().unwrap().target.is_none());
}

#[test]
fn default_nulls_follow_the_false_targets() {
    let cfg = ExperimentConfig::from_toml_str("[scenario]\npreset = \"robust\"\n").unwrap();
    let s = cfg.scenario().unwrap();
    let regions = cfg.regions(&s).unwrap();
    assert_eq!(regions.len(), 4);
    let centers: Vec<f64> = regions[1..].iter().map(|r| r.center).collect();
    for (c, want) in centers.iter().zip([-0.15, -0.39, 0.42]) {
        assert!((c - want).abs() < 1e-6, "{c} vs {want}");
    }
    assert!(regions[1..].iter().all(|r| r.half_width == 0.02));
    assert!((regions[0].center - 0.135).abs() < 1e-6);
}

#[test]
fn explicit_null_regions_replace_the_defaults() {
    let text = "[scenario]\npreset = \"robust\"\n[[null_region]]\ncenter = -0.3\nhalfwidth = 0.05\n";
    let cfg = ExperimentConfig::from_toml_str(text).unwrap();
    let regions = cfg.regions(&cfg.scenario().unwrap()).unwrap();
    assert_eq!(regions.len(), 2);
    assert_eq!(regions[1].half_width, 0.05);
}

#[test]
fn overlapping_regions_are_a_configuration_error() {
    let text = "[scenario]\npreset = \"robust\"\n[[null_region]]\ncenter = 0.14\n";
    let cfg = ExperimentConfig::from_toml_str(text).unwrap();
    let err = cfg.regions(&cfg.scenario().unwrap()).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn invalid_sweep_and_thresholds_are_rejected() {
    assert!(ExperimentConfig::from_toml_str("[sweep]\nsnr_step_db = 0.0\n").is_err());
    assert!(ExperimentConfig::from_toml_str("[sweep]\nsnr_min_db = 5.0\nsnr_max_db = 0.0\n").is_err());
    assert!(ExperimentConfig::from_toml_str("[thresholds]\nchi = -1.0\n").is_err());
    assert!(ExperimentConfig::from_toml_str("[pattern]\nft_points = 0\n").is_err());
}

#[test]
fn target_outside_the_echo_is_rejected() {
    let text = "[target]\nangle_deg = 0.0\nrange_m = 43000.0\nsnr_db = 20.0\nrange_bin = 1999\n";
    let cfg = ExperimentConfig::from_toml_str(text).unwrap();
    assert_eq!(cfg.scenario().unwrap_err().exit_code(), 1);
}
