use approx::assert_abs_diff_eq;
use faer::{c64, Col};
use proptest::prelude::*;
use stca_array::{virtual_from_frequencies, RadarParams};
use stca_eigen::{analytic_covariance, eig_descending, sample_covariance, CovarianceMatrix};
use stca_nsjm::*;
use stca_scene::{synthesize_cube, synthesize_cube_with, JammerSpec, Scenario, SynthesisOptions, TargetSpec};

fn v(f_t: f64) -> Col<c64> {
    virtual_from_frequencies(16, 16, f_t, 0.0)
}

fn incm(freqs: &[f64], power: f64) -> CovarianceMatrix {
    let vs: Vec<Col<c64>> = freqs.iter().map(|&f| v(f)).collect();
    let comps: Vec<(f64, _)> = vs.iter().map(|x| (power, x.as_ref())).collect();
    analytic_covariance(&comps, 1.0).unwrap()
}

fn sinr_db(w: &BeamWeight, target: &Col<c64>, snr: f64, r: &CovarianceMatrix) -> f64 {
    let g = w.response(target.as_ref()).norm_sqr();
    10.0 * (snr * g / r.quadratic_form(w.values.as_ref())).log10()
}

#[test]
fn without_jammers_weight_is_scaled_steering_vector() {
    let s = v(0.13);
    let e = eig_descending(&analytic_covariance(&[(1.0, v(0.3).as_ref())], 1.0).unwrap()).unwrap().split(0).unwrap();
    let w = nsjm_weight(&e, s.as_ref()).unwrap();
    assert_eq!(w.provenance, Provenance::Nsjm);
    for i in 0..256 {
        assert_abs_diff_eq!((w.values[i] - s[i] / 256.0).norm(), 0.0, epsilon = 1e-12);
    }
    let g = w.response(s.as_ref());
    assert_abs_diff_eq!(g.re, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(g.im, 0.0, epsilon = 1e-12);
}

#[test]
fn single_jammer_is_annihilated() {
    let s = v(-0.0267);
    let e = eig_descending(&incm(&[0.0533], 1000.0)).unwrap().split(1).unwrap();
    let w = nsjm_weight(&e, s.as_ref()).unwrap();
    assert!(w.response(v(0.0533).as_ref()).norm() < 1e-8);
}

#[test]
fn fifteen_jammers_are_nulled_and_sixteen_are_degenerate() {
    let f0 = 0.0;
    let freqs: Vec<f64> = (1..16).map(|k| f0 + (k as f64 + 0.37) / 16.0 - if k > 8 { 1.0 } else { 0.0 }).collect();
    let s = v(f0);
    let e = eig_descending(&incm(&freqs, 1000.0)).unwrap().split(15).unwrap();
    let w = nsjm_weight(&e, s.as_ref()).unwrap();
    for &f in &freqs {
        assert!(20.0 * w.response(v(f).as_ref()).norm().log10() < -40.0);
    }
    let mut full = freqs.clone();
    full.push(0.5 / 16.0);
    let e = eig_descending(&incm(&full, 1000.0)).unwrap().split(16).unwrap();
    assert!(matches!(nsjm_weight(&e, s.as_ref()), Err(NsjmError::Degenerate(_))));
}

#[test]
fn fifteen_jammers_nulled_with_estimated_covariance() {
    let params = RadarParams { num_range_bins: 400, ..RadarParams::default() };
    let jammers: Vec<JammerSpec> = (1..16)
        .map(|k| {
            let f = (k as f64 + 0.37) / 16.0;
            let range = params.range_for_transmit_frequency(f, 0.0, 50e3 + 1e3 * k as f64).unwrap();
            JammerSpec { angle_deg: 0.0, range_m: range, jnr_db: 30.0, range_bin: 20 * k }
        })
        .collect();
    let s = Scenario { params: params.clone(), target: None, jammers, errors: Default::default() };
    let cube = synthesize_cube(&s, 4).unwrap();
    let bins: Vec<usize> = (1..16).flat_map(|k| 20 * k..20 * k + 10).collect();
    let r = sample_covariance(cube.gather_bins(&bins).as_ref()).unwrap();
    let e = eig_descending(&r).unwrap().split(15).unwrap();
    let target = v(0.0);
    let w = nsjm_weight(&e, target.as_ref()).unwrap();
    for comp in s.true_components().unwrap() {
        let db = 20.0 * w.response(comp.steering.as_ref()).norm().log10();
        assert!(db < -40.0, "{db}");
    }
}

#[test]
fn noiseless_output_keeps_only_target() {
    let mut s = Scenario::reference();
    s.params.num_range_bins = 1700;
    let cube = synthesize_cube_with(&s, 0, &SynthesisOptions { include_noise: false, trial: 0 }).unwrap();
    let nominal = s.nominal_jammers().unwrap();
    let comps: Vec<(f64, _)> = nominal.iter().map(|c| (c.power, c.steering.as_ref())).collect();
    let e = eig_descending(&analytic_covariance(&comps, 1.0).unwrap()).unwrap().split(3).unwrap();
    let vs = s.presumed_target_steering().unwrap();
    let w = nsjm_weight(&e, vs.as_ref()).unwrap();
    let profile = apply_weight(&w, &cube).unwrap();
    for b in [321, 435, 1601, 1610] {
        assert!(profile.magnitude[b] < 1e-8 * 10.0, "bin {b}: {}", profile.magnitude[b]);
    }
    // W^H v_s0 = 1, so the target output equals its amplitude.
    assert_abs_diff_eq!(profile.magnitude[1225], 10.0, epsilon = 1e-8);
}

#[test]
fn table_scenario_profile_suppresses_false_targets() {
    let s = Scenario::reference();
    let cube = synthesize_cube(&s, 21).unwrap();
    let bins: Vec<usize> = [321, 431, 1601].iter().flat_map(|&b| b..b + 10).collect();
    let e = eig_descending(&sample_covariance(cube.gather_bins(&bins).as_ref()).unwrap()).unwrap().split(3).unwrap();
    let vs = s.presumed_target_steering().unwrap();
    let w = nsjm_weight(&e, vs.as_ref()).unwrap();
    let p = apply_weight(&w, &cube).unwrap();
    let noise = w.values.norm_l2();
    let jam_peak = [321, 431, 1601].iter().flat_map(|&b| b..b + 10).map(|b| p.magnitude[b]).fold(0.0, f64::max);
    let target = (1221..1231).map(|b| p.magnitude[b]).fold(0.0, f64::max);
    assert!(20.0 * (target / jam_peak).log10() > 20.0);
    assert!(20.0 * (jam_peak / noise).log10() < 3.0);
    assert_eq!(p.magnitude_db().len(), 2000);
}

#[test]
fn contaminated_covariance_self_nulls_the_target() {
    let s = Scenario::reference();
    let cube = synthesize_cube(&s, 13).unwrap();
    let jam: Vec<usize> = [321, 431, 1601].iter().flat_map(|&b| b..b + 10).collect();
    let all: Vec<usize> = [321, 431, 1221, 1601].iter().flat_map(|&b| b..b + 10).collect();
    let vs = s.presumed_target_steering().unwrap();
    let truth = {
        let comps = s.nominal_jammers().unwrap();
        let list: Vec<(f64, _)> = comps.iter().map(|c| (c.power, c.steering.as_ref())).collect();
        analytic_covariance(&list, 1.0).unwrap()
    };
    let clean_e = eig_descending(&sample_covariance(cube.gather_bins(&jam).as_ref()).unwrap()).unwrap().split(3).unwrap();
    let dirty_e = eig_descending(&sample_covariance(cube.gather_bins(&all).as_ref()).unwrap()).unwrap().split(4).unwrap();
    let clean = sinr_db(&nsjm_weight(&clean_e, vs.as_ref()).unwrap(), &vs, 100.0, &truth);
    let dirty = sinr_db(&nsjm_weight(&dirty_e, vs.as_ref()).unwrap(), &vs, 100.0, &truth);
    assert!(clean - dirty > 10.0, "clean {clean} dirty {dirty}");
}

#[test]
fn dimension_mismatch_is_reported() {
    let s = Scenario {
        params: RadarParams { num_tx: 2, num_rx: 2, num_range_bins: 20, num_pulses: 2, ..RadarParams::default() },
        target: Some(TargetSpec { angle_deg: 0.0, range_m: 1e3, snr_db: 0.0, range_bin: 0 }),
        jammers: vec![],
        errors: Default::default(),
    };
    let cube = synthesize_cube(&s, 0).unwrap();
    let w = BeamWeight::normalized(v(0.1), v(0.1).as_ref(), Provenance::Baseline).unwrap();
    assert!(matches!(apply_weight(&w, &cube), Err(NsjmError::Dimension(_))));
}

proptest! {
    #[test]
    fn analytic_projection_annihilates_every_jammer(
        f0 in -0.5f64..0.5,
        offsets in proptest::collection::vec(0.08f64..0.92, 1..6),
        power_db in 10.0f64..40.0,
    ) {
        let freqs: Vec<f64> = offsets.iter().map(|o| f0 + o).collect();
        let e = eig_descending(&incm(&freqs, 10f64.powf(power_db / 10.0))).unwrap().split(freqs.len()).unwrap();
        let s = v(f0);
        let w = nsjm_weight(&e, s.as_ref()).unwrap();
        // Noiseless sum of target and jammers: only the target survives.
        let x = Col::from_fn(256, |i| s[i] * 3.0 + freqs.iter().map(|&f| v(f)[i] * 30.0).sum::<c64>());
        let y = w.response(x.as_ref());
        prop_assert!((y - c64::new(3.0, 0.0)).norm() <= 1e-8 * 3.0 * freqs.len() as f64 * 10.0);
    }
}
