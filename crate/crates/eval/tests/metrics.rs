use approx::assert_abs_diff_eq;
use faer::{c64, Col};
use proptest::prelude::*;
use stca_array::virtual_from_frequencies;
use stca_eigen::analytic_covariance;
use stca_eval::experiment::mean_std;
use stca_eval::metrics::{capon_2d, mvdr_weight, pattern_2d, sinr_db, uniform_grid, SINR_FLOOR_DB};

fn identity(n: usize) -> stca_eigen::CovarianceMatrix {
    let zero = Col::<c64>::zeros(n);
    analytic_covariance(&[(0.0, zero.as_ref())], 1.0).unwrap()
}

/// Distance between the directions of `a` and `b` after removing the common phase.
fn direction_gap(a: &Col<c64>, b: &Col<c64>) -> f64 {
    let ip: c64 = b.adjoint() * a;
    let k = ip / (ip.norm() * b.norm_l2());
    let na = a.norm_l2();
    Col::<c64>::from_fn(a.nrows(), |i| a[i] / na - b[i] * k).norm_l2()
}

#[test]
fn matched_weight_in_white_noise_gains_the_array_size() {
    let v = virtual_from_frequencies(16, 16, 0.135, 0.0);
    let sinr = sinr_db(v.as_ref(), v.as_ref(), 100.0, &identity(256)).unwrap();
    // 20 dB input times 256 channels.
    assert_abs_diff_eq!(sinr, 20.0 + 10.0 * 256f64.log10(), epsilon = 1e-10);
    assert_abs_diff_eq!(sinr, 44.0824, epsilon = 1e-4);
}

#[test]
fn orthogonal_weight_scores_the_floor() {
    let v = virtual_from_frequencies(16, 16, 0.0, 0.0);
    let w = virtual_from_frequencies(16, 16, 1.0 / 16.0, 0.0);
    assert_eq!(sinr_db(w.as_ref(), v.as_ref(), 100.0, &identity(256)).unwrap(), SINR_FLOOR_DB);
}

#[test]
fn sinr_rejects_mismatched_sizes() {
    let v = virtual_from_frequencies(4, 4, 0.0, 0.0);
    let w = virtual_from_frequencies(4, 2, 0.0, 0.0);
    assert!(sinr_db(w.as_ref(), v.as_ref(), 1.0, &identity(16)).is_err());
}

#[test]
fn mvdr_in_white_noise_is_the_steering_vector() {
    let v = virtual_from_frequencies(8, 8, 0.2, -0.1);
    let w = mvdr_weight(&identity(64), v.as_ref()).unwrap();
    let want = Col::from_fn(64, |i| v[i] / 64.0);
    assert!((&w.values - &want).norm_l2() < 1e-12);
}

#[test]
fn mvdr_with_one_jammer_is_a_single_correction() {
    // (I + J a a^H)^{-1} v = v - J (a^H v) / (1 + J |a|^2) a.
    let v = virtual_from_frequencies(16, 16, 0.135, 0.0);
    let a = virtual_from_frequencies(16, 16, -0.15, 0.0);
    let j = 1000.0;
    let r = analytic_covariance(&[(j, a.as_ref())], 1.0).unwrap();
    let w = mvdr_weight(&r, v.as_ref()).unwrap();
    let av: c64 = a.adjoint() * &v;
    let xi = -av * (j / (1.0 + j * 256.0));
    let expected = Col::from_fn(256, |i| v[i] + xi * a[i]);
    let diff = direction_gap(&w.values, &expected);
    assert!(diff < 1e-8, "{diff}");
    let unit: c64 = w.values.adjoint() * &v;
    assert_abs_diff_eq!(unit.re, 1.0, epsilon = 1e-12);
}

#[test]
fn pattern_peaks_at_the_steered_point_and_matches_brute_force() {
    let (ft, fr) = (uniform_grid(32), uniform_grid(16));
    let w = virtual_from_frequencies(8, 4, ft[20], fr[5]);
    let g = pattern_2d(w.as_ref(), 8, 4, &ft, &fr).unwrap();
    assert_eq!(g.argmax(), (20, 5));
    assert_abs_diff_eq!(g.at(20, 5), 0.0, epsilon = 1e-12);
    for (i_t, i_r) in [(3, 7), (11, 0), (31, 15)] {
        let x = virtual_from_frequencies(8, 4, ft[i_t], fr[i_r]);
        let resp: c64 = w.adjoint() * &x;
        let want = 10.0 * (resp.norm_sqr() / (32.0f64).powi(2)).max(1e-30).log10();
        assert_abs_diff_eq!(g.at(i_t, i_r), want.max(-300.0), epsilon = 1e-8);
    }
}

#[test]
fn pattern_rejects_out_of_band_grid() {
    let w = virtual_from_frequencies(4, 4, 0.0, 0.0);
    assert!(pattern_2d(w.as_ref(), 4, 4, &[0.5], &[0.0]).is_err());
    assert!(pattern_2d(w.as_ref(), 4, 4, &[], &[0.0]).is_err());
}

#[test]
fn capon_resolves_four_equal_sources() {
    let (ft, fr) = (uniform_grid(64), uniform_grid(16));
    let points = [(8, 8), (30, 8), (33, 8), (55, 8)];
    let vs: Vec<Col<c64>> = points.iter().map(|&(t, r)| virtual_from_frequencies(16, 4, ft[t], fr[r])).collect();
    let list: Vec<(f64, _)> = vs.iter().map(|v| (1000.0, v.as_ref())).collect();
    let r = analytic_covariance(&list, 1.0).unwrap();
    let g = capon_2d(&r, 16, 4, &ft, &fr).unwrap();
    for &(t, rr) in &points {
        assert!(g.at(t, rr) > -0.5, "source at {t},{rr}: {}", g.at(t, rr));
    }
    assert!(g.at(20, 8) < -20.0);
    assert!(g.at(8, 0) < -20.0);
}

#[test]
fn mean_and_sample_std() {
    let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
    assert_abs_diff_eq!(m, 2.5);
    assert_abs_diff_eq!(s, (5.0f64 / 3.0).sqrt(), epsilon = 1e-12);
    assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
}

proptest! {
    #[test]
    fn sinr_is_scale_invariant(re in -5.0f64..5.0, im in -5.0f64..5.0, f in -0.5f64..0.5) {
        prop_assume!(re.abs() + im.abs() > 1e-3);
        let v = virtual_from_frequencies(4, 4, 0.1, 0.0);
        let jam = virtual_from_frequencies(4, 4, f, 0.0);
        let r = analytic_covariance(&[(10.0, jam.as_ref())], 1.0).unwrap();
        let w = mvdr_weight(&r, v.as_ref()).unwrap().values;
        let c = c64::new(re, im);
        let scaled = Col::from_fn(16, |i| w[i] * c);
        let a = sinr_db(w.as_ref(), v.as_ref(), 3.0, &r).unwrap();
        let b = sinr_db(scaled.as_ref(), v.as_ref(), 3.0, &r).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }
}
