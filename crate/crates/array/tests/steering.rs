use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use faer::c64;
use proptest::prelude::*;
use stca_array::*;

/// Independent oracle: the fractional part of `mu*dt*2R/c` computed in exact
/// integer arithmetic. With the default parameters mu*dt*2/c = 2044 / 300000 per metre.
fn exact_transmit_frequency(range_m: i64) -> f64 {
    let num = (range_m * 2044).rem_euclid(300_000);
    let frac = num as f64 / 300_000.0;
    if frac >= 0.5 { frac - 1.0 } else { frac }
}

#[test]
fn scenario_transmit_frequencies_match_exact_arithmetic() {
    let p = RadarParams::default();
    let expected = [(43_000, -0.08 / 3.0), (64_000, 0.16 / 3.0), (66_000, -0.32), (84_000, 0.32)];
    for (range, f) in expected {
        let oracle = exact_transmit_frequency(range);
        assert_abs_diff_eq!(oracle, f, epsilon = 1e-12);
        let got = spatial_frequencies(&p, 0.0, range as f64).unwrap();
        assert_abs_diff_eq!(got.transmit, oracle, epsilon = 1e-9);
        assert_abs_diff_eq!(got.receive, 0.0, epsilon = 1e-15);
        assert!((got.transmit_unwrapped - got.transmit).fract().abs() < 1e-9);
    }
}

#[test]
fn transmit_steering_equals_product_form() {
    let p = RadarParams::default();
    let (theta, range) = (0.3_f64, 43_000.0);
    let a = transmit_steering(&p, theta, range).unwrap();
    let tau0 = range / SPEED_OF_LIGHT;
    for m in 0..p.num_tx {
        let angle = 2.0 * PI * p.element_spacing * m as f64 * theta.sin();
        let delay = 4.0 * PI * p.chirp_rate() * tau0 * m as f64 * p.transmit_delay;
        let want = c64::new(0.0, angle + delay).exp();
        assert_abs_diff_eq!((a.values[m] - want).norm(), 0.0, epsilon = 1e-8);
    }
}

#[test]
fn virtual_vector_is_receive_major_kronecker() {
    let p = RadarParams { num_tx: 3, num_rx: 4, ..RadarParams::default() };
    let (theta, range) = (-0.2, 51_234.5);
    let a = transmit_steering(&p, theta, range).unwrap().values;
    let b = receive_steering(&p, theta).unwrap().values;
    let v = virtual_steering(&p, theta, range).unwrap();
    assert_eq!(v.kind, SteeringKind::Virtual);
    assert_eq!(v.len(), 12);
    for n in 0..4 {
        for m in 0..3 {
            assert_abs_diff_eq!((v.values[n * 3 + m] - b[n] * a[m]).norm(), 0.0, epsilon = 1e-14);
        }
    }
}

#[test]
fn zero_delay_reduces_to_angle_only_transmit_vector() {
    let p = RadarParams::default().traditional();
    let theta = 0.4;
    let a1 = transmit_steering(&p, theta, 10_000.0).unwrap().values;
    let a2 = transmit_steering(&p, theta, 90_000.0).unwrap().values;
    let b = steering_from_frequency(p.num_tx, p.element_spacing * theta.sin());
    for m in 0..p.num_tx {
        assert_abs_diff_eq!((a1[m] - b[m]).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((a2[m] - b[m]).norm(), 0.0, epsilon = 1e-12);
    }
}

#[test]
fn one_range_bin_and_one_degree_shifts() {
    let p = RadarParams::default();
    let f0 = spatial_frequencies(&p, 0.0, 64_000.0).unwrap();
    let f1 = spatial_frequencies(&p, 0.0, 64_015.0).unwrap();
    assert_abs_diff_eq!(f1.transmit_unwrapped - f0.transmit_unwrapped, 0.1022, epsilon = 1e-9);
    let f2 = spatial_frequencies(&p, 1f64.to_radians(), 64_000.0).unwrap();
    assert_abs_diff_eq!(f2.transmit_unwrapped - f0.transmit_unwrapped, 0.5 * 1f64.to_radians().sin(), epsilon = 1e-9);
    assert_abs_diff_eq!(f2.receive, 0.0087265, epsilon = 1e-6);
}

proptest! {
    #[test]
    fn steering_vectors_have_unit_modulus_entries(theta in -1.5f64..1.5, range in 0.0f64..2e5) {
        let p = RadarParams::default();
        let v = virtual_steering(&p, theta, range).unwrap().values;
        prop_assert_eq!(v.nrows(), 256);
        let mut energy = 0.0;
        for k in 0..v.nrows() {
            prop_assert!((v[k].norm() - 1.0).abs() < 1e-12);
            energy += v[k].norm_sqr();
        }
        prop_assert!((energy - 256.0).abs() < 1e-9);
    }

    #[test]
    fn transmit_phase_increment_equals_wrapped_frequency(theta in -1.5f64..1.5, range in 0.0f64..2e5) {
        let p = RadarParams::default();
        let a = transmit_steering(&p, theta, range).unwrap().values;
        let f = spatial_frequencies(&p, theta, range).unwrap();
        prop_assert!((-0.5..0.5).contains(&f.transmit));
        for m in 0..p.num_tx - 1 {
            let step = (a[m + 1] * a[m].conj()).arg() / (2.0 * PI);
            let diff = wrap_frequency(step - f.transmit);
            prop_assert!(diff.abs() < 1e-9, "m={} step={} f={}", m, step, f.transmit);
        }
    }

    #[test]
    fn transmit_frequency_is_periodic_in_range(theta in -1.5f64..1.5, range in 0.0f64..1e5, k in 1u32..50) {
        let p = RadarParams::default();
        let period = 1.0 / p.transmit_frequency_per_metre();
        let f1 = spatial_frequencies(&p, theta, range).unwrap().transmit;
        let f2 = spatial_frequencies(&p, theta, range + k as f64 * period).unwrap().transmit;
        prop_assert!(wrap_frequency(f1 - f2).abs() < 1e-8);
    }
}
