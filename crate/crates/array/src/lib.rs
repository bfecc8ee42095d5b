//! Array model for a colocated MIMO radar whose transmit elements fire with a
//! small progressive delay (space-time coding array).
//!
//! The delay makes the transmit phase progression depend on slant range as well
//! as angle, so the transmit spatial frequency
//!
//! ```text
//! f_T = mu * dt * 2R / c + (d / lambda) * sin(theta)      (wrapped to [-0.5, 0.5))
//! ```
//!
//! separates echoes that share an angle but sit in different range bins.
//! The receive spatial frequency is the usual `f_R = (d / lambda) * sin(theta)`.
//!
//! Virtual (joint transmit-receive) vectors are ordered receive-major:
//! element `n * M + m` pairs receiver `n` with transmitter `m`.
//!
//! ```
//! use stca_array::{RadarParams, spatial_frequencies};
//!
//! let params = RadarParams::default();
//! let f = spatial_frequencies(&params, 0.0, 64_000.0).unwrap();
//! assert!((f.transmit - 0.16 / 3.0).abs() < 1e-9);
//! ```

use std::f64::consts::PI;

use faer::{c64, Col};
use serde::{Deserialize, Serialize};

pub const SPEED_OF_LIGHT: f64 = 3.0e8;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ArrayError {
    #[error("invalid radar parameter: {0}")]
    InvalidParameter(String),
    #[error("value out of domain: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, ArrayError>;

/// Radar system parameters. Frequencies in Hz, times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarParams {
    pub num_tx: usize,
    pub num_rx: usize,
    pub carrier_frequency: f64,
    /// Element spacing in wavelengths.
    pub element_spacing: f64,
    pub pulse_width: f64,
    pub bandwidth: f64,
    pub sample_rate: f64,
    /// Delay between adjacent transmit elements.
    pub transmit_delay: f64,
    pub prf: f64,
    pub num_range_bins: usize,
    pub num_pulses: usize,
}

impl Default for RadarParams {
    fn default() -> Self {
        Self {
            num_tx: 16,
            num_rx: 16,
            carrier_frequency: 10e9,
            element_spacing: 0.5,
            pulse_width: 1e-6,
            bandwidth: 10e6,
            sample_rate: 10e6,
            transmit_delay: 0.1022e-6,
            prf: 5e3,
            num_range_bins: 2000,
            num_pulses: 30,
        }
    }
}

impl RadarParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(ArrayError::InvalidParameter(what.to_string()));
        if self.num_tx == 0 || self.num_rx == 0 {
            return bad("array must have at least one transmit and one receive element");
        }
        if self.num_range_bins == 0 || self.num_pulses == 0 {
            return bad("range bins and pulses must be positive");
        }
        let positive = [
            ("carrier_frequency", self.carrier_frequency),
            ("element_spacing", self.element_spacing),
            ("pulse_width", self.pulse_width),
            ("bandwidth", self.bandwidth),
            ("sample_rate", self.sample_rate),
            ("prf", self.prf),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ArrayError::InvalidParameter(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if !(self.transmit_delay.is_finite() && self.transmit_delay >= 0.0) {
            return bad("transmit_delay must be non-negative");
        }
        if self.sample_rate < self.bandwidth {
            return Err(ArrayError::InvalidParameter(format!(
                "sample rate {} Hz is below the bandwidth {} Hz",
                self.sample_rate, self.bandwidth
            )));
        }
        Ok(())
    }

    /// Same system with the transmit delay removed (conventional MIMO).
    pub fn traditional(&self) -> Self {
        Self { transmit_delay: 0.0, ..self.clone() }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    pub fn chirp_rate(&self) -> f64 {
        self.bandwidth / self.pulse_width
    }

    pub fn virtual_len(&self) -> usize {
        self.num_tx * self.num_rx
    }

    pub fn range_bin_size(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.sample_rate)
    }

    /// Number of range bins covered by one pulse return.
    pub fn pulse_bins(&self) -> usize {
        ((self.pulse_width * self.sample_rate) - 1e-9).ceil().max(1.0) as usize
    }

    /// Transmit spatial frequency accumulated per metre of slant range.
    pub fn transmit_frequency_per_metre(&self) -> f64 {
        self.chirp_rate() * self.transmit_delay * 2.0 / SPEED_OF_LIGHT
    }

    /// Unwrapped shift of `f_T` caused by a range offset of one bin.
    pub fn transmit_frequency_per_bin(&self) -> f64 {
        self.transmit_frequency_per_metre() * self.range_bin_size()
    }

    /// Slant range nearest `near_range` whose wrapped transmit frequency at
    /// angle `theta` equals `f_t`. Useful for placing echoes at chosen
    /// positions of the transmit spectrum.
    pub fn range_for_transmit_frequency(&self, f_t: f64, theta: f64, near_range: f64) -> Result<f64> {
        let k = self.transmit_frequency_per_metre();
        if k <= 0.0 {
            return Err(ArrayError::Domain(
                "transmit frequency does not depend on range when the transmit delay is zero".into(),
            ));
        }
        check_angle(theta)?;
        let offset = wrap_frequency(f_t) - self.element_spacing * theta.sin();
        let n = (near_range * k - offset).round();
        let range = (n + offset) / k;
        if range < 0.0 {
            return Err(ArrayError::Domain(format!("no non-negative range near {near_range} m")));
        }
        Ok(range)
    }
}

/// Wraps a normalised frequency into `[-0.5, 0.5)`.
pub fn wrap_frequency(f: f64) -> f64 {
    let w = f - (f + 0.5).floor();
    if !(-0.5..0.5).contains(&w) {
        -0.5
    } else {
        w
    }
}

/// Wraps a phase into `(-pi, pi]`.
pub fn wrap_phase(p: f64) -> f64 {
    let w = p - 2.0 * PI * ((p + PI) / (2.0 * PI)).floor();
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SteeringKind {
    Transmit,
    Receive,
    Virtual,
}

#[derive(Debug, Clone)]
pub struct SteeringVector {
    pub kind: SteeringKind,
    pub values: Col<c64>,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn into_col(self) -> Col<c64> {
        self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialFrequencies {
    /// Transmit spatial frequency wrapped to `[-0.5, 0.5)`.
    pub transmit: f64,
    /// Transmit spatial frequency before wrapping.
    pub transmit_unwrapped: f64,
    pub receive: f64,
}

fn check_angle(theta: f64) -> Result<()> {
    if !theta.is_finite() || theta.abs() > PI / 2.0 + 1e-12 {
        return Err(ArrayError::Domain(format!("angle {theta} rad outside [-pi/2, pi/2]")));
    }
    Ok(())
}

fn check_range(range: f64) -> Result<()> {
    if !range.is_finite() || range < 0.0 {
        return Err(ArrayError::Domain(format!("range {range} m must be non-negative")));
    }
    Ok(())
}

/// `[1, e^{j2pi f}, ..., e^{j2pi (len-1) f}]`.
pub fn steering_from_frequency(len: usize, f: f64) -> Col<c64> {
    let f = wrap_frequency(f);
    Col::from_fn(len, |k| {
        let (s, c) = (2.0 * PI * f * k as f64).sin_cos();
        c64::new(c, s)
    })
}

/// Kronecker product `outer ⊗ inner`.
pub fn kron(outer: &Col<c64>, inner: &Col<c64>) -> Col<c64> {
    let m = inner.nrows();
    Col::from_fn(outer.nrows() * m, |i| outer[i / m] * inner[i % m])
}

/// Virtual steering vector `b(f_r) ⊗ a(f_t)` for an `num_tx x num_rx` array.
pub fn virtual_from_frequencies(num_tx: usize, num_rx: usize, f_t: f64, f_r: f64) -> Col<c64> {
    kron(&steering_from_frequency(num_rx, f_r), &steering_from_frequency(num_tx, f_t))
}

pub fn spatial_frequencies(params: &RadarParams, theta: f64, range: f64) -> Result<SpatialFrequencies> {
    check_angle(theta)?;
    check_range(range)?;
    let receive = params.element_spacing * theta.sin();
    let range_term = params.transmit_frequency_per_metre() * range;
    let transmit_unwrapped = range_term + receive;
    // Reduce the large range term before adding the angle term to keep precision.
    let transmit = wrap_frequency(range_term - range_term.floor() + receive);
    Ok(SpatialFrequencies { transmit, transmit_unwrapped, receive })
}

pub fn receive_steering(params: &RadarParams, theta: f64) -> Result<SteeringVector> {
    check_angle(theta)?;
    Ok(SteeringVector {
        kind: SteeringKind::Receive,
        values: steering_from_frequency(params.num_rx, params.element_spacing * theta.sin()),
    })
}

pub fn transmit_steering(params: &RadarParams, theta: f64, range: f64) -> Result<SteeringVector> {
    let f = spatial_frequencies(params, theta, range)?;
    Ok(SteeringVector {
        kind: SteeringKind::Transmit,
        values: steering_from_frequency(params.num_tx, f.transmit),
    })
}

pub fn virtual_steering(params: &RadarParams, theta: f64, range: f64) -> Result<SteeringVector> {
    let f = spatial_frequencies(params, theta, range)?;
    Ok(SteeringVector {
        kind: SteeringKind::Virtual,
        values: virtual_from_frequencies(params.num_tx, params.num_rx, f.transmit, f.receive),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn table_parameters_derive_expected_quantities() {
        let p = RadarParams::default();
        assert!(p.validate().is_ok());
        assert_abs_diff_eq!(p.chirp_rate(), 1e13, epsilon = 1.0);
        assert_abs_diff_eq!(p.range_bin_size(), 15.0, epsilon = 1e-12);
        assert_eq!(p.pulse_bins(), 10);
        assert_abs_diff_eq!(p.transmit_frequency_per_bin(), 0.1022, epsilon = 1e-12);
        assert_abs_diff_eq!(p.wavelength(), 0.03, epsilon = 1e-15);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let mut p = RadarParams { num_tx: 0, ..RadarParams::default() };
        assert!(p.validate().is_err());
        p = RadarParams { sample_rate: 5e6, ..RadarParams::default() };
        assert!(p.validate().is_err());
        p = RadarParams { carrier_frequency: -1.0, ..RadarParams::default() };
        assert!(p.validate().is_err());
        p = RadarParams { transmit_delay: -1e-9, ..RadarParams::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn wrap_frequency_stays_in_half_open_interval() {
        for x in [-3.5, -0.5, -0.25, 0.0, 0.4999999999999, 0.5, 1.5, 572.32, -1e-17] {
            let w = wrap_frequency(x);
            assert!((-0.5..0.5).contains(&w), "{x} -> {w}");
            assert_abs_diff_eq!((x - w - (x - w).round()).abs(), 0.0, epsilon = 1e-9);
        }
        assert_eq!(wrap_frequency(0.5), -0.5);
    }

    #[test]
    fn wrap_phase_range() {
        assert_abs_diff_eq!(wrap_phase(3.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_phase(-PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_phase(0.1 + 4.0 * PI), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn angle_and_range_domain_errors() {
        let p = RadarParams::default();
        assert!(matches!(receive_steering(&p, 2.0), Err(ArrayError::Domain(_))));
        assert!(matches!(transmit_steering(&p, 0.0, -1.0), Err(ArrayError::Domain(_))));
        assert!(transmit_steering(&p, PI / 2.0, 0.0).is_ok());
    }

    #[test]
    fn broadside_receive_is_all_ones() {
        let b = receive_steering(&RadarParams::default(), 0.0).unwrap();
        assert_eq!(b.kind, SteeringKind::Receive);
        for k in 0..16 {
            assert_abs_diff_eq!(b.values[k].re, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(b.values[k].im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn range_for_transmit_frequency_inverts_spatial_frequency() {
        let p = RadarParams::default();
        for (f, near) in [(0.135, 43e3), (-0.15, 64e3), (-0.39, 66e3), (0.42, 84e3)] {
            let r = p.range_for_transmit_frequency(f, 0.0, near).unwrap();
            assert!((r - near).abs() < 80.0);
            let got = spatial_frequencies(&p, 0.0, r).unwrap().transmit;
            assert_abs_diff_eq!(got, f, epsilon = 1e-9);
        }
        assert!(p.traditional().range_for_transmit_frequency(0.1, 0.0, 1e3).is_err());
    }
}
