//! Time-domain check of the transmit steering phase.
//!
//! Each transmit element's return is simulated as a baseband LFM pulse,
//! de-ramped with `exp(j 2 pi mu t (m-1) dt)` and matched filtered with the
//! undelayed chirp. The phase of the filter peak across elements should follow
//! the transmit steering vector.

use std::f64::consts::PI;

use faer::c64;
use stca_array::{spatial_frequencies, wrap_phase, RadarParams, SPEED_OF_LIGHT};

use crate::{Result, SceneError};

/// How the per-element transmit delay enters the received pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WaveformModel {
    /// Envelope at the common round-trip delay; the element delay appears only
    /// as the linear phase term `exp(-j 2 pi mu (t - 2 tau0) (m-1) dt)`.
    #[default]
    Narrowband,
    /// The chirp is physically delayed by `(m-1) dt`. This leaves a
    /// range-independent residual `pi mu ((m-1) dt)^2` per element.
    DelayedChirp,
}

#[derive(Debug, Clone)]
pub struct WaveformCheck {
    /// Measured peak phase of each element relative to element 0.
    pub measured: Vec<f64>,
    /// Phase predicted by the transmit steering vector.
    pub expected: Vec<f64>,
    /// `measured - expected`, wrapped to `(-pi, pi]`.
    pub residuals: Vec<f64>,
    pub max_abs_residual: f64,
}

const OVERSAMPLE: usize = 16;

pub fn validate_matched_filter(
    params: &RadarParams,
    theta: f64,
    range: f64,
    model: WaveformModel,
) -> Result<WaveformCheck> {
    params.validate()?;
    let freqs = spatial_frequencies(params, theta, range)?;
    let m_count = params.num_tx;
    let tp = params.pulse_width;
    let dt = params.transmit_delay;
    let mu = params.chirp_rate();
    let max_delay = (m_count - 1) as f64 * dt;
    if model == WaveformModel::DelayedChirp && max_delay >= tp {
        return Err(SceneError::Config(format!(
            "total transmit delay {max_delay:e} s must be shorter than the pulse width"
        )));
    }
    let ts = 1.0 / (params.sample_rate * OVERSAMPLE as f64);
    let taps = (tp / ts).round() as usize;
    let tau2 = 2.0 * range / SPEED_OF_LIGHT;
    let first = ((tau2 - tp) / ts).floor() as i64;
    let len = ((3.0 * tp + max_delay) / ts).ceil() as usize + taps;

    let chirp = |t: f64| -> c64 {
        if (0.0..tp).contains(&t) {
            c64::new(0.0, PI * mu * t * t).exp()
        } else {
            c64::new(0.0, 0.0)
        }
    };
    let reference: Vec<c64> = (0..taps).map(|i| chirp(i as f64 * ts).conj()).collect();
    let carrier = {
        let cycles = params.carrier_frequency * tau2;
        c64::new(0.0, -2.0 * PI * (cycles - cycles.floor())).exp()
    };
    let angle_step = 2.0 * PI * freqs.receive;

    let mut outputs: Vec<Vec<c64>> = Vec::with_capacity(m_count);
    for m in 0..m_count {
        let tm = m as f64 * dt;
        let angle = c64::new(0.0, angle_step * m as f64).exp();
        let samples: Vec<c64> = (0..len)
            .map(|k| {
                let t = (first + k as i64) as f64 * ts;
                let u = t - tau2;
                let rx = match model {
                    WaveformModel::Narrowband => chirp(u) * c64::new(0.0, -2.0 * PI * mu * u * tm).exp(),
                    WaveformModel::DelayedChirp => chirp(u - tm),
                };
                rx * carrier * angle * c64::new(0.0, 2.0 * PI * mu * t * tm).exp()
            })
            .collect();
        let filtered = (0..len - taps)
            .map(|lag| samples[lag..lag + taps].iter().zip(&reference).map(|(x, h)| x * h).sum())
            .collect();
        outputs.push(filtered);
    }
    // All channels are sampled at the same instant, the peak of their summed power.
    let power = |lag: usize| outputs.iter().map(|o| o[lag].norm_sqr()).sum::<f64>();
    let peak = (0..len - taps)
        .max_by(|&a, &b| power(a).total_cmp(&power(b)))
        .filter(|&lag| power(lag) > 0.0)
        .ok_or_else(|| SceneError::Config("matched filter produced no output".into()))?;
    let peaks: Vec<c64> = outputs.iter().map(|o| o[peak]).collect();

    let measured: Vec<f64> = peaks.iter().map(|z| (z * peaks[0].conj()).arg()).collect();
    let expected: Vec<f64> = (0..m_count).map(|m| wrap_phase(2.0 * PI * freqs.transmit * m as f64)).collect();
    let residuals: Vec<f64> = measured.iter().zip(&expected).map(|(a, b)| wrap_phase(a - b)).collect();
    let max_abs_residual = residuals.iter().fold(0.0f64, |acc, r| acc.max(r.abs()));
    Ok(WaveformCheck { measured, expected, residuals, max_abs_residual })
}
