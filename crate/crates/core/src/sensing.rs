//! Sensor transduction: acoustic resonance into gyroscope rate (with
//! sampling and aliasing) and magnetic coupling into Hall-sensor IPD bias.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Channel, SampleSeries};
use crate::waveforms::Waveform;

/// Physical description of the attacked IMU.
///
/// The resonance response is a hard rectangular band: full conversion gain
/// `k` inside `[f_r - f_w/2, f_r + f_w/2]`, zero outside. Bias vectors are
/// added to every sample the way Eq.-style preintegration expects to
/// subtract them back out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImuSpec {
    /// Sample rate f_s, Hz.
    pub sample_rate_hz: f64,
    /// Resonance center f_r, Hz.
    pub resonant_frequency_hz: f64,
    /// Resonance bandwidth f_w, Hz (band is f_r +/- f_w/2).
    pub resonance_bandwidth_hz: f64,
    /// Conversion factor k, rad/s of rate output per signal unit.
    pub conversion_gain: f64,
    /// Gyro bias, rad/s.
    pub gyro_bias: Vector3<f64>,
    /// Accelerometer bias, m/s^2.
    pub accel_bias: Vector3<f64>,
}

impl Default for ImuSpec {
    fn default() -> Self {
        Self {
            sample_rate_hz: 100.0,
            resonant_frequency_hz: 27_878.7,
            resonance_bandwidth_hz: 60.0,
            conversion_gain: 1.0,
            gyro_bias: Vector3::zeros(),
            accel_bias: Vector3::zeros(),
        }
    }
}

impl ImuSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sample_rate_hz",
                value: self.sample_rate_hz,
            });
        }
        if !(self.resonance_bandwidth_hz >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "resonance_bandwidth_hz",
                value: self.resonance_bandwidth_hz,
            });
        }
        if !(self.resonant_frequency_hz > 0.0) {
            return Err(Error::InvalidParameter {
                name: "resonant_frequency_hz",
                value: self.resonant_frequency_hz,
            });
        }
        Ok(())
    }

    /// Susceptible band `[f_r - f_w/2, f_r + f_w/2]`, edges inclusive.
    pub fn susceptible_band(&self) -> (f64, f64) {
        (
            self.resonant_frequency_hz - self.resonance_bandwidth_hz / 2.0,
            self.resonant_frequency_hz + self.resonance_bandwidth_hz / 2.0,
        )
    }

    pub fn in_band(&self, frequency_hz: f64) -> bool {
        let (lo, hi) = self.susceptible_band();
        frequency_hz >= lo && frequency_hz <= hi
    }
}

/// Hall-sensor/IPD coupling parameters, millimetres and amperes.
///
/// Defaults are calibrated from the single published operating point
/// (2 A of coil current biasing the IPD by its full 68 mm -> 58 mm travel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HallSpec {
    /// Coupling slope k, mm of IPD bias per ampere.
    pub k_ipd_mm_per_a: f64,
    /// Resting IPD, mm.
    pub ipd_rest_mm: f64,
    pub ipd_min_mm: f64,
    pub ipd_max_mm: f64,
}

impl Default for HallSpec {
    fn default() -> Self {
        Self {
            k_ipd_mm_per_a: 5.0,
            ipd_rest_mm: 68.0,
            ipd_min_mm: 58.0,
            ipd_max_mm: 68.0,
        }
    }
}

impl HallSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.ipd_min_mm <= self.ipd_rest_mm && self.ipd_rest_mm <= self.ipd_max_mm) {
            return Err(Error::InvalidParameter {
                name: "ipd_rest_mm",
                value: self.ipd_rest_mm,
            });
        }
        Ok(())
    }

    /// Linear bias before clamping, odd in the current.
    pub fn raw_bias_mm(&self, current_a: f64) -> f64 {
        self.k_ipd_mm_per_a * current_a
    }
}

/// Folds a carrier frequency through sampling at `f_s`.
///
/// Returns `(n, f_o)` with `n` the integer nearest `f_b/f_s` such that
/// `f_o = |f_b - n*f_s| <= f_s/2`. On the half-rate tie (e.g. 250 Hz at
/// 100 Hz sampling) the smaller `n` wins.
pub fn alias_frequency(f_b: f64, f_s: f64) -> (u64, f64) {
    debug_assert!(f_b > 0.0 && f_s > 0.0);
    let ratio = f_b / f_s;
    let lower = ratio.floor();
    let lower_err = (f_b - lower * f_s).abs();
    let upper_err = (f_b - (lower + 1.0) * f_s).abs();
    let n = if lower_err <= upper_err { lower } else { lower + 1.0 };
    (n as u64, (f_b - n * f_s).abs())
}

/// Continuous gyroscope rate induced by an acoustic waveform.
///
/// Out-of-band carriers induce exactly zero; in-band carriers map through
/// the conversion gain, so the induced rate is `k * w(t)`.
#[derive(Debug, Clone)]
pub struct InjectedRate {
    waveform: Waveform,
    gain: f64,
    repeat_every: Option<f64>,
}

impl InjectedRate {
    /// A rate function that is identically zero.
    pub fn silent() -> Self {
        InjectedRate {
            waveform: Waveform::ConstantTone {
                amplitude: 0.0,
                base_frequency: 1.0,
                phase: 0.0,
            },
            gain: 0.0,
            repeat_every: None,
        }
    }

    /// Restart the underlying waveform every `period` seconds.
    pub fn repeating(mut self, period: f64) -> Self {
        self.repeat_every = Some(period);
        self
    }

    pub fn rate(&self, t: f64) -> f64 {
        let v = match self.repeat_every {
            Some(p) => self.waveform.value_repeating(t, p),
            None => self.waveform.value(t),
        };
        self.gain * v
    }
}

/// Maps an acoustic tone onto the gyro-rate channel per the resonance
/// band and conversion gain of `spec`.
pub fn transduce_acoustic(w: &Waveform, spec: &ImuSpec) -> Result<InjectedRate> {
    if !w.is_acoustic() {
        return Err(Error::WaveformKind {
            expected: "acoustic tone",
            found: w.kind_name(),
        });
    }
    let gain = if spec.in_band(w.base_frequency()) {
        spec.conversion_gain
    } else {
        0.0
    };
    Ok(InjectedRate {
        waveform: w.clone(),
        gain,
        repeat_every: None,
    })
}

/// Samples `true_motion + injected + bias` at the IMU rate for `duration`
/// seconds. The injected carrier folds to the alias frequency predicted by
/// [`alias_frequency`] because sampling is ideal and instantaneous (no
/// anti-alias filter; the attack exploits exactly that).
pub fn sample_imu(
    true_motion: impl Fn(f64) -> f64,
    injected: &InjectedRate,
    spec: &ImuSpec,
    duration: f64,
    channel: Channel,
) -> Result<SampleSeries> {
    if !(duration > 0.0) {
        return Err(Error::InvalidParameter {
            name: "duration",
            value: duration,
        });
    }
    spec.validate()?;
    let dt = 1.0 / spec.sample_rate_hz;
    let n = ((duration * spec.sample_rate_hz).round() as usize).max(1);
    let bias = channel
        .gyro_axis()
        .map(|a| spec.gyro_bias[a])
        .or_else(|| channel.accel_axis().map(|a| spec.accel_bias[a]))
        .unwrap_or(0.0);
    let values = (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            true_motion(t) + injected.rate(t) + bias
        })
        .collect();
    SampleSeries::new(0.0, dt, values, channel)
}

/// IPD bias actually applied for a coil current, after the mechanism
/// clamps to its travel range. Millimetres.
pub fn hall_bias(current_a: f64, spec: &HallSpec) -> f64 {
    let raw = spec.raw_bias_mm(current_a);
    let ipd = (spec.ipd_rest_mm - raw).clamp(spec.ipd_min_mm, spec.ipd_max_mm);
    spec.ipd_rest_mm - ipd
}

/// Per-sample applied IPD bias for a sinusoidal coil current.
pub fn ipd_jitter_series(
    current: &Waveform,
    spec: &HallSpec,
    sample_rate_hz: f64,
    duration: f64,
) -> Result<SampleSeries> {
    if !matches!(current, Waveform::SinusoidCurrent { .. }) {
        return Err(Error::WaveformKind {
            expected: "sinusoid_current",
            found: current.kind_name(),
        });
    }
    if !(sample_rate_hz > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sample_rate_hz",
            value: sample_rate_hz,
        });
    }
    if !(duration > 0.0) {
        return Err(Error::InvalidParameter {
            name: "duration",
            value: duration,
        });
    }
    spec.validate()?;
    let dt = 1.0 / sample_rate_hz;
    let n = ((duration * sample_rate_hz).round() as usize).max(1);
    let values = (0..n)
        .map(|i| hall_bias(current.value(i as f64 * dt), spec))
        .collect();
    SampleSeries::new(0.0, dt, values, Channel::Hall)
}

/// Convenience: the observed fluctuation `omega_o * sin(2 pi f_o t)` that a
/// resonant tone leaves in the sampled gyro stream (Eq.-style fluctuation
/// used by the drift experiments).
pub fn observed_fluctuation(omega_o: f64, f_o: f64) -> impl Fn(f64) -> f64 {
    move |t| omega_o * (2.0 * PI * f_o * t).sin()
}
