//! Dual-rate error-state fusion of an IMU prediction against an IR-camera
//! correction, with innovation-adaptive measurement trust, plus the
//! attack-frequency arithmetic that slips a resonant injection past the
//! correction.
//!
//! The filter is scalar: the attacked channel is one orientation angle.
//! The nominal state integrates the gyro at the IMU rate; at every camera
//! fix the filter compares the angle increment the IMU accumulated over
//! the frame against the increment the camera saw, and folds the gain-
//! weighted difference into a cumulative error estimate. The published
//! output is `nominal + error`.
//!
//! An injection whose aliased frequency is an exact multiple of the camera
//! rate is stroboscopically invisible: every camera frame covers a whole
//! number of cycles, so the per-frame increment it leaves is ~zero and the
//! corrections have nothing to remove. Detuning the carrier by a fraction
//! of a hertz then walks the sampled phase slowly, accumulating an angle
//! bias whose per-frame increment stays below the measurement noise.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rates and noise levels of the fused pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    /// IMU prediction rate, Hz.
    pub f_imu_hz: f64,
    /// Camera correction rate, Hz.
    pub f_cam_hz: f64,
    /// Believed per-fix measurement variance, rad^2.
    pub r_meas: f64,
    /// Process variance added per IMU step, rad^2.
    pub q_proc: f64,
    /// Number of updates in the innovation statistics window.
    pub adapt_window: usize,
    /// Actual camera fix noise sigma, rad (the simulated truth source).
    pub cam_noise_std: f64,
    /// Initial error-state variance, rad^2.
    pub init_p: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            f_imu_hz: 500.0,
            f_cam_hz: 30.0,
            r_meas: 1e-6,
            q_proc: 1e-8,
            adapt_window: 30,
            cam_noise_std: 1e-3,
            init_p: 1e-2,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_imu_hz > self.f_cam_hz && self.f_cam_hz > 0.0) {
            return Err(Error::InvalidParameter {
                name: "f_imu_hz",
                value: self.f_imu_hz,
            });
        }
        for (name, v) in [
            ("r_meas", self.r_meas),
            ("q_proc", self.q_proc),
            ("init_p", self.init_p),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter { name, value: v });
            }
        }
        if self.adapt_window == 0 {
            return Err(Error::InvalidParameter {
                name: "adapt_window",
                value: 0.0,
            });
        }
        Ok(())
    }
}

/// A frequency that rides the IMU sampling comb onto a camera-rate multiple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BypassFrequency {
    /// Carrier to emit, Hz.
    pub f_a: f64,
    /// IMU-rate multiplier (m >= 1).
    pub m: u64,
    /// Camera-rate multiplier (1 <= n <= n_max); the aliased output lands
    /// at `n * f_cam`.
    pub n: u64,
}

impl BypassFrequency {
    /// Aliased frequency the IMU stream will carry, Hz.
    pub fn observed_hz(&self, cfg: &FusionConfig) -> f64 {
        self.n as f64 * cfg.f_cam_hz
    }
}

/// Enumerates every `f_a = m*f_imu + n*f_cam` inside `[band_lo, band_hi]`
/// with integer `m >= 1` and `1 <= n <= n_max`, sorted by carrier.
///
/// An empty band yields an empty list, not an error.
pub fn select_bypass_frequencies(
    band_lo: f64,
    band_hi: f64,
    cfg: &FusionConfig,
    n_max: u64,
) -> Vec<BypassFrequency> {
    let mut out = Vec::new();
    if band_hi < band_lo {
        return out;
    }
    let m_hi = ((band_hi - cfg.f_cam_hz) / cfg.f_imu_hz).floor();
    if m_hi < 1.0 {
        return out;
    }
    for m in 1..=(m_hi as u64) {
        for n in 1..=n_max {
            let f_a = m as f64 * cfg.f_imu_hz + n as f64 * cfg.f_cam_hz;
            if f_a >= band_lo && f_a <= band_hi {
                out.push(BypassFrequency { f_a, m, n });
            }
        }
    }
    out.sort_by(|a, b| {
        a.f_a
            .partial_cmp(&b.f_a)
            .unwrap()
            .then(a.m.cmp(&b.m))
            .then(a.n.cmp(&b.n))
    });
    out
}

/// Phase that zeroes `sin(2 pi f_obs t + phase)` at every camera update
/// instant `t_k = k / f_cam`. Only exists when `f_obs` is an integer
/// multiple of the camera rate, in which case phase 0 works.
pub fn phase_align(f_obs: f64, cfg: &FusionConfig) -> Result<f64> {
    let ratio = f_obs / cfg.f_cam_hz;
    if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::AlignmentImpossible {
            f_obs,
            f_cam: cfg.f_cam_hz,
        });
    }
    Ok(0.0)
}

/// Scalar error-state filter state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EskfState {
    /// Nominal angle integrated from the gyro, rad.
    pub nominal: f64,
    /// Cumulative error estimate folded in by camera corrections, rad.
    pub error: f64,
    /// Error-state variance, rad^2.
    pub p: f64,
    /// Gain used at the most recent update.
    pub k_last: f64,
}

impl EskfState {
    /// Published output: nominal corrected by the estimated error.
    pub fn output(&self) -> f64 {
        self.nominal + self.error
    }
}

/// One `(t, K, residual)` row per camera update.
#[derive(Debug, Clone, Default)]
pub struct GainTrace {
    pub entries: Vec<GainSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSample {
    pub t: f64,
    pub k: f64,
    pub residual: f64,
}

impl GainTrace {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,K,residual")?;
        for e in &self.entries {
            writeln!(w, "{:.8e},{:.8e},{:.8e}", e.t, e.k, e.residual)?;
        }
        Ok(())
    }

    pub fn mean_abs_residual(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries.iter().map(|e| e.residual.abs()).sum::<f64>() / self.entries.len() as f64
    }
}

// Innovation-consistency dead band: the ratio of measured to expected
// innovation power decides whether measurement trust is held, revoked
// (persistently small residuals) or restored (large residuals mean the
// prediction is the unreliable side). The lower trip point sits well
// below the sampling fluctuation of a healthy filter's window statistic,
// so trust only decays when residual power genuinely collapses.
const TAU_LOW: f64 = 0.1;
const TAU_HIGH: f64 = 4.0;
const ADAPT_GAIN: f64 = 1.5;
const R_MIN_FACTOR: f64 = 1e-3;
const R_MAX_FACTOR: f64 = 1e6;

/// Scalar innovation-adaptive error-state filter.
///
/// Prediction accumulates gyro increments into the nominal angle and grows
/// `P` by the process noise; corrections consume the increment innovation
/// for one camera frame. The measurement variance estimate starts at the
/// configured belief and is re-scored against the innovation window: when
/// the window's power falls persistently below the model's expectation the
/// measurement is treated as uninformative and its variance is inflated,
/// which is what lowers K.
#[derive(Debug, Clone)]
pub struct EskfFilter {
    cfg: FusionConfig,
    state: EskfState,
    /// Adapted measurement variance for the increment residual.
    r_hat: f64,
    /// Nominal increment-residual variance (two fixes enter each increment).
    r_nominal: f64,
    window: VecDeque<f64>,
}

impl EskfFilter {
    pub fn new(cfg: FusionConfig) -> Result<Self> {
        cfg.validate()?;
        let r_nominal = 2.0 * cfg.r_meas;
        Ok(Self {
            state: EskfState {
                nominal: 0.0,
                error: 0.0,
                p: cfg.init_p,
                k_last: 0.0,
            },
            r_hat: r_nominal,
            r_nominal,
            window: VecDeque::with_capacity(cfg.adapt_window),
            cfg,
        })
    }

    pub fn state(&self) -> &EskfState {
        &self.state
    }

    /// Integrate one gyro sample over `dt`.
    pub fn predict(&mut self, gyro: f64, dt: f64) {
        self.predict_span(gyro, dt);
    }

    /// Integrate a zero-order-held gyro sample over an arbitrary span;
    /// the process noise scales with the covered fraction of an IMU step.
    pub fn predict_span(&mut self, gyro: f64, span: f64) {
        if span <= 0.0 {
            return;
        }
        self.state.nominal += gyro * span;
        self.state.p += self.cfg.q_proc * span * self.cfg.f_imu_hz;
    }

    /// Apply one camera correction with the given increment innovation.
    /// Returns the gain used.
    pub fn correct(&mut self, innovation: f64) -> f64 {
        let p_pre = self.state.p;
        let k = p_pre / (p_pre + self.r_hat);
        self.state.error += k * innovation;
        self.state.p = (1.0 - k) * p_pre;
        self.state.k_last = k;

        if self.window.len() == self.cfg.adapt_window {
            self.window.pop_front();
        }
        self.window.push_back(innovation * innovation);
        if self.window.len() == self.cfg.adapt_window {
            self.adapt(p_pre);
        }
        k
    }

    fn adapt(&mut self, p_pre: f64) {
        // expected innovation power under the current uncertainty; the
        // window mean would drag the initial-covariance transient along
        let expected = p_pre + self.r_nominal;
        let measured: f64 =
            self.window.iter().sum::<f64>() / self.window.len() as f64;
        let bar = TAU_LOW * expected;
        if self.window.iter().all(|r2| *r2 < bar) {
            // every residual in the window sits below the small-residual
            // bar: the measurement adds nothing, trust in it decays.
            // Healthy noise-level residuals never manage this, so the
            // trip is persistence, not a lucky quiet window.
            self.r_hat = (self.r_hat * ADAPT_GAIN).min(self.r_nominal * R_MAX_FACTOR);
        } else if measured > TAU_HIGH * expected {
            // prediction is the inconsistent side, lean on the measurement
            self.r_hat = (self.r_hat / ADAPT_GAIN).max(self.r_nominal * R_MIN_FACTOR);
        }
    }
}

/// Filter state snapshot taken just after a camera correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateSample {
    pub t: f64,
    pub nominal: f64,
    pub error: f64,
    pub output: f64,
}

/// Outcome of a fused run under injection.
#[derive(Debug, Clone)]
pub struct EskfRun {
    /// Filter output at the last camera correction, rad.
    pub final_bias: f64,
    pub trace: GainTrace,
    /// Post-correction state per update; the last row's output is the
    /// final bias.
    pub state_trace: Vec<StateSample>,
    pub final_state: EskfState,
}

impl EskfRun {
    /// CSV rows `t,nominal,error,output`.
    pub fn write_state_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,nominal,error,output")?;
        for s in &self.state_trace {
            writeln!(
                w,
                "{:.8e},{:.8e},{:.8e},{:.8e}",
                s.t, s.nominal, s.error, s.output
            )?;
        }
        Ok(())
    }
}

/// Runs the dual-rate filter for `duration` seconds against a stationary
/// truth with a sinusoidal rate injection at the observed (aliased)
/// frequency.
///
/// Camera fixes are unbiased truth plus white noise; all randomness comes
/// from `seed`. The reported bias is the filter output at the final
/// correction, which is the cadence the downstream pose consumer sees.
pub fn eskf_run(
    attack_observed_freq: f64,
    attack_amp: f64,
    phase: f64,
    duration: f64,
    cfg: &FusionConfig,
    seed: u64,
) -> Result<EskfRun> {
    if !(duration > 0.0) {
        return Err(Error::InvalidParameter {
            name: "duration",
            value: duration,
        });
    }
    let mut filter = EskfFilter::new(cfg.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw_fix = {
        let sigma = cfg.cam_noise_std;
        move |rng: &mut ChaCha8Rng| -> f64 {
            if sigma > 0.0 {
                // Box-Muller keeps the draw count per fix constant
                let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                sigma * (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
            } else {
                0.0
            }
        }
    };

    let dt = 1.0 / cfg.f_imu_hz;
    let steps = (duration * cfg.f_imu_hz).round() as usize;
    let gyro = |t: f64| attack_amp * (2.0 * PI * attack_observed_freq * t + phase).sin();

    let mut trace = GainTrace::default();
    let mut state_trace = Vec::new();
    let mut prev_fix = draw_fix(&mut rng);
    let mut prev_nominal = 0.0;
    let mut cam_count = 0usize;
    let mut final_bias = 0.0;

    // The prediction is interpolated to the exact camera timestamps: the
    // IMU sample covering a correction instant is integrated up to it,
    // the update applied, and the remainder of the step integrated after.
    for i in 0..steps {
        let t = i as f64 * dt;
        let t_next = (i + 1) as f64 * dt;
        let sample = gyro(t);
        let mut cursor = t;
        let t_cam = (cam_count + 1) as f64 / cfg.f_cam_hz;
        if t_cam <= t_next + 1e-12 {
            filter.predict_span(sample, t_cam - cursor);
            cursor = t_cam;
            cam_count += 1;
            let fix = draw_fix(&mut rng);
            // camera increment (truth is stationary) vs IMU increment
            let innovation = (fix - prev_fix) - (filter.state().nominal - prev_nominal);
            let k = filter.correct(innovation);
            trace.entries.push(GainSample {
                t: t_cam,
                k,
                residual: innovation,
            });
            let s = filter.state();
            state_trace.push(StateSample {
                t: t_cam,
                nominal: s.nominal,
                error: s.error,
                output: s.output(),
            });
            prev_fix = fix;
            prev_nominal = s.nominal;
            final_bias = s.output();
        }
        filter.predict_span(sample, t_next - cursor);
    }

    Ok(EskfRun {
        final_bias,
        trace,
        state_trace,
        final_state: *filter.state(),
    })
}
