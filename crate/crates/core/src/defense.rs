//! Countermeasures: narrowband spectral detection on sensor streams,
//! cross-sensor correlation checks, and the vibration-feedback law.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::SampleSeries;

/// Detector parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Sliding analysis window, samples (>= 16).
    pub window: usize,
    /// Narrowband peak threshold over the median bin, dB.
    pub snr_threshold_db: f64,
    /// Pearson correlation floor for the cross-sensor check.
    pub corr_threshold: f64,
    /// Half-width of the DC exclusion band for legitimate motion, Hz.
    pub exclusion_band_hz: f64,
    /// Lag search radius for the correlation check, samples. Zero keeps
    /// the plain zero-lag comparison; a positive radius takes the best
    /// correlation over integer lags in `[-corr_max_lag, corr_max_lag]`,
    /// tolerating a fixed pipeline delay between the two streams.
    pub corr_max_lag: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            window: 512,
            snr_threshold_db: 10.0,
            corr_threshold: 0.5,
            exclusion_band_hz: 2.0,
            corr_max_lag: 0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 16 {
            return Err(Error::InvalidParameter {
                name: "window",
                value: self.window as f64,
            });
        }
        for (name, v) in [
            ("snr_threshold_db", self.snr_threshold_db),
            ("corr_threshold", self.corr_threshold),
            ("exclusion_band_hz", self.exclusion_band_hz),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter { name, value: v });
            }
        }
        Ok(())
    }
}

/// What a detector flagged and how strongly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alarm {
    /// Window-start time, seconds.
    pub t: f64,
    pub kind: AlarmKind,
    /// NarrowbandPeak: dB over the median bin. CorrelationBreak: shortfall
    /// below the correlation floor.
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlarmKind {
    NarrowbandPeak,
    CorrelationBreak,
}

impl Alarm {
    /// One JSON line, the alarm wire format.
    pub fn to_json_line(&self) -> String {
        let kind = match self.kind {
            AlarmKind::NarrowbandPeak => "narrowband_peak",
            AlarmKind::CorrelationBreak => "correlation_break",
        };
        format!(r#"{{"t":{:.9},"kind":"{kind}","score":{:.9}}}"#, self.t, self.score)
    }
}

/// Welch power estimate of one detection window: the window is split into
/// eight half-overlapping Hann segments whose periodograms are averaged.
/// Averaging collapses the heavy tail of single-periodogram bins, which is
/// what keeps the median-based threshold quiet on noise.
fn welch_power(samples: &[f64]) -> (Vec<f64>, usize) {
    let seg_len = (samples.len() / 4).max(16);
    let hop = (seg_len / 2).max(1);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(seg_len);
    let hann: Vec<f64> = (0..seg_len)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / seg_len as f64).cos()))
        .collect();
    let mut acc = vec![0.0f64; seg_len / 2 + 1];
    let mut count = 0usize;
    let mut start = 0usize;
    while start + seg_len <= samples.len() {
        let seg = &samples[start..start + seg_len];
        let mean = seg.iter().sum::<f64>() / seg_len as f64;
        let mut buf: Vec<Complex64> = seg
            .iter()
            .zip(&hann)
            .map(|(&v, &w)| Complex64::new((v - mean) * w, 0.0))
            .collect();
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(buf.iter().take(seg_len / 2 + 1)) {
            *a += c.norm_sqr();
        }
        count += 1;
        start += hop;
    }
    if count > 0 {
        for a in &mut acc {
            *a /= count as f64;
        }
    }
    (acc, seg_len)
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = values.len() / 2;
    if values.len().is_multiple_of(2) {
        (values[mid - 1] + values[mid]) / 2.0
    } else {
        values[mid]
    }
}

/// Scans the series with half-overlapping windows and raises a
/// [`AlarmKind::NarrowbandPeak`] alarm wherever the strongest bin outside
/// the DC exclusion band exceeds the window's median bin power by the
/// configured dB threshold.
///
/// The stream is first-differenced before analysis: legitimate motion is
/// a low-frequency random walk whose differenced spectrum is flat, while
/// an injected sinusoid stays a sinusoid. Differencing also removes any
/// constant offset, so the detector is DC-invariant by construction.
pub fn spectral_detect(s: &SampleSeries, cfg: &DetectorConfig) -> Result<Vec<Alarm>> {
    cfg.validate()?;
    if s.len() < cfg.window {
        return Err(Error::SeriesTooShort {
            len: s.len(),
            window: cfg.window,
        });
    }
    let diff: Vec<f64> = s.values.windows(2).map(|w| w[1] - w[0]).collect();

    let mut alarms = Vec::new();
    let hop = (cfg.window / 2).max(1);
    let mut start = 0usize;
    while start + cfg.window <= diff.len() + 1 {
        let end = (start + cfg.window).min(diff.len());
        if end - start < cfg.window / 2 {
            break;
        }
        let (power, seg_len) = welch_power(&diff[start..end]);
        let bin_hz = s.sample_rate() / seg_len as f64;
        let first_bin = (cfg.exclusion_band_hz / bin_hz).floor() as usize + 1;
        if first_bin < power.len() {
            let analyzed = &power[first_bin..];
            let mut sorted: Vec<f64> = analyzed.to_vec();
            let med = median(&mut sorted);
            let peak = analyzed.iter().cloned().fold(0.0f64, f64::max);
            if med > 0.0 && peak > 0.0 {
                let snr_db = 10.0 * (peak / med).log10();
                if snr_db > cfg.snr_threshold_db {
                    alarms.push(Alarm {
                        t: s.time_at(start),
                        kind: AlarmKind::NarrowbandPeak,
                        score: snr_db,
                    });
                }
            }
        }
        start += hop;
    }
    Ok(alarms)
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        return None; // zero-variance window: a still user is not an attack
    }
    Some(cov / (va * vb).sqrt())
}

/// Best Pearson correlation over integer lags within the radius; `None`
/// when every tried alignment has a zero-variance side.
fn best_lagged_pearson(a: &[f64], b: &[f64], max_lag: usize) -> Option<f64> {
    let n = a.len();
    let mut best: Option<f64> = None;
    for lag in -(max_lag as isize)..=(max_lag as isize) {
        let (xa, xb) = if lag >= 0 {
            let l = lag as usize;
            (&a[l..], &b[..n - l])
        } else {
            let l = (-lag) as usize;
            (&a[..n - l], &b[l..])
        };
        if let Some(r) = pearson(xa, xb) {
            best = Some(best.map_or(r, |m: f64| m.max(r)));
        }
    }
    best
}

/// Per-window Pearson correlation between the inertial rate and the
/// camera-derived flow rate; windows whose correlation drops below the
/// floor raise a [`AlarmKind::CorrelationBreak`] alarm. Zero-lag by
/// default, with an optional configurable lag search; zero-variance
/// windows are skipped.
pub fn correlation_check(
    imu_rate: &SampleSeries,
    flow_rate: &SampleSeries,
    cfg: &DetectorConfig,
) -> Result<Vec<Alarm>> {
    cfg.validate()?;
    imu_rate.check_aligned(flow_rate)?;
    if imu_rate.len() < cfg.window {
        return Err(Error::SeriesTooShort {
            len: imu_rate.len(),
            window: cfg.window,
        });
    }
    let mut alarms = Vec::new();
    let hop = (cfg.window / 2).max(1);
    let mut start = 0usize;
    while start + cfg.window <= imu_rate.len() {
        let a = &imu_rate.values[start..start + cfg.window];
        let b = &flow_rate.values[start..start + cfg.window];
        if let Some(r) = best_lagged_pearson(a, b, cfg.corr_max_lag.min(cfg.window / 2)) {
            if r < cfg.corr_threshold {
                alarms.push(Alarm {
                    t: imu_rate.time_at(start),
                    kind: AlarmKind::CorrelationBreak,
                    score: cfg.corr_threshold - r,
                });
            }
        }
        start += hop;
    }
    Ok(alarms)
}

/// Vibration-feedback amplitude `(1 - e^{-|v_z|}) * V_max`: silent at
/// rest, saturating toward `V_max` as the vertical rate grows.
pub fn vibration_feedback(v_z: f64, v_max: f64) -> f64 {
    (1.0 - (-v_z.abs()).exp()) * v_max
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::series::Channel;

    fn series(values: Vec<f64>, fs: f64) -> SampleSeries {
        SampleSeries::new(0.0, 1.0 / fs, values, Channel::GyroZ).unwrap()
    }

    /// Random walk plus optional tone; the tone amplitude is set from the
    /// whitened-domain SNR so the detector's operating point is explicit.
    fn motion_with_tone(seed: u64, fs: f64, n: usize, tone_hz: f64, snr_db: f64) -> SampleSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let step_sigma = 0.02;
        // differenced noise variance is step_sigma^2; pick the raw tone
        // amplitude whose differenced power hits the requested SNR
        let diff_gain = 2.0 * (PI * tone_hz / fs).sin();
        let amp = if snr_db > -1e9 {
            (2.0 * 10f64.powf(snr_db / 10.0) * step_sigma * step_sigma).sqrt() / diff_gain
        } else {
            0.0
        };
        let mut walk = 0.0;
        let values = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                walk += step_sigma * normal(&mut rng);
                walk + amp * (2.0 * PI * tone_hz * t).sin()
            })
            .collect();
        series(values, fs)
    }

    fn normal(rng: &mut ChaCha8Rng) -> f64 {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    #[test]
    fn strong_tone_in_noise_is_detected() {
        let cfg = DetectorConfig::default();
        let s = motion_with_tone(1, 100.0, 2000, 21.3, 20.0);
        let alarms = spectral_detect(&s, &cfg).unwrap();
        assert!(!alarms.is_empty());
        assert!(alarms.iter().all(|a| a.kind == AlarmKind::NarrowbandPeak));
    }

    #[test]
    fn tone_at_threshold_snr_detected_across_seeds() {
        let cfg = DetectorConfig::default();
        let mut hits = 0;
        for seed in 0..50 {
            let s = motion_with_tone(seed, 100.0, 2000, 21.3, 10.0);
            if !spectral_detect(&s, &cfg).unwrap().is_empty() {
                hits += 1;
            }
        }
        assert!(hits >= 48, "only {hits}/50 detections at 10 dB");
    }

    #[test]
    fn clean_random_walk_rarely_alarms() {
        let cfg = DetectorConfig::default();
        let mut false_alarms = 0;
        for seed in 1000..1100 {
            let s = motion_with_tone(seed, 100.0, 2000, 21.3, f64::NEG_INFINITY);
            if !spectral_detect(&s, &cfg).unwrap().is_empty() {
                false_alarms += 1;
            }
        }
        assert!(false_alarms <= 5, "{false_alarms}/100 false alarms");
    }

    #[test]
    fn all_zero_series_is_silent() {
        let cfg = DetectorConfig::default();
        let s = series(vec![0.0; 2000], 100.0);
        assert!(spectral_detect(&s, &cfg).unwrap().is_empty());
    }

    #[test]
    fn constant_offset_is_invariant() {
        let cfg = DetectorConfig::default();
        let a = motion_with_tone(3, 100.0, 2000, 21.3, 20.0);
        let b = series(a.values.iter().map(|v| v + 100.0).collect(), 100.0);
        let alarms_a = spectral_detect(&a, &cfg).unwrap();
        let alarms_b = spectral_detect(&b, &cfg).unwrap();
        assert_eq!(alarms_a.len(), alarms_b.len());
        for (x, y) in alarms_a.iter().zip(&alarms_b) {
            assert!((x.score - y.score).abs() < 1e-9);
        }
    }

    #[test]
    fn short_series_is_length_error() {
        let cfg = DetectorConfig::default();
        let s = series(vec![0.0; 100], 100.0);
        assert!(matches!(
            spectral_detect(&s, &cfg),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn identical_streams_never_break_correlation() {
        let cfg = DetectorConfig::default();
        let s = motion_with_tone(5, 100.0, 2000, 5.0, 10.0);
        let alarms = correlation_check(&s, &s, &cfg).unwrap();
        assert!(alarms.is_empty());
    }

    #[test]
    fn inverted_stream_breaks_every_window() {
        let cfg = DetectorConfig::default();
        let s = motion_with_tone(6, 100.0, 2000, 5.0, 10.0);
        let neg = series(s.values.iter().map(|v| -v).collect(), 100.0);
        let alarms = correlation_check(&s, &neg, &cfg).unwrap();
        let expected_windows = (s.len() - cfg.window) / (cfg.window / 2) + 1;
        assert_eq!(alarms.len(), expected_windows);
    }

    #[test]
    fn still_user_is_skipped_not_alarmed() {
        let cfg = DetectorConfig::default();
        let a = series(vec![1.0; 1024], 100.0);
        let b = series(vec![2.0; 1024], 100.0);
        assert!(correlation_check(&a, &b, &cfg).unwrap().is_empty());
    }

    #[test]
    fn injected_tone_breaks_correlation_in_active_windows() {
        let cfg = DetectorConfig::default();
        let fs = 100.0;
        let n = 3000;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let motion: Vec<f64> = {
            let mut walk = 0.0;
            (0..n)
                .map(|_| {
                    walk += 0.02 * normal(&mut rng);
                    walk
                })
                .collect()
        };
        // strong tone over the middle third only
        let imu: Vec<f64> = motion
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let t = i as f64 / fs;
                let active = (1000..2000).contains(&i);
                m + if active {
                    3.0 * (2.0 * PI * 21.3 * t).sin()
                } else {
                    0.0
                }
            })
            .collect();
        let imu = series(imu, fs);
        let flow = series(motion, fs);
        let alarms = correlation_check(&imu, &flow, &cfg).unwrap();
        assert!(!alarms.is_empty());
        for a in &alarms {
            // all breaks overlap the injection interval [10 s, 20 s)
            assert!(a.t + cfg.window as f64 / fs > 10.0 && a.t < 20.0, "break at {}", a.t);
        }
    }

    #[test]
    fn lag_search_tolerates_pipeline_delay() {
        let fs = 100.0;
        let n = 2048;
        let delay = 5usize;
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let motion: Vec<f64> = {
            let mut walk = 0.0;
            (0..n + delay)
                .map(|_| {
                    walk += 0.02 * normal(&mut rng);
                    walk
                })
                .collect()
        };
        let imu = series(motion[delay..].to_vec(), fs);
        let flow = series(motion[..n].to_vec(), fs);
        // zero-lag sees a decorrelated pair, the lag search re-aligns it
        let strict = DetectorConfig {
            corr_threshold: 0.9,
            ..DetectorConfig::default()
        };
        let lagged = DetectorConfig {
            corr_max_lag: 8,
            ..strict.clone()
        };
        let zero_lag_alarms = correlation_check(&imu, &flow, &strict).unwrap();
        let lagged_alarms = correlation_check(&imu, &flow, &lagged).unwrap();
        assert!(lagged_alarms.len() < zero_lag_alarms.len() || zero_lag_alarms.is_empty());
        assert!(lagged_alarms.is_empty());
    }

    #[test]
    fn vibration_law_analytic_points() {
        assert_eq!(vibration_feedback(0.0, 4.0), 0.0);
        assert!((vibration_feedback(2f64.ln(), 4.0) - 2.0).abs() < 1e-12);
        assert!(vibration_feedback(5.0, 4.0) > 0.99 * 4.0);
    }

    #[test]
    fn alarm_json_line_shape() {
        let a = Alarm {
            t: 1.5,
            kind: AlarmKind::NarrowbandPeak,
            score: 12.25,
        };
        let line = a.to_json_line();
        assert!(line.starts_with(r#"{"t":1.5"#));
        assert!(line.contains(r#""kind":"narrowband_peak""#));
    }

    proptest! {
        // vibration feedback: even, monotone in |v_z|, bounded by V_max
        #[test]
        fn vibration_properties(v in -20.0f64..20.0, dv in 0.001f64..5.0, vmax in 0.0f64..10.0) {
            let f = vibration_feedback(v, vmax);
            prop_assert!((f - vibration_feedback(-v, vmax)).abs() < 1e-12);
            prop_assert!(f >= 0.0 && f <= vmax);
            let bigger = vibration_feedback(v.abs() + dv, vmax);
            if vmax > 0.0 {
                prop_assert!(bigger > f - 1e-15);
            }
        }
    }
}
