//! Uniformly sampled measurement streams and their CSV form.

use std::io::{BufRead, Write};

use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which sensor (or derived) quantity a series carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    GyroX,
    GyroY,
    GyroZ,
    AccelX,
    AccelY,
    AccelZ,
    Hall,
    FlowH,
    FlowV,
    Disparity,
}

impl Channel {
    /// Index 0..2 for gyro channels, used to pick the matching bias component.
    pub fn gyro_axis(self) -> Option<usize> {
        match self {
            Channel::GyroX => Some(0),
            Channel::GyroY => Some(1),
            Channel::GyroZ => Some(2),
            _ => None,
        }
    }

    pub fn accel_axis(self) -> Option<usize> {
        match self {
            Channel::AccelX => Some(0),
            Channel::AccelY => Some(1),
            Channel::AccelZ => Some(2),
            _ => None,
        }
    }
}

/// A uniformly sampled scalar stream starting at `t0` with spacing `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSeries {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
    pub channel: Channel,
}

impl SampleSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>, channel: Channel) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: dt,
            });
        }
        if values.is_empty() {
            return Err(Error::ShapeMismatch { left: 0, right: 1 });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { name: "values" });
        }
        Ok(Self {
            t0,
            dt,
            values,
            channel,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.dt
    }

    /// Timestamp of sample `i`.
    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Checks that two series share time base and length.
    pub fn check_aligned(&self, other: &SampleSeries) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        if (self.t0 - other.t0).abs() > 1e-12 || (self.dt - other.dt).abs() > 1e-12 {
            return Err(Error::TimestampMismatch {
                index: 0,
                left: self.t0,
                right: other.t0,
            });
        }
        Ok(())
    }

    /// Writes `t,value` rows with 9 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{:.8e},{:.8e}", self.time_at(i), v)?;
        }
        Ok(())
    }

    /// Reads a `t,value` CSV written by [`SampleSeries::write_csv`].
    ///
    /// The time column is used to recover `t0` and `dt`; rows must be
    /// uniformly spaced.
    pub fn read_csv<R: BufRead>(r: R, channel: Channel) -> Result<Self> {
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if lineno == 0 || line.is_empty() {
                continue; // header
            }
            let mut parts = line.split(',');
            let t: f64 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Parse {
                    line: lineno + 1,
                    message: "missing time column".into(),
                })?;
            let v: f64 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Parse {
                    line: lineno + 1,
                    message: "missing value column".into(),
                })?;
            times.push(t);
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::Parse {
                line: 1,
                message: "empty series".into(),
            });
        }
        let t0 = times[0];
        let dt = if times.len() > 1 {
            (times[times.len() - 1] - t0) / (times.len() - 1) as f64
        } else {
            1.0
        };
        SampleSeries::new(t0, dt, values, channel)
    }

    /// Power spectrum of the series (one-sided, bin k maps to k/(n*dt) Hz).
    pub fn power_spectrum(&self) -> Vec<f64> {
        power_spectrum(&self.values)
    }

    /// Frequency of the strongest non-DC spectral bin, in Hz.
    pub fn dominant_frequency(&self) -> f64 {
        let spec = self.power_spectrum();
        let mut best = 1;
        for k in 1..spec.len() {
            if spec[k] > spec[best] {
                best = k;
            }
        }
        best as f64 / (self.len() as f64 * self.dt)
    }

    /// Width of one spectral bin in Hz.
    pub fn bin_width(&self) -> f64 {
        1.0 / (self.len() as f64 * self.dt)
    }
}

/// One-sided power spectrum |X_k|^2 for k = 0..n/2.
pub fn power_spectrum(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.process(&mut buf);
    buf.iter().take(n / 2 + 1).map(|c| c.norm_sqr()).collect()
}
