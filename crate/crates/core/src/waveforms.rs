//! Parametric attack signals as evaluable continuous-time functions.
//!
//! Four signal shapes cover the injection arsenal: a constant tone, a
//! linearly decaying tone (net orientation bias per decay window), a
//! sinusoidally swept tone (gradual frequency approach), and a sinusoidal
//! coil current (IPD jitter). All are pure value objects; evaluation is
//! closed-form with no accumulated state.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::InvalidParameter { name, value });
    }
    Ok(())
}

fn require_non_negative(name: &'static str, value: f64) -> Result<()> {
    if !(value >= 0.0) || !value.is_finite() {
        return Err(Error::InvalidParameter { name, value });
    }
    Ok(())
}

/// A parametric continuous-time attack signal.
///
/// Construct through [`Waveform::constant_tone`], [`Waveform::decaying_tone`],
/// [`Waveform::swept_tone`] or [`Waveform::sinusoid_current`]; the
/// constructors enforce the parameter domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(try_from = "raw::RawWaveform")]
pub enum Waveform {
    /// `c * sin(2*pi*f_b*t + phase)` for all t >= 0.
    ConstantTone {
        amplitude: f64,
        base_frequency: f64,
        phase: f64,
    },
    /// `(-c/T*t + c) * sin(2*pi*f_b*t + phase)` on [0, T], zero afterward.
    DecayingTone {
        amplitude: f64,
        decay_period: f64,
        base_frequency: f64,
        phase: f64,
    },
    /// `c * cos(2*pi*F(t) + phase)` where the instantaneous frequency
    /// `f(t) = (f_a - f_0)*(sin(2*pi*t/T)+1)/2 + f_0` is integrated in
    /// closed form to get `F(t)`.
    SweptTone {
        amplitude: f64,
        start_frequency: f64,
        target_frequency: f64,
        sweep_period: f64,
        phase: f64,
    },
    /// `A * sin(2*pi*f_I*t + phase)`, amperes.
    SinusoidCurrent {
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
}

impl Waveform {
    pub fn constant_tone(amplitude: f64, base_frequency: f64) -> Result<Self> {
        require_non_negative("amplitude", amplitude)?;
        require_positive("base_frequency", base_frequency)?;
        Ok(Waveform::ConstantTone {
            amplitude,
            base_frequency,
            phase: 0.0,
        })
    }

    pub fn decaying_tone(amplitude: f64, decay_period: f64, base_frequency: f64) -> Result<Self> {
        require_non_negative("amplitude", amplitude)?;
        require_positive("decay_period", decay_period)?;
        require_positive("base_frequency", base_frequency)?;
        Ok(Waveform::DecayingTone {
            amplitude,
            decay_period,
            base_frequency,
            phase: 0.0,
        })
    }

    pub fn swept_tone(
        amplitude: f64,
        start_frequency: f64,
        target_frequency: f64,
        sweep_period: f64,
    ) -> Result<Self> {
        require_non_negative("amplitude", amplitude)?;
        require_positive("start_frequency", start_frequency)?;
        require_positive("target_frequency", target_frequency)?;
        require_positive("sweep_period", sweep_period)?;
        Ok(Waveform::SweptTone {
            amplitude,
            start_frequency,
            target_frequency,
            sweep_period,
            phase: 0.0,
        })
    }

    pub fn sinusoid_current(amplitude: f64, frequency: f64) -> Result<Self> {
        require_non_negative("amplitude", amplitude)?;
        require_positive("frequency", frequency)?;
        Ok(Waveform::SinusoidCurrent {
            amplitude,
            frequency,
            phase: 0.0,
        })
    }

    /// Same waveform with an explicit initial phase in radians.
    pub fn with_phase(mut self, new_phase: f64) -> Self {
        match &mut self {
            Waveform::ConstantTone { phase, .. }
            | Waveform::DecayingTone { phase, .. }
            | Waveform::SweptTone { phase, .. }
            | Waveform::SinusoidCurrent { phase, .. } => *phase = new_phase,
        }
        self
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            Waveform::ConstantTone { amplitude, .. }
            | Waveform::DecayingTone { amplitude, .. }
            | Waveform::SweptTone { amplitude, .. }
            | Waveform::SinusoidCurrent { amplitude, .. } => amplitude,
        }
    }

    /// Carrier frequency: f_b for tones, f_0 for the swept tone, f_I for
    /// the coil current.
    pub fn base_frequency(&self) -> f64 {
        match *self {
            Waveform::ConstantTone { base_frequency, .. }
            | Waveform::DecayingTone { base_frequency, .. } => base_frequency,
            Waveform::SweptTone {
                start_frequency, ..
            } => start_frequency,
            Waveform::SinusoidCurrent { frequency, .. } => frequency,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Waveform::ConstantTone { .. } => "constant_tone",
            Waveform::DecayingTone { .. } => "decaying_tone",
            Waveform::SweptTone { .. } => "swept_tone",
            Waveform::SinusoidCurrent { .. } => "sinusoid_current",
        }
    }

    /// True for the tone kinds that can couple acoustically into an IMU.
    pub fn is_acoustic(&self) -> bool {
        !matches!(self, Waveform::SinusoidCurrent { .. })
    }

    /// Amplitude envelope at time `t` (carrier stripped).
    pub fn envelope(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match *self {
            Waveform::ConstantTone { amplitude, .. }
            | Waveform::SweptTone { amplitude, .. }
            | Waveform::SinusoidCurrent { amplitude, .. } => amplitude,
            Waveform::DecayingTone {
                amplitude,
                decay_period,
                ..
            } => {
                if t > decay_period {
                    0.0
                } else {
                    amplitude * (1.0 - t / decay_period)
                }
            }
        }
    }

    /// Instantaneous frequency in Hz at time `t`.
    pub fn instantaneous_frequency(&self, t: f64) -> f64 {
        match *self {
            Waveform::SweptTone {
                start_frequency,
                target_frequency,
                sweep_period,
                ..
            } => {
                (target_frequency - start_frequency) * ((2.0 * PI * t / sweep_period).sin() + 1.0)
                    / 2.0
                    + start_frequency
            }
            _ => self.base_frequency(),
        }
    }

    /// Signal value at time `t`. Zero outside the active window.
    pub fn value(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match *self {
            Waveform::ConstantTone {
                amplitude,
                base_frequency,
                phase,
            } => amplitude * (2.0 * PI * base_frequency * t + phase).sin(),
            Waveform::DecayingTone {
                base_frequency,
                phase,
                ..
            } => self.envelope(t) * (2.0 * PI * base_frequency * t + phase).sin(),
            Waveform::SweptTone {
                amplitude,
                start_frequency,
                target_frequency,
                sweep_period,
                phase,
            } => {
                // F(t) = int_0^t f(tau) dtau, analytic for the raised sine:
                //   (f_a-f_0)/2 * [ (T/2pi)(1 - cos(2pi t/T)) + t ] + f_0 t
                let df = target_frequency - start_frequency;
                let cyc =
                    df / 2.0 * (sweep_period / (2.0 * PI) * (1.0 - (2.0 * PI * t / sweep_period).cos()) + t)
                        + start_frequency * t;
                amplitude * (2.0 * PI * cyc + phase).cos()
            }
            Waveform::SinusoidCurrent {
                amplitude,
                frequency,
                phase,
            } => amplitude * (2.0 * PI * frequency * t + phase).sin(),
        }
    }

    /// Value of the waveform restarted every `period` seconds.
    pub fn value_repeating(&self, t: f64, period: f64) -> f64 {
        if t < 0.0 || period <= 0.0 {
            return self.value(t);
        }
        self.value(t.rem_euclid(period))
    }
}

mod raw {
    //! Mirror structure so serde-deserialized waveforms pass through the
    //! same domain checks as the constructors.
    use serde::Deserialize;

    use super::Waveform;
    use crate::error::Error;

    #[derive(Deserialize)]
    #[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
    pub enum RawWaveform {
        ConstantTone {
            amplitude: f64,
            base_frequency: f64,
            #[serde(default)]
            phase: f64,
        },
        DecayingTone {
            amplitude: f64,
            decay_period: f64,
            base_frequency: f64,
            #[serde(default)]
            phase: f64,
        },
        SweptTone {
            amplitude: f64,
            start_frequency: f64,
            target_frequency: f64,
            sweep_period: f64,
            #[serde(default)]
            phase: f64,
        },
        SinusoidCurrent {
            amplitude: f64,
            frequency: f64,
            #[serde(default)]
            phase: f64,
        },
    }

    impl TryFrom<RawWaveform> for Waveform {
        type Error = Error;

        fn try_from(raw: RawWaveform) -> Result<Self, Error> {
            match raw {
                RawWaveform::ConstantTone {
                    amplitude,
                    base_frequency,
                    phase,
                } => Waveform::constant_tone(amplitude, base_frequency).map(|w| w.with_phase(phase)),
                RawWaveform::DecayingTone {
                    amplitude,
                    decay_period,
                    base_frequency,
                    phase,
                } => Waveform::decaying_tone(amplitude, decay_period, base_frequency)
                    .map(|w| w.with_phase(phase)),
                RawWaveform::SweptTone {
                    amplitude,
                    start_frequency,
                    target_frequency,
                    sweep_period,
                    phase,
                } => Waveform::swept_tone(amplitude, start_frequency, target_frequency, sweep_period)
                    .map(|w| w.with_phase(phase)),
                RawWaveform::SinusoidCurrent {
                    amplitude,
                    frequency,
                    phase,
                } => Waveform::sinusoid_current(amplitude, frequency).map(|w| w.with_phase(phase)),
            }
        }
    }
}
