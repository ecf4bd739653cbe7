use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received a value outside its domain.
    #[error("parameter `{name}` out of domain: {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    /// An operation was handed a waveform kind it does not accept.
    #[error("waveform kind mismatch: expected {expected}, got {found}")]
    WaveformKind {
        expected: &'static str,
        found: &'static str,
    },

    /// A numeric input was NaN or infinite.
    #[error("non-finite value in `{name}`")]
    NonFinite { name: &'static str },

    /// Paired series or vectors disagree in length.
    #[error("shape mismatch: {left} vs {right} samples")]
    ShapeMismatch { left: usize, right: usize },

    /// Paired series disagree in time base.
    #[error("timestamp mismatch at index {index}: {left} vs {right}")]
    TimestampMismatch { index: usize, left: f64, right: f64 },

    /// A detector window is longer than the series it should scan.
    #[error("series too short: {len} samples, window needs {window}")]
    SeriesTooShort { len: usize, window: usize },

    /// Zero-phase alignment requires the observed frequency to be an
    /// integer multiple of the camera rate.
    #[error("cannot phase-align {f_obs} Hz to a {f_cam} Hz update clock")]
    AlignmentImpossible { f_obs: f64, f_cam: f64 },

    /// Inverse kinematics target lies outside the reachable disc.
    #[error("target at distance {distance} exceeds reach {max_reach}")]
    Unreachable { distance: f64, max_reach: f64 },

    /// Transfer-function evaluation hit a pole.
    #[error("transfer function pole at {frequency} Hz")]
    PoleEvaluation { frequency: f64 },

    /// Closed-loop composition produced an identically-zero denominator.
    #[error("singular loop: 1 - L(s)H_a(s) is identically zero")]
    SingularLoop,

    /// CSV or stream parse failure.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
