use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the library. CLI exit codes are derived from the variant
/// via [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient samples: {available} directions cannot resolve {required} coefficients")]
    InsufficientSamples { available: usize, required: usize },

    #[error("rank-deficient basis: condition number {condition:.3e} exceeds {limit:.0e}")]
    RankDeficient { condition: f64, limit: f64 },

    #[error("singular system: rank {rank} < {required} with zero regularization")]
    SingularSystem { rank: usize, required: usize },

    #[error("malformed HRTF container: {0}")]
    MalformedContainer(String),

    #[error("sample rate mismatch: expected {expected} Hz, found {found} Hz")]
    SampleRateMismatch { expected: f64, found: f64 },

    #[error("degenerate grid: {count} directions (at least {min} required)")]
    GridDegenerate { count: usize, min: usize },

    #[error("HRTF vector has zero norm")]
    ZeroHrtfNorm,

    #[error("all spherical-harmonic coefficients are zero")]
    ZeroCoefficients,

    #[error("silent input: both channels are below -120 dBFS")]
    SilentInput,

    #[error("channel count mismatch: filters expect {expected}, input has {found}")]
    ChannelMismatch { expected: usize, found: usize },

    #[error("order mismatch: requested {requested}, available {available}")]
    OrderMismatch { requested: usize, available: usize },

    #[error("FFT size {0} is not a power of two")]
    InvalidFftSize(usize),

    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("at {freq_hz} Hz: {source}")]
    AtFrequency {
        freq_hz: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("WAV error: {0}")]
    Wav(#[from] hound::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json { path: path.into(), source }
    }

    pub fn at_frequency(self, freq_hz: f64) -> Self {
        Error::AtFrequency { freq_hz, source: Box::new(self) }
    }

    /// Process exit code: 2 configuration, 3 numeric failure, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::AtFrequency { source, .. } => source.exit_code(),
            Error::InsufficientSamples { .. }
            | Error::RankDeficient { .. }
            | Error::SingularSystem { .. }
            | Error::ZeroHrtfNorm
            | Error::ZeroCoefficients
            | Error::SilentInput => 3,
            Error::Io { .. }
            | Error::Json { .. }
            | Error::Wav(_)
            | Error::MalformedContainer(_)
            | Error::UnsupportedEncoding(_) => 4,
            Error::SampleRateMismatch { .. }
            | Error::GridDegenerate { .. }
            | Error::ChannelMismatch { .. }
            | Error::OrderMismatch { .. }
            | Error::InvalidFftSize(_)
            | Error::InvalidArgument(_) => 2,
        }
    }
}
