use thiserror::Error;

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

/// Every way an evaluation can refuse to produce a number.
///
/// Undefined scores are errors rather than silent zeros so that sanity tests
/// and meta-evaluation never average over meaningless values.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("empty vector")]
    EmptyVector,

    #[error("vector of length {0} is too short (need at least 2 inputs)")]
    TooShort(usize),

    #[error("non-finite activation at index {index}")]
    NonFinite { index: usize },

    #[error("concept value outside [0,1] at index {index}: {value}")]
    ConceptOutOfRange { index: usize, value: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample larger than pool: requested {requested} from {available}")]
    SampleLargerThanPool { requested: usize, available: usize },

    #[error("undefined correlation (zero-variance vector)")]
    UndefinedCorrelation,

    #[error("undefined cosine (zero-norm vector)")]
    ZeroNorm,

    #[error("concept never active")]
    ConceptNeverActive,

    #[error("concept always active")]
    ConceptAlwaysActive,

    #[error("neuron always active")]
    NeuronAlwaysActive,

    #[error("AUPRC undefined (no positive labels)")]
    AuprcUndefined,

    #[error("nothing to remove (no positive concept entries)")]
    NothingToRemove,

    #[error("nothing to add (no negative concept entries)")]
    NothingToAdd,

    #[error("frequency too low for n: gamma={gamma}, n={n}")]
    FrequencyTooLow { gamma: f64, n: usize },

    #[error("degenerate confusion matrix")]
    DegenerateConfusion,

    #[error("no neurons to aggregate")]
    EmptyDeltas,

    #[error("setting incompatible with metric: {skipped} of {total} pairs undefined")]
    IncompatibleSetting { skipped: usize, total: usize },

    #[error("unknown metric '{0}'")]
    UnknownMetric(String),

    #[error("invalid setting: {0}")]
    InvalidSetting(String),
}
