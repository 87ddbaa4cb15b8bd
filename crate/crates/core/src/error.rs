use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} failed to converge after {iterations} iterations")]
    ConvergenceFailure { what: &'static str, iterations: usize },

    #[error("path {index:?} exceeded the event budget of {budget}")]
    PathBudgetExceeded { index: Option<u64>, budget: usize },

    #[error("population exceeded the budget of {budget} particles")]
    PopulationBudgetExceeded { budget: usize },

    #[error("adaptive quadrature exceeded depth {depth} on [{lo}, {hi}]")]
    QuadratureFailure { lo: f64, hi: f64, depth: u32 },

    #[error("event {index} has no parent (pre-jump level {level} above every open excursion)")]
    OrphanEvent { index: usize, level: f64 },

    #[error("Picard iteration stopped after {sweeps} sweeps with residual {residual:e}")]
    NotConverged { sweeps: usize, residual: f64 },

    #[error("mean jump {mean} must be below the drift {drift}")]
    InvalidRegime { mean: f64, drift: f64 },

    #[error("time weight has no compact support")]
    UnsupportedHorizon,

    #[error("operation needs a jump density, got {0}")]
    UnsupportedMeasure(&'static str),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("all samples equal {value} but the prediction is {predicted}")]
    DegenerateVariance { value: f64, predicted: f64 },

    #[error("i/o: {0}")]
    Io(String),

    #[error("malformed input at line {line}: {message}")]
    Format { line: usize, message: String },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
