use thiserror::Error;

/// Every failure the core can report. Reals are carried as f64 regardless of the scalar type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PeaksError {
    #[error("evaluation failed at k = {k}: {reason}")]
    Evaluation { k: usize, reason: String },

    #[error("certificate required: {0}")]
    CertificateRequired(String),

    #[error("pair is not useful: no k <= {horizon} with u_k > h(0)")]
    NotUseful { horizon: usize },

    #[error("domination fails at k = {k}: u_k = {value} > h(beta^k) = {bound}")]
    Violation { k: usize, value: f64, bound: f64 },

    #[error("u_{k} = {value} exceeds h(1) = {h1}")]
    NotInEnvelope { k: usize, value: f64, h1: f64 },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("domain error: {value} outside [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("orbit diverged at step {step} from {start:?}")]
    OrbitDivergence { step: usize, start: Vec<f64> },

    #[error("decrement fails at {point:?}: V(T x) = {image} > {bound}")]
    Decrement { point: Vec<f64>, image: f64, bound: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, PeaksError>;
