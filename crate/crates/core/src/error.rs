use thiserror::Error;

pub type Result<T> = std::result::Result<T, KreinError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KreinError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("signature entries must be +1 or -1 and the space must be non-empty")]
    InvalidSignature,
    #[error("degenerate subspace: vector {index} is neutral after projection ([u,u] = {value:e})")]
    DegenerateSubspace { index: usize, value: f64 },
    #[error("operator is not a fundamental symmetry: {0}")]
    NotFundamentalSymmetry(String),
    #[error("operator is not non-negative (lambda_min(JT) = {lambda_min:e}, selfadjoint = {selfadjoint})")]
    NotNonnegative { lambda_min: f64, selfadjoint: bool },
    #[error("ill-conditioned eigenpair: residual {residual:e} exceeds {limit:e}")]
    IllConditioned { residual: f64, limit: f64 },
    #[error("interval ({lo}, {hi}) touches zero")]
    IntervalTouchesZero { lo: f64, hi: f64 },
    #[error("eigenvalue {value} lies on the boundary of the interval")]
    EigenvalueOnBoundary { value: f64 },
    #[error("eigenvalue {value} not present in the spectrum")]
    EigenvalueNotFound { value: f64 },
    #[error("0 is a singular critical point: rank C = {rank_c}, rank C^2 = {rank_c2}")]
    RegularityViolated { rank_c: usize, rank_c2: usize },
    #[error("kernel of C is numerically degenerate (|eigenvalue of Y*JY| = {value:e})")]
    DegenerateKernel { value: f64 },
    #[error("uniform definiteness constant is not positive (delta = {delta:e})")]
    NonPositiveDelta { delta: f64 },
    #[error("Schatten exponent must be finite and >= 1, got {0}")]
    InvalidExponent(f64),
    #[error("ambiguous branch matching at t = {t}")]
    MatchingAmbiguous { t: f64 },
    #[error("eigensolve failed at t = {t}: {reason}")]
    EigensolveFailed { t: f64, reason: String },
    #[error("interval ({lo}, {hi}) contains zero in its closure")]
    IntervalContainsZero { lo: f64, hi: f64 },
    #[error("split point {point} coincides with an eigenvalue")]
    SplitOnEigenvalue { point: f64 },
    #[error("sign mismatch: value {value} prescribed on a vector of sign {sign}")]
    SignMismatch { value: f64, sign: i8 },
    #[error("instance generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
