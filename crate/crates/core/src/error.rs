use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(&'static str),

    #[error("degenerate innovation: H*Sigma*H^T + sigma_v^2 is zero")]
    DegenerateInnovation,

    #[error("non-physical inductance {0} H: reluctance undefined")]
    NonPhysicalInductance(f64),

    #[error("reset with zero accumulated current: no current flowed during the cycle")]
    ResetDegenerate,

    #[error("ill-conditioned reset: |sum of current| = {sum} below guard {guard}")]
    IllConditionedReset { sum: f64, guard: f64 },

    #[error("cycle {0} has zero accumulated current")]
    DegenerateCycle(usize),

    #[error("invalid cycle boundaries: {0}")]
    Boundaries(&'static str),

    #[error("flux linkage {lambda} Wb reaches saturation level {lambda_sat} Wb")]
    Saturation { lambda: f64, lambda_sat: f64 },

    #[error("integration step {0} s too large: flux linkage would cross saturation")]
    StepTooLarge(f64),

    #[error("sequence too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}
