use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("spin label at the south pole (theta = pi) has no stereographic coordinate")]
    Pole,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fock dimension {dim} too small for monomial q^{m} p^{n} (needs at least {needed})")]
    Truncation { dim: usize, m: u32, n: u32, needed: usize },

    #[error("coherent-state tail weight {tail:e} beyond dimension {dim} exceeds 1e-14")]
    Tail { dim: usize, tail: f64 },

    #[error("boundary kind `{0}` is not supported by this engine")]
    UnsupportedBoundary(&'static str),

    #[error("postselection is orthogonal to the evolved preselection (|overlap| = {overlap:e})")]
    OrthogonalPostselection { overlap: f64 },

    #[error("source bin [{lo}, {hi}] does not align with the {n_steps}-step time grid")]
    Alignment { lo: f64, hi: f64, n_steps: usize },

    #[error("generating functional crosses zero between source evaluations; log branch is ambiguous")]
    LogBranch,

    #[error("integrator could not reach tolerance at t = {t} (step {step:e})")]
    StepFailure { t: f64, step: f64 },

    #[error("shooting did not converge; best residual {best_residual:e}")]
    NoConvergence { best_residual: f64 },

    #[error("caustic: |dq''/dp'| = {indicator:e} vanishes, amplitude diverges")]
    Caustic { indicator: f64 },

    #[error("postselected pointer state has zero norm")]
    ZeroNorm,

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}
