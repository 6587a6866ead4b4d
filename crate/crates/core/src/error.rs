use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("not type I: total jump mass must be finite and positive (got {0})")]
    NotTypeI(f64),
    #[error("argument outside the admissible domain: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("convolution form needs a continuous part; use the direct form for pure atoms")]
    UseDirectForm,
    #[error("not applicable to this measure: {0}")]
    NotApplicable(String),
    #[error("pure atom measures are handled by the exact atom engine")]
    UseExactAtomEngine,
    #[error("nilpotency not guaranteed: every atom position must be positive")]
    NilpotencyNotGuaranteed,
    #[error("condition ||T|| < Omega violated (||T|| = {norm}, Omega = {omega}) and T is not nilpotent")]
    ConditionViolated { norm: f64, omega: f64 },
    #[error("Krein-Rutman hypotheses fail: T1 is quasi-nilpotent (nilpotency index {index})")]
    QuasiNilpotent { index: usize },
    #[error("no real dominant eigenvalue: power iteration did not converge after {iterations} iterations")]
    NoRealDominant { iterations: usize },
    #[error("spectrum leaves the open right half-plane (min real part {0})")]
    SpectrumNotRightHalfPlane(f64),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("fit window underpopulated: {0}; use more paths or a smaller t_hi")]
    WindowUnderpopulated(String),
}

pub type Result<T> = core::result::Result<T, Error>;
