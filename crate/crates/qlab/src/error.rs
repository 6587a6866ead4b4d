use qlab_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Condition(String),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Condition(_) => 2,
            Self::Config(_) => 3,
            Self::Numerical(_) => 4,
            Self::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Condition(_) => "condition",
            Self::Config(_) => "config",
            Self::Numerical(_) => "numerical",
            Self::Io(_) => "io",
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::ConditionViolated { .. } | Error::NilpotencyNotGuaranteed => Self::Condition(msg),
            Error::InvalidMeasure(_)
            | Error::NotTypeI(_)
            | Error::Domain(_)
            | Error::Config(_)
            | Error::NotApplicable(_)
            | Error::UseDirectForm
            | Error::UseExactAtomEngine => Self::Config(msg),
            Error::QuasiNilpotent { .. }
            | Error::NoRealDominant { .. }
            | Error::SpectrumNotRightHalfPlane(_)
            | Error::Numerical(_)
            | Error::WindowUnderpopulated(_) => Self::Numerical(msg),
        }
    }
}
