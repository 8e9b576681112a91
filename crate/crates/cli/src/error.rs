use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{origin}:{line}:{column}: {message}")]
    Config {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Numerical(#[from] ising_emachine::Error),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for usage and configuration problems, 2 for numerical or
    /// validation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } | CliError::Io(_) => 1,
            CliError::Numerical(_) | CliError::Validation(_) => 2,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(format!("json: {e}"))
    }
}

/// Short stable code for a per-row failure in sweep output.
pub fn error_code(e: &ising_emachine::Error) -> &'static str {
    use ising_emachine::Error::*;
    match e {
        InvalidAlphabet(_) => "invalid_alphabet",
        InvalidBlock(_) => "invalid_block",
        InvalidLength { .. } => "invalid_length",
        InvalidCouplings(_) => "invalid_couplings",
        NumericDomain(_) => "numeric_domain",
        Convergence { .. } => "convergence",
        InversionFailure { .. } => "inversion_failure",
        PartitionAmbiguity { .. } => "partition_ambiguity",
        Unifilarity { .. } => "unifilarity",
        Reducible { .. } => "reducible",
        LimitParameter(_) => "limit_parameter",
        PhaseBoundary(_) => "phase_boundary",
        EnumerationTooLarge { .. } => "enumeration_too_large",
        PositionOutOfRange { .. } => "position_out_of_range",
        QuadraticSolve { .. } => "quadratic_solve",
        Undersampled { .. } => "undersampled",
    }
}
