//! Exit classes and the mapping of library errors onto them.

use std::path::Path;

use frobforge::frobenius::FrobeniusError;
use frobforge::hodge::HodgeError;
use frobforge::io::IoError;
use frobforge::quantum::ReconstructError;
use frobforge::quantum::QuantumError;
use frobforge::unfolding::UnfoldError;
use frobforge::SeriesError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    /// Unreadable input, schema or invariant violation.
    Validation = 2,
    /// A mathematical condition failed; residuals are reported.
    Condition = 3,
    /// The solver could not complete.
    Solver = 4,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn name(self) -> &'static str {
        match self {
            Exit::Success => "success",
            Exit::Validation => "validation",
            Exit::Condition => "condition",
            Exit::Solver => "solver",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub exit: Exit,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Failure { exit: Exit::Validation, message: message.into() }
    }

    pub fn input(path: &Path, e: IoError) -> Self {
        Failure::validation(format!("{}: {e}", path.display()))
    }

    fn new(exit: Exit, e: impl std::fmt::Display) -> Self {
        Failure { exit, message: e.to_string() }
    }
}

fn series_exit(e: &SeriesError) -> Exit {
    match e {
        SeriesError::TermLimit(..) => Exit::Solver,
        _ => Exit::Validation,
    }
}

fn frobenius_exit(e: &FrobeniusError) -> Exit {
    match e {
        FrobeniusError::Series(s) => series_exit(s),
        FrobeniusError::ConditionsFailed(_) | FrobeniusError::NotIsomorphismCase(_) => Exit::Condition,
        _ => Exit::Validation,
    }
}

fn unfold_exit(e: &UnfoldError) -> Exit {
    match e {
        UnfoldError::Series(s) => series_exit(s),
        UnfoldError::Frobenius(f) => frobenius_exit(f),
        UnfoldError::Invalid(_) => Exit::Validation,
        UnfoldError::GenerationFailure { .. } | UnfoldError::InternalConsistency(_) => Exit::Solver,
        UnfoldError::PairingEscape { .. } | UnfoldError::Hypothesis(_) | UnfoldError::AxiomsFailed(_) => Exit::Condition,
    }
}

fn quantum_exit(e: &QuantumError) -> Exit {
    match e {
        QuantumError::Series(s) => series_exit(s),
        _ => Exit::Validation,
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::new(Exit::Validation, e)
    }
}

impl From<SeriesError> for Failure {
    fn from(e: SeriesError) -> Self {
        Failure::new(series_exit(&e), e)
    }
}

impl From<FrobeniusError> for Failure {
    fn from(e: FrobeniusError) -> Self {
        Failure::new(frobenius_exit(&e), e)
    }
}

impl From<UnfoldError> for Failure {
    fn from(e: UnfoldError) -> Self {
        Failure::new(unfold_exit(&e), e)
    }
}

impl From<QuantumError> for Failure {
    fn from(e: QuantumError) -> Self {
        Failure::new(quantum_exit(&e), e)
    }
}

impl From<ReconstructError> for Failure {
    fn from(e: ReconstructError) -> Self {
        let exit = match &e {
            ReconstructError::Quantum(q) => quantum_exit(q),
            ReconstructError::Underdetermined(_) => Exit::Solver,
            ReconstructError::Inconsistent(_) => Exit::Condition,
        };
        Failure::new(exit, e)
    }
}

impl From<HodgeError> for Failure {
    fn from(e: HodgeError) -> Self {
        let exit = match &e {
            HodgeError::NotNilpotent | HodgeError::NotCommuting(..) | HodgeError::Malformed(_) => Exit::Validation,
            HodgeError::NotMHS(_)
            | HodgeError::NotSplitOverQ(_)
            | HodgeError::NotGriffiths(_)
            | HodgeError::NotOpposite(_)
            | HodgeError::Hypothesis(_) => Exit::Condition,
            HodgeError::Internal(_) => Exit::Solver,
            HodgeError::Series(s) => series_exit(s),
            HodgeError::Frobenius(f) => frobenius_exit(f),
            HodgeError::Unfold(u) => unfold_exit(u),
        };
        Failure::new(exit, e)
    }
}
