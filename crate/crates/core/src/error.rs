use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{EvalError, ParseError};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{field}: {source}")]
    Parse { field: String, source: ParseError },
    #[error("{field}: {source}")]
    Unbound { field: String, source: EvalError },
    #[error("evaluation failed at t = {t}: {source}")]
    Eval { t: f64, source: EvalError },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("non-cyclic coupling: dF{row}/dx{col} = {value:e} at t = {t}")]
    NonCyclic {
        row: usize,
        col: usize,
        value: f64,
        t: f64,
    },
    #[error("step limit of {max_steps} exceeded at t = {t}")]
    StepLimit {
        max_steps: usize,
        t: f64,
        state: Vec<f64>,
    },
    #[error("non-finite state after t = {t} (last finite state {state:?})")]
    NonFinite { t: f64, state: Vec<f64> },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64, state: Vec<f64> },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("periodic solution does not close: defect {defect:e} exceeds {bound:e}")]
    Closure { defect: f64, bound: f64 },
}

impl Error {
    /// True for failures of the numerical machinery rather than of the model definition.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Eval { .. }
                | Error::StepLimit { .. }
                | Error::NonFinite { .. }
                | Error::StepUnderflow { .. }
                | Error::Closure { .. }
        )
    }

    pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::Dimension {
                what,
                expected,
                found,
            })
        }
    }
}
