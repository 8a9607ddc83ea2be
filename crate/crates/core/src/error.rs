use thiserror::Error;

use crate::model::SpecError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("{what} needs {needed} entries, budget is {cap}")]
    Budget { what: String, needed: String, cap: usize },
    #[error("inadmissible: {0}")]
    Inadmissible(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn budget(what: impl Into<String>, needed: impl ToString, cap: usize) -> Error {
    Error::Budget {
        what: what.into(),
        needed: needed.to_string(),
        cap,
    }
}

/// Size limits, overridable through the environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budgets {
    /// Cap on enumerated cells, prescriptions and private-information values.
    pub cells: usize,
    /// Cap on pure strategies per team in induced normal forms.
    pub normal_form: usize,
    /// Cap on worker threads; 0 means one per team.
    pub workers: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            cells: 1 << 20,
            normal_form: 64,
            workers: 0,
        }
    }
}

impl Budgets {
    /// Defaults overridden by `TEAMGAMES_CELL_BUDGET` and `TEAMGAMES_NF_BUDGET`.
    pub fn from_env() -> Self {
        let read = |key: &str, default: usize| {
            std::env::var(key)
                .ok()
                .and_then(|v| v.trim().parse().ok())
                .unwrap_or(default)
        };
        let d = Budgets::default();
        Budgets {
            cells: read("TEAMGAMES_CELL_BUDGET", d.cells),
            normal_form: read("TEAMGAMES_NF_BUDGET", d.normal_form),
            workers: d.workers,
        }
    }
}
