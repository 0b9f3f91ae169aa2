use std::path::PathBuf;

use thiserror::Error;

use crate::model::{PointId, Stamp};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("cell index overflows i32 on axis {axis} (value {value})")]
    CellOverflow { axis: usize, value: f64 },

    #[error("point {id} with stamp {t} is outside the window slice ({lo}, {hi}]")]
    OutsideWindow {
        id: PointId,
        t: Stamp,
        lo: Stamp,
        hi: Stamp,
    },

    #[error("stamp {t} of point {id} arrives after stamp {last}")]
    OutOfOrder { id: PointId, t: Stamp, last: Stamp },

    #[error("duplicate point id {0}")]
    DuplicateId(PointId),

    #[error("summaries are at different levels ({0} vs {1})")]
    LevelMismatch(u8, u8),

    #[error("summary is empty")]
    EmptySummary,

    #[error("no level up to {max_level} fits into {budget} bytes (coarsest needs {needed})")]
    BudgetExceeded {
        budget: u64,
        max_level: u8,
        needed: u64,
    },

    #[error("record {0} not found")]
    NotFound(u64),

    #[error("{}: {message}", path.display())]
    Archive { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn archive(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Archive {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
