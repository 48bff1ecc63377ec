use std::path::PathBuf;

use thiserror::Error;

use crate::dataset::ItemId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Csv(#[from] csv::Error),

    #[error("record {record}: expected {expected} columns, found {found}")]
    ColumnCount {
        record: usize,
        expected: usize,
        found: usize,
    },

    #[error("record {record}: label column {column} does not exist")]
    MissingLabelColumn { record: usize, column: usize },

    #[error("record {record} has no items left after dropping ignored columns")]
    EmptyTransaction { record: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("dataset has no class labels")]
    Unlabeled,

    #[error("transaction {0} has no label")]
    MissingLabel(usize),

    #[error("item {0} is not in the frequency table")]
    UnknownItem(ItemId),

    #[error("cut depth {depth} is outside 1..={max_depth}")]
    DepthOutOfRange { depth: usize, max_depth: usize },

    #[error("{name} = {value} is out of range, expected {expected}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid clustering: {0}")]
    InvalidClustering(String),

    #[error("attribute table unavailable: {0}")]
    NoAttributeTable(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Checks that `value` lies in `low..=high` (or `(low, high]` when
/// `open_low` is set).
pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    low: f64,
    high: f64,
    open_low: bool,
    expected: &'static str,
) -> Result<()> {
    let above = if open_low { value > low } else { value >= low };
    if value.is_finite() && above && value <= high {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            expected,
        })
    }
}
