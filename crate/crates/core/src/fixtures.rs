//! The ten-transaction running example over items A..F, shared by the
//! unit and integration tests.

use crate::dataset::{DatasetBuilder, TransactionDataset};

/// Items of transactions T1..T10 (ids 0..9).
pub const BASKETS: [&[&str]; 10] = [
    &["A", "B", "F"],
    &["B", "C", "D"],
    &["A", "C", "D", "E"],
    &["A", "D", "E"],
    &["A", "B", "C"],
    &["A", "B", "C", "D"],
    &["B", "C", "F"],
    &["A", "B", "E"],
    &["A", "B", "D"],
    &["B", "C", "E"],
];

pub fn baskets() -> TransactionDataset {
    let mut builder = DatasetBuilder::baskets();
    for t in BASKETS {
        builder
            .push_basket(t.iter().copied(), None)
            .expect("fixture rows are non-empty");
    }
    builder.finish().expect("fixture is non-empty")
}

/// Zero-based member ids of the four extracted clusters at depth 2, in the
/// order they are listed in the worked example.
pub const DEPTH2: [&[usize]; 4] = [&[0, 4, 5, 7, 8], &[1, 6, 9], &[3], &[2]];
