//! Transactional data clustering with a frequency-ordered prefix tree,
//! similarity-based cluster merging and an automatic overlap threshold,
//! plus the LargeItem baseline and purity/RMSSTD metrics.

pub mod cli;
pub mod cluster;
pub mod dataset;
pub mod error;
pub mod estimator;
pub mod fixtures;
pub mod ftree;
pub mod largeitem;
pub mod merge;
pub mod metrics;
pub mod report;

pub use cluster::{Cluster, Clustering};
pub use dataset::{
    compute_frequencies, AttributeTable, DatasetBuilder, Format, FrequencyTable, Item, ItemId,
    ItemOrder, LabelColumn, Transaction, TransactionDataset,
};
pub use error::{Error, Result};
pub use estimator::{estimate_alpha, run_fcso, AlphaReport, EstimatorConfig, SelectionRule};
pub use ftree::{allocate, cut_depth, extract_clusters, FTree, FTreeConfig};
pub use largeitem::{li_allocate, li_refine, LargeItemConfig};
pub use merge::{cluster_similarity, item_weight, refine};
pub use metrics::{purity, rmsstd, summarize, MetricsReport};
pub use report::{run_ftree, run_largeitem, Algorithm, RunReport};
