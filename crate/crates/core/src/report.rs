//! End-to-end runs of either algorithm and the JSON/CSV they produce.

use std::io::Write;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::cluster::{Cluster, Clustering};
use crate::dataset::TransactionDataset;
use crate::error::Result;
use crate::estimator::AlphaReport;
use crate::ftree::{allocate, FTreeConfig};
use crate::largeitem::{cost, li_allocate, li_refine, LargeItemConfig};
use crate::merge::refine;
use crate::metrics::{summarize, MetricsReport};

const TOP_ITEMS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ftree,
    Fcso,
    Largeitem,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ftree => "ftree",
            Algorithm::Fcso => "fcso",
            Algorithm::Largeitem => "largeitem",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Parameters {
    pub theta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopItem {
    pub item: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSummary {
    pub id: usize,
    pub size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<usize>>,
    pub top_items: Vec<TopItem>,
}

/// Wall-clock milliseconds. Phases an algorithm lacks stay at zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub first_scan_ms: f64,
    pub build_ms: f64,
    pub extract_ms: f64,
    pub allocate_ms: f64,
    pub refine_ms: f64,
    pub estimate_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub algorithm: Algorithm,
    pub parameters: Parameters,
    pub transactions: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cut_depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    pub clusters_before_refine: usize,
    pub passes: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
    pub metrics: MetricsReport,
    pub clusters: Vec<ClusterSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_report: Option<AlphaReport>,
    pub timings: Timings,
    #[serde(skip)]
    pub clustering: Clustering,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Adds member ids to every cluster summary.
    pub fn include_members(&mut self) {
        for (summary, cluster) in self.clusters.iter_mut().zip(self.clustering.clusters()) {
            summary.members = Some(cluster.members().to_vec());
        }
    }

    /// `transaction_id,cluster_id`, one row per transaction.
    pub fn write_assignments<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_assignments(&self.clustering, out)
    }
}

pub fn write_assignments<W: Write>(clustering: &Clustering, out: W) -> std::io::Result<()> {
    let mut owner = vec![0usize; clustering.universe()];
    for c in clustering.clusters() {
        for &m in c.members() {
            owner[m] = c.id;
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["transaction_id", "cluster_id"])?;
    for (t, id) in owner.iter().enumerate() {
        w.write_record([t.to_string(), id.to_string()])?;
    }
    w.flush()
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn summarize_cluster(cluster: &Cluster, dataset: &TransactionDataset) -> ClusterSummary {
    let mut items: Vec<_> = cluster
        .item_counts()
        .iter()
        .map(|&(item, n)| (n, dataset.item_name(item)))
        .collect();
    items.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let size = cluster.size() as f64;
    ClusterSummary {
        id: cluster.id,
        size: cluster.size(),
        members: None,
        top_items: items
            .into_iter()
            .take(TOP_ITEMS)
            .map(|(n, item)| TopItem {
                item,
                weight: f64::from(n) / size,
            })
            .collect(),
    }
}

fn summaries(clustering: &Clustering, dataset: &TransactionDataset) -> Vec<ClusterSummary> {
    clustering
        .clusters()
        .iter()
        .map(|c| summarize_cluster(c, dataset))
        .collect()
}

/// Tree allocation followed by similarity merging.
pub fn run_ftree(dataset: &TransactionDataset, config: FTreeConfig) -> Result<RunReport> {
    let start = Instant::now();
    let alloc = allocate(dataset, config.theta)?;
    let before = alloc.clustering.len();
    let refined = refine(&alloc.clustering, config.alpha);
    refined.clustering.validate_against(dataset)?;
    let total = start.elapsed();
    let clustering = refined.clustering;
    Ok(RunReport {
        algorithm: Algorithm::Ftree,
        parameters: Parameters {
            theta: config.theta,
            alpha: Some(config.alpha),
            weight: None,
        },
        transactions: dataset.len(),
        cut_depth: Some(alloc.depth),
        max_depth: Some(alloc.max_depth),
        clusters_before_refine: before,
        passes: refined.passes,
        converged: true,
        cost: None,
        metrics: summarize(&clustering, dataset),
        clusters: summaries(&clustering, dataset),
        alpha_report: None,
        timings: Timings {
            first_scan_ms: ms(alloc.timings.first_scan),
            build_ms: ms(alloc.timings.build),
            extract_ms: ms(alloc.timings.extract),
            allocate_ms: ms(alloc.timings.total()),
            refine_ms: ms(refined.elapsed),
            estimate_ms: 0.0,
            total_ms: ms(total),
        },
        clustering,
    })
}

/// Greedy cost-driven placement followed by move-based refinement.
pub fn run_largeitem(dataset: &TransactionDataset, config: LargeItemConfig) -> Result<RunReport> {
    let start = Instant::now();
    let initial = li_allocate(dataset, &config)?;
    let allocated = start.elapsed();
    let refined = li_refine(dataset, &initial, &config)?;
    refined.clustering.validate_against(dataset)?;
    let total = start.elapsed();
    let clustering = refined.clustering;
    Ok(RunReport {
        algorithm: Algorithm::Largeitem,
        parameters: Parameters {
            theta: config.theta,
            alpha: None,
            weight: Some(config.weight),
        },
        transactions: dataset.len(),
        cut_depth: None,
        max_depth: None,
        clusters_before_refine: initial.len(),
        passes: refined.passes,
        converged: refined.converged,
        cost: Some(cost(&clustering, &config).total),
        metrics: summarize(&clustering, dataset),
        clusters: summaries(&clustering, dataset),
        alpha_report: None,
        timings: Timings {
            allocate_ms: ms(allocated),
            refine_ms: ms(refined.elapsed),
            total_ms: ms(total),
            ..Timings::default()
        },
        clustering,
    })
}
