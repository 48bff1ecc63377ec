//! Clustering quality: majority-label purity and the pooled within-cluster
//! standard deviation (RMSSTD) over integer-coded attributes.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::cluster::{Cluster, Clustering};
use crate::dataset::{AttributeTable, TransactionDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MajorityEntry {
    pub cluster: usize,
    pub label: String,
    pub count: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purity: Option<f64>,
    pub cluster_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmsstd: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub majority_table: Vec<MajorityEntry>,
}

/// Most frequent label of one cluster; ties go to the smaller label.
fn majority<'a>(cluster: &Cluster, labels: &[&'a str]) -> Result<(&'a str, usize)> {
    let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
    for &m in cluster.members() {
        let label = labels.get(m).ok_or(Error::MissingLabel(m))?;
        *tally.entry(*label).or_default() += 1;
    }
    let mut best = ("", 0);
    for (label, count) in tally {
        if count > best.1 {
            best = (label, count);
        }
    }
    Ok(best)
}

/// Per-cluster majority label, count and size.
pub fn majority_table(clustering: &Clustering, labels: &[&str]) -> Result<Vec<MajorityEntry>> {
    clustering
        .clusters()
        .iter()
        .map(|c| {
            let (label, count) = majority(c, labels)?;
            Ok(MajorityEntry {
                cluster: c.id,
                label: label.to_owned(),
                count,
                size: c.size(),
            })
        })
        .collect()
}

/// Number of transactions carrying their cluster's majority label.
pub fn majority_mass(clustering: &Clustering, labels: &[&str]) -> Result<usize> {
    clustering
        .clusters()
        .iter()
        .map(|c| majority(c, labels).map(|(_, n)| n))
        .sum()
}

/// Fraction of transactions covered by their cluster's majority label.
/// `labels` is indexed by transaction id.
pub fn purity(clustering: &Clustering, labels: &[&str]) -> Result<f64> {
    let n = clustering.universe();
    if n == 0 {
        return Ok(1.0);
    }
    if labels.len() < n {
        return Err(Error::MissingLabel(labels.len()));
    }
    Ok(majority_mass(clustering, labels)? as f64 / n as f64)
}

/// `sqrt( sum_i sum_j sum_k (x_k - mean_ij)^2 / sum_i sum_j (n_ij - 1) )`
/// over clusters `i` and attributes `j`. Zero when every cluster is a
/// singleton.
pub fn rmsstd(clustering: &Clustering, table: &AttributeTable) -> Result<f64> {
    let v = table.attributes;
    let mut numerator = 0.0;
    let mut denominator = 0usize;
    let mut sums = vec![0.0f64; v];
    for c in clustering.clusters() {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for &m in c.members() {
            let row = table
                .rows
                .get(m)
                .ok_or_else(|| Error::NoAttributeTable(format!("no row for transaction {m}")))?;
            for (s, &x) in sums.iter_mut().zip(row) {
                *s += f64::from(x);
            }
        }
        let n = c.size() as f64;
        for (j, s) in sums.iter().enumerate() {
            let mean = s / n;
            numerator += c
                .members()
                .iter()
                .map(|&m| (f64::from(table.rows[m][j]) - mean).powi(2))
                .sum::<f64>();
        }
        denominator += v * (c.size() - 1);
    }
    if denominator == 0 {
        return Ok(0.0);
    }
    Ok((numerator / denominator as f64).sqrt())
}

/// Purity when the dataset is labeled, RMSSTD when it came from a table.
pub fn summarize(clustering: &Clustering, dataset: &TransactionDataset) -> MetricsReport {
    let labels = dataset.labels().ok();
    let (purity, majority_table) = match &labels {
        Some(l) => (
            purity(clustering, l).ok(),
            majority_table(clustering, l).unwrap_or_default(),
        ),
        None => (None, Vec::new()),
    };
    let rmsstd = dataset
        .attribute_table()
        .ok()
        .and_then(|t| rmsstd(clustering, &t).ok());
    MetricsReport {
        purity,
        cluster_count: clustering.len(),
        rmsstd,
        majority_table,
    }
}
