//! Overlap-threshold estimation: allocate once, refine at every alpha on a
//! grid from 1 down to 0, and keep the smallest alpha whose clustering is
//! still 100% pure. The full pipeline then runs with that alpha.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::TransactionDataset;
use crate::error::{check_range, Result};
use crate::ftree::{allocate, check_theta, FTreeConfig};
use crate::merge::refine;
use crate::metrics::majority_mass;
use crate::report::{run_ftree, Algorithm, RunReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub theta: f64,
    pub step: f64,
    /// Fraction of each label's transactions used for the sweep.
    pub sample_fraction: f64,
    pub seed: u64,
}

impl EstimatorConfig {
    pub fn new(theta: f64) -> Self {
        Self {
            theta,
            step: 0.1,
            sample_fraction: 1.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_theta(self.theta)?;
        check_range("step", self.step, 0.0, 1.0, true, "a value in (0, 1]")?;
        check_range(
            "sample_fraction",
            self.sample_fraction,
            0.0,
            1.0,
            true,
            "a value in (0, 1]",
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub purity: f64,
    pub clusters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionRule {
    ExactPure,
    BestPurityFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaReport {
    /// In sweep order, from 1 down to 0.
    pub rows: Vec<AlphaRow>,
    pub chosen_alpha: f64,
    pub selection_rule: SelectionRule,
    /// Transactions the sweep ran on.
    pub sample_size: usize,
}

impl AlphaReport {
    /// `alpha,purity,clusters` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["alpha", "purity", "clusters"])?;
        for r in &self.rows {
            w.write_record([
                format_alpha(r.alpha),
                r.purity.to_string(),
                r.clusters.to_string(),
            ])?;
        }
        w.flush()
    }
}

/// Shortest decimal with at least one fractional digit: `1.0`, `0.5`, `0.25`.
pub fn format_alpha(alpha: f64) -> String {
    let s = format!("{alpha:.6}");
    let s = s.trim_end_matches('0');
    if s.ends_with('.') {
        format!("{s}0")
    } else {
        s.to_owned()
    }
}

/// `1.0, 1 - step, ...` down to and including `0.0`.
pub fn alpha_grid(step: f64) -> Result<Vec<f64>> {
    check_range("step", step, 0.0, 1.0, true, "a value in (0, 1]")?;
    let n = (1.0 / step).round();
    if n >= 1.0 && (n * step - 1.0).abs() < 1e-9 {
        // Division keeps grid points equal to their decimal literals.
        let n = n as u64;
        return Ok((0..=n).map(|k| (n - k) as f64 / n as f64).collect());
    }
    let mut grid = Vec::new();
    let mut k = 0u64;
    loop {
        let a = 1.0 - k as f64 * step;
        if a < -1e-12 {
            break;
        }
        grid.push(((a * 1e12).round() / 1e12).max(0.0));
        k += 1;
    }
    if grid.last() != Some(&0.0) {
        grid.push(0.0);
    }
    Ok(grid)
}

/// Label-stratified sample, returned in original transaction order.
/// `fraction == 1` returns the whole dataset untouched.
pub fn stratified_sample(
    dataset: &TransactionDataset,
    fraction: f64,
    seed: u64,
) -> Result<TransactionDataset> {
    check_range(
        "sample_fraction",
        fraction,
        0.0,
        1.0,
        true,
        "a value in (0, 1]",
    )?;
    if fraction >= 1.0 {
        return Ok(dataset.clone());
    }
    let labels = dataset.labels()?;
    let mut strata: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (t, l) in labels.iter().enumerate() {
        strata.entry(l).or_default().push(t);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::new();
    for ids in strata.values_mut() {
        ids.shuffle(&mut rng);
        let take = ((ids.len() as f64 * fraction).round() as usize).clamp(1, ids.len());
        chosen.extend_from_slice(&ids[..take]);
    }
    chosen.sort_unstable();
    dataset.subset(&chosen)
}

/// Sweeps the grid and picks the threshold. Falls back to the best purity
/// (larger alpha on ties) when no alpha reaches 100%.
pub fn estimate_alpha(
    dataset: &TransactionDataset,
    config: &EstimatorConfig,
) -> Result<AlphaReport> {
    config.validate()?;
    dataset.labels()?;
    let sample = stratified_sample(dataset, config.sample_fraction, config.seed)?;
    let labels = sample.labels()?;
    let grid = alpha_grid(config.step)?;
    let initial = allocate(&sample, config.theta)?.clustering;
    let n = sample.len();

    let results = grid
        .par_iter()
        .map(|&alpha| {
            let r = refine(&initial, alpha);
            let mass = majority_mass(&r.clustering, &labels)?;
            Ok((alpha, mass, r.clustering.len()))
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = results
        .iter()
        .map(|&(alpha, mass, clusters)| AlphaRow {
            alpha,
            purity: mass as f64 / n as f64,
            clusters,
        })
        .collect();

    let pure = results
        .iter()
        .filter(|&&(_, mass, _)| mass == n)
        .map(|&(alpha, _, _)| alpha)
        .reduce(f64::min);
    let (chosen_alpha, selection_rule) = match pure {
        Some(a) => (a, SelectionRule::ExactPure),
        None => {
            let mut best = results[0];
            for &r in &results[1..] {
                if r.1 > best.1 || (r.1 == best.1 && r.0 > best.0) {
                    best = r;
                }
            }
            (best.0, SelectionRule::BestPurityFallback)
        }
    };
    Ok(AlphaReport {
        rows,
        chosen_alpha,
        selection_rule,
        sample_size: n,
    })
}

/// Estimates alpha on the (sampled) dataset, then clusters the whole dataset.
pub fn run_fcso(dataset: &TransactionDataset, config: &EstimatorConfig) -> Result<RunReport> {
    let start = Instant::now();
    let alpha_report = estimate_alpha(dataset, config)?;
    let estimate = start.elapsed();
    let mut report = run_ftree(
        dataset,
        FTreeConfig::new(config.theta, alpha_report.chosen_alpha)?,
    )?;
    report.algorithm = Algorithm::Fcso;
    report.timings.estimate_ms = estimate.as_secs_f64() * 1e3;
    report.timings.total_ms += report.timings.estimate_ms;
    report.alpha_report = Some(alpha_report);
    Ok(report)
}
