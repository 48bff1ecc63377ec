//! The refinement phase: clusters whose weighted-item overlap exceeds the
//! threshold are grouped with their best neighbor and merged, pass after
//! pass, until a pass leaves the cluster count unchanged.
//!
//! Within a cluster the weight of item `j` is `|I_j| / S_k`. The overlap of
//! two clusters is the product of the weight each of them puts on the
//! items they share, so it lies in `[0, 1]`, is `1` exactly when every item
//! of each cluster is shared and `0` when they share nothing.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::cluster::{Cluster, Clustering};
use crate::dataset::ItemId;
use crate::error::{Error, Result};

/// Probability of `item` inside `cluster`; zero when absent.
pub fn item_weight(cluster: &Cluster, item: ItemId) -> f64 {
    let total = cluster.total_occurrences();
    if total == 0 {
        return 0.0;
    }
    f64::from(cluster.count(item)) / total as f64
}

/// Occurrences of the shared items, counted in `a` and in `b`.
fn shared_mass(a: &Cluster, b: &Cluster) -> (u64, u64) {
    let (xs, ys) = (a.item_counts(), b.item_counts());
    let (mut i, mut j) = (0, 0);
    let (mut in_a, mut in_b) = (0u64, 0u64);
    while i < xs.len() && j < ys.len() {
        match xs[i].0.cmp(&ys[j].0) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                in_a += u64::from(xs[i].1);
                in_b += u64::from(ys[j].1);
                i += 1;
                j += 1;
            }
        }
    }
    (in_a, in_b)
}

/// Overlap probability of two clusters.
///
/// Evaluated as one division of exact integer products, so the result is
/// the correctly rounded value of the underlying fraction; a pair whose
/// exact overlap is 3/5 compares equal to the literal `0.6`.
pub fn cluster_similarity(a: &Cluster, b: &Cluster) -> f64 {
    let (in_a, in_b) = shared_mass(a, b);
    overlap(in_a, in_b, a.total_occurrences(), b.total_occurrences())
}

fn overlap(in_a: u64, in_b: u64, total_a: u64, total_b: u64) -> f64 {
    if in_a == 0 {
        return 0.0;
    }
    let num = u128::from(in_a) * u128::from(in_b);
    let den = u128::from(total_a) * u128::from(total_b);
    if num == den {
        return 1.0;
    }
    num as f64 / den as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: usize,
    pub similarity: f64,
}

/// Each cluster's most similar other cluster, kept only above the threshold.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimilarityList {
    entries: BTreeMap<usize, Neighbor>,
}

impl SimilarityList {
    pub fn get(&self, id: usize) -> Option<Neighbor> {
        self.entries.get(&id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Neighbor)> + '_ {
        self.entries.iter().map(|(&i, &n)| (i, n))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(cluster, best neighbor)` pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.entries.iter().map(|(&i, n)| (i, n.id)).collect()
    }
}

impl FromIterator<(usize, Neighbor)> for SimilarityList {
    fn from_iter<T: IntoIterator<Item = (usize, Neighbor)>>(iter: T) -> Self {
        Self {
            entries: iter.into_iter().collect(),
        }
    }
}

/// `(similarity, position)`; position breaks ties towards the smaller id.
type Best = (f64, usize);

const NONE: Best = (f64::NEG_INFINITY, usize::MAX);

#[inline]
fn improve(best: &mut Best, candidate: Best) {
    if candidate.0 > best.0 || (candidate.0 == best.0 && candidate.1 < best.1) {
        *best = candidate;
    }
}

/// Best neighbor of every cluster over all unordered pairs; argmax ties
/// go to the smallest cluster id. Similarity must strictly exceed `alpha`.
pub fn max_similarity_list(clustering: &Clustering, alpha: f64) -> SimilarityList {
    let mut by_id: Vec<&Cluster> = clustering.clusters().iter().collect();
    by_id.sort_by_key(|c| c.id);
    if by_id.len() < 2 {
        return SimilarityList::default();
    }
    collect_list(&by_id, all_pairs_best(&by_id), alpha)
}

fn collect_list(by_id: &[&Cluster], best: Vec<Best>, alpha: f64) -> SimilarityList {
    best.into_iter()
        .enumerate()
        .filter(|&(_, (s, _))| s > alpha)
        .map(|(i, (s, j))| {
            (
                by_id[i].id,
                Neighbor {
                    id: by_id[j].id,
                    similarity: s,
                },
            )
        })
        .collect()
}

/// Largest `clusters x items` count matrix built for the dense scan.
const DENSE_LIMIT: usize = 1 << 26;

/// Per-pair scoring. With a small item universe every cluster becomes a
/// dense row of counts, which replaces the merge-join by a flat loop.
enum Scorer<'a> {
    Sparse(&'a [&'a Cluster]),
    Dense {
        width: usize,
        counts: Vec<u32>,
        /// All ones where the count is non-zero.
        masks: Vec<u32>,
        totals: Vec<u64>,
    },
}

impl<'a> Scorer<'a> {
    fn new(by_id: &'a [&'a Cluster]) -> Self {
        let width = by_id
            .iter()
            .filter_map(|c| c.item_counts().last())
            .map(|&(item, _)| item.index() + 1)
            .max()
            .unwrap_or(0);
        let fits = by_id
            .iter()
            .all(|c| c.total_occurrences() <= u64::from(u32::MAX));
        if !fits || width.saturating_mul(by_id.len()) > DENSE_LIMIT {
            return Scorer::Sparse(by_id);
        }
        let mut counts = vec![0u32; width * by_id.len()];
        for (row, c) in counts.chunks_exact_mut(width).zip(by_id) {
            for &(item, n) in c.item_counts() {
                row[item.index()] = n;
            }
        }
        let masks = counts
            .iter()
            .map(|&n| if n == 0 { 0 } else { u32::MAX })
            .collect();
        let totals = by_id.iter().map(|c| c.total_occurrences()).collect();
        Scorer::Dense {
            width,
            counts,
            masks,
            totals,
        }
    }

    fn similarity(&self, i: usize, j: usize) -> f64 {
        match self {
            Scorer::Sparse(by_id) => cluster_similarity(by_id[i], by_id[j]),
            Scorer::Dense {
                width,
                counts,
                masks,
                totals,
            } => {
                let (a, b) = (i * width..(i + 1) * width, j * width..(j + 1) * width);
                let (x, y) = (&counts[a.clone()], &counts[b.clone()]);
                let (mx, my) = (&masks[a], &masks[b]);
                // Row sums are bounded by the cluster totals, which fit in u32.
                let (mut in_a, mut in_b) = (0u32, 0u32);
                for ((&p, &q), (&mp, &mq)) in x.iter().zip(y).zip(mx.iter().zip(my)) {
                    in_a = in_a.wrapping_add(p & mq);
                    in_b = in_b.wrapping_add(q & mp);
                }
                overlap(in_a.into(), in_b.into(), totals[i], totals[j])
            }
        }
    }
}

fn all_pairs_best(by_id: &[&Cluster]) -> Vec<Best> {
    let k = by_id.len();
    let scorer = Scorer::new(by_id);
    (0..k)
        .into_par_iter()
        .fold(
            || vec![NONE; k],
            |mut best, i| {
                for j in i + 1..k {
                    let s = scorer.similarity(i, j);
                    improve(&mut best[i], (s, j));
                    improve(&mut best[j], (s, i));
                }
                best
            },
        )
        .reduce(
            || vec![NONE; k],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    improve(x, y);
                }
                a
            },
        )
}

/// Partition of cluster ids into merge sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeGroups {
    groups: Vec<Vec<usize>>,
}

impl MergeGroups {
    /// Normalises: ids sorted inside each group, groups by smallest id.
    pub fn new(mut groups: Vec<Vec<usize>>) -> Self {
        for g in &mut groups {
            g.sort_unstable();
        }
        groups.retain(|g| !g.is_empty());
        groups.sort_unstable_by_key(|g| g[0]);
        Self { groups }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected components of the best-neighbor graph over `all_ids`.
pub fn group_similar(simlist: &SimilarityList, all_ids: &[usize]) -> MergeGroups {
    let pos: HashMap<usize, usize> = all_ids.iter().enumerate().map(|(p, &id)| (id, p)).collect();
    let mut sets = DisjointSet::new(all_ids.len());
    for (i, n) in simlist.iter() {
        match (pos.get(&i), pos.get(&n.id)) {
            (Some(&a), Some(&b)) => sets.union(a, b),
            _ => debug_assert!(false, "similarity list names an unknown cluster"),
        }
    }
    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (p, &id) in all_ids.iter().enumerate() {
        components.entry(sets.find(p)).or_default().push(id);
    }
    MergeGroups::new(components.into_values().collect())
}

/// One cluster per group. New ids are dense, ordered by each group's
/// smallest constituent id.
pub fn merge_groups(clustering: &Clustering, groups: &MergeGroups) -> Result<Clustering> {
    let pos: HashMap<usize, usize> = clustering
        .clusters()
        .iter()
        .enumerate()
        .map(|(p, c)| (c.id, p))
        .collect();
    let mut used = vec![false; clustering.len()];
    let mut merged = Vec::with_capacity(groups.len());
    for (new_id, group) in groups.groups().iter().enumerate() {
        let mut parts = Vec::with_capacity(group.len());
        for id in group {
            let &p = pos.get(id).ok_or_else(|| {
                Error::InvalidClustering(format!("group names unknown cluster {id}"))
            })?;
            if std::mem::replace(&mut used[p], true) {
                return Err(Error::InvalidClustering(format!(
                    "cluster {id} is in two groups"
                )));
            }
            parts.push(&clustering.clusters()[p]);
        }
        merged.push(Cluster::merged(new_id, parts));
    }
    if let Some(p) = used.iter().position(|&u| !u) {
        return Err(Error::InvalidClustering(format!(
            "cluster {} is in no group",
            clustering.clusters()[p].id
        )));
    }
    Ok(Clustering::new_unchecked(merged, clustering.universe()))
}

#[derive(Debug, Clone)]
pub struct Refinement {
    pub clustering: Clustering,
    /// Including the final pass that merged nothing.
    pub passes: usize,
    /// Cluster count before the first pass and after each pass.
    pub cluster_counts: Vec<usize>,
    pub elapsed: Duration,
}

/// Merges to a fixed point. Every pass that changes anything lowers the
/// cluster count, so there are at most `clustering.len()` passes.
pub fn refine(clustering: &Clustering, alpha: f64) -> Refinement {
    let start = Instant::now();
    let mut current = clustering.clone();
    let mut counts = vec![current.len()];
    let mut passes = 0;
    loop {
        passes += 1;
        let before = current.len();
        let simlist = max_similarity_list(&current, alpha);
        let groups = group_similar(&simlist, &current.ids());
        current = merge_groups(&current, &groups).expect("groups come from this clustering");
        counts.push(current.len());
        if current.len() == before {
            break;
        }
    }
    Refinement {
        clustering: current,
        passes,
        cluster_counts: counts,
        elapsed: start.elapsed(),
    }
}
