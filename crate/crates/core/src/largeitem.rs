//! LargeItem baseline: transactions are placed, then moved, wherever the
//! global cost `w * Intra + Inter` is smallest.
//!
//! An item is large in a cluster when it occurs in at least `theta` of the
//! cluster's transactions, small otherwise. `Intra` counts distinct items
//! that are small somewhere; `Inter` counts how often large items are
//! duplicated across clusters.
//!
//! Placement and moves are evaluated incrementally. Adding a transaction
//! to a cluster can only change the large/small status of items in that
//! cluster, so the cost change is computed from per-item tallies of how
//! many clusters hold the item as large and as small.

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::cluster::{Cluster, Clustering};
use crate::dataset::{ItemId, TransactionDataset};
use crate::error::{check_range, Error, Result};
use crate::ftree::check_theta;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeItemConfig {
    /// Minimum in-cluster support, a fraction of the cluster size.
    pub theta: f64,
    /// Weight of `Intra`.
    pub weight: f64,
    pub max_refine_passes: usize,
}

impl LargeItemConfig {
    pub fn new(theta: f64, weight: f64) -> Result<Self> {
        check_theta(theta)?;
        check_range(
            "weight",
            weight,
            0.0,
            f64::MAX,
            false,
            "a non-negative number",
        )?;
        Ok(Self {
            theta,
            weight,
            max_refine_passes: 50,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub intra: u64,
    pub inter: u64,
    pub total: f64,
}

impl CostBreakdown {
    fn new(intra: u64, inter: u64, weight: f64) -> Self {
        Self {
            intra,
            inter,
            total: weight * intra as f64 + inter as f64,
        }
    }
}

/// Slack for `theta * size` products such as `0.3 * 10`.
const SUPPORT_EPS: f64 = 1e-9;

#[inline]
fn is_large(count: u32, size: u32, theta: f64) -> bool {
    f64::from(count) + SUPPORT_EPS >= theta * f64::from(size)
}

/// Large and small items of one cluster; together they are its items.
pub fn large_small_split(cluster: &Cluster, theta: f64) -> (Vec<ItemId>, Vec<ItemId>) {
    let size = cluster.size() as u32;
    cluster
        .item_counts()
        .iter()
        .map(|&(item, c)| (item, is_large(c, size, theta)))
        .fold(
            (Vec::new(), Vec::new()),
            |(mut large, mut small), (item, l)| {
                if l {
                    large.push(item);
                } else {
                    small.push(item);
                }
                (large, small)
            },
        )
}

/// Cost of a clustering, recomputed from scratch.
pub fn cost(clustering: &Clustering, config: &LargeItemConfig) -> CostBreakdown {
    let mut small_union = BTreeSet::new();
    let mut large_union = BTreeSet::new();
    let mut large_total = 0u64;
    for c in clustering.clusters() {
        let (large, small) = large_small_split(c, config.theta);
        large_total += large.len() as u64;
        large_union.extend(large);
        small_union.extend(small);
    }
    CostBreakdown::new(
        small_union.len() as u64,
        large_total - large_union.len() as u64,
        config.weight,
    )
}

#[derive(Debug, Clone, Default)]
struct Slot {
    size: u32,
    counts: HashMap<ItemId, u32>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Absent,
    Small,
    Large,
}

/// Clusters plus the global tallies that make cost deltas cheap.
struct State<'a> {
    dataset: &'a TransactionDataset,
    theta: f64,
    weight: f64,
    /// Emptied slots stay as `size == 0` so ids stay stable.
    slots: Vec<Slot>,
    owner: Vec<usize>,
    large_in: Vec<u32>,
    small_in: Vec<u32>,
    intra: u64,
    inter: u64,
    /// Scratch membership mask for the transaction being placed.
    in_t: Vec<bool>,
}

impl<'a> State<'a> {
    fn new(dataset: &'a TransactionDataset, config: &LargeItemConfig) -> Self {
        let m = dataset.dictionary().len();
        Self {
            dataset,
            theta: config.theta,
            weight: config.weight,
            slots: Vec::new(),
            owner: vec![usize::MAX; dataset.len()],
            large_in: vec![0; m],
            small_in: vec![0; m],
            intra: 0,
            inter: 0,
            in_t: vec![false; m],
        }
    }

    fn status(&self, count: u32, size: u32) -> Status {
        if count == 0 {
            Status::Absent
        } else if is_large(count, size, self.theta) {
            Status::Large
        } else {
            Status::Small
        }
    }

    fn cost(&self) -> CostBreakdown {
        CostBreakdown::new(self.intra, self.inter, self.weight)
    }

    /// Change of `(intra, inter)` if `item` goes from `old` to `new` in one cluster.
    fn item_delta(&self, item: ItemId, old: Status, new: Status) -> (i64, i64) {
        if old == new {
            return (0, 0);
        }
        let i = item.index();
        let (l, s) = (i64::from(self.large_in[i]), i64::from(self.small_in[i]));
        let l2 = l - i64::from(old == Status::Large) + i64::from(new == Status::Large);
        let s2 = s - i64::from(old == Status::Small) + i64::from(new == Status::Small);
        let dup = |x: i64| (x - 1).max(0);
        (i64::from(s2 > 0) - i64::from(s > 0), dup(l2) - dup(l))
    }

    fn apply(&mut self, item: ItemId, old: Status, new: Status) {
        let (di, de) = self.item_delta(item, old, new);
        self.intra = (self.intra as i64 + di) as u64;
        self.inter = (self.inter as i64 + de) as u64;
        let i = item.index();
        match old {
            Status::Large => self.large_in[i] -= 1,
            Status::Small => self.small_in[i] -= 1,
            Status::Absent => {}
        }
        match new {
            Status::Large => self.large_in[i] += 1,
            Status::Small => self.small_in[i] += 1,
            Status::Absent => {}
        }
    }

    fn mark(&mut self, t: usize, on: bool) {
        for &item in &self.dataset.transactions()[t].items {
            self.in_t[item.index()] = on;
        }
    }

    /// Cost change of adding transaction `t` (already marked) to `slot`;
    /// `None` means a fresh cluster.
    fn add_delta(&self, t: usize, slot: Option<usize>) -> f64 {
        let items = &self.dataset.transactions()[t].items;
        let (mut di, mut de) = (0i64, 0i64);
        match slot.map(|s| &self.slots[s]) {
            Some(sl) if sl.size > 0 => {
                let size = sl.size;
                for (&item, &c) in &sl.counts {
                    let add = u32::from(self.in_t[item.index()]);
                    let (a, b) =
                        self.item_delta(item, self.status(c, size), self.status(c + add, size + 1));
                    di += a;
                    de += b;
                }
                for &item in items {
                    if !sl.counts.contains_key(&item) {
                        let (a, b) =
                            self.item_delta(item, Status::Absent, self.status(1, size + 1));
                        di += a;
                        de += b;
                    }
                }
            }
            _ => {
                for &item in items {
                    let (a, b) = self.item_delta(item, Status::Absent, self.status(1, 1));
                    di += a;
                    de += b;
                }
            }
        }
        self.weight * di as f64 + de as f64
    }

    /// Re-derives the status of every item of `slot` after `t` (marked)
    /// was added (`sign = 1`) or removed (`sign = -1`).
    fn restatus(&mut self, slot: usize, old_size: u32, sign: i64, dropped: &[ItemId]) {
        let new_size = self.slots[slot].size;
        let changes: Vec<(ItemId, Status, Status)> = self.slots[slot]
            .counts
            .iter()
            .map(|(&item, &now)| {
                let old = (i64::from(now) - sign * i64::from(self.in_t[item.index()])) as u32;
                (item, self.status(old, old_size), self.status(now, new_size))
            })
            .chain(
                dropped
                    .iter()
                    .map(|&item| (item, self.status(1, old_size), Status::Absent)),
            )
            .collect();
        for (item, old, new) in changes {
            self.apply(item, old, new);
        }
    }

    fn insert(&mut self, t: usize, slot: usize) {
        if slot == self.slots.len() {
            self.slots.push(Slot::default());
        }
        self.mark(t, true);
        let old_size = self.slots[slot].size;
        let sl = &mut self.slots[slot];
        sl.size += 1;
        for &item in &self.dataset.transactions()[t].items {
            *sl.counts.entry(item).or_default() += 1;
        }
        self.owner[t] = slot;
        self.restatus(slot, old_size, 1, &[]);
        self.mark(t, false);
    }

    fn remove(&mut self, t: usize) -> usize {
        let slot = self.owner[t];
        self.mark(t, true);
        let old_size = self.slots[slot].size;
        let sl = &mut self.slots[slot];
        sl.size -= 1;
        let mut dropped = Vec::new();
        for &item in &self.dataset.transactions()[t].items {
            let c = sl.counts.get_mut(&item).expect("member item is counted");
            *c -= 1;
            if *c == 0 {
                sl.counts.remove(&item);
                dropped.push(item);
            }
        }
        self.owner[t] = usize::MAX;
        self.restatus(slot, old_size, -1, &dropped);
        self.mark(t, false);
        slot
    }

    /// Cheapest destination for marked transaction `t`. Exact ties go to
    /// `stay` when given, then to an existing cluster with the smallest id,
    /// and only then to a fresh cluster.
    fn best_slot(&self, t: usize, stay: Option<usize>) -> usize {
        let mut best: Option<(f64, usize)> = None;
        if let Some(s) = stay {
            best = Some((self.add_delta(t, Some(s)), s));
        }
        for (s, sl) in self.slots.iter().enumerate() {
            if sl.size == 0 || Some(s) == stay {
                continue;
            }
            let d = self.add_delta(t, Some(s));
            if best.is_none_or(|(b, _)| d < b) {
                best = Some((d, s));
            }
        }
        let fresh = self.add_delta(t, None);
        match best {
            Some((b, s)) if b <= fresh => s,
            _ => stay
                .filter(|&s| self.slots[s].size == 0)
                .unwrap_or(self.slots.len()),
        }
    }

    fn into_clustering(self) -> Clustering {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); self.slots.len()];
        for (t, &s) in self.owner.iter().enumerate() {
            members[s].push(t);
        }
        let clusters = members
            .into_iter()
            .filter(|m| !m.is_empty())
            .enumerate()
            .map(|(id, m)| Cluster::from_members(id, m, self.dataset))
            .collect();
        Clustering::new_unchecked(clusters, self.dataset.len())
    }
}

/// Places transactions in dataset order, each where the cost grows least.
pub fn li_allocate(dataset: &TransactionDataset, config: &LargeItemConfig) -> Result<Clustering> {
    check_theta(config.theta)?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut state = State::new(dataset, config);
    for t in 0..dataset.len() {
        state.mark(t, true);
        let slot = state.best_slot(t, None);
        state.mark(t, false);
        state.insert(t, slot);
    }
    Ok(state.into_clustering())
}

#[derive(Debug, Clone)]
pub struct LiRefinement {
    pub clustering: Clustering,
    /// Full passes over the transactions, including the last one.
    pub passes: usize,
    pub converged: bool,
    pub moves: usize,
    /// Cost of the input and after each pass.
    pub cost_history: Vec<CostBreakdown>,
    pub elapsed: Duration,
}

/// Moves each transaction to its cheapest cluster until a pass moves
/// nothing or `max_refine_passes` is reached. Emptied clusters vanish.
pub fn li_refine(
    dataset: &TransactionDataset,
    clustering: &Clustering,
    config: &LargeItemConfig,
) -> Result<LiRefinement> {
    check_theta(config.theta)?;
    if clustering.universe() != dataset.len() {
        return Err(Error::InvalidClustering(format!(
            "clustering covers {} transactions, dataset has {}",
            clustering.universe(),
            dataset.len()
        )));
    }
    let start = Instant::now();
    let mut state = State::new(dataset, config);
    for (slot, c) in clustering.clusters().iter().enumerate() {
        for &t in c.members() {
            state.insert(t, slot);
        }
    }
    let mut history = vec![state.cost()];
    let mut passes = 0;
    let mut moves = 0;
    let mut converged = false;
    while passes < config.max_refine_passes {
        passes += 1;
        let mut moved = 0;
        for t in 0..dataset.len() {
            let from = state.remove(t);
            state.mark(t, true);
            let to = state.best_slot(t, Some(from));
            state.mark(t, false);
            state.insert(t, to);
            if to != from {
                moved += 1;
            }
        }
        history.push(state.cost());
        moves += moved;
        if moved == 0 {
            converged = true;
            break;
        }
    }
    Ok(LiRefinement {
        clustering: state.into_clustering(),
        passes,
        converged,
        moves,
        cost_history: history,
        elapsed: start.elapsed(),
    })
}
