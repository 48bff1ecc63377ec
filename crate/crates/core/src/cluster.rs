//! Clusters of transaction ids with their per-item occurrence counts.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::dataset::{ItemId, TransactionDataset};
use crate::error::{Error, Result};

/// A set of transactions plus `|I_kj|` for every item `j` they contain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub id: usize,
    members: Vec<usize>,
    item_counts: Vec<(ItemId, u32)>,
    total: u64,
}

impl Cluster {
    /// `members` and `item_counts` may come in any order; both are sorted.
    pub fn new(id: usize, mut members: Vec<usize>, mut item_counts: Vec<(ItemId, u32)>) -> Self {
        members.sort_unstable();
        item_counts.sort_unstable_by_key(|&(item, _)| item);
        let total = item_counts.iter().map(|&(_, c)| u64::from(c)).sum();
        Self {
            id,
            members,
            item_counts,
            total,
        }
    }

    /// Counts recomputed from the member transactions.
    pub fn from_members(id: usize, members: Vec<usize>, dataset: &TransactionDataset) -> Self {
        let mut counts: BTreeMap<ItemId, u32> = BTreeMap::new();
        for &m in &members {
            for &item in &dataset.transactions()[m].items {
                *counts.entry(item).or_default() += 1;
            }
        }
        Self::new(id, members, counts.into_iter().collect())
    }

    /// Union of disjoint clusters; counts add element-wise.
    pub fn merged<'a>(id: usize, parts: impl IntoIterator<Item = &'a Cluster>) -> Self {
        let mut members = Vec::new();
        let mut counts: BTreeMap<ItemId, u32> = BTreeMap::new();
        for part in parts {
            members.extend_from_slice(&part.members);
            for &(item, c) in &part.item_counts {
                *counts.entry(item).or_default() += c;
            }
        }
        Self::new(id, members, counts.into_iter().collect())
    }

    /// Sorted transaction ids.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// `(item, occurrences)` sorted by item.
    pub fn item_counts(&self) -> &[(ItemId, u32)] {
        &self.item_counts
    }

    pub fn count(&self, item: ItemId) -> u32 {
        self.item_counts
            .binary_search_by_key(&item, |&(i, _)| i)
            .map_or(0, |pos| self.item_counts[pos].1)
    }

    /// `N_k`.
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// `M_k`.
    pub fn distinct_items(&self) -> usize {
        self.item_counts.len()
    }

    /// `S_k`.
    pub fn total_occurrences(&self) -> u64 {
        self.total
    }

    fn check(&self) -> Result<()> {
        if self.members.is_empty() {
            return Err(Error::InvalidClustering(format!(
                "cluster {} is empty",
                self.id
            )));
        }
        if self.item_counts.iter().any(|&(_, c)| c == 0) {
            return Err(Error::InvalidClustering(format!(
                "cluster {} has a zero item count",
                self.id
            )));
        }
        Ok(())
    }
}

/// A partition of the transaction ids `0..universe`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    clusters: Vec<Cluster>,
    universe: usize,
}

impl Clustering {
    /// Validates the partition invariant.
    pub fn new(clusters: Vec<Cluster>, universe: usize) -> Result<Self> {
        let clustering = Self { clusters, universe };
        clustering.validate()?;
        Ok(clustering)
    }

    pub(crate) fn new_unchecked(clusters: Vec<Cluster>, universe: usize) -> Self {
        debug_assert!(Self::new(clusters.clone(), universe).is_ok());
        Self { clusters, universe }
    }

    /// One cluster per group of member ids; counts come from the dataset.
    pub fn from_groups<G>(groups: G, dataset: &TransactionDataset) -> Result<Self>
    where
        G: IntoIterator,
        G::Item: AsRef<[usize]>,
    {
        let clusters = groups
            .into_iter()
            .enumerate()
            .map(|(id, g)| Cluster::from_members(id, g.as_ref().to_vec(), dataset))
            .collect();
        Self::new(clusters, dataset.len())
    }

    /// Every transaction in its own cluster.
    pub fn singletons(dataset: &TransactionDataset) -> Self {
        let clusters = (0..dataset.len())
            .map(|t| Cluster::from_members(t, vec![t], dataset))
            .collect();
        Self::new_unchecked(clusters, dataset.len())
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.universe];
        let mut ids = HashSet::with_capacity(self.clusters.len());
        for c in &self.clusters {
            c.check()?;
            if !ids.insert(c.id) {
                return Err(Error::InvalidClustering(format!(
                    "duplicate cluster id {}",
                    c.id
                )));
            }
            for &m in &c.members {
                match seen.get_mut(m) {
                    None => {
                        return Err(Error::InvalidClustering(format!(
                            "transaction {m} outside universe of {}",
                            self.universe
                        )))
                    }
                    Some(true) => {
                        return Err(Error::InvalidClustering(format!(
                            "transaction {m} is in two clusters"
                        )))
                    }
                    Some(s) => *s = true,
                }
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidClustering(format!(
                "transaction {missing} is in no cluster"
            )));
        }
        Ok(())
    }

    /// Also checks every cluster's counts against its members.
    pub fn validate_against(&self, dataset: &TransactionDataset) -> Result<()> {
        if self.universe != dataset.len() {
            return Err(Error::InvalidClustering(format!(
                "universe {} does not match {} transactions",
                self.universe,
                dataset.len()
            )));
        }
        self.validate()?;
        for c in &self.clusters {
            let fresh = Cluster::from_members(c.id, c.members.clone(), dataset);
            if fresh.item_counts != c.item_counts {
                return Err(Error::InvalidClustering(format!(
                    "cluster {} item counts disagree with its members",
                    c.id
                )));
            }
        }
        Ok(())
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn into_clusters(self) -> Vec<Cluster> {
        self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Number of transactions covered.
    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn ids(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.id).collect()
    }

    /// Position (not id) of each transaction's cluster, indexed by transaction.
    pub fn assignments(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.universe];
        for (pos, c) in self.clusters.iter().enumerate() {
            for &m in &c.members {
                out[m] = pos;
            }
        }
        out
    }

    /// The partition as a set of member sets, independent of cluster ids.
    pub fn partition(&self) -> BTreeSet<Vec<usize>> {
        self.clusters.iter().map(|c| c.members.clone()).collect()
    }

    /// True when every cluster of `self` lies inside one cluster of `coarser`.
    pub fn is_refinement_of(&self, coarser: &Clustering) -> bool {
        if self.universe != coarser.universe {
            return false;
        }
        let owner = coarser.assignments();
        self.clusters.iter().all(|c| {
            let first = owner[c.members[0]];
            c.members.iter().all(|&m| owner[m] == first)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn counts_and_totals_for_largest_depth2_cluster() {
        let ds = fixtures::baskets();
        let c = Cluster::from_members(0, fixtures::DEPTH2[0].to_vec(), &ds);
        assert_eq!(c.size(), 5);
        assert_eq!(c.total_occurrences(), 16);
        assert_eq!(c.distinct_items(), 6);
        let b = ds.dictionary().get(&crate::Item::new(0, "B")).unwrap();
        assert_eq!(c.count(b), 5);
    }

    #[test]
    fn rejects_overlap_gap_and_duplicates() {
        let ds = fixtures::baskets();
        let all: Vec<usize> = (0..10).collect();
        assert!(Clustering::from_groups([&all[..]], &ds).is_ok());
        assert!(Clustering::from_groups([&all[..5], &all[4..]], &ds).is_err());
        assert!(Clustering::from_groups([&all[..5]], &ds).is_err());
        let a = Cluster::from_members(0, all[..5].to_vec(), &ds);
        let b = Cluster::from_members(0, all[5..].to_vec(), &ds);
        assert!(Clustering::new(vec![a, b], 10).is_err());
        assert!(Clustering::from_groups([&all[..], &[][..]], &ds).is_err());
    }

    #[test]
    fn merged_adds_counts() {
        let ds = fixtures::baskets();
        let a = Cluster::from_members(0, vec![0, 4], &ds);
        let b = Cluster::from_members(1, vec![2], &ds);
        let m = Cluster::merged(7, [&a, &b]);
        assert_eq!(m, Cluster::from_members(7, vec![0, 2, 4], &ds));
    }

    #[test]
    fn validate_against_catches_stale_counts() {
        let ds = fixtures::baskets();
        let bad = Cluster::new(0, (0..10).collect(), vec![(ItemId(0), 1)]);
        let c = Clustering::new(vec![bad], 10).unwrap();
        assert!(c.validate_against(&ds).is_err());
    }
}
