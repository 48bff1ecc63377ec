//! The allocation phase: a prefix tree over frequency-sorted transactions,
//! cut at a depth derived from the minimum support to produce small,
//! high-purity initial clusters.
//!
//! Depth counts from the root (root = 0). A larger `theta` cuts deeper and
//! yields more, finer clusters; `theta = 1` cuts at the deepest level,
//! which separates every distinct transaction.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::cluster::{Cluster, Clustering};
use crate::dataset::{compute_frequencies, FrequencyTable, ItemId, ItemOrder, TransactionDataset};
use crate::error::{check_range, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FTreeNode {
    /// `None` only at the root.
    pub item: Option<ItemId>,
    /// Transactions whose sorted sequence passes through this node.
    pub count: u32,
    pub parent: Option<usize>,
    pub depth: usize,
    /// Transactions whose sorted sequence ends here.
    pub terminating: Vec<usize>,
    /// Keyed by the child item's rank in the global order.
    children: BTreeMap<u32, usize>,
}

impl FTreeNode {
    fn new(item: Option<ItemId>, parent: Option<usize>, depth: usize) -> Self {
        Self {
            item,
            count: 0,
            parent,
            depth,
            terminating: Vec::new(),
            children: BTreeMap::new(),
        }
    }

    /// Child node indices, most frequent item first.
    pub fn children(&self) -> impl DoubleEndedIterator<Item = usize> + '_ {
        self.children.values().copied()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Arena-backed frequency tree. Node 0 is the root.
#[derive(Debug, Clone)]
pub struct FTree {
    nodes: Vec<FTreeNode>,
    max_depth: usize,
    order: ItemOrder,
    transactions: usize,
}

impl FTree {
    /// Inserts every transaction, one at a time, along its sorted item path.
    pub fn build(dataset: &TransactionDataset, freqs: &FrequencyTable) -> Result<Self> {
        let order = ItemOrder::new(freqs, dataset.dictionary());
        let mut nodes = vec![FTreeNode::new(None, None, 0)];
        let mut max_depth = 0;
        for t in dataset.transactions() {
            let path = order.sort(&t.items)?;
            let mut current = 0;
            nodes[0].count += 1;
            for &item in &path {
                let rank = order.rank(item).expect("sorted items have a rank");
                current = match nodes[current].children.get(&rank) {
                    Some(&child) => child,
                    None => {
                        let child = nodes.len();
                        let depth = nodes[current].depth + 1;
                        nodes.push(FTreeNode::new(Some(item), Some(current), depth));
                        nodes[current].children.insert(rank, child);
                        child
                    }
                };
                nodes[current].count += 1;
            }
            nodes[current].terminating.push(t.id);
            max_depth = max_depth.max(path.len());
        }
        Ok(Self {
            nodes,
            max_depth,
            order,
            transactions: dataset.len(),
        })
    }

    pub fn root(&self) -> &FTreeNode {
        &self.nodes[0]
    }

    pub fn node(&self, index: usize) -> &FTreeNode {
        &self.nodes[index]
    }

    pub fn nodes(&self) -> &[FTreeNode] {
        &self.nodes
    }

    /// Including the root.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn order(&self) -> &ItemOrder {
        &self.order
    }

    pub fn transactions(&self) -> usize {
        self.transactions
    }

    /// Child of `node` holding `item`, if any.
    pub fn child(&self, node: usize, item: ItemId) -> Option<usize> {
        let rank = self.order.rank(item)?;
        self.nodes[node].children.get(&rank).copied()
    }

    /// Items on the path from the root down to `node`, root side first.
    pub fn path(&self, node: usize) -> Vec<ItemId> {
        let mut path = Vec::with_capacity(self.nodes[node].depth);
        let mut cur = Some(node);
        while let Some(i) = cur {
            if let Some(item) = self.nodes[i].item {
                path.push(item);
            }
            cur = self.nodes[i].parent;
        }
        path.reverse();
        path
    }

    /// Indented text dump, one node per line:
    /// `item:count [terminating ids]`.
    pub fn dump(&self, dataset: &TransactionDataset) -> String {
        let mut out = String::new();
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            let name = node
                .item
                .map_or_else(|| "root".to_owned(), |item| dataset.item_name(item));
            let _ = write!(
                out,
                "{:indent$}{}:{}",
                "",
                name,
                node.count,
                indent = 2 * node.depth
            );
            if !node.terminating.is_empty() {
                let _ = write!(out, " {:?}", node.terminating);
            }
            out.push('\n');
            stack.extend(node.children().rev());
        }
        out
    }

    /// Node indices in pre-order, children most frequent first.
    pub fn preorder(&self) -> impl Iterator<Item = usize> + '_ {
        let mut stack = vec![0usize];
        std::iter::from_fn(move || {
            let i = stack.pop()?;
            stack.extend(self.nodes[i].children().rev());
            Some(i)
        })
    }
}

/// Parameters of a full F-Tree run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FTreeConfig {
    /// Minimum support in `(0, 1]`.
    pub theta: f64,
    /// Overlap threshold in `[0, 1]`, used by the refinement phase.
    pub alpha: f64,
}

impl FTreeConfig {
    pub fn new(theta: f64, alpha: f64) -> Result<Self> {
        check_theta(theta)?;
        check_range("alpha", alpha, 0.0, 1.0, false, "a value in [0, 1]")?;
        Ok(Self { theta, alpha })
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    check_range("theta", theta, 0.0, 1.0, true, "a value in (0, 1]")
}

/// `round(theta * max_depth)`, halves rounded up, clamped to `1..=max_depth`.
pub fn cut_depth(theta: f64, max_depth: usize) -> usize {
    if max_depth == 0 {
        return 0;
    }
    // The epsilon keeps products like 0.7 * 5 (3.4999999999999996) on the
    // half-up side.
    let depth = (theta * max_depth as f64 + 0.5 + 1e-9).floor();
    (depth.max(1.0) as usize).min(max_depth)
}

/// One cluster per node at `depth` holding every transaction in its
/// subtree, plus one cluster per shallower node that has terminating
/// transactions. Clusters are numbered in pre-order.
pub fn extract_clusters(tree: &FTree, depth: usize) -> Result<Clustering> {
    if depth == 0 || depth > tree.max_depth {
        return Err(Error::DepthOutOfRange {
            depth,
            max_depth: tree.max_depth,
        });
    }
    let mut clusters = Vec::new();
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        let node = &tree.nodes[i];
        if node.depth == depth {
            clusters.push(subtree_cluster(tree, i, clusters.len()));
            continue;
        }
        if !node.terminating.is_empty() {
            let n = node.terminating.len() as u32;
            let counts = tree.path(i).into_iter().map(|item| (item, n)).collect();
            clusters.push(Cluster::new(
                clusters.len(),
                node.terminating.clone(),
                counts,
            ));
        }
        stack.extend(node.children().rev());
    }
    Ok(Clustering::new_unchecked(clusters, tree.transactions))
}

/// Cluster of all transactions below `top`. Items on the path to `top`
/// occur in every member; items below it contribute their node counts.
fn subtree_cluster(tree: &FTree, top: usize, id: usize) -> Cluster {
    let top_count = tree.nodes[top].count;
    let mut counts: BTreeMap<ItemId, u32> = tree
        .path(top)
        .into_iter()
        .map(|item| (item, top_count))
        .collect();
    let mut members = Vec::with_capacity(top_count as usize);
    let mut stack = vec![top];
    while let Some(i) = stack.pop() {
        let node = &tree.nodes[i];
        members.extend_from_slice(&node.terminating);
        if i != top {
            let item = node.item.expect("non-root node has an item");
            *counts.entry(item).or_default() += node.count;
        }
        stack.extend(node.children());
    }
    Cluster::new(id, members, counts.into_iter().collect())
}

/// Wall time of each allocation step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AllocationTimings {
    pub first_scan: Duration,
    pub build: Duration,
    pub extract: Duration,
}

impl AllocationTimings {
    pub fn total(&self) -> Duration {
        self.first_scan + self.build + self.extract
    }
}

#[derive(Debug, Clone)]
pub struct Allocation {
    pub clustering: Clustering,
    pub depth: usize,
    pub max_depth: usize,
    pub node_count: usize,
    pub timings: AllocationTimings,
}

/// Frequencies, tree, cut, extraction.
pub fn allocate(dataset: &TransactionDataset, theta: f64) -> Result<Allocation> {
    check_theta(theta)?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let start = Instant::now();
    let freqs = compute_frequencies(dataset);
    let first_scan = start.elapsed();

    let start = Instant::now();
    let tree = FTree::build(dataset, &freqs)?;
    let build = start.elapsed();

    let start = Instant::now();
    let depth = cut_depth(theta, tree.max_depth());
    let clustering = extract_clusters(&tree, depth)?;
    let extract = start.elapsed();

    Ok(Allocation {
        clustering,
        depth,
        max_depth: tree.max_depth(),
        node_count: tree.node_count(),
        timings: AllocationTimings {
            first_scan,
            build,
            extract,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatasetBuilder, Item};
    use crate::fixtures;

    fn tree_of(ds: &TransactionDataset) -> FTree {
        FTree::build(ds, &compute_frequencies(ds)).unwrap()
    }

    fn id(ds: &TransactionDataset, name: &str) -> ItemId {
        ds.dictionary().get(&Item::new(0, name)).unwrap()
    }

    fn partition_at(ds: &TransactionDataset, depth: usize) -> Vec<Vec<usize>> {
        let c = extract_clusters(&tree_of(ds), depth).unwrap();
        c.validate_against(ds).unwrap();
        let mut p: Vec<Vec<usize>> = c.partition().into_iter().collect();
        p.sort();
        p
    }

    fn sorted(groups: &[&[usize]]) -> Vec<Vec<usize>> {
        let mut p: Vec<Vec<usize>> = groups.iter().map(|g| g.to_vec()).collect();
        p.sort();
        p
    }

    #[test]
    fn root_children() {
        let ds = fixtures::baskets();
        let tree = tree_of(&ds);
        let root = tree.root();
        assert_eq!(root.count, 10);
        let kids: Vec<(String, u32)> = root
            .children()
            .map(|c| (ds.item_name(tree.node(c).item.unwrap()), tree.node(c).count))
            .collect();
        assert_eq!(kids, vec![("B".into(), 8), ("A".into(), 2)]);
        assert_eq!(tree.max_depth(), 4);
    }

    #[test]
    fn tree_shape() {
        let ds = fixtures::baskets();
        let tree = tree_of(&ds);
        let b = tree.child(0, id(&ds, "B")).unwrap();
        let ba = tree.child(b, id(&ds, "A")).unwrap();
        let bc = tree.child(b, id(&ds, "C")).unwrap();
        assert_eq!(tree.node(ba).count, 5);
        assert_eq!(tree.node(bc).count, 3);
        let bac = tree.child(ba, id(&ds, "C")).unwrap();
        assert_eq!(tree.node(bac).count, 2);
        assert_eq!(tree.node(bac).terminating, vec![4]);
        let bacd = tree.child(bac, id(&ds, "D")).unwrap();
        assert_eq!(tree.node(bacd).terminating, vec![5]);
        assert_eq!(tree.node(bacd).depth, 4);
    }

    #[test]
    fn dump_lists_every_node() {
        let ds = fixtures::baskets();
        let tree = tree_of(&ds);
        let dump = tree.dump(&ds);
        assert_eq!(dump.lines().count(), tree.node_count());
        assert!(dump.starts_with("root:10\n  B:8\n    A:5\n      C:2 [4]\n        D:1 [5]\n"));
    }

    #[test]
    fn worked_example_partitions() {
        let ds = fixtures::baskets();
        assert_eq!(
            partition_at(&ds, 1),
            sorted(&[&[0, 1, 4, 5, 6, 7, 8, 9], &[2, 3]])
        );
        assert_eq!(partition_at(&ds, 2), sorted(&fixtures::DEPTH2));
        assert_eq!(
            partition_at(&ds, 3),
            sorted(&[&[0], &[4, 5], &[7], &[8], &[1], &[6], &[9], &[3], &[2]])
        );
        assert_eq!(
            partition_at(&ds, 4),
            (0..10).map(|t| vec![t]).collect::<Vec<_>>()
        );
    }

    #[test]
    fn duplicates_share_a_leaf() {
        let mut b = DatasetBuilder::baskets();
        b.push_basket(["A", "B"], None).unwrap();
        b.push_basket(["A", "B"], None).unwrap();
        let ds = b.finish().unwrap();
        let tree = tree_of(&ds);
        assert_eq!(tree.node_count(), 3);
        let a = tree.child(0, id(&ds, "A")).unwrap();
        let ab = tree.child(a, id(&ds, "B")).unwrap();
        assert_eq!(tree.node(a).count, 2);
        assert_eq!(tree.node(ab).count, 2);
        assert_eq!(tree.node(ab).terminating, vec![0, 1]);
    }

    #[test]
    fn single_transaction_chain() {
        let mut b = DatasetBuilder::baskets();
        b.push_basket(["A", "B", "C"], None).unwrap();
        let ds = b.finish().unwrap();
        let tree = tree_of(&ds);
        assert_eq!(tree.node_count(), 4);
        assert!(tree.nodes()[1..].iter().all(|n| n.count == 1));
        assert_eq!(tree.max_depth(), 3);
    }

    #[test]
    fn cut_depth_rounding_and_clamps() {
        assert_eq!(cut_depth(0.8, 22), 18);
        assert_eq!(cut_depth(0.5, 4), 2);
        assert_eq!(cut_depth(0.01, 4), 1);
        assert_eq!(cut_depth(1.0, 4), 4);
        assert_eq!(cut_depth(0.7, 5), 4);
        assert_eq!(cut_depth(0.3, 22), 7);
    }

    #[test]
    fn extract_rejects_bad_depth() {
        let ds = fixtures::baskets();
        let tree = tree_of(&ds);
        assert!(matches!(
            extract_clusters(&tree, 0),
            Err(Error::DepthOutOfRange { .. })
        ));
        assert!(matches!(
            extract_clusters(&tree, 5),
            Err(Error::DepthOutOfRange {
                depth: 5,
                max_depth: 4
            })
        ));
    }

    #[test]
    fn allocate_examples() {
        let ds = fixtures::baskets();
        let a = allocate(&ds, 0.5).unwrap();
        assert_eq!(a.depth, 2);
        let mut p: Vec<Vec<usize>> = a.clustering.partition().into_iter().collect();
        p.sort();
        assert_eq!(p, sorted(&fixtures::DEPTH2));

        let a = allocate(&ds, 1.0).unwrap();
        assert_eq!(a.clustering.len(), 10);

        let mut b = DatasetBuilder::baskets();
        for _ in 0..5 {
            b.push_basket(["x", "y", "z"], None).unwrap();
        }
        let same = b.finish().unwrap();
        for theta in [0.1, 0.5, 1.0] {
            assert_eq!(allocate(&same, theta).unwrap().clustering.len(), 1);
        }
        assert!(allocate(&ds, 0.0).is_err());
        assert!(allocate(&ds, 1.1).is_err());
    }

    #[test]
    fn shallow_terminators_become_own_cluster() {
        let mut b = DatasetBuilder::baskets();
        b.push_basket(["A"], None).unwrap();
        b.push_basket(["A", "B", "C"], None).unwrap();
        b.push_basket(["A", "B", "D"], None).unwrap();
        let ds = b.finish().unwrap();
        let tree = tree_of(&ds);
        let c = extract_clusters(&tree, 3).unwrap();
        c.validate_against(&ds).unwrap();
        assert_eq!(c.len(), 3);
        let c = extract_clusters(&tree, 2).unwrap();
        c.validate_against(&ds).unwrap();
        let mut p: Vec<Vec<usize>> = c.partition().into_iter().collect();
        p.sort();
        assert_eq!(p, vec![vec![0], vec![1, 2]]);
    }
}
