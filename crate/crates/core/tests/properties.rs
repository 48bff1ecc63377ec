mod common;

use std::collections::BTreeSet;

use fcso::cluster::Cluster;
use fcso::merge::{group_similar, max_similarity_list, merge_groups, MergeGroups};
use fcso::{
    allocate, cluster_similarity, compute_frequencies, item_weight, li_allocate, li_refine, purity,
    refine, Clustering, FTree, LargeItemConfig, TransactionDataset,
};
use proptest::prelude::*;

use common::{baskets, oracle_refine};

fn rows_strategy(max_n: usize, items: u8) -> impl Strategy<Value = Vec<Vec<u8>>> {
    prop::collection::vec(prop::collection::vec(0..items, 1..6), 1..max_n)
}

fn labeled_strategy() -> impl Strategy<Value = (Vec<Vec<u8>>, Vec<u8>)> {
    rows_strategy(30, 9).prop_flat_map(|rows| {
        let n = rows.len();
        (Just(rows), prop::collection::vec(0u8..3, n))
    })
}

/// Rows plus an arbitrary grouping of them.
fn grouped_strategy() -> impl Strategy<Value = (Vec<Vec<u8>>, Vec<usize>)> {
    rows_strategy(25, 8).prop_flat_map(|rows| {
        let n = rows.len();
        (Just(rows), prop::collection::vec(0..n.min(6), n))
    })
}

fn clustering_from_codes(ds: &TransactionDataset, codes: &[usize]) -> Clustering {
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); codes.iter().max().unwrap() + 1];
    for (t, &g) in codes.iter().enumerate() {
        groups[g].push(t);
    }
    groups.retain(|g| !g.is_empty());
    Clustering::from_groups(groups, ds).unwrap()
}

fn in_id_order(c: &Clustering) -> Vec<Vec<usize>> {
    let mut cl: Vec<&Cluster> = c.clusters().iter().collect();
    cl.sort_by_key(|c| c.id);
    cl.iter().map(|c| c.members().to_vec()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn every_phase_yields_a_partition(rows in rows_strategy(40, 10), theta in 0.05f64..=1.0, alpha in 0.0f64..=1.0) {
        let ds = baskets(&rows, None);
        let alloc = allocate(&ds, theta).unwrap();
        alloc.clustering.validate_against(&ds).unwrap();
        let merged = refine(&alloc.clustering, alpha);
        merged.clustering.validate_against(&ds).unwrap();

        let config = LargeItemConfig::new(theta, 1.0).unwrap();
        let placed = li_allocate(&ds, &config).unwrap();
        placed.validate_against(&ds).unwrap();
        li_refine(&ds, &placed, &config).unwrap().clustering.validate_against(&ds).unwrap();
    }

    #[test]
    fn similarity_properties((rows, codes) in grouped_strategy()) {
        let ds = baskets(&rows, None);
        let c = clustering_from_codes(&ds, &codes);
        for a in c.clusters() {
            prop_assert_eq!(cluster_similarity(a, a), 1.0);
            for b in c.clusters() {
                let s = cluster_similarity(a, b);
                prop_assert!((0.0..=1.0).contains(&s));
                prop_assert_eq!(s, cluster_similarity(b, a));
                let items_a: BTreeSet<_> = a.item_counts().iter().map(|x| x.0).collect();
                let disjoint = b.item_counts().iter().all(|x| !items_a.contains(&x.0));
                if disjoint {
                    prop_assert_eq!(s, 0.0);
                } else {
                    prop_assert!(s > 0.0);
                }
            }
        }
    }

    #[test]
    fn weights_sum_to_one((rows, codes) in grouped_strategy()) {
        let ds = baskets(&rows, None);
        let c = clustering_from_codes(&ds, &codes);
        for cl in c.clusters() {
            let sum: f64 = cl.item_counts().iter().map(|&(item, _)| item_weight(cl, item)).sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12, "sum = {}", sum);
        }
    }

    #[test]
    fn refine_coarsens(rows in rows_strategy(40, 10), theta in 0.05f64..=1.0, alpha in 0.0f64..=1.0) {
        let ds = baskets(&rows, None);
        let initial = allocate(&ds, theta).unwrap().clustering;
        let r = refine(&initial, alpha);
        prop_assert!(initial.is_refinement_of(&r.clustering));
        prop_assert!(r.clustering.len() <= initial.len());
        prop_assert_eq!(r.cluster_counts.len(), r.passes + 1);
        prop_assert!(r.cluster_counts.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn single_merge_never_raises_purity((rows, labels) in labeled_strategy(), theta in 0.05f64..=1.0, pick in any::<(usize, usize)>()) {
        let ds = baskets(&rows, Some(&labels));
        let c = allocate(&ds, theta).unwrap().clustering;
        prop_assume!(c.len() >= 2);
        let ids = c.ids();
        let a = ids[pick.0 % ids.len()];
        let mut b = ids[pick.1 % ids.len()];
        if a == b {
            b = ids[(pick.1 + 1) % ids.len()];
        }
        let mut groups: Vec<Vec<usize>> = ids.iter().filter(|&&i| i != a && i != b).map(|&i| vec![i]).collect();
        groups.push(vec![a, b]);
        let merged = merge_groups(&c, &MergeGroups::new(groups)).unwrap();
        let l = ds.labels().unwrap();
        prop_assert!(purity(&merged, &l).unwrap() <= purity(&c, &l).unwrap());
    }

    #[test]
    fn order_insensitive(rows in rows_strategy(30, 8), theta in 0.05f64..=1.0, step in 0u32..=20, seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let alpha = f64::from(step) / 20.0;
        let ds = baskets(&rows, None);
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.shuffle(&mut common::rng(seed));
        let shuffled: Vec<Vec<u8>> = order.iter().map(|&i| rows[i].clone()).collect();
        let ds2 = baskets(&shuffled, None);
        let r1 = refine(&allocate(&ds, theta).unwrap().clustering, alpha).clustering;
        let r2 = refine(&allocate(&ds2, theta).unwrap().clustering, alpha).clustering;
        prop_assert_eq!(r1.partition(), common::mapped_partition(&r2, &order));
    }

    #[test]
    fn tree_counts_are_conserved(rows in rows_strategy(40, 10)) {
        let ds = baskets(&rows, None);
        let tree = FTree::build(&ds, &compute_frequencies(&ds)).unwrap();
        prop_assert_eq!(tree.root().count as usize, ds.len());
        let mut terminating = 0;
        for node in tree.nodes() {
            let below: u32 = node.children().map(|c| tree.node(c).count).sum();
            prop_assert_eq!(node.count, below + node.terminating.len() as u32);
            terminating += node.terminating.len();
        }
        prop_assert_eq!(terminating, ds.len());
    }

    #[test]
    fn refine_matches_reference(rows in rows_strategy(24, 8), theta in 0.05f64..=1.0, step in 0u32..=20) {
        let ds = baskets(&rows, None);
        let initial = allocate(&ds, theta).unwrap().clustering;
        let r = refine(&initial, f64::from(step) / 20.0);
        let (expected, passes) = oracle_refine(&ds, in_id_order(&initial), u128::from(step), 20);
        prop_assert_eq!(in_id_order(&r.clustering), expected);
        prop_assert_eq!(r.passes, passes);
    }

    #[test]
    fn first_pass_edges_grow_as_alpha_drops(rows in rows_strategy(30, 8), theta in 0.05f64..=1.0) {
        let ds = baskets(&rows, None);
        let c = allocate(&ds, theta).unwrap().clustering;
        let mut previous: BTreeSet<(usize, usize)> = BTreeSet::new();
        for step in (0..=10).rev() {
            let edges: BTreeSet<_> = max_similarity_list(&c, f64::from(step) / 10.0).edges().into_iter().collect();
            prop_assert!(previous.is_subset(&edges));
            let groups = group_similar(&max_similarity_list(&c, f64::from(step) / 10.0), &c.ids());
            prop_assert!(groups.len() <= c.len());
            previous = edges;
        }
    }
}
