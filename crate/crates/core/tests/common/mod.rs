//! Shared helpers for the integration suites: dataset loading, random
//! datasets and independent reference implementations used as oracles.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use fcso::{Clustering, Format, ItemId, TransactionDataset};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

pub fn mushroom() -> TransactionDataset {
    TransactionDataset::ingest(data_path("agaricus-lepiota.data"), &Format::uci_mushroom())
        .expect("mushroom data")
}

pub fn zoo() -> TransactionDataset {
    TransactionDataset::ingest(data_path("zoo.data"), &Format::uci_zoo()).expect("zoo data")
}

/// Basket dataset from item indices; labels optional.
pub fn baskets(rows: &[Vec<u8>], labels: Option<&[u8]>) -> TransactionDataset {
    let mut b = fcso::DatasetBuilder::baskets();
    for (i, row) in rows.iter().enumerate() {
        let label = labels.map(|l| format!("L{}", l[i]));
        b.push_basket(row.iter().map(|x| format!("i{x}")), label.as_deref())
            .unwrap();
    }
    b.finish().unwrap()
}

pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, items: u8, max_len: usize) -> Vec<Vec<u8>> {
    (0..n)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            (0..len).map(|_| rng.random_range(0..items)).collect()
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Raw records of a data file in a shuffled order, plus the source row of
/// each shuffled position.
pub fn shuffled_lines(text: &str, seed: u64) -> (String, Vec<usize>) {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let mut order: Vec<usize> = (0..lines.len()).collect();
    order.shuffle(&mut rng(seed));
    let mut out = String::new();
    for &i in &order {
        out.push_str(lines[i]);
        out.push('\n');
    }
    (out, order)
}

/// Partition with every member id passed through `map`.
pub fn mapped_partition(c: &Clustering, map: &[usize]) -> BTreeSet<Vec<usize>> {
    c.clusters()
        .iter()
        .map(|cl| {
            let mut m: Vec<usize> = cl.members().iter().map(|&x| map[x]).collect();
            m.sort_unstable();
            m
        })
        .collect()
}

pub fn set_of_sets(groups: &[&[usize]]) -> BTreeSet<Vec<usize>> {
    groups
        .iter()
        .map(|g| {
            let mut v = g.to_vec();
            v.sort_unstable();
            v
        })
        .collect()
}

fn item_counts(ds: &TransactionDataset, members: &[usize]) -> BTreeMap<ItemId, u64> {
    let mut counts = BTreeMap::new();
    for &m in members {
        for &item in &ds.transactions()[m].items {
            *counts.entry(item).or_insert(0u64) += 1;
        }
    }
    counts
}

/// Overlap of two member sets as an exact fraction `(num, den)`.
pub fn oracle_similarity(ds: &TransactionDataset, a: &[usize], b: &[usize]) -> (u128, u128) {
    let (ca, cb) = (item_counts(ds, a), item_counts(ds, b));
    let (sa, sb): (u64, u64) = (ca.values().sum(), cb.values().sum());
    let mut shared_a = 0u64;
    let mut shared_b = 0u64;
    for (item, &n) in &ca {
        if let Some(&m) = cb.get(item) {
            shared_a += n;
            shared_b += m;
        }
    }
    (
        u128::from(shared_a) * u128::from(shared_b),
        u128::from(sa) * u128::from(sb),
    )
}

/// Reference refinement over member lists given in cluster-id order, with
/// the threshold as the exact fraction `alpha_num / alpha_den`. Returns the
/// final clusters and the number of passes.
pub fn oracle_refine(
    ds: &TransactionDataset,
    initial: Vec<Vec<usize>>,
    alpha_num: u128,
    alpha_den: u128,
) -> (Vec<Vec<usize>>, usize) {
    let mut clusters = initial;
    let mut passes = 0;
    loop {
        passes += 1;
        let k = clusters.len();
        let sims: Vec<Vec<(u128, u128)>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| oracle_similarity(ds, &clusters[i], &clusters[j]))
                    .collect()
            })
            .collect();
        let mut parent: Vec<usize> = (0..k).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for (i, row) in sims.iter().enumerate() {
            let mut best: Option<(usize, (u128, u128))> = None;
            for (j, &s) in row.iter().enumerate() {
                if j == i {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((_, b)) => s.0 * b.1 > b.0 * s.1,
                };
                if better {
                    best = Some((j, s));
                }
            }
            if let Some((j, (num, den))) = best {
                if num * alpha_den > alpha_num * den {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, members) in clusters.iter().enumerate() {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().extend(members);
        }
        let merged: Vec<Vec<usize>> = groups
            .into_values()
            .map(|mut g| {
                g.sort_unstable();
                g
            })
            .collect();
        let done = merged.len() == k;
        clusters = merged;
        if done {
            return (clusters, passes);
        }
    }
}

/// LargeItem cost of a partition with `theta = theta_num / theta_den`:
/// `w * |distinct small items| + (sum of large item counts - distinct large items)`.
pub fn oracle_li_cost(
    ds: &TransactionDataset,
    parts: &[Vec<usize>],
    theta_num: u64,
    theta_den: u64,
    w: f64,
) -> f64 {
    let mut small = BTreeSet::new();
    let mut large = BTreeSet::new();
    let mut large_total = 0usize;
    for p in parts.iter().filter(|p| !p.is_empty()) {
        let size = p.len() as u64;
        for (item, n) in item_counts(ds, p) {
            if n * theta_den >= theta_num * size {
                large.insert(item);
                large_total += 1;
            } else {
                small.insert(item);
            }
        }
    }
    w * small.len() as f64 + (large_total - large.len()) as f64
}

/// Every set partition of `0..n`, as restricted growth strings.
pub fn all_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn go(i: usize, n: usize, code: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            let mut parts = vec![Vec::new(); max];
            for (t, &c) in code.iter().enumerate() {
                parts[c].push(t);
            }
            out.push(parts);
            return;
        }
        for c in 0..=max {
            code.push(c);
            go(i + 1, n, code, max.max(c + 1), out);
            code.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, &mut Vec::new(), 0, &mut out);
    out
}
