//! Overlap-union combination of two partial cluster views, plus scoring
//! against ground truth.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::unionfind::UnionFind;

use crate::cluster::{ClusterSet, NodeId};

pub const DEFAULT_OVERLAP_MIN: usize = 1;

/// Merges two cluster views.
///
/// Clusters from either input are unioned whenever they share at least
/// `overlap_min` nodes, repeated until nothing more merges. With
/// `overlap_min > 1` two surviving clusters may still share a node or two;
/// each such node stays only in the largest cluster holding it (ties go to
/// the cluster with the smaller first member) so the output is a partition.
pub fn combine(a: &ClusterSet, b: &ClusterSet, overlap_min: usize) -> ClusterSet {
    let overlap_min = overlap_min.max(1);
    let mut groups: Vec<BTreeSet<NodeId>> = a
        .iter()
        .chain(b.iter())
        .map(|c| c.iter().copied().collect::<BTreeSet<_>>())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    loop {
        let mut uf = UnionFind::<usize>::new(groups.len());
        let mut merged_any = false;
        for i in 0..groups.len() {
            for j in (i + 1)..groups.len() {
                if groups[i].intersection(&groups[j]).take(overlap_min).count() >= overlap_min
                    && uf.union(i, j)
                {
                    merged_any = true;
                }
            }
        }
        if !merged_any {
            break;
        }
        let mut next: BTreeMap<usize, BTreeSet<NodeId>> = BTreeMap::new();
        for (i, g) in groups.iter().enumerate() {
            next.entry(uf.find(i)).or_default().extend(g.iter().copied());
        }
        groups = next.into_values().collect::<BTreeSet<_>>().into_iter().collect();
    }

    // Largest first, then by smallest member, decides who keeps shared nodes.
    groups.sort_by(|x, y| y.len().cmp(&x.len()).then_with(|| x.first().cmp(&y.first())));
    let mut taken = BTreeSet::new();
    let disjoint: Vec<Vec<NodeId>> = groups
        .into_iter()
        .map(|g| g.into_iter().filter(|n| taken.insert(*n)).collect())
        .collect();
    ClusterSet::new(disjoint).expect("members were de-duplicated")
}

/// Same node sets, order-insensitive.
pub fn exact_match(result: &ClusterSet, truth: &ClusterSet) -> bool {
    result == truth
}

fn pairs(n: u64) -> f64 {
    (n as f64) * (n.saturating_sub(1) as f64) / 2.0
}

/// Adjusted Rand index over the union of both partitions' nodes. A node
/// missing from one side counts as a singleton there.
pub fn adjusted_rand_index(result: &ClusterSet, truth: &ClusterSet) -> f64 {
    let universe: BTreeSet<NodeId> = result.nodes().union(&truth.nodes()).copied().collect();
    let n = universe.len() as u64;
    if n < 2 {
        return 1.0;
    }
    let label = |cs: &ClusterSet| {
        let mut labels = cs.labels();
        let mut next = cs.len();
        for &node in &universe {
            labels.entry(node).or_insert_with(|| {
                next += 1;
                next - 1
            });
        }
        labels
    };
    let (lr, lt) = (label(result), label(truth));

    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for node in &universe {
        let (r, t) = (lr[node], lt[node]);
        *table.entry((r, t)).or_default() += 1;
        *rows.entry(r).or_default() += 1;
        *cols.entry(t).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| pairs(c)).sum();
    let sum_rows: f64 = rows.values().map(|&c| pairs(c)).sum();
    let sum_cols: f64 = cols.values().map(|&c| pairs(c)).sum();
    let expected = sum_rows * sum_cols / pairs(n);
    let max = 0.5 * (sum_rows + sum_cols);
    if max == expected {
        // Both partitions are all-singletons or both a single cluster.
        return 1.0;
    }
    (index - expected) / (max - expected)
}
