//! Node identifiers and the disjoint cluster collection shared by every
//! clusterer in the crate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense node index. Ontology nodes are numbered `0..N`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

impl From<usize> for NodeId {
    fn from(v: usize) -> Self {
        NodeId(u32::try_from(v).expect("node index exceeds u32"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A collection of pairwise disjoint, non-empty node sets.
///
/// Always held in canonical form: members ascending inside each cluster and
/// clusters ordered by their smallest member, so two partitions with the
/// same node sets compare equal and serialize to identical bytes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct ClusterSet {
    clusters: Vec<Vec<NodeId>>,
}

impl ClusterSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a cluster set, rejecting overlapping clusters. Empty input
    /// sets are dropped.
    pub fn new<I, C>(sets: I) -> Result<Self>
    where
        I: IntoIterator<Item = C>,
        C: IntoIterator<Item = NodeId>,
    {
        let mut seen = BTreeSet::new();
        let mut clusters = Vec::new();
        for set in sets {
            let members: BTreeSet<NodeId> = set.into_iter().collect();
            if members.is_empty() {
                continue;
            }
            for &node in &members {
                if !seen.insert(node) {
                    return Err(Error::InvalidParameter {
                        name: "clusters",
                        value: format!("node {node} appears in more than one cluster"),
                    });
                }
            }
            clusters.push(members.into_iter().collect());
        }
        Ok(Self::canonical(clusters))
    }

    /// Connected components of an undirected edge list restricted to
    /// `nodes`. Nodes without edges come back as singletons; edges touching
    /// a node outside `nodes` are ignored.
    pub fn from_edges<E>(nodes: &BTreeSet<NodeId>, edges: E) -> Self
    where
        E: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let index: BTreeMap<NodeId, usize> =
            nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let order: Vec<NodeId> = nodes.iter().copied().collect();
        let mut uf = UnionFind::<usize>::new(order.len());
        for (a, b) in edges {
            if let (Some(&ia), Some(&ib)) = (index.get(&a), index.get(&b)) {
                uf.union(ia, ib);
            }
        }
        let mut groups: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
        for (i, &node) in order.iter().enumerate() {
            groups.entry(uf.find(i)).or_default().push(node);
        }
        Self::canonical(groups.into_values().collect())
    }

    fn canonical(mut clusters: Vec<Vec<NodeId>>) -> Self {
        for c in &mut clusters {
            c.sort_unstable();
            c.dedup();
        }
        clusters.retain(|c| !c.is_empty());
        clusters.sort_unstable_by_key(|c| c[0]);
        Self { clusters }
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[NodeId]> {
        self.clusters.iter().map(Vec::as_slice)
    }

    pub fn clusters(&self) -> &[Vec<NodeId>] {
        &self.clusters
    }

    /// Every node covered by some cluster.
    pub fn nodes(&self) -> BTreeSet<NodeId> {
        self.clusters.iter().flatten().copied().collect()
    }

    pub fn singleton_count(&self) -> usize {
        self.clusters.iter().filter(|c| c.len() == 1).count()
    }

    pub fn non_singleton_count(&self) -> usize {
        self.len() - self.singleton_count()
    }

    /// Cluster index of every covered node.
    pub fn labels(&self) -> BTreeMap<NodeId, usize> {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(k, c)| c.iter().map(move |&n| (n, k)))
            .collect()
    }

    /// Copy without singleton clusters.
    pub fn without_singletons(&self) -> Self {
        Self {
            clusters: self.clusters.iter().filter(|c| c.len() > 1).cloned().collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("cluster sets always serialize")
    }
}

impl<'de> Deserialize<'de> for ClusterSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<Vec<NodeId>>::deserialize(d)?;
        ClusterSet::new(raw).map_err(serde::de::Error::custom)
    }
}

/// Cosine similarity of two equal-length vectors; zero when either is zero.
pub(crate) fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}
