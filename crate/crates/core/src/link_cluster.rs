//! Value-based linking clusterer.
//!
//! Every co-presented node pair gets a unit link increment. Clustering then
//! works on the link graph: [`LinkStore::clusters`] returns plain
//! thresholded components, while [`LinkStore::confirmed_clusters`] (the
//! experiment default) only keeps a strong link when the two endpoints'
//! link rows also look alike, and re-homes leftover fragments onto the core
//! they are most typically linked to.
//!
//! A single cross-group link can be the strongest link either endpoint has,
//! so raw weight alone cannot tell it apart from an intra-group link. The
//! neighbourhood check is what rejects it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cluster::{cosine, ClusterSet, NodeId};
use crate::error::{Error, Result};
use crate::ontology::Presentation;

/// Entries that decay below this weight are dropped.
pub const DECAY_CUTOFF: f64 = 0.5;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkStore {
    weights: BTreeMap<(NodeId, NodeId), f64>,
    seen: BTreeSet<NodeId>,
    observation_count: u64,
}

fn key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    (a.min(b), a.max(b))
}

impl LinkStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, presentation: &Presentation) {
        self.observe_nodes(&presentation.nodes);
    }

    /// Adds one to the weight of every unordered pair in `nodes`.
    pub fn observe_nodes(&mut self, nodes: &[NodeId]) {
        for (i, &a) in nodes.iter().enumerate() {
            self.seen.insert(a);
            for &b in &nodes[i + 1..] {
                if a != b {
                    *self.weights.entry(key(a, b)).or_insert(0.0) += 1.0;
                }
            }
        }
        self.observation_count += 1;
    }

    pub fn weight(&self, a: NodeId, b: NodeId) -> f64 {
        self.weights.get(&key(a, b)).copied().unwrap_or(0.0)
    }

    pub fn observation_count(&self) -> u64 {
        self.observation_count
    }

    pub fn seen(&self) -> &BTreeSet<NodeId> {
        &self.seen
    }

    /// Non-zero links, keyed with the smaller id first.
    pub fn links(&self) -> impl Iterator<Item = ((NodeId, NodeId), f64)> + '_ {
        self.weights.iter().map(|(&k, &w)| (k, w))
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.values().sum()
    }

    /// Multiplies every weight by `factor` and drops entries that fall
    /// under [`DECAY_CUTOFF`]. `factor == 1` is the identity.
    pub fn decay(&mut self, factor: f64) -> Result<()> {
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(Error::param("decay factor", factor));
        }
        if factor == 1.0 {
            return Ok(());
        }
        self.weights.retain(|_, w| {
            *w *= factor;
            *w >= DECAY_CUTOFF
        });
        Ok(())
    }

    /// Connected components over links with weight `>= threshold`. Seen
    /// nodes without such a link become singletons; unseen nodes are left
    /// out.
    pub fn clusters(&self, threshold: f64) -> Result<ClusterSet> {
        if !(threshold >= 1.0) {
            return Err(Error::param("link threshold", threshold));
        }
        let edges = self
            .weights
            .iter()
            .filter(|(_, &w)| w >= threshold)
            .map(|(&k, _)| k);
        Ok(ClusterSet::from_edges(&self.seen, edges))
    }

    /// Dense symmetric weight matrix over ids `0..=max seen id`.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.seen.iter().next_back().map_or(0, |n| n.index() + 1);
        let mut m = vec![vec![0.0; n]; n];
        for (&(a, b), &w) in &self.weights {
            m[a.index()][b.index()] = w;
            m[b.index()][a.index()] = w;
        }
        m
    }

    /// Cosine similarity of the two nodes' link rows.
    pub fn structural_similarity(&self, a: NodeId, b: NodeId) -> f64 {
        let m = self.dense();
        match (m.get(a.index()), m.get(b.index())) {
            (Some(ra), Some(rb)) => cosine(ra, rb),
            _ => 0.0,
        }
    }

    /// Structurally confirmed clustering.
    ///
    /// 1. A link `(a, b)` is kept when its weight reaches the threshold and
    ///    the cosine of the two link rows reaches `min_similarity`.
    /// 2. Components of size `>= core_min` are cores.
    /// 3. Every smaller fragment joins the core with the highest median
    ///    link weight between the fragment's members and the core's
    ///    members, provided that median is positive and strictly beats the
    ///    runner-up. Otherwise the fragment stays on its own.
    pub fn confirmed_clusters(&self, params: &LinkParams) -> Result<ClusterSet> {
        params.validate()?;
        let threshold = params.threshold_for(self.observation_count);
        let m = self.dense();
        let edges: Vec<(NodeId, NodeId)> = self
            .weights
            .iter()
            .filter(|&(&(a, b), &w)| {
                w >= threshold && cosine(&m[a.index()], &m[b.index()]) >= params.min_similarity
            })
            .map(|(&k, _)| k)
            .collect();
        let components = ClusterSet::from_edges(&self.seen, edges);

        let (cores, fragments): (Vec<&[NodeId]>, Vec<&[NodeId]>) =
            components.iter().partition(|c| c.len() >= params.core_min);
        let mut merged: Vec<Vec<NodeId>> = cores.iter().map(|c| c.to_vec()).collect();
        let mut loose = Vec::new();
        for fragment in fragments {
            let mut scores: Vec<(f64, usize)> = cores
                .iter()
                .enumerate()
                .map(|(k, core)| {
                    let mut ws: Vec<f64> = fragment
                        .iter()
                        .flat_map(|&a| core.iter().map(move |&b| (a, b)))
                        .map(|(a, b)| m[a.index()][b.index()])
                        .collect();
                    (median(&mut ws), k)
                })
                .collect();
            scores.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
            match scores.as_slice() {
                [(best, k), rest @ ..]
                    if *best > 0.0 && rest.first().is_none_or(|(second, _)| best > second) =>
                {
                    merged[*k].extend_from_slice(fragment)
                }
                _ => loose.push(fragment.to_vec()),
            }
        }
        merged.extend(loose);
        ClusterSet::new(merged)
    }
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}

/// Link threshold used when none is configured:
/// `max(2, ceil(0.01 * observations))`.
pub fn default_threshold(observations: u64) -> f64 {
    (0.01 * observations as f64).ceil().max(2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// `None` picks [`default_threshold`] from the observation count.
    pub threshold: Option<f64>,
    pub min_similarity: f64,
    pub core_min: usize,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            threshold: None,
            min_similarity: 0.8,
            core_min: 3,
        }
    }
}

impl LinkParams {
    pub fn threshold_for(&self, observations: u64) -> f64 {
        self.threshold.unwrap_or_else(|| default_threshold(observations))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.threshold {
            if !(t >= 1.0) {
                return Err(Error::param("link threshold", t));
            }
        }
        if !(0.0..=1.0).contains(&self.min_similarity) {
            return Err(Error::param("link min_similarity", self.min_similarity));
        }
        if self.core_min < 1 {
            return Err(Error::param("core_min", self.core_min));
        }
        Ok(())
    }
}
