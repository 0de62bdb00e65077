//! Feature-based frequency grid.
//!
//! The grid is a dense node-by-node co-presentation count matrix. Each
//! node is described by its whole count column, so two nodes count as
//! similar when they co-occur with the same others in the same
//! proportions, whether or not they co-occur much with each other.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cluster::{cosine, ClusterSet, NodeId};
use crate::error::{Error, Result};
use crate::ontology::Presentation;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    counts: Vec<Vec<u64>>,
    seen: BTreeSet<NodeId>,
}

impl FrequencyGrid {
    /// Grid pre-sized for ids `0..nodes`; it grows if larger ids arrive.
    pub fn new(nodes: usize) -> Self {
        Self {
            counts: vec![vec![0; nodes]; nodes],
            seen: BTreeSet::new(),
        }
    }

    fn grow_to(&mut self, n: usize) {
        if n <= self.counts.len() {
            return;
        }
        for row in &mut self.counts {
            row.resize(n, 0);
        }
        self.counts.resize_with(n, || vec![0; n]);
    }

    pub fn record(&mut self, presentation: &Presentation) {
        self.record_nodes(&presentation.nodes);
    }

    pub fn record_nodes(&mut self, nodes: &[NodeId]) {
        if let Some(max) = nodes.iter().max() {
            self.grow_to(max.index() + 1);
        }
        for (i, &a) in nodes.iter().enumerate() {
            self.seen.insert(a);
            for &b in &nodes[i + 1..] {
                if a != b {
                    self.counts[a.index()][b.index()] += 1;
                    self.counts[b.index()][a.index()] += 1;
                }
            }
        }
    }

    pub fn size(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, a: NodeId, b: NodeId) -> u64 {
        self.counts
            .get(a.index())
            .and_then(|r| r.get(b.index()))
            .copied()
            .unwrap_or(0)
    }

    pub fn seen(&self) -> &BTreeSet<NodeId> {
        &self.seen
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }

    fn row_f64(&self, node: NodeId) -> Vec<f64> {
        self.counts
            .get(node.index())
            .map(|r| r.iter().map(|&c| c as f64).collect())
            .unwrap_or_default()
    }

    /// The partner `node` co-occurred with most, if that count reaches
    /// `min_support`. Ties go to the smallest id.
    pub fn best_associate(&self, node: NodeId, min_support: u64) -> Result<Option<NodeId>> {
        if !self.seen.contains(&node) {
            return Err(Error::UnseenNode(node));
        }
        let row = &self.counts[node.index()];
        let best = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != node.index())
            .fold(None::<(usize, u64)>, |acc, (j, &c)| match acc {
                Some((_, bc)) if bc >= c => acc,
                _ => Some((j, c)),
            });
        Ok(best
            .filter(|&(_, c)| c >= min_support.max(1))
            .map(|(j, _)| NodeId::from(j)))
    }

    /// Weakly connected components of the best-associate graph.
    pub fn clusters(&self, min_support: u64) -> Result<ClusterSet> {
        if min_support < 1 {
            return Err(Error::param("min_support", min_support));
        }
        let mut edges = Vec::new();
        for &node in &self.seen {
            if let Some(partner) = self.best_associate(node, min_support)? {
                edges.push((node, partner));
            }
        }
        Ok(ClusterSet::from_edges(&self.seen, edges))
    }

    /// Cosine similarity of two nodes' count columns.
    pub fn profile_similarity(&self, a: NodeId, b: NodeId) -> f64 {
        cosine(&self.row_f64(a), &self.row_f64(b))
    }

    /// Components of the graph linking two seen nodes when they co-occurred
    /// at least `min_support` times and their count columns have cosine
    /// similarity of at least `min_similarity`. Nodes whose column matches
    /// nobody well enough stay singletons.
    pub fn profile_clusters(&self, min_support: u64, min_similarity: f64) -> Result<ClusterSet> {
        if min_support < 1 {
            return Err(Error::param("min_support", min_support));
        }
        if !(0.0..=1.0).contains(&min_similarity) {
            return Err(Error::param("grid min_similarity", min_similarity));
        }
        let rows: Vec<Vec<f64>> = (0..self.size())
            .map(|i| self.row_f64(NodeId::from(i)))
            .collect();
        let seen: Vec<NodeId> = self.seen.iter().copied().collect();
        let mut edges = Vec::new();
        for (k, &a) in seen.iter().enumerate() {
            for &b in &seen[k + 1..] {
                if self.count(a, b) >= min_support
                    && cosine(&rows[a.index()], &rows[b.index()]) >= min_similarity
                {
                    edges.push((a, b));
                }
            }
        }
        Ok(ClusterSet::from_edges(&self.seen, edges))
    }

    pub fn cluster_with(&self, params: &GridParams) -> Result<ClusterSet> {
        match params.linkage {
            GridLinkage::BestAssociate => self.clusters(params.min_support),
            GridLinkage::Profile => self.profile_clusters(params.min_support, params.min_similarity),
        }
    }

    /// CSV matrix dump with a header row and a leading id column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let n = self.size();
        let mut header = vec!["node".to_string()];
        header.extend((0..n).map(|j| j.to_string()));
        w.write_record(&header)?;
        for (i, row) in self.counts.iter().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<grid dump>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridLinkage {
    /// Each node points at its single most frequent partner.
    BestAssociate,
    /// Nodes with similar count columns are joined.
    Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub linkage: GridLinkage,
    pub min_support: u64,
    pub min_similarity: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            linkage: GridLinkage::Profile,
            min_support: 2,
            min_similarity: 0.8,
        }
    }
}
