//! Ground-truth ontology generation and the stochastic presentation stream
//! that feeds both clusterers.
//!
//! An ontology is a flat set of disjoint patterns (concept groups) plus a
//! handful of noise links joining nodes of different patterns. Each
//! presentation shows a few nodes of one pattern and, with probability
//! `noise_prob`, the far endpoint of a noise link touching one of them.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::{ClusterSet, NodeId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub num_patterns: usize,
    pub instances_per_pattern: usize,
    pub num_noise_links: usize,
    pub max_presented: usize,
    pub noise_prob: f64,
    pub iterations: usize,
    pub rng_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            num_patterns: 4,
            instances_per_pattern: 10,
            num_noise_links: 6,
            max_presented: 5,
            noise_prob: 0.5,
            iterations: 500,
            rng_seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn node_count(&self) -> usize {
        self.num_patterns * self.instances_per_pattern
    }

    /// Number of unordered node pairs whose endpoints lie in different
    /// patterns.
    pub fn cross_pair_count(&self) -> usize {
        let n = self.node_count();
        let m = self.instances_per_pattern;
        n * n.saturating_sub(1) / 2 - self.num_patterns * (m * m.saturating_sub(1) / 2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_presented < 1 {
            return Err(Error::InvalidConfig("max_presented must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.noise_prob) {
            return Err(Error::InvalidConfig(format!(
                "noise_prob must lie in [0, 1], got {}",
                self.noise_prob
            )));
        }
        if u32::try_from(self.node_count()).is_err() {
            return Err(Error::InvalidConfig("too many nodes".into()));
        }
        let available = self.cross_pair_count();
        if self.num_noise_links > available {
            return Err(Error::InvalidConfig(format!(
                "{} noise links requested but only {available} cross-pattern pairs exist",
                self.num_noise_links
            )));
        }
        Ok(())
    }
}

/// Flat ground-truth ontology.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ontology {
    patterns: Vec<Vec<NodeId>>,
    /// Normalised so that `.0 < .1`; sorted.
    noise_links: Vec<(NodeId, NodeId)>,
    #[serde(skip)]
    pattern_of: Vec<usize>,
}

impl Ontology {
    /// Checks the structural invariants: patterns disjoint and covering
    /// `0..N` densely, noise links distinct and cross-pattern.
    pub fn new(patterns: Vec<Vec<NodeId>>, noise_links: Vec<(NodeId, NodeId)>) -> Result<Self> {
        let n: usize = patterns.iter().map(Vec::len).sum();
        let mut pattern_of = vec![usize::MAX; n];
        for (p, members) in patterns.iter().enumerate() {
            for node in members {
                let slot = pattern_of.get_mut(node.index()).ok_or_else(|| {
                    Error::InvalidConfig(format!("node {node} outside dense range 0..{n}"))
                })?;
                if *slot != usize::MAX {
                    return Err(Error::InvalidConfig(format!("node {node} in two patterns")));
                }
                *slot = p;
            }
        }
        let mut links = BTreeSet::new();
        for &(a, b) in &noise_links {
            let (pa, pb) = match (pattern_of.get(a.index()), pattern_of.get(b.index())) {
                (Some(&pa), Some(&pb)) => (pa, pb),
                _ => return Err(Error::InvalidConfig(format!("noise link {a}-{b} out of range"))),
            };
            if pa == pb {
                return Err(Error::InvalidConfig(format!(
                    "noise link {a}-{b} lies inside one pattern"
                )));
            }
            if !links.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidConfig(format!("duplicate noise link {a}-{b}")));
            }
        }
        let patterns = patterns
            .into_iter()
            .map(|mut p| {
                p.sort_unstable();
                p
            })
            .collect();
        Ok(Self {
            patterns,
            noise_links: links.into_iter().collect(),
            pattern_of,
        })
    }

    pub fn patterns(&self) -> &[Vec<NodeId>] {
        &self.patterns
    }

    pub fn noise_links(&self) -> &[(NodeId, NodeId)] {
        &self.noise_links
    }

    pub fn node_count(&self) -> usize {
        self.pattern_of.len()
    }

    pub fn pattern_of(&self, node: NodeId) -> Option<usize> {
        self.pattern_of.get(node.index()).copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count()).map(NodeId::from)
    }
}

/// Builds the ontology: pattern `p` owns ids `p*m .. (p+1)*m`, and the noise
/// links are drawn uniformly without replacement from all cross-pattern
/// pairs.
pub fn generate_ontology<R: Rng + ?Sized>(config: &ExperimentConfig, rng: &mut R) -> Result<Ontology> {
    config.validate()?;
    let m = config.instances_per_pattern;
    let patterns: Vec<Vec<NodeId>> = (0..config.num_patterns)
        .map(|p| (p * m..(p + 1) * m).map(NodeId::from).collect())
        .collect();

    let n = config.node_count();
    let cross: Vec<(NodeId, NodeId)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i / m != j / m)
        .map(|(i, j)| (NodeId::from(i), NodeId::from(j)))
        .collect();
    let noise_links = index::sample(rng, cross.len(), config.num_noise_links)
        .into_iter()
        .map(|k| cross[k])
        .collect();
    Ontology::new(patterns, noise_links)
}

/// One stimulus event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    /// In sampling order; a noise endpoint, if any, is last.
    pub nodes: Vec<NodeId>,
    pub source_pattern: usize,
    pub used_noise_link: Option<(NodeId, NodeId)>,
}

/// Draws one presentation.
///
/// Picks a pattern uniformly, a size `k` uniformly in `1..=max_presented`
/// (capped at the pattern size), then `k` distinct members. A noise coin
/// with bias `noise_prob` is then flipped; on success one noise link
/// incident to a picked node is chosen uniformly and its cross-pattern
/// endpoint is appended.
pub fn sample_presentation<R: Rng + ?Sized>(
    ontology: &Ontology,
    config: &ExperimentConfig,
    rng: &mut R,
) -> Result<Presentation> {
    if ontology.patterns.is_empty() {
        return Err(Error::InvalidConfig("cannot sample from an empty ontology".into()));
    }
    let source_pattern = rng.gen_range(0..ontology.patterns.len());
    let members = &ontology.patterns[source_pattern];
    if members.is_empty() {
        return Err(Error::InvalidConfig(format!("pattern {source_pattern} is empty")));
    }
    let k = rng.gen_range(1..=config.max_presented).min(members.len());
    let mut nodes: Vec<NodeId> = index::sample(rng, members.len(), k)
        .into_iter()
        .map(|i| members[i])
        .collect();

    let mut used_noise_link = None;
    if rng.gen_bool(config.noise_prob) {
        let incident: Vec<(NodeId, NodeId)> = ontology
            .noise_links
            .iter()
            .copied()
            .filter(|(a, b)| nodes.contains(a) || nodes.contains(b))
            .collect();
        if !incident.is_empty() {
            let link = incident[rng.gen_range(0..incident.len())];
            let far = if nodes.contains(&link.0) { link.1 } else { link.0 };
            if !nodes.contains(&far) {
                nodes.push(far);
            }
            used_noise_link = Some(link);
        }
    }
    Ok(Presentation {
        nodes,
        source_pattern,
        used_noise_link,
    })
}

/// The patterns as a canonical cluster set.
pub fn ground_truth_partition(ontology: &Ontology) -> ClusterSet {
    ClusterSet::new(ontology.patterns.iter().cloned()).expect("ontology patterns are disjoint")
}

#[derive(Debug, Serialize, Deserialize)]
struct LogRow {
    iteration: usize,
    source_pattern: usize,
    node_ids: String,
    noise_link: String,
}

/// Writes the presentation stream as CSV:
/// `iteration,source_pattern,node_ids,noise_link` with node ids joined by
/// `;` and the noise link as `a-b` (empty when unused).
pub fn write_presentation_log<W: Write>(writer: W, presentations: &[Presentation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (iteration, p) in presentations.iter().enumerate() {
        let node_ids = p
            .nodes
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(";");
        let noise_link = p
            .used_noise_link
            .map(|(a, b)| format!("{a}-{b}"))
            .unwrap_or_default();
        w.serialize(LogRow {
            iteration,
            source_pattern: p.source_pattern,
            node_ids,
            noise_link,
        })?;
    }
    w.flush().map_err(|e| Error::io("<presentation log>", e))?;
    Ok(())
}

pub fn read_presentation_log<R: Read>(reader: R) -> Result<Vec<Presentation>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (expected, row) in r.deserialize::<LogRow>().enumerate() {
        let row = row?;
        let line = expected as u64 + 2;
        let bad = |reason: String| Error::MalformedLog { line, reason };
        if row.iteration != expected {
            return Err(bad(format!("expected iteration {expected}, got {}", row.iteration)));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<u32>()
                .map(NodeId)
                .map_err(|e| bad(format!("bad node id {s:?}: {e}")))
        };
        let nodes = row
            .node_ids
            .split(';')
            .filter(|s| !s.is_empty())
            .map(parse)
            .collect::<Result<Vec<_>>>()?;
        if nodes.is_empty() {
            return Err(bad("presentation without nodes".into()));
        }
        let used_noise_link = match row.noise_link.trim() {
            "" => None,
            s => {
                let (a, b) = s
                    .split_once('-')
                    .ok_or_else(|| bad(format!("bad noise link {s:?}")))?;
                Some((parse(a)?, parse(b)?))
            }
        };
        out.push(Presentation {
            nodes,
            source_pattern: row.source_pattern,
            used_noise_link,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(p: usize, m: usize, links: usize) -> ExperimentConfig {
        ExperimentConfig {
            num_patterns: p,
            instances_per_pattern: m,
            num_noise_links: links,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn default_ontology_has_forty_nodes_and_six_links() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let o = generate_ontology(&ExperimentConfig::default(), &mut rng).unwrap();
        assert_eq!(o.node_count(), 40);
        assert_eq!(o.patterns().len(), 4);
        assert!(o.patterns().iter().all(|p| p.len() == 10));
        assert_eq!(o.noise_links().len(), 6);
        for &(a, b) in o.noise_links() {
            assert_ne!(o.pattern_of(a), o.pattern_of(b));
        }
    }

    #[test]
    fn single_pattern_has_no_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let o = generate_ontology(&cfg(1, 5, 0), &mut rng).unwrap();
        assert_eq!(o.node_count(), 5);
        assert!(o.noise_links().is_empty());
        assert!(generate_ontology(&cfg(1, 5, 1), &mut rng).is_err());
    }

    #[test]
    fn forced_sampling_takes_every_cross_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let o = generate_ontology(&cfg(2, 2, 4), &mut rng).unwrap();
        let expected: Vec<(NodeId, NodeId)> = [(0, 2), (0, 3), (1, 2), (1, 3)]
            .iter()
            .map(|&(a, b)| (NodeId(a), NodeId(b)))
            .collect();
        assert_eq!(o.noise_links(), expected.as_slice());
        assert!(generate_ontology(&cfg(2, 2, 5), &mut rng).is_err());
    }

    #[test]
    fn node_ids_are_pattern_contiguous() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let o = generate_ontology(&ExperimentConfig::default(), &mut rng).unwrap();
        for (p, members) in o.patterns().iter().enumerate() {
            let want: Vec<NodeId> = (p * 10..p * 10 + 10).map(NodeId::from).collect();
            assert_eq!(members, &want);
        }
    }

    #[test]
    fn presentations_respect_size_and_purity() {
        let config = ExperimentConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let o = generate_ontology(&config, &mut rng).unwrap();
        for _ in 0..2000 {
            let p = sample_presentation(&o, &config, &mut rng).unwrap();
            assert!(!p.nodes.is_empty() && p.nodes.len() <= config.max_presented + 1);
            let distinct: BTreeSet<_> = p.nodes.iter().collect();
            assert_eq!(distinct.len(), p.nodes.len());
            let foreign = p
                .nodes
                .iter()
                .filter(|&&n| o.pattern_of(n) != Some(p.source_pattern))
                .count();
            match p.used_noise_link {
                None => assert_eq!(foreign, 0),
                Some((a, b)) => {
                    assert_eq!(foreign, 1);
                    assert!(o.noise_links().contains(&(a, b)));
                    assert!(p.nodes.contains(&a) && p.nodes.contains(&b));
                }
            }
        }
    }

    #[test]
    fn zero_noise_prob_keeps_presentations_pure() {
        let config = ExperimentConfig {
            noise_prob: 0.0,
            ..ExperimentConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let o = generate_ontology(&config, &mut rng).unwrap();
        for _ in 0..1000 {
            let p = sample_presentation(&o, &config, &mut rng).unwrap();
            assert!(p.used_noise_link.is_none());
            assert!(p.nodes.iter().all(|&n| o.pattern_of(n) == Some(p.source_pattern)));
        }
    }

    #[test]
    fn ground_truth_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let o = generate_ontology(&ExperimentConfig::default(), &mut rng).unwrap();
        let gt = ground_truth_partition(&o);
        assert_eq!(gt.len(), 4);
        assert!(gt.iter().all(|c| c.len() == 10));

        let one = generate_ontology(&cfg(1, 3, 0), &mut rng).unwrap();
        assert_eq!(ground_truth_partition(&one).len(), 1);

        let empty = Ontology::new(vec![], vec![]).unwrap();
        assert!(ground_truth_partition(&empty).is_empty());
    }

    #[test]
    fn invalid_ontologies_are_rejected() {
        let p = |v: &[u32]| v.iter().copied().map(NodeId).collect::<Vec<_>>();
        assert!(Ontology::new(vec![p(&[0, 1]), p(&[1, 2])], vec![]).is_err());
        assert!(Ontology::new(vec![p(&[0, 1]), p(&[2, 3])], vec![(NodeId(0), NodeId(1))]).is_err());
        assert!(Ontology::new(
            vec![p(&[0, 1]), p(&[2, 3])],
            vec![(NodeId(0), NodeId(2)), (NodeId(2), NodeId(0))]
        )
        .is_err());
        assert!(Ontology::new(vec![p(&[0, 5])], vec![]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let bad_prob = ExperimentConfig {
            noise_prob: 1.5,
            ..ExperimentConfig::default()
        };
        assert!(bad_prob.validate().is_err());
        let bad_k = ExperimentConfig {
            max_presented: 0,
            ..ExperimentConfig::default()
        };
        assert!(bad_k.validate().is_err());
        assert_eq!(ExperimentConfig::default().cross_pair_count(), 600);
    }

    #[test]
    fn log_round_trip_and_format() {
        let ps = vec![
            Presentation {
                nodes: vec![NodeId(3), NodeId(1)],
                source_pattern: 0,
                used_noise_link: None,
            },
            Presentation {
                nodes: vec![NodeId(12), NodeId(27)],
                source_pattern: 1,
                used_noise_link: Some((NodeId(12), NodeId(27))),
            },
        ];
        let mut buf = Vec::new();
        write_presentation_log(&mut buf, &ps).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "iteration,source_pattern,node_ids,noise_link\n0,0,3;1,\n1,1,12;27,12-27\n"
        );
        assert_eq!(read_presentation_log(buf.as_slice()).unwrap(), ps);
    }

    #[test]
    fn malformed_log_is_reported() {
        let text = "iteration,source_pattern,node_ids,noise_link\n0,0,3;x,\n";
        assert!(matches!(
            read_presentation_log(text.as_bytes()),
            Err(Error::MalformedLog { line: 2, .. })
        ));
        let skipped = "iteration,source_pattern,node_ids,noise_link\n1,0,3,\n";
        assert!(read_presentation_log(skipped.as_bytes()).is_err());
    }
}
