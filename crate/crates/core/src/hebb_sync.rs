//! Spatial network with length-driven firing and Hebbian binding.
//!
//! Link length sets firing rate: a stimulated neuron fires with
//! probability `min(1, base / d * input)`, where `d` is the length to its
//! nearest stimulated neighbour. A stimulated neuron with no stimulated
//! neighbour does not fire. Pairs that fire in the same step strengthen
//! their link and enter a depolarised hold for `t_ltp` steps; one-sided
//! firing weakens the link. Neurons that keep firing together are then
//! grouped by [`bind`].

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::{ClusterSet, NodeId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiringMode {
    /// One Bernoulli draw per stimulated neuron per step.
    Stochastic,
    /// A neuron with firing probability `p` fires at step `t` exactly when
    /// `floor((t + 1) p) > floor(t p)`, so equal probabilities give equal
    /// spike times and `p = 1` fires every step.
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncParams {
    pub base: f64,
    /// Potentiation rate.
    pub alpha: f64,
    /// Depression rate.
    pub beta: f64,
    /// Steps a neuron stays depolarised after co-firing.
    pub t_ltp: u32,
    /// Threshold multiplier while depolarised.
    pub depolarised_factor: f64,
    pub mode: FiringMode,
}

impl Default for SyncParams {
    fn default() -> Self {
        Self {
            base: 1.0,
            alpha: 0.1,
            beta: 0.05,
            t_ltp: 50,
            depolarised_factor: 0.5,
            mode: FiringMode::Stochastic,
        }
    }
}

impl SyncParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.base > 0.0 && self.base.is_finite()) {
            return Err(Error::param("base", self.base));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::param("alpha", self.alpha));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::param("beta", self.beta));
        }
        if !(self.depolarised_factor > 0.0 && self.depolarised_factor <= 1.0) {
            return Err(Error::param("depolarised_factor", self.depolarised_factor));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FiringEvent {
    pub neuron: NodeId,
    pub time: u64,
}

/// `base / length`, capped at one event per step.
pub fn firing_rate(length: f64, base: f64) -> Result<f64> {
    if !(length > 0.0) {
        return Err(Error::NonPositiveLength(length));
    }
    Ok((base / length).min(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialNetwork {
    n: usize,
    /// Row-major, `INFINITY` where there is no link.
    length: Vec<f64>,
    weight: Vec<f64>,
    ltp_timer: Vec<u32>,
}

impl SpatialNetwork {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            length: vec![f64::INFINITY; n * n],
            weight: vec![0.0; n * n],
            ltp_timer: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn check(&self, node: NodeId) -> Result<usize> {
        let i = node.index();
        if i < self.n {
            Ok(i)
        } else {
            Err(Error::UnknownNode(node))
        }
    }

    /// Creates or re-lengths the link between `a` and `b`.
    pub fn connect(&mut self, a: NodeId, b: NodeId, length: f64) -> Result<()> {
        let (i, j) = (self.check(a)?, self.check(b)?);
        if !(length > 0.0) || i == j {
            return Err(Error::NonPositiveLength(length));
        }
        self.length[i * self.n + j] = length;
        self.length[j * self.n + i] = length;
        Ok(())
    }

    pub fn length(&self, a: NodeId, b: NodeId) -> f64 {
        self.length[a.index() * self.n + b.index()]
    }

    pub fn weight(&self, a: NodeId, b: NodeId) -> f64 {
        self.weight[a.index() * self.n + b.index()]
    }

    pub fn ltp_timer(&self, node: NodeId) -> u32 {
        self.ltp_timer[node.index()]
    }

    /// Linked pairs `(a, b)` with `a < b`.
    pub fn links(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.n).flat_map(move |i| {
            ((i + 1)..self.n)
                .filter(move |&j| self.length[i * self.n + j].is_finite())
                .map(move |j| (NodeId::from(i), NodeId::from(j)))
        })
    }

    /// Length from `node` to its nearest stimulated linked neighbour.
    fn drive_length(&self, i: usize, stimulated: &BTreeMap<usize, f64>) -> f64 {
        stimulated
            .keys()
            .filter(|&&j| j != i)
            .map(|&j| self.length[i * self.n + j])
            .fold(f64::INFINITY, f64::min)
    }

    /// Advances the network by one step and returns who fired.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        stimulus: &BTreeMap<NodeId, f64>,
        t: u64,
        params: &SyncParams,
        rng: &mut R,
    ) -> Result<Vec<FiringEvent>> {
        params.validate()?;
        let mut inputs = BTreeMap::new();
        for (&node, &x) in stimulus {
            let i = self.check(node)?;
            if !(x >= 0.0) {
                return Err(Error::param("stimulus", x));
            }
            if x > 0.0 {
                inputs.insert(i, x);
            }
        }

        let depolarised: Vec<bool> = self.ltp_timer.iter().map(|&t| t > 0).collect();
        for timer in &mut self.ltp_timer {
            *timer = timer.saturating_sub(1);
        }

        let mut fired = vec![false; self.n];
        for (&i, &x) in &inputs {
            let d = self.drive_length(i, &inputs);
            let mut p = if d.is_finite() {
                (firing_rate(d, params.base)? * x).min(1.0)
            } else {
                0.0
            };
            if depolarised[i] {
                p = (p / params.depolarised_factor).min(1.0);
            }
            fired[i] = match params.mode {
                FiringMode::Stochastic => rng.gen::<f64>() < p,
                FiringMode::Deterministic => {
                    ((t + 1) as f64 * p).floor() > (t as f64 * p).floor()
                }
            };
        }

        let x = |i: usize| inputs.get(&i).copied().unwrap_or(0.0);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if !self.length[i * self.n + j].is_finite() {
                    continue;
                }
                let w = self.weight[i * self.n + j];
                let next = match (fired[i], fired[j]) {
                    (true, true) => {
                        self.ltp_timer[i] = params.t_ltp;
                        self.ltp_timer[j] = params.t_ltp;
                        w + params.alpha * x(i) * x(j)
                    }
                    (true, false) => (w - params.beta * x(i)).max(0.0),
                    (false, true) => (w - params.beta * x(j)).max(0.0),
                    (false, false) => w,
                };
                self.weight[i * self.n + j] = next;
                self.weight[j * self.n + i] = next;
            }
        }

        Ok(fired
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(i, _)| FiringEvent {
                neuron: NodeId::from(i),
                time: t,
            })
            .collect())
    }

    /// Runs `steps` steps under a constant stimulus starting at step 0.
    pub fn simulate<R: Rng + ?Sized>(
        &mut self,
        stimulus: &BTreeMap<NodeId, f64>,
        steps: u64,
        params: &SyncParams,
        rng: &mut R,
    ) -> Result<Vec<FiringEvent>> {
        let mut events = Vec::new();
        for t in 0..steps {
            events.extend(self.step(stimulus, t, params, rng)?);
        }
        Ok(events)
    }

    /// Halves every link length inside `group`, floored at `d_min`.
    pub fn attend(&mut self, group: &[NodeId], d_min: f64) -> Result<()> {
        if group.is_empty() {
            return Err(Error::param("attend group", "empty"));
        }
        if !(d_min > 0.0) {
            return Err(Error::NonPositiveLength(d_min));
        }
        let idx: BTreeSet<usize> = group.iter().map(|&g| self.check(g)).collect::<Result<_>>()?;
        for &i in &idx {
            for &j in &idx {
                let l = &mut self.length[i * self.n + j];
                if i != j && l.is_finite() {
                    *l = (*l / 2.0).max(d_min);
                }
            }
        }
        Ok(())
    }

    /// Per-node strength `base / max(d_min, d)` where `d` is the shortest
    /// path length to the nearest focus node; unreachable nodes get 0.
    pub fn graded_scene(
        &self,
        focus: &BTreeSet<NodeId>,
        base: f64,
        d_min: f64,
    ) -> Result<BTreeMap<NodeId, f64>> {
        for &f in focus {
            self.check(f)?;
        }
        if !(d_min > 0.0) {
            return Err(Error::NonPositiveLength(d_min));
        }
        let mut graph = UnGraph::<(), f64>::with_capacity(self.n, 0);
        let nodes: Vec<NodeIndex> = (0..self.n).map(|_| graph.add_node(())).collect();
        for (a, b) in self.links() {
            graph.add_edge(nodes[a.index()], nodes[b.index()], self.length(a, b));
        }
        let mut nearest = vec![f64::INFINITY; self.n];
        for &f in focus {
            for (node, d) in dijkstra(&graph, nodes[f.index()], None, |e| *e.weight()) {
                let slot = &mut nearest[node.index()];
                *slot = slot.min(d);
            }
        }
        Ok(nearest
            .into_iter()
            .enumerate()
            .map(|(i, d)| {
                let s = if d.is_finite() { base / d.max(d_min) } else { 0.0 };
                (NodeId::from(i), s)
            })
            .collect())
    }

    pub fn snapshot(&self) -> NetworkSnapshot {
        let rows = |v: &[f64]| -> Vec<Vec<f64>> { v.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect() };
        NetworkSnapshot {
            lengths: self
                .length
                .chunks(self.n.max(1))
                .map(|r| r.iter().map(|&l| l.is_finite().then_some(l)).collect())
                .collect(),
            weights: rows(&self.weight),
            ltp_timers: self.ltp_timer.clone(),
        }
    }
}

/// JSON view of a network: absent links are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSnapshot {
    pub lengths: Vec<Vec<Option<f64>>>,
    pub weights: Vec<Vec<f64>>,
    pub ltp_timers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindParams {
    /// Maximum step difference counted as firing together.
    pub window: u64,
    /// Minimum number of joint firings.
    pub bind_min: u64,
    /// Joint firings must also make up this fraction of the busier
    /// neuron's firings.
    pub sync_fraction: f64,
}

impl Default for BindParams {
    fn default() -> Self {
        Self {
            window: 0,
            bind_min: 3,
            sync_fraction: 0.5,
        }
    }
}

/// How many spikes in `a` have a spike in `b` within `window` steps.
fn matched(a: &[u64], b: &[u64], window: u64) -> u64 {
    a.iter()
        .filter(|&&t| {
            let lo = t.saturating_sub(window);
            let k = b.partition_point(|&s| s < lo);
            b.get(k).is_some_and(|&s| s <= t.saturating_add(window))
        })
        .count() as u64
}

/// Groups neurons that repeatedly fire together.
///
/// Two neurons are linked when their joint firing count (spikes within
/// `window` steps of each other, taking the smaller of the two directions)
/// reaches `bind_min` and also reaches `sync_fraction` of the larger of the
/// two spike counts. Returns components over every neuron that fired.
pub fn bind(events: &[FiringEvent], params: &BindParams) -> ClusterSet {
    let mut trains: BTreeMap<NodeId, Vec<u64>> = BTreeMap::new();
    for e in events {
        trains.entry(e.neuron).or_default().push(e.time);
    }
    for t in trains.values_mut() {
        t.sort_unstable();
        t.dedup();
    }
    let ids: Vec<NodeId> = trains.keys().copied().collect();
    let mut edges = Vec::new();
    for (k, &a) in ids.iter().enumerate() {
        for &b in &ids[k + 1..] {
            let (ta, tb) = (&trains[&a], &trains[&b]);
            let joint = matched(ta, tb, params.window).min(matched(tb, ta, params.window));
            let busier = ta.len().max(tb.len()) as f64;
            if joint >= params.bind_min && joint as f64 >= params.sync_fraction * busier {
                edges.push((a, b));
            }
        }
    }
    ClusterSet::from_edges(&trains.keys().copied().collect(), edges)
}

/// CSV trace with columns `step,neuron`.
pub fn write_event_trace<W: Write>(writer: W, events: &[FiringEvent]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["step", "neuron"])?;
    for e in events {
        w.write_record([e.time.to_string(), e.neuron.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<event trace>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    #[test]
    fn rate_is_inverse_length_capped() {
        assert_eq!(firing_rate(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(firing_rate(0.5, 1.0).unwrap(), 1.0);
        assert_eq!(firing_rate(2.0, 1.0).unwrap(), 0.5);
        assert_eq!(firing_rate(3.0, 1.5).unwrap(), firing_rate(3.0, 1.5).unwrap());
        assert!(firing_rate(0.0, 1.0).is_err());
        assert!(firing_rate(-1.0, 1.0).is_err());
    }

    fn pair() -> SpatialNetwork {
        let mut net = SpatialNetwork::new(2);
        net.connect(n(0), n(1), 1.0).unwrap();
        net
    }

    #[test]
    fn co_firing_potentiates() {
        let mut net = pair();
        let stim: BTreeMap<_, _> = [(n(0), 1.0), (n(1), 1.0)].into();
        let params = SyncParams {
            mode: FiringMode::Deterministic,
            ..SyncParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ev = net.step(&stim, 0, &params, &mut rng).unwrap();
        assert_eq!(ev.len(), 2);
        assert!((net.weight(n(0), n(1)) - 0.1).abs() < 1e-15);
        assert_eq!(net.weight(n(1), n(0)), net.weight(n(0), n(1)));
        assert_eq!(net.ltp_timer(n(0)), 50);
    }

    #[test]
    fn silence_leaves_weights() {
        let mut net = pair();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ev = net.step(&BTreeMap::new(), 0, &SyncParams::default(), &mut rng).unwrap();
        assert!(ev.is_empty());
        assert_eq!(net.weight(n(0), n(1)), 0.0);
    }

    #[test]
    fn lone_stimulated_neuron_does_not_fire() {
        let mut net = pair();
        let stim: BTreeMap<_, _> = [(n(0), 1.0)].into();
        let params = SyncParams {
            mode: FiringMode::Deterministic,
            ..SyncParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(net.simulate(&stim, 20, &params, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn one_sided_firing_depresses_to_zero() {
        // 0-1 at length 1, 1-2 at length 4: with base 1 and input 1,
        // neurons 0 and 1 always fire, 2 fires every 4th step.
        let mut net = SpatialNetwork::new(3);
        net.connect(n(0), n(1), 1.0).unwrap();
        net.connect(n(1), n(2), 4.0).unwrap();
        let stim: BTreeMap<_, _> = [(n(0), 1.0), (n(1), 1.0), (n(2), 1.0)].into();
        let params = SyncParams {
            mode: FiringMode::Deterministic,
            beta: 1.0,
            ..SyncParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        net.step(&stim, 0, &params, &mut rng).unwrap();
        assert_eq!(net.weight(n(1), n(2)), 0.0);
    }

    #[test]
    fn ltp_timer_runs_out() {
        let mut net = pair();
        let params = SyncParams {
            mode: FiringMode::Deterministic,
            t_ltp: 5,
            ..SyncParams::default()
        };
        let stim: BTreeMap<_, _> = [(n(0), 1.0), (n(1), 1.0)].into();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        net.step(&stim, 0, &params, &mut rng).unwrap();
        assert_eq!(net.ltp_timer(n(0)), 5);
        for t in 1..=5 {
            net.step(&BTreeMap::new(), t, &params, &mut rng).unwrap();
            assert!(net.ltp_timer(n(0)) <= 5);
        }
        assert_eq!(net.ltp_timer(n(0)), 0);
    }

    #[test]
    fn depolarised_neuron_fires_more_readily() {
        // length 4: p = 0.25 normally, 0.5 while depolarised.
        let mut net = SpatialNetwork::new(2);
        net.connect(n(0), n(1), 4.0).unwrap();
        let stim: BTreeMap<_, _> = [(n(0), 1.0), (n(1), 1.0)].into();
        let params = SyncParams {
            mode: FiringMode::Deterministic,
            t_ltp: 1000,
            ..SyncParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ev = net.simulate(&stim, 100, &params, &mut rng).unwrap();
        // first joint spike at step 3, after which both fire at p = 0.5
        let per_neuron = ev.iter().filter(|e| e.neuron == n(0)).count();
        assert!(per_neuron > 25, "{per_neuron}");
    }

    #[test]
    fn bind_empty() {
        assert!(bind(&[], &BindParams::default()).is_empty());
    }

    #[test]
    fn bind_respects_window() {
        let ev: Vec<FiringEvent> = (0..10u64)
            .flat_map(|t| {
                [
                    FiringEvent { neuron: n(0), time: 2 * t },
                    FiringEvent { neuron: n(1), time: 2 * t + 1 },
                ]
            })
            .collect();
        assert_eq!(bind(&ev, &BindParams::default()).len(), 2);
        let loose = BindParams {
            window: 1,
            ..BindParams::default()
        };
        assert_eq!(bind(&ev, &loose).len(), 1);
    }

    #[test]
    fn attend_halves_and_clamps() {
        let mut net = SpatialNetwork::new(3);
        net.connect(n(0), n(1), 8.0).unwrap();
        net.connect(n(1), n(2), 8.0).unwrap();
        net.attend(&[n(0), n(1)], 2.0).unwrap();
        assert_eq!(net.length(n(0), n(1)), 4.0);
        assert_eq!(net.length(n(1), n(2)), 8.0);
        net.attend(&[n(0), n(1)], 2.0).unwrap();
        net.attend(&[n(0), n(1)], 2.0).unwrap();
        assert_eq!(net.length(n(0), n(1)), 2.0);
        assert_eq!(net.length(n(1), n(0)), 2.0);
        assert!(net.attend(&[], 2.0).is_err());
        assert!(net.attend(&[n(7)], 2.0).is_err());
    }

    #[test]
    fn graded_scene_chain() {
        let mut net = SpatialNetwork::new(4);
        net.connect(n(0), n(1), 1.0).unwrap();
        net.connect(n(1), n(2), 1.0).unwrap();
        let s = net.graded_scene(&[n(0)].into(), 1.0, 0.5).unwrap();
        assert_eq!(s[&n(0)], 2.0);
        assert_eq!(s[&n(1)], 1.0);
        assert_eq!(s[&n(2)], 0.5);
        assert_eq!(s[&n(3)], 0.0);
        assert!(net.graded_scene(&[n(9)].into(), 1.0, 0.5).is_err());
    }

    #[test]
    fn snapshot_marks_missing_links_null() {
        let net = pair();
        let json = serde_json::to_string(&net.snapshot()).unwrap();
        assert!(json.contains("null"));
        assert!(json.contains("\"ltp_timers\":[0,0]"));
    }

    #[test]
    fn trace_csv() {
        let mut buf = Vec::new();
        write_event_trace(&mut buf, &[FiringEvent { neuron: n(2), time: 7 }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "step,neuron\n7,2\n");
    }
}
