//! Banded neuron.
//!
//! The neuron sums its inputs, fires when the sum reaches its threshold,
//! and then picks an output band from the input strength. Stronger bands
//! send a stronger signal to fewer, better-linked targets; the weakest band
//! broadcasts a reinforcement signal over every out-link. Sustained
//! activity lowers the threshold.

use serde::{Deserialize, Serialize};

use crate::cluster::NodeId;
use crate::error::{Error, Result};

pub const DEFAULT_THETA_MIN: f64 = 0.1;
pub const DEFAULT_THETA_MAX: f64 = 1.0;
pub const DEFAULT_BAND_BOUNDS: [f64; 3] = [0.5, 1.0, 2.0];
pub const DEFAULT_BAND_GAINS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandedNeuron {
    threshold: f64,
    theta_min: f64,
    theta_max: f64,
    band_bounds: Vec<f64>,
    band_gains: Vec<f64>,
    activity: f64,
    out_links: Vec<(NodeId, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSignal {
    pub band: usize,
    pub strength: f64,
    /// Ordered strongest link first.
    pub targets: Vec<NodeId>,
    pub reinforcement: bool,
}

impl Default for BandedNeuron {
    fn default() -> Self {
        Self::new(
            DEFAULT_THETA_MIN,
            DEFAULT_THETA_MAX,
            DEFAULT_BAND_BOUNDS.to_vec(),
            DEFAULT_BAND_GAINS.to_vec(),
            Vec::new(),
        )
        .expect("default neuron parameters are valid")
    }
}

impl BandedNeuron {
    /// A fresh neuron starts idle, so its threshold sits at `theta_max`.
    pub fn new(
        theta_min: f64,
        theta_max: f64,
        band_bounds: Vec<f64>,
        band_gains: Vec<f64>,
        out_links: Vec<(NodeId, f64)>,
    ) -> Result<Self> {
        if !(theta_min.is_finite() && theta_min >= 0.0 && theta_min <= theta_max && theta_max.is_finite()) {
            return Err(Error::param("theta range", format!("[{theta_min}, {theta_max}]")));
        }
        if band_bounds.windows(2).any(|w| !(w[0] < w[1])) || band_bounds.iter().any(|b| !b.is_finite()) {
            return Err(Error::param("band_bounds", format!("{band_bounds:?} not strictly increasing")));
        }
        if band_gains.len() != band_bounds.len() + 1 {
            return Err(Error::param(
                "band_gains",
                format!("need {} gains, got {}", band_bounds.len() + 1, band_gains.len()),
            ));
        }
        if band_gains.windows(2).any(|w| w[0] > w[1]) || band_gains.iter().any(|g| !(*g >= 0.0)) {
            return Err(Error::param("band_gains", format!("{band_gains:?} not non-decreasing")));
        }
        if out_links.iter().any(|(_, s)| !(*s >= 0.0)) {
            return Err(Error::param("out_links", "negative link strength"));
        }
        Ok(Self {
            threshold: theta_max,
            theta_min,
            theta_max,
            band_bounds,
            band_gains,
            activity: 0.0,
            out_links,
        })
    }

    pub fn with_out_links(mut self, out_links: Vec<(NodeId, f64)>) -> Result<Self> {
        if out_links.iter().any(|(_, s)| !(*s >= 0.0)) {
            return Err(Error::param("out_links", "negative link strength"));
        }
        self.out_links = out_links;
        Ok(self)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn activity(&self) -> f64 {
        self.activity
    }

    pub fn band_count(&self) -> usize {
        self.band_gains.len()
    }

    pub fn band_bounds(&self) -> &[f64] {
        &self.band_bounds
    }

    pub fn band_gains(&self) -> &[f64] {
        &self.band_gains
    }

    pub fn out_links(&self) -> &[(NodeId, f64)] {
        &self.out_links
    }

    pub fn theta_range(&self) -> (f64, f64) {
        (self.theta_min, self.theta_max)
    }

    /// Returns `None` below threshold.
    pub fn fire(&self, input: f64) -> Option<OutputSignal> {
        if !(input >= self.threshold) {
            return None;
        }
        let band = band_index(input, &self.band_bounds);
        let strength = self.band_gains[band];
        let reinforcement = band == 0;
        let k = if reinforcement {
            self.out_links.len()
        } else {
            fan_out(self.out_links.len(), band, self.band_count())
        };
        let mut ranked = self.out_links.clone();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Some(OutputSignal {
            band,
            strength,
            targets: ranked.into_iter().take(k).map(|(id, _)| id).collect(),
            reinforcement,
        })
    }

    /// Updates the exponentially averaged activity and moves the threshold
    /// linearly between `theta_max` (idle) and `theta_min` (always firing).
    pub fn adapt(&mut self, fired: bool, decay: f64) -> Result<()> {
        if !(decay > 0.0 && decay < 1.0) {
            return Err(Error::param("activity decay", decay));
        }
        let x = if fired { 1.0 } else { 0.0 };
        self.activity = decay * self.activity + (1.0 - decay) * x;
        self.threshold = (self.theta_max - (self.theta_max - self.theta_min) * self.activity)
            .clamp(self.theta_min, self.theta_max);
        Ok(())
    }

    /// Aggregate, fire, adapt.
    pub fn step(&mut self, inputs: &[f64], decay: f64) -> Result<Option<OutputSignal>> {
        let total = aggregate(inputs)?;
        let out = self.fire(total);
        self.adapt(out.is_some(), decay)?;
        Ok(out)
    }

    pub fn snapshot_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("neuron state serializes")
    }
}

pub fn aggregate(inputs: &[f64]) -> Result<f64> {
    if let Some(bad) = inputs.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::param("input signal", bad));
    }
    Ok(inputs.iter().sum())
}

/// Number of bounds at or below `input`: bands are half-open
/// `[bound_i, bound_{i+1})`, so a boundary value goes to the upper band.
pub fn band_index(input: f64, bounds: &[f64]) -> usize {
    bounds.partition_point(|&b| b <= input)
}

/// Targets reached from band `band` of `bands` with `links` out-links:
/// `max(1, ceil(links * (1 - band / bands)))`, never more than `links`.
pub fn fan_out(links: usize, band: usize, bands: usize) -> usize {
    if links == 0 {
        return 0;
    }
    let frac = 1.0 - band as f64 / bands as f64;
    ((links as f64 * frac).ceil() as usize).clamp(1, links)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn links(n: u32) -> Vec<(NodeId, f64)> {
        (0..n).map(|i| (NodeId(i), f64::from(i))).collect()
    }

    #[test]
    fn aggregate_sums() {
        assert_eq!(aggregate(&[]).unwrap(), 0.0);
        assert!((aggregate(&[0.3, 0.7]).unwrap() - 1.0).abs() < 1e-15);
        assert!(aggregate(&[1.0, -0.1]).is_err());
    }

    #[test]
    fn band_boundaries() {
        assert_eq!(band_index(0.0, &[1.0, 2.0]), 0);
        assert_eq!(band_index(1.0, &[1.0, 2.0]), 1);
        assert_eq!(band_index(5.0, &[1.0, 2.0]), 2);
        assert_eq!(band_index(3.0, &[]), 0);
    }

    #[test]
    fn below_threshold_is_silent() {
        let n = BandedNeuron::default();
        assert!(n.fire(0.99).is_none());
        assert!(n.fire(1.0).is_some());
    }

    #[test]
    fn weakest_band_broadcasts_reinforcement() {
        let n = BandedNeuron::new(0.1, 0.2, vec![1.0, 2.0, 3.0], DEFAULT_BAND_GAINS.to_vec(), links(8))
            .unwrap();
        let out = n.fire(0.5).unwrap();
        assert_eq!(out.band, 0);
        assert_eq!(out.strength, 0.25);
        assert_eq!(out.targets.len(), 8);
        assert!(out.reinforcement);
    }

    #[test]
    fn top_band_reaches_strongest_two() {
        let n = BandedNeuron::default().with_out_links(links(8)).unwrap();
        let out = n.fire(10.0).unwrap();
        assert_eq!(out.band, 3);
        assert_eq!(out.strength, 1.0);
        assert_eq!(out.targets, vec![NodeId(7), NodeId(6)]);
        assert!(!out.reinforcement);
    }

    #[test]
    fn fan_out_table() {
        assert_eq!(fan_out(8, 0, 4), 8);
        assert_eq!(fan_out(8, 1, 4), 6);
        assert_eq!(fan_out(8, 2, 4), 4);
        assert_eq!(fan_out(8, 3, 4), 2);
        assert_eq!(fan_out(1, 3, 4), 1);
        assert_eq!(fan_out(0, 2, 4), 0);
    }

    #[test]
    fn threshold_endpoints() {
        let mut n = BandedNeuron::default();
        assert_eq!(n.threshold(), DEFAULT_THETA_MAX);
        n.adapt(false, 0.5).unwrap();
        assert_eq!(n.threshold(), DEFAULT_THETA_MAX);
        for _ in 0..200 {
            n.adapt(true, 0.5).unwrap();
        }
        assert!((n.activity() - 1.0).abs() < 1e-12);
        assert!((n.threshold() - DEFAULT_THETA_MIN).abs() < 1e-12);
        assert!(n.adapt(true, 1.0).is_err());
    }

    #[test]
    fn invalid_construction() {
        assert!(BandedNeuron::new(0.1, 1.0, vec![1.0, 1.0], vec![0.0; 3], vec![]).is_err());
        assert!(BandedNeuron::new(0.1, 1.0, vec![1.0], vec![0.5, 0.2], vec![]).is_err());
        assert!(BandedNeuron::new(0.1, 1.0, vec![1.0], vec![0.5], vec![]).is_err());
        assert!(BandedNeuron::new(1.0, 0.1, vec![], vec![1.0], vec![]).is_err());
    }

    #[test]
    fn snapshot_serializes_state() {
        let n = BandedNeuron::default().with_out_links(links(2)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&n.snapshot_json()).unwrap();
        assert_eq!(v["threshold"], 1.0);
        assert_eq!(v["band_gains"].as_array().unwrap().len(), 4);
    }
}
