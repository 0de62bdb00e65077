//! Concept-value network simulation.
//!
//! The crate has two halves. The experiment half ([`ontology`],
//! [`link_cluster`], [`freq_grid`], [`combiner`], [`runner`]) builds a flat
//! ontology of concept groups with a few cross-group noise links, streams
//! random partial presentations of it into two co-occurrence clusterers and
//! checks whether merging their overlapping partial views recovers the
//! original groups. The network half ([`neuron`], [`hebb_sync`]) models a
//! banded neuron with an activity-adaptive threshold and a spatial network
//! whose link lengths set firing rates and drive Hebbian binding.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cluster;
pub mod combiner;
pub mod error;
pub mod freq_grid;
pub mod hebb_sync;
pub mod link_cluster;
pub mod neuron;
pub mod ontology;
pub mod runner;

pub use cluster::{ClusterSet, NodeId};
pub use error::{Error, Result};
