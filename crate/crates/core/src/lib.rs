//! Byzantine fault-tolerant decentralized optimization on a complete network.
//!
//! Non-faulty agents each hold a convex cost and iterate a projected consensus
//! update. Before averaging, every agent runs the comparative elimination (CE)
//! filter, discarding the `f` received estimates farthest from its own.
//!
//! The crate is split along the protocol:
//!
//! * [`costmodel`]: quadratic costs, minimizer sets and exact projection.
//! * [`cefilter`]: the CE filter.
//! * [`agent`]: per-agent state and the projected consensus step.
//! * [`adversary`]: Byzantine message strategies.
//! * [`netsim`]: the synchronous round orchestrator and error traces.
//! * [`analysis`]: redundancy checks and contraction constants.
//! * [`cli`]: scenario files, trace/summary output, SVG plots.

pub mod adversary;
pub mod agent;
pub mod analysis;
pub mod cefilter;
pub mod cli;
pub mod costmodel;
mod error;
pub mod netsim;

pub use error::{Error, Result};

/// Agent identifier, 1-based.
pub type AgentId = usize;

/// A point in the decision space `R^d`.
pub type Point = nalgebra::DVector<f64>;
