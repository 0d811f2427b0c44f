//! Byzantine message strategies.
//!
//! A faulty agent may send a different vector to every receiver, or nothing at
//! all. Randomness comes from a ChaCha stream keyed on
//! `(scenario seed, sender, round)`, so the messages of one faulty sender in one
//! round never depend on the order in which anything else is evaluated.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{AgentId, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", content = "strategy_params", rename_all = "snake_case")]
pub enum ByzantineStrategy {
    /// Independent uniform draw in `[low, high]^d` per receiver and round.
    RandomUniform { low: f64, high: f64 },
    /// The same vector to every receiver.
    FixedVector { v: Vec<f64> },
    /// No messages; receivers substitute the zero vector.
    Silent,
    /// Sends `-scale * x_j` to receiver `j`, where `x_j` is the estimate `j`
    /// broadcast this round. Not part of the original experiment.
    MirrorAttack { scale: f64 },
}

impl ByzantineStrategy {
    pub fn validate(&self, dimension: usize) -> Result<()> {
        match self {
            Self::RandomUniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low <= high) {
                    return Err(Error::Configuration(format!(
                        "random_uniform needs finite low <= high, got [{low}, {high}]"
                    )));
                }
            }
            Self::FixedVector { v } => {
                if v.len() != dimension {
                    return Err(Error::Configuration(format!(
                        "fixed_vector has length {}, expected {dimension}",
                        v.len()
                    )));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Configuration("fixed_vector must be finite".into()));
                }
            }
            Self::Silent => {}
            Self::MirrorAttack { scale } => {
                if !scale.is_finite() {
                    return Err(Error::Configuration("mirror_attack scale must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

/// Deterministic random stream for one faulty sender in one round.
pub fn message_stream(seed: u64, sender: AgentId, round: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(sender as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(round as u64).to_le_bytes());
    key[24..].copy_from_slice(b"byzmsg\0\0");
    ChaCha8Rng::from_seed(key)
}

/// Messages a faulty `sender` emits in `round`. `None` means nothing was sent.
///
/// `observed` holds the estimates honest agents broadcast this round. Receivers
/// are served in ascending id order regardless of the order given.
pub fn generate_messages(
    strategy: &ByzantineStrategy,
    dimension: usize,
    receivers: &[AgentId],
    observed: &BTreeMap<AgentId, Point>,
    rng: &mut ChaCha8Rng,
) -> BTreeMap<AgentId, Option<Point>> {
    let mut targets = receivers.to_vec();
    targets.sort_unstable();
    targets.dedup();

    targets
        .into_iter()
        .map(|receiver| {
            let message = match strategy {
                ByzantineStrategy::RandomUniform { low, high } => Some(Point::from_fn(
                    dimension,
                    |_, _| rng.random_range(*low..=*high),
                )),
                ByzantineStrategy::FixedVector { v } => Some(Point::from_column_slice(v)),
                ByzantineStrategy::Silent => None,
                ByzantineStrategy::MirrorAttack { scale } => Some(
                    observed
                        .get(&receiver)
                        .map_or_else(|| Point::zeros(dimension), |x| -*scale * x),
                ),
            };
            (receiver, message)
        })
        .collect()
}
