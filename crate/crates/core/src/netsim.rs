//! Synchronous round orchestration over a complete network.
//!
//! Each round runs three steps for every non-faulty agent:
//!
//! 1. broadcast: honest agents send their current estimate, then faulty agents
//!    pick their (possibly per-receiver) messages having seen those broadcasts.
//!    A missing message is replaced with the zero vector.
//! 2. filter: each honest agent applies the CE filter to its `n - 1` messages.
//! 3. update: projected consensus on the kept messages.
//!
//! Every update reads only the pre-round snapshot, so agents can be processed
//! in any order or in parallel with identical results.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::adversary::{generate_messages, message_stream, ByzantineStrategy};
use crate::agent::AgentState;
use crate::cefilter::apply_ce_filter;
use crate::costmodel::{CostFunction, QuadraticCost, RANK_THRESHOLD};
use crate::error::{check_dim, Error, Result};
use crate::{AgentId, Point};

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub n: usize,
    /// Fault budget: how many estimates the filter discards.
    pub f: usize,
    pub costs: BTreeMap<AgentId, QuadraticCost>,
    /// Faulty agents and the strategy each one follows.
    pub faulty: BTreeMap<AgentId, ByzantineStrategy>,
    pub eta: f64,
    pub max_rounds: usize,
    /// Stop once `V^t <= tolerance`. Zero disables early stopping.
    pub tolerance: f64,
    pub seed: u64,
    pub filter_enabled: bool,
    /// Per-agent starting points; agents without one start from the origin.
    pub seed_points: BTreeMap<AgentId, Vec<f64>>,
}

impl Scenario {
    pub fn dimension(&self) -> usize {
        self.costs.values().next().map_or(0, CostFunction::dimension)
    }

    pub fn honest_ids(&self) -> Vec<AgentId> {
        self.costs.keys().copied().collect()
    }

    pub fn honest_costs(&self) -> Vec<QuadraticCost> {
        self.costs.values().cloned().collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Configuration(msg));
        if self.n <= self.f {
            return bad(format!("need n > f, got n={} f={}", self.n, self.f));
        }
        if self.faulty.len() > self.f {
            return bad(format!(
                "{} faulty agents exceed the fault budget f={}",
                self.faulty.len(),
                self.f
            ));
        }
        if self.costs.is_empty() {
            return bad("no honest agents".into());
        }
        let mut ids = BTreeSet::new();
        for id in self.costs.keys().chain(self.faulty.keys()) {
            if !ids.insert(*id) {
                return bad(format!("agent {id} is listed as both honest and faulty"));
            }
        }
        let expected: BTreeSet<AgentId> = (1..=self.n).collect();
        if ids != expected {
            return bad(format!("agent ids must be exactly 1..={}", self.n));
        }
        let d = self.dimension();
        for (id, cost) in &self.costs {
            if cost.dimension() != d {
                return bad(format!(
                    "agent {id} has dimension {}, expected {d}",
                    cost.dimension()
                ));
            }
        }
        for strategy in self.faulty.values() {
            strategy.validate(d)?;
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return bad(format!("eta must be finite and >= 0, got {}", self.eta));
        }
        if !(self.tolerance.is_finite() && self.tolerance >= 0.0) {
            return bad(format!("tolerance must be finite and >= 0, got {}", self.tolerance));
        }
        for (id, point) in &self.seed_points {
            if !self.costs.contains_key(id) {
                return bad(format!("seed point given for non-honest agent {id}"));
            }
            if point.len() != d {
                return bad(format!(
                    "seed point for agent {id} has length {}, expected {d}",
                    point.len()
                ));
            }
        }
        Ok(())
    }

    /// Round-0 agent states: each agent projects its seed point (or the origin).
    pub fn initial_states(&self) -> Result<BTreeMap<AgentId, AgentState>> {
        self.costs
            .iter()
            .map(|(&id, cost)| {
                let cost: Arc<dyn CostFunction> = Arc::new(cost.clone());
                let state = match self.seed_points.get(&id) {
                    Some(seed) => AgentState::initialize(id, cost, &Point::from_column_slice(seed))?,
                    None => AgentState::at_origin(id, cost)?,
                };
                Ok((id, state))
            })
            .collect()
    }
}

/// Whether per-agent work inside a round runs on the rayon pool.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    #[default]
    Sequential,
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrace {
    pub round: usize,
    pub estimates: BTreeMap<AgentId, Point>,
    /// `sum_i ||x_i - x*||^2`; absent when the honest optimum is not unique.
    pub v_t: Option<f64>,
}

type FaultyMessages = BTreeMap<AgentId, BTreeMap<AgentId, Option<Point>>>;

fn faulty_messages(
    scenario: &Scenario,
    observed: &BTreeMap<AgentId, Point>,
    round: usize,
    execution: Execution,
) -> FaultyMessages {
    let receivers: Vec<AgentId> = observed.keys().copied().collect();
    let d = scenario.dimension();
    let emit = |(&sender, strategy): (&AgentId, &ByzantineStrategy)| {
        let mut rng = message_stream(scenario.seed, sender, round);
        (
            sender,
            generate_messages(strategy, d, &receivers, observed, &mut rng),
        )
    };
    match execution {
        Execution::Sequential => scenario.faulty.iter().map(emit).collect(),
        Execution::Parallel => scenario
            .faulty
            .par_iter()
            .map(emit)
            .collect::<Vec<_>>()
            .into_iter()
            .collect(),
    }
}

fn step_agent(
    state: &AgentState,
    scenario: &Scenario,
    observed: &BTreeMap<AgentId, Point>,
    faulty: &FaultyMessages,
) -> Result<AgentState> {
    let me = state.id;
    let d = state.estimate.len();
    let mut inbox = Vec::with_capacity(scenario.n.saturating_sub(1));
    for (&sender, estimate) in observed {
        if sender != me {
            inbox.push((sender, estimate.clone()));
        }
    }
    for (&sender, messages) in faulty {
        let message = messages
            .get(&me)
            .cloned()
            .flatten()
            .unwrap_or_else(|| Point::zeros(d));
        inbox.push((sender, message));
    }
    if inbox.len() + 1 != scenario.n {
        return Err(Error::Protocol(format!(
            "agent {me} received {} messages, expected {}",
            inbox.len(),
            scenario.n - 1
        )));
    }

    let kept = if scenario.filter_enabled {
        apply_ce_filter(&state.estimate, &inbox, scenario.n, scenario.f)?.kept_values()
    } else {
        inbox.into_iter().map(|(_, m)| m).collect()
    };
    state.consensus_update(&kept, scenario.eta)
}

/// Runs one synchronous round and returns the next states.
pub fn run_round(
    states: &BTreeMap<AgentId, AgentState>,
    scenario: &Scenario,
    round: usize,
    execution: Execution,
) -> Result<BTreeMap<AgentId, AgentState>> {
    if !states.keys().eq(scenario.costs.keys()) {
        return Err(Error::Protocol(
            "agent states must be keyed by exactly the honest ids".into(),
        ));
    }
    let observed: BTreeMap<AgentId, Point> = states
        .iter()
        .map(|(&id, s)| (id, s.estimate.clone()))
        .collect();
    let faulty = faulty_messages(scenario, &observed, round, execution);

    let step = |(&id, state): (&AgentId, &AgentState)| {
        step_agent(state, scenario, &observed, &faulty).map(|next| (id, next))
    };
    match execution {
        Execution::Sequential => states.iter().map(step).collect(),
        Execution::Parallel => states
            .par_iter()
            .map(step)
            .collect::<Result<Vec<_>>>()
            .map(|v| v.into_iter().collect()),
    }
}

/// `sum_i ||x_i - x*||^2`.
pub fn compute_error<'a>(
    estimates: impl IntoIterator<Item = &'a Point>,
    x_star: &Point,
) -> Result<f64> {
    estimates.into_iter().try_fold(0.0, |acc, x| {
        check_dim(x_star.len(), x.len())?;
        Ok(acc + (x - x_star).norm_squared())
    })
}

/// Minimizer of `sum_i ||A_i x - b_i||^2` from the normal equations.
pub fn solve_honest_optimum<'a>(
    costs: impl IntoIterator<Item = &'a QuadraticCost>,
) -> Result<Point> {
    let mut costs = costs.into_iter().peekable();
    let d = costs
        .peek()
        .map(|c| c.dimension())
        .ok_or_else(|| Error::Argument("no costs given".into()))?;
    let mut normal = DMatrix::zeros(d, d);
    let mut rhs = DVector::zeros(d);
    for cost in costs {
        check_dim(d, cost.dimension())?;
        let at = cost.a_matrix().transpose();
        normal += &at * cost.a_matrix();
        rhs += &at * cost.b_vector();
    }
    let eigen = SymmetricEigen::new(normal.clone());
    let largest = eigen.eigenvalues.amax();
    if largest == 0.0 || eigen.eigenvalues.min() <= RANK_THRESHOLD * largest {
        return Err(Error::NonUniqueOptimum);
    }
    normal
        .cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or(Error::NonUniqueOptimum)
}

fn snapshot(
    round: usize,
    states: &BTreeMap<AgentId, AgentState>,
    x_star: Option<&Point>,
) -> Result<RoundTrace> {
    let estimates: BTreeMap<AgentId, Point> = states
        .iter()
        .map(|(&id, s)| (id, s.estimate.clone()))
        .collect();
    let v_t = x_star
        .map(|x| compute_error(estimates.values(), x))
        .transpose()?;
    Ok(RoundTrace {
        round,
        estimates,
        v_t,
    })
}

pub fn run_simulation(scenario: &Scenario) -> Result<Vec<RoundTrace>> {
    run_simulation_with(scenario, Execution::Sequential)
}

/// Runs until `max_rounds` or until `V^t` falls to the tolerance, returning
/// the trace of every round including round 0.
pub fn run_simulation_with(scenario: &Scenario, execution: Execution) -> Result<Vec<RoundTrace>> {
    scenario.validate()?;
    let x_star = match solve_honest_optimum(scenario.costs.values()) {
        Ok(x) => Some(x),
        Err(Error::NonUniqueOptimum) => None,
        Err(e) => return Err(e),
    };
    let reached = |trace: &RoundTrace| {
        scenario.tolerance > 0.0 && trace.v_t.is_some_and(|v| v <= scenario.tolerance)
    };

    let mut states = scenario.initial_states()?;
    let mut traces = vec![snapshot(0, &states, x_star.as_ref())?];
    for round in 0..scenario.max_rounds {
        if reached(traces.last().expect("trace is non-empty")) {
            break;
        }
        states = run_round(&states, scenario, round, execution)?;
        traces.push(snapshot(round + 1, &states, x_star.as_ref())?);
    }
    Ok(traces)
}
