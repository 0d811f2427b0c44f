//! Non-faulty agent state and the projected consensus step.

use std::fmt;
use std::sync::Arc;

use crate::costmodel::CostFunction;
use crate::error::{check_dim, Error, Result};
use crate::{AgentId, Point};

#[derive(Clone)]
pub struct AgentState {
    pub id: AgentId,
    /// Current estimate; always a point of the cost's minimizer set.
    pub estimate: Point,
    pub cost: Arc<dyn CostFunction>,
}

impl fmt::Debug for AgentState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AgentState")
            .field("id", &self.id)
            .field("estimate", &self.estimate.as_slice())
            .finish_non_exhaustive()
    }
}

impl AgentState {
    /// Starts the agent at the projection of `seed_point` onto its minimizer set.
    pub fn initialize(id: AgentId, cost: Arc<dyn CostFunction>, seed_point: &Point) -> Result<Self> {
        let estimate = cost.project_to_min_set(seed_point)?;
        Ok(Self { id, estimate, cost })
    }

    /// Starts the agent at the projection of the origin.
    pub fn at_origin(id: AgentId, cost: Arc<dyn CostFunction>) -> Result<Self> {
        let origin = Point::zeros(cost.dimension());
        Self::initialize(id, cost, &origin)
    }

    /// One projected consensus step:
    /// `x <- proj(x - eta * sum_j (x - m_j))` over the kept messages.
    pub fn consensus_update(&self, kept: &[Point], eta: f64) -> Result<Self> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::Argument(format!("step size must be finite and >= 0, got {eta}")));
        }
        let mut drift = Point::zeros(self.estimate.len());
        for m in kept {
            check_dim(self.estimate.len(), m.len())?;
            drift += &self.estimate - m;
        }
        let moved = &self.estimate - eta * drift;
        Ok(Self {
            id: self.id,
            estimate: self.cost.project_to_min_set(&moved)?,
            cost: Arc::clone(&self.cost),
        })
    }
}
