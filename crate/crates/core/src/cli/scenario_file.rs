//! JSON scenario documents.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::adversary::ByzantineStrategy;
use crate::costmodel::QuadraticCost;
use crate::netsim::Scenario;
use crate::AgentId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    pub id: AgentId,
    /// Row-major, each row of length `dimension`.
    pub a_matrix: Vec<Vec<f64>>,
    pub b_vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultyEntry {
    pub id: AgentId,
    #[serde(flatten)]
    pub strategy: ByzantineStrategy,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub dimension: usize,
    /// Fault budget; defaults to the number of faulty entries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<usize>,
    pub agents: Vec<AgentEntry>,
    #[serde(default)]
    pub faulty: Vec<FaultyEntry>,
    pub eta: f64,
    pub max_rounds: usize,
    #[serde(default)]
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub filter_enabled: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub seed_points: BTreeMap<AgentId, Vec<f64>>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Malformed(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Malformed(msg) => CliError::Malformed(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Structural checks that belong to the file format rather than to the
    /// scenario: unique ids and matrix shapes.
    fn check_shape(&self) -> Result<(), CliError> {
        let mut ids = BTreeSet::new();
        for id in self.agents.iter().map(|a| a.id).chain(self.faulty.iter().map(|f| f.id)) {
            if !ids.insert(id) {
                return Err(CliError::Malformed(format!("agent id {id} appears more than once")));
            }
        }
        for agent in &self.agents {
            if agent.a_matrix.len() != agent.b_vector.len() {
                return Err(CliError::Malformed(format!(
                    "agents[id={}]: a_matrix has {} rows but b_vector has {} entries",
                    agent.id,
                    agent.a_matrix.len(),
                    agent.b_vector.len()
                )));
            }
            for (r, row) in agent.a_matrix.iter().enumerate() {
                if row.len() != self.dimension {
                    return Err(CliError::Malformed(format!(
                        "agents[id={}].a_matrix[{r}]: row has length {}, dimension is {}",
                        agent.id,
                        row.len(),
                        self.dimension
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn into_scenario(self) -> Result<Scenario, CliError> {
        self.check_shape()?;
        let costs = self
            .agents
            .iter()
            .map(|a| {
                QuadraticCost::from_rows(&a.a_matrix, &a.b_vector)
                    .map(|c| (a.id, c))
                    .map_err(|e| CliError::Invalid(format!("agent {}: {e}", a.id)))
            })
            .collect::<Result<BTreeMap<_, _>, _>>()?;
        let scenario = Scenario {
            n: self.agents.len() + self.faulty.len(),
            f: self.f.unwrap_or(self.faulty.len()),
            costs,
            faulty: self.faulty.into_iter().map(|e| (e.id, e.strategy)).collect(),
            eta: self.eta,
            max_rounds: self.max_rounds,
            tolerance: self.tolerance,
            seed: self.seed,
            filter_enabled: self.filter_enabled,
            seed_points: self.seed_points,
        };
        scenario
            .validate()
            .map_err(|e| CliError::Invalid(e.to_string()))?;
        Ok(scenario)
    }

    pub fn from_scenario(scenario: &Scenario) -> Self {
        let to_rows = |c: &QuadraticCost| {
            let a = c.a_matrix();
            (0..a.nrows())
                .map(|r| a.row(r).iter().copied().collect())
                .collect()
        };
        Self {
            dimension: scenario.dimension(),
            f: Some(scenario.f),
            agents: scenario
                .costs
                .iter()
                .map(|(&id, c)| AgentEntry {
                    id,
                    a_matrix: to_rows(c),
                    b_vector: c.b_vector().iter().copied().collect(),
                })
                .collect(),
            faulty: scenario
                .faulty
                .iter()
                .map(|(&id, s)| FaultyEntry {
                    id,
                    strategy: s.clone(),
                })
                .collect(),
            eta: scenario.eta,
            max_rounds: scenario.max_rounds,
            tolerance: scenario.tolerance,
            seed: scenario.seed,
            filter_enabled: scenario.filter_enabled,
            seed_points: scenario.seed_points.clone(),
        }
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    ScenarioFile::load(path)?.into_scenario()
}
