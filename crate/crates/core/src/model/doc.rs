//! JSON game documents.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{invalid, Agent, GameSpec, Kernel, RewardTable, SpecError, Team};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentDoc {
    pub name: String,
    pub states: Vec<Vec<String>>,
    pub actions: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeamDoc {
    pub name: String,
    pub agents: Vec<AgentDoc>,
}

/// On-disk layout. Kernels are dense `[team][time][state][joint action][outcome]`,
/// rewards `[team][time][joint state][joint action]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDoc {
    pub horizon: usize,
    pub delay: usize,
    pub teams: Vec<TeamDoc>,
    pub observations: Vec<Vec<Vec<String>>>,
    pub init: Vec<Vec<f64>>,
    pub transition: Vec<Vec<Vec<Vec<Vec<f64>>>>>,
    pub observation_kernel: Vec<Vec<Vec<Vec<Vec<f64>>>>>,
    pub reward: Vec<Vec<Vec<Vec<f64>>>>,
}

fn flatten_kernel(path: &str, nested: &[Vec<Vec<f64>>]) -> Result<Kernel, SpecError> {
    let states = nested.len();
    let actions = nested.first().map_or(0, |r| r.len());
    let outcomes = nested.first().and_then(|r| r.first()).map_or(0, |r| r.len());
    let mut ker = Kernel::zeros(states, actions, outcomes);
    for (x, rows) in nested.iter().enumerate() {
        if rows.len() != actions {
            return Err(invalid(format!("{path}[{x}]"), format!("expected {actions} action rows")));
        }
        for (u, row) in rows.iter().enumerate() {
            if row.len() != outcomes {
                return Err(invalid(format!("{path}[{x}][{u}]"), format!("expected {outcomes} entries")));
            }
            for (o, &p) in row.iter().enumerate() {
                ker.set(x, u, o, p);
            }
        }
    }
    Ok(ker)
}

fn nest_kernel(ker: &Kernel) -> Vec<Vec<Vec<f64>>> {
    (0..ker.states)
        .map(|x| (0..ker.actions).map(|u| ker.row(x, u).to_vec()).collect())
        .collect()
}

impl GameDoc {
    pub fn into_spec(self) -> Result<GameSpec, SpecError> {
        let n = self.teams.len();
        if self.observations.len() != n {
            return Err(invalid("observations", format!("expected {n} teams")));
        }
        let teams: Vec<Team> = self
            .teams
            .into_iter()
            .zip(self.observations)
            .map(|(t, obs)| Team {
                name: t.name,
                agents: t
                    .agents
                    .into_iter()
                    .map(|a| Agent {
                        name: a.name,
                        states: a.states,
                        actions: a.actions,
                    })
                    .collect(),
                observations: obs,
            })
            .collect();
        let mut transition = Vec::with_capacity(n);
        for (i, per_t) in self.transition.iter().enumerate() {
            let mut ks = Vec::new();
            for (k, nested) in per_t.iter().enumerate() {
                ks.push(flatten_kernel(&format!("transition[{i}][{k}]"), nested)?);
            }
            transition.push(ks);
        }
        let mut observation = Vec::with_capacity(n);
        for (i, per_t) in self.observation_kernel.iter().enumerate() {
            let mut ks = Vec::new();
            for (k, nested) in per_t.iter().enumerate() {
                ks.push(flatten_kernel(&format!("observation_kernel[{i}][{k}]"), nested)?);
            }
            observation.push(ks);
        }
        let mut reward = Vec::with_capacity(n);
        for (i, per_t) in self.reward.iter().enumerate() {
            let mut rs = Vec::new();
            for (k, rows) in per_t.iter().enumerate() {
                let states = rows.len();
                let actions = rows.first().map_or(0, |r| r.len());
                let mut table = RewardTable::zeros(states, actions);
                for (x, row) in rows.iter().enumerate() {
                    if row.len() != actions {
                        return Err(invalid(format!("reward[{i}][{k}][{x}]"), format!("expected {actions} entries")));
                    }
                    for (u, &r) in row.iter().enumerate() {
                        table.set(x, u, r);
                    }
                }
                rs.push(table);
            }
            reward.push(rs);
        }
        GameSpec::new(self.horizon, self.delay, teams, self.init, transition, observation, reward)
    }

    pub fn from_spec(spec: &GameSpec) -> Self {
        GameDoc {
            horizon: spec.horizon,
            delay: spec.delay,
            teams: spec
                .teams
                .iter()
                .map(|t| TeamDoc {
                    name: t.name.clone(),
                    agents: t
                        .agents
                        .iter()
                        .map(|a| AgentDoc {
                            name: a.name.clone(),
                            states: a.states.clone(),
                            actions: a.actions.clone(),
                        })
                        .collect(),
                })
                .collect(),
            observations: spec.teams.iter().map(|t| t.observations.clone()).collect(),
            init: spec.init.clone(),
            transition: spec
                .transition
                .iter()
                .map(|ks| ks.iter().map(nest_kernel).collect())
                .collect(),
            observation_kernel: spec
                .observation
                .iter()
                .map(|ks| ks.iter().map(nest_kernel).collect())
                .collect(),
            reward: spec
                .reward
                .iter()
                .map(|rs| {
                    rs.iter()
                        .map(|r| (0..r.states).map(|x| r.data[x * r.actions..(x + 1) * r.actions].to_vec()).collect())
                        .collect()
                })
                .collect(),
        }
    }
}

/// Parses and validates a game document. Unknown keys are rejected and
/// errors carry the JSON path of the offending entry.
pub fn load_str(text: &str) -> Result<GameSpec, SpecError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: GameDoc = serde_path_to_error::deserialize(de).map_err(|e| SpecError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    doc.into_spec()
}

pub fn load(path: &std::path::Path) -> Result<GameSpec, SpecError> {
    let text = std::fs::read_to_string(path).map_err(|e| SpecError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    load_str(&text)
}

pub fn emit(spec: &GameSpec) -> String {
    serde_json::to_string_pretty(&GameDoc::from_spec(spec)).expect("game documents always serialize")
}

/// SHA-256 of the compact canonical document, hex encoded.
pub fn spec_hash(spec: &GameSpec) -> String {
    let canonical = serde_json::to_string(&GameDoc::from_spec(spec)).expect("game documents always serialize");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
