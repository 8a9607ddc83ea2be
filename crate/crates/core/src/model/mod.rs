//! Game description: teams, padded alphabets, kernels and rewards.
//!
//! Times run `1..=horizon`. Every query also accepts `t <= 0`, where all
//! alphabets are the singleton `{0}`, the state moves deterministically to
//! `0`, observations are certain and rewards vanish. The step from `t = 0`
//! to `t = 1` draws from `init`.
//!
//! Index conventions: a team state is the mixed-radix index of its agents'
//! states (first agent most significant), a team action likewise over its
//! agents, a joint action is the mixed-radix index over team actions in team
//! order, and a joint state is the index over team states.

pub mod builtins;
pub mod doc;
pub mod graph;
pub mod random;

use thiserror::Error;

use crate::util::{decode_vec, encode_radix};

pub use doc::{emit, load, load_str, spec_hash, AgentDoc, GameDoc, TeamDoc};

pub type Time = isize;

/// Row sums of every kernel must hit 1 within this tolerance.
pub const ROW_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{path}: row sums to {sum}, expected 1")]
    NotNormalized { path: String, sum: f64 },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),
    #[error("parameter `{name}`: {message}")]
    BadParam { name: String, message: String },
}

pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> SpecError {
    SpecError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Agent {
    pub name: String,
    /// State labels per time `1..=T`.
    pub states: Vec<Vec<String>>,
    /// Action labels per time `1..=T`.
    pub actions: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Team {
    pub name: String,
    pub agents: Vec<Agent>,
    /// Observation labels per time `1..=T`.
    pub observations: Vec<Vec<String>>,
}

/// Dense conditional kernel `p(outcome | state, joint action)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    pub states: usize,
    pub actions: usize,
    pub outcomes: usize,
    pub data: Vec<f64>,
}

impl Kernel {
    pub fn zeros(states: usize, actions: usize, outcomes: usize) -> Self {
        Kernel {
            states,
            actions,
            outcomes,
            data: vec![0.0; states * actions * outcomes],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, u: usize, o: usize) -> f64 {
        self.data[(x * self.actions + u) * self.outcomes + o]
    }

    #[inline]
    pub fn set(&mut self, x: usize, u: usize, o: usize, p: f64) {
        self.data[(x * self.actions + u) * self.outcomes + o] = p;
    }

    pub fn row(&self, x: usize, u: usize) -> &[f64] {
        let start = (x * self.actions + u) * self.outcomes;
        &self.data[start..start + self.outcomes]
    }
}

/// Reward over joint state and joint action.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardTable {
    pub states: usize,
    pub actions: usize,
    pub data: Vec<f64>,
}

impl RewardTable {
    pub fn zeros(states: usize, actions: usize) -> Self {
        RewardTable {
            states,
            actions,
            data: vec![0.0; states * actions],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, u: usize) -> f64 {
        self.data[x * self.actions + u]
    }

    #[inline]
    pub fn set(&mut self, x: usize, u: usize, r: f64) {
        self.data[x * self.actions + u] = r;
    }
}

/// Alphabet sizes and index tables for one time step.
#[derive(Clone, Debug)]
struct Stage {
    agent_states: Vec<Vec<usize>>,
    team_states: Vec<usize>,
    agent_actions: Vec<Vec<usize>>,
    team_actions: Vec<usize>,
    joint_actions: usize,
    joint_states: usize,
    observations: Vec<usize>,
    /// joint action -> team actions, `n_teams` entries per joint action.
    split_action: Vec<usize>,
    /// per team: team state -> agent states, `n_agents` entries per state.
    state_agents: Vec<Vec<usize>>,
    /// per team: team action -> agent actions.
    action_agents: Vec<Vec<usize>>,
}

impl Stage {
    fn build(agent_states: Vec<Vec<usize>>, agent_actions: Vec<Vec<usize>>, observations: Vec<usize>) -> Self {
        let team_states: Vec<usize> = agent_states.iter().map(|a| a.iter().product()).collect();
        let team_actions: Vec<usize> = agent_actions.iter().map(|a| a.iter().product()).collect();
        let joint_actions = team_actions.iter().product();
        let joint_states = team_states.iter().product();
        let n = team_actions.len();
        let mut split_action = Vec::with_capacity(joint_actions * n);
        for u in 0..joint_actions {
            split_action.extend(decode_vec(u, &team_actions));
        }
        let expand = |radices: &Vec<usize>, count: usize| {
            let mut out = Vec::with_capacity(count * radices.len());
            for k in 0..count {
                out.extend(decode_vec(k, radices));
            }
            out
        };
        let state_agents = agent_states
            .iter()
            .zip(&team_states)
            .map(|(r, &c)| expand(r, c))
            .collect();
        let action_agents = agent_actions
            .iter()
            .zip(&team_actions)
            .map(|(r, &c)| expand(r, c))
            .collect();
        Stage {
            agent_states,
            team_states,
            agent_actions,
            team_actions,
            joint_actions,
            joint_states,
            observations,
            split_action,
            state_agents,
            action_agents,
        }
    }
}

/// A validated game among teams.
#[derive(Clone, Debug)]
pub struct GameSpec {
    pub horizon: usize,
    pub delay: usize,
    pub teams: Vec<Team>,
    /// Per team: distribution of the team state at `t = 1`.
    pub init: Vec<Vec<f64>>,
    /// `[team][t - 1]` for `t = 1..T-1`: `Pr(x_{t+1} | x_t, u_t)`.
    pub transition: Vec<Vec<Kernel>>,
    /// `[team][t - 1]` for `t = 1..=T`: `Pr(y_t | x_t, u_t)`.
    pub observation: Vec<Vec<Kernel>>,
    /// `[team][t - 1]` for `t = 1..=T`.
    pub reward: Vec<Vec<RewardTable>>,
    stages: Vec<Stage>,
    pad: Stage,
}

impl PartialEq for GameSpec {
    fn eq(&self, other: &Self) -> bool {
        self.horizon == other.horizon
            && self.delay == other.delay
            && self.teams == other.teams
            && self.init == other.init
            && self.transition == other.transition
            && self.observation == other.observation
            && self.reward == other.reward
    }
}

fn check_row(path: impl FnOnce() -> String, row: &[f64]) -> Result<(), SpecError> {
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(invalid(path(), "entries must be finite and nonnegative"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOL {
        return Err(SpecError::NotNormalized { path: path(), sum });
    }
    Ok(())
}

fn check_labels(path: &str, labels: &[Vec<String>], horizon: usize) -> Result<(), SpecError> {
    if labels.len() != horizon {
        return Err(invalid(path, format!("expected {horizon} time steps, got {}", labels.len())));
    }
    for (k, l) in labels.iter().enumerate() {
        if l.is_empty() {
            return Err(invalid(format!("{path}[{k}]"), "alphabet must be nonempty"));
        }
    }
    Ok(())
}

impl GameSpec {
    /// Validates shapes and normalization and builds the index tables.
    pub fn new(
        horizon: usize,
        delay: usize,
        teams: Vec<Team>,
        init: Vec<Vec<f64>>,
        transition: Vec<Vec<Kernel>>,
        observation: Vec<Vec<Kernel>>,
        reward: Vec<Vec<RewardTable>>,
    ) -> Result<Self, SpecError> {
        if horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        if delay == 0 {
            return Err(invalid("delay", "must be at least 1"));
        }
        if teams.is_empty() {
            return Err(invalid("teams", "need at least one team"));
        }
        for (i, team) in teams.iter().enumerate() {
            if team.agents.is_empty() {
                return Err(invalid(format!("teams[{i}].agents"), "need at least one agent"));
            }
            for (j, a) in team.agents.iter().enumerate() {
                check_labels(&format!("teams[{i}].agents[{j}].states"), &a.states, horizon)?;
                check_labels(&format!("teams[{i}].agents[{j}].actions"), &a.actions, horizon)?;
            }
            check_labels(&format!("observations[{i}]"), &team.observations, horizon)?;
        }
        let n = teams.len();
        for (name, len) in [
            ("init", init.len()),
            ("transition", transition.len()),
            ("observation_kernel", observation.len()),
            ("reward", reward.len()),
        ] {
            if len != n {
                return Err(invalid(name, format!("expected {n} teams, got {len}")));
            }
        }

        let stages: Vec<Stage> = (0..horizon)
            .map(|k| {
                Stage::build(
                    teams
                        .iter()
                        .map(|tm| tm.agents.iter().map(|a| a.states[k].len()).collect())
                        .collect(),
                    teams
                        .iter()
                        .map(|tm| tm.agents.iter().map(|a| a.actions[k].len()).collect())
                        .collect(),
                    teams.iter().map(|tm| tm.observations[k].len()).collect(),
                )
            })
            .collect();
        let pad = Stage::build(
            teams.iter().map(|tm| vec![1; tm.agents.len()]).collect(),
            teams.iter().map(|tm| vec![1; tm.agents.len()]).collect(),
            vec![1; n],
        );

        for i in 0..n {
            let s1 = &stages[0];
            if init[i].len() != s1.team_states[i] {
                return Err(invalid(
                    format!("init[{i}]"),
                    format!("expected {} entries, got {}", s1.team_states[i], init[i].len()),
                ));
            }
            check_row(|| format!("init[{i}]"), &init[i])?;

            if transition[i].len() != horizon - 1 {
                return Err(invalid(
                    format!("transition[{i}]"),
                    format!("expected {} time steps, got {}", horizon - 1, transition[i].len()),
                ));
            }
            for (k, ker) in transition[i].iter().enumerate() {
                let shape = (stages[k].team_states[i], stages[k].joint_actions, stages[k + 1].team_states[i]);
                check_kernel(&format!("transition[{i}][{k}]"), ker, shape)?;
            }
            if observation[i].len() != horizon {
                return Err(invalid(
                    format!("observation_kernel[{i}]"),
                    format!("expected {horizon} time steps, got {}", observation[i].len()),
                ));
            }
            for (k, ker) in observation[i].iter().enumerate() {
                let shape = (stages[k].team_states[i], stages[k].joint_actions, stages[k].observations[i]);
                check_kernel(&format!("observation_kernel[{i}][{k}]"), ker, shape)?;
            }
            if reward[i].len() != horizon {
                return Err(invalid(
                    format!("reward[{i}]"),
                    format!("expected {horizon} time steps, got {}", reward[i].len()),
                ));
            }
            for (k, r) in reward[i].iter().enumerate() {
                if r.states != stages[k].joint_states
                    || r.actions != stages[k].joint_actions
                    || r.data.len() != r.states * r.actions
                {
                    return Err(invalid(
                        format!("reward[{i}][{k}]"),
                        format!(
                            "expected shape {}x{}",
                            stages[k].joint_states, stages[k].joint_actions
                        ),
                    ));
                }
                if r.data.iter().any(|v| !v.is_finite()) {
                    return Err(invalid(format!("reward[{i}][{k}]"), "entries must be finite"));
                }
            }
        }

        Ok(GameSpec {
            horizon,
            delay,
            teams,
            init,
            transition,
            observation,
            reward,
            stages,
            pad,
        })
    }

    #[inline]
    fn stage(&self, t: Time) -> &Stage {
        if t >= 1 && t as usize <= self.horizon {
            &self.stages[t as usize - 1]
        } else {
            &self.pad
        }
    }

    pub fn n_teams(&self) -> usize {
        self.teams.len()
    }

    pub fn n_agents(&self, i: usize) -> usize {
        self.teams[i].agents.len()
    }

    pub fn horizon_t(&self) -> Time {
        self.horizon as Time
    }

    pub fn delay_t(&self) -> Time {
        self.delay as Time
    }

    pub fn agent_states(&self, i: usize, j: usize, t: Time) -> usize {
        self.stage(t).agent_states[i][j]
    }

    pub fn agent_state_radices(&self, i: usize, t: Time) -> &[usize] {
        &self.stage(t).agent_states[i]
    }

    pub fn team_states(&self, i: usize, t: Time) -> usize {
        self.stage(t).team_states[i]
    }

    pub fn agent_actions(&self, i: usize, j: usize, t: Time) -> usize {
        self.stage(t).agent_actions[i][j]
    }

    pub fn team_actions(&self, i: usize, t: Time) -> usize {
        self.stage(t).team_actions[i]
    }

    pub fn team_action_radices(&self, t: Time) -> &[usize] {
        &self.stage(t).team_actions
    }

    pub fn joint_actions(&self, t: Time) -> usize {
        self.stage(t).joint_actions
    }

    pub fn joint_states(&self, t: Time) -> usize {
        self.stage(t).joint_states
    }

    pub fn team_state_radices(&self, t: Time) -> &[usize] {
        &self.stage(t).team_states
    }

    pub fn observations(&self, i: usize, t: Time) -> usize {
        self.stage(t).observations[i]
    }

    pub fn observation_radices(&self, t: Time) -> &[usize] {
        &self.stage(t).observations
    }

    /// Team `i`'s component of joint action `u`.
    #[inline]
    pub fn team_action(&self, i: usize, t: Time, u: usize) -> usize {
        let st = self.stage(t);
        st.split_action[u * st.team_actions.len() + i]
    }

    pub fn split_action(&self, t: Time, u: usize) -> &[usize] {
        let st = self.stage(t);
        let n = st.team_actions.len();
        &st.split_action[u * n..(u + 1) * n]
    }

    pub fn join_actions(&self, t: Time, team_actions: &[usize]) -> usize {
        encode_radix(team_actions, &self.stage(t).team_actions)
    }

    pub fn join_states(&self, t: Time, team_states: &[usize]) -> usize {
        encode_radix(team_states, &self.stage(t).team_states)
    }

    /// Agent components of team state `x`.
    pub fn state_agents(&self, i: usize, t: Time, x: usize) -> &[usize] {
        let st = self.stage(t);
        let m = st.agent_states[i].len();
        &st.state_agents[i][x * m..(x + 1) * m]
    }

    /// Agent components of team action `a`.
    pub fn action_agents(&self, i: usize, t: Time, a: usize) -> &[usize] {
        let st = self.stage(t);
        let m = st.agent_actions[i].len();
        &st.action_agents[i][a * m..(a + 1) * m]
    }

    /// `Pr(x_{t+1} = xn | x_t = x, u_t = u)` for team `i`, padded.
    #[inline]
    pub fn trans(&self, i: usize, t: Time, x: usize, u: usize, xn: usize) -> f64 {
        if t == 0 {
            self.init[i][xn]
        } else if t < 0 || t as usize >= self.horizon {
            if xn == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            self.transition[i][t as usize - 1].get(x, u, xn)
        }
    }

    /// `Pr(y_t = y | x_t = x, u_t = u)` for team `i`, padded.
    #[inline]
    pub fn obs(&self, i: usize, t: Time, x: usize, u: usize, y: usize) -> f64 {
        if t >= 1 && t as usize <= self.horizon {
            self.observation[i][t as usize - 1].get(x, u, y)
        } else if y == 0 {
            1.0
        } else {
            0.0
        }
    }

    /// Team `i`'s reward at joint state `xs` (team states) and joint action `u`.
    #[inline]
    pub fn reward_at(&self, i: usize, t: Time, xs: &[usize], u: usize) -> f64 {
        if t >= 1 && t as usize <= self.horizon {
            let x = self.join_states(t, xs);
            self.reward[i][t as usize - 1].get(x, u)
        } else {
            0.0
        }
    }

    /// Team `i`'s reward at joint state index `x`.
    #[inline]
    pub fn reward_idx(&self, i: usize, t: Time, x: usize, u: usize) -> f64 {
        if t >= 1 && t as usize <= self.horizon {
            self.reward[i][t as usize - 1].get(x, u)
        } else {
            0.0
        }
    }
}

fn check_kernel(path: &str, ker: &Kernel, shape: (usize, usize, usize)) -> Result<(), SpecError> {
    if (ker.states, ker.actions, ker.outcomes) != shape || ker.data.len() != shape.0 * shape.1 * shape.2 {
        return Err(invalid(
            path,
            format!("expected shape {}x{}x{}", shape.0, shape.1, shape.2),
        ));
    }
    for x in 0..shape.0 {
        for u in 0..shape.1 {
            check_row(|| format!("{path}[{x}][{u}]"), ker.row(x, u))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding_is_singleton() {
        let g = builtins::nonexistence(0.1);
        for t in [-3, -1, 0] {
            assert_eq!(g.team_states(0, t), 1);
            assert_eq!(g.joint_actions(t), 1);
            assert_eq!(g.observations(1, t), 1);
            assert_eq!(g.obs(0, t, 0, 0, 0), 1.0);
            assert_eq!(g.reward_at(0, t, &[0, 0], 0), 0.0);
        }
        assert_eq!(g.trans(0, -1, 0, 0, 0), 1.0);
        assert_eq!(g.trans(0, 0, 0, 0, 1), 0.5);
    }

    #[test]
    fn action_split_matches_join() {
        let g = builtins::guessing();
        for t in 1..=2 {
            for u in 0..g.joint_actions(t) {
                let parts = g.split_action(t, u).to_vec();
                assert_eq!(g.join_actions(t, &parts), u);
            }
        }
        // t = 1: agents A1, A2 act, B is padded
        assert_eq!(g.joint_actions(1), 4);
        assert_eq!(g.action_agents(0, 1, 2), &[1, 0]);
    }

    #[test]
    fn rejects_unnormalized_init() {
        let g = builtins::nonexistence(0.1);
        let mut init = g.init.clone();
        init[0] = vec![0.5, 0.4];
        let err = GameSpec::new(
            g.horizon,
            g.delay,
            g.teams.clone(),
            init,
            g.transition.clone(),
            g.observation.clone(),
            g.reward.clone(),
        )
        .unwrap_err();
        assert!(matches!(err, SpecError::NotNormalized { ref path, .. } if path == "init[0]"));
    }
}
