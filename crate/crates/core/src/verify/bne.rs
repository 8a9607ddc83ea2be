//! Brute-force equilibrium enumeration for tiny two-team games.
//!
//! Every reduced pure coordination strategy of both teams is listed, the
//! induced bimatrix is built by exact forward evaluation, and all
//! support-fixed equilibrium sets are enumerated. Each set is mapped to
//! behavioral form and then to agent-level conditional play, which is what
//! identifies an equilibrium: many mixtures induce the same behavior.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coord::convert::{mixed_to_behavioral, reduced_pure_strategies, ReducedPure};
use crate::coord::strategy::{BehavioralTable, CoordinationStrategy, Profile};
use crate::coord::{CommonHistory, Spaces};
use crate::error::{Budgets, Error, Result};
use crate::model::{GameSpec, Time};
use crate::nf::{Bimatrix, Equilibrium};
use crate::rollout::{team_dist, Forward};

/// Tolerance for comparing agent-level conditional play.
pub const PROJECTION_TOL: f64 = 1e-7;

/// What agent `j` of team `i` conditions on at `t`: the common history,
/// the team's revealed states and its own window (agent window index).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentInfo {
    pub team: usize,
    pub agent: usize,
    pub t: Time,
    pub h0: CommonHistory,
    pub revealed: Vec<usize>,
    pub window: usize,
}

/// Agent-level conditional action laws on every reached information set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub entries: Vec<(AgentInfo, Vec<f64>)>,
}

impl Projection {
    pub fn get(&self, key: &AgentInfo) -> Option<&[f64]> {
        self.entries
            .binary_search_by(|(k, _)| k.cmp(key))
            .ok()
            .map(|i| self.entries[i].1.as_slice())
    }

    /// Largest difference over information sets reached by both.
    pub fn distance_on_common(&self, other: &Projection) -> f64 {
        self.entries
            .iter()
            .filter_map(|(k, v)| other.get(k).map(|w| crate::util::max_abs_diff(v, w)))
            .fold(0.0, f64::max)
    }

    /// Same reached sets and the same laws on them.
    pub fn same_as(&self, other: &Projection) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|((k1, v1), (k2, v2))| k1 == k2 && crate::util::max_abs_diff(v1, v2) <= PROJECTION_TOL)
    }
}

/// Agent-level projection of a profile, by exact forward enumeration.
pub fn agent_projection(g: &GameSpec, spaces: &Spaces, profile: &Profile, cap: usize) -> Result<Projection> {
    let mut fwd = Forward::new(g, spaces, profile, cap);
    fwd.track_all = true;
    let d = g.delay_t();
    let mut acc: BTreeMap<AgentInfo, Vec<f64>> = BTreeMap::new();
    let mut layer = fwd.initial();
    let mut sink = vec![0.0; g.n_teams()];
    for t in 1..=g.horizon_t() {
        let revealed = (t - d).max(0) as usize;
        for (w, &p) in &layer {
            for i in 0..g.n_teams() {
                let presc = spaces.presc(i, t);
                let part = &w.teams[i];
                let win = spaces.window(i, t).encode(&part.window);
                let dist = team_dist(spaces, profile[i].as_ref(), i, t, d, &w.h0, part);
                for j in 0..g.n_agents(i) {
                    let aw = presc.agent_window(win, j);
                    let key = AgentInfo {
                        team: i,
                        agent: j,
                        t,
                        h0: w.h0.clone(),
                        revealed: part.states[..revealed].to_vec(),
                        window: aw,
                    };
                    let row = acc.entry(key).or_insert_with(|| vec![0.0; g.agent_actions(i, j, t)]);
                    for &(gamma, q) in &dist {
                        row[presc.agent_table(gamma, j)[aw] as usize] += p * q;
                    }
                }
            }
        }
        if t < g.horizon_t() {
            layer = fwd.step(t, &layer, &mut sink)?;
        }
    }
    let entries = acc
        .into_iter()
        .filter_map(|(k, mut v)| (crate::util::normalize(&mut v) > 0.0).then_some((k, v)))
        .collect();
    Ok(Projection { entries })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BneEquilibrium {
    /// Behavioral coordination strategies of a representative point.
    pub profile: Vec<BehavioralTable>,
    /// Representative mixtures over each team's reduced pure strategies.
    pub mixed: Vec<Vec<f64>>,
    pub payoff: Vec<f64>,
    pub projection: Projection,
    /// Support-fixed sets that collapsed onto this projection.
    pub components: usize,
    /// Whether every point of those sets induces the same agent-level play.
    pub rigid: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BneReport {
    pub strategy_counts: Vec<usize>,
    pub equilibria: Vec<BneEquilibrium>,
}

impl BneReport {
    pub fn all_rigid(&self) -> bool {
        self.equilibria.iter().all(|e| e.rigid)
    }
}

fn pure_profile(strats: &[&ReducedPure]) -> Profile {
    strats
        .iter()
        .map(|r| Arc::new(r.strategy.clone()) as Arc<dyn CoordinationStrategy>)
        .collect()
}

fn behavioral(strategies: &[Vec<(f64, ReducedPure)>], eq: &Equilibrium) -> Vec<BehavioralTable> {
    [&eq.x, &eq.y]
        .iter()
        .zip(strategies)
        .map(|(mix, strats)| {
            let weighted: Vec<(f64, ReducedPure)> = mix.iter().zip(strats).map(|(&w, (_, r))| (w, r.clone())).collect();
            mixed_to_behavioral(&weighted)
        })
        .collect()
}

fn as_profile(tables: &[BehavioralTable]) -> Profile {
    tables
        .iter()
        .map(|t| Arc::new(t.clone()) as Arc<dyn CoordinationStrategy>)
        .collect()
}

/// All Bayes-Nash equilibria of a two-team game, grouped by agent-level
/// play.
pub fn bne_enumerate_tiny(g: &GameSpec, spaces: &Spaces, budgets: Budgets) -> Result<BneReport> {
    if g.n_teams() != 2 {
        return Err(Error::NotApplicable(format!(
            "enumeration needs exactly two teams, spec has {}",
            g.n_teams()
        )));
    }
    let strategies: Vec<Vec<(f64, ReducedPure)>> = (0..2)
        .map(|i| reduced_pure_strategies(g, spaces, i, None, budgets.normal_form))
        .collect::<Result<_>>()?;
    let (m, n) = (strategies[0].len(), strategies[1].len());
    let mut a = vec![vec![0.0; n]; m];
    let mut b = vec![vec![0.0; n]; m];
    for r in 0..m {
        for c in 0..n {
            let profile = pure_profile(&[&strategies[0][r].1, &strategies[1][c].1]);
            let pay = Forward::new(g, spaces, &profile, budgets.cells).total_payoff()?;
            a[r][c] = pay[0];
            b[r][c] = pay[1];
        }
    }
    let components = Bimatrix::new(a, b).enumerate_all(budgets.cells as u128)?;
    let mut out: Vec<BneEquilibrium> = Vec::new();
    for comp in components {
        let tables = behavioral(&strategies, &comp.representative);
        let profile = as_profile(&tables);
        let projection = agent_projection(g, spaces, &profile, budgets.cells)?;
        let mut rigid = true;
        if !comp.is_point {
            for e in &comp.extremes {
                let ep = agent_projection(g, spaces, &as_profile(&behavioral(&strategies, e)), budgets.cells)?;
                if ep.distance_on_common(&projection) > PROJECTION_TOL {
                    rigid = false;
                }
            }
        }
        if let Some(prev) = out.iter_mut().find(|e| e.projection.same_as(&projection)) {
            prev.components += 1;
            prev.rigid &= rigid;
            continue;
        }
        let payoff = Forward::new(g, spaces, &profile, budgets.cells).total_payoff()?;
        out.push(BneEquilibrium {
            profile: tables,
            mixed: vec![comp.representative.x.clone(), comp.representative.y.clone()],
            payoff,
            projection,
            components: 1,
            rigid,
        });
    }
    Ok(BneReport {
        strategy_counts: vec![m, n],
        equilibria: out,
    })
}
