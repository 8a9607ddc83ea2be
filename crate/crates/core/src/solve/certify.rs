//! Non-existence certification for tiny two-team games.
//!
//! All equilibria are enumerated. Along each one's play path, common
//! histories whose per-team SPI laws and recent windows coincide share a
//! CCI cell, so a CCI-based strategy must treat them alike: at every SPI
//! and hidden window present in both, the team-action law must agree.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::belief::{recent_windows, Cci, CciKey};
use crate::coord::history::join_obs;
use crate::coord::strategy::{BehavioralTable, CoordinationStrategy};
use crate::coord::{CommonHistory, Spaces};
use crate::error::{Budgets, Error, Result};
use crate::model::{GameSpec, Time};
use crate::rollout::odometer;
use crate::verify::bne::{BneEquilibrium, PROJECTION_TOL};
use crate::verify::bne_enumerate_tiny;
use crate::verify::filter::{Nodes, TeamFilter};

/// Two on-path histories in one cell with different play.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub equilibrium: usize,
    pub t: Time,
    pub team: usize,
    pub spi: usize,
    pub window: usize,
    pub histories: Vec<CommonHistory>,
    /// Team-action laws at `(spi, window)` after each history.
    pub laws: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Certification {
    /// Every equilibrium is rigid and none is CCI-measurable.
    CertifiedNone { equilibria: usize, violations: Vec<Violation> },
    /// A measurable equilibrium, as behavioral coordination strategies.
    Found { equilibrium: Box<BneEquilibrium> },
    Inconclusive { reason: String },
}

type Behavior = BTreeMap<(usize, usize), Vec<f64>>;

struct PathNode {
    h0: CommonHistory,
    nodes: Vec<Nodes>,
}

/// Team-action law per `(spi, window)` of one team after `h0`.
fn behavior(filter: &TeamFilter, g: &GameSpec, t: Time, h0: &CommonHistory, nodes: &Nodes) -> Behavior {
    let k = filter.team;
    let spi_space = filter.spaces.spi(k, t);
    let win = filter.spaces.window(k, t);
    let presc = filter.spaces.presc(k, t);
    let mut out: Behavior = BTreeMap::new();
    for (node, &p) in nodes {
        let w = win.encode(&node.window);
        let row = out
            .entry((spi_space.encode(&node.spi), w))
            .or_insert_with(|| vec![0.0; g.team_actions(k, t)]);
        for (gamma, q) in filter.dist(t, h0, node) {
            row[presc.apply(gamma, w)] += p * q;
        }
    }
    out.values_mut().for_each(|v| {
        crate::util::normalize(v);
    });
    out
}

/// Earliest measurability violation along the play path of `profile`.
pub fn first_violation(g: &GameSpec, spaces: &Spaces, profile: &[BehavioralTable], cap: usize) -> Result<Option<Violation>> {
    let n = g.n_teams();
    let filters: Vec<TeamFilter> = profile
        .iter()
        .enumerate()
        .map(|(k, s)| TeamFilter::new(g, spaces, k, s as &dyn CoordinationStrategy))
        .collect();
    let mut layer = vec![PathNode {
        h0: CommonHistory::new(),
        nodes: filters.iter().map(|f| f.initial()).collect(),
    }];
    for t in 1..=g.horizon_t() {
        let mut groups: BTreeMap<CciKey, Vec<(CommonHistory, Vec<Behavior>)>> = BTreeMap::new();
        for pn in &layer {
            let (ys, us) = recent_windows(g, &pn.h0);
            let pi = (0..n)
                .map(|k| {
                    let law = filters[k].spi_law(t, &pn.nodes[k]);
                    let mut v = vec![0.0; spaces.spi(k, t).size];
                    law.into_iter().for_each(|(s, p)| v[s] = p);
                    v
                })
                .collect();
            let key = Cci { t, pi, ys, us }.key();
            let beh = (0..n).map(|k| behavior(&filters[k], g, t, &pn.h0, &pn.nodes[k])).collect();
            groups.entry(key).or_default().push((pn.h0.clone(), beh));
        }
        for members in groups.values() {
            let (h_ref, b_ref) = &members[0];
            for (h, b) in &members[1..] {
                for k in 0..n {
                    for (&(s, w), law) in &b[k] {
                        let Some(other) = b_ref[k].get(&(s, w)) else { continue };
                        if crate::util::max_abs_diff(law, other) > PROJECTION_TOL {
                            return Ok(Some(Violation {
                                equilibrium: 0,
                                t,
                                team: k,
                                spi: s,
                                window: w,
                                histories: vec![h_ref.clone(), h.clone()],
                                laws: vec![other.clone(), law.clone()],
                            }));
                        }
                    }
                }
            }
        }
        if t == g.horizon_t() {
            break;
        }
        let mut next = Vec::new();
        for pn in &layer {
            let marginals: Vec<Vec<(usize, usize, f64)>> = (0..n).map(|k| filters[k].marginal(t, &pn.h0, &pn.nodes[k])).collect();
            let mut outcomes: BTreeMap<(usize, usize), f64> = BTreeMap::new();
            let radices: Vec<usize> = marginals.iter().map(|m| m.len()).collect();
            let y_radices = g.observation_radices(t).to_vec();
            odometer(&radices, |pick| {
                let p: f64 = (0..n).map(|k| marginals[k][pick[k]].2).product();
                let xs: Vec<usize> = (0..n).map(|k| marginals[k][pick[k]].0).collect();
                let acts: Vec<usize> = (0..n).map(|k| marginals[k][pick[k]].1).collect();
                let u = g.join_actions(t, &acts);
                odometer(&y_radices, |yk| {
                    let py: f64 = (0..n).map(|k| g.obs(k, t, xs[k], u, yk[k])).product();
                    if p * py > 0.0 {
                        *outcomes.entry((join_obs(g, t, yk), u)).or_insert(0.0) += p * py;
                    }
                });
            });
            for &(y, u) in outcomes.keys() {
                let nodes: Option<Vec<Nodes>> = (0..n).map(|k| filters[k].update(t, &pn.h0, &pn.nodes[k], y, u)).collect();
                if let Some(nodes) = nodes {
                    next.push(PathNode {
                        h0: pn.h0.extended(y, u),
                        nodes,
                    });
                }
            }
            if next.len() > cap {
                return Err(crate::error::budget("on-path histories", "more", cap));
            }
        }
        layer = next;
    }
    Ok(None)
}

/// Certifies that no CCI-based equilibrium exists by enumerating all
/// equilibria of a tiny two-team game.
pub fn certify_nonexistence_tiny(g: &GameSpec, spaces: &Spaces, budgets: Budgets) -> Result<Certification> {
    if g.n_teams() != 2 {
        return Ok(Certification::Inconclusive {
            reason: format!("enumeration needs two teams, spec has {}", g.n_teams()),
        });
    }
    let report = match bne_enumerate_tiny(g, spaces, budgets) {
        Ok(r) => r,
        Err(e @ Error::Budget { .. }) => return Ok(Certification::Inconclusive { reason: e.to_string() }),
        Err(e) => return Err(e),
    };
    if report.equilibria.is_empty() {
        return Ok(Certification::Inconclusive {
            reason: "enumeration returned no equilibrium".into(),
        });
    }
    let mut violations = Vec::new();
    for (idx, eq) in report.equilibria.iter().enumerate() {
        match first_violation(g, spaces, &eq.profile, budgets.cells)? {
            None => {
                return Ok(Certification::Found {
                    equilibrium: Box::new(eq.clone()),
                })
            }
            Some(mut v) => {
                v.equilibrium = idx;
                violations.push(v);
            }
        }
    }
    if !report.all_rigid() {
        return Ok(Certification::Inconclusive {
            reason: "some equilibrium set is not rigid, so a measurable point may lie inside it".into(),
        });
    }
    Ok(Certification::CertifiedNone {
        equilibria: report.equilibria.len(),
        violations,
    })
}
