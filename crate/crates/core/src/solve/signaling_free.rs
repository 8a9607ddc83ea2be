//! Backward induction for signaling-free games.
//!
//! Dynamics and observations ignore actions, so the common belief over
//! current team states evolves the same way under any play and each stage
//! is a complete-information game in team actions. Its equilibrium is
//! played through constant prescriptions.

use std::collections::{BTreeSet, HashMap, VecDeque};

use super::{BeliefSpace, Cell, CibSolution, Mode, Residuals, Successor};
use crate::belief::{signaling_free_update, Cci, CciKey, CCI_GRID};
use crate::coord::history::{join_obs, split_obs};
use crate::coord::Spaces;
use crate::error::{budget, Budgets, Error, Result};
use crate::model::graph::is_signaling_free;
use crate::model::GameSpec;
use crate::nf::NGame;
use crate::rollout::odometer;
use crate::verify::nash_gap;

struct Record {
    cci: Cci,
    /// Per team, law over team actions.
    mix: Vec<Vec<f64>>,
    /// `(joint y, probability, next key)`.
    next: Vec<(usize, f64, CciKey)>,
    values: Vec<f64>,
    regret: f64,
}

struct Solver<'a> {
    g: &'a GameSpec,
    budgets: Budgets,
    done: HashMap<CciKey, Record>,
}

impl Solver<'_> {
    /// Stage payoffs `Σ_x Π_k π̄^k(x^k) r^i(x, u)` over joint actions.
    fn stage_game(&self, b: &Cci) -> NGame {
        let g = self.g;
        let t = b.t;
        let n = g.n_teams();
        let supports: Vec<Vec<(usize, f64)>> = b
            .pi
            .iter()
            .map(|v| v.iter().copied().enumerate().filter(|&(_, p)| p > 0.0).collect())
            .collect();
        let actions: Vec<usize> = (0..n).map(|k| g.team_actions(k, t)).collect();
        let joint = g.joint_actions(t);
        let mut payoff = vec![vec![0.0; joint]; n];
        let radices: Vec<usize> = supports.iter().map(|s| s.len()).collect();
        odometer(&radices, |pick| {
            let p: f64 = (0..n).map(|k| supports[k][pick[k]].1).product();
            let xs: Vec<usize> = (0..n).map(|k| supports[k][pick[k]].0).collect();
            for u in 0..joint {
                for (i, row) in payoff.iter_mut().enumerate() {
                    row[u] += p * g.reward_at(i, t, &xs, u);
                }
            }
        });
        NGame { actions, payoff }
    }

    fn solve(&mut self, b: Cci) -> Result<CciKey> {
        let key = b.key();
        if self.done.contains_key(&key) {
            return Ok(key);
        }
        if self.done.len() >= self.budgets.cells {
            return Err(budget("signaling-free cells", "more", self.budgets.cells));
        }
        let g = self.g;
        let t = b.t;
        let n = g.n_teams();
        let mut next = Vec::new();
        let mut future = vec![0.0; n];
        if t < g.horizon_t() {
            let per: Vec<Vec<(usize, f64)>> = (0..n)
                .map(|k| {
                    (0..g.observations(k, t))
                        .map(|y| (y, b.pi[k].iter().enumerate().map(|(x, &p)| p * g.obs(k, t, x, 0, y)).sum::<f64>()))
                        .filter(|&(_, p)| p > 0.0)
                        .collect()
                })
                .collect();
            let radices: Vec<usize> = per.iter().map(|v| v.len()).collect();
            let mut joint = Vec::new();
            odometer(&radices, |pick| {
                let ys: Vec<usize> = (0..n).map(|k| per[k][pick[k]].0).collect();
                let p: f64 = (0..n).map(|k| per[k][pick[k]].1).product();
                joint.push((join_obs(g, t, &ys), p));
            });
            for (y, p) in joint {
                let yk = split_obs(g, t, y);
                let pi = (0..n)
                    .map(|k| signaling_free_update(g, k, t, &b.pi[k], yk[k]))
                    .collect::<Result<Vec<_>>>()?;
                let child = Cci {
                    t: t + 1,
                    pi,
                    ys: vec![],
                    us: vec![],
                };
                let ck = self.solve(child)?;
                for (i, f) in future.iter_mut().enumerate() {
                    *f += p * self.done[&ck].values[i];
                }
                next.push((y, p, ck));
            }
        }
        let game = self.stage_game(&b);
        let support = game.actions.iter().copied().max().unwrap_or(1);
        let mix = game
            .solve(support)
            .ok_or_else(|| Error::NotApplicable(format!("no stage equilibrium found at t={t}")))?;
        let regret = game.regret(&mix);
        let values = (0..n)
            .map(|i| {
                let vals = game.action_values(i, &mix);
                vals.iter().zip(&mix[i]).map(|(v, p)| v * p).sum::<f64>() + future[i]
            })
            .collect();
        self.done.insert(
            key.clone(),
            Record {
                cci: b,
                mix,
                next,
                values,
                regret,
            },
        );
        Ok(key)
    }
}

/// Open-loop equilibrium of a signaling-free game, one cell per reachable
/// common belief over current team states.
pub fn solve_signaling_free(g: &GameSpec, spaces: &Spaces, budgets: Budgets, verify: bool) -> Result<CibSolution> {
    if !is_signaling_free(g) {
        return Err(Error::NotApplicable("the game is not signaling-free".into()));
    }
    let n = g.n_teams();
    let mut solver = Solver {
        g,
        budgets,
        done: HashMap::new(),
    };
    let root = solver.solve(Cci {
        t: 1,
        pi: g.init.clone(),
        ys: vec![],
        us: vec![],
    })?;
    let mut order = vec![root.clone()];
    let mut index: HashMap<CciKey, usize> = HashMap::from([(root.clone(), 0)]);
    let mut queue = VecDeque::from([root]);
    while let Some(k) = queue.pop_front() {
        let children: BTreeSet<&CciKey> = solver.done[&k].next.iter().map(|e| &e.2).collect();
        for c in children {
            if !index.contains_key(c) {
                index.insert(c.clone(), order.len());
                order.push(c.clone());
                queue.push_back(c.clone());
            }
        }
    }
    let mut residuals = Residuals {
        cells_visited: solver.done.len(),
        ..Residuals::default()
    };
    let cells = order
        .iter()
        .map(|k| {
            let r = &solver.done[k];
            let t = r.cci.t;
            residuals.max_gap = residuals.max_gap.max(r.regret);
            let policy = (0..n)
                .map(|i| {
                    let presc = spaces.presc(i, t);
                    let row: Vec<(usize, f64)> = r.mix[i]
                        .iter()
                        .enumerate()
                        .filter(|&(_, &p)| p > 0.0)
                        .map(|(a, &p)| (presc.constant(g, a), p))
                        .collect();
                    let row = crate::coord::strategy::clean(row);
                    (0..spaces.spi(i, t).size).map(|s| (s, row.clone())).collect()
                })
                .collect();
            let mut successors = Vec::new();
            if t < g.horizon_t() {
                for &(y, _, ref ck) in &r.next {
                    for u in 0..g.joint_actions(t) {
                        successors.push(Successor {
                            y,
                            u,
                            next: index[ck],
                            on_path: vec![true; n],
                        });
                    }
                }
            }
            Cell {
                key: k.clone(),
                cci: r.cci.clone(),
                policy,
                successors,
                values: (0..n).map(|i| vec![r.values[i]; spaces.spi(i, t).size]).collect(),
                gap: r.regret,
            }
        })
        .collect();
    let mut sol = CibSolution {
        spec_hash: crate::model::spec_hash(g),
        mode: Mode::SignalingFree,
        belief_space: BeliefSpace::State,
        offpath_policy: None,
        simple_mode: spaces.simple,
        cell_radius: CCI_GRID,
        cells,
        residuals,
        verifier_report: None,
    };
    if verify {
        sol.verifier_report = Some(nash_gap(g, spaces, &sol.profile(), budgets)?);
    }
    Ok(sol)
}
