//! Exact best responses.
//!
//! [`best_response`] runs dynamic programming over `(h0, s^i)`: the own
//! hidden window enters through the private belief and the other teams
//! through their per-team filters. [`full_history_best_response`] ignores
//! all of that structure and searches over full coordinator information
//! sets of the joint process.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::belief::{private_belief, recent_windows};
use crate::coord::history::join_obs;
use crate::coord::strategy::{clean, Dist, Profile, SpibTable};
use crate::coord::{CommonHistory, Spaces};
use crate::error::{budget, Result};
use crate::model::{GameSpec, Time};
use crate::rollout::{advance_part, initial_part, odometer, team_dist, TeamPart};

use super::filter::{Nodes, TeamFilter};

#[derive(Clone, Debug)]
pub struct BestResponse {
    pub value: f64,
    /// Optimal strategy on every visited `(h0, s)` cell; deterministic
    /// unless a probability floor was imposed.
    pub strategy: SpibTable,
    pub cells: usize,
    /// Optimal value of every visited cell.
    pub trail: Vec<TrailEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrailEntry {
    pub t: Time,
    pub h0: CommonHistory,
    pub spi: usize,
    pub value: f64,
}

struct HistoryCtx {
    filters: Vec<Option<Nodes>>,
    marginals: Vec<Vec<(usize, usize, f64)>>,
    groups: std::cell::RefCell<HashMap<(usize, usize), Rc<(f64, Vec<(usize, usize, f64)>)>>>,
}

struct Dp<'a> {
    g: &'a GameSpec,
    spaces: &'a Spaces,
    filters: Vec<Option<TeamFilter<'a>>>,
    team: usize,
    cap: usize,
    /// Minimum probability of every prescription.
    floor: f64,
    ctxs: HashMap<CommonHistory, Rc<HistoryCtx>>,
    values: HashMap<(CommonHistory, usize), f64>,
    choice: BTreeMap<(CommonHistory, usize), Dist>,
}

impl<'a> Dp<'a> {
    fn ctx(&mut self, h0: &CommonHistory) -> Rc<HistoryCtx> {
        if let Some(c) = self.ctxs.get(h0) {
            return c.clone();
        }
        let t = h0.t();
        let filters: Vec<Option<Nodes>> = if t == 1 {
            self.filters.iter().map(|f| f.as_ref().map(|f| f.initial())).collect()
        } else {
            let parent = self.ctx(&h0.prefix(t - 1));
            let (y, u) = (h0.obs_at(t - 1), h0.action_at(t - 1));
            let hp = h0.prefix(t - 1);
            self.filters
                .iter()
                .zip(&parent.filters)
                .map(|(f, nodes)| match (f, nodes) {
                    (Some(f), Some(nodes)) => Some(f.update(t - 1, &hp, nodes, y, u).unwrap_or_default()),
                    _ => None,
                })
                .collect()
        };
        let marginals = self
            .filters
            .iter()
            .zip(&filters)
            .map(|(f, nodes)| match (f, nodes) {
                (Some(f), Some(nodes)) => f.marginal(t, h0, nodes),
                _ => vec![],
            })
            .collect();
        let c = Rc::new(HistoryCtx {
            filters,
            marginals,
            groups: Default::default(),
        });
        self.ctxs.insert(h0.clone(), c.clone());
        c
    }

    fn group(&self, ctx: &HistoryCtx, t: Time, x: usize, a: usize) -> Rc<(f64, Vec<(usize, usize, f64)>)> {
        if let Some(v) = ctx.groups.borrow().get(&(x, a)) {
            return v.clone();
        }
        let g = self.g;
        let n = g.n_teams();
        let i = self.team;
        let lists: Vec<Vec<(usize, usize, f64)>> = (0..n)
            .map(|k| if k == i { vec![(x, a, 1.0)] } else { ctx.marginals[k].clone() })
            .collect();
        let radices: Vec<usize> = lists.iter().map(|l| l.len()).collect();
        let y_radices = g.observation_radices(t).to_vec();
        let mut r = 0.0;
        let mut q: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        odometer(&radices, |pick| {
            let p: f64 = (0..n).map(|k| lists[k][pick[k]].2).product();
            let xs: Vec<usize> = (0..n).map(|k| lists[k][pick[k]].0).collect();
            let acts: Vec<usize> = (0..n).map(|k| lists[k][pick[k]].1).collect();
            let u = g.join_actions(t, &acts);
            r += p * g.reward_at(i, t, &xs, u);
            if t == g.horizon_t() {
                return;
            }
            odometer(&y_radices, |ys| {
                let py: f64 = (0..n).map(|k| g.obs(k, t, xs[k], u, ys[k])).product();
                if py > 0.0 {
                    *q.entry((join_obs(g, t, ys), u)).or_insert(0.0) += p * py;
                }
            });
        });
        let v = Rc::new((r, q.into_iter().map(|((y, u), p)| (y, u, p)).collect()));
        ctx.groups.borrow_mut().insert((x, a), v.clone());
        v
    }

    fn value(&mut self, h0: &CommonHistory, s: usize) -> Result<f64> {
        let g = self.g;
        let t = h0.t();
        if t > g.horizon_t() {
            return Ok(0.0);
        }
        if let Some(&v) = self.values.get(&(h0.clone(), s)) {
            return Ok(v);
        }
        if self.values.len() >= self.cap {
            return Err(budget("best-response cells", "more", self.cap));
        }
        let i = self.team;
        let ctx = self.ctx(h0);
        let (ys, us) = recent_windows(g, h0);
        let Ok(pb) = private_belief(g, self.spaces, i, t, &ys, &us, s) else {
            self.values.insert((h0.clone(), s), 0.0);
            return Ok(0.0);
        };
        let win = self.spaces.window(i, t);
        let presc = self.spaces.presc(i, t);
        let spi_space = self.spaces.spi(i, t);
        let next_space = self.spaces.spi(i, t + 1);
        let spi = spi_space.decode(s);
        let mut vals = Vec::with_capacity(presc.size);
        for gamma in 0..presc.size {
            let mut total = 0.0;
            for (w, &p) in pb.iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                let a = presc.apply(gamma, w);
                let grp = self.group(&ctx, t, win.last(w), a);
                let sn = next_space.encode(&self.spaces.advance(g, i, t, &spi, win.first(w), gamma));
                let mut v = grp.0;
                for &(y, u, py) in &grp.1 {
                    v += py * self.value(&h0.extended(y, u), sn)?;
                }
                total += p * v;
            }
            vals.push(total);
        }
        let best = crate::util::argmax(&vals, 1e-12);
        let n = vals.len();
        let floor = self.floor.min(1.0 / n as f64);
        let (value, dist) = if floor > 0.0 {
            let rest = 1.0 - floor * n as f64;
            let v = floor * vals.iter().sum::<f64>() + rest * vals[best];
            let d = (0..n).map(|k| (k, floor + if k == best { rest } else { 0.0 })).collect();
            (v, clean(d))
        } else {
            (vals[best], vec![(best, 1.0)])
        };
        self.values.insert((h0.clone(), s), value);
        self.choice.insert((h0.clone(), s), dist);
        Ok(value)
    }
}

/// Optimal value and strategy of team `i` when the other teams play their
/// components of `profile`.
pub fn best_response(g: &GameSpec, spaces: &Spaces, profile: &Profile, i: usize, cap: usize) -> Result<BestResponse> {
    constrained_best_response(g, spaces, profile, i, 0.0, cap)
}

/// Best response among strategies that give every prescription at least
/// `floor` (capped at uniform) at every cell.
pub fn constrained_best_response(
    g: &GameSpec,
    spaces: &Spaces,
    profile: &Profile,
    i: usize,
    floor: f64,
    cap: usize,
) -> Result<BestResponse> {
    let filters = (0..g.n_teams())
        .map(|k| if k == i { None } else { Some(TeamFilter::new(g, spaces, k, profile[k].as_ref())) })
        .collect();
    let mut dp = Dp {
        g,
        spaces,
        filters,
        team: i,
        cap,
        floor,
        ctxs: HashMap::new(),
        values: HashMap::new(),
        choice: BTreeMap::new(),
    };
    let root = CommonHistory::new();
    let s0 = spaces.spi(i, 1).encode(&spaces.spi(i, 1).initial());
    let value = dp.value(&root, s0)?;
    let strategy = SpibTable {
        table: dp.choice,
    };
    let mut trail: Vec<TrailEntry> = dp
        .values
        .into_iter()
        .map(|((h0, spi), value)| TrailEntry { t: h0.t(), h0, spi, value })
        .collect();
    trail.sort_by(|a, b| (a.t, &a.h0, a.spi).cmp(&(b.t, &b.h0, b.spi)));
    Ok(BestResponse {
        value,
        strategy,
        cells: trail.len(),
        trail,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Joint {
    h0: CommonHistory,
    parts: Vec<TeamPart>,
}

struct FullSearch<'a> {
    g: &'a GameSpec,
    spaces: &'a Spaces,
    profile: &'a Profile,
    team: usize,
    cap: usize,
    visited: usize,
    /// Values by the exact (bitwise) world distribution of an information set.
    memo: HashMap<(Time, Vec<(Joint, u64)>), f64>,
}

impl FullSearch<'_> {
    /// Best value from an own information set holding `worlds` (unnormalized).
    fn value(&mut self, t: Time, worlds: &[(Joint, f64)]) -> Result<f64> {
        let g = self.g;
        if t > g.horizon_t() {
            return Ok(0.0);
        }
        let key = (t, worlds.iter().map(|(w, p)| (w.clone(), p.to_bits())).collect::<Vec<_>>());
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        self.visited += 1;
        if self.visited > self.cap {
            return Err(budget("full-history information sets", "more", self.cap));
        }
        let n = g.n_teams();
        let i = self.team;
        let d = g.delay_t();
        let revealed = (t + 1 - d).max(0) as usize;
        let presc = self.spaces.presc(i, t);
        // prescriptions agreeing on every window present here play identically
        let windows: BTreeSet<usize> = worlds
            .iter()
            .map(|(w, _)| self.spaces.window(i, t).encode(&w.parts[i].window))
            .collect();
        let mut seen = BTreeSet::new();
        let mut best = f64::NEG_INFINITY;
        for gamma in 0..presc.size {
            let signature: Vec<usize> = windows.iter().map(|&win| presc.apply(gamma, win)).collect();
            if !seen.insert(signature) {
                continue;
            }
            let mut total = 0.0;
            let mut children: BTreeMap<(CommonHistory, Vec<usize>), Vec<(Joint, f64)>> = BTreeMap::new();
            for (w, p) in worlds {
                let dists: Vec<_> = (0..n)
                    .map(|k| {
                        if k == i {
                            vec![(gamma, 1.0)]
                        } else {
                            team_dist(self.spaces, self.profile[k].as_ref(), k, t, d, &w.h0, &w.parts[k])
                        }
                    })
                    .collect();
                let xs: Vec<usize> = w.parts.iter().map(|tp| *tp.window.last().unwrap()).collect();
                let radices: Vec<usize> = dists.iter().map(|d| d.len()).collect();
                odometer(&radices, |pick| {
                    let mut pg = *p;
                    let mut acts = Vec::with_capacity(n);
                    for k in 0..n {
                        let (gm, q) = dists[k][pick[k]];
                        pg *= q;
                        let win = self.spaces.window(k, t).encode(&w.parts[k].window);
                        acts.push(self.spaces.presc(k, t).apply(gm, win));
                    }
                    if pg <= 0.0 {
                        return;
                    }
                    let u = g.join_actions(t, &acts);
                    total += pg * g.reward_at(i, t, &xs, u);
                    if t == g.horizon_t() {
                        return;
                    }
                    odometer(g.observation_radices(t), |ys| {
                        let py: f64 = (0..n).map(|k| g.obs(k, t, xs[k], u, ys[k])).product();
                        if py <= 0.0 {
                            return;
                        }
                        let y = join_obs(g, t, ys);
                        let next_radices: Vec<usize> = (0..n).map(|k| g.team_states(k, t + 1)).collect();
                        odometer(&next_radices, |xn| {
                            let px: f64 = (0..n).map(|k| g.trans(k, t, xs[k], u, xn[k])).product();
                            if px <= 0.0 {
                                return;
                            }
                            let parts: Vec<TeamPart> = (0..n)
                                .map(|k| {
                                    if k == i {
                                        own_part(&w.parts[k], xn[k])
                                    } else {
                                        advance_part(g, self.spaces, k, t, &w.parts[k], dists[k][pick[k]].0, xn[k])
                                    }
                                })
                                .collect();
                            let h0 = w.h0.extended(y, u);
                            let key_states = parts[i].states[..revealed].to_vec();
                            children
                                .entry((h0.clone(), key_states))
                                .or_default()
                                .push((Joint { h0, parts }, pg * py * px));
                        });
                    });
                });
            }
            for (_, ws) in children {
                total += self.value(t + 1, &merge(ws))?;
            }
            best = best.max(total);
        }
        self.memo.insert(key, best);
        Ok(best)
    }
}

/// The searching team's part keeps only states: its own past prescriptions
/// affect nothing the search reads, and dropping them lets equal information
/// sets meet in the memo.
fn own_part(part: &TeamPart, xn: usize) -> TeamPart {
    let mut window = part.window[1..].to_vec();
    window.push(xn);
    let mut states = part.states.clone();
    states.push(xn);
    TeamPart {
        window,
        states,
        presc: vec![],
        spi: part.spi.clone(),
    }
}

fn merge(ws: Vec<(Joint, f64)>) -> Vec<(Joint, f64)> {
    let mut m: BTreeMap<Joint, f64> = BTreeMap::new();
    for (j, p) in ws {
        *m.entry(j).or_insert(0.0) += p;
    }
    m.into_iter().collect()
}

/// Best-response value of team `i` over unrestricted coordination
/// strategies, by search over its full information sets
/// `(h0, x^i_{1:t-d}, γ^i_{1:t-1})`. `cap` bounds the visited sets.
pub fn full_history_best_response(g: &GameSpec, spaces: &Spaces, profile: &Profile, i: usize, cap: usize) -> Result<f64> {
    let n = g.n_teams();
    let mut worlds = Vec::new();
    let radices: Vec<usize> = (0..n).map(|k| g.team_states(k, 1)).collect();
    odometer(&radices, |xs| {
        let p: f64 = (0..n).map(|k| g.init[k][xs[k]]).product();
        if p > 0.0 {
            let parts = (0..n)
                .map(|k| initial_part(g, spaces, k, xs[k], k == i || profile[k].uses_private_history()))
                .collect();
            worlds.push((
                Joint {
                    h0: CommonHistory::new(),
                    parts,
                },
                p,
            ));
        }
    });
    let mut search = FullSearch {
        g,
        spaces,
        profile,
        team: i,
        cap,
        visited: 0,
        memo: HashMap::new(),
    };
    search.value(1, &worlds)
}
