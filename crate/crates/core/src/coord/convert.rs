//! Conversions between team strategies and coordination strategies, and
//! between behavioral and mixed coordination strategies.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::history::{join_obs, split_obs};
use super::strategy::{AugKey, CoordinationStrategy, Dist, FnStrategy, InfoKey, PureCoordination, TeamView};
use super::{CommonHistory, Spaces, Spi};
use crate::error::{budget, Result};
use crate::model::{GameSpec, Time};
use crate::rollout::odometer;
use crate::util::decode_vec;

/// Deterministic strategy of every agent in a team: agent `j` at `t` sees
/// the common history, the team's revealed states `x_{1:t-d}` and its own
/// states `x^{i,j}_{t-d+1:t}` (padded with 0 for times `<= 0`).
pub trait PureTeamStrategy: Send + Sync {
    fn act(&self, j: usize, t: Time, h0: &CommonHistory, revealed: &[usize], own: &[usize]) -> usize;
}

/// Pseudo-random deterministic team strategy defined on every history.
#[derive(Clone, Debug)]
pub struct HashedTeamStrategy {
    pub seed: u64,
    pub team: usize,
    /// `[t - 1][j]` action counts
    pub actions: Vec<Vec<usize>>,
}

pub(crate) fn mix(mut h: u64, v: u64) -> u64 {
    h ^= v.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

impl HashedTeamStrategy {
    pub fn new(g: &GameSpec, team: usize, seed: u64) -> Self {
        HashedTeamStrategy {
            seed,
            team,
            actions: (1..=g.horizon_t())
                .map(|t| (0..g.n_agents(team)).map(|j| g.agent_actions(team, j, t)).collect())
                .collect(),
        }
    }
}

impl PureTeamStrategy for HashedTeamStrategy {
    fn act(&self, j: usize, t: Time, h0: &CommonHistory, revealed: &[usize], own: &[usize]) -> usize {
        let mut h = mix(self.seed, (self.team * 131 + j) as u64);
        h = mix(h, t as u64);
        for &v in h0.obs.iter().chain(&h0.actions) {
            h = mix(h, v as u64 + 7);
        }
        h = mix(h, 0xabcd);
        for &v in revealed.iter().chain([usize::MAX].iter()).chain(own) {
            h = mix(h, v as u64);
        }
        (h % self.actions[t as usize - 1][j] as u64) as usize
    }
}

/// Agent `j`'s states over the window times for team window states `win`.
fn agent_window_states(g: &GameSpec, i: usize, t: Time, j: usize, win: &[usize]) -> Vec<usize> {
    let first = t - g.delay_t() + 1;
    win.iter()
        .enumerate()
        .map(|(k, &x)| g.state_agents(i, first + k as Time, x)[j])
        .collect()
}

/// The prescription that reproduces `mu` at one coordinator information set.
fn prescription_of(
    g: &GameSpec,
    spaces: &Spaces,
    i: usize,
    mu: &dyn PureTeamStrategy,
    t: Time,
    h0: &CommonHistory,
    revealed: &[usize],
) -> usize {
    let presc = spaces.presc(i, t);
    let m = g.n_agents(i);
    let first = t - g.delay_t() + 1;
    let tables: Vec<Vec<u16>> = (0..m)
        .map(|j| {
            let radices: Vec<usize> = (first..=t).map(|s| g.agent_states(i, j, s)).collect();
            let n: usize = radices.iter().product();
            (0..n)
                .map(|aw| mu.act(j, t, h0, revealed, &decode_vec(aw, &radices)) as u16)
                .collect()
        })
        .collect();
    presc
        .index_of(&tables)
        .expect("full prescription spaces contain every table")
}

/// Coordination strategy equivalent to a pure team strategy. Needs the
/// full prescription mode.
pub fn pure_to_coordination(
    g: &GameSpec,
    spaces: &Arc<Spaces>,
    i: usize,
    mu: Arc<dyn PureTeamStrategy>,
) -> Arc<dyn CoordinationStrategy> {
    let g = g.clone();
    let spaces = spaces.clone();
    Arc::new(FnStrategy::new(true, move |view: &TeamView| {
        vec![(prescription_of(&g, &spaces, i, mu.as_ref(), view.t, view.h0, view.states), 1.0)]
    }))
}

/// Team strategy equivalent to a deterministic coordination strategy:
/// past prescriptions are recomputed from the revealed states.
pub struct CoordinatedTeam {
    g: GameSpec,
    spaces: Arc<Spaces>,
    team: usize,
    nu: Arc<dyn CoordinationStrategy>,
}

impl CoordinatedTeam {
    fn prescriptions(&self, t: Time, h0: &CommonHistory, revealed: &[usize]) -> Vec<usize> {
        let d = self.g.delay_t();
        let i = self.team;
        let mut presc: Vec<usize> = Vec::new();
        let mut spi = self.spaces.spi(i, 1).initial();
        for s in 1..=t {
            if s > 1 {
                let x_rev = if s - d >= 1 { revealed[(s - d - 1) as usize] } else { 0 };
                spi = self.spaces.advance(&self.g, i, s - 1, &spi, x_rev, presc[presc.len() - 1]);
            }
            let n_rev = (s - d).max(0) as usize;
            let hs = h0.prefix(s);
            let view = TeamView {
                team: i,
                t: s,
                h0: &hs,
                states: &revealed[..n_rev],
                prescriptions: &presc,
                spi: &spi,
                spi_index: self.spaces.spi(i, s).encode(&spi),
            };
            let dist = self.nu.dist(&view);
            debug_assert!(dist.len() == 1, "coordination strategy must be deterministic");
            presc.push(dist[0].0);
        }
        presc
    }
}

impl PureTeamStrategy for CoordinatedTeam {
    fn act(&self, j: usize, t: Time, h0: &CommonHistory, revealed: &[usize], own: &[usize]) -> usize {
        let gamma = *self.prescriptions(t, h0, revealed).last().unwrap();
        let presc = self.spaces.presc(self.team, t);
        let radices: Vec<usize> = (t - self.g.delay_t() + 1..=t)
            .map(|s| self.g.agent_states(self.team, j, s))
            .collect();
        presc.agent_table(gamma, j)[crate::util::encode_radix(own, &radices)] as usize
    }
}

pub fn coordination_to_pure(
    g: &GameSpec,
    spaces: &Arc<Spaces>,
    i: usize,
    nu: Arc<dyn CoordinationStrategy>,
) -> Arc<dyn PureTeamStrategy> {
    Arc::new(CoordinatedTeam {
        g: g.clone(),
        spaces: spaces.clone(),
        team: i,
        nu,
    })
}

/// Action trajectory of one nature realization, by team and time.
pub type ActionPath = Vec<Vec<usize>>;

/// Enumerates nature (initial states, transitions, observations) and plays
/// agents' pure strategies directly. Returns per-team payoffs and, for every
/// positive-probability realization, the joint action sequence.
pub fn agent_rollout(
    g: &GameSpec,
    strategies: &[Arc<dyn PureTeamStrategy>],
) -> (Vec<f64>, BTreeMap<(Vec<Vec<usize>>, Vec<usize>), Vec<usize>>) {
    let n = g.n_teams();
    let horizon = g.horizon_t();
    let d = g.delay_t();
    let mut payoff = vec![0.0; n];
    let mut paths = BTreeMap::new();
    // (state paths per team, joint obs path, joint action path, prob)
    let mut frontier: Vec<(Vec<Vec<usize>>, Vec<usize>, Vec<usize>, f64)> = Vec::new();
    let radices: Vec<usize> = (0..n).map(|i| g.team_states(i, 1)).collect();
    odometer(&radices, |xs| {
        let p: f64 = (0..n).map(|i| g.init[i][xs[i]]).product();
        if p > 0.0 {
            frontier.push((xs.iter().map(|&x| vec![x]).collect(), vec![], vec![], p));
        }
    });
    for t in 1..=horizon {
        let mut next = Vec::new();
        for (xpaths, ys, us, p) in frontier {
            let h0 = CommonHistory {
                obs: ys.clone(),
                actions: us.clone(),
            };
            let mut team_actions = Vec::with_capacity(n);
            for i in 0..n {
                let n_rev = (t - d).max(0) as usize;
                let revealed = &xpaths[i][..n_rev];
                let window: Vec<usize> = (t - d + 1..=t)
                    .map(|s| if s >= 1 { xpaths[i][s as usize - 1] } else { 0 })
                    .collect();
                let acts: Vec<usize> = (0..g.n_agents(i))
                    .map(|j| {
                        let own = agent_window_states(g, i, t, j, &window);
                        strategies[i].act(j, t, &h0, revealed, &own)
                    })
                    .collect();
                let radices: Vec<usize> = (0..g.n_agents(i)).map(|j| g.agent_actions(i, j, t)).collect();
                team_actions.push(crate::util::encode_radix(&acts, &radices));
            }
            let u = g.join_actions(t, &team_actions);
            let xs: Vec<usize> = xpaths.iter().map(|p| p[t as usize - 1]).collect();
            for (i, acc) in payoff.iter_mut().enumerate() {
                *acc += p * g.reward_at(i, t, &xs, u);
            }
            let mut us2 = us.clone();
            us2.push(u);
            if t == horizon {
                paths.insert((xpaths, ys), us2);
                continue;
            }
            let y_radices = g.observation_radices(t).to_vec();
            odometer(&y_radices, |yv| {
                let py: f64 = (0..n).map(|i| g.obs(i, t, xs[i], u, yv[i])).product();
                if py <= 0.0 {
                    return;
                }
                let x_radices: Vec<usize> = (0..n).map(|i| g.team_states(i, t + 1)).collect();
                odometer(&x_radices, |xn| {
                    let px: f64 = (0..n).map(|i| g.trans(i, t, xs[i], u, xn[i])).product();
                    if px <= 0.0 {
                        return;
                    }
                    let mut xp2 = xpaths.clone();
                    for i in 0..n {
                        xp2[i].push(xn[i]);
                    }
                    let mut ys2 = ys.clone();
                    ys2.push(join_obs(g, t, yv));
                    next.push((xp2, ys2, us2.clone(), p * py * px));
                });
            });
        }
        frontier = next;
    }
    (payoff, paths)
}

/// A reduced pure coordination strategy with the information sets it
/// reaches (keyed with the prescriptions it played before them).
#[derive(Clone, Debug)]
pub struct ReducedPure {
    pub strategy: PureCoordination,
    pub infosets: Vec<(AugKey, usize)>,
}

#[derive(Clone, Debug)]
struct OwnNode {
    h0: CommonHistory,
    xpath: Vec<usize>,
    presc: Vec<usize>,
    spi: Spi,
}

/// Observations of team `k` at `t` that some reachable state can emit.
fn possible_obs(g: &GameSpec, k: usize, t: Time, reach: &BTreeSet<usize>, u: usize) -> Vec<usize> {
    (0..g.observations(k, t))
        .filter(|&y| reach.iter().any(|&x| g.obs(k, t, x, u, y) > 0.0))
        .collect()
}

/// States of each team reachable at each time under some actions.
fn reachable_states(g: &GameSpec) -> Vec<Vec<BTreeSet<usize>>> {
    (0..g.n_teams())
        .map(|k| {
            let mut out = Vec::new();
            let mut cur: BTreeSet<usize> = (0..g.team_states(k, 1)).filter(|&x| g.init[k][x] > 0.0).collect();
            for t in 1..=g.horizon_t() {
                out.push(cur.clone());
                let mut next = BTreeSet::new();
                if t < g.horizon_t() {
                    for &x in &cur {
                        for u in 0..g.joint_actions(t) {
                            for xn in 0..g.team_states(k, t + 1) {
                                if g.trans(k, t, x, u, xn) > 0.0 {
                                    next.insert(xn);
                                }
                            }
                        }
                    }
                }
                cur = next;
            }
            out
        })
        .collect()
}

/// Enumerates team `i`'s reduced pure coordination strategies. Information
/// sets are those reachable under the strategy's own earlier choices and
/// some behavior of the other teams. `weight(key, gamma)` scales each
/// choice; strategies of zero total weight are skipped, and `None` counts
/// every choice with weight 1. Fails when more than `cap` strategies
/// would be produced.
pub fn reduced_pure_strategies(
    g: &GameSpec,
    spaces: &Spaces,
    i: usize,
    weight: Option<&dyn Fn(&AugKey, &TeamView, usize) -> f64>,
    cap: usize,
) -> Result<Vec<(f64, ReducedPure)>> {
    let reach = reachable_states(g);
    let d = g.delay;
    let roots: Vec<OwnNode> = (0..g.team_states(i, 1))
        .filter(|&x| g.init[i][x] > 0.0)
        .map(|x| OwnNode {
            h0: CommonHistory::new(),
            xpath: vec![x],
            presc: vec![],
            spi: spaces.spi(i, 1).initial(),
        })
        .collect();
    let mut out = Vec::new();
    let ctx = Ctx {
        g,
        spaces,
        i,
        reach: &reach,
        weight,
        cap,
        d,
    };
    ctx.recurse(1, roots, ReducedPure { strategy: PureCoordination::default(), infosets: vec![] }, 1.0, &mut out)?;
    Ok(out)
}

struct Ctx<'a> {
    g: &'a GameSpec,
    spaces: &'a Spaces,
    i: usize,
    reach: &'a [Vec<BTreeSet<usize>>],
    weight: Option<&'a dyn Fn(&AugKey, &TeamView, usize) -> f64>,
    cap: usize,
    d: usize,
}

impl Ctx<'_> {
    fn recurse(&self, t: Time, nodes: Vec<OwnNode>, partial: ReducedPure, w: f64, out: &mut Vec<(f64, ReducedPure)>) -> Result<()> {
        let g = self.g;
        if t > g.horizon_t() {
            if out.len() >= self.cap {
                return Err(budget(format!("pure coordination strategies of team {}", self.i), "more", self.cap));
            }
            out.push((w, partial));
            return Ok(());
        }
        let n_rev = (t as usize).saturating_sub(self.d);
        let mut sets: BTreeMap<InfoKey, usize> = BTreeMap::new();
        let mut reps: Vec<&OwnNode> = Vec::new();
        for node in &nodes {
            let key = InfoKey {
                h0: node.h0.clone(),
                states: node.xpath[..n_rev].to_vec(),
            };
            if let std::collections::btree_map::Entry::Vacant(e) = sets.entry(key) {
                e.insert(reps.len());
                reps.push(node);
            }
        }
        let presc = self.spaces.presc(self.i, t);
        let keys: Vec<(InfoKey, usize)> = sets.into_iter().collect();
        let aug: Vec<AugKey> = keys
            .iter()
            .map(|(k, r)| AugKey {
                h0: k.h0.clone(),
                states: k.states.clone(),
                prescriptions: reps[*r].presc.clone(),
            })
            .collect();
        // per information set, the choices with positive weight
        let spi_space = self.spaces.spi(self.i, t);
        let options: Vec<Vec<(usize, f64)>> = keys
            .iter()
            .enumerate()
            .map(|(k, (_, r))| match self.weight {
                None => (0..presc.size).map(|gm| (gm, 1.0)).collect(),
                Some(f) => {
                    let node = reps[*r];
                    let view = TeamView {
                        team: self.i,
                        t,
                        h0: &node.h0,
                        states: &node.xpath[..n_rev],
                        prescriptions: &node.presc,
                        spi: &node.spi,
                        spi_index: spi_space.encode(&node.spi),
                    };
                    (0..presc.size)
                        .map(|gm| (gm, f(&aug[k], &view, gm)))
                        .filter(|&(_, x)| x > 0.0)
                        .collect()
                }
            })
            .collect();
        let radices: Vec<usize> = options.iter().map(|o| o.len()).collect();
        let mut result = Ok(());
        odometer(&radices, |pick| {
            if result.is_err() {
                return;
            }
            let w2 = w * pick.iter().enumerate().map(|(k, &c)| options[k][c].1).product::<f64>();
            let choice: Vec<usize> = pick.iter().enumerate().map(|(k, &c)| options[k][c].0).collect();
            let mut next_partial = partial.clone();
            let mut chosen: BTreeMap<&InfoKey, usize> = BTreeMap::new();
            for (k, (key, _)) in keys.iter().enumerate() {
                next_partial.strategy.table.insert(key.clone(), choice[k]);
                next_partial.infosets.push((aug[k].clone(), choice[k]));
                chosen.insert(key, choice[k]);
            }
            let mut children = Vec::new();
            for node in &nodes {
                let key = InfoKey {
                    h0: node.h0.clone(),
                    states: node.xpath[..n_rev].to_vec(),
                };
                let gamma = chosen[&key];
                self.expand(t, node, gamma, &mut children);
            }
            result = self.recurse(t + 1, children, next_partial, w2, out);
        });
        result
    }

    fn expand(&self, t: Time, node: &OwnNode, gamma: usize, children: &mut Vec<OwnNode>) {
        let g = self.g;
        let i = self.i;
        if t == g.horizon_t() {
            children.push(node.clone());
            return;
        }
        let win_space = self.spaces.window(i, t);
        let window: Vec<usize> = (t - g.delay_t() + 1..=t)
            .map(|s| if s >= 1 { node.xpath[s as usize - 1] } else { 0 })
            .collect();
        let a = self.spaces.presc(i, t).apply(gamma, win_space.encode(&window));
        let x = node.xpath[t as usize - 1];
        let spi = self.spaces.advance(g, i, t, &node.spi, window[0], gamma);
        for u in 0..g.joint_actions(t) {
            if g.team_action(i, t, u) != a {
                continue;
            }
            let obs_sets: Vec<Vec<usize>> = (0..g.n_teams())
                .map(|k| {
                    if k == i {
                        (0..g.observations(i, t)).filter(|&y| g.obs(i, t, x, u, y) > 0.0).collect()
                    } else {
                        possible_obs(g, k, t, &self.reach[k][t as usize - 1], u)
                    }
                })
                .collect();
            let radices: Vec<usize> = obs_sets.iter().map(|s| s.len()).collect();
            odometer(&radices, |pick| {
                let ys: Vec<usize> = (0..g.n_teams()).map(|k| obs_sets[k][pick[k]]).collect();
                let y = join_obs(g, t, &ys);
                for xn in 0..g.team_states(i, t + 1) {
                    if g.trans(i, t, x, u, xn) > 0.0 {
                        let mut xpath = node.xpath.clone();
                        xpath.push(xn);
                        let mut presc = node.presc.clone();
                        presc.push(gamma);
                        children.push(OwnNode {
                            h0: node.h0.extended(y, u),
                            xpath,
                            presc,
                            spi: spi.clone(),
                        });
                    }
                }
            });
        }
    }
}

/// Kuhn conversion of a behavioral coordination strategy into a mixture of
/// reduced pure coordination strategies.
pub fn behavioral_to_mixed(
    g: &GameSpec,
    spaces: &Spaces,
    i: usize,
    strategy: &dyn CoordinationStrategy,
    cap: usize,
) -> Result<Vec<(f64, ReducedPure)>> {
    let weight = |_: &AugKey, view: &TeamView, gamma: usize| -> f64 {
        strategy
            .dist(view)
            .iter()
            .filter(|(k, _)| *k == gamma)
            .map(|(_, p)| p)
            .sum()
    };
    reduced_pure_strategies(g, spaces, i, Some(&weight), cap)
}

/// Behavioral strategy induced by a mixture of reduced pure strategies:
/// conditional prescription laws at every information set some component
/// reaches.
pub fn mixed_to_behavioral(mixture: &[(f64, ReducedPure)]) -> super::strategy::BehavioralTable {
    let mut num: BTreeMap<AugKey, BTreeMap<usize, f64>> = BTreeMap::new();
    for (x, rp) in mixture {
        if *x <= 0.0 {
            continue;
        }
        for (key, gamma) in &rp.infosets {
            *num.entry(key.clone()).or_default().entry(*gamma).or_insert(0.0) += x;
        }
    }
    let table = num
        .into_iter()
        .map(|(k, m)| {
            let total: f64 = m.values().sum();
            let dist: Dist = m.into_iter().map(|(g, p)| (g, p / total)).collect();
            (k, dist)
        })
        .collect();
    super::strategy::BehavioralTable { table }
}

/// Agent states of team `i` decoded from a team-state path (test helper).
pub fn split_states(g: &GameSpec, i: usize, path: &[usize]) -> Vec<Vec<usize>> {
    path.iter()
        .enumerate()
        .map(|(k, &x)| g.state_agents(i, k as Time + 1, x).to_vec())
        .collect()
}

pub fn obs_parts(g: &GameSpec, t: Time, y: usize) -> Vec<usize> {
    split_obs(g, t, y)
}
