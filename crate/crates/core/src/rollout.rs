//! Exact forward enumeration of a coordination profile over joint worlds.
//!
//! This is the brute-force route: it tracks all teams jointly without using
//! any conditional-independence structure, so it doubles as the oracle for
//! the belief engine. Teams whose strategies read only `(h0, SPI)` are
//! compressed to their SPI and hidden window.

use std::collections::BTreeMap;

use crate::coord::history::{joint_obs_count, split_obs};
use crate::coord::strategy::{CoordinationStrategy, Dist, Profile, TeamView};
use crate::coord::{CommonHistory, Spaces, Spi};
use crate::error::{budget, Result};
use crate::model::{GameSpec, Time};
use crate::util::decode_vec;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TeamPart {
    /// `x_{t-d+1:t}`, padded with 0 for times `<= 0`.
    pub window: Vec<usize>,
    /// `x_{1:t}` when the team's strategy reads private history, else empty.
    pub states: Vec<usize>,
    /// `γ_{1:t-1}` when tracked, else empty.
    pub presc: Vec<usize>,
    pub spi: Spi,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct World {
    pub h0: CommonHistory,
    pub teams: Vec<TeamPart>,
}

/// Probability mass of each world at one time.
pub type Layer = BTreeMap<World, f64>;

pub struct Forward<'a> {
    pub g: &'a GameSpec,
    pub spaces: &'a Spaces,
    pub profile: &'a Profile,
    pub cap: usize,
    /// Track full private histories even for SPI-only strategies.
    pub track_all: bool,
}

/// Prescription law of a team's strategy at one of its nodes.
pub fn team_dist(spaces: &Spaces, strategy: &dyn CoordinationStrategy, i: usize, t: Time, d: Time, h0: &CommonHistory, part: &TeamPart) -> Dist {
    let revealed = (t - d).max(0) as usize;
    let states: &[usize] = if part.states.is_empty() { &[] } else { &part.states[..revealed] };
    let view = TeamView {
        team: i,
        t,
        h0,
        states,
        prescriptions: &part.presc,
        spi: &part.spi,
        spi_index: spaces.spi(i, t).encode(&part.spi),
    };
    strategy.dist(&view)
}

/// Node of team `i` after one step: shifted window, advanced SPI and, when
/// tracked, extended histories.
pub fn advance_part(g: &GameSpec, spaces: &Spaces, i: usize, t: Time, part: &TeamPart, gamma: usize, xn: usize) -> TeamPart {
    let mut window = part.window[1..].to_vec();
    window.push(xn);
    let spi = spaces.advance(g, i, t, &part.spi, part.window[0], gamma);
    let mut states = part.states.clone();
    let mut presc = part.presc.clone();
    if !part.states.is_empty() {
        states.push(xn);
        presc.push(gamma);
    }
    TeamPart { window, states, presc, spi }
}

/// Initial node of team `i` at state `x`.
pub fn initial_part(g: &GameSpec, spaces: &Spaces, i: usize, x: usize, tracked: bool) -> TeamPart {
    let d = g.delay;
    let mut window = vec![0; d];
    window[d - 1] = x;
    TeamPart {
        window,
        states: if tracked { vec![x] } else { vec![] },
        presc: vec![],
        spi: spaces.spi(i, 1).initial(),
    }
}

/// Iterates an odometer over `radices`, calling `f` with the digits.
pub fn odometer(radices: &[usize], mut f: impl FnMut(&[usize])) {
    if radices.contains(&0) {
        return;
    }
    let mut digits = vec![0; radices.len()];
    loop {
        f(&digits);
        let mut k = radices.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < radices[k] {
                break;
            }
            digits[k] = 0;
        }
    }
}

impl<'a> Forward<'a> {
    pub fn new(g: &'a GameSpec, spaces: &'a Spaces, profile: &'a Profile, cap: usize) -> Self {
        Forward {
            g,
            spaces,
            profile,
            cap,
            track_all: false,
        }
    }

    pub fn initial(&self) -> Layer {
        let g = self.g;
        let mut layer = Layer::new();
        let n = g.n_teams();
        let radices: Vec<usize> = (0..n).map(|i| g.team_states(i, 1)).collect();
        odometer(&radices, |xs| {
            let p: f64 = (0..n).map(|i| g.init[i][xs[i]]).product();
            if p <= 0.0 {
                return;
            }
            let teams = (0..n)
                .map(|i| initial_part(g, self.spaces, i, xs[i], self.track_all || self.profile[i].uses_private_history()))
                .collect();
            *layer
                .entry(World {
                    h0: CommonHistory::new(),
                    teams,
                })
                .or_insert(0.0) += p;
        });
        layer
    }

    /// Team `i`'s prescription distribution in world `w` at time `t`.
    fn dist(&self, w: &World, i: usize, t: Time) -> Dist {
        team_dist(self.spaces, self.profile[i].as_ref(), i, t, self.g.delay_t(), &w.h0, &w.teams[i])
    }

    /// Advances one step, adding expected rewards at `t` into `payoff`.
    pub fn step(&self, t: Time, layer: &Layer, payoff: &mut [f64]) -> Result<Layer> {
        let g = self.g;
        let n = g.n_teams();
        let horizon = g.horizon_t();
        let mut next = Layer::new();
        let y_count = joint_obs_count(g, t);
        for (w, &p) in layer {
            let dists: Vec<Vec<(usize, f64)>> = (0..n).map(|i| self.dist(w, i, t)).collect();
            let xs: Vec<usize> = w.teams.iter().map(|tp| *tp.window.last().unwrap()).collect();
            let x_joint = g.join_states(t, &xs);
            let wins: Vec<usize> = (0..n).map(|i| self.spaces.window(i, t).encode(&w.teams[i].window)).collect();
            let radices: Vec<usize> = dists.iter().map(|d| d.len()).collect();
            let mut err = None;
            odometer(&radices, |pick| {
                if err.is_some() {
                    return;
                }
                let mut pg = p;
                let mut acts = Vec::with_capacity(n);
                for i in 0..n {
                    let (gamma, q) = dists[i][pick[i]];
                    pg *= q;
                    acts.push(self.spaces.presc(i, t).apply(gamma, wins[i]));
                }
                if pg <= 0.0 {
                    return;
                }
                let u = g.join_actions(t, &acts);
                for (i, acc) in payoff.iter_mut().enumerate() {
                    *acc += pg * g.reward_idx(i, t, x_joint, u);
                }
                if t == horizon {
                    return;
                }
                for y in 0..y_count {
                    let ys = split_obs(g, t, y);
                    let py: f64 = (0..n).map(|i| g.obs(i, t, xs[i], u, ys[i])).product();
                    if py <= 0.0 {
                        continue;
                    }
                    let next_radices: Vec<usize> = (0..n).map(|i| g.team_states(i, t + 1)).collect();
                    odometer(&next_radices, |xn| {
                        let px: f64 = (0..n).map(|i| g.trans(i, t, xs[i], u, xn[i])).product();
                        if px <= 0.0 {
                            return;
                        }
                        let teams = (0..n)
                            .map(|i| advance_part(g, self.spaces, i, t, &w.teams[i], dists[i][pick[i]].0, xn[i]))
                            .collect();
                        *next
                            .entry(World {
                                h0: w.h0.extended(y, u),
                                teams,
                            })
                            .or_insert(0.0) += pg * py * px;
                    });
                }
                if next.len() > self.cap {
                    err = Some(budget("joint worlds", next.len(), self.cap));
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        Ok(next)
    }

    /// Layer at time `t` (before play at `t`).
    pub fn layer_at(&self, t: Time) -> Result<Layer> {
        let mut layer = self.initial();
        let mut sink = vec![0.0; self.g.n_teams()];
        for s in 1..t {
            layer = self.step(s, &layer, &mut sink)?;
        }
        Ok(layer)
    }

    /// Expected total reward of every team.
    pub fn total_payoff(&self) -> Result<Vec<f64>> {
        let mut layer = self.initial();
        let mut payoff = vec![0.0; self.g.n_teams()];
        for t in 1..=self.g.horizon_t() {
            layer = self.step(t, &layer, &mut payoff)?;
        }
        Ok(payoff)
    }
}

/// `Pr(h0)` and the joint conditional law of the teams' SPI indices given a
/// common history, by brute-force enumeration.
pub fn exact_common_belief(
    g: &GameSpec,
    spaces: &Spaces,
    profile: &Profile,
    h0: &CommonHistory,
    cap: usize,
) -> Result<(f64, BTreeMap<Vec<usize>, f64>)> {
    let t = h0.t();
    let fwd = Forward::new(g, spaces, profile, cap);
    let layer = fwd.layer_at(t)?;
    let mut joint = BTreeMap::new();
    let mut total = 0.0;
    for (w, p) in layer.iter().filter(|(w, _)| &w.h0 == h0) {
        let key: Vec<usize> = w
            .teams
            .iter()
            .enumerate()
            .map(|(i, tp)| spaces.spi(i, t).encode(&tp.spi))
            .collect();
        *joint.entry(key).or_insert(0.0) += p;
        total += p;
    }
    if total > 0.0 {
        joint.values_mut().for_each(|v| *v /= total);
    }
    Ok((total, joint))
}

/// Joint observation and action indices of a history, split per team.
pub fn describe(g: &GameSpec, h0: &CommonHistory) -> Vec<(Vec<usize>, Vec<usize>)> {
    (1..h0.t())
        .map(|s| (split_obs(g, s, h0.obs_at(s)), decode_vec(h0.action_at(s), g.team_action_radices(s))))
        .collect()
}
