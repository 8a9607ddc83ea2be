//! Per-team conditional law of a team's private nodes given the common
//! history, for a fixed strategy of that team.

use std::collections::BTreeMap;

use crate::coord::history::split_obs;
use crate::coord::strategy::{CoordinationStrategy, Dist};
use crate::coord::{CommonHistory, Spaces};
use crate::model::{GameSpec, Time};
use crate::rollout::{advance_part, initial_part, team_dist, TeamPart};

/// Normalized law over a team's nodes.
pub type Nodes = BTreeMap<TeamPart, f64>;

pub struct TeamFilter<'a> {
    pub g: &'a GameSpec,
    pub spaces: &'a Spaces,
    pub team: usize,
    pub strategy: &'a dyn CoordinationStrategy,
}

impl<'a> TeamFilter<'a> {
    pub fn new(g: &'a GameSpec, spaces: &'a Spaces, team: usize, strategy: &'a dyn CoordinationStrategy) -> Self {
        TeamFilter { g, spaces, team, strategy }
    }

    pub fn initial(&self) -> Nodes {
        let k = self.team;
        let tracked = self.strategy.uses_private_history();
        (0..self.g.team_states(k, 1))
            .filter(|&x| self.g.init[k][x] > 0.0)
            .map(|x| (initial_part(self.g, self.spaces, k, x, tracked), self.g.init[k][x]))
            .collect()
    }

    pub fn dist(&self, t: Time, h0: &CommonHistory, node: &TeamPart) -> Dist {
        team_dist(self.spaces, self.strategy, self.team, t, self.g.delay_t(), h0, node)
    }

    /// Law of `(x_t, u_t^k)` under the filter.
    pub fn marginal(&self, t: Time, h0: &CommonHistory, nodes: &Nodes) -> Vec<(usize, usize, f64)> {
        let presc = self.spaces.presc(self.team, t);
        let win = self.spaces.window(self.team, t);
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (node, &p) in nodes {
            let w = win.encode(&node.window);
            for (gamma, q) in self.dist(t, h0, node) {
                *acc.entry((*node.window.last().unwrap(), presc.apply(gamma, w))).or_insert(0.0) += p * q;
            }
        }
        acc.into_iter().filter(|&(_, p)| p > 0.0).map(|((x, a), p)| (x, a, p)).collect()
    }

    /// Conditions on the team's part of `(y, u)` at `t` and steps to `t+1`.
    /// `None` when the team could not have produced it.
    pub fn update(&self, t: Time, h0: &CommonHistory, nodes: &Nodes, y: usize, u: usize) -> Option<Nodes> {
        let g = self.g;
        let k = self.team;
        let presc = self.spaces.presc(k, t);
        let win = self.spaces.window(k, t);
        let uk = g.team_action(k, t, u);
        let yk = split_obs(g, t, y)[k];
        let mut out = Nodes::new();
        let mut total = 0.0;
        for (node, &p) in nodes {
            let x = *node.window.last().unwrap();
            let lik = g.obs(k, t, x, u, yk);
            if lik <= 0.0 {
                continue;
            }
            let w = win.encode(&node.window);
            for (gamma, q) in self.dist(t, h0, node) {
                if q <= 0.0 || presc.apply(gamma, w) != uk {
                    continue;
                }
                for xn in 0..g.team_states(k, t + 1) {
                    let pt = g.trans(k, t, x, u, xn);
                    if pt > 0.0 {
                        let m = p * q * lik * pt;
                        *out.entry(advance_part(g, self.spaces, k, t, node, gamma, xn)).or_insert(0.0) += m;
                        total += m;
                    }
                }
            }
        }
        if total <= 0.0 {
            return None;
        }
        out.values_mut().for_each(|v| *v /= total);
        Some(out)
    }

    /// Conditional law of the team's SPI index given `h0`.
    pub fn spi_law(&self, t: Time, nodes: &Nodes) -> BTreeMap<usize, f64> {
        let sp = self.spaces.spi(self.team, t);
        let mut out = BTreeMap::new();
        for (node, &p) in nodes {
            *out.entry(sp.encode(&node.spi)).or_insert(0.0) += p;
        }
        out
    }
}
