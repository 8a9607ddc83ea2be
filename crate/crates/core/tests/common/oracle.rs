//! Brute-force joint enumeration with full private histories, kept apart
//! from the library's forward pass.

use std::collections::BTreeMap;

use teamgames::coord::history::split_obs;
use teamgames::coord::strategy::{Profile, TeamView};
use teamgames::coord::{CommonHistory, Spaces, Spi};
use teamgames::{GameSpec, Time};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Private {
    /// `x_{1:t}`
    pub xs: Vec<usize>,
    /// `γ_{1:t-1}`
    pub gs: Vec<usize>,
    pub spi: Spi,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Node {
    pub h0: CommonHistory,
    pub teams: Vec<Private>,
}

pub type Layer = BTreeMap<Node, f64>;

fn product(radices: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &r in radices {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..r).map(move |k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    out
}

/// Team states `x_{t-d+1:t}`, padded with 0 before time 1.
pub fn window(g: &GameSpec, t: Time, xs: &[usize]) -> Vec<usize> {
    let d = g.delay_t();
    (t - d + 1..=t).map(|r| if r >= 1 { xs[r as usize - 1] } else { 0 }).collect()
}

/// Layers at `t = 1..=T`, before play at each `t`.
pub fn layers(g: &GameSpec, sp: &Spaces, profile: &Profile) -> Vec<Layer> {
    let n = g.n_teams();
    let d = g.delay_t();
    let mut layer = Layer::new();
    for xs in product(&(0..n).map(|i| g.team_states(i, 1)).collect::<Vec<_>>()) {
        let p: f64 = (0..n).map(|i| g.init[i][xs[i]]).product();
        if p > 0.0 {
            let teams = (0..n)
                .map(|i| Private {
                    xs: vec![xs[i]],
                    gs: vec![],
                    spi: sp.spi(i, 1).initial(),
                })
                .collect();
            layer.insert(Node { h0: CommonHistory::new(), teams }, p);
        }
    }
    let mut out = vec![layer.clone()];
    for t in 1..g.horizon_t() {
        let mut next = Layer::new();
        for (node, &p) in &layer {
            let revealed = (t - d).max(0) as usize;
            let dists: Vec<_> = (0..n)
                .map(|i| {
                    let pr = &node.teams[i];
                    profile[i].dist(&TeamView {
                        team: i,
                        t,
                        h0: &node.h0,
                        states: &pr.xs[..revealed],
                        prescriptions: &pr.gs,
                        spi: &pr.spi,
                        spi_index: sp.spi(i, t).encode(&pr.spi),
                    })
                })
                .collect();
            for pick in product(&dists.iter().map(|d| d.len()).collect::<Vec<_>>()) {
                let mut pg = p;
                let mut acts = vec![];
                for i in 0..n {
                    let (gamma, q) = dists[i][pick[i]];
                    pg *= q;
                    let w = sp.window(i, t).encode(&window(g, t, &node.teams[i].xs));
                    acts.push(sp.presc(i, t).apply(gamma, w));
                }
                if pg <= 0.0 {
                    continue;
                }
                let u = g.join_actions(t, &acts);
                let y_radices = g.observation_radices(t).to_vec();
                for ys in product(&y_radices) {
                    let x_now: Vec<usize> = node.teams.iter().map(|pr| pr.xs[t as usize - 1]).collect();
                    let py: f64 = (0..n).map(|i| g.obs(i, t, x_now[i], u, ys[i])).product();
                    if py <= 0.0 {
                        continue;
                    }
                    let y = g.observation_radices(t).iter().zip(&ys).fold(0, |acc, (r, v)| acc * r + v);
                    assert_eq!(split_obs(g, t, y), ys);
                    for xn in product(&(0..n).map(|i| g.team_states(i, t + 1)).collect::<Vec<_>>()) {
                        let px: f64 = (0..n).map(|i| g.trans(i, t, x_now[i], u, xn[i])).product();
                        if px <= 0.0 {
                            continue;
                        }
                        let teams = (0..n)
                            .map(|i| {
                                let pr = &node.teams[i];
                                let gamma = dists[i][pick[i]].0;
                                let oldest = window(g, t, &pr.xs)[0];
                                let mut xs = pr.xs.clone();
                                xs.push(xn[i]);
                                let mut gs = pr.gs.clone();
                                gs.push(gamma);
                                Private {
                                    xs,
                                    gs,
                                    spi: sp.advance(g, i, t, &pr.spi, oldest, gamma),
                                }
                            })
                            .collect();
                        *next
                            .entry(Node {
                                h0: node.h0.extended(y, u),
                                teams,
                            })
                            .or_insert(0.0) += pg * py * px;
                    }
                }
            }
        }
        out.push(next.clone());
        layer = next;
    }
    out
}

/// Nodes of `layer` grouped by common history, with `Pr(h0)`.
pub fn by_history(layer: &Layer) -> BTreeMap<CommonHistory, (f64, Vec<(&Node, f64)>)> {
    let mut out: BTreeMap<CommonHistory, (f64, Vec<(&Node, f64)>)> = BTreeMap::new();
    for (node, &p) in layer {
        let e = out.entry(node.h0.clone()).or_default();
        e.0 += p;
        e.1.push((node, p));
    }
    out
}
