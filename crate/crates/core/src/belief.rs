//! Beliefs: the strategy-free private belief over a team's hidden window,
//! compressed common information (CCI) and its Bayes update.

use serde::{Deserialize, Serialize};

use crate::coord::Spaces;
use crate::coord::strategy::Dist;
use crate::error::{Error, Result};
use crate::model::{GameSpec, Time};
use crate::util::{encode_radix, round_key};

/// Denominators below this declare the update off-path.
pub const OFF_PATH_TOL: f64 = 1e-300;
/// Rounding grid for grouping equal CCIs.
pub const CCI_GRID: f64 = 1e-9;

/// Private belief `P_t^i` over team windows `x^i_{t-d+1:t}` given the
/// recent team observations `ys` (times `t-d+1..t-1`, joint indices), recent
/// joint actions `us` (times `t-d..t-1`) and the SPI index `s`. Dense over
/// the window space at `t`.
pub fn private_belief(
    g: &GameSpec,
    spaces: &Spaces,
    i: usize,
    t: Time,
    ys: &[usize],
    us: &[usize],
    s: usize,
) -> Result<Vec<f64>> {
    let d = g.delay_t();
    let m = g.n_agents(i);
    let win = spaces.window(i, t);
    let spi_space = spaces.spi(i, t);
    let spi = spi_space.decode(s);
    let tau = t - d + 1;
    if ys.len() != (d - 1) as usize || us.len() != d as usize {
        return Err(Error::InvalidArgument(format!(
            "window lengths ({}, {}) do not fit delay {d}",
            ys.len(),
            us.len()
        )));
    }
    let y_at = |r: Time| crate::coord::history::split_obs(g, r, ys[(r - tau) as usize])[i];
    let u_at = |r: Time| us[(r - tau + 1) as usize];
    // expected agent actions and radices per lag, precomputed
    let lag_info: Vec<(Vec<usize>, Vec<Vec<usize>>)> = (1..d)
        .map(|l| {
            let r = t - l;
            let acts = g.action_agents(i, r, g.team_action(i, r, u_at(r))).to_vec();
            let radices: Vec<Vec<usize>> = (0..m)
                .map(|j| (tau..=r).map(|q| g.agent_states(i, j, q)).collect())
                .collect();
            (acts, radices)
        })
        .collect();
    let mut out = vec![0.0; win.size];
    let mut total = 0.0;
    for (w, slot) in out.iter_mut().enumerate() {
        let xs = win.decode(w);
        let mut p = g.trans(i, t - d, spi.state, u_at(t - d), xs[0]);
        for l in 1..d {
            if p <= 0.0 {
                break;
            }
            let r = t - l;
            let k = (r - tau) as usize;
            p *= g.trans(i, r, xs[k], u_at(r), xs[k + 1]) * g.obs(i, r, xs[k], u_at(r), y_at(r));
            let (acts, radices) = &lag_info[l as usize - 1];
            for j in 0..m {
                let digits: Vec<usize> = (0..=k).map(|q| g.state_agents(i, tau + q as Time, xs[q])[j]).collect();
                let idx = encode_radix(&digits, &radices[j]);
                if spi_space.prp(&spi, j, l as usize)[idx] as usize != acts[j] {
                    p = 0.0;
                    break;
                }
            }
        }
        *slot = p;
        total += p;
    }
    if total <= 0.0 {
        return Err(Error::Inadmissible(format!(
            "team {i} at t={t}: no window is consistent with SPI {s} and the recent history"
        )));
    }
    out.iter_mut().for_each(|v| *v /= total);
    Ok(out)
}

/// Recent observation and action windows of a common history, as used by
/// [`private_belief`].
pub fn recent_windows(g: &GameSpec, h0: &crate::coord::CommonHistory) -> (Vec<usize>, Vec<usize>) {
    let t = h0.t();
    let d = g.delay_t();
    let ys = (t - d + 1..t).map(|s| h0.obs_at(s)).collect();
    let us = (t - d..t).map(|s| h0.action_at(s)).collect();
    (ys, us)
}

/// Compressed common information at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cci {
    pub t: Time,
    /// Per team, a distribution over the SPI space at `t`.
    pub pi: Vec<Vec<f64>>,
    /// Joint observations at `t-d+1..t-1`.
    pub ys: Vec<usize>,
    /// Joint actions at `t-d..t-1`.
    pub us: Vec<usize>,
}

/// Hashable CCI with beliefs rounded to [`CCI_GRID`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CciKey {
    pub t: Time,
    pub pi: Vec<Vec<i64>>,
    pub ys: Vec<usize>,
    pub us: Vec<usize>,
}

impl Cci {
    pub fn initial(g: &GameSpec, spaces: &Spaces) -> Self {
        let d = g.delay;
        Cci {
            t: 1,
            pi: (0..g.n_teams())
                .map(|i| {
                    let sp = spaces.spi(i, 1);
                    crate::util::delta(sp.size, sp.encode(&sp.initial()))
                })
                .collect(),
            ys: vec![0; d - 1],
            us: vec![0; d],
        }
    }

    pub fn key(&self) -> CciKey {
        CciKey {
            t: self.t,
            pi: self
                .pi
                .iter()
                .map(|v| v.iter().map(|&p| round_key(p, CCI_GRID)).collect())
                .collect(),
            ys: self.ys.clone(),
            us: self.us.clone(),
        }
    }

    /// Recent-history windows at `t+1` after observing `(y, u)` at `t`.
    pub fn next_windows(&self, y: usize, u: usize) -> (Vec<usize>, Vec<usize>) {
        let mut ys = self.ys.clone();
        if !ys.is_empty() {
            ys.remove(0);
            ys.push(y);
        }
        let mut us = self.us.clone();
        us.remove(0);
        us.push(u);
        (ys, us)
    }

    pub fn successor(&self, pi: Vec<Vec<f64>>, y: usize, u: usize) -> Cci {
        let (ys, us) = self.next_windows(y, u);
        Cci {
            t: self.t + 1,
            pi,
            ys,
            us,
        }
    }

    /// SPI indices of team `k` with positive belief.
    pub fn support(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.pi[k].iter().copied().enumerate().filter(|&(_, p)| p > 0.0)
    }
}

/// A positive-probability SPI of a team in a cell, with its private belief.
#[derive(Clone, Debug)]
pub struct TypeInfo {
    pub spi: usize,
    pub prob: f64,
    /// Sparse private belief over windows.
    pub windows: Vec<(usize, f64)>,
}

/// Types of team `k` in the cell `b`. SPIs whose private belief is
/// inadmissible are skipped; a consistent belief never weights them.
pub fn cell_types(g: &GameSpec, spaces: &Spaces, b: &Cci, k: usize) -> Vec<TypeInfo> {
    b.support(k)
        .filter_map(|(s, p)| {
            let pb = private_belief(g, spaces, k, b.t, &b.ys, &b.us, s).ok()?;
            Some(TypeInfo {
                spi: s,
                prob: p,
                windows: pb.iter().copied().enumerate().filter(|&(_, q)| q > 0.0).collect(),
            })
        })
        .collect()
}

/// Unnormalized `Υ` over `S_{t+1}^k` for prescription laws `lambda(spi)`.
fn upsilon(
    g: &GameSpec,
    spaces: &Spaces,
    b: &Cci,
    k: usize,
    types: &[TypeInfo],
    lambda: &dyn Fn(usize) -> Dist,
    y: usize,
    u: usize,
    match_action: bool,
    use_obs: bool,
) -> Vec<f64> {
    let t = b.t;
    let next = spaces.spi(k, t + 1);
    let cur = spaces.spi(k, t);
    let win = spaces.window(k, t);
    let presc = spaces.presc(k, t);
    let uk = g.team_action(k, t, u);
    let yk = crate::coord::history::split_obs(g, t, y)[k];
    let mut out = vec![0.0; next.size];
    for ty in types {
        let s = cur.decode(ty.spi);
        let dist = lambda(ty.spi);
        for &(w, pw) in &ty.windows {
            let x_t = win.last(w);
            let lik = if use_obs { g.obs(k, t, x_t, u, yk) } else { 1.0 };
            if lik <= 0.0 {
                continue;
            }
            for &(gamma, pg) in &dist {
                if pg <= 0.0 || (match_action && presc.apply(gamma, w) != uk) {
                    continue;
                }
                let sn = spaces.advance(g, k, t, &s, win.first(w), gamma);
                out[next.encode(&sn)] += lik * pg * pw * ty.prob;
            }
        }
    }
    out
}

fn normalized(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let total: f64 = v.iter().sum();
    if total < OFF_PATH_TOL {
        return None;
    }
    v.iter_mut().for_each(|p| *p /= total);
    Some(v)
}

/// Bayes update of team `k`'s SPI belief after `(y, u)` at `b.t` when team
/// `k` plays `lambda(spi)`. `None` means off-path.
pub fn consistent_update(
    g: &GameSpec,
    spaces: &Spaces,
    b: &Cci,
    k: usize,
    lambda: &dyn Fn(usize) -> Dist,
    y: usize,
    u: usize,
) -> Option<Vec<f64>> {
    let types = cell_types(g, spaces, b, k);
    consistent_update_with(g, spaces, b, k, &types, lambda, y, u)
}

/// [`consistent_update`] with precomputed [`cell_types`].
#[allow(clippy::too_many_arguments)]
pub fn consistent_update_with(
    g: &GameSpec,
    spaces: &Spaces,
    b: &Cci,
    k: usize,
    types: &[TypeInfo],
    lambda: &dyn Fn(usize) -> Dist,
    y: usize,
    u: usize,
) -> Option<Vec<f64>> {
    normalized(upsilon(g, spaces, b, k, types, lambda, y, u, true, true))
}

/// How beliefs are completed where Bayes' rule does not apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffPathPolicy {
    Uniform,
    SignalingFree,
}

impl std::str::FromStr for OffPathPolicy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "uniform" => Ok(OffPathPolicy::Uniform),
            "signaling-free" => Ok(OffPathPolicy::SignalingFree),
            _ => Err(format!("unknown off-path policy `{s}`")),
        }
    }
}

/// Off-path belief over `S_{t+1}^k`. `Uniform` spreads mass evenly over the
/// SPIs some prescription can produce from the support of `π^k`, keeping
/// the observed action when possible. `SignalingFree` reads the observed
/// action as an open-loop prescription and weights by likelihood only.
pub fn off_path_completion(
    policy: OffPathPolicy,
    g: &GameSpec,
    spaces: &Spaces,
    b: &Cci,
    k: usize,
    types: &[TypeInfo],
    y: usize,
    u: usize,
) -> Vec<f64> {
    let t = b.t;
    let presc = spaces.presc(k, t);
    if policy == OffPathPolicy::SignalingFree {
        let gamma = presc.constant(g, g.team_action(k, t, u));
        let lam = move |_: usize| vec![(gamma, 1.0)];
        for use_obs in [true, false] {
            if let Some(v) = normalized(upsilon(g, spaces, b, k, types, &lam, y, u, true, use_obs)) {
                return v;
            }
        }
    }
    let n = presc.size;
    let all = move |_: usize| (0..n).map(|gm| (gm, 1.0)).collect::<Dist>();
    let attempts = [(true, true), (true, false), (false, false)];
    for (match_action, use_obs) in attempts {
        let raw = upsilon(g, spaces, b, k, types, &all, y, u, match_action, use_obs);
        let support = raw.iter().filter(|&&p| p > 0.0).count();
        if support > 0 {
            return raw.iter().map(|&p| if p > 0.0 { 1.0 / support as f64 } else { 0.0 }).collect();
        }
    }
    crate::util::uniform(spaces.spi(k, t + 1).size)
}

/// Consistent update completed off-path by `policy`.
#[allow(clippy::too_many_arguments)]
pub fn update_or_complete(
    policy: OffPathPolicy,
    g: &GameSpec,
    spaces: &Spaces,
    b: &Cci,
    k: usize,
    types: &[TypeInfo],
    lambda: &dyn Fn(usize) -> Dist,
    y: usize,
    u: usize,
) -> (Vec<f64>, bool) {
    match consistent_update_with(g, spaces, b, k, types, lambda, y, u) {
        Some(v) => (v, true),
        None => (off_path_completion(policy, g, spaces, b, k, types, y, u), false),
    }
}

/// Bayes posterior of an uncontrolled team state after observing `y`, pushed
/// through the transition to `t+1`.
pub fn signaling_free_update(g: &GameSpec, k: usize, t: Time, prior: &[f64], y: usize) -> Result<Vec<f64>> {
    let mut post: Vec<f64> = prior.iter().enumerate().map(|(x, &p)| p * g.obs(k, t, x, 0, y)).collect();
    let total: f64 = post.iter().sum();
    if total <= 0.0 {
        return Err(Error::Inadmissible(format!(
            "observation {y} of team {k} at t={t} has zero likelihood"
        )));
    }
    post.iter_mut().for_each(|p| *p /= total);
    let n_next = g.team_states(k, t + 1);
    Ok((0..n_next)
        .map(|xn| post.iter().enumerate().map(|(x, &p)| p * g.trans(k, t, x, 0, xn)).sum())
        .collect())
}
