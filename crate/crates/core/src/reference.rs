//! Hand-written coordination profiles for the builtin games.
//!
//! Binary labels follow the builtins: index 0 is `-1` (or `L`), index 1 is
//! `+1` (or `R`).

use std::sync::Arc;

use crate::coord::strategy::{CoordinationStrategy, Dist, FnStrategy, Profile};
use crate::coord::Spaces;
use crate::model::GameSpec;

fn pm(k: usize) -> i32 {
    if k == 0 {
        -1
    } else {
        1
    }
}

fn idx(v: i32) -> u16 {
    u16::from(v > 0)
}

/// Every constant prescription of `team` at `t` with equal weight.
fn uniform_constants(g: &GameSpec, spaces: &Spaces, team: usize, t: crate::Time) -> Dist {
    let n = g.team_actions(team, t);
    let presc = spaces.presc(team, t);
    (0..n).map(|a| (presc.constant(g, a), 1.0 / n as f64)).collect()
}

/// Team B of the guessing games: independent uniform guesses at `t = 2`.
fn uniform_guesser(g: &GameSpec, spaces: &Spaces) -> Arc<dyn CoordinationStrategy> {
    let at2 = uniform_constants(g, spaces, 1, 2);
    Arc::new(FnStrategy::new(false, move |view| {
        if view.t == 2 {
            at2.clone()
        } else {
            vec![(0, 1.0)]
        }
    }))
}

/// Identity (`true`) or negation prescription table over one binary state.
fn map_table(identity: bool) -> Vec<u16> {
    if identity {
        vec![0, 1]
    } else {
        vec![1, 0]
    }
}

/// The correlated profile of the guessing game: team A plays (id, ng) or
/// (ng, id) with equal probability, team B guesses uniformly.
pub fn guessing_equilibrium(g: &GameSpec, spaces: &Spaces) -> Profile {
    let p1 = spaces.presc(0, 1);
    let a = p1.index_of(&[map_table(true), map_table(false)]).expect("binary tables");
    let b = p1.index_of(&[map_table(false), map_table(true)]).expect("binary tables");
    let team_a: Arc<dyn CoordinationStrategy> = Arc::new(FnStrategy::new(false, move |view| {
        if view.t == 1 {
            vec![(a.min(b), 0.5), (a.max(b), 0.5)]
        } else {
            vec![(0, 1.0)]
        }
    }));
    vec![team_a, uniform_guesser(g, spaces)]
}

/// The four-way mixture of the communication variant: team A draws each
/// agent's map from {id, ng} uniformly at `t = 1` and then decodes the
/// teammate's state from the public actions; team B guesses uniformly.
pub fn communication_equilibrium(g: &GameSpec, spaces: &Spaces) -> Profile {
    let p1 = spaces.presc(0, 1).clone();
    let p2 = spaces.presc(0, 2).clone();
    let mut first = Vec::new();
    for id1 in [true, false] {
        for id2 in [true, false] {
            first.push((p1.index_of(&[map_table(id1), map_table(id2)]).expect("binary tables"), 0.25));
        }
    }
    first.sort_unstable_by_key(|e| e.0);
    let g2 = g.clone();
    let team_a: Arc<dyn CoordinationStrategy> = Arc::new(FnStrategy::new(true, move |view| match view.t {
        1 => first.clone(),
        2 => {
            let gamma = view.prescriptions[0];
            let sign = |j: usize| if p1.agent_table(gamma, j) == [0, 1] { 1 } else { -1 };
            let u1 = g2.action_agents(0, 1, g2.team_action(0, 1, view.h0.action_at(1)));
            let (v1, v2) = (pm(u1[0]), pm(u1[1]));
            let n1 = p2.agent_table(0, 0).len();
            let n2 = p2.agent_table(0, 1).len();
            let tables = vec![vec![idx(sign(1) * v2); n1], vec![idx(sign(0) * v1); n2]];
            vec![(p2.index_of(&tables).expect("constant tables"), 1.0)]
        }
        _ => vec![(0, 1.0)],
    }));
    vec![team_a, uniform_guesser(g, spaces)]
}

/// Alice's behavioral parameters `p = (Pr(-1 | x=-1), Pr(+1 | x=+1))` and
/// Bob's `q = (Pr(L | u1=-1), Pr(L | u1=+1))` in the three-stage game.
pub fn nonexistence_profile(g: &GameSpec, spaces: &Spaces, p: [f64; 2], q: [f64; 2]) -> Profile {
    vec![alice_profile(spaces, p), bob_profile(g, spaces, q)]
}

pub fn alice_profile(spaces: &Spaces, p: [f64; 2]) -> Arc<dyn CoordinationStrategy> {
    let presc = spaces.presc(0, 1);
    let mut first = Vec::new();
    for (a0, w0) in [(0u16, p[0]), (1, 1.0 - p[0])] {
        for (a1, w1) in [(1u16, p[1]), (0, 1.0 - p[1])] {
            if w0 * w1 > 0.0 {
                first.push((presc.index_of(&[vec![a0, a1]]).expect("binary tables"), w0 * w1));
            }
        }
    }
    first.sort_unstable_by_key(|e| e.0);
    Arc::new(FnStrategy::new(false, move |view| {
        if view.t == 1 {
            first.clone()
        } else {
            vec![(0, 1.0)]
        }
    }))
}

pub fn bob_profile(g: &GameSpec, spaces: &Spaces, q: [f64; 2]) -> Arc<dyn CoordinationStrategy> {
    let presc = spaces.presc(1, 3);
    let (l, r) = (presc.constant(g, 0), presc.constant(g, 1));
    let g = g.clone();
    Arc::new(FnStrategy::new(false, move |view| {
        if view.t != 3 {
            return vec![(0, 1.0)];
        }
        let u1 = g.team_action(0, 1, view.h0.action_at(1));
        let ql = q[u1];
        crate::coord::strategy::clean(vec![(l, ql), (r, 1.0 - ql)])
    }))
}

/// Pseudo-random behavioral strategy of `team`, defined on every
/// information set. With `private` it reads revealed states and past
/// prescriptions, otherwise only `(h0, SPI)`. Roughly a third of the
/// information sets get a deterministic choice.
pub fn random_strategy(spaces: &Spaces, team: usize, seed: u64, private: bool) -> Arc<dyn CoordinationStrategy> {
    use crate::coord::convert::mix;
    let sizes: Vec<usize> = (1..=spaces.presc[team].len() as crate::Time).map(|t| spaces.presc(team, t).size).collect();
    Arc::new(FnStrategy::new(private, move |view| {
        let mut h = mix(seed, team as u64 + 17);
        h = mix(h, view.t as u64);
        for &v in view.h0.obs.iter().chain(&view.h0.actions) {
            h = mix(h, v as u64 + 3);
        }
        if private {
            h = mix(h, 0x5151);
            for &v in view.states.iter().chain([usize::MAX].iter()).chain(view.prescriptions) {
                h = mix(h, v as u64);
            }
        } else {
            h = mix(h, view.spi_index as u64 + 0x77);
        }
        let n = sizes[view.t as usize - 1];
        let first = (h % n as u64) as usize;
        h = mix(h, 1);
        if n == 1 || h.is_multiple_of(3) {
            return vec![(first, 1.0)];
        }
        let mut dist = vec![(first, 1.0 + (h % 7) as f64)];
        h = mix(h, 2);
        dist.push(((h % n as u64) as usize, 1.0 + (h % 5) as f64));
        let total: f64 = dist.iter().map(|e| e.1).sum();
        crate::coord::strategy::clean(dist.into_iter().map(|(k, w)| (k, w / total)).collect())
    }))
}

/// Independent random strategies for every team.
pub fn random_profile(g: &GameSpec, spaces: &Spaces, seed: u64, private: bool) -> Profile {
    (0..g.n_teams())
        .map(|i| random_strategy(spaces, i, seed.wrapping_mul(31).wrapping_add(i as u64), private))
        .collect()
}

/// `(p1, p2, q1, q2)` read off an agent-level projection of the three-stage
/// game; `None` when some parameter's information set is never reached.
pub fn nonexistence_parameters(g: &GameSpec, projection: &crate::verify::bne::Projection) -> Option<[f64; 4]> {
    let mut out = [f64::NAN; 4];
    for (key, law) in &projection.entries {
        match (key.team, key.t) {
            (0, 1) => out[key.window] = law[key.window],
            (1, 3) => out[2 + g.team_action(0, 1, key.h0.action_at(1))] = law[0],
            _ => {}
        }
    }
    out.iter().all(|v| v.is_finite()).then_some(out)
}
