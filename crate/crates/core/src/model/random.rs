//! Seeded random game generators.

use std::cell::RefCell;
use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::builtins::assemble;
use super::{Agent, GameSpec, SpecError, Team, Time};

/// Uniform alphabet sizes for a random game.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shape {
    pub teams: usize,
    pub agents: usize,
    pub states: usize,
    pub actions: usize,
    pub observations: usize,
    pub horizon: usize,
    pub delay: usize,
}

impl Shape {
    fn check(&self) -> Result<(), SpecError> {
        let bad = |name: &str| SpecError::BadParam {
            name: name.into(),
            message: "must be at least 1".into(),
        };
        for (name, v) in [
            ("teams", self.teams),
            ("agents", self.agents),
            ("states", self.states),
            ("actions", self.actions),
            ("obs", self.observations),
            ("horizon", self.horizon),
            ("delay", self.delay),
        ] {
            if v == 0 {
                return Err(bad(name));
            }
        }
        Ok(())
    }

    fn teams(&self, obs_per_team: impl Fn(usize) -> usize) -> Vec<Team> {
        let names = |k: usize| (0..self.horizon).map(|_| (0..k).map(|v| v.to_string()).collect()).collect();
        (0..self.teams)
            .map(|i| Team {
                name: format!("T{i}"),
                agents: (0..self.agents)
                    .map(|j| Agent {
                        name: format!("a{i}{j}"),
                        states: names(self.states),
                        actions: names(self.actions),
                    })
                    .collect(),
                observations: names(obs_per_team(i)),
            })
            .collect()
    }

    fn team_states(&self) -> usize {
        self.states.pow(self.agents as u32)
    }
}

/// Random distribution of length `n`; some entries are zeroed so that
/// zero-probability branches get exercised.
pub fn random_dist(rng: &mut impl Rng, n: usize, sparsity: f64) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n)
            .map(|_| if rng.gen::<f64>() < sparsity { 0.0 } else { rng.gen::<f64>() + 0.05 })
            .collect();
        let total: f64 = v.iter().sum();
        if total > 0.0 {
            v.iter_mut().for_each(|p| *p /= total);
            return v;
        }
    }
}

/// Memoizes random rows by a feature key so that kernels vary only with
/// the chosen features.
struct RowTable {
    rng: RefCell<ChaCha8Rng>,
    rows: RefCell<HashMap<Vec<usize>, Vec<f64>>>,
    sparsity: f64,
}

impl RowTable {
    fn new(seed: u64, sparsity: f64) -> Self {
        RowTable {
            rng: RefCell::new(ChaCha8Rng::seed_from_u64(seed)),
            rows: RefCell::new(HashMap::new()),
            sparsity,
        }
    }

    fn prob(&self, key: Vec<usize>, n: usize, o: usize) -> f64 {
        let mut rows = self.rows.borrow_mut();
        let row = rows
            .entry(key)
            .or_insert_with(|| random_dist(&mut *self.rng.borrow_mut(), n, self.sparsity));
        row[o]
    }

    fn value(&self, key: Vec<usize>) -> f64 {
        let mut rows = self.rows.borrow_mut();
        let row = rows.entry(key).or_insert_with(|| {
            let r: f64 = self.rng.borrow_mut().gen_range(-1.0..1.0);
            vec![(r * 8.0).round() / 8.0]
        });
        row[0]
    }
}

/// Arbitrary random game of the given shape.
pub fn general(seed: u64, shape: &Shape) -> Result<GameSpec, SpecError> {
    shape.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trans = RowTable::new(rng.gen(), 0.3);
    let obs = RowTable::new(rng.gen(), 0.3);
    let rew = RowTable::new(rng.gen(), 0.0);
    let init = (0..shape.teams).map(|_| random_dist(&mut rng, shape.team_states(), 0.2)).collect();
    assemble(
        shape.horizon,
        shape.delay,
        shape.teams(|_| shape.observations),
        init,
        |g, i, t, x, u, xn| trans.prob(vec![i, t as usize, x, u], g.team_states(i, t + 1), xn),
        |g, i, t, x, u, y| obs.prob(vec![i, t as usize, x, u], g.observations(i, t), y),
        |_, i, t, xs, u| {
            let mut key = vec![i, t as usize, u];
            key.extend_from_slice(xs);
            rew.value(key)
        },
    )
}

/// Random game whose dynamics and observations ignore actions and whose
/// rewards ignore the receiving team's own state.
pub fn signaling_free(seed: u64, shape: &Shape) -> Result<GameSpec, SpecError> {
    shape.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5f5f);
    let trans = RowTable::new(rng.gen(), 0.2);
    let obs = RowTable::new(rng.gen(), 0.2);
    let rew = RowTable::new(rng.gen(), 0.0);
    let init = (0..shape.teams).map(|_| random_dist(&mut rng, shape.team_states(), 0.0)).collect();
    assemble(
        shape.horizon,
        shape.delay,
        shape.teams(|_| shape.observations),
        init,
        |g, i, t, x, _, xn| trans.prob(vec![i, t as usize, x], g.team_states(i, t + 1), xn),
        |g, i, t, x, _, y| obs.prob(vec![i, t as usize, x], g.observations(i, t), y),
        |_, i, t, xs, u| {
            let mut key = vec![i, t as usize, u];
            key.extend(xs.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, &x)| x));
            rew.value(key)
        },
    )
}

/// Random delay-1 game satisfying the layered condition. Even seeds give a
/// chain where team `i` depends only on teams `<= i`; odd seeds make every
/// team public (observations reveal the state) with arbitrary coupling.
pub fn layered(seed: u64, shape: &Shape) -> Result<GameSpec, SpecError> {
    shape.check()?;
    let shape = Shape { delay: 1, ..shape.clone() };
    let public = seed % 2 == 1 && shape.teams > 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1a1a);
    let trans = RowTable::new(rng.gen(), 0.2);
    let obs = RowTable::new(rng.gen(), 0.2);
    let rew = RowTable::new(rng.gen(), 0.0);
    let init = (0..shape.teams).map(|_| random_dist(&mut rng, shape.team_states(), 0.0)).collect();
    let ts = shape.team_states();
    // Team i's kernels see only actions of teams <= i in the chain variant.
    let upstream = |g: &GameSpec, i: usize, t: Time, u: usize| -> Vec<usize> {
        let parts = g.split_action(t, u);
        if public {
            parts.to_vec()
        } else {
            parts[..=i].to_vec()
        }
    };
    assemble(
        shape.horizon,
        1,
        shape.teams(|_| if public { ts } else { shape.observations }),
        init,
        |g, i, t, x, u, xn| {
            let mut key = vec![i, t as usize, x];
            key.extend(upstream(g, i, t, u));
            trans.prob(key, g.team_states(i, t + 1), xn)
        },
        |g, i, t, x, u, y| {
            if public {
                return if x == y { 1.0 } else { 0.0 };
            }
            let mut key = vec![i, t as usize, x];
            key.extend(upstream(g, i, t, u));
            obs.prob(key, g.observations(i, t), y)
        },
        |g, i, t, xs, u| {
            let mut key = vec![i, t as usize];
            key.extend(upstream(g, i, t, u));
            if public {
                key.extend_from_slice(xs);
            } else {
                key.extend_from_slice(&xs[..=i]);
            }
            rew.value(key)
        },
    )
}

/// Bounds for the randomized equivalence suites: at most two teams and two
/// agents, binary alphabets, horizon 3 and delay 2. Shapes whose
/// prescription spaces would make brute-force oracles too slow are
/// resampled.
pub fn desk_shape(rng: &mut impl Rng) -> Shape {
    loop {
        let s = Shape {
            teams: rng.gen_range(1..=2),
            agents: rng.gen_range(1..=2),
            states: rng.gen_range(1..=2),
            actions: rng.gen_range(1..=2),
            observations: rng.gen_range(1..=2),
            horizon: rng.gen_range(1..=3),
            delay: rng.gen_range(1..=2),
        };
        // window entries per agent: states^delay; prescriptions per team
        let per_agent = (s.actions as f64).powf((s.states as f64).powi(s.delay as i32));
        let per_team = per_agent.powi(s.agents as i32);
        let cost = per_team.powi(s.horizon as i32 - 1) * (s.states * s.actions * s.observations) as f64;
        if cost <= 4096.0 && (s.teams == 1 || per_team <= 64.0) {
            return s;
        }
    }
}
