#![allow(dead_code)]

pub mod checks;
pub mod oracle;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use teamgames::coord::Spaces;
use teamgames::model::random::{self, Shape};
use teamgames::GameSpec;

pub const CAP: usize = 1 << 20;

pub fn spaces(g: &GameSpec) -> Spaces {
    Spaces::new(g, false, CAP).unwrap()
}

pub fn zero_rewards(mut g: GameSpec) -> GameSpec {
    for team in &mut g.reward {
        for table in team {
            table.data.iter_mut().for_each(|r| *r = 0.0);
        }
    }
    g
}

pub fn shape(teams: usize, states: usize, actions: usize, horizon: usize) -> Shape {
    Shape {
        teams,
        agents: 1,
        states,
        actions,
        observations: 1,
        horizon,
        delay: 1,
    }
}

/// One-shot matching pennies between two single-agent teams.
pub fn matching_pennies() -> GameSpec {
    let mut g = random::general(0, &shape(2, 1, 2, 1)).unwrap();
    for a in 0..2 {
        for b in 0..2 {
            let r = if a == b { 1.0 } else { -1.0 };
            g.reward[0][0].set(0, a * 2 + b, r);
            g.reward[1][0].set(0, a * 2 + b, -r);
        }
    }
    g
}

/// The randomized desk-scale suite: `n` specs drawn from `desk_shape`.
pub fn desk_suite(seed: u64, n: usize) -> Vec<GameSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let s = random::desk_shape(&mut rng);
            random::general(seed * 1000 + k as u64, &s).unwrap()
        })
        .collect()
}

/// Two-team specs with horizon 2, small enough for Kuhn mixtures.
pub fn tiny_suite(seed: u64, n: usize) -> Vec<GameSpec> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let s = Shape {
                teams: 2,
                agents: 1,
                states: 2,
                actions: 2,
                observations: rng.gen_range(1..=2),
                horizon: 2,
                delay: rng.gen_range(1..=2),
            };
            random::general(seed * 1000 + k as u64, &s).unwrap()
        })
        .collect()
}
