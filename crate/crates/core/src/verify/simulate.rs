//! Monte Carlo rollouts of a coordination profile.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coord::history::join_obs;
use crate::coord::strategy::Profile;
use crate::coord::{CommonHistory, Spaces};
use crate::error::{Error, Result};
use crate::model::GameSpec;
use crate::rollout::{advance_part, initial_part, team_dist};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub samples: usize,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
}

fn draw(rng: &mut impl Rng, weights: impl IntoIterator<Item = f64>) -> usize {
    WeightedIndex::new(weights).expect("sampling from a probability vector").sample(rng)
}

/// Mean total reward per team over `n` rollouts seeded by `seed`.
pub fn simulate(g: &GameSpec, spaces: &Spaces, profile: &Profile, n: usize, seed: u64) -> Result<SampleStats> {
    if n == 0 {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let teams = g.n_teams();
    let d = g.delay_t();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = vec![0.0; teams];
    let mut sum_sq = vec![0.0; teams];
    for _ in 0..n {
        let mut parts: Vec<_> = (0..teams)
            .map(|k| {
                let x = draw(&mut rng, g.init[k].iter().copied());
                initial_part(g, spaces, k, x, true)
            })
            .collect();
        let mut h0 = CommonHistory::new();
        let mut total = vec![0.0; teams];
        for t in 1..=g.horizon_t() {
            let xs: Vec<usize> = parts.iter().map(|p| *p.window.last().unwrap()).collect();
            let mut gammas = Vec::with_capacity(teams);
            let mut acts = Vec::with_capacity(teams);
            for k in 0..teams {
                let dist = team_dist(spaces, profile[k].as_ref(), k, t, d, &h0, &parts[k]);
                let gamma = dist[draw(&mut rng, dist.iter().map(|e| e.1))].0;
                let w = spaces.window(k, t).encode(&parts[k].window);
                gammas.push(gamma);
                acts.push(spaces.presc(k, t).apply(gamma, w));
            }
            let u = g.join_actions(t, &acts);
            for (k, acc) in total.iter_mut().enumerate() {
                *acc += g.reward_at(k, t, &xs, u);
            }
            if t == g.horizon_t() {
                break;
            }
            let ys: Vec<usize> = (0..teams)
                .map(|k| draw(&mut rng, (0..g.observations(k, t)).map(|y| g.obs(k, t, xs[k], u, y))))
                .collect();
            for k in 0..teams {
                let xn = draw(&mut rng, (0..g.team_states(k, t + 1)).map(|x| g.trans(k, t, xs[k], u, x)));
                parts[k] = advance_part(g, spaces, k, t, &parts[k], gammas[k], xn);
            }
            h0 = h0.extended(join_obs(g, t, &ys), u);
        }
        for k in 0..teams {
            sum[k] += total[k];
            sum_sq[k] += total[k] * total[k];
        }
    }
    let nf = n as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let std_error = (0..teams)
        .map(|k| {
            if n < 2 {
                return 0.0;
            }
            let var = ((sum_sq[k] - nf * mean[k] * mean[k]) / (nf - 1.0)).max(0.0);
            (var / nf).sqrt()
        })
        .collect();
    Ok(SampleStats {
        samples: n,
        mean,
        std_error,
    })
}
