mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use common::{spaces, CAP};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teamgames::belief::{private_belief, Cci};
use teamgames::coord::history::joint_obs_count;
use teamgames::coord::Spaces;
use teamgames::model::graph::dependency_graph;
use teamgames::model::random::{self, Shape};
use teamgames::model::{doc, GameSpec, Kernel, RewardTable};
use teamgames::reference::random_profile;
use teamgames::stage::{ContinuationRows, StageGame, StagePolicy};
use teamgames::util::decode_vec;
use teamgames::verify::{best_response, total_payoff};

fn shape_strategy(max_teams: usize) -> impl Strategy<Value = Shape> {
    (1..=max_teams, 1..=2usize, 1..=2usize, 1..=2usize, 1..=2usize, 1..=3usize, 1..=2usize).prop_map(
        |(teams, agents, states, actions, observations, horizon, delay)| Shape {
            teams,
            agents,
            states,
            actions,
            observations,
            horizon,
            delay,
        },
    )
}

/// Shapes whose prescription spaces stay small enough for exact search.
fn small(s: &Shape) -> bool {
    let per_agent = (s.actions as f64).powf((s.states as f64).powi(s.delay as i32));
    per_agent.powi(s.agents as i32) <= 16.0 && s.horizon <= 2
}

/// The same game with teams listed in reverse.
fn swap_teams(g: &GameSpec) -> GameSpec {
    assert_eq!(g.n_teams(), 2);
    let horizon = g.horizon_t();
    let swap_u = |t, u: usize| {
        let mut p = g.split_action(t, u).to_vec();
        p.reverse();
        p
    };
    let swap_x = |t, x: usize| {
        let mut p = decode_vec(x, g.team_state_radices(t));
        p.reverse();
        p
    };
    let mut teams = g.teams.clone();
    teams.reverse();
    let init = vec![g.init[1].clone(), g.init[0].clone()];
    let remap = |ker: &Kernel, t, new: &GameSpec| {
        let mut out = Kernel::zeros(ker.states, ker.actions, ker.outcomes);
        for x in 0..ker.states {
            for u in 0..ker.actions {
                let v = new.join_actions(t, &swap_u(t, u));
                for o in 0..ker.outcomes {
                    out.set(x, v, o, ker.get(x, u, o));
                }
            }
        }
        out
    };
    // a skeleton with the swapped alphabets provides the index tables
    let skeleton = GameSpec::new(
        g.horizon,
        g.delay,
        teams.clone(),
        init.clone(),
        vec![g.transition[1].clone(), g.transition[0].clone()],
        vec![g.observation[1].clone(), g.observation[0].clone()],
        vec![g.reward[1].clone(), g.reward[0].clone()],
    )
    .unwrap();
    let kernels = |src: &Vec<Vec<Kernel>>| -> Vec<Vec<Kernel>> {
        [1, 0]
            .iter()
            .map(|&k| src[k].iter().enumerate().map(|(s, ker)| remap(ker, s as isize + 1, &skeleton)).collect())
            .collect()
    };
    let reward = [1, 0]
        .iter()
        .map(|&k| {
            (1..=horizon)
                .map(|t| {
                    let src = &g.reward[k][t as usize - 1];
                    let mut out = RewardTable::zeros(src.states, src.actions);
                    for x in 0..src.states {
                        let y = skeleton.join_states(t, &swap_x(t, x));
                        for u in 0..src.actions {
                            out.set(y, skeleton.join_actions(t, &swap_u(t, u)), src.get(x, u));
                        }
                    }
                    out
                })
                .collect()
        })
        .collect();
    GameSpec::new(
        g.horizon,
        g.delay,
        teams,
        init,
        kernels(&g.transition),
        kernels(&g.observation),
        reward,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kernel_rows_are_distributions(seed in 0u64..1000, s in shape_strategy(3)) {
        let g = random::general(seed, &s).unwrap();
        for kers in g.transition.iter().chain(&g.observation) {
            for ker in kers {
                for x in 0..ker.states {
                    for u in 0..ker.actions {
                        let row = ker.row(x, u);
                        prop_assert!(row.iter().all(|&p| p >= 0.0));
                        prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn documents_round_trip(seed in 0u64..1000, s in shape_strategy(3)) {
        let g = random::general(seed, &s).unwrap();
        let back = doc::load_str(&doc::emit(&g)).unwrap();
        prop_assert!(back == g);
        prop_assert_eq!(doc::emit(&back), doc::emit(&g));
    }

    #[test]
    fn dependency_graph_follows_team_relabeling(seed in 0u64..1000, s in shape_strategy(2)) {
        let s = Shape { teams: 2, ..s };
        let g = random::layered(seed, &Shape { delay: 1, ..s }).unwrap();
        let h = swap_teams(&g);
        let dg = dependency_graph(&g);
        prop_assert_eq!(&dg, &dependency_graph(&g));
        let dh = dependency_graph(&h);
        let mut mapped: Vec<(usize, usize)> = dg.edges.iter().map(|&(a, b)| (1 - a, 1 - b)).collect();
        mapped.sort_unstable();
        let mut got = dh.edges.clone();
        got.sort_unstable();
        prop_assert_eq!(mapped, got);
        let comps = |d: &teamgames::model::graph::DependencyGraph, flip: bool| {
            let mut c: Vec<Vec<usize>> = d
                .components
                .iter()
                .map(|c| {
                    let mut m: Vec<usize> = c.iter().map(|&i| if flip { 1 - i } else { i }).collect();
                    m.sort_unstable();
                    m
                })
                .collect();
            c.sort();
            c
        };
        prop_assert_eq!(comps(&dg, true), comps(&dh, false));
    }

    #[test]
    fn prp_advance_is_partial_application(seed in 0u64..1000, agents in 1..=2usize, delay in 2..=3usize) {
        let s = Shape { teams: 1, agents, states: 2, actions: 2, observations: 1, horizon: 2 * delay - 1, delay };
        let g = random::general(seed, &s).unwrap();
        let sp = spaces(&g);
        let d = delay as isize;
        let tau = d;
        let mut h = seed.wrapping_mul(0x9e37_79b9) | 1;
        let mut next = |n: usize| {
            h ^= h << 13;
            h ^= h >> 7;
            h ^= h << 17;
            (h % n as u64) as usize
        };
        let gamma = next(sp.presc(0, tau).size);
        let mut spi = sp.spi(0, tau).decode(next(sp.spi(0, tau).size));
        // revealed team states at tau-d+1, ..., tau-1
        let revealed: Vec<usize> = (tau - d + 1..tau).map(|r| next(g.team_states(0, r))).collect();
        for l in 1..d {
            let t = tau + l - 1;
            let played = if l == 1 { gamma } else { next(sp.presc(0, t).size) };
            spi = sp.advance(&g, 0, t, &spi, revealed[l as usize - 1], played);
            for j in 0..agents {
                let table = sp.presc(0, tau).agent_table(gamma, j);
                let radices: Vec<usize> = (tau - d + 1..=tau).map(|r| g.agent_states(0, j, r)).collect();
                let prefix: Vec<usize> = (0..l as usize)
                    .map(|k| g.state_agents(0, tau - d + 1 + k as isize, revealed[k])[j])
                    .collect();
                let rest: usize = radices[l as usize..].iter().product();
                let start = teamgames::util::encode_radix(&prefix, &radices[..l as usize]) * rest;
                let space = sp.spi(0, tau + l);
                prop_assert_eq!(space.prp(&spi, j, l as usize), &table[start..start + rest]);
            }
        }
    }

    #[test]
    fn simple_prescriptions_embed_in_full_ones(seed in 0u64..1000, s in shape_strategy(2)) {
        let g = random::general(seed, &Shape { horizon: s.horizon.min(2), ..s }).unwrap();
        let (Ok(full), Ok(simple)) = (Spaces::new(&g, false, 1 << 16), Spaces::new(&g, true, 1 << 16)) else {
            return Ok(());
        };
        for i in 0..g.n_teams() {
            for t in 1..=g.horizon_t() {
                let (f, sm) = (full.presc(i, t), simple.presc(i, t));
                prop_assert!(sm.size <= f.size);
                for gm in 0..sm.size {
                    let tables: Vec<Vec<u16>> = (0..g.n_agents(i)).map(|j| sm.agent_table(gm, j).to_vec()).collect();
                    let embedded = f.index_of(&tables);
                    prop_assert!(embedded.is_some());
                    for w in 0..f.window.size {
                        prop_assert_eq!(f.apply(embedded.unwrap(), w), sm.apply(gm, w));
                    }
                }
            }
        }
    }

    #[test]
    fn private_beliefs_are_distributions(seed in 0u64..1000, s in shape_strategy(2)) {
        prop_assume!(small(&s));
        let g = random::general(seed, &s).unwrap();
        let sp = spaces(&g);
        let d = g.delay_t();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut evaluated = 0;
        for i in 0..g.n_teams() {
            for t in 1..=g.horizon_t() {
                for s_idx in 0..sp.spi(i, t).size {
                    for _ in 0..4 {
                        let ys: Vec<usize> = (t - d + 1..t)
                            .map(|r| if r >= 1 { rng.gen_range(0..joint_obs_count(&g, r)) } else { 0 })
                            .collect();
                        let us: Vec<usize> = (t - d..t)
                            .map(|r| if r >= 1 { rng.gen_range(0..g.joint_actions(r)) } else { 0 })
                            .collect();
                        if let Ok(pb) = private_belief(&g, &sp, i, t, &ys, &us, s_idx) {
                            evaluated += 1;
                            prop_assert!(pb.iter().all(|&p| p >= 0.0));
                            prop_assert!((pb.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                        }
                    }
                }
            }
        }
        prop_assert!(evaluated > 0);
    }

    #[test]
    fn best_response_dominates_payoff(seed in 0u64..1000, s in shape_strategy(2), private in any::<bool>()) {
        prop_assume!(small(&s));
        let g = random::general(seed, &s).unwrap();
        let sp = spaces(&g);
        let profile = random_profile(&g, &sp, seed, private);
        let payoff = total_payoff(&g, &sp, &profile, CAP).unwrap();
        for i in 0..g.n_teams() {
            let br = best_response(&g, &sp, &profile, i, CAP).unwrap();
            prop_assert!(br.value >= payoff[i] - 1e-12);
        }
    }

    #[test]
    fn zero_sum_payoffs_cancel(seed in 0u64..1000, s in shape_strategy(2)) {
        prop_assume!(small(&s));
        let mut g = random::general(seed, &Shape { teams: 2, ..s }).unwrap();
        g.reward[1] = g.reward[0]
            .iter()
            .map(|r| RewardTable { data: r.data.iter().map(|v| -v).collect(), ..r.clone() })
            .collect();
        let sp = spaces(&g);
        let profile = random_profile(&g, &sp, seed + 1, true);
        let payoff = total_payoff(&g, &sp, &profile, CAP).unwrap();
        prop_assert_eq!(payoff[0] + payoff[1], 0.0);
    }

    #[test]
    fn dp_backup_is_linear_in_continuation(seed in 0u64..1000, s in shape_strategy(2)) {
        prop_assume!(small(&s) && s.horizon == 2);
        let g = random::general(seed, &s).unwrap();
        let sp = spaces(&g);
        let n = g.n_teams();
        let b = Cci::initial(&g, &sp);
        let rows = |salt: u64, y: usize, u: usize| -> Vec<Vec<f64>> {
            (0..n)
                .map(|i| {
                    (0..sp.spi(i, 2).size)
                        .map(|k| {
                            let mut r = ChaCha8Rng::seed_from_u64(seed ^ (salt << 40) ^ ((y as u64) << 30) ^ ((u as u64) << 20) ^ ((i as u64) << 10) ^ k as u64);
                            r.gen_range(-1.0..1.0)
                        })
                        .collect()
                })
                .collect()
        };
        let v = |y, u| -> ContinuationRows { Arc::new(rows(1, y, u)) };
        let w = |y, u| -> ContinuationRows { Arc::new(rows(2, y, u)) };
        let vw = |y, u| -> ContinuationRows {
            let (a, c) = (rows(1, y, u), rows(2, y, u));
            Arc::new(a.iter().zip(&c).map(|(p, q)| p.iter().zip(q).map(|(x, z)| x + z).collect()).collect())
        };
        let policy: StagePolicy = (0..n)
            .map(|i| {
                let m = sp.presc(i, 1).size;
                (0..sp.spi(i, 1).size).map(|s| (s, (0..m).map(|k| (k, 1.0 / m as f64)).collect())).collect::<BTreeMap<_, _>>()
            })
            .collect();
        let zero = common::zero_rewards(g.clone());
        let sp_zero = spaces(&zero);
        let with_vw = StageGame::new(&g, &sp, &b, Some(&vw));
        let with_v = StageGame::new(&g, &sp, &b, Some(&v));
        let only_w = StageGame::new(&zero, &sp_zero, &b, Some(&w));
        for i in 0..n {
            let lhs = with_vw.dp_backup(&policy, i);
            let a = with_v.dp_backup(&policy, i);
            let c = only_w.dp_backup(&policy, i);
            for k in 0..lhs.len() {
                prop_assert!((lhs[k] - a[k] - c[k]).abs() <= 1e-10);
            }
        }
    }
}
