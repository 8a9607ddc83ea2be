//! Checks shared by the integration tests and the acceptance binary.
//! Each panics on the first mismatch and returns the number of comparisons.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::oracle::{self, by_history};
use super::{desk_suite, spaces, tiny_suite, CAP};
use teamgames::belief::{consistent_update, private_belief, recent_windows, Cci};
use teamgames::coord::convert::{
    agent_rollout, behavioral_to_mixed, coordination_to_pure, mixed_to_behavioral, pure_to_coordination, HashedTeamStrategy,
    PureTeamStrategy,
};
use teamgames::coord::strategy::{CoordinationStrategy, Profile, TeamView};
use teamgames::coord::{CommonHistory, Spaces};
use teamgames::reference::random_profile;
use teamgames::verify::{best_response, full_history_best_response, total_payoff};
use teamgames::{GameSpec, Time};

pub const TOL: f64 = 1e-10;

/// Per team, the SPI law given `h0`, from the oracle's nodes.
fn spi_marginals(g: &GameSpec, sp: &Spaces, t: Time, total: f64, nodes: &[(&oracle::Node, f64)]) -> Vec<Vec<f64>> {
    (0..g.n_teams())
        .map(|i| {
            let mut v = vec![0.0; sp.spi(i, t).size];
            for (n, p) in nodes {
                v[sp.spi(i, t).encode(&n.teams[i].spi)] += p / total;
            }
            v
        })
        .collect()
}

pub fn private_beliefs(seed: u64, n: usize) -> usize {
    let mut checked = 0;
    for (k, g) in desk_suite(seed, n).into_iter().enumerate() {
        let sp = spaces(&g);
        for private in [true, false] {
            let profile = random_profile(&g, &sp, k as u64 + 100, private);
            for (idx, layer) in oracle::layers(&g, &sp, &profile).iter().enumerate() {
                let t = idx as Time + 1;
                for (h0, (total, nodes)) in by_history(layer) {
                    let (ys, us) = recent_windows(&g, &h0);
                    for i in 0..g.n_teams() {
                        let mut cond: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
                        for (n, p) in &nodes {
                            let s = sp.spi(i, t).encode(&n.teams[i].spi);
                            let w = sp.window(i, t).encode(&oracle::window(&g, t, &n.teams[i].xs));
                            cond.entry(s).or_insert_with(|| vec![0.0; sp.window(i, t).size])[w] += p / total;
                        }
                        for (s, mut law) in cond {
                            let z: f64 = law.iter().sum();
                            law.iter_mut().for_each(|v| *v /= z);
                            let pb = private_belief(&g, &sp, i, t, &ys, &us, s).unwrap();
                            let diff = teamgames::util::max_abs_diff(&pb, &law);
                            assert!(diff <= TOL, "spec {k} t={t} team {i} spi {s}: {pb:?} vs {law:?}");
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    checked
}

pub fn factorization(seed: u64, n: usize) -> usize {
    let mut checked = 0;
    for (k, g) in desk_suite(seed, n).into_iter().enumerate() {
        let sp = spaces(&g);
        let profile = random_profile(&g, &sp, k as u64 + 200, true);
        for (idx, layer) in oracle::layers(&g, &sp, &profile).iter().enumerate() {
            let t = idx as Time + 1;
            for (h0, (total, nodes)) in by_history(layer) {
                let marg = spi_marginals(&g, &sp, t, total, &nodes);
                let mut joint: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
                for (n, p) in &nodes {
                    let key = (0..g.n_teams()).map(|i| sp.spi(i, t).encode(&n.teams[i].spi)).collect();
                    *joint.entry(key).or_insert(0.0) += p / total;
                }
                // every cell of the product, including those with no mass
                let sizes: Vec<usize> = (0..g.n_teams()).map(|i| sp.spi(i, t).size).collect();
                teamgames::rollout::odometer(&sizes, |s| {
                    let prod: f64 = s.iter().enumerate().map(|(i, &v)| marg[i][v]).product();
                    let got = joint.get(s).copied().unwrap_or(0.0);
                    assert!((prod - got).abs() <= TOL, "spec {k} t={t} {h0:?} {s:?}: {got} vs {prod}");
                    checked += 1;
                });
            }
        }
    }
    checked
}

/// SPI-only strategies, so the stage policy is a function of the SPI.
pub fn consistent_updates(seed: u64, n: usize) -> usize {
    let mut checked = 0;
    for (k, g) in desk_suite(seed, n).into_iter().enumerate() {
        let sp = spaces(&g);
        let profile = random_profile(&g, &sp, k as u64 + 300, false);
        let layers = oracle::layers(&g, &sp, &profile);
        for t in 1..g.horizon_t() {
            let now = by_history(&layers[t as usize - 1]);
            let next = by_history(&layers[t as usize]);
            for (h0, (total, nodes)) in &now {
                let (ys, us) = recent_windows(&g, h0);
                let b = Cci {
                    t,
                    pi: spi_marginals(&g, &sp, t, *total, nodes),
                    ys,
                    us,
                };
                let children: Vec<(&CommonHistory, Vec<Vec<f64>>)> = next
                    .iter()
                    .filter(|(h, _)| h.prefix(t) == *h0)
                    .map(|(h, (z, ns))| (h, spi_marginals(&g, &sp, t + 1, *z, ns)))
                    .collect();
                for (h1, exact) in children {
                    let (y, u) = (h1.obs_at(t), h1.action_at(t));
                    for i in 0..g.n_teams() {
                        let strategy = profile[i].clone();
                        let space = sp.spi(i, t).clone();
                        let lambda = |s: usize| {
                            let spi = space.decode(s);
                            strategy.dist(&TeamView {
                                team: i,
                                t,
                                h0,
                                states: &[],
                                prescriptions: &[],
                                spi: &spi,
                                spi_index: s,
                            })
                        };
                        let post = consistent_update(&g, &sp, &b, i, &lambda, y, u).expect("on-path update");
                        let diff = teamgames::util::max_abs_diff(&post, &exact[i]);
                        assert!(diff <= TOL, "spec {k} t={t} team {i}: {post:?} vs {:?}", exact[i]);
                        checked += 1;
                    }
                }
            }
        }
    }
    checked
}

/// Agent-level pure strategies against their coordinator images, both ways.
pub fn pure_coordination(seed: u64, n: usize) -> usize {
    let mut checked = 0;
    for (k, g) in tiny_suite(seed, n).into_iter().enumerate() {
        let sp = Arc::new(spaces(&g));
        let mus: Vec<Arc<dyn PureTeamStrategy>> = (0..g.n_teams())
            .map(|i| Arc::new(HashedTeamStrategy::new(&g, i, 40 + k as u64)) as Arc<dyn PureTeamStrategy>)
            .collect();
        let (direct, paths) = agent_rollout(&g, &mus);
        let coord: Profile = (0..g.n_teams()).map(|i| pure_to_coordination(&g, &sp, i, mus[i].clone())).collect();
        let via = total_payoff(&g, &sp, &coord, CAP).unwrap();
        for i in 0..g.n_teams() {
            // the two routes sum rewards in different orders
            assert!((direct[i] - via[i]).abs() <= 1e-12, "spec {k}: {direct:?} vs {via:?}");
        }
        // back to agents: the same action on every realization
        let back: Vec<Arc<dyn PureTeamStrategy>> =
            (0..g.n_teams()).map(|i| coordination_to_pure(&g, &sp, i, coord[i].clone())).collect();
        let (again, paths2) = agent_rollout(&g, &back);
        assert_eq!(paths, paths2, "spec {k}");
        assert_eq!(direct, again, "spec {k}");
        checked += 1;
    }
    checked
}

pub fn behavioral_mixed(seed: u64, n: usize) -> usize {
    let mut checked = 0;
    for (k, g) in tiny_suite(seed, n).into_iter().enumerate() {
        let sp = spaces(&g);
        let profile = random_profile(&g, &sp, 90 + k as u64, true);
        let base = total_payoff(&g, &sp, &profile, CAP).unwrap();
        for i in 0..g.n_teams() {
            let mixture = behavioral_to_mixed(&g, &sp, i, profile[i].as_ref(), 20_000).unwrap();
            let mass: f64 = mixture.iter().map(|m| m.0).sum();
            assert!((mass - 1.0).abs() <= 1e-12, "spec {k}: mass {mass}");
            let mut mixed = vec![0.0; g.n_teams()];
            for (x, rp) in &mixture {
                let mut prof = profile.clone();
                prof[i] = Arc::new(rp.strategy.clone());
                for (acc, v) in mixed.iter_mut().zip(total_payoff(&g, &sp, &prof, CAP).unwrap()) {
                    *acc += x * v;
                }
            }
            let back = mixed_to_behavioral(&mixture);
            let mut prof = profile.clone();
            prof[i] = Arc::new(back) as Arc<dyn CoordinationStrategy>;
            let behavioral = total_payoff(&g, &sp, &prof, CAP).unwrap();
            for j in 0..g.n_teams() {
                assert!((mixed[j] - base[j]).abs() <= TOL, "spec {k} team {i}: {mixed:?} vs {base:?}");
                assert!((behavioral[j] - base[j]).abs() <= TOL, "spec {k} team {i}: {behavioral:?} vs {base:?}");
            }
            checked += 1;
        }
    }
    checked
}

/// SPI-restricted best responses against a search over full histories.
pub fn spi_sufficiency(seed: u64, n: usize) -> usize {
    let mut checked = 0;
    for (k, g) in desk_suite(seed, n).into_iter().enumerate() {
        let sp = spaces(&g);
        for private in [false, true] {
            let profile = random_profile(&g, &sp, k as u64, private);
            let payoff = total_payoff(&g, &sp, &profile, CAP).unwrap();
            for i in 0..g.n_teams() {
                let br = best_response(&g, &sp, &profile, i, CAP).unwrap();
                let full = full_history_best_response(&g, &sp, &profile, i, CAP).unwrap();
                assert!((br.value - full).abs() <= TOL, "spec {k} team {i}: {} vs {full}", br.value);
                assert!(br.value >= payoff[i] - 1e-12);
                // the returned strategy attains the value
                let mut dev = profile.clone();
                dev[i] = Arc::new(br.strategy.clone());
                let got = total_payoff(&g, &sp, &dev, CAP).unwrap()[i];
                assert!((got - br.value).abs() <= TOL, "spec {k} team {i}: {got} vs {}", br.value);
                checked += 1;
            }
        }
    }
    checked
}
