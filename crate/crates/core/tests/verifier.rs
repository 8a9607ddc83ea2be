mod common;

use std::sync::Arc;

use common::{matching_pennies, spaces, zero_rewards, CAP};
use teamgames::coord::convert::reduced_pure_strategies;
use teamgames::coord::strategy::{CoordinationStrategy, Profile};
use teamgames::error::Budgets;
use teamgames::model::builtins;
use teamgames::model::random;
use teamgames::reference;
use teamgames::verify::{self, bne_enumerate_tiny, best_response, nash_gap, simulate, total_payoff};

const EPS: f64 = 0.1;

#[test]
fn guessing_equilibrium_certificate() {
    let g = builtins::guessing();
    let sp = spaces(&g);
    let profile = reference::guessing_equilibrium(&g, &sp);
    let cert = nash_gap(&g, &sp, &profile, Budgets::default()).unwrap();
    assert!((cert.teams[0].payoff - 0.0).abs() <= 1e-12);
    assert!((cert.teams[1].payoff - 1.0).abs() <= 1e-12);
    assert!(cert.epsilon <= 1e-9, "{cert:?}");
}

#[test]
fn communication_equilibrium_certificate() {
    let g = builtins::guessing_communication();
    let sp = spaces(&g);
    let profile = reference::communication_equilibrium(&g, &sp);
    let cert = nash_gap(&g, &sp, &profile, Budgets::default()).unwrap();
    // first indicator always 1, second 3/4 against uniform guesses
    assert!((cert.teams[0].payoff - 1.75).abs() <= 1e-12, "{cert:?}");
    assert!((cert.teams[1].payoff - 0.25).abs() <= 1e-12, "{cert:?}");
    assert!(cert.epsilon <= 1e-9, "{cert:?}");
}

/// Alice's value when Bob best-responds: for each revealed u1, Bob picks
/// the action minimizing Alice's conditional terminal reward.
fn alice_value_oracle(p: [f64; 2], eps: f64) -> f64 {
    // joint law of (x1, u1); x2 = x1 * u1
    let w = |x: i32, u: i32| -> f64 {
        let stay = if x < 0 { p[0] } else { p[1] };
        0.5 * if u == x { stay } else { 1.0 - stay }
    };
    let mut total = 0.0;
    for u in [-1, 1] {
        let m_minus: f64 = [-1, 1].iter().filter(|&&x| x * u == -1).map(|&x| w(x, u)).sum();
        let m_plus: f64 = [-1, 1].iter().filter(|&&x| x * u == 1).map(|&x| w(x, u)).sum();
        if u == 1 {
            total += eps * (m_minus + m_plus);
        }
        // L pays 2 when x2=+1; R pays 1 when x2=-1
        total += (2.0 * m_plus).min(m_minus);
    }
    total
}

#[test]
fn bob_best_response_values() {
    let g = builtins::nonexistence(EPS);
    let sp = spaces(&g);
    let cases = [
        ([0.0, 0.0], EPS / 2.0),
        ([0.5, 0.0], EPS / 4.0 + 0.5),
        ([0.0, 0.5], 3.0 * EPS / 4.0 + 0.5),
        ([1.0, 0.0], 0.5),
        ([0.0, 1.0], EPS + 0.5),
        ([1.0 / 3.0, 1.0 / 3.0], EPS / 2.0 + 2.0 / 3.0),
        ([1.0, 1.0], EPS / 2.0),
    ];
    for (p, expected) in cases {
        assert!((alice_value_oracle(p, EPS) - expected).abs() <= 1e-12, "oracle at {p:?}");
        let profile = reference::nonexistence_profile(&g, &sp, p, [0.5, 0.5]);
        let br = best_response(&g, &sp, &profile, 1, CAP).unwrap();
        assert!((-br.value - expected).abs() <= 1e-9, "p={p:?}: {} vs {expected}", -br.value);
    }
}

#[test]
fn nonexistence_bne_certificate() {
    let g = builtins::nonexistence(EPS);
    let sp = spaces(&g);
    let third = 1.0 / 3.0;
    let profile = reference::nonexistence_profile(&g, &sp, [third, third], [third + EPS, third - EPS]);
    let cert = nash_gap(&g, &sp, &profile, Budgets::default()).unwrap();
    assert!(cert.epsilon <= 1e-9, "{cert:?}");
    assert!((cert.teams[0].payoff + cert.teams[1].payoff).abs() == 0.0);
}

#[test]
fn zero_reward_best_response_is_zero() {
    let g = zero_rewards(builtins::guessing_communication());
    let sp = spaces(&g);
    let profile = reference::communication_equilibrium(&g, &sp);
    let br = best_response(&g, &sp, &profile, 0, CAP).unwrap();
    assert_eq!(br.value, 0.0);
    assert!(br.strategy.table.values().all(|d| d == &vec![(0, 1.0)]));
}

#[test]
fn single_team_best_response_is_optimal_control() {
    for seed in 0..5 {
        let mut shape = common::shape(1, 2, 2, 2);
        shape.observations = 2;
        shape.delay = 1 + (seed as usize % 2);
        let g = random::general(seed, &shape).unwrap();
        let sp = spaces(&g);
        let profile: Profile = vec![reference::random_strategy(&sp, 0, seed, false)];
        let br = best_response(&g, &sp, &profile, 0, CAP).unwrap();
        let mut best = f64::NEG_INFINITY;
        for (_, rp) in reduced_pure_strategies(&g, &sp, 0, None, CAP).unwrap() {
            let p: Profile = vec![Arc::new(rp.strategy) as Arc<dyn CoordinationStrategy>];
            best = best.max(total_payoff(&g, &sp, &p, CAP).unwrap()[0]);
        }
        assert!((br.value - best).abs() <= 1e-10, "seed {seed}: {} vs {best}", br.value);
        let own: Profile = vec![Arc::new(br.strategy)];
        assert!((total_payoff(&g, &sp, &own, CAP).unwrap()[0] - best).abs() <= 1e-10);
    }
}

#[test]
fn spib_best_response_matches_full_history_search() {
    assert!(common::checks::spi_sufficiency(11, 12) > 20);
}

#[test]
fn simulation_bands() {
    let g = builtins::guessing();
    let sp = spaces(&g);
    let profile = reference::guessing_equilibrium(&g, &sp);
    let stats = simulate(&g, &sp, &profile, 100_000, 1).unwrap();
    assert!(stats.mean[0].abs() <= 5.0 * stats.std_error[0], "{stats:?}");
    assert!((stats.mean[1] - 1.0).abs() <= 5.0 * stats.std_error[1], "{stats:?}");
    assert!(simulate(&g, &sp, &profile, 0, 1).is_err());
}

#[test]
fn deterministic_simulation_is_exact() {
    let mut g = builtins::nonexistence(EPS);
    g.init[0] = vec![0.0, 1.0];
    let sp = spaces(&g);
    let profile = reference::nonexistence_profile(&g, &sp, [1.0, 1.0], [1.0, 0.0]);
    let exact = total_payoff(&g, &sp, &profile, CAP).unwrap();
    let stats = simulate(&g, &sp, &profile, 1, 9).unwrap();
    assert_eq!(stats.mean, exact);
}

#[test]
fn unique_bne_of_three_stage_game() {
    let g = builtins::nonexistence(EPS);
    let sp = spaces(&g);
    let report = bne_enumerate_tiny(&g, &sp, Budgets::default()).unwrap();
    assert_eq!(report.equilibria.len(), 1, "{report:#?}");
    let eq = &report.equilibria[0];
    assert!(eq.rigid);
    let params = teamgames::reference::nonexistence_parameters(&g, &eq.projection).unwrap();
    let third = 1.0 / 3.0;
    let expected = [third, third, third + EPS, third - EPS];
    for (a, b) in params.iter().zip(expected) {
        assert!((a - b).abs() <= 1e-9, "{params:?}");
    }
}

#[test]
fn matching_pennies_bne() {
    let g = matching_pennies();
    let sp = spaces(&g);
    let report = bne_enumerate_tiny(&g, &sp, Budgets::default()).unwrap();
    assert_eq!(report.equilibria.len(), 1);
    for (_, law) in &report.equilibria[0].projection.entries {
        assert!((law[0] - 0.5).abs() <= 1e-12);
    }
}

#[test]
fn zero_reward_bne_covers_the_product() {
    let g = zero_rewards(matching_pennies());
    let sp = spaces(&g);
    let report = bne_enumerate_tiny(&g, &sp, Budgets::default()).unwrap();
    // every support pair is an equilibrium set; the full one is a polytope
    assert_eq!(report.equilibria.len(), 9);
    assert!(!report.all_rigid());
}

#[test]
fn certificate_serializes_with_hash() {
    let g = builtins::guessing();
    let sp = spaces(&g);
    let cert = nash_gap(&g, &sp, &reference::guessing_equilibrium(&g, &sp), Budgets::default()).unwrap();
    let json = serde_json::to_value(&cert).unwrap();
    assert_eq!(json["spec_hash"], teamgames::model::spec_hash(&g));
    assert_eq!(json["method"], "exact");
    let _: verify::NashCertificate = serde_json::from_value(json).unwrap();
}
