mod common;

use common::{matching_pennies, shape, spaces, zero_rewards};
use teamgames::error::Budgets;
use teamgames::model::{builtins, random};
use teamgames::reference::nonexistence_parameters;
use teamgames::solve::{
    certify_nonexistence_tiny, solve_cib, solve_layered, solve_signaling_free, solve_spib, Certification, CibConfig, CibOutcome,
    SpibConfig,
};
use teamgames::verify::bne::agent_projection;
use teamgames::verify::nash_gap;

const EPS: f64 = 0.1;

#[test]
fn cib_finds_no_fixed_point_in_three_stage_game() {
    let g = builtins::nonexistence(EPS);
    let sp = spaces(&g);
    let out = solve_cib(&g, &sp, &CibConfig::default()).unwrap();
    let CibOutcome::NoFixedPoint(report) = out else { panic!("expected no fixed point") };
    let obstruction = report.obstruction.as_ref().expect("diagnosed");
    assert_eq!(obstruction.t, 3, "{report:#?}");
    assert!(obstruction.certified);
}

#[test]
fn certification_of_three_stage_game() {
    let g = builtins::nonexistence(EPS);
    let sp = spaces(&g);
    match certify_nonexistence_tiny(&g, &sp, Budgets::default()).unwrap() {
        Certification::CertifiedNone { equilibria, violations } => {
            assert_eq!(equilibria, 1);
            assert_eq!(violations[0].t, 3);
            assert_eq!(violations[0].team, 1);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn certification_finds_zero_reward_equilibrium() {
    let g = zero_rewards(builtins::nonexistence(EPS));
    let sp = spaces(&g);
    assert!(matches!(
        certify_nonexistence_tiny(&g, &sp, Budgets::default()).unwrap(),
        Certification::Found { .. }
    ));
}

#[test]
fn spib_recovers_unique_equilibrium() {
    let g = builtins::nonexistence(EPS);
    let sp = spaces(&g);
    let sol = solve_spib(&g, &sp, &SpibConfig::default()).unwrap();
    assert!(sol.verifier_report.epsilon <= 1e-6, "{:?}", sol.verifier_report);
    let proj = agent_projection(&g, &sp, &sol.strategies(), 1 << 20).unwrap();
    let params = nonexistence_parameters(&g, &proj).unwrap();
    let third = 1.0 / 3.0;
    for (a, b) in params.iter().zip([third, third, third + EPS, third - EPS]) {
        assert!((a - b).abs() <= 1e-3, "{params:?}");
    }
}

#[test]
fn cib_zero_reward_is_solved() {
    let g = zero_rewards(builtins::nonexistence(EPS));
    let sp = spaces(&g);
    let CibOutcome::Solved(sol) = solve_cib(&g, &sp, &CibConfig::default()).unwrap() else { panic!() };
    assert_eq!(sol.verifier_report.as_ref().unwrap().epsilon, 0.0);
}

#[test]
fn signaling_free_random_builtins() {
    for seed in 0..10 {
        let mut s = shape(2, 2, 2, 3);
        s.observations = 2;
        let g = random::signaling_free(seed, &s).unwrap();
        let sp = spaces(&g);
        let sol = solve_signaling_free(&g, &sp, Budgets::default(), true).unwrap();
        let eps = sol.verifier_report.as_ref().unwrap().epsilon;
        assert!(eps <= 1e-9, "seed {seed}: {eps}");
    }
}

#[test]
fn layered_random_builtins() {
    for seed in 0..10 {
        let mut s = shape(2, 2, 2, 2);
        s.observations = 2;
        let g = random::layered(seed, &s).unwrap();
        let sp = spaces(&g);
        let CibOutcome::Solved(sol) = solve_layered(&g, &sp, &CibConfig::default()).unwrap() else {
            panic!("seed {seed}: no fixed point")
        };
        let eps = sol.verifier_report.as_ref().unwrap().epsilon;
        assert!(eps <= 1e-6, "seed {seed}: {eps}");
    }
}

#[test]
fn layered_rejects_three_stage_game() {
    let g = builtins::nonexistence(EPS);
    let sp = spaces(&g);
    let err = solve_layered(&g, &sp, &CibConfig::default()).unwrap_err();
    assert!(err.to_string().contains("Alice") || err.to_string().contains("component"), "{err}");
}

#[test]
fn matching_pennies_cib() {
    let g = matching_pennies();
    let sp = spaces(&g);
    let CibOutcome::Solved(sol) = solve_cib(&g, &sp, &CibConfig::default()).unwrap() else { panic!() };
    assert!(sol.verifier_report.as_ref().unwrap().epsilon <= 1e-9);
    let _ = nash_gap;
}

#[test]
fn signaling_free_values_match_rollout() {
    for seed in 0..6 {
        let mut s = shape(2, 1, 2, 3);
        s.observations = 2;
        let g = random::signaling_free(seed + 40, &s).unwrap();
        let sp = spaces(&g);
        let sol = solve_signaling_free(&g, &sp, Budgets::default(), false).unwrap();
        let payoff = teamgames::verify::total_payoff(&g, &sp, &sol.profile(), 1 << 20).unwrap();
        for (i, p) in payoff.iter().enumerate() {
            let root = sol.cells[0].values[i][0];
            assert!((root - p).abs() <= 1e-10, "seed {seed} team {i}: {root} vs {p}");
        }
    }
}

#[test]
fn single_team_spib_is_optimal() {
    for seed in 0..5 {
        let s = shape(1, 2, 2, 2);
        let g = random::general(seed, &s).unwrap();
        let sp = spaces(&g);
        let sol = solve_spib(&g, &sp, &SpibConfig::default()).unwrap();
        assert!(sol.verifier_report.epsilon <= 1e-9, "seed {seed}: {:?}", sol.verifier_report);
    }
}

#[test]
fn spib_seed_does_not_change_outcome() {
    let g = builtins::nonexistence(EPS);
    let sp = spaces(&g);
    let params: Vec<Vec<f64>> = [0, 17]
        .iter()
        .map(|&seed| {
            let sol = solve_spib(&g, &sp, &SpibConfig { seed, ..SpibConfig::default() }).unwrap();
            assert!(sol.verifier_report.epsilon <= 1e-6);
            let proj = agent_projection(&g, &sp, &sol.strategies(), 1 << 20).unwrap();
            nonexistence_parameters(&g, &proj).unwrap().to_vec()
        })
        .collect();
    for (a, b) in params[0].iter().zip(&params[1]) {
        assert!((a - b).abs() <= 1e-3, "{params:?}");
    }
}
