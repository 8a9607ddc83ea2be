mod common;

use common::checks;

#[test]
fn pure_and_coordination_strategies_agree() {
    assert_eq!(checks::pure_coordination(3, 10), 10);
}

#[test]
fn behavioral_and_mixed_strategies_agree() {
    assert!(checks::behavioral_mixed(3, 10) >= 10);
}
