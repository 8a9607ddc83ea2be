//! Built-in games, addressable by name from the command line.

use std::collections::BTreeMap;

use super::{random, Agent, GameSpec, Kernel, RewardTable, SpecError, Team, Time};

pub const NAMES: &[&str] = &[
    "guessing",
    "guessing-communication",
    "nonexistence",
    "random-signaling-free",
    "random-layered",
];

fn labels(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn none() -> Vec<String> {
    labels(&["none"])
}

/// Builds a spec from closures over indices. The closures receive a
/// skeleton spec (same alphabets, placeholder kernels) for index decoding.
pub(crate) fn assemble(
    horizon: usize,
    delay: usize,
    teams: Vec<Team>,
    init: Vec<Vec<f64>>,
    trans: impl Fn(&GameSpec, usize, Time, usize, usize, usize) -> f64,
    obs: impl Fn(&GameSpec, usize, Time, usize, usize, usize) -> f64,
    reward: impl Fn(&GameSpec, usize, Time, &[usize], usize) -> f64,
) -> Result<GameSpec, SpecError> {
    let n = teams.len();
    let team_states = |i: usize, k: usize| -> usize { teams[i].agents.iter().map(|a| a.states[k].len()).product() };
    let joint_actions = |k: usize| -> usize {
        teams
            .iter()
            .map(|t| t.agents.iter().map(|a| a.actions[k].len()).product::<usize>())
            .product()
    };
    let joint_states = |k: usize| -> usize { (0..n).map(|i| team_states(i, k)).product() };
    let uniform_kernel = |s: usize, a: usize, o: usize| Kernel {
        states: s,
        actions: a,
        outcomes: o,
        data: vec![1.0 / o as f64; s * a * o],
    };
    let skeleton = GameSpec::new(
        horizon,
        delay,
        teams.clone(),
        init.clone(),
        (0..n)
            .map(|i| {
                (0..horizon.saturating_sub(1))
                    .map(|k| uniform_kernel(team_states(i, k), joint_actions(k), team_states(i, k + 1)))
                    .collect()
            })
            .collect(),
        (0..n)
            .map(|i| {
                (0..horizon)
                    .map(|k| uniform_kernel(team_states(i, k), joint_actions(k), teams[i].observations[k].len()))
                    .collect()
            })
            .collect(),
        (0..n)
            .map(|_| (0..horizon).map(|k| RewardTable::zeros(joint_states(k), joint_actions(k))).collect())
            .collect(),
    )?;

    let mut transition = skeleton.transition.clone();
    let mut observation = skeleton.observation.clone();
    let mut rewards = skeleton.reward.clone();
    for i in 0..n {
        for (k, ker) in transition[i].iter_mut().enumerate() {
            let t = k as Time + 1;
            for x in 0..ker.states {
                for u in 0..ker.actions {
                    for xn in 0..ker.outcomes {
                        ker.set(x, u, xn, trans(&skeleton, i, t, x, u, xn));
                    }
                }
            }
        }
        for (k, ker) in observation[i].iter_mut().enumerate() {
            let t = k as Time + 1;
            for x in 0..ker.states {
                for u in 0..ker.actions {
                    for y in 0..ker.outcomes {
                        ker.set(x, u, y, obs(&skeleton, i, t, x, u, y));
                    }
                }
            }
        }
        for (k, table) in rewards[i].iter_mut().enumerate() {
            let t = k as Time + 1;
            let radices = skeleton.team_state_radices(t).to_vec();
            for x in 0..table.states {
                let xs = crate::util::decode_vec(x, &radices);
                for u in 0..table.actions {
                    table.set(x, u, reward(&skeleton, i, t, &xs, u));
                }
            }
        }
    }
    GameSpec::new(horizon, delay, teams, init, transition, observation, rewards)
}

/// `±1` value of a binary label index.
fn pm(k: usize) -> i32 {
    if k == 0 {
        -1
    } else {
        1
    }
}

fn ind(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn guessing_teams(a_acts_at_2: bool) -> Vec<Team> {
    let pm_labels = labels(&["-1", "1"]);
    let a_agent = |name: &str| Agent {
        name: name.into(),
        states: vec![pm_labels.clone(), pm_labels.clone()],
        actions: vec![pm_labels.clone(), if a_acts_at_2 { pm_labels.clone() } else { none() }],
    };
    let b_agent = |name: &str| Agent {
        name: name.into(),
        states: vec![none(), none()],
        actions: vec![none(), pm_labels.clone()],
    };
    vec![
        Team {
            name: "A".into(),
            agents: vec![a_agent("A1"), a_agent("A2")],
            observations: vec![none(), none()],
        },
        Team {
            name: "B".into(),
            agents: vec![b_agent("B1"), b_agent("B2")],
            observations: vec![none(), none()],
        },
    ]
}

fn static_transition(_: &GameSpec, _: usize, _: Time, x: usize, _: usize, xn: usize) -> f64 {
    ind(x == xn)
}

fn silent(_: &GameSpec, _: usize, _: Time, _: usize, _: usize, y: usize) -> f64 {
    ind(y == 0)
}

/// Two-stage guessing game: team A earns by acting on its private states
/// at `t = 1`, team B then guesses A's state.
pub fn guessing() -> GameSpec {
    assemble(
        2,
        2,
        guessing_teams(false),
        vec![vec![0.25; 4], vec![1.0]],
        static_transition,
        silent,
        |g, i, t, xs, u| {
            let xa = g.state_agents(0, t, xs[0]);
            let (x1, x2) = (pm(xa[0]), pm(xa[1]));
            let ra = if t == 1 {
                let ua = g.action_agents(0, t, g.team_action(0, t, u));
                ind(x1 * pm(ua[0]) * x2 * pm(ua[1]) == -1)
            } else {
                let ub = g.action_agents(1, t, g.team_action(1, t, u));
                -ind(x1 == pm(ub[0])) - ind(x2 == pm(ub[1]))
            };
            match (i, t) {
                (0, _) => ra,
                (_, 1) => 0.0,
                _ => -ra,
            }
        },
    )
    .expect("builtin guessing is valid")
}

/// Guessing game variant where team A also acts at `t = 2` and is paid for
/// swapping its agents' states through public actions.
pub fn guessing_communication() -> GameSpec {
    assemble(
        2,
        2,
        guessing_teams(true),
        vec![vec![0.25; 4], vec![1.0]],
        static_transition,
        silent,
        |g, i, t, xs, u| {
            if t == 1 {
                return 0.0;
            }
            let xa = g.state_agents(0, t, xs[0]).to_vec();
            let ua = g.action_agents(0, t, g.team_action(0, t, u)).to_vec();
            let ub = g.action_agents(1, t, g.team_action(1, t, u)).to_vec();
            let caught = xa == ub;
            if i == 0 {
                ind(xa[1] == ua[0] && xa[0] == ua[1]) + ind(!caught)
            } else {
                ind(caught)
            }
        },
    )
    .expect("builtin guessing-communication is valid")
}

/// Three-stage zero-sum game between Alice (private state) and Bob (acts
/// last) with no CIB equilibrium for `0 < eps < 1/3`.
pub fn nonexistence(eps: f64) -> GameSpec {
    let pm_labels = labels(&["-1", "+1"]);
    let alice = Agent {
        name: "alice".into(),
        states: vec![pm_labels.clone(); 3],
        actions: vec![pm_labels.clone(), none(), none()],
    };
    let bob = Agent {
        name: "bob".into(),
        states: vec![none(); 3],
        actions: vec![none(), none(), labels(&["L", "R"])],
    };
    let teams = vec![
        Team {
            name: "Alice".into(),
            agents: vec![alice],
            observations: vec![none(); 3],
        },
        Team {
            name: "Bob".into(),
            agents: vec![bob],
            observations: vec![none(); 3],
        },
    ];
    assemble(
        3,
        1,
        teams,
        vec![vec![0.5, 0.5], vec![1.0]],
        |g, i, t, x, u, xn| {
            if i == 1 {
                return 1.0;
            }
            if t == 1 {
                let ua = g.team_action(0, t, u);
                ind(pm(xn) == pm(x) * pm(ua))
            } else {
                ind(x == xn)
            }
        },
        silent,
        move |g, i, t, xs, u| {
            let ra = match t {
                1 => eps * ind(g.team_action(0, t, u) == 1),
                3 => match (xs[0], g.team_action(1, t, u)) {
                    (0, 0) => 0.0,
                    (0, _) => 1.0,
                    (_, 0) => 2.0,
                    _ => 0.0,
                },
                _ => 0.0,
            };
            if i == 0 {
                ra
            } else {
                -ra
            }
        },
    )
    .expect("builtin nonexistence is valid")
}

fn param<T: std::str::FromStr>(
    params: &BTreeMap<String, String>,
    keys: &[&str],
    default: T,
) -> Result<T, SpecError> {
    for k in keys {
        if let Some(v) = params.get(*k) {
            return v.parse().map_err(|_| SpecError::BadParam {
                name: k.to_string(),
                message: format!("cannot parse `{v}`"),
            });
        }
    }
    Ok(default)
}

const KNOWN_PARAMS: &[&str] = &[
    "eps", "epsilon", "seed", "states", "x", "X", "actions", "u", "U", "obs", "y", "Y", "horizon", "T", "t",
    "delay", "d", "teams", "agents",
];

/// Resolves a builtin by name with `key=value` parameters.
pub fn builtin(name: &str, params: &BTreeMap<String, String>) -> Result<GameSpec, SpecError> {
    if let Some(k) = params.keys().find(|k| !KNOWN_PARAMS.contains(&k.as_str())) {
        return Err(SpecError::BadParam {
            name: k.clone(),
            message: "unknown parameter".into(),
        });
    }
    let shape = || -> Result<random::Shape, SpecError> {
        Ok(random::Shape {
            teams: param(params, &["teams"], 2)?,
            agents: param(params, &["agents"], 1)?,
            states: param(params, &["states", "x", "X"], 2)?,
            actions: param(params, &["actions", "u", "U"], 2)?,
            observations: param(params, &["obs", "y", "Y"], 2)?,
            horizon: param(params, &["horizon", "T", "t"], 2)?,
            delay: param(params, &["delay", "d"], 1)?,
        })
    };
    match name {
        "guessing" => Ok(guessing()),
        "guessing-communication" => Ok(guessing_communication()),
        "nonexistence" => {
            let eps: f64 = param(params, &["eps", "epsilon"], 0.1)?;
            if !(eps > 0.0 && eps < 1.0 / 3.0) {
                return Err(SpecError::BadParam {
                    name: "eps".into(),
                    message: "must lie in (0, 1/3)".into(),
                });
            }
            Ok(nonexistence(eps))
        }
        "random-signaling-free" => random::signaling_free(param(params, &["seed"], 0)?, &shape()?),
        "random-layered" => {
            let mut s = shape()?;
            if s.delay != 1 {
                return Err(SpecError::BadParam {
                    name: "delay".into(),
                    message: "layered games use delay 1".into(),
                });
            }
            s.delay = 1;
            random::layered(param(params, &["seed"], 0)?, &s)
        }
        other => Err(SpecError::UnknownBuiltin(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guessing_rewards() {
        let g = guessing();
        // A state (x1, x2) = (-1, 1) -> index 1; actions (u1, u2) = (1, 1) -> index 3
        let u = g.join_actions(1, &[3, 0]);
        assert_eq!(g.reward_at(0, 1, &[1, 0], u), 1.0);
        let u = g.join_actions(1, &[0, 0]);
        assert_eq!(g.reward_at(0, 1, &[1, 0], u), 1.0);
        let u = g.join_actions(1, &[1, 0]);
        assert_eq!(g.reward_at(0, 1, &[1, 0], u), 0.0);
        // B guesses (-1, 1) exactly
        let u = g.join_actions(2, &[0, 1]);
        assert_eq!(g.reward_at(0, 2, &[1, 0], u), -2.0);
        assert_eq!(g.reward_at(1, 2, &[1, 0], u), 2.0);
        assert_eq!(g.reward_at(1, 1, &[1, 0], 0), 0.0);
    }

    #[test]
    fn communication_rewards() {
        let g = guessing_communication();
        // x = (-1, 1); A reports (1, -1) = index 2; B guesses (1, 1) = index 3
        let u = g.join_actions(2, &[2, 3]);
        assert_eq!(g.reward_at(0, 2, &[1, 0], u), 2.0);
        assert_eq!(g.reward_at(1, 2, &[1, 0], u), 0.0);
        let u = g.join_actions(2, &[2, 1]);
        assert_eq!(g.reward_at(0, 2, &[1, 0], u), 1.0);
        assert_eq!(g.reward_at(1, 2, &[1, 0], u), 1.0);
    }

    #[test]
    fn nonexistence_dynamics() {
        let g = nonexistence(0.1);
        // x = -1, u = -1 -> +1
        assert_eq!(g.trans(0, 1, 0, 0, 1), 1.0);
        assert_eq!(g.trans(0, 1, 1, 0, 0), 1.0);
        assert_eq!(g.trans(0, 1, 1, 1, 1), 1.0);
        assert_eq!(g.reward_at(0, 1, &[0, 0], 1), 0.1);
        assert_eq!(g.reward_at(1, 1, &[0, 0], 1), -0.1);
        assert_eq!(g.reward_at(0, 3, &[1, 0], 0), 2.0);
        assert_eq!(g.reward_at(0, 3, &[0, 0], 1), 1.0);
    }

    #[test]
    fn builtin_params() {
        let mut p = BTreeMap::new();
        p.insert("eps".to_string(), "0.2".to_string());
        assert_eq!(builtin("nonexistence", &p).unwrap(), nonexistence(0.2));
        p.insert("eps".to_string(), "0.5".to_string());
        assert!(builtin("nonexistence", &p).is_err());
        assert!(matches!(builtin("nope", &BTreeMap::new()), Err(SpecError::UnknownBuiltin(_))));
        let mut p = BTreeMap::new();
        p.insert("bogus".to_string(), "1".to_string());
        assert!(builtin("guessing", &p).is_err());
    }
}
