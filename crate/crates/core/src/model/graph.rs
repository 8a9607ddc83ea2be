//! Information dependency graph and structural predicates.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::{GameSpec, Time};
use crate::util::decode_vec;

const EQ_TOL: f64 = 1e-12;

/// Edges `(j, i)` mean team `i`'s kernels or reward vary with team `j`'s
/// state or action. Components are listed in topological order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyGraph {
    pub edges: Vec<(usize, usize)>,
    pub components: Vec<Vec<usize>>,
}

/// Joint actions that differ from `u` only in team `j`'s component.
fn action_variants(g: &GameSpec, t: Time, u: usize, j: usize) -> impl Iterator<Item = usize> + '_ {
    let parts = g.split_action(t, u).to_vec();
    (0..g.team_actions(j, t)).map(move |a| {
        let mut p = parts.clone();
        p[j] = a;
        g.join_actions(t, &p)
    })
}

fn rows_equal(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= EQ_TOL)
}

/// Does some kernel of team `i` vary with team `j`'s action?
fn kernels_vary_with_action(g: &GameSpec, i: usize, j: usize) -> bool {
    let horizon = g.horizon_t();
    for t in 1..=horizon {
        let mut kernels = vec![&g.observation[i][t as usize - 1]];
        if t < horizon {
            kernels.push(&g.transition[i][t as usize - 1]);
        }
        for ker in kernels {
            for x in 0..ker.states {
                for u in 0..ker.actions {
                    let base = ker.row(x, u);
                    if action_variants(g, t, u, j).any(|v| !rows_equal(base, ker.row(x, v))) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Does team `i`'s reward vary with team `j`'s state or action?
fn reward_varies_with(g: &GameSpec, i: usize, j: usize, state: bool, action: bool) -> bool {
    for t in 1..=g.horizon_t() {
        let radices = g.team_state_radices(t).to_vec();
        let table = &g.reward[i][t as usize - 1];
        for x in 0..table.states {
            let xs = decode_vec(x, &radices);
            for u in 0..table.actions {
                let r = table.get(x, u);
                if action && action_variants(g, t, u, j).any(|v| (table.get(x, v) - r).abs() > EQ_TOL) {
                    return true;
                }
                if state {
                    for alt in 0..radices[j] {
                        let mut ys = xs.clone();
                        ys[j] = alt;
                        if (g.reward_at(i, t, &ys, u) - r).abs() > EQ_TOL {
                            return true;
                        }
                    }
                }
            }
        }
    }
    false
}

pub fn dependency_graph(g: &GameSpec) -> DependencyGraph {
    let n = g.n_teams();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && (kernels_vary_with_action(g, i, j) || reward_varies_with(g, i, j, true, true)) {
                edges.push((j, i));
            }
        }
    }
    let mut dg = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = (0..n).map(|i| dg.add_node(i)).collect();
    for &(j, i) in &edges {
        dg.add_edge(nodes[j], nodes[i], ());
    }
    let mut components: Vec<Vec<usize>> = tarjan_scc(&dg)
        .into_iter()
        .map(|c| {
            let mut m: Vec<usize> = c.into_iter().map(|v| dg[v]).collect();
            m.sort_unstable();
            m
        })
        .collect();
    components.reverse();
    DependencyGraph { edges, components }
}

/// For every time and joint action, observation rows of distinct states
/// have disjoint supports, so the state is recoverable from `(y, u)`.
pub fn is_public_team(g: &GameSpec, i: usize) -> bool {
    for ker in &g.observation[i] {
        for u in 0..ker.actions {
            for y in 0..ker.outcomes {
                let support = (0..ker.states).filter(|&x| ker.get(x, u, y) > 0.0).count();
                if support > 1 {
                    return false;
                }
            }
        }
    }
    true
}

/// Dynamics and observations ignore all actions and each team's reward
/// ignores its own state.
pub fn is_signaling_free(g: &GameSpec) -> bool {
    let uncontrolled = |ker: &super::Kernel| {
        (0..ker.states).all(|x| (1..ker.actions).all(|u| rows_equal(ker.row(x, 0), ker.row(x, u))))
    };
    (0..g.n_teams()).all(|i| {
        g.transition[i].iter().all(uncontrolled)
            && g.observation[i].iter().all(uncontrolled)
            && !reward_varies_with(g, i, i, true, false)
    })
}

/// Rank-one test of `m[a][b]` for every split of one agent against the rest.
fn factorizes(values: impl Fn(&[usize]) -> f64, radices: &[usize]) -> bool {
    let m = radices.len();
    if m < 2 {
        return true;
    }
    for j in 0..m {
        let rest: Vec<usize> = (0..m).filter(|&k| k != j).map(|k| radices[k]).collect();
        let rest_total: usize = rest.iter().product();
        let at = |a: usize, b: usize| {
            let others = decode_vec(b, &rest);
            let mut digits = Vec::with_capacity(m);
            let mut it = others.into_iter();
            for k in 0..m {
                digits.push(if k == j { a } else { it.next().unwrap() });
            }
            values(&digits)
        };
        for a in 0..radices[j] {
            for c in 0..radices[j] {
                for b in 0..rest_total {
                    for d in 0..rest_total {
                        if (at(a, b) * at(c, d) - at(a, d) * at(c, b)).abs() > EQ_TOL {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

/// Every team's initial law and transition kernel are products of per-agent
/// kernels, each agent's next state depends only on its own state, and
/// observation likelihoods factor across agents. Separable games admit the
/// simple prescription mode.
pub fn is_separable(g: &GameSpec) -> bool {
    for i in 0..g.n_teams() {
        let r1 = g.agent_state_radices(i, 1).to_vec();
        if !factorizes(|d| g.init[i][crate::util::encode_radix(d, &r1)], &r1) {
            return false;
        }
        for t in 1..g.horizon_t() {
            let now = g.agent_state_radices(i, t).to_vec();
            let next = g.agent_state_radices(i, t + 1).to_vec();
            let ker = &g.transition[i][t as usize - 1];
            for u in 0..ker.actions {
                for x in 0..ker.states {
                    let row = ker.row(x, u);
                    if !factorizes(|d| row[crate::util::encode_radix(d, &next)], &next) {
                        return false;
                    }
                }
                // agent j's marginal must not depend on the other agents' states
                for j in 0..now.len() {
                    let marginal = |x: usize| {
                        let mut m = vec![0.0; next[j]];
                        for xn in 0..ker.outcomes {
                            m[g.state_agents(i, t + 1, xn)[j]] += ker.get(x, u, xn);
                        }
                        m
                    };
                    for x in 0..ker.states {
                        for x2 in 0..ker.states {
                            if g.state_agents(i, t, x)[j] == g.state_agents(i, t, x2)[j]
                                && !rows_equal(&marginal(x), &marginal(x2))
                            {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        for t in 1..=g.horizon_t() {
            let now = g.agent_state_radices(i, t).to_vec();
            let ker = &g.observation[i][t as usize - 1];
            for u in 0..ker.actions {
                for y in 0..ker.outcomes {
                    if !factorizes(|d| ker.get(crate::util::encode_radix(d, &now), u, y), &now) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Delay one and every strongly connected component is a single team or a
/// set of public teams.
pub fn is_layered(g: &GameSpec) -> bool {
    g.delay == 1
        && dependency_graph(g)
            .components
            .iter()
            .all(|c| c.len() == 1 || c.iter().all(|&i| is_public_team(g, i)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtins;

    #[test]
    fn nonexistence_is_one_component() {
        let g = builtins::nonexistence(0.1);
        let dg = dependency_graph(&g);
        assert_eq!(dg.edges, vec![(1, 0), (0, 1)]);
        assert_eq!(dg.components, vec![vec![0, 1]]);
        assert!(!is_public_team(&g, 0));
        assert!(is_public_team(&g, 1));
        assert!(!is_layered(&g));
        assert!(!is_signaling_free(&g));
    }

    #[test]
    fn guessing_structure() {
        let g = builtins::guessing();
        assert!(is_separable(&g));
        // A's reward at t = 1 depends on its own state, so not signaling-free
        assert!(!is_signaling_free(&g));
        assert_eq!(dependency_graph(&g).components.len(), 1);
    }
}
