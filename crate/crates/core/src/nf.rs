//! Two-player normal-form games: equilibrium search and full enumeration.

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use crate::error::{budget, Result};

/// Payoff matrices `a[i][j]` (row player) and `b[i][j]` (column player).
#[derive(Clone, Debug, PartialEq)]
pub struct Bimatrix {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equilibrium {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Support-fixed set of equilibria: every equilibrium whose supports are
/// exactly `rows` and `cols`. `extremes` holds the LP optima of every
/// coordinate in both directions over the closure.
#[derive(Clone, Debug)]
pub struct Component {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub representative: Equilibrium,
    pub extremes: Vec<Equilibrium>,
    pub is_point: bool,
}

const SLACK_TOL: f64 = 1e-9;

impl Bimatrix {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> Self {
        Bimatrix { a, b }
    }

    pub fn rows(&self) -> usize {
        self.a.len()
    }

    pub fn cols(&self) -> usize {
        self.a.first().map_or(0, |r| r.len())
    }

    pub fn row_payoffs(&self, y: &[f64]) -> Vec<f64> {
        self.a.iter().map(|r| r.iter().zip(y).map(|(p, q)| p * q).sum()).collect()
    }

    pub fn col_payoffs(&self, x: &[f64]) -> Vec<f64> {
        (0..self.cols())
            .map(|j| (0..self.rows()).map(|i| self.b[i][j] * x[i]).sum())
            .collect()
    }

    /// Largest gain from a unilateral pure deviation.
    pub fn regret(&self, x: &[f64], y: &[f64]) -> f64 {
        let rp = self.row_payoffs(y);
        let cp = self.col_payoffs(x);
        let vr: f64 = rp.iter().zip(x).map(|(p, q)| p * q).sum();
        let vc: f64 = cp.iter().zip(y).map(|(p, q)| p * q).sum();
        let br = rp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let bc = cp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (br - vr).max(bc - vc)
    }

    pub fn pure_equilibria(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                let row_best = (0..self.rows()).all(|k| self.a[k][j] <= self.a[i][j] + SLACK_TOL);
                let col_best = (0..self.cols()).all(|k| self.b[i][k] <= self.b[i][j] + SLACK_TOL);
                if row_best && col_best {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Equilibrium with supports exactly `rows`, `cols`, if one exists.
    pub fn support_equilibrium(&self, rows: &[usize], cols: &[usize]) -> Option<Equilibrium> {
        let (lp, vars) = self.support_lp(rows, cols, None)?;
        let sol = lp.solve().ok()?.into_solution().ok()?;
        if sol.objective() <= SLACK_TOL {
            return None;
        }
        let eq = vars.read(&sol, self.rows(), self.cols());
        Some(self.refine(rows, cols, eq))
    }

    /// LP over the closure of the support-fixed set. `objective` optimizes
    /// one coordinate (index into `x ++ y`, sign); `None` maximizes the
    /// smallest support weight.
    fn support_lp(&self, rows: &[usize], cols: &[usize], objective: Option<(usize, f64)>) -> Option<(Problem, SupportVars)> {
        let m = self.rows();
        let n = self.cols();
        let mut p = Problem::new(OptimizationDirection::Maximize);
        let coeff = |k: usize| match objective {
            Some((c, s)) if c == k => s,
            _ => 0.0,
        };
        let x: Vec<Variable> = rows.iter().map(|&i| p.add_var(coeff(i), (0.0, 1.0))).collect();
        let y: Vec<Variable> = cols.iter().map(|&j| p.add_var(coeff(m + j), (0.0, 1.0))).collect();
        let u = p.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY));
        let v = p.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY));
        let s = p.add_var(if objective.is_none() { 1.0 } else { 0.0 }, (0.0, 1.0));
        for i in 0..m {
            let mut expr: Vec<(Variable, f64)> = cols.iter().zip(&y).map(|(&j, &yv)| (yv, self.a[i][j])).collect();
            expr.push((u, -1.0));
            let op = if rows.contains(&i) { ComparisonOp::Eq } else { ComparisonOp::Le };
            p.add_constraint(expr.as_slice(), op, 0.0);
        }
        for j in 0..n {
            let mut expr: Vec<(Variable, f64)> = rows.iter().zip(&x).map(|(&i, &xv)| (xv, self.b[i][j])).collect();
            expr.push((v, -1.0));
            let op = if cols.contains(&j) { ComparisonOp::Eq } else { ComparisonOp::Le };
            p.add_constraint(expr.as_slice(), op, 0.0);
        }
        let ones_x: Vec<(Variable, f64)> = x.iter().map(|&xv| (xv, 1.0)).collect();
        let ones_y: Vec<(Variable, f64)> = y.iter().map(|&yv| (yv, 1.0)).collect();
        p.add_constraint(ones_x.as_slice(), ComparisonOp::Eq, 1.0);
        p.add_constraint(ones_y.as_slice(), ComparisonOp::Eq, 1.0);
        if objective.is_none() {
            for &xv in &x {
                p.add_constraint([(xv, 1.0), (s, -1.0)], ComparisonOp::Ge, 0.0);
            }
            for &yv in &y {
                p.add_constraint([(yv, 1.0), (s, -1.0)], ComparisonOp::Ge, 0.0);
            }
        }
        Some((
            p,
            SupportVars {
                rows: rows.to_vec(),
                cols: cols.to_vec(),
                x,
                y,
            },
        ))
    }

    /// Polishes an LP point by solving the indifference equations when they
    /// pin it down, falling back to the LP point otherwise.
    fn refine(&self, rows: &[usize], cols: &[usize], eq: Equilibrium) -> Equilibrium {
        let solve_side = |weights_on: &[usize], against: &[usize], payoff: &dyn Fn(usize, usize) -> f64, dim: usize| {
            // unknowns: weights on `weights_on`, then the value
            let k = weights_on.len();
            let mut rows_eq: Vec<Vec<f64>> = Vec::new();
            for &o in against {
                let mut r: Vec<f64> = weights_on.iter().map(|&w| payoff(w, o)).collect();
                r.push(-1.0);
                r.push(0.0);
                rows_eq.push(r);
            }
            let mut norm = vec![1.0; k];
            norm.push(0.0);
            norm.push(1.0);
            rows_eq.push(norm);
            let sol = solve_unique(rows_eq, k + 1)?;
            if sol[..k].iter().any(|&w| w < -1e-12) {
                return None;
            }
            let mut out = vec![0.0; dim];
            for (idx, &w) in weights_on.iter().enumerate() {
                out[w] = sol[idx].max(0.0);
            }
            Some(out)
        };
        let x = solve_side(rows, cols, &|i, j| self.b[i][j], self.rows());
        let y = solve_side(cols, rows, &|j, i| self.a[i][j], self.cols());
        let refined = Equilibrium {
            x: x.unwrap_or_else(|| eq.x.clone()),
            y: y.unwrap_or_else(|| eq.y.clone()),
        };
        if self.regret(&refined.x, &refined.y) <= self.regret(&eq.x, &eq.y) + 1e-15 {
            refined
        } else {
            eq
        }
    }

    /// Some equilibrium: pure profiles, then supports of growing size up to
    /// `max_support`, then Lemke-Howson from every starting label.
    pub fn find_equilibrium(&self, max_support: usize) -> Option<Equilibrium> {
        let m = self.rows();
        let n = self.cols();
        if let Some(&(i, j)) = self.pure_equilibria().first() {
            return Some(Equilibrium {
                x: crate::util::delta(m, i),
                y: crate::util::delta(n, j),
            });
        }
        for k in 2..=max_support.min(m).min(n) {
            let mut found = None;
            for_each_subset(m, k, |rows| {
                if found.is_some() {
                    return;
                }
                for_each_subset(n, k, |cols| {
                    if found.is_none() {
                        found = self.support_equilibrium(rows, cols);
                    }
                });
            });
            if found.is_some() {
                return found;
            }
        }
        let mut best: Option<(f64, Equilibrium)> = None;
        for k0 in 0..m + n {
            if let Some(eq) = lemke_howson(self, k0) {
                let r = self.regret(&eq.x, &eq.y);
                if r <= 1e-12 {
                    return Some(eq);
                }
                if best.as_ref().is_none_or(|(b, _)| r < *b) {
                    best = Some((r, eq));
                }
            }
        }
        best.filter(|(r, _)| *r <= 1e-9).map(|(_, e)| e)
    }

    /// Every support-fixed equilibrium set, with extreme points. Fails when
    /// the number of support pairs exceeds `max_pairs`.
    pub fn enumerate_all(&self, max_pairs: u128) -> Result<Vec<Component>> {
        let m = self.rows();
        let n = self.cols();
        let pairs = ((1u128 << m.min(100)) - 1) * ((1u128 << n.min(100)) - 1);
        if m >= 100 || n >= 100 || pairs > max_pairs {
            return Err(budget("support pairs", format!("(2^{m}-1)(2^{n}-1)"), max_pairs as usize));
        }
        let mut out = Vec::new();
        for rmask in 1u64..(1u64 << m) {
            let rows: Vec<usize> = (0..m).filter(|&i| rmask >> i & 1 == 1).collect();
            for cmask in 1u64..(1u64 << n) {
                let cols: Vec<usize> = (0..n).filter(|&j| cmask >> j & 1 == 1).collect();
                let Some(rep) = self.support_equilibrium(&rows, &cols) else {
                    continue;
                };
                let mut extremes = Vec::new();
                for k in rows.iter().copied().chain(cols.iter().map(|&j| m + j)) {
                    for sign in [1.0, -1.0] {
                        if let Some((lp, vars)) = self.support_lp(&rows, &cols, Some((k, sign))) {
                            if let Some(sol) = lp.solve().ok().and_then(|o| o.into_solution().ok()) {
                                extremes.push(vars.read(&sol, m, n));
                            }
                        }
                    }
                }
                let spread = extremes
                    .iter()
                    .map(|e| crate::util::max_abs_diff(&e.x, &rep.x).max(crate::util::max_abs_diff(&e.y, &rep.y)))
                    .fold(0.0, f64::max);
                out.push(Component {
                    rows: rows.clone(),
                    cols: cols.clone(),
                    representative: rep,
                    extremes,
                    is_point: spread <= 1e-9,
                });
            }
        }
        Ok(out)
    }
}

struct SupportVars {
    rows: Vec<usize>,
    cols: Vec<usize>,
    x: Vec<Variable>,
    y: Vec<Variable>,
}

impl SupportVars {
    fn read(&self, sol: &microlp::Solution, m: usize, n: usize) -> Equilibrium {
        let mut x = vec![0.0; m];
        let mut y = vec![0.0; n];
        for (&i, &v) in self.rows.iter().zip(&self.x) {
            x[i] = sol.var_value(v).max(0.0);
        }
        for (&j, &v) in self.cols.iter().zip(&self.y) {
            y[j] = sol.var_value(v).max(0.0);
        }
        crate::util::normalize(&mut x);
        crate::util::normalize(&mut y);
        Equilibrium { x, y }
    }
}

/// Finite game among `n` players with payoffs over flat profiles (mixed
/// radix over `actions`, first player most significant).
#[derive(Clone, Debug)]
pub struct NGame {
    pub actions: Vec<usize>,
    pub payoff: Vec<Vec<f64>>,
}

impl NGame {
    fn flat(&self, pick: &[usize]) -> usize {
        crate::util::encode_radix(pick, &self.actions)
    }

    /// Expected payoff of player `i` for each own action against `mix`.
    pub fn action_values(&self, i: usize, mix: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.actions[i]];
        crate::rollout::odometer(&self.actions, |pick| {
            let p: f64 = (0..self.actions.len()).filter(|&k| k != i).map(|k| mix[k][pick[k]]).product();
            if p > 0.0 {
                out[pick[i]] += p * self.payoff[i][self.flat(pick)];
            }
        });
        out
    }

    pub fn regret(&self, mix: &[Vec<f64>]) -> f64 {
        (0..self.actions.len())
            .map(|i| {
                let vals = self.action_values(i, mix);
                let cur: f64 = vals.iter().zip(&mix[i]).map(|(v, p)| v * p).sum();
                vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - cur
            })
            .fold(0.0, f64::max)
    }

    /// Some equilibrium with regret at most 1e-9, or `None`.
    pub fn solve(&self, max_support: usize) -> Option<Vec<Vec<f64>>> {
        let n = self.actions.len();
        match n {
            0 => Some(vec![]),
            1 => {
                let b = crate::util::argmax(&self.payoff[0], 1e-12);
                Some(vec![crate::util::delta(self.actions[0], b)])
            }
            2 => {
                let (m, k) = (self.actions[0], self.actions[1]);
                let a = (0..m).map(|i| (0..k).map(|j| self.payoff[0][i * k + j]).collect()).collect();
                let b = (0..m).map(|i| (0..k).map(|j| self.payoff[1][i * k + j]).collect()).collect();
                let eq = Bimatrix::new(a, b).find_equilibrium(max_support)?;
                Some(vec![eq.x, eq.y])
            }
            _ => {
                let mut found = None;
                crate::rollout::odometer(&self.actions, |pick| {
                    if found.is_some() {
                        return;
                    }
                    let mix: Vec<Vec<f64>> = (0..n).map(|k| crate::util::delta(self.actions[k], pick[k])).collect();
                    if self.regret(&mix) <= 1e-12 {
                        found = Some(mix);
                    }
                });
                if found.is_some() {
                    return found;
                }
                let mut mix: Vec<Vec<f64>> = self.actions.iter().map(|&a| crate::util::uniform(a)).collect();
                for it in 0..5000 {
                    if self.regret(&mix) <= 1e-9 {
                        return Some(mix);
                    }
                    let step = 1.0 / (it as f64 + 2.0);
                    let brs: Vec<usize> = (0..n).map(|i| crate::util::argmax(&self.action_values(i, &mix), 1e-12)).collect();
                    for i in 0..n {
                        for (a, p) in mix[i].iter_mut().enumerate() {
                            *p = (1.0 - step) * *p + if a == brs[i] { step } else { 0.0 };
                        }
                    }
                }
                None
            }
        }
    }
}

/// Solves an (over)determined linear system given as augmented rows when
/// its solution is unique; `None` if rank-deficient or inconsistent.
pub fn solve_unique(mut rows: Vec<Vec<f64>>, unknowns: usize) -> Option<Vec<f64>> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..unknowns {
        let (best, val) = (r..rows.len())
            .map(|k| (k, rows[k][c].abs()))
            .fold((usize::MAX, 0.0), |acc, e| if e.1 > acc.1 { e } else { acc });
        if best == usize::MAX || val < 1e-12 {
            return None;
        }
        rows.swap(r, best);
        let p = rows[r][c];
        for v in rows[r].iter_mut() {
            *v /= p;
        }
        for k in 0..rows.len() {
            if k != r {
                let f = rows[k][c];
                if f != 0.0 {
                    for cc in 0..=unknowns {
                        rows[k][cc] -= f * rows[r][cc];
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    if rows[r..].iter().any(|row| row[unknowns].abs() > 1e-9) {
        return None;
    }
    Some((0..unknowns).map(|c| rows[c][unknowns]).collect())
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut p = k;
        loop {
            if p == 0 {
                return;
            }
            p -= 1;
            if idx[p] < n - k + p {
                idx[p] += 1;
                for q in p + 1..k {
                    idx[q] = idx[q - 1] + 1;
                }
                break;
            }
        }
    }
}

struct Tableau {
    /// rows of `[coefficients over all labels..., rhs]`
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// labels of the initial slack basis, used for lexicographic ties
    slack: Vec<usize>,
}

impl Tableau {
    /// Pivots `enter` into the basis and returns the leaving label.
    fn pivot(&mut self, enter: usize) -> Option<usize> {
        let width = self.rows[0].len();
        let rhs = width - 1;
        let mut best: Option<(usize, Vec<f64>)> = None;
        for (r, row) in self.rows.iter().enumerate() {
            let a = row[enter];
            if a <= 1e-12 {
                continue;
            }
            let key: Vec<f64> = std::iter::once(row[rhs] / a)
                .chain(self.slack.iter().map(|&c| row[c] / a))
                .collect();
            let better = match &best {
                None => true,
                Some((_, k)) => lex_less(&key, k),
            };
            if better {
                best = Some((r, key));
            }
        }
        let (r, _) = best?;
        let p = self.rows[r][enter];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (k, row) in self.rows.iter_mut().enumerate() {
            if k != r {
                let f = row[enter];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        let leaving = self.basis[r];
        self.basis[r] = enter;
        Some(leaving)
    }

    fn value(&self, label: usize) -> f64 {
        let rhs = self.rows[0].len() - 1;
        self.basis
            .iter()
            .position(|&b| b == label)
            .map_or(0.0, |r| self.rows[r][rhs])
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-12 {
            return x < y;
        }
    }
    false
}

/// Lemke-Howson path from the artificial equilibrium, dropping label `k0`.
/// Labels `0..m` are row strategies, `m..m+n` column strategies.
pub fn lemke_howson(game: &Bimatrix, k0: usize) -> Option<Equilibrium> {
    let m = game.rows();
    let n = game.cols();
    let shift = |mat: &Vec<Vec<f64>>| {
        let lo = mat.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
        1.0 - lo.min(0.0)
    };
    let sa = shift(&game.a);
    let sb = shift(&game.b);
    let width = m + n + 1;
    // Q: r_i + sum_j A'_ij y_j = 1, basis r_i (labels i)
    let mut q = Tableau {
        rows: (0..m)
            .map(|i| {
                let mut row = vec![0.0; width];
                row[i] = 1.0;
                for j in 0..n {
                    row[m + j] = game.a[i][j] + sa;
                }
                row[width - 1] = 1.0;
                row
            })
            .collect(),
        basis: (0..m).collect(),
        slack: (0..m).collect(),
    };
    // P: s_j + sum_i B'_ij x_i = 1, basis s_j (labels m+j)
    let mut p = Tableau {
        rows: (0..n)
            .map(|j| {
                let mut row = vec![0.0; width];
                row[m + j] = 1.0;
                for i in 0..m {
                    row[i] = game.b[i][j] + sb;
                }
                row[width - 1] = 1.0;
                row
            })
            .collect(),
        basis: (m..m + n).collect(),
        slack: (m..m + n).collect(),
    };
    let mut enter = k0;
    let mut in_p = k0 < m;
    for _ in 0..10_000 {
        let leaving = if in_p { p.pivot(enter)? } else { q.pivot(enter)? };
        if leaving == k0 {
            let mut x: Vec<f64> = (0..m).map(|i| p.value(i)).collect();
            let mut y: Vec<f64> = (0..n).map(|j| q.value(m + j)).collect();
            if crate::util::normalize(&mut x) <= 0.0 || crate::util::normalize(&mut y) <= 0.0 {
                return None;
            }
            return Some(Equilibrium { x, y });
        }
        enter = leaving;
        in_p = !in_p;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pennies() -> Bimatrix {
        Bimatrix::new(vec![vec![1.0, -1.0], vec![-1.0, 1.0]], vec![vec![-1.0, 1.0], vec![1.0, -1.0]])
    }

    #[test]
    fn matching_pennies_unique_mixed() {
        let g = pennies();
        let eq = g.find_equilibrium(2).unwrap();
        assert!((eq.x[0] - 0.5).abs() < 1e-12 && (eq.y[0] - 0.5).abs() < 1e-12);
        let all = g.enumerate_all(1 << 20).unwrap();
        assert_eq!(all.len(), 1);
        assert!(all[0].is_point);
        for k0 in 0..4 {
            let lh = lemke_howson(&g, k0).unwrap();
            assert!(g.regret(&lh.x, &lh.y) < 1e-12);
        }
    }

    #[test]
    fn zero_game_is_one_big_component_per_support() {
        let g = Bimatrix::new(vec![vec![0.0; 2]; 2], vec![vec![0.0; 2]; 2]);
        let all = g.enumerate_all(1 << 20).unwrap();
        assert_eq!(all.len(), 9);
        let full = all.iter().find(|c| c.rows.len() == 2 && c.cols.len() == 2).unwrap();
        assert!(!full.is_point);
    }

    #[test]
    fn lemke_howson_on_degenerate_and_random_games() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let m = rng.gen_range(1..5);
            let n = rng.gen_range(1..5);
            let mut mat = || (0..m).map(|_| (0..n).map(|_| rng.gen_range(0..3) as f64).collect()).collect::<Vec<Vec<f64>>>();
            let g = Bimatrix::new(mat(), mat());
            let eq = g.find_equilibrium(1).expect("an equilibrium exists");
            assert!(g.regret(&eq.x, &eq.y) < 1e-9, "{g:?}");
        }
    }

    #[test]
    fn subsets_in_order() {
        let mut seen = Vec::new();
        for_each_subset(4, 2, |s| seen.push(s.to_vec()));
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[0], vec![0, 1]);
        assert_eq!(seen[5], vec![2, 3]);
    }
}
