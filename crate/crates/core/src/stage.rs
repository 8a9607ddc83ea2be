//! One-stage Bayesian games at a CCI cell.
//!
//! Types of team `k` are its SPIs. Conditional on the cell, teams' private
//! information is independent, so a team's interim value depends on the
//! others only through their marginal law over `(x_t^k, u_t^k)`.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;
use std::sync::Arc;

use crate::belief::{cell_types, private_belief, Cci, TypeInfo};
use crate::coord::history::split_obs;
use crate::coord::strategy::{clean, Dist};
use crate::coord::Spaces;
use crate::model::GameSpec;
use crate::nf::NGame;
use crate::rollout::odometer;

/// Interim-gap tolerance for accepting a stage policy.
pub const GAP_TOL: f64 = 1e-9;

/// Best-response rounds of the fallback when the normal form is too large.
const FALLBACK_ITERS: usize = 300;

/// Per team, a prescription law for each SPI index.
pub type StagePolicy = Vec<BTreeMap<usize, Dist>>;

/// `V_{t+1}` rows per team for a successor `(y, u)`, dense over `S_{t+1}`.
pub type ContinuationRows = Arc<Vec<Vec<f64>>>;

/// Continuation values looked up by `(y, u)`; `None` means zero.
pub type Continuation<'a> = Option<&'a dyn Fn(usize, usize) -> ContinuationRows>;

/// One team's outcome under a (type, prescription): current state, team
/// action and next SPI.
#[derive(Clone, Copy, Debug)]
pub struct LocalOutcome {
    pub x: usize,
    pub a: usize,
    pub s_next: usize,
    pub p: f64,
}

/// Law of `(x_t^k, u_t^k)` of one team.
pub type Marginal = Vec<(usize, usize, f64)>;

pub struct StageGame<'a> {
    pub g: &'a GameSpec,
    pub spaces: &'a Spaces,
    pub b: &'a Cci,
    /// Positive-prior types per team.
    pub types: Vec<Vec<TypeInfo>>,
    cont: Continuation<'a>,
    locals: RefCell<HashMap<(usize, usize, usize), Rc<Vec<LocalOutcome>>>>,
    beliefs: RefCell<HashMap<(usize, usize), Option<Rc<Vec<(usize, f64)>>>>>,
    cont_cache: RefCell<HashMap<(usize, usize), ContinuationRows>>,
}

/// Expected reward and the law of `(y, u)`.
type Group = (f64, Vec<(usize, usize, f64)>);

/// Per own `(x, a)` groups against fixed marginals of the other teams.
pub struct Context {
    team: usize,
    groups: HashMap<(usize, usize), Rc<Group>>,
    others: Vec<Marginal>,
}

impl<'a> StageGame<'a> {
    pub fn new(g: &'a GameSpec, spaces: &'a Spaces, b: &'a Cci, cont: Continuation<'a>) -> Self {
        let types = (0..g.n_teams()).map(|k| cell_types(g, spaces, b, k)).collect();
        Self::with_types(g, spaces, b, types, cont)
    }

    pub fn with_types(g: &'a GameSpec, spaces: &'a Spaces, b: &'a Cci, types: Vec<Vec<TypeInfo>>, cont: Continuation<'a>) -> Self {
        let mut types: Vec<Vec<TypeInfo>> = types;
        for ts in types.iter_mut() {
            let total: f64 = ts.iter().map(|t| t.prob).sum();
            if total > 0.0 {
                ts.iter_mut().for_each(|t| t.prob /= total);
            }
        }
        StageGame {
            g,
            spaces,
            b,
            types,
            cont,
            locals: RefCell::new(HashMap::new()),
            beliefs: RefCell::new(HashMap::new()),
            cont_cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn n(&self) -> usize {
        self.g.n_teams()
    }

    pub fn n_presc(&self, k: usize) -> usize {
        self.spaces.presc(k, self.b.t).size
    }

    /// Private belief of team `k` at SPI `s`, `None` if inadmissible.
    pub fn belief(&self, k: usize, s: usize) -> Option<Rc<Vec<(usize, f64)>>> {
        if let Some(v) = self.beliefs.borrow().get(&(k, s)) {
            return v.clone();
        }
        let v = match self.types[k].iter().find(|t| t.spi == s) {
            Some(t) => Some(Rc::new(t.windows.clone())),
            None => private_belief(self.g, self.spaces, k, self.b.t, &self.b.ys, &self.b.us, s)
                .ok()
                .map(|pb| Rc::new(pb.into_iter().enumerate().filter(|&(_, q)| q > 0.0).collect())),
        };
        self.beliefs.borrow_mut().insert((k, s), v.clone());
        v
    }

    /// Outcomes of team `k` at SPI `s` under prescription `gamma`.
    pub fn local(&self, k: usize, s: usize, gamma: usize) -> Rc<Vec<LocalOutcome>> {
        if let Some(v) = self.locals.borrow().get(&(k, s, gamma)) {
            return v.clone();
        }
        let t = self.b.t;
        let win = self.spaces.window(k, t);
        let presc = self.spaces.presc(k, t);
        let spi_space = self.spaces.spi(k, t);
        let next_space = self.spaces.spi(k, t + 1);
        let spi = spi_space.decode(s);
        let mut acc: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        if let Some(windows) = self.belief(k, s) {
            for &(w, p) in windows.iter() {
                let a = presc.apply(gamma, w);
                let sn = next_space.encode(&self.spaces.advance(self.g, k, t, &spi, win.first(w), gamma));
                *acc.entry((win.last(w), a, sn)).or_insert(0.0) += p;
            }
        }
        let v: Rc<Vec<LocalOutcome>> = Rc::new(acc.into_iter().map(|((x, a, s_next), p)| LocalOutcome { x, a, s_next, p }).collect());
        self.locals.borrow_mut().insert((k, s, gamma), v.clone());
        v
    }

    fn continuation(&self, y: usize, u: usize) -> Option<ContinuationRows> {
        let f = self.cont?;
        if let Some(v) = self.cont_cache.borrow().get(&(y, u)) {
            return Some(v.clone());
        }
        let v = f(y, u);
        self.cont_cache.borrow_mut().insert((y, u), v.clone());
        Some(v)
    }

    /// Law of `(x, a)` of team `k` when it plays `policy` (rows by SPI).
    pub fn marginal(&self, k: usize, policy: &BTreeMap<usize, Dist>) -> Marginal {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for ty in &self.types[k] {
            let dist = policy.get(&ty.spi).cloned().unwrap_or_else(|| vec![(0, 1.0)]);
            for (gamma, pg) in dist {
                for lo in self.local(k, ty.spi, gamma).iter() {
                    *acc.entry((lo.x, lo.a)).or_insert(0.0) += ty.prob * pg * lo.p;
                }
            }
        }
        acc.into_iter().filter(|&(_, p)| p > 0.0).map(|((x, a), p)| (x, a, p)).collect()
    }

    /// Marginal of a single `(type, prescription)`.
    pub fn point_marginal(&self, k: usize, s: usize, gamma: usize) -> Marginal {
        self.local(k, s, gamma).iter().map(|lo| (lo.x, lo.a, lo.p)).collect()
    }

    /// Value context of team `i` against the others' marginals (entry `i`
    /// of `others` is ignored).
    pub fn context(&self, i: usize, others: &[Marginal]) -> Context {
        Context {
            team: i,
            groups: HashMap::new(),
            others: others.to_vec(),
        }
    }

    fn group(&self, ctx: &mut Context, x: usize, a: usize) -> Rc<Group> {
        if let Some(v) = ctx.groups.get(&(x, a)) {
            return v.clone();
        }
        let g = self.g;
        let t = self.b.t;
        let n = self.n();
        let i = ctx.team;
        let lists: Vec<Marginal> = (0..n)
            .map(|k| if k == i { vec![(x, a, 1.0)] } else { ctx.others[k].clone() })
            .collect();
        let radices: Vec<usize> = lists.iter().map(|l| l.len()).collect();
        let y_radices = g.observation_radices(t).to_vec();
        let last = t == g.horizon_t();
        let mut reward = 0.0;
        let mut q: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        odometer(&radices, |pick| {
            let mut p = 1.0;
            let mut xs = Vec::with_capacity(n);
            let mut acts = Vec::with_capacity(n);
            for k in 0..n {
                let (xk, ak, pk) = lists[k][pick[k]];
                p *= pk;
                xs.push(xk);
                acts.push(ak);
            }
            if p <= 0.0 {
                return;
            }
            let u = g.join_actions(t, &acts);
            reward += p * g.reward_at(i, t, &xs, u);
            if last || self.cont.is_none() {
                return;
            }
            odometer(&y_radices, |ys| {
                let py: f64 = (0..n).map(|k| g.obs(k, t, xs[k], u, ys[k])).product();
                if py > 0.0 {
                    *q.entry((crate::coord::history::join_obs(g, t, ys), u)).or_insert(0.0) += p * py;
                }
            });
        });
        let v = Rc::new((reward, q.into_iter().map(|((y, u), p)| (y, u, p)).collect::<Vec<_>>()));
        ctx.groups.insert((x, a), v.clone());
        v
    }

    /// Expected `r_t + V_{t+1}` of team `ctx.team` for a list of own outcomes.
    pub fn value_of(&self, ctx: &mut Context, local: &[LocalOutcome]) -> f64 {
        let i = ctx.team;
        let mut total = 0.0;
        for lo in local {
            let grp = self.group(ctx, lo.x, lo.a);
            let mut v = grp.0;
            for &(y, u, p) in &grp.1 {
                if let Some(rows) = self.continuation(y, u) {
                    v += p * rows[i][lo.s_next];
                }
            }
            total += lo.p * v;
        }
        total
    }

    /// Interim value of team `i` at SPI `s` playing `own` against `policy`.
    pub fn interim_value(&self, i: usize, s: usize, own: &Dist, policy: &StagePolicy) -> f64 {
        let others = self.marginals(policy);
        let mut ctx = self.context(i, &others);
        own.iter().map(|&(gamma, p)| p * self.value_of(&mut ctx, &self.local(i, s, gamma))).sum()
    }

    pub fn marginals(&self, policy: &StagePolicy) -> Vec<Marginal> {
        (0..self.n()).map(|k| self.marginal(k, &policy[k])).collect()
    }

    /// Values of every prescription for team `i` at SPI `s`.
    pub fn prescription_values(&self, ctx: &mut Context, s: usize) -> Vec<f64> {
        (0..self.n_presc(ctx.team))
            .map(|gamma| self.value_of(ctx, &self.local(ctx.team, s, gamma)))
            .collect()
    }

    /// Largest interim gain from a pure deviation over all listed types.
    pub fn interim_gap(&self, policy: &StagePolicy) -> f64 {
        let others = self.marginals(policy);
        let mut gap: f64 = 0.0;
        for i in 0..self.n() {
            let mut ctx = self.context(i, &others);
            for (&s, dist) in &policy[i] {
                if self.belief(i, s).is_none() {
                    continue;
                }
                let vals = self.prescription_values(&mut ctx, s);
                let cur: f64 = dist.iter().map(|&(gm, p)| p * vals[gm]).sum();
                let best = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                gap = gap.max(best - cur);
            }
        }
        gap
    }

    /// `V_t^i(b, ·)` under `policy`, dense over `S_t^i`. Inadmissible SPIs
    /// get 0.
    pub fn dp_backup(&self, policy: &StagePolicy, i: usize) -> Vec<f64> {
        let others = self.marginals(policy);
        let mut ctx = self.context(i, &others);
        let size = self.spaces.spi(i, self.b.t).size;
        (0..size)
            .map(|s| {
                if self.belief(i, s).is_none() {
                    return 0.0;
                }
                match policy[i].get(&s) {
                    Some(dist) => dist.iter().map(|&(gm, p)| p * self.value_of(&mut ctx, &self.local(i, s, gm))).sum(),
                    None => self
                        .prescription_values(&mut ctx, s)
                        .into_iter()
                        .fold(f64::NEG_INFINITY, f64::max),
                }
            })
            .collect()
    }

    /// Fills every admissible zero-prior SPI of every team with its lowest
    /// index best response.
    pub fn complete_zero_prior(&self, policy: &mut StagePolicy) {
        let others = self.marginals(policy);
        for i in 0..self.n() {
            let mut ctx = self.context(i, &others);
            for s in 0..self.spaces.spi(i, self.b.t).size {
                if policy[i].contains_key(&s) {
                    continue;
                }
                let gamma = if self.belief(i, s).is_some() {
                    crate::util::argmax(&self.prescription_values(&mut ctx, s), 1e-12)
                } else {
                    0
                };
                policy[i].insert(s, vec![(gamma, 1.0)]);
            }
        }
    }

    fn type_policy(&self, k: usize, rows: &[Vec<f64>]) -> BTreeMap<usize, Dist> {
        self.types[k]
            .iter()
            .zip(rows)
            .map(|(ty, row)| (ty.spi, clean(crate::coord::strategy::sparse(row))))
            .collect()
    }

    /// Induced normal form among `players` over type-contingent pure
    /// prescription maps, the other teams fixed at `base`. `None` when some
    /// player has more than `cap` maps or the profiles are too many.
    fn induced_normal_form(&self, players: &[usize], base: &StagePolicy, cap: usize) -> Option<(NGame, Vec<Vec<Vec<usize>>>)> {
        let n = self.n();
        let mut strategies: Vec<Vec<Vec<usize>>> = Vec::new();
        for &k in players {
            let nt = self.types[k].len();
            let np = self.n_presc(k);
            let count = crate::util::pow_capped(np, nt, cap)?;
            let radices = vec![np; nt];
            strategies.push((0..count).map(|c| crate::util::decode_vec(c, &radices)).collect());
        }
        let counts: Vec<usize> = strategies.iter().map(|s| s.len()).collect();
        let profiles = crate::util::product_capped(counts.iter().copied(), 1 << 18)?;
        let mut payoff = vec![vec![0.0; profiles]; players.len()];
        let base_marginals = self.marginals(base);
        if players.len() == 1 {
            let i = players[0];
            let mut ctx = self.context(i, &base_marginals);
            for (c, sigma) in strategies[0].iter().enumerate() {
                payoff[0][c] = self.types[i]
                    .iter()
                    .zip(sigma)
                    .map(|(ty, &gm)| ty.prob * self.value_of(&mut ctx, &self.local(i, ty.spi, gm)))
                    .sum();
            }
            return Some((NGame { actions: counts, payoff }, strategies));
        }
        // pairwise tables when the two players are the whole game
        if n == 2 && players == [0, 1] {
            for i in 0..2 {
                let o = 1 - i;
                let mut table: HashMap<(usize, usize, usize, usize), f64> = HashMap::new();
                for (bi, tb) in self.types[o].iter().enumerate() {
                    for go in 0..self.n_presc(o) {
                        let mut others = vec![vec![]; 2];
                        others[o] = self.point_marginal(o, tb.spi, go);
                        let mut ctx = self.context(i, &others);
                        for (ai, ta) in self.types[i].iter().enumerate() {
                            for gi in 0..self.n_presc(i) {
                                table.insert((ai, gi, bi, go), self.value_of(&mut ctx, &self.local(i, ta.spi, gi)));
                            }
                        }
                    }
                }
                for (c0, s0) in strategies[0].iter().enumerate() {
                    for (c1, s1) in strategies[1].iter().enumerate() {
                        let (own, oth) = if i == 0 { (s0, s1) } else { (s1, s0) };
                        let mut v = 0.0;
                        for (ai, ta) in self.types[i].iter().enumerate() {
                            for (bi, tb) in self.types[o].iter().enumerate() {
                                v += ta.prob * tb.prob * table[&(ai, own[ai], bi, oth[bi])];
                            }
                        }
                        payoff[i][c0 * counts[1] + c1] = v;
                    }
                }
            }
            return Some((NGame { actions: counts, payoff }, strategies));
        }
        let mut flat = 0;
        odometer(&counts, |pick| {
            let mut others = base_marginals.clone();
            for (pi, &k) in players.iter().enumerate() {
                let row: BTreeMap<usize, Dist> = self.types[k]
                    .iter()
                    .zip(&strategies[pi][pick[pi]])
                    .map(|(ty, &gm)| (ty.spi, vec![(gm, 1.0)]))
                    .collect();
                others[k] = self.marginal(k, &row);
            }
            for (pi, &i) in players.iter().enumerate() {
                let mut ctx = self.context(i, &others);
                payoff[pi][flat] = self.types[i]
                    .iter()
                    .zip(&strategies[pi][pick[pi]])
                    .map(|(ty, &gm)| ty.prob * self.value_of(&mut ctx, &self.local(i, ty.spi, gm)))
                    .sum();
            }
            flat += 1;
        });
        Some((NGame { actions: counts, payoff }, strategies))
    }

    /// Mixed equilibrium of the induced normal form among `players`,
    /// written back into a copy of `base`.
    fn solve_normal_form(&self, players: &[usize], base: &StagePolicy, cap: usize) -> Option<StagePolicy> {
        let (game, strategies) = self.induced_normal_form(players, base, cap)?;
        let mix = game.solve(3)?;
        let mut policy = base.clone();
        for (pi, &k) in players.iter().enumerate() {
            let np = self.n_presc(k);
            let mut rows = vec![vec![0.0; np]; self.types[k].len()];
            for (c, &w) in mix[pi].iter().enumerate() {
                for (ti, &gm) in strategies[pi][c].iter().enumerate() {
                    rows[ti][gm] += w;
                }
            }
            policy[k] = self.type_policy(k, &rows);
        }
        Some(policy)
    }

    /// Equilibrium of the stage game among `players` with the other teams
    /// held at `base`, audited for the players' positive-prior types.
    pub fn solve_subgame(&self, players: &[usize], base: &StagePolicy, nf_cap: usize) -> Option<StagePolicy> {
        let policy = self.solve_normal_form(players, base, nf_cap)?;
        let others = self.marginals(&policy);
        for &i in players {
            let mut ctx = self.context(i, &others);
            for (&s, dist) in &policy[i] {
                let vals = self.prescription_values(&mut ctx, s);
                let cur: f64 = dist.iter().map(|&(gm, p)| p * vals[gm]).sum();
                if vals.iter().any(|&v| v > cur + GAP_TOL) {
                    return None;
                }
            }
        }
        Some(policy)
    }

    /// Damped best-response iteration on positive-prior types, audited.
    fn iterate(&self, start: &StagePolicy, iters: usize) -> (StagePolicy, f64) {
        let n = self.n();
        let mut dense: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|k| {
                let np = self.n_presc(k);
                self.types[k]
                    .iter()
                    .map(|ty| {
                        let d = start[k].get(&ty.spi).cloned().unwrap_or_else(|| vec![(0, 1.0)]);
                        crate::coord::strategy::dense(&d, np)
                    })
                    .collect()
            })
            .collect();
        let to_policy = |dense: &Vec<Vec<Vec<f64>>>| -> StagePolicy { (0..n).map(|k| self.type_policy(k, &dense[k])).collect() };
        let mut best = (to_policy(&dense), f64::INFINITY);
        for it in 0..iters {
            let policy = to_policy(&dense);
            let others = self.marginals(&policy);
            let mut gap: f64 = 0.0;
            let mut brs = Vec::with_capacity(n);
            for i in 0..n {
                let mut ctx = self.context(i, &others);
                let mut rows = Vec::new();
                for (ti, ty) in self.types[i].iter().enumerate() {
                    let vals = self.prescription_values(&mut ctx, ty.spi);
                    let cur: f64 = dense[i][ti].iter().zip(&vals).map(|(p, v)| p * v).sum();
                    let b = crate::util::argmax(&vals, 1e-12);
                    gap = gap.max(vals[b] - cur);
                    rows.push(b);
                }
                brs.push(rows);
            }
            if gap < best.1 {
                best = (policy, gap);
            }
            if gap <= GAP_TOL {
                break;
            }
            let step = 1.0 / (it as f64 + 2.0);
            for i in 0..n {
                for (ti, &b) in brs[i].iter().enumerate() {
                    for (gm, p) in dense[i][ti].iter_mut().enumerate() {
                        *p = (1.0 - step) * *p + if gm == b { step } else { 0.0 };
                    }
                }
            }
        }
        best
    }

    /// Stage equilibrium on all admissible types, or `None` if the search
    /// fails. `start` seeds the iterative fallback.
    pub fn solve_ibne(&self, nf_cap: usize, start: Option<&StagePolicy>) -> Option<StagePolicy> {
        let n = self.n();
        let players: Vec<usize> = (0..n).collect();
        let empty: StagePolicy = (0..n).map(|_| BTreeMap::new()).collect();
        let policy = self.solve_normal_form(&players, &empty, nf_cap);
        let mut policy = match policy {
            Some(p) => p,
            None => {
                let init: StagePolicy = start.cloned().unwrap_or(empty);
                let (p, gap) = self.iterate(&init, FALLBACK_ITERS);
                if gap > GAP_TOL {
                    return None;
                }
                p
            }
        };
        self.complete_zero_prior(&mut policy);
        if self.interim_gap(&policy) > GAP_TOL {
            return None;
        }
        Some(policy)
    }
}

/// Other-team observation of a joint observation (convenience for callers).
pub fn team_obs(g: &GameSpec, t: crate::model::Time, y: usize, k: usize) -> usize {
    split_obs(g, t, y)[k]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtins;

    #[test]
    fn terminal_stage_value_is_reward() {
        // nonexistence at t = 3 with belief (1/3, 2/3) over Alice's state
        let g = builtins::nonexistence(0.1);
        let sp = Spaces::new(&g, false, 1 << 20).unwrap();
        let b = Cci {
            t: 3,
            pi: vec![vec![1.0 / 3.0, 2.0 / 3.0], vec![1.0]],
            ys: vec![],
            us: vec![0],
        };
        let stage = StageGame::new(&g, &sp, &b, None);
        let bob = |gamma: usize| -> StagePolicy { vec![BTreeMap::from([(0, vec![(0, 1.0)]), (1, vec![(0, 1.0)])]), BTreeMap::from([(0, vec![(gamma, 1.0)])])] };
        // Bob's values: L -> -2 pi(+1), R -> -(1 - pi(+1)) with pi(+1) = 2/3
        let v_l = stage.interim_value(1, 0, &vec![(0, 1.0)], &bob(0));
        let v_r = stage.interim_value(1, 0, &vec![(1, 1.0)], &bob(0));
        assert!((v_l + 4.0 / 3.0).abs() < 1e-12);
        assert!((v_r + 1.0 / 3.0).abs() < 1e-12);
        // x_3 = +1 and L gives Alice 2
        let va = stage.interim_value(0, 1, &vec![(0, 1.0)], &bob(0));
        assert!((va - 2.0).abs() < 1e-12);
        let eq = stage.solve_ibne(64, None).unwrap();
        assert_eq!(eq[1][&0], vec![(1, 1.0)]);
    }

    #[test]
    fn indifference_at_one_third() {
        let g = builtins::nonexistence(0.1);
        let sp = Spaces::new(&g, false, 1 << 20).unwrap();
        let b = Cci {
            t: 3,
            pi: vec![vec![2.0 / 3.0, 1.0 / 3.0], vec![1.0]],
            ys: vec![],
            us: vec![0],
        };
        let stage = StageGame::new(&g, &sp, &b, None);
        let alice = BTreeMap::from([(0, vec![(0, 1.0)]), (1, vec![(0, 1.0)])]);
        let p = vec![alice, BTreeMap::new()];
        let v_l = stage.interim_value(1, 0, &vec![(0, 1.0)], &p);
        let v_r = stage.interim_value(1, 0, &vec![(1, 1.0)], &p);
        assert!((v_l - v_r).abs() < 1e-12);
        assert!((v_l + 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_reward_any_policy_is_equilibrium() {
        let g = builtins::nonexistence(0.1);
        let mut z = g.clone();
        for i in 0..2 {
            for r in z.reward[i].iter_mut() {
                r.data.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        let sp = Spaces::new(&z, false, 1 << 20).unwrap();
        let b = Cci::initial(&z, &sp);
        let stage = StageGame::new(&z, &sp, &b, None);
        let uniform: StagePolicy = vec![BTreeMap::from([(0, (0..4).map(|k| (k, 0.25)).collect())]), BTreeMap::from([(0, vec![(0, 1.0)])])];
        assert_eq!(stage.interim_gap(&uniform), 0.0);
        assert_eq!(stage.dp_backup(&uniform, 0), vec![0.0]);
    }
}
