//! Sequential decomposition over CCI cells.
//!
//! Cells are solved recursively from the initial CCI. At each cell a stage
//! policy is guessed, the successor beliefs are computed from it, the
//! successor cells are solved, and the guess is accepted once it is an
//! interim equilibrium of the stage game those continuations induce.
//! Otherwise the stage game is re-solved and the guess is moved toward the
//! new solution.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::certify::{certify_nonexistence_tiny, Certification, Violation};
use super::{BeliefSpace, Cell, CibSolution, Mode, Residuals, Successor};
use crate::belief::{cell_types, update_or_complete, Cci, CciKey, OffPathPolicy, TypeInfo, CCI_GRID};
use crate::coord::history::join_obs;
use crate::coord::strategy::{clean, dense, sparse, Dist};
use crate::coord::Spaces;
use crate::error::{budget, Budgets, Error, Result};
use crate::model::graph::{dependency_graph, is_public_team};
use crate::model::{GameSpec, Time};
use crate::rollout::odometer;
use crate::stage::{ContinuationRows, StageGame, StagePolicy, GAP_TOL};
use crate::util::max_abs_diff;
use crate::verify::nash_gap;

#[derive(Clone, Debug)]
pub struct CibConfig {
    /// Guesses tried per cell and restart.
    pub max_outer_iters: usize,
    /// Weight kept on the previous guess when moving toward a new stage
    /// solution.
    pub damping: f64,
    /// Extra attempts per cell from random stage policies.
    pub restarts: usize,
    /// Cap on guesses over all cells.
    pub max_total_iters: usize,
    pub seed: u64,
    pub offpath_policy: OffPathPolicy,
    pub budgets: Budgets,
    /// Run the verifier on a found solution.
    pub verify: bool,
    /// Run tiny-game certification when no fixed point is found.
    pub diagnose: bool,
}

impl Default for CibConfig {
    fn default() -> Self {
        CibConfig {
            max_outer_iters: 40,
            damping: 0.5,
            restarts: 20,
            max_total_iters: 20_000,
            seed: 0,
            offpath_policy: OffPathPolicy::Uniform,
            budgets: Budgets::default(),
            verify: true,
            diagnose: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageResidual {
    pub t: Time,
    /// Smallest interim gap reached at any failed cell of this stage.
    pub best_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffendingCell {
    pub cci: Cci,
    pub best_residual: f64,
}

/// Where measurability breaks for the game's equilibria, from exhaustive
/// enumeration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obstruction {
    pub t: Time,
    /// Every equilibrium was enumerated, each is rigid and each violates.
    pub certified: bool,
    pub violations: Vec<Violation>,
}

/// The iteration found no CCI-based equilibrium. This is not a proof that
/// none exists; only [`Obstruction::certified`] is.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoFixedPointReport {
    pub spec_hash: String,
    pub mode: Mode,
    pub stage_residuals: Vec<StageResidual>,
    pub offending_cells: Vec<OffendingCell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_exhausted: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obstruction: Option<Obstruction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<String>,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum CibOutcome {
    Solved(Box<CibSolution>),
    NoFixedPoint(Box<NoFixedPointReport>),
}

enum Stop {
    Fail,
    Err(Error),
}

impl From<Error> for Stop {
    fn from(e: Error) -> Self {
        Stop::Err(e)
    }
}

enum StageStep {
    /// Full stage equilibrium, damped.
    General,
    /// Node by node along the components in topological order.
    Layered(Vec<Vec<usize>>),
}

struct Link {
    y: usize,
    u: usize,
    next: CciKey,
    on_path: Vec<bool>,
    deviation: f64,
}

struct Record {
    cci: Cci,
    policy: StagePolicy,
    links: Vec<Link>,
    values: ContinuationRows,
    gap: f64,
}

struct Solver<'a> {
    g: &'a GameSpec,
    spaces: &'a Spaces,
    cfg: &'a CibConfig,
    step: StageStep,
    done: HashMap<CciKey, Record>,
    failed: BTreeMap<CciKey, (Cci, f64)>,
    rng: ChaCha8Rng,
    iterations: usize,
}

fn rows_of(policy: &BTreeMap<usize, Dist>, s: usize) -> Dist {
    policy.get(&s).cloned().unwrap_or_else(|| vec![(0, 1.0)])
}

/// Keeps only the rows of positive-prior types.
fn restrict(policy: &StagePolicy, types: &[Vec<TypeInfo>]) -> StagePolicy {
    types
        .iter()
        .enumerate()
        .map(|(k, ts)| ts.iter().map(|ty| (ty.spi, rows_of(&policy[k], ty.spi))).collect())
        .collect()
}

impl<'a> Solver<'a> {
    fn new(g: &'a GameSpec, spaces: &'a Spaces, cfg: &'a CibConfig, step: StageStep) -> Self {
        Solver {
            g,
            spaces,
            cfg,
            step,
            done: HashMap::new(),
            failed: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            iterations: 0,
        }
    }

    /// Every `(y, u)` some play can produce from the cell.
    fn outcomes(&self, b: &Cci, types: &[Vec<TypeInfo>]) -> Vec<(usize, usize)> {
        let g = self.g;
        let t = b.t;
        if t >= g.horizon_t() {
            return vec![];
        }
        let states: Vec<BTreeSet<usize>> = types
            .iter()
            .enumerate()
            .map(|(k, ts)| {
                let win = self.spaces.window(k, t);
                ts.iter().flat_map(|ty| ty.windows.iter().map(|&(w, _)| win.last(w))).collect()
            })
            .collect();
        let mut out = Vec::new();
        for u in 0..g.joint_actions(t) {
            let per: Vec<Vec<usize>> = states
                .iter()
                .enumerate()
                .map(|(k, xs)| {
                    (0..g.observations(k, t))
                        .filter(|&y| xs.iter().any(|&x| g.obs(k, t, x, u, y) > 0.0))
                        .collect()
                })
                .collect();
            let radices: Vec<usize> = per.iter().map(|v| v.len()).collect();
            odometer(&radices, |pick| {
                let ys: Vec<usize> = pick.iter().enumerate().map(|(k, &c)| per[k][c]).collect();
                out.push((join_obs(g, t, &ys), u));
            });
        }
        out.sort_unstable();
        out
    }

    fn uniform_policy(&self, t: Time, types: &[Vec<TypeInfo>]) -> StagePolicy {
        types
            .iter()
            .enumerate()
            .map(|(k, ts)| {
                let n = self.spaces.presc(k, t).size;
                let row: Dist = (0..n).map(|gm| (gm, 1.0 / n as f64)).collect();
                ts.iter().map(|ty| (ty.spi, row.clone())).collect()
            })
            .collect()
    }

    fn random_policy(&mut self, t: Time, types: &[Vec<TypeInfo>]) -> StagePolicy {
        let mut out = Vec::with_capacity(types.len());
        for (k, ts) in types.iter().enumerate() {
            let n = self.spaces.presc(k, t).size;
            let mut rows = BTreeMap::new();
            for ty in ts {
                let row = if self.rng.gen_bool(0.5) {
                    vec![(self.rng.gen_range(0..n), 1.0)]
                } else {
                    let mut w: Vec<f64> = (0..n).map(|_| -self.rng.gen::<f64>().max(1e-300).ln()).collect();
                    crate::util::normalize(&mut w);
                    sparse(&w)
                };
                rows.insert(ty.spi, row);
            }
            out.push(rows);
        }
        out
    }

    fn damp(&self, t: Time, old: &StagePolicy, new: &StagePolicy) -> StagePolicy {
        let keep = self.cfg.damping;
        old.iter()
            .zip(new)
            .enumerate()
            .map(|(k, (o, nw))| {
                let n = self.spaces.presc(k, t).size;
                o.keys()
                    .map(|&s| {
                        let a = dense(&rows_of(o, s), n);
                        let b = dense(&rows_of(nw, s), n);
                        let mixed: Vec<f64> = a.iter().zip(&b).map(|(x, y)| keep * x + (1.0 - keep) * y).collect();
                        (s, clean(sparse(&mixed)))
                    })
                    .collect()
            })
            .collect()
    }

    fn successors(&mut self, b: &Cci, types: &[Vec<TypeInfo>], lam: &StagePolicy, outcomes: &[(usize, usize)]) -> std::result::Result<Vec<Link>, Stop> {
        let n = self.g.n_teams();
        let mut out = Vec::with_capacity(outcomes.len());
        for &(y, u) in outcomes {
            let mut pi = Vec::with_capacity(n);
            let mut on_path = Vec::with_capacity(n);
            for k in 0..n {
                let row = &lam[k];
                let f = |s: usize| rows_of(row, s);
                let (v, on) = update_or_complete(self.cfg.offpath_policy, self.g, self.spaces, b, k, &types[k], &f, y, u);
                pi.push(v);
                on_path.push(on);
            }
            let child = b.successor(pi, y, u);
            let next = self.solve_cell(child.clone())?;
            let stored = &self.done[&next].cci;
            let deviation = child.pi.iter().zip(&stored.pi).map(|(a, c)| max_abs_diff(a, c)).fold(0.0, f64::max);
            out.push(Link {
                y,
                u,
                next,
                on_path,
                deviation,
            });
        }
        Ok(out)
    }

    /// One pass over the dependency components: single teams best-respond
    /// per type, groups of public teams solve their joint stage game.
    fn layered_pass(&self, stage: &StageGame, lam: &StagePolicy, order: &[Vec<usize>]) -> Option<StagePolicy> {
        let mut pol = lam.clone();
        for comp in order {
            if let [i] = comp[..] {
                let others = stage.marginals(&pol);
                let mut ctx = stage.context(i, &others);
                pol[i] = stage.types[i]
                    .iter()
                    .map(|ty| {
                        let vals = stage.prescription_values(&mut ctx, ty.spi);
                        (ty.spi, vec![(crate::util::argmax(&vals, 1e-12), 1.0)])
                    })
                    .collect();
            } else {
                pol = stage.solve_subgame(comp, &pol, self.cfg.budgets.normal_form)?;
            }
        }
        Some(pol)
    }

    fn solve_cell(&mut self, b: Cci) -> std::result::Result<CciKey, Stop> {
        let key = b.key();
        if self.done.contains_key(&key) {
            return Ok(key);
        }
        if self.failed.contains_key(&key) {
            return Err(Stop::Fail);
        }
        let cap = self.cfg.budgets.cells;
        if self.done.len() + self.failed.len() >= cap {
            return Err(Stop::Err(budget("CCI cells", "more", cap)));
        }
        let (g, spaces) = (self.g, self.spaces);
        let n = g.n_teams();
        let t = b.t;
        let types: Vec<Vec<TypeInfo>> = (0..n).map(|k| cell_types(g, spaces, &b, k)).collect();
        let outcomes = self.outcomes(&b, &types);
        let restarts = match self.step {
            StageStep::General => self.cfg.restarts,
            StageStep::Layered(_) => 0,
        };
        let mut best = f64::INFINITY;
        for restart in 0..=restarts {
            let mut lam = if restart == 0 {
                self.uniform_policy(t, &types)
            } else {
                self.random_policy(t, &types)
            };
            for it in 0..self.cfg.max_outer_iters {
                if self.iterations >= self.cfg.max_total_iters {
                    return Err(Stop::Err(budget("stage guesses", "more", self.cfg.max_total_iters)));
                }
                self.iterations += 1;
                let links = match self.successors(&b, &types, &lam, &outcomes) {
                    Ok(l) => l,
                    Err(Stop::Fail) => break,
                    Err(e) => return Err(e),
                };
                let rows: HashMap<(usize, usize), ContinuationRows> =
                    links.iter().map(|l| ((l.y, l.u), self.done[&l.next].values.clone())).collect();
                let zero: ContinuationRows = Arc::new((0..n).map(|k| vec![0.0; spaces.spi(k, (t + 1).min(g.horizon_t() + 1)).size]).collect());
                let cont = move |y: usize, u: usize| rows.get(&(y, u)).cloned().unwrap_or_else(|| zero.clone());
                let stage = StageGame::with_types(g, spaces, &b, types.clone(), if outcomes.is_empty() { None } else { Some(&cont) });
                let mut full = lam.clone();
                stage.complete_zero_prior(&mut full);
                let gap = stage.interim_gap(&full);
                best = best.min(gap);
                if gap <= GAP_TOL {
                    let values = Arc::new((0..n).map(|i| stage.dp_backup(&full, i)).collect());
                    self.done.insert(
                        key.clone(),
                        Record {
                            cci: b,
                            policy: full,
                            links,
                            values,
                            gap: gap.max(0.0),
                        },
                    );
                    return Ok(key);
                }
                let next = match &self.step {
                    StageStep::General => stage.solve_ibne(self.cfg.budgets.normal_form, Some(&lam)),
                    StageStep::Layered(order) => self.layered_pass(&stage, &lam, order),
                };
                let Some(next) = next else { break };
                let next = restrict(&next, &types);
                lam = match self.step {
                    StageStep::General if it >= 2 => self.damp(t, &lam, &next),
                    _ => next,
                };
            }
        }
        self.failed.insert(key, (b, best));
        Err(Stop::Fail)
    }

    fn assemble(&self, root: &CciKey, mode: Mode) -> CibSolution {
        let mut order = vec![root.clone()];
        let mut index: HashMap<CciKey, usize> = HashMap::from([(root.clone(), 0)]);
        let mut queue = VecDeque::from([root.clone()]);
        while let Some(k) = queue.pop_front() {
            for l in &self.done[&k].links {
                if !index.contains_key(&l.next) {
                    index.insert(l.next.clone(), order.len());
                    order.push(l.next.clone());
                    queue.push_back(l.next.clone());
                }
            }
        }
        let mut residuals = Residuals {
            iterations: self.iterations,
            cells_visited: self.done.len() + self.failed.len(),
            ..Residuals::default()
        };
        let cells = order
            .iter()
            .map(|k| {
                let r = &self.done[k];
                residuals.max_gap = residuals.max_gap.max(r.gap);
                let successors = r
                    .links
                    .iter()
                    .map(|l| {
                        residuals.max_consistency = residuals.max_consistency.max(l.deviation);
                        Successor {
                            y: l.y,
                            u: l.u,
                            next: index[&l.next],
                            on_path: l.on_path.clone(),
                        }
                    })
                    .collect();
                Cell {
                    key: k.clone(),
                    cci: r.cci.clone(),
                    policy: r.policy.iter().map(|rows| rows.iter().map(|(&s, d)| (s, d.clone())).collect()).collect(),
                    successors,
                    values: r.values.as_ref().clone(),
                    gap: r.gap,
                }
            })
            .collect();
        CibSolution {
            spec_hash: crate::model::spec_hash(self.g),
            mode,
            belief_space: BeliefSpace::Spi,
            offpath_policy: Some(self.cfg.offpath_policy),
            simple_mode: self.spaces.simple,
            cell_radius: CCI_GRID,
            cells,
            residuals,
            verifier_report: None,
        }
    }

    fn report(&self, mode: Mode) -> NoFixedPointReport {
        let mut stages: BTreeMap<Time, f64> = BTreeMap::new();
        for (b, r) in self.failed.values() {
            let e = stages.entry(b.t).or_insert(f64::INFINITY);
            *e = e.min(*r);
        }
        let mut offending: Vec<OffendingCell> = self
            .failed
            .values()
            .map(|(b, r)| OffendingCell {
                cci: b.clone(),
                best_residual: *r,
            })
            .collect();
        offending.sort_by_key(|a| a.cci.t);
        NoFixedPointReport {
            spec_hash: crate::model::spec_hash(self.g),
            mode,
            stage_residuals: stages.into_iter().map(|(t, best_residual)| StageResidual { t, best_residual }).collect(),
            offending_cells: offending,
            budget_exhausted: None,
            obstruction: None,
            diagnosis: None,
            iterations: self.iterations,
        }
    }
}

/// Enumeration-based diagnosis of a failed search.
fn diagnose(g: &GameSpec, spaces: &Spaces, budgets: Budgets, report: &mut NoFixedPointReport) -> Result<()> {
    match certify_nonexistence_tiny(g, spaces, budgets)? {
        Certification::CertifiedNone { violations, .. } => {
            let t = violations.iter().map(|v| v.t).min().unwrap_or(0);
            report.diagnosis = Some(format!(
                "every equilibrium violates CCI measurability; the first violation is at t={t}"
            ));
            report.obstruction = Some(Obstruction {
                t,
                certified: true,
                violations,
            });
        }
        Certification::Found { .. } => {
            report.diagnosis = Some("a CCI-measurable equilibrium exists; the search missed it".into());
        }
        Certification::Inconclusive { reason } => {
            report.diagnosis = Some(format!("enumeration inconclusive: {reason}"));
        }
    }
    Ok(())
}

fn run(g: &GameSpec, spaces: &Spaces, cfg: &CibConfig, step: StageStep, mode: Mode) -> Result<CibOutcome> {
    let mut solver = Solver::new(g, spaces, cfg, step);
    match solver.solve_cell(Cci::initial(g, spaces)) {
        Ok(root) => {
            let mut sol = solver.assemble(&root, mode);
            if cfg.verify {
                sol.verifier_report = Some(nash_gap(g, spaces, &sol.profile(), cfg.budgets)?);
            }
            Ok(CibOutcome::Solved(Box::new(sol)))
        }
        Err(Stop::Err(e @ Error::Budget { .. })) => {
            let mut report = solver.report(mode);
            report.budget_exhausted = Some(e.to_string());
            Ok(CibOutcome::NoFixedPoint(Box::new(report)))
        }
        Err(Stop::Err(e)) => Err(e),
        Err(Stop::Fail) => {
            let mut report = solver.report(mode);
            if cfg.diagnose && g.n_teams() == 2 {
                diagnose(g, spaces, cfg.budgets, &mut report)?;
            }
            Ok(CibOutcome::NoFixedPoint(Box::new(report)))
        }
    }
}

/// CCI-based equilibrium by sequential decomposition over reachable cells.
pub fn solve_cib(g: &GameSpec, spaces: &Spaces, cfg: &CibConfig) -> Result<CibOutcome> {
    run(g, spaces, cfg, StageStep::General, Mode::Cib)
}

/// Node-by-node construction for games whose dependency components are
/// single teams or groups of public teams (delay one).
pub fn solve_layered(g: &GameSpec, spaces: &Spaces, cfg: &CibConfig) -> Result<CibOutcome> {
    if g.delay != 1 {
        return Err(Error::NotApplicable(format!("layered solver needs delay 1, spec has {}", g.delay)));
    }
    let dg = dependency_graph(g);
    if let Some(comp) = dg
        .components
        .iter()
        .find(|c| c.len() > 1 && !c.iter().all(|&i| is_public_team(g, i)))
    {
        let names: Vec<&str> = comp.iter().map(|&i| g.teams[i].name.as_str()).collect();
        return Err(Error::NotApplicable(format!(
            "component {{{}}} has several teams and not all are public",
            names.join(", ")
        )));
    }
    run(g, spaces, cfg, StageStep::Layered(dg.components), Mode::Layered)
}
