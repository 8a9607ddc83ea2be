//! Search for an equilibrium in strategies of the form `ρ_t(h0, s)`.
//!
//! Each team's best response is the exact dynamic program over `(h0, s)`,
//! restricted to strategies that give every prescription at least `ε`.
//! Profiles are averaged toward the restricted best responses while `ε`
//! decreases. For tiny two-team games the enumerated equilibria, projected
//! onto `(h0, s)`, are offered as further candidates; the candidate with
//! the smallest measured gap is returned.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::cib::{solve_cib, CibConfig, CibOutcome};
use super::Mode;
use crate::coord::strategy::{clean, dense, sparse, CoordinationStrategy, Dist, Profile, SpibTable, TeamView};
use crate::coord::{CommonHistory, Spaces};
use crate::error::{budget, Budgets, Error, Result};
use crate::model::GameSpec;
use crate::verify::filter::{Nodes, TeamFilter};
use crate::verify::{bne_enumerate_tiny, constrained_best_response, nash_gap, NashCertificate};

/// Gap at which a profile is accepted without further search.
const ACCEPT_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct SpibConfig {
    pub eps_schedule: Vec<f64>,
    pub iters_per_eps: usize,
    /// Scale of the averaging step `damping / (k + 2)`.
    pub damping: f64,
    pub seed: u64,
    pub restarts: usize,
    pub budgets: Budgets,
    /// Offer projected enumerated equilibria of tiny two-team games.
    pub polish: bool,
}

impl Default for SpibConfig {
    fn default() -> Self {
        SpibConfig {
            eps_schedule: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            iters_per_eps: 30,
            damping: 1.0,
            seed: 0,
            restarts: 2,
            budgets: Budgets::default(),
            polish: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpibSource {
    /// The averaged iterate.
    Iteration,
    /// Simultaneous unrestricted best responses to the iterate.
    BestResponse,
    /// A projected enumerated equilibrium.
    Enumeration,
    /// A tabulated CCI-based solution.
    Cib,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpibStep {
    pub restart: usize,
    pub eps: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpibSolution {
    pub spec_hash: String,
    pub mode: Mode,
    pub simple_mode: bool,
    pub source: SpibSource,
    pub profile: Vec<SpibTable>,
    pub schedule: Vec<SpibStep>,
    pub verifier_report: NashCertificate,
}

impl SpibSolution {
    pub fn strategies(&self) -> Profile {
        as_profile(&self.profile)
    }
}

fn as_profile(tables: &[SpibTable]) -> Profile {
    tables.iter().map(|t| Arc::new(t.clone()) as Arc<dyn CoordinationStrategy>).collect()
}

/// Dense rows on listed cells, uniform elsewhere.
#[derive(Clone)]
struct Iterate {
    rows: BTreeMap<(CommonHistory, usize), Vec<f64>>,
    sizes: Vec<usize>,
}

impl Iterate {
    fn uniform(spaces: &Spaces, team: usize) -> Self {
        Iterate {
            rows: BTreeMap::new(),
            sizes: spaces.presc[team].iter().map(|p| p.size).collect(),
        }
    }

    fn row(&self, h0: &CommonHistory, s: usize) -> Vec<f64> {
        self.rows
            .get(&(h0.clone(), s))
            .cloned()
            .unwrap_or_else(|| crate::util::uniform(self.sizes[h0.t() as usize - 1]))
    }

    /// Moves every cell of `target` a fraction `step` toward it.
    fn blend(&mut self, target: &SpibTable, step: f64) {
        for ((h0, s), dist) in &target.table {
            let n = self.sizes[h0.t() as usize - 1];
            let cur = self.row(h0, *s);
            let tgt = dense(dist, n);
            let mixed = cur.iter().zip(&tgt).map(|(a, b)| (1.0 - step) * a + step * b).collect();
            self.rows.insert((h0.clone(), *s), mixed);
        }
    }

    fn table(&self) -> SpibTable {
        SpibTable {
            table: self.rows.iter().map(|(k, v)| (k.clone(), clean(sparse(v)))).collect(),
        }
    }
}

impl CoordinationStrategy for Iterate {
    fn dist(&self, view: &TeamView) -> Dist {
        sparse(&self.row(view.h0, view.spi_index))
    }

    fn uses_private_history(&self) -> bool {
        false
    }
}

fn iterate_profile(its: &[Iterate]) -> Profile {
    its.iter().map(|t| Arc::new(t.clone()) as Arc<dyn CoordinationStrategy>).collect()
}

struct Candidate {
    source: SpibSource,
    tables: Vec<SpibTable>,
    cert: NashCertificate,
}

struct Search<'a> {
    g: &'a GameSpec,
    spaces: &'a Spaces,
    cfg: &'a SpibConfig,
    best: Option<Candidate>,
    schedule: Vec<SpibStep>,
}

impl Search<'_> {
    fn offer(&mut self, source: SpibSource, tables: Vec<SpibTable>) -> Result<f64> {
        let cert = nash_gap(self.g, self.spaces, &as_profile(&tables), self.cfg.budgets)?;
        let gap = cert.epsilon;
        if self.best.as_ref().is_none_or(|b| gap < b.cert.epsilon) {
            self.best = Some(Candidate { source, tables, cert });
        }
        Ok(gap)
    }

    fn best_gap(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.cert.epsilon)
    }

    fn run_schedule(&mut self, restart: usize, mut its: Vec<Iterate>) -> Result<()> {
        let (g, spaces, cap) = (self.g, self.spaces, self.cfg.budgets.cells);
        let n = g.n_teams();
        for &eps in &self.cfg.eps_schedule {
            for k in 0..self.cfg.iters_per_eps {
                let profile = iterate_profile(&its);
                let brs = (0..n)
                    .map(|i| constrained_best_response(g, spaces, &profile, i, eps, cap))
                    .collect::<Result<Vec<_>>>()?;
                let step = (self.cfg.damping / (k as f64 + 2.0)).min(1.0);
                for (it, br) in its.iter_mut().zip(&brs) {
                    it.blend(&br.strategy, step);
                }
            }
            let tables: Vec<SpibTable> = its.iter().map(|t| t.table()).collect();
            let gap = self.offer(SpibSource::Iteration, tables)?;
            self.schedule.push(SpibStep { restart, eps, gap });
        }
        let profile = iterate_profile(&its);
        let brs = (0..n)
            .map(|i| constrained_best_response(g, spaces, &profile, i, 0.0, cap).map(|b| b.strategy))
            .collect::<Result<Vec<_>>>()?;
        self.offer(SpibSource::BestResponse, brs)?;
        Ok(())
    }

    /// Restart point: each team's restricted best response to a
    /// pseudo-random profile.
    fn random_start(&self, restart: usize) -> Result<Vec<Iterate>> {
        let seed = self.cfg.seed.wrapping_mul(0x9e37_79b9).wrapping_add(restart as u64);
        let random = crate::reference::random_profile(self.g, self.spaces, seed, false);
        (0..self.g.n_teams())
            .map(|i| {
                let br = constrained_best_response(self.g, self.spaces, &random, i, 0.1, self.cfg.budgets.cells)?;
                let mut it = Iterate::uniform(self.spaces, i);
                it.blend(&br.strategy, 1.0);
                Ok(it)
            })
            .collect()
    }
}

/// Law of the prescription given `(h0, s)` of a team's strategy, on every
/// common history the team's own play allows.
pub fn project_to_spib(g: &GameSpec, spaces: &Spaces, team: usize, strategy: &dyn CoordinationStrategy, cap: usize) -> Result<SpibTable> {
    let filter = TeamFilter::new(g, spaces, team, strategy);
    let mut table = BTreeMap::new();
    let mut stack: Vec<(CommonHistory, Nodes)> = vec![(CommonHistory::new(), filter.initial())];
    while let Some((h0, nodes)) = stack.pop() {
        let t = h0.t();
        let presc = spaces.presc(team, t);
        let spi = spaces.spi(team, t);
        let mut acc: HashMap<usize, Vec<f64>> = HashMap::new();
        for (node, &p) in &nodes {
            let row = acc.entry(spi.encode(&node.spi)).or_insert_with(|| vec![0.0; presc.size]);
            for (gamma, q) in filter.dist(t, &h0, node) {
                row[gamma] += p * q;
            }
        }
        for (s, mut row) in acc {
            crate::util::normalize(&mut row);
            table.insert((h0.clone(), s), clean(sparse(&row)));
        }
        if table.len() > cap {
            return Err(budget("projected SPIB cells", "more", cap));
        }
        if t == g.horizon_t() {
            continue;
        }
        for u in 0..g.joint_actions(t) {
            for y in 0..crate::coord::history::joint_obs_count(g, t) {
                if let Some(next) = filter.update(t, &h0, &nodes, y, u) {
                    stack.push((h0.extended(y, u), next));
                }
            }
        }
    }
    Ok(SpibTable { table })
}

/// Best `(h0, s)`-based profile found, with its verifier report.
pub fn solve_spib(g: &GameSpec, spaces: &Spaces, cfg: &SpibConfig) -> Result<SpibSolution> {
    if cfg.eps_schedule.iter().any(|&e| !(0.0..1.0).contains(&e)) {
        return Err(Error::InvalidArgument("epsilon schedule entries must lie in [0, 1)".into()));
    }
    let mut search = Search {
        g,
        spaces,
        cfg,
        best: None,
        schedule: Vec::new(),
    };
    let start: Vec<Iterate> = (0..g.n_teams()).map(|i| Iterate::uniform(spaces, i)).collect();
    // the uniform profile, listed on the cells every team can reach
    let listed: Vec<SpibTable> = (0..g.n_teams())
        .map(|i| {
            let br = constrained_best_response(g, spaces, &iterate_profile(&start), i, 1.0, cfg.budgets.cells)?;
            Ok(br.strategy)
        })
        .collect::<Result<_>>()?;
    search.offer(SpibSource::Iteration, listed)?;
    if search.best_gap() > ACCEPT_TOL {
        search.run_schedule(0, start)?;
    }
    if search.best_gap() > ACCEPT_TOL && cfg.polish && g.n_teams() == 2 {
        match bne_enumerate_tiny(g, spaces, cfg.budgets) {
            Ok(report) => {
                for eq in &report.equilibria {
                    let tables = (0..2)
                        .map(|i| project_to_spib(g, spaces, i, &eq.profile[i] as &dyn CoordinationStrategy, cfg.budgets.cells))
                        .collect::<Result<Vec<_>>>()?;
                    if search.offer(SpibSource::Enumeration, tables)? <= ACCEPT_TOL {
                        break;
                    }
                }
            }
            Err(Error::Budget { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if search.best_gap() > 1e-6 {
        let cib_cfg = CibConfig {
            restarts: 2,
            max_outer_iters: 20,
            max_total_iters: 2_000,
            seed: cfg.seed,
            budgets: cfg.budgets,
            verify: false,
            diagnose: false,
            ..CibConfig::default()
        };
        if let CibOutcome::Solved(sol) = solve_cib(g, spaces, &cib_cfg)? {
            let tables = sol
                .profile()
                .iter()
                .enumerate()
                .map(|(i, s)| project_to_spib(g, spaces, i, s.as_ref(), cfg.budgets.cells))
                .collect::<Result<Vec<_>>>()?;
            search.offer(SpibSource::Cib, tables)?;
        }
    }
    for restart in 1..=cfg.restarts {
        if search.best_gap() <= 1e-6 {
            break;
        }
        let start = search.random_start(restart)?;
        search.run_schedule(restart, start)?;
    }
    let best = search.best.expect("at least one candidate");
    Ok(SpibSolution {
        spec_hash: crate::model::spec_hash(g),
        mode: Mode::Spib,
        simple_mode: spaces.simple,
        source: best.source,
        profile: best.tables,
        schedule: search.schedule,
        verifier_report: best.cert,
    })
}
