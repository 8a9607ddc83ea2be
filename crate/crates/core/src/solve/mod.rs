//! Equilibrium construction: CCI-based sequential decomposition, SPIB
//! fixed-point search, the signaling-free and layered special cases, and
//! tiny-game certification.

pub mod certify;
pub mod cib;
pub mod signaling_free;
pub mod spib;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::belief::{Cci, CciKey, OffPathPolicy};
use crate::coord::strategy::{CoordinationStrategy, Dist, Profile, TeamView};
use crate::coord::Spaces;
use crate::error::{Budgets, Error, Result};
use crate::model::graph::is_separable;
use crate::model::{GameSpec, Time};
use crate::verify::NashCertificate;

pub use certify::{certify_nonexistence_tiny, Certification};
pub use cib::{solve_cib, solve_layered, CibConfig, CibOutcome, NoFixedPointReport};
pub use signaling_free::solve_signaling_free;
pub use spib::{solve_spib, SpibConfig, SpibSolution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Cib,
    Spib,
    SignalingFree,
    Layered,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cib" => Ok(Mode::Cib),
            "spib" => Ok(Mode::Spib),
            "signaling-free" => Ok(Mode::SignalingFree),
            "layered" => Ok(Mode::Layered),
            _ => Err(format!("unknown mode `{s}`")),
        }
    }
}

/// What the per-team beliefs of a cell range over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeliefSpace {
    /// SPI values, updated by Bayes' rule under the stage policy.
    Spi,
    /// Current team states, updated without regard to play.
    State,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Successor {
    pub y: usize,
    pub u: usize,
    /// Index of the next cell in [`CibSolution::cells`].
    pub next: usize,
    /// Per team, whether its update followed Bayes' rule.
    pub on_path: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub key: CciKey,
    pub cci: Cci,
    /// Per team, `(SPI index, prescription law)` rows.
    pub policy: Vec<Vec<(usize, Dist)>>,
    pub successors: Vec<Successor>,
    /// Per team, `V_t` dense over the SPI space.
    pub values: Vec<Vec<f64>>,
    /// Interim gap of the stage policy.
    pub gap: f64,
}

impl Cell {
    pub fn t(&self) -> Time {
        self.cci.t
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub max_gap: f64,
    /// Largest distance between a computed successor belief and the stored
    /// belief of the cell it was grouped into.
    pub max_consistency: f64,
    pub iterations: usize,
    pub cells_visited: usize,
}

/// Stage policies, belief updates and values on the cells reachable from
/// the initial CCI. Cells are listed in time order, the root first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CibSolution {
    pub spec_hash: String,
    pub mode: Mode,
    pub belief_space: BeliefSpace,
    pub offpath_policy: Option<OffPathPolicy>,
    pub simple_mode: bool,
    /// Only cells reachable under some play are solved; beliefs closer
    /// than this share a cell.
    pub cell_radius: f64,
    pub cells: Vec<Cell>,
    pub residuals: Residuals,
    pub verifier_report: Option<NashCertificate>,
}

impl CibSolution {
    /// Coordination strategies that walk the cells along the common history.
    pub fn profile(&self) -> Profile {
        let walker = Arc::new(Walker::new(self));
        (0..self.cells.first().map_or(0, |c| c.policy.len()))
            .map(|team| {
                Arc::new(CellStrategy {
                    walker: walker.clone(),
                    team,
                }) as Arc<dyn CoordinationStrategy>
            })
            .collect()
    }

    pub fn cells_at(&self, t: Time) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(move |c| c.t() == t)
    }
}

struct Walker {
    policies: Vec<Vec<BTreeMap<usize, Dist>>>,
    next: Vec<HashMap<(usize, usize), usize>>,
}

impl Walker {
    fn new(sol: &CibSolution) -> Self {
        Walker {
            policies: sol
                .cells
                .iter()
                .map(|c| c.policy.iter().map(|rows| rows.iter().cloned().collect()).collect())
                .collect(),
            next: sol
                .cells
                .iter()
                .map(|c| c.successors.iter().map(|s| ((s.y, s.u), s.next)).collect())
                .collect(),
        }
    }

    fn cell(&self, view: &TeamView) -> Option<usize> {
        let mut c = 0;
        if self.policies.is_empty() {
            return None;
        }
        for s in 1..view.t {
            c = *self.next[c].get(&(view.h0.obs_at(s), view.h0.action_at(s)))?;
        }
        Some(c)
    }
}

/// One team's part of a [`CibSolution`]; unknown cells and SPIs play
/// prescription 0.
pub struct CellStrategy {
    walker: Arc<Walker>,
    team: usize,
}

impl CoordinationStrategy for CellStrategy {
    fn dist(&self, view: &TeamView) -> Dist {
        self.walker
            .cell(view)
            .and_then(|c| self.walker.policies[c][self.team].get(&view.spi_index).cloned())
            .unwrap_or_else(|| vec![(0, 1.0)])
    }

    fn uses_private_history(&self) -> bool {
        false
    }
}

/// Prescription and SPI spaces for a solver run; simple mode needs a
/// separable game.
pub fn spaces_for(g: &GameSpec, simple: bool, budgets: Budgets) -> Result<Spaces> {
    if simple && !is_separable(g) {
        return Err(Error::NotApplicable("simple prescriptions need a separable game".into()));
    }
    Spaces::new(g, simple, budgets.cells)
}
