//! Independent audit of coordination profiles: exact payoffs, best
//! responses, Nash gaps, Monte Carlo checks and tiny-game enumeration.

pub mod best_response;
pub mod bne;
pub mod filter;
pub mod simulate;

use serde::{Deserialize, Serialize};

use crate::coord::strategy::Profile;
use crate::coord::Spaces;
use crate::error::{Budgets, Result};
use crate::model::doc::spec_hash;
use crate::model::GameSpec;
use crate::rollout::Forward;

pub use best_response::{best_response, constrained_best_response, full_history_best_response, BestResponse, TrailEntry};
pub use bne::{bne_enumerate_tiny, BneReport};
pub use simulate::{simulate, SampleStats};

/// Exact expected total reward of every team.
pub fn total_payoff(g: &GameSpec, spaces: &Spaces, profile: &Profile, cap: usize) -> Result<Vec<f64>> {
    Forward::new(g, spaces, profile, cap).total_payoff()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    MonteCarloAssisted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeamCertificate {
    pub team: String,
    pub payoff: f64,
    pub br_value: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NashCertificate {
    pub spec_hash: String,
    pub teams: Vec<TeamCertificate>,
    pub epsilon: f64,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dp_trace: Option<String>,
    /// Per-team value tables of the best-response DP.
    #[serde(skip)]
    pub trail: Vec<Vec<TrailEntry>>,
}

/// Best response of every team against the others' components of
/// `profile`, computed concurrently by at most `budgets.workers` threads.
pub fn nash_gap(g: &GameSpec, spaces: &Spaces, profile: &Profile, budgets: Budgets) -> Result<NashCertificate> {
    let payoff = total_payoff(g, spaces, profile, budgets.cells)?;
    let n = g.n_teams();
    let chunk = if budgets.workers == 0 { n.max(1) } else { budgets.workers };
    let mut brs: Vec<Result<BestResponse>> = Vec::with_capacity(n);
    for start in (0..n).step_by(chunk) {
        let part: Vec<Result<BestResponse>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (start..(start + chunk).min(n))
                .map(|i| scope.spawn(move || best_response(g, spaces, profile, i, budgets.cells)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("best-response worker panicked")).collect()
        });
        brs.extend(part);
    }
    let mut teams = Vec::new();
    let mut trail = Vec::new();
    for (i, br) in brs.into_iter().enumerate() {
        let br = br?;
        teams.push(TeamCertificate {
            team: g.teams[i].name.clone(),
            payoff: payoff[i],
            br_value: br.value,
            gap: br.value - payoff[i],
        });
        trail.push(br.trail);
    }
    let epsilon = teams.iter().map(|c| c.gap).fold(f64::NEG_INFINITY, f64::max);
    Ok(NashCertificate {
        spec_hash: spec_hash(g),
        teams,
        epsilon,
        method: Method::Exact,
        dp_trace: None,
        trail,
    })
}
