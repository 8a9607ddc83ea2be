//! Coordination strategies: maps from a coordinator's information to
//! distributions over prescriptions.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{CommonHistory, Spi};
use crate::model::Time;

/// Sparse distribution over prescription indices.
pub type Dist = Vec<(usize, f64)>;

/// What a coordinator knows at time `t`.
#[derive(Clone, Copy, Debug)]
pub struct TeamView<'a> {
    pub team: usize,
    pub t: Time,
    pub h0: &'a CommonHistory,
    /// Revealed team states `x_{1:t-d}`.
    pub states: &'a [usize],
    /// Own past prescriptions `γ_{1:t-1}`.
    pub prescriptions: &'a [usize],
    pub spi: &'a Spi,
    pub spi_index: usize,
}

pub trait CoordinationStrategy: Send + Sync {
    fn dist(&self, view: &TeamView) -> Dist;

    /// `false` when the strategy reads only `h0` and the SPI, which lets
    /// evaluators merge private histories with equal SPI.
    fn uses_private_history(&self) -> bool {
        true
    }
}

pub type Profile = Vec<Arc<dyn CoordinationStrategy>>;

/// Key of a coordinator information set under a fixed pure strategy:
/// own past prescriptions are implied by the strategy itself.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InfoKey {
    pub h0: CommonHistory,
    pub states: Vec<usize>,
}

/// Deterministic coordination strategy given as a table; unlisted
/// information sets get prescription 0.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PureCoordination {
    #[serde(with = "entries")]
    pub table: BTreeMap<InfoKey, usize>,
}

impl PureCoordination {
    pub fn get(&self, h0: &CommonHistory, states: &[usize]) -> usize {
        self.table
            .get(&InfoKey {
                h0: h0.clone(),
                states: states.to_vec(),
            })
            .copied()
            .unwrap_or(0)
    }
}

impl CoordinationStrategy for PureCoordination {
    fn dist(&self, view: &TeamView) -> Dist {
        vec![(self.get(view.h0, view.states), 1.0)]
    }
}

/// Key of a full coordinator information set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AugKey {
    pub h0: CommonHistory,
    pub states: Vec<usize>,
    pub prescriptions: Vec<usize>,
}

impl AugKey {
    pub fn of(view: &TeamView) -> Self {
        AugKey {
            h0: view.h0.clone(),
            states: view.states.to_vec(),
            prescriptions: view.prescriptions.to_vec(),
        }
    }
}

/// Behavioral strategy over full coordinator information; unlisted sets
/// play prescription 0.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BehavioralTable {
    #[serde(with = "entries")]
    pub table: BTreeMap<AugKey, Dist>,
}

impl CoordinationStrategy for BehavioralTable {
    fn dist(&self, view: &TeamView) -> Dist {
        self.table
            .get(&AugKey::of(view))
            .cloned()
            .unwrap_or_else(|| vec![(0, 1.0)])
    }
}

/// Strategy of the form `ρ_t(h0, s)`; unlisted cells play prescription 0.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpibTable {
    #[serde(with = "entries")]
    pub table: BTreeMap<(CommonHistory, usize), Dist>,
}

impl SpibTable {
    pub fn get(&self, h0: &CommonHistory, s: usize) -> Option<&Dist> {
        self.table.get(&(h0.clone(), s))
    }
}

impl CoordinationStrategy for SpibTable {
    fn dist(&self, view: &TeamView) -> Dist {
        self.get(view.h0, view.spi_index)
            .cloned()
            .unwrap_or_else(|| vec![(0, 1.0)])
    }

    fn uses_private_history(&self) -> bool {
        false
    }
}

type DistFn = dyn Fn(&TeamView) -> Dist + Send + Sync;

/// Strategy defined by a closure.
pub struct FnStrategy {
    f: Box<DistFn>,
    private: bool,
}

impl FnStrategy {
    /// `private` declares whether the closure reads more than `h0` and the SPI.
    pub fn new(private: bool, f: impl Fn(&TeamView) -> Dist + Send + Sync + 'static) -> Self {
        FnStrategy { f: Box::new(f), private }
    }
}

impl CoordinationStrategy for FnStrategy {
    fn dist(&self, view: &TeamView) -> Dist {
        (self.f)(view)
    }

    fn uses_private_history(&self) -> bool {
        self.private
    }
}

/// Drops zero entries and merges duplicates, keeping prescription order.
pub fn clean(dist: Dist) -> Dist {
    let mut m: BTreeMap<usize, f64> = BTreeMap::new();
    for (k, p) in dist {
        if p > 0.0 {
            *m.entry(k).or_insert(0.0) += p;
        }
    }
    m.into_iter().collect()
}

pub fn dense(dist: &Dist, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for &(k, p) in dist {
        v[k] += p;
    }
    v
}

pub fn sparse(v: &[f64]) -> Dist {
    v.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(k, &p)| (k, p)).collect()
}

/// Maps with structured keys serialize as `[key, value]` lists.
pub(crate) mod entries {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<K: Serialize, V: Serialize, S: Serializer>(m: &BTreeMap<K, V>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.iter())
    }

    pub fn deserialize<'de, K, V, D>(d: D) -> Result<BTreeMap<K, V>, D::Error>
    where
        K: Deserialize<'de> + Ord,
        V: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        Ok(Vec::<(K, V)>::deserialize(d)?.into_iter().collect())
    }
}
