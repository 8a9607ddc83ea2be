use serde::{Deserialize, Serialize};

use crate::model::{GameSpec, Time};
use crate::util::{decode_vec, encode_radix};

/// Common information `(y_{1:t-1}, u_{1:t-1})`. Observations are stored as
/// joint indices over teams, actions as joint action indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CommonHistory {
    pub obs: Vec<usize>,
    pub actions: Vec<usize>,
}

impl CommonHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// The time at which this history is available.
    pub fn t(&self) -> Time {
        self.actions.len() as Time + 1
    }

    pub fn extended(&self, y: usize, u: usize) -> Self {
        let mut h = self.clone();
        h.obs.push(y);
        h.actions.push(u);
        h
    }

    pub fn prefix(&self, t: Time) -> Self {
        let n = (t - 1).max(0) as usize;
        CommonHistory {
            obs: self.obs[..n].to_vec(),
            actions: self.actions[..n].to_vec(),
        }
    }

    /// Joint observation at time `s` (padded with 0 for `s <= 0`).
    pub fn obs_at(&self, s: Time) -> usize {
        if s <= 0 {
            0
        } else {
            self.obs[s as usize - 1]
        }
    }

    pub fn action_at(&self, s: Time) -> usize {
        if s <= 0 {
            0
        } else {
            self.actions[s as usize - 1]
        }
    }

    /// Team `i`'s observation at time `s`.
    pub fn team_obs(&self, g: &GameSpec, i: usize, s: Time) -> usize {
        decode_vec(self.obs_at(s), g.observation_radices(s))[i]
    }
}

pub fn join_obs(g: &GameSpec, t: Time, ys: &[usize]) -> usize {
    encode_radix(ys, g.observation_radices(t))
}

pub fn split_obs(g: &GameSpec, t: Time, y: usize) -> Vec<usize> {
    decode_vec(y, g.observation_radices(t))
}

pub fn joint_obs_count(g: &GameSpec, t: Time) -> usize {
    g.observation_radices(t).iter().product()
}
