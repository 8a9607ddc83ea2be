//! Coordinator view of a team: prescriptions, partially realized
//! prescriptions (PRPs) and sufficient private information (SPI).
//!
//! A prescription for agent `j` at time `t` maps the agent's hidden window
//! `x^{i,j}_{t-d+1:t}` to an action and is stored as a table in window
//! order (first time most significant). A team prescription is the
//! mixed-radix index of its agents' prescription indices. The SPI at `t` is
//! the last revealed team state `x_{t-d}` together with, for every agent and
//! lag `l = 1..d-1`, the prescription of time `t-l` partially applied to the
//! states revealed since then.

pub mod convert;
pub mod history;
pub mod strategy;

use crate::error::{budget, Result};
use crate::model::{GameSpec, Time};
use crate::util::{decode_vec, encode_radix, product_capped};

pub use history::CommonHistory;
pub use strategy::{CoordinationStrategy, TeamView};

/// Team windows `x^i_{t-d+1:t}` as mixed-radix indices over team states.
#[derive(Clone, Debug)]
pub struct WindowSpace {
    pub t: Time,
    pub first_time: Time,
    pub radices: Vec<usize>,
    pub size: usize,
}

impl WindowSpace {
    pub fn new(g: &GameSpec, i: usize, t: Time) -> Self {
        let first_time = t - g.delay_t() + 1;
        let radices: Vec<usize> = (first_time..=t).map(|s| g.team_states(i, s)).collect();
        let size = radices.iter().product();
        WindowSpace {
            t,
            first_time,
            radices,
            size,
        }
    }

    pub fn decode(&self, w: usize) -> Vec<usize> {
        decode_vec(w, &self.radices)
    }

    pub fn encode(&self, states: &[usize]) -> usize {
        encode_radix(states, &self.radices)
    }

    /// State at `t-d+1`, revealed to the coordinator at the next step.
    pub fn first(&self, w: usize) -> usize {
        w / (self.size / self.radices[0])
    }

    /// State at `t`.
    pub fn last(&self, w: usize) -> usize {
        w % self.radices[self.radices.len() - 1]
    }
}

/// Per-agent window index for every team window.
fn agent_window_table(g: &GameSpec, i: usize, win: &WindowSpace) -> (Vec<Vec<usize>>, Vec<usize>) {
    let m = g.n_agents(i);
    let agent_radices: Vec<Vec<usize>> = (0..m)
        .map(|j| (win.first_time..=win.t).map(|s| g.agent_states(i, j, s)).collect())
        .collect();
    let mut table = vec![0; win.size * m];
    for w in 0..win.size {
        let states = win.decode(w);
        for j in 0..m {
            let digits: Vec<usize> = states
                .iter()
                .enumerate()
                .map(|(k, &x)| g.state_agents(i, win.first_time + k as Time, x)[j])
                .collect();
            table[w * m + j] = encode_radix(&digits, &agent_radices[j]);
        }
    }
    (agent_radices, table)
}

/// Enumerated prescriptions of one team at one time.
#[derive(Clone, Debug)]
pub struct PrescriptionSpace {
    pub team: usize,
    pub t: Time,
    pub simple: bool,
    pub window: WindowSpace,
    pub size: usize,
    agents: usize,
    /// prescriptions per agent
    counts: Vec<usize>,
    strides: Vec<usize>,
    /// per agent: `counts[j] * agent_windows[j]` actions
    tables: Vec<Vec<u16>>,
    agent_windows: Vec<usize>,
    action_strides: Vec<usize>,
    /// team window -> agent window, `agents` entries per window
    window_map: Vec<usize>,
}

impl PrescriptionSpace {
    /// Full mode maps whole windows; simple mode maps only the current
    /// agent state and is meant for separable games.
    pub fn new(g: &GameSpec, i: usize, t: Time, simple: bool, cap: usize) -> Result<Self> {
        let window = WindowSpace::new(g, i, t);
        let (agent_radices, window_map) = agent_window_table(g, i, &window);
        let m = g.n_agents(i);
        let mut counts = Vec::with_capacity(m);
        let mut tables = Vec::with_capacity(m);
        let mut agent_windows = Vec::with_capacity(m);
        for (j, radices) in agent_radices.iter().enumerate() {
            let n_win: usize = radices.iter().product();
            let n_act = g.agent_actions(i, j, t);
            let last = radices[radices.len() - 1];
            let entries = if simple { last } else { n_win };
            let count = crate::util::pow_capped(n_act, entries, cap)
                .ok_or_else(|| budget(format!("prescriptions of team {i} agent {j} at t={t}"), format!("{n_act}^{entries}"), cap))?;
            let mut table = Vec::with_capacity(count * n_win);
            let digit_radices = vec![n_act; entries];
            for p in 0..count {
                let digits = decode_vec(p, &digit_radices);
                for w in 0..n_win {
                    let key = if simple { w % last } else { w };
                    table.push(digits[key] as u16);
                }
            }
            counts.push(count);
            tables.push(table);
            agent_windows.push(n_win);
        }
        let size = product_capped(counts.iter().copied(), cap)
            .ok_or_else(|| budget(format!("prescriptions of team {i} at t={t}"), format!("{counts:?}"), cap))?;
        let mut strides = vec![1; m];
        for j in (0..m.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * counts[j + 1];
        }
        let mut action_strides = vec![1; m];
        for j in (0..m.saturating_sub(1)).rev() {
            action_strides[j] = action_strides[j + 1] * g.agent_actions(i, j + 1, t);
        }
        Ok(PrescriptionSpace {
            team: i,
            t,
            simple,
            window,
            size,
            agents: m,
            counts,
            strides,
            tables,
            agent_windows,
            action_strides,
            window_map,
        })
    }

    pub fn agent_prescription(&self, gamma: usize, j: usize) -> usize {
        (gamma / self.strides[j]) % self.counts[j]
    }

    /// Agent `j`'s action table (over its own windows) under `gamma`.
    pub fn agent_table(&self, gamma: usize, j: usize) -> &[u16] {
        let p = self.agent_prescription(gamma, j);
        let n = self.agent_windows[j];
        &self.tables[j][p * n..(p + 1) * n]
    }

    pub fn agent_window(&self, w: usize, j: usize) -> usize {
        self.window_map[w * self.agents + j]
    }

    /// Team action prescribed for team window `w`.
    #[inline]
    pub fn apply(&self, gamma: usize, w: usize) -> usize {
        let mut a = 0;
        for j in 0..self.agents {
            let aw = self.window_map[w * self.agents + j];
            a += self.agent_table(gamma, j)[aw] as usize * self.action_strides[j];
        }
        a
    }

    /// Index of the prescription built from per-agent action tables.
    pub fn index_of(&self, agent_tables: &[Vec<u16>]) -> Option<usize> {
        let mut gamma = 0;
        for j in 0..self.agents {
            let n = self.agent_windows[j];
            let p = (0..self.counts[j]).find(|&p| self.tables[j][p * n..(p + 1) * n] == agent_tables[j][..])?;
            gamma += p * self.strides[j];
        }
        Some(gamma)
    }

    /// The open-loop prescription that plays team action `a` everywhere.
    pub fn constant(&self, g: &GameSpec, a: usize) -> usize {
        let acts = g.action_agents(self.team, self.t, a);
        let tables: Vec<Vec<u16>> = (0..self.agents)
            .map(|j| vec![acts[j] as u16; self.agent_windows[j]])
            .collect();
        self.index_of(&tables).expect("constant prescriptions exist in both modes")
    }

    /// Whether `gamma` ignores the window entirely.
    pub fn is_constant(&self, gamma: usize) -> bool {
        (0..self.agents).all(|j| {
            let t = self.agent_table(gamma, j);
            t.iter().all(|&a| a == t[0])
        })
    }
}

/// Sufficient private information of a team: last revealed state plus the
/// PRP stack, flattened agent by agent and lag by lag.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spi {
    pub state: usize,
    pub prp: Vec<u16>,
}

#[derive(Clone, Debug)]
struct PrpBlock {
    agent: usize,
    lag: usize,
    offset: usize,
    entries: usize,
    actions: usize,
}

/// Enumeration of the SPI values of one team at one time.
#[derive(Clone, Debug)]
pub struct SpiSpace {
    pub team: usize,
    pub t: Time,
    pub states: usize,
    pub size: usize,
    blocks: Vec<PrpBlock>,
    prp_len: usize,
}

impl SpiSpace {
    pub fn new(g: &GameSpec, i: usize, t: Time, cap: usize) -> Result<Self> {
        let d = g.delay_t();
        let states = g.team_states(i, t - d);
        let mut blocks = Vec::new();
        let mut offset = 0;
        let mut factors = vec![states];
        for j in 0..g.n_agents(i) {
            for lag in 1..d {
                let entries: usize = ((t - d + 1)..=(t - lag)).map(|s| g.agent_states(i, j, s)).product();
                let actions = g.agent_actions(i, j, t - lag);
                factors.push(
                    crate::util::pow_capped(actions, entries, cap)
                        .ok_or_else(|| budget(format!("PRPs of team {i} at t={t}"), format!("{actions}^{entries}"), cap))?,
                );
                blocks.push(PrpBlock {
                    agent: j,
                    lag: lag as usize,
                    offset,
                    entries,
                    actions,
                });
                offset += entries;
            }
        }
        let size = product_capped(factors.iter().copied(), cap)
            .ok_or_else(|| budget(format!("SPI values of team {i} at t={t}"), format!("{factors:?}"), cap))?;
        Ok(SpiSpace {
            team: i,
            t,
            states,
            size,
            blocks,
            prp_len: offset,
        })
    }

    pub fn encode(&self, s: &Spi) -> usize {
        let mut idx = s.state;
        for b in &self.blocks {
            for k in 0..b.entries {
                idx = idx * b.actions + s.prp[b.offset + k] as usize;
            }
        }
        idx
    }

    pub fn decode(&self, mut idx: usize) -> Spi {
        let mut prp = vec![0u16; self.prp_len];
        for b in self.blocks.iter().rev() {
            for k in (0..b.entries).rev() {
                prp[b.offset + k] = (idx % b.actions) as u16;
                idx /= b.actions;
            }
        }
        Spi { state: idx, prp }
    }

    /// The unique SPI at `t = 1`.
    pub fn initial(&self) -> Spi {
        Spi {
            state: 0,
            prp: vec![0; self.prp_len],
        }
    }

    /// PRP of agent `j` at lag `l`: a table over the agent's states at
    /// times `t-d+1..t-l`.
    pub fn prp<'a>(&self, s: &'a Spi, j: usize, lag: usize) -> &'a [u16] {
        let b = self
            .blocks
            .iter()
            .find(|b| b.agent == j && b.lag == lag)
            .expect("lag in 1..d");
        &s.prp[b.offset..b.offset + b.entries]
    }
}

/// Advances the SPI from `t` to `t+1` given the team state revealed at
/// `t-d+1` and the prescription played at `t`.
pub fn prp_advance(
    g: &GameSpec,
    from: &SpiSpace,
    to: &SpiSpace,
    s: &Spi,
    revealed: usize,
    presc: &PrescriptionSpace,
    gamma: usize,
) -> Spi {
    let t = from.t;
    let d = g.delay_t();
    let mut prp = vec![0u16; to.prp_len];
    let agents = g.state_agents(from.team, t - d + 1, revealed);
    for b in &to.blocks {
        let r = agents[b.agent];
        let len = b.entries;
        let src: &[u16] = if b.lag == 1 {
            presc.agent_table(gamma, b.agent)
        } else {
            from.prp(s, b.agent, b.lag - 1)
        };
        prp[b.offset..b.offset + len].copy_from_slice(&src[r * len..(r + 1) * len]);
    }
    Spi { state: revealed, prp }
}

/// Prescription and SPI spaces for every team and time.
#[derive(Clone, Debug)]
pub struct Spaces {
    pub simple: bool,
    /// `[team][t - 1]` for `t = 1..=T`
    pub presc: Vec<Vec<PrescriptionSpace>>,
    /// `[team][t - 1]` for `t = 1..=T+1`
    pub spi: Vec<Vec<SpiSpace>>,
    pub windows: Vec<Vec<WindowSpace>>,
}

impl Spaces {
    pub fn new(g: &GameSpec, simple: bool, cap: usize) -> Result<Self> {
        let horizon = g.horizon_t();
        let mut presc = Vec::new();
        let mut spi = Vec::new();
        let mut windows = Vec::new();
        for i in 0..g.n_teams() {
            presc.push((1..=horizon).map(|t| PrescriptionSpace::new(g, i, t, simple, cap)).collect::<Result<Vec<_>>>()?);
            spi.push((1..=horizon + 1).map(|t| SpiSpace::new(g, i, t, cap)).collect::<Result<Vec<_>>>()?);
            windows.push((1..=horizon).map(|t| WindowSpace::new(g, i, t)).collect());
        }
        Ok(Spaces {
            simple,
            presc,
            spi,
            windows,
        })
    }

    pub fn presc(&self, i: usize, t: Time) -> &PrescriptionSpace {
        &self.presc[i][t as usize - 1]
    }

    pub fn spi(&self, i: usize, t: Time) -> &SpiSpace {
        &self.spi[i][t as usize - 1]
    }

    pub fn window(&self, i: usize, t: Time) -> &WindowSpace {
        &self.windows[i][t as usize - 1]
    }

    pub fn advance(&self, g: &GameSpec, i: usize, t: Time, s: &Spi, revealed: usize, gamma: usize) -> Spi {
        prp_advance(g, self.spi(i, t), self.spi(i, t + 1), s, revealed, self.presc(i, t), gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtins;

    #[test]
    fn guessing_space_sizes() {
        let g = builtins::guessing();
        let sp = Spaces::new(&g, false, 1 << 20).unwrap();
        // t = 1: window (x_0, x_1) has 2 entries per agent -> 4 each
        assert_eq!(sp.presc(0, 1).size, 16);
        assert_eq!(sp.presc(0, 2).size, 1);
        assert_eq!(sp.presc(1, 2).size, 4);
        assert_eq!(sp.spi(0, 1).size, 1);
        // t = 2: x_0 singleton, PRP of t = 1 over x_1: 4 per agent
        assert_eq!(sp.spi(0, 2).size, 16);
        let simple = Spaces::new(&g, true, 1 << 20).unwrap();
        assert_eq!(simple.presc(0, 1).size, 16);
    }

    #[test]
    fn single_agent_delay_two_spi_count() {
        let shape = crate::model::random::Shape {
            teams: 1,
            agents: 1,
            states: 2,
            actions: 2,
            observations: 1,
            horizon: 3,
            delay: 2,
        };
        let g = crate::model::random::general(1, &shape).unwrap();
        let sp = SpiSpace::new(&g, 0, 3, 1 << 20).unwrap();
        assert_eq!(sp.size, 8);
        for k in 0..sp.size {
            assert_eq!(sp.encode(&sp.decode(k)), k);
        }
    }

    #[test]
    fn apply_and_constant() {
        let g = builtins::guessing();
        let sp = PrescriptionSpace::new(&g, 0, 1, false, 1 << 20).unwrap();
        let c = sp.constant(&g, 2);
        assert!(sp.is_constant(c));
        for w in 0..sp.window.size {
            assert_eq!(sp.apply(c, w), 2);
        }
        // agent prescription index 1 of a 2-entry table is (0, 1): the identity
        let id = 4 + 1;
        for w in 0..4 {
            assert_eq!(sp.apply(id, w), w);
        }
    }

    #[test]
    fn advance_delay_one_only_moves_state() {
        let g = builtins::nonexistence(0.1);
        let sp = Spaces::new(&g, false, 1 << 20).unwrap();
        let s = sp.spi(0, 1).initial();
        let s2 = sp.advance(&g, 0, 1, &s, 1, 3);
        assert_eq!(s2, Spi { state: 1, prp: vec![] });
        assert_eq!(sp.spi(0, 2).size, 2);
    }

    #[test]
    fn advance_delay_two_records_partial_prescription() {
        let g = builtins::guessing();
        let sp = Spaces::new(&g, false, 1 << 20).unwrap();
        let s = sp.spi(0, 1).initial();
        // agent 1 plays ng = (1, 0), agent 2 plays id = (0, 1)
        let gamma = 2 * 4 + 1;
        let s2 = sp.advance(&g, 0, 1, &s, 0, gamma);
        assert_eq!(s2.state, 0);
        assert_eq!(s2.prp, vec![1, 0, 0, 1]);
    }
}
