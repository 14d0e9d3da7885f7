//! Per-UE association agents.
//!
//! Both policies keep an integer reward counter per candidate IRS that goes
//! up by one for every satisfied period spent on that IRS.
//!
//! * Contextual bandit: warm-starts on the strongest RSSI, sticks to the
//!   best-rewarded IRS for up to `phi` consecutive unsatisfied periods, and
//!   otherwise explores a uniformly random candidate with probability
//!   `omega` or exploits the largest accumulated reward.
//! * Greedy: random initial IRS, then always the largest accumulated reward.
//!
//! Argmax ties always resolve to the lowest candidate position.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    #[serde(rename = "cb")]
    ContextualBandit,
    Greedy,
}

impl PolicyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::ContextualBandit => "cb",
            PolicyKind::Greedy => "greedy",
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cb" | "contextual_bandit" | "contextualbandit" => Ok(PolicyKind::ContextualBandit),
            "greedy" => Ok(PolicyKind::Greedy),
            other => Err(format!("unknown policy `{other}` (expected cb|greedy)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Exploration probability.
    pub omega: f64,
    /// Unsatisfied periods tolerated on the best-rewarded IRS.
    pub phi: u32,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            kind: PolicyKind::ContextualBandit,
            omega: 0.1,
            phi: 2,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(invalid("policy.omega", format!("{} is outside [0, 1]", self.omega)));
        }
        if self.phi < 1 {
            return Err(invalid("policy.phi", "must be at least 1"));
        }
        Ok(())
    }
}

/// Position of the largest value, lowest position on ties. `None` when empty.
pub fn argmax_lowest<T: PartialOrd + Copy>(values: &[T]) -> Option<usize> {
    let mut iter = values.iter().copied().enumerate();
    let (mut best, mut best_v) = iter.next()?;
    for (i, v) in iter {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    Some(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    candidates: Vec<usize>,
    rewards: Vec<u64>,
    /// Position of the current IRS in `candidates`.
    current: usize,
    consecutive_unsatisfied: u32,
    initialized: bool,
}

impl AgentState {
    /// Fresh agent over `candidates` (global IRS indices).
    pub fn new(candidates: Vec<usize>) -> Self {
        let n = candidates.len();
        Self {
            candidates,
            rewards: vec![0; n],
            current: 0,
            consecutive_unsatisfied: 0,
            initialized: false,
        }
    }

    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    pub fn rewards(&self) -> &[u64] {
        &self.rewards
    }

    pub fn total_reward(&self) -> u64 {
        self.rewards.iter().sum()
    }

    pub fn consecutive_unsatisfied(&self) -> u32 {
        self.consecutive_unsatisfied
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    /// Position of the current IRS within the candidate list.
    pub fn current_slot(&self) -> usize {
        self.current
    }

    /// Global index of the current IRS.
    pub fn current_irs(&self) -> usize {
        self.candidates[self.current]
    }

    fn best_slot(&self) -> usize {
        argmax_lowest(&self.rewards).unwrap_or(0)
    }

    fn on_best(&self) -> bool {
        let max = self.rewards.iter().copied().max().unwrap_or(0);
        self.rewards[self.current] == max
    }

    /// First association. `rssi_db` is aligned with the candidate list and
    /// only consulted by the contextual bandit. Returns the global IRS index.
    pub fn init_association<R: Rng + ?Sized>(
        &mut self,
        kind: PolicyKind,
        rssi_db: &[f64],
        rng: &mut R,
    ) -> Result<usize> {
        if self.initialized {
            return Err(Error::AlreadyInitialized);
        }
        if self.candidates.is_empty() {
            return Err(invalid("topology.irs_per_cell", "agent has no candidate IRS"));
        }
        self.current = match kind {
            PolicyKind::ContextualBandit => {
                if rssi_db.len() != self.candidates.len() {
                    return Err(Error::RssiLengthMismatch {
                        expected: self.candidates.len(),
                        got: rssi_db.len(),
                    });
                }
                argmax_lowest(rssi_db).unwrap_or(0)
            }
            PolicyKind::Greedy => rng.gen_range(0..self.candidates.len()),
        };
        self.rewards.iter_mut().for_each(|r| *r = 0);
        self.consecutive_unsatisfied = 0;
        self.initialized = true;
        Ok(self.current_irs())
    }

    /// Re-association decision for the coming period. Returns the global IRS
    /// index the agent is now on.
    pub fn select_irs<R: Rng + ?Sized>(&mut self, cfg: &PolicyConfig, rng: &mut R) -> Result<usize> {
        if !self.initialized {
            return Err(Error::NotInitialized);
        }
        self.current = match cfg.kind {
            PolicyKind::ContextualBandit => {
                if self.on_best() && self.consecutive_unsatisfied < cfg.phi {
                    self.current
                } else if rng.gen::<f64>() < cfg.omega {
                    rng.gen_range(0..self.candidates.len())
                } else {
                    self.best_slot()
                }
            }
            PolicyKind::Greedy => self.best_slot(),
        };
        Ok(self.current_irs())
    }

    /// Records the outcome of the period just spent on the current IRS.
    pub fn update(&mut self, satisfied: bool) {
        if satisfied {
            self.rewards[self.current] += 1;
            self.consecutive_unsatisfied = 0;
        } else {
            self.consecutive_unsatisfied += 1;
        }
    }
}
