//! ε-greedy selection over hypothesis types.
//!
//! The agent keeps one [`TypeStats`] per hypothesis type. Each decision draws
//! exactly one uniform variate: below ε the hypothesis is executed outright,
//! otherwise only if the type's win rate beats a confidence-adaptive bar.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypothesis::{Hypothesis, HypothesisType};
use crate::seed::{rng_from_seed, EngineRng};

#[derive(Debug, Error, PartialEq)]
pub enum AgentError {
    #[error("confidence {0} outside [0, 1]")]
    Confidence(f64),
    #[error("epsilon {0} outside [0, 1]")]
    Epsilon(f64),
    #[error("unknown hypothesis type {0}")]
    UnknownType(HypothesisType),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeStats {
    pub executions: u64,
    pub wins: u64,
    pub mean_return: f64,
}

impl TypeStats {
    /// Wins over executions; 0 before the first execution.
    pub fn win_rate(&self) -> f64 {
        if self.executions == 0 {
            0.0
        } else {
            self.wins as f64 / self.executions as f64
        }
    }
}

/// Snapshot keyed by type name, serialized for learning diagnostics.
pub type AgentSnapshot = BTreeMap<String, TypeStats>;

#[derive(Debug, Clone)]
pub struct AgentState {
    stats: BTreeMap<HypothesisType, TypeStats>,
    rng: EngineRng,
}

/// Execution bar for a hypothesis of confidence `c`: 0.45 + (1 - c) * 0.10,
/// evaluated in percent so the quarter points come out exact.
pub fn adaptive_threshold(confidence: f64) -> Result<f64, AgentError> {
    if !(0.0..=1.0).contains(&confidence) {
        return Err(AgentError::Confidence(confidence));
    }
    Ok((45.0 + (1.0 - confidence) * 10.0) / 100.0)
}

impl AgentState {
    pub fn new(types: &[HypothesisType], seed: u64) -> Self {
        AgentState {
            stats: types.iter().map(|t| (*t, TypeStats::default())).collect(),
            rng: rng_from_seed(seed),
        }
    }

    pub fn stats(&self, htype: HypothesisType) -> Option<&TypeStats> {
        self.stats.get(&htype)
    }

    pub fn snapshot(&self) -> AgentSnapshot {
        self.stats.iter().map(|(k, v)| (k.name(), *v)).collect()
    }

    /// Execute-or-skip for `h`. Consumes exactly one uniform draw.
    pub fn decide(&mut self, h: &Hypothesis, epsilon: f64) -> Result<bool, AgentError> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(AgentError::Epsilon(epsilon));
        }
        let u: f64 = self.rng.random();
        if u < epsilon {
            return Ok(true);
        }
        let stats = self.stats.get(&h.htype()).ok_or(AgentError::UnknownType(h.htype()))?;
        Ok(stats.win_rate() > adaptive_threshold(h.confidence())?)
    }

    /// Records a closed trade. Break-even trades are not wins.
    pub fn update(&mut self, htype: HypothesisType, trade_return: f64) -> Result<(), AgentError> {
        let s = self.stats.get_mut(&htype).ok_or(AgentError::UnknownType(htype))?;
        s.executions += 1;
        if trade_return > 0.0 {
            s.wins += 1;
        }
        s.mean_return += (trade_return - s.mean_return) / s.executions as f64;
        Ok(())
    }
}
