//! Test-time scaling configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Knobs for the per-agent scaling strategies and the correction loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScalingConfig {
    /// Number of relevant plans generated, each seeding one parallel path.
    pub n_plans: usize,
    /// Candidate executions sampled per plan step (best-of-N).
    pub n_exec_candidates: usize,
    /// Minimum thinking tokens the judgment agent must spend; 0 disables
    /// budget forcing.
    pub judge_token_budget: usize,
    /// Correction-round bound per path.
    pub max_corrections: usize,
    /// Cap on continuation requests issued to reach the thinking budget.
    pub max_budget_extensions: usize,
    pub sampling_temperature: f64,
    pub seed: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            n_plans: 4,
            n_exec_candidates: 4,
            judge_token_budget: 0,
            max_corrections: 3,
            max_budget_extensions: 4,
            sampling_temperature: 0.75,
            seed: 0,
        }
    }
}

impl ScalingConfig {
    /// A minimal configuration: single path, single candidate, no budget
    /// forcing. Useful for tests and smoke runs.
    pub fn minimal() -> Self {
        ScalingConfig {
            n_plans: 1,
            n_exec_candidates: 1,
            judge_token_budget: 0,
            max_corrections: 3,
            max_budget_extensions: 0,
            sampling_temperature: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_plans < 1 {
            return Err(Error::ConfigError("n_plans must be >= 1".into()));
        }
        if self.n_exec_candidates < 1 {
            return Err(Error::ConfigError("n_exec_candidates must be >= 1".into()));
        }
        if !self.sampling_temperature.is_finite() || self.sampling_temperature < 0.0 {
            return Err(Error::ConfigError(
                "sampling_temperature must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}
