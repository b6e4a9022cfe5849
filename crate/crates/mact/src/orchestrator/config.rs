//! Run configuration file and runtime assembly for scripted and live modes.
//!
//! The run config is a JSON key-value document. Documented keys:
//! `n_plans`, `n_exec_candidates`, `judge_token_budget`, `max_corrections`,
//! `max_budget_extensions`, `temperature`, `alpha`, `seed`,
//! `strict_scoring`, `template_dir`, `temperatures` (per-role overrides),
//! `backends` (per-role endpoints), `scorers`, and `judge_backend`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agents::{AgentBinding, AgentBindings, AgentRole, SamplingParams};
use crate::backends::{HttpBackend, HttpBackendConfig, Script, ScriptedBackend};
use crate::core::{ScalingConfig, Task};
use crate::error::{Error, Result};
use crate::eval::{JudgeBackend, ModelJudge, ScriptedJudge};
use crate::orchestrator::{Pipeline, RunResult};
use crate::prompting::{PromptFormatter, TemplateSet};
use crate::rewards::{
    ConstantScorer, ModelScorer, RewardSuite, ScriptedOutcomeScorer, ScriptedStepScorer,
};

/// Per-role live endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleBackends {
    pub planning: HttpBackendConfig,
    pub execution: HttpBackendConfig,
    pub judgment: HttpBackendConfig,
    pub answer: HttpBackendConfig,
}

/// Live reward-model endpoints; any that are absent fall back to an
/// uninformative constant scorer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScorerEndpoints {
    pub step: Option<HttpBackendConfig>,
    pub outcome: Option<HttpBackendConfig>,
    pub global: Option<HttpBackendConfig>,
}

/// The run configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub n_plans: usize,
    pub n_exec_candidates: usize,
    pub judge_token_budget: usize,
    pub max_corrections: usize,
    pub max_budget_extensions: usize,
    pub temperature: f64,
    pub alpha: f64,
    pub seed: u64,
    pub strict_scoring: bool,
    pub template_dir: Option<PathBuf>,
    /// Per-role sampling temperature overrides.
    pub temperatures: BTreeMap<AgentRole, f64>,
    pub backends: Option<RoleBackends>,
    pub scorers: Option<ScorerEndpoints>,
    /// Endpoint for the benchmark judge metric in live mode.
    pub judge_backend: Option<HttpBackendConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let scaling = ScalingConfig::default();
        RunConfig {
            n_plans: scaling.n_plans,
            n_exec_candidates: scaling.n_exec_candidates,
            judge_token_budget: scaling.judge_token_budget,
            max_corrections: scaling.max_corrections,
            max_budget_extensions: scaling.max_budget_extensions,
            temperature: scaling.sampling_temperature,
            alpha: 0.5,
            seed: scaling.seed,
            strict_scoring: false,
            template_dir: None,
            temperatures: BTreeMap::new(),
            backends: None,
            scorers: None,
            judge_backend: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_slice(&bytes)
            .map_err(|e| Error::ConfigError(format!("bad run config {}: {e}", path.display())))?;
        config.scaling().validate()?;
        if !(0.0..=1.0).contains(&config.alpha) {
            return Err(Error::ConfigError(format!(
                "alpha {} outside [0,1]",
                config.alpha
            )));
        }
        Ok(config)
    }

    pub fn scaling(&self) -> ScalingConfig {
        ScalingConfig {
            n_plans: self.n_plans,
            n_exec_candidates: self.n_exec_candidates,
            judge_token_budget: self.judge_token_budget,
            max_corrections: self.max_corrections,
            max_budget_extensions: self.max_budget_extensions,
            sampling_temperature: self.temperature,
            seed: self.seed,
        }
    }
}

/// Where responses come from.
#[derive(Clone)]
pub enum BackendMode {
    /// Deterministic script; fresh cursors per task.
    Scripted(Arc<Script>),
    /// Live endpoints from the run config.
    Live,
}

/// A loaded configuration bound to a backend mode, ready to run tasks.
pub struct Runtime {
    config: RunConfig,
    scaling: ScalingConfig,
    mode: BackendMode,
    formatter: PromptFormatter,
}

impl Runtime {
    pub fn new(config: RunConfig, mode: BackendMode) -> Result<Self> {
        let templates = match &config.template_dir {
            Some(dir) => TemplateSet::load_dir(dir)?,
            None => TemplateSet::default(),
        };
        let scaling = config.scaling();
        scaling.validate()?;
        Ok(Runtime {
            scaling,
            mode,
            formatter: PromptFormatter::new(templates),
            config,
        })
    }

    pub fn scaling(&self) -> &ScalingConfig {
        &self.scaling
    }

    pub fn alpha(&self) -> f64 {
        self.config.alpha
    }

    pub fn formatter(&self) -> &PromptFormatter {
        &self.formatter
    }

    /// Builds fresh bindings and scorers for one task. Scripted backends
    /// get fresh cursors so every task replays the script from the top.
    pub fn instantiate(&self) -> Result<(AgentBindings, RewardSuite)> {
        let (mut bindings, suite) = match &self.mode {
            BackendMode::Scripted(script) => {
                let backend = Arc::new(ScriptedBackend::new((**script).clone()));
                let bindings = AgentBindings::shared(backend)?;
                let suite = RewardSuite {
                    step: Arc::new(ScriptedStepScorer {
                        scores: script.step_scores.clone(),
                        default: script.default_step_score.or(Some(0.5)),
                    }),
                    outcome: Arc::new(ScriptedOutcomeScorer {
                        scores: script.outcome_scores.clone(),
                        default: script.default_outcome_score.or(Some(0.5)),
                    }),
                    global: None,
                    strict: self.config.strict_scoring,
                };
                (bindings, suite)
            }
            BackendMode::Live => {
                let role_backends = self.config.backends.as_ref().ok_or_else(|| {
                    Error::ConfigError("live mode requires a backends section".into())
                })?;
                let build = |role: AgentRole, cfg: &HttpBackendConfig| -> Result<AgentBinding> {
                    AgentBinding::new(role, Arc::new(HttpBackend::new(cfg.clone())?))
                };
                let bindings = AgentBindings {
                    planning: build(AgentRole::Planning, &role_backends.planning)?,
                    execution: build(AgentRole::Execution, &role_backends.execution)?,
                    judgment: build(AgentRole::Judgment, &role_backends.judgment)?,
                    answer: build(AgentRole::Answer, &role_backends.answer)?,
                };
                let scorers = self.config.scorers.clone().unwrap_or_default();
                let scorer_backend = |cfg: &HttpBackendConfig| -> Result<ModelScorer> {
                    Ok(ModelScorer::new(Arc::new(HttpBackend::new(cfg.clone())?)))
                };
                let suite = RewardSuite {
                    step: match &scorers.step {
                        Some(cfg) => Arc::new(scorer_backend(cfg)?),
                        None => Arc::new(ConstantScorer(0.5)),
                    },
                    outcome: match &scorers.outcome {
                        Some(cfg) => Arc::new(scorer_backend(cfg)?),
                        None => Arc::new(ConstantScorer(0.5)),
                    },
                    global: match &scorers.global {
                        Some(cfg) => Some(Arc::new(scorer_backend(cfg)?)),
                        None => None,
                    },
                    strict: self.config.strict_scoring,
                };
                (bindings, suite)
            }
        };
        for (role, temperature) in &self.config.temperatures {
            let binding = match role {
                AgentRole::Planning => &mut bindings.planning,
                AgentRole::Execution => &mut bindings.execution,
                AgentRole::Judgment => &mut bindings.judgment,
                AgentRole::Answer => &mut bindings.answer,
            };
            binding.sampling = SamplingParams {
                temperature: Some(*temperature),
                max_tokens: binding.sampling.max_tokens,
            };
        }
        Ok((bindings, suite))
    }

    /// Runs one task through the full pipeline.
    pub fn run_task(&self, task: &Task) -> Result<RunResult> {
        let (bindings, suite) = self.instantiate()?;
        Pipeline {
            bindings: &bindings,
            config: &self.scaling,
            formatter: &self.formatter,
            suite: &suite,
            alpha: self.config.alpha,
        }
        .run(task)
    }

    /// Judge backend for the benchmark judge metric, fresh per instance.
    pub fn judge_backend(&self) -> Result<Box<dyn JudgeBackend>> {
        match &self.mode {
            BackendMode::Scripted(script) => {
                Ok(Box::new(ScriptedJudge::new(script.judge_replies.clone())))
            }
            BackendMode::Live => {
                let cfg = self.config.judge_backend.as_ref().ok_or_else(|| {
                    Error::ConfigError("judge metric in live mode requires judge_backend".into())
                })?;
                Ok(Box::new(ModelJudge::new(Arc::new(HttpBackend::new(
                    cfg.clone(),
                )?))))
            }
        }
    }
}
