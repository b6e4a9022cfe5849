//! The persisted record of one scaled pipeline path: every backend call,
//! candidate, score, correction round, and the final answer.

use serde::{Deserialize, Serialize};

use crate::agents::AgentRole;
use crate::core::{Answer, ExecutionPlan, ExecutionProcess, Judgment, RelevantPlan, ScalingConfig};
use crate::error::{Error, Result};
use crate::prompting::PromptKind;
use crate::rewards::RewardBreakdown;

/// Trace document schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// Token accounting for one backend call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenCounts {
    pub prompt: usize,
    pub completion: usize,
    pub thinking: usize,
}

/// One backend invocation. Transport retries share a record (`attempts`);
/// format-reminder re-asks get their own record flagged `reask`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub prompt_kind: PromptKind,
    pub agent_role: AgentRole,
    pub path_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<usize>,
    pub request_text: String,
    pub response_text: String,
    pub token_counts: TokenCounts,
    /// Seconds spent on the call. The only nondeterministic trace field.
    pub wall_time: f64,
    pub attempts: u32,
    #[serde(default)]
    pub reask: bool,
}

impl CallRecord {
    pub fn check(&self) -> Result<()> {
        let permitted = match self.agent_role {
            AgentRole::Planning => matches!(
                self.prompt_kind,
                PromptKind::P1RelevantPlans | PromptKind::P2ExecutionPlan
            ),
            AgentRole::Execution => matches!(self.prompt_kind, PromptKind::P3StepExecution),
            AgentRole::Judgment => matches!(self.prompt_kind, PromptKind::P4Judgment),
            AgentRole::Answer => matches!(self.prompt_kind, PromptKind::P5Answer),
        };
        if !permitted {
            return Err(Error::InvariantViolation(format!(
                "prompt kind {} not permitted for {} role",
                self.prompt_kind, self.agent_role
            )));
        }
        if self.attempts == 0 {
            return Err(Error::InvariantViolation(
                "call record attempts must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Terminal failure of one path, with the phase it occurred in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathFailure {
    pub phase: String,
    pub message: String,
}

/// The complete record of one scaled pipeline path.
///
/// All `N_e` candidates and their scores are retained, not just the winner;
/// reward accounting and audits need the rejected ones too.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTrace {
    pub schema_version: u32,
    pub path_index: usize,
    pub config: ScalingConfig,
    pub relevant_plan: RelevantPlan,
    pub plan_history: Vec<ExecutionPlan>,
    pub process_history: Vec<ExecutionProcess>,
    pub judgments: Vec<Judgment>,
    pub corrections_used: usize,
    pub backend_calls: Vec<CallRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewards: Option<RewardBreakdown>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<Answer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<PathFailure>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PathTrace {
    pub fn new(path_index: usize, config: ScalingConfig, relevant_plan: RelevantPlan) -> Self {
        PathTrace {
            schema_version: SCHEMA_VERSION,
            path_index,
            config,
            relevant_plan,
            plan_history: Vec::new(),
            process_history: Vec::new(),
            judgments: Vec::new(),
            corrections_used: 0,
            backend_calls: Vec::new(),
            rewards: None,
            answer: None,
            error: None,
            warnings: Vec::new(),
        }
    }

    /// A path finished cleanly when it carries an answer and no error.
    pub fn completed(&self) -> bool {
        self.answer.is_some() && self.error.is_none()
    }

    pub fn record_call(&mut self, record: CallRecord) {
        self.backend_calls.push(record);
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    /// Count of backend calls excluding bounded format-reminder re-asks,
    /// the quantity the termination bound caps.
    pub fn non_reask_calls(&self) -> usize {
        self.backend_calls.iter().filter(|c| !c.reask).count()
    }

    /// Hard cap on per-path backend calls, derived from the configuration
    /// and the longest plan seen so far:
    /// `1 + (N_c+1)·(1 + steps·N_e) + (N_c+1)·(1 + max_extensions) + 1`.
    /// Exceeding it indicates a control-flow defect, never normal operation.
    pub fn call_cap(&self) -> usize {
        let max_steps = self
            .plan_history
            .iter()
            .map(|p| p.len())
            .max()
            .unwrap_or(0);
        let rounds = self.config.max_corrections + 1;
        1 + rounds * (1 + max_steps * self.config.n_exec_candidates)
            + rounds * (1 + self.config.max_budget_extensions)
            + 1
    }

    /// Runs the full invariant checklist over a (possibly re-parsed) trace.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvariantViolation(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        if self.relevant_plan.sample_plan.is_empty() {
            return Err(Error::InvariantViolation(
                "relevant plan has no steps".into(),
            ));
        }
        if self.corrections_used > self.config.max_corrections {
            return Err(Error::InvariantViolation(format!(
                "corrections_used {} exceeds bound {}",
                self.corrections_used, self.config.max_corrections
            )));
        }
        for (revision, plan) in self.plan_history.iter().enumerate() {
            plan.check()?;
            if plan.revision != revision {
                return Err(Error::InvariantViolation(format!(
                    "plan at position {} carries revision {}",
                    revision, plan.revision
                )));
            }
            if plan.origin_path != self.path_index {
                return Err(Error::InvariantViolation(format!(
                    "plan revision {} origin_path {} != path {}",
                    revision, plan.origin_path, self.path_index
                )));
            }
        }
        for (revision, process) in self.process_history.iter().enumerate() {
            if process.revision != revision {
                return Err(Error::InvariantViolation(format!(
                    "process at position {} carries revision {}",
                    revision, process.revision
                )));
            }
            let plan = self.plan_history.get(process.plan_revision).ok_or_else(|| {
                Error::InvariantViolation(format!(
                    "process revision {} references missing plan revision {}",
                    revision, process.plan_revision
                ))
            })?;
            process.check(plan.len(), self.config.n_exec_candidates)?;
        }
        for (round, judgment) in self.judgments.iter().enumerate() {
            let plan_len = self
                .process_history
                .get(round)
                .and_then(|p| self.plan_history.get(p.plan_revision))
                .map(|p| p.len())
                .unwrap_or(usize::MAX);
            judgment.check_against_plan(plan_len)?;
        }
        // Every exit from the correction loop follows a judgment, so a
        // completed path always holds one more judgment than corrections.
        if self.completed() && self.judgments.len() != self.corrections_used + 1 {
            return Err(Error::InvariantViolation(format!(
                "completed path has {} judgment(s) for {} correction(s)",
                self.judgments.len(),
                self.corrections_used
            )));
        }
        for call in &self.backend_calls {
            call.check()?;
            if call.path_index != self.path_index {
                return Err(Error::InvariantViolation(format!(
                    "call record path {} inside trace for path {}",
                    call.path_index, self.path_index
                )));
            }
        }
        if self.non_reask_calls() > self.call_cap() {
            return Err(Error::InvariantViolation(format!(
                "{} non-reask call(s) exceed termination cap {}",
                self.non_reask_calls(),
                self.call_cap()
            )));
        }
        if self.completed() {
            let answer_calls = self
                .backend_calls
                .iter()
                .filter(|c| c.prompt_kind == PromptKind::P5Answer && !c.reask)
                .count();
            if answer_calls != 1 {
                return Err(Error::InvariantViolation(format!(
                    "completed path has {answer_calls} primary answer call(s)"
                )));
            }
        }
        if let Some(answer) = &self.answer {
            if answer.text.trim().is_empty() {
                return Err(Error::InvariantViolation("answer text is empty".into()));
            }
            if answer.path_index != self.path_index {
                return Err(Error::InvariantViolation(format!(
                    "answer path {} inside trace for path {}",
                    answer.path_index, self.path_index
                )));
            }
        }
        if let Some(rewards) = &self.rewards {
            rewards.check()?;
        }
        Ok(())
    }
}

/// Serializes a trace to its JSON document form (UTF-8, schema version 1).
pub fn serialize_trace(trace: &PathTrace) -> Result<Vec<u8>> {
    Ok(serde_json::to_vec_pretty(trace)?)
}

/// Parses a trace document, rejecting malformed bytes and unknown schema
/// versions.
pub fn parse_trace(bytes: &[u8]) -> Result<PathTrace> {
    let trace: PathTrace = serde_json::from_slice(bytes)
        .map_err(|e| Error::MalformedTrace(e.to_string()))?;
    if trace.schema_version != SCHEMA_VERSION {
        return Err(Error::MalformedTrace(format!(
            "unsupported schema_version {}",
            trace.schema_version
        )));
    }
    Ok(trace)
}
