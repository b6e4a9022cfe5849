//! Scorer contracts and mixed reward accounting: agent-specific rewards
//! blended with a single global reward over the path's final answer, used
//! for candidate selection, path selection, and trace annotation.

use std::collections::BTreeMap;
use std::sync::Arc;

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::backends::{Backend, CallMeta, GenerationRequest};
use crate::core::{ExecutionPlan, PathTrace, Task};
use crate::error::{Error, Result};
use crate::prompting::{render_judgment, PromptKind};

/// Context handed to a step scorer: the task, the active plan, the chosen
/// texts of prior steps, and the candidate under evaluation.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub task: &'a Task,
    pub plan: &'a ExecutionPlan,
    pub prior_steps: &'a [String],
    pub candidate: &'a str,
}

/// Scores one candidate step in `[0,1]`. Implementations may return raw
/// out-of-range values; callers clamp through [`score_step`].
pub trait StepScorer: Send + Sync {
    fn score(&self, context: &StepContext<'_>) -> Result<f64>;
}

/// Scores one final text in `[0,1]` for a task.
pub trait OutcomeScorer: Send + Sync {
    fn score(&self, task: &Task, text: &str) -> Result<f64>;
}

/// Clamps a raw score into `[0,1]`, reporting when it had to.
fn clamp_score(raw: f64, origin: &str) -> (f64, Option<String>) {
    if raw.is_nan() {
        return (0.0, Some(format!("{origin} returned NaN; stored 0.0")));
    }
    if !(0.0..=1.0).contains(&raw) {
        let clamped = raw.clamp(0.0, 1.0);
        return (
            clamped,
            Some(format!("{origin} returned out-of-range {raw}; clamped to {clamped}")),
        );
    }
    (raw, None)
}

/// Default score stored when a non-strict scorer is unavailable: the
/// uninformative midpoint.
pub const FALLBACK_SCORE: f64 = 0.5;

/// Runs a step scorer with the clamp rule and the unavailability policy:
/// strict mode surfaces [`Error::ScorerUnavailable`], otherwise the
/// fallback score is stored and a warning returned.
pub fn score_step(
    scorer: &dyn StepScorer,
    context: &StepContext<'_>,
    strict: bool,
) -> Result<(f64, Option<String>)> {
    match scorer.score(context) {
        Ok(raw) => Ok(clamp_score(raw, "step scorer")),
        Err(err @ Error::ScorerUnavailable(_)) if strict => Err(err),
        Err(Error::ScorerUnavailable(message)) => Ok((
            FALLBACK_SCORE,
            Some(format!("step scorer unavailable ({message}); stored {FALLBACK_SCORE}")),
        )),
        Err(other) => Err(other),
    }
}

/// [`score_step`]'s twin for outcome scorers.
pub fn score_outcome(
    scorer: &dyn OutcomeScorer,
    task: &Task,
    text: &str,
    strict: bool,
) -> Result<(f64, Option<String>)> {
    match scorer.score(task, text) {
        Ok(raw) => Ok(clamp_score(raw, "outcome scorer")),
        Err(err @ Error::ScorerUnavailable(_)) if strict => Err(err),
        Err(Error::ScorerUnavailable(message)) => Ok((
            FALLBACK_SCORE,
            Some(format!("outcome scorer unavailable ({message}); stored {FALLBACK_SCORE}")),
        )),
        Err(other) => Err(other),
    }
}

/// Constant scorer, handy as a neutral default.
#[derive(Debug, Clone, Copy)]
pub struct ConstantScorer(pub f64);

impl StepScorer for ConstantScorer {
    fn score(&self, _context: &StepContext<'_>) -> Result<f64> {
        Ok(self.0)
    }
}

impl OutcomeScorer for ConstantScorer {
    fn score(&self, _task: &Task, _text: &str) -> Result<f64> {
        Ok(self.0)
    }
}

/// Deterministic table-driven step scorer keyed by candidate text.
#[derive(Debug, Clone, Default)]
pub struct ScriptedStepScorer {
    pub scores: BTreeMap<String, f64>,
    pub default: Option<f64>,
}

impl StepScorer for ScriptedStepScorer {
    fn score(&self, context: &StepContext<'_>) -> Result<f64> {
        self.scores
            .get(context.candidate)
            .copied()
            .or(self.default)
            .ok_or_else(|| {
                Error::ScorerUnavailable(format!("no scripted score for {:?}", context.candidate))
            })
    }
}

/// Deterministic table-driven outcome scorer keyed by scored text.
#[derive(Debug, Clone, Default)]
pub struct ScriptedOutcomeScorer {
    pub scores: BTreeMap<String, f64>,
    pub default: Option<f64>,
}

impl OutcomeScorer for ScriptedOutcomeScorer {
    fn score(&self, _task: &Task, text: &str) -> Result<f64> {
        self.scores.get(text).copied().or(self.default).ok_or_else(|| {
            Error::ScorerUnavailable(format!("no scripted score for {text:?}"))
        })
    }
}

/// Oracle scorer: 1.0 when the candidate matches the reference exactly
/// (after trimming), else 0.0.
#[derive(Debug, Clone)]
pub struct OracleStepScorer {
    pub reference: String,
}

impl StepScorer for OracleStepScorer {
    fn score(&self, context: &StepContext<'_>) -> Result<f64> {
        Ok(if context.candidate.trim() == self.reference {
            1.0
        } else {
            0.0
        })
    }
}

fn score_line_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?im)^\s*SCORE\s*:\s*(-?[0-9]*\.?[0-9]+)\s*$").unwrap())
}

/// Extracts the value of the first `SCORE: <decimal>` line.
pub fn parse_score_line(text: &str) -> Option<f64> {
    score_line_re()
        .captures(text)
        .and_then(|caps| caps[1].parse().ok())
}

/// Live scorer adapter: prompts a model endpoint and parses a
/// `SCORE: <decimal>` line from its reply. Parse failures are
/// [`Error::ScorerUnavailable`].
pub struct ModelScorer {
    backend: Arc<dyn Backend>,
    max_tokens: usize,
}

impl ModelScorer {
    pub fn new(backend: Arc<dyn Backend>) -> Self {
        ModelScorer {
            backend,
            max_tokens: 256,
        }
    }

    fn ask(&self, meta: &CallMeta, system: &str, user: String) -> Result<f64> {
        let mut request = GenerationRequest::new(system, user);
        request.max_tokens = self.max_tokens;
        let response = self
            .backend
            .generate(meta, &request)
            .map_err(|e| Error::ScorerUnavailable(e.to_string()))?;
        parse_score_line(&response.text)
            .ok_or_else(|| Error::ScorerUnavailable(format!("no SCORE line in {:?}", response.text)))
    }
}

impl StepScorer for ModelScorer {
    fn score(&self, context: &StepContext<'_>) -> Result<f64> {
        let prior = if context.prior_steps.is_empty() {
            "(none)".to_string()
        } else {
            context.prior_steps.join("\n")
        };
        let user = format!(
            "Question: {}\n\nPlan:\n{}\n\nCompleted steps:\n{}\n\nCandidate next step execution:\n{}\n\nRate how correct and useful this candidate is, from 0 to 1.\nReply with one line: SCORE: <decimal>",
            context.task.question,
            crate::prompting::render_execution_plan(context.plan),
            prior,
            context.candidate,
        );
        // Addressing metadata only; the scripted backend is never used here.
        let meta = CallMeta::new(
            crate::agents::AgentRole::Execution,
            PromptKind::P3StepExecution,
            0,
        );
        self.ask(&meta, "You are a strict process reward model.", user)
    }
}

impl OutcomeScorer for ModelScorer {
    fn score(&self, task: &Task, text: &str) -> Result<f64> {
        let user = format!(
            "Question: {}\n\nOutput under evaluation:\n{}\n\nRate how correct this output is, from 0 to 1.\nReply with one line: SCORE: <decimal>",
            task.question, text,
        );
        let meta = CallMeta::new(crate::agents::AgentRole::Answer, PromptKind::P5Answer, 0);
        self.ask(&meta, "You are a strict outcome reward model.", user)
    }
}

/// The scorers one run uses, plus the unavailability policy.
#[derive(Clone)]
pub struct RewardSuite {
    pub step: Arc<dyn StepScorer>,
    pub outcome: Arc<dyn OutcomeScorer>,
    /// Scorer for the global reward; falls back to `outcome` when absent.
    pub global: Option<Arc<dyn OutcomeScorer>>,
    pub strict: bool,
}

impl RewardSuite {
    pub fn neutral() -> Self {
        RewardSuite {
            step: Arc::new(ConstantScorer(1.0)),
            outcome: Arc::new(ConstantScorer(1.0)),
            global: None,
            strict: false,
        }
    }

    pub fn global_scorer(&self) -> &dyn OutcomeScorer {
        self.global.as_deref().unwrap_or(self.outcome.as_ref())
    }
}

/// Per-agent mixed reward values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedRewards {
    pub planning: f64,
    pub execution: f64,
    pub judgment: f64,
    pub answer: f64,
}

/// Agent-specific rewards, the global reward over the final answer, and
/// their mix `alpha * specific_mean + (1 - alpha) * global`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub alpha: f64,
    /// One score per plan revision.
    pub planning: Vec<f64>,
    /// Chosen candidate's step score, one per step record across all
    /// process revisions, in execution order.
    pub execution: Vec<f64>,
    /// One outcome score per judgment.
    pub judgment: Vec<f64>,
    /// Outcome score for the final answer.
    pub answer: f64,
    /// Global reward for the path's final answer.
    pub global: f64,
    pub mixed: MixedRewards,
}

fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvariantViolation(
            "cannot mix an empty specific-reward list".into(),
        ));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

impl RewardBreakdown {
    pub fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvariantViolation(format!(
                "alpha {} outside [0,1]",
                self.alpha
            )));
        }
        let all = self
            .planning
            .iter()
            .chain(&self.execution)
            .chain(&self.judgment)
            .chain([&self.answer, &self.global]);
        for value in all {
            if !(0.0..=1.0).contains(value) {
                return Err(Error::InvariantViolation(format!(
                    "stored reward {value} outside [0,1]"
                )));
            }
        }
        let recomputed = [
            (mean(&self.planning)?, self.mixed.planning),
            (mean(&self.execution)?, self.mixed.execution),
            (mean(&self.judgment)?, self.mixed.judgment),
            (self.answer, self.mixed.answer),
        ];
        for (specific_mean, stored) in recomputed {
            let expected = self.alpha * specific_mean + (1.0 - self.alpha) * self.global;
            if (expected - stored).abs() > 1e-9 {
                return Err(Error::InvariantViolation(format!(
                    "mixed reward {stored} diverges from formula value {expected}"
                )));
            }
        }
        Ok(())
    }
}

/// Scores a completed path and attaches the breakdown to its trace.
///
/// Planning revisions are scored with the step scorer over their own steps
/// (earlier plan steps as context); execution rewards reuse the chosen
/// candidates' recorded scores; judgments are scored on their canonical
/// rendering; answer and global rewards score the final answer text.
pub fn compute_breakdown(
    task: &Task,
    trace: &mut PathTrace,
    alpha: f64,
    suite: &RewardSuite,
) -> Result<RewardBreakdown> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::ConfigError(format!("alpha {alpha} outside [0,1]")));
    }
    let answer = trace.answer.clone().ok_or(Error::IncompletePath)?;

    let mut warnings: Vec<String> = Vec::new();
    let mut planning = Vec::with_capacity(trace.plan_history.len());
    for plan in &trace.plan_history {
        let mut step_scores = Vec::with_capacity(plan.steps.len());
        let mut prior: Vec<String> = Vec::new();
        for step in &plan.steps {
            let context = StepContext {
                task,
                plan,
                prior_steps: &prior,
                candidate: &step.description,
            };
            let (score, warning) = score_step(suite.step.as_ref(), &context, suite.strict)?;
            if let Some(w) = warning {
                warnings.push(w);
            }
            step_scores.push(score);
            prior.push(step.description.clone());
        }
        planning.push(mean(&step_scores)?);
    }

    let execution: Vec<f64> = trace
        .process_history
        .iter()
        .flat_map(|process| process.records.iter().map(|r| r.chosen_score()))
        .collect();

    let mut judgment = Vec::with_capacity(trace.judgments.len());
    for judged in &trace.judgments {
        let (score, warning) =
            score_outcome(suite.outcome.as_ref(), task, &render_judgment(judged), suite.strict)?;
        if let Some(w) = warning {
            warnings.push(w);
        }
        judgment.push(score);
    }

    let (answer_score, warning) =
        score_outcome(suite.outcome.as_ref(), task, &answer.text, suite.strict)?;
    if let Some(w) = warning {
        warnings.push(w);
    }
    let (global, warning) = score_outcome(suite.global_scorer(), task, &answer.text, suite.strict)?;
    if let Some(w) = warning {
        warnings.push(w);
    }

    let mixed = MixedRewards {
        planning: alpha * mean(&planning)? + (1.0 - alpha) * global,
        execution: alpha * mean(&execution)? + (1.0 - alpha) * global,
        judgment: alpha * mean(&judgment)? + (1.0 - alpha) * global,
        answer: alpha * answer_score + (1.0 - alpha) * global,
    };
    let breakdown = RewardBreakdown {
        alpha,
        planning,
        execution,
        judgment,
        answer: answer_score,
        global,
        mixed,
    };
    for warning in warnings {
        trace.warn(warning);
    }
    trace.rewards = Some(breakdown.clone());
    Ok(breakdown)
}

/// Picks the path with the maximum global reward; ties break to the lowest
/// index. Only completed, scored paths compete.
pub fn select_path(traces: &[PathTrace]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (index, trace) in traces.iter().enumerate() {
        if !trace.completed() {
            continue;
        }
        let Some(rewards) = &trace.rewards else {
            continue;
        };
        let better = match best {
            None => true,
            Some((_, best_global)) => rewards.global > best_global,
        };
        if better {
            best = Some((index, rewards.global));
        }
    }
    best.map(|(index, _)| index).ok_or(Error::NoCompletedPaths)
}
