//! The four role-specialized agents: thin wrappers binding prompts,
//! backends, parsing, and per-role policies.
//!
//! The judgment agent can only return a [`Judgment`] — it has no way to
//! hand back modified plan or process content, which is what keeps
//! judgment separate from correction.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backends::{
    generate_recorded, Backend, CallMeta, GenerationRequest, GenerationResponse, Modality,
};
use crate::core::{
    Answer, Candidate, ExecutionPlan, ExecutionProcess, ExecutionUnit, Judgment, Mistake,
    PathTrace, RelevantPlan, ScalingConfig, StepRecord, Task,
};
use crate::error::{Error, Result};
use crate::prompting::{
    parse_execution_plan, parse_judgment, parse_relevant_plans, Prompt, PromptFormatter,
    PromptKind,
};
use crate::rewards::{score_step, RewardSuite, StepContext};
use crate::scaling::{derive_seed, force_budget, select_best_candidate, BudgetPolicy};
use crate::tools::{self, ToolCallRecord, ToolCatalog, ToolStatus};

/// The four collaborating roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentRole {
    Planning,
    Execution,
    Judgment,
    Answer,
}

impl AgentRole {
    /// Planning and execution read the visual inputs; judgment and answer
    /// work from text alone.
    pub fn requires_vision(&self) -> bool {
        matches!(self, AgentRole::Planning | AgentRole::Execution)
    }
}

impl std::fmt::Display for AgentRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            AgentRole::Planning => "planning",
            AgentRole::Execution => "execution",
            AgentRole::Judgment => "judgment",
            AgentRole::Answer => "answer",
        };
        write!(f, "{name}")
    }
}

/// Per-role sampling overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    /// Falls back to the run's `sampling_temperature` when absent.
    pub temperature: Option<f64>,
    pub max_tokens: Option<usize>,
}

/// One role bound to one backend. The modality rule is enforced at bind
/// time: vision-reading roles only accept vision backends.
#[derive(Clone)]
pub struct AgentBinding {
    pub role: AgentRole,
    pub backend: Arc<dyn Backend>,
    pub sampling: SamplingParams,
}

impl AgentBinding {
    pub fn new(role: AgentRole, backend: Arc<dyn Backend>) -> Result<Self> {
        if role.requires_vision() && backend.profile().modality != Modality::VisionText {
            return Err(Error::ModalityMismatch(format!(
                "{role} role requires a vision_text backend, got text backend {}",
                backend.profile().name
            )));
        }
        Ok(AgentBinding {
            role,
            backend,
            sampling: SamplingParams::default(),
        })
    }

    pub fn with_sampling(mut self, sampling: SamplingParams) -> Self {
        self.sampling = sampling;
        self
    }
}

/// The four bindings one pipeline run uses.
#[derive(Clone)]
pub struct AgentBindings {
    pub planning: AgentBinding,
    pub execution: AgentBinding,
    pub judgment: AgentBinding,
    pub answer: AgentBinding,
}

impl AgentBindings {
    /// Binds all four roles to one shared backend (scripted runs).
    pub fn shared(backend: Arc<dyn Backend>) -> Result<Self> {
        Ok(AgentBindings {
            planning: AgentBinding::new(AgentRole::Planning, backend.clone())?,
            execution: AgentBinding::new(AgentRole::Execution, backend.clone())?,
            judgment: AgentBinding::new(AgentRole::Judgment, backend.clone())?,
            answer: AgentBinding::new(AgentRole::Answer, backend)?,
        })
    }
}

/// Shared per-path context: formatter, run configuration, scorers, and the
/// path this work belongs to.
pub struct AgentContext<'a> {
    pub formatter: &'a PromptFormatter,
    pub config: &'a ScalingConfig,
    pub suite: &'a RewardSuite,
    pub path_index: usize,
}

impl<'a> AgentContext<'a> {
    fn request(
        &self,
        binding: &AgentBinding,
        prompt: &Prompt,
        task: Option<&Task>,
        seed: u64,
    ) -> GenerationRequest {
        let mut request = GenerationRequest::new(&prompt.system_text, &prompt.user_text);
        if let Some(task) = task {
            request.image_refs = task.visuals.clone();
        }
        request.temperature = binding
            .sampling
            .temperature
            .unwrap_or(self.config.sampling_temperature);
        if let Some(max_tokens) = binding.sampling.max_tokens {
            request.max_tokens = max_tokens;
        }
        request.seed = Some(seed);
        request
    }
}

const FORMAT_REMINDER: &str = "\n\nREMINDER: your previous reply could not be parsed. \
Respond again and follow the required output format exactly.";

fn reaskable(error: &Error) -> bool {
    matches!(
        error,
        Error::ParseError { .. } | Error::PlanContainsToolBinding { .. }
    )
}

/// One call plus one format-reminder re-ask when the output fails to parse.
fn generate_parsed<T>(
    binding: &AgentBinding,
    meta: CallMeta,
    request: &GenerationRequest,
    trace: &mut PathTrace,
    parse: impl Fn(&GenerationResponse) -> Result<T>,
) -> Result<T> {
    let response = generate_recorded(binding.backend.as_ref(), &meta, request, trace)?;
    match parse(&response) {
        Ok(value) => Ok(value),
        Err(error) if reaskable(&error) => {
            trace.warn(format!(
                "{} output failed to parse ({error}); re-asking with a format reminder",
                meta.prompt_kind
            ));
            let mut retry = request.clone();
            retry.user_text.push_str(FORMAT_REMINDER);
            let retry_meta = meta.as_reask();
            let response = generate_recorded(binding.backend.as_ref(), &retry_meta, &retry, trace)?;
            parse(&response)
        }
        Err(error) => Err(error),
    }
}

/// Asks the planning agent for `n_plans` relevant sample problems with
/// plans, in a single backend call.
pub fn plan_relevant(
    binding: &AgentBinding,
    ctx: &AgentContext<'_>,
    task: &Task,
    n_plans: usize,
    trace: &mut PathTrace,
) -> Result<Vec<RelevantPlan>> {
    debug_assert_eq!(binding.role, AgentRole::Planning);
    let prompt = ctx.formatter.format_p1(&task.question, n_plans);
    let seed = derive_seed(ctx.config.seed, ctx.path_index, 0, 0);
    let request = ctx.request(binding, &prompt, Some(task), seed);
    let meta = CallMeta::new(AgentRole::Planning, PromptKind::P1RelevantPlans, ctx.path_index);
    generate_parsed(binding, meta, &request, trace, |response| {
        parse_relevant_plans(&response.text, n_plans)
    })
}

/// Asks the planning agent for an execution plan seeded by one relevant
/// plan, carrying accumulated mistakes on correction rounds.
pub fn plan_execution(
    binding: &AgentBinding,
    ctx: &AgentContext<'_>,
    task: &Task,
    relevant: &RelevantPlan,
    mistakes: &[Mistake],
    revision: usize,
    trace: &mut PathTrace,
) -> Result<ExecutionPlan> {
    debug_assert_eq!(binding.role, AgentRole::Planning);
    let prompt = ctx.formatter.format_p2(&task.question, relevant, mistakes);
    let seed = derive_seed(ctx.config.seed, ctx.path_index, 0, revision + 1);
    let request = ctx.request(binding, &prompt, Some(task), seed);
    let meta = CallMeta::new(AgentRole::Planning, PromptKind::P2ExecutionPlan, ctx.path_index);
    let path_index = ctx.path_index;
    generate_parsed(binding, meta, &request, trace, move |response| {
        parse_execution_plan(&response.text, path_index, revision)
    })
}

/// Executes every plan step in order. Each step samples `N_e` candidates,
/// scores them, keeps the best as the base for subsequent steps, and honors
/// at most one tool call from the chosen text.
#[allow(clippy::too_many_arguments)]
pub fn execute_plan(
    binding: &AgentBinding,
    ctx: &AgentContext<'_>,
    task: &Task,
    plan: &ExecutionPlan,
    catalog: &ToolCatalog,
    mistakes: &[Mistake],
    revision: usize,
    trace: &mut PathTrace,
) -> Result<ExecutionProcess> {
    debug_assert_eq!(binding.role, AgentRole::Execution);
    let mut records: Vec<StepRecord> = Vec::with_capacity(plan.len());
    let mut prior_texts: Vec<String> = Vec::new();
    for step in &plan.steps {
        let unit = ExecutionUnit::derive(step, task.visuals.len());
        let prompt = ctx.formatter.format_p3(
            &task.question,
            &unit,
            catalog,
            mistakes,
            &records,
            &task.visuals,
        )?;
        let mut candidates = Vec::with_capacity(ctx.config.n_exec_candidates);
        for candidate_index in 0..ctx.config.n_exec_candidates {
            let seed = derive_seed(ctx.config.seed, ctx.path_index, step.index, candidate_index);
            let request = ctx.request(binding, &prompt, Some(task), seed);
            let meta = CallMeta::new(AgentRole::Execution, PromptKind::P3StepExecution, ctx.path_index)
                .step(step.index)
                .candidate(candidate_index);
            let response = generate_recorded(binding.backend.as_ref(), &meta, &request, trace)?;
            let context = StepContext {
                task,
                plan,
                prior_steps: &prior_texts,
                candidate: &response.text,
            };
            let (score, warning) = score_step(ctx.suite.step.as_ref(), &context, ctx.suite.strict)?;
            if let Some(warning) = warning {
                trace.warn(warning);
            }
            candidates.push(Candidate {
                text: response.text,
                score,
            });
        }
        let selected = select_best_candidate(candidates)?;
        let chosen_text = selected.candidates[selected.chosen].text.clone();
        let tool_calls = run_tool_call(&chosen_text, catalog);
        prior_texts.push(chosen_text.clone());
        records.push(StepRecord {
            step_index: step.index,
            chosen_text,
            tool_calls,
            candidates: selected.candidates,
            chosen_candidate: selected.chosen,
        });
    }
    Ok(ExecutionProcess {
        records,
        revision,
        plan_revision: plan.revision,
    })
}

fn run_tool_call(text: &str, catalog: &ToolCatalog) -> Vec<ToolCallRecord> {
    match tools::find_tool_call(text) {
        None => Vec::new(),
        Some(Ok(call)) => vec![catalog.invoke(&call)],
        Some(Err(message)) => vec![ToolCallRecord {
            tool: "(malformed)".into(),
            arguments: serde_json::Map::new(),
            output: message,
            status: ToolStatus::ToolError,
        }],
    }
}

/// Asks the judgment agent to assess one plan–process pair under the
/// thinking budget. The output type alone guarantees the judge returns no
/// corrected content.
pub fn judge(
    binding: &AgentBinding,
    ctx: &AgentContext<'_>,
    task: &Task,
    plan: &ExecutionPlan,
    process: &ExecutionProcess,
    trace: &mut PathTrace,
) -> Result<Judgment> {
    debug_assert_eq!(binding.role, AgentRole::Judgment);
    let prompt = ctx.formatter.format_p4(&task.question, plan, process);
    let seed = derive_seed(ctx.config.seed, ctx.path_index, 0, process.revision + 100);
    let request = ctx.request(binding, &prompt, None, seed);
    let policy = BudgetPolicy::from(ctx.config);
    let meta = CallMeta::new(AgentRole::Judgment, PromptKind::P4Judgment, ctx.path_index);

    let parse = |response: &GenerationResponse| -> Result<Judgment> {
        let judgment = parse_judgment(&response.text)?;
        judgment
            .check_against_plan(plan.len())
            .map_err(|e| Error::parse(0, e.to_string()))?;
        Ok(judgment)
    };

    let budgeted = force_budget(binding.backend.as_ref(), &meta, &request, &policy, trace)?;
    let attempt = match parse(&budgeted.response) {
        Ok(mut judgment) => {
            judgment.thinking_tokens_used = budgeted.thinking_tokens_used;
            judgment.extensions_used = budgeted.extensions_used;
            return Ok(judgment);
        }
        Err(error) if reaskable(&error) => error,
        Err(error) => return Err(error),
    };
    trace.warn(format!(
        "p4 output failed to parse ({attempt}); re-asking with a format reminder"
    ));
    let mut retry = request.clone();
    retry.user_text.push_str(FORMAT_REMINDER);
    let retry_meta = meta.as_reask();
    let budgeted = force_budget(binding.backend.as_ref(), &retry_meta, &retry, &policy, trace)?;
    let mut judgment = parse(&budgeted.response)?;
    judgment.thinking_tokens_used = budgeted.thinking_tokens_used;
    judgment.extensions_used = budgeted.extensions_used;
    Ok(judgment)
}

/// Asks the answer agent for the final answer in one unscaled call over the
/// final process and every accumulated mistake.
pub fn answer(
    binding: &AgentBinding,
    ctx: &AgentContext<'_>,
    task: &Task,
    process: &ExecutionProcess,
    mistakes: &[Mistake],
    trace: &mut PathTrace,
) -> Result<Answer> {
    debug_assert_eq!(binding.role, AgentRole::Answer);
    let prompt = ctx.formatter.format_p5(&task.question, process, mistakes);
    let seed = derive_seed(ctx.config.seed, ctx.path_index, 0, 999);
    let request = ctx.request(binding, &prompt, None, seed);
    let meta = CallMeta::new(AgentRole::Answer, PromptKind::P5Answer, ctx.path_index);
    let response = generate_recorded(binding.backend.as_ref(), &meta, &request, trace)?;
    let text = response.text.trim().to_string();
    if !text.is_empty() {
        return Ok(Answer {
            text,
            path_index: ctx.path_index,
        });
    }
    trace.warn("answer agent returned whitespace; retrying once".to_string());
    let mut retry = request.clone();
    retry
        .user_text
        .push_str("\n\nREMINDER: your previous reply was empty. State the final answer.");
    let retry_meta = meta.as_reask();
    let response = generate_recorded(binding.backend.as_ref(), &retry_meta, &retry, trace)?;
    let text = response.text.trim().to_string();
    if text.is_empty() {
        return Err(Error::EmptyAnswer);
    }
    Ok(Answer {
        text,
        path_index: ctx.path_index,
    })
}
