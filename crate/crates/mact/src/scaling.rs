//! Agent-wise hybrid test-time scaling: parallel path fan-out for planning,
//! best-of-N per-step selection for execution, and thinking-token budget
//! forcing for judgment. The answer agent is never scaled.

use serde::{Deserialize, Serialize};

use crate::agents::{plan_relevant, AgentBinding, AgentContext};
use crate::backends::{
    count_thinking_tokens, generate_recorded, CallMeta, ContinuationTurn, GenerationRequest,
    GenerationResponse,
};
use crate::core::{Candidate, PathTrace, RelevantPlan, ScalingConfig, Task, TokenCounts};
use crate::error::{Error, Result};

/// Candidate executions for one step with the selected index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
    /// Smallest index attaining the maximum score.
    pub chosen: usize,
}

/// Picks the top-scoring candidate; ties break to the lowest index so
/// selection is a deterministic reduction.
pub fn select_best_candidate(candidates: Vec<Candidate>) -> Result<CandidateSet> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidateList);
    }
    let mut chosen = 0;
    for (i, candidate) in candidates.iter().enumerate() {
        if candidate.score > candidates[chosen].score {
            chosen = i;
        }
    }
    Ok(CandidateSet { candidates, chosen })
}

/// Thinking-token floor enforced on the judgment agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetPolicy {
    /// Minimum thinking tokens; 0 disables forcing.
    pub budget: usize,
    /// Cue appended as the user turn of each continuation request.
    pub continuation_cue: String,
    pub max_extensions: usize,
}

impl BudgetPolicy {
    pub fn new(budget: usize, max_extensions: usize) -> Self {
        BudgetPolicy {
            budget,
            continuation_cue: "Wait".into(),
            max_extensions,
        }
    }
}

impl From<&ScalingConfig> for BudgetPolicy {
    fn from(config: &ScalingConfig) -> Self {
        BudgetPolicy::new(config.judge_token_budget, config.max_budget_extensions)
    }
}

/// A budget-forced generation: the aggregated response plus the thinking
/// accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetedResponse {
    pub response: GenerationResponse,
    pub thinking_tokens_used: usize,
    pub extensions_used: usize,
}

/// Generates under a thinking budget. When the cumulative thinking-token
/// count falls short, continuation requests carrying the cue are issued
/// until the budget is met or the extension cap is reached. The final
/// non-thinking text comes from the last response; thinking segments are
/// concatenated.
pub fn force_budget(
    backend: &dyn crate::backends::Backend,
    meta: &CallMeta,
    request: &GenerationRequest,
    policy: &BudgetPolicy,
    trace: &mut PathTrace,
) -> Result<BudgetedResponse> {
    let mut response = generate_recorded(backend, meta, request, trace)?;
    let mut thinking_segments: Vec<String> = response.thinking_text.iter().cloned().collect();
    let mut total_thinking = count_thinking_tokens(&response);
    let mut token_counts = response.token_counts;
    let mut extensions_used = 0;
    let mut turns: Vec<ContinuationTurn> = Vec::new();

    while total_thinking < policy.budget && extensions_used < policy.max_extensions {
        turns.push(ContinuationTurn {
            assistant_text: response.raw_text.clone(),
            user_cue: policy.continuation_cue.clone(),
        });
        let mut continuation = request.clone();
        continuation.continuation_of = Some(response.response_id.clone());
        continuation.continuation_turns = turns.clone();
        response = generate_recorded(backend, meta, &continuation, trace)?;
        if let Some(thinking) = &response.thinking_text {
            thinking_segments.push(thinking.clone());
        }
        total_thinking += count_thinking_tokens(&response);
        token_counts = TokenCounts {
            prompt: token_counts.prompt + response.token_counts.prompt,
            completion: token_counts.completion + response.token_counts.completion,
            thinking: token_counts.thinking + response.token_counts.thinking,
        };
        extensions_used += 1;
    }

    let aggregated = GenerationResponse {
        thinking_text: if thinking_segments.is_empty() {
            None
        } else {
            Some(thinking_segments.join("\n"))
        },
        token_counts,
        ..response
    };
    Ok(BudgetedResponse {
        response: aggregated,
        thinking_tokens_used: total_thinking,
        extensions_used,
    })
}

/// One parallel path ready to run: its seed plan and its trace (already
/// holding the shared relevant-plans call for path 0).
#[derive(Debug)]
pub struct PathSeed {
    pub path_index: usize,
    pub relevant_plan: RelevantPlan,
    pub trace: PathTrace,
}

/// Generates `n_plans` relevant plans in one call and fans them out into
/// causally independent path seeds, indexed `0..n_plans`. The single
/// relevant-plans call is recorded in path 0's trace.
pub fn fan_out_paths(
    planner: &AgentBinding,
    ctx: &AgentContext<'_>,
    task: &Task,
    n_plans: usize,
) -> Result<Vec<PathSeed>> {
    if n_plans < 1 {
        return Err(Error::ConfigError("n_plans must be >= 1".into()));
    }
    let placeholder = RelevantPlan::new("(pending)", vec!["(pending)".into()])?;
    let mut first_trace = PathTrace::new(0, ctx.config.clone(), placeholder);
    let plans = plan_relevant(planner, ctx, task, n_plans, &mut first_trace)?;
    let mut first_trace = Some(first_trace);
    let mut seeds = Vec::with_capacity(n_plans);
    for (index, relevant_plan) in plans.into_iter().enumerate() {
        let trace = match first_trace.take() {
            Some(mut trace) => {
                trace.relevant_plan = relevant_plan.clone();
                trace
            }
            None => PathTrace::new(index, ctx.config.clone(), relevant_plan.clone()),
        };
        seeds.push(PathSeed {
            path_index: index,
            relevant_plan,
            trace,
        });
    }
    Ok(seeds)
}

/// Derives a per-call sampling seed from the run seed and the call's
/// coordinates, so reruns with one configuration are reproducible.
pub fn derive_seed(base: u64, path_index: usize, step: usize, candidate: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    let mut seed = mix(base.wrapping_add(0x9e37_79b9_7f4a_7c15));
    seed = mix(seed ^ (path_index as u64).wrapping_add(1));
    seed = mix(seed ^ (step as u64).wrapping_add(1));
    mix(seed ^ (candidate as u64).wrapping_add(1))
}
