//! Shared scripted fixtures for integration and acceptance tests.
#![allow(dead_code)] // each test target compiles its own copy

use std::sync::Arc;

use mact::agents::AgentRole;
use mact::backends::Script;
use mact::core::RelevantPlan;
use mact::orchestrator::{BackendMode, RunConfig, Runtime};
use mact::prompting::render_relevant_plans;

/// Canonical relevant-plans response with `n` blocks.
pub fn relevant_fixture(n: usize) -> String {
    let plans: Vec<RelevantPlan> = (0..n)
        .map(|i| {
            RelevantPlan::new(
                format!("sample problem {i}"),
                vec![format!("sample step for path {i}")],
            )
            .unwrap()
        })
        .collect();
    render_relevant_plans(&plans)
}

/// Canonical numbered-plan response.
pub fn plan_text(steps: &[&str]) -> String {
    steps
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. {}", i + 1, s))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn clean_judgment() -> String {
    "FLAG_PLAN: false\nFLAG_EXE: false".to_string()
}

pub fn plan_fail_judgment(description: &str) -> String {
    format!("FLAG_PLAN: true\nFLAG_EXE: false\nMISTAKE: plan step whole \u{2014} {description}")
}

pub fn exe_fail_judgment(step: usize, description: &str) -> String {
    format!("FLAG_PLAN: false\nFLAG_EXE: true\nMISTAKE: execution step {step} \u{2014} {description}")
}

/// Judgment outcomes for scripted control-flow sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Clean,
    PlanFail,
    ExeFail,
}

/// Builds a single-path script (N_p = 1, N_e = 1) that drives the
/// correction loop through `verdicts`, with unique mistake descriptions
/// `mistake-r<round>` for flagged rounds.
pub fn script_for_sequence(verdicts: &[Verdict], plan_steps: &[&str]) -> Script {
    let mut script = Script::default();
    script.push(AgentRole::Planning, 0, 0, relevant_fixture(1));
    script.default_for(AgentRole::Planning, plan_text(plan_steps));
    script.default_for(AgentRole::Execution, "step done");
    script.default_for(AgentRole::Answer, "42");
    for (round, verdict) in verdicts.iter().enumerate() {
        let text = match verdict {
            Verdict::Clean => clean_judgment(),
            Verdict::PlanFail => plan_fail_judgment(&format!("mistake-r{round}")),
            Verdict::ExeFail => exe_fail_judgment(1, &format!("mistake-r{round}")),
        };
        script.push(AgentRole::Judgment, 0, round, text);
    }
    script
}

/// Minimal deterministic run configuration for scripted tests.
pub fn test_run_config(n_plans: usize, max_corrections: usize) -> RunConfig {
    RunConfig {
        n_plans,
        n_exec_candidates: 1,
        judge_token_budget: 0,
        max_corrections,
        max_budget_extensions: 0,
        temperature: 0.0,
        alpha: 0.5,
        seed: 42,
        ..RunConfig::default()
    }
}

pub fn runtime_for(script: Script, config: RunConfig) -> Runtime {
    Runtime::new(config, BackendMode::Scripted(Arc::new(script))).unwrap()
}
