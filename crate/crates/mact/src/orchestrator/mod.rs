//! The per-path correction loop with judgment routing, multi-path
//! fan-out/selection, and the run entry point.
//!
//! Each round runs plan (when needed) -> execute -> judge -> route. A
//! plan-stage mistake regenerates the plan and re-executes it; an
//! execution-stage mistake re-executes the current plan; both count one
//! correction. The loop finishes on a clean judgment or when the
//! correction bound is reached, and the answer agent then always runs on
//! the final process and every accumulated mistake.

mod config;

pub use config::{BackendMode, RoleBackends, RunConfig, Runtime, ScorerEndpoints};

use serde::{Deserialize, Serialize};

use crate::agents::{self, AgentBindings, AgentContext};
use crate::core::{
    validate_task, Answer, ExecutionPlan, ExecutionProcess, Judgment, Mistake, PathTrace,
    ScalingConfig, Task,
};
use crate::error::{Error, Result};
use crate::prompting::PromptFormatter;
use crate::rewards::{compute_breakdown, select_path, RewardSuite};
use crate::scaling::{fan_out_paths, PathSeed};
use crate::tools::builtin_catalog;

/// What the router decides after a judgment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Finish,
    Replan,
    Reexecute,
}

/// Pure routing rule: finish on a clean judgment or once the correction
/// bound is reached; otherwise plan mistakes take precedence over
/// execution mistakes.
pub fn route(judgment: &Judgment, corrections_used: usize, max_corrections: usize) -> Action {
    if judgment.is_clean() || corrections_used >= max_corrections {
        Action::Finish
    } else if judgment.flag_plan {
        Action::Replan
    } else {
        Action::Reexecute
    }
}

/// Phase of one path's state machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathPhase {
    NeedPlan,
    NeedExecution,
    NeedJudgment,
    Finished,
}

/// Mutable state of one path as it moves through the correction loop.
#[derive(Debug, Clone)]
pub struct PathState {
    pub phase: PathPhase,
    pub corrections_used: usize,
    pub plan: Option<ExecutionPlan>,
    pub process: Option<ExecutionProcess>,
    /// Append-only across rounds.
    pub mistakes: Vec<Mistake>,
    pub flag_plan: bool,
    pub flag_exe: bool,
}

impl PathState {
    fn new() -> Self {
        PathState {
            phase: PathPhase::NeedPlan,
            corrections_used: 0,
            plan: None,
            process: None,
            mistakes: Vec::new(),
            flag_plan: false,
            flag_exe: false,
        }
    }
}

/// Timing summary for one run. Every field name carries `wall_time` so
/// replay comparisons can zero them uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub wall_time: f64,
    pub path_wall_times: Vec<f64>,
}

/// Outcome of a full pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub answer: Answer,
    pub chosen_path: usize,
    pub paths: Vec<PathTrace>,
    pub timing: TimingSummary,
}

impl RunResult {
    /// Reward breakdowns in path order (None for unscored/failed paths).
    pub fn breakdowns(&self) -> Vec<Option<&crate::rewards::RewardBreakdown>> {
        self.paths.iter().map(|p| p.rewards.as_ref()).collect()
    }
}

/// A configured pipeline, ready to run tasks.
pub struct Pipeline<'a> {
    pub bindings: &'a AgentBindings,
    pub config: &'a ScalingConfig,
    pub formatter: &'a PromptFormatter,
    pub suite: &'a RewardSuite,
    pub alpha: f64,
}

impl Pipeline<'_> {
    /// Runs one path to completion. Agent errors finish the path in an
    /// errored state (recorded with the phase they occurred in) instead of
    /// propagating, so sibling paths survive.
    pub fn run_path(&self, task: &Task, seed: PathSeed) -> PathTrace {
        let PathSeed {
            path_index,
            relevant_plan,
            mut trace,
        } = seed;
        let ctx = AgentContext {
            formatter: self.formatter,
            config: self.config,
            suite: self.suite,
            path_index,
        };
        let catalog = builtin_catalog(task);
        let mut state = PathState::new();
        let failure = loop {
            match state.phase {
                PathPhase::NeedPlan => {
                    let revision = trace.plan_history.len();
                    match agents::plan_execution(
                        &self.bindings.planning,
                        &ctx,
                        task,
                        &relevant_plan,
                        &state.mistakes,
                        revision,
                        &mut trace,
                    ) {
                        Ok(plan) => {
                            trace.plan_history.push(plan.clone());
                            state.plan = Some(plan);
                            state.phase = PathPhase::NeedExecution;
                        }
                        Err(e) => break Some(("plan", e)),
                    }
                }
                PathPhase::NeedExecution => {
                    let plan = state.plan.as_ref().expect("plan before execution");
                    let revision = trace.process_history.len();
                    match agents::execute_plan(
                        &self.bindings.execution,
                        &ctx,
                        task,
                        plan,
                        &catalog,
                        &state.mistakes,
                        revision,
                        &mut trace,
                    ) {
                        Ok(process) => {
                            trace.process_history.push(process.clone());
                            state.process = Some(process);
                            state.phase = PathPhase::NeedJudgment;
                        }
                        Err(e) => break Some(("execution", e)),
                    }
                }
                PathPhase::NeedJudgment => {
                    let plan = state.plan.as_ref().expect("plan before judgment");
                    let process = state.process.as_ref().expect("process before judgment");
                    let judgment = match agents::judge(
                        &self.bindings.judgment,
                        &ctx,
                        task,
                        plan,
                        process,
                        &mut trace,
                    ) {
                        Ok(j) => j,
                        Err(e) => break Some(("judgment", e)),
                    };
                    state.flag_plan = judgment.flag_plan;
                    state.flag_exe = judgment.flag_exe;
                    state.mistakes.extend(judgment.mistakes.iter().cloned());
                    let action = route(&judgment, state.corrections_used, self.config.max_corrections);
                    trace.judgments.push(judgment);
                    match action {
                        Action::Finish => {
                            state.phase = PathPhase::Finished;
                        }
                        Action::Replan => {
                            state.corrections_used += 1;
                            state.phase = PathPhase::NeedPlan;
                        }
                        Action::Reexecute => {
                            state.corrections_used += 1;
                            state.phase = PathPhase::NeedExecution;
                        }
                    }
                }
                PathPhase::Finished => {
                    let process = state.process.as_ref().expect("process before answer");
                    match agents::answer(
                        &self.bindings.answer,
                        &ctx,
                        task,
                        process,
                        &state.mistakes,
                        &mut trace,
                    ) {
                        Ok(answer) => {
                            trace.answer = Some(answer);
                            break None;
                        }
                        Err(e) => break Some(("answer", e)),
                    }
                }
            }
        };
        trace.corrections_used = state.corrections_used;
        if let Some((phase, error)) = failure {
            trace.error = Some(crate::core::PathFailure {
                phase: phase.to_string(),
                message: error.to_string(),
            });
        }
        trace
    }

    /// Runs the full pipeline: fan out paths, run them concurrently, score
    /// completed ones, and select the final answer by global reward.
    /// Partial path failures are tolerated as long as one path completes.
    pub fn run(&self, task: &Task) -> Result<RunResult> {
        let started = std::time::Instant::now();
        let task = validate_task(task.clone())?;
        self.config.validate()?;
        let fan_ctx = AgentContext {
            formatter: self.formatter,
            config: self.config,
            suite: self.suite,
            path_index: 0,
        };
        let seeds = fan_out_paths(&self.bindings.planning, &fan_ctx, &task, self.config.n_plans)?;

        let labels: Vec<(usize, crate::core::RelevantPlan)> = seeds
            .iter()
            .map(|s| (s.path_index, s.relevant_plan.clone()))
            .collect();
        let mut path_results: Vec<Option<PathTrace>> = Vec::new();
        path_results.resize_with(seeds.len(), || None);
        let mut path_wall_times = vec![0.0f64; seeds.len()];
        std::thread::scope(|scope| {
            let handles: Vec<_> = seeds
                .into_iter()
                .map(|seed| {
                    let task = &task;
                    scope.spawn(move || {
                        let path_started = std::time::Instant::now();
                        let trace = self.run_path(task, seed);
                        (trace, path_started.elapsed().as_secs_f64())
                    })
                })
                .collect();
            for (index, handle) in handles.into_iter().enumerate() {
                match handle.join() {
                    Ok((trace, wall)) => {
                        path_results[index] = Some(trace);
                        path_wall_times[index] = wall;
                    }
                    Err(_) => {
                        let (path_index, relevant_plan) = labels[index].clone();
                        let mut trace =
                            PathTrace::new(path_index, self.config.clone(), relevant_plan);
                        trace.error = Some(crate::core::PathFailure {
                            phase: "path".into(),
                            message: "path worker panicked".into(),
                        });
                        path_results[index] = Some(trace);
                    }
                }
            }
        });

        let mut paths: Vec<PathTrace> = path_results.into_iter().flatten().collect();
        for trace in paths.iter_mut() {
            if !trace.completed() {
                continue;
            }
            if let Err(error) = compute_breakdown(&task, trace, self.alpha, self.suite) {
                trace.error = Some(crate::core::PathFailure {
                    phase: "rewards".into(),
                    message: error.to_string(),
                });
            }
        }
        let chosen_path = select_path(&paths)?;
        let answer = paths[chosen_path]
            .answer
            .clone()
            .ok_or(Error::NoCompletedPaths)?;
        Ok(RunResult {
            answer,
            chosen_path,
            paths,
            timing: TimingSummary {
                wall_time: started.elapsed().as_secs_f64(),
                path_wall_times,
            },
        })
    }
}

/// Convenience wrapper for library use: runs a task with builtin tools.
pub fn run_pipeline(
    task: &Task,
    bindings: &AgentBindings,
    config: &ScalingConfig,
    formatter: &PromptFormatter,
    suite: &RewardSuite,
    alpha: f64,
) -> Result<RunResult> {
    Pipeline {
        bindings,
        config,
        formatter,
        suite,
        alpha,
    }
    .run(task)
}
