//! Domain types, run configuration, and the trace model shared by every
//! other module.

mod config;
mod judgment;
mod plan;
mod process;
mod task;
mod trace;

pub use config::ScalingConfig;
pub use judgment::{Answer, Judgment, Mistake, MistakeStage, StepScope};
pub use plan::{ExecutionPlan, ExecutionUnit, PlanStep, RelevantPlan, UnitInput};
pub use process::{Candidate, ExecutionProcess, StepRecord};
pub use task::{validate_task, MediaKind, Task, VisualRef};
pub use trace::{
    parse_trace, serialize_trace, CallRecord, PathFailure, PathTrace, TokenCounts, SCHEMA_VERSION,
};
