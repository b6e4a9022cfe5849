//! Execution plans, the sample plans that seed them, and per-step
//! execution units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tools;

/// A sample problem with its plan, generated as a reference before planning
/// the actual task. One relevant plan seeds one parallel path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevantPlan {
    pub sample_problem: String,
    pub sample_plan: Vec<String>,
}

impl RelevantPlan {
    pub fn new(sample_problem: impl Into<String>, sample_plan: Vec<String>) -> Result<Self> {
        if sample_plan.is_empty() {
            return Err(Error::InvariantViolation(
                "relevant plan must have at least one step".into(),
            ));
        }
        Ok(RelevantPlan {
            sample_problem: sample_problem.into(),
            sample_plan,
        })
    }
}

/// One numbered step of an execution plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    /// 1-based ordinal.
    pub index: usize,
    pub description: String,
}

/// An ordered high-level plan, free of tool bindings and implementation
/// detail. `revision` counts correction rounds that regenerated the plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionPlan {
    pub steps: Vec<PlanStep>,
    pub origin_path: usize,
    pub revision: usize,
}

impl ExecutionPlan {
    /// Builds a plan from step descriptions, assigning contiguous 1-based
    /// indices and rejecting steps that carry tool-invocation markup.
    pub fn new(descriptions: Vec<String>, origin_path: usize, revision: usize) -> Result<Self> {
        if descriptions.is_empty() {
            return Err(Error::InvariantViolation(
                "execution plan must have at least one step".into(),
            ));
        }
        for (i, description) in descriptions.iter().enumerate() {
            if tools::contains_tool_markup(description) {
                return Err(Error::PlanContainsToolBinding { step: i + 1 });
            }
        }
        let steps = descriptions
            .into_iter()
            .enumerate()
            .map(|(i, description)| PlanStep {
                index: i + 1,
                description,
            })
            .collect();
        Ok(ExecutionPlan {
            steps,
            origin_path,
            revision,
        })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Re-checks every plan invariant; used by the trace validation pass.
    pub fn check(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::InvariantViolation("plan has no steps".into()));
        }
        for (i, step) in self.steps.iter().enumerate() {
            if step.index != i + 1 {
                return Err(Error::InvariantViolation(format!(
                    "plan step indices not contiguous: position {} has index {}",
                    i, step.index
                )));
            }
            if tools::contains_tool_markup(&step.description) {
                return Err(Error::PlanContainsToolBinding { step: step.index });
            }
        }
        Ok(())
    }
}

/// A reference consumed by an execution unit: the output of an earlier step
/// or one of the task's visual inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitInput {
    /// 1-based index of a prior step whose resolved output feeds this unit.
    StepOutput(usize),
    /// 0-based index into the task's visual list.
    Visual(usize),
}

/// The per-step template the execution agent fills in: what to do, what it
/// should produce, and which existing results it may draw on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionUnit {
    pub step_index: usize,
    pub definition: String,
    pub expected_output: String,
    pub inputs: Vec<UnitInput>,
}

impl ExecutionUnit {
    /// Derives the unit for a plan step mechanically: the definition is the
    /// step text, the expected output is the text after an `expected:` or
    /// `to obtain` marker when present, and the inputs are every prior step
    /// plus all task visuals.
    pub fn derive(step: &PlanStep, visual_count: usize) -> Self {
        let mut inputs: Vec<UnitInput> = (1..step.index).map(UnitInput::StepOutput).collect();
        inputs.extend((0..visual_count).map(UnitInput::Visual));
        ExecutionUnit {
            step_index: step.index,
            definition: step.description.clone(),
            expected_output: extract_expected_output(&step.description),
            inputs,
        }
    }

    /// Every input must reference an earlier step.
    pub fn check(&self) -> Result<()> {
        for input in &self.inputs {
            if let UnitInput::StepOutput(i) = input {
                if *i >= self.step_index {
                    return Err(Error::InvariantViolation(format!(
                        "unit for step {} references step {} which is not prior",
                        self.step_index, i
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Pulls an expected-output phrase out of a step description. Looks for an
/// `expected:` marker first, then `to obtain`; falls back to a generic
/// phrase when neither yields text.
fn extract_expected_output(description: &str) -> String {
    let lower = description.to_lowercase();
    for marker in ["expected:", "to obtain"] {
        if let Some(pos) = lower.find(marker) {
            let tail = description[pos + marker.len()..].trim();
            if !tail.is_empty() {
                return tail.trim_end_matches(['.', ';']).to_string();
            }
        }
    }
    "output of this step".to_string()
}
