//! Execution records: per-step results with their candidate sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tools::ToolCallRecord;

/// One sampled execution text and the score it received.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub score: f64,
}

/// The record of one executed plan step: the selected candidate, every
/// rejected candidate with its score, and any tool call the step made.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based plan step ordinal.
    pub step_index: usize,
    pub chosen_text: String,
    pub tool_calls: Vec<ToolCallRecord>,
    pub candidates: Vec<Candidate>,
    /// Index into `candidates`; the lowest index attaining the max score.
    pub chosen_candidate: usize,
}

impl StepRecord {
    /// The step output as later units see it: the chosen text plus any tool
    /// results it produced.
    pub fn resolved_output(&self) -> String {
        let mut out = self.chosen_text.clone();
        for call in &self.tool_calls {
            out.push_str(&format!("\n[{} -> {}] {}", call.tool, call.status, call.output));
        }
        out
    }

    /// Score of the chosen candidate.
    pub fn chosen_score(&self) -> f64 {
        self.candidates[self.chosen_candidate].score
    }

    pub fn check(&self, expected_candidates: usize) -> Result<()> {
        if self.candidates.is_empty() {
            return Err(Error::InvariantViolation(format!(
                "step {} has no candidates",
                self.step_index
            )));
        }
        if self.candidates.len() != expected_candidates {
            return Err(Error::InvariantViolation(format!(
                "step {} has {} candidate(s), configured for {}",
                self.step_index,
                self.candidates.len(),
                expected_candidates
            )));
        }
        let Some(chosen) = self.candidates.get(self.chosen_candidate) else {
            return Err(Error::InvariantViolation(format!(
                "step {} chosen_candidate {} out of range",
                self.step_index, self.chosen_candidate
            )));
        };
        // Argmax with lowest-index tie-break.
        for (i, candidate) in self.candidates.iter().enumerate() {
            if candidate.score > chosen.score
                || (candidate.score == chosen.score && i < self.chosen_candidate)
            {
                return Err(Error::InvariantViolation(format!(
                    "step {} chosen_candidate {} is not the argmax under lowest-index tie-break",
                    self.step_index, self.chosen_candidate
                )));
            }
            if !(0.0..=1.0).contains(&candidate.score) {
                return Err(Error::InvariantViolation(format!(
                    "step {} candidate {} score {} outside [0,1]",
                    self.step_index, i, candidate.score
                )));
            }
        }
        if chosen.text != self.chosen_text {
            return Err(Error::InvariantViolation(format!(
                "step {} chosen_text diverges from chosen candidate",
                self.step_index
            )));
        }
        Ok(())
    }
}

/// The ordered step records for one full pass over a plan. `revision`
/// counts correction rounds; `plan_revision` names the plan that was
/// executed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionProcess {
    pub records: Vec<StepRecord>,
    pub revision: usize,
    pub plan_revision: usize,
}

impl ExecutionProcess {
    pub fn check(&self, plan_len: usize, expected_candidates: usize) -> Result<()> {
        if self.records.len() != plan_len {
            return Err(Error::InvariantViolation(format!(
                "process revision {} has {} record(s) for a {}-step plan",
                self.revision,
                self.records.len(),
                plan_len
            )));
        }
        for (i, record) in self.records.iter().enumerate() {
            if record.step_index != i + 1 {
                return Err(Error::InvariantViolation(format!(
                    "process revision {} record {} has step_index {}",
                    self.revision, i, record.step_index
                )));
            }
            record.check(expected_candidates)?;
        }
        Ok(())
    }
}
