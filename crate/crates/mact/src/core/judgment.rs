//! Judgments, mistakes, and final answers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which stage a mistake belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MistakeStage {
    Plan,
    Execution,
}

impl std::fmt::Display for MistakeStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MistakeStage::Plan => write!(f, "plan"),
            MistakeStage::Execution => write!(f, "execution"),
        }
    }
}

/// Target of a mistake: one specific step, or the whole plan/process when
/// the judge cannot pin a step down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StepScopeRepr", into = "StepScopeRepr")]
pub enum StepScope {
    Step(usize),
    Whole,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum StepScopeRepr {
    Num(usize),
    Text(String),
}

impl From<StepScope> for StepScopeRepr {
    fn from(scope: StepScope) -> Self {
        match scope {
            StepScope::Step(i) => StepScopeRepr::Num(i),
            StepScope::Whole => StepScopeRepr::Text("whole".into()),
        }
    }
}

impl TryFrom<StepScopeRepr> for StepScope {
    type Error = String;

    fn try_from(repr: StepScopeRepr) -> std::result::Result<Self, String> {
        match repr {
            StepScopeRepr::Num(i) => Ok(StepScope::Step(i)),
            StepScopeRepr::Text(s) if s.eq_ignore_ascii_case("whole") => Ok(StepScope::Whole),
            StepScopeRepr::Text(s) => Err(format!("invalid step scope: {s:?}")),
        }
    }
}

impl std::fmt::Display for StepScope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepScope::Step(i) => write!(f, "{i}"),
            StepScope::Whole => write!(f, "whole"),
        }
    }
}

/// One identified mistake: where it is and a brief description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mistake {
    pub stage: MistakeStage,
    pub step: StepScope,
    pub description: String,
}

impl Mistake {
    pub fn new(stage: MistakeStage, step: StepScope, description: impl Into<String>) -> Self {
        Mistake {
            stage,
            step,
            description: description.into(),
        }
    }

    pub fn check(&self, plan_len: usize) -> Result<()> {
        if self.description.trim().is_empty() {
            return Err(Error::InvariantViolation(
                "mistake description is empty".into(),
            ));
        }
        if let StepScope::Step(i) = self.step {
            if i == 0 || i > plan_len {
                return Err(Error::InvariantViolation(format!(
                    "mistake step {i} outside plan of {plan_len} step(s)"
                )));
            }
        }
        Ok(())
    }
}

/// The judgment agent's verdict on one plan–process pair, plus the thinking
/// accounting from budget forcing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub flag_plan: bool,
    pub flag_exe: bool,
    pub mistakes: Vec<Mistake>,
    pub thinking_tokens_used: usize,
    pub extensions_used: usize,
}

impl Judgment {
    /// Constructs a judgment, enforcing flag/mistake consistency: a clean
    /// judgment carries no mistakes, and a flagged one carries at least one
    /// mistake whose stage matches a raised flag.
    pub fn new(flag_plan: bool, flag_exe: bool, mistakes: Vec<Mistake>) -> Result<Self> {
        let judgment = Judgment {
            flag_plan,
            flag_exe,
            mistakes,
            thinking_tokens_used: 0,
            extensions_used: 0,
        };
        judgment.check()?;
        Ok(judgment)
    }

    pub fn clean() -> Self {
        Judgment {
            flag_plan: false,
            flag_exe: false,
            mistakes: Vec::new(),
            thinking_tokens_used: 0,
            extensions_used: 0,
        }
    }

    pub fn is_clean(&self) -> bool {
        !self.flag_plan && !self.flag_exe
    }

    pub fn check(&self) -> Result<()> {
        if self.is_clean() {
            if !self.mistakes.is_empty() {
                return Err(Error::InvariantViolation(
                    "clean judgment carries mistakes".into(),
                ));
            }
            return Ok(());
        }
        if self.mistakes.is_empty() {
            return Err(Error::InvariantViolation(
                "flagged judgment carries no mistakes".into(),
            ));
        }
        for mistake in &self.mistakes {
            let flagged = match mistake.stage {
                MistakeStage::Plan => self.flag_plan,
                MistakeStage::Execution => self.flag_exe,
            };
            if !flagged {
                return Err(Error::InvariantViolation(format!(
                    "mistake stage {} has no raised flag",
                    mistake.stage
                )));
            }
        }
        Ok(())
    }

    /// Checks mistake step bounds against the plan the judgment reviewed.
    pub fn check_against_plan(&self, plan_len: usize) -> Result<()> {
        self.check()?;
        for mistake in &self.mistakes {
            mistake.check(plan_len)?;
        }
        Ok(())
    }
}

/// The final answer produced by one path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    pub path_index: usize,
}

impl Answer {
    pub fn new(text: impl Into<String>, path_index: usize) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::EmptyAnswer);
        }
        Ok(Answer { text, path_index })
    }
}
