//! The prompt formatter: builds the five agent prompts from structured
//! context and parses agent outputs back into core types.
//!
//! Formatting and parsing are pure given a template set, so one formatter
//! may serve any number of concurrent paths.

mod parse;
mod templates;

pub use parse::{
    parse_execution_plan, parse_judgment, parse_relevant_plans, render_execution_plan,
    render_judgment, render_relevant_plans,
};

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::core::{
    ExecutionPlan, ExecutionProcess, ExecutionUnit, Mistake, RelevantPlan, StepRecord, StepScope,
    UnitInput, VisualRef,
};
use crate::error::{Error, Result};
use crate::tools::ToolCatalog;

/// The five prompts of the collaboration procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptKind {
    #[serde(rename = "p1")]
    P1RelevantPlans,
    #[serde(rename = "p2")]
    P2ExecutionPlan,
    #[serde(rename = "p3")]
    P3StepExecution,
    #[serde(rename = "p4")]
    P4Judgment,
    #[serde(rename = "p5")]
    P5Answer,
}

impl PromptKind {
    pub const ALL: [PromptKind; 5] = [
        PromptKind::P1RelevantPlans,
        PromptKind::P2ExecutionPlan,
        PromptKind::P3StepExecution,
        PromptKind::P4Judgment,
        PromptKind::P5Answer,
    ];

    /// Template file stem for this kind.
    pub fn file_stem(&self) -> &'static str {
        match self {
            PromptKind::P1RelevantPlans => "p1_relevant_plans",
            PromptKind::P2ExecutionPlan => "p2_execution_plan",
            PromptKind::P3StepExecution => "p3_step_execution",
            PromptKind::P4Judgment => "p4_judgment",
            PromptKind::P5Answer => "p5_answer",
        }
    }

    /// The documented placeholder set for this kind.
    pub fn placeholder_set(&self) -> &'static [&'static str] {
        match self {
            PromptKind::P1RelevantPlans => &["question", "n_plans"],
            PromptKind::P2ExecutionPlan => &[
                "question",
                "relevant_problem",
                "relevant_plan",
                "mistakes_section",
            ],
            PromptKind::P3StepExecution => &[
                "question",
                "step_index",
                "unit_definition",
                "expected_output",
                "inputs_section",
                "tools_section",
                "mistakes_section",
            ],
            PromptKind::P4Judgment => &["question", "plan_process_section"],
            PromptKind::P5Answer => &["question", "process_section", "mistakes_section"],
        }
    }
}

impl std::fmt::Display for PromptKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            PromptKind::P1RelevantPlans => "p1",
            PromptKind::P2ExecutionPlan => "p2",
            PromptKind::P3StepExecution => "p3",
            PromptKind::P4Judgment => "p4",
            PromptKind::P5Answer => "p5",
        };
        write!(f, "{name}")
    }
}

/// A fully formatted prompt ready to send to a backend.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub kind: PromptKind,
    pub system_text: String,
    pub user_text: String,
}

/// One template: fixed system text plus a body with `{{name}}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub kind: PromptKind,
    pub system_text: String,
    pub body_template: String,
}

impl PromptTemplate {
    /// Validates that every placeholder in the body belongs to the kind's
    /// documented set and that the system text carries none.
    pub fn check(&self) -> Result<()> {
        if !extract_placeholders(&self.system_text).is_empty() {
            return Err(Error::TemplateError(format!(
                "{} system text must not contain placeholders",
                self.kind
            )));
        }
        let allowed = self.kind.placeholder_set();
        for name in extract_placeholders(&self.body_template) {
            if !allowed.contains(&name.as_str()) {
                return Err(Error::TemplateError(format!(
                    "{} template uses unknown placeholder {{{{{name}}}}}",
                    self.kind
                )));
            }
        }
        Ok(())
    }
}

/// The five templates, defaults embedded, optionally overridden from a
/// directory of `<kind>.txt` files.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: BTreeMap<&'static str, PromptTemplate>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        let mut set = BTreeMap::new();
        for (kind, system, body) in [
            (
                PromptKind::P1RelevantPlans,
                templates::P1_SYSTEM,
                templates::P1_BODY,
            ),
            (
                PromptKind::P2ExecutionPlan,
                templates::P2_SYSTEM,
                templates::P2_BODY,
            ),
            (
                PromptKind::P3StepExecution,
                templates::P3_SYSTEM,
                templates::P3_BODY,
            ),
            (PromptKind::P4Judgment, templates::P4_SYSTEM, templates::P4_BODY),
            (PromptKind::P5Answer, templates::P5_SYSTEM, templates::P5_BODY),
        ] {
            set.insert(
                kind.file_stem(),
                PromptTemplate {
                    kind,
                    system_text: system.to_string(),
                    body_template: body.to_string(),
                },
            );
        }
        TemplateSet { templates: set }
    }
}

impl TemplateSet {
    /// Loads overrides from `dir`. A file named `<kind>.txt` replaces that
    /// kind's default; the file may hold `system --- body` or just a body.
    /// Placeholders are validated at load.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut set = TemplateSet::default();
        for kind in PromptKind::ALL {
            let path = dir.join(format!("{}.txt", kind.file_stem()));
            if !path.is_file() {
                continue;
            }
            let content = std::fs::read_to_string(&path)?;
            let (system_text, body_template) = split_template_file(&content, kind);
            let template = PromptTemplate {
                kind,
                system_text,
                body_template,
            };
            template.check()?;
            set.templates.insert(kind.file_stem(), template);
        }
        Ok(set)
    }

    pub fn get(&self, kind: PromptKind) -> &PromptTemplate {
        &self.templates[kind.file_stem()]
    }
}

fn split_template_file(content: &str, kind: PromptKind) -> (String, String) {
    if let Some(pos) = content
        .lines()
        .scan(0usize, |offset, line| {
            let start = *offset;
            *offset += line.len() + 1;
            Some((start, line))
        })
        .find(|(_, line)| line.trim() == "---")
        .map(|(start, _)| start)
    {
        let system = content[..pos].trim().to_string();
        let body_start = content[pos..].find('\n').map(|i| pos + i + 1).unwrap_or(content.len());
        (system, content[body_start..].to_string())
    } else {
        let default = TemplateSet::default();
        (default.get(kind).system_text.clone(), content.to_string())
    }
}

/// Single-pass placeholder substitution. Values are emitted verbatim and
/// never rescanned, so brace characters inside them cannot inject
/// placeholders.
fn substitute(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        if let Some(end) = after.find("}}") {
            let name = &after[..end];
            if let Some((_, value)) = values.iter().find(|(k, _)| *k == name) {
                out.push_str(value);
                rest = &after[end + 2..];
                continue;
            }
        }
        out.push_str("{{");
        rest = after;
    }
    out.push_str(rest);
    out
}

/// Collects `{{name}}` occurrences whose names are identifier-like.
fn extract_placeholders(text: &str) -> Vec<String> {
    let mut names = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find("{{") {
        let after = &rest[start + 2..];
        match after.find("}}") {
            Some(end) => {
                let name = &after[..end];
                if !name.is_empty()
                    && name
                        .chars()
                        .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
                {
                    names.push(name.to_string());
                }
                rest = &after[end + 2..];
            }
            None => break,
        }
    }
    names
}

/// Builds the five prompts from structured context.
#[derive(Debug, Clone, Default)]
pub struct PromptFormatter {
    templates: TemplateSet,
}

impl PromptFormatter {
    pub fn new(templates: TemplateSet) -> Self {
        PromptFormatter { templates }
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    fn fill(&self, kind: PromptKind, values: &[(&str, &str)]) -> Prompt {
        let template = self.templates.get(kind);
        Prompt {
            kind,
            system_text: template.system_text.clone(),
            user_text: substitute(&template.body_template, values),
        }
    }

    /// Prompt asking for `n_plans` relevant sample problems with plans.
    pub fn format_p1(&self, question: &str, n_plans: usize) -> Prompt {
        let n = n_plans.to_string();
        self.fill(
            PromptKind::P1RelevantPlans,
            &[("question", question), ("n_plans", &n)],
        )
    }

    /// Prompt asking for an execution plan, seeded by one relevant plan and
    /// carrying accumulated mistakes when any exist.
    pub fn format_p2(&self, question: &str, relevant: &RelevantPlan, mistakes: &[Mistake]) -> Prompt {
        let sample_plan = render_numbered(&relevant.sample_plan);
        let mistakes_section = render_mistakes_section(mistakes);
        self.fill(
            PromptKind::P2ExecutionPlan,
            &[
                ("question", question),
                ("relevant_problem", &relevant.sample_problem),
                ("relevant_plan", &sample_plan),
                ("mistakes_section", &mistakes_section),
            ],
        )
    }

    /// Prompt for one execution unit: definition, expected output, resolved
    /// inputs, the tool catalog, and the mistakes targeting this step.
    pub fn format_p3(
        &self,
        question: &str,
        unit: &ExecutionUnit,
        catalog: &ToolCatalog,
        mistakes: &[Mistake],
        prior_records: &[StepRecord],
        visuals: &[VisualRef],
    ) -> Result<Prompt> {
        unit.check()?;
        let inputs_section = render_inputs_section(unit, prior_records, visuals)?;
        let relevant_mistakes: Vec<Mistake> = mistakes
            .iter()
            .filter(|m| matches!(m.step, StepScope::Whole) || m.step == StepScope::Step(unit.step_index))
            .cloned()
            .collect();
        let mistakes_section = render_mistakes_section(&relevant_mistakes);
        let tools_section = catalog.render();
        let step_index = unit.step_index.to_string();
        Ok(self.fill(
            PromptKind::P3StepExecution,
            &[
                ("question", question),
                ("step_index", &step_index),
                ("unit_definition", &unit.definition),
                ("expected_output", &unit.expected_output),
                ("inputs_section", &inputs_section),
                ("tools_section", &tools_section),
                ("mistakes_section", &mistakes_section),
            ],
        ))
    }

    /// Prompt presenting the plan and its execution as numbered pairs for
    /// judgment.
    pub fn format_p4(&self, question: &str, plan: &ExecutionPlan, process: &ExecutionProcess) -> Prompt {
        let pairs = render_plan_process_section(plan, process);
        self.fill(
            PromptKind::P4Judgment,
            &[("question", question), ("plan_process_section", &pairs)],
        )
    }

    /// Prompt for the final answer. Always carries the full accumulated
    /// mistake list alongside the final process, including mistakes that
    /// were corrected away in earlier rounds.
    pub fn format_p5(&self, question: &str, process: &ExecutionProcess, mistakes: &[Mistake]) -> Prompt {
        let process_section = render_process_section(process);
        let mistakes_section = render_accumulated_mistakes_section(mistakes);
        self.fill(
            PromptKind::P5Answer,
            &[
                ("question", question),
                ("process_section", &process_section),
                ("mistakes_section", &mistakes_section),
            ],
        )
    }
}

fn render_numbered(items: &[String]) -> String {
    items
        .iter()
        .enumerate()
        .map(|(i, item)| format!("{}. {}", i + 1, item))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Renders a mistakes block with header, or an empty string so the section
/// is omitted entirely.
fn render_mistakes_section(mistakes: &[Mistake]) -> String {
    if mistakes.is_empty() {
        return String::new();
    }
    let mut out = String::from("Mistakes identified in previous rounds, to be corrected:\n");
    for mistake in mistakes {
        out.push_str(&format!(
            "- {} step {}: {}\n",
            mistake.stage, mistake.step, mistake.description
        ));
    }
    out.push('\n');
    out
}

fn render_accumulated_mistakes_section(mistakes: &[Mistake]) -> String {
    if mistakes.is_empty() {
        return String::new();
    }
    let mut out = String::from(
        "Mistakes found along the way (already addressed above; stay alert to these details):\n",
    );
    for mistake in mistakes {
        out.push_str(&format!(
            "- {} step {}: {}\n",
            mistake.stage, mistake.step, mistake.description
        ));
    }
    out.push('\n');
    out
}

fn render_inputs_section(
    unit: &ExecutionUnit,
    prior_records: &[StepRecord],
    visuals: &[VisualRef],
) -> Result<String> {
    if unit.inputs.is_empty() {
        return Ok("(none)".to_string());
    }
    let mut lines = Vec::new();
    for input in &unit.inputs {
        match input {
            UnitInput::StepOutput(step) => {
                let record = prior_records
                    .iter()
                    .find(|r| r.step_index == *step)
                    .ok_or(Error::UnresolvedInputReference { step: *step })?;
                lines.push(format!(
                    "- output of step {}: {}",
                    step,
                    indent_continuation(&record.resolved_output())
                ));
            }
            UnitInput::Visual(i) => {
                let uri = visuals
                    .get(*i)
                    .map(|v| v.uri.as_str())
                    .unwrap_or("(missing)");
                lines.push(format!("- visual input {}: {}", i + 1, uri));
            }
        }
    }
    Ok(lines.join("\n"))
}

fn render_plan_process_section(plan: &ExecutionPlan, process: &ExecutionProcess) -> String {
    let mut out = Vec::new();
    for step in &plan.steps {
        let execution = process
            .records
            .iter()
            .find(|r| r.step_index == step.index)
            .map(|r| indent_continuation(&r.resolved_output()))
            .unwrap_or_else(|| "(not executed)".to_string());
        out.push(format!(
            "{}. Plan: {}\n   Execution: {}",
            step.index, step.description, execution
        ));
    }
    out.join("\n")
}

fn render_process_section(process: &ExecutionProcess) -> String {
    process
        .records
        .iter()
        .map(|r| format!("Step {}: {}", r.step_index, indent_continuation(&r.resolved_output())))
        .collect::<Vec<_>>()
        .join("\n")
}

fn indent_continuation(text: &str) -> String {
    text.replace('\n', "\n   ")
}
