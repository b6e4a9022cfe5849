//! Parsers for agent outputs and the canonical renderers that emit the
//! same grammars.
//!
//! The grammars are lenient on whitespace and case, strict on structure:
//! plans are numbered lines, relevant plans are `<relevant_k>` blocks, and
//! judgments are `FLAG_PLAN` / `FLAG_EXE` / `MISTAKE` lines.

use regex::Regex;
use std::sync::OnceLock;

use crate::core::{ExecutionPlan, Judgment, Mistake, MistakeStage, RelevantPlan, StepScope};
use crate::error::{Error, Result};

fn numbered_line_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(\d+)[.)]\s+(.*\S)\s*$").unwrap())
}

fn flag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^\s*FLAG_(PLAN|EXE)\s*:\s*(true|false)\s*$").unwrap())
}

fn mistake_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)^\s*MISTAKE\s*:\s*(plan|execution)\s+step\s+(\d+|whole)\s*[\u{2014}\u{2013}-]+\s*(.+?)\s*$")
            .unwrap()
    })
}

fn relevant_open_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)<relevant_(\d+)>").unwrap())
}

/// Collects `N. text` / `N) text` lines. Lines before the first numbered
/// line are ignored as preamble; unnumbered lines after it continue the
/// previous step.
fn collect_numbered(text: &str) -> Vec<(usize, String)> {
    let mut steps: Vec<(usize, String)> = Vec::new();
    for line in text.lines() {
        if let Some(caps) = numbered_line_re().captures(line) {
            let number: usize = caps[1].parse().unwrap_or(0);
            steps.push((number, caps[2].to_string()));
        } else if let Some((_, last)) = steps.last_mut() {
            let trimmed = line.trim();
            if !trimmed.is_empty() {
                last.push('\n');
                last.push_str(trimmed);
            }
        }
    }
    steps
}

/// Parses numbered plan steps into an [`ExecutionPlan`]. Numbering must be
/// contiguous from 1.
pub fn parse_execution_plan(text: &str, origin_path: usize, revision: usize) -> Result<ExecutionPlan> {
    let steps = collect_numbered(text);
    if steps.is_empty() {
        return Err(Error::parse(0, "no numbered plan steps found"));
    }
    for (i, (number, _)) in steps.iter().enumerate() {
        if *number != i + 1 {
            return Err(Error::parse(
                0,
                format!("plan steps not numbered contiguously: expected {}, found {}", i + 1, number),
            ));
        }
    }
    ExecutionPlan::new(
        steps.into_iter().map(|(_, text)| text).collect(),
        origin_path,
        revision,
    )
}

/// Canonical plan rendering: `1. step` lines.
pub fn render_execution_plan(plan: &ExecutionPlan) -> String {
    plan.steps
        .iter()
        .map(|s| format!("{}. {}", s.index, s.description))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parses exactly `expected_n` relevant-plan blocks delimited by
/// `<relevant_k> ... </relevant_k>` tags, k counted from 1.
pub fn parse_relevant_plans(text: &str, expected_n: usize) -> Result<Vec<RelevantPlan>> {
    let found = relevant_open_re().find_iter(text).count();
    if found != expected_n {
        return Err(Error::parse(
            0,
            format!("expected {expected_n} relevant block(s), found {found}"),
        ));
    }
    let lower = text.to_lowercase();
    let mut plans = Vec::with_capacity(expected_n);
    for k in 1..=expected_n {
        let open = format!("<relevant_{k}>");
        let close = format!("</relevant_{k}>");
        let start = lower
            .find(&open)
            .ok_or_else(|| Error::parse(0, format!("missing block <relevant_{k}>")))?;
        let body_start = start + open.len();
        let end = lower[body_start..]
            .find(&close)
            .map(|i| body_start + i)
            .ok_or_else(|| Error::parse(body_start, format!("unterminated block <relevant_{k}>")))?;
        plans.push(parse_relevant_block(&text[body_start..end], body_start)?);
    }
    Ok(plans)
}

/// Case-insensitive ASCII prefix strip that never slices mid-character.
fn strip_ci_prefix<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    s.get(..prefix.len())
        .filter(|head| head.eq_ignore_ascii_case(prefix))
        .map(|_| &s[prefix.len()..])
}

fn parse_relevant_block(block: &str, offset: usize) -> Result<RelevantPlan> {
    let mut problem_lines: Vec<&str> = Vec::new();
    let mut plan_text = String::new();
    let mut in_problem = false;
    let mut in_plan = false;
    for line in block.lines() {
        let trimmed = line.trim();
        if let Some(rest) = strip_ci_prefix(trimmed, "problem:") {
            in_problem = true;
            in_plan = false;
            if !rest.trim().is_empty() {
                problem_lines.push(rest.trim());
            }
            continue;
        }
        if strip_ci_prefix(trimmed, "plan:").is_some() {
            in_problem = false;
            in_plan = true;
            continue;
        }
        if in_plan {
            plan_text.push_str(line);
            plan_text.push('\n');
        } else if in_problem && !trimmed.is_empty() {
            problem_lines.push(trimmed);
        }
    }
    if problem_lines.is_empty() {
        return Err(Error::parse(offset, "relevant block lacks a problem section"));
    }
    let steps = collect_numbered(&plan_text);
    if steps.is_empty() {
        return Err(Error::parse(offset, "relevant block lacks plan steps"));
    }
    RelevantPlan::new(
        problem_lines.join(" "),
        steps.into_iter().map(|(_, s)| s).collect(),
    )
    .map_err(|e| Error::parse(offset, e.to_string()))
}

/// Canonical rendering of relevant-plan blocks, the adjoint of
/// [`parse_relevant_plans`].
pub fn render_relevant_plans(plans: &[RelevantPlan]) -> String {
    plans
        .iter()
        .enumerate()
        .map(|(i, plan)| {
            let k = i + 1;
            let steps = plan
                .sample_plan
                .iter()
                .enumerate()
                .map(|(j, s)| format!("{}. {}", j + 1, s))
                .collect::<Vec<_>>()
                .join("\n");
            format!(
                "<relevant_{k}>\nProblem: {}\nPlan:\n{}\n</relevant_{k}>",
                plan.sample_problem, steps
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parses a judgment from the structured answer section of a judgment
/// response. Both flag lines are required; a missing flags section is a
/// parse error, never a silent "no mistakes". The flag/mistake consistency
/// invariant is enforced here too.
pub fn parse_judgment(text: &str) -> Result<Judgment> {
    let mut flag_plan: Option<bool> = None;
    let mut flag_exe: Option<bool> = None;
    let mut mistakes: Vec<Mistake> = Vec::new();
    for line in text.lines() {
        if let Some(caps) = flag_re().captures(line) {
            let value = caps[2].eq_ignore_ascii_case("true");
            // Last occurrence wins; models sometimes restate their verdict.
            if caps[1].eq_ignore_ascii_case("plan") {
                flag_plan = Some(value);
            } else {
                flag_exe = Some(value);
            }
        } else if let Some(caps) = mistake_re().captures(line) {
            let stage = if caps[1].eq_ignore_ascii_case("plan") {
                MistakeStage::Plan
            } else {
                MistakeStage::Execution
            };
            let step = if caps[2].eq_ignore_ascii_case("whole") {
                StepScope::Whole
            } else {
                StepScope::Step(caps[2].parse().map_err(|_| {
                    Error::parse(0, format!("invalid mistake step {:?}", &caps[2]))
                })?)
            };
            mistakes.push(Mistake::new(stage, step, caps[3].trim()));
        }
    }
    let flag_plan = flag_plan.ok_or_else(|| Error::parse(0, "missing FLAG_PLAN line"))?;
    let flag_exe = flag_exe.ok_or_else(|| Error::parse(0, "missing FLAG_EXE line"))?;
    Judgment::new(flag_plan, flag_exe, mistakes)
        .map_err(|e| Error::parse(0, format!("judgment violates invariants: {e}")))
}

/// Canonical judgment rendering, the adjoint of [`parse_judgment`] for the
/// flag and mistake fields.
pub fn render_judgment(judgment: &Judgment) -> String {
    let mut out = format!(
        "FLAG_PLAN: {}\nFLAG_EXE: {}",
        judgment.flag_plan, judgment.flag_exe
    );
    for mistake in &judgment.mistakes {
        out.push_str(&format!(
            "\nMISTAKE: {} step {} \u{2014} {}",
            mistake.stage, mistake.step, mistake.description
        ));
    }
    out
}
