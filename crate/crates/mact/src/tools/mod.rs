//! The tool library the execution agent selects from, with desk-scale
//! built-ins (`calculator`, `lookup_note`).
//!
//! Tool calls ride inside model text as a single line
//! `TOOL: <name>({"arg": value})`; at most one call per execution candidate
//! is honored. Tool failures never terminate a path: the model sees the
//! error text in the step record and may proceed.

mod calculator;

pub use calculator::{evaluate_expression, format_decimal};

use std::panic::{catch_unwind, AssertUnwindSafe};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::core::Task;
use crate::error::{Error, Result};

/// Line prefix marking a tool invocation in model output.
pub const TOOL_CALL_PREFIX: &str = "TOOL:";

/// Parameter types a tool schema may declare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamType {
    String,
    Number,
    Boolean,
}

/// One named, typed parameter in a tool schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolParam {
    pub name: String,
    pub param_type: ParamType,
    pub required: bool,
}

/// Declares a tool: what it is called, what it does, and what it takes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    pub params: Vec<ToolParam>,
    pub returns: String,
}

impl ToolSpec {
    pub fn check(&self) -> Result<()> {
        let mut names: Vec<&str> = self.params.iter().map(|p| p.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.params.len() {
            return Err(Error::InvariantViolation(format!(
                "tool {} declares duplicate parameter names",
                self.name
            )));
        }
        Ok(())
    }
}

/// Outcome of one tool invocation as recorded in the step trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolStatus {
    Ok,
    ToolError,
}

impl std::fmt::Display for ToolStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ToolStatus::Ok => write!(f, "ok"),
            ToolStatus::ToolError => write!(f, "tool_error"),
        }
    }
}

/// One tool invocation with its arguments and captured output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCallRecord {
    pub tool: String,
    pub arguments: Map<String, Value>,
    pub output: String,
    pub status: ToolStatus,
}

/// A tool call parsed out of model text, not yet validated.
#[derive(Debug, Clone, PartialEq)]
pub struct RawToolCall {
    pub name: String,
    pub arguments: Map<String, Value>,
}

type ToolHandler = Box<dyn Fn(&Map<String, Value>) -> std::result::Result<String, String> + Send + Sync>;

/// Registry of tools available to the execution agent. Immutable after the
/// registration phase; handlers must be safe for concurrent invocation.
#[derive(Default)]
pub struct ToolCatalog {
    tools: Vec<(ToolSpec, ToolHandler)>,
}

impl std::fmt::Debug for ToolCatalog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToolCatalog")
            .field(
                "tools",
                &self.tools.iter().map(|(s, _)| &s.name).collect::<Vec<_>>(),
            )
            .finish()
    }
}

impl ToolCatalog {
    pub fn new() -> Self {
        ToolCatalog::default()
    }

    /// Registers a tool. Names are unique within a catalog.
    pub fn register<F>(&mut self, spec: ToolSpec, handler: F) -> Result<()>
    where
        F: Fn(&Map<String, Value>) -> std::result::Result<String, String> + Send + Sync + 'static,
    {
        spec.check()?;
        if self.tools.iter().any(|(s, _)| s.name == spec.name) {
            return Err(Error::DuplicateTool(spec.name));
        }
        self.tools.push((spec, Box::new(handler)));
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn specs(&self) -> impl Iterator<Item = &ToolSpec> {
        self.tools.iter().map(|(s, _)| s)
    }

    /// Renders the catalog for inclusion in a step-execution prompt, in
    /// registration order. Empty catalogs render a sentinel line.
    pub fn render(&self) -> String {
        if self.tools.is_empty() {
            return "no tools available".to_string();
        }
        let mut out = String::new();
        for (spec, _) in &self.tools {
            let params = spec
                .params
                .iter()
                .map(|p| {
                    format!(
                        "\"{}\": {:?}{}",
                        p.name,
                        p.param_type,
                        if p.required { "" } else { " (optional)" }
                    )
                    .to_lowercase()
                })
                .collect::<Vec<_>>()
                .join(", ");
            out.push_str(&format!(
                "- {}({{{}}}): {} Returns {}\n",
                spec.name, params, spec.description, spec.returns
            ));
        }
        out.trim_end().to_string()
    }

    /// Invokes a parsed tool call. Failures of any kind — unknown tool,
    /// schema violation, handler error, handler panic — are captured as
    /// `tool_error` records so the step always completes.
    pub fn invoke(&self, call: &RawToolCall) -> ToolCallRecord {
        let error_record = |message: String| ToolCallRecord {
            tool: call.name.clone(),
            arguments: call.arguments.clone(),
            output: message,
            status: ToolStatus::ToolError,
        };
        let Some((spec, handler)) = self.tools.iter().find(|(s, _)| s.name == call.name) else {
            return error_record(format!("unknown tool: {}", call.name));
        };
        if let Err(violation) = validate_arguments(spec, &call.arguments) {
            return error_record(format!("argument schema violation: {violation}"));
        }
        match catch_unwind(AssertUnwindSafe(|| handler(&call.arguments))) {
            Ok(Ok(output)) => ToolCallRecord {
                tool: call.name.clone(),
                arguments: call.arguments.clone(),
                output,
                status: ToolStatus::Ok,
            },
            Ok(Err(message)) => error_record(message),
            Err(_) => error_record("tool handler panicked".to_string()),
        }
    }
}

fn validate_arguments(spec: &ToolSpec, args: &Map<String, Value>) -> std::result::Result<(), String> {
    for param in &spec.params {
        match args.get(&param.name) {
            None if param.required => {
                return Err(format!("missing required argument {:?}", param.name));
            }
            None => {}
            Some(value) => {
                let ok = matches!(
                    (param.param_type, value),
                    (ParamType::String, Value::String(_))
                        | (ParamType::Number, Value::Number(_))
                        | (ParamType::Boolean, Value::Bool(_))
                );
                if !ok {
                    return Err(format!(
                        "argument {:?} has wrong type (expected {:?})",
                        param.name, param.param_type
                    ));
                }
            }
        }
    }
    for key in args.keys() {
        if !spec.params.iter().any(|p| &p.name == key) {
            return Err(format!("unexpected argument {key:?}"));
        }
    }
    Ok(())
}

/// True when any line of `text` carries tool-invocation markup. Used to
/// reject tool bindings inside high-level plans.
pub fn contains_tool_markup(text: &str) -> bool {
    text.lines().any(|line| {
        line.trim_start()
            .to_ascii_uppercase()
            .starts_with(TOOL_CALL_PREFIX)
    })
}

/// Extracts the first tool call from model text, if any. Returns an error
/// record payload for a line that looks like a call but cannot be parsed.
pub fn find_tool_call(text: &str) -> Option<std::result::Result<RawToolCall, String>> {
    for line in text.lines() {
        let trimmed = line.trim();
        if !trimmed.to_ascii_uppercase().starts_with(TOOL_CALL_PREFIX) {
            continue;
        }
        let rest = trimmed[TOOL_CALL_PREFIX.len()..].trim();
        return Some(parse_call_body(rest));
    }
    None
}

fn parse_call_body(body: &str) -> std::result::Result<RawToolCall, String> {
    let open = body
        .find('(')
        .ok_or_else(|| format!("malformed tool call (no '('): {body}"))?;
    let close = body
        .rfind(')')
        .ok_or_else(|| format!("malformed tool call (no ')'): {body}"))?;
    if close < open {
        return Err(format!("malformed tool call: {body}"));
    }
    let name = body[..open].trim().to_string();
    if name.is_empty() {
        return Err(format!("malformed tool call (empty name): {body}"));
    }
    let args_text = body[open + 1..close].trim();
    let arguments: Map<String, Value> = if args_text.is_empty() {
        Map::new()
    } else {
        serde_json::from_str::<Value>(args_text)
            .ok()
            .and_then(|v| match v {
                Value::Object(map) => Some(map),
                _ => None,
            })
            .ok_or_else(|| format!("tool arguments are not a JSON object: {args_text}"))?
    };
    Ok(RawToolCall { name, arguments })
}

/// The built-in catalog: an arithmetic calculator and keyed retrieval over
/// the task's attached notes.
pub fn builtin_catalog(task: &Task) -> ToolCatalog {
    let mut catalog = ToolCatalog::new();
    catalog
        .register(
            ToolSpec {
                name: "calculator".into(),
                description: "Evaluates an arithmetic expression with +, -, *, /, ^, parentheses, and decimals.".into(),
                params: vec![ToolParam {
                    name: "expression".into(),
                    param_type: ParamType::String,
                    required: true,
                }],
                returns: "the decimal result (up to 10 significant digits).".into(),
            },
            |args| {
                let expression = args
                    .get("expression")
                    .and_then(Value::as_str)
                    .ok_or_else(|| "expression must be a string".to_string())?;
                evaluate_expression(expression)
            },
        )
        .expect("register calculator");
    let notes = task.notes.clone();
    catalog
        .register(
            ToolSpec {
                name: "lookup_note".into(),
                description: "Retrieves a note attached to the task by key.".into(),
                params: vec![ToolParam {
                    name: "key".into(),
                    param_type: ParamType::String,
                    required: true,
                }],
                returns: "the note text.".into(),
            },
            move |args| {
                let key = args
                    .get("key")
                    .and_then(Value::as_str)
                    .ok_or_else(|| "key must be a string".to_string())?;
                notes
                    .get(key)
                    .cloned()
                    .ok_or_else(|| format!("no note with key {key:?}"))
            },
        )
        .expect("register lookup_note");
    catalog
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(name: &str, args: Value) -> RawToolCall {
        RawToolCall {
            name: name.into(),
            arguments: match args {
                Value::Object(map) => map,
                _ => Map::new(),
            },
        }
    }

    #[test]
    fn register_lists_and_rejects_duplicates() {
        let mut catalog = ToolCatalog::new();
        let spec = ToolSpec {
            name: "calculator".into(),
            description: "d".into(),
            params: vec![],
            returns: "r".into(),
        };
        catalog.register(spec.clone(), |_| Ok("x".into())).unwrap();
        assert!(catalog.render().contains("calculator"));
        let err = catalog.register(spec, |_| Ok("x".into())).unwrap_err();
        assert!(matches!(err, Error::DuplicateTool(name) if name == "calculator"));
    }

    #[test]
    fn empty_catalog_renders_sentinel() {
        assert_eq!(ToolCatalog::new().render(), "no tools available");
    }

    #[test]
    fn calculator_evaluates_and_reports_division_by_zero() {
        let catalog = builtin_catalog(&Task::new("t", "q"));
        let ok = catalog.invoke(&call("calculator", serde_json::json!({"expression": "2*(3+4)"})));
        assert_eq!(ok.status, ToolStatus::Ok);
        assert_eq!(ok.output, "14");

        let err = catalog.invoke(&call("calculator", serde_json::json!({"expression": "2/0"})));
        assert_eq!(err.status, ToolStatus::ToolError);
        assert!(err.output.contains("division by zero"));
    }

    #[test]
    fn unknown_tool_becomes_error_record() {
        let catalog = builtin_catalog(&Task::new("t", "q"));
        let record = catalog.invoke(&call("webfetch", serde_json::json!({})));
        assert_eq!(record.status, ToolStatus::ToolError);
        assert!(record.output.contains("unknown tool"));
    }

    #[test]
    fn schema_violations_become_error_records() {
        let catalog = builtin_catalog(&Task::new("t", "q"));
        let missing = catalog.invoke(&call("calculator", serde_json::json!({})));
        assert!(missing.output.contains("argument schema violation"));
        let wrong_type =
            catalog.invoke(&call("calculator", serde_json::json!({"expression": 5})));
        assert!(wrong_type.output.contains("wrong type"));
        let extra = catalog.invoke(&call(
            "calculator",
            serde_json::json!({"expression": "1", "x": 2}),
        ));
        assert!(extra.output.contains("unexpected argument"));
    }

    #[test]
    fn panicking_handler_yields_error_record() {
        let mut catalog = ToolCatalog::new();
        catalog
            .register(
                ToolSpec {
                    name: "boom".into(),
                    description: "d".into(),
                    params: vec![],
                    returns: "r".into(),
                },
                |_| panic!("kaboom"),
            )
            .unwrap();
        let record = catalog.invoke(&call("boom", serde_json::json!({})));
        assert_eq!(record.status, ToolStatus::ToolError);
        assert!(record.output.contains("panicked"));
    }

    #[test]
    fn lookup_note_reads_task_notes() {
        let mut task = Task::new("t", "q");
        task.notes.insert("revenue".into(), "1.2M".into());
        let catalog = builtin_catalog(&task);
        let hit = catalog.invoke(&call("lookup_note", serde_json::json!({"key": "revenue"})));
        assert_eq!(hit.output, "1.2M");
        let miss = catalog.invoke(&call("lookup_note", serde_json::json!({"key": "absent"})));
        assert_eq!(miss.status, ToolStatus::ToolError);
    }

    #[test]
    fn tool_call_parsing() {
        let text = "let me compute\nTOOL: calculator({\"expression\": \"1+1\"})\ndone";
        let parsed = find_tool_call(text).unwrap().unwrap();
        assert_eq!(parsed.name, "calculator");
        assert_eq!(
            parsed.arguments.get("expression").unwrap(),
            &Value::String("1+1".into())
        );
        assert!(find_tool_call("no calls here").is_none());
        assert!(find_tool_call("TOOL: broken(").unwrap().is_err());
        assert!(find_tool_call("TOOL: calc([1,2])").unwrap().is_err());
    }

    #[test]
    fn markup_detection() {
        assert!(contains_tool_markup("step\nTOOL: x({})"));
        assert!(contains_tool_markup("  tool: x({})"));
        assert!(!contains_tool_markup("use a tool later"));
    }
}
