//! The model-backend contract every agent speaks through, with a scripted
//! deterministic implementation for tests and a live HTTP chat-completion
//! client.

mod http;
mod scripted;

pub use http::{HttpBackend, HttpBackendConfig};
pub use scripted::{Script, ScriptEntry, ScriptedBackend};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::agents::AgentRole;
use crate::core::{CallRecord, PathTrace, TokenCounts, VisualRef};
use crate::error::{Error, Result};
use crate::prompting::PromptKind;

/// What a backend can consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Text,
    VisionText,
}

/// Identity and capability of one backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendProfile {
    pub name: String,
    pub modality: Modality,
}

/// Delimiters marking the thinking segment inside raw model text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinkingDelimiters {
    pub open: String,
    pub close: String,
}

impl Default for ThinkingDelimiters {
    fn default() -> Self {
        ThinkingDelimiters {
            open: "<think>".into(),
            close: "</think>".into(),
        }
    }
}

/// One prior exchange carried along a budget-forcing continuation, so
/// stateless wire protocols can rebuild the conversation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuationTurn {
    pub assistant_text: String,
    pub user_cue: String,
}

/// A single generation request.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub system_text: String,
    pub user_text: String,
    pub image_refs: Vec<VisualRef>,
    pub temperature: f64,
    pub max_tokens: usize,
    pub seed: Option<u64>,
    /// Prior response id when this request extends a thinking budget.
    pub continuation_of: Option<String>,
    /// Prior assistant turns and cues, oldest first, for continuations.
    pub continuation_turns: Vec<ContinuationTurn>,
}

impl GenerationRequest {
    pub fn new(system_text: impl Into<String>, user_text: impl Into<String>) -> Self {
        GenerationRequest {
            system_text: system_text.into(),
            user_text: user_text.into(),
            image_refs: Vec::new(),
            temperature: 0.0,
            max_tokens: 4096,
            seed: None,
            continuation_of: None,
            continuation_turns: Vec::new(),
        }
    }

    pub fn check(&self) -> Result<()> {
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(Error::ConfigError("temperature must be >= 0".into()));
        }
        if self.max_tokens < 1 {
            return Err(Error::ConfigError("max_tokens must be >= 1".into()));
        }
        Ok(())
    }
}

/// How a generation ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

/// A single generation result with the thinking segment already split out.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationResponse {
    /// Final text with any thinking segment removed.
    pub text: String,
    /// Raw text as produced, thinking delimiters included.
    pub raw_text: String,
    pub thinking_text: Option<String>,
    pub token_counts: TokenCounts,
    pub finish_reason: FinishReason,
    pub response_id: String,
    /// Transport attempts spent on this response (>= 1).
    pub attempts: u32,
}

/// The contract agents speak through. Backends hold no per-request mutable
/// state visible to callers and may serve concurrent paths.
pub trait Backend: Send + Sync {
    fn profile(&self) -> &BackendProfile;
    fn generate(&self, meta: &CallMeta, request: &GenerationRequest) -> Result<GenerationResponse>;
}

/// Addressing and trace metadata for one backend call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallMeta {
    pub role: AgentRole,
    pub prompt_kind: PromptKind,
    pub path_index: usize,
    pub step_index: Option<usize>,
    pub candidate: Option<usize>,
    /// True for the bounded format-reminder / empty-answer retries.
    pub reask: bool,
}

impl CallMeta {
    pub fn new(role: AgentRole, prompt_kind: PromptKind, path_index: usize) -> Self {
        CallMeta {
            role,
            prompt_kind,
            path_index,
            step_index: None,
            candidate: None,
            reask: false,
        }
    }

    pub fn step(mut self, step_index: usize) -> Self {
        self.step_index = Some(step_index);
        self
    }

    pub fn candidate(mut self, candidate: usize) -> Self {
        self.candidate = Some(candidate);
        self
    }

    pub fn as_reask(mut self) -> Self {
        self.reask = true;
        self
    }
}

/// Whitespace token count, the declared counting rule for thinking budgets.
/// Reproducible without model-specific tokenizers; budgets are tuned
/// relative to it.
pub fn whitespace_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Thinking tokens of a response under the declared counting rule; 0 when
/// no thinking segment was produced.
pub fn count_thinking_tokens(response: &GenerationResponse) -> usize {
    response
        .thinking_text
        .as_deref()
        .map(whitespace_tokens)
        .unwrap_or(0)
}

/// Splits raw model text into an optional thinking segment and the final
/// text. Without a complete delimiter pair the whole text is final.
pub fn split_thinking(raw: &str, delimiters: &ThinkingDelimiters) -> (Option<String>, String) {
    let Some(open) = raw.find(&delimiters.open) else {
        return (None, raw.to_string());
    };
    let after_open = open + delimiters.open.len();
    let Some(close_rel) = raw[after_open..].find(&delimiters.close) else {
        return (None, raw.to_string());
    };
    let thinking = raw[after_open..after_open + close_rel].to_string();
    let mut text = String::new();
    text.push_str(&raw[..open]);
    text.push_str(&raw[after_open + close_rel + delimiters.close.len()..]);
    (Some(thinking), text.trim().to_string())
}

/// Rejects image-bearing requests aimed at text-only backends.
pub fn ensure_modality(profile: &BackendProfile, request: &GenerationRequest) -> Result<()> {
    if profile.modality == Modality::Text && !request.image_refs.is_empty() {
        return Err(Error::ModalityMismatch(format!(
            "backend {} is text-only but the request carries {} image(s)",
            profile.name,
            request.image_refs.len()
        )));
    }
    Ok(())
}

/// Issues one backend call and appends exactly one [`CallRecord`] to the
/// trace, enforcing the per-path termination cap for primary calls.
pub fn generate_recorded(
    backend: &dyn Backend,
    meta: &CallMeta,
    request: &GenerationRequest,
    trace: &mut PathTrace,
) -> Result<GenerationResponse> {
    request.check()?;
    if !meta.reask {
        let cap = trace.call_cap();
        if trace.non_reask_calls() + 1 > cap {
            return Err(Error::BudgetExceeded {
                calls: trace.non_reask_calls() + 1,
                cap,
            });
        }
    }
    let started = Instant::now();
    let result = backend.generate(meta, request);
    let wall_time = started.elapsed().as_secs_f64();
    match result {
        Ok(response) => {
            trace.record_call(CallRecord {
                prompt_kind: meta.prompt_kind,
                agent_role: meta.role,
                path_index: meta.path_index,
                step_index: meta.step_index,
                candidate: meta.candidate,
                request_text: render_request_text(request),
                response_text: response.raw_text.clone(),
                token_counts: response.token_counts,
                wall_time,
                attempts: response.attempts,
                reask: meta.reask,
            });
            Ok(response)
        }
        Err(err) => Err(err),
    }
}

fn render_request_text(request: &GenerationRequest) -> String {
    let mut out = String::new();
    if !request.system_text.is_empty() {
        out.push_str(&request.system_text);
        out.push_str("\n\n");
    }
    out.push_str(&request.user_text);
    for turn in &request.continuation_turns {
        out.push_str("\n\n[assistant] ");
        out.push_str(&turn.assistant_text);
        out.push_str("\n\n[user] ");
        out.push_str(&turn.user_cue);
    }
    out
}
