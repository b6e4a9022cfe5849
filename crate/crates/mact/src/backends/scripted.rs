//! Deterministic scripted backend for tests and offline benchmark runs.
//!
//! A script addresses responses by `(agent_role, path_index, call ordinal)`,
//! where the ordinal counts that role's calls within one path. Keying on the
//! path index keeps concurrent paths deterministic; addressing by ordinal
//! lets control-flow tests inject judgment failures at chosen rounds.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{
    ensure_modality, split_thinking, whitespace_tokens, Backend, BackendProfile, CallMeta,
    FinishReason, GenerationRequest, GenerationResponse, Modality, ThinkingDelimiters,
};
use crate::agents::AgentRole;
use crate::core::TokenCounts;
use crate::error::{Error, Result};

/// One scripted response. `path` and `ordinal` act as wildcards when
/// omitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub role: AgentRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordinal: Option<usize>,
    pub text: String,
}

/// A script file: keyed responses, per-role fallbacks, and scripted scorer
/// tables (used by the scripted scorers in the rewards module).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Script {
    pub responses: Vec<ScriptEntry>,
    /// Fallback response per role when no entry matches.
    pub defaults: BTreeMap<AgentRole, String>,
    /// Scripted step scores keyed by candidate text.
    pub step_scores: BTreeMap<String, f64>,
    pub default_step_score: Option<f64>,
    /// Scripted outcome scores keyed by scored text.
    pub outcome_scores: BTreeMap<String, f64>,
    pub default_outcome_score: Option<f64>,
    /// Replies for the benchmark judge metric, in consumption order.
    pub judge_replies: Vec<String>,
}

impl Script {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::ConfigError(format!("bad script: {e}")))
    }

    pub fn push(&mut self, role: AgentRole, path: usize, ordinal: usize, text: impl Into<String>) {
        self.responses.push(ScriptEntry {
            role,
            path: Some(path),
            ordinal: Some(ordinal),
            text: text.into(),
        });
    }

    pub fn default_for(&mut self, role: AgentRole, text: impl Into<String>) {
        self.defaults.insert(role, text.into());
    }

    /// Most-specific match wins: exact, then path-wildcard, then
    /// ordinal-wildcard, then full wildcard, then the role default.
    fn lookup(&self, role: AgentRole, path: usize, ordinal: usize) -> Option<&str> {
        let matches = |entry: &&ScriptEntry, p: Option<usize>, o: Option<usize>| {
            entry.role == role && entry.path == p && entry.ordinal == o
        };
        let find = |p: Option<usize>, o: Option<usize>| {
            self.responses
                .iter()
                .find(|e| matches(e, p, o))
                .map(|e| e.text.as_str())
        };
        find(Some(path), Some(ordinal))
            .or_else(|| find(None, Some(ordinal)))
            .or_else(|| find(Some(path), None))
            .or_else(|| find(None, None))
            .or_else(|| self.defaults.get(&role).map(String::as_str))
    }
}

enum Source {
    Keyed(Script),
    Queue(Mutex<VecDeque<String>>),
}

/// Backend that replays a script. Per-(path, role) cursors make ordering
/// across concurrent paths deterministic.
pub struct ScriptedBackend {
    profile: BackendProfile,
    delimiters: ThinkingDelimiters,
    source: Source,
    cursors: Mutex<HashMap<(usize, AgentRole), usize>>,
}

impl ScriptedBackend {
    pub fn new(script: Script) -> Self {
        ScriptedBackend {
            profile: BackendProfile {
                name: "scripted".into(),
                modality: Modality::VisionText,
            },
            delimiters: ThinkingDelimiters::default(),
            source: Source::Keyed(script),
            cursors: Mutex::new(HashMap::new()),
        }
    }

    /// A backend that serves responses in FIFO order regardless of keys.
    pub fn from_queue<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let queue: VecDeque<String> = responses.into_iter().map(Into::into).collect();
        ScriptedBackend {
            profile: BackendProfile {
                name: "scripted-queue".into(),
                modality: Modality::VisionText,
            },
            delimiters: ThinkingDelimiters::default(),
            source: Source::Queue(Mutex::new(queue)),
            cursors: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_modality(mut self, modality: Modality) -> Self {
        self.profile.modality = modality;
        self
    }

    pub fn with_delimiters(mut self, delimiters: ThinkingDelimiters) -> Self {
        self.delimiters = delimiters;
        self
    }

    fn next_text(&self, meta: &CallMeta) -> Result<String> {
        match &self.source {
            Source::Queue(queue) => queue
                .lock()
                .expect("queue lock")
                .pop_front()
                .ok_or_else(|| Error::ScriptExhausted("queue empty".into())),
            Source::Keyed(script) => {
                let ordinal = {
                    let mut cursors = self.cursors.lock().expect("cursor lock");
                    let slot = cursors.entry((meta.path_index, meta.role)).or_insert(0);
                    let current = *slot;
                    *slot += 1;
                    current
                };
                script
                    .lookup(meta.role, meta.path_index, ordinal)
                    .map(str::to_string)
                    .ok_or_else(|| {
                        Error::ScriptExhausted(format!(
                            "({}, path {}, ordinal {ordinal})",
                            meta.role, meta.path_index
                        ))
                    })
            }
        }
    }
}

impl Backend for ScriptedBackend {
    fn profile(&self) -> &BackendProfile {
        &self.profile
    }

    fn generate(&self, meta: &CallMeta, request: &GenerationRequest) -> Result<GenerationResponse> {
        ensure_modality(&self.profile, request)?;
        let raw = self.next_text(meta)?;
        let (thinking_text, text) = split_thinking(&raw, &self.delimiters);
        let token_counts = TokenCounts {
            prompt: whitespace_tokens(&request.system_text) + whitespace_tokens(&request.user_text),
            completion: whitespace_tokens(&raw),
            thinking: thinking_text.as_deref().map(whitespace_tokens).unwrap_or(0),
        };
        let response_id = format!("s-{}-{}-{}", meta.path_index, meta.role, token_counts.completion);
        Ok(GenerationResponse {
            text,
            raw_text: raw,
            thinking_text,
            token_counts,
            finish_reason: FinishReason::Stop,
            response_id,
            attempts: 1,
        })
    }
}
