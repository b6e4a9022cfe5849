//! Live OpenAI-compatible chat-completions client.
//!
//! Targets the common chat-completions surface only: one POST per
//! generation, no streaming, images as base64 data-URI content parts.
//! The bearer token is read from an environment variable (default
//! `MACT_API_KEY`).

use std::time::Duration;

use base64::Engine;
use serde::Deserialize;
use serde_json::{json, Value};

use super::{
    ensure_modality, split_thinking, whitespace_tokens, Backend, BackendProfile, CallMeta,
    FinishReason, GenerationRequest, GenerationResponse, Modality, ThinkingDelimiters,
};
use crate::core::TokenCounts;
use crate::error::{Error, Result};

pub const DEFAULT_API_KEY_ENV: &str = "MACT_API_KEY";

/// Endpoint configuration for one live backend.
#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
#[serde(default)]
pub struct HttpBackendConfig {
    /// Full chat-completions URL, e.g. `https://host/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    pub modality: Modality,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub connect_timeout_secs: u64,
    pub read_timeout_secs: u64,
    /// Transport retries after the first attempt.
    pub max_retries: u32,
    pub thinking_delimiters: ThinkingDelimiters,
}

impl Default for HttpBackendConfig {
    fn default() -> Self {
        HttpBackendConfig {
            endpoint: String::new(),
            model: String::new(),
            modality: Modality::VisionText,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            connect_timeout_secs: 10,
            read_timeout_secs: 120,
            max_retries: 2,
            thinking_delimiters: ThinkingDelimiters::default(),
        }
    }
}

pub struct HttpBackend {
    profile: BackendProfile,
    config: HttpBackendConfig,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Result<Self> {
        if config.endpoint.is_empty() {
            return Err(Error::ConfigError("backend endpoint is empty".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .connect_timeout(Duration::from_secs(config.connect_timeout_secs))
            .timeout(Duration::from_secs(config.read_timeout_secs))
            .build()
            .map_err(|e| Error::ConfigError(format!("http client: {e}")))?;
        Ok(HttpBackend {
            profile: BackendProfile {
                name: format!("http:{}", config.model),
                modality: config.modality,
            },
            config,
            client,
        })
    }

    fn bearer_token(&self) -> Option<String> {
        std::env::var(&self.config.api_key_env).ok().filter(|t| !t.is_empty())
    }
}

impl Backend for HttpBackend {
    fn profile(&self) -> &BackendProfile {
        &self.profile
    }

    fn generate(&self, _meta: &CallMeta, request: &GenerationRequest) -> Result<GenerationResponse> {
        ensure_modality(&self.profile, request)?;
        let body = build_request_body(&self.config.model, request)?;
        let mut last_error = String::new();
        let mut last_timeout = false;
        let total_attempts = self.config.max_retries + 1;
        for attempt in 0..total_attempts {
            if attempt > 0 {
                // Exponential backoff: 250ms, 500ms, ...
                std::thread::sleep(Duration::from_millis(250 << (attempt - 1)));
            }
            let mut http_request = self.client.post(&self.config.endpoint).json(&body);
            if let Some(token) = self.bearer_token() {
                http_request = http_request.bearer_auth(token);
            }
            match http_request.send() {
                Ok(http_response) => {
                    let status = http_response.status();
                    let text = http_response.text().unwrap_or_default();
                    if status.is_success() {
                        return parse_response_body(
                            &text,
                            request,
                            &self.config.thinking_delimiters,
                            attempt + 1,
                        );
                    }
                    last_error = format!("HTTP {status}: {}", truncate(&text, 300));
                    last_timeout = false;
                    // Client errors will not improve on retry.
                    if status.is_client_error() {
                        return Err(Error::BackendUnavailable {
                            message: last_error,
                            attempts: attempt + 1,
                            timeout: false,
                        });
                    }
                }
                Err(e) => {
                    last_timeout = e.is_timeout();
                    last_error = e.to_string();
                }
            }
        }
        Err(Error::BackendUnavailable {
            message: last_error,
            attempts: total_attempts,
            timeout: last_timeout,
        })
    }
}

fn truncate(text: &str, max: usize) -> &str {
    match text.char_indices().nth(max) {
        Some((i, _)) => &text[..i],
        None => text,
    }
}

/// Builds the chat-completions request JSON, including continuation turns
/// and image content parts.
pub fn build_request_body(model: &str, request: &GenerationRequest) -> Result<Value> {
    let mut messages = Vec::new();
    if !request.system_text.is_empty() {
        messages.push(json!({"role": "system", "content": request.system_text}));
    }
    if request.image_refs.is_empty() {
        messages.push(json!({"role": "user", "content": request.user_text}));
    } else {
        let mut parts = vec![json!({"type": "text", "text": request.user_text})];
        for visual in &request.image_refs {
            let url = if visual.is_url() {
                visual.uri.clone()
            } else {
                encode_image_data_uri(&visual.uri)?
            };
            parts.push(json!({"type": "image_url", "image_url": {"url": url}}));
        }
        messages.push(json!({"role": "user", "content": parts}));
    }
    for turn in &request.continuation_turns {
        messages.push(json!({"role": "assistant", "content": turn.assistant_text}));
        messages.push(json!({"role": "user", "content": turn.user_cue}));
    }
    let mut body = json!({
        "model": model,
        "messages": messages,
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
    });
    if let Some(seed) = request.seed {
        body["seed"] = json!(seed);
    }
    Ok(body)
}

fn encode_image_data_uri(path: &str) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|_| Error::UnresolvableVisual(path.to_string()))?;
    let mime = match path.rsplit('.').next().map(str::to_ascii_lowercase).as_deref() {
        Some("jpg") | Some("jpeg") => "image/jpeg",
        Some("gif") => "image/gif",
        Some("webp") => "image/webp",
        _ => "image/png",
    };
    Ok(format!(
        "data:{mime};base64,{}",
        base64::engine::general_purpose::STANDARD.encode(bytes)
    ))
}

#[derive(Deserialize)]
struct WireResponse {
    #[serde(default)]
    id: Option<String>,
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
    /// Reasoning segment some servers return out-of-band.
    #[serde(default)]
    reasoning_content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: Option<usize>,
    #[serde(default)]
    completion_tokens: Option<usize>,
}

fn parse_response_body(
    body: &str,
    request: &GenerationRequest,
    delimiters: &ThinkingDelimiters,
    attempts: u32,
) -> Result<GenerationResponse> {
    let wire: WireResponse = serde_json::from_str(body).map_err(|e| Error::BackendUnavailable {
        message: format!("unparseable response: {e}"),
        attempts,
        timeout: false,
    })?;
    let choice = wire.choices.first().ok_or_else(|| Error::BackendUnavailable {
        message: "response has no choices".into(),
        attempts,
        timeout: false,
    })?;
    let content = choice.message.content.clone().unwrap_or_default();
    let (thinking_text, text, raw_text) = match &choice.message.reasoning_content {
        Some(reasoning) if !reasoning.is_empty() => {
            let raw = format!("{}{}{}{}", delimiters.open, reasoning, delimiters.close, content);
            (Some(reasoning.clone()), content.clone(), raw)
        }
        _ => {
            let (thinking, final_text) = split_thinking(&content, delimiters);
            (thinking, final_text, content.clone())
        }
    };
    let finish_reason = match choice.finish_reason.as_deref() {
        Some("stop") | None => FinishReason::Stop,
        Some("length") => FinishReason::Length,
        _ => FinishReason::Error,
    };
    let usage = wire.usage.as_ref();
    let token_counts = TokenCounts {
        prompt: usage
            .and_then(|u| u.prompt_tokens)
            .unwrap_or_else(|| whitespace_tokens(&request.system_text) + whitespace_tokens(&request.user_text)),
        completion: usage
            .and_then(|u| u.completion_tokens)
            .unwrap_or_else(|| whitespace_tokens(&raw_text)),
        thinking: thinking_text.as_deref().map(whitespace_tokens).unwrap_or(0),
    };
    Ok(GenerationResponse {
        text,
        raw_text,
        thinking_text,
        token_counts,
        finish_reason,
        response_id: wire.id.unwrap_or_default(),
        attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::ContinuationTurn;
    use crate::core::VisualRef;

    #[test]
    fn request_body_without_images_uses_plain_content() {
        let request = GenerationRequest::new("sys", "hello");
        let body = build_request_body("m", &request).unwrap();
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][1]["content"], "hello");
        assert!(body.get("seed").is_none());
    }

    #[test]
    fn request_body_with_url_image_and_seed() {
        let mut request = GenerationRequest::new("", "look");
        request.image_refs.push(VisualRef::image("https://x/a.png"));
        request.seed = Some(7);
        let body = build_request_body("m", &request).unwrap();
        let parts = body["messages"][0]["content"].as_array().unwrap();
        assert_eq!(parts[1]["image_url"]["url"], "https://x/a.png");
        assert_eq!(body["seed"], 7);
    }

    #[test]
    fn request_body_appends_continuation_turns() {
        let mut request = GenerationRequest::new("", "judge this");
        request.continuation_turns.push(ContinuationTurn {
            assistant_text: "partial thinking".into(),
            user_cue: "Wait".into(),
        });
        let body = build_request_body("m", &request).unwrap();
        let messages = body["messages"].as_array().unwrap();
        assert_eq!(messages[1]["role"], "assistant");
        assert_eq!(messages[2]["content"], "Wait");
    }

    #[test]
    fn response_parse_extracts_thinking_and_usage() {
        let body = r#"{
            "id": "r-1",
            "choices": [{"message": {"content": "<think>hmm one</think>final"}, "finish_reason": "stop"}],
            "usage": {"prompt_tokens": 11, "completion_tokens": 5}
        }"#;
        let request = GenerationRequest::new("", "q");
        let response =
            parse_response_body(body, &request, &ThinkingDelimiters::default(), 1).unwrap();
        assert_eq!(response.text, "final");
        assert_eq!(response.thinking_text.as_deref(), Some("hmm one"));
        assert_eq!(response.token_counts.prompt, 11);
        assert_eq!(response.token_counts.thinking, 2);
        assert_eq!(response.response_id, "r-1");
    }

    #[test]
    fn response_parse_uses_reasoning_content_field() {
        let body = r#"{
            "choices": [{"message": {"content": "answer", "reasoning_content": "a b c d"}}]
        }"#;
        let request = GenerationRequest::new("", "q");
        let response =
            parse_response_body(body, &request, &ThinkingDelimiters::default(), 1).unwrap();
        assert_eq!(response.text, "answer");
        assert_eq!(response.token_counts.thinking, 4);
        assert!(response.raw_text.contains("<think>"));
    }

    #[test]
    fn response_parse_rejects_garbage() {
        let request = GenerationRequest::new("", "q");
        assert!(parse_response_body("not json", &request, &ThinkingDelimiters::default(), 1).is_err());
        assert!(parse_response_body(
            r#"{"choices": []}"#,
            &request,
            &ThinkingDelimiters::default(),
            1
        )
        .is_err());
    }
}
