//! Evaluation metrics: ANLS, token F1, and model-judge scoring.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use regex::Regex;
use std::sync::OnceLock;

use crate::backends::{Backend, CallMeta, GenerationRequest};
use crate::error::{Error, Result};

/// Character-level Levenshtein distance, two-row dynamic program.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut previous: Vec<usize> = (0..=b.len()).collect();
    let mut current = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        current[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let substitution = previous[j] + usize::from(ca != cb);
            current[j + 1] = substitution
                .min(previous[j + 1] + 1)
                .min(current[j] + 1);
        }
        std::mem::swap(&mut previous, &mut current);
    }
    previous[b.len()]
}

/// Normalization applied before ANLS: lowercase, trim, collapse internal
/// whitespace.
pub fn anls_normalize(text: &str) -> String {
    text.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Average Normalized Levenshtein Similarity against one or more gold
/// answers: per reference, `1 - NL` when the normalized distance `NL` is
/// below the threshold and 0 otherwise; the best reference wins.
pub fn anls(prediction: &str, references: &[String], threshold: f64) -> f64 {
    let prediction = anls_normalize(prediction);
    references
        .iter()
        .map(|reference| {
            let reference = anls_normalize(reference);
            let longest = prediction.chars().count().max(reference.chars().count());
            let nl = if longest == 0 {
                0.0
            } else {
                levenshtein(&prediction, &reference) as f64 / longest as f64
            };
            if nl < threshold {
                1.0 - nl
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Normalization applied before token F1: lowercase with punctuation
/// converted to spaces.
pub fn f1_normalize(text: &str) -> String {
    text.to_lowercase()
        .chars()
        .map(|c| if c.is_ascii_punctuation() { ' ' } else { c })
        .collect()
}

/// Token-level F1 over the multiset overlap of whitespace tokens after
/// normalization. Both sides empty scores 1; exactly one side empty
/// scores 0.
pub fn token_f1(prediction: &str, reference: &str) -> f64 {
    let prediction_tokens: Vec<String> = f1_normalize(prediction)
        .split_whitespace()
        .map(str::to_string)
        .collect();
    let reference_tokens: Vec<String> = f1_normalize(reference)
        .split_whitespace()
        .map(str::to_string)
        .collect();
    match (prediction_tokens.is_empty(), reference_tokens.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut reference_counts: HashMap<&str, usize> = HashMap::new();
    for token in &reference_tokens {
        *reference_counts.entry(token).or_insert(0) += 1;
    }
    let mut common = 0usize;
    for token in &prediction_tokens {
        if let Some(count) = reference_counts.get_mut(token.as_str()) {
            if *count > 0 {
                *count -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / prediction_tokens.len() as f64;
    let recall = common as f64 / reference_tokens.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Best token F1 across references.
pub fn token_f1_multi(prediction: &str, references: &[String]) -> f64 {
    references
        .iter()
        .map(|reference| token_f1(prediction, reference))
        .fold(0.0, f64::max)
}

/// Minimal judge contract for the benchmark judge metric.
pub trait JudgeBackend: Send + Sync {
    fn reply(&self, prompt: &str) -> Result<String>;
}

/// Scripted judge replies consumed in order.
pub struct ScriptedJudge {
    replies: Mutex<VecDeque<String>>,
}

impl ScriptedJudge {
    pub fn new(replies: Vec<String>) -> Self {
        ScriptedJudge {
            replies: Mutex::new(replies.into()),
        }
    }
}

impl JudgeBackend for ScriptedJudge {
    fn reply(&self, _prompt: &str) -> Result<String> {
        self.replies
            .lock()
            .expect("judge replies lock")
            .pop_front()
            .ok_or_else(|| Error::ScriptExhausted("judge replies".into()))
    }
}

/// Live judge speaking through the backend contract.
pub struct ModelJudge {
    backend: Arc<dyn Backend>,
}

impl ModelJudge {
    pub fn new(backend: Arc<dyn Backend>) -> Self {
        ModelJudge { backend }
    }
}

impl JudgeBackend for ModelJudge {
    fn reply(&self, prompt: &str) -> Result<String> {
        let mut request = GenerationRequest::new(
            "You are a strict grader of question-answering outputs.",
            prompt,
        );
        request.max_tokens = 64;
        let meta = CallMeta::new(
            crate::agents::AgentRole::Answer,
            crate::prompting::PromptKind::P5Answer,
            0,
        );
        Ok(self.backend.generate(&meta, &request)?.text)
    }
}

fn first_integer_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"-?\d+").unwrap())
}

fn parse_judge_reply(reply: &str) -> Option<i64> {
    let value: i64 = first_integer_re().find(reply)?.as_str().parse().ok()?;
    (1..=10).contains(&value).then_some(value)
}

fn judge_prompt(question: &str, prediction: &str, references: &[String]) -> String {
    format!(
        "Question: {question}\nReference answer(s): {}\nCandidate answer: {prediction}\n\nRate the candidate's correctness against the references on a scale from 1 to 10, where 10 is fully correct. Reply with the integer only.",
        references.join(" | ")
    )
}

/// Asks the judge for an integer in 1..=10 and maps it to an accuracy in
/// `[0,100]` (`score * scale`, default scale 10). A non-integer or
/// out-of-range reply gets one re-ask before failing.
pub fn judge_score(
    judge: &dyn JudgeBackend,
    question: &str,
    prediction: &str,
    references: &[String],
    scale: f64,
) -> Result<f64> {
    let prompt = judge_prompt(question, prediction, references);
    let first = judge.reply(&prompt)?;
    if let Some(score) = parse_judge_reply(&first) {
        return Ok(score as f64 * scale);
    }
    let retry_prompt = format!("{prompt}\n\nREMINDER: reply with a single integer from 1 to 10.");
    let second = judge.reply(&retry_prompt)?;
    match parse_judge_reply(&second) {
        Some(score) => Ok(score as f64 * scale),
        None => Err(Error::InvalidJudgeReply(second)),
    }
}
