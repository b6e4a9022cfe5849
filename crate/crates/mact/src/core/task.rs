//! Tasks and visual input references.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kind of media a [`VisualRef`] points at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaKind {
    Image,
}

/// Locator for one visual input resource (file path or URL).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisualRef {
    pub uri: String,
    pub media_kind: MediaKind,
}

impl VisualRef {
    pub fn image(uri: impl Into<String>) -> Self {
        VisualRef {
            uri: uri.into(),
            media_kind: MediaKind::Image,
        }
    }

    /// True when the uri is an http(s) URL rather than a local path.
    pub fn is_url(&self) -> bool {
        self.uri.starts_with("http://") || self.uri.starts_with("https://")
    }

    /// Checks that the reference points at a readable resource.
    ///
    /// Local paths must exist and be regular files; URLs are accepted on
    /// scheme alone (fetching is deferred to the backend that sends them).
    pub fn resolve(&self) -> Result<()> {
        if self.is_url() {
            return Ok(());
        }
        let path = Path::new(&self.uri);
        match std::fs::metadata(path) {
            Ok(meta) if meta.is_file() => Ok(()),
            _ => Err(Error::UnresolvableVisual(self.uri.clone())),
        }
    }
}

/// One question plus its ordered visual inputs — the pipeline's input unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: String,
    pub question: String,
    #[serde(default)]
    pub visuals: Vec<VisualRef>,
    /// Free-form key/value notes attached to the task, served by the
    /// `lookup_note` built-in tool.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

impl Task {
    pub fn new(task_id: impl Into<String>, question: impl Into<String>) -> Self {
        Task {
            task_id: task_id.into(),
            question: question.into(),
            visuals: Vec::new(),
            notes: BTreeMap::new(),
        }
    }

    pub fn with_visuals(mut self, visuals: Vec<VisualRef>) -> Self {
        self.visuals = visuals;
        self
    }

    pub fn with_notes(mut self, notes: BTreeMap<String, String>) -> Self {
        self.notes = notes;
        self
    }
}

/// Validates a task before pipeline start: non-empty question and every
/// visual reference resolvable.
pub fn validate_task(task: Task) -> Result<Task> {
    if task.question.trim().is_empty() {
        return Err(Error::EmptyQuestion);
    }
    for visual in &task.visuals {
        visual.resolve()?;
    }
    Ok(task)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_task_passes_through() {
        let file = tempfile::NamedTempFile::new().unwrap();
        let task = Task::new("t1", "What is the total?")
            .with_visuals(vec![VisualRef::image(file.path().to_str().unwrap())]);
        let validated = validate_task(task.clone()).unwrap();
        assert_eq!(validated, task);
    }

    #[test]
    fn empty_question_rejected() {
        let task = Task::new("t1", "   ");
        assert!(matches!(validate_task(task), Err(Error::EmptyQuestion)));
    }

    #[test]
    fn missing_visual_file_rejected() {
        let task = Task::new("t1", "q").with_visuals(vec![VisualRef::image("/no/such/file.png")]);
        match validate_task(task) {
            Err(Error::UnresolvableVisual(uri)) => assert_eq!(uri, "/no/such/file.png"),
            other => panic!("expected UnresolvableVisual, got {other:?}"),
        }
    }

    #[test]
    fn url_visual_accepted_without_fetch() {
        let task =
            Task::new("t1", "q").with_visuals(vec![VisualRef::image("https://example.com/a.png")]);
        assert!(validate_task(task).is_ok());
    }

    #[test]
    fn text_only_task_is_permitted() {
        assert!(validate_task(Task::new("t1", "general question")).is_ok());
    }
}
