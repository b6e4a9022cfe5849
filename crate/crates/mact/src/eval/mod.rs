//! Benchmark registration and the evaluation harness: run the pipeline per
//! instance, apply the configured metric, aggregate to an accuracy between
//! 0 and 100.

mod metrics;

pub use metrics::{
    anls, anls_normalize, f1_normalize, judge_score, levenshtein, token_f1, token_f1_multi,
    JudgeBackend, ModelJudge, ScriptedJudge,
};

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::core::{serialize_trace, ScalingConfig, Task};
use crate::error::{Error, Result};
use crate::orchestrator::Runtime;

/// Metric applied to each instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Anls,
    TokenF1,
    Judge,
}

/// A registered benchmark: where its instances live and how to score them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    pub name: String,
    /// JSON-lines file, one instance per line; image uris resolve relative
    /// to this file's directory.
    pub instances: PathBuf,
    pub metric: MetricKind,
    /// ANLS threshold tau.
    pub anls_threshold: f64,
    /// Accuracy per judge point: accuracy = judge score (1..=10) * scale.
    pub judge_scale: f64,
    pub limit: Option<usize>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            name: "benchmark".into(),
            instances: PathBuf::new(),
            metric: MetricKind::Anls,
            anls_threshold: 0.5,
            judge_scale: 10.0,
            limit: None,
        }
    }
}

impl BenchmarkConfig {
    /// Loads a YAML or JSON benchmark config.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let config: BenchmarkConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("yaml") | Some("yml") => serde_yaml::from_str(&text)
                .map_err(|e| Error::ConfigError(format!("bad benchmark config: {e}")))?,
            _ => serde_json::from_str(&text)
                .map_err(|e| Error::ConfigError(format!("bad benchmark config: {e}")))?,
        };
        config.check()?;
        Ok(config)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.anls_threshold > 0.0 && self.anls_threshold < 1.0) {
            return Err(Error::ConfigError(format!(
                "anls_threshold {} outside (0,1)",
                self.anls_threshold
            )));
        }
        if self.judge_scale <= 0.0 {
            return Err(Error::ConfigError("judge_scale must be > 0".into()));
        }
        Ok(())
    }
}

/// One evaluation instance: a task and its acceptable gold answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalInstance {
    pub task: Task,
    pub references: Vec<String>,
}

impl EvalInstance {
    pub fn check(&self) -> Result<()> {
        if self.references.is_empty() {
            return Err(Error::InvariantViolation(
                "instance has no reference answers".into(),
            ));
        }
        Ok(())
    }
}

/// Loads instances from a JSON-lines file, resolving relative visual uris
/// against the file's directory and applying the optional cap.
pub fn load_instances(path: &Path, limit: Option<usize>) -> Result<Vec<EvalInstance>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut instances = Vec::new();
    for (line_number, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut instance: EvalInstance = serde_json::from_str(line).map_err(|e| {
            Error::ConfigError(format!(
                "bad instance at {}:{}: {e}",
                path.display(),
                line_number + 1
            ))
        })?;
        instance.check()?;
        for visual in &mut instance.task.visuals {
            if !visual.is_url() && !Path::new(&visual.uri).is_absolute() {
                visual.uri = base.join(&visual.uri).to_string_lossy().into_owned();
            }
        }
        instances.push(instance);
        if let Some(limit) = limit {
            if instances.len() >= limit {
                break;
            }
        }
    }
    Ok(instances)
}

/// Per-instance outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub index: usize,
    pub task_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<String>,
    /// Metric score in `[0,1]`; 0 for errored instances.
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub timeout: bool,
    pub wall_time: f64,
}

/// Full benchmark report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub benchmark: BenchmarkConfig,
    pub scaling: ScalingConfig,
    pub alpha: f64,
    pub instances: Vec<InstanceReport>,
    /// Mean per-instance score scaled to `[0,100]`.
    pub aggregate: f64,
    pub errors: usize,
    pub timeouts: usize,
    pub wall_time: f64,
}

impl EvalReport {
    /// Plain-text summary table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "benchmark: {} (metric {:?}, {} instance(s))\n",
            self.benchmark.name,
            self.benchmark.metric,
            self.instances.len()
        ));
        out.push_str("index  score    status  task\n");
        for instance in &self.instances {
            out.push_str(&format!(
                "{:<6} {:<8.4} {:<7} {}\n",
                instance.index,
                instance.score,
                if instance.error.is_some() { "error" } else { "ok" },
                instance.task_id
            ));
        }
        out.push_str(&format!(
            "aggregate: {:.2} / 100   errors: {}   timeouts: {}\n",
            self.aggregate, self.errors, self.timeouts
        ));
        out
    }
}

fn score_instance(
    runtime: &Runtime,
    benchmark: &BenchmarkConfig,
    instance: &EvalInstance,
    index: usize,
    trace_dir: Option<&Path>,
) -> InstanceReport {
    let started = std::time::Instant::now();
    let mut report = InstanceReport {
        index,
        task_id: instance.task.task_id.clone(),
        prediction: None,
        score: 0.0,
        error: None,
        timeout: false,
        wall_time: 0.0,
    };
    match runtime.run_task(&instance.task) {
        Ok(result) => {
            if let Some(dir) = trace_dir {
                for trace in &result.paths {
                    let file = dir.join(format!(
                        "{}_i{:04}_p{}.json",
                        benchmark.name, index, trace.path_index
                    ));
                    if let Ok(bytes) = serialize_trace(trace) {
                        let _ = std::fs::write(file, bytes);
                    }
                }
            }
            let prediction = result.answer.text.clone();
            let score = match benchmark.metric {
                MetricKind::Anls => {
                    anls(&prediction, &instance.references, benchmark.anls_threshold)
                }
                MetricKind::TokenF1 => token_f1_multi(&prediction, &instance.references),
                MetricKind::Judge => {
                    match runtime.judge_backend().and_then(|judge| {
                        judge_score(
                            judge.as_ref(),
                            &instance.task.question,
                            &prediction,
                            &instance.references,
                            benchmark.judge_scale,
                        )
                    }) {
                        // Normalize back to [0,1] so aggregation is uniform.
                        Ok(accuracy) => accuracy / (10.0 * benchmark.judge_scale),
                        Err(error) => {
                            report.error = Some(error.to_string());
                            0.0
                        }
                    }
                }
            };
            report.prediction = Some(prediction);
            report.score = score;
        }
        Err(error) => {
            report.timeout = error.is_timeout();
            report.error = Some(error.to_string());
        }
    }
    report.wall_time = started.elapsed().as_secs_f64();
    report
}

/// Runs the full pipeline on every instance, applies the metric, and
/// aggregates. Per-instance errors contribute a score of 0 without
/// aborting the batch. Instances may evaluate concurrently up to
/// `workers`; report assembly is ordered by instance index.
pub fn run_benchmark(
    runtime: &Runtime,
    benchmark: &BenchmarkConfig,
    workers: usize,
    trace_dir: Option<&Path>,
) -> Result<EvalReport> {
    benchmark.check()?;
    let started = std::time::Instant::now();
    let instances = load_instances(&benchmark.instances, benchmark.limit)?;
    if let Some(dir) = trace_dir {
        std::fs::create_dir_all(dir)?;
    }
    let results: Mutex<Vec<Option<InstanceReport>>> = Mutex::new(vec![None; instances.len()]);
    let next_index = AtomicUsize::new(0);
    let worker_count = workers.max(1).min(instances.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..worker_count {
            scope.spawn(|| loop {
                let index = next_index.fetch_add(1, Ordering::SeqCst);
                if index >= instances.len() {
                    break;
                }
                let report = score_instance(runtime, benchmark, &instances[index], index, trace_dir);
                results.lock().expect("results lock")[index] = Some(report);
            });
        }
    });
    let instances: Vec<InstanceReport> = results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .flatten()
        .collect();
    let errors = instances.iter().filter(|i| i.error.is_some()).count();
    let timeouts = instances.iter().filter(|i| i.timeout).count();
    let aggregate = if instances.is_empty() {
        0.0
    } else {
        instances.iter().map(|i| i.score).sum::<f64>() / instances.len() as f64 * 100.0
    };
    Ok(EvalReport {
        benchmark: benchmark.clone(),
        scaling: runtime.scaling().clone(),
        alpha: runtime.alpha(),
        instances,
        aggregate,
        errors,
        timeouts,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_config_bounds() {
        let mut config = BenchmarkConfig::default();
        config.check().unwrap();
        config.anls_threshold = 1.0;
        assert!(config.check().is_err());
        config.anls_threshold = 0.0;
        assert!(config.check().is_err());
    }

    #[test]
    fn benchmark_config_loads_yaml_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let yaml = dir.path().join("bench.yaml");
        std::fs::write(&yaml, "name: demo\ninstances: cases.jsonl\nmetric: token_f1\n").unwrap();
        let config = BenchmarkConfig::load(&yaml).unwrap();
        assert_eq!(config.metric, MetricKind::TokenF1);
        assert_eq!(config.name, "demo");

        let json = dir.path().join("bench.json");
        std::fs::write(
            &json,
            r#"{"name": "demo2", "instances": "cases.jsonl", "metric": "anls", "limit": 2}"#,
        )
        .unwrap();
        let config = BenchmarkConfig::load(&json).unwrap();
        assert_eq!(config.limit, Some(2));
    }

    #[test]
    fn instances_load_with_limit_and_relative_uris() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("img.png"), b"fake").unwrap();
        let path = dir.path().join("cases.jsonl");
        let mut lines = Vec::new();
        for i in 0..10 {
            lines.push(format!(
                r#"{{"task": {{"task_id": "t{i}", "question": "q{i}", "visuals": [{{"uri": "img.png", "media_kind": "image"}}]}}, "references": ["a{i}"]}}"#
            ));
        }
        std::fs::write(&path, lines.join("\n")).unwrap();
        let instances = load_instances(&path, Some(2)).unwrap();
        assert_eq!(instances.len(), 2);
        assert!(instances[0].task.visuals[0].uri.ends_with("img.png"));
        assert!(Path::new(&instances[0].task.visuals[0].uri).is_absolute());
    }

    #[test]
    fn instances_require_references() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cases.jsonl");
        std::fs::write(
            &path,
            r#"{"task": {"task_id": "t", "question": "q"}, "references": []}"#,
        )
        .unwrap();
        assert!(load_instances(&path, None).is_err());
    }
}
