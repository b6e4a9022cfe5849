//! `mact` command-line interface: run one task through the pipeline, or
//! evaluate a registered benchmark.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use mact::backends::Script;
use mact::core::{serialize_trace, Task, VisualRef};
use mact::error::Error;
use mact::eval::{run_benchmark, BenchmarkConfig};
use mact::orchestrator::{BackendMode, RunConfig, Runtime};

#[derive(Parser)]
#[command(name = "mact", version, about = "Multi-agent plan/execute/judge/answer pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModeArgs {
    /// Use the live endpoints from the run config.
    #[arg(long, conflicts_with = "scripted")]
    live: bool,
    /// Replay responses from a JSON script file.
    #[arg(long, value_name = "SCRIPT_FILE")]
    scripted: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one task and print its answer.
    Run {
        /// Task file: JSON with question, visual uris, optional notes.
        #[arg(long)]
        task: PathBuf,
        /// Run config file (JSON key-value document).
        #[arg(long)]
        config: PathBuf,
        /// Directory to write per-path traces and the run summary into.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
        #[command(flatten)]
        mode: ModeArgs,
    },
    /// Evaluate a benchmark and print the report table.
    Bench {
        /// Benchmark config file (YAML or JSON).
        #[arg(long)]
        benchmark: PathBuf,
        /// Run config file (JSON key-value document).
        #[arg(long)]
        config: PathBuf,
        /// Evaluate at most N instances.
        #[arg(long)]
        limit: Option<usize>,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Directory to persist per-instance traces into.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
        /// Concurrent instance evaluations.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        mode: ModeArgs,
    },
}

/// Task file schema; visuals may be bare uri strings or full objects.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskFile {
    #[serde(default)]
    task_id: Option<String>,
    question: String,
    #[serde(default)]
    visuals: Vec<VisualSpec>,
    #[serde(default)]
    notes: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum VisualSpec {
    Uri(String),
    Full(VisualRef),
}

fn load_task(path: &Path) -> Result<Task, Error> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let file: TaskFile = serde_json::from_slice(&bytes)
        .map_err(|e| Error::ConfigError(format!("bad task file {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let visuals = file
        .visuals
        .into_iter()
        .map(|spec| {
            let mut visual = match spec {
                VisualSpec::Uri(uri) => VisualRef::image(uri),
                VisualSpec::Full(v) => v,
            };
            if !visual.is_url() && !Path::new(&visual.uri).is_absolute() {
                visual.uri = base.join(&visual.uri).to_string_lossy().into_owned();
            }
            visual
        })
        .collect();
    let task_id = file.task_id.unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "task".into())
    });
    Ok(Task {
        task_id,
        question: file.question,
        visuals,
        notes: file.notes,
    })
}

fn backend_mode(mode: &ModeArgs) -> Result<BackendMode, Error> {
    match (&mode.scripted, mode.live) {
        (Some(script_path), _) => {
            let bytes = std::fs::read(script_path).map_err(|e| {
                Error::ConfigError(format!("cannot read {}: {e}", script_path.display()))
            })?;
            Ok(BackendMode::Scripted(Arc::new(Script::from_json(&bytes)?)))
        }
        (None, true) => Ok(BackendMode::Live),
        (None, false) => Err(Error::ConfigError(
            "choose a backend mode: --live or --scripted <file>".into(),
        )),
    }
}

fn cmd_run(
    task_path: &Path,
    config_path: &Path,
    trace_dir: Option<&Path>,
    mode: &ModeArgs,
) -> Result<(), Error> {
    let run_config = RunConfig::load(config_path)?;
    let runtime = Runtime::new(run_config, backend_mode(mode)?)?;
    let task = load_task(task_path)?;
    let result = runtime.run_task(&task)?;
    if let Some(dir) = trace_dir {
        std::fs::create_dir_all(dir)?;
        for trace in &result.paths {
            let file = dir.join(format!("trace_path_{}.json", trace.path_index));
            std::fs::write(file, serialize_trace(trace)?)?;
        }
        std::fs::write(
            dir.join("run_result.json"),
            serde_json::to_vec_pretty(&result)?,
        )?;
    }
    println!("{}", result.answer.text);
    eprintln!(
        "chosen path {} of {}; {} correction(s); {} backend call(s)",
        result.chosen_path,
        result.paths.len(),
        result.paths[result.chosen_path].corrections_used,
        result
            .paths
            .iter()
            .map(|p| p.backend_calls.len())
            .sum::<usize>()
    );
    Ok(())
}

fn cmd_bench(
    benchmark_path: &Path,
    config_path: &Path,
    limit: Option<usize>,
    report_path: Option<&Path>,
    trace_dir: Option<&Path>,
    workers: usize,
    mode: &ModeArgs,
) -> Result<(), Error> {
    let run_config = RunConfig::load(config_path)?;
    let runtime = Runtime::new(run_config, backend_mode(mode)?)?;
    let mut benchmark = BenchmarkConfig::load(benchmark_path)?;
    if limit.is_some() {
        benchmark.limit = limit;
    }
    // Instance paths resolve relative to the benchmark config file.
    if !benchmark.instances.is_absolute() {
        if let Some(parent) = benchmark_path.parent() {
            benchmark.instances = parent.join(&benchmark.instances);
        }
    }
    let report = run_benchmark(&runtime, &benchmark, workers, trace_dir)?;
    print!("{}", report.render_table());
    if let Some(path) = report_path {
        std::fs::write(path, serde_json::to_vec_pretty(&report)?)?;
        eprintln!("report written to {}", path.display());
    }
    Ok(())
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::NoCompletedPaths => 2,
        Error::ConfigError(_) | Error::TemplateError(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            task,
            config,
            trace_dir,
            mode,
        } => cmd_run(task, config, trace_dir.as_deref(), mode),
        Command::Bench {
            benchmark,
            config,
            limit,
            report,
            trace_dir,
            workers,
            mode,
        } => cmd_bench(
            benchmark,
            config,
            *limit,
            report.as_deref(),
            trace_dir.as_deref(),
            *workers,
            mode,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(exit_code_for(&error))
        }
    }
}
