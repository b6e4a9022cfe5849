//! Acceptance suite. Each test exercises one criterion end to end against
//! scripted backends and prints one PASS line (visible with
//! `cargo test --test acceptance -- --nocapture`).

mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::*;
use mact::agents::AgentRole;
use mact::backends::{CallMeta, GenerationRequest, Script, ScriptedBackend};
use mact::core::{
    parse_trace, serialize_trace, Answer, Candidate, ExecutionPlan, ExecutionProcess, Judgment,
    Mistake, MistakeStage, PathFailure, PathTrace, RelevantPlan, ScalingConfig, StepRecord,
    StepScope, Task, TokenCounts,
};
use mact::eval::{anls, judge_score, levenshtein, token_f1, ScriptedJudge};
use mact::orchestrator::{route, Action};
use mact::prompting::PromptKind;
use mact::rewards::{score_step, MixedRewards, OracleStepScorer, RewardBreakdown, StepContext};
use mact::scaling::{force_budget, select_best_candidate, BudgetPolicy};
use mact::tools::{ToolCallRecord, ToolStatus};

fn verdict_judgment(flag_plan: bool, flag_exe: bool) -> Judgment {
    let mut mistakes = Vec::new();
    if flag_plan {
        mistakes.push(Mistake::new(MistakeStage::Plan, StepScope::Whole, "p"));
    }
    if flag_exe {
        mistakes.push(Mistake::new(MistakeStage::Execution, StepScope::Whole, "e"));
    }
    Judgment::new(flag_plan, flag_exe, mistakes).unwrap()
}

/// Criterion 1: the orchestrator reproduces the hand-simulated revision
/// counts, correction counts, and final-answer behavior for the scripted
/// judgment sequences, and the full routing truth table holds.
#[test]
fn acceptance_1_collaboration_conformance() {
    let started = Instant::now();
    // (sequence, plans, processes, judgments, corrections, flags at exit)
    let cases: Vec<(Vec<Verdict>, usize, usize, usize, usize, bool)> = vec![
        (vec![Verdict::Clean], 1, 1, 1, 0, false),
        (vec![Verdict::PlanFail, Verdict::Clean], 2, 2, 2, 1, false),
        (vec![Verdict::ExeFail, Verdict::Clean], 1, 2, 2, 1, false),
        (
            vec![Verdict::PlanFail, Verdict::ExeFail, Verdict::Clean],
            2,
            3,
            3,
            2,
            false,
        ),
        (
            vec![Verdict::ExeFail, Verdict::ExeFail, Verdict::ExeFail, Verdict::ExeFail],
            1,
            4,
            4,
            3,
            true,
        ),
    ];
    for (sequence, plans, processes, judgments, corrections, flagged_exit) in cases {
        let script = script_for_sequence(&sequence, &["read the value", "sum it"]);
        let runtime = runtime_for(script, test_run_config(1, 3));
        let result = runtime.run_task(&Task::new("t", "q")).unwrap();
        let trace = &result.paths[0];
        assert_eq!(trace.plan_history.len(), plans, "plans for {sequence:?}");
        assert_eq!(
            trace.process_history.len(),
            processes,
            "processes for {sequence:?}"
        );
        assert_eq!(
            trace.judgments.len(),
            judgments,
            "judgments for {sequence:?}"
        );
        assert_eq!(
            trace.corrections_used, corrections,
            "corrections for {sequence:?}"
        );
        // The answer is always produced, even on a bound exit with flags
        // still raised.
        assert!(trace.answer.is_some(), "answer for {sequence:?}");
        let last = trace.judgments.last().unwrap();
        assert_eq!(
            last.flag_plan || last.flag_exe,
            flagged_exit,
            "exit flags for {sequence:?}"
        );
        trace.validate().unwrap();
    }

    // Routing truth table: all 8 (flag_plan, flag_exe, t >= N_c) rows.
    let rows = [
        (false, false, false, Action::Finish),
        (false, false, true, Action::Finish),
        (true, false, false, Action::Replan),
        (true, false, true, Action::Finish),
        (false, true, false, Action::Reexecute),
        (false, true, true, Action::Finish),
        (true, true, false, Action::Replan),
        (true, true, true, Action::Finish),
    ];
    for (flag_plan, flag_exe, at_bound, expected) in rows {
        let t = if at_bound { 3 } else { 0 };
        assert_eq!(route(&verdict_judgment(flag_plan, flag_exe), t, 3), expected);
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "criterion 1 took {elapsed:?}");
    println!("ACCEPTANCE 1 (collaboration conformance): PASS ({elapsed:?})");
}

/// Criterion 2: over 1,000 randomized judgment sequences, corrections
/// never exceed the bound, every completed path answers exactly once, and
/// mistake accumulation is observably append-only in the prompts.
#[test]
fn acceptance_2_correction_bound_and_answer_always() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0xAC2);
    for case in 0..1000u32 {
        let max_corrections = rng.gen_range(0..=4usize);
        let rounds = max_corrections + 1;
        let sequence: Vec<Verdict> = (0..rounds)
            .map(|_| match rng.gen_range(0..3u8) {
                0 => Verdict::Clean,
                1 => Verdict::PlanFail,
                _ => Verdict::ExeFail,
            })
            .collect();
        let script = script_for_sequence(&sequence, &["single step"]);
        let runtime = runtime_for(script, test_run_config(1, max_corrections));
        let result = runtime
            .run_task(&Task::new("t", "q"))
            .unwrap_or_else(|e| panic!("case {case} ({sequence:?}, N_c={max_corrections}): {e}"));
        let trace = &result.paths[0];

        assert!(
            trace.corrections_used <= max_corrections,
            "case {case}: t {} > N_c {max_corrections}",
            trace.corrections_used
        );
        let answer_calls = trace
            .backend_calls
            .iter()
            .filter(|c| c.prompt_kind == PromptKind::P5Answer && !c.reask)
            .count();
        assert_eq!(answer_calls, 1, "case {case}: expected exactly one answer call");

        // Append-only accumulation, observed through the actual call
        // stream: every plan/step/answer request contains every mistake
        // description raised by any earlier judgment response.
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for call in &trace.backend_calls {
            match call.prompt_kind {
                PromptKind::P2ExecutionPlan | PromptKind::P3StepExecution | PromptKind::P5Answer => {
                    for description in &seen {
                        assert!(
                            call.request_text.contains(description),
                            "case {case}: {} call missing accumulated {description:?}",
                            call.prompt_kind
                        );
                    }
                }
                PromptKind::P4Judgment => {}
                PromptKind::P1RelevantPlans => {}
            }
            if call.prompt_kind == PromptKind::P4Judgment {
                for round in 0..rounds {
                    let token = format!("mistake-r{round}");
                    if call.response_text.contains(&token) {
                        seen.insert(token);
                    }
                }
            }
        }
        trace.validate().unwrap();
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "criterion 2 took {elapsed:?}");
    println!("ACCEPTANCE 2 (correction bound, answer-always, append-only): PASS ({elapsed:?})");
}

/// Criterion 3: with an oracle scorer and candidate correctness
/// probability 0.5, Monte-Carlo step success matches 1 - (1-p)^N_e and is
/// non-decreasing in N_e.
#[test]
fn acceptance_3_best_of_n_analytic() {
    let started = Instant::now();
    let task = Task::new("t", "q");
    let plan = ExecutionPlan::new(vec!["step".into()], 0, 0).unwrap();
    let scorer = OracleStepScorer {
        reference: "right".into(),
    };
    let mut rng = StdRng::seed_from_u64(0xAC3);
    let trials = 10_000u32;
    let mut success_rates = Vec::new();
    for n_candidates in [1usize, 2, 4, 8] {
        let mut successes = 0u32;
        for _ in 0..trials {
            let mut candidates = Vec::with_capacity(n_candidates);
            for i in 0..n_candidates {
                let text = if rng.gen_bool(0.5) {
                    "right".to_string()
                } else {
                    format!("wrong-{i}")
                };
                let context = StepContext {
                    task: &task,
                    plan: &plan,
                    prior_steps: &[],
                    candidate: &text,
                };
                let (score, warning) = score_step(&scorer, &context, true).unwrap();
                assert!(warning.is_none());
                candidates.push(Candidate { text, score });
            }
            let selected = select_best_candidate(candidates).unwrap();
            if selected.candidates[selected.chosen].text == "right" {
                successes += 1;
            }
        }
        success_rates.push(successes as f64 / trials as f64);
    }
    // Analytic value at N_e = 4: 1 - 0.5^4 = 0.9375, within +/- 0.01.
    let at_four = success_rates[2];
    assert!(
        (at_four - 0.9375).abs() <= 0.01,
        "success at N_e=4 was {at_four}"
    );
    for window in success_rates.windows(2) {
        assert!(
            window[1] >= window[0],
            "success rates not monotone: {success_rates:?}"
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "criterion 3 took {elapsed:?}");
    println!(
        "ACCEPTANCE 3 (best-of-N analytic, rates {success_rates:?}): PASS ({elapsed:?})"
    );
}

fn thinking_text(tokens: usize, marker: &str) -> String {
    let words: Vec<String> = (0..tokens).map(|i| format!("{marker}{i}")).collect();
    format!("<think>{}</think>verdict", words.join(" "))
}

/// Criterion 4: budget forcing postconditions over scripted
/// thinking-length sequences.
#[test]
fn acceptance_4_budget_forcing() {
    let started = Instant::now();
    let judge_meta = CallMeta::new(AgentRole::Judgment, PromptKind::P4Judgment, 0);
    let trace_config = ScalingConfig {
        max_budget_extensions: 16,
        ..ScalingConfig::minimal()
    };
    let fresh_trace = || {
        PathTrace::new(
            0,
            trace_config.clone(),
            RelevantPlan::new("p", vec!["s".into()]).unwrap(),
        )
    };

    // B = 0 never extends regardless of thinking output.
    for first in [0usize, 5, 500] {
        let backend = ScriptedBackend::from_queue([thinking_text(first, "w")]);
        let mut trace = fresh_trace();
        let result = force_budget(
            &backend,
            &judge_meta,
            &GenerationRequest::new("", "judge"),
            &BudgetPolicy::new(0, 8),
            &mut trace,
        )
        .unwrap();
        assert_eq!(result.extensions_used, 0);
    }

    // Randomized sequences: the loop either meets the budget (and then
    // extensions_used < max_extensions implies tokens >= B) or stops at
    // the cap.
    let mut rng = StdRng::seed_from_u64(0xAC4);
    for _ in 0..200 {
        let budget = rng.gen_range(1..=120usize);
        let max_extensions = rng.gen_range(0..=5usize);
        let responses: Vec<String> = (0..=max_extensions)
            .map(|_| thinking_text(rng.gen_range(0..=60usize), "w"))
            .collect();
        let backend = ScriptedBackend::from_queue(responses);
        let mut trace = fresh_trace();
        let result = force_budget(
            &backend,
            &judge_meta,
            &GenerationRequest::new("", "judge"),
            &BudgetPolicy::new(budget, max_extensions),
            &mut trace,
        )
        .unwrap();
        assert!(result.extensions_used <= max_extensions, "cap violated");
        if result.extensions_used < max_extensions {
            assert!(
                result.thinking_tokens_used >= budget,
                "stopped early at {} / {budget} with {} / {max_extensions} extensions",
                result.thinking_tokens_used,
                result.extensions_used
            );
        }
        // One call record per request issued.
        assert_eq!(trace.backend_calls.len(), result.extensions_used + 1);
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "criterion 4 took {elapsed:?}");
    println!("ACCEPTANCE 4 (budget forcing): PASS ({elapsed:?})");
}

/// Full-matrix DP oracle, independent of the library implementation.
fn edit_distance_oracle(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut table = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in table.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in table[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            table[i][j] = (table[i - 1][j] + 1)
                .min(table[i][j - 1] + 1)
                .min(table[i - 1][j - 1] + cost);
        }
    }
    table[a.len()][b.len()]
}

/// Criterion 5: metric oracles — edit distance equals the brute-force DP
/// on 1,000+ random pairs, the worked metric examples hold to 1e-9, and
/// the judge mapping endpoints hold.
#[test]
fn acceptance_5_metric_oracles() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0xAC5);
    let alphabet = ['a', 'b', 'c', 'd'];
    for _ in 0..1000 {
        let len_a = rng.gen_range(0..=20usize);
        let len_b = rng.gen_range(0..=20usize);
        let a: String = (0..len_a).map(|_| alphabet[rng.gen_range(0..4)]).collect();
        let b: String = (0..len_b).map(|_| alphabet[rng.gen_range(0..4)]).collect();
        assert_eq!(
            levenshtein(&a, &b),
            edit_distance_oracle(&a, &b),
            "distance mismatch for {a:?} vs {b:?}"
        );
    }

    // ANLS worked examples.
    assert!((anls("answer", &["answer".into()], 0.5) - 1.0).abs() < 1e-9);
    assert!((anls("answr", &["answer".into()], 0.5) - (1.0 - 1.0 / 6.0)).abs() < 1e-9);
    assert!((anls("cat", &["dog".into()], 0.5) - 0.0).abs() < 1e-9);
    // Token F1 worked examples.
    assert!((token_f1("the red car", "red car") - 0.8).abs() < 1e-9);
    assert!((token_f1("identical strings", "identical strings") - 1.0).abs() < 1e-9);
    assert!((token_f1("", "x") - 0.0).abs() < 1e-9);
    // Judge mapping endpoints: 1 -> 10 and 10 -> 100.
    let judge = ScriptedJudge::new(vec!["1".into()]);
    assert_eq!(judge_score(&judge, "q", "p", &["r".into()], 10.0).unwrap(), 10.0);
    let judge = ScriptedJudge::new(vec!["10".into()]);
    assert_eq!(judge_score(&judge, "q", "p", &["r".into()], 10.0).unwrap(), 100.0);

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "criterion 5 took {elapsed:?}");
    println!("ACCEPTANCE 5 (metric oracles): PASS ({elapsed:?})");
}

fn zero_wall_keys(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => {
            for (key, child) in map.iter_mut() {
                if key.contains("wall_time") {
                    *child = serde_json::json!(0.0);
                } else {
                    zero_wall_keys(child);
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(zero_wall_keys),
        _ => {}
    }
}

fn normalized_json(bytes: &[u8]) -> serde_json::Value {
    let mut value: serde_json::Value = serde_json::from_slice(bytes).unwrap();
    zero_wall_keys(&mut value);
    value
}

/// Criterion 6: two scripted `mact bench` runs with identical seeds
/// produce byte-identical reports and traces modulo wall-time fields.
#[test]
fn acceptance_6_determinism_replay() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();

    let mut script = Script::default();
    script.push(AgentRole::Planning, 0, 0, relevant_fixture(1));
    script.default_for(AgentRole::Planning, plan_text(&["read", "conclude"]));
    script.default_for(AgentRole::Execution, "value found: 12");
    script.push(AgentRole::Judgment, 0, 0, exe_fail_judgment(1, "recheck the value"));
    script.default_for(AgentRole::Judgment, clean_judgment());
    script.default_for(AgentRole::Answer, "twelve");
    script.default_step_score = Some(0.8);
    script.default_outcome_score = Some(0.7);
    std::fs::write(
        dir.path().join("script.json"),
        serde_json::to_vec_pretty(&script).unwrap(),
    )
    .unwrap();

    std::fs::write(
        dir.path().join("config.json"),
        br#"{"n_plans": 1, "n_exec_candidates": 1, "seed": 7, "temperature": 0.0, "max_corrections": 3}"#,
    )
    .unwrap();
    std::fs::write(
        dir.path().join("bench.json"),
        br#"{"name": "demo", "instances": "instances.jsonl", "metric": "anls"}"#,
    )
    .unwrap();
    let instances = [
        r#"{"task": {"task_id": "a", "question": "How many?"}, "references": ["twelve"]}"#,
        r#"{"task": {"task_id": "b", "question": "How many again?"}, "references": ["eleven"]}"#,
        r#"{"task": {"task_id": "c", "question": "And now?"}, "references": ["twelv"]}"#,
    ];
    std::fs::write(dir.path().join("instances.jsonl"), instances.join("\n")).unwrap();

    let run = |label: &str| {
        let report = dir.path().join(format!("report_{label}.json"));
        let traces = dir.path().join(format!("traces_{label}"));
        let output = std::process::Command::new(env!("CARGO_BIN_EXE_mact"))
            .args([
                "bench",
                "--benchmark",
                dir.path().join("bench.json").to_str().unwrap(),
                "--config",
                dir.path().join("config.json").to_str().unwrap(),
                "--scripted",
                dir.path().join("script.json").to_str().unwrap(),
                "--report",
                report.to_str().unwrap(),
                "--trace-dir",
                traces.to_str().unwrap(),
            ])
            .output()
            .expect("run mact bench");
        assert!(
            output.status.success(),
            "bench run {label} failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        (report, traces)
    };

    let (report_a, traces_a) = run("a");
    let (report_b, traces_b) = run("b");

    let a = normalized_json(&std::fs::read(&report_a).unwrap());
    let b = normalized_json(&std::fs::read(&report_b).unwrap());
    assert_eq!(a, b, "reports diverge beyond wall times");
    // The scripted run scores deterministically: exact match, miss, near
    // miss (1 edit over 6 chars).
    let scores: Vec<f64> = a["instances"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["score"].as_f64().unwrap())
        .collect();
    assert_eq!(scores[0], 1.0);
    assert_eq!(scores[1], 0.0);
    assert!((scores[2] - (1.0 - 1.0 / 6.0)).abs() < 1e-9);

    let mut names: Vec<String> = std::fs::read_dir(&traces_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 3, "one trace per instance path");
    for name in &names {
        let a = normalized_json(&std::fs::read(traces_a.join(name)).unwrap());
        let b = normalized_json(&std::fs::read(traces_b.join(name)).unwrap());
        assert_eq!(a, b, "trace {name} diverges beyond wall times");
        // Each persisted trace re-parses and validates.
        let trace = parse_trace(&std::fs::read(traces_a.join(name)).unwrap()).unwrap();
        trace.validate().unwrap();
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "criterion 6 took {elapsed:?}");
    println!("ACCEPTANCE 6 (determinism/replay): PASS ({elapsed:?})");
}

// --- Criterion 7: trace round-trip property ---

fn arb_label() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 .,:/()\\-]{1,24}"
}

fn arb_any_text() -> impl Strategy<Value = String> {
    // Unrestricted unicode to stress serialization.
    ".{0,24}"
}

fn arb_score() -> impl Strategy<Value = f64> {
    (0u32..=1000).prop_map(|n| n as f64 / 1000.0)
}

fn arb_tool_call() -> impl Strategy<Value = ToolCallRecord> {
    (arb_label(), arb_any_text(), prop::bool::ANY).prop_map(|(tool, output, ok)| ToolCallRecord {
        tool,
        arguments: serde_json::Map::new(),
        output,
        status: if ok { ToolStatus::Ok } else { ToolStatus::ToolError },
    })
}

fn arb_record(step_index: usize, n_candidates: usize) -> impl Strategy<Value = StepRecord> {
    (
        prop::collection::vec((arb_any_text(), arb_score()), n_candidates),
        prop::collection::vec(arb_tool_call(), 0..2),
    )
        .prop_map(move |(raw, tool_calls)| {
            let candidates: Vec<Candidate> = raw
                .into_iter()
                .map(|(text, score)| Candidate { text, score })
                .collect();
            let selected = select_best_candidate(candidates).unwrap();
            StepRecord {
                step_index,
                chosen_text: selected.candidates[selected.chosen].text.clone(),
                tool_calls,
                candidates: selected.candidates,
                chosen_candidate: selected.chosen,
            }
        })
}

fn arb_judgment() -> impl Strategy<Value = Judgment> {
    (
        0u8..3,
        prop::collection::vec((arb_label(), prop::option::of(1usize..4)), 1..3),
        0usize..200,
        0usize..4,
    )
        .prop_map(|(verdict, raw_mistakes, thinking, extensions)| {
            let (flag_plan, flag_exe) = match verdict {
                0 => (false, false),
                1 => (true, false),
                _ => (false, true),
            };
            let stage = if flag_plan {
                MistakeStage::Plan
            } else {
                MistakeStage::Execution
            };
            let mistakes: Vec<Mistake> = if flag_plan || flag_exe {
                raw_mistakes
                    .into_iter()
                    .map(|(description, step)| {
                        Mistake::new(
                            stage,
                            step.map(StepScope::Step).unwrap_or(StepScope::Whole),
                            description,
                        )
                    })
                    .collect()
            } else {
                Vec::new()
            };
            let mut judgment = Judgment::new(flag_plan, flag_exe, mistakes).unwrap();
            judgment.thinking_tokens_used = thinking;
            judgment.extensions_used = extensions;
            judgment
        })
}

fn arb_call(path_index: usize) -> impl Strategy<Value = mact::core::CallRecord> {
    (
        0u8..5,
        arb_any_text(),
        arb_any_text(),
        (0usize..500, 0usize..500, 0usize..200),
        prop::option::of(1usize..5),
        prop::option::of(0usize..4),
        1u32..3,
        prop::bool::ANY,
        0u32..1_000_000,
    )
        .prop_map(
            move |(kind, request_text, response_text, counts, step, candidate, attempts, reask, wall)| {
                let (prompt_kind, agent_role) = match kind {
                    0 => (PromptKind::P1RelevantPlans, AgentRole::Planning),
                    1 => (PromptKind::P2ExecutionPlan, AgentRole::Planning),
                    2 => (PromptKind::P3StepExecution, AgentRole::Execution),
                    3 => (PromptKind::P4Judgment, AgentRole::Judgment),
                    _ => (PromptKind::P5Answer, AgentRole::Answer),
                };
                mact::core::CallRecord {
                    prompt_kind,
                    agent_role,
                    path_index,
                    step_index: step,
                    candidate,
                    request_text,
                    response_text,
                    token_counts: TokenCounts {
                        prompt: counts.0,
                        completion: counts.1,
                        thinking: counts.2,
                    },
                    wall_time: wall as f64 / 1000.0,
                    attempts,
                    reask,
                }
            },
        )
}

fn arb_rewards() -> impl Strategy<Value = RewardBreakdown> {
    (
        0u32..=100,
        prop::collection::vec(arb_score(), 1..3),
        prop::collection::vec(arb_score(), 1..5),
        prop::collection::vec(arb_score(), 1..3),
        arb_score(),
        arb_score(),
    )
        .prop_map(|(alpha_pct, planning, execution, judgment, answer, global)| {
            let alpha = alpha_pct as f64 / 100.0;
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let mix = |specific: f64| alpha * specific + (1.0 - alpha) * global;
            RewardBreakdown {
                alpha,
                mixed: MixedRewards {
                    planning: mix(mean(&planning)),
                    execution: mix(mean(&execution)),
                    judgment: mix(mean(&judgment)),
                    answer: mix(answer),
                },
                planning,
                execution,
                judgment,
                answer,
                global,
            }
        })
}

prop_compose! {
    fn arb_trace()(
        path_index in 0usize..4,
        n_candidates in 1usize..4,
        sample_problem in arb_label(),
        sample_steps in prop::collection::vec(arb_label(), 1..4),
        plan_steps in prop::collection::vec(prop::collection::vec(arb_label(), 1..4), 1..3),
        corrections in 0usize..3,
    )(
        processes in {
            let plans: Vec<usize> = plan_steps.iter().map(|p| p.len()).collect();
            prop::collection::vec(0usize..plans.len(), 1..4).prop_flat_map(move |plan_picks| {
                let plans = plans.clone();
                plan_picks
                    .into_iter()
                    .enumerate()
                    .map(|(revision, plan_revision)| {
                        let steps = plans[plan_revision];
                        (1..=steps)
                            .map(|s| arb_record(s, n_candidates))
                            .collect::<Vec<_>>()
                            .prop_map(move |records| ExecutionProcess {
                                records,
                                revision,
                                plan_revision,
                            })
                    })
                    .collect::<Vec<_>>()
            })
        },
        judgments in prop::collection::vec(arb_judgment(), 0..4),
        calls in prop::collection::vec(arb_call(path_index), 0..6),
        rewards in prop::option::of(arb_rewards()),
        answer_text in prop::option::of(arb_label()),
        warnings in prop::collection::vec(arb_any_text(), 0..3),
        errored in prop::bool::ANY,
        path_index in Just(path_index),
        sample_problem in Just(sample_problem),
        sample_steps in Just(sample_steps),
        plan_steps in Just(plan_steps),
        corrections in Just(corrections),
    ) -> PathTrace {
        let mut trace = PathTrace::new(
            path_index,
            ScalingConfig {
                n_exec_candidates: 1,
                ..ScalingConfig::minimal()
            },
            RelevantPlan::new(sample_problem, sample_steps).unwrap(),
        );
        for (revision, steps) in plan_steps.into_iter().enumerate() {
            trace
                .plan_history
                .push(ExecutionPlan::new(steps, path_index, revision).unwrap());
        }
        trace.process_history = processes;
        trace.judgments = judgments;
        trace.corrections_used = corrections;
        trace.backend_calls = calls;
        trace.rewards = rewards;
        trace.answer = answer_text.map(|text| Answer { text, path_index });
        trace.warnings = warnings;
        if errored {
            trace.error = Some(PathFailure {
                phase: "execution".into(),
                message: "injected".into(),
            });
        }
        trace
    }
}

/// Criterion 7: serialize/parse round-trip with deep structural equality
/// over generated traces.
#[test]
fn acceptance_7_trace_round_trip() {
    let started = Instant::now();
    let cases = 600u32;
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig {
        cases,
        ..ProptestConfig::default()
    });
    runner
        .run(&arb_trace(), |trace| {
            let bytes = serialize_trace(&trace).unwrap();
            let parsed = parse_trace(&bytes).unwrap();
            prop_assert_eq!(parsed, trace);
            Ok(())
        })
        .unwrap();
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "criterion 7 took {elapsed:?}");
    println!("ACCEPTANCE 7 (trace round-trip, {cases} cases): PASS ({elapsed:?})");
}

/// Criterion 8 (optional): one trivial task through a live endpoint,
/// gated on MACT_API_KEY. Checks the trace is well-formed; no score
/// assertion.
#[test]
fn acceptance_8_live_smoke() {
    let Ok(key) = std::env::var("MACT_API_KEY") else {
        println!("ACCEPTANCE 8 (live smoke): SKIP (MACT_API_KEY not set)");
        return;
    };
    if key.is_empty() {
        println!("ACCEPTANCE 8 (live smoke): SKIP (MACT_API_KEY empty)");
        return;
    }
    let endpoint = std::env::var("MACT_API_BASE")
        .expect("MACT_API_BASE must point at a chat-completions URL for the live smoke test");
    let model = std::env::var("MACT_MODEL").expect("MACT_MODEL must name the model to use");

    let backend_config = mact::backends::HttpBackendConfig {
        endpoint,
        model,
        ..Default::default()
    };
    let run_config = mact::orchestrator::RunConfig {
        n_plans: 1,
        n_exec_candidates: 1,
        judge_token_budget: 0,
        max_corrections: 1,
        temperature: 0.0,
        backends: Some(mact::orchestrator::RoleBackends {
            planning: backend_config.clone(),
            execution: backend_config.clone(),
            judgment: backend_config.clone(),
            answer: backend_config,
        }),
        ..Default::default()
    };
    let runtime = mact::orchestrator::Runtime::new(run_config, mact::orchestrator::BackendMode::Live)
        .unwrap();
    let task = Task::new("smoke", "What is 2 + 2? Reply with just the number.");
    let result = runtime.run_task(&task).expect("live smoke run");
    assert!(!result.answer.text.trim().is_empty());
    for trace in &result.paths {
        trace.validate().unwrap();
    }
    println!("ACCEPTANCE 8 (live smoke): PASS (answer {:?})", result.answer.text);
}
