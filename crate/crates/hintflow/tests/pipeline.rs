//! End-to-end file-based pipeline: config file -> short training run ->
//! checkpoint evaluation -> CSV export -> corpus evaluation. Mirrors the CLI
//! workflows against real files.

use std::fs;

use hintflow::config::{Preset, RunConfig};
use hintflow::harness::{eval_file, evaluate, export_csv, schedule_preview, train};
use hintflow::schedules::DecaySchedule;

#[test]
fn config_train_eval_export_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");

    let config_path = dir.path().join("config.json");
    fs::write(
        &config_path,
        format!(
            r#"{{
                "steps": 8,
                "batch_tasks": 8,
                "minibatch": 2,
                "eval_every": 4,
                "eval_tasks": 48,
                "hyper": {{ "group_size": 4, "seed": 99 }},
                "out_dir": {:?}
            }}"#,
            out_dir.to_str().unwrap()
        ),
    )
    .unwrap();

    let mut config = RunConfig::load(&config_path).unwrap();
    Preset::Lang.apply(&mut config);
    let summary = train(&config, 0).unwrap();
    assert_eq!(summary.entries.len(), 8);

    // evaluating the written checkpoint reproduces the recorded final eval
    let report = evaluate(&out_dir.join("checkpoint.bin"), &config, 99).unwrap();
    assert_eq!(report.overall, summary.final_eval.overall);
    assert_eq!(report.by_group, summary.final_eval.by_group);

    // the log round-trips through CSV export with group expansion
    let fields: Vec<String> = ["step", "mean_reward", "u", "ema", "effective_ratio", "lcr"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let csv = export_csv(&out_dir, &fields).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 9);
    assert_eq!(
        lines[0],
        "step,mean_reward,u_high,u_mid,u_low,ema_high,ema_mid,ema_low,\
         effective_ratio_high,effective_ratio_mid,effective_ratio_low,lcr"
    );
    // eval columns are empty off the eval cadence
    let row1: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(row1[0], "1");
    assert_eq!(row1[11], "");
    let row0: Vec<&str> = lines[1].split(',').collect();
    assert!(!row0[11].is_empty());

    // manifest carries the resolved config and final eval
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 99);
    assert_eq!(manifest["steps"], 8);
    assert!(manifest["final_eval"]["overall"]["lc_acc"].is_number());
}

#[test]
fn corpus_evaluation_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    let lines = [
        r#"{"question":"q1","lang":"ko","response":"<think>답은 아홉입니다 계산을 전부 끝냈습니다</think> \\boxed{9}","gold":"9","tier":"low"}"#,
        r#"{"question":"q2","lang":"ko","response":"<think>the reasoning drifted into english here</think> \\boxed{7}","gold":"7","tier":"medium"}"#,
        r#"{"question":"q3","lang":"en","response":"<think>the product is the same as the sum here</think> \\boxed{0.5}","gold":"1/2","tier":"high"}"#,
        r#"{"question":"q4","lang":"en","response":"<think>this one is off by one for the count</think> \\boxed{5}","gold":"6","tier":"top"}"#,
    ];
    fs::write(&corpus, lines.join("\n")).unwrap();

    let out = dir.path().join("verdicts.jsonl");
    let result = eval_file(&corpus, Some(&out), false).unwrap();
    assert_eq!(result.skipped, 0);
    assert_eq!(result.report.count, 4);
    // hand counts: lc = {1,0,1,1}, acc = {1,1,1,0}, lc&acc = {1,0,1,0}
    assert_eq!(result.report.lcr, 0.75);
    assert_eq!(result.report.acc, 0.75);
    assert_eq!(result.report.lc_acc, 0.5);
    // tier accuracies low/medium/high/top = 1,1,1,0 -> (1+2+4)/15
    assert_eq!(result.report.dw_acc, Some(0.466667));

    let verdicts: Vec<serde_json::Value> = fs::read_to_string(&out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(verdicts[0]["r_lc"], 1);
    assert_eq!(verdicts[1]["r_lc"], 0);
    assert_eq!(verdicts[1]["r_acc"], 1);
    assert_eq!(verdicts[3]["extracted"], "5");
}

#[test]
fn schedule_preview_matches_schedule() {
    let schedule = DecaySchedule::exponential(50, 6.0).unwrap();
    let csv = schedule_preview(&schedule, 100);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 102);
    for (t, line) in lines[1..].iter().enumerate() {
        let mut parts = line.split(',');
        assert_eq!(parts.next().unwrap(), t.to_string());
        let p: f64 = parts.next().unwrap().parse().unwrap();
        let expected = schedule.hint_ratio(t as u64);
        assert!((p - expected).abs() <= expected.abs() * 1e-11 + 1e-12);
    }
}
