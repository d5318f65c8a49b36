//! Training-loop orchestration, run logging, checkpointing, evaluation
//! commands, and CSV export.
//!
//! One step = one rollout batch under the frozen step-start policy, followed
//! by the configured number of minibatch ascent updates. Per-group switch
//! states update after the batch's rollouts, so a switch takes effect at the
//! next step. All randomness flows through keyed RNG streams, making
//! single-threaded and multi-threaded runs produce identical numbers.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arena::{
    make_batch_tasks, make_eval_tasks, rollout, score_outcome, stream_rng, ArenaSpec, Task,
};
use crate::checkpoint;
use crate::config::RunConfig;
use crate::detect::ScriptDetector;
use crate::error::{Error, Result};
use crate::grpo::{
    entropy_of_outcome, outcome_token_count, sgd_step, surrogate_gradient, RolloutGroup,
};
use crate::lang::{GroupId, LanguageGroups};
use crate::metrics::{evaluate_records, judge_record, repeat_score_tokens, EvalRecord, MetricsRecord};
use crate::policy::PolicyParams;
use crate::rewards::RewardBreakdown;
use crate::schedules::{build_hinted_prompt, hint_prefix_len};
use crate::switch::{effective_ratio, effective_update_rate, SwitchState};

const EVAL_ROLLOUT_TAG: u64 = 0x6576_726f; // distinct stream family for eval rollouts

/// Per-step evaluation block (no-hint, held-out tasks).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalBlock {
    pub lcr: f64,
    pub acc: f64,
    pub lc_acc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dw_acc: Option<f64>,
}

/// One line of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLogEntry {
    pub step: u64,
    pub mean_reward: f64,
    pub mean_reward_by_group: BTreeMap<GroupId, Option<f64>>,
    pub u_by_group: BTreeMap<GroupId, Option<f64>>,
    pub ema_by_group: BTreeMap<GroupId, f64>,
    pub effective_ratio_by_group: BTreeMap<GroupId, f64>,
    pub switched_by_group: BTreeMap<GroupId, bool>,
    pub entropy: f64,
    pub mean_len: f64,
    pub repeat: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval: Option<EvalBlock>,
}

/// Evaluation metrics, overall and broken down by group and language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub overall: MetricsRecord,
    pub by_group: BTreeMap<GroupId, MetricsRecord>,
    pub by_language: BTreeMap<String, MetricsRecord>,
}

/// Run manifest written next to the log and checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub steps: u64,
    pub wall_time_secs: f64,
    pub switch_steps: BTreeMap<GroupId, Option<u64>>,
    pub final_eval: EvalReport,
    pub config: RunConfig,
}

/// In-memory results of a completed run.
pub struct RunSummary {
    pub run_dir: PathBuf,
    pub entries: Vec<RunLogEntry>,
    pub switch_steps: BTreeMap<GroupId, Option<u64>>,
    pub final_eval: EvalReport,
    pub final_policy: PolicyParams,
}

/// Worker-count policy: `HINTFLOW_THREADS` caps rollout fan-out; 0 or unset
/// means fully sequential.
pub fn threads_from_env() -> usize {
    std::env::var("HINTFLOW_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0)
}

/// Trains a fresh policy per the configuration and writes the run directory:
/// `config.json`, `run.jsonl`, `checkpoint.bin` (+ manifest), `manifest.json`.
pub fn train(config: &RunConfig, threads: usize) -> Result<RunSummary> {
    config.validate()?;
    let start = Instant::now();
    let groups = config.language_groups()?;
    let spec = &config.arena;
    let seed = config.hyper.seed;

    fs::create_dir_all(&config.out_dir)?;
    let log_path = config.out_dir.join("run.jsonl");
    let mut log = BufWriter::new(fs::File::create(&log_path)?);
    fs::write(
        config.out_dir.join("config.json"),
        serde_json::to_string_pretty(config).expect("config serializes") + "\n",
    )?;

    let pool = if threads > 0 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?,
        )
    } else {
        None
    };

    let mut policy = PolicyParams::init(spec);
    let mut states: BTreeMap<GroupId, SwitchState> =
        GroupId::ALL.iter().map(|&g| (g, SwitchState::new())).collect();
    let eval_tasks = make_eval_tasks(spec, config.eval_tasks, seed)?;
    let mut entries = Vec::with_capacity(config.steps as usize);

    for step in 0..config.steps {
        let tasks = make_batch_tasks(spec, config.batch_tasks, seed, step)?;

        // a criterion already met by the current EMA switches the group
        // before hint construction; with tau = 0 this zeroes hints at step 0
        for state in states.values_mut() {
            state.check_switch(step, config.hyper.tau);
        }

        // hint ratio per group, frozen before this step's switch updates
        let mut ratio_by_group: BTreeMap<GroupId, f64> = BTreeMap::new();
        for &g in &GroupId::ALL {
            let from_switch = effective_ratio(&config.schedule, step, &states[&g]);
            let ratio = match config.fixed_hint_ratio {
                Some(r) if !states[&g].switched => r,
                _ => from_switch,
            };
            ratio_by_group.insert(g, ratio);
        }

        let sample_one = |task: &Task| -> Result<(GroupId, RolloutGroup)> {
            let lang_id = &spec.languages[task.language].id;
            let group_id = groups.classify(lang_id)?;
            let ratio = ratio_by_group[&group_id];
            let k = hint_prefix_len(ratio, task.trace_len())?;
            // prompt assembly is exercised even though the factored process
            // consumes (task, k) directly
            let _prompt = build_hinted_prompt(&task.question_tokens, lang_id, &task.teacher, k)?;
            let group = RolloutGroup::sample(
                &policy,
                spec,
                task,
                k,
                config.hyper.group_size,
                seed,
                step,
            )?;
            Ok((group_id, group))
        };

        let sampled: Result<Vec<(GroupId, RolloutGroup)>> = match &pool {
            Some(pool) => pool.install(|| tasks.par_iter().map(sample_one).collect()),
            None => tasks.iter().map(sample_one).collect(),
        };
        let sampled = sampled?;

        // per-group effective-update accounting (after rollouts, before the
        // next step's hint construction)
        let mut adv_by_group: BTreeMap<GroupId, Vec<Vec<f64>>> = BTreeMap::new();
        let mut reward_by_group: BTreeMap<GroupId, Vec<f64>> = BTreeMap::new();
        for (g, group) in &sampled {
            adv_by_group.entry(*g).or_default().push(group.advantages.clone());
            reward_by_group.entry(*g).or_default().push(group.mean_reward());
        }
        let mut u_by_group: BTreeMap<GroupId, Option<f64>> = BTreeMap::new();
        for &g in &GroupId::ALL {
            match adv_by_group.get(&g) {
                Some(instances) => {
                    let u = effective_update_rate(instances)?;
                    let state = states.get_mut(&g).expect("all groups present");
                    state.ema_update(u, config.hyper.alpha)?;
                    state.check_switch(step, config.hyper.tau);
                    u_by_group.insert(g, Some(u));
                }
                None => {
                    u_by_group.insert(g, None);
                }
            }
        }

        // minibatch clipped-surrogate ascent over contiguous group chunks
        let chunk_len = config.batch_tasks / config.minibatch;
        for chunk in sampled.chunks(chunk_len) {
            let mut grad = policy.zeros_like();
            for (_, group) in chunk {
                let g = surrogate_gradient(&policy, spec, group, config.hyper.clip_eps)?;
                grad.add_scaled(&g, 1.0 / chunk.len() as f64)?;
            }
            if let Err(e) = sgd_step(&mut policy, &grad, config.hyper.lr) {
                let diag = serde_json::json!({ "step": step, "diagnostic": e.to_string() });
                writeln!(log, "{diag}")?;
                log.flush()?;
                return Err(e);
            }
        }

        // step statistics
        let all_outcomes: Vec<&crate::arena::Outcome> =
            sampled.iter().flat_map(|(_, g)| g.outcomes.iter()).collect();
        let n_outcomes = all_outcomes.len() as f64;
        let mean_reward = sampled
            .iter()
            .flat_map(|(_, g)| g.rewards.iter())
            .sum::<f64>()
            / n_outcomes;
        let entropy =
            all_outcomes.iter().map(|o| entropy_of_outcome(o)).sum::<f64>() / n_outcomes;
        let repeat = all_outcomes
            .iter()
            .map(|o| repeat_score_tokens(&o.content_tokens, 1, 1.0))
            .sum::<f64>()
            / n_outcomes;
        let mean_len =
            all_outcomes.iter().map(|o| o.token_len() as f64).sum::<f64>() / n_outcomes;

        let eval = if step % config.eval_every == 0 {
            let report = evaluate_policy(&policy, spec, &groups, &eval_tasks, seed, &pool)?;
            Some(EvalBlock {
                lcr: report.overall.lcr,
                acc: report.overall.acc,
                lc_acc: report.overall.lc_acc,
                dw_acc: report.overall.dw_acc,
            })
        } else {
            None
        };

        let entry = RunLogEntry {
            step,
            mean_reward,
            mean_reward_by_group: GroupId::ALL
                .iter()
                .map(|&g| {
                    let m = reward_by_group
                        .get(&g)
                        .map(|v| v.iter().sum::<f64>() / v.len() as f64);
                    (g, m)
                })
                .collect(),
            u_by_group,
            ema_by_group: GroupId::ALL.iter().map(|&g| (g, states[&g].ema)).collect(),
            effective_ratio_by_group: ratio_by_group.clone(),
            switched_by_group: GroupId::ALL
                .iter()
                .map(|&g| (g, states[&g].switched))
                .collect(),
            entropy,
            mean_len,
            repeat,
            eval,
        };
        writeln!(log, "{}", serde_json::to_string(&entry).expect("entry serializes"))?;
        entries.push(entry);
    }
    log.flush()?;

    let final_eval = evaluate_policy(&policy, spec, &groups, &eval_tasks, seed, &pool)?;
    let switch_steps: BTreeMap<GroupId, Option<u64>> =
        GroupId::ALL.iter().map(|&g| (g, states[&g].switch_step)).collect();

    checkpoint::save(&policy, &config.out_dir.join("checkpoint.bin"))?;
    let manifest = RunManifest {
        seed,
        steps: config.steps,
        wall_time_secs: start.elapsed().as_secs_f64(),
        switch_steps: switch_steps.clone(),
        final_eval: final_eval.clone(),
        config: config.clone(),
    };
    fs::write(
        config.out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
    )?;

    Ok(RunSummary {
        run_dir: config.out_dir.clone(),
        entries,
        switch_steps,
        final_eval,
        final_policy: policy,
    })
}

/// Evaluates a policy with hints forced off: one sampled rollout per held-out
/// task at a fixed seed stream.
pub fn evaluate_policy(
    policy: &PolicyParams,
    spec: &ArenaSpec,
    groups: &LanguageGroups,
    eval_tasks: &[Task],
    seed: u64,
    pool: &Option<rayon::ThreadPool>,
) -> Result<EvalReport> {
    if eval_tasks.is_empty() {
        return Err(Error::domain("evaluation needs at least one task"));
    }
    let eval_one = |task: &Task| -> (usize, usize, RewardBreakdown, f64) {
        let mut rng = stream_rng(seed, EVAL_ROLLOUT_TAG, task.id, 0);
        let outcome = rollout(policy, spec, task, 0, &mut rng);
        let b = score_outcome(&outcome, task);
        let rep = repeat_score_tokens(&outcome.content_tokens, 1, 1.0);
        (task.language, task.tier, b, rep)
    };
    let scored: Vec<(usize, usize, RewardBreakdown, f64)> = match pool {
        Some(pool) => pool.install(|| eval_tasks.par_iter().map(eval_one).collect()),
        None => eval_tasks.iter().map(eval_one).collect(),
    };

    let metrics_of = |subset: &[&(usize, usize, RewardBreakdown, f64)]| -> Result<MetricsRecord> {
        let count = subset.len();
        let n = count as f64;
        let lcr = subset.iter().filter(|(_, _, b, _)| b.r_lc).count() as f64 / n;
        let acc = subset.iter().filter(|(_, _, b, _)| b.r_acc).count() as f64 / n;
        let lc_acc =
            subset.iter().filter(|(_, _, b, _)| b.r_lc && b.r_acc).count() as f64 / n;
        let mut tier_total = vec![0usize; spec.tiers()];
        let mut tier_correct = vec![0usize; spec.tiers()];
        for (_, tier, b, _) in subset {
            tier_total[*tier] += 1;
            tier_correct[*tier] += b.r_acc as usize;
        }
        let dw_acc = if spec.tiers() == 4 && tier_total.iter().all(|&t| t > 0) {
            let accs = [0, 1, 2, 3].map(|i| tier_correct[i] as f64 / tier_total[i] as f64);
            Some(crate::metrics::dw_acc(accs)?)
        } else {
            None
        };
        let repeat = subset.iter().map(|(_, _, _, r)| r).sum::<f64>() / n;
        Ok(MetricsRecord {
            lcr,
            acc,
            lc_acc,
            dw_acc,
            repeat,
            mean_len: outcome_token_count(spec) as f64,
            count,
        })
    };

    let all: Vec<&(usize, usize, RewardBreakdown, f64)> = scored.iter().collect();
    let overall = metrics_of(&all)?;

    let mut by_group = BTreeMap::new();
    for &g in &GroupId::ALL {
        let subset: Vec<&(usize, usize, RewardBreakdown, f64)> = scored
            .iter()
            .filter(|(lang, _, _, _)| {
                groups.classify(&spec.languages[*lang].id).map(|x| x == g).unwrap_or(false)
            })
            .collect();
        if !subset.is_empty() {
            by_group.insert(g, metrics_of(&subset)?);
        }
    }

    let mut by_language = BTreeMap::new();
    for (idx, lang) in spec.languages.iter().enumerate() {
        let subset: Vec<&(usize, usize, RewardBreakdown, f64)> =
            scored.iter().filter(|(l, _, _, _)| *l == idx).collect();
        if !subset.is_empty() {
            by_language.insert(lang.id.to_string(), metrics_of(&subset)?);
        }
    }

    Ok(EvalReport { overall, by_group, by_language })
}

/// Loads a checkpoint and evaluates it under a config's arena.
pub fn evaluate(checkpoint_path: &Path, config: &RunConfig, seed: u64) -> Result<EvalReport> {
    config.validate()?;
    let policy = checkpoint::load(checkpoint_path, &config.arena)?;
    let groups = config.language_groups()?;
    let eval_tasks = make_eval_tasks(&config.arena, config.eval_tasks, seed)?;
    evaluate_policy(&policy, &config.arena, &groups, &eval_tasks, seed, &None)
}

/// Outcome of evaluating a JSONL corpus file.
pub struct FileEvalOutcome {
    pub report: MetricsRecord,
    pub skipped: usize,
}

/// Evaluates a JSONL corpus. Strict mode fails on the first malformed line;
/// lenient mode counts and skips. Optionally writes per-record verdicts.
pub fn eval_file(
    corpus_path: &Path,
    per_record: Option<&Path>,
    skip_bad: bool,
) -> Result<FileEvalOutcome> {
    let file = fs::File::open(corpus_path)
        .map_err(|e| Error::Config(format!("cannot open corpus `{}`: {e}", corpus_path.display())))?;
    let reader = std::io::BufReader::new(file);
    let detector = ScriptDetector::new();

    let mut records: Vec<EvalRecord> = Vec::new();
    let mut skipped = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: std::result::Result<EvalRecord, _> = serde_json::from_str(&line);
        let record = match parsed {
            Ok(r) => match r.validate() {
                Ok(()) => r,
                Err(e) => {
                    if skip_bad {
                        skipped += 1;
                        continue;
                    }
                    return Err(Error::Parse(format!("line {}: {e}", lineno + 1)));
                }
            },
            Err(e) => {
                if skip_bad {
                    skipped += 1;
                    continue;
                }
                return Err(Error::Parse(format!("line {}: {e}", lineno + 1)));
            }
        };
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::domain(format!(
            "corpus `{}` contains no valid records",
            corpus_path.display()
        )));
    }

    if let Some(out) = per_record {
        let mut writer = BufWriter::new(fs::File::create(out)?);
        for record in &records {
            let verdict = judge_record(record, &detector);
            let mut value =
                serde_json::to_value(record).expect("record serializes");
            let extra = serde_json::to_value(&verdict).expect("verdict serializes");
            value
                .as_object_mut()
                .expect("record is an object")
                .extend(extra.as_object().expect("verdict is an object").clone());
            writeln!(writer, "{value}")?;
        }
        writer.flush()?;
    }

    let report = evaluate_records(&records, &detector)?.rounded();
    Ok(FileEvalOutcome { report, skipped })
}

/// Formats a float with 12 significant digits.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{:.11e}", x)
    }
}

/// CSV preview of a schedule: header `t,p` plus steps+1 rows.
pub fn schedule_preview(schedule: &crate::schedules::DecaySchedule, steps: u64) -> String {
    let mut out = String::from("t,p\n");
    for t in 0..=steps {
        out.push_str(&format!("{t},{}\n", format_sig12(schedule.hint_ratio(t))));
    }
    out
}

const SCALAR_FIELDS: [&str; 5] = ["step", "mean_reward", "entropy", "mean_len", "repeat"];
const GROUP_FIELDS: [(&str, &str); 5] = [
    ("u", "u_by_group"),
    ("ema", "ema_by_group"),
    ("effective_ratio", "effective_ratio_by_group"),
    ("switched", "switched_by_group"),
    ("group_reward", "mean_reward_by_group"),
];
const EVAL_FIELDS: [&str; 4] = ["lcr", "acc", "lc_acc", "dw_acc"];

/// Exports selected run-log fields as CSV. Group-keyed fields expand into one
/// column per resource group.
pub fn export_csv(run_dir: &Path, fields: &[String]) -> Result<String> {
    let log_path = run_dir.join("run.jsonl");
    let text = fs::read_to_string(&log_path)
        .map_err(|e| Error::Config(format!("cannot read `{}`: {e}", log_path.display())))?;
    let rows: Vec<serde_json::Value> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::Parse(format!("run log: {e}"))))
        .collect::<Result<_>>()?;

    let mut header: Vec<String> = Vec::new();
    for field in fields {
        if SCALAR_FIELDS.contains(&field.as_str()) {
            header.push(field.clone());
        } else if GROUP_FIELDS.iter().any(|(short, _)| short == field) {
            for g in GroupId::ALL {
                header.push(format!("{field}_{g}"));
            }
        } else if EVAL_FIELDS.contains(&field.as_str()) {
            header.push(field.clone());
        } else {
            return Err(Error::Config(format!("unknown export field `{field}`")));
        }
    }

    let cell = |value: &serde_json::Value| -> String {
        match value {
            serde_json::Value::Null => String::new(),
            serde_json::Value::Bool(b) => b.to_string(),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    i.to_string()
                } else {
                    format_sig12(n.as_f64().unwrap_or(f64::NAN))
                }
            }
            other => other.to_string(),
        }
    };

    let mut out = header.join(",") + "\n";
    for row in &rows {
        let mut cells: Vec<String> = Vec::with_capacity(header.len());
        for field in fields {
            if SCALAR_FIELDS.contains(&field.as_str()) {
                cells.push(cell(&row[field.as_str()]));
            } else if let Some((_, key)) =
                GROUP_FIELDS.iter().find(|(short, _)| short == field)
            {
                for g in GroupId::ALL {
                    cells.push(cell(&row[*key][g.as_str()]));
                }
            } else {
                let block = &row["eval"];
                if block.is_null() {
                    cells.push(String::new());
                } else {
                    cells.push(cell(&block[field.as_str()]));
                }
            }
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}
