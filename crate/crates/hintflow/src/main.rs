use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hintflow::config::{Preset, RunConfig};
use hintflow::harness;
use hintflow::schedules::{DecayKind, DecaySchedule};

#[derive(Parser)]
#[command(name = "hintflow", version, about = "Hint-guided GRPO training and multilingual evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy on the arena and write a run directory.
    Train {
        /// JSON run configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Baseline preset applied on top of the configuration.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Overrides the configured RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint with hints off and print the metrics report.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed for the held-out task stream (defaults to the config seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute corpus metrics over a JSONL file of responses.
    EvalFile {
        corpus: PathBuf,
        /// Write per-record verdicts (r_lc, r_format, r_acc, extracted) here.
        #[arg(long)]
        per_record: Option<PathBuf>,
        /// Skip malformed lines instead of aborting.
        #[arg(long)]
        skip_bad: bool,
    },
    /// Print a schedule's hint ratios as CSV.
    SchedulePreview {
        #[arg(long, value_enum)]
        kind: PreviewKind,
        #[arg(long)]
        horizon: u64,
        /// Rate constant for exponential decay.
        #[arg(long, default_value_t = 6.0)]
        lambda: f64,
        /// Number of steps to tabulate (emits steps+1 rows).
        #[arg(long)]
        steps: u64,
    },
    /// Export run-log fields as CSV.
    ExportCsv {
        #[arg(long)]
        run: PathBuf,
        /// Comma-separated field names; group-keyed fields expand per group.
        #[arg(long)]
        fields: String,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum PreviewKind {
    Cosine,
    Linear,
    Exponential,
}

impl From<PreviewKind> for DecayKind {
    fn from(k: PreviewKind) -> Self {
        match k {
            PreviewKind::Cosine => DecayKind::Cosine,
            PreviewKind::Linear => DecayKind::Linear,
            PreviewKind::Exponential => DecayKind::Exponential,
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> hintflow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train { config, preset, seed, out } => {
            let mut config = match config {
                Some(path) => RunConfig::load(&path)?,
                None => RunConfig::default(),
            };
            if let Some(preset) = preset {
                preset.apply(&mut config);
                if out.is_none() && config.out_dir == RunConfig::default().out_dir {
                    config.out_dir = PathBuf::from(format!("runs/{}", preset.name()));
                }
            }
            if let Some(seed) = seed {
                config.hyper.seed = seed;
            }
            if let Some(out) = out {
                config.out_dir = out;
            }
            let threads = harness::threads_from_env();
            let summary = harness::train(&config, threads)?;
            let last_eval = serde_json::to_string(&summary.final_eval.overall.rounded())
                .expect("report serializes");
            println!("run written to {}", summary.run_dir.display());
            println!("final eval: {last_eval}");
            Ok(())
        }
        Command::Eval { checkpoint, config, seed } => {
            let config = match config {
                Some(path) => RunConfig::load(&path)?,
                None => RunConfig::default(),
            };
            let seed = seed.unwrap_or(config.hyper.seed);
            let report = harness::evaluate(&checkpoint, &config, seed)?;
            let rounded = hintflow::harness::EvalReport {
                overall: report.overall.rounded(),
                by_group: report
                    .by_group
                    .into_iter()
                    .map(|(g, m)| (g, m.rounded()))
                    .collect(),
                by_language: report
                    .by_language
                    .into_iter()
                    .map(|(l, m)| (l, m.rounded()))
                    .collect(),
            };
            println!("{}", serde_json::to_string(&rounded).expect("report serializes"));
            Ok(())
        }
        Command::EvalFile { corpus, per_record, skip_bad } => {
            let outcome = harness::eval_file(&corpus, per_record.as_deref(), skip_bad)?;
            if outcome.skipped > 0 {
                eprintln!("skipped {} malformed line(s)", outcome.skipped);
            }
            println!("{}", serde_json::to_string(&outcome.report).expect("report serializes"));
            Ok(())
        }
        Command::SchedulePreview { kind, horizon, lambda, steps } => {
            let schedule = DecaySchedule::new(kind.into(), horizon, lambda)?;
            print!("{}", harness::schedule_preview(&schedule, steps));
            Ok(())
        }
        Command::ExportCsv { run, fields } => {
            let fields: Vec<String> =
                fields.split(',').map(|f| f.trim().to_string()).filter(|f| !f.is_empty()).collect();
            print!("{}", harness::export_csv(&run, &fields)?);
            Ok(())
        }
    }
}
