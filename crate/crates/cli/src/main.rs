//! Command-line driver: one subcommand per pipeline stage, plus `pipeline`
//! for the whole run and `query` over a finished knowledge base.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use cskb::pipeline::{
    query_kb, run_pipeline, run_stage, PipelineConfig, Stage, StageReport,
};
use cskb::rank::RankKey;

#[derive(Parser)]
#[command(name = "cskb", version, about = "Commonsense knowledge acquisition pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StageArgs {
    /// Pipeline configuration file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Input file from the previous stage.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output file (a directory for `group`).
    #[arg(long)]
    out: PathBuf,
    /// Random seed override for this run.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the stage report JSON here.
    #[arg(long = "stage-report")]
    stage_report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KeyArg {
    Pi,
    Tau,
    Sigma,
}

impl From<KeyArg> for RankKey {
    fn from(key: KeyArg) -> RankKey {
        match key {
            KeyArg::Pi => RankKey::Pi,
            KeyArg::Tau => RankKey::Tau,
            KeyArg::Sigma => RankKey::Sigma,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Harvest questions from the autocomplete provider and forum corpus.
    Gather(StageArgs),
    /// Rewrite questions into assertive statements.
    Rewrite(StageArgs),
    /// Extract candidate (S, P, O) triples from statements.
    Extract(StageArgs),
    /// Normalize triples into scored candidate tuples.
    Normalize(StageArgs),
    /// Gather evidence signals and score plausibility.
    Corroborate(StageArgs),
    /// Compute the triple distribution and the typicality/saliency scores.
    Rank(StageArgs),
    /// Soft co-cluster SO pairs and P phrases per domain slice.
    Group(StageArgs),
    /// Run the evaluation kit over the finished knowledge base.
    Eval(StageArgs),
    /// Run every stage with file handoff inside the output directory.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for all intermediate and final files.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the collected stage reports JSON here (also written to
        /// `<out>/reports.json`).
        #[arg(long = "stage-report")]
        stage_report: Option<PathBuf>,
    },
    /// Ranked triples for a subject from a finished KB file.
    Query {
        /// Ranked KB file (the `rank` stage output).
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        subject: Option<String>,
        #[arg(long, value_enum, default_value = "tau")]
        key: KeyArg,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
    },
}

fn write_report_file(path: &PathBuf, json: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))
}

fn run_one_stage(stage: Stage, args: StageArgs) -> anyhow::Result<()> {
    let config = PipelineConfig::load(&args.config)?;
    config.validate()?;
    let seed = args.seed.unwrap_or(config.seed);
    let input = match (&args.input, stage) {
        (Some(path), _) => path.clone(),
        (None, Stage::Gather) => PathBuf::new(),
        (None, _) => return Err(anyhow!("usage: stage {} needs --in", stage.name())),
    };
    let report = run_stage(stage, &config, seed, &input, &args.out)?;
    finish_report(&[report], args.stage_report.as_ref())
}

fn finish_report(reports: &[StageReport], report_path: Option<&PathBuf>) -> anyhow::Result<()> {
    for report in reports {
        eprintln!(
            "{}: in={} out={} dropped={:?} ({} ms)",
            report.stage, report.in_count, report.out_count, report.dropped, report.wall_ms
        );
    }
    if let Some(path) = report_path {
        let json = if reports.len() == 1 {
            serde_json::to_string_pretty(&reports[0])?
        } else {
            serde_json::to_string_pretty(reports)?
        };
        write_report_file(path, &json)?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Gather(args) => run_one_stage(Stage::Gather, args),
        Command::Rewrite(args) => run_one_stage(Stage::Rewrite, args),
        Command::Extract(args) => run_one_stage(Stage::Extract, args),
        Command::Normalize(args) => run_one_stage(Stage::Normalize, args),
        Command::Corroborate(args) => run_one_stage(Stage::Corroborate, args),
        Command::Rank(args) => run_one_stage(Stage::Rank, args),
        Command::Group(args) => run_one_stage(Stage::Group, args),
        Command::Eval(args) => run_one_stage(Stage::Eval, args),
        Command::Pipeline {
            config,
            out,
            seed,
            stage_report,
        } => {
            let config = PipelineConfig::load(&config)?;
            config.validate()?;
            let seed = seed.unwrap_or(config.seed);
            let reports = run_pipeline(&config, seed, &out)?;
            let json = serde_json::to_string_pretty(&reports)?;
            write_report_file(&out.join("reports.json"), &json)?;
            finish_report(&reports, stage_report.as_ref())
        }
        Command::Query {
            kb,
            subject,
            key,
            top_k,
        } => {
            for line in query_kb(&kb, subject.as_deref(), key.into(), top_k)? {
                println!("{line}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
