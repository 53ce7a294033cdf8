//! `skgkit` command-line front end: JSONL pipelines over the toolkit.

mod commands;
mod config;
mod error;
mod io;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skgkit::corpus::CountStrategy;
use skgkit::linearize::OrderingPolicy;

use commands::Outputs;
use config::{Config, SelectionMode};
use error::{exit_code, usage, EXIT_DATA, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "skgkit", version, about = "Structured knowledge grounding toolkit")]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = all cores). Outputs do not depend on it.
    #[arg(long, short = 'j', global = true)]
    jobs: Option<usize>,
    /// Where per-record errors go. Defaults to `<output>.errors.jsonl`,
    /// or stderr when writing to stdout.
    #[arg(long, global = true)]
    errors: Option<PathBuf>,
    /// Where the run manifest goes. Defaults to `<output>.manifest.json`
    /// for JSONL outputs; JSON documents embed it.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Records to {id, input_text, target_text} pairs.
    Linearize(LinearizeArgs),
    /// Score predictions against records.
    Eval(EvalArgs),
    /// Check formal expressions for validity.
    Validate(IoArgs),
    /// Token-length histograms per task.
    Stats(StatsArgs),
    /// Build few-shot prompts.
    Fewshot(FewshotArgs),
    /// Temperature mixing weights and a sampled task schedule.
    Mix(MixArgs),
    /// Print separator constants and grammar versions.
    FormatSpec(OutputArg),
}

#[derive(Debug, Args)]
struct OutputArg {
    /// Output path, `-` for stdout.
    #[arg(long, short, default_value = "-")]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct IoArgs {
    /// Input path, `-` for stdin.
    #[arg(long, short, default_value = "-")]
    input: PathBuf,
    #[command(flatten)]
    out: OutputArg,
}

#[derive(Debug, Args)]
struct BudgetArgs {
    /// Token budget.
    #[arg(long)]
    budget: Option<usize>,
    /// Token counting strategy: word_punct or whitespace.
    #[arg(long)]
    counter: Option<CountStrategy>,
}

#[derive(Debug, Args)]
struct LinearizeArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Component ordering: rs_c, sr or rcs.
    #[arg(long)]
    ordering: Option<OrderingPolicy>,
    /// Reverse knowledge order before linearizing.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    reverse_knowledge: Option<bool>,
    /// Truncate knowledge to the token budget.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    truncate: Option<bool>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Records JSONL with gold targets.
    #[arg(long)]
    records: PathBuf,
    /// Predictions JSONL of {id, prediction}.
    #[arg(long)]
    predictions: PathBuf,
    /// Optional per-record CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArg,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Aligned plain-text table of bin percentages.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Externally computed token counts, JSONL keyed by id.
    #[arg(long)]
    counts: Option<PathBuf>,
    /// Token counting strategy: word_punct or whitespace.
    #[arg(long)]
    counter: Option<CountStrategy>,
    /// Component ordering: rs_c, sr or rcs.
    #[arg(long)]
    ordering: Option<OrderingPolicy>,
}

#[derive(Debug, Args)]
struct FewshotArgs {
    /// Query records, `-` for stdin.
    #[arg(long, short, default_value = "-")]
    input: PathBuf,
    /// Training records to draw examples from.
    #[arg(long)]
    train: PathBuf,
    #[command(flatten)]
    out: OutputArg,
    /// Examples per prompt.
    #[arg(long)]
    k: Option<usize>,
    /// Example selection.
    #[arg(long, value_enum)]
    mode: Option<SelectionMode>,
    /// Seed for random selection.
    #[arg(long)]
    seed: Option<u64>,
    /// Precomputed embeddings, JSONL of {id, vector}.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Put the most similar example next to the query.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    most_similar_last: Option<bool>,
    /// Input template with {knowledge}, {request} and {context}.
    #[arg(long)]
    template: Option<String>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Debug, Args)]
struct MixArgs {
    /// Task sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<u64>,
    #[arg(long)]
    temperature: Option<f64>,
    /// Schedule length.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutputArg,
}

fn apply_budget(cfg: &mut Config, b: &BudgetArgs) {
    if let Some(v) = b.budget {
        cfg.budget.max_tokens = v;
    }
    if let Some(v) = b.counter {
        cfg.budget.counter = v;
    }
}

fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
    if let Some(v) = value {
        *slot = v.clone();
    }
}

fn run(cli: Cli) -> anyhow::Result<usize> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    set(&mut cfg.jobs, &cli.jobs);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| usage(format!("cannot start {} workers: {e}", cfg.jobs)))?;
    let errors = cli.errors.as_deref();
    let manifest = cli.manifest.as_deref();
    let outs = |output| Outputs {
        output,
        errors,
        manifest,
    };
    pool.install(|| match &cli.command {
        Command::Linearize(a) => {
            set(&mut cfg.linearization.ordering, &a.ordering);
            set(&mut cfg.linearization.reverse_knowledge, &a.reverse_knowledge);
            set(&mut cfg.linearization.truncate, &a.truncate);
            apply_budget(&mut cfg, &a.budget);
            let out = outs(&a.io.out.output);
            commands::linearize(&cfg, &a.io.input, &out)
        }
        Command::Eval(a) => {
            let out = outs(&a.out.output);
            commands::eval(&cfg, &a.records, &a.predictions, a.csv.as_deref(), &out)
        }
        Command::Validate(a) => {
            let out = outs(&a.out.output);
            commands::validate(&cfg, &a.input, &out)
        }
        Command::Stats(a) => {
            set(&mut cfg.budget.counter, &a.counter);
            set(&mut cfg.linearization.ordering, &a.ordering);
            let out = outs(&a.io.out.output);
            commands::stats(&cfg, &a.io.input, a.counts.as_deref(), a.table.as_deref(), &out)
        }
        Command::Fewshot(a) => {
            set(&mut cfg.fewshot.k, &a.k);
            set(&mut cfg.fewshot.mode, &a.mode);
            set(&mut cfg.fewshot.seed, &a.seed);
            set(&mut cfg.fewshot.most_similar_last, &a.most_similar_last);
            if a.template.is_some() {
                cfg.fewshot.template = a.template.clone();
            }
            apply_budget(&mut cfg, &a.budget);
            let out = outs(&a.out.output);
            commands::fewshot(&cfg, &a.train, &a.input, a.embeddings.as_deref(), &out)
        }
        Command::Mix(a) => {
            set(&mut cfg.mix.temperature, &a.temperature);
            set(&mut cfg.mix.steps, &a.steps);
            set(&mut cfg.mix.seed, &a.seed);
            let out = outs(&a.out.output);
            commands::mix(&cfg, a.sizes.clone(), &out)
        }
        Command::FormatSpec(a) => {
            let out = outs(&a.output);
            commands::format_spec_cmd(&cfg, &out)
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match run(cli) {
        Ok(0) => EXIT_OK,
        Ok(failed) => {
            eprintln!("skgkit: {failed} record(s) failed");
            EXIT_DATA
        }
        Err(e) => {
            eprintln!("skgkit: {e:#}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
