use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use mind_core::metrics::MetricsReport;
use mind_core::policy::Mode;
use mind_harness::compare::compare_runs;
use mind_harness::config::{parse_mode, Backend, Overrides, RunConfig};
use mind_harness::error::{io_err, HarnessError, Result};
use mind_harness::forging::{forge_to_dir, ForgeOptions};
use mind_harness::judging::judge_runs;
use mind_harness::run::{evaluate, run_experiment};
use mind_harness::store;
use mind_llm::client::{ChatTransport, FixtureTransport, HttpTransport, RetryPolicy, Retrying};

#[derive(Parser)]
#[command(name = "mind", version, about = "Multi-agent negotiation experiments with hidden willingness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario set from a persona pool
    Forge(ForgeArgs),
    /// Negotiate every scenario of a set and write a run directory
    Run(RunArgs),
    /// Recompute the metrics report of a run directory
    Eval {
        run_dir: PathBuf,
        #[arg(long)]
        label: Option<String>,
    },
    /// Per-metric deltas between two reports (files or run directories)
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Print JSON instead of a table
        #[arg(long)]
        json: bool,
    },
    /// Judge two runs pairwise with a model
    Judge(JudgeArgs),
}

#[derive(Args)]
struct ForgeArgs {
    /// Persona pool JSON; a synthetic pool is used when omitted
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Size of the synthetic pool
    #[arg(long, default_value_t = 60)]
    synthetic: usize,
    /// Keep this many personas by diverse selection before grouping
    #[arg(long)]
    select: Option<usize>,
    #[arg(long, default_value_t = mind_core::forge::DEFAULT_LAMBDA)]
    lambda: f64,
    /// Group sizes to form (repeatable)
    #[arg(long = "group-size", default_values_t = [2, 3, 4])]
    group_sizes: Vec<usize>,
    /// Groups per size
    #[arg(long, default_value_t = 34)]
    max_groups: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "scenarios")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// rule | llm | fixture
    #[arg(long)]
    backend: Option<Backend>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    rounds: Option<u32>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    scenarios: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recorded exchanges for the fixture backend
    #[arg(long)]
    fixtures: Option<PathBuf>,
    #[arg(long)]
    label: Option<String>,
    /// Continue from the checkpoint in the output directory
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct JudgeArgs {
    run_a: PathBuf,
    run_b: PathBuf,
    /// Run configuration supplying the model settings
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replay recorded judge exchanges instead of calling the endpoint
    #[arg(long)]
    fixtures: Option<PathBuf>,
    #[arg(long, default_value = "judgments.json")]
    out: PathBuf,
}

fn load_report(path: &Path) -> Result<MetricsReport> {
    let file = if path.is_dir() { path.join(store::REPORT_FILE) } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&file).map_err(io_err(&file))?;
    MetricsReport::from_json(&text).map_err(|e| HarnessError::BadInput {
        file,
        reason: e.to_string(),
    })
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(Overrides {
        mode: a.mode,
        backend: a.backend,
        seed: a.seed,
        tau: a.tau,
        rounds: a.rounds,
        eps: a.eps,
        parallelism: a.parallelism,
        scenarios: a.scenarios,
        out: a.out,
        fixtures: a.fixtures,
        label: a.label,
    });
    let summary = run_experiment(&cfg, a.resume)?;
    print!("{}", summary.report.to_table());
    if summary.degraded_turns > 0 {
        println!("  {} turn(s) fell back to the rule policy", summary.degraded_turns);
    }
    println!("wrote {}", summary.dir.display());
    Ok(())
}

fn cmd_judge(a: JudgeArgs) -> Result<()> {
    let llm = match &a.config {
        Some(p) => RunConfig::load(p)?.llm,
        None => Default::default(),
    };
    let transport: Box<dyn ChatTransport> = match &a.fixtures {
        Some(f) => Box::new(FixtureTransport::load(f)?),
        None => {
            let http = HttpTransport::from_env(&llm.base_url, &llm.api_key_env, Duration::from_secs(llm.timeout_secs))
                .map_err(mind_llm::LlmError::from)?;
            Box::new(Retrying::new(http, RetryPolicy::default()))
        }
    };
    let summary = judge_runs(transport.as_ref(), &llm, &a.run_a, &a.run_b)?;
    let text = serde_json::to_string_pretty(&summary).map_err(mind_core::Error::from)?;
    store::write_file(&a.out, &(text + "\n"))?;
    let rate = |w: &mind_harness::judging::WinCounts| {
        format!("{} wins {}, {} wins {}, ties {}", summary.label_a, w.a, summary.label_b, w.b, w.tie)
    };
    for (name, w) in &summary.per_criterion {
        println!("{name:<30} {}", rate(w));
    }
    println!("{:<30} {}", "Overall", rate(&summary.overall));
    if summary.unevaluated > 0 {
        println!("{} pair(s) unevaluated", summary.unevaluated);
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Forge(a) => {
            let opts = ForgeOptions {
                pool: a.pool,
                synthetic_size: a.synthetic,
                select: a.select,
                lambda: a.lambda,
                group_sizes: a.group_sizes,
                max_groups: a.max_groups,
                seed: a.seed,
            };
            let s = forge_to_dir(&opts, &a.out)?;
            for (size, d) in &s.diagnostics {
                println!(
                    "size {size}: {} attempts, {} duplicates, rejections {:?}{}",
                    d.attempts,
                    d.duplicates,
                    d.rejections,
                    if d.exhausted { " (pool exhausted)" } else { "" }
                );
            }
            println!("wrote {} scenarios to {}", s.scenarios, a.out.join("scenarios.jsonl").display());
            Ok(())
        }
        Command::Run(a) => cmd_run(a),
        Command::Eval { run_dir, label } => {
            let report = evaluate(&run_dir, label.as_deref())?;
            store::write_file(&run_dir.join(store::REPORT_FILE), &(report.to_json()? + "\n"))?;
            store::write_file(&run_dir.join(store::TABLE_FILE), &report.to_table())?;
            print!("{}", report.to_table());
            Ok(())
        }
        Command::Compare { a, b, json } => {
            let c = compare_runs(&load_report(&a)?, &load_report(&b)?)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&c).map_err(mind_core::Error::from)?);
            } else {
                print!("{}", c.to_table());
            }
            Ok(())
        }
        Command::Judge(a) => cmd_judge(a),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ HarnessError::Aborted { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
