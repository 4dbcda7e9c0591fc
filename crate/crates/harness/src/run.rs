//! Batch execution of a scenario set into a run directory.
//!
//! Scenarios are negotiated in chunks of `parallelism`; each chunk's results
//! are appended in input order, so the transcript file is identical for any
//! worker count. A backend failure stops the run and leaves a checkpoint of
//! the completed scenarios; any other failure removes the partial outputs.

use std::collections::BTreeSet;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use mind_core::domain::{validate_scenario, Scenario, ViolationKind};
use mind_core::metrics::MetricsReport;
use mind_core::protocol::{run_scenario_with, EventPayload, ItemOutcome, RulePolicy, TranscriptEvent, TurnPolicy};
use mind_llm::client::{FixtureRecord, FixtureTransport, HttpTransport, Recording, RetryPolicy, Retrying};
use mind_llm::LlmPolicy;

use crate::config::{Backend, RunConfig};
use crate::error::{io_err, HarnessError, Result};
use crate::store::{self, SourcedScenario};

pub const CHECKPOINT_SCHEMA: &str = "mind-checkpoint/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema: String,
    pub completed: Vec<String>,
    pub outcomes: Vec<ItemOutcome>,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub report: MetricsReport,
    pub scenarios: usize,
    pub degraded_turns: usize,
}

/// Rejects malformed scenarios. The forging conflict filter only applies
/// with `strict_filter`.
pub fn check_scenarios(set: &[SourcedScenario], strict_filter: bool) -> Result<()> {
    let mut ids = BTreeSet::new();
    for s in set {
        let report = validate_scenario(&s.scenario);
        let violations: Vec<String> = report
            .violations
            .iter()
            .filter(|v| strict_filter || v.kind != ViolationKind::InsufficientConflicts)
            .map(|v| v.to_string())
            .collect();
        if !violations.is_empty() {
            return Err(HarnessError::InvalidScenario {
                file: s.source.clone(),
                scenario: s.scenario.id.clone(),
                violations,
            });
        }
        if !ids.insert(s.scenario.id.as_str()) {
            return Err(HarnessError::BadInput {
                file: s.source.clone(),
                reason: format!("scenario id `{}` appears twice", s.scenario.id),
            });
        }
    }
    Ok(())
}

/// Runs `cfg` with the backend it names.
pub fn run_experiment(cfg: &RunConfig, resume: bool) -> Result<RunSummary> {
    cfg.validate()?;
    match cfg.backend {
        Backend::Rule => run_with_policy(cfg, &RulePolicy, resume),
        Backend::Fixture => {
            let path = cfg.paths.fixtures.as_deref().expect("validated");
            let policy = LlmPolicy::new(FixtureTransport::load(path)?, cfg.llm.clone());
            run_with_policy(cfg, &policy, resume)
        }
        Backend::Llm => {
            let http = HttpTransport::from_env(
                &cfg.llm.base_url,
                &cfg.llm.api_key_env,
                Duration::from_secs(cfg.llm.timeout_secs),
            )
            .map_err(mind_llm::LlmError::from)?;
            let transport = Recording::new(Retrying::new(http, RetryPolicy::default()));
            let policy = LlmPolicy::new(&transport, cfg.llm.clone());
            let result = run_with_policy(cfg, &policy, resume);
            if matches!(result, Ok(_) | Err(HarnessError::Aborted { .. })) {
                append_exchanges(&cfg.paths.out.join(store::EXCHANGES_FILE), &transport.records())?;
            }
            result
        }
    }
}

fn append_exchanges(path: &Path, records: &[FixtureRecord]) -> Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io_err(path))?;
    for r in records {
        let line = serde_json::to_string(r).map_err(mind_core::Error::from)?;
        writeln!(f, "{line}").map_err(io_err(path))?;
    }
    Ok(())
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let c: Checkpoint = serde_json::from_str(&text).map_err(|e| HarnessError::BadInput {
        file: path.into(),
        reason: e.to_string(),
    })?;
    if c.schema != CHECKPOINT_SCHEMA {
        return Err(HarnessError::BadInput {
            file: path.into(),
            reason: format!("schema `{}`, expected `{CHECKPOINT_SCHEMA}`", c.schema),
        });
    }
    Ok(c)
}

type ScenarioResult = mind_core::Result<(Vec<ItemOutcome>, Vec<TranscriptEvent>)>;

/// Runs every scenario of `cfg` through `policy` and writes the run
/// directory.
pub fn run_with_policy(cfg: &RunConfig, policy: &dyn TurnPolicy, resume: bool) -> Result<RunSummary> {
    cfg.validate()?;
    let set = store::load_scenarios(&cfg.paths.scenarios)?;
    check_scenarios(&set, cfg.strict_filter)?;
    let scenarios: Vec<&Scenario> = set.iter().map(|s| &s.scenario).collect();

    let dir = cfg.paths.out.clone();
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let config_text = cfg.to_toml()?;
    let checkpoint_path = dir.join(store::CHECKPOINT_FILE);
    let transcripts = dir.join(store::TRANSCRIPTS_FILE);

    let mut outcomes: Vec<ItemOutcome> = Vec::new();
    let mut done: BTreeSet<String> = BTreeSet::new();
    if resume && checkpoint_path.exists() {
        let stored = std::fs::read_to_string(dir.join(store::CONFIG_FILE)).map_err(io_err(dir.join(store::CONFIG_FILE)))?;
        if stored != config_text {
            return Err(HarnessError::Config("configuration differs from the checkpointed run".into()));
        }
        let c = load_checkpoint(&checkpoint_path)?;
        outcomes = c.outcomes;
        done = c.completed.into_iter().collect();
    } else {
        store::remove_artifacts(&dir)?;
        store::write_file(&dir.join(store::CONFIG_FILE), &config_text)?;
    }

    let pending: Vec<&Scenario> = scenarios.iter().copied().filter(|s| !done.contains(&s.id)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let policy_cfg = cfg.policy();

    for chunk in pending.chunks(cfg.parallelism) {
        let results: Vec<ScenarioResult> =
            pool.install(|| chunk.par_iter().map(|s| run_scenario_with(policy, s, &policy_cfg, cfg.seed)).collect());
        for (s, r) in chunk.iter().zip(results) {
            match r {
                Ok((o, events)) => {
                    store::append_transcript(&transcripts, &events)?;
                    outcomes.extend(o);
                    done.insert(s.id.clone());
                }
                Err(mind_core::Error::Backend(reason)) => {
                    let c = Checkpoint {
                        schema: CHECKPOINT_SCHEMA.into(),
                        completed: scenarios.iter().filter(|x| done.contains(&x.id)).map(|x| x.id.clone()).collect(),
                        outcomes,
                        reason: reason.clone(),
                    };
                    let text = serde_json::to_string_pretty(&c).map_err(mind_core::Error::from)?;
                    store::write_file(&checkpoint_path, &text)?;
                    return Err(HarnessError::Aborted {
                        completed: c.completed.len(),
                        reason,
                        checkpoint: checkpoint_path,
                    });
                }
                Err(e) => {
                    store::remove_artifacts(&dir)?;
                    return Err(e.into());
                }
            }
        }
    }

    // Outcomes follow input order even after a resume.
    let order: Vec<&str> = scenarios.iter().map(|s| s.id.as_str()).collect();
    outcomes.sort_by_key(|o| order.iter().position(|id| *id == o.scenario_id));
    finish(&dir, &cfg.label(), &outcomes, scenarios.len())
}

fn finish(dir: &Path, label: &str, outcomes: &[ItemOutcome], scenarios: usize) -> Result<RunSummary> {
    let events = store::read_transcript(&dir.join(store::TRANSCRIPTS_FILE)).or_else(|e| match e {
        HarnessError::Io { ref source, .. } if source.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        e => Err(e),
    })?;
    store::write_outcomes(&dir.join(store::OUTCOMES_FILE), outcomes)?;
    let report = MetricsReport::compute(label, outcomes, &events)?;
    store::write_file(&dir.join(store::REPORT_FILE), &(report.to_json()? + "\n"))?;
    store::write_file(&dir.join(store::TABLE_FILE), &report.to_table())?;
    let cp = dir.join(store::CHECKPOINT_FILE);
    if cp.exists() {
        std::fs::remove_file(&cp).map_err(io_err(&cp))?;
    }
    let degraded_turns = events.iter().filter(|e| matches!(e.payload, EventPayload::Degradation(_))).count();
    Ok(RunSummary {
        dir: dir.to_path_buf(),
        report,
        scenarios,
        degraded_turns,
    })
}

/// Recomputes the report of a stored run.
pub fn evaluate(dir: &Path, label: Option<&str>) -> Result<MetricsReport> {
    let outcomes = store::read_outcomes(&dir.join(store::OUTCOMES_FILE))?;
    let events = store::read_transcript(&dir.join(store::TRANSCRIPTS_FILE))?;
    let label = match label {
        Some(l) => l.to_string(),
        None => RunConfig::load(&dir.join(store::CONFIG_FILE))
            .map(|c| c.label())
            .unwrap_or_else(|_| "run".into()),
    };
    Ok(MetricsReport::compute(&label, &outcomes, &events)?)
}
