//! Scenario sets, outcome files and transcripts on disk.

use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mind_core::domain::Scenario;
use mind_core::protocol::{transcript_from_jsonl, transcript_to_jsonl, ItemOutcome, TranscriptEvent};

use crate::error::{io_err, HarnessError, Result};

pub const OUTCOMES_SCHEMA: &str = "mind-outcomes/1";

pub const CONFIG_FILE: &str = "config.toml";
pub const TRANSCRIPTS_FILE: &str = "transcripts.jsonl";
pub const OUTCOMES_FILE: &str = "outcomes.json";
pub const REPORT_FILE: &str = "report.json";
pub const TABLE_FILE: &str = "report.txt";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const EXCHANGES_FILE: &str = "exchanges.jsonl";

/// Every file a run may leave in its directory.
pub const RUN_ARTIFACTS: [&str; 7] = [
    CONFIG_FILE,
    TRANSCRIPTS_FILE,
    OUTCOMES_FILE,
    REPORT_FILE,
    TABLE_FILE,
    CHECKPOINT_FILE,
    EXCHANGES_FILE,
];

/// A scenario with the place it was read from, for error messages.
#[derive(Debug, Clone)]
pub struct SourcedScenario {
    pub source: PathBuf,
    pub scenario: Scenario,
}

fn compact(s: &Scenario) -> Result<String> {
    let v: serde_json::Value = serde_json::from_str(&s.to_json()?).map_err(mind_core::Error::from)?;
    Ok(v.to_string())
}

/// Writes one scenario per line.
pub fn write_scenarios(path: &Path, scenarios: &[Scenario]) -> Result<()> {
    let mut out = String::new();
    for s in scenarios {
        out.push_str(&compact(s)?);
        out.push('\n');
    }
    write_file(path, &out)
}

/// Reads a JSONL scenario file or a directory of `.json` scenario files
/// (sorted by name).
pub fn load_scenarios(path: &Path) -> Result<Vec<SourcedScenario>> {
    let bad = |file: PathBuf, e: mind_core::Error| HarnessError::BadInput {
        file,
        reason: e.to_string(),
    };
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(io_err(path))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        return files
            .into_iter()
            .map(|f| {
                let text = fs::read_to_string(&f).map_err(io_err(&f))?;
                let scenario = Scenario::from_json(&text).map_err(|e| bad(f.clone(), e))?;
                Ok(SourcedScenario { source: f, scenario })
            })
            .collect();
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let source = PathBuf::from(format!("{}:{}", path.display(), i + 1));
            let scenario = Scenario::from_json(l).map_err(|e| bad(source.clone(), e))?;
            Ok(SourcedScenario { source, scenario })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomesFile {
    pub schema: String,
    pub outcomes: Vec<ItemOutcome>,
}

pub fn write_outcomes(path: &Path, outcomes: &[ItemOutcome]) -> Result<()> {
    let file = OutcomesFile {
        schema: OUTCOMES_SCHEMA.into(),
        outcomes: outcomes.to_vec(),
    };
    let text = serde_json::to_string_pretty(&file).map_err(mind_core::Error::from)?;
    write_file(path, &(text + "\n"))
}

pub fn read_outcomes(path: &Path) -> Result<Vec<ItemOutcome>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let file: OutcomesFile = serde_json::from_str(&text).map_err(|e| HarnessError::BadInput {
        file: path.into(),
        reason: e.to_string(),
    })?;
    if file.schema != OUTCOMES_SCHEMA {
        return Err(HarnessError::BadInput {
            file: path.into(),
            reason: format!("schema `{}`, expected `{OUTCOMES_SCHEMA}`", file.schema),
        });
    }
    Ok(file.outcomes)
}

pub fn append_transcript(path: &Path, events: &[TranscriptEvent]) -> Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io_err(path))?;
    f.write_all(transcript_to_jsonl(events)?.as_bytes()).map_err(io_err(path))
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptEvent>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    transcript_from_jsonl(&text).map_err(|e| HarnessError::BadInput {
        file: path.into(),
        reason: e.to_string(),
    })
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

pub fn remove_artifacts(dir: &Path) -> Result<()> {
    for name in RUN_ARTIFACTS {
        let p = dir.join(name);
        match fs::remove_file(&p) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(io_err(p)(e)),
        }
    }
    Ok(())
}
