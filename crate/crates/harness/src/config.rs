//! Run configuration: one TOML file plus command-line overrides.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use mind_core::policy::{Mode, PolicyConfig};
use mind_llm::LlmConfig;

use crate::error::{io_err, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Rule,
    Llm,
    /// Replays recorded model exchanges.
    Fixture,
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "rule" => Ok(Backend::Rule),
            "llm" => Ok(Backend::Llm),
            "fixture" => Ok(Backend::Fixture),
            other => Err(format!("unknown backend `{other}` (rule | llm | fixture)")),
        }
    }
}

pub fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    match s.replace('-', "_").as_str() {
        "base" => Ok(Mode::Base),
        "mind" => Ok(Mode::Mind),
        "tone_only" => Ok(Mode::ToneOnly),
        "appraisal_only" => Ok(Mode::AppraisalOnly),
        other => Err(format!("unknown mode `{other}` (base | mind | tone-only | appraisal-only)")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// A JSONL file with one scenario per line, or a directory of `.json`
    /// scenario files.
    pub scenarios: PathBuf,
    pub out: PathBuf,
    /// Recorded exchanges for the fixture backend.
    pub fixtures: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            scenarios: PathBuf::from("scenarios.jsonl"),
            out: PathBuf::from("runs/latest"),
            fixtures: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Report label; defaults to the mode label.
    pub label: Option<String>,
    pub mode: Mode,
    pub backend: Backend,
    pub seed: u64,
    pub tau: f64,
    pub rounds: u32,
    pub eps: f64,
    /// Scenarios negotiated at once.
    pub parallelism: usize,
    /// Also reject scenarios that fail the forging conflict filter.
    pub strict_filter: bool,
    pub paths: Paths,
    pub llm: LlmConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PolicyConfig::default();
        Self {
            label: None,
            mode: p.mode,
            backend: Backend::Rule,
            seed: 0,
            tau: p.consensus_threshold,
            rounds: p.max_rounds,
            eps: p.tone_noise_eps,
            parallelism: 4,
            strict_filter: false,
            paths: Paths::default(),
            llm: LlmConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub backend: Option<Backend>,
    pub seed: Option<u64>,
    pub tau: Option<f64>,
    pub rounds: Option<u32>,
    pub eps: Option<f64>,
    pub parallelism: Option<usize>,
    pub scenarios: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub fixtures: Option<PathBuf>,
    pub label: Option<String>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn apply(&mut self, o: Overrides) {
        macro_rules! set {
            ($($field:ident),*) => {$(if let Some(v) = o.$field { self.$field = v; })*};
        }
        set!(mode, backend, seed, tau, rounds, eps, parallelism);
        if let Some(v) = o.label {
            self.label = Some(v);
        }
        if let Some(v) = o.scenarios {
            self.paths.scenarios = v;
        }
        if let Some(v) = o.out {
            self.paths.out = v;
        }
        if let Some(v) = o.fixtures {
            self.paths.fixtures = Some(v);
        }
    }

    pub fn policy(&self) -> PolicyConfig {
        PolicyConfig {
            mode: self.mode,
            tone_noise_eps: self.eps,
            consensus_threshold: self.tau,
            max_rounds: self.rounds,
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.mode.label().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        self.policy().validate()?;
        if self.parallelism == 0 {
            return Err(HarnessError::Config("parallelism must be at least 1".into()));
        }
        if self.backend == Backend::Fixture && self.paths.fixtures.is_none() {
            return Err(HarnessError::Config("the fixture backend needs paths.fixtures".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut cfg = RunConfig::from_toml(
            r#"
mode = "base"
seed = 7
tau = 0.6

[paths]
scenarios = "s.jsonl"
out = "runs/base"
"#,
        )
        .unwrap();
        assert_eq!((cfg.mode, cfg.seed, cfg.rounds), (Mode::Base, 7, 3));
        cfg.apply(Overrides {
            mode: Some(Mode::Mind),
            tau: Some(0.75),
            ..Default::default()
        });
        assert_eq!((cfg.mode, cfg.tau, cfg.seed), (Mode::Mind, 0.75, 7));
        assert_eq!(cfg.paths.out, PathBuf::from("runs/base"));
        assert_eq!(cfg.label(), Mode::Mind.label());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig {
            backend: Backend::Fixture,
            paths: Paths {
                fixtures: Some("fx.jsonl".into()),
                ..Default::default()
            },
            ..Default::default()
        };
        assert_eq!(RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = |edit: fn(&mut RunConfig)| {
            let mut c = RunConfig::default();
            edit(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.tau = 0.0));
        assert!(bad(|c| c.tau = 1.5));
        assert!(bad(|c| c.rounds = 0));
        assert!(bad(|c| c.parallelism = 0));
        assert!(bad(|c| c.backend = Backend::Fixture));
        assert!(!bad(|c| c.tau = 1.0));
        assert!(RunConfig::from_toml("tua = 0.5").is_err());
    }

    #[test]
    fn mode_names() {
        assert_eq!(parse_mode("tone-only"), Ok(Mode::ToneOnly));
        assert_eq!(parse_mode("appraisal_only"), Ok(Mode::AppraisalOnly));
        assert!(parse_mode("full").is_err());
        assert_eq!("fixture".parse::<Backend>(), Ok(Backend::Fixture));
    }
}
