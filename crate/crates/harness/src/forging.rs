//! Scenario generation: persona pool, optional diverse selection, grouping.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mind_core::domain::{ConstraintItem, Scenario};
use mind_core::forge::{default_items, form_groups, mmr_select, synthetic_pool, CandidatePool, ForgeDiagnostics, DEFAULT_LAMBDA};

use crate::error::{io_err, Result};
use crate::store;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgeOptions {
    /// Pool file; a synthetic pool is generated when absent.
    pub pool: Option<PathBuf>,
    pub synthetic_size: usize,
    /// Keep this many personas chosen by diverse selection before grouping.
    pub select: Option<usize>,
    pub lambda: f64,
    pub group_sizes: Vec<usize>,
    pub max_groups: usize,
    pub seed: u64,
}

impl Default for ForgeOptions {
    fn default() -> Self {
        Self {
            pool: None,
            synthetic_size: 60,
            select: None,
            lambda: DEFAULT_LAMBDA,
            group_sizes: vec![2, 3, 4],
            max_groups: 34,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgeSummary {
    pub pool_size: usize,
    pub selected: Option<Vec<String>>,
    pub diagnostics: BTreeMap<usize, ForgeDiagnostics>,
    pub scenarios: usize,
}

fn load_pool(opts: &ForgeOptions) -> Result<(CandidatePool, Vec<ConstraintItem>)> {
    match &opts.pool {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            Ok(CandidatePool::from_json(&text)?)
        }
        None => {
            let items = default_items();
            Ok((synthetic_pool(opts.synthetic_size, &items, opts.seed), items))
        }
    }
}

/// Builds the scenario set described by `opts`.
pub fn forge(opts: &ForgeOptions) -> Result<(Vec<Scenario>, ForgeSummary)> {
    let (mut pool, items) = load_pool(opts)?;
    let pool_size = pool.personas.len();
    let selected = match opts.select {
        Some(k) => {
            let ids = mmr_select(&pool, None, k, opts.lambda)?;
            pool = pool.subset(&ids)?;
            Some(ids)
        }
        None => None,
    };
    let mut scenarios = Vec::new();
    let mut diagnostics = BTreeMap::new();
    for &size in &opts.group_sizes {
        let r = form_groups(&pool, size, &items, opts.max_groups, opts.seed)?;
        scenarios.extend(r.scenarios);
        diagnostics.insert(size, r.diagnostics);
    }
    let summary = ForgeSummary {
        pool_size,
        selected,
        diagnostics,
        scenarios: scenarios.len(),
    };
    Ok((scenarios, summary))
}

/// Forges and writes `scenarios.jsonl` plus `forge.json` under `out`.
pub fn forge_to_dir(opts: &ForgeOptions, out: &Path) -> Result<ForgeSummary> {
    let (scenarios, summary) = forge(opts)?;
    store::write_scenarios(&out.join("scenarios.jsonl"), &scenarios)?;
    let text = serde_json::to_string_pretty(&summary).map_err(mind_core::Error::from)?;
    store::write_file(&out.join("forge.json"), &(text + "\n"))?;
    Ok(summary)
}
