//! Pairwise judging of two stored runs, scenario by scenario.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use mind_llm::judge::{judge_pair, JudgePlan, PairVerdict, Winner, CRITERIA};
use mind_llm::{ChatTransport, LlmConfig};

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::store;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioJudgment {
    pub scenario_id: String,
    pub verdict: Option<PairVerdict>,
    /// Set when the verdict could not be parsed; the pair is unevaluated.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WinCounts {
    pub a: usize,
    pub b: usize,
    pub tie: usize,
}

impl WinCounts {
    fn add(&mut self, w: Winner) {
        match w {
            Winner::A => self.a += 1,
            Winner::B => self.b += 1,
            Winner::Tie => self.tie += 1,
        }
    }

    pub fn a_rate(&self) -> Option<f64> {
        let n = self.a + self.b + self.tie;
        (n > 0).then(|| self.a as f64 / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeSummary {
    pub label_a: String,
    pub label_b: String,
    pub judgments: Vec<ScenarioJudgment>,
    pub per_criterion: BTreeMap<String, WinCounts>,
    pub overall: WinCounts,
    pub unevaluated: usize,
}

fn plans(dir: &Path) -> Result<(String, BTreeMap<String, JudgePlan>)> {
    let label = RunConfig::load(&dir.join(store::CONFIG_FILE))
        .map(|c| c.label())
        .unwrap_or_else(|_| dir.display().to_string());
    let outcomes = store::read_outcomes(&dir.join(store::OUTCOMES_FILE))?;
    let events = store::read_transcript(&dir.join(store::TRANSCRIPTS_FILE))?;
    let mut ids: Vec<&str> = outcomes.iter().map(|o| o.scenario_id.as_str()).collect();
    ids.dedup();
    let map = ids
        .into_iter()
        .map(|id| {
            let o: Vec<_> = outcomes.iter().filter(|o| o.scenario_id == id).cloned().collect();
            let e: Vec<_> = events.iter().filter(|e| e.scenario_id == id).cloned().collect();
            (id.to_string(), JudgePlan::from_run(label.clone(), &o, &e))
        })
        .collect();
    Ok((label, map))
}

/// Judges every scenario present in both runs. Unparseable verdicts mark
/// the pair unevaluated; transport failures abort.
pub fn judge_runs<T: ChatTransport + ?Sized>(transport: &T, cfg: &LlmConfig, dir_a: &Path, dir_b: &Path) -> Result<JudgeSummary> {
    let (label_a, a) = plans(dir_a)?;
    let (label_b, b) = plans(dir_b)?;
    if a.keys().ne(b.keys()) {
        return Err(HarnessError::ScenarioMismatch(format!("`{label_a}` and `{label_b}`")));
    }
    let mut summary = JudgeSummary {
        label_a,
        label_b,
        judgments: Vec::new(),
        per_criterion: CRITERIA.iter().map(|c| (c.to_string(), WinCounts::default())).collect(),
        overall: WinCounts::default(),
        unevaluated: 0,
    };
    for (id, plan_a) in &a {
        match judge_pair(transport, cfg, plan_a, &b[id]) {
            Ok(v) => {
                for c in &v.criteria {
                    summary.per_criterion.get_mut(&c.criterion).expect("known criterion").add(c.winner);
                }
                summary.overall.add(v.overall);
                summary.judgments.push(ScenarioJudgment {
                    scenario_id: id.clone(),
                    verdict: Some(v),
                    error: None,
                });
            }
            Err(mind_llm::LlmError::Parse(e)) => {
                summary.unevaluated += 1;
                summary.judgments.push(ScenarioJudgment {
                    scenario_id: id.clone(),
                    verdict: None,
                    error: Some(e.to_string()),
                });
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(summary)
}
