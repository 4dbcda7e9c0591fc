//! Group-decision metrics over item outcomes and opponent-inference accuracy
//! over appraisal events.
//!
//! A *case* is one negotiated item of one scenario. Rates are averaged over
//! cases; fairness is computed per scenario group and then averaged.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{EventPayload, ItemOutcome, TranscriptEvent};

pub const REPORT_SCHEMA: &str = "mind-report/1";

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Per case, the fraction of agents whose initial value was adopted; then
/// the mean over cases.
pub fn total_fidelity(outcomes: &[ItemOutcome]) -> Result<f64> {
    mean(outcomes.iter().filter(|o| !o.agents.is_empty()).map(|o| {
        o.agents.iter().filter(|a| a.matched).count() as f64 / o.agents.len() as f64
    }))
    .ok_or(Error::EmptyInput("total fidelity needs at least one case"))
}

/// Over debate-resolved cases only, the fraction where a top-willingness
/// agent's value won. `None` when no case was debated to consensus.
pub fn debate_hit_rate(outcomes: &[ItemOutcome]) -> Option<f64> {
    mean(
        outcomes
            .iter()
            .filter(|o| o.resolution.is_debate())
            .map(|o| if o.top_agent_hit() { 1.0 } else { 0.0 }),
    )
}

pub fn debate_ratio(outcomes: &[ItemOutcome]) -> Result<f64> {
    mean(outcomes.iter().map(|o| if o.resolution.is_debate() { 1.0 } else { 0.0 }))
        .ok_or(Error::EmptyInput("debate ratio needs at least one case"))
}

/// Like [`debate_hit_rate`] but over every case, fallback included.
pub fn high_w_hit(outcomes: &[ItemOutcome]) -> Result<f64> {
    mean(outcomes.iter().map(|o| if o.top_agent_hit() { 1.0 } else { 0.0 }))
        .ok_or(Error::EmptyInput("high-w hit needs at least one case"))
}

/// `(raw, per_case)` where raw sums `w` over every matched agent-case.
pub fn total_satisfaction(outcomes: &[ItemOutcome]) -> Result<(f64, f64)> {
    if outcomes.is_empty() {
        return Err(Error::EmptyInput("total satisfaction needs at least one case"));
    }
    let raw: f64 = outcomes
        .iter()
        .flat_map(|o| o.agents.iter())
        .filter(|a| a.matched)
        .map(|a| f64::from(a.w.get()))
        .sum();
    Ok((raw, raw / outcomes.len() as f64))
}

/// Jain's index `(sum S)^2 / (n * sum S^2)`; `None` for an empty or all-zero
/// group.
pub fn jain_fairness(per_agent: &[f64]) -> Option<f64> {
    let n = per_agent.len();
    let sum: f64 = per_agent.iter().sum();
    let sq: f64 = per_agent.iter().map(|s| s * s).sum();
    if n == 0 || sq <= 0.0 {
        return None;
    }
    Some(sum * sum / (n as f64 * sq))
}

/// Weighted satisfaction sums `S_i` per agent, one vector per scenario.
pub fn group_satisfaction(outcomes: &[ItemOutcome]) -> BTreeMap<String, Vec<f64>> {
    let mut groups: BTreeMap<String, BTreeMap<String, (usize, f64)>> = BTreeMap::new();
    for o in outcomes {
        let g = groups.entry(o.scenario_id.clone()).or_default();
        for (order, a) in o.agents.iter().enumerate() {
            let e = g.entry(a.id.clone()).or_insert((order, 0.0));
            if a.matched {
                e.1 += f64::from(a.w.get());
            }
        }
    }
    groups
        .into_iter()
        .map(|(id, agents)| {
            let mut v: Vec<(usize, f64)> = agents.into_values().collect();
            v.sort_by_key(|(order, _)| *order);
            (id, v.into_iter().map(|(_, s)| s).collect())
        })
        .collect()
}

/// Mean Jain index over groups with a defined index.
pub fn jain_mean(outcomes: &[ItemOutcome]) -> Option<f64> {
    mean(group_satisfaction(outcomes).values().filter_map(|s| jain_fairness(s)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomStats {
    pub mae: f64,
    pub acc1: f64,
    pub acc2: f64,
    pub pearson: Option<f64>,
    pub n: usize,
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Accuracy statistics over `(w_true, w_pred)` pairs. `None` when empty.
pub fn tom_metrics(pairs: &[(u8, u8)]) -> Option<TomStats> {
    if pairs.is_empty() {
        return None;
    }
    let n = pairs.len() as f64;
    let diffs: Vec<u32> = pairs.iter().map(|(t, p)| u32::from(t.abs_diff(*p))).collect();
    let within = |d: u32| diffs.iter().filter(|x| **x <= d).count() as f64 / n;
    let xs: Vec<f64> = pairs.iter().map(|(t, _)| f64::from(*t)).collect();
    let ys: Vec<f64> = pairs.iter().map(|(_, p)| f64::from(*p)).collect();
    Some(TomStats {
        mae: diffs.iter().map(|d| f64::from(*d)).sum::<f64>() / n,
        acc1: within(1),
        acc2: within(2),
        pearson: pearson(&xs, &ys),
        n: pairs.len(),
    })
}

/// Joins each hidden appraisal with the true willingness of the proposer it
/// appraised.
pub fn tom_pairs(outcomes: &[ItemOutcome], transcript: &[TranscriptEvent]) -> Vec<(u8, u8)> {
    let proposer_w: BTreeMap<(&str, &str), u8> = outcomes
        .iter()
        .filter_map(|o| {
            let pid = o.proposer.as_deref()?;
            let agent = o.agents.iter().find(|a| a.id == pid)?;
            Some(((o.scenario_id.as_str(), o.item_key.as_str()), agent.w.get()))
        })
        .collect();
    transcript
        .iter()
        .filter_map(|e| match &e.payload {
            EventPayload::Appraisal(a) => proposer_w
                .get(&(e.scenario_id.as_str(), e.item_key.as_str()))
                .map(|w| (*w, a.guessed_opponent_w.get())),
            _ => None,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSizeStats {
    pub cases: usize,
    pub debate_ratio: f64,
    pub debate_hit_rate: Option<f64>,
    pub high_w_hit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema: String,
    pub label: String,
    pub scenario_ids: Vec<String>,
    pub cases: usize,
    pub total_fidelity: f64,
    pub debate_hit_rate: Option<f64>,
    pub debate_ratio: f64,
    pub high_w_hit: f64,
    pub s_total_raw: f64,
    pub s_total_per_case: f64,
    pub jain_mean: Option<f64>,
    pub tom: Option<TomStats>,
    pub by_group_size: BTreeMap<usize, GroupSizeStats>,
}

impl MetricsReport {
    /// Report over the negotiated cases in `outcomes`; hard items are
    /// excluded.
    pub fn compute(label: &str, outcomes: &[ItemOutcome], transcript: &[TranscriptEvent]) -> Result<Self> {
        let cases: Vec<ItemOutcome> = outcomes.iter().filter(|o| o.negotiated).cloned().collect();
        let (s_total_raw, s_total_per_case) = total_satisfaction(&cases)?;
        let scenario_ids: Vec<String> = outcomes
            .iter()
            .map(|o| o.scenario_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut sizes: BTreeMap<usize, Vec<ItemOutcome>> = BTreeMap::new();
        for c in &cases {
            sizes.entry(c.group_size()).or_default().push(c.clone());
        }
        let by_group_size = sizes
            .into_iter()
            .map(|(size, cs)| {
                Ok((
                    size,
                    GroupSizeStats {
                        cases: cs.len(),
                        debate_ratio: debate_ratio(&cs)?,
                        debate_hit_rate: debate_hit_rate(&cs),
                        high_w_hit: high_w_hit(&cs)?,
                    },
                ))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            schema: REPORT_SCHEMA.into(),
            label: label.into(),
            scenario_ids,
            cases: cases.len(),
            total_fidelity: total_fidelity(&cases)?,
            debate_hit_rate: debate_hit_rate(&cases),
            debate_ratio: debate_ratio(&cases)?,
            high_w_hit: high_w_hit(&cases)?,
            s_total_raw,
            s_total_per_case,
            jain_mean: jain_mean(&cases),
            tom: tom_metrics(&tom_pairs(&cases, transcript)),
            by_group_size,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: MetricsReport = serde_json::from_str(text)?;
        if r.schema != REPORT_SCHEMA {
            return Err(Error::Schema {
                expected: REPORT_SCHEMA,
                found: r.schema,
            });
        }
        Ok(r)
    }

    pub fn to_table(&self) -> String {
        let pct = |x: f64| format!("{:.2}%", 100.0 * x);
        let opt_pct = |x: Option<f64>| x.map_or_else(|| "n/a".to_string(), pct);
        let mut out = String::new();
        let _ = writeln!(out, "report: {} ({} cases, {} scenarios)", self.label, self.cases, self.scenario_ids.len());
        let _ = writeln!(out, "  Debate Hit-Rate    {}", opt_pct(self.debate_hit_rate));
        let _ = writeln!(out, "  Debate Ratio       {}", pct(self.debate_ratio));
        let _ = writeln!(out, "  High-w Hit         {}", pct(self.high_w_hit));
        let _ = writeln!(
            out,
            "  Fairness (Jain)    {}",
            self.jain_mean.map_or_else(|| "n/a".into(), |j| format!("{j:.4}"))
        );
        let _ = writeln!(out, "  Total Fidelity     {}", pct(self.total_fidelity));
        let _ = writeln!(out, "  S_total            {:.2} raw, {:.2} per case", self.s_total_raw, self.s_total_per_case);
        if let Some(t) = &self.tom {
            let _ = writeln!(
                out,
                "  ToM (n={})         MAE {:.2}  r {}  Acc±1 {}  Acc±2 {}",
                t.n,
                t.mae,
                t.pearson.map_or_else(|| "n/a".into(), |r| format!("{r:.2}")),
                pct(t.acc1),
                pct(t.acc2)
            );
        }
        for (size, g) in &self.by_group_size {
            let _ = writeln!(
                out,
                "  {size} agents: {} cases, DR {}, DHR {}",
                g.cases,
                pct(g.debate_ratio),
                opt_pct(g.debate_hit_rate)
            );
        }
        out
    }
}
