//! Side-by-side deltas between two metric reports over the same scenarios.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use mind_core::metrics::MetricsReport;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub metric: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// `b - a`.
    pub delta: Option<f64>,
    /// `(b - a) / a`; undefined when `a` is zero.
    pub relative: Option<f64>,
}

impl DeltaRow {
    fn new(metric: impl Into<String>, a: Option<f64>, b: Option<f64>) -> Self {
        let delta = a.zip(b).map(|(a, b)| b - a);
        let relative = a.zip(delta).filter(|(a, _)| *a != 0.0).map(|(a, d)| d / a);
        Self {
            metric: metric.into(),
            a,
            b,
            delta,
            relative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub label_a: String,
    pub label_b: String,
    pub rows: Vec<DeltaRow>,
}

fn rows_for(r: &MetricsReport) -> Vec<(String, Option<f64>)> {
    let mut rows = vec![
        ("Debate Hit-Rate".to_string(), r.debate_hit_rate),
        ("Debate Ratio".to_string(), Some(r.debate_ratio)),
        ("High-w Hit".to_string(), Some(r.high_w_hit)),
        ("Fairness (Jain)".to_string(), r.jain_mean),
        ("Total Fidelity".to_string(), Some(r.total_fidelity)),
        ("S_total".to_string(), Some(r.s_total_raw)),
        ("S_total per case".to_string(), Some(r.s_total_per_case)),
        ("ToM MAE".to_string(), r.tom.as_ref().map(|t| t.mae)),
        ("ToM Acc±1".to_string(), r.tom.as_ref().map(|t| t.acc1)),
        ("ToM Acc±2".to_string(), r.tom.as_ref().map(|t| t.acc2)),
        ("ToM Pearson r".to_string(), r.tom.as_ref().and_then(|t| t.pearson)),
    ];
    for (size, g) in &r.by_group_size {
        rows.push((format!("DR ({size} agents)"), Some(g.debate_ratio)));
        rows.push((format!("DHR ({size} agents)"), g.debate_hit_rate));
    }
    rows
}

/// Per-metric change from `a` to `b`. Both reports must cover the same
/// scenario ids.
pub fn compare_runs(a: &MetricsReport, b: &MetricsReport) -> Result<Comparison> {
    if a.scenario_ids != b.scenario_ids {
        let only_a = a.scenario_ids.iter().filter(|id| !b.scenario_ids.contains(id)).count();
        let only_b = b.scenario_ids.iter().filter(|id| !a.scenario_ids.contains(id)).count();
        return Err(HarnessError::ScenarioMismatch(format!(
            "{only_a} only in `{}`, {only_b} only in `{}`",
            a.label, b.label
        )));
    }
    let ra = rows_for(a);
    let rb = rows_for(b);
    let mut rows: Vec<DeltaRow> = Vec::new();
    for (name, va) in &ra {
        let vb = rb.iter().find(|(n, _)| n == name).and_then(|(_, v)| *v);
        rows.push(DeltaRow::new(name.clone(), *va, vb));
    }
    for (name, vb) in &rb {
        if !ra.iter().any(|(n, _)| n == name) {
            rows.push(DeltaRow::new(name.clone(), None, *vb));
        }
    }
    Ok(Comparison {
        label_a: a.label.clone(),
        label_b: b.label.clone(),
        rows,
    })
}

impl Comparison {
    pub fn to_table(&self) -> String {
        let num = |x: Option<f64>| x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
        let width = self.rows.iter().map(|r| r.metric.chars().count()).max().unwrap_or(6).max(6);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>10}  {:>10}  {:>10}  {:>9}",
            "metric", self.label_a, self.label_b, "delta", "rel"
        );
        for r in &self.rows {
            let rel = r.relative.map_or_else(|| "n/a".to_string(), |v| format!("{:+.2}%", 100.0 * v));
            let delta = r.delta.map_or_else(|| "n/a".to_string(), |v| format!("{v:+.4}"));
            let pad = width - r.metric.chars().count() + r.metric.len();
            let _ = writeln!(out, "{:<pad$}  {:>10}  {:>10}  {:>10}  {:>9}", r.metric, num(r.a), num(r.b), delta, rel);
        }
        out
    }
}
