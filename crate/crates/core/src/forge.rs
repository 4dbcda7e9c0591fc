//! Scenario construction from a persona pool.
//!
//! Three steps: pick a diverse subset of personas by maximal marginal
//! relevance, turn each persona's MoSCoW label on an item into a willingness
//! score, and draw seeded groups that pass [`validate_scenario`].

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    validate_scenario, AttributeValue, ConstraintItem, DomainKind, Persona, Preference, Scenario, WillingnessScore,
    MAX_GROUP, MIN_GROUP,
};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

pub const POOL_SCHEMA: &str = "mind-pool/1";
pub const DEFAULT_LAMBDA: f64 = 0.7;
pub const DEFAULT_ATTEMPT_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Moscow {
    Must,
    Should,
    Could,
    Wont,
}

impl Moscow {
    pub const ALL: [Moscow; 4] = [Moscow::Must, Moscow::Should, Moscow::Could, Moscow::Wont];

    /// Willingness band the label maps onto.
    pub fn band(self) -> std::ops::RangeInclusive<u8> {
        match self {
            Moscow::Must => 9..=10,
            Moscow::Should => 6..=8,
            Moscow::Could => 4..=5,
            Moscow::Wont => 1..=3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoscowLabel {
    pub label: Moscow,
    pub salience: f64,
}

impl MoscowLabel {
    pub fn new(label: Moscow, salience: f64) -> Result<Self> {
        if !salience.is_finite() {
            return Err(Error::InvalidConfig(format!("salience must be finite, got {salience}")));
        }
        Ok(Self {
            label,
            salience: salience.clamp(0.0, 1.0),
        })
    }
}

pub fn derive_willingness(m: MoscowLabel) -> WillingnessScore {
    let s = m.salience.clamp(0.0, 1.0);
    let (base, scale) = match m.label {
        Moscow::Must => (9.0, 1.0),
        Moscow::Should => (6.0, 2.0),
        Moscow::Could => (4.0, 1.0),
        Moscow::Wont => (1.0, 2.0),
    };
    let band = m.label.band();
    let w = (base + (scale * s).round()).clamp(f64::from(*band.start()), f64::from(*band.end()));
    WillingnessScore::saturating(w as i64)
}

/// A persona's stance on one item: the value it wants and how much it cares.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolChoice {
    pub value: String,
    pub label: Moscow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePersona {
    pub id: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, AttributeValue>,
    /// Keyed by item key.
    pub choices: BTreeMap<String, PoolChoice>,
}

impl CandidatePersona {
    /// Numeric attributes in key order.
    pub fn features(&self) -> Vec<(&str, f64)> {
        self.attributes
            .iter()
            .filter_map(|(k, v)| match v {
                AttributeValue::Number(x) => Some((k.as_str(), *x)),
                AttributeValue::Text(_) => None,
            })
            .collect()
    }

    fn number(&self, key: &str) -> Option<f64> {
        match self.attributes.get(key) {
            Some(AttributeValue::Number(x)) if x.is_finite() => Some(*x),
            _ => None,
        }
    }

    /// Salience for an item: the numeric attribute named after the item's
    /// category, else `intensity`, else 0.5.
    pub fn salience(&self, item: &ConstraintItem) -> f64 {
        self.number(item.category())
            .or_else(|| self.number("intensity"))
            .unwrap_or(0.5)
            .clamp(0.0, 1.0)
    }

    pub fn preference(&self, item: &ConstraintItem) -> Option<Preference> {
        let c = self.choices.get(&item.key)?;
        let m = MoscowLabel::new(c.label, self.salience(item)).ok()?;
        Some(Preference {
            item_key: item.key.clone(),
            value: c.value.clone(),
            w: derive_willingness(m),
        })
    }

    pub fn to_persona(&self, items: &[ConstraintItem]) -> Persona {
        Persona {
            id: self.id.clone(),
            attributes: self.attributes.clone(),
            preferences: items.iter().filter_map(|i| self.preference(i)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripInfo {
    pub origin: String,
    pub destination: String,
    pub days: u32,
    pub budget_anchor: f64,
}

impl Default for TripInfo {
    fn default() -> Self {
        Self {
            origin: "Seattle".into(),
            destination: "Denver".into(),
            days: 3,
            budget_anchor: 1800.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub personas: Vec<CandidatePersona>,
    #[serde(default)]
    pub trip: TripInfo,
}

#[derive(Serialize, Deserialize)]
struct PoolFile {
    schema: String,
    #[serde(flatten)]
    pool: CandidatePool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    items: Vec<ConstraintItem>,
}

impl CandidatePool {
    /// Feature vectors for every persona; all must share the same attribute
    /// keys.
    pub fn feature_vectors(&self) -> Result<Vec<Vec<f64>>> {
        let first = self.personas.first().ok_or(Error::EmptyInput("candidate pool is empty"))?;
        let keys: Vec<&str> = first.features().iter().map(|(k, _)| *k).collect();
        if keys.is_empty() {
            return Err(Error::DegenerateFeature(format!("persona `{}` has no numeric attributes", first.id)));
        }
        self.personas
            .iter()
            .map(|p| {
                let f = p.features();
                if f.len() != keys.len() || f.iter().zip(&keys).any(|((k, _), want)| k != want) {
                    return Err(Error::FeatureDimension {
                        persona: p.id.clone(),
                        got: f.len(),
                        expected: keys.len(),
                    });
                }
                Ok(f.into_iter().map(|(_, x)| x).collect())
            })
            .collect()
    }

    pub fn feature_dim(&self) -> Result<usize> {
        Ok(self.feature_vectors()?.first().map_or(0, Vec::len))
    }

    pub fn centroid(&self) -> Result<Vec<f64>> {
        let vs = self.feature_vectors()?;
        let n = vs.len() as f64;
        let mut c = vec![0.0; vs[0].len()];
        for v in &vs {
            for (ci, x) in c.iter_mut().zip(v) {
                *ci += x / n;
            }
        }
        Ok(c)
    }

    pub fn subset(&self, ids: &[String]) -> Result<CandidatePool> {
        let personas = ids
            .iter()
            .map(|id| {
                self.personas
                    .iter()
                    .find(|p| &p.id == id)
                    .cloned()
                    .ok_or_else(|| Error::InvalidSelection(format!("unknown persona `{id}`")))
            })
            .collect::<Result<_>>()?;
        Ok(CandidatePool {
            personas,
            trip: self.trip.clone(),
        })
    }

    /// Serializes the pool, optionally bundling the item catalog.
    pub fn to_json(&self, items: &[ConstraintItem]) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PoolFile {
            schema: POOL_SCHEMA.into(),
            pool: self.clone(),
            items: items.to_vec(),
        })?)
    }

    /// Returns the pool and any bundled items.
    pub fn from_json(text: &str) -> Result<(Self, Vec<ConstraintItem>)> {
        let f: PoolFile = serde_json::from_str(text)?;
        if f.schema != POOL_SCHEMA {
            return Err(Error::Schema {
                expected: POOL_SCHEMA,
                found: f.schema,
            });
        }
        Ok((f.pool, f.items))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot / (norm(a) * norm(b))
}

/// Greedy MMR over raw vectors, returning indices in selection order.
///
/// At each step picks the candidate maximizing
/// `lambda * sim(p, query) - (1 - lambda) * max_s sim(p, s)`; the redundancy
/// term is 0 while nothing is selected. Ties go to the lower index.
pub fn mmr_order(vectors: &[Vec<f64>], query: &[f64], k: usize, lambda: f64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidConfig(format!("lambda must be in [0,1], got {lambda}")));
    }
    if k == 0 || k > vectors.len() {
        return Err(Error::InvalidSelection(format!("k = {k} with {} candidates", vectors.len())));
    }
    if !(norm(query) > 0.0) {
        return Err(Error::DegenerateFeature("query vector is zero".into()));
    }
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != query.len() {
            return Err(Error::FeatureDimension {
                persona: i.to_string(),
                got: v.len(),
                expected: query.len(),
            });
        }
        if !(norm(v) > 0.0) {
            return Err(Error::DegenerateFeature(format!("candidate {i} is a zero vector")));
        }
    }

    let relevance: Vec<f64> = vectors.iter().map(|v| cosine(v, query)).collect();
    // running max similarity to the selected set
    let mut redundancy: Vec<Option<f64>> = vec![None; vectors.len()];
    let mut taken = vec![false; vectors.len()];
    let mut order = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..vectors.len()).filter(|i| !taken[*i]) {
            let score = lambda * relevance[i] - (1.0 - lambda) * redundancy[i].unwrap_or(0.0);
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((i, score));
            }
        }
        let (pick, _) = best.expect("k <= candidates");
        taken[pick] = true;
        order.push(pick);
        for (i, r) in redundancy.iter_mut().enumerate() {
            let s = cosine(&vectors[i], &vectors[pick]);
            *r = Some(r.map_or(s, |cur| cur.max(s)));
        }
    }
    Ok(order)
}

/// MMR selection of `k` persona ids. `query` defaults to the pool centroid.
pub fn mmr_select(pool: &CandidatePool, query: Option<&[f64]>, k: usize, lambda: f64) -> Result<Vec<String>> {
    let vectors = pool.feature_vectors()?;
    let centroid;
    let query = match query {
        Some(q) => q,
        None => {
            centroid = pool.centroid()?;
            &centroid
        }
    };
    Ok(mmr_order(&vectors, query, k, lambda)?
        .into_iter()
        .map(|i| pool.personas[i].id.clone())
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForgeDiagnostics {
    pub attempts: usize,
    /// Draws that repeated an already-tried subset.
    pub duplicates: usize,
    /// Rejected subsets counted once per violation code they triggered.
    pub rejections: BTreeMap<String, usize>,
    /// Every distinct subset was tried before `max_groups` was reached.
    pub exhausted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForgeResult {
    pub scenarios: Vec<Scenario>,
    pub diagnostics: ForgeDiagnostics,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

pub fn build_scenario(pool: &CandidatePool, members: &[usize], items: &[ConstraintItem]) -> Scenario {
    let personas: Vec<Persona> = members.iter().map(|i| pool.personas[*i].to_persona(items)).collect();
    let id = format!(
        "g{}-{}",
        members.len(),
        personas.iter().map(|p| p.id.as_str()).collect::<Vec<_>>().join("+")
    );
    Scenario {
        id,
        people_number: personas.len() as u32,
        personas,
        items: items.to_vec(),
        origin: pool.trip.origin.clone(),
        destination: pool.trip.destination.clone(),
        days: pool.trip.days,
        budget_anchor: pool.trip.budget_anchor,
    }
}

/// Draws seeded random subsets of `group_size` personas and keeps those that
/// validate, until `max_groups` are found, every subset has been tried, or
/// `attempt_cap` draws pass without a new acceptance.
pub fn form_groups_capped(
    pool: &CandidatePool,
    group_size: usize,
    items: &[ConstraintItem],
    max_groups: usize,
    seed: u64,
    attempt_cap: usize,
) -> Result<ForgeResult> {
    if !(MIN_GROUP..=MAX_GROUP).contains(&group_size) {
        return Err(Error::InvalidConfig(format!(
            "group size {group_size} outside {MIN_GROUP}..={MAX_GROUP}"
        )));
    }
    let n = pool.personas.len();
    if n < group_size {
        return Err(Error::InvalidSelection(format!("pool of {n} cannot form groups of {group_size}")));
    }
    let total = binomial(n, group_size);
    let mut rng = rng_from_seed(derive_seed(seed, &format!("forge/{group_size}")));
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut diag = ForgeDiagnostics::default();
    let mut scenarios = Vec::new();

    'groups: while scenarios.len() < max_groups {
        let mut since_accept = 0;
        loop {
            if seen.len() as u128 == total {
                diag.exhausted = true;
                break 'groups;
            }
            if since_accept == attempt_cap {
                break 'groups;
            }
            since_accept += 1;
            diag.attempts += 1;
            let mut members = sample(&mut rng, n, group_size).into_vec();
            members.sort_unstable();
            if !seen.insert(members.clone()) {
                diag.duplicates += 1;
                continue;
            }
            let s = build_scenario(pool, &members, items);
            let report = validate_scenario(&s);
            if report.is_valid() {
                scenarios.push(s);
                continue 'groups;
            }
            let codes: BTreeSet<&str> = report.violations.iter().map(|v| v.kind.code()).collect();
            for c in codes {
                *diag.rejections.entry(c.to_string()).or_default() += 1;
            }
        }
    }
    Ok(ForgeResult {
        scenarios,
        diagnostics: diag,
    })
}

pub fn form_groups(
    pool: &CandidatePool,
    group_size: usize,
    items: &[ConstraintItem],
    max_groups: usize,
    seed: u64,
) -> Result<ForgeResult> {
    form_groups_capped(pool, group_size, items, max_groups, seed, DEFAULT_ATTEMPT_CAP)
}

/// A small travel-planning item catalog: two hard logistics items and eight
/// negotiable ones.
pub fn default_items() -> Vec<ConstraintItem> {
    use DomainKind::*;
    vec![
        ConstraintItem::new("trip__dates", Categorical, &["Mar 6-8", "Mar 13-15", "Mar 20-22"], true),
        ConstraintItem::new("trip__departure", Categorical, &["Seattle", "Portland"], true),
        ConstraintItem::new("restaurant__ambiance", Categorical, &["Casual", "Fine dining", "Lively", "No preference"], false),
        ConstraintItem::new("restaurant__rating", Ordinal, &["3.0+", "3.5+", "4.0+", "4.5+"], false),
        ConstraintItem::new("restaurant__price", Categorical, &["Budget", "Moderate", "Upscale"], false),
        ConstraintItem::new("accommodation__type", Categorical, &["Hotel", "Hostel", "Apartment", "Cabin"], false),
        ConstraintItem::new("accommodation__rating", Ordinal, &["3.0+", "3.5+", "3.8+", "4.0+", "4.5+"], false),
        ConstraintItem::new("activity__pace", Ordinal, &["Slow", "Relaxed", "Balanced", "Busy", "Packed"], false),
        ConstraintItem::new("activity__focus", Categorical, &["Outdoors", "Museums", "Food", "Nightlife"], false),
        ConstraintItem::new("transport__mode", Categorical, &["Rental car", "Transit", "Rideshare"], false),
    ]
}

/// Seeded synthetic pool over `items`. Hard items get one shared value so
/// that groups can only be rejected on soft-conflict grounds; soft labels
/// lean toward Should.
pub fn synthetic_pool(n: usize, items: &[ConstraintItem], seed: u64) -> CandidatePool {
    let mut rng = rng_from_seed(derive_seed(seed, "synthetic-pool"));
    let categories: BTreeSet<&str> = items.iter().map(|i| i.category()).collect();
    let personas = (0..n)
        .map(|i| {
            let mut attributes = BTreeMap::new();
            attributes.insert("age".to_string(), AttributeValue::Number(f64::from(rng.gen_range(21..=70u8))));
            attributes.insert("intensity".to_string(), AttributeValue::Number(rng.gen::<f64>()));
            for c in &categories {
                attributes.insert((*c).to_string(), AttributeValue::Number(rng.gen::<f64>()));
            }
            let choices = items
                .iter()
                .map(|item| {
                    let value = if item.hard {
                        item.allowed_values[0].clone()
                    } else {
                        item.allowed_values[rng.gen_range(0..item.allowed_values.len())].clone()
                    };
                    let label = match rng.gen_range(0..10u8) {
                        0 => Moscow::Must,
                        1..=6 => Moscow::Should,
                        7 | 8 => Moscow::Could,
                        _ => Moscow::Wont,
                    };
                    (item.key.clone(), PoolChoice { value, label })
                })
                .collect();
            CandidatePersona {
                id: format!("P{i:03}"),
                attributes,
                choices,
            }
        })
        .collect();
    CandidatePool {
        personas,
        trip: TripInfo::default(),
    }
}
