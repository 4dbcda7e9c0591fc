//! Shared domain types: willingness, tone bands, constraint items, personas
//! and scenarios, plus structural validation of scenarios.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCENARIO_SCHEMA: &str = "mind-scenario/1";

/// Smallest and largest group accepted by the protocol.
pub const MIN_GROUP: usize = 2;
pub const MAX_GROUP: usize = 4;

/// Willingness band a soft conflict must sit in to count toward the
/// competitive-scenario requirement.
pub const CONFLICT_W_RANGE: std::ops::RangeInclusive<u8> = 6..=8;
pub const MIN_SOFT_CONFLICTS: usize = 3;

/// How strongly an agent holds a preference, an integer in `1..=10`.
///
/// Agents never see each other's score; only the tone derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct WillingnessScore(u8);

impl WillingnessScore {
    pub const MIN: WillingnessScore = WillingnessScore(1);
    pub const MAX: WillingnessScore = WillingnessScore(10);

    pub fn new(value: i64) -> Result<Self> {
        if (1..=10).contains(&value) {
            Ok(Self(value as u8))
        } else {
            Err(Error::WillingnessRange(value))
        }
    }

    /// Clamps into `1..=10`.
    pub fn saturating(value: i64) -> Self {
        Self(value.clamp(1, 10) as u8)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = WillingnessScore> {
        (1..=10).map(WillingnessScore)
    }
}

impl TryFrom<i64> for WillingnessScore {
    type Error = Error;
    fn try_from(v: i64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WillingnessScore> for u8 {
    fn from(w: WillingnessScore) -> u8 {
        w.0
    }
}

impl fmt::Display for WillingnessScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Linguistic register an agent speaks in, ordered from indifferent to
/// deal-breaker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToneBand {
    Neutral = 0,
    Warm = 1,
    Firm = 2,
    Strict = 3,
}

impl ToneBand {
    pub const ALL: [ToneBand; 4] = [ToneBand::Neutral, ToneBand::Warm, ToneBand::Firm, ToneBand::Strict];

    pub fn level(self) -> i32 {
        self as i32
    }

    /// Band at `level`, clamped to the valid range.
    pub fn from_level(level: i32) -> ToneBand {
        ToneBand::ALL[level.clamp(0, 3) as usize]
    }

    pub fn label(self) -> &'static str {
        match self {
            ToneBand::Neutral => "Neutral",
            ToneBand::Warm => "Warm",
            ToneBand::Firm => "Firm",
            ToneBand::Strict => "Strict",
        }
    }

    /// The willingness interval mapped to this band.
    pub fn w_range(self) -> std::ops::RangeInclusive<u8> {
        match self {
            ToneBand::Neutral => 1..=3,
            ToneBand::Warm => 4..=6,
            ToneBand::Firm => 7..=8,
            ToneBand::Strict => 9..=10,
        }
    }
}

impl fmt::Display for ToneBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// 1–3 Neutral, 4–6 Warm, 7–8 Firm, 9–10 Strict.
pub fn band_of(w: WillingnessScore) -> ToneBand {
    match w.get() {
        1..=3 => ToneBand::Neutral,
        4..=6 => ToneBand::Warm,
        7..=8 => ToneBand::Firm,
        _ => ToneBand::Strict,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    /// `allowed_values` order is the value order.
    Ordinal,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintItem {
    /// `category__item`
    pub key: String,
    pub kind: DomainKind,
    pub allowed_values: Vec<String>,
    #[serde(default)]
    pub hard: bool,
}

impl ConstraintItem {
    pub fn new(key: impl Into<String>, kind: DomainKind, values: &[&str], hard: bool) -> Self {
        Self {
            key: key.into(),
            kind,
            allowed_values: values.iter().map(|v| v.to_string()).collect(),
            hard,
        }
    }

    pub fn index_of(&self, value: &str) -> Option<usize> {
        self.allowed_values.iter().position(|v| v == value)
    }

    pub fn allows(&self, value: &str) -> bool {
        self.index_of(value).is_some()
    }

    pub fn require(&self, value: &str) -> Result<usize> {
        self.index_of(value).ok_or_else(|| Error::ValueNotAllowed {
            item: self.key.clone(),
            value: value.to_string(),
        })
    }

    pub fn category(&self) -> &str {
        self.key.split_once("__").map_or(self.key.as_str(), |(c, _)| c)
    }

    pub fn item_name(&self) -> &str {
        self.key.split_once("__").map_or(self.key.as_str(), |(_, i)| i)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preference {
    pub item_key: String,
    pub value: String,
    pub w: WillingnessScore,
}

impl Preference {
    pub fn new(item_key: impl Into<String>, value: impl Into<String>, w: u8) -> Self {
        Self {
            item_key: item_key.into(),
            value: value.into(),
            w: WillingnessScore::saturating(i64::from(w)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttributeValue {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Persona {
    pub id: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, AttributeValue>,
    pub preferences: Vec<Preference>,
}

impl Persona {
    pub fn preference_for(&self, item_key: &str) -> Option<&Preference> {
        self.preferences.iter().find(|p| p.item_key == item_key)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub personas: Vec<Persona>,
    pub items: Vec<ConstraintItem>,
    pub origin: String,
    pub destination: String,
    pub days: u32,
    pub people_number: u32,
    pub budget_anchor: f64,
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    schema: String,
    #[serde(flatten)]
    scenario: Scenario,
}

impl Scenario {
    pub fn item(&self, key: &str) -> Option<&ConstraintItem> {
        self.items.iter().find(|i| i.key == key)
    }

    pub fn persona(&self, id: &str) -> Option<&Persona> {
        self.personas.iter().find(|p| p.id == id)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ScenarioFile {
            schema: SCENARIO_SCHEMA.to_string(),
            scenario: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        if file.schema != SCENARIO_SCHEMA {
            return Err(Error::Schema {
                expected: SCENARIO_SCHEMA,
                found: file.schema,
            });
        }
        Ok(file.scenario)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    PersonaCount,
    DuplicatePersona,
    DuplicateItem,
    BadItemKey,
    EmptyDomain,
    DuplicateValue,
    DanglingPreference,
    DuplicatePreference,
    MissingPreference,
    UnknownValue,
    HardConflict,
    InsufficientConflicts,
    InvalidTrip,
}

impl ViolationKind {
    pub fn code(self) -> &'static str {
        match self {
            ViolationKind::PersonaCount => "persona-count",
            ViolationKind::DuplicatePersona => "duplicate-persona",
            ViolationKind::DuplicateItem => "duplicate-item",
            ViolationKind::BadItemKey => "bad-item-key",
            ViolationKind::EmptyDomain => "empty-domain",
            ViolationKind::DuplicateValue => "duplicate-value",
            ViolationKind::DanglingPreference => "dangling-preference",
            ViolationKind::DuplicatePreference => "duplicate-preference",
            ViolationKind::MissingPreference => "missing-preference",
            ViolationKind::UnknownValue => "unknown-value",
            ViolationKind::HardConflict => "hard-conflict",
            ViolationKind::InsufficientConflicts => "insufficient-conflicts",
            ViolationKind::InvalidTrip => "invalid-trip",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub item: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub persona: Option<String>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(item) = &self.item {
            write!(f, " item={item}")?;
        }
        if let Some(p) = &self.persona {
            write!(f, " persona={p}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, item: Option<&str>, persona: Option<&str>, detail: String) {
        self.violations.push(Violation {
            kind,
            item: item.map(str::to_string),
            persona: persona.map(str::to_string),
            detail,
        });
    }
}

/// Checks group size, item domains, preference well-formedness, hard-item
/// unanimity and the soft-conflict requirement. Never fails; every problem
/// becomes a [`Violation`].
pub fn validate_scenario(s: &Scenario) -> ValidationReport {
    let mut report = ValidationReport::default();

    let n = s.personas.len();
    if !(MIN_GROUP..=MAX_GROUP).contains(&n) {
        report.push(
            ViolationKind::PersonaCount,
            None,
            None,
            format!("group has {n} personas, expected {MIN_GROUP}..={MAX_GROUP}"),
        );
    }
    if s.days == 0 || s.people_number == 0 || !(s.budget_anchor >= 0.0) {
        report.push(
            ViolationKind::InvalidTrip,
            None,
            None,
            "days and people_number must be positive, budget_anchor nonnegative".into(),
        );
    }

    let mut seen_personas = BTreeSet::new();
    for p in &s.personas {
        if !seen_personas.insert(p.id.as_str()) {
            report.push(ViolationKind::DuplicatePersona, None, Some(&p.id), "persona id repeated".into());
        }
    }

    let mut items: HashMap<&str, &ConstraintItem> = HashMap::new();
    for item in &s.items {
        if items.insert(item.key.as_str(), item).is_some() {
            report.push(ViolationKind::DuplicateItem, Some(&item.key), None, "item key repeated".into());
        }
        match item.key.split_once("__") {
            Some((c, i)) if !c.is_empty() && !i.is_empty() => {}
            _ => report.push(
                ViolationKind::BadItemKey,
                Some(&item.key),
                None,
                "key must have the form category__item".into(),
            ),
        }
        if item.allowed_values.is_empty() {
            report.push(ViolationKind::EmptyDomain, Some(&item.key), None, "no allowed values".into());
        }
        let mut values = BTreeSet::new();
        for v in &item.allowed_values {
            if !values.insert(v.as_str()) {
                report.push(ViolationKind::DuplicateValue, Some(&item.key), None, format!("`{v}` listed twice"));
            }
        }
    }

    for p in &s.personas {
        let mut keys = BTreeSet::new();
        for pref in &p.preferences {
            if !keys.insert(pref.item_key.as_str()) {
                report.push(
                    ViolationKind::DuplicatePreference,
                    Some(&pref.item_key),
                    Some(&p.id),
                    "more than one preference for the item".into(),
                );
            }
            match items.get(pref.item_key.as_str()) {
                None => report.push(
                    ViolationKind::DanglingPreference,
                    Some(&pref.item_key),
                    Some(&p.id),
                    "preference references an unknown item".into(),
                ),
                Some(item) if !item.allows(&pref.value) => report.push(
                    ViolationKind::UnknownValue,
                    Some(&pref.item_key),
                    Some(&p.id),
                    format!("`{}` is not in allowed_values", pref.value),
                ),
                Some(_) => {}
            }
        }
        for item in &s.items {
            if !keys.contains(item.key.as_str()) {
                report.push(
                    ViolationKind::MissingPreference,
                    Some(&item.key),
                    Some(&p.id),
                    "no preference for the item".into(),
                );
            }
        }
    }

    let mut qualifying = 0;
    for item in &s.items {
        let prefs: Vec<&Preference> = s.personas.iter().filter_map(|p| p.preference_for(&item.key)).collect();
        let distinct: BTreeSet<&str> = prefs.iter().map(|p| p.value.as_str()).collect();
        if item.hard {
            if distinct.len() > 1 {
                report.push(
                    ViolationKind::HardConflict,
                    Some(&item.key),
                    None,
                    format!("members disagree on a hard item: {distinct:?}"),
                );
            }
        } else if distinct.len() > 1 && prefs.iter().all(|p| CONFLICT_W_RANGE.contains(&p.w.get())) {
            // with more than one distinct value every member differs from
            // someone, so every member's w must be in band
            qualifying += 1;
        }
    }
    if qualifying < MIN_SOFT_CONFLICTS {
        report.push(
            ViolationKind::InsufficientConflicts,
            None,
            None,
            format!("{qualifying} soft conflicts with 6 <= w <= 8, need at least {MIN_SOFT_CONFLICTS}"),
        );
    }

    report
}

/// Soft items on which at least two members hold different values, in item
/// order.
pub fn soft_conflicts(s: &Scenario) -> Result<Vec<String>> {
    for p in &s.personas {
        for pref in &p.preferences {
            if s.item(&pref.item_key).is_none() {
                return Err(Error::DanglingPreference {
                    persona: p.id.clone(),
                    item: pref.item_key.clone(),
                });
            }
        }
    }
    Ok(s.items
        .iter()
        .filter(|item| !item.hard)
        .filter(|item| {
            let mut values = s.personas.iter().filter_map(|p| p.preference_for(&item.key)).map(|p| &p.value);
            match values.next() {
                Some(first) => values.any(|v| v != first),
                None => false,
            }
        })
        .map(|item| item.key.clone())
        .collect())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn item(key: &str, kind: DomainKind, values: &[&str], hard: bool) -> ConstraintItem {
        ConstraintItem::new(key, kind, values, hard)
    }

    pub fn persona(id: &str, prefs: &[(&str, &str, u8)]) -> Persona {
        Persona {
            id: id.into(),
            attributes: BTreeMap::new(),
            preferences: prefs.iter().map(|(k, v, w)| Preference::new(*k, *v, *w)).collect(),
        }
    }

    pub fn scenario(personas: Vec<Persona>, items: Vec<ConstraintItem>) -> Scenario {
        Scenario {
            id: "fixture".into(),
            people_number: personas.len() as u32,
            personas,
            items,
            origin: "Seattle".into(),
            destination: "Denver".into(),
            days: 3,
            budget_anchor: 1800.0,
        }
    }

    /// Three personas, two hard items, three qualifying conflicts and one
    /// soft item everyone agrees on.
    pub fn compliant_trio() -> Scenario {
        let items = vec![
            item("trip__dates", DomainKind::Categorical, &["Mar 1-3", "Mar 8-10"], true),
            item("trip__departure", DomainKind::Categorical, &["Seattle", "Portland"], true),
            item("restaurant__ambiance", DomainKind::Categorical, &["Casual", "Fine dining", "No preference"], false),
            item("restaurant__rating", DomainKind::Ordinal, &["3.0", "3.5", "4.0"], false),
            item("accommodation__type", DomainKind::Categorical, &["Hotel", "Hostel", "Apartment"], false),
            item("activity__pace", DomainKind::Ordinal, &["Slow", "Balanced", "Packed"], false),
        ];
        let a = persona(
            "A",
            &[
                ("trip__dates", "Mar 1-3", 10),
                ("trip__departure", "Seattle", 9),
                ("restaurant__ambiance", "Casual", 6),
                ("restaurant__rating", "4.0", 7),
                ("accommodation__type", "Hotel", 8),
                ("activity__pace", "Balanced", 3),
            ],
        );
        let b = persona(
            "B",
            &[
                ("trip__dates", "Mar 1-3", 9),
                ("trip__departure", "Seattle", 10),
                ("restaurant__ambiance", "Fine dining", 7),
                ("restaurant__rating", "3.5", 6),
                ("accommodation__type", "Hotel", 6),
                ("activity__pace", "Balanced", 5),
            ],
        );
        let c = persona(
            "C",
            &[
                ("trip__dates", "Mar 1-3", 8),
                ("trip__departure", "Seattle", 7),
                ("restaurant__ambiance", "Casual", 8),
                ("restaurant__rating", "3.0", 8),
                ("accommodation__type", "Apartment", 7),
                ("activity__pace", "Balanced", 2),
            ],
        );
        scenario(vec![a, b, c], items)
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    fn w(v: i64) -> WillingnessScore {
        WillingnessScore::new(v).unwrap()
    }

    #[test]
    fn band_examples() {
        assert_eq!(band_of(w(10)), ToneBand::Strict);
        assert_eq!(band_of(w(5)), ToneBand::Warm);
        assert_eq!(band_of(w(3)), ToneBand::Neutral);
    }

    #[test]
    fn band_is_monotone_and_matches_ranges() {
        let bands: Vec<ToneBand> = WillingnessScore::all().map(band_of).collect();
        assert!(bands.windows(2).all(|p| p[0] <= p[1]));
        for score in WillingnessScore::all() {
            assert!(band_of(score).w_range().contains(&score.get()));
        }
    }

    #[test]
    fn willingness_rejects_out_of_range() {
        assert!(WillingnessScore::new(0).is_err());
        assert!(WillingnessScore::new(11).is_err());
        assert!(serde_json::from_str::<WillingnessScore>("11").is_err());
        assert_eq!(serde_json::from_str::<WillingnessScore>("7").unwrap(), w(7));
    }

    /// Re-evaluates each filtering rule directly from the fixture data, without
    /// going through `validate_scenario`.
    fn independent_rule_check(s: &Scenario) -> (bool, usize) {
        let mut hard_ok = true;
        let mut conflicts = 0;
        for item in &s.items {
            let values: Vec<(&str, u8)> = s
                .personas
                .iter()
                .map(|p| {
                    let pref = p.preferences.iter().find(|x| x.item_key == item.key).unwrap();
                    (pref.value.as_str(), pref.w.get())
                })
                .collect();
            let mut any_diff = false;
            for i in 0..values.len() {
                for j in i + 1..values.len() {
                    if values[i].0 != values[j].0 {
                        any_diff = true;
                    }
                }
            }
            if item.hard && any_diff {
                hard_ok = false;
            }
            if !item.hard && any_diff && values.iter().all(|(_, w)| (6..=8).contains(w)) {
                conflicts += 1;
            }
        }
        (hard_ok, conflicts)
    }

    #[test]
    fn compliant_fixture_has_empty_report() {
        let s = compliant_trio();
        assert_eq!(independent_rule_check(&s), (true, 3));
        let report = validate_scenario(&s);
        assert!(report.is_valid(), "{:?}", report.violations);
    }

    #[test]
    fn hard_conflict_reported() {
        let mut s = compliant_trio();
        s.personas[1].preferences[0].value = "Mar 8-10".into();
        let report = validate_scenario(&s);
        assert!(report.has(ViolationKind::HardConflict));
        let v = report.violations.iter().find(|v| v.kind == ViolationKind::HardConflict).unwrap();
        assert_eq!(v.item.as_deref(), Some("trip__dates"));
    }

    #[test]
    fn two_conflicts_are_insufficient() {
        let mut s = compliant_trio();
        // push one conflict out of the 6..=8 band
        s.personas[0].preferences[4].w = w(9);
        let report = validate_scenario(&s);
        assert_eq!(report.violations.len(), 1);
        assert!(report.has(ViolationKind::InsufficientConflicts));
    }

    #[test]
    fn malformed_values_are_reported_not_thrown() {
        let mut s = compliant_trio();
        s.personas[2].preferences[3].value = "3.7".into();
        s.personas[0].preferences.push(Preference::new("ghost__item", "x", 5));
        let report = validate_scenario(&s);
        assert!(report.has(ViolationKind::UnknownValue));
        assert!(report.has(ViolationKind::DanglingPreference));
    }

    #[test]
    fn structural_violations() {
        let mut s = compliant_trio();
        s.personas.truncate(1);
        s.items[2].allowed_values.push("Casual".into());
        s.items.push(item("nokey", DomainKind::Categorical, &[], false));
        let report = validate_scenario(&s);
        for kind in [
            ViolationKind::PersonaCount,
            ViolationKind::DuplicateValue,
            ViolationKind::BadItemKey,
            ViolationKind::EmptyDomain,
            ViolationKind::MissingPreference,
        ] {
            assert!(report.has(kind), "missing {kind}");
        }
    }

    #[test]
    fn soft_conflicts_examples() {
        let unanimous = scenario(
            vec![persona("A", &[("x__y", "a", 5)]), persona("B", &[("x__y", "a", 7)])],
            vec![item("x__y", DomainKind::Categorical, &["a", "b"], false)],
        );
        assert!(soft_conflicts(&unanimous).unwrap().is_empty());

        let ambiance = scenario(
            vec![
                persona("P", &[("restaurant__ambiance", "No preference", 2)]),
                persona("A", &[("restaurant__ambiance", "Casual", 6)]),
            ],
            vec![item(
                "restaurant__ambiance",
                DomainKind::Categorical,
                &["Casual", "No preference"],
                false,
            )],
        );
        assert_eq!(soft_conflicts(&ambiance).unwrap(), vec!["restaurant__ambiance"]);

        let mut dangling = ambiance.clone();
        dangling.personas[0].preferences.push(Preference::new("nope__x", "a", 3));
        assert!(matches!(soft_conflicts(&dangling), Err(Error::DanglingPreference { .. })));
    }

    #[test]
    fn soft_conflicts_planted_five_items() {
        let keys = ["a__1", "a__2", "a__3", "a__4", "a__5"];
        let items: Vec<ConstraintItem> = keys
            .iter()
            .map(|k| item(k, DomainKind::Categorical, &["x", "y", "z"], false))
            .collect();
        let rows = [
            ["x", "x", "y", "x", "z"],
            ["x", "y", "y", "x", "x"],
            ["x", "x", "y", "z", "x"],
        ];
        let personas: Vec<Persona> = rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let prefs: Vec<(&str, &str, u8)> = keys.iter().zip(row.iter()).map(|(k, v)| (*k, *v, 7)).collect();
                persona(&format!("p{i}"), &prefs)
            })
            .collect();
        let s = scenario(personas, items);

        // pairwise oracle
        let expected: Vec<String> = keys
            .iter()
            .enumerate()
            .filter(|(col, _)| {
                (0..rows.len()).any(|i| (0..rows.len()).any(|j| i != j && rows[i][*col] != rows[j][*col]))
            })
            .map(|(_, k)| k.to_string())
            .collect();
        assert_eq!(expected, vec!["a__2", "a__4", "a__5"]);
        assert_eq!(soft_conflicts(&s).unwrap(), expected);
    }

    #[test]
    fn validated_scenarios_have_three_conflicts() {
        let s = compliant_trio();
        assert!(validate_scenario(&s).is_valid());
        assert!(soft_conflicts(&s).unwrap().len() >= MIN_SOFT_CONFLICTS);
    }

    fn arb_scenario() -> impl Strategy<Value = Scenario> {
        let values = ["v0", "v1", "v2"];
        (2usize..=4, 1usize..=5).prop_flat_map(move |(n, m)| {
            proptest::collection::vec(proptest::collection::vec((0usize..3, 1u8..=10), m), n).prop_map(
                move |grid| {
                    let items: Vec<ConstraintItem> = (0..m)
                        .map(|j| {
                            item(
                                &format!("cat__i{j}"),
                                if j % 2 == 0 { DomainKind::Ordinal } else { DomainKind::Categorical },
                                &values,
                                j == 0,
                            )
                        })
                        .collect();
                    let personas = grid
                        .iter()
                        .enumerate()
                        .map(|(i, row)| Persona {
                            id: format!("p{i}"),
                            attributes: BTreeMap::from([
                                ("age".to_string(), AttributeValue::Number(20.5 + i as f64)),
                                ("style".to_string(), AttributeValue::Text(format!("s{i}"))),
                            ]),
                            preferences: row
                                .iter()
                                .enumerate()
                                .map(|(j, (v, w))| Preference::new(format!("cat__i{j}"), values[*v], *w))
                                .collect(),
                        })
                        .collect();
                    scenario(personas, items)
                },
            )
        })
    }

    proptest! {
        #[test]
        fn scenario_json_round_trip(s in arb_scenario()) {
            let text = s.to_json().unwrap();
            prop_assert_eq!(Scenario::from_json(&text).unwrap(), s);
        }

        #[test]
        fn valid_implies_conflicts_and_unanimous_hard(s in arb_scenario()) {
            if validate_scenario(&s).is_valid() {
                prop_assert!(soft_conflicts(&s).unwrap().len() >= MIN_SOFT_CONFLICTS);
                for item in s.items.iter().filter(|i| i.hard) {
                    let first = &s.personas[0].preference_for(&item.key).unwrap().value;
                    prop_assert!(s.personas.iter().all(|p| &p.preference_for(&item.key).unwrap().value == first));
                }
            }
        }
    }

    #[test]
    fn schema_is_checked() {
        let text = compliant_trio().to_json().unwrap().replace(SCENARIO_SCHEMA, "mind-scenario/0");
        assert!(matches!(Scenario::from_json(&text), Err(Error::Schema { .. })));
    }
}
