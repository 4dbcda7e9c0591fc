#![allow(dead_code)]

use std::path::{Path, PathBuf};

use mind_core::domain::{ConstraintItem, DomainKind, Persona, Preference, Scenario};
use mind_harness::store;
use mind_harness::RunConfig;

pub fn persona(id: &str, prefs: &[(&str, &str, u8)]) -> Persona {
    Persona {
        id: id.into(),
        attributes: Default::default(),
        preferences: prefs.iter().map(|(k, v, w)| Preference::new(*k, *v, *w)).collect(),
    }
}

pub fn items() -> Vec<ConstraintItem> {
    vec![
        ConstraintItem::new("trip__dates", DomainKind::Categorical, &["Mar 1-3", "Mar 8-10"], true),
        ConstraintItem::new("restaurant__ambiance", DomainKind::Categorical, &["Casual", "Fine dining"], false),
        ConstraintItem::new("activity__pace", DomainKind::Ordinal, &["Slow", "Balanced", "Packed"], false),
    ]
}

fn scenario(id: &str, personas: Vec<Persona>) -> Scenario {
    Scenario {
        id: id.into(),
        people_number: personas.len() as u32,
        personas,
        items: items(),
        origin: "Seattle".into(),
        destination: "Denver".into(),
        days: 3,
        budget_anchor: 1800.0,
    }
}

/// Everyone already wants the same thing.
pub fn unanimous(id: &str) -> Scenario {
    let prefs = [("trip__dates", "Mar 1-3", 10), ("restaurant__ambiance", "Casual", 5), ("activity__pace", "Slow", 3)];
    scenario(id, vec![persona("A", &prefs), persona("B", &prefs), persona("C", &prefs)])
}

/// Real disagreement on both soft items.
pub fn contested(id: &str) -> Scenario {
    scenario(
        id,
        vec![
            persona("A", &[("trip__dates", "Mar 8-10", 9), ("restaurant__ambiance", "Casual", 7), ("activity__pace", "Packed", 8)]),
            persona("B", &[("trip__dates", "Mar 8-10", 9), ("restaurant__ambiance", "Fine dining", 6), ("activity__pace", "Slow", 4)]),
            persona("C", &[("trip__dates", "Mar 8-10", 8), ("restaurant__ambiance", "Casual", 3), ("activity__pace", "Balanced", 6)]),
        ],
    )
}

pub fn write_set(dir: &Path, scenarios: &[Scenario]) -> PathBuf {
    let path = dir.join("scenarios.jsonl");
    store::write_scenarios(&path, scenarios).unwrap();
    path
}

pub fn config(scenarios: PathBuf, out: PathBuf) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.paths.scenarios = scenarios;
    cfg.paths.out = out;
    cfg
}

pub fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}
