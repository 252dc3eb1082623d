use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::dataset::Dataset;
use crate::io::read_csv;
use crate::model::{snapshot_at, validate_history, DataModel, EnrichedSchema};
use crate::preparation::normalize_schema;
use crate::profiling::{extract_update_transactions, mine_change_model, mine_update_dependencies, profile_dataset, ProfilingOptions};
use crate::rng::stream;

const CITIES: [(&str, &str); 5] =
    [("10115", "Berlin"), ("02134", "Boston"), ("28001", "Madrid"), ("75001", "Paris"), ("00118", "Rome")];
const NAMES: [&str; 8] = ["Anna", "John", "Maria", "Peter", "Laura", "James", "Sofia", "Lukas"];

/// A synthetic customer table: unique id, zip -> city, names, numbers, dates.
fn customers(n: usize, seed: u64) -> String {
    let mut rng = stream(seed, &[99]);
    let mut out = String::from("id,first,zip,city,salary,joined\n");
    for i in 0..n {
        let (zip, city) = CITIES[rng.random_range(0..CITIES.len())];
        out.push_str(&format!(
            "C{:05},{},{zip},{city},{},{}-{:02}-{:02}\n",
            i + 1,
            NAMES[rng.random_range(0..NAMES.len())],
            rng.random_range(20..90) * 1000,
            rng.random_range(1990..2020),
            rng.random_range(1..13),
            rng.random_range(1..29)
        ));
    }
    out
}

fn prepare(csv: &str) -> PreparedDataset {
    let ds = read_csv(csv.as_bytes()).unwrap();
    let opts = ProfilingOptions::default();
    let report = profile_dataset(&ds, &opts);
    normalize_schema(&ds, &report.profile, &opts)
}

fn params(horizon: u64, vf: f64, seed: u64) -> HistoryParams {
    HistoryParams { horizon: Timestamp(horizon), volume_factor: vf, seed }
}

fn run(p: &PreparedDataset, cm: &ChangeModel, rules: &[UpdateRule], hp: HistoryParams) -> DataHistory {
    generate_history(p, cm, rules, &p.schema.constraints, hp).unwrap().0
}

fn serialized(h: &DataHistory) -> Vec<u8> {
    let mut buf = Vec::new();
    write_history(&mut buf, h).unwrap();
    buf
}

fn has_constraint(s: &EnrichedSchema, f: impl Fn(&Constraint) -> bool) -> bool {
    s.constraints.iter().any(f)
}

#[test]
fn fixture_has_all_constraint_kinds() {
    let p = prepare(&customers(200, 1));
    let s = &p.schema;
    assert!(has_constraint(s, |c| matches!(c, Constraint::Unique { paths } if paths == &vec![AttributePath::key("id")])));
    assert!(has_constraint(s, |c| matches!(c, Constraint::TemporalUnique { .. })));
    assert!(has_constraint(s, |c| matches!(c, Constraint::FunctionalDependency { lhs, rhs }
        if lhs == &vec![AttributePath::key("zip")] && rhs.contains(&AttributePath::key("city")))));
}

#[test]
fn zero_horizon_is_the_snapshot() {
    let p = prepare(&customers(50, 2));
    let h = run(&p, &p.schema.temporal, &[], params(0, 3.0, 7));
    assert_eq!(h.len(), 50);
    for e in h.entities() {
        assert_eq!(e.deleted_at, None);
        assert!(e.versions.iter().all(|v| v.len() == 1));
        assert_eq!(e.row_at(Timestamp::ZERO), p.data.rows[e.id.0 as usize]);
    }
    assert!(world_events(&h).is_empty());
}

#[test]
fn initial_snapshot_equals_input() {
    let p = prepare(&customers(100, 3));
    let h = run(&p, &p.schema.temporal, &[], params(1000, 2.0, 1));
    let expected: Vec<_> = p.data.to_documents();
    let snap: Vec<_> = snapshot_at(&h, Timestamp::ZERO).into_iter().map(|(_, d)| d).collect();
    assert_eq!(snap, expected);
}

#[test]
fn unique_keys_survive_many_inserts() {
    let p = prepare(&customers(1000, 4));
    let mut cm = p.schema.temporal.clone();
    cm.insert_rate = 0.5;
    let g = HistoryGenerator::new(&p, &cm, &[], &p.schema.constraints, params(1000, 1.0, 5)).unwrap();
    assert_eq!(g.insert_count(), 500);
    let h = run(&p, &cm, &[], params(1000, 1.0, 5));
    assert_eq!(h.len(), 1500);
    h.check_structure().unwrap();
    assert_eq!(validate_history(&h, &p.schema), vec![]);
}

#[test]
fn volume_factor_scales_entity_count() {
    let p = prepare(&customers(300, 5));
    let mut cm = p.schema.temporal.clone();
    cm.insert_rate = 0.0;
    let g = HistoryGenerator::new(&p, &cm, &[], &p.schema.constraints, params(100, 4.0, 1)).unwrap();
    assert_eq!(g.entity_count(), 1200);
    cm.delete_rate = 0.0;
    let h = run(&p, &cm, &[], params(100, 0.5, 1));
    let alive = h.entities().filter(|e| e.is_alive(Timestamp(100))).count();
    assert!((120..=180).contains(&alive), "{alive}");
}

#[test]
fn generation_is_deterministic_and_partition_independent() {
    let p = prepare(&customers(400, 6));
    let hp = params(1000, 1.5, 42);
    let a = serialized(&run(&p, &p.schema.temporal, &[], hp.clone()));
    let b = serialized(&run(&p, &p.schema.temporal, &[], hp.clone()));
    assert_eq!(a, b);
    let g = HistoryGenerator::new(&p, &p.schema.temporal, &[], &p.schema.constraints, hp).unwrap();
    let mut parts = DataHistory::new(g.paths().to_vec());
    for range in [0..7, 7..350, 350..g.entity_count()] {
        g.generate_range(range).0.into_iter().for_each(|e| parts.insert(e));
    }
    assert_eq!(serialized(&parts), a);
}

#[test]
fn dependencies_hold_through_updates() {
    let p = prepare(&customers(300, 7));
    let mut cm = p.schema.temporal.clone();
    for c in cm.paths.values_mut() {
        c.update_rate = 5.0;
    }
    let h = run(&p, &cm, &[], params(1000, 1.2, 3));
    let zip = h.path_index(&AttributePath::key("zip")).unwrap();
    let zips: usize = h.entities().map(|e| e.versions[zip].len() - 1).sum();
    assert!(zips > 500, "{zips}");
    assert_eq!(validate_history(&h, &p.schema), vec![]);
}

#[test]
fn update_rates_match_the_change_model() {
    let p = prepare(&customers(2000, 8));
    let mut cm = p.schema.temporal.clone();
    let rates = [("first", 2.0), ("salary", 3.0), ("joined", 1.0), ("id", 1.5)];
    for (path, r) in rates {
        cm.paths.get_mut(&AttributePath::key(path)).unwrap().update_rate = r;
    }
    let horizon = 1000;
    let h = run(&p, &cm, &[], params(horizon, 1.0, 9));
    let mined = mine_change_model(&h, Timestamp(horizon));
    for (path, r) in rates {
        let observed = mined.paths[&AttributePath::key(path)].update_rate;
        assert!((observed - r).abs() <= 0.2 * r, "{path}: {observed} vs {r}");
    }
    assert!((mined.insert_rate - cm.insert_rate).abs() <= 0.2 * cm.insert_rate, "{}", mined.insert_rate);
}

#[test]
fn injected_rule_is_recovered() {
    let p = prepare(&customers(500, 10));
    let mut cm = p.schema.temporal.clone();
    for c in cm.paths.values_mut() {
        c.update_rate = 0.5;
    }
    cm.paths.get_mut(&AttributePath::key("salary")).unwrap().update_rate = 20.0;
    let (a, b) = (AttributePath::key("salary"), AttributePath::key("joined"));
    let rule = UpdateRule {
        antecedent: [a.clone()].into(),
        consequent: [b.clone()].into(),
        window: 1,
        support: 0.0,
        confidence: 1.0,
    };
    let h = run(&p, &cm, &[rule], params(1000, 1.0, 11));
    assert_eq!(validate_history(&h, &p.schema), vec![]);
    let tx = extract_update_transactions(&h);
    let mined = mine_update_dependencies(&tx, 1, 0.1, 0.5).unwrap();
    let found = mined.iter().find(|r| r.antecedent == [a.clone()].into() && r.consequent == [b.clone()].into());
    assert!(found.is_some_and(|r| r.confidence >= 0.95), "{mined:?}");
}

fn rule(confidence: f64, window: usize) -> UpdateRule {
    UpdateRule {
        antecedent: [AttributePath::key("a")].into(),
        consequent: [AttributePath::key("b")].into(),
        window,
        support: 0.0,
        confidence,
    }
}

fn trigger(paths: &[&str]) -> PlannedUpdate {
    PlannedUpdate { at: Timestamp(10), entity: EntityId(1), paths: paths.iter().map(|p| AttributePath::key(*p)).collect() }
}

#[test]
fn rule_confidence_extremes() {
    let mut rng = stream(1, &[2]);
    for _ in 0..1000 {
        let out = apply_update_rule(&rule(1.0, 1), &trigger(&["a", "c"]), 2.0, &mut rng);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].at, Timestamp(10));
        assert!(apply_update_rule(&rule(0.0, 1), &trigger(&["a"]), 2.0, &mut rng).is_empty());
    }
    assert!(apply_update_rule(&rule(1.0, 1), &trigger(&["c"]), 2.0, &mut rng).is_empty());
}

#[test]
fn rule_emission_frequency_matches_confidence() {
    let mut rng = stream(3, &[4]);
    let fired = (0..10_000).filter(|_| !apply_update_rule(&rule(0.7, 3), &trigger(&["a"]), 2.0, &mut rng).is_empty()).count();
    let freq = fired as f64 / 10_000.0;
    assert!((freq - 0.7).abs() <= 0.02, "{freq}");
}

#[test]
fn rule_lags_stay_within_the_window() {
    let mut rng = stream(5, &[6]);
    for _ in 0..500 {
        for u in apply_update_rule(&rule(1.0, 3), &trigger(&["a"]), 2.0, &mut rng) {
            assert!([10, 12, 14].contains(&u.at.0));
        }
    }
}

#[test]
fn minted_keys_are_distinct_from_alive_keys() {
    let p = prepare(&customers(60, 12));
    let mut cm = p.schema.temporal.clone();
    cm.paths.get_mut(&AttributePath::key("id")).unwrap().update_rate = 30.0;
    let h = run(&p, &cm, &[], params(200, 2.0, 13));
    let id = h.path_index(&AttributePath::key("id")).unwrap();
    for t in 0..=200 {
        let keys: Vec<Value> =
            h.entities().filter(|e| e.is_alive(Timestamp(t))).map(|e| e.version_at(id, Timestamp(t)).unwrap().value.clone()).collect();
        let distinct: std::collections::BTreeSet<_> = keys.iter().collect();
        assert_eq!(distinct.len(), keys.len(), "t={t}");
    }
}

#[test]
fn documents_with_absent_attributes() {
    let docs: Vec<crate::model::Document> = (0..40)
        .map(|i| {
            let raw = if i % 3 == 0 {
                format!(r#"{{"id":"K{i:03}","info":{{"score":{}}}}}"#, i % 7)
            } else {
                format!(r#"{{"id":"K{i:03}","info":{{"score":{},"tag":"t{}"}}}}"#, i % 7, i % 4)
            };
            match serde_json::from_str::<Value>(&raw).unwrap() {
                Value::Document(d) => d,
                _ => unreachable!(),
            }
        })
        .collect();
    let ds = Dataset::from_documents(DataModel::Document, &docs).unwrap();
    let opts = ProfilingOptions::default();
    let report = profile_dataset(&ds, &opts);
    let p = normalize_schema(&ds, &report.profile, &opts);
    let mut cm = p.schema.temporal.clone();
    cm.paths.values_mut().for_each(|c| c.update_rate = 5.0);
    let h = run(&p, &cm, &[], params(500, 2.0, 1));
    h.check_structure().unwrap();
    assert_eq!(validate_history(&h, &p.schema), vec![]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]
    #[test]
    fn generated_histories_are_valid(seed in any::<u64>(), data_seed in 0u64..1000, vf in 0.5f64..3.0) {
        let p = prepare(&customers(80, data_seed));
        let mut cm = p.schema.temporal.clone();
        cm.paths.values_mut().for_each(|c| c.update_rate = 3.0);
        let h = run(&p, &cm, &[], params(500, vf, seed));
        prop_assert!(h.check_structure().is_ok());
        prop_assert_eq!(validate_history(&h, &p.schema), vec![]);
    }
}
