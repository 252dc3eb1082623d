use dupforge_web::{expand_json, inject_json, mine_json};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn injection_reports_each_class() {
    let out = parse(&inject_json("Smith", "typo, missing, format", 3).unwrap());
    let rows = out.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["before"], "Smith");
    let typo = rows[0]["after"].as_str().unwrap();
    assert_ne!(typo, "\"Smith\"");
    assert_eq!(rows[1]["after"], "null");
    assert!(rows[2]["after"].is_null() && rows[2]["error"].is_string());
}

#[test]
fn injection_is_seeded() {
    assert_eq!(inject_json("Johnson", "typo", 9).unwrap(), inject_json("Johnson", "typo", 9).unwrap());
}

#[test]
fn unknown_classes_are_rejected() {
    assert!(inject_json("x", "gremlins", 1).is_err());
}

#[test]
fn mining_finds_the_windowed_rule() {
    let rules = parse(&mine_json("a\nb\na b\nc\n", 2, 1.0, 1.0).unwrap());
    let found = rules.as_array().unwrap().iter().any(|r| r["antecedent"] == parse(r#"["a"]"#) && r["consequent"] == parse(r#"["b"]"#));
    assert!(found, "{rules}");
    assert!(mine_json("a\n", 0, 0.5, 0.5).is_err());
}

#[test]
fn expansion_spreads_the_degree() {
    let csv = "name,email\nAnn Lee,ann@example.com\nBob Roe,bob@example.com\nCyd Poe,cyd@example.com\n";
    let leaves = parse(&expand_json(csv, 0.2, 2).unwrap());
    let mut sums = std::collections::BTreeMap::<(u64, String), f64>::new();
    for l in leaves.as_array().unwrap() {
        let key = (l["source"].as_u64().unwrap(), l["path"].as_str().unwrap().to_string());
        *sums.entry(key).or_default() += l["probability"].as_f64().unwrap();
    }
    assert!(sums.keys().any(|(s, _)| *s == 1));
    for (key, sum) in sums {
        assert!((sum - 0.2).abs() < 1e-9, "{key:?}: {sum}");
    }
}
