//! Error classes: value-level corruptions and record-level rearrangements.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use rand::seq::IndexedRandom;
use rand::Rng;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::formats::alternatives;
use crate::model::{ErrorKind, Value, ValueKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InjectError {
    #[error("error class {class} cannot corrupt a {kind:?} value")]
    InapplicableClass { class: ErrorKind, kind: ValueKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypoKind {
    Insert,
    Delete,
    Substitute,
    Transpose,
}

/// Keyboard adjacency, phonetic rules and typo operation weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTables {
    pub adjacency: BTreeMap<char, Vec<char>>,
    pub phonetic: Vec<(String, String)>,
    /// Relative weights of insert, delete, substitute, transpose. Transpositions
    /// have edit distance 2 and are off by default.
    pub typo_weights: [f64; 4],
}

#[derive(Deserialize)]
struct KeyboardFile {
    rows: Vec<String>,
    row_offsets: Vec<i32>,
}

impl ErrorTables {
    /// Builds adjacency from staggered keyboard rows: keys are neighbours when
    /// they are horizontally next to each other or touch on an adjacent row.
    pub fn from_keyboard(rows: &[String], offsets: &[i32], phonetic: Vec<(String, String)>) -> Self {
        // Positions in half-key units so that staggered rows line up.
        let mut pos: Vec<(char, i32, i32)> = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            let off = offsets.get(r).copied().unwrap_or(0);
            for (c, ch) in row.chars().enumerate() {
                pos.push((ch, r as i32, 2 * c as i32 + off));
            }
        }
        let mut adjacency: BTreeMap<char, Vec<char>> = BTreeMap::new();
        for &(a, ra, xa) in &pos {
            let near: Vec<char> = pos
                .iter()
                .filter(|&&(b, rb, xb)| {
                    b != a && ((ra == rb && (xa - xb).abs() == 2) || ((ra - rb).abs() == 1 && (xa - xb).abs() <= 1))
                })
                .map(|&(b, _, _)| b)
                .collect();
            adjacency.insert(a, near);
        }
        ErrorTables { adjacency, phonetic, typo_weights: [1.0, 1.0, 2.0, 0.0] }
    }

    pub fn neighbours(&self, c: char) -> Option<&[char]> {
        self.adjacency.get(&c.to_ascii_lowercase()).map(Vec::as_slice).filter(|n| !n.is_empty())
    }
}

static DEFAULT_TABLES: LazyLock<ErrorTables> = LazyLock::new(|| {
    let kb: KeyboardFile = serde_json::from_str(include_str!("../../data/keyboard.json")).expect("keyboard table parses");
    let phonetic: Vec<(String, String)> =
        serde_json::from_str(include_str!("../../data/phonetic.json")).expect("phonetic table parses");
    ErrorTables::from_keyboard(&kb.rows, &kb.row_offsets, phonetic)
});

pub fn default_tables() -> &'static ErrorTables {
    &DEFAULT_TABLES
}

fn match_case(template: char, c: char) -> char {
    if template.is_uppercase() {
        c.to_ascii_uppercase()
    } else {
        c
    }
}

/// Applies one typo operation at character position `pos`. `with` is the
/// inserted or substituted character. Returns `None` when the position is out
/// of range or the result would equal the input.
pub fn typo_at(s: &str, kind: TypoKind, pos: usize, with: char) -> Option<String> {
    let mut chars: Vec<char> = s.chars().collect();
    match kind {
        TypoKind::Insert if pos <= chars.len() => chars.insert(pos, with),
        TypoKind::Delete if pos < chars.len() => {
            chars.remove(pos);
        }
        TypoKind::Substitute if pos < chars.len() && chars[pos] != with => chars[pos] = with,
        TypoKind::Transpose if pos + 1 < chars.len() && chars[pos] != chars[pos + 1] => chars.swap(pos, pos + 1),
        _ => return None,
    }
    Some(chars.into_iter().collect())
}

fn pick_typo_kind(tables: &ErrorTables, rng: &mut impl Rng) -> TypoKind {
    let kinds = [TypoKind::Insert, TypoKind::Delete, TypoKind::Substitute, TypoKind::Transpose];
    let total: f64 = tables.typo_weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, w) in kinds.iter().zip(tables.typo_weights) {
        if u < w {
            return *k;
        }
        u -= w;
    }
    TypoKind::Substitute
}

fn near_key(tables: &ErrorTables, c: char, rng: &mut impl Rng) -> char {
    match tables.neighbours(c) {
        Some(n) => match_case(c, *n.choose(rng).expect("non-empty")),
        None if c.is_ascii_digit() => char::from(b'0' + (c as u8 - b'0' + rng.random_range(1..10u8)) % 10),
        None => match_case(c, char::from(b'a' + rng.random_range(0..26u8))),
    }
}

/// A random keyboard typo. Insertions and substitutions use keys adjacent to
/// the neighbouring character.
pub fn typo(s: &str, tables: &ErrorTables, rng: &mut impl Rng) -> Option<String> {
    let n = s.chars().count();
    for _ in 0..8 {
        let kind = pick_typo_kind(tables, rng);
        let out = match kind {
            TypoKind::Insert => {
                let pos = rng.random_range(0..=n);
                let anchor = s.chars().nth(pos.saturating_sub(1)).unwrap_or('a');
                typo_at(s, kind, pos, near_key(tables, anchor, rng))
            }
            TypoKind::Delete if n > 1 => typo_at(s, kind, rng.random_range(0..n), ' '),
            TypoKind::Substitute if n > 0 => {
                let pos = rng.random_range(0..n);
                let c = s.chars().nth(pos).expect("in range");
                typo_at(s, kind, pos, near_key(tables, c, rng))
            }
            TypoKind::Transpose if n > 1 => typo_at(s, kind, rng.random_range(0..n - 1), ' '),
            _ => None,
        };
        if out.is_some() {
            return out;
        }
    }
    None
}

/// A one-digit substitution in a number's rendering that parses back to the
/// same rendering, so the edit distance stays exactly one.
fn number_typo(d: &Decimal, rng: &mut impl Rng) -> Option<Decimal> {
    let s = d.to_string();
    let digits: Vec<usize> = s.char_indices().filter(|(_, c)| c.is_ascii_digit()).map(|(i, _)| i).collect();
    for _ in 0..8 {
        let &i = digits.choose(rng)?;
        let old = s.as_bytes()[i];
        let new = b'0' + (old - b'0' + rng.random_range(1..10u8)) % 10;
        let mut bytes = s.clone().into_bytes();
        bytes[i] = new;
        let t = String::from_utf8(bytes).ok()?;
        if let Ok(parsed) = t.parse::<Decimal>() {
            if parsed.to_string() == t {
                return Some(parsed);
            }
        }
    }
    None
}

/// Replaces the `occurrence`-th match of `rule.0` with `rule.1`, keeping the
/// capitalization of the first matched character.
pub fn apply_phonetic_rule(s: &str, rule: (&str, &str), occurrence: usize) -> Option<String> {
    let lower = s.to_lowercase();
    if lower.len() != s.len() {
        return None;
    }
    let (at, _) = lower.match_indices(rule.0).nth(occurrence)?;
    let mut replacement: String = rule.1.to_string();
    if s[at..].starts_with(|c: char| c.is_uppercase()) {
        let mut cs = replacement.chars();
        replacement = cs.next().map(|c| c.to_uppercase().collect::<String>() + cs.as_str()).unwrap_or_default();
    }
    Some(format!("{}{}{}", &s[..at], replacement, &s[at + rule.0.len()..]))
}

pub fn phonetic(s: &str, tables: &ErrorTables, rng: &mut impl Rng) -> Option<String> {
    let lower = s.to_lowercase();
    let candidates: Vec<(usize, usize)> = tables
        .phonetic
        .iter()
        .enumerate()
        .flat_map(|(r, (from, _))| (0..lower.matches(from.as_str()).count()).map(move |k| (r, k)))
        .collect();
    let &(r, k) = candidates.choose(rng)?;
    let (from, to) = &tables.phonetic[r];
    apply_phonetic_rule(s, (from, to), k).filter(|out| out != s)
}

/// Swaps one adjacent pair of unequal list elements.
pub fn perturb_list(items: &[Value], rng: &mut impl Rng) -> Option<Vec<Value>> {
    let pairs: Vec<usize> = (0..items.len().saturating_sub(1)).filter(|&i| items[i] != items[i + 1]).collect();
    let &i = pairs.choose(rng)?;
    let mut out = items.to_vec();
    out.swap(i, i + 1);
    Some(out)
}

/// Corrupts a single value. Record-level classes (swap, merge, split),
/// outdated values and wrong references need context and are applied by the
/// engine.
pub fn inject_error(value: &Value, class: ErrorKind, tables: &ErrorTables, rng: &mut impl Rng) -> Result<Value, InjectError> {
    let inapplicable = || InjectError::InapplicableClass { class, kind: value.kind() };
    let out = match (class, value) {
        (ErrorKind::Missing, v) if !v.is_null() => Some(Value::Null),
        (ErrorKind::Typo, Value::Text(s)) => typo(s, tables, rng).map(Value::Text),
        (ErrorKind::Typo, Value::Number(d)) => number_typo(d, rng).map(Value::Number),
        (ErrorKind::Phonetic, Value::Text(s)) => phonetic(s, tables, rng).map(Value::Text),
        (ErrorKind::Format, v) => {
            let alts = alternatives(v);
            alts.choose(rng).map(|(_, a)| a.clone())
        }
        (ErrorKind::ListOrder, Value::List(items)) => perturb_list(items, rng).map(Value::List),
        _ => None,
    };
    out.filter(|o| o != value).ok_or_else(inapplicable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    #[test]
    fn transposition_example() {
        assert_eq!(typo_at("smith", TypoKind::Transpose, 1, ' ').as_deref(), Some("simth"));
    }

    #[test]
    fn phonetic_example() {
        assert_eq!(apply_phonetic_rule("philip", ("ph", "f"), 0).as_deref(), Some("filip"));
        assert_eq!(apply_phonetic_rule("Philip", ("ph", "f"), 0).as_deref(), Some("Filip"));
        assert_eq!(apply_phonetic_rule("anna", ("ph", "f"), 0), None);
    }

    #[test]
    fn adjacency_is_symmetric_and_local() {
        let t = default_tables();
        assert!(t.neighbours('s').unwrap().contains(&'a'));
        assert!(t.neighbours('s').unwrap().contains(&'w'));
        assert!(!t.neighbours('s').unwrap().contains(&'p'));
        for (a, ns) in &t.adjacency {
            for b in ns {
                assert!(t.adjacency[b].contains(a), "{a} {b}");
            }
        }
    }

    #[test]
    fn missing_and_inapplicable() {
        let mut rng = stream(1, &[1]);
        let t = default_tables();
        assert_eq!(inject_error(&Value::text("x"), ErrorKind::Missing, t, &mut rng), Ok(Value::Null));
        assert!(inject_error(&Value::Boolean(true), ErrorKind::Typo, t, &mut rng).is_err());
        assert!(inject_error(&Value::text("zzz"), ErrorKind::Format, t, &mut rng).is_err());
    }

    #[test]
    fn format_change_stays_in_family() {
        let mut rng = stream(2, &[1]);
        let out = inject_error(&Value::text("2020-01-31"), ErrorKind::Format, default_tables(), &mut rng).unwrap();
        let s = out.as_text().unwrap();
        assert!(["31.01.2020", "01/31/2020", "20200131"].contains(&s), "{s}");
    }

    proptest! {
        #[test]
        fn typos_have_distance_one(s in "[A-Za-z0-9 ]{1,20}", seed in any::<u64>()) {
            let mut rng = stream(seed, &[3]);
            let out = inject_error(&Value::text(s.clone()), ErrorKind::Typo, default_tables(), &mut rng).unwrap();
            prop_assert_eq!(strsim::levenshtein(&s, out.as_text().unwrap()), 1);
        }

        #[test]
        fn number_typos_have_distance_one(n in -100_000i64..100_000, scale in 0u32..3, seed in any::<u64>()) {
            let d = Decimal::new(n, scale);
            let mut rng = stream(seed, &[4]);
            if let Ok(Value::Number(out)) = inject_error(&Value::Number(d), ErrorKind::Typo, default_tables(), &mut rng) {
                prop_assert_eq!(strsim::levenshtein(&d.to_string(), &out.to_string()), 1);
            }
        }

        #[test]
        fn list_perturbation_is_a_permutation(items in proptest::collection::vec(0i64..5, 0..8), seed in any::<u64>()) {
            let list: Vec<Value> = items.iter().map(|i| Value::number(&i.to_string())).collect();
            let mut rng = stream(seed, &[5]);
            if let Ok(Value::List(out)) = inject_error(&Value::List(list.clone()), ErrorKind::ListOrder, default_tables(), &mut rng) {
                let (mut a, mut b) = (list.clone(), out.clone());
                a.sort();
                b.sort();
                prop_assert_eq!(a, b);
                prop_assert_ne!(out, list);
            }
        }
    }
}
