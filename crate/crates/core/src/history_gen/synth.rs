//! Semantic-type-aware producers for attribute updates.

use rand::seq::IndexedRandom;
use rand::Rng;
use rust_decimal::Decimal;

use crate::dict::DICT;
use crate::formats::{detect, parse_date, render_date, DateParts, FormatFamily};
use crate::model::{AttributePath, ChangeModel, EnrichedSchema, SemanticLabel, UpdateKindDistribution, Value, ValueKind};
use crate::profiling::{DataProfile, NumericRange, UpdateKind};

/// Attempts per update before giving up.
pub const MAX_RETRIES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("no admissible new value for `{path}` after {attempts} attempts")]
    ExhaustedRetries { path: AttributePath, attempts: usize },
}

/// Everything the producers need to know about one attribute.
#[derive(Debug, Clone)]
pub struct PathSynth {
    pub path: AttributePath,
    pub label: SemanticLabel,
    pub kind: ValueKind,
    pub kinds: UpdateKindDistribution,
    /// Observed text length range, inclusive.
    pub length: Option<(usize, usize)>,
    pub tokens: Option<(usize, usize)>,
    pub numeric: Option<NumericRange>,
    pub sample: Vec<Value>,
    /// Distinct whitespace tokens of the sample, used for appends.
    pub vocabulary: Vec<String>,
}

impl PathSynth {
    pub fn new(path: &AttributePath, schema: &EnrichedSchema, profile: &DataProfile, change: &ChangeModel) -> Self {
        let attr = profile.attribute(path);
        let kind = schema.schema.attribute(path).map_or(ValueKind::Text, |a| a.kind);
        let observed = attr.filter(|a| a.count > a.null_count);
        let range = |s: &crate::profiling::Summary| (s.min.floor().max(0.0) as usize, s.max.ceil().max(0.0) as usize);
        let sample = attr.map(|a| a.sample.clone()).unwrap_or_default();
        let mut vocabulary: Vec<String> = sample
            .iter()
            .filter_map(Value::as_text)
            .flat_map(|s| s.split_whitespace().map(str::to_string))
            .collect();
        vocabulary.sort();
        vocabulary.dedup();
        PathSynth {
            path: path.clone(),
            label: schema.semantic_label(path),
            kind,
            kinds: change.paths.get(path).map(|c| c.kinds).unwrap_or_default(),
            length: observed.map(|a| range(&a.length)),
            tokens: observed.map(|a| range(&a.tokens)),
            numeric: attr.and_then(|a| a.numeric.clone()),
            sample,
            vocabulary,
        }
    }

    fn admissible(&self, current: &Value, candidate: &Value) -> bool {
        if candidate == current || candidate.is_null() {
            return false;
        }
        match candidate {
            Value::Text(s) => {
                let len = s.chars().count();
                let toks = s.split_whitespace().count();
                self.length.is_none_or(|(lo, hi)| (lo..=hi).contains(&len))
                    && self.tokens.is_none_or(|(lo, hi)| (lo..=hi).contains(&toks))
            }
            Value::Number(d) => self.numeric.as_ref().is_none_or(|r| r.min <= *d && *d <= r.max),
            _ => true,
        }
    }
}

/// A new value for one attribute of one entity. The result has the
/// attribute's kind, stays within the observed length, token and numeric
/// ranges and differs from `current`.
pub fn synthesize_update(current: &Value, synth: &PathSynth, rng: &mut impl Rng) -> Result<Value, SynthError> {
    for _ in 0..MAX_RETRIES {
        if let Some(candidate) = propose(current, synth, rng) {
            if synth.admissible(current, &candidate) {
                return Ok(candidate);
            }
        }
    }
    Err(SynthError::ExhaustedRetries { path: synth.path.clone(), attempts: MAX_RETRIES })
}

fn pick_kind(d: &UpdateKindDistribution, rng: &mut impl Rng) -> UpdateKind {
    let total = d.replace + d.append + d.correct;
    if total <= 0.0 {
        return UpdateKind::Replace;
    }
    let u = rng.random::<f64>() * total;
    if u < d.append {
        UpdateKind::Append
    } else if u < d.append + d.correct {
        UpdateKind::Correct
    } else {
        UpdateKind::Replace
    }
}

fn propose(current: &Value, synth: &PathSynth, rng: &mut impl Rng) -> Option<Value> {
    match (synth.kind, current) {
        (ValueKind::Number, _) | (_, Value::Number(_)) => synth.numeric.as_ref().map(|r| uniform_decimal(r, rng)),
        (_, Value::Boolean(b)) => Some(Value::Boolean(!b)),
        (ValueKind::Boolean, _) => Some(Value::Boolean(rng.random())),
        (_, Value::Text(s)) => Some(Value::Text(match pick_kind(&synth.kinds, rng) {
            UpdateKind::Append => append(s, synth, rng)?,
            UpdateKind::Correct => edit_one_char(s, rng)?,
            UpdateKind::Replace => replace_text(s, synth, rng)?,
        })),
        _ => synth.sample.choose(rng).cloned(),
    }
}

fn uniform_decimal(r: &NumericRange, rng: &mut impl Rng) -> Value {
    let scale = r.scale.min(12);
    let factor = Decimal::from(10u64.pow(scale));
    let lo = (r.min * factor).ceil();
    let hi = (r.max * factor).floor();
    let (Ok(lo), Ok(hi)) = (i128::try_from(lo), i128::try_from(hi)) else {
        return Value::Number(r.min);
    };
    if hi < lo {
        return Value::Number(r.min);
    }
    let k = rng.random_range(lo..=hi);
    Value::Number(Decimal::from_i128_with_scale(k, scale))
}

fn append(s: &str, synth: &PathSynth, rng: &mut impl Rng) -> Option<String> {
    let token = synth.vocabulary.choose(rng)?;
    Some(if s.is_empty() { token.clone() } else { format!("{s} {token}") })
}

/// Replaces one alphanumeric character with another of the same class.
pub(crate) fn edit_one_char(s: &str, rng: &mut impl Rng) -> Option<String> {
    let mut chars: Vec<char> = s.chars().collect();
    let positions: Vec<usize> = (0..chars.len()).filter(|&i| chars[i].is_ascii_alphanumeric()).collect();
    let &i = positions.choose(rng)?;
    let c = chars[i];
    let pool: &[u8] = if c.is_ascii_digit() {
        b"0123456789"
    } else if c.is_ascii_uppercase() {
        b"ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    } else {
        b"abcdefghijklmnopqrstuvwxyz"
    };
    let mut n = c;
    while n == c {
        n = *pool.choose(rng)? as char;
    }
    chars[i] = n;
    Some(chars.into_iter().collect())
}

fn replace_text(s: &str, synth: &PathSynth, rng: &mut impl Rng) -> Option<String> {
    match synth.label {
        SemanticLabel::Date => shift_date(s, rng).or_else(|| sample_text(synth, rng)),
        SemanticLabel::PersonName => swap_name(s, rng),
        SemanticLabel::Identifier => {
            if s.chars().any(|c| c.is_ascii_digit()) {
                edit_digit(s, rng)
            } else {
                edit_one_char(s, rng)
            }
        }
        SemanticLabel::Email => Some(new_email(rng)),
        SemanticLabel::Phone => Some(redial(s, rng)),
        _ => sample_text(synth, rng).or_else(|| edit_one_char(s, rng)),
    }
}

fn sample_text(synth: &PathSynth, rng: &mut impl Rng) -> Option<String> {
    synth.sample.choose(rng).map(|v| v.render().into_owned())
}

fn shift_date(s: &str, rng: &mut impl Rng) -> Option<String> {
    let format = detect(&Value::text(s)).filter(|f| f.family() == FormatFamily::Date)?;
    let date = parse_date(s, format)?;
    let mut delta = rng.random_range(1..=365i64);
    if rng.random::<bool>() {
        delta = -delta;
    }
    let shifted = DateParts::from_days(date.to_days() + delta);
    Some(render_date(shifted, format))
}

fn swap_name(s: &str, rng: &mut impl Rng) -> Option<String> {
    let mut tokens: Vec<String> = s.split(' ').map(str::to_string).collect();
    let i = rng.random_range(0..tokens.len());
    let pool = if tokens.len() > 1 && i == 0 { &DICT.first_names } else { &DICT.last_names };
    tokens[i] = pool.choose(rng)?.clone();
    Some(tokens.join(" "))
}

fn edit_digit(s: &str, rng: &mut impl Rng) -> Option<String> {
    let mut chars: Vec<char> = s.chars().collect();
    let positions: Vec<usize> = (0..chars.len()).filter(|&i| chars[i].is_ascii_digit()).collect();
    let &i = positions.choose(rng)?;
    let old = chars[i];
    let mut d = old;
    while d == old {
        d = char::from(b'0' + rng.random_range(0..10u8));
    }
    chars[i] = d;
    Some(chars.into_iter().collect())
}

fn new_email(rng: &mut impl Rng) -> String {
    let first = DICT.first_names.choose(rng).map_or("user".into(), |s| s.to_lowercase());
    let domain = DICT.email_domains.choose(rng).map_or("example.com", String::as_str);
    if rng.random::<bool>() {
        let last = DICT.last_names.choose(rng).map_or("x".into(), |s| s.to_lowercase());
        format!("{first}.{last}@{domain}")
    } else {
        format!("{first}@{domain}")
    }
}

/// Fresh digits in the same layout; a leading `+` and country code stay.
fn redial(s: &str, rng: &mut impl Rng) -> String {
    let keep = if s.starts_with('+') { s.find(|c: char| !c.is_ascii_digit() && c != '+').unwrap_or(0) } else { 0 };
    s.char_indices()
        .map(|(i, c)| {
            if i >= keep && c.is_ascii_digit() {
                char::from(b'0' + rng.random_range(0..10u8))
            } else {
                c
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn synth(label: SemanticLabel, kind: ValueKind, sample: &[&str]) -> PathSynth {
        let sample: Vec<Value> = sample.iter().map(|s| Value::text(*s)).collect();
        let lens: Vec<usize> = sample.iter().map(|v| v.as_text().unwrap().chars().count()).collect();
        PathSynth {
            path: AttributePath::key("p"),
            label,
            kind,
            kinds: UpdateKindDistribution { replace: 1.0, append: 0.0, correct: 0.0 },
            length: lens.iter().min().map(|lo| (*lo, *lens.iter().max().unwrap())),
            tokens: None,
            numeric: None,
            vocabulary: Vec::new(),
            sample,
        }
    }

    #[test]
    fn numbers_stay_in_range_and_scale() {
        let mut s = synth(SemanticLabel::NumericMeasure, ValueKind::Number, &[]);
        s.numeric = Some(NumericRange { min: Decimal::from(10), max: Decimal::from(99), scale: 0 });
        s.length = None;
        let mut rng = stream(1, &[1]);
        for _ in 0..2000 {
            let v = synthesize_update(&Value::number("50"), &s, &mut rng).unwrap();
            let Value::Number(d) = v else { panic!() };
            assert!(Decimal::from(10) <= d && d <= Decimal::from(99) && d != Decimal::from(50));
            assert_eq!(d.scale(), 0);
        }
    }

    #[test]
    fn dates_shift_and_keep_format() {
        let s = synth(SemanticLabel::Date, ValueKind::Text, &["1980-02-11", "01.02.2003"]);
        let mut rng = stream(2, &[1]);
        for _ in 0..200 {
            let v = synthesize_update(&Value::text("1980-02-11"), &s, &mut rng).unwrap();
            assert!(parse_date(v.as_text().unwrap(), crate::formats::FormatId::DateIso).is_some(), "{v:?}");
        }
    }

    #[test]
    fn text_respects_length_range() {
        let s = synth(SemanticLabel::FreeText, ValueKind::Text, &["abc", "abcdef", "xyz", "hello"]);
        let mut rng = stream(3, &[1]);
        for _ in 0..500 {
            let v = synthesize_update(&Value::text("abc"), &s, &mut rng).unwrap();
            let n = v.as_text().unwrap().chars().count();
            assert!((3..=6).contains(&n));
            assert_ne!(v, Value::text("abc"));
        }
    }

    #[test]
    fn identifiers_get_digit_edits() {
        let s = synth(SemanticLabel::Identifier, ValueKind::Text, &["C1001", "C1002"]);
        let mut rng = stream(4, &[1]);
        let v = synthesize_update(&Value::text("C1001"), &s, &mut rng).unwrap();
        let t = v.as_text().unwrap();
        assert!(t.starts_with('C') && t.len() == 5 && strsim::hamming(t, "C1001").unwrap() == 1);
    }

    #[test]
    fn phones_keep_their_layout() {
        let s = synth(SemanticLabel::Phone, ValueKind::Text, &["555-123-4567"]);
        let mut rng = stream(5, &[1]);
        let v = synthesize_update(&Value::text("555-123-4567"), &s, &mut rng).unwrap();
        let t = v.as_text().unwrap();
        assert_eq!(t.len(), 12);
        assert_eq!((t.as_bytes()[3], t.as_bytes()[7]), (b'-', b'-'));
    }

    #[test]
    fn single_valued_column_exhausts_retries() {
        let mut s = synth(SemanticLabel::Unknown, ValueKind::Number, &[]);
        s.numeric = Some(NumericRange { min: Decimal::from(5), max: Decimal::from(5), scale: 0 });
        let mut rng = stream(6, &[1]);
        assert!(matches!(
            synthesize_update(&Value::number("5"), &s, &mut rng),
            Err(SynthError::ExhaustedRetries { attempts: MAX_RETRIES, .. })
        ));
    }

    #[test]
    fn booleans_flip() {
        let s = synth(SemanticLabel::Unknown, ValueKind::Boolean, &[]);
        let mut rng = stream(7, &[1]);
        assert_eq!(synthesize_update(&Value::Boolean(true), &s, &mut rng).unwrap(), Value::Boolean(false));
    }
}
