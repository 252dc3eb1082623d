use std::sync::LazyLock;

use regex::Regex;

use crate::dict;
use crate::model::{AttributePath, SemanticLabel, SemanticType, Value};

/// Share of non-null sample values a specific label must reach before the
/// column falls back to free text.
const MIN_SPECIFIC: f64 = 0.5;

static EMAIL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[^@\s]+@[^@\s]+\.[A-Za-z]{2,}$").unwrap());
static DATE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(\d{4}[-/.]\d{1,2}[-/.]\d{1,2}|\d{1,2}[-/.]\d{1,2}[-/.]\d{4}|\d{1,2} [A-Z][a-z]{2,8} \d{4})$").unwrap()
});
static PHONE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\+?[\d][\d\s\-().]{5,}\d$").unwrap());
static IDENTIFIER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[A-Za-z]{0,4}[-_]?\d{2,}[A-Za-z0-9\-_]*$|^[0-9a-fA-F]{8,}$").unwrap());
static STREET: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^\d+[a-z]?\s+\S|\S\s+\d+[a-z]?$|\b(street|st|avenue|ave|road|rd|lane|ln|way|drive|dr|boulevard|blvd|place|pl|court|ct|square|sq)\.?\b")
        .unwrap()
});
static POSTAL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\d{4,5}(-\d{4})?$").unwrap());
static NUMERIC: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[-+]?\d+(\.\d+)?$").unwrap());

/// Labels in tie-breaking priority order.
const PRIORITY: [SemanticLabel; 7] = [
    SemanticLabel::Email,
    SemanticLabel::Date,
    SemanticLabel::Phone,
    SemanticLabel::PersonName,
    SemanticLabel::NumericMeasure,
    SemanticLabel::AddressPart,
    SemanticLabel::Identifier,
];

fn name_tokens(path: &AttributePath) -> Vec<String> {
    let leaf = path.leaf_name();
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut prev_lower = false;
    for c in leaf.chars() {
        if !c.is_alphanumeric() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            prev_lower = false;
            continue;
        }
        if c.is_uppercase() && prev_lower && !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
        prev_lower = c.is_lowercase();
        cur.extend(c.to_lowercase());
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Label suggested by the attribute name alone.
pub fn label_hint(path: &AttributePath) -> Option<SemanticLabel> {
    use SemanticLabel::*;
    for token in name_tokens(path) {
        let hit = match token.as_str() {
            "email" | "mail" | "e-mail" => Email,
            "phone" | "tel" | "telephone" | "mobile" | "fax" => Phone,
            "date" | "birth" | "birthday" | "dob" | "born" | "since" | "until" => Date,
            "name" | "firstname" | "lastname" | "surname" | "forename" | "given" | "family" => PersonName,
            "street" | "city" | "zip" | "zipcode" | "postal" | "postcode" | "address" | "country" | "state"
            | "town" | "addr" => AddressPart,
            "id" | "key" | "code" | "uuid" | "ssn" | "isbn" => Identifier,
            "salary" | "price" | "amount" | "age" | "weight" | "height" | "income" | "score" | "count" => {
                NumericMeasure
            }
            "description" | "comment" | "note" | "notes" | "text" | "remarks" => FreeText,
            _ => continue,
        };
        return Some(hit);
    }
    None
}

fn is_person_name(s: &str) -> bool {
    let tokens: Vec<&str> = s.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
    if tokens.is_empty() || tokens.len() > 4 {
        return false;
    }
    let shaped = tokens.iter().all(|t| {
        t.starts_with(char::is_uppercase) && t.chars().all(|c| c.is_alphabetic() || matches!(c, '\'' | '-' | '.'))
    });
    shaped && tokens.iter().any(|t| dict::is_known_name(t.trim_end_matches('.')))
}

fn matches(label: SemanticLabel, value: &Value, hinted: bool) -> bool {
    let text = match value {
        Value::Text(s) => s.trim(),
        Value::Number(_) => {
            return match label {
                SemanticLabel::NumericMeasure => true,
                SemanticLabel::Identifier | SemanticLabel::AddressPart | SemanticLabel::Phone => {
                    hinted && matches(label, &Value::text(value.render().into_owned()), true)
                }
                _ => false,
            };
        }
        _ => return false,
    };
    match label {
        SemanticLabel::Email => EMAIL.is_match(text),
        SemanticLabel::Date => DATE.is_match(text),
        SemanticLabel::Phone => {
            PHONE.is_match(text) && text.chars().filter(char::is_ascii_digit).count() >= 7 && !DATE.is_match(text)
        }
        SemanticLabel::PersonName => is_person_name(text),
        SemanticLabel::NumericMeasure => NUMERIC.is_match(text),
        SemanticLabel::AddressPart => {
            dict::is_known_city(text) || STREET.is_match(text) || (hinted && POSTAL.is_match(text))
        }
        SemanticLabel::Identifier => IDENTIFIER.is_match(text) && !text.contains(char::is_whitespace),
        SemanticLabel::FreeText => !text.is_empty(),
        SemanticLabel::Unknown => false,
    }
}

/// Assigns a semantic label from pattern and dictionary heuristics. The
/// confidence is the fraction of non-null sample values that match the
/// winning label. A matching attribute-name hint wins once it covers at least
/// half of the values; otherwise the best-covering label wins, with ties
/// broken by a fixed priority.
pub fn classify_semantic_type(path: &AttributePath, values: &[Value]) -> SemanticType {
    let present: Vec<&Value> = values.iter().filter(|v| !v.is_null()).collect();
    if present.is_empty() {
        return SemanticType::UNKNOWN;
    }
    let n = present.len() as f64;
    let hint = label_hint(path);
    let fraction = |label: SemanticLabel| {
        let hinted = hint == Some(label);
        present.iter().filter(|v| matches(label, v, hinted)).count() as f64 / n
    };
    if let Some(h) = hint {
        let f = fraction(h);
        if f >= MIN_SPECIFIC {
            return SemanticType { label: h, confidence: f };
        }
    }
    let mut best = (SemanticLabel::Unknown, 0.0);
    for label in PRIORITY {
        let f = fraction(label);
        if f > best.1 {
            best = (label, f);
        }
    }
    if best.1 >= MIN_SPECIFIC {
        return SemanticType { label: best.0, confidence: best.1 };
    }
    let text = fraction(SemanticLabel::FreeText);
    if text > 0.0 {
        SemanticType { label: SemanticLabel::FreeText, confidence: text }
    } else if best.1 > 0.0 {
        SemanticType { label: best.0, confidence: best.1 }
    } else {
        SemanticType::UNKNOWN
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(v: &[&str]) -> Vec<Value> {
        v.iter().map(|s| Value::text(*s)).collect()
    }

    fn classify(name: &str, v: &[&str]) -> SemanticType {
        classify_semantic_type(&AttributePath::key(name), &texts(v))
    }

    #[test]
    fn all_emails() {
        let t = classify("c1", &["a@b.com", "x.y@example.org", "q@z.de"]);
        assert_eq!(t.label, SemanticLabel::Email);
        assert_eq!(t.confidence, 1.0);
    }

    #[test]
    fn all_null_is_unknown() {
        let t = classify_semantic_type(&AttributePath::key("c"), &[Value::Null, Value::Null]);
        assert_eq!(t, SemanticType::UNKNOWN);
    }

    #[test]
    fn sixty_percent_dates() {
        let t = classify("c", &["2020-01-05", "1999-12-31", "2001-07-04", "hello there", "foo bar"]);
        assert_eq!(t.label, SemanticLabel::Date);
        assert!((t.confidence - 0.6).abs() < 1e-12);
    }

    #[test]
    fn names_phones_and_numbers() {
        assert_eq!(classify("who", &["Smith, John", "Doe, Mary"]).label, SemanticLabel::PersonName);
        assert_eq!(classify("c", &["030-1234-5678", "+49 30 123456"]).label, SemanticLabel::Phone);
        let nums = [Value::number("12.5"), Value::number("99")];
        assert_eq!(classify_semantic_type(&AttributePath::key("c"), &nums).label, SemanticLabel::NumericMeasure);
        assert_eq!(classify("id", &["C0000000001", "C0000000002"]).label, SemanticLabel::Identifier);
        assert_eq!(classify("zip", &["02134", "10115"]).label, SemanticLabel::AddressPart);
        assert_eq!(classify("c", &["the quick brown fox", "lorem ipsum"]).label, SemanticLabel::FreeText);
    }

    #[test]
    fn hint_tokens_split_camel_and_snake_case() {
        assert_eq!(label_hint(&AttributePath::key("birthDate")), Some(SemanticLabel::Date));
        assert_eq!(label_hint(&AttributePath::key("name_1")), Some(SemanticLabel::PersonName));
        assert_eq!(label_hint(&AttributePath::key("xyz")), None);
    }
}
