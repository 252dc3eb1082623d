//! Fresh key values without a global index.
//!
//! A mint renders a counter into a fixed template. Every counter exceeds the
//! digit content of every input value, and each counter is rendered at most
//! once, so minted values are distinct from each other and from the input.

use rust_decimal::Decimal;

use crate::model::Value;

#[derive(Debug, Clone, PartialEq)]
pub struct Mint {
    template: Template,
    base: u128,
}

#[derive(Debug, Clone, PartialEq)]
enum Template {
    Number,
    Text(String),
}

/// The decimal digits of a text read as one integer; `None` without digits.
fn digit_content(s: &str) -> Option<u128> {
    let mut any = false;
    let mut acc: u128 = 0;
    for d in s.chars().filter_map(|c| c.to_digit(10)) {
        any = true;
        acc = acc.saturating_mul(10).saturating_add(u128::from(d));
    }
    any.then_some(acc)
}

impl Mint {
    /// A mint for a column. Numeric columns mint integers above the maximum;
    /// text columns reuse the first text value as template.
    pub fn for_column<'a>(values: impl IntoIterator<Item = &'a Value>, numeric: bool) -> Mint {
        let mut max: u128 = 0;
        let mut template: Option<String> = None;
        for v in values {
            match v {
                Value::Number(d) => {
                    let floor = d.floor();
                    if floor.is_sign_positive() {
                        max = max.max(u128::try_from(floor).unwrap_or(u128::MAX));
                    }
                }
                Value::Text(s) => {
                    max = max.max(digit_content(s).unwrap_or(0));
                    template.get_or_insert_with(|| s.clone());
                }
                _ => {}
            }
        }
        let template = match (numeric, template) {
            (false, Some(t)) => Template::Text(t),
            _ => Template::Number,
        };
        Mint { template, base: max.saturating_add(1) }
    }

    pub fn value(&self, counter: u64) -> Value {
        let c = self.base.saturating_add(u128::from(counter));
        match &self.template {
            Template::Number => {
                Value::Number(Decimal::from_i128_with_scale(i128::try_from(c).unwrap_or(i128::MAX).min(MAX_DECIMAL), 0))
            }
            Template::Text(t) => Value::Text(render(t, c)),
        }
    }
}

const MAX_DECIMAL: i128 = 79_228_162_514_264_337_593_543_950_335;

/// Fills the template's digit slots right-aligned with `c`, zero-padded.
/// Surplus digits go in front of the first slot; a template without digits
/// gets the number before its `@` or at its end.
fn render(template: &str, c: u128) -> String {
    let digits = c.to_string();
    let slots: Vec<usize> = template.char_indices().filter(|(_, ch)| ch.is_ascii_digit()).map(|(i, _)| i).collect();
    if slots.is_empty() {
        return match template.find('@') {
            Some(at) => format!("{}{digits}{}", &template[..at], &template[at..]),
            None => format!("{template}{digits}"),
        };
    }
    let padded = format!("{digits:0>width$}", width = slots.len());
    let surplus = padded.len() - slots.len();
    let mut out = String::with_capacity(template.len() + surplus);
    let mut next = surplus;
    for (i, ch) in template.char_indices() {
        if i == slots[0] {
            out.push_str(&padded[..surplus]);
        }
        if ch.is_ascii_digit() {
            out.push(padded.as_bytes()[next] as char);
            next += 1;
        } else {
            out.push(ch);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn rendering_fills_slots() {
        assert_eq!(render("C0001", 42), "C0042");
        assert_eq!(render("C1", 123), "C123");
        assert_eq!(render("a1-b2", 345), "a34-b5");
        assert_eq!(render("anna@example.com", 7), "anna7@example.com");
        assert_eq!(render("abc", 7), "abc7");
    }

    #[test]
    fn minted_values_exceed_the_input() {
        let input = [Value::text("C0007"), Value::text("C0120"), Value::text("X")];
        let mint = Mint::for_column(input.iter(), false);
        assert_eq!(mint.value(0), Value::text("C0121"));
        let nums = [Value::number("3.5"), Value::number("17")];
        assert_eq!(Mint::for_column(nums.iter(), true).value(2), Value::number("20"));
    }

    proptest! {
        #[test]
        fn minting_is_injective_and_fresh(
            input in proptest::collection::vec("[a-z]{0,3}[0-9]{0,4}(@x\\.org)?", 1..20),
            counters in proptest::collection::hash_set(0u64..100_000, 1..50),
        ) {
            let values: Vec<Value> = input.iter().map(|s| Value::text(s.clone())).collect();
            let mint = Mint::for_column(values.iter(), false);
            let existing: HashSet<&Value> = values.iter().collect();
            let mut seen = HashSet::new();
            for c in counters {
                let v = mint.value(c);
                prop_assert!(!existing.contains(&v));
                prop_assert!(seen.insert(v));
            }
        }
    }
}
