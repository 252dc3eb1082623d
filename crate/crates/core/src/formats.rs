//! Lossless value formats. A value in one format of a family can be
//! re-rendered in any other format of the same family without losing
//! information.

use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::model::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatId {
    /// `2024-03-01`
    DateIso,
    /// `01.03.2024`
    DateDmy,
    /// `03/01/2024`
    DateMdy,
    /// `20240301`
    DateCompact,
    /// Digit groups joined by `-`.
    PhoneDash,
    /// Digit groups joined by `.`.
    PhoneDot,
    /// Digit groups joined by a space.
    PhoneSpace,
    /// Digits only; the grouping is lost, so this format is only a target
    /// for grouped input.
    PhoneCompact,
    /// Numbers rendered with exactly two fractional digits.
    DecimalFixed2,
    /// Numbers rendered without trailing fractional zeros.
    DecimalPlain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatFamily {
    Date,
    Phone,
    Decimal,
}

impl FormatId {
    pub const ALL: [FormatId; 10] = [
        FormatId::DateIso,
        FormatId::DateDmy,
        FormatId::DateMdy,
        FormatId::DateCompact,
        FormatId::PhoneDash,
        FormatId::PhoneDot,
        FormatId::PhoneSpace,
        FormatId::PhoneCompact,
        FormatId::DecimalFixed2,
        FormatId::DecimalPlain,
    ];

    pub fn family(self) -> FormatFamily {
        use FormatId::*;
        match self {
            DateIso | DateDmy | DateMdy | DateCompact => FormatFamily::Date,
            PhoneDash | PhoneDot | PhoneSpace | PhoneCompact => FormatFamily::Phone,
            DecimalFixed2 | DecimalPlain => FormatFamily::Decimal,
        }
    }
}

impl FormatFamily {
    pub fn members(self) -> Vec<FormatId> {
        FormatId::ALL.into_iter().filter(|f| f.family() == self).collect()
    }
}

static ISO: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{4})-(\d{2})-(\d{2})$").unwrap());
static DMY: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{2})\.(\d{2})\.(\d{4})$").unwrap());
static MDY: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{2})/(\d{2})/(\d{4})$").unwrap());
static COMPACT_DATE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{4})(\d{2})(\d{2})$").unwrap());
static PHONE_GROUPS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\+?\d+(?:([-. ])\d+)(?:[-. ]\d+)*$").unwrap());

/// Calendar date parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DateParts {
    pub year: u32,
    pub month: u32,
    pub day: u32,
}

impl DateParts {
    /// Days since 1970-01-01 in the proleptic Gregorian calendar.
    pub fn to_days(self) -> i64 {
        let (m, d) = (i64::from(self.month), i64::from(self.day));
        let y = i64::from(self.year) - i64::from(m <= 2);
        let era = y.div_euclid(400);
        let yoe = y - era * 400;
        let doy = (153 * (m + if m > 2 { -3 } else { 9 }) + 2) / 5 + d - 1;
        let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        era * 146_097 + doe - 719_468
    }

    pub fn from_days(days: i64) -> DateParts {
        let z = days + 719_468;
        let era = z.div_euclid(146_097);
        let doe = z - era * 146_097;
        let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
        let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        let mp = (5 * doy + 2) / 153;
        let day = (doy - (153 * mp + 2) / 5 + 1) as u32;
        let month = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
        let year = (yoe + era * 400 + i64::from(month <= 2)) as u32;
        DateParts { year, month, day }
    }
}

fn valid_date(year: u32, month: u32, day: u32) -> Option<DateParts> {
    (1..=12).contains(&month).then_some(())?;
    (1..=days_in_month(year, month)).contains(&day).then_some(())?;
    Some(DateParts { year, month, day })
}

pub fn days_in_month(year: u32, month: u32) -> u32 {
    match month {
        4 | 6 | 9 | 11 => 30,
        2 if (year.is_multiple_of(4) && !year.is_multiple_of(100)) || year.is_multiple_of(400) => 29,
        2 => 28,
        _ => 31,
    }
}

fn caps(re: &Regex, s: &str) -> Option<[u32; 3]> {
    let c = re.captures(s)?;
    Some([c[1].parse().ok()?, c[2].parse().ok()?, c[3].parse().ok()?])
}

/// Parses a date in the given format.
pub fn parse_date(s: &str, format: FormatId) -> Option<DateParts> {
    match format {
        FormatId::DateIso => caps(&ISO, s).and_then(|[y, m, d]| valid_date(y, m, d)),
        FormatId::DateDmy => caps(&DMY, s).and_then(|[d, m, y]| valid_date(y, m, d)),
        FormatId::DateMdy => caps(&MDY, s).and_then(|[m, d, y]| valid_date(y, m, d)),
        FormatId::DateCompact => caps(&COMPACT_DATE, s).and_then(|[y, m, d]| valid_date(y, m, d)),
        _ => None,
    }
}

pub fn render_date(d: DateParts, format: FormatId) -> String {
    let DateParts { year, month, day } = d;
    match format {
        FormatId::DateDmy => format!("{day:02}.{month:02}.{year:04}"),
        FormatId::DateMdy => format!("{month:02}/{day:02}/{year:04}"),
        FormatId::DateCompact => format!("{year:04}{month:02}{day:02}"),
        _ => format!("{year:04}-{month:02}-{day:02}"),
    }
}

/// The format a value is currently in, if any.
pub fn detect(value: &Value) -> Option<FormatId> {
    match value {
        Value::Number(d) => Some(if d.scale() == 2 { FormatId::DecimalFixed2 } else { FormatId::DecimalPlain }),
        Value::Text(s) => {
            for f in [FormatId::DateIso, FormatId::DateDmy, FormatId::DateMdy] {
                if parse_date(s, f).is_some() {
                    return Some(f);
                }
            }
            let c = PHONE_GROUPS.captures(s)?;
            let sep = c.get(1)?.as_str();
            let digits = s.chars().filter(char::is_ascii_digit).count();
            if digits < 6 || s.chars().filter(|ch| !ch.is_ascii_digit() && *ch != '+').any(|ch| ch.to_string() != sep) {
                return None;
            }
            Some(match sep {
                "-" => FormatId::PhoneDash,
                "." => FormatId::PhoneDot,
                _ => FormatId::PhoneSpace,
            })
        }
        _ => None,
    }
}

/// Re-renders `value` from format `from` into `to`. Returns `None` when the
/// value is not in `from` or the conversion would lose information.
pub fn convert(value: &Value, from: FormatId, to: FormatId) -> Option<Value> {
    if from.family() != to.family() || detect(value) != Some(from) {
        return None;
    }
    match (value, from.family()) {
        (Value::Text(s), FormatFamily::Date) => Some(Value::text(render_date(parse_date(s, from)?, to))),
        (Value::Text(s), FormatFamily::Phone) => {
            let sep = match to {
                FormatId::PhoneDash => "-",
                FormatId::PhoneDot => ".",
                FormatId::PhoneSpace => " ",
                _ => "",
            };
            let from_sep = match from {
                FormatId::PhoneDash => '-',
                FormatId::PhoneDot => '.',
                _ => ' ',
            };
            Some(Value::text(s.split(from_sep).collect::<Vec<_>>().join(sep)))
        }
        (Value::Number(d), FormatFamily::Decimal) => match to {
            FormatId::DecimalFixed2 if d.scale() <= 2 => {
                let mut r = *d;
                r.rescale(2);
                Some(Value::Number(r))
            }
            FormatId::DecimalPlain => Some(Value::Number(d.normalize())),
            _ => None,
        },
        _ => None,
    }
}

/// Formats of the value's family other than its current one into which it
/// converts losslessly.
pub fn alternatives(value: &Value) -> Vec<(FormatId, Value)> {
    let Some(current) = detect(value) else { return Vec::new() };
    current
        .family()
        .members()
        .into_iter()
        .filter(|&f| f != current)
        .filter_map(|f| convert(value, current, f).map(|v| (f, v)))
        .filter(|(_, v)| v.render() != value.render())
        .collect()
}

pub fn decimal(s: &str) -> Option<Decimal> {
    Decimal::from_str(s).ok()
}
