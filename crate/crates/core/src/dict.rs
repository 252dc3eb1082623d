//! Bundled dictionaries used for semantic typing, value synthesis and the toy
//! dataset generator.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use serde::Deserialize;

#[derive(Debug, Deserialize)]
pub struct Dictionaries {
    pub first_names: Vec<String>,
    pub last_names: Vec<String>,
    pub cities: Vec<String>,
    pub postal_codes: BTreeMap<String, String>,
    pub streets: Vec<String>,
    pub email_domains: Vec<String>,
}

pub static DICT: LazyLock<Dictionaries> = LazyLock::new(|| {
    serde_json::from_str(include_str!("../data/dictionaries.json")).expect("bundled dictionaries parse")
});

pub fn is_known_name(token: &str) -> bool {
    DICT.first_names.iter().chain(DICT.last_names.iter()).any(|n| n.eq_ignore_ascii_case(token))
}

pub fn is_known_city(token: &str) -> bool {
    DICT.cities.iter().any(|c| c.eq_ignore_ascii_case(token))
}
