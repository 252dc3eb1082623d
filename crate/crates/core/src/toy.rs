//! A deterministic synthetic person table for demos, tests and benchmarks.
//!
//! Columns: a unique id, a two-token name, an email, a phone number, a street
//! address, a zip code that determines the city, a birth date and a salary.

use rand::Rng;

use crate::dict::DICT;
use crate::rng::stream;

const TOY_TAG: u64 = 0x544f_5900_0000_0000;

pub const TOY_HEADER: &str = "id,name,email,phone,street,zip,city,birth_date,salary";

/// `rows` data rows in CSV with a header. Pure in `(rows, seed)`.
pub fn toy_csv(rows: usize, seed: u64) -> String {
    let mut rng = stream(seed, &[TOY_TAG]);
    let cities: Vec<(&String, &String)> = DICT.postal_codes.iter().collect();
    let mut out = String::with_capacity(rows * 110);
    out.push_str(TOY_HEADER);
    out.push('\n');
    for i in 0..rows {
        let first = &DICT.first_names[rng.random_range(0..DICT.first_names.len())];
        let last = &DICT.last_names[rng.random_range(0..DICT.last_names.len())];
        let domain = &DICT.email_domains[rng.random_range(0..DICT.email_domains.len())];
        let street = &DICT.streets[rng.random_range(0..DICT.streets.len())];
        let (city, zip) = cities[rng.random_range(0..cities.len())];
        out.push_str(&format!(
            "{},{first} {last},{}.{}{}@{domain},555-{:03}-{:04},{} {street},{zip},{city},{}-{:02}-{:02},{}\n",
            i + 1,
            first.to_lowercase(),
            last.to_lowercase(),
            i + 1,
            rng.random_range(100..1000),
            rng.random_range(0..10_000),
            rng.random_range(1..200),
            rng.random_range(1940..2005),
            rng.random_range(1..13),
            rng.random_range(1..29),
            rng.random_range(20..150) * 500,
        ));
    }
    out
}
