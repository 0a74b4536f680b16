#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use cardioprev::intake::{parse_questionnaire_str, HealthIndicators};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn questionnaire(name: &str) -> HealthIndicators {
    parse_questionnaire_str(&fixture(name)).unwrap()
}
