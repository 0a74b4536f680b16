//! Splitting a generated response into per-factor explanations.
//!
//! Sections start at a heading: `### 1. Title**`, `### Title`,
//! `**1. Title**` or `1. **Title**`. A heading belongs to the first
//! requested factor whose keywords occur in its title. Text before the first
//! heading is the preamble; paragraphs after the first paragraph of the
//! last section are the closing.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::factors::RiskFactor;

static HEADING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?m)^[ \t]*(?:#{1,6}[ \t]*(?:\d+[.)][ \t]*)?|\*\*[ \t]*\d+[.)][ \t]*|\d+[.)][ \t]+\*\*)",
    )
    .unwrap()
});

static PARAGRAPH_BREAK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\n[ \t]*\n").unwrap());

/// Title keywords for a factor, and words that rule it out.
fn keywords(f: RiskFactor) -> (&'static [&'static str], &'static [&'static str]) {
    match f {
        RiskFactor::AnginaSymptoms => (&["angina", "chest pain", "chest discomfort"], &[]),
        RiskFactor::DocumentedCvd => (
            &[
                "documented",
                "existing",
                "established",
                "previous cardiovascular",
                "history of cardiovascular",
                "cvd history",
            ],
            &["family"],
        ),
        RiskFactor::KidneyDisease => (&["kidney", "renal"], &[]),
        RiskFactor::Diabetes => (&["diabet"], &[]),
        RiskFactor::FamilyHistory => (&["family", "heredit", "genetic"], &[]),
        RiskFactor::Obesity => (&["obes", "overweight", "weight", "bmi", "body mass"], &[]),
        RiskFactor::TotalCholesterol => (
            &["cholesterol"],
            &["non-hdl", "non hdl", "ldl", "lipoprotein"],
        ),
        RiskFactor::NonHdlCholesterol => (&["non-hdl", "non hdl", "ldl", "lipoprotein"], &[]),
        RiskFactor::BloodPressure => (&["blood pressure", "hypertension", "systolic"], &[]),
        RiskFactor::Glucose => (&["glucose", "blood sugar", "sugar level"], &[]),
        RiskFactor::Smoking => (&["smok", "tobacco", "cigarette"], &[]),
        RiskFactor::Inactivity => (
            &["inactiv", "physical activity", "exercise", "sedentary"],
            &[],
        ),
        RiskFactor::Diet => (&["diet", "nutrition", "eating", "food"], &[]),
    }
}

/// Whether `text` names `f` under the keyword rules.
pub fn mentions(text: &str, f: RiskFactor) -> bool {
    let lower = text.to_lowercase();
    let (hits, vetoes) = keywords(f);
    hits.iter().any(|k| lower.contains(k)) && !vetoes.iter().any(|k| lower.contains(k))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub title: String,
    pub body: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub matched: Vec<usize>,
    /// Requested factors with no section of their own.
    pub unmatched: Vec<usize>,
    /// Unmatched factors the response still talks about inside other
    /// sections.
    pub mentioned_inline: Vec<usize>,
    /// Section titles that matched no requested factor.
    pub extra_sections: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedResponse {
    pub texts: BTreeMap<RiskFactor, String>,
    pub preamble: Option<String>,
    pub closing: Option<String>,
    pub coverage: CoverageReport,
}

fn none_if_blank(s: String) -> Option<String> {
    let t = s.trim();
    (!t.is_empty()).then(|| t.to_string())
}

fn strip_markup(s: &str) -> String {
    s.replace("**", "")
        .trim()
        .trim_start_matches(':')
        .trim()
        .to_string()
}

/// Splits `text` into headed sections, returning the text before the first
/// heading alongside them.
pub fn split_sections(text: &str) -> (String, Vec<Section>) {
    let starts: Vec<(usize, usize)> = HEADING
        .find_iter(text)
        .map(|m| (m.start(), m.end()))
        .collect();
    let Some(first) = starts.first() else {
        return (text.trim().to_string(), Vec::new());
    };
    let preamble = text[..first.0].trim().to_string();
    let mut sections = Vec::with_capacity(starts.len());
    for (n, (_, head_end)) in starts.iter().enumerate() {
        let end = starts.get(n + 1).map_or(text.len(), |s| s.0);
        let chunk = &text[*head_end..end];
        let title_end = [chunk.find("**"), chunk.find('\n')]
            .into_iter()
            .flatten()
            .min()
            .unwrap_or(chunk.len());
        sections.push(Section {
            title: strip_markup(&chunk[..title_end]),
            body: strip_markup(&chunk[title_end..]),
        });
    }
    (preamble, sections)
}

/// Maps sections to `requested` factors and reports coverage.
pub fn parse_response(text: &str, requested: &[RiskFactor]) -> ParsedResponse {
    let mut out = ParsedResponse::default();
    let (preamble, mut sections) = split_sections(text);
    if sections.is_empty() {
        out.preamble = none_if_blank(preamble);
        out.coverage.unmatched = requested.iter().map(|f| f.index()).collect();
        out.coverage.notes.push(if text.trim().is_empty() {
            "empty response".to_string()
        } else {
            "no section headings; whole response kept as general explanation".to_string()
        });
        return out;
    }

    // Closing paragraphs ride on the last section body.
    let mut closing = String::new();
    if let Some(last) = sections.last_mut() {
        if let Some(m) = PARAGRAPH_BREAK.find(&last.body) {
            closing = last.body[m.end()..].trim().to_string();
            last.body = last.body[..m.start()].trim().to_string();
        }
    }

    let mut before = vec![preamble];
    let mut after = Vec::new();
    for section in &sections {
        let owners: Vec<RiskFactor> = requested
            .iter()
            .copied()
            .filter(|f| !out.texts.contains_key(f) && mentions(&section.title, *f))
            .collect();
        if owners.is_empty() || section.body.is_empty() {
            out.coverage.extra_sections.push(section.title.clone());
            let extra = format!("{}: {}", section.title, section.body);
            if out.texts.is_empty() {
                &mut before
            } else {
                &mut after
            }
            .push(extra);
            continue;
        }
        for f in owners {
            out.texts.insert(f, section.body.clone());
        }
    }
    after.push(closing);
    out.preamble = none_if_blank(
        before
            .into_iter()
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join("\n\n"),
    );
    out.closing = none_if_blank(
        after
            .into_iter()
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join("\n\n"),
    );

    for f in requested {
        if out.texts.contains_key(f) {
            out.coverage.matched.push(f.index());
            continue;
        }
        out.coverage.unmatched.push(f.index());
        if sections.iter().any(|s| mentions(&s.body, *f)) {
            out.coverage.mentioned_inline.push(f.index());
            out.coverage.notes.push(format!(
                "factor {} has no section of its own but is mentioned inside others",
                f.index()
            ));
        }
    }
    out
}
