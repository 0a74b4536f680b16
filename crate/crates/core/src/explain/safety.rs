//! Rejects generated text that prescribes medication or doses.

use std::sync::LazyLock;

use regex::Regex;

static DOSE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b\d+(?:[.,]\d+)?\s*(?:mg|mcg|µg|milligrams?|micrograms?|ml|iu|units?)\b")
        .unwrap()
});

static DRUG: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b(?:\w*statin|aspirin|metformin|insulin|warfarin|clopidogrel|lisinopril|enalapril|ramipril|perindopril|captopril|losartan|valsartan|candesartan|telmisartan|amlodipine|bisoprolol|metoprolol|nitroglycerin|ezetimibe)s?\b",
    )
    .unwrap()
});

/// Why a text was rejected.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Unsafe {
    #[error("contains a dose: `{0}`")]
    Dose(String),
    #[error("names a medication: `{0}`")]
    Medication(String),
}

pub fn check(text: &str) -> Result<(), Unsafe> {
    if let Some(m) = DOSE.find(text) {
        return Err(Unsafe::Dose(m.as_str().to_string()));
    }
    if let Some(m) = DRUG.find(text) {
        return Err(Unsafe::Medication(m.as_str().to_string()));
    }
    Ok(())
}
