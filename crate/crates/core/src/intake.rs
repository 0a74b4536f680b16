//! The 17-indicator health questionnaire.
//!
//! A questionnaire arrives as a flat JSON object keyed by `x1`..`x17` (or
//! the human aliases listed on [`Indicator`]). Anything the person did not
//! answer is stored as `0` with `provided = false`, which is also how the
//! rest of the pipeline treats an explicit zero.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Number, Value};

/// One questionnaire field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Indicator {
    Sex,
    Age,
    Height,
    Weight,
    FamilyHistory,
    DocumentedCvd,
    KidneyDisease,
    CvEvents,
    Diabetes,
    TotalCholesterol,
    NonHdlCholesterol,
    SystolicBp,
    Glucose,
    PhysicalInactivity,
    Smoking,
    UnhealthyDiet,
    AnginaSymptoms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorKind {
    /// Yes/no answer, stored as 0 or 1.
    Flag,
    /// Non-negative measurement in the given unit.
    Measure(&'static str),
}

impl Indicator {
    pub const COUNT: usize = 17;

    pub const ALL: [Indicator; Self::COUNT] = [
        Indicator::Sex,
        Indicator::Age,
        Indicator::Height,
        Indicator::Weight,
        Indicator::FamilyHistory,
        Indicator::DocumentedCvd,
        Indicator::KidneyDisease,
        Indicator::CvEvents,
        Indicator::Diabetes,
        Indicator::TotalCholesterol,
        Indicator::NonHdlCholesterol,
        Indicator::SystolicBp,
        Indicator::Glucose,
        Indicator::PhysicalInactivity,
        Indicator::Smoking,
        Indicator::UnhealthyDiet,
        Indicator::AnginaSymptoms,
    ];

    /// 1-based questionnaire number.
    pub fn number(self) -> usize {
        self as usize + 1
    }

    pub fn from_number(number: usize) -> Option<Self> {
        number
            .checked_sub(1)
            .and_then(|i| Self::ALL.get(i).copied())
    }

    /// Canonical document key, `x1`..`x17`.
    pub fn key(self) -> &'static str {
        const KEYS: [&str; Indicator::COUNT] = [
            "x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "x9", "x10", "x11", "x12", "x13",
            "x14", "x15", "x16", "x17",
        ];
        KEYS[self as usize]
    }

    pub fn alias(self) -> &'static str {
        match self {
            Indicator::Sex => "sex",
            Indicator::Age => "age",
            Indicator::Height => "height",
            Indicator::Weight => "weight",
            Indicator::FamilyHistory => "family_history",
            Indicator::DocumentedCvd => "cvd",
            Indicator::KidneyDisease => "kidney_disease",
            Indicator::CvEvents => "cv_events",
            Indicator::Diabetes => "diabetes",
            Indicator::TotalCholesterol => "total_cholesterol",
            Indicator::NonHdlCholesterol => "non_hdl",
            Indicator::SystolicBp => "sbp",
            Indicator::Glucose => "glucose",
            Indicator::PhysicalInactivity => "inactivity",
            Indicator::Smoking => "smoking",
            Indicator::UnhealthyDiet => "unhealthy_diet",
            Indicator::AnginaSymptoms => "angina",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Indicator::Sex => "sex (1 male, 0 female)",
            Indicator::Age => "age",
            Indicator::Height => "height",
            Indicator::Weight => "weight",
            Indicator::FamilyHistory => "family history of early CVD",
            Indicator::DocumentedCvd => "documented CVD",
            Indicator::KidneyDisease => "chronic kidney disease",
            Indicator::CvEvents => "history of CV events",
            Indicator::Diabetes => "type 2 diabetes",
            Indicator::TotalCholesterol => "total cholesterol",
            Indicator::NonHdlCholesterol => "non-HDL cholesterol",
            Indicator::SystolicBp => "systolic blood pressure",
            Indicator::Glucose => "glucose",
            Indicator::PhysicalInactivity => "physical inactivity",
            Indicator::Smoking => "smoking",
            Indicator::UnhealthyDiet => "unhealthy diet",
            Indicator::AnginaSymptoms => "angina symptoms with deterioration",
        }
    }

    pub fn kind(self) -> IndicatorKind {
        match self {
            Indicator::Age => IndicatorKind::Measure("years"),
            Indicator::Height => IndicatorKind::Measure("cm"),
            Indicator::Weight => IndicatorKind::Measure("kg"),
            Indicator::TotalCholesterol | Indicator::NonHdlCholesterol | Indicator::Glucose => {
                IndicatorKind::Measure("mmol/l")
            }
            Indicator::SystolicBp => IndicatorKind::Measure("mmHg"),
            _ => IndicatorKind::Flag,
        }
    }

    pub fn is_flag(self) -> bool {
        self.kind() == IndicatorKind::Flag
    }

    /// Plausible `[min, max]` for measurements. Values outside produce a
    /// warning, never a rejection.
    pub fn plausible_range(self) -> Option<(f64, f64)> {
        match self {
            Indicator::Age => Some((0.0, 120.0)),
            Indicator::Height => Some((50.0, 250.0)),
            Indicator::Weight => Some((20.0, 300.0)),
            Indicator::TotalCholesterol => Some((0.0, 20.0)),
            Indicator::NonHdlCholesterol => Some((0.0, 15.0)),
            Indicator::SystolicBp => Some((50.0, 300.0)),
            Indicator::Glucose => Some((0.0, 40.0)),
            _ => None,
        }
    }

    /// Resolves a canonical key or alias. Matching is exact apart from case.
    pub fn from_key(key: &str) -> Option<Self> {
        let key = key.trim().to_ascii_lowercase();
        Self::ALL
            .iter()
            .copied()
            .find(|i| i.key() == key || i.alias() == key)
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Indicator {
    type Err = IntakeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Indicator::from_key(s).ok_or_else(|| IntakeError::UnknownField(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntakeError {
    #[error("questionnaire is not valid JSON: {0}")]
    Syntax(String),
    #[error("questionnaire must be a flat JSON object")]
    NotAnObject,
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("{field} is given more than once")]
    Duplicate { field: Indicator },
    #[error("{field}: expected a number, got {found}")]
    Malformed { field: Indicator, found: String },
    #[error("{field}: negative value {value} is not allowed, indicators must be >= 0")]
    Negative { field: Indicator, value: f64 },
    #[error("{field}: flag must be 0 or 1, got {value}")]
    NotBinary { field: Indicator, value: f64 },
}

impl IntakeError {
    /// The offending document key, when the error concerns one field.
    pub fn field_path(&self) -> Option<String> {
        match self {
            IntakeError::Syntax(_) | IntakeError::NotAnObject => None,
            IntakeError::UnknownField(key) => Some(key.clone()),
            IntakeError::Duplicate { field }
            | IntakeError::Malformed { field, .. }
            | IntakeError::Negative { field, .. }
            | IntakeError::NotBinary { field, .. } => Some(field.key().to_string()),
        }
    }

    /// Well-formed value that breaks a domain constraint (as opposed to a
    /// document that could not be read at all).
    pub fn is_constraint_violation(&self) -> bool {
        matches!(
            self,
            IntakeError::Negative { .. } | IntakeError::NotBinary { .. }
        )
    }
}

/// A parsed questionnaire.
///
/// Values are kept in questionnaire order; unanswered fields hold `0.0`.
/// Systolic pressure may carry a diastolic companion when the person wrote
/// the reading as `"160/90"`; only the systolic value takes part in any rule.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HealthIndicators {
    values: [f64; Indicator::COUNT],
    provided: [bool; Indicator::COUNT],
    diastolic: Option<f64>,
}

impl HealthIndicators {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, indicator: Indicator) -> f64 {
        self.values[indicator as usize]
    }

    pub fn is_provided(&self, indicator: Indicator) -> bool {
        self.provided[indicator as usize]
    }

    /// `Some(value)` only when the person answered the field.
    pub fn provided_value(&self, indicator: Indicator) -> Option<f64> {
        self.is_provided(indicator).then(|| self.get(indicator))
    }

    pub fn flag(&self, indicator: Indicator) -> bool {
        self.get(indicator) == 1.0
    }

    pub fn diastolic(&self) -> Option<f64> {
        self.diastolic
    }

    pub fn is_empty(&self) -> bool {
        !self.provided.iter().any(|p| *p)
    }

    /// Records an answer, enforcing the sign and flag constraints.
    pub fn set(&mut self, indicator: Indicator, value: f64) -> Result<(), IntakeError> {
        check_value(indicator, value)?;
        self.values[indicator as usize] = value;
        self.provided[indicator as usize] = true;
        if indicator == Indicator::SystolicBp {
            self.diastolic = None;
        }
        Ok(())
    }

    pub fn with(mut self, indicator: Indicator, value: f64) -> Result<Self, IntakeError> {
        self.set(indicator, value)?;
        Ok(self)
    }

    /// Records a full blood-pressure reading. The diastolic part is kept for
    /// display only.
    pub fn set_blood_pressure(&mut self, systolic: f64, diastolic: f64) -> Result<(), IntakeError> {
        self.set(Indicator::SystolicBp, systolic)?;
        if !diastolic.is_finite() || diastolic < 0.0 {
            return Err(IntakeError::Malformed {
                field: Indicator::SystolicBp,
                found: format!("{systolic}/{diastolic}"),
            });
        }
        self.diastolic = Some(diastolic);
        Ok(())
    }

    /// Forgets an answer; the field returns to `0` / not provided.
    pub fn clear(&mut self, indicator: Indicator) {
        self.values[indicator as usize] = 0.0;
        self.provided[indicator as usize] = false;
        if indicator == Indicator::SystolicBp {
            self.diastolic = None;
        }
    }

    pub fn sex_is_male(&self) -> bool {
        self.flag(Indicator::Sex)
    }

    pub fn age(&self) -> f64 {
        self.get(Indicator::Age)
    }

    pub fn systolic_bp(&self) -> f64 {
        self.get(Indicator::SystolicBp)
    }

    /// Blood pressure as the person entered it, e.g. `160/90` or `160`.
    pub fn blood_pressure_display(&self) -> String {
        match self.diastolic {
            Some(d) => format!("{}/{}", fmt_number(self.systolic_bp()), fmt_number(d)),
            None => fmt_number(self.systolic_bp()),
        }
    }

    /// Canonical JSON document holding only the answered fields.
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for ind in Indicator::ALL {
            if !self.is_provided(ind) {
                continue;
            }
            let value = if ind == Indicator::SystolicBp && self.diastolic.is_some() {
                Value::String(self.blood_pressure_display())
            } else {
                number_value(self.get(ind))
            };
            map.insert(ind.key().to_string(), value);
        }
        Value::Object(map)
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

fn number_value(v: f64) -> Value {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        Value::Number(Number::from(v as i64))
    } else {
        Number::from_f64(v)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }
}

/// Formats a measurement without a trailing `.0`.
pub fn fmt_number(v: f64) -> String {
    format!("{v}")
}

fn check_value(field: Indicator, value: f64) -> Result<(), IntakeError> {
    if !value.is_finite() {
        return Err(IntakeError::Malformed {
            field,
            found: value.to_string(),
        });
    }
    if value < 0.0 {
        return Err(IntakeError::Negative { field, value });
    }
    if field.is_flag() && value != 0.0 && value != 1.0 {
        return Err(IntakeError::NotBinary { field, value });
    }
    Ok(())
}

fn parse_number(field: Indicator, raw: &Value) -> Result<f64, IntakeError> {
    let malformed = || IntakeError::Malformed {
        field,
        found: raw.to_string(),
    };
    match raw {
        Value::Number(n) => n.as_f64().ok_or_else(malformed),
        Value::Bool(b) if field.is_flag() => Ok(if *b { 1.0 } else { 0.0 }),
        Value::String(s) => {
            let v: f64 = s.trim().parse().map_err(|_| malformed())?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(malformed())
            }
        }
        _ => Err(malformed()),
    }
}

/// Parses a questionnaire document.
///
/// Unknown keys are rejected, absent keys (and explicit `null`) stay
/// unanswered. Numbers may be given as JSON numbers or numeric strings;
/// flags additionally accept booleans. `x12` accepts `"160/90"`.
pub fn parse_questionnaire(doc: &Value) -> Result<HealthIndicators, IntakeError> {
    let obj = doc.as_object().ok_or(IntakeError::NotAnObject)?;
    let mut out = HealthIndicators::new();
    let mut seen = [false; Indicator::COUNT];

    for (key, raw) in obj {
        let field =
            Indicator::from_key(key).ok_or_else(|| IntakeError::UnknownField(key.clone()))?;
        if std::mem::replace(&mut seen[field as usize], true) {
            return Err(IntakeError::Duplicate { field });
        }
        if raw.is_null() {
            continue;
        }
        if field == Indicator::SystolicBp {
            if let Some((sys, dia)) = raw.as_str().and_then(|s| s.split_once('/')) {
                let malformed = || IntakeError::Malformed {
                    field,
                    found: raw.to_string(),
                };
                let sys: f64 = sys.trim().parse().map_err(|_| malformed())?;
                let dia: f64 = dia.trim().parse().map_err(|_| malformed())?;
                out.set_blood_pressure(sys, dia)?;
                continue;
            }
        }
        let value = parse_number(field, raw)?;
        out.set(field, value)?;
    }
    Ok(out)
}

pub fn parse_questionnaire_str(text: &str) -> Result<HealthIndicators, IntakeError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| IntakeError::Syntax(e.to_string()))?;
    parse_questionnaire(&doc)
}

impl Serialize for HealthIndicators {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HealthIndicators {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = Value::deserialize(deserializer)?;
        parse_questionnaire(&doc).map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub field: String,
    pub message: String,
}

/// Outcome of [`validate`]. Never mutates the record.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub warnings: Vec<Issue>,
    pub errors: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Range-checks answered measurements and re-checks the hard constraints.
pub fn validate(ind: &HealthIndicators) -> ValidationReport {
    let mut report = ValidationReport::default();
    for field in Indicator::ALL {
        let value = ind.get(field);
        if let Err(e) = check_value(field, value) {
            report.errors.push(Issue {
                field: field.key().into(),
                message: e.to_string(),
            });
            continue;
        }
        if !ind.is_provided(field) {
            continue;
        }
        if let Some((min, max)) = field.plausible_range() {
            let message = if value > max {
                Some(format!("{field} above plausible max ({value} > {max})"))
            } else if value < min {
                Some(format!("{field} below plausible min ({value} < {min})"))
            } else {
                None
            };
            if let Some(message) = message {
                report.warnings.push(Issue {
                    field: field.key().into(),
                    message,
                });
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn worked_example() -> Value {
        json!({
            "x1": 0, "x2": 49, "x3": 170, "x4": 74,
            "x5": 0, "x6": 0, "x7": 0, "x8": 0, "x9": 0,
            "x10": 5.0, "x11": 3.0, "x12": "160/90", "x13": 4.8,
            "x14": 1, "x15": 1, "x16": 1, "x17": 0
        })
    }

    #[test]
    fn empty_document_is_all_zero_and_unanswered() {
        let ind = parse_questionnaire(&json!({})).unwrap();
        for f in Indicator::ALL {
            assert_eq!(ind.get(f), 0.0);
            assert!(!ind.is_provided(f));
        }
        assert!(ind.is_empty());
    }

    #[test]
    fn worked_example_document() {
        let ind = parse_questionnaire(&worked_example()).unwrap();
        assert!(!ind.sex_is_male());
        assert_eq!(ind.age(), 49.0);
        assert_eq!(ind.get(Indicator::Height), 170.0);
        assert_eq!(ind.get(Indicator::Weight), 74.0);
        assert_eq!(ind.get(Indicator::TotalCholesterol), 5.0);
        assert_eq!(ind.get(Indicator::NonHdlCholesterol), 3.0);
        assert_eq!(ind.systolic_bp(), 160.0);
        assert_eq!(ind.diastolic(), Some(90.0));
        assert_eq!(ind.get(Indicator::Glucose), 4.8);
        assert!(ind.flag(Indicator::PhysicalInactivity));
        assert!(ind.flag(Indicator::Smoking));
        assert!(ind.flag(Indicator::UnhealthyDiet));
        assert!(!ind.flag(Indicator::AnginaSymptoms));
        assert!(Indicator::ALL.iter().all(|f| ind.is_provided(*f)));
    }

    #[test]
    fn negative_value_is_rejected() {
        let err = parse_questionnaire(&json!({"x2": "-5"})).unwrap_err();
        assert_eq!(
            err,
            IntakeError::Negative {
                field: Indicator::Age,
                value: -5.0
            }
        );
        assert!(err.is_constraint_violation());
        assert_eq!(err.field_path().as_deref(), Some("x2"));
    }

    #[test]
    fn malformed_and_unknown_fields() {
        let err = parse_questionnaire(&json!({"x12": "abc"})).unwrap_err();
        assert!(matches!(
            err,
            IntakeError::Malformed {
                field: Indicator::SystolicBp,
                ..
            }
        ));
        assert!(!err.is_constraint_violation());

        let err = parse_questionnaire(&json!({"x18": 1})).unwrap_err();
        assert_eq!(err, IntakeError::UnknownField("x18".into()));

        let err = parse_questionnaire(&json!({"x15": 2})).unwrap_err();
        assert!(matches!(
            err,
            IntakeError::NotBinary {
                field: Indicator::Smoking,
                ..
            }
        ));

        assert_eq!(
            parse_questionnaire(&json!([1, 2])).unwrap_err(),
            IntakeError::NotAnObject
        );
        assert!(matches!(
            parse_questionnaire(&json!({"x2": "inf"})).unwrap_err(),
            IntakeError::Malformed { .. }
        ));
    }

    #[test]
    fn aliases_normalize_and_collide() {
        let ind = parse_questionnaire(&json!({"age": 61, "SBP": 150, "smoking": true})).unwrap();
        assert_eq!(ind.age(), 61.0);
        assert_eq!(ind.systolic_bp(), 150.0);
        assert!(ind.flag(Indicator::Smoking));
        let err = parse_questionnaire(&json!({"age": 61, "x2": 61})).unwrap_err();
        assert_eq!(
            err,
            IntakeError::Duplicate {
                field: Indicator::Age
            }
        );
    }

    #[test]
    fn null_counts_as_missing() {
        let ind = parse_questionnaire(&json!({"x10": null})).unwrap();
        assert!(!ind.is_provided(Indicator::TotalCholesterol));
    }

    #[test]
    fn validation_ranges() {
        let ind = parse_questionnaire(&worked_example()).unwrap();
        assert_eq!(validate(&ind), ValidationReport::default());

        let ind = HealthIndicators::new()
            .with(Indicator::SystolicBp, 400.0)
            .unwrap();
        let report = validate(&ind);
        assert!(report.is_valid());
        assert_eq!(report.warnings.len(), 1);
        assert!(report.warnings[0]
            .message
            .starts_with("x12 above plausible max"));

        let report = validate(&HealthIndicators::new());
        assert!(report.errors.is_empty());
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn serialize_keeps_only_answers() {
        let ind = parse_questionnaire(&json!({"x2": 49, "x12": "160/90", "x13": 4.8})).unwrap();
        assert_eq!(
            ind.to_json(),
            json!({"x2": 49, "x12": "160/90", "x13": 4.8})
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        pub(crate) fn arb_indicators() -> impl Strategy<Value = HealthIndicators> {
            let field = (any::<bool>(), 0u32..4000u32, any::<bool>());
            (
                proptest::collection::vec(field, Indicator::COUNT),
                proptest::option::of(40u32..130),
            )
                .prop_map(|(fields, dia)| {
                    let mut ind = HealthIndicators::new();
                    for (f, (present, raw, bit)) in Indicator::ALL.iter().zip(fields) {
                        if !present {
                            continue;
                        }
                        let v = if f.is_flag() {
                            bit as u8 as f64
                        } else {
                            raw as f64 / 10.0
                        };
                        ind.set(*f, v).unwrap();
                    }
                    if let (Some(d), true) = (dia, ind.is_provided(Indicator::SystolicBp)) {
                        ind.set_blood_pressure(ind.systolic_bp(), d as f64).unwrap();
                    }
                    ind
                })
        }

        proptest! {
            #[test]
            fn round_trip(ind in arb_indicators()) {
                let text = serde_json::to_string(&ind).unwrap();
                let back = parse_questionnaire_str(&text).unwrap();
                prop_assert_eq!(back, ind);
            }

            #[test]
            fn omitted_fields_are_zero(mask in proptest::collection::vec(any::<bool>(), Indicator::COUNT)) {
                let mut doc = Map::new();
                for (f, keep) in Indicator::ALL.iter().zip(&mask) {
                    if *keep {
                        doc.insert(f.key().into(), json!(1));
                    }
                }
                let ind = parse_questionnaire(&Value::Object(doc)).unwrap();
                for (f, keep) in Indicator::ALL.iter().zip(&mask) {
                    if !keep {
                        prop_assert_eq!(ind.get(*f), 0.0);
                        prop_assert!(!ind.is_provided(*f));
                    }
                }
            }

            #[test]
            fn parse_never_panics(entries in proptest::collection::btree_map("x[0-9]{1,2}|age|sbp|foo", prop_oneof![
                any::<f64>().prop_map(|v| json!(v)),
                ".{0,8}".prop_map(Value::String),
                any::<bool>().prop_map(Value::Bool),
                Just(Value::Null),
            ], 0..20)) {
                let doc: Map<String, Value> = entries.into_iter().collect();
                let _ = parse_questionnaire(&Value::Object(doc));
            }
        }
    }
}
