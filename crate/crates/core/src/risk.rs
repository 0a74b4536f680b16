//! Ten-year CVD risk: the gate, the SCORE2 / SCORE2-OP estimate and the
//! category bands.
//!
//! People with angina symptoms, documented CVD, diabetes or a family history
//! skip the model entirely and land in the very-high category. Everyone else
//! aged 40..=89 with non-HDL cholesterol and systolic pressure on record gets
//! a model estimate; the rest are reported as not assessed.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::factors::{FactorVector, RiskFactor};
use crate::intake::{HealthIndicators, Indicator};

const SHIPPED_CALIBRATION: &str = include_str!("../data/score2_calibration.json");

/// `f(1) | f(2) | f(4) | f(5)`. Kidney disease (f(3)) does not gate.
pub fn sco_flag(fv: &FactorVector) -> bool {
    [
        RiskFactor::AnginaSymptoms,
        RiskFactor::DocumentedCvd,
        RiskFactor::Diabetes,
        RiskFactor::FamilyHistory,
    ]
    .into_iter()
    .any(|f| fv.is_set(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskCategory {
    Low,
    Moderate,
    High,
    VeryHigh,
    NotAssessed,
}

impl RiskCategory {
    pub const ASSESSED: [RiskCategory; 4] = [
        RiskCategory::Low,
        RiskCategory::Moderate,
        RiskCategory::High,
        RiskCategory::VeryHigh,
    ];

    /// Human wording, e.g. `very high`.
    pub fn label(self) -> &'static str {
        match self {
            RiskCategory::Low => "low",
            RiskCategory::Moderate => "moderate",
            RiskCategory::High => "high",
            RiskCategory::VeryHigh => "very high",
            RiskCategory::NotAssessed => "not assessed",
        }
    }

    pub fn is_assessed(self) -> bool {
        self != RiskCategory::NotAssessed
    }
}

impl fmt::Display for RiskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Maps a percent risk to its band; the gate overrides everything.
/// Bands are left-closed: 2.5 is moderate, 5 is high, 10 is very high.
pub fn categorize(cvrisk: f64, sco: bool) -> RiskCategory {
    if sco || cvrisk >= 10.0 {
        RiskCategory::VeryHigh
    } else if cvrisk >= 5.0 {
        RiskCategory::High
    } else if cvrisk >= 2.5 {
        RiskCategory::Moderate
    } else {
        RiskCategory::Low
    }
}

/// Why the model could not be used for a person.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RiskError {
    #[error("risk model applies to ages 40-89, got {age}")]
    AgeOutOfRange { age: f64 },
    #[error("risk model needs {}", fields.iter().map(|f| f.key()).collect::<Vec<_>>().join(", "))]
    MissingInputs { fields: Vec<Indicator> },
}

#[derive(Debug, thiserror::Error)]
pub enum CalibrationError {
    #[error("calibration file is not valid: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("region `{0}` is not in every model of the calibration file")]
    UnknownRegion(String),
    #[error("calibration models must cover ages 40-89 without gaps: {0}")]
    Coverage(String),
    #[error("calibration value out of range: {0}")]
    Value(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub age: f64,
    pub smoking: f64,
    pub sbp: f64,
    pub total_cholesterol: f64,
    pub hdl: f64,
    pub smoking_age: f64,
    pub sbp_age: f64,
    pub total_cholesterol_age: f64,
    pub hdl_age: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Centering {
    pub age: f64,
    pub age_scale: f64,
    pub sbp: f64,
    pub sbp_scale: f64,
    pub total_cholesterol: f64,
    pub total_cholesterol_scale: f64,
    pub hdl: f64,
    pub hdl_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SexParameters {
    pub coefficients: Coefficients,
    pub baseline_survival: f64,
    pub mean_linear_predictor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct RegionScales {
    male: [f64; 2],
    female: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    name: String,
    age_min: u32,
    age_max: u32,
    centering: Centering,
    reference_hdl: f64,
    male: SexParameters,
    female: SexParameters,
    regions: BTreeMap<String, RegionScales>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CalibrationFile {
    name: String,
    version: String,
    source: String,
    #[serde(default)]
    notes: Vec<String>,
    default_region: String,
    models: Vec<ModelFile>,
}

/// One age-band model with the regional recalibration already selected.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCalibration {
    pub name: String,
    pub age_min: u32,
    pub age_max: u32,
    pub centering: Centering,
    pub reference_hdl: f64,
    pub male: SexParameters,
    pub female: SexParameters,
    /// `(scale1, scale2)` per sex.
    pub male_scales: (f64, f64),
    pub female_scales: (f64, f64),
}

/// The five model inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskInputs {
    pub male: bool,
    pub age: f64,
    pub non_hdl: f64,
    pub sbp: f64,
    pub smoker: bool,
}

impl RiskInputs {
    /// Requires age, non-HDL cholesterol and systolic pressure to be on
    /// record. Sex and smoking fall back to the questionnaire default (0).
    pub fn from_indicators(ind: &HealthIndicators) -> Result<Self, RiskError> {
        let missing: Vec<Indicator> = [
            Indicator::Age,
            Indicator::NonHdlCholesterol,
            Indicator::SystolicBp,
        ]
        .into_iter()
        .filter(|f| !ind.is_provided(*f) || ind.get(*f) <= 0.0)
        .collect();
        if !missing.is_empty() {
            return Err(RiskError::MissingInputs { fields: missing });
        }
        Ok(Self {
            male: ind.sex_is_male(),
            age: ind.age(),
            non_hdl: ind.get(Indicator::NonHdlCholesterol),
            sbp: ind.systolic_bp(),
            smoker: ind.flag(Indicator::Smoking),
        })
    }
}

impl ModelCalibration {
    /// Ten-year risk in percent.
    pub fn predict(&self, x: &RiskInputs) -> f64 {
        let (p, (scale1, scale2)) = if x.male {
            (&self.male, self.male_scales)
        } else {
            (&self.female, self.female_scales)
        };
        let c = &self.centering;
        let b = &p.coefficients;
        let smoking = if x.smoker { 1.0 } else { 0.0 };
        let hdl = self.reference_hdl;
        let age = (x.age - c.age) / c.age_scale;
        let sbp = (x.sbp - c.sbp) / c.sbp_scale;
        let tchol = (x.non_hdl + hdl - c.total_cholesterol) / c.total_cholesterol_scale;
        let hdl = (hdl - c.hdl) / c.hdl_scale;

        let lp = b.age * age
            + b.smoking * smoking
            + b.sbp * sbp
            + b.total_cholesterol * tchol
            + b.hdl * hdl
            + b.smoking_age * smoking * age
            + b.sbp_age * sbp * age
            + b.total_cholesterol_age * tchol * age
            + b.hdl_age * hdl * age;

        let uncalibrated = 1.0
            - p.baseline_survival
                .powf((lp - p.mean_linear_predictor).exp());
        let calibrated = 1.0 - (-(scale1 + scale2 * (-(1.0 - uncalibrated).ln()).ln()).exp()).exp();
        100.0 * calibrated
    }
}

/// Model estimate together with the model that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub percent: f64,
    pub model: String,
}

/// Loaded calibration for one risk region. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskCalibration {
    pub name: String,
    pub version: String,
    pub source: String,
    pub region: String,
    pub models: Vec<ModelCalibration>,
}

impl RiskCalibration {
    pub fn from_json_str(text: &str, region: Option<&str>) -> Result<Self, CalibrationError> {
        let file: CalibrationFile = serde_json::from_str(text)?;
        let region = region.unwrap_or(&file.default_region).to_string();

        let mut models = Vec::with_capacity(file.models.len());
        for m in file.models {
            let scales = m
                .regions
                .get(&region)
                .ok_or_else(|| CalibrationError::UnknownRegion(region.clone()))?;
            for (sex, p) in [("male", &m.male), ("female", &m.female)] {
                if !(p.baseline_survival > 0.0 && p.baseline_survival < 1.0) {
                    return Err(CalibrationError::Value(format!(
                        "{} {sex} baseline survival {}",
                        m.name, p.baseline_survival
                    )));
                }
            }
            if scales.male[1] <= 0.0 || scales.female[1] <= 0.0 {
                return Err(CalibrationError::Value(format!(
                    "{} {region} scale2 must be positive",
                    m.name
                )));
            }
            models.push(ModelCalibration {
                name: m.name,
                age_min: m.age_min,
                age_max: m.age_max,
                centering: m.centering,
                reference_hdl: m.reference_hdl,
                male: m.male,
                female: m.female,
                male_scales: (scales.male[0], scales.male[1]),
                female_scales: (scales.female[0], scales.female[1]),
            });
        }
        models.sort_by_key(|m| m.age_min);
        check_coverage(&models)?;

        Ok(Self {
            name: file.name,
            version: file.version,
            source: file.source,
            region,
            models,
        })
    }

    /// The calibration compiled into the crate, default region.
    pub fn shipped() -> Self {
        Self::from_json_str(SHIPPED_CALIBRATION, None).expect("shipped calibration is valid")
    }

    pub fn shipped_region(region: &str) -> Result<Self, CalibrationError> {
        Self::from_json_str(SHIPPED_CALIBRATION, Some(region))
    }

    pub fn shipped_json() -> &'static str {
        SHIPPED_CALIBRATION
    }

    pub fn model_for_age(&self, age: f64) -> Option<&ModelCalibration> {
        if !age.is_finite() || age < 0.0 {
            return None;
        }
        let whole = age.floor() as u32;
        self.models
            .iter()
            .find(|m| (m.age_min..=m.age_max).contains(&whole))
    }

    pub fn predict(&self, x: &RiskInputs) -> Result<Prediction, RiskError> {
        let model = self
            .model_for_age(x.age)
            .ok_or(RiskError::AgeOutOfRange { age: x.age })?;
        Ok(Prediction {
            percent: model.predict(x),
            model: model.name.clone(),
        })
    }

    /// Ten-year fatal + non-fatal CVD risk in percent.
    pub fn score2(&self, ind: &HealthIndicators) -> Result<f64, RiskError> {
        self.predict(&RiskInputs::from_indicators(ind)?)
            .map(|p| p.percent)
    }

    pub fn label(&self) -> String {
        format!("{} {} ({})", self.name, self.version, self.region)
    }
}

fn check_coverage(models: &[ModelCalibration]) -> Result<(), CalibrationError> {
    let first = models
        .first()
        .ok_or_else(|| CalibrationError::Coverage("no models".into()))?;
    if first.age_min != 40 {
        return Err(CalibrationError::Coverage(format!(
            "first model starts at {}",
            first.age_min
        )));
    }
    for pair in models.windows(2) {
        if pair[0].age_max + 1 != pair[1].age_min {
            return Err(CalibrationError::Coverage(format!(
                "{} ends at {} but {} starts at {}",
                pair[0].name, pair[0].age_max, pair[1].name, pair[1].age_min
            )));
        }
    }
    let last = models.last().unwrap();
    if last.age_max != 89 {
        return Err(CalibrationError::Coverage(format!(
            "last model ends at {}",
            last.age_max
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Applicability {
    /// The model produced `cvrisk`.
    Estimated {
        model: String,
    },
    /// Gate factor present; very high without consulting the model.
    Gated,
    AgeOutOfRange {
        age: f64,
    },
    MissingInputs {
        fields: Vec<String>,
    },
}

impl Applicability {
    pub fn note(&self) -> String {
        match self {
            Applicability::Estimated { model } => format!("estimated with {model}"),
            Applicability::Gated => {
                "very high because of angina symptoms, documented CVD, diabetes or family history"
                    .into()
            }
            Applicability::AgeOutOfRange { age } => {
                format!("not applicable: risk model covers ages 40-89, age is {age}")
            }
            Applicability::MissingInputs { fields } => {
                format!("not assessed: missing {}", fields.join(", "))
            }
        }
    }
}

/// Predictive part of the user profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub sco: bool,
    /// Percent, full precision. Present only when the model ran.
    pub cvrisk: Option<f64>,
    pub category: RiskCategory,
    pub applicability: Applicability,
}

pub fn assess_risk(
    fv: &FactorVector,
    ind: &HealthIndicators,
    cal: &RiskCalibration,
) -> RiskEstimate {
    assess_risk_with(fv, ind, |x| cal.predict(x))
}

/// Like [`assess_risk`], with the model supplied by the caller. The model is
/// not called when the gate is set.
pub fn assess_risk_with<M>(fv: &FactorVector, ind: &HealthIndicators, model: M) -> RiskEstimate
where
    M: FnOnce(&RiskInputs) -> Result<Prediction, RiskError>,
{
    let sco = sco_flag(fv);
    if sco {
        return RiskEstimate {
            sco,
            cvrisk: None,
            category: RiskCategory::VeryHigh,
            applicability: Applicability::Gated,
        };
    }
    let outcome = RiskInputs::from_indicators(ind).and_then(|x| model(&x));
    match outcome {
        Ok(p) => RiskEstimate {
            sco,
            cvrisk: Some(p.percent),
            category: categorize(p.percent, false),
            applicability: Applicability::Estimated { model: p.model },
        },
        Err(e) => {
            tracing::debug!(reason = %e, "risk model not applicable");
            RiskEstimate {
                sco,
                cvrisk: None,
                category: RiskCategory::NotAssessed,
                applicability: match e {
                    RiskError::AgeOutOfRange { age } => Applicability::AgeOutOfRange { age },
                    RiskError::MissingInputs { fields } => Applicability::MissingInputs {
                        fields: fields.iter().map(|f| f.key().to_string()).collect(),
                    },
                },
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factors::{derive_factors, Thresholds};

    fn person(male: bool, age: f64, non_hdl: f64, sbp: f64, smoker: bool) -> RiskInputs {
        RiskInputs {
            male,
            age,
            non_hdl,
            sbp,
            smoker,
        }
    }

    #[test]
    fn gate() {
        assert!(!sco_flag(&FactorVector::from_mask(0)));
        assert!(sco_flag(&FactorVector::from_mask(1 << 1)));
        assert!(!sco_flag(&FactorVector::from_mask(1 << 2)));
        for i in [1usize, 2, 4, 5] {
            assert!(sco_flag(&FactorVector::from_mask(1 << (i - 1))));
        }
        for i in (6..=13).chain([3]) {
            assert!(!sco_flag(&FactorVector::from_mask(1 << (i - 1))));
        }
    }

    #[test]
    fn bands() {
        assert_eq!(categorize(1.0, true), RiskCategory::VeryHigh);
        assert_eq!(categorize(6.0, false), RiskCategory::High);
        assert_eq!(categorize(2.5, false), RiskCategory::Moderate);
        assert_eq!(categorize(2.4999, false), RiskCategory::Low);
        assert_eq!(categorize(0.0, false), RiskCategory::Low);
        assert_eq!(categorize(100.0, false), RiskCategory::VeryHigh);
    }

    #[test]
    fn shipped_calibration_loads_every_region() {
        let cal = RiskCalibration::shipped();
        assert_eq!(cal.region, "moderate");
        assert_eq!(cal.models.len(), 2);
        for region in ["low", "moderate", "high", "very_high"] {
            RiskCalibration::shipped_region(region).unwrap();
        }
        assert!(matches!(
            RiskCalibration::shipped_region("mars"),
            Err(CalibrationError::UnknownRegion(_))
        ));
    }

    #[test]
    fn gap_in_age_coverage_is_rejected() {
        let mut doc: serde_json::Value = serde_json::from_str(SHIPPED_CALIBRATION).unwrap();
        doc["models"][1]["age_min"] = 71.into();
        let err = RiskCalibration::from_json_str(&doc.to_string(), None).unwrap_err();
        assert!(matches!(err, CalibrationError::Coverage(_)), "{err}");
    }

    // Reference values come from evaluating the published formula by hand
    // (see the calibration notes) for each region.
    #[test]
    fn worked_example_by_region() {
        let x = person(false, 49.0, 3.0, 160.0, true);
        for (region, expected) in [
            ("low", 4.596_875),
            ("moderate", 5.577_242),
            ("high", 7.704_435),
            ("very_high", 15.098_582),
        ] {
            let got = RiskCalibration::shipped_region(region)
                .unwrap()
                .predict(&x)
                .unwrap();
            assert!(
                (got.percent - expected).abs() < 1e-4,
                "{region}: {}",
                got.percent
            );
            assert_eq!(got.model, "SCORE2");
        }
    }

    #[test]
    fn age_limits() {
        let cal = RiskCalibration::shipped();
        assert_eq!(
            cal.predict(&person(true, 39.0, 4.0, 130.0, false))
                .unwrap_err(),
            RiskError::AgeOutOfRange { age: 39.0 }
        );
        assert!(cal.predict(&person(true, 90.0, 4.0, 130.0, false)).is_err());
        assert_eq!(
            cal.predict(&person(true, 40.0, 4.0, 130.0, false))
                .unwrap()
                .model,
            "SCORE2"
        );
        assert_eq!(
            cal.predict(&person(true, 69.9, 4.0, 130.0, false))
                .unwrap()
                .model,
            "SCORE2"
        );
        assert_eq!(
            cal.predict(&person(true, 70.0, 4.0, 130.0, false))
                .unwrap()
                .model,
            "SCORE2-OP"
        );
        assert_eq!(
            cal.predict(&person(true, 89.0, 4.0, 130.0, false))
                .unwrap()
                .model,
            "SCORE2-OP"
        );
    }

    #[test]
    fn smoking_raises_risk() {
        let cal = RiskCalibration::shipped();
        for male in [false, true] {
            for age in [45.0, 55.0, 65.0, 75.0, 85.0] {
                let non = cal
                    .predict(&person(male, age, 4.5, 140.0, false))
                    .unwrap()
                    .percent;
                let smk = cal
                    .predict(&person(male, age, 4.5, 140.0, true))
                    .unwrap()
                    .percent;
                assert!(smk > non, "male={male} age={age}: {smk} <= {non}");
            }
        }
    }

    #[test]
    fn missing_inputs_are_named() {
        let ind = HealthIndicators::new().with(Indicator::Age, 50.0).unwrap();
        let err = RiskInputs::from_indicators(&ind).unwrap_err();
        assert_eq!(
            err,
            RiskError::MissingInputs {
                fields: vec![Indicator::NonHdlCholesterol, Indicator::SystolicBp]
            }
        );
        assert_eq!(err.to_string(), "risk model needs x11, x12");
    }

    #[test]
    fn gated_profile_never_calls_the_model() {
        let ind = HealthIndicators::new()
            .with(Indicator::AnginaSymptoms, 1.0)
            .unwrap();
        let fv = derive_factors(&ind, &Thresholds::default());
        let est = assess_risk_with(&fv, &ind, |_| panic!("model must not run"));
        assert_eq!(est.category, RiskCategory::VeryHigh);
        assert_eq!(est.applicability, Applicability::Gated);
        assert!(est.cvrisk.is_none());
    }

    #[test]
    fn ungated_out_of_range_is_not_assessed() {
        let ind = HealthIndicators::new();
        let fv = derive_factors(&ind, &Thresholds::default());
        let est = assess_risk(&fv, &ind, &RiskCalibration::shipped());
        assert_eq!(est.category, RiskCategory::NotAssessed);
        assert!(matches!(
            est.applicability,
            Applicability::MissingInputs { .. }
        ));

        let ind = HealthIndicators::new()
            .with(Indicator::Age, 39.0)
            .unwrap()
            .with(Indicator::NonHdlCholesterol, 4.0)
            .unwrap()
            .with(Indicator::SystolicBp, 130.0)
            .unwrap();
        let est = assess_risk(&fv, &ind, &RiskCalibration::shipped());
        assert_eq!(
            est.applicability,
            Applicability::AgeOutOfRange { age: 39.0 }
        );
    }
}
