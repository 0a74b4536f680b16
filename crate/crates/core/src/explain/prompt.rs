//! Prompt construction for generated explanations.

use serde::{Deserialize, Serialize};

use crate::factors::RiskFactor;
use crate::intake::{fmt_number, HealthIndicators, Indicator};
use crate::recommend::UserProfile;

const TASK: &str =
    "Please give the explanations why person need to control her/his CV risk factors such as";
const CONSTRAINTS: &str = "The explanation must be understandable to the person, include only person CV risk factors and contain no more 4 propositions for each CVD risk factors.";

/// One entry of the parameter list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptParam {
    /// `None` for the risk-category phrase.
    pub factor: Option<usize>,
    pub phrase: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationPrompt {
    pub task: String,
    pub params: Vec<PromptParam>,
    pub constraints: String,
}

impl ExplanationPrompt {
    pub fn params_text(&self) -> String {
        self.params
            .iter()
            .map(|p| p.phrase.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// The full prompt as sent.
    pub fn text(&self) -> String {
        format!("{} {}. {}", self.task, self.params_text(), self.constraints)
    }

    /// Factors asked about, in prompt order.
    pub fn factors(&self) -> Vec<RiskFactor> {
        self.params
            .iter()
            .filter_map(|p| p.factor.and_then(RiskFactor::from_index))
            .collect()
    }
}

fn with_value(label: &str, value: Option<String>, unit: &str) -> String {
    match value {
        Some(v) => format!("{label} \u{2013} {v} {unit}"),
        None => label.to_string(),
    }
}

/// Phrase naming `factor` for this person, with the measured value when
/// one was answered.
pub fn factor_phrase(factor: RiskFactor, ind: &HealthIndicators, bmi: f64) -> String {
    let measure = |i: Indicator| ind.provided_value(i).map(fmt_number);
    match factor {
        RiskFactor::AnginaSymptoms => "symptoms of angina pectoris".into(),
        RiskFactor::DocumentedCvd => "documented cardiovascular disease".into(),
        RiskFactor::KidneyDisease => "chronic kidney disease".into(),
        RiskFactor::Diabetes => "type 2 diabetes".into(),
        RiskFactor::FamilyHistory => "family history of early CV diseases".into(),
        RiskFactor::Obesity => with_value(
            "obesity",
            (ind.get(Indicator::Height) > 0.0).then(|| format!("BMI {bmi:.1}")),
            "kg/m2",
        ),
        RiskFactor::TotalCholesterol => with_value(
            "high total cholesterol",
            measure(Indicator::TotalCholesterol),
            "mmol/l",
        ),
        RiskFactor::NonHdlCholesterol => with_value(
            "high non-HDL cholesterol",
            measure(Indicator::NonHdlCholesterol),
            "mmol/l",
        ),
        RiskFactor::BloodPressure => with_value(
            "high blood pressure",
            ind.is_provided(Indicator::SystolicBp)
                .then(|| ind.blood_pressure_display()),
            "mmHg",
        ),
        RiskFactor::Glucose => {
            with_value("high glucose level", measure(Indicator::Glucose), "mmol/l")
        }
        RiskFactor::Smoking => "smoking".into(),
        RiskFactor::Inactivity => "physical inactivity".into(),
        RiskFactor::Diet => "unhealthy diet".into(),
    }
}

/// Builds the prompt: the category phrase (when a category was assessed)
/// followed by one phrase per present factor, ordered by questionnaire
/// field. `None` when there is nothing to explain.
pub fn build_prompt(profile: &UserProfile, ind: &HealthIndicators) -> Option<ExplanationPrompt> {
    let mut params = Vec::new();
    if profile.risk.category.is_assessed() {
        params.push(PromptParam {
            factor: None,
            phrase: format!(
                "{} total CV risk on SCORE model",
                profile.risk.category.label()
            ),
        });
    }
    let mut present: Vec<RiskFactor> = profile.factors.present().collect();
    present.sort_by_key(|f| (f.source_indicator().number(), f.index()));
    params.extend(present.into_iter().map(|f| PromptParam {
        factor: Some(f.index()),
        phrase: factor_phrase(f, ind, profile.factors.bmi),
    }));
    if params.is_empty() {
        return None;
    }
    Some(ExplanationPrompt {
        task: TASK.into(),
        params,
        constraints: CONSTRAINTS.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factors::{classify, FactorVector, Thresholds};
    use crate::recommend::build_profile;
    use crate::risk::{Applicability, RiskCalibration, RiskCategory, RiskEstimate};

    fn profile(ind: &HealthIndicators) -> UserProfile {
        build_profile(ind, &Thresholds::default(), &RiskCalibration::shipped())
    }

    #[test]
    fn four_behavioural_and_pressure_factors() {
        let mut ind = HealthIndicators::new();
        ind.set_blood_pressure(160.0, 90.0).unwrap();
        for i in [
            Indicator::PhysicalInactivity,
            Indicator::Smoking,
            Indicator::UnhealthyDiet,
        ] {
            ind.set(i, 1.0).unwrap();
        }
        let p = build_prompt(&profile(&ind), &ind).unwrap();
        assert_eq!(
            p.params_text(),
            "high blood pressure \u{2013} 160/90 mmHg, physical inactivity, smoking, unhealthy diet"
        );
        assert!(p.text().contains("no more 4 propositions"));
        assert!(p.text().ends_with("for each CVD risk factors."));
    }

    #[test]
    fn category_phrase_leads() {
        let mut fv = FactorVector::default();
        fv.set(RiskFactor::FamilyHistory, true);
        fv.set(RiskFactor::BloodPressure, true);
        let prof = UserProfile {
            classes: classify(&fv),
            factors: fv,
            risk: RiskEstimate {
                sco: false,
                cvrisk: Some(3.0),
                category: RiskCategory::Moderate,
                applicability: Applicability::Estimated {
                    model: "SCORE2".into(),
                },
            },
        };
        let p = build_prompt(&prof, &HealthIndicators::new()).unwrap();
        assert_eq!(
            p.params_text(),
            "moderate total CV risk on SCORE model, family history of early CV diseases, high blood pressure"
        );
        assert_eq!(
            p.factors(),
            vec![RiskFactor::FamilyHistory, RiskFactor::BloodPressure]
        );
    }

    #[test]
    fn empty_profile_has_no_prompt() {
        let ind = HealthIndicators::new();
        assert_eq!(build_prompt(&profile(&ind), &ind), None);
    }

    #[test]
    fn prompt_is_deterministic() {
        let ind = HealthIndicators::new()
            .with(Indicator::Age, 55.0)
            .unwrap()
            .with(Indicator::NonHdlCholesterol, 4.0)
            .unwrap()
            .with(Indicator::SystolicBp, 150.0)
            .unwrap()
            .with(Indicator::Smoking, 1.0)
            .unwrap();
        let a = build_prompt(&profile(&ind), &ind).unwrap();
        let b = build_prompt(&profile(&ind), &ind).unwrap();
        assert_eq!(a.text(), b.text());
        assert!(
            a.params_text().contains(
                "total CV risk on SCORE model, high non-HDL cholesterol \u{2013} 4 mmol/l, "
            ),
            "{}",
            a.params_text()
        );
    }
}
