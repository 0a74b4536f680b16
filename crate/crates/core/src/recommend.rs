//! Goal selection, block assembly and ordering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::catalog::{Catalog, ItemKind, PureRankTable, RenderContext, RenderError};
use crate::factors::{classify, derive_factors, ClassVector, FactorVector, RiskFactor, Thresholds};
use crate::intake::HealthIndicators;
use crate::risk::{assess_risk, Applicability, RiskCalibration, RiskCategory, RiskEstimate};

pub const ENGINE_VERSION: &str = concat!("cardioprev/", env!("CARGO_PKG_VERSION"));

/// Factors, risk estimate and classes of one person.
#[derive(Debug, Clone, PartialEq)]
pub struct UserProfile {
    pub factors: FactorVector,
    pub risk: RiskEstimate,
    pub classes: ClassVector,
}

#[derive(Serialize, Deserialize)]
struct ProfileWire {
    factor: [u8; RiskFactor::COUNT],
    bmi: f64,
    class: [u8; 5],
    sco: bool,
    cvrisk: Option<f64>,
    category: RiskCategory,
    applicability: Applicability,
}

impl Serialize for UserProfile {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ProfileWire {
            factor: self.factors.bits(),
            bmi: self.factors.bmi,
            class: self.classes.bits(),
            sco: self.risk.sco,
            cvrisk: self.risk.cvrisk,
            category: self.risk.category,
            applicability: self.risk.applicability.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for UserProfile {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let w = ProfileWire::deserialize(d)?;
        if w.factor.iter().chain(w.class.iter()).any(|b| *b > 1) {
            return Err(D::Error::custom("factor and class entries must be 0 or 1"));
        }
        let mut factors = FactorVector::from_flags(w.factor.map(|b| b == 1));
        factors.bmi = w.bmi;
        Ok(Self {
            factors,
            risk: RiskEstimate {
                sco: w.sco,
                cvrisk: w.cvrisk,
                category: w.category,
                applicability: w.applicability,
            },
            classes: ClassVector::from_flags(w.class.map(|b| b == 1)),
        })
    }
}

/// Stages 1 to 3 for one questionnaire.
pub fn build_profile(
    ind: &HealthIndicators,
    th: &Thresholds,
    cal: &RiskCalibration,
) -> UserProfile {
    let factors = derive_factors(ind, th);
    let risk = assess_risk(&factors, ind, cal);
    UserProfile {
        classes: classify(&factors),
        factors,
        risk,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub class: usize,
    pub text: String,
}

/// One strategic goal per set class, class 5 first.
pub fn select_goals(
    classes: &ClassVector,
    cat: &Catalog,
    ctx: &RenderContext<'_>,
) -> Result<Vec<Goal>, RenderError> {
    classes
        .descending()
        .map(|class| {
            Ok(Goal {
                class,
                text: cat.render(ItemKind::EsG, class as u8, ctx)?,
            })
        })
        .collect()
}

/// Sum over the modifiable factors of presence times the rank of the factor
/// the block addresses. Blocks for factors 1..=5 always score 0.
pub fn utility(factor: RiskFactor, fv: &FactorVector, ranks: &PureRankTable) -> u32 {
    (6..=13)
        .filter_map(RiskFactor::from_index)
        .filter(|i| *i == factor && fv.is_set(*i))
        .map(|i| ranks.rank(i).unwrap_or(0))
        .sum()
}

/// Order in which blocks for `present` factors are shown: class descending;
/// within classes 2 and 3 by ascending utility; ties by factor index.
pub fn block_order(fv: &FactorVector, ranks: &PureRankTable) -> Vec<RiskFactor> {
    let mut order: Vec<RiskFactor> = fv.present().collect();
    order.sort_by_key(|f| {
        let u = if matches!(f.class(), 2 | 3) {
            utility(*f, fv, ranks)
        } else {
            0
        };
        (std::cmp::Reverse(f.class()), u, f.index())
    });
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationSource {
    Generated,
    Fallback,
}

/// Explanation texts supplied to assembly. Factors without an entry get
/// the catalog fallback.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Explanations {
    pub texts: BTreeMap<RiskFactor, String>,
    pub preamble: Option<String>,
    pub closing: Option<String>,
}

impl Explanations {
    pub fn fallback() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationBlock {
    pub factor: usize,
    pub code: String,
    pub class: usize,
    pub utility: u32,
    pub esr: String,
    pub inf: String,
    pub expl: String,
    pub expl_source: ExplanationSource,
    pub plan: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExplanationFrame {
    pub preamble: Option<String>,
    pub closing: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub engine_version: String,
    pub catalog_version: String,
    pub language: String,
    pub generated_at: String,
    pub profile: UserProfile,
    pub goals: Vec<Goal>,
    /// Category sentence heading the information dimension.
    pub information: String,
    pub explanation: ExplanationFrame,
    pub plan_preamble: String,
    pub blocks: Vec<RecommendationBlock>,
}

/// Stage 4.
pub fn assemble(
    profile: &UserProfile,
    ind: &HealthIndicators,
    cat: &Catalog,
    expl: &Explanations,
) -> Result<Recommendation, RenderError> {
    assemble_at(profile, ind, cat, expl, Utc::now())
}

pub fn assemble_at(
    profile: &UserProfile,
    ind: &HealthIndicators,
    cat: &Catalog,
    expl: &Explanations,
    at: DateTime<Utc>,
) -> Result<Recommendation, RenderError> {
    let ctx = RenderContext {
        indicators: ind,
        factors: &profile.factors,
        risk: &profile.risk,
    };
    let goals = select_goals(&profile.classes, cat, &ctx)?;
    let blocks = block_order(&profile.factors, cat.ranks())
        .into_iter()
        .map(|f| {
            let key = f.index() as u8;
            let (text, source) = match expl.texts.get(&f) {
                Some(t) if !t.trim().is_empty() => (t.clone(), ExplanationSource::Generated),
                _ => (
                    cat.render(ItemKind::ExplFallback, key, &ctx)?,
                    ExplanationSource::Fallback,
                ),
            };
            Ok(RecommendationBlock {
                factor: f.index(),
                code: f.code().to_string(),
                class: f.class(),
                utility: utility(f, &profile.factors, cat.ranks()),
                esr: cat.render(ItemKind::EsR, key, &ctx)?,
                inf: cat.render(ItemKind::Inf, key, &ctx)?,
                expl: text,
                expl_source: source,
                plan: cat.render(ItemKind::Plan, key, &ctx)?,
            })
        })
        .collect::<Result<Vec<_>, RenderError>>()?;
    Ok(Recommendation {
        engine_version: ENGINE_VERSION.to_string(),
        catalog_version: cat.version().to_string(),
        language: cat.language().to_string(),
        generated_at: at.to_rfc3339_opts(SecondsFormat::Millis, true),
        profile: profile.clone(),
        goals,
        information: cat.render_category(&ctx)?,
        explanation: ExplanationFrame {
            preamble: expl.preamble.clone(),
            closing: expl.closing.clone(),
        },
        plan_preamble: cat.render_plan_preamble(&ctx)?,
        blocks,
    })
}

impl Recommendation {
    /// Pretty JSON; the single serializer used by the CLI and the service.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("recommendation serializes")
    }

    /// JSON with `generated_at` removed, for comparing runs.
    pub fn to_json_untimed(&self) -> String {
        let mut v = serde_json::to_value(self).expect("recommendation serializes");
        v.as_object_mut().unwrap().remove("generated_at");
        serde_json::to_string_pretty(&v).unwrap()
    }

    pub fn block(&self, factor: RiskFactor) -> Option<&RecommendationBlock> {
        self.blocks.iter().find(|b| b.factor == factor.index())
    }

    /// Plain-text rendering under the Goal / Information / Explanation /
    /// Plan of actions headings. The last two are left out when there are
    /// no blocks.
    pub fn to_text(&self) -> String {
        let join = |parts: Vec<&str>| {
            parts
                .into_iter()
                .filter(|s| !s.is_empty())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = String::new();

        let mut goal: Vec<&str> = self.goals.iter().map(|g| g.text.as_str()).collect();
        goal.extend(self.blocks.iter().map(|b| b.esr.as_str()));
        let _ = writeln!(out, "Goal: {}", join(goal));

        let mut info = vec![self.information.as_str()];
        info.extend(self.blocks.iter().map(|b| b.inf.as_str()));
        let _ = write!(out, "\nInformation: {}\n", join(info));

        if self.blocks.is_empty() {
            return out;
        }

        out.push_str("\nExplanation: ");
        if let Some(p) = &self.explanation.preamble {
            let _ = write!(out, "{p}\n\n");
        }
        for (n, b) in self.blocks.iter().enumerate() {
            if n > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "{}. {}", n + 1, b.expl);
        }
        if let Some(c) = &self.explanation.closing {
            let _ = write!(out, "\n{c}\n");
        }

        let _ = write!(out, "\nPlan of actions: {}\n", self.plan_preamble);
        for (n, b) in self.blocks.iter().enumerate() {
            let letter = char::from(b'A' + (n as u8 % 26));
            let _ = write!(out, "\n{letter}. {}\n", b.plan);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intake::{parse_questionnaire_str, Indicator};

    const WORKED: &str = r#"{"x1":0,"x2":49,"x3":170,"x4":74,"x5":0,"x6":0,"x7":0,"x8":0,"x9":0,
        "x10":5.0,"x11":3.0,"x12":"160/90","x13":4.8,"x14":1,"x15":1,"x16":1,"x17":0}"#;

    fn run(ind: &HealthIndicators) -> Recommendation {
        let profile = build_profile(ind, &Thresholds::default(), &RiskCalibration::shipped());
        assemble(
            &profile,
            ind,
            &Catalog::shipped(),
            &Explanations::fallback(),
        )
        .unwrap()
    }

    fn classes(bits: [u8; 5]) -> ClassVector {
        ClassVector::from_flags(bits.map(|b| b == 1))
    }

    #[test]
    fn goals_follow_descending_class() {
        let cat = Catalog::shipped();
        let ind = HealthIndicators::new();
        let profile = build_profile(&ind, &Thresholds::default(), &RiskCalibration::shipped());
        let ctx = RenderContext {
            indicators: &ind,
            factors: &profile.factors,
            risk: &profile.risk,
        };
        let order = |c| {
            select_goals(&classes(c), &cat, &ctx)
                .unwrap()
                .iter()
                .map(|g| g.class)
                .collect::<Vec<_>>()
        };
        assert_eq!(order([1, 0, 0, 0, 0]), vec![1]);
        assert_eq!(order([0, 1, 1, 0, 0]), vec![3, 2]);
        assert_eq!(order([0, 1, 1, 0, 1]), vec![5, 3, 2]);
    }

    #[test]
    fn utility_is_rank_of_the_addressed_factor() {
        let ranks = Catalog::shipped().ranks().clone();
        let empty = FactorVector::default();
        for f in RiskFactor::ALL {
            assert_eq!(utility(f, &empty, &ranks), 0);
        }
        let mut fv = FactorVector::default();
        fv.set(RiskFactor::BloodPressure, true);
        assert_eq!(
            utility(RiskFactor::BloodPressure, &fv, &ranks),
            ranks.rank(RiskFactor::BloodPressure).unwrap()
        );
        assert_eq!(utility(RiskFactor::Smoking, &fv, &ranks), 0);

        fv.set(RiskFactor::Smoking, true);
        let (u9, u11) = (
            utility(RiskFactor::BloodPressure, &fv, &ranks),
            utility(RiskFactor::Smoking, &fv, &ranks),
        );
        let (s9, s11) = (
            ranks.rank(RiskFactor::BloodPressure).unwrap(),
            ranks.rank(RiskFactor::Smoking).unwrap(),
        );
        assert_eq!(u9.cmp(&u11), s9.cmp(&s11));
    }

    #[test]
    fn zero_factor_profile_has_goal_and_no_blocks() {
        let rec = run(&HealthIndicators::new());
        assert_eq!(rec.goals.len(), 1);
        assert_eq!(rec.goals[0].class, 1);
        assert!(rec.blocks.is_empty());
        assert_eq!(rec.profile.risk.category, RiskCategory::NotAssessed);
        let text = rec.to_text();
        assert!(text.starts_with("Goal: "));
        assert!(!text.contains("Explanation:") && !text.contains("Plan of actions:"));
    }

    #[test]
    fn worked_example_blocks_and_order() {
        let ind = parse_questionnaire_str(WORKED).unwrap();
        let rec = run(&ind);
        assert_eq!(rec.profile.classes.bits(), [0, 1, 1, 0, 0]);
        assert_eq!(rec.profile.risk.category, RiskCategory::High);
        let order: Vec<usize> = rec.blocks.iter().map(|b| b.factor).collect();
        assert_eq!(order, vec![9, 6, 11, 13, 12]);
        for b in &rec.blocks {
            for part in [&b.esr, &b.inf, &b.expl, &b.plan] {
                assert!(!part.trim().is_empty());
            }
            assert_eq!(b.expl_source, ExplanationSource::Fallback);
        }
        assert_eq!(
            rec.goals.iter().map(|g| g.class).collect::<Vec<_>>(),
            vec![3, 2]
        );
        assert!(rec.information.contains("high"));
    }

    #[test]
    fn angina_puts_urgent_goal_first() {
        let ind = HealthIndicators::new()
            .with(Indicator::AnginaSymptoms, 1.0)
            .unwrap()
            .with(Indicator::Smoking, 1.0)
            .unwrap();
        let rec = run(&ind);
        assert_eq!(rec.goals[0].class, 5);
        assert_eq!(rec.blocks[0].factor, 1);
        assert_eq!(rec.profile.risk.category, RiskCategory::VeryHigh);
    }

    #[test]
    fn text_layout_has_four_headings() {
        let ind = parse_questionnaire_str(WORKED).unwrap();
        let text = run(&ind).to_text();
        let pos = |h: &str| {
            text.find(h)
                .unwrap_or_else(|| panic!("{h} missing in\n{text}"))
        };
        assert_eq!(pos("Goal: "), 0);
        assert!(pos("\nInformation: ") < pos("\nExplanation: 1. "));
        assert!(pos("\nExplanation: ") < pos("\nPlan of actions: "));
        assert!(text.contains("\nA. ") && text.contains("\nE. "));
        assert!(text.contains("no more than 130 mmHg"));
    }

    #[test]
    fn generated_texts_replace_fallback_per_factor() {
        let ind = parse_questionnaire_str(WORKED).unwrap();
        let profile = build_profile(&ind, &Thresholds::default(), &RiskCalibration::shipped());
        let mut expl = Explanations::default();
        expl.texts
            .insert(RiskFactor::Smoking, "Generated smoking text.".into());
        expl.closing = Some("Closing.".into());
        let rec = assemble(&profile, &ind, &Catalog::shipped(), &expl).unwrap();
        let sm = rec.block(RiskFactor::Smoking).unwrap();
        assert_eq!(sm.expl, "Generated smoking text.");
        assert_eq!(sm.expl_source, ExplanationSource::Generated);
        assert_eq!(
            rec.block(RiskFactor::Diet).unwrap().expl_source,
            ExplanationSource::Fallback
        );
        assert!(rec.to_text().contains("\nClosing.\n"));
    }

    #[test]
    fn json_round_trip_and_untimed_equality() {
        let ind = parse_questionnaire_str(WORKED).unwrap();
        let a = run(&ind);
        let back: Recommendation = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(back, a);
        let b = run(&ind);
        assert_eq!(a.to_json_untimed(), b.to_json_untimed());
        assert!(!a.to_json_untimed().contains("generated_at"));
    }

    #[test]
    fn profile_wire_shape() {
        let ind = parse_questionnaire_str(WORKED).unwrap();
        let p = build_profile(&ind, &Thresholds::default(), &RiskCalibration::shipped());
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(
            v["factor"],
            serde_json::json!([0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 1, 1, 1])
        );
        assert_eq!(v["class"], serde_json::json!([0, 1, 1, 0, 0]));
        assert_eq!(v["category"], "high");
        assert_eq!(v["applicability"]["status"], "estimated");
        assert!(serde_json::from_value::<UserProfile>(serde_json::json!({
            "factor": [2,0,0,0,0,0,0,0,0,0,0,0,0], "bmi": 25.0, "class": [1,0,0,0,0],
            "sco": false, "cvrisk": null, "category": "low", "applicability": {"status": "gated"}
        }))
        .is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ordering_is_a_permutation(mask in 0u16..(1 << 13)) {
                let fv = FactorVector::from_mask(mask);
                let ranks = Catalog::shipped().ranks().clone();
                let order = block_order(&fv, &ranks);
                let mut sorted: Vec<usize> = order.iter().map(|f| f.index()).collect();
                sorted.sort();
                let present: Vec<usize> = fv.present().map(|f| f.index()).collect();
                prop_assert_eq!(sorted, present);
                for w in order.windows(2) {
                    prop_assert!(w[0].class() >= w[1].class());
                    if w[0].class() == w[1].class() && matches!(w[0].class(), 2 | 3) {
                        prop_assert!(utility(w[0], &fv, &ranks) <= utility(w[1], &fv, &ranks));
                    }
                }
            }
        }
    }
}
