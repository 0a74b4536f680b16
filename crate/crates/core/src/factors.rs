//! Risk-factor and person-class derivation.
//!
//! Thirteen binary risk factors are read off the questionnaire, then folded
//! into five class flags. Classes are not exclusive: a smoker with high blood
//! pressure belongs to both the behavioral and the biological class.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::intake::{HealthIndicators, Indicator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorType {
    Symptoms,
    NonModifiable,
    Biological,
    Behavioral,
}

/// One of the thirteen risk factors, numbered 1..=13. Serialized as its
/// number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum RiskFactor {
    AnginaSymptoms = 1,
    DocumentedCvd,
    KidneyDisease,
    Diabetes,
    FamilyHistory,
    Obesity,
    TotalCholesterol,
    NonHdlCholesterol,
    BloodPressure,
    Glucose,
    Smoking,
    Inactivity,
    Diet,
}

impl RiskFactor {
    pub const COUNT: usize = 13;

    pub const ALL: [RiskFactor; Self::COUNT] = [
        RiskFactor::AnginaSymptoms,
        RiskFactor::DocumentedCvd,
        RiskFactor::KidneyDisease,
        RiskFactor::Diabetes,
        RiskFactor::FamilyHistory,
        RiskFactor::Obesity,
        RiskFactor::TotalCholesterol,
        RiskFactor::NonHdlCholesterol,
        RiskFactor::BloodPressure,
        RiskFactor::Glucose,
        RiskFactor::Smoking,
        RiskFactor::Inactivity,
        RiskFactor::Diet,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        index.checked_sub(1).and_then(|i| Self::ALL.get(i).copied())
    }

    pub fn code(self) -> &'static str {
        match self {
            RiskFactor::AnginaSymptoms => "S",
            RiskFactor::DocumentedCvd => "CVD",
            RiskFactor::KidneyDisease => "KD",
            RiskFactor::Diabetes => "DM2",
            RiskFactor::FamilyHistory => "GEN",
            RiskFactor::Obesity => "OBS",
            RiskFactor::TotalCholesterol => "CH",
            RiskFactor::NonHdlCholesterol => "NHL",
            RiskFactor::BloodPressure => "SBP",
            RiskFactor::Glucose => "GL",
            RiskFactor::Smoking => "Sm",
            RiskFactor::Inactivity => "Fa",
            RiskFactor::Diet => "Diet",
        }
    }

    pub fn factor_type(self) -> FactorType {
        match self.index() {
            1 => FactorType::Symptoms,
            2..=5 => FactorType::NonModifiable,
            6..=10 => FactorType::Biological,
            _ => FactorType::Behavioral,
        }
    }

    /// Class number (2..=5) that this factor triggers.
    pub fn class(self) -> usize {
        match self.factor_type() {
            FactorType::Symptoms => 5,
            FactorType::NonModifiable => 4,
            FactorType::Biological => 3,
            FactorType::Behavioral => 2,
        }
    }

    pub fn is_modifiable(self) -> bool {
        matches!(
            self.factor_type(),
            FactorType::Biological | FactorType::Behavioral
        )
    }

    /// First questionnaire field the factor is read from.
    pub fn source_indicator(self) -> Indicator {
        match self {
            RiskFactor::AnginaSymptoms => Indicator::AnginaSymptoms,
            RiskFactor::DocumentedCvd => Indicator::DocumentedCvd,
            RiskFactor::KidneyDisease => Indicator::KidneyDisease,
            RiskFactor::Diabetes => Indicator::Diabetes,
            RiskFactor::FamilyHistory => Indicator::FamilyHistory,
            RiskFactor::Obesity => Indicator::Height,
            RiskFactor::TotalCholesterol => Indicator::TotalCholesterol,
            RiskFactor::NonHdlCholesterol => Indicator::NonHdlCholesterol,
            RiskFactor::BloodPressure => Indicator::SystolicBp,
            RiskFactor::Glucose => Indicator::Glucose,
            RiskFactor::Smoking => Indicator::Smoking,
            RiskFactor::Inactivity => Indicator::PhysicalInactivity,
            RiskFactor::Diet => Indicator::UnhealthyDiet,
        }
    }
}

impl TryFrom<u8> for RiskFactor {
    type Error = String;

    fn try_from(n: u8) -> Result<Self, Self::Error> {
        Self::from_index(n as usize)
            .ok_or_else(|| format!("risk factor index must be 1-13, got {n}"))
    }
}

impl From<RiskFactor> for u8 {
    fn from(f: RiskFactor) -> u8 {
        f.index() as u8
    }
}

impl fmt::Display for RiskFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{} ({})", self.index(), self.code())
    }
}

/// Cut-offs for the measured factors. Comparisons against the lab
/// thresholds are strict; the BMI comparison is `>=`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub total_cholesterol: f64,
    pub non_hdl_cholesterol: f64,
    pub systolic_bp: f64,
    pub glucose: f64,
    pub bmi: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            total_cholesterol: 5.0,
            non_hdl_cholesterol: 3.0,
            systolic_bp: 140.0,
            glucose: 7.0,
            bmi: 24.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("threshold `{name}` must be a positive number, got {value}")]
pub struct ThresholdError {
    pub name: &'static str,
    pub value: f64,
}

impl Thresholds {
    pub fn validated(self) -> Result<Self, ThresholdError> {
        let all = [
            ("total_cholesterol", self.total_cholesterol),
            ("non_hdl_cholesterol", self.non_hdl_cholesterol),
            ("systolic_bp", self.systolic_bp),
            ("glucose", self.glucose),
            ("bmi", self.bmi),
        ];
        for (name, value) in all {
            if !(value.is_finite() && value > 0.0) {
                return Err(ThresholdError { name, value });
            }
        }
        Ok(self)
    }
}

/// The thirteen factor flags plus the BMI they were computed from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FactorVector {
    flags: [bool; RiskFactor::COUNT],
    pub bmi: f64,
}

impl FactorVector {
    pub fn from_flags(flags: [bool; RiskFactor::COUNT]) -> Self {
        Self { flags, bmi: 0.0 }
    }

    /// Bits of `mask` map to factors: bit 0 is f(1).
    pub fn from_mask(mask: u16) -> Self {
        let mut flags = [false; RiskFactor::COUNT];
        for (i, flag) in flags.iter_mut().enumerate() {
            *flag = mask & (1 << i) != 0;
        }
        Self::from_flags(flags)
    }

    pub fn mask(&self) -> u16 {
        self.flags
            .iter()
            .enumerate()
            .fold(0, |m, (i, f)| if *f { m | (1 << i) } else { m })
    }

    pub fn is_set(&self, factor: RiskFactor) -> bool {
        self.flags[factor.index() - 1]
    }

    pub fn set(&mut self, factor: RiskFactor, value: bool) {
        self.flags[factor.index() - 1] = value;
    }

    pub fn any(&self) -> bool {
        self.flags.iter().any(|f| *f)
    }

    /// Present factors in ascending index order.
    pub fn present(&self) -> impl Iterator<Item = RiskFactor> + '_ {
        RiskFactor::ALL.into_iter().filter(|f| self.is_set(*f))
    }

    /// Wire form: thirteen 0/1 integers.
    pub fn bits(&self) -> [u8; RiskFactor::COUNT] {
        self.flags.map(u8::from)
    }
}

/// `10^4 * weight / height^2`, or 25 when height is unknown.
pub fn compute_bmi(height_cm: f64, weight_kg: f64) -> f64 {
    if height_cm == 0.0 {
        25.0
    } else {
        1e4 * weight_kg / (height_cm * height_cm)
    }
}

/// Stage 1: indicators to factor flags.
pub fn derive_factors(ind: &HealthIndicators, th: &Thresholds) -> FactorVector {
    use Indicator as X;
    use RiskFactor as F;

    let mut fv = FactorVector::default();
    fv.set(F::AnginaSymptoms, ind.flag(X::AnginaSymptoms));
    fv.set(
        F::DocumentedCvd,
        ind.flag(X::DocumentedCvd) || ind.flag(X::CvEvents),
    );
    fv.set(F::KidneyDisease, ind.flag(X::KidneyDisease));
    fv.set(F::Diabetes, ind.flag(X::Diabetes));
    fv.set(F::FamilyHistory, ind.flag(X::FamilyHistory));

    let height = ind.get(X::Height);
    fv.bmi = compute_bmi(height, ind.get(X::Weight));
    // The height==0 sentinel BMI is for display only; an unanswered height
    // must not raise the obesity flag.
    fv.set(F::Obesity, height > 0.0 && fv.bmi >= th.bmi);

    fv.set(
        F::TotalCholesterol,
        ind.get(X::TotalCholesterol) > th.total_cholesterol,
    );
    fv.set(
        F::NonHdlCholesterol,
        ind.get(X::NonHdlCholesterol) > th.non_hdl_cholesterol,
    );
    fv.set(F::BloodPressure, ind.get(X::SystolicBp) > th.systolic_bp);
    fv.set(F::Glucose, ind.get(X::Glucose) > th.glucose);

    fv.set(F::Smoking, ind.flag(X::Smoking));
    fv.set(F::Inactivity, ind.flag(X::PhysicalInactivity));
    fv.set(F::Diet, ind.flag(X::UnhealthyDiet));
    fv
}

/// Five class flags, numbered 1..=5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ClassVector {
    flags: [bool; 5],
}

impl ClassVector {
    pub fn from_flags(flags: [bool; 5]) -> Self {
        Self { flags }
    }

    pub fn has(&self, class: usize) -> bool {
        (1..=5).contains(&class) && self.flags[class - 1]
    }

    /// Set classes, highest number first.
    pub fn descending(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=5).rev().filter(|c| self.has(*c))
    }

    pub fn any(&self) -> bool {
        self.flags.iter().any(|f| *f)
    }

    /// Sub-class id 0..16 from classes 2..=5 (0 is the "no factors" case).
    pub fn subclass(&self) -> u8 {
        (2..=5).fold(0, |acc, c| acc | (u8::from(self.has(c)) << (c - 2)))
    }

    pub fn bits(&self) -> [u8; 5] {
        self.flags.map(u8::from)
    }
}

/// Stage 2: class flags from factor flags.
pub fn classify(fv: &FactorVector) -> ClassVector {
    let any_in = |range: std::ops::RangeInclusive<usize>| {
        range
            .filter_map(RiskFactor::from_index)
            .any(|f| fv.is_set(f))
    };
    ClassVector::from_flags([
        !fv.any(),
        any_in(11..=13),
        any_in(6..=10),
        any_in(2..=5),
        fv.is_set(RiskFactor::AnginaSymptoms),
    ])
}
