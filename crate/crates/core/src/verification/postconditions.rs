//! Per-record checks of the pipeline's output guarantees.
//!
//! * U: factor flags are binary and re-derivable from the indicators.
//! * Q: class flags are binary, at least one is set, and they follow the
//!   class rules from the factor flags.
//! * B: exactly one category holds, and it is the one the gate and the
//!   band boundaries give (or `not_assessed` with a reason).
//! * D: at least one strategic goal, one per set class, class 5 first.
//! * W: one complete block per set factor and none for absent ones, in the
//!   documented order.
//! * V: D holds and, whenever a factor is set, W is non-empty.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::factors::{classify, derive_factors, RiskFactor, Thresholds};
use crate::intake::HealthIndicators;
use crate::recommend::{Recommendation, UserProfile};
use crate::risk::{categorize, sco_flag, Applicability, RiskCategory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    U,
    Q,
    B,
    D,
    W,
    V,
}

impl Condition {
    pub const ALL: [Condition; 6] = [
        Condition::U,
        Condition::Q,
        Condition::B,
        Condition::D,
        Condition::W,
        Condition::V,
    ];
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub condition: Condition,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Results for one record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordCheck {
    pub outcomes: Vec<CheckOutcome>,
}

impl RecordCheck {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn outcome(&self, c: Condition) -> &CheckOutcome {
        self.outcomes
            .iter()
            .find(|o| o.condition == c)
            .expect("every condition is checked")
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.outcomes.iter().filter(|o| !o.passed)
    }
}

fn verdict(condition: Condition, problems: Vec<String>) -> CheckOutcome {
    CheckOutcome {
        condition,
        passed: problems.is_empty(),
        detail: (!problems.is_empty()).then(|| problems.join("; ")),
    }
}

/// Checks with the default thresholds.
pub fn check_postconditions(
    ind: &HealthIndicators,
    rec: &Recommendation,
    profile: &UserProfile,
) -> RecordCheck {
    check_postconditions_with(ind, rec, profile, &Thresholds::default())
}

pub fn check_postconditions_with(
    ind: &HealthIndicators,
    rec: &Recommendation,
    profile: &UserProfile,
    th: &Thresholds,
) -> RecordCheck {
    let u = check_u(ind, rec, profile, th);
    let q = check_q(profile);
    let b = check_b(profile);
    let d = check_d(rec, profile);
    let w = check_w(rec, profile);
    let v = {
        let mut problems = Vec::new();
        if rec.goals.is_empty() {
            problems.push("no goals".to_string());
        }
        if profile.factors.any() && rec.blocks.is_empty() {
            problems.push("factors present but no blocks".to_string());
        }
        if !d.passed {
            problems.push("D failed".to_string());
        }
        verdict(Condition::V, problems)
    };
    RecordCheck {
        outcomes: vec![u, q, b, d, w, v],
    }
}

fn check_u(
    ind: &HealthIndicators,
    rec: &Recommendation,
    profile: &UserProfile,
    th: &Thresholds,
) -> CheckOutcome {
    let mut problems = Vec::new();
    let wire = serde_json::to_value(profile).expect("profile serializes");
    let bits = wire["factor"].as_array().map(|a| a.len()).unwrap_or(0);
    if bits != RiskFactor::COUNT {
        problems.push(format!("factor vector has {bits} entries"));
    }
    for (i, b) in wire["factor"].as_array().into_iter().flatten().enumerate() {
        if !matches!(b.as_u64(), Some(0 | 1)) {
            problems.push(format!("f({}) = {b} is not binary", i + 1));
        }
    }
    let expected = derive_factors(ind, th);
    if expected.bits() != profile.factors.bits() {
        problems.push(format!(
            "factors {:?} differ from re-derived {:?}",
            profile.factors.bits(),
            expected.bits()
        ));
    }
    if rec.profile != *profile {
        problems.push("recommendation carries a different profile".into());
    }
    verdict(Condition::U, problems)
}

fn check_q(profile: &UserProfile) -> CheckOutcome {
    let mut problems = Vec::new();
    let bits = profile.classes.bits();
    if bits.iter().any(|b| *b > 1) {
        problems.push(format!("class {bits:?} not binary"));
    }
    if !profile.classes.any() {
        problems.push("no class set".into());
    }
    let expected = classify(&profile.factors);
    if expected != profile.classes {
        problems.push(format!(
            "class {bits:?} differs from rules {:?}",
            expected.bits()
        ));
    }
    verdict(Condition::Q, problems)
}

fn check_b(profile: &UserProfile) -> CheckOutcome {
    let risk = &profile.risk;
    let mut problems = Vec::new();
    if risk.sco != sco_flag(&profile.factors) {
        problems.push(format!(
            "sco = {} but gate factors give {}",
            risk.sco, !risk.sco
        ));
    }
    let expected = if risk.sco {
        Some(RiskCategory::VeryHigh)
    } else {
        risk.cvrisk.map(|r| categorize(r, false))
    };
    match expected {
        Some(c) if c != risk.category => {
            problems.push(format!("category {} should be {}", risk.category, c));
        }
        Some(_) => {}
        None => {
            if risk.category != RiskCategory::NotAssessed {
                problems.push(format!("category {} without an estimate", risk.category));
            }
            if matches!(
                risk.applicability,
                Applicability::Estimated { .. } | Applicability::Gated
            ) {
                problems.push("not assessed without a recorded reason".into());
            }
        }
    }
    if let Some(r) = risk.cvrisk {
        if !r.is_finite() || !(0.0..=100.0).contains(&r) {
            problems.push(format!("cvrisk {r} outside 0-100"));
        }
    }
    verdict(Condition::B, problems)
}

fn check_d(rec: &Recommendation, profile: &UserProfile) -> CheckOutcome {
    let mut problems = Vec::new();
    if rec.goals.is_empty() {
        problems.push("no goals".into());
    }
    let got: Vec<usize> = rec.goals.iter().map(|g| g.class).collect();
    let want: Vec<usize> = profile.classes.descending().collect();
    if got != want {
        problems.push(format!("goal classes {got:?}, expected {want:?}"));
    }
    if rec.goals.iter().any(|g| g.text.trim().is_empty()) {
        problems.push("empty goal text".into());
    }
    verdict(Condition::D, problems)
}

fn check_w(rec: &Recommendation, profile: &UserProfile) -> CheckOutcome {
    let mut problems = Vec::new();
    for f in RiskFactor::ALL {
        let n = rec.blocks.iter().filter(|b| b.factor == f.index()).count();
        match (profile.factors.is_set(f), n) {
            (true, 0) => problems.push(format!("no block for factor {}", f.index())),
            (false, n) if n > 0 => problems.push(format!("block for absent factor {}", f.index())),
            (_, n) if n > 1 => problems.push(format!("{n} blocks for factor {}", f.index())),
            _ => {}
        }
    }
    for b in &rec.blocks {
        for (name, part) in [
            ("esr", &b.esr),
            ("inf", &b.inf),
            ("expl", &b.expl),
            ("plan", &b.plan),
        ] {
            if part.trim().is_empty() {
                problems.push(format!("factor {} has empty {name}", b.factor));
            }
        }
        if RiskFactor::from_index(b.factor).map(|f| f.class()) != Some(b.class) {
            problems.push(format!("factor {} has class {}", b.factor, b.class));
        }
    }
    for pair in rec.blocks.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let in_order = if a.class != b.class {
            a.class > b.class
        } else if matches!(a.class, 2 | 3) {
            (a.utility, a.factor) < (b.utility, b.factor)
        } else {
            a.factor < b.factor
        };
        if !in_order {
            problems.push(format!(
                "block {} before {} breaks the order",
                a.factor, b.factor
            ));
        }
    }
    verdict(Condition::W, problems)
}
