//! Executable output guarantees and survey arithmetic.

pub mod generator;
pub mod postconditions;
pub mod survey;

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::factors::FactorVector;
use crate::intake::HealthIndicators;

pub use generator::{random_profiles, record, witness};
pub use postconditions::{
    check_postconditions, check_postconditions_with, CheckOutcome, Condition, RecordCheck,
};
pub use survey::{cronbach_alpha, dus, dus_from_mean, SurveyError, SurveyMatrix};

/// Runs the pipeline on one record and checks it.
pub fn check_record(engine: &Engine, ind: &HealthIndicators) -> RecordCheck {
    match engine.recommend_fallback(ind) {
        Ok(rec) => {
            let profile = engine.profile(ind);
            check_postconditions_with(ind, &rec, &profile, engine.thresholds())
        }
        Err(e) => RecordCheck {
            outcomes: Condition::ALL
                .iter()
                .map(|c| CheckOutcome {
                    condition: *c,
                    passed: matches!(c, Condition::U | Condition::Q | Condition::B),
                    detail: Some(format!("pipeline failed: {e}")),
                })
                .collect(),
        },
    }
}

/// A failing record, replayable from the report's seed and `trial`, or
/// from `mask` for the exhaustive sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trial: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mask: Option<u16>,
    pub indicators: HealthIndicators,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub passed: u64,
    pub failed: u64,
    pub exhaustive_passed: u64,
    pub exhaustive_failed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostconditionReport {
    pub seed: u64,
    pub trials: u64,
    pub exhaustive_vectors: u64,
    pub conditions: BTreeMap<Condition, ConditionSummary>,
}

impl PostconditionReport {
    pub fn all_passed(&self) -> bool {
        self.conditions
            .values()
            .all(|c| c.failed == 0 && c.exhaustive_failed == 0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for PostconditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "seed {}, {} random records, {} factor vectors",
            self.seed, self.trials, self.exhaustive_vectors
        )?;
        for (c, s) in &self.conditions {
            let verdict = if s.failed == 0 && s.exhaustive_failed == 0 {
                "pass"
            } else {
                "FAIL"
            };
            write!(
                f,
                "{c}: {verdict} {}/{} (exhaustive {}/{})",
                s.passed, self.trials, s.exhaustive_passed, self.exhaustive_vectors
            )?;
            if let Some(ce) = &s.counterexample {
                write!(f, " first failure: {}", ce.detail)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

enum Source {
    Trial(u64),
    Mask(u16),
}

fn tally(report: &mut PostconditionReport, results: Vec<(Source, HealthIndicators, RecordCheck)>) {
    for (source, ind, check) in results {
        for o in &check.outcomes {
            let s = report
                .conditions
                .get_mut(&o.condition)
                .expect("all conditions present");
            let exhaustive = matches!(source, Source::Mask(_));
            match (o.passed, exhaustive) {
                (true, false) => s.passed += 1,
                (true, true) => s.exhaustive_passed += 1,
                (false, false) => s.failed += 1,
                (false, true) => s.exhaustive_failed += 1,
            }
            if !o.passed && s.counterexample.is_none() {
                let (trial, mask) = match source {
                    Source::Trial(t) => (Some(t), None),
                    Source::Mask(m) => (None, Some(m)),
                };
                s.counterexample = Some(Counterexample {
                    trial,
                    mask,
                    indicators: ind.clone(),
                    detail: o.detail.clone().unwrap_or_default(),
                });
            }
        }
    }
}

/// Checks `n` generated records of `seed` and, when `exhaustive` is set,
/// one witness record for each of the 2^13 factor vectors.
pub fn simulate(engine: &Engine, seed: u64, n: u64, exhaustive: bool) -> PostconditionReport {
    let mut report = PostconditionReport {
        seed,
        trials: n,
        exhaustive_vectors: if exhaustive { 1 << 13 } else { 0 },
        conditions: Condition::ALL
            .iter()
            .map(|c| {
                (
                    *c,
                    ConditionSummary {
                        passed: 0,
                        failed: 0,
                        exhaustive_passed: 0,
                        exhaustive_failed: 0,
                        counterexample: None,
                    },
                )
            })
            .collect(),
    };
    let random: Vec<_> = (0..n)
        .into_par_iter()
        .map(|t| {
            let ind = record(seed, t);
            let check = check_record(engine, &ind);
            (Source::Trial(t), ind, check)
        })
        .collect();
    tally(&mut report, random);
    if exhaustive {
        let all: Vec<_> = (0..(1u16 << 13))
            .into_par_iter()
            .map(|mask| {
                let ind = witness(&FactorVector::from_mask(mask));
                let check = check_record(engine, &ind);
                (Source::Mask(mask), ind, check)
            })
            .collect();
        tally(&mut report, all);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_passes_and_is_reproducible() {
        let engine = Engine::shipped();
        let a = simulate(&engine, 3, 200, false);
        assert!(a.all_passed(), "{a}");
        assert_eq!(a.conditions[&Condition::V].passed, 200);
        assert_eq!(a, simulate(&engine, 3, 200, false));
        assert!(a.to_string().contains("V: pass 200/200"));
    }

    #[test]
    fn report_round_trips() {
        let r = simulate(&Engine::shipped(), 1, 10, false);
        let back: PostconditionReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
