//! Seeded questionnaire generator.
//!
//! Record `i` of seed `s` is drawn from its own ChaCha stream, so any record
//! can be replayed alone and records can be produced in parallel. Most
//! records aim at one of the sixteen class combinations and put measured
//! values on or next to the factor thresholds; the rest are unconstrained.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::factors::{compute_bmi, FactorVector, RiskFactor};
use crate::intake::{HealthIndicators, Indicator};

/// Ages that sit on the risk model's edges.
pub const BOUNDARY_AGES: [f64; 6] = [39.0, 40.0, 69.0, 70.0, 89.0, 90.0];

fn rng_for(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// The `trial`-th record of `seed`.
pub fn record(seed: u64, trial: u64) -> HealthIndicators {
    let mut rng = rng_for(seed, trial);
    if rng.random_bool(0.2) {
        unconstrained(&mut rng)
    } else {
        let subclass = rng.random_range(0..16u8);
        targeted(&mut rng, subclass)
    }
}

/// `n` records of `seed`, in trial order.
pub fn random_profiles(seed: u64, n: usize) -> Vec<HealthIndicators> {
    (0..n as u64).map(|i| record(seed, i)).collect()
}

fn set(ind: &mut HealthIndicators, field: Indicator, value: f64) {
    ind.set(field, value)
        .expect("generator only emits valid values");
}

fn maybe_flag(rng: &mut ChaCha8Rng, ind: &mut HealthIndicators, field: Indicator, on: bool) {
    // Absent flags are sometimes answered 0 and sometimes left out.
    if on || rng.random_bool(0.5) {
        set(ind, field, f64::from(u8::from(on)));
    }
}

fn age(rng: &mut ChaCha8Rng, ind: &mut HealthIndicators) {
    let roll: f64 = rng.random();
    if roll < 0.25 {
        set(ind, Indicator::Age, *BOUNDARY_AGES.choose(rng).unwrap());
    } else if roll < 0.9 {
        set(ind, Indicator::Age, f64::from(rng.random_range(30u8..=95)));
    } else if roll < 0.95 {
        set(ind, Indicator::Age, rng.random_range(40.0..90.0));
    }
}

/// A value strictly above `limit` (factor present) or at most `limit`
/// (absent), often exactly on or next to it.
fn around(rng: &mut ChaCha8Rng, limit: f64, present: bool, spread: f64) -> f64 {
    let eps = [0.01, 0.1, 1.0].choose(rng).copied().unwrap();
    let near = rng.random_bool(0.4);
    if present {
        if near {
            limit + eps
        } else {
            limit + rng.random_range(0.01..spread)
        }
    } else if near {
        if rng.random_bool(0.5) {
            limit
        } else {
            (limit - eps).max(0.0)
        }
    } else {
        rng.random_range(0.0..limit)
    }
}

fn biological(rng: &mut ChaCha8Rng, ind: &mut HealthIndicators, present: [bool; 5]) {
    let [obese, chol, nonhdl, sbp, glucose] = present;

    let height = f64::from(rng.random_range(150u16..=195));
    if obese || rng.random_bool(0.8) {
        let bmi = if obese {
            if rng.random_bool(0.3) {
                24.0
            } else {
                rng.random_range(24.0..40.0)
            }
        } else {
            rng.random_range(17.0..23.99)
        };
        let mut weight = bmi * height * height / 1e4;
        // Nudge so that floating-point rounding keeps the intended side.
        while obese && compute_bmi(height, weight) < 24.0 {
            weight += 1e-9;
        }
        while !obese && compute_bmi(height, weight) >= 24.0 {
            weight -= 1e-6;
        }
        set(ind, Indicator::Height, height);
        set(ind, Indicator::Weight, weight);
    }
    for (field, limit, on, spread) in [
        (Indicator::TotalCholesterol, 5.0, chol, 4.0),
        (Indicator::NonHdlCholesterol, 3.0, nonhdl, 4.0),
        (Indicator::SystolicBp, 140.0, sbp, 60.0),
        (Indicator::Glucose, 7.0, glucose, 8.0),
    ] {
        if on || rng.random_bool(0.85) {
            let v = if !on && field == Indicator::SystolicBp && rng.random_bool(0.5) {
                f64::from(rng.random_range(100u16..=140))
            } else {
                around(rng, limit, on, spread)
            };
            set(ind, field, v);
        }
    }
}

/// Picks which of `n` members are on: at least one when `any`, none
/// otherwise.
fn members<const N: usize>(rng: &mut ChaCha8Rng, any: bool) -> [bool; N] {
    let mut on = [false; N];
    if any {
        for flag in on.iter_mut() {
            *flag = rng.random_bool(0.4);
        }
        let forced = rng.random_range(0..N);
        on[forced] = true;
    }
    on
}

fn targeted(rng: &mut ChaCha8Rng, subclass: u8) -> HealthIndicators {
    let [behavioral, biological_class, non_modifiable, symptoms] =
        [0, 1, 2, 3].map(|b| subclass & (1 << b) != 0);
    let mut ind = HealthIndicators::new();
    if rng.random_bool(0.9) {
        set(
            &mut ind,
            Indicator::Sex,
            f64::from(rng.random_range(0u8..=1)),
        );
    }
    age(rng, &mut ind);

    let [cvd, events, kidney, diabetes, family] = members::<5>(rng, non_modifiable);
    maybe_flag(rng, &mut ind, Indicator::DocumentedCvd, cvd);
    maybe_flag(rng, &mut ind, Indicator::CvEvents, events);
    maybe_flag(rng, &mut ind, Indicator::KidneyDisease, kidney);
    maybe_flag(rng, &mut ind, Indicator::Diabetes, diabetes);
    maybe_flag(rng, &mut ind, Indicator::FamilyHistory, family);

    let bio = members::<5>(rng, biological_class);
    biological(rng, &mut ind, bio);

    let [inactive, smoker, diet] = members::<3>(rng, behavioral);
    maybe_flag(rng, &mut ind, Indicator::PhysicalInactivity, inactive);
    maybe_flag(rng, &mut ind, Indicator::Smoking, smoker);
    maybe_flag(rng, &mut ind, Indicator::UnhealthyDiet, diet);

    maybe_flag(rng, &mut ind, Indicator::AnginaSymptoms, symptoms);
    if ind.is_provided(Indicator::SystolicBp) && rng.random_bool(0.2) {
        let sbp = ind.systolic_bp();
        let dia = (sbp * 0.6).round();
        ind.set_blood_pressure(sbp, dia).expect("valid reading");
    }
    ind
}

fn unconstrained(rng: &mut ChaCha8Rng) -> HealthIndicators {
    let mut ind = HealthIndicators::new();
    for field in Indicator::ALL {
        if rng.random_bool(0.25) {
            continue;
        }
        let v = if field.is_flag() {
            f64::from(rng.random_range(0u8..=1))
        } else {
            let (_, max) = field.plausible_range().unwrap_or((0.0, 100.0));
            // Occasionally beyond the plausible range; such records are
            // still valid input.
            rng.random_range(0.0..max * 1.2)
        };
        set(&mut ind, field, v);
    }
    ind
}

/// Smallest questionnaire whose factor vector is exactly `fv`.
pub fn witness(fv: &FactorVector) -> HealthIndicators {
    let mut ind = HealthIndicators::new();
    set(&mut ind, Indicator::Sex, 1.0);
    set(&mut ind, Indicator::Age, 55.0);
    for f in fv.present() {
        match f {
            RiskFactor::AnginaSymptoms => set(&mut ind, Indicator::AnginaSymptoms, 1.0),
            RiskFactor::DocumentedCvd => set(&mut ind, Indicator::DocumentedCvd, 1.0),
            RiskFactor::KidneyDisease => set(&mut ind, Indicator::KidneyDisease, 1.0),
            RiskFactor::Diabetes => set(&mut ind, Indicator::Diabetes, 1.0),
            RiskFactor::FamilyHistory => set(&mut ind, Indicator::FamilyHistory, 1.0),
            RiskFactor::Obesity => {
                set(&mut ind, Indicator::Height, 170.0);
                set(&mut ind, Indicator::Weight, 90.0);
            }
            RiskFactor::TotalCholesterol => set(&mut ind, Indicator::TotalCholesterol, 6.0),
            RiskFactor::NonHdlCholesterol => set(&mut ind, Indicator::NonHdlCholesterol, 4.0),
            RiskFactor::BloodPressure => set(&mut ind, Indicator::SystolicBp, 150.0),
            RiskFactor::Glucose => set(&mut ind, Indicator::Glucose, 8.0),
            RiskFactor::Smoking => set(&mut ind, Indicator::Smoking, 1.0),
            RiskFactor::Inactivity => set(&mut ind, Indicator::PhysicalInactivity, 1.0),
            RiskFactor::Diet => set(&mut ind, Indicator::UnhealthyDiet, 1.0),
        }
    }
    if !fv.is_set(RiskFactor::NonHdlCholesterol) {
        set(&mut ind, Indicator::NonHdlCholesterol, 2.5);
    }
    if !fv.is_set(RiskFactor::BloodPressure) {
        set(&mut ind, Indicator::SystolicBp, 125.0);
    }
    ind
}
