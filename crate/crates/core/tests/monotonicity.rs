//! Wider sweep than the chart grid, over whole years of age and the input
//! range the risk charts cover. Age steps stay inside one model: the switch
//! between the under-70 and 70+ models is not continuous.

use cardioprev::risk::{RiskCalibration, RiskInputs};

const REGIONS: [&str; 4] = ["low", "moderate", "high", "very_high"];

fn sweep(
    sbps: &[u16],
    non_hdls: &[f64],
    check: impl Fn(&RiskCalibration, bool, f64, f64, f64) -> Option<String>,
) -> Vec<String> {
    let mut bad = Vec::new();
    for region in REGIONS {
        let cal = RiskCalibration::shipped_region(region).unwrap();
        for male in [false, true] {
            for age in 40..=89 {
                for &sbp in sbps {
                    for &non_hdl in non_hdls {
                        if let Some(v) = check(&cal, male, f64::from(age), f64::from(sbp), non_hdl)
                        {
                            bad.push(format!("{region} male={male}: {v}"));
                        }
                    }
                }
            }
        }
    }
    bad
}

const CHART_SBP: [u16; 9] = [100, 110, 120, 130, 140, 150, 160, 170, 180];
const CHART_NON_HDL: [f64; 5] = [3.0, 4.0, 5.0, 6.0, 7.0];
const WIDE_SBP: [u16; 11] = [100, 110, 120, 130, 140, 150, 160, 170, 180, 190, 200];
const WIDE_NON_HDL: [f64; 7] = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];

fn risk(cal: &RiskCalibration, male: bool, age: f64, sbp: f64, non_hdl: f64, smoker: bool) -> f64 {
    cal.predict(&RiskInputs {
        male,
        age,
        sbp,
        non_hdl,
        smoker,
    })
    .unwrap()
    .percent
}

#[test]
fn sbp_and_non_hdl_everywhere() {
    let bad = sweep(&WIDE_SBP, &WIDE_NON_HDL, |cal, male, age, sbp, nh| {
        for smoker in [false, true] {
            let here = risk(cal, male, age, sbp, nh, smoker);
            if risk(cal, male, age, sbp + 10.0, nh, smoker) < here {
                return Some(format!("sbp step at age {age} sbp {sbp}"));
            }
            if risk(cal, male, age, sbp, nh + 1.0, smoker) < here {
                return Some(format!("non-hdl step at age {age} non-hdl {nh}"));
            }
        }
        None
    });
    assert!(
        bad.is_empty(),
        "{} violations: {:?}",
        bad.len(),
        &bad[..bad.len().min(5)]
    );
}

#[test]
fn age_within_each_model() {
    let bad = sweep(&CHART_SBP, &CHART_NON_HDL, |cal, male, age, sbp, nh| {
        if age == 69.0 || age == 89.0 {
            return None;
        }
        for smoker in [false, true] {
            if risk(cal, male, age + 1.0, sbp, nh, smoker) < risk(cal, male, age, sbp, nh, smoker) {
                return Some(format!(
                    "age step {age} sbp {sbp} non-hdl {nh} smoker {smoker}"
                ));
            }
        }
        None
    });
    assert!(
        bad.is_empty(),
        "{} violations: {:?}",
        bad.len(),
        &bad[..bad.len().min(5)]
    );
}

#[test]
fn smoking_up_to_87() {
    let bad = sweep(&WIDE_SBP, &WIDE_NON_HDL, |cal, male, age, sbp, nh| {
        (age <= 87.0 && risk(cal, male, age, sbp, nh, true) < risk(cal, male, age, sbp, nh, false))
            .then(|| format!("smoking at age {age} sbp {sbp} non-hdl {nh}"))
    });
    assert!(
        bad.is_empty(),
        "{} violations: {:?}",
        bad.len(),
        &bad[..bad.len().min(5)]
    );
}

#[test]
fn known_exceptions_exist() {
    // Documented behaviour of the published models, kept visible here.
    let cal = RiskCalibration::shipped();
    let male_89 = |smoker| risk(&cal, true, 89.0, 140.0, 4.0, smoker);
    assert!(male_89(true) < male_89(false));
    let drop = (0..=1).any(|m| {
        risk(&cal, m == 1, 70.0, 120.0, 3.0, false) < risk(&cal, m == 1, 69.0, 120.0, 3.0, false)
    });
    assert!(drop);
    // Past the chart range the pressure-by-age term wins over age itself.
    let male_smoker = |age| risk(&cal, true, age, 200.0, 2.0, true);
    assert!(male_smoker(80.0) < male_smoker(79.0));
}
