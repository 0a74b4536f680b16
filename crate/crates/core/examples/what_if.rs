//! How the estimate and the plan change when one habit changes.
//!
//!     cargo run --example what_if

use cardioprev::engine::Engine;
use cardioprev::intake::{HealthIndicators, Indicator};

fn person() -> HealthIndicators {
    HealthIndicators::new()
        .with(Indicator::Sex, 1.0)
        .unwrap()
        .with(Indicator::Age, 58.0)
        .unwrap()
        .with(Indicator::NonHdlCholesterol, 4.6)
        .unwrap()
        .with(Indicator::SystolicBp, 152.0)
        .unwrap()
        .with(Indicator::Smoking, 1.0)
        .unwrap()
}

fn main() {
    let engine = Engine::shipped();
    let base = person();
    let scenarios = [
        ("as answered", base.clone()),
        (
            "stops smoking",
            base.clone().with(Indicator::Smoking, 0.0).unwrap(),
        ),
        (
            "pressure down to 135",
            base.clone().with(Indicator::SystolicBp, 135.0).unwrap(),
        ),
        (
            "both",
            base.with(Indicator::Smoking, 0.0)
                .unwrap()
                .with(Indicator::SystolicBp, 135.0)
                .unwrap(),
        ),
    ];
    for (name, ind) in scenarios {
        let rec = engine.recommend_fallback(&ind).unwrap();
        let risk = &rec.profile.risk;
        println!(
            "{name:<22} {:>6.2}%  {:<9} blocks {:?}",
            risk.cvrisk.unwrap_or(f64::NAN),
            risk.category.to_string(),
            rec.blocks.iter().map(|b| b.factor).collect::<Vec<_>>()
        );
    }
}
