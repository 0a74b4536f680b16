//! The worked example person: 49-year-old woman, 160/90 mmHg, overweight,
//! smoker, inactive, poor diet.
//!
//!     cargo run --example golden_person

use cardioprev::engine::Engine;
use cardioprev::intake::parse_questionnaire_str;

const PERSON: &str = r#"{
    "x1": 0, "x2": 49, "x3": 170, "x4": 74, "x10": 5.0, "x11": 3.0,
    "x12": "160/90", "x13": 4.8, "x14": 1, "x15": 1, "x16": 1
}"#;

fn main() {
    let ind = parse_questionnaire_str(PERSON).expect("valid questionnaire");
    let rec = Engine::shipped()
        .recommend_fallback(&ind)
        .expect("built-in catalog renders");
    let p = &rec.profile;
    println!("factor vector {:?}", p.factors.bits());
    println!("class         {:?}", p.classes.bits());
    println!(
        "risk          {:.2}% -> {}",
        p.risk.cvrisk.unwrap_or(f64::NAN),
        p.risk.category
    );
    println!(
        "block order   {:?}\n",
        rec.blocks.iter().map(|b| b.factor).collect::<Vec<_>>()
    );
    print!("{}", rec.to_text());
}
