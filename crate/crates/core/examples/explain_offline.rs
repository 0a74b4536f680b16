//! Builds the explanation prompt and parses a recorded answer without any
//! network access.
//!
//!     cargo run --example explain_offline

use cardioprev::engine::Engine;
use cardioprev::explain::{build_prompt, ExplanationResult};
use cardioprev::intake::parse_questionnaire_str;
use cardioprev::recommend::assemble;

const RECORDED: &str = include_str!("../fixtures/response-four-factors.md");

fn main() {
    let ind = parse_questionnaire_str(r#"{"x12":"160/90","x14":1,"x15":1,"x16":1}"#).unwrap();
    let engine = Engine::shipped();
    let profile = engine.profile(&ind);
    let prompt = build_prompt(&profile, &ind).expect("factors present");
    println!("prompt:\n{}\n", prompt.text());

    let result = ExplanationResult::from_response(&prompt, RECORDED.to_string());
    println!(
        "coverage: {}\n",
        serde_json::to_string(&result.coverage).unwrap()
    );

    let rec = assemble(&profile, &ind, &engine.catalog(), &result.to_explanations()).unwrap();
    for b in &rec.blocks {
        println!("[{} / {:?}] {}", b.code, b.expl_source, b.expl);
    }
}
