//! Reads a questionnaire (file argument or stdin) and prints the
//! assessment with any validation warnings.
//!
//!     cargo run --example assess_questionnaire -- fixtures/worked-example.json

use std::io::Read;

use cardioprev::engine::Engine;
use cardioprev::intake::parse_questionnaire_str;

fn main() {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}")),
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).unwrap();
            s
        }
    };
    let ind = match parse_questionnaire_str(&text) {
        Ok(ind) => ind,
        Err(e) => {
            eprintln!("rejected: {e}");
            std::process::exit(2);
        }
    };
    let assessment = Engine::shipped().assess(&ind);
    println!("{}", serde_json::to_string_pretty(&assessment).unwrap());
}
