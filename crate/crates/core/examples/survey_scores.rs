//! Satisfaction scores from per-question means, and alpha from raw scores.
//!
//!     cargo run --example survey_scores

use cardioprev::cli::score_survey;

fn main() {
    for file in ["survey-means.json", "survey-synthetic.json"] {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("fixtures")
            .join(file);
        let scores = score_survey(&std::fs::read_to_string(path).unwrap()).unwrap();
        println!("{file}\n{}", scores.to_text());
    }
}
