//! Loads a catalog (the built-in one, or a path argument), checks it and
//! renders every item for a sample person.
//!
//!     cargo run --example render_catalog [-- path/to/catalog.json]

use cardioprev::catalog::{Catalog, RenderContext};
use cardioprev::engine::Engine;
use cardioprev::intake::parse_questionnaire_str;

fn main() {
    let catalog = match std::env::args().nth(1) {
        Some(path) => Catalog::from_path(path.as_ref()).unwrap_or_else(|e| {
            eprintln!("{path}: {e}");
            std::process::exit(2);
        }),
        None => Catalog::shipped(),
    };
    println!(
        "catalog {} ({}), {} items\n",
        catalog.version(),
        catalog.language(),
        catalog.item_count()
    );

    let ind = parse_questionnaire_str(
        r#"{"x1":1,"x2":72,"x3":180,"x4":95,"x11":4.2,"x12":"150/95","x15":1}"#,
    )
    .unwrap();
    let profile = Engine::shipped().profile(&ind);
    let ctx = RenderContext {
        indicators: &ind,
        factors: &profile.factors,
        risk: &profile.risk,
    };
    println!(
        "{}\n{}\n",
        catalog.render_category(&ctx).unwrap(),
        catalog.render_plan_preamble(&ctx).unwrap()
    );
    for item in catalog.items() {
        match catalog.render_item(item, &ctx) {
            Ok(text) => println!("{:>12} {:>2}  {text}", item.kind.to_string(), item.key),
            Err(e) => println!("{:>12} {:>2}  <{e}>", item.kind.to_string(), item.key),
        }
    }
}
