//! Runs the postcondition checks over seeded records and every factor
//! vector.
//!
//!     cargo run --release --example postcondition_sweep -- 42 10000

use cardioprev::engine::Engine;
use cardioprev::verification::simulate;

fn main() {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(1, |s| s.parse().expect("seed"));
    let n = args.next().map_or(10_000, |s| s.parse().expect("count"));
    let start = std::time::Instant::now();
    let report = simulate(&Engine::shipped(), seed, n, true);
    print!("{report}");
    println!("{:?}", start.elapsed());
    if !report.all_passed() {
        println!("{}", report.to_json());
        std::process::exit(1);
    }
}
