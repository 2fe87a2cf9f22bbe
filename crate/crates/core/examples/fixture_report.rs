//! Runs the bundled fixture suite and prints the per-command table.

use std::path::Path;

use grounding_core::{run_eval, SimilarityConfig};

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let report = run_eval(
        &root.join("scenes"),
        &root.join("commands.jsonl"),
        &SimilarityConfig::default(),
    )
    .expect("fixture suite runs");
    print!("{}", report.to_table());
    println!(
        "avg_interactions={} success_rate={} histogram={:?}",
        report.avg_interactions, report.success_rate, report.histogram
    );
}
