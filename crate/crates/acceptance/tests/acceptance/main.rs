//! One line per acceptance criterion. Every expected value is computed here,
//! by hand or by an oracle that does not call the code under test.
//!
//! Run with `cargo test -p light-acceptance --test acceptance`. The process
//! exits non-zero when any line is a FAIL.

mod baselines;
mod constraints;
mod cooccurrence;
mod embedding;
mod figure;
mod server;
mod stats;
mod tfidf;
mod valid_actions;

use std::time::Duration;

use light_acceptance::Report;

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn main() {
    let mut r = Report::new();
    r.run("constraint-table", secs(1), constraints::check);
    r.run("valid-action-oracle", secs(30), valid_actions::check);
    r.run("figure-replay", None, figure::replay);
    r.run("context-golden", None, figure::context_golden);
    r.run("random-baselines", secs(10), baselines::check);
    r.run("tfidf-oracle", None, tfidf::check);
    r.run("embedding-training", secs(60), embedding::training);
    match stats::release_dir() {
        Some(dir) => r.run("embedding-release", None, || stats::release_embedding(&dir)),
        None => r.skip("embedding-release", &format!("{} not set", stats::RELEASE_ENV)),
    }
    r.run("candidate-cache", None, embedding::cache);
    r.run("dataset-stats", None, stats::check);
    r.run("server-equivalence", None, server::check);
    r.run("cooccurrence", None, cooccurrence::check);
    let failed = r.failures();
    println!("{} passed, {failed} failed, {} skipped", r.passes(), r.skips());
    if failed > 0 {
        std::process::exit(1);
    }
}
