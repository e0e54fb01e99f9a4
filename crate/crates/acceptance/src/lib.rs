//! Runner for the acceptance checks in `tests/acceptance.rs`.
//!
//! Each check runs under a wall-clock budget and reports one line:
//! `PASS <name> (<detail>; <secs> s)` or `FAIL <name>: <reason>`. A check that
//! passes but overruns its budget is a failure. A check whose inputs are
//! absent reports `SKIP <name> (<reason>)`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

pub type Outcome = Result<String, String>;

#[derive(Debug, Default)]
pub struct Report {
    lines: Vec<String>,
    failures: usize,
    skips: usize,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    /// Run `check` and print its line. Panics inside the check count as
    /// failures.
    pub fn run(&mut self, name: &str, budget: Option<Duration>, check: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| Err(panic_text(p)));
        let elapsed = start.elapsed();
        let line = match result {
            Ok(detail) => match budget {
                Some(b) if elapsed > b => {
                    format!("FAIL {name}: took {:.2} s, budget {:.0} s ({detail})", elapsed.as_secs_f64(), b.as_secs_f64())
                }
                _ => format!("PASS {name} ({detail}; {:.2} s)", elapsed.as_secs_f64()),
            },
            Err(reason) => format!("FAIL {name}: {reason}"),
        };
        if line.starts_with("FAIL") {
            self.failures += 1;
        }
        println!("{line}");
        self.lines.push(line);
    }

    pub fn skip(&mut self, name: &str, reason: &str) {
        self.skips += 1;
        let line = format!("SKIP {name} ({reason})");
        println!("{line}");
        self.lines.push(line);
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn failures(&self) -> usize {
        self.failures
    }

    pub fn skips(&self) -> usize {
        self.skips
    }

    pub fn passes(&self) -> usize {
        self.lines.len() - self.failures - self.skips
    }
}

fn panic_text(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        format!("panicked: {s}")
    } else if let Some(s) = payload.downcast_ref::<String>() {
        format!("panicked: {s}")
    } else {
        "panicked".to_owned()
    }
}

/// `Err(message)` unless `cond` holds.
pub fn ensure(cond: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message())
    }
}
