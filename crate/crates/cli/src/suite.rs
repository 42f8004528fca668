//! Runs a list of checks, optionally across threads, collecting results in
//! list order.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use carnot_core::report::{CheckOutcome, VerificationReport};
use carnot_core::verify::{run_check, SuiteConfig, VerifyError};
use serde::Serialize;

pub type Ran = Result<CheckOutcome, VerifyError>;

pub fn run_one(name: &str, cfg: &SuiteConfig, timing: bool) -> Ran {
    let t0 = Instant::now();
    let mut out = run_check(name, cfg)?;
    if timing {
        out.report.runtime_ms = t0.elapsed().as_millis() as u64;
    }
    Ok(out)
}

/// Results of `names` in order; `jobs > 1` spreads checks over that many threads.
pub fn run_all(names: &[String], cfg: &SuiteConfig, jobs: usize, timing: bool) -> Vec<Ran> {
    if jobs <= 1 || names.len() <= 1 {
        return names.iter().map(|n| run_one(n, cfg, timing)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Ran>>> = names.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|s| {
        for _ in 0..jobs.min(names.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= names.len() {
                    break;
                }
                let r = run_one(&names[i], cfg, timing);
                *slots[i].lock().expect("slot") = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot").expect("every check ran")).collect()
}

#[derive(Serialize)]
pub struct Summary<'a> {
    pub pass: bool,
    pub seed: u64,
    pub checks: Vec<&'a str>,
    pub failed: Vec<&'a str>,
    pub errors: Vec<CheckError<'a>>,
    pub reports: Vec<&'a VerificationReport>,
}

#[derive(Serialize)]
pub struct CheckError<'a> {
    pub check: &'a str,
    pub message: String,
}

pub fn summarize<'a>(names: &'a [String], results: &'a [Ran], seed: u64) -> Summary<'a> {
    let mut s = Summary {
        pass: true,
        seed,
        checks: names.iter().map(String::as_str).collect(),
        failed: Vec::new(),
        errors: Vec::new(),
        reports: Vec::new(),
    };
    for (n, r) in names.iter().zip(results) {
        match r {
            Ok(o) => {
                if !o.report.pass {
                    s.failed.push(n);
                }
                s.reports.push(&o.report);
            }
            Err(e) => {
                s.failed.push(n);
                s.errors.push(CheckError { check: n, message: e.to_string() });
            }
        }
    }
    s.pass = s.failed.is_empty();
    s
}
