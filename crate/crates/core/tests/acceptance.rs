//! Acceptance criteria, one line each. Exits non-zero when any criterion fails.
//!
//! Run with `cargo test -p carnot-core --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use carnot_core::report::VerificationReport;
use carnot_core::verify::{run_check, SuiteConfig};

struct Line {
    id: usize,
    title: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn summarize(r: &VerificationReport) -> String {
    r.conditions
        .iter()
        .map(|c| format!("{}={:.4e}{}", c.name, c.value, if c.pass { "" } else { " (out of range)" }))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Runs the named checks; the criterion passes when every report passes and
/// the wall-clock budget (if any) holds.
fn criterion(id: usize, title: &'static str, checks: &[&str], budget: Option<Duration>) -> Line {
    let cfg = SuiteConfig::default();
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for name in checks {
        match run_check(name, &cfg) {
            Ok(o) => {
                pass &= o.report.pass;
                parts.push(format!("{name}: {}", summarize(&o.report)));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name}: error: {e}"));
            }
        }
    }
    let elapsed = t.elapsed();
    if let Some(b) = budget {
        if elapsed > b {
            pass = false;
            parts.push(format!("runtime {:.1} s over budget {:.0} s", elapsed.as_secs_f64(), b.as_secs_f64()));
        }
    }
    Line { id, title, pass, detail: parts.join("; "), elapsed }
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let plan: Vec<(&'static str, Vec<&'static str>, Option<Duration>)> = vec![
        ("group axioms and flows", vec!["assoc"], Some(secs(10))),
        ("metric scaling", vec!["scaling"], None),
        ("surrogate against control oracle", vec!["dist-oracle"], Some(secs(300))),
        ("composed left/right distance", vec!["newdist"], None),
        ("intersection kernel bound and support", vec!["intersection"], None),
        ("convolution decay with order-0 control", vec!["decay"], None),
        ("composition gain exponents", vec!["compose"], None),
        ("dyadic bound summation with N = 2 control", vec!["sumb"], None),
        ("Heisenberg closed form", vec!["heis-bound"], Some(secs(30))),
        ("transference identity", vec!["transference"], None),
        ("maximal domination and square pieces", vec!["maximal", "square"], None),
        ("vanishing-moment construction", vec!["moments"], None),
        ("membership tester sanity", vec!["membership"], None),
    ];
    let mut failed = Vec::new();
    for (i, (title, checks, budget)) in plan.into_iter().enumerate() {
        let l = criterion(i + 1, title, &checks, budget);
        println!(
            "criterion {:>2} {} {} ({:.1} s): {}",
            l.id,
            if l.pass { "PASS" } else { "FAIL" },
            l.title,
            l.elapsed.as_secs_f64(),
            l.detail
        );
        if !l.pass {
            failed.push(l.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 13 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
