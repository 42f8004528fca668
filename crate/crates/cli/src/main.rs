//! `carnot-kernels`: runs the numerical checks of `carnot-core` and a few of
//! its primitive operations from the command line.
//!
//! Exit status: 0 pass, 1 numerical failure, 2 usage, config or I/O error.

mod files;
mod suite;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use carnot_core::calculus;
use carnot_core::group::GroupPoint;
use carnot_core::metric::{self, MetricParams, OracleConfig, Side};
use carnot_core::verify::{SuiteConfig, VerifyError};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

const CONFIG_ENV: &str = "CARNOT_KERNELS_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("input: {0}")]
    Input(String),
    #[error("output: {0}")]
    Output(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Output(format!("{}: {e}", path.display()))
    }

    fn csv(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 1,
            _ => 2,
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::UnknownCheck(_) => CliError::Usage(e.to_string()),
            VerifyError::InvalidConfig(_) => CliError::Config(e.to_string()),
            VerifyError::Numerical { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "carnot-kernels", version, about = "Numerical checks for two-sided convolution kernels on H^1")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one named check.
    Check {
        name: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run every check listed in the config.
    Suite {
        #[command(flatten)]
        run: RunArgs,
        /// Worker threads; results keep the config order.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Distance between two points.
    Dist {
        #[arg(long, value_parser = parse_side)]
        side: Side,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        p: GroupPoint,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        q: GroupPoint,
        /// Path search instead of the closed form.
        #[arg(long)]
        oracle: bool,
        #[arg(long, requires = "oracle")]
        h: Option<f64>,
        #[arg(long, requires = "oracle")]
        budget: Option<usize>,
    },
    /// Ball volume.
    Volume {
        #[arg(long, value_parser = parse_side)]
        side: Side,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        center: GroupPoint,
        #[arg(long)]
        delta: f64,
    },
    /// Group convolution `f * g` of two grid functions on the same grid.
    Convolve {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; falls back to $CARNOT_KERNELS_CONFIG.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    /// Orders alpha, comma separated.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<u32>>,
    /// Output directory, or a `.json` report path for `check`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock `runtime_ms`; output is then no longer reproducible.
    #[arg(long)]
    timing: bool,
}

fn parse_point(s: &str) -> Result<GroupPoint, String> {
    let v: Vec<f64> = s.split(',').map(|c| c.trim().parse::<f64>().map_err(|e| format!("`{c}`: {e}"))).collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, t] if v.iter().all(|c| c.is_finite()) => Ok(GroupPoint::new(x, y, t)),
        _ => Err(format!("expected three finite numbers x,y,t, got `{s}`")),
    }
}

fn parse_side(s: &str) -> Result<Side, String> {
    match s {
        "L" | "l" | "left" => Ok(Side::Left),
        "R" | "r" | "right" => Ok(Side::Right),
        _ => Err(format!("side must be L or R, got `{s}`")),
    }
}

fn load_config(run: &RunArgs) -> Result<SuiteConfig, CliError> {
    let path = run.config.clone().or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(&p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => SuiteConfig::default(),
    };
    if let Some(s) = run.seed {
        cfg.seed = s;
    }
    if let Some(n) = run.samples {
        cfg.samples = Some(n);
    }
    if let Some(a) = &run.alpha {
        cfg.alpha = a.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn status_line(r: &carnot_core::report::VerificationReport) -> String {
    let mut s = format!(
        "{:<13} {} ratio=[{:.4e}, {:.4e}] threshold={:.4e}",
        r.check,
        if r.pass { "PASS" } else { "FAIL" },
        r.ratio_min,
        r.ratio_max,
        r.threshold
    );
    for c in r.failed_conditions() {
        s.push_str(&format!(" {}={:.4e}", c.name, c.value));
    }
    s
}

fn write_check(out: &Path, o: &carnot_core::report::CheckOutcome) -> Result<(), CliError> {
    let (report, csvs) = files::check_paths(out, &o.report.check, &o.sweeps);
    files::write(&report, &files::report_json(&o.report))?;
    for (s, p) in o.sweeps.iter().zip(&csvs) {
        files::write(p, &files::sweep_csv(s)?)?;
    }
    Ok(())
}

fn cmd_check(name: &str, run: &RunArgs) -> Result<(), CliError> {
    let cfg = load_config(run)?;
    let o = suite::run_one(name, &cfg, run.timing)?;
    eprintln!("{}", status_line(&o.report));
    match &run.out {
        Some(out) => write_check(out, &o)?,
        None => print!("{}", files::report_json(&o.report)),
    }
    if o.report.pass {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("{} failed", name)))
    }
}

fn cmd_suite(run: &RunArgs, jobs: usize) -> Result<(), CliError> {
    if jobs == 0 {
        return Err(CliError::Usage(String::from("--jobs must be at least 1")));
    }
    let cfg = load_config(run)?;
    let results = suite::run_all(&cfg.checks, &cfg, jobs, run.timing);
    for (n, r) in cfg.checks.iter().zip(&results) {
        match r {
            Ok(o) => eprintln!("{}", status_line(&o.report)),
            Err(e) => eprintln!("{n:<13} ERROR {e}"),
        }
    }
    if let Some(e) = results.iter().find_map(|r| r.as_ref().err()) {
        if !matches!(e, VerifyError::Numerical { .. }) {
            return Err(e.clone().into());
        }
    }
    let summary = suite::summarize(&cfg.checks, &results, cfg.seed);
    let text = serde_json::to_string_pretty(&summary).expect("summary json") + "\n";
    match &run.out {
        Some(dir) => {
            files::write(&dir.join("suite.json"), &text)?;
            for o in results.iter().flatten() {
                write_check(dir, o)?;
            }
        }
        None => print!("{text}"),
    }
    if summary.pass {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("failing checks: {}", summary.failed.join(", "))))
    }
}

fn point_json(p: GroupPoint) -> serde_json::Value {
    json!([p.x, p.y, p.t])
}

fn cmd_dist(
    side: Side,
    eps: f64,
    p: GroupPoint,
    q: GroupPoint,
    oracle: bool,
    h: Option<f64>,
    budget: Option<usize>,
) -> Result<(), CliError> {
    let mp = MetricParams::new(side, eps).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut params = json!({ "side": side.to_string(), "eps": eps, "p": point_json(p), "q": point_json(q) });
    let (value, method) = if oracle {
        let mut cfg = OracleConfig::default();
        cfg.h = h.unwrap_or(cfg.h);
        cfg.node_budget = budget.unwrap_or(cfg.node_budget);
        let r = metric::dist_oracle(mp, p, q, &cfg).map_err(|e| match e {
            metric::MetricError::Unreached { .. } => CliError::Numerical(e.to_string()),
            e => CliError::Usage(e.to_string()),
        })?;
        params["h"] = json!(cfg.h);
        params["budget"] = json!(cfg.node_budget);
        params["expanded"] = json!(r.expanded);
        (r.value, "oracle")
    } else {
        (metric::dist_surrogate(mp, p, q), "surrogate")
    };
    println!("{}", json!({ "value": value, "method": method, "params": params }));
    Ok(())
}

fn cmd_volume(side: Side, eps: f64, center: GroupPoint, delta: f64) -> Result<(), CliError> {
    let mp = MetricParams::new(side, eps).map_err(|e| CliError::Usage(e.to_string()))?;
    let v = metric::volume(mp, center, delta).map_err(|e| CliError::Usage(e.to_string()))?;
    let params = json!({ "side": side.to_string(), "eps": eps, "center": point_json(center), "delta": delta });
    println!("{}", json!({ "value": v, "method": "surrogate", "params": params }));
    Ok(())
}

fn cmd_convolve(f: &Path, g: &Path, out: &Path) -> Result<(), CliError> {
    let (a, b) = (files::read_grid(f)?, files::read_grid(g)?);
    let c = calculus::convolve(&a, &b).map_err(|e| CliError::Input(e.to_string()))?;
    files::write(out, &files::grid_to_json(&c))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.cmd {
        Cmd::Check { name, run } => cmd_check(name, run),
        Cmd::Suite { run, jobs } => cmd_suite(run, *jobs),
        Cmd::Dist { side, eps, p, q, oracle, h, budget } => cmd_dist(*side, *eps, *p, *q, *oracle, *h, *budget),
        Cmd::Volume { side, eps, center, delta } => cmd_volume(*side, *eps, *center, *delta),
        Cmd::Convolve { f, g, out } => cmd_convolve(f, g, out),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("carnot-kernels: {e}");
            ExitCode::from(e.code())
        }
    }
}
