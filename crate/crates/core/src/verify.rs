//! Named numerical checks.
//!
//! Each check draws its samples from [`SuiteConfig::seed`] alone, so a fixed
//! config reproduces the same [`CheckOutcome`] bit for bit. Wall-clock time is
//! never measured here; `runtime_ms` stays 0 unless a caller fills it in.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;
use core::fmt;

use rand::Rng;

use crate::analysis::{self, MaxSide, OffDiagSplit, QTable, SumBConfig};
use crate::calculus::{self, GridFunction, GridSpec, ProfileFunction};
use crate::gauss::GhTable;
use crate::group::{self, FieldId, GroupPoint};
use crate::kernels::{self, BoundParams, DecayConfig, DyadicKernelFamily, MembershipConfig};
use crate::metric::{self, MetricParams, OracleConfig, Side};
use crate::poly::PolyExp;
use crate::report::{CheckOutcome, Sweep, VerificationReport};
use crate::stats;

/// Registered check names, in suite order.
pub const CHECKS: [&str; 16] = [
    "assoc",
    "scaling",
    "dist-oracle",
    "volume",
    "newdist",
    "intersection",
    "decay",
    "compose",
    "membership",
    "sumb",
    "heis-bound",
    "pseudoloc",
    "transference",
    "maximal",
    "square",
    "moments",
];

/// Rows kept per sweep; longer runs keep every k-th sample.
pub const SWEEP_ROWS: usize = 1000;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{check}: {message}")]
    Numerical { check: String, message: String },
}

fn num<E: fmt::Display>(check: &str) -> impl Fn(E) -> VerifyError + '_ {
    move |e| VerifyError::Numerical { check: String::from(check), message: e.to_string() }
}

/// Pass thresholds of the checks.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Thresholds {
    pub group_tol: f64,
    pub scaling_tol: f64,
    pub oracle_c: f64,
    pub volume_c: f64,
    pub newdist_c: f64,
    pub intersection_c: f64,
    pub support_c: f64,
    /// Slope window of `ln gain / ln 2` for moment-order-2 profiles.
    pub decay_slope: (f64, f64),
    /// Lower bound of the order-0 control slope, in units of `ln 2`.
    pub decay_control: f64,
    /// Relative tolerance of the composition exponents around `ln 2`.
    pub compose_rel: f64,
    pub membership: f64,
    pub sumb: f64,
    /// Required growth of the `N = 2` ratio when the depth doubles.
    pub sumb_growth: f64,
    pub heis: f64,
    pub pseudoloc: f64,
    /// Residual bound in units of the measured quadrature tolerance.
    pub transference_factor: f64,
    pub square_c: f64,
    pub moment_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            group_tol: 1e-12,
            scaling_tol: 1e-12,
            oracle_c: 8.0,
            volume_c: 8.0,
            newdist_c: 10.0,
            intersection_c: 20.0,
            support_c: 8.0,
            decay_slope: (-1.15, -0.9),
            decay_control: -0.2,
            compose_rel: 0.15,
            membership: 1e7,
            sumb: 30.0,
            sumb_growth: 2.0,
            heis: 50.0,
            pseudoloc: 1e3,
            transference_factor: 5.0,
            square_c: 20.0,
            moment_tol: 1e-6,
        }
    }
}

impl Thresholds {
    /// Thresholds that must be positive.
    fn entries(&self) -> [(&'static str, f64); 16] {
        [
            ("group_tol", self.group_tol),
            ("scaling_tol", self.scaling_tol),
            ("oracle_c", self.oracle_c),
            ("volume_c", self.volume_c),
            ("newdist_c", self.newdist_c),
            ("intersection_c", self.intersection_c),
            ("support_c", self.support_c),
            ("compose_rel", self.compose_rel),
            ("membership", self.membership),
            ("sumb", self.sumb),
            ("sumb_growth", self.sumb_growth),
            ("heis", self.heis),
            ("pseudoloc", self.pseudoloc),
            ("transference_factor", self.transference_factor),
            ("square_c", self.square_c),
            ("moment_tol", self.moment_tol),
        ]
    }
}

/// Settings shared by all checks.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SuiteConfig {
    pub seed: u64,
    /// Overrides every check's own sample count.
    pub samples: Option<u64>,
    /// Points per axis of the maximal and square function grids.
    pub grid_n: usize,
    /// Half widths `(a, b)` of those grids: `[-a, a]^2 x [-b, b]`.
    pub grid_box: (f64, f64),
    /// Midpoint cells per axis for intersection kernels and moments.
    pub quad_n: usize,
    pub l_max: usize,
    /// Scale parameters swept by `scaling` and `volume`.
    pub eps: Vec<f64>,
    pub alpha: Vec<u32>,
    /// Orders `m` of the summation check.
    pub m: Vec<u32>,
    /// Vanishing-moment orders of the `moments` check.
    pub moment_orders: Vec<u32>,
    pub thresholds: Thresholds,
    /// Checks run by the suite; empty runs nothing.
    pub checks: Vec<String>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 1,
            samples: None,
            grid_n: 16,
            grid_box: (2.0, 2.0),
            quad_n: 48,
            l_max: analysis::L_MAX_DEFAULT,
            eps: vec![0.0, 0.125, 0.5, 1.0],
            alpha: vec![0, 1, 2],
            m: vec![0, 1, 2],
            moment_orders: vec![1, 2, 3],
            thresholds: Thresholds::default(),
            checks: CHECKS.iter().map(|s| String::from(*s)).collect(),
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<(), VerifyError> {
        let bad = |m: String| Err(VerifyError::InvalidConfig(m));
        for (k, v) in self.thresholds.entries() {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("threshold {k} = {v} must be positive and finite"));
            }
        }
        let (a, b) = self.thresholds.decay_slope;
        if !(a < b) || !a.is_finite() || !b.is_finite() || !self.thresholds.decay_control.is_finite() {
            return bad(format!("decay window {:?} must be finite and increasing", (a, b)));
        }
        if self.samples == Some(0) {
            return bad(String::from("samples must be positive"));
        }
        if self.grid_n < 4 {
            return bad(format!("grid_n = {} below 4", self.grid_n));
        }
        if !(self.grid_box.0 > 0.0 && self.grid_box.1 > 0.0 && self.grid_box.0.is_finite() && self.grid_box.1.is_finite()) {
            return bad(format!("grid_box = {:?} must be positive", self.grid_box));
        }
        if self.quad_n < calculus::MIN_QUAD_N {
            return bad(format!("quad_n = {} below {}", self.quad_n, calculus::MIN_QUAD_N));
        }
        if self.l_max == 0 {
            return bad(String::from("l_max must be positive"));
        }
        if self.eps.is_empty() || self.eps.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return bad(format!("eps sweep {:?} must be nonempty and within [0, 1]", self.eps));
        }
        if self.alpha.is_empty() || self.alpha.iter().any(|&a| a > 8) {
            return bad(format!("alpha {:?} must be nonempty and at most 8", self.alpha));
        }
        if self.m.is_empty() || self.m.iter().any(|&m| m > 8) {
            return bad(format!("m {:?} must be nonempty and at most 8", self.m));
        }
        let mo = &self.moment_orders;
        if mo.is_empty() || mo.iter().any(|&m| m == 0 || m > calculus::MAX_MOMENT_ORDER) {
            return bad(format!("moment_orders {mo:?} must be nonempty and within 1..={}", calculus::MAX_MOMENT_ORDER));
        }
        for c in &self.checks {
            if !CHECKS.contains(&c.as_str()) {
                return Err(VerifyError::UnknownCheck(c.clone()));
            }
        }
        Ok(())
    }

    fn n(&self, default: u64) -> u64 {
        self.samples.unwrap_or(default)
    }
}

/// Runs one named check.
pub fn run_check(name: &str, cfg: &SuiteConfig) -> Result<CheckOutcome, VerifyError> {
    cfg.validate()?;
    match name {
        "assoc" => assoc(cfg),
        "scaling" => scaling(cfg),
        "dist-oracle" => dist_oracle(cfg),
        "volume" => volume(cfg),
        "newdist" => newdist(cfg),
        "intersection" => intersection(cfg),
        "decay" => decay(cfg),
        "compose" => compose(cfg),
        "membership" => membership(cfg),
        "sumb" => sumb(cfg),
        "heis-bound" => heis_bound(cfg),
        "pseudoloc" => pseudoloc(cfg),
        "transference" => transference(cfg),
        "maximal" => maximal(cfg),
        "square" => square(cfg),
        "moments" => moments(cfg),
        _ => Err(VerifyError::UnknownCheck(String::from(name))),
    }
}

fn outcome(mut report: VerificationReport, sweeps: Vec<Sweep>) -> Result<CheckOutcome, VerifyError> {
    report.finish();
    Ok(CheckOutcome { report, sweeps })
}

fn stride(n: u64) -> u64 {
    (n / SWEEP_ROWS as u64).max(1)
}

fn start(name: &str, cfg: &SuiteConfig, threshold: f64) -> VerificationReport {
    let mut r = VerificationReport::new(name, cfg.seed);
    r.threshold = threshold;
    r
}

// ------------------------------------------------------------------ group

fn assoc(cfg: &SuiteConfig) -> Result<CheckOutcome, VerifyError> {
    let n = cfg.n(100_000);
    let tol = cfg.thresholds.group_tol;
    let mut rep = start("assoc", cfg, tol);
    rep.param("box", 4.0);
    let mut rng = stats::rng(cfg.seed, 1);
    let mut sweep = Sweep::new("assoc", &["x", "y", "t"]);
    let (mut w_assoc, mut w_inv, mut w_dil, mut w_flow) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let e = GroupPoint::IDENTITY;
    for i in 0..n {
        let p = stats::uniform_point(&mut rng, 4.0, 4.0);
        let q = stats::uniform_point(&mut rng, 4.0, 4.0);
        let r = stats::uniform_point(&mut rng, 4.0, 4.0);
        let s = stats::log_uniform(&mut rng, 0.125, 8.0);
        let h: f64 = rng.gen_range(-2.0..=2.0);
        let a = group::rel_residual((p * q) * r, p * (q * r));
        let inv = group::rel_residual(p * p.inverse(), e).max(group::rel_residual(p.inverse() * p, e));
        let dpq = group::dilate(s, p * q).map_err(num("assoc"))?;
        let dp = group::dilate(s, p).map_err(num("assoc"))?;
        let dq = group::dilate(s, q).map_err(num("assoc"))?;
        let d = group::rel_residual(dpq, dp * dq);
        let step = |id: FieldId| match id {
            FieldId::XL | FieldId::XR => GroupPoint::new(h, 0.0, 0.0),
            FieldId::YL | FieldId::YR => GroupPoint::new(0.0, h, 0.0),
            FieldId::T => GroupPoint::new(0.0, 0.0, h),
        };
        let mut fl: f64 = 0.0;
        for id in FieldId::ALL {
            let expect = if id.is_right() { step(id) * p } else { p * step(id) };
            fl = fl.max(group::rel_residual(group::flow(id, h, p), expect));
        }
        w_assoc = w_assoc.max(a);
        w_inv = w_inv.max(inv);
        w_dil = w_dil.max(d);
        w_flow = w_flow.max(fl);
        let worst = a.max(inv).max(d).max(fl);
        rep.observe(worst);
        if i % stride(n) == 0 {
            sweep.push(p.to_array().to_vec(), worst, tol);
        }
    }
    rep.fit("associativity", w_assoc).fit("inverse", w_inv).fit("dilation", w_dil).fit("flow", w_flow);
    rep.require("associativity", w_assoc, 0.0, tol)
        .require("inverse", w_inv, 0.0, tol)
        .require("dilation", w_dil, 0.0, tol)
        .require("flow", w_flow, 0.0, tol);
    outcome(rep, vec![sweep])
}

// ----------------------------------------------------------------- metric

fn scaling(cfg: &SuiteConfig) -> Result<CheckOutcome, VerifyError> {
    let n = cfg.n(10_000);
    let tol = cfg.thresholds.scaling_tol;
    let mut rep = start("scaling", cfg, tol);
    rep.param("eps", cfg.eps.clone());
    let mut sweep = Sweep::new("scaling", &["eps", "r"]);
    for (ei, &eps) in cfg.eps.iter().enumerate() {
        let mut rng = stats::rng(cfg.seed, 100 + ei as u64);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let side = if i % 2 == 0 { Side::Left } else { Side::Right };
            let mp = MetricParams { side, eps };
            let p = stats::uniform_point(&mut rng, 4.0, 4.0);
            let q = stats::uniform_point(&mut rng, 4.0, 4.0);
            let r = stats::log_uniform(&mut rng, 1.0 / 16.0, 16.0);
            let lhs = r * metric::dist_surrogate(mp, p, q);
            let dp = group::dilate(r, p).map_err(num("scaling"))?;
            let dq = group::dilate(r, q).map_err(num("scaling"))?;
            let rhs = metric::dist_surrogate(mp, dp, dq);
            let res = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
            worst = worst.max(res);
            rep.observe(res);
            if i % stride(n) == 0 {
                sweep.push(vec![eps, r], lhs, rhs);
            }
        }
        rep.fit(&format!("residual_eps_{eps}"), worst);
    }
    let w = rep.ratio_max;
    rep.require("residual", w, 0.0, tol);
    outcome(rep, vec![sweep])
}

fn dist_oracle(cfg: &SuiteConfig) -> Result<CheckOutcome, VerifyError> {
    let n = cfg.n(200);
    let c = cfg.thresholds.oracle_c;
    let eps_list = [0.125, 0.5, 1.0];
    let ocfg = OracleConfig::default();
    let mut rep = start("dist-oracle", cfg, c);
    rep.param("h", ocfg.h).param("eps", eps_list.to_vec()).param("box", 2.0);
    let mut rng = stats::rng(cfg.seed, 2);
    let mut sweep = Sweep::new("dist-oracle", &["eps", "side", "px", "py", "pt", "qx", "qy", "qt"]);
    let mut failures = 0u64;
    for i in 0..n {
        let eps = eps_list[i as usize % eps_list.len()];
        let side = if (i / eps_list.len() as u64) % 2 == 0 { Side::Left } else { Side::Right };
        let mp = MetricParams { side, eps };
        let p = stats::uniform_point(&mut rng, 2.0, 2.0);
        let q = stats::uniform_point(&mut rng, 2.0, 2.0);
        let sur = metric::dist_surrogate(mp, p, q);
        match metric::dist_oracle(mp, p, q, &ocfg) {
            Ok(o) => {
                rep.observe(o.value / sur);
                let mut inp = vec![eps, if side == Side::Left { 0.0 } else { 1.0 }];
                inp.extend_from_slice(&p.to_array());
                inp.extend_from_slice(&q.to_array());
                sweep.push(inp, o.value, sur);
            }
            Err(e) => {
                failures += 1;
                rep.warn(format!("pair {i}: {e}"));
            }
        }
    }
    let (lo, hi) = (rep.ratio_min, rep.ratio_max);
    rep.fit("oracle_failures", failures as f64);
    rep.require("ratio_min", lo, 1.0 / c, f64::INFINITY)
        .require("ratio_max", hi, 0.0, c)
        .require("oracle_failures", failures as f64, 0.0, 0.0);
    outcome(rep, vec![sweep])
}

/// Monte-Carlo measure of the surrogate ball, sampled in left-translated
/// coordinates `q = c u` where the ball sits inside a box.
fn ball_measure<R: Rng>(rng: &mut R, mp: MetricParams, c: GroupPoint, delta: f64, draws: usize) -> f64 {
    let zc = c.z_abs();
    let tb = (delta * delta).max(delta * mp.eps * (zc + delta));
    let mut hits = 0usize;
    for _ in 0..draws {
        let u = stats::uniform_point(rng, delta, tb);
        let q = match mp.side {
            Side::Left => c * u,
            Side::Right => u * c,
        };
        if metric::dist_surrogate(mp, c, q) < delta {
            hits += 1;
        }
    }
    hits as f64 / draws as f64 * (2.0 * delta) * (2.0 * delta) * (2.0 * tb)
}

fn volume(cfg: &SuiteConfig) -> Result<CheckOutcome, VerifyError> {
    let n = cfg.n(100);
    let c = cfg.thresholds.volume_c;
    let draws = 20_000;
    let mut rep = start("volume", cfg, c);
    rep.param("eps", cfg.eps.clone()).param("draws", draws);
    let mut rng = stats::rng(cfg.seed, 3);
    let mut sweep = Sweep::new("volume", &["eps", "delta", "cx", "cy", "ct"]);
    let (mut doubling, mut mc_doubling) = (0.0f64, 0.0f64);
    for i in 0..n {
        let eps = cfg.eps[i as usize % cfg.eps.len()];
        let side = if i % 2 == 0 { Side::Left } else { Side::Right };
        let mp = MetricParams { side, eps };
        let center = stats::uniform_point(&mut rng, 4.0, 4.0);
        let delta = stats::log_uniform(&mut rng, 0.125, 2.0);
        let v = metric::volume(mp, center, delta).map_err(num("volume"))?;
        let v2 = metric::volume(mp, center, 2.0 * delta).map_err(num("volume"))?;
        let mc = ball_measure(&mut rng, mp, center, delta, draws);
        let mc2 = ball_measure(&mut rng, mp, center, 2.0 * delta, draws);
        doubling = doubling.max(v2 / v);
        mc_doubling = mc_doubling.max(mc2 / mc);
        rep.observe(mc / v);
        let mut inp = vec![eps, delta];
        inp.extend_from_slice(&center.to_array());
        sweep.push(inp, mc, v);
    }
    let (lo, hi) = (rep.ratio_min, rep.ratio_max);
    rep.fit("doubling", doubling).fit("mc_doubling", mc_doubling);
    rep.require("ratio_min", lo, 1.0 / c, f64::INFINITY)
        .require("ratio_max", hi, 0.0, c)
        .require("doubling", doubling, 0.0, 16.0);
    rep.note("mc_doubling is the Monte-Carlo doubling ratio, informational");
    outcome(rep, vec![sweep])
}

fn newdist(cfg: &SuiteConfig) -> Result<CheckOutcome, VerifyError> {
    let n = cfg.n(100);
    let c = cfg.thresholds.newdist_c;
    let mut rep = start("newdist", cfg, c);
    rep.param("lattice", 12usize).param("rounds", 3usize).param("box", 2.0);
    let mut rng = stats::rng(cfg.seed, 4);
    let mut sweep = Sweep::new("newdist", &["px", "py", "pt", "qx", "qy", "qt"]);
    let rl = |a, b| metric::dist_surrogate(MetricParams::left(0.0), a, b);
    let rr = |a, b| metric::dist_surrogate(MetricParams::right(0.0), a, b);
    for _ in 0..n {
        let p = stats::uniform_point(&mut rng, 2.0, 2.0);
        let q = stats::uniform_point(&mut rng, 2.0, 2.0);
        let lat = metric::MidpointLattice::around(p, q, 1.0, 12);
        let comp = metric::dist_composed_refined(rl, rr, p, q, &lat, 3).map_err(num("newdist"))?;
        let full = metric::dist_surrogate(MetricParams::left(1.0), p, q);
        rep.observe(comp / full);
        let mut inp = p.to_array().to_vec();
        inp.extend_from_slice(&q.to_array());
        sweep.push(inp, comp, full);
    }
    let (lo, hi) = (rep.ratio_min, rep.ratio_max);
    rep.fit("C", hi.max(1.0 / lo));
    rep.require("C", hi.max(1.0 / lo), 0.0, c);
    outcome(rep, vec![sweep])
}

// ---------------------------------------------------------------- kernels

fn intersection(cfg: &SuiteConfig) -> Result<CheckOutcome, VerifyError> {
    let n = cfg.n(50);
    let c = cfg.thresholds.intersection_c;
    let scales = [0.25, 0.5, 1.0, 2.0, 4.0];
    let support_samples = 10u64.min(n);
    let mut rep = start("intersection", cfg, c);
    rep.param("quad_n", cfg.quad_n).param("scales", scales.to_vec()).param("support_samples", support_samples);
    let mut rng = stats::rng(cfg.seed, 5);
    let mut sweep = Sweep::new("intersection", &["r_l", "r_r", "x", "y", "t"]);
    let mut support: f64 = 0.0;
    for i in 0..n {
        let r_l = scales[rng.gen_range(0..scales.len())];
        let r_r = scales[rng.gen_range(0..scales.len())];
        let x = stats::uniform_point(&mut rng, 2.0, 2.0);
        let k = kernels::IntersectionKernel::new(r_l, r_r, cfg.quad_n).map_err(num("intersection"))?;
        let bp = BoundParams::new(r_l, r_r, 0, 0, 0).map_err(num("intersection"))?;
        // B with N = m = 0 on the diagonal is 1 / V
        let inv_v = kernels::bound_B(&bp, x, x);
        let kv = k.eval(x, x) / inv_v;
        rep.observe(kv);
        let mut inp = vec![r_l, r_r];
        inp.extend_from_slice(&x.to_array());
        sweep.push(inp, k.eval(x, x), inv_v);
        if i < support_samples {
            support = support.max(kernels::intersection_support_constant(&k, x, 24));
        }
    }
    let (lo, hi) = (rep.ratio_min, rep.ratio_max);
    rep.fit("support_C", support);
    rep.require("kv_min", lo, 1.0 / c, f64::INFINITY)
        .require("kv_max", hi, 0.0, c)
        .require("support_C", support, 0.0, cfg.thresholds.support_c);
    outcome(rep, vec![sweep])
}

fn decay(cfg: &SuiteConfig) -> Result<CheckOutcome, VerifyError> {
    let t = &cfg.thresholds;
    let dc = DecayConfig::default();
    let mut rep = start("decay", cfg, t.decay_slope.1);
    rep.param("max_gap", dc.max_gap as i64).param("scan", dc.scan).param("orders", vec![2.0, 0.0]);
    let p1 = calculus::make_vanishing_moment(1.0, 2, cfg.seed).map_err(num("decay"))?;
    let p2 = calculus::make_vanishing_moment(1.0, 2, cfg.seed + 1).map_err(num("decay"))?;
    let main = kernels::convolution_decay(&p1, &p2, &dc).map_err(num("decay"))?;
    let g1 = calculus::make_vanishing_moment(1.0, 0, 0).map_err(num("decay"))?;
    let g2 = calculus::make_vanishing_moment(0.8, 0, 0).map_err(num("decay"))?;
    let control = kernels::convolution_decay(&g1, &g2, &dc).map_err(num("decay"))?;
    for g in &main.gains {
        rep.observe(*g);
    }
    let (s, sc) = (main.slope / LN_2, control.slope / LN_2);
    rep.fit("slope_log2", s).fit("control_slope_log2", sc);
    rep.require("slope_log2", s, t.decay_slope.0, t.decay_slope.1)
        .require("control_slope_log2", sc, t.decay_control, f64::INFINITY);
    let mut cs = control.sweep;
    cs.name = String::from("decay-control");
    outcome(rep, vec![main.sweep, cs])
}

fn compose(cfg: &SuiteConfig) -> Result<CheckOutcome, VerifyError> {
    let rel = cfg.thresholds.compose_rel;
    let ccfg = kernels::ComposeConfig { seed: cfg.seed, ..Default::default() };
    let max_gap = 4;
    let mut rep = start("compose", cfg, rel);
    rep.param("max_gap", max_gap as i64)
        .param("grid_n", ccfg.grid_n)
        .param("kernel_n", ccfg.kernel_n)
        .param("base_points", ccfg.base_points);
    let phi = calculus::make_vanishing_moment(1.0, 1, cfg.seed + 2).map_err(num("compose"))?;
    let psi = calculus::make_vanishing_moment(1.0, 1, cfg.seed + 3).map_err(num("compose"))?;
    let fit = kernels::composition_gain_fit(&phi, &psi, max_gap, &ccfg).map_err(num("compose"))?;
    for row in &fit.sweep.rows {
        rep.observe(row.ratio);
    }
    let (ej, ek) = (fit.exponent_j / LN_2, fit.exponent_k / LN_2);
    rep.fit("exponent_j_log2", ej).fit("exponent_k_log2", ek).fit("base_ratio", fit.base_ratio);
    rep.require("exponent_j_log2", ej, 1.0 - rel, 1.0 + rel).require("exponent_k_log2", ek, 1.0 - rel, 1.0 + rel);
    outcome(rep, vec![fit.sweep])
}

fn membership(cfg: &SuiteConfig) -> Result<CheckOutcome, VerifyError> {
    let thr = cfg.thresholds.membership;
    let base = MembershipConfig { seed: cfg.seed, threshold: thr, ..Default::default() };
    let cheap = MembershipConfig { samples: cfg.n(base.samples as u64) as usize, ..base.clone() };
    let costly = MembershipConfig { samples: cfg.n(12) as usize, ..base.clone() };
    let mut rep = start("membership", cfg, thr);
    rep.param("m", 0u32)
        .param("samples_cheap", cheap.samples)
        .param("samples_convolution", costly.samples)
        .param("center_norm_max", base.center_norm.1);
    let phi = calculus::make_vanishing_moment(1.0, 2, cfg.seed + 8).map_err(num("membership"))?;
    let fam = DyadicKernelFamily::single(&[(-1, phi.clone()), (0, phi.clone()), (1, phi)], 1).map_err(num("membership"))?;
    let pieces = kernels::cz_dyadic_pieces(&fam, -1..=1).map_err(num("membership"))?;
    let opl = kernels::LeftConvolution::from_profiles(&pieces).map_err(num("membership"))?;
    let id = kernels::membership_test_A(&kernels::IdentityOperator, 0, &cheap).map_err(num("membership"))?;
    let lc = kernels::membership_test_A(&opl, 0, &costly).map_err(num("membership"))?;
    let cm = kernels::membership_test_A(&kernels::CoordinateMultiplication { axis: 0 }, 0, &cheap)
        .map_err(num("membership"))?;
    let mut sweep = Sweep::new("membership", &["operator"]);
    for (k, r) in [&id, &lc, &cm].iter().enumerate() {
        sweep.push(vec![k as f64], r.ratio_max, thr);
        rep.observe(r.ratio_max);
        for w in &r.warnings {
            rep.warn(format!("{}: {w}", r.params.get("operator").map(|p| format!("{p:?}")).unwrap_or_default()));
        }
    }
    rep.fit("identity_ratio_max", id.ratio_max)
        .fit("left_convolution_ratio_max", lc.ratio_max)
        .fit("coordinate_ratio_max", cm.ratio_max);
    rep.require("identity passes", if id.pass { 1.0 } else { 0.0 }, 1.0, 1.0)
        .require("left convolution passes", if lc.pass { 1.0 } else { 0.0 }, 1.0, 1.0)
        .require("coordinate multiplication fails", if cm.pass { 0.0 } else { 1.0 }, 1.0, 1.0);
    rep.note("operator order in the sweep: identity, left convolution, coordinate multiplication");
    outcome(rep, vec![sweep])
}

// --------------------------------------------------------------- analysis

fn sumb(cfg: &SuiteConfig) -> Result<CheckOutcome, VerifyError> {
    let n = cfg.n(100);
    let thr = cfg.thresholds.sumb;
    let mut rep = start("sumb", cfg, thr);
    rep.param("m", cfg.m.iter().map(|&m| m as f64).collect::<Vec<f64>>()).param("depth", 12u32);
    let mut rng = stats::rng(cfg.seed, 6);
    let pairs: Vec<(GroupPoint, GroupPoint)> =
        (0..n).map(|_| (stats::uniform_point(&mut rng, 2.0, 2.0), stats::uniform_point(&mut rng, 2.0, 2.0))).collect();
    let mut sweep = Sweep::new("sumb", &["m", "N", "depth"]);
    for &m in &cfg.m {
        let nn = group::Q_DIM + m + 1;
        let sc = SumBConfig { n_l: nn, n_r: nn, m, depth: 12, threshold: thr, ..Default::default() };
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for &(x, y) in &pairs {
            let r = analysis::sum_B_check(&sc, x, y).map_err(num("sumb"))?;
            rep.observe(r.ratio_max);
            lo = lo.min(r.ratio_max);
            hi = hi.max(r.ratio_max);
            sweep.push(vec![m as f64, nn as f64, 12.0], r.ratio_max, 1.0);
        }
        rep.fit(&format!("ratio_max_m{m}"), hi);
        rep.require(&format!("ratio_min_m{m}"), lo, 1.0 - 1e-12, f64::INFINITY).require(&format!("ratio_max_m{m}"), hi, 0.0, thr);
    }
    // divergence control: N = 2 lies below Q + m + 1
    let mut growth: f64 = 0.0;
    let mut control = Sweep::new("sumb-control", &["depth"]);
    for &(x, y) in &pairs {
        let a = SumBConfig { n_l: 2, n_r: 2, m: 0, depth: 12, ..Default::default() };
        let b = SumBConfig { depth: 24, ..a.clone() };
        let (ra, rb) = (analysis::sum_B_ratio(&a, x, y), analysis::sum_B_ratio(&b, x, y));
        growth = growth.max(rb / ra);
        control.push(vec![24.0], rb, ra);
    }
    rep.fit("control_growth", growth);
    rep.require("control_growth", growth, cfg.thresholds.sumb_growth, f64::INFINITY);
    outcome(rep, vec![sweep, control])
}

fn heis_bound(cfg: &SuiteConfig) -> Result<CheckOutcome, VerifyError> {
    let n = cfg.n(500);
    let thr = cfg.thresholds.heis;
    let mut rep = start("heis-bound", cfg, thr);
    rep.param("alpha", cfg.alpha.iter().map(|&a| a as f64).collect::<Vec<f64>>())
        .param("l_max", cfg.l_max)
        .param("norm_range", vec![0.125, 8.0]);
    let mut rng = stats::rng(cfg.seed, 7);
    let mut sweep = Sweep::new("heis-bound", &["alpha", "zx", "zy", "zt", "ex", "ey", "et"]);
    let mut long_tail = 0u64;
    let mut asym: f64 = 1.0;
    for _ in 0..n {
        let zeta = stats::log_uniform_point(&mut rng, 0.125, 8.0);
        let eta = stats::log_uniform_point(&mut rng, 0.125, 8.0);
        for &a in &cfg.alpha {
            let s = analysis::heis_pointwise_sum(zeta, eta, a, cfg.l_max).map_err(num("heis-bound"))?;
            if s.relative_tail() > analysis::TAIL_FRACTION {
                long_tail += 1;
                continue;
            }
            let c = analysis::heis_closed_form(zeta, eta, a).map_err(num("heis-bound"))?;
            rep.observe(s.value / c);
            let mut inp = vec![a as f64];
            inp.extend_from_slice(&zeta.to_array());
            inp.extend_from_slice(&eta.to_array());
            sweep.push(inp, s.value, c);
            let sw = analysis::heis_pointwise_sum(eta, zeta, a, cfg.l_max).map_err(num("heis-bound"))?;
            let q = sw.value / s.value;
            asym = asym.max(q).max(1.0 / q);
        }
    }
    let (lo, hi) = (rep.ratio_min, rep.ratio_max);
    rep.fit("swap_asymmetry", asym).fit("long_tails", long_tail as f64);
    rep.require("ratio_min", lo, 1.0 / thr, f64::INFINITY)
        .require("ratio_max", hi, 0.0, thr)
        .require("long_tails", long_tail as f64, 0.0, 0.0);
    rep.note("swap_asymmetry compares the sum at (zeta, eta) and (eta, zeta); informational");
    outcome(rep, vec![sweep])
}

fn pseudoloc(cfg: &SuiteConfig) -> Result<CheckOutcome, VerifyError> {
    let n = cfg.n(100);
    let thr = cfg.thresholds.pseudoloc;
    let mut rep = start("pseudoloc", cfg, thr);
    let mut rng = stats::rng(cfg.seed, 8);
    let pairs: Vec<(GroupPoint, GroupPoint)> = (0..n)
        .map(|_| {
            let x = stats::uniform_point(&mut rng, 2.0, 2.0);
            (x, x * stats::log_uniform_point(&mut rng, 0.25, 4.0))
        })
        .collect();
    let phi = calculus::make_vanishing_moment(1.0, 1, cfg.seed + 4).map_err(num("pseudoloc"))?;
    let psi = calculus::make_vanishing_moment(1.0, 1, cfg.seed + 5).map_err(num("pseudoloc"))?;
    let range = -4..=4;
    let fam = DyadicKernelFamily::ladder(&phi, &psi, range.clone(), range.clone(), 1).map_err(num("pseudoloc"))?;
    let q = QTable::heisenberg();
    rep.param("family", fam.len()).param("orders", vec![0.0, 1.0, 2.0]);
    let mut sweep = Sweep::new("pseudoloc", &["split", "a"]);
    for (si, split) in [OffDiagSplit::LeftHalf, OffDiagSplit::RightHalf].into_iter().enumerate() {
        for a in 0..=2u32 {
            let r = analysis::offdiag_kernel_check(&fam, split, &pairs, a, thr).map_err(num("pseudoloc"))?;
            rep.observe(r.ratio_max);
            rep.fit(&format!("ratio_max_{split:?}_a{a}"), r.ratio_max);
            sweep.push(vec![si as f64, a as f64], r.ratio_max, thr);
        }
    }
    let hi = rep.ratio_max;
    rep.require("kernel_ratio_max", hi, 0.0, thr);
    // control: Gaussians have no vanishing moments, so the sum over the
    // finer scales keeps growing with the family
    let g1 = calculus::make_vanishing_moment(1.0, 0, 0).map_err(num("pseudoloc"))?;
    let g2 = calculus::make_vanishing_moment(0.8, 0, 0).map_err(num("pseudoloc"))?;
    let mut ctl = [0.0; 2];
    for (i, r) in [-2..=2, range].into_iter().enumerate() {
        let cfam = DyadicKernelFamily::ladder(&g1, &g2, r.clone(), r, 0).map_err(num("pseudoloc"))?;
        let c = analysis::offdiag_kernel_check(&cfam, OffDiagSplit::LeftHalf, &pairs, 0, thr).map_err(num("pseudoloc"))?;
        ctl[i] = c.ratio_max;
    }
    rep.fit("control_ratio_max", ctl[1]).fit("control_growth", ctl[1] / ctl[0]);
    rep.note("control: order-0 family, left half, a = 0, ranges -2..=2 then -4..=4; informational");
    // the generic series against the closed Heisenberg sum
    let (mut lo_c, mut hi_c) = (f64::INFINITY, 0.0f64);
    for &(x, z) in &pairs {
        for a in 0..=2u32 {
            let p = analysis::pseudoloc_bound(x, z, a, cfg.l_max, &q).map_err(num("pseudoloc"))?;
            let h = analysis::heis_pointwise_sum(x, z, a, cfg.l_max).map_err(num("pseudoloc"))?;
            lo_c = lo_c.min(p.value / h.value);
            hi_c = hi_c.max(p.value / h.value);
        }
    }
    rep.fit("series_ratio_min", lo_c).fit("series_ratio_max", hi_c);
    rep.require("series_ratio_min", lo_c, 1.0 / cfg.thresholds.heis, f64::INFINITY)
        .require("series_ratio_max", hi_c, 0.0, cfg.thresholds.heis);
    outcome(rep, vec![sweep])
}

fn transference(cfg: &SuiteConfig) -> Result<CheckOutcome, VerifyError> {
    let n = cfg.n(1000);
    let factor = cfg.thresholds.transference_factor;
    let (lo_n, hi_n) = (5usize, 10usize);
    let mut rep = start("transference", cfg, factor);
    rep.param("outer_n", vec![lo_n as f64, hi_n as f64]).param("box", 1.0);
    let tab = GhTable::new(kernels::GH_MAX);
    let f = PolyExp::gaussian(1.0, 1.0);
    let term = |w: f64, seed: u64| -> Result<PolyExp, VerifyError> {
        let p = calculus::make_vanishing_moment(w, 1, seed).map_err(num("transference"))?;
        Ok(p.as_analytic().expect("vanishing-moment profiles are analytic").terms[0].clone())
    };
    let k1 = term(0.7, cfg.seed + 6)?;
    let k2 = term(0.8, cfg.seed + 7)?;
    let mut rng = stats::rng(cfg.seed, 9);
    let mut sweep = Sweep::new("transference", &["x", "y", "t", "yx", "yy", "yt"]);
    let (mut tol, mut res, mut scale) = (0.0f64, 0.0f64, 0.0f64);
    let mut rows = Vec::new();
    for _ in 0..n {
        let x = stats::uniform_point(&mut rng, 1.0, 1.0);
        let y = stats::uniform_point(&mut rng, 1.0, 1.0);
        let (a5, b5) = kernels::transference_sides(&tab, &f, &k1, &k2, x, y, lo_n).map_err(num("transference"))?;
        let (a, b) = kernels::transference_sides(&tab, &f, &k1, &k2, x, y, hi_n).map_err(num("transference"))?;
        tol = tol.max((a - a5).abs()).max((b - b5).abs());
        res = res.max((a - b).abs());
        scale = scale.max(a.abs()).max(b.abs());
        rows.push((x, y, a, b));
    }
    let tau = tol.max(1e-14 * scale);
    for (x, y, a, b) in rows {
        let mut inp = x.to_array().to_vec();
        inp.extend_from_slice(&y.to_array());
        sweep.push(inp, a, b);
        rep.observe((a - b).abs() / tau);
    }
    rep.fit("tolerance", tau).fit("residual", res).fit("scale", scale);
    rep.require("residual / tolerance", res / tau, 0.0, factor);
    rep.note("tolerance: largest change of either side between the two outer orders");
    outcome(rep, vec![sweep])
}

/// Ten test functions on the configured grid: Gaussians, order-1 and order-2
/// profiles and signed mixtures, at varied centers and widths.
fn test_family(cfg: &SuiteConfig) -> Result<(GridSpec, Vec<GridFunction>), VerifyError> {
    let spec = GridSpec::centered(cfg.grid_box.0, cfg.grid_box.1, cfg.grid_n).map_err(num("grid"))?;
    let mut rng = stats::rng(cfg.seed, 10);
    let mut out = Vec::new();
    for i in 0..10u64 {
        let w = rng.gen_range(0.4..0.8);
        let c = stats::uniform_point(&mut rng, 0.5 * cfg.grid_box.0, 0.5 * cfg.grid_box.1);
        let order = (i % 3) as u32;
        let p = calculus::make_vanishing_moment(w, order, cfg.seed + 20 + i).map_err(num("grid"))?;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let g = calculus::sample(|u| sign * p.eval(c.inverse() * u), &spec).map_err(num("grid"))?;
        out.push(g);
    }
    Ok((spec, out))
}

const RADII: [f64; 3] = [0.5, 1.0, 2.0];

fn maximal(cfg: &SuiteConfig) -> Result<CheckOutcome, VerifyError> {
    let mut rep = start("maximal", cfg, 0.0);
    rep.param("grid_n", cfg.grid_n).param("radii", RADII.to_vec()).param("functions", 10usize);
    let (spec, fs) = test_family(cfg)?;
    let avg = analysis::Averager::new(spec, &RADII).map_err(num("maximal"))?;
    let mut sweep = Sweep::new("maximal", &["function"]);
    let mut violations = 0usize;
    let mut l2: f64 = 0.0;
    for (i, f) in fs.iter().enumerate() {
        let (big, mlr) = avg.maximal_pair(f).map_err(num("maximal"))?;
        let mut worst: f64 = 0.0;
        for (a, b) in big.values.iter().zip(&mlr.values) {
            if a > b {
                violations += 1;
            }
            if *b > 0.0 {
                worst = worst.max(a / b);
            }
        }
        rep.observe(worst);
        l2 = l2.max(big.l2() / f.l2());
        sweep.push(vec![i as f64], big.l2(), mlr.l2());
    }
    rep.fit("violations", violations as f64).fit("l2_ratio_max", l2);
    rep.require("violations", violations as f64, 0.0, 0.0);
    outcome(rep, vec![sweep])
}

fn square(cfg: &SuiteConfig) -> Result<CheckOutcome, VerifyError> {
    let thr = cfg.thresholds.square_c;
    let mut rep = start("square", cfg, thr);
    let phi = calculus::make_vanishing_moment(0.35, 2, cfg.seed + 11).map_err(num("square"))?;
    let psi = calculus::make_vanishing_moment(0.35, 2, cfg.seed + 12).map_err(num("square"))?;
    let range = 0..=1;
    let fam = DyadicKernelFamily::ladder(&phi, &psi, range.clone(), range.clone(), 2).map_err(num("square"))?;
    rep.param("grid_n", cfg.grid_n).param("radii", RADII.to_vec()).param("family", fam.len()).param("functions", 10usize);
    rep.note("upper domination only; no lower frame bound is asserted");
    let (spec, fs) = test_family(cfg)?;
    let avg = analysis::Averager::new(spec, &RADII).map_err(num("square"))?;
    let mut sweep = Sweep::new("square", &["function", "j", "k"]);
    for (i, f) in fs.iter().enumerate() {
        let big = avg.maximal(f, MaxSide::TwoSided).map_err(num("square"))?;
        let floor = 1e-12 * big.max_abs();
        for ((j, k), piece) in analysis::square_pieces(f, &fam, range.clone(), range.clone()).map_err(num("square"))? {
            let mut c: f64 = 0.0;
            for (p, m) in piece.values.iter().zip(&big.values) {
                if *m > floor {
                    c = c.max(p.abs() / m);
                }
            }
            rep.observe(c);
            sweep.push(vec![i as f64, j as f64, k as f64], piece.max_abs(), big.max_abs());
        }
    }
    let c = rep.ratio_max;
    rep.fit("C", c);
    rep.require("C", c, 0.0, thr);
    outcome(rep, vec![sweep])
}

fn moments(cfg: &SuiteConfig) -> Result<CheckOutcome, VerifyError> {
    let tol = cfg.thresholds.moment_tol;
    let mut rep = start("moments", cfg, tol);
    let orders = &cfg.moment_orders;
    rep.param("orders", orders.iter().map(|&m| m as f64).collect::<Vec<f64>>()).param("quad_n", cfg.quad_n);
    let mut sweep = Sweep::new("moments", &["m", "a", "b", "c"]);
    for &m in orders {
        let phi: ProfileFunction = calculus::make_vanishing_moment(1.0, m, cfg.seed + 30 + m as u64).map_err(num("moments"))?;
        let mut worst: f64 = 0.0;
        for mo in calculus::moments(&phi, m - 1, cfg.quad_n).map_err(num("moments"))? {
            let r = mo.relative();
            worst = worst.max(r);
            rep.observe(r);
            sweep.push(vec![m as f64, mo.exps.0 as f64, mo.exps.1 as f64, mo.exps.2 as f64], mo.value, mo.abs_scale);
        }
        rep.fit(&format!("worst_m{m}"), worst);
    }
    let w = rep.ratio_max;
    rep.require("relative_moment", w, 0.0, tol);
    outcome(rep, vec![sweep])
}
