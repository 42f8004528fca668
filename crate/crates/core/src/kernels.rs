//! Size gauges and kernels at two scales.
//!
//! * [`bound_B`], the gauge `r_L^{N_L} r_R^{N_R} (1 + r rho)^{-m} / V`.
//! * [`k_intersect`], the smooth ball-intersection kernel `K_{r_L, r_R}`.
//! * [`elementary_kernel`] and [`verify_elementary_growth`].
//! * The dyadic laws [`convolution_decay`] and [`compose_elementary`].
//! * Dyadic families: [`cz_dyadic_sum`], [`product_dyadic_sum`].
//! * [`membership_test_A`], pairing tests against Gaussian-packet bumps.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::ops::RangeInclusive;

use rand::Rng;

use crate::calculus::{
    self, dilate_profile, CalcError, GridFunction, GridSpec, ProfileFunction, Sampled, SmoothBump, SupportBox,
    TensorKernelQuad,
};
use crate::fmath;
use crate::gauss::{self, GaussError, GaussianFrame, GhTable};
use crate::group::{self, flow, FieldId, GroupPoint, Q};
use crate::metric::{self, MetricParams, Side};
use crate::poly::{Poly3, PolyExp};
use crate::report::{Sweep, VerificationReport};
use crate::stats;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error(transparent)]
    Calc(#[from] CalcError),
    #[error(transparent)]
    Gauss(#[from] GaussError),
    #[error("profile `{0}` is not a finite sum of P exp(-E) terms")]
    NotAnalytic(String),
    #[error("profile `{label}` has moment order {have}, family requires {need}")]
    MomentOrder { label: String, have: u32, need: u32 },
    #[error("derivative order {0} above the supported maximum 2")]
    DerivOrder(u32),
    #[error("cannot resolve: {0}")]
    Unresolved(String),
    #[error("empty {0}")]
    Empty(&'static str),
}

fn check_scale(r: f64) -> Result<(), KernelError> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(KernelError::BadScale(r))
    }
}

// ---------------------------------------------------------------- bound B

/// Arguments of [`bound_B`] other than the two points.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundParams {
    pub r_l: f64,
    pub r_r: f64,
    pub n_l: u32,
    pub n_r: u32,
    pub m: u32,
}

impl BoundParams {
    pub fn new(r_l: f64, r_r: f64, n_l: u32, n_r: u32, m: u32) -> Result<Self, KernelError> {
        check_scale(r_l)?;
        check_scale(r_r)?;
        Ok(BoundParams { r_l, r_r, n_l, n_r, m })
    }

    /// `min(r_L, r_R) / max(r_L, r_R)`.
    pub fn eps(&self) -> f64 {
        self.r_l.min(self.r_r) / self.r_l.max(self.r_r)
    }

    /// Side whose metric governs the geometry: `Left` when `r_L <= r_R`.
    pub fn side(&self) -> Side {
        if self.r_l <= self.r_r {
            Side::Left
        } else {
            Side::Right
        }
    }

    pub fn metric(&self) -> MetricParams {
        MetricParams { side: self.side(), eps: self.eps() }
    }

    /// The smaller of the two scales.
    pub fn r_min(&self) -> f64 {
        self.r_l.min(self.r_r)
    }

    pub fn with_scales(&self, r_l: f64, r_r: f64) -> Self {
        BoundParams { r_l, r_r, ..*self }
    }
}

/// `B(r_L, r_R, N_L, N_R, m, x, y)`.
///
/// For `r_L <= r_R`: `r_L^{N_L} r_R^{N_R} (1 + r_L rho)^{-m} / V(x, 1/r_L + rho)`
/// with `rho`, `V` the left surrogates at `eps = r_L / r_R`. Otherwise the
/// right surrogates at `eps = r_R / r_L` and `r_R` in place of `r_L`.
#[allow(non_snake_case)]
pub fn bound_B(bp: &BoundParams, x: GroupPoint, y: GroupPoint) -> f64 {
    let mp = bp.metric();
    let r = bp.r_min();
    let rho = metric::dist_surrogate(mp, x, y);
    let v = metric::volume_unchecked(mp.eps, x, 1.0 / r + rho);
    fmath::powi(bp.r_l, bp.n_l as i32) * fmath::powi(bp.r_r, bp.n_r as i32)
        / (fmath::powi(1.0 + r * rho, bp.m as i32) * v)
}

// ------------------------------------------------------ intersection kernel

/// Two-point kernel evaluated pointwise.
pub trait TwoPointKernel {
    fn eval(&self, x: GroupPoint, z: GroupPoint) -> f64;
}

impl<F: Fn(GroupPoint, GroupPoint) -> f64> TwoPointKernel for F {
    fn eval(&self, x: GroupPoint, z: GroupPoint) -> f64 {
        self(x, z)
    }
}

/// `K_{r_L, r_R}(x, y) = r_L^4 r_R^4 int chi(r_L z^{-1} x) chi(r_R z y^{-1}) dz`
/// with the smooth bump `chi` of [`SmoothBump`].
#[derive(Clone, Debug)]
pub struct IntersectionKernel {
    quad: TensorKernelQuad,
    pub r_l: f64,
    pub r_r: f64,
}

impl IntersectionKernel {
    /// Midpoint rule with `n^3` cells on the support of the finer bump.
    pub fn new(r_l: f64, r_r: f64, n: usize) -> Result<Self, KernelError> {
        check_scale(r_l)?;
        check_scale(r_r)?;
        let chi = ProfileFunction::new(SmoothBump { amp: 1.0 }, 0, "chi");
        // substituting z = w y turns the integral into the tensor-kernel form
        let quad = TensorKernelQuad::new(&chi, &chi, r_l, r_r, n)?;
        Ok(IntersectionKernel { quad, r_l, r_r })
    }

    pub fn eval(&self, x: GroupPoint, y: GroupPoint) -> f64 {
        self.quad.eval(x, y)
    }

    pub fn support_in_y(&self, x: GroupPoint) -> SupportBox {
        self.quad.support_in_y(x)
    }
}

impl TwoPointKernel for IntersectionKernel {
    fn eval(&self, x: GroupPoint, z: GroupPoint) -> f64 {
        self.quad.eval(x, z)
    }
}

/// One evaluation of [`IntersectionKernel`].
pub fn k_intersect(r_l: f64, r_r: f64, x: GroupPoint, y: GroupPoint, n: usize) -> Result<f64, KernelError> {
    Ok(IntersectionKernel::new(r_l, r_r, n)?.eval(x, y))
}

/// Largest `r_min rho(x, y)` over the points `y` of an `n_scan^3` grid on the
/// support box of `K(x, .)` where the kernel is nonzero. This is the fitted
/// constant `C` of the containment `supp K(x, .) in {rho <= C / r_min}`.
pub fn intersection_support_constant(k: &IntersectionKernel, x: GroupPoint, n_scan: usize) -> f64 {
    let bp = BoundParams { r_l: k.r_l, r_r: k.r_r, n_l: 0, n_r: 0, m: 0 };
    let mp = bp.metric();
    let (pts, _) = k.support_in_y(x).midpoints(n_scan);
    let mut c: f64 = 0.0;
    for y in pts {
        if k.eval(x, y) > 0.0 {
            c = c.max(bp.r_min() * metric::dist_surrogate(mp, x, y));
        }
    }
    c
}

/// Both sides of the scale-change inequality for `K_{r_L^1, r_R^1}(x, z)`:
/// `(lhs, rhs)` where `rhs` is the factor times the kernel at the rescaled pair.
pub fn scale_change_pair(
    r: (f64, f64),
    r1: (f64, f64),
    x: GroupPoint,
    z: GroupPoint,
    n: usize,
) -> Result<(f64, f64), KernelError> {
    let (r_l, r_r) = r;
    let (r_l1, r_r1) = r1;
    let lhs = k_intersect(r_l1, r_r1, x, z, n)?;
    let rhs = if r_l / r_r >= r_l1 / r_r1 {
        let f = fmath::powi(r_l * r_r1 / (r_l1 * r_r), 4);
        f * k_intersect(r_l1, r_l1 * r_r / r_l, x, z, n)?
    } else {
        let f = fmath::powi(r_r * r_l1 / (r_r1 * r_l), 4);
        f * k_intersect(r_r1 * r_l / r_r, r_r1, x, z, n)?
    };
    Ok((lhs, rhs))
}

// ------------------------------------------------------ elementary kernels

/// Kernel of `Op_L(phi^{(r_L)}) Op_R(psi^{(r_R)})`.
#[derive(Clone, Debug)]
pub struct ElementaryKernel {
    quad: Option<TensorKernelQuad>,
    pub r_l: f64,
    pub r_r: f64,
}

impl ElementaryKernel {
    /// The zero kernel at the given scales.
    pub fn zero(r_l: f64, r_r: f64) -> Self {
        ElementaryKernel { quad: None, r_l, r_r }
    }

    pub fn is_zero(&self) -> bool {
        self.quad.is_none()
    }
}

impl TwoPointKernel for ElementaryKernel {
    fn eval(&self, x: GroupPoint, z: GroupPoint) -> f64 {
        self.quad.as_ref().map_or(0.0, |q| q.eval(x, z))
    }
}

/// Builds the elementary kernel of the tensor pair `(phi, psi)` at `(r_L, r_R)`
/// with an `n^3` midpoint rule. Both profiles must have moment order at least
/// `min_order`.
pub fn elementary_kernel(
    phi: &ProfileFunction,
    psi: &ProfileFunction,
    r_l: f64,
    r_r: f64,
    n: usize,
    min_order: u32,
) -> Result<ElementaryKernel, KernelError> {
    check_scale(r_l)?;
    check_scale(r_r)?;
    for p in [phi, psi] {
        if p.moment_order() < min_order {
            return Err(KernelError::MomentOrder { label: p.label.clone(), have: p.moment_order(), need: min_order });
        }
    }
    if phi.is_zero() || psi.is_zero() {
        return Ok(ElementaryKernel::zero(r_l, r_r));
    }
    Ok(ElementaryKernel { quad: Some(TensorKernelQuad::new(phi, psi, r_l, r_r, n)?), r_l, r_r })
}

/// Which argument a derivative acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    X,
    Z,
}

/// One derivative letter: a horizontal field acting on one argument.
pub type Letter = (Slot, FieldId);

const LETTERS: [Letter; 8] = [
    (Slot::X, FieldId::XL),
    (Slot::X, FieldId::YL),
    (Slot::X, FieldId::XR),
    (Slot::X, FieldId::YR),
    (Slot::Z, FieldId::XL),
    (Slot::Z, FieldId::YL),
    (Slot::Z, FieldId::XR),
    (Slot::Z, FieldId::YR),
];

/// Elementary kernel of analytic profiles, evaluated exactly by Gauss-Hermite.
#[derive(Clone, Debug)]
pub struct AnalyticElementaryKernel {
    phi: Vec<PolyExp>,
    psi: Vec<PolyExp>,
    tab: GhTable,
    pub r_l: f64,
    pub r_r: f64,
}

impl AnalyticElementaryKernel {
    pub fn new(phi: &ProfileFunction, psi: &ProfileFunction, r_l: f64, r_r: f64) -> Result<Self, KernelError> {
        check_scale(r_l)?;
        check_scale(r_r)?;
        let phi = dilated_terms(phi, r_l)?;
        let psi = dilated_terms(psi, r_r)?;
        let deg = phi.iter().map(|p| p.poly.degree()).max().unwrap_or(0)
            + psi.iter().map(|p| p.poly.degree()).max().unwrap_or(0);
        Ok(AnalyticElementaryKernel { phi, psi, tab: GhTable::new(deg as usize / 2 + 1), r_l, r_r })
    }

    pub fn try_eval(&self, x: GroupPoint, z: GroupPoint) -> Result<f64, KernelError> {
        let mut s = 0.0;
        for a in &self.phi {
            for b in &self.psi {
                s += gauss::tensor_point(&self.tab, b, a, x, z)?;
            }
        }
        Ok(s)
    }
}

impl TwoPointKernel for AnalyticElementaryKernel {
    fn eval(&self, x: GroupPoint, z: GroupPoint) -> f64 {
        self.try_eval(x, z).unwrap_or(f64::NAN)
    }
}

/// Nested central differences along exact flows; the first letter is applied last.
pub fn fd_derivative<K: TwoPointKernel + ?Sized>(
    k: &K,
    word: &[Letter],
    x: GroupPoint,
    z: GroupPoint,
    h_l: f64,
    h_r: f64,
) -> f64 {
    match word.split_first() {
        None => k.eval(x, z),
        Some((&(slot, id), rest)) => {
            let h = if id.is_left() { h_l } else { h_r };
            let (xp, zp, xm, zm) = match slot {
                Slot::X => (flow(id, h, x), z, flow(id, -h, x), z),
                Slot::Z => (x, flow(id, h, z), x, flow(id, -h, z)),
            };
            (fd_derivative(k, rest, xp, zp, h_l, h_r) - fd_derivative(k, rest, xm, zm, h_l, h_r)) / (2.0 * h)
        }
    }
}

/// Sampling of [`verify_elementary_growth`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrowthConfig {
    pub samples: usize,
    pub seed: u64,
    pub threshold: f64,
    /// `z = x u` with `|u|` log-uniform in this range times `1 / r_min`.
    pub offset: (f64, f64),
    /// Words per derivative order; all `8^d` words when this is larger.
    pub words_per_order: usize,
    /// Finite-difference step in units of the scale of the field.
    pub step: f64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig { samples: 200, seed: 7, threshold: 100.0, offset: (0.125, 32.0), words_per_order: 8, step: 1e-2 }
    }
}

/// Sup of `|D K(x, z)| / B(r_L, r_R, N_L, N_R, m, x, z)` over sampled pairs and
/// derivative words `D` of length up to `d`, where `N_L` (`N_R`) counts the
/// left (right) letters of `D`.
pub fn verify_elementary_growth<K: TwoPointKernel + ?Sized>(
    k: &K,
    r_l: f64,
    r_r: f64,
    m: u32,
    d: u32,
    cfg: &GrowthConfig,
) -> Result<VerificationReport, KernelError> {
    check_scale(r_l)?;
    check_scale(r_r)?;
    if d > 2 {
        return Err(KernelError::DerivOrder(d));
    }
    let mut rep = VerificationReport::new("elementary-growth", cfg.seed);
    rep.param("r_l", r_l).param("r_r", r_r).param("m", m).param("deriv_order", d);
    rep.threshold = cfg.threshold;
    let mut rng = stats::rng(cfg.seed, 11);
    let r_min = r_l.min(r_r);
    let (h_l, h_r) = (cfg.step / r_l, cfg.step / r_r);
    let mut per_order = alloc::vec![0.0f64; d as usize + 1];
    for _ in 0..cfg.samples {
        let x = stats::uniform_point(&mut rng, 1.0, 1.0);
        let u = stats::log_uniform_point(&mut rng, cfg.offset.0 / r_min, cfg.offset.1 / r_min);
        let z = x * u;
        for ord in 0..=d as usize {
            for word in words(&mut rng, ord, cfg.words_per_order) {
                let n_l = word.iter().filter(|l| l.1.is_left()).count() as u32;
                let bp = BoundParams { r_l, r_r, n_l, n_r: ord as u32 - n_l, m };
                let val = fd_derivative(k, &word, x, z, h_l, h_r).abs();
                let ratio = val / bound_B(&bp, x, z);
                rep.observe(ratio);
                per_order[ord] = per_order[ord].max(ratio);
            }
        }
    }
    for (o, c) in per_order.iter().enumerate() {
        rep.fit(&format!("C_order_{o}"), *c);
    }
    let rmax = rep.ratio_max;
    rep.require("ratio_max", rmax, 0.0, cfg.threshold).finish();
    Ok(rep)
}

fn words<R: Rng>(rng: &mut R, ord: usize, cap: usize) -> Vec<Vec<Letter>> {
    let total = 8usize.pow(ord as u32);
    let index_word = |mut i: usize| {
        let mut w = Vec::with_capacity(ord);
        for _ in 0..ord {
            w.push(LETTERS[i % 8]);
            i /= 8;
        }
        w
    };
    if total <= cap {
        (0..total).map(index_word).collect()
    } else {
        (0..cap).map(|_| index_word(rng.gen_range(0..total))).collect()
    }
}

// ----------------------------------------------------------- dyadic laws

/// Maximum Gauss-Hermite order kept in the shared tables.
pub const GH_MAX: usize = 40;

fn analytic_terms(p: &ProfileFunction) -> Result<Vec<PolyExp>, KernelError> {
    p.as_analytic().map(|a| a.terms.clone()).ok_or_else(|| KernelError::NotAnalytic(p.label.clone()))
}

fn dilated_terms(p: &ProfileFunction, r: f64) -> Result<Vec<PolyExp>, KernelError> {
    Ok(analytic_terms(p)?.iter().map(|t| t.dilate(r)).collect())
}

/// `sum_ab (f_a * g_b)(x)`.
fn conv_sum(tab: &GhTable, f: &[PolyExp], g: &[PolyExp], x: GroupPoint) -> Result<f64, KernelError> {
    let mut s = 0.0;
    for a in f {
        for b in g {
            s += gauss::conv_point(tab, a, b, x)?;
        }
    }
    Ok(s)
}

/// Pattern search for `sup |f|`: an `n^3` scan of `bx`, then coordinate steps
/// halved until they fall below `1e-3` of the box.
fn sup_abs<F>(bx: &SupportBox, n: usize, mut f: F) -> Result<f64, KernelError>
where
    F: FnMut(GroupPoint) -> Result<f64, KernelError>,
{
    let (pts, _) = bx.midpoints(n);
    let mut best = (GroupPoint::IDENTITY, -1.0);
    for p in pts {
        let v = f(p)?.abs();
        if v > best.1 {
            best = (p, v);
        }
    }
    let mut h: [f64; 3] = core::array::from_fn(|a| (bx.hi[a] - bx.lo[a]) / n as f64);
    let stop: [f64; 3] = core::array::from_fn(|a| 1e-3 * (bx.hi[a] - bx.lo[a]));
    while (0..3).any(|a| h[a] > stop[a]) {
        let mut moved = false;
        for a in 0..3 {
            for s in [-1.0, 1.0] {
                let mut q = best.0.to_array();
                q[a] += s * h[a];
                let q = GroupPoint::from_array(q);
                let v = f(q)?.abs();
                if v > best.1 {
                    best = (q, v);
                    moved = true;
                }
            }
        }
        if !moved {
            h = core::array::from_fn(|a| 0.5 * h[a]);
        }
    }
    Ok(best.1)
}

/// Scan box for a convolution of two analytic profiles: the product of the
/// truncation boxes, cut to the region where the Gaussian envelopes exceed
/// `exp(-10)`.
fn conv_box(f: &ProfileFunction, g: &ProfileFunction) -> SupportBox {
    let half = |b: SupportBox| SupportBox {
        lo: [0.5 * b.lo[0], 0.5 * b.lo[1], 0.5 * b.lo[2]],
        hi: [0.5 * b.hi[0], 0.5 * b.hi[1], 0.5 * b.hi[2]],
    };
    half(f.support()).product(&half(g.support()))
}

/// Settings for [`convolution_decay`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayConfig {
    /// Sweep `|j - k| = 0..=max_gap`.
    pub max_gap: i32,
    /// Points per axis of the initial sup scan.
    pub scan: usize,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig { max_gap: 6, scan: 8 }
    }
}

/// `sup |phi1^{(2^j)} * phi2^{(2^k)}| 2^{-4 (j min k)}`, the sup norm read at
/// the coarser scale. Convolution values are exact Gauss-Hermite integrals.
pub fn convolution_sup(
    phi1: &ProfileFunction,
    phi2: &ProfileFunction,
    j: i32,
    k: i32,
    cfg: &DecayConfig,
) -> Result<f64, KernelError> {
    let tab = GhTable::new(GH_MAX);
    convolution_sup_with(&tab, phi1, phi2, j, k, cfg)
}

fn convolution_sup_with(
    tab: &GhTable,
    phi1: &ProfileFunction,
    phi2: &ProfileFunction,
    j: i32,
    k: i32,
    cfg: &DecayConfig,
) -> Result<f64, KernelError> {
    let (rj, rk) = (fmath::exp2(j as f64), fmath::exp2(k as f64));
    let f = dilated_terms(phi1, rj)?;
    let g = dilated_terms(phi2, rk)?;
    let bx = conv_box(&dilate_profile(phi1, rj)?, &dilate_profile(phi2, rk)?);
    let s = sup_abs(&bx, cfg.scan, |x| conv_sum(tab, &f, &g, x))?;
    Ok(s * fmath::exp2(-4.0 * j.min(k) as f64))
}

/// [`convolution_sup`] at `(j, k)` divided by its value at `(0, 0)`; equals 1
/// whenever `j = k`.
pub fn convolution_gain(
    phi1: &ProfileFunction,
    phi2: &ProfileFunction,
    j: i32,
    k: i32,
    cfg: &DecayConfig,
) -> Result<f64, KernelError> {
    let tab = GhTable::new(GH_MAX);
    let base = convolution_sup_with(&tab, phi1, phi2, 0, 0, cfg)?;
    Ok(convolution_sup_with(&tab, phi1, phi2, j, k, cfg)? / base)
}

/// The fitted decay law of [`convolution_decay`].
#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit {
    pub gaps: Vec<f64>,
    pub gains: Vec<f64>,
    /// Slope of `ln gain` against `|j - k|`, in natural-log units.
    pub slope: f64,
    pub intercept: f64,
    pub sweep: Sweep,
}

/// Gains at `(j, k) = (0, d)` and `(d, 0)` for `d = 0..=max_gap`, with the
/// least-squares slope of `ln gain` against `d`.
pub fn convolution_decay(
    phi1: &ProfileFunction,
    phi2: &ProfileFunction,
    cfg: &DecayConfig,
) -> Result<DecayFit, KernelError> {
    let tab = GhTable::new(GH_MAX);
    let base = convolution_sup_with(&tab, phi1, phi2, 0, 0, cfg)?;
    let mut sweep = Sweep::new("decay", &["j", "k"]);
    let (mut gaps, mut gains) = (Vec::new(), Vec::new());
    for d in 0..=cfg.max_gap {
        let idx: &[(i32, i32)] = if d == 0 { &[(0, 0)] } else { &[(0, d), (d, 0)] };
        for &(j, k) in idx {
            let s = if d == 0 { base } else { convolution_sup_with(&tab, phi1, phi2, j, k, cfg)? };
            sweep.push(alloc::vec![j as f64, k as f64], s, base);
            gaps.push(d as f64);
            gains.push(s / base);
        }
    }
    let logs: Vec<f64> = gains.iter().map(|g| fmath::ln(*g)).collect();
    let (intercept, slope) = stats::linear_fit(&gaps, &logs);
    Ok(DecayFit { gaps, gains, slope, intercept, sweep })
}

/// An elementary operator `Op_L(phi^{(2^j)}) Op_R(psi^{(2^k)})`.
#[derive(Clone, Debug)]
pub struct ElementaryPair {
    pub phi: ProfileFunction,
    pub psi: ProfileFunction,
    pub j: i32,
    pub k: i32,
}

/// Settings for [`compose_elementary`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComposeConfig {
    /// Samples per axis of the composed profiles.
    pub grid_n: usize,
    /// Midpoint cells per axis of the kernel integral.
    pub kernel_n: usize,
    /// Base points `x`; each is paired with a 3x3x3 stencil of offsets.
    pub base_points: usize,
    pub seed: u64,
}

impl Default for ComposeConfig {
    fn default() -> Self {
        ComposeConfig { grid_n: 24, kernel_n: 16, base_points: 4, seed: 3 }
    }
}

/// Kernel of a composition of two elementary operators.
#[derive(Clone, Debug)]
pub struct ComposedKernel {
    inner: ElementaryKernel,
    /// Scales `(2^{j1 min j2}, 2^{k1 min k2})`.
    pub r_l: f64,
    pub r_r: f64,
}

impl TwoPointKernel for ComposedKernel {
    fn eval(&self, x: GroupPoint, z: GroupPoint) -> f64 {
        self.inner.eval(x, z)
    }
}

/// Samples `sum_ab f_a * g_b` on a grid covering its essential support.
fn sample_convolution(
    tab: &GhTable,
    f: &ProfileFunction,
    rf: f64,
    g: &ProfileFunction,
    rg: f64,
    n: usize,
) -> Result<ProfileFunction, KernelError> {
    let ft = dilated_terms(f, rf)?;
    let gt = dilated_terms(g, rg)?;
    let bx = conv_box(&dilate_profile(f, rf)?, &dilate_profile(g, rg)?);
    let spec = GridSpec::of_box(&bx, n)?;
    let mut vals = Vec::with_capacity(spec.len());
    for idx in 0..spec.len() {
        vals.push(conv_sum(tab, &ft, &gt, spec.node_flat(idx))?);
    }
    let grid = GridFunction::new(spec, vals)?;
    Ok(ProfileFunction::new(Sampled { grid }, 0, "composed"))
}

/// `E1 E2 = Op_L(phi2^{(2^{j2})} * phi1^{(2^{j1})}) Op_R(psi1^{(2^{k1})} * psi2^{(2^{k2})})`.
///
/// The two composed profiles are convolved exactly on sample grids and the
/// kernel is then the tensor-kernel integral of the sampled profiles.
pub fn compose_elementary(
    e1: &ElementaryPair,
    e2: &ElementaryPair,
    cfg: &ComposeConfig,
) -> Result<ComposedKernel, KernelError> {
    let r_l = fmath::exp2(e1.j.min(e2.j) as f64);
    let r_r = fmath::exp2(e1.k.min(e2.k) as f64);
    if [&e1.phi, &e1.psi, &e2.phi, &e2.psi].iter().any(|p| p.is_zero()) {
        return Ok(ComposedKernel { inner: ElementaryKernel::zero(r_l, r_r), r_l, r_r });
    }
    let tab = GhTable::new(GH_MAX);
    let s = |j: i32| fmath::exp2(j as f64);
    let left = sample_convolution(&tab, &e2.phi, s(e2.j), &e1.phi, s(e1.j), cfg.grid_n)?;
    let right = sample_convolution(&tab, &e1.psi, s(e1.k), &e2.psi, s(e2.k), cfg.grid_n)?;
    let quad = TensorKernelQuad::new(&left, &right, 1.0, 1.0, cfg.kernel_n)?;
    Ok(ComposedKernel { inner: ElementaryKernel { quad: Some(quad), r_l, r_r }, r_l, r_r })
}

/// `int K1(x, y) K2(y, z) dy` by the midpoint rule on `ybox`.
pub fn compose_quadrature<K1, K2>(k1: &K1, k2: &K2, x: GroupPoint, z: GroupPoint, ybox: &SupportBox, n: usize) -> f64
where
    K1: TwoPointKernel + ?Sized,
    K2: TwoPointKernel + ?Sized,
{
    let (pts, dv) = ybox.midpoints(n);
    pts.into_iter().map(|y| k1.eval(x, y) * k2.eval(y, z)).sum::<f64>() * dv
}

/// Pairs `(x, x u)` with `x` uniform in `[-1, 1]^3` and `u` on a 3x3x3 stencil
/// at scale `(1/r_l, 1/r_r)`-coarse.
fn stencil_pairs(seed: u64, base_points: usize, radius: f64) -> Vec<(GroupPoint, GroupPoint)> {
    let mut rng = stats::rng(seed, 23);
    let mut out = Vec::new();
    for _ in 0..base_points {
        let x = stats::uniform_point(&mut rng, 1.0, 1.0);
        for a in [-1.0, 0.0, 1.0] {
            for b in [-1.0, 0.0, 1.0] {
                for c in [-1.0, 0.0, 1.0] {
                    let u = GroupPoint::new(0.6 * a * radius, 0.6 * b * radius, 0.5 * c * radius * radius);
                    out.push((x, x * u));
                }
            }
        }
    }
    out
}

/// `sup |K| / B(r_L, r_R, 0, 0, 0, x, z)` over [`stencil_pairs`].
pub fn kernel_growth_sup<K: TwoPointKernel + ?Sized>(k: &K, r_l: f64, r_r: f64, cfg: &ComposeConfig) -> f64 {
    let bp = BoundParams { r_l, r_r, n_l: 0, n_r: 0, m: 0 };
    let radius = 1.0 / r_l.min(r_r);
    stencil_pairs(cfg.seed, cfg.base_points, radius)
        .into_iter()
        .map(|(x, z)| k.eval(x, z).abs() / bound_B(&bp, x, z))
        .fold(0.0, f64::max)
}

/// Result of [`composition_gain_fit`].
#[derive(Clone, Debug, PartialEq)]
pub struct CompositionFit {
    /// Decay exponents (natural log units) in `|j1 - j2|` and `|k1 - k2|`.
    pub exponent_j: f64,
    pub exponent_k: f64,
    pub intercept: f64,
    /// Growth ratio at `dj = dk = 0`.
    pub base_ratio: f64,
    pub sweep: Sweep,
}

/// Composes `(phi, psi)` at `(0, 0)` with `(phi, psi)` at `(dj, dk)` for
/// `dj, dk in 0..=max_gap` and fits `ln(gain) = c0 - a dj - b dk`, where the
/// gain is [`kernel_growth_sup`] of the composed kernel at the coarser scales
/// relative to the `(0, 0)` value.
pub fn composition_gain_fit(
    phi: &ProfileFunction,
    psi: &ProfileFunction,
    max_gap: i32,
    cfg: &ComposeConfig,
) -> Result<CompositionFit, KernelError> {
    let e1 = ElementaryPair { phi: phi.clone(), psi: psi.clone(), j: 0, k: 0 };
    let mut sweep = Sweep::new("compose", &["dj", "dk"]);
    let (mut u, mut v, mut y) = (Vec::new(), Vec::new(), Vec::new());
    let mut base = f64::NAN;
    for dj in 0..=max_gap {
        for dk in 0..=max_gap {
            let e2 = ElementaryPair { phi: phi.clone(), psi: psi.clone(), j: dj, k: dk };
            let kc = compose_elementary(&e1, &e2, cfg)?;
            let g = kernel_growth_sup(&kc, kc.r_l, kc.r_r, cfg);
            if dj == 0 && dk == 0 {
                base = g;
            }
            sweep.push(alloc::vec![dj as f64, dk as f64], g, base);
            u.push(dj as f64);
            v.push(dk as f64);
            y.push(fmath::ln(g / base));
        }
    }
    let c = stats::plane_fit(&u, &v, &y);
    Ok(CompositionFit { exponent_j: -c[1], exponent_k: -c[2], intercept: c[0], base_ratio: base, sweep })
}

/// Both sides of the transference identity `E Op_T(K) f = Op_L(K~) E f` at
/// `(x, y)` for `K = k1 (x) k2`, where `(E f)(x, y) = f(y^{-1} x)` and
/// `K~(x, y) = K(x, y^{-1})`.
///
/// * `lhs = ((k2 * f) * k1)(y^{-1} x)`, outer rule weighted by `k1(u^{-1} y^{-1} x)`;
/// * `rhs = int k2(y^{-1} v) (f * k1)(v^{-1} x) dv`, outer rule weighted by `k2(y^{-1} v)`.
///
/// Inner convolutions are exact; the outer rules use `n` points per axis, so
/// the two values differ only by the outer quadrature errors.
pub fn transference_sides(
    tab: &GhTable,
    f: &PolyExp,
    k1: &PolyExp,
    k2: &PolyExp,
    x: GroupPoint,
    y: GroupPoint,
    n: usize,
) -> Result<(f64, f64), KernelError> {
    let w = y.inverse() * x;
    let gh = tab.get(n);
    let mut err = None;
    let mut keep = |r: Result<f64, GaussError>| match r {
        Ok(v) => v,
        Err(e) => {
            err = Some(e);
            0.0
        }
    };
    let m_left = [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [2.0 * w.y, -2.0 * w.x, -1.0]];
    let q1 = k1.quadratic().compose_affine(&m_left, w.to_array());
    let fr1 = GaussianFrame::new(&q1).ok_or(GaussError::NotDefinite)?;
    let lhs = fr1.integrate(gh, |u| k1.poly.eval(u.inverse() * w) * keep(gauss::conv_point(tab, k2, f, u)));
    let m_corr = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-2.0 * y.y, 2.0 * y.x, 1.0]];
    let q2 = k2.quadratic().compose_affine(&m_corr, [-y.x, -y.y, -y.t]);
    let fr2 = GaussianFrame::new(&q2).ok_or(GaussError::NotDefinite)?;
    let rhs = fr2.integrate(gh, |v| k2.poly.eval(y.inverse() * v) * keep(gauss::conv_point(tab, f, k1, v.inverse() * x)));
    if let Some(e) = err {
        return Err(e.into());
    }
    Ok((lhs, rhs))
}

// ---------------------------------------------------------- dyadic families

/// Profiles indexed by dyadic scales `(2^j, 2^k)`.
#[derive(Clone, Debug, Default)]
pub struct DyadicKernelFamily {
    entries: BTreeMap<(i32, i32), (ProfileFunction, ProfileFunction)>,
    min_order: u32,
}

impl DyadicKernelFamily {
    /// Empty family whose profiles must have moment order at least `min_order`.
    pub fn new(min_order: u32) -> Self {
        DyadicKernelFamily { entries: BTreeMap::new(), min_order }
    }

    pub fn insert(&mut self, j: i32, k: i32, phi: ProfileFunction, psi: ProfileFunction) -> Result<(), KernelError> {
        for p in [&phi, &psi] {
            if p.moment_order() < self.min_order {
                return Err(KernelError::MomentOrder {
                    label: p.label.clone(),
                    have: p.moment_order(),
                    need: self.min_order,
                });
            }
        }
        self.entries.insert((j, k), (phi, psi));
        Ok(())
    }

    /// Single-variable family: entries `(j, 0)` with a zero right profile.
    pub fn single(phis: &[(i32, ProfileFunction)], min_order: u32) -> Result<Self, KernelError> {
        let mut f = DyadicKernelFamily::new(min_order);
        for (j, p) in phis {
            f.insert(*j, 0, p.clone(), ProfileFunction::zero())?;
        }
        Ok(f)
    }

    /// The same tensor pair at every `(j, k)` of the two ranges.
    pub fn ladder(
        phi: &ProfileFunction,
        psi: &ProfileFunction,
        j_range: RangeInclusive<i32>,
        k_range: RangeInclusive<i32>,
        min_order: u32,
    ) -> Result<Self, KernelError> {
        let mut f = DyadicKernelFamily::new(min_order);
        for j in j_range {
            for k in k_range.clone() {
                f.insert(j, k, phi.clone(), psi.clone())?;
            }
        }
        Ok(f)
    }

    pub fn get(&self, j: i32, k: i32) -> Option<&(ProfileFunction, ProfileFunction)> {
        self.entries.get(&(j, k))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn min_order(&self) -> u32 {
        self.min_order
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(i32, i32), &(ProfileFunction, ProfileFunction))> {
        self.entries.iter()
    }
}

/// Dilated left profiles `phi_j^{(2^j)}` of the entries `(j, 0)`, `j` in range.
pub fn cz_dyadic_pieces(
    family: &DyadicKernelFamily,
    j_range: RangeInclusive<i32>,
) -> Result<Vec<ProfileFunction>, KernelError> {
    let mut out = Vec::new();
    for j in j_range {
        if let Some((phi, _)) = family.get(j, 0) {
            out.push(dilate_profile(phi, fmath::exp2(j as f64))?);
        }
    }
    Ok(out)
}

/// `K = sum_j phi_j^{(2^j)}` over the entries `(j, 0)` with `j` in range.
pub fn cz_dyadic_sum(family: &DyadicKernelFamily, j_range: RangeInclusive<i32>) -> Result<ProfileFunction, KernelError> {
    Ok(ProfileFunction::sum(&cz_dyadic_pieces(family, j_range)?))
}

/// `sup |K(x)| |x|^4` over `per_shell` points on each homogeneous sphere of
/// the given radii.
pub fn cz_size_constant<F: Fn(GroupPoint) -> f64>(k: F, radii: &[f64], per_shell: usize, seed: u64) -> f64 {
    let mut rng = stats::rng(seed, 31);
    let mut c: f64 = 0.0;
    for &r in radii {
        for _ in 0..per_shell {
            let x = stats::log_uniform_point(&mut rng, r, r);
            c = c.max(k(x).abs() * fmath::powi(group::hom_norm(x), 4));
        }
    }
    c
}

/// Analytic terms of a list of profiles.
pub fn analytic_pieces(parts: &[ProfileFunction]) -> Result<Vec<PolyExp>, KernelError> {
    let mut out = Vec::new();
    for p in parts {
        out.extend(analytic_terms(p)?);
    }
    Ok(out)
}

/// `int K(x) phi(r x) dx`, exact for analytic pieces and test function.
pub fn cz_cancellation(pieces: &[PolyExp], test: &PolyExp, r: f64) -> Result<f64, KernelError> {
    check_scale(r)?;
    let tab = GhTable::new(GH_MAX);
    let t = test.dilate(r).scale(1.0 / fmath::powi(r, 4));
    let mut s = 0.0;
    for p in pieces {
        s += gauss::pair_exact(&tab, p, &t)?;
    }
    Ok(s)
}

/// `K(x, y) = sum phi_{j,k}^{(2^j)}(x) psi_{j,k}^{(2^k)}(y)` on `G x G`.
#[derive(Clone, Debug, Default)]
pub struct ProductKernel {
    terms: Vec<(ProfileFunction, ProfileFunction)>,
}

impl ProductKernel {
    pub fn eval(&self, x: GroupPoint, y: GroupPoint) -> f64 {
        self.terms.iter().map(|(a, b)| a.eval(x) * b.eval(y)).sum()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(ProfileFunction, ProfileFunction)] {
        &self.terms
    }

    /// Analytic terms of `x -> int K(x, y) test(R y) dy`.
    pub fn slice_pieces(&self, test: &PolyExp, big_r: f64) -> Result<Vec<PolyExp>, KernelError> {
        check_scale(big_r)?;
        let tab = GhTable::new(GH_MAX);
        let t = test.dilate(big_r).scale(1.0 / fmath::powi(big_r, 4));
        let mut out = Vec::new();
        for (a, b) in &self.terms {
            let mut c = 0.0;
            for bt in analytic_terms(b)? {
                c += gauss::pair_exact(&tab, &bt, &t)?;
            }
            for at in analytic_terms(a)? {
                out.push(at.scale(c));
            }
        }
        Ok(out)
    }
}

impl TwoPointKernel for ProductKernel {
    fn eval(&self, x: GroupPoint, y: GroupPoint) -> f64 {
        ProductKernel::eval(self, x, y)
    }
}

/// Truncated product kernel over the family entries in `j_range x k_range`.
pub fn product_dyadic_sum(
    family: &DyadicKernelFamily,
    j_range: RangeInclusive<i32>,
    k_range: RangeInclusive<i32>,
) -> Result<ProductKernel, KernelError> {
    let mut terms = Vec::new();
    for (&(j, k), (phi, psi)) in family.iter() {
        if j_range.contains(&j) && k_range.contains(&k) {
            terms.push((dilate_profile(phi, fmath::exp2(j as f64))?, dilate_profile(psi, fmath::exp2(k as f64))?));
        }
    }
    Ok(ProductKernel { terms })
}

/// Pointwise sum of analytic pieces.
pub fn eval_pieces(pieces: &[PolyExp], x: GroupPoint) -> f64 {
    pieces.iter().map(|p| p.eval(x)).sum()
}

// -------------------------------------------------------------- membership

/// An operator `T` known through its pairings `<a, T b>` with analytic test
/// functions.
///
/// `a` and `b` are written in translated coordinates: the functions on the
/// group are `u -> a(frame^{-1} u)`, `u -> b(frame^{-1} u)`.
pub trait PairingOperator: fmt::Debug {
    fn name(&self) -> String;
    fn pair(&self, tab: &GhTable, frame: GroupPoint, a: &PolyExp, b: &PolyExp) -> Result<f64, KernelError>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityOperator;

impl PairingOperator for IdentityOperator {
    fn name(&self) -> String {
        String::from("identity")
    }
    fn pair(&self, tab: &GhTable, _frame: GroupPoint, a: &PolyExp, b: &PolyExp) -> Result<f64, KernelError> {
        Ok(gauss::pair_exact(tab, a, b)?)
    }
}

/// Multiplication by the coordinate `axis` (0, 1, 2 for `x`, `y`, `t`).
#[derive(Clone, Copy, Debug)]
pub struct CoordinateMultiplication {
    pub axis: usize,
}

impl PairingOperator for CoordinateMultiplication {
    fn name(&self) -> String {
        format!("coordinate-{}", ["x", "y", "t"][self.axis.min(2)])
    }
    fn pair(&self, tab: &GhTable, c: GroupPoint, a: &PolyExp, b: &PolyExp) -> Result<f64, KernelError> {
        // coordinate of u = c v as a function of v
        let coord = match self.axis {
            0 => Poly3::affine(c.x, 1.0, 0.0, 0.0),
            1 => Poly3::affine(c.y, 0.0, 1.0, 0.0),
            _ => Poly3::affine(c.t, 2.0 * c.y, -2.0 * c.x, 1.0),
        };
        let tb = PolyExp::new(b.poly.mul(&coord), b.expo.clone());
        Ok(gauss::pair_exact(tab, a, &tb)?)
    }
}

/// `Op_L(K) f = f * K` for `K` a finite sum of analytic pieces.
///
/// `<a, b * k> = int int a(x) b(y) k(y^{-1} x)`: the inner integral over the
/// wider of `a`, `b` is exact for each outer node; the outer rule uses the
/// Gaussian weight of the narrower one.
#[derive(Clone, Debug)]
pub struct LeftConvolution {
    pub pieces: Vec<PolyExp>,
    /// Extra Gauss-Hermite points on the outer rule beyond polynomial exactness.
    pub outer_margin: usize,
}

impl LeftConvolution {
    pub fn new(pieces: Vec<PolyExp>) -> Self {
        LeftConvolution { pieces, outer_margin: 8 }
    }

    pub fn from_profiles(parts: &[ProfileFunction]) -> Result<Self, KernelError> {
        Ok(LeftConvolution::new(analytic_pieces(parts)?))
    }
}

impl PairingOperator for LeftConvolution {
    fn name(&self) -> String {
        format!("left-convolution({} pieces)", self.pieces.len())
    }
    fn pair(&self, tab: &GhTable, _frame: GroupPoint, a: &PolyExp, b: &PolyExp) -> Result<f64, KernelError> {
        let (qa, qb) = (a.quadratic(), b.quadratic());
        let outer_is_a = qa.det() >= qb.det();
        let outer = if outer_is_a { a } else { b };
        let fr = GaussianFrame::new(&outer.quadratic()).ok_or(GaussError::NotDefinite)?;
        let n = (outer.poly.degree() as usize / 2 + 1 + self.outer_margin).min(tab.max_n());
        let mut total = 0.0;
        for k in &self.pieces {
            let mut err = None;
            let v = fr.integrate(tab.get(n), |u| {
                let inner = if outer_is_a { gauss::conv_point(tab, b, k, u) } else { gauss::corr_point(tab, a, k, u) };
                match inner {
                    Ok(w) => outer.poly.eval(u) * w,
                    Err(e) => {
                        err = Some(e);
                        0.0
                    }
                }
            });
            if let Some(e) = err {
                return Err(e.into());
            }
            total += v;
        }
        Ok(total)
    }
}

/// Signature of [`GridOperator`]'s map: grid values in translated coordinates
/// and the translation.
pub type GridMap = dyn Fn(&GridFunction, GroupPoint) -> GridFunction + Send + Sync;

/// An operator given as a map on grid functions; pairings use the midpoint rule.
#[derive(Clone)]
pub struct GridOperator {
    pub label: String,
    /// Cells per axis.
    pub n: usize,
    pub map: Arc<GridMap>,
}

impl fmt::Debug for GridOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridOperator").field("label", &self.label).field("n", &self.n).finish()
    }
}

impl PairingOperator for GridOperator {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn pair(&self, _tab: &GhTable, frame: GroupPoint, a: &PolyExp, b: &PolyExp) -> Result<f64, KernelError> {
        let fa = GaussianFrame::new(&a.quadratic()).ok_or(GaussError::NotDefinite)?;
        let fb = GaussianFrame::new(&b.quadratic()).ok_or(GaussError::NotDefinite)?;
        let (wa, wb) = (fa.axis_widths(), fb.axis_widths());
        let lo: [f64; 3] = core::array::from_fn(|i| (fa.mu[i] - 8.0 * wa[i]).min(fb.mu[i] - 8.0 * wb[i]));
        let hi: [f64; 3] = core::array::from_fn(|i| (fa.mu[i] + 8.0 * wa[i]).max(fb.mu[i] + 8.0 * wb[i]));
        let spec = GridSpec::new(lo, hi, [self.n; 3])?;
        let h = spec.spacing();
        for i in 0..3 {
            if h[i] > wa[i].min(wb[i]) {
                return Err(KernelError::Unresolved(format!(
                    "grid spacing {} above bump width {} on axis {i}",
                    h[i],
                    wa[i].min(wb[i])
                )));
            }
        }
        let ga = calculus::sample(|u| a.eval(u), &spec)?;
        let gb = calculus::sample(|u| b.eval(u), &spec)?;
        let tb = (self.map)(&gb, frame);
        Ok(calculus::integrate(&ga.zip(&tb, |p, q| p * q)?))
    }
}

/// Settings for [`membership_test_A`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MembershipConfig {
    pub samples: usize,
    pub seed: u64,
    pub threshold: f64,
    /// Scales `r_L`, `r_R` are drawn from this list.
    pub scales: Vec<f64>,
    /// Homogeneous norm range of the first center.
    pub center_norm: (f64, f64),
    /// Norm range of `x^{-1} y`.
    pub offset: (f64, f64),
    /// Pairs whose four scales spread more than this are skipped.
    pub max_scale_ratio: f64,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        MembershipConfig {
            samples: 64,
            seed: 5,
            threshold: 1e7,
            scales: alloc::vec![0.5, 1.0, 2.0],
            center_norm: (0.25, 65536.0),
            offset: (0.125, 4.0),
            max_scale_ratio: 16.0,
        }
    }
}

/// Random word with `n_l` letters from `{XL, YL}` followed by `n_r` from `{XR, YR}`.
fn split_word<R: Rng>(rng: &mut R, n_l: u32, n_r: u32) -> Vec<FieldId> {
    let mut w = Vec::with_capacity((n_l + n_r) as usize);
    for _ in 0..n_l {
        w.push(FieldId::LEFT[rng.gen_range(0..2)]);
    }
    for _ in 0..n_r {
        w.push(FieldId::RIGHT[rng.gen_range(0..2)]);
    }
    w
}

/// Ratios `|<phi^x, D1 T D2 phi^y>| / B(r_L1 min r_L2, r_R1 min r_R2, N, N, m, x, y)`
/// with `N = Q + m + 1`, `D1 = nabla_L^{a1} nabla_R^{b1}`, `D2 = nabla_L^{a2} nabla_R^{b2}`,
/// `|a1| + |a2| = |b1| + |b2| = N`, over random centers, scales and splits.
///
/// The bumps are Gaussian packets ([`calculus::gaussian_packet_at`]) written
/// around `x`; derivatives are exact and `D1` moves onto `phi^x` as its
/// adjoint `(-1)^{|D1|}` times the reversed word.
#[allow(non_snake_case)]
pub fn membership_test_A<T: PairingOperator + ?Sized>(
    t: &T,
    m: u32,
    cfg: &MembershipConfig,
) -> Result<VerificationReport, KernelError> {
    if cfg.scales.is_empty() {
        return Err(KernelError::Empty("scale list"));
    }
    for &r in &cfg.scales {
        check_scale(r)?;
    }
    let n = Q as u32 + m + 1;
    let tab = GhTable::new(GH_MAX);
    let mut rep = VerificationReport::new("membership", cfg.seed);
    rep.param("operator", t.name().as_str()).param("m", m).param("N", n).param("scales", cfg.scales.clone());
    rep.threshold = cfg.threshold;
    let mut rng = stats::rng(cfg.seed, 41);
    let (mut log_norm, mut log_ratio) = (Vec::new(), Vec::new());
    for s in 0..cfg.samples {
        let x = stats::log_uniform_point(&mut rng, cfg.center_norm.0, cfg.center_norm.1);
        let y = x * stats::log_uniform_point(&mut rng, cfg.offset.0, cfg.offset.1);
        let mut pick = || cfg.scales[rng.gen_range(0..cfg.scales.len())];
        let (rl1, rr1, rl2, rr2) = (pick(), pick(), pick(), pick());
        let (a_l, a_r) = (rng.gen_range(0..=n), rng.gen_range(0..=n));
        let w1 = split_word(&mut rng, a_l, a_r);
        let w2 = split_word(&mut rng, n - a_l, n - a_r);
        let rs = [rl1, rr1, rl2, rr2];
        let spread = rs.iter().copied().fold(0.0, f64::max) / rs.iter().copied().fold(f64::INFINITY, f64::min);
        if spread > cfg.max_scale_ratio {
            rep.warn(format!("sample {s}: scale spread {spread} skipped"));
            continue;
        }
        let pa = calculus::gaussian_packet_at(x, x, rl1, rr1)?;
        let pb = calculus::gaussian_packet_at(x, y, rl2, rr2)?;
        let adj: Vec<FieldId> = w1.iter().rev().copied().collect();
        let sign = if w1.len() % 2 == 0 { 1.0 } else { -1.0 };
        let a = calculus::apply_word_at(&pa, &adj, x).scale(sign);
        let b = calculus::apply_word_at(&pb, &w2, x);
        let val = match t.pair(&tab, x, &a, &b) {
            Ok(v) => v,
            Err(e) => {
                rep.warn(format!("sample {s}: {e}"));
                continue;
            }
        };
        let bp = BoundParams { r_l: rl1.min(rl2), r_r: rr1.min(rr2), n_l: n, n_r: n, m };
        let ratio = val.abs() / bound_B(&bp, x, y);
        rep.observe(ratio);
        log_norm.push(fmath::ln(1.0 + group::hom_norm(x)));
        log_ratio.push(fmath::ln(ratio.max(1e-300)));
    }
    if log_norm.len() >= 2 {
        rep.fit("center_growth_slope", stats::linear_fit(&log_norm, &log_ratio).1);
    }
    let rmax = rep.ratio_max;
    rep.require("ratio_max", rmax, 0.0, cfg.threshold);
    rep.require("evaluated", rep.samples as f64, 1.0, f64::INFINITY);
    rep.finish();
    Ok(rep)
}
