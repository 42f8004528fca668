//! Summation bounds, the pseudolocality series and its closed form on `H^1`,
//! maximal functions and the square function.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::RangeInclusive;

use crate::calculus::{self, dilate_profile, CalcError, GridFunction, GridSpec, ProfileFunction, SmoothBump};
use crate::fmath;
use crate::group::{FieldId, GroupPoint, Q};
use crate::kernels::{
    bound_B, fd_derivative, AnalyticElementaryKernel, BoundParams, DyadicKernelFamily, KernelError, Letter, Slot,
    TwoPointKernel,
};
use crate::metric::{self, MetricParams, Side};
use crate::poly::{Poly3, PolyExp};
use crate::report::VerificationReport;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("points coincide")]
    Coincident,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Calc(#[from] CalcError),
}

// ------------------------------------------------------------------ QTable

/// One layer of the expansion of an invariant field in the opposite frame.
#[derive(Clone, Debug, PartialEq)]
pub struct QEntry {
    /// Layer `s`; the coefficient is homogeneous of degree `s - 1`.
    pub layer: u32,
    pub coeff: Poly3,
    pub target: FieldId,
}

/// Expansions `X = sum_s q_s(x) X'_s` of each unit horizontal field in terms
/// of the fields of the other side.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    /// Right fields in terms of left ones.
    pub right: Vec<(FieldId, Vec<QEntry>)>,
    /// Left fields in terms of right ones.
    pub left: Vec<(FieldId, Vec<QEntry>)>,
}

impl QTable {
    /// `X_R = X_L - 4y T`, `Y_R = Y_L + 4x T` and the mirrored pair.
    pub fn heisenberg() -> Self {
        let e = |layer, coeff, target| QEntry { layer, coeff, target };
        let one = Poly3::constant(1.0);
        QTable {
            right: alloc::vec![
                (FieldId::XR, alloc::vec![e(1, one.clone(), FieldId::XL), e(2, Poly3::y().scale(-4.0), FieldId::T)]),
                (FieldId::YR, alloc::vec![e(1, one.clone(), FieldId::YL), e(2, Poly3::x().scale(4.0), FieldId::T)]),
            ],
            left: alloc::vec![
                (FieldId::XL, alloc::vec![e(1, one.clone(), FieldId::XR), e(2, Poly3::y().scale(4.0), FieldId::T)]),
                (FieldId::YL, alloc::vec![e(1, one, FieldId::YR), e(2, Poly3::x().scale(-4.0), FieldId::T)]),
            ],
        }
    }

    fn side(&self, side: Side) -> &[(FieldId, Vec<QEntry>)] {
        match side {
            Side::Left => &self.right,
            Side::Right => &self.left,
        }
    }

    /// `sum_alpha sum_s |q_{s,alpha}(x)| rho^{1-s}`, summed over the fields being
    /// expanded: the right ones for `Side::Left`, the left ones otherwise.
    pub fn weight(&self, side: Side, x: GroupPoint, rho: f64) -> f64 {
        let mut w = 0.0;
        for (_, entries) in self.side(side) {
            for e in entries {
                w += e.coeff.eval(x).abs() * fmath::powi(rho, 1 - e.layer as i32);
            }
        }
        w
    }

    /// `X f` through the table, for comparison with a direct application.
    pub fn expand(&self, id: FieldId, f: &PolyExp) -> Option<PolyExp> {
        let entries = self.right.iter().chain(self.left.iter()).find(|(k, _)| *k == id).map(|(_, e)| e)?;
        let mut poly = Poly3::zero();
        for e in entries {
            poly = poly.add(&f.apply_field(e.target).poly.mul(&e.coeff));
        }
        Some(PolyExp::new(poly, f.expo.clone()))
    }

    /// Largest `|q(r x) - r^{s-1} q(x)|` over entries, at one point.
    pub fn homogeneity_residual(&self, x: GroupPoint, r: f64) -> f64 {
        let rx = GroupPoint::new(r * x.x, r * x.y, r * r * x.t);
        let mut worst: f64 = 0.0;
        for (_, entries) in self.right.iter().chain(self.left.iter()) {
            for e in entries {
                let d = e.coeff.eval(rx) - fmath::powi(r, e.layer as i32 - 1) * e.coeff.eval(x);
                worst = worst.max(d.abs());
            }
        }
        worst
    }
}

// ------------------------------------------------------------------- SumB

/// Parameters of [`sum_B_check`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SumBConfig {
    pub j0: i32,
    pub k0: i32,
    pub n_l: u32,
    pub n_r: u32,
    pub m: u32,
    pub depth: u32,
    pub threshold: f64,
}

impl Default for SumBConfig {
    fn default() -> Self {
        SumBConfig { j0: 0, k0: 0, n_l: 5, n_r: 5, m: 0, depth: 12, threshold: 30.0 }
    }
}

/// `sum_{j0 - J <= j <= j0, k0 - J <= k <= k0} B(2^j, 2^k, ...) / B(2^{j0}, 2^{k0}, ...)`
/// without any requirement on `N_L`, `N_R`.
#[allow(non_snake_case)]
pub fn sum_B_ratio(cfg: &SumBConfig, x: GroupPoint, y: GroupPoint) -> f64 {
    let top = BoundParams { r_l: fmath::exp2(cfg.j0 as f64), r_r: fmath::exp2(cfg.k0 as f64), n_l: cfg.n_l, n_r: cfg.n_r, m: cfg.m };
    let b0 = bound_B(&top, x, y);
    let d = cfg.depth as i32;
    let mut s = 0.0;
    // smallest terms first
    for j in (cfg.j0 - d)..=cfg.j0 {
        for k in (cfg.k0 - d)..=cfg.k0 {
            s += bound_B(&top.with_scales(fmath::exp2(j as f64), fmath::exp2(k as f64)), x, y);
        }
    }
    s / b0
}

/// [`sum_B_ratio`] as a report: requires `N_L, N_R >= Q + m + 1` and `depth >= 8`,
/// passes when the ratio lies in `[1, threshold]`.
#[allow(non_snake_case)]
pub fn sum_B_check(cfg: &SumBConfig, x: GroupPoint, y: GroupPoint) -> Result<VerificationReport, AnalysisError> {
    let need = Q as u32 + cfg.m + 1;
    if cfg.n_l < need || cfg.n_r < need {
        return Err(AnalysisError::Precondition(format!(
            "N_L = {}, N_R = {} below Q + m + 1 = {need}",
            cfg.n_l, cfg.n_r
        )));
    }
    if cfg.depth < 8 {
        return Err(AnalysisError::Precondition(format!("depth {} below 8", cfg.depth)));
    }
    let mut rep = VerificationReport::new("sumb", 0);
    rep.param("j0", cfg.j0 as i64)
        .param("k0", cfg.k0 as i64)
        .param("N_L", cfg.n_l)
        .param("N_R", cfg.n_r)
        .param("m", cfg.m)
        .param("depth", cfg.depth);
    rep.threshold = cfg.threshold;
    let r = sum_B_ratio(cfg, x, y);
    rep.observe(r);
    rep.require("ratio", r, 1.0 - 1e-12, cfg.threshold).finish();
    Ok(rep)
}

// ---------------------------------------------------------------- series

/// A truncated positive series.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeriesSum {
    pub value: f64,
    /// Geometric estimate of the omitted tail.
    pub tail: f64,
    /// Number of terms summed.
    pub terms: usize,
}

impl SeriesSum {
    pub fn relative_tail(&self) -> f64 {
        self.tail / self.value
    }
}

/// Acceptable tail relative to the partial sum.
pub const TAIL_FRACTION: f64 = 0.01;

/// Default number of terms before the tail test.
pub const L_MAX_DEFAULT: usize = 24;

/// Sums `term(0), term(1), ...`: at least `l_max + 1` terms, then until the
/// geometric tail estimate is below [`TAIL_FRACTION`] of the sum, with a hard
/// stop at `8 (l_max + 1)` terms.
fn sum_series<F: FnMut(usize) -> f64>(l_max: usize, mut term: F) -> SeriesSum {
    let hard = 8 * (l_max + 1);
    let mut s = 0.0;
    let mut prev = f64::NAN;
    let mut tail = f64::INFINITY;
    let mut l = 0;
    while l < hard {
        let t = term(l);
        s += t;
        if l > 0 {
            let q = t / prev;
            tail = if q < 1.0 { t * q / (1.0 - q) } else { f64::INFINITY };
        }
        prev = t;
        l += 1;
        if l > l_max && tail <= TAIL_FRACTION * s {
            break;
        }
    }
    SeriesSum { value: s, tail, terms: l }
}

/// `sum_l rho_l^{-a} min(1 / V_l, w(x, rho_l) / (2^l V_l))` with
/// `rho_l = rho_{2^{-l}}(x, z)`, `V_l = V_{2^{-l}}(x, rho_l)` and
/// `w = sum |q_{s,alpha}(x)| rho^{1-s}` from `q`, on the given side.
pub fn pseudoloc_bound_side(
    side: Side,
    x: GroupPoint,
    z: GroupPoint,
    a: u32,
    l_max: usize,
    q: &QTable,
) -> Result<SeriesSum, AnalysisError> {
    if x == z {
        return Err(AnalysisError::Coincident);
    }
    Ok(sum_series(l_max, |l| {
        let eps = fmath::exp2(-(l as f64));
        let mp = MetricParams { side, eps };
        let rho = metric::dist_surrogate(mp, x, z);
        let v = metric::volume_unchecked(eps, x, rho);
        let w = q.weight(side, x, rho);
        fmath::powi(rho, -(a as i32)) * (1.0 / v).min(w / (fmath::exp2(l as f64) * v))
    }))
}

/// [`pseudoloc_bound_side`] on the left.
pub fn pseudoloc_bound(x: GroupPoint, z: GroupPoint, a: u32, l_max: usize, q: &QTable) -> Result<SeriesSum, AnalysisError> {
    pseudoloc_bound_side(Side::Left, x, z, a, l_max, q)
}

/// One term of [`heis_pointwise_sum`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeisTerm {
    pub l: usize,
    pub delta: f64,
    pub volume: f64,
    pub value: f64,
    /// `2^l delta_inf >= |z|`.
    pub infinity_regime: bool,
    /// The second argument of the minimum was the smaller one.
    pub right_branch: bool,
}

fn heis_term(zeta: GroupPoint, eta: GroupPoint, alpha: u32, l: usize, d_inf: f64) -> HeisTerm {
    let eps = fmath::exp2(-(l as f64));
    let delta = metric::dist_surrogate(MetricParams::left(eps), zeta, eta);
    let volume = metric::volume_unchecked(eps, zeta, delta);
    let zabs = zeta.z_abs();
    let left = 1.0 / volume;
    let right = (1.0 + zabs / delta) / (fmath::exp2(l as f64) * volume);
    HeisTerm {
        l,
        delta,
        volume,
        value: fmath::powi(delta, -(alpha as i32)) * left.min(right),
        infinity_regime: fmath::exp2(l as f64) * d_inf >= zabs,
        right_branch: right < left,
    }
}

/// Terms `0..=l_max` of [`heis_pointwise_sum`] with their regime flags.
pub fn heis_terms(zeta: GroupPoint, eta: GroupPoint, alpha: u32, l_max: usize) -> Result<Vec<HeisTerm>, AnalysisError> {
    if zeta == eta {
        return Err(AnalysisError::Coincident);
    }
    let d_inf = metric::dist_surrogate(MetricParams::left(0.0), zeta, eta);
    Ok((0..=l_max).map(|l| heis_term(zeta, eta, alpha, l, d_inf)).collect())
}

/// `sum_l delta_l^{-alpha} min(1 / V_l, (1 + |z| / delta_l) / (2^l V_l))` with
/// `delta_l = rho_{2^{-l}}(zeta, eta)` and `V_l = V_{2^{-l}}(zeta, delta_l)`.
pub fn heis_pointwise_sum(zeta: GroupPoint, eta: GroupPoint, alpha: u32, l_max: usize) -> Result<SeriesSum, AnalysisError> {
    if zeta == eta {
        return Err(AnalysisError::Coincident);
    }
    let d_inf = metric::dist_surrogate(MetricParams::left(0.0), zeta, eta);
    Ok(sum_series(l_max, |l| heis_term(zeta, eta, alpha, l, d_inf).value))
}

/// `1 / (delta_inf^2 delta_0^{2 + alpha})`.
pub fn heis_closed_form(zeta: GroupPoint, eta: GroupPoint, alpha: u32) -> Result<f64, AnalysisError> {
    if zeta == eta {
        return Err(AnalysisError::Coincident);
    }
    let d_inf = metric::dist_surrogate(MetricParams::left(0.0), zeta, eta);
    let d0 = metric::dist_surrogate(MetricParams::left(1.0), zeta, eta);
    Ok(1.0 / (d_inf * d_inf * fmath::powi(d0, 2 + alpha as i32)))
}

// --------------------------------------------------------------- maximal

/// Which averages [`maximal`] takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum MaxSide {
    Left,
    Right,
    TwoSided,
}

fn chi() -> ProfileFunction {
    ProfileFunction::new(SmoothBump::normalized(), 0, "chi")
}

/// Normalized smooth average of `g` at radius `r` on one side: the grid
/// convolution with `chi^{(1/r)}` divided by the same convolution of `1`, so
/// constants are reproduced exactly.
pub fn average(g: &GridFunction, side: Side, r: f64) -> Result<GridFunction, AnalysisError> {
    let ones = GridFunction::new(g.spec, alloc::vec![1.0; g.spec.len()])?;
    let den = smooth(&ones, side, r)?;
    divide(&smooth(g, side, r)?, &den)
}

fn smooth(g: &GridFunction, side: Side, r: f64) -> Result<GridFunction, AnalysisError> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(CalcError::BadScale(r).into());
    }
    let k = dilate_profile(&chi(), 1.0 / r)?;
    Ok(match side {
        Side::Left => calculus::op_left(&k, g),
        Side::Right => calculus::op_right(&k, g),
    })
}

fn divide(num: &GridFunction, den: &GridFunction) -> Result<GridFunction, AnalysisError> {
    Ok(num.zip(den, |a, b| if b > 0.0 { a / b } else { 0.0 })?)
}

fn pointwise_max(acc: Option<GridFunction>, g: GridFunction) -> Result<GridFunction, AnalysisError> {
    Ok(match acc {
        None => g,
        Some(a) => a.zip(&g, f64::max)?,
    })
}

/// One-sided averages on a fixed grid and radius set, with the normalizing
/// convolutions of `1` computed once.
#[derive(Clone, Debug)]
pub struct Averager {
    spec: GridSpec,
    radii: Vec<f64>,
    den_l: Vec<GridFunction>,
    den_r: Vec<GridFunction>,
}

impl Averager {
    pub fn new(spec: GridSpec, radii: &[f64]) -> Result<Self, AnalysisError> {
        if radii.is_empty() {
            return Err(AnalysisError::Precondition(String::from("empty radius set")));
        }
        let ones = GridFunction::new(spec, alloc::vec![1.0; spec.len()])?;
        let dens = |side| radii.iter().map(|&r| smooth(&ones, side, r)).collect::<Result<Vec<_>, _>>();
        Ok(Averager { spec, radii: radii.to_vec(), den_l: dens(Side::Left)?, den_r: dens(Side::Right)? })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// [`average`] at `radii()[i]`.
    pub fn average(&self, g: &GridFunction, side: Side, i: usize) -> Result<GridFunction, AnalysisError> {
        if g.spec != self.spec {
            return Err(CalcError::SpecMismatch.into());
        }
        let den = match side {
            Side::Left => &self.den_l[i],
            Side::Right => &self.den_r[i],
        };
        divide(&smooth(g, side, self.radii[i])?, den)
    }

    /// Pointwise sup over the radii of the averages of `g` (not `|g|`).
    pub fn sup(&self, g: &GridFunction, side: Side) -> Result<GridFunction, AnalysisError> {
        let mut acc = None;
        for i in 0..self.radii.len() {
            acc = Some(pointwise_max(acc, self.average(g, side, i)?)?);
        }
        Ok(acc.expect("radii is nonempty"))
    }

    /// [`maximal`] over this radius set.
    pub fn maximal(&self, f: &GridFunction, side: MaxSide) -> Result<GridFunction, AnalysisError> {
        let af = f.abs();
        match side {
            MaxSide::Left => self.sup(&af, Side::Left),
            MaxSide::Right => self.sup(&af, Side::Right),
            MaxSide::TwoSided => {
                let mut acc = None;
                for i in 0..self.radii.len() {
                    let inner = self.average(&af, Side::Right, i)?;
                    acc = Some(pointwise_max(acc, self.sup(&inner, Side::Left)?)?);
                }
                Ok(acc.expect("radii is nonempty"))
            }
        }
    }

    /// `M f` and `M_L(M_R f)` sharing the inner right averages.
    pub fn maximal_pair(&self, f: &GridFunction) -> Result<(GridFunction, GridFunction), AnalysisError> {
        let af = f.abs();
        let (mut two, mut mr) = (None, None);
        for i in 0..self.radii.len() {
            let inner = self.average(&af, Side::Right, i)?;
            two = Some(pointwise_max(two, self.sup(&inner, Side::Left)?)?);
            mr = Some(pointwise_max(mr, inner)?);
        }
        let mr = mr.expect("radii is nonempty");
        Ok((two.expect("radii is nonempty"), self.sup(&mr, Side::Left)?))
    }
}

/// `M_L f`, `M_R f` or `M f`: pointwise sup over `radii` (over pairs of radii
/// for the two-sided version) of the averages of `|f|`.
pub fn maximal(f: &GridFunction, side: MaxSide, radii: &[f64]) -> Result<GridFunction, AnalysisError> {
    Averager::new(f.spec, radii)?.maximal(f, side)
}

// ------------------------------------------------------- square function

/// A piece of [`square_pieces`] with its index `(j, k)`.
pub type SquarePiece = ((i32, i32), GridFunction);

/// Pieces `Op_L(phi^{(2^j)}) Op_R(psi^{(2^k)}) f` over the family entries in
/// `j_range x k_range`.
pub fn square_pieces(
    f: &GridFunction,
    family: &DyadicKernelFamily,
    j_range: RangeInclusive<i32>,
    k_range: RangeInclusive<i32>,
) -> Result<Vec<SquarePiece>, AnalysisError> {
    let mut out = Vec::new();
    for (&(j, k), (phi, psi)) in family.iter() {
        if !(j_range.contains(&j) && k_range.contains(&k)) {
            continue;
        }
        for p in [phi, psi] {
            if p.moment_order() < 2 {
                return Err(AnalysisError::Precondition(format!(
                    "profile `{}` has moment order {} below 2",
                    p.label,
                    p.moment_order()
                )));
            }
        }
        let a = dilate_profile(phi, fmath::exp2(j as f64))?;
        let b = dilate_profile(psi, fmath::exp2(k as f64))?;
        out.push(((j, k), calculus::op_left(&a, &calculus::op_right(&b, f))));
    }
    Ok(out)
}

/// `(sum |Lambda_{j,k} f|^2)^{1/2}` over [`square_pieces`].
pub fn square_function(
    f: &GridFunction,
    family: &DyadicKernelFamily,
    j_range: RangeInclusive<i32>,
    k_range: RangeInclusive<i32>,
) -> Result<GridFunction, AnalysisError> {
    let mut acc = GridFunction::zeros(f.spec);
    for (_, p) in square_pieces(f, family, j_range, k_range)? {
        acc = acc.zip(&p, |a, b| a + b * b)?;
    }
    Ok(acc.map(fmath::sqrt))
}

// ------------------------------------------------------ off-diagonal check

/// Half of the family: `LeftHalf` keeps `k >= j`, `RightHalf` keeps `j >= k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum OffDiagSplit {
    LeftHalf,
    RightHalf,
}

impl OffDiagSplit {
    fn keeps(self, j: i32, k: i32) -> bool {
        match self {
            OffDiagSplit::LeftHalf => k >= j,
            OffDiagSplit::RightHalf => j >= k,
        }
    }

    fn side(self) -> Side {
        match self {
            OffDiagSplit::LeftHalf => Side::Left,
            OffDiagSplit::RightHalf => Side::Right,
        }
    }
}

/// The summed kernel of one half of a family of analytic profiles.
#[derive(Clone, Debug)]
pub struct HalfKernel {
    parts: Vec<AnalyticElementaryKernel>,
    /// Largest scale present.
    pub r_max: f64,
}

impl HalfKernel {
    pub fn new(family: &DyadicKernelFamily, split: OffDiagSplit) -> Result<Self, AnalysisError> {
        let mut parts = Vec::new();
        let mut r_max: f64 = 0.0;
        for (&(j, k), (phi, psi)) in family.iter() {
            if split.keeps(j, k) {
                let (rl, rr) = (fmath::exp2(j as f64), fmath::exp2(k as f64));
                parts.push(AnalyticElementaryKernel::new(phi, psi, rl, rr)?);
                r_max = r_max.max(rl).max(rr);
            }
        }
        Ok(HalfKernel { parts, r_max })
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

impl TwoPointKernel for HalfKernel {
    fn eval(&self, x: GroupPoint, z: GroupPoint) -> f64 {
        self.parts.iter().map(|k| k.eval(x, z)).sum()
    }
}

/// All words of length `a` in the horizontal fields of `side`, on either slot.
fn side_words(side: Side, a: u32) -> Vec<Vec<Letter>> {
    let ids = match side {
        Side::Left => FieldId::LEFT,
        Side::Right => FieldId::RIGHT,
    };
    let letters: Vec<Letter> = [Slot::X, Slot::Z].iter().flat_map(|&s| ids.iter().map(move |&i| (s, i))).collect();
    let mut words = alloc::vec![Vec::new()];
    for _ in 0..a {
        words = words
            .into_iter()
            .flat_map(|w: Vec<Letter>| {
                letters.iter().map(move |&l| {
                    let mut v = w.clone();
                    v.push(l);
                    v
                })
            })
            .collect();
    }
    words
}

/// `max_D |D K(x, z)| / pseudoloc_bound(x, z, a)` over the `(x, z)` pairs and
/// all words `D` of length `a <= 2` in the fields of the split's side, where
/// `K` is the summed kernel of that half of the family.
pub fn offdiag_kernel_check(
    family: &DyadicKernelFamily,
    split: OffDiagSplit,
    pairs: &[(GroupPoint, GroupPoint)],
    a: u32,
    threshold: f64,
) -> Result<VerificationReport, AnalysisError> {
    if a > 2 {
        return Err(KernelError::DerivOrder(a).into());
    }
    let k = HalfKernel::new(family, split)?;
    let q = QTable::heisenberg();
    let side = split.side();
    let words = side_words(side, a);
    let mut rep = VerificationReport::new("pseudoloc", 0);
    rep.param("terms", k.len()).param("a", a).param("split", format!("{split:?}").as_str());
    rep.threshold = threshold;
    for &(x, z) in pairs {
        let bound = pseudoloc_bound_side(side, x, z, a, L_MAX_DEFAULT, &q)?;
        let rho = metric::dist_surrogate(MetricParams { side, eps: 1.0 }, x, z);
        let h = 1e-3 * rho.min(1.0 / k.r_max);
        let mut worst: f64 = 0.0;
        for w in &words {
            worst = worst.max(fd_derivative(&k, w, x, z, h, h).abs());
        }
        rep.observe(worst / bound.value);
    }
    let rmax = rep.ratio_max;
    rep.require("ratio_max", rmax, 0.0, threshold).finish();
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qtable_matches_fields() {
        let q = QTable::heisenberg();
        let f = PolyExp::gaussian(0.9, 1.0);
        let p = GroupPoint::new(0.3, -0.4, 0.2);
        for id in [FieldId::XR, FieldId::YR, FieldId::XL, FieldId::YL] {
            let direct = f.apply_field(id).eval(p);
            let via = q.expand(id, &f).unwrap().eval(p);
            assert!((direct - via).abs() < 1e-12, "{id:?}");
        }
        assert!(q.homogeneity_residual(p, 3.0) < 1e-12);
    }

    #[test]
    fn closed_form_at_unit_point() {
        let v = heis_closed_form(GroupPoint::new(1.0, 0.0, 0.0), GroupPoint::IDENTITY, 0).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert!(heis_closed_form(GroupPoint::IDENTITY, GroupPoint::IDENTITY, 0).is_err());
    }

    #[test]
    fn sumb_diagonal_at_least_one() {
        let x = GroupPoint::new(0.5, 0.2, -1.0);
        let rep = sum_B_check(&SumBConfig::default(), x, x).unwrap();
        assert!(rep.ratio_min >= 1.0);
        let bad = SumBConfig { n_l: 2, ..SumBConfig::default() };
        assert!(sum_B_check(&bad, x, x).is_err());
    }

    #[test]
    fn series_tail_is_small() {
        let s = heis_pointwise_sum(GroupPoint::new(2.0, 1.0, 0.5), GroupPoint::new(1.5, 1.0, 3.0), 1, L_MAX_DEFAULT).unwrap();
        assert!(s.value > 0.0 && s.relative_tail() <= TAIL_FRACTION);
    }
}
