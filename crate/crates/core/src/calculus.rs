//! Grid functions, quadrature, group convolution and test-function builders.
//!
//! Convolution is `(f * g)(x) = int f(y) g(y^{-1} x) dy`, so that
//! `Op_L(K) f = f * K` and `Op_R(K) f = K * f`. Lebesgue measure in
//! exponential coordinates is the Haar measure.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fmath;
use crate::group::{self, FieldId, GroupPoint};
use crate::metric::{self, MetricParams, Side};
use crate::poly::{Poly3, PolyExp};

/// Default cap on the number of grid points.
pub const DEFAULT_POINT_CAP: usize = 1 << 24;
/// Default cap on point pairs visited by a grid convolution.
pub const DEFAULT_PAIR_CAP: u64 = 1 << 30;
/// Highest vanishing-moment order [`make_vanishing_moment`] accepts.
pub const MAX_MOMENT_ORDER: u32 = 6;
/// Gaussian profiles are cut where the envelope drops below `exp(-TRUNC_EXPONENT)`.
pub const TRUNC_EXPONENT: f64 = 40.0;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CalcError {
    #[error("grid has {points} points, cap is {cap}")]
    CapExceeded { points: u64, cap: u64 },
    #[error("invalid grid: {0}")]
    BadGrid(&'static str),
    #[error("grid functions live on different grids")]
    SpecMismatch,
    #[error("scale must be positive, got {0}")]
    BadScale(f64),
    #[error("kernel is not a finite sum of tensor profiles")]
    NonTensorKernel,
    #[error("moment order {order} above supported maximum {max}")]
    OrderTooHigh { order: u32, max: u32 },
    #[error("quadrature with {n} points per axis cannot resolve the finer scale")]
    Unresolved { n: usize },
    #[error("need at least one {0}")]
    Empty(&'static str),
}

/// Rectangular sampling box with `n[i]` cells per axis; samples sit at cell centres.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub n: [usize; 3],
}

impl GridSpec {
    pub fn new(lo: [f64; 3], hi: [f64; 3], n: [usize; 3]) -> Result<Self, CalcError> {
        GridSpec::with_cap(lo, hi, n, DEFAULT_POINT_CAP)
    }

    pub fn with_cap(lo: [f64; 3], hi: [f64; 3], n: [usize; 3], cap: usize) -> Result<Self, CalcError> {
        for a in 0..3 {
            if !(hi[a] > lo[a]) || !lo[a].is_finite() || !hi[a].is_finite() {
                return Err(CalcError::BadGrid("box must have positive, finite extent"));
            }
            if n[a] == 0 {
                return Err(CalcError::BadGrid("sample counts must be positive"));
            }
        }
        let points = n[0] as u64 * n[1] as u64 * n[2] as u64;
        if points > cap as u64 {
            return Err(CalcError::CapExceeded { points, cap: cap as u64 });
        }
        Ok(GridSpec { lo, hi, n })
    }

    /// `[-a, a]^2 x [-b, b]` with `n` cells per axis.
    pub fn centered(a: f64, b: f64, n: usize) -> Result<Self, CalcError> {
        GridSpec::new([-a, -a, -b], [a, a, b], [n, n, n])
    }

    pub fn of_box(b: &SupportBox, n: usize) -> Result<Self, CalcError> {
        GridSpec::new(b.lo, b.hi, [n, n, n])
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> [f64; 3] {
        core::array::from_fn(|a| (self.hi[a] - self.lo[a]) / self.n[a] as f64)
    }

    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        h[0] * h[1] * h[2]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n[1] + j) * self.n[2] + k
    }

    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        let h = (self.hi[axis] - self.lo[axis]) / self.n[axis] as f64;
        self.lo[axis] + (i as f64 + 0.5) * h
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> GroupPoint {
        GroupPoint::new(self.coord(0, i), self.coord(1, j), self.coord(2, k))
    }

    /// Node for a flat index.
    pub fn node_flat(&self, idx: usize) -> GroupPoint {
        let k = idx % self.n[2];
        let j = (idx / self.n[2]) % self.n[1];
        let i = idx / (self.n[1] * self.n[2]);
        self.node(i, j, k)
    }

    pub fn contains(&self, p: GroupPoint) -> bool {
        let c = p.to_array();
        (0..3).all(|a| c[a] >= self.lo[a] && c[a] <= self.hi[a])
    }

    pub fn as_box(&self) -> SupportBox {
        SupportBox { lo: self.lo, hi: self.hi }
    }

    /// Index range of nodes on `axis` with coordinate in `[a, b]`.
    fn range(&self, axis: usize, a: f64, b: f64) -> core::ops::Range<usize> {
        let h = (self.hi[axis] - self.lo[axis]) / self.n[axis] as f64;
        let from = fmath::floor((a - self.lo[axis]) / h - 0.5) - 1.0;
        let to = fmath::floor((b - self.lo[axis]) / h - 0.5) + 2.0;
        let n = self.n[axis] as f64;
        let from = from.max(0.0).min(n) as usize;
        let to = to.max(0.0).min(n) as usize;
        from..to.max(from)
    }
}

/// Samples on a [`GridSpec`], flat in `(i, j, k)` row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self, CalcError> {
        if values.len() != spec.len() {
            return Err(CalcError::BadGrid("value count does not match grid"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(CalcError::BadGrid("NaN sample"));
        }
        Ok(GridFunction { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        GridFunction { spec, values: alloc::vec![0.0; spec.len()] }
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> GridFunction {
        GridFunction { spec: self.spec, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn abs(&self) -> GridFunction {
        self.map(f64::abs)
    }

    pub fn scale(&self, s: f64) -> GridFunction {
        self.map(|v| s * v)
    }

    pub fn zip<F: Fn(f64, f64) -> f64>(&self, o: &GridFunction, f: F) -> Result<GridFunction, CalcError> {
        if self.spec != o.spec {
            return Err(CalcError::SpecMismatch);
        }
        let values = self.values.iter().zip(&o.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(GridFunction { spec: self.spec, values })
    }

    pub fn add(&self, o: &GridFunction) -> Result<GridFunction, CalcError> {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &GridFunction) -> Result<GridFunction, CalcError> {
        self.zip(o, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Quadrature `L^2` norm.
    pub fn l2(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v * v).sum();
        fmath::sqrt(s * self.spec.cell_volume())
    }

    /// Quadrature `L^1` norm.
    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.spec.cell_volume()
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.spec.index(i, j, k)]
    }
}

/// Samples `f` at the cell centres of `spec`.
pub fn sample<F: Fn(GroupPoint) -> f64>(f: F, spec: &GridSpec) -> Result<GridFunction, CalcError> {
    let total = spec.n[0] as u64 * spec.n[1] as u64 * spec.n[2] as u64;
    if total > DEFAULT_POINT_CAP as u64 {
        return Err(CalcError::CapExceeded { points: total, cap: DEFAULT_POINT_CAP as u64 });
    }
    let mut values = Vec::with_capacity(spec.len());
    for i in 0..spec.n[0] {
        for j in 0..spec.n[1] {
            for k in 0..spec.n[2] {
                let v = f(spec.node(i, j, k));
                values.push(if v.is_nan() { 0.0 } else { v });
            }
        }
    }
    Ok(GridFunction { spec: *spec, values })
}

/// Midpoint rule, summed in index order.
pub fn integrate(g: &GridFunction) -> f64 {
    g.values.iter().sum::<f64>() * g.spec.cell_volume()
}

/// Trilinear interpolation through the cell centres, extended linearly to the
/// box faces; zero outside the box.
pub fn interpolate(g: &GridFunction, p: GroupPoint) -> f64 {
    let s = &g.spec;
    if !s.contains(p) {
        return 0.0;
    }
    let c = p.to_array();
    let mut base = [0usize; 3];
    let mut frac = [0.0f64; 3];
    let mut two = [true; 3];
    for a in 0..3 {
        let h = (s.hi[a] - s.lo[a]) / s.n[a] as f64;
        let u = (c[a] - s.lo[a]) / h - 0.5;
        if s.n[a] == 1 {
            two[a] = false;
            continue;
        }
        let i0 = (fmath::floor(u).max(0.0) as usize).min(s.n[a] - 2);
        base[a] = i0;
        frac[a] = u - i0 as f64;
    }
    let mut acc = 0.0;
    for di in 0..=(two[0] as usize) {
        let wx = if di == 1 { frac[0] } else { 1.0 - frac[0] };
        for dj in 0..=(two[1] as usize) {
            let wy = if dj == 1 { frac[1] } else { 1.0 - frac[1] };
            for dk in 0..=(two[2] as usize) {
                let wt = if dk == 1 { frac[2] } else { 1.0 - frac[2] };
                acc += wx * wy * wt * g.value(base[0] + di, base[1] + dj, base[2] + dk);
            }
        }
    }
    acc
}

fn check_pairs(spec: &GridSpec, cap: u64) -> Result<(), CalcError> {
    let n = spec.len() as u64;
    let pairs = n.saturating_mul(n);
    if pairs > cap {
        return Err(CalcError::CapExceeded { points: pairs, cap });
    }
    Ok(())
}

/// Grid convolution `f * g`, with `g` read off by [`interpolate`].
pub fn convolve(f: &GridFunction, g: &GridFunction) -> Result<GridFunction, CalcError> {
    convolve_with_cap(f, g, DEFAULT_PAIR_CAP)
}

pub fn convolve_with_cap(f: &GridFunction, g: &GridFunction, cap: u64) -> Result<GridFunction, CalcError> {
    if f.spec != g.spec {
        return Err(CalcError::SpecMismatch);
    }
    check_pairs(&f.spec, cap)?;
    let gb = g.spec.as_box();
    Ok(convolve_core(f, &gb, |u| interpolate(g, u), ConvSide::KernelRight))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ConvSide {
    /// `f * k`: sum over y of f(y) k(y^{-1} x)
    KernelRight,
    /// `k * f`: sum over w of k(x w^{-1}) f(w)
    KernelLeft,
}

fn convolve_core<K: Fn(GroupPoint) -> f64>(
    f: &GridFunction,
    kbox: &SupportBox,
    k: K,
    side: ConvSide,
) -> GridFunction {
    let s = f.spec;
    let dv = s.cell_volume();
    let mut out = Vec::with_capacity(s.len());
    for i in 0..s.n[0] {
        for j in 0..s.n[1] {
            for kk in 0..s.n[2] {
                let x = s.node(i, j, kk);
                // horizontal part of the difference is x - y on both sides
                let ri = s.range(0, x.x - kbox.hi[0], x.x - kbox.lo[0]);
                let rj = s.range(1, x.y - kbox.hi[1], x.y - kbox.lo[1]);
                let mut acc = 0.0;
                for a in ri.clone() {
                    for b in rj.clone() {
                        for c in 0..s.n[2] {
                            let fv = f.values[s.index(a, b, c)];
                            if fv == 0.0 {
                                continue;
                            }
                            let y = s.node(a, b, c);
                            let u = match side {
                                ConvSide::KernelRight => group::left_diff(y, x),
                                ConvSide::KernelLeft => group::right_diff(x, y),
                            };
                            if kbox.contains(u) {
                                acc += fv * k(u);
                            }
                        }
                    }
                }
                out.push(acc * dv);
            }
        }
    }
    GridFunction { spec: s, values: out }
}

/// `Op_L(k) f = f * k` on the grid of `f`.
pub fn op_left(k: &ProfileFunction, f: &GridFunction) -> GridFunction {
    convolve_core(f, &k.support(), |u| k.eval(u), ConvSide::KernelRight)
}

/// `Op_R(k) f = k * f` on the grid of `f`.
pub fn op_right(k: &ProfileFunction, f: &GridFunction) -> GridFunction {
    convolve_core(f, &k.support(), |u| k.eval(u), ConvSide::KernelLeft)
}

/// Axis-aligned box in exponential coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SupportBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

fn interval_mul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let c = [a.0 * b.0, a.0 * b.1, a.1 * b.0, a.1 * b.1];
    (c.iter().copied().fold(f64::INFINITY, f64::min), c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

impl SupportBox {
    /// `[-r, r]^2 x [-r^2, r^2]`.
    pub fn ball(r: f64) -> Self {
        SupportBox { lo: [-r, -r, -r * r], hi: [r, r, r * r] }
    }

    pub fn point(p: GroupPoint) -> Self {
        SupportBox { lo: p.to_array(), hi: p.to_array() }
    }

    pub fn contains(&self, p: GroupPoint) -> bool {
        p.x >= self.lo[0]
            && p.x <= self.hi[0]
            && p.y >= self.lo[1]
            && p.y <= self.hi[1]
            && p.t >= self.lo[2]
            && p.t <= self.hi[2]
    }

    /// Support of `f(r .)` given the support of `f`.
    pub fn shrink(&self, r: f64) -> Self {
        SupportBox {
            lo: [self.lo[0] / r, self.lo[1] / r, self.lo[2] / (r * r)],
            hi: [self.hi[0] / r, self.hi[1] / r, self.hi[2] / (r * r)],
        }
    }

    pub fn inverse(&self) -> Self {
        SupportBox { lo: [-self.hi[0], -self.hi[1], -self.hi[2]], hi: [-self.lo[0], -self.lo[1], -self.lo[2]] }
    }

    pub fn union(&self, o: &SupportBox) -> Self {
        SupportBox {
            lo: core::array::from_fn(|a| self.lo[a].min(o.lo[a])),
            hi: core::array::from_fn(|a| self.hi[a].max(o.hi[a])),
        }
    }

    /// Bounding box of `{u w : u in self, w in o}`.
    pub fn product(&self, o: &SupportBox) -> Self {
        let yx = interval_mul((self.lo[1], self.hi[1]), (o.lo[0], o.hi[0]));
        let xy = interval_mul((self.lo[0], self.hi[0]), (o.lo[1], o.hi[1]));
        // t = t_u + t_w + 2 (y_u x_w - x_u y_w)
        SupportBox {
            lo: [
                self.lo[0] + o.lo[0],
                self.lo[1] + o.lo[1],
                self.lo[2] + o.lo[2] + 2.0 * (yx.0 - xy.1),
            ],
            hi: [
                self.hi[0] + o.hi[0],
                self.hi[1] + o.hi[1],
                self.hi[2] + o.hi[2] + 2.0 * (yx.1 - xy.0),
            ],
        }
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|a| (self.hi[a] - self.lo[a]).max(0.0)).product()
    }

    /// Cell-centre midpoint nodes with `n` cells per axis and the cell volume.
    pub fn midpoints(&self, n: usize) -> (Vec<GroupPoint>, f64) {
        let h: [f64; 3] = core::array::from_fn(|a| (self.hi[a] - self.lo[a]) / n as f64);
        let mut v = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    v.push(GroupPoint::new(
                        self.lo[0] + (i as f64 + 0.5) * h[0],
                        self.lo[1] + (j as f64 + 0.5) * h[1],
                        self.lo[2] + (k as f64 + 0.5) * h[2],
                    ));
                }
            }
        }
        (v, h[0] * h[1] * h[2])
    }
}

/// A real function on `H^1` supported (or truncated) in a known box.
pub trait Profile: Send + Sync + fmt::Debug {
    fn eval(&self, u: GroupPoint) -> f64;
    fn support(&self) -> SupportBox;
    /// Exact `P exp(-E)` terms, when the profile has that form.
    fn analytic(&self) -> Option<&Analytic> {
        None
    }
}

/// Sum of [`PolyExp`] terms, set to zero outside `trunc`.
#[derive(Clone, Debug, PartialEq)]
pub struct Analytic {
    pub terms: Vec<PolyExp>,
    pub trunc: SupportBox,
}

impl Analytic {
    pub fn eval(&self, u: GroupPoint) -> f64 {
        if !self.trunc.contains(u) {
            return 0.0;
        }
        self.terms.iter().map(|t| t.eval(u)).sum()
    }

    pub fn eval_untruncated(&self, u: GroupPoint) -> f64 {
        self.terms.iter().map(|t| t.eval(u)).sum()
    }

    pub fn dilate(&self, r: f64) -> Analytic {
        Analytic { terms: self.terms.iter().map(|t| t.dilate(r)).collect(), trunc: self.trunc.shrink(r) }
    }

    pub fn apply_field(&self, id: FieldId) -> Analytic {
        Analytic { terms: self.terms.iter().map(|t| t.apply_field(id)).collect(), trunc: self.trunc }
    }

    pub fn scale(&self, s: f64) -> Analytic {
        Analytic { terms: self.terms.iter().map(|t| t.scale(s)).collect(), trunc: self.trunc }
    }
}

impl Profile for Analytic {
    fn eval(&self, u: GroupPoint) -> f64 {
        Analytic::eval(self, u)
    }
    fn support(&self) -> SupportBox {
        self.trunc
    }
    fn analytic(&self) -> Option<&Analytic> {
        Some(self)
    }
}

/// `chi(u) = g(|u|^4)` with `g(s) = exp(1 - 1/(1 - s))` on `s < 1`, times `amp`.
///
/// Smooth, supported in the unit homogeneous ball, radially nonincreasing,
/// `chi(0) = amp`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothBump {
    pub amp: f64,
}

impl SmoothBump {
    /// `int chi = (pi^2 / 2) int_0^1 g(v) dv` for `amp = 1`.
    pub fn unit_mass() -> f64 {
        // composite Simpson; g is flat to all orders at v = 1
        let n = 4000;
        let g = |v: f64| if v < 1.0 { fmath::exp(1.0 - 1.0 / (1.0 - v)) } else { 0.0 };
        let h = 1.0 / n as f64;
        let mut s = g(0.0) + g(1.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * g(i as f64 * h);
        }
        let pi = core::f64::consts::PI;
        0.5 * pi * pi * s * h / 3.0
    }

    pub fn normalized() -> Self {
        SmoothBump { amp: 1.0 / SmoothBump::unit_mass() }
    }

    #[inline]
    pub fn value(&self, u: GroupPoint) -> f64 {
        let z2 = u.x * u.x + u.y * u.y;
        let s = z2 * z2 + u.t * u.t;
        if s >= 1.0 {
            0.0
        } else {
            self.amp * fmath::exp(1.0 - 1.0 / (1.0 - s))
        }
    }
}

impl Profile for SmoothBump {
    fn eval(&self, u: GroupPoint) -> f64 {
        self.value(u)
    }
    fn support(&self) -> SupportBox {
        SupportBox::ball(1.0)
    }
}

#[derive(Debug)]
struct Dilated {
    inner: Arc<dyn Profile>,
    r: f64,
    r4: f64,
}

impl Profile for Dilated {
    fn eval(&self, u: GroupPoint) -> f64 {
        self.r4 * self.inner.eval(group::dilate_unchecked(self.r, u))
    }
    fn support(&self) -> SupportBox {
        self.inner.support().shrink(self.r)
    }
}

#[derive(Debug)]
struct SumProfile {
    parts: Vec<(f64, Arc<dyn Profile>)>,
    support: SupportBox,
}

impl Profile for SumProfile {
    fn eval(&self, u: GroupPoint) -> f64 {
        if !self.support.contains(u) {
            return 0.0;
        }
        self.parts.iter().map(|(c, p)| c * p.eval(u)).sum()
    }
    fn support(&self) -> SupportBox {
        self.support
    }
}

/// Profile backed by a [`GridFunction`] (trilinear, zero off the grid box).
#[derive(Clone, Debug, PartialEq)]
pub struct Sampled {
    pub grid: GridFunction,
}

impl Profile for Sampled {
    fn eval(&self, u: GroupPoint) -> f64 {
        interpolate(&self.grid, u)
    }
    fn support(&self) -> SupportBox {
        self.grid.spec.as_box()
    }
}

struct FnProfile<F> {
    f: F,
    support: SupportBox,
    label: &'static str,
}

impl<F> fmt::Debug for FnProfile<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnProfile").field("label", &self.label).field("support", &self.support).finish()
    }
}

impl<F: Fn(GroupPoint) -> f64 + Send + Sync> Profile for FnProfile<F> {
    fn eval(&self, u: GroupPoint) -> f64 {
        if self.support.contains(u) {
            (self.f)(u)
        } else {
            0.0
        }
    }
    fn support(&self) -> SupportBox {
        self.support
    }
}

/// A profile together with its declared vanishing-moment order.
#[derive(Clone, Debug)]
pub struct ProfileFunction {
    inner: Arc<dyn Profile>,
    moment_order: u32,
    pub label: String,
}

impl ProfileFunction {
    pub fn new<P: Profile + 'static>(p: P, moment_order: u32, label: &str) -> Self {
        ProfileFunction { inner: Arc::new(p), moment_order, label: String::from(label) }
    }

    pub fn from_fn<F>(f: F, support: SupportBox, moment_order: u32, label: &'static str) -> Self
    where
        F: Fn(GroupPoint) -> f64 + Send + Sync + 'static,
    {
        ProfileFunction::new(FnProfile { f, support, label }, moment_order, label)
    }

    pub fn zero() -> Self {
        ProfileFunction::new(
            Analytic { terms: Vec::new(), trunc: SupportBox::point(GroupPoint::IDENTITY) },
            u32::MAX,
            "zero",
        )
    }

    pub fn analytic(a: Analytic, moment_order: u32, label: &str) -> Self {
        ProfileFunction::new(a, moment_order, label)
    }

    #[inline]
    pub fn eval(&self, u: GroupPoint) -> f64 {
        self.inner.eval(u)
    }

    pub fn support(&self) -> SupportBox {
        self.inner.support()
    }

    /// Homogeneous radius of the support box around the identity.
    pub fn support_radius(&self) -> f64 {
        let b = self.support();
        let xy = b.lo[0].abs().max(b.hi[0].abs()).max(b.lo[1].abs()).max(b.hi[1].abs());
        let t = b.lo[2].abs().max(b.hi[2].abs());
        xy.max(fmath::sqrt(t))
    }

    pub fn moment_order(&self) -> u32 {
        self.moment_order
    }

    pub fn as_analytic(&self) -> Option<&Analytic> {
        self.inner.analytic()
    }

    pub fn is_zero(&self) -> bool {
        self.as_analytic().is_some_and(|a| a.terms.is_empty())
    }

    /// `c` times the profile.
    pub fn scale(&self, c: f64) -> ProfileFunction {
        if let Some(a) = self.as_analytic() {
            return ProfileFunction::analytic(a.scale(c), self.moment_order, &self.label);
        }
        let support = self.support();
        ProfileFunction {
            inner: Arc::new(SumProfile { parts: alloc::vec![(c, self.inner.clone())], support }),
            moment_order: self.moment_order,
            label: self.label.clone(),
        }
    }

    /// Pointwise sum.
    pub fn sum(parts: &[ProfileFunction]) -> ProfileFunction {
        if parts.is_empty() {
            return ProfileFunction::zero();
        }
        if parts.iter().all(|p| p.as_analytic().is_some()) && parts.windows(2).all(|w| {
            w[0].as_analytic().map(|a| a.trunc) == w[1].as_analytic().map(|a| a.trunc)
        }) {
            let trunc = parts[0].as_analytic().map(|a| a.trunc).unwrap_or(SupportBox::ball(0.0));
            let terms = parts.iter().flat_map(|p| p.as_analytic().map(|a| a.terms.clone()).unwrap_or_default()).collect();
            let order = parts.iter().map(|p| p.moment_order).min().unwrap_or(0);
            return ProfileFunction::analytic(Analytic { terms, trunc }, order, "sum");
        }
        let support = parts.iter().skip(1).fold(parts[0].support(), |b, p| b.union(&p.support()));
        ProfileFunction {
            inner: Arc::new(SumProfile { parts: parts.iter().map(|p| (1.0, p.inner.clone())).collect(), support }),
            moment_order: parts.iter().map(|p| p.moment_order).min().unwrap_or(0),
            label: String::from("sum"),
        }
    }
}

/// `phi^{(r)}(x) = r^4 phi(r x)`.
pub fn dilate_profile(phi: &ProfileFunction, r: f64) -> Result<ProfileFunction, CalcError> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(CalcError::BadScale(r));
    }
    if r == 1.0 {
        return Ok(phi.clone());
    }
    if let Some(a) = phi.as_analytic() {
        return Ok(ProfileFunction::analytic(a.dilate(r), phi.moment_order, &phi.label));
    }
    Ok(ProfileFunction {
        inner: Arc::new(Dilated { inner: phi.inner.clone(), r, r4: fmath::powi(r, 4) }),
        moment_order: phi.moment_order,
        label: phi.label.clone(),
    })
}

/// A two-variable kernel handed to [`op_two_sided`].
#[derive(Clone)]
pub enum TwoSidedKernel {
    /// `sum_i k1_i (x) k2_i(y)`.
    Tensor(Vec<(ProfileFunction, ProfileFunction)>),
    /// Anything else; rejected by [`op_two_sided`].
    Raw(Arc<dyn Fn(GroupPoint, GroupPoint) -> f64 + Send + Sync>),
}

impl fmt::Debug for TwoSidedKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TwoSidedKernel::Tensor(t) => write!(f, "Tensor({} terms)", t.len()),
            TwoSidedKernel::Raw(_) => f.write_str("Raw"),
        }
    }
}

/// `Op_T(K) f = sum_i Op_L(k1_i) Op_R(k2_i) f`.
pub fn op_two_sided(k: &TwoSidedKernel, f: &GridFunction) -> Result<GridFunction, CalcError> {
    let terms = match k {
        TwoSidedKernel::Tensor(t) => t,
        TwoSidedKernel::Raw(_) => return Err(CalcError::NonTensorKernel),
    };
    let mut acc = GridFunction::zeros(f.spec);
    for (k1, k2) in terms {
        if k1.is_zero() || k2.is_zero() {
            continue;
        }
        let g = op_left(k1, &op_right(k2, f));
        acc = acc.add(&g)?;
    }
    Ok(acc)
}

/// `(E f)(x, y) = f(y^{-1} x)`, lifting a function on `H^1` to `H^1 x H^1`.
#[derive(Clone, Copy, Debug)]
pub struct TransferE<'a> {
    pub f: &'a GridFunction,
}

#[allow(non_snake_case)]
pub fn transfer_E(f: &GridFunction) -> TransferE<'_> {
    TransferE { f }
}

impl TransferE<'_> {
    pub fn eval(&self, x: GroupPoint, y: GroupPoint) -> f64 {
        interpolate(self.f, group::left_diff(y, x))
    }

    pub fn eval_pairs(&self, pairs: &[(GroupPoint, GroupPoint)]) -> Vec<f64> {
        pairs.iter().map(|&(x, y)| self.eval(x, y)).collect()
    }
}

/// Truncation box of the Gaussian `exp(-|z|^2/w^2 - t^2/w^4)` at level `exp(-40)`.
pub fn gaussian_box(w: f64) -> SupportBox {
    let r = fmath::sqrt(TRUNC_EXPONENT);
    SupportBox { lo: [-r * w, -r * w, -r * w * w], hi: [r * w, r * w, r * w * w] }
}

/// An `m`-fold left divergence of Gaussians of width `w`.
///
/// The profile is `sum_word c_word X_{w_1} ... X_{w_m} G` over words in
/// `{XL, YL}^m`, with coefficients in `[-1, 1]` drawn from `seed`, then
/// normalised to unit `L^1` norm (`m = 0` gives the unit-mass Gaussian).
/// Moments of homogeneous degree below `m` vanish.
pub fn make_vanishing_moment(w: f64, m: u32, seed: u64) -> Result<ProfileFunction, CalcError> {
    if m > MAX_MOMENT_ORDER {
        return Err(CalcError::OrderTooHigh { order: m, max: MAX_MOMENT_ORDER });
    }
    if !(w > 0.0) || !w.is_finite() {
        return Err(CalcError::BadScale(w));
    }
    let trunc = gaussian_box(w);
    if m == 0 {
        let mass = fmath::sqrt(fmath::powi(core::f64::consts::PI, 3)) * fmath::powi(w, 4);
        let a = Analytic { terms: alloc::vec![PolyExp::gaussian(w, 1.0 / mass)], trunc };
        return Ok(ProfileFunction::analytic(a, 0, "gaussian"));
    }
    let g = PolyExp::gaussian(w, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc: Option<PolyExp> = None;
    for word in 0u32..(1 << m) {
        let ids: Vec<FieldId> =
            (0..m).map(|b| if word >> b & 1 == 0 { FieldId::XL } else { FieldId::YL }).collect();
        let c: f64 = rng.gen_range(-1.0..1.0);
        let term = g.apply_word(&ids).scale(c);
        acc = Some(match acc {
            None => term,
            Some(a) => PolyExp { poly: a.poly.add(&term.poly), expo: a.expo },
        });
    }
    let phi = acc.expect("m >= 1 gives at least two words");
    let a = Analytic { terms: alloc::vec![phi], trunc };
    let spec = GridSpec::of_box(&trunc, 48)?;
    let l1 = sample(|u| a.eval(u), &spec)?.l1();
    Ok(ProfileFunction::analytic(a.scale(1.0 / l1), m, "vanishing-moment"))
}

/// One quadrature moment `int x^a y^b t^c phi` with its scale `int |x^a y^b t^c phi|`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Moment {
    pub exps: (u32, u32, u32),
    pub value: f64,
    pub abs_scale: f64,
}

impl Moment {
    pub fn relative(&self) -> f64 {
        if self.abs_scale > 0.0 {
            self.value.abs() / self.abs_scale
        } else {
            0.0
        }
    }
}

/// Moments of homogeneous degree `a + b + 2c <= max_deg` on the midpoint grid
/// with `n` cells per axis over the profile's support box.
pub fn moments(phi: &ProfileFunction, max_deg: u32, n: usize) -> Result<Vec<Moment>, CalcError> {
    let spec = GridSpec::of_box(&phi.support(), n)?;
    let g = sample(|u| phi.eval(u), &spec)?;
    let dv = spec.cell_volume();
    let mut out = Vec::new();
    for c in 0..=max_deg / 2 {
        for a in 0..=max_deg - 2 * c {
            for b in 0..=max_deg - 2 * c - a {
                let mut v = 0.0;
                let mut s = 0.0;
                for (idx, &f) in g.values.iter().enumerate() {
                    if f == 0.0 {
                        continue;
                    }
                    let p = spec.node_flat(idx);
                    let m = fmath::powi(p.x, a as i32) * fmath::powi(p.y, b as i32) * fmath::powi(p.t, c as i32);
                    v += m * f;
                    s += (m * f).abs();
                }
                out.push(Moment { exps: (a, b, c), value: v * dv, abs_scale: s * dv });
            }
        }
    }
    Ok(out)
}

/// Kernel of `Op_L(phi^{(r_l)}) Op_R(psi^{(r_r)})` at `(x, y)`:
/// `int psi^{(r_r)}(w) phi^{(r_l)}(y^{-1} w^{-1} x) dw`.
///
/// The midpoint rule with `n^3` nodes runs over the support box of the finer
/// of the two dilated profiles.
pub fn tensor_kernel(
    phi: &ProfileFunction,
    psi: &ProfileFunction,
    r_l: f64,
    r_r: f64,
    x: GroupPoint,
    y: GroupPoint,
    n: usize,
) -> Result<f64, CalcError> {
    let q = TensorKernelQuad::new(phi, psi, r_l, r_r, n)?;
    Ok(q.eval(x, y))
}

/// Precomputed pieces of [`tensor_kernel`] for repeated evaluation.
#[derive(Clone, Debug)]
pub struct TensorKernelQuad {
    phi: ProfileFunction,
    psi: ProfileFunction,
    nodes: Vec<(GroupPoint, f64)>,
    right_finer: bool,
}

/// Smallest quadrature size accepted per axis.
pub const MIN_QUAD_N: usize = 8;

impl TensorKernelQuad {
    pub fn new(phi: &ProfileFunction, psi: &ProfileFunction, r_l: f64, r_r: f64, n: usize) -> Result<Self, CalcError> {
        if n < MIN_QUAD_N {
            return Err(CalcError::Unresolved { n });
        }
        let phi = dilate_profile(phi, r_l)?;
        let psi = dilate_profile(psi, r_r)?;
        let right_finer = r_r >= r_l;
        let fine = if right_finer { &psi } else { &phi };
        let (pts, dv) = fine.support().midpoints(n);
        let nodes = pts
            .into_iter()
            .filter_map(|p| {
                let v = fine.eval(p);
                if v != 0.0 {
                    Some((p, v * dv))
                } else {
                    None
                }
            })
            .collect();
        Ok(TensorKernelQuad { phi, psi, nodes, right_finer })
    }

    pub fn eval(&self, x: GroupPoint, y: GroupPoint) -> f64 {
        let mut acc = 0.0;
        if self.right_finer {
            let yi = y.inverse();
            let sb = self.phi.support();
            for &(w, c) in &self.nodes {
                let u = group::multiply(group::multiply(yi, w.inverse()), x);
                if sb.contains(u) {
                    acc += c * self.phi.eval(u);
                }
            }
        } else {
            let yi = y.inverse();
            let sb = self.psi.support();
            for &(v, c) in &self.nodes {
                let u = group::multiply(group::multiply(x, v.inverse()), yi);
                if sb.contains(u) {
                    acc += c * self.psi.eval(u);
                }
            }
        }
        acc
    }

    /// Bounding box of `{y : kernel(x, y) != 0}`.
    pub fn support_in_y(&self, x: GroupPoint) -> SupportBox {
        // y = w^{-1} x v^{-1} with w in supp psi, v in supp phi
        let wi = self.psi.support().inverse();
        let vi = self.phi.support().inverse();
        wi.product(&SupportBox::point(x)).product(&vi)
    }
}

#[derive(Debug)]
struct NormalizedBump {
    quad: TensorKernelQuad,
    x: GroupPoint,
    support: SupportBox,
}

impl Profile for NormalizedBump {
    fn eval(&self, y: GroupPoint) -> f64 {
        if !self.support.contains(y) {
            return 0.0;
        }
        self.quad.eval(self.x, y)
    }
    fn support(&self) -> SupportBox {
        self.support
    }
}

/// `y -> Ker(Op_L(chi^{(r_l)}) Op_R(chi^{(r_r)}))(x, y)` for the smooth bump
/// `chi`, evaluated by `n^3`-point quadrature.
///
/// `order` is recorded as the label only; derivative control is checked by
/// the caller.
pub fn make_normalized_bump(
    x: GroupPoint,
    r_l: f64,
    r_r: f64,
    order: u32,
    n: usize,
) -> Result<ProfileFunction, CalcError> {
    let chi = ProfileFunction::new(SmoothBump { amp: 1.0 }, 0, "chi");
    let quad = TensorKernelQuad::new(&chi, &chi, r_l, r_r, n)?;
    let support = quad.support_in_y(x);
    let label = alloc::format!("bump(order {order})");
    Ok(ProfileFunction::new(NormalizedBump { quad, x, support }, 0, &label))
}

/// Gaussian packet adapted to the `(r_l, r_r)` geometry at `x`.
///
/// For `r_l <= r_r`, in the coordinates `(zeta, tau)` of `x^{-1} u` the packet is
/// `exp(-|zeta|^2 / d^2 - tau^2 / T^2) / V` with `d = 1 / r_l`,
/// `eps = r_l / r_r`, `T = d^2 + eps |z_x| d` and `V = d^2 T`, the surrogate
/// volume of the ball of radius `d`. Otherwise the right-translated
/// coordinates of `u x^{-1}` are used with `d = 1 / r_r`, `eps = r_r / r_l`.
/// The exponent is quadratic in `u` because the group law is bilinear.
pub fn gaussian_packet(x: GroupPoint, r_l: f64, r_r: f64) -> Result<PolyExp, CalcError> {
    gaussian_packet_at(GroupPoint::IDENTITY, x, r_l, r_r)
}

/// [`gaussian_packet`] written in the translated coordinates `v`, `u = c v`.
///
/// Far from the identity this keeps the polynomial coefficients of high
/// derivatives small. Left-invariant fields act on the translated function
/// unchanged; see [`apply_field_at`] for the right-invariant ones.
pub fn gaussian_packet_at(c: GroupPoint, x: GroupPoint, r_l: f64, r_r: f64) -> Result<PolyExp, CalcError> {
    for r in [r_l, r_r] {
        if !(r > 0.0) || !r.is_finite() {
            return Err(CalcError::BadScale(r));
        }
    }
    let left = r_l <= r_r;
    let (d, eps) = if left { (1.0 / r_l, r_l / r_r) } else { (1.0 / r_r, r_r / r_l) };
    let tt = d * d + eps * x.z_abs() * d;
    let vol = d * d * tt;
    let (zx, zy, tau) = if left {
        // x^{-1} c v = g v
        let g = group::left_diff(x, c);
        (
            Poly3::affine(g.x, 1.0, 0.0, 0.0),
            Poly3::affine(g.y, 0.0, 1.0, 0.0),
            Poly3::affine(g.t, 2.0 * g.y, -2.0 * g.x, 1.0),
        )
    } else {
        // c v x^{-1}
        (
            Poly3::affine(c.x - x.x, 1.0, 0.0, 0.0),
            Poly3::affine(c.y - x.y, 0.0, 1.0, 0.0),
            Poly3::affine(
                c.t - x.t - 2.0 * c.y * x.x + 2.0 * c.x * x.y,
                2.0 * (c.y + x.y),
                -2.0 * (c.x + x.x),
                1.0,
            ),
        )
    };
    let expo = zx
        .mul(&zx)
        .add(&zy.mul(&zy))
        .scale(1.0 / (d * d))
        .add(&tau.mul(&tau).scale(1.0 / (tt * tt)));
    Ok(PolyExp::new(Poly3::constant(1.0 / vol), expo))
}

/// Field `id` applied to `f(c^{-1} .)` and written back in the coordinates
/// of `f`: right-invariant fields pick up `XR - 4 c_y T`, `YR + 4 c_x T`.
pub fn apply_field_at(f: &PolyExp, id: FieldId, c: GroupPoint) -> PolyExp {
    let base = f.apply_field(id);
    let extra = match id {
        FieldId::XR => -4.0 * c.y,
        FieldId::YR => 4.0 * c.x,
        _ => 0.0,
    };
    if extra == 0.0 {
        return base;
    }
    let dt = f.apply_field(FieldId::T);
    PolyExp::new(base.poly.add(&dt.poly.scale(extra)), base.expo)
}

/// [`PolyExp::apply_word`] through [`apply_field_at`].
pub fn apply_word_at(f: &PolyExp, ids: &[FieldId], c: GroupPoint) -> PolyExp {
    let mut g = f.clone();
    for &id in ids.iter().rev() {
        g = apply_field_at(&g, id, c);
    }
    g
}

fn smooth_step_h(u: f64) -> f64 {
    if u > 0.0 {
        fmath::exp(-1.0 / u)
    } else {
        0.0
    }
}

/// Smooth `eta` with `eta = 1` on `[0, 1]`, `eta = 0` on `[2, inf)`.
pub fn smooth_step(s: f64) -> f64 {
    let a = smooth_step_h(2.0 - s);
    let b = smooth_step_h(s - 1.0);
    a / (a + b)
}

/// Smooth gauge comparable to [`metric::dist_surrogate`] centred at `c`:
/// `(|z_p - z_c|^4 + tau^4 / (a^4 + tau^2))^{1/4}` with `a = eps |z_c|`.
pub fn smooth_gauge(mp: MetricParams, c: GroupPoint, p: GroupPoint) -> f64 {
    let dx = p.x - c.x;
    let dy = p.y - c.y;
    let dz2 = dx * dx + dy * dy;
    let ta = metric::tau(mp.side, p, c);
    let a = mp.eps * c.z_abs();
    let a4 = a * a * a * a;
    let t2 = ta * ta;
    let vert = if t2 > 0.0 { t2 * t2 / (a4 + t2) } else { 0.0 };
    fmath::root4(dz2 * dz2 + vert)
}

fn gauge_box(mp: MetricParams, c: GroupPoint, radius: f64) -> SupportBox {
    let a = mp.eps * c.z_abs();
    let tau_max = (fmath::sqrt(32.0) * radius * radius).max(fmath::root4(32.0) * a * radius);
    let zlo = (c.x - radius, c.y - radius);
    let zhi = (c.x + radius, c.y + radius);
    // t_p = t_c + tau - 2 Im(z_p conj z_c) on the left, + on the right
    let im = {
        let a1 = interval_mul((zlo.1, zhi.1), (c.x, c.x));
        let a2 = interval_mul((zlo.0, zhi.0), (c.y, c.y));
        (a1.0 - a2.1, a1.1 - a2.0)
    };
    let (slo, shi) = match mp.side {
        Side::Left => (-2.0 * im.1, -2.0 * im.0),
        Side::Right => (2.0 * im.0, 2.0 * im.1),
    };
    SupportBox {
        lo: [zlo.0, zlo.1, c.t - tau_max + slo],
        hi: [zhi.0, zhi.1, c.t + tau_max + shi],
    }
}

#[derive(Debug)]
struct Annulus {
    mp: MetricParams,
    center: GroupPoint,
    /// inner cutoff radius, absent for the first piece
    inner: Option<f64>,
    outer: f64,
    support: SupportBox,
}

impl Profile for Annulus {
    fn eval(&self, p: GroupPoint) -> f64 {
        let g = smooth_gauge(self.mp, self.center, p);
        let outer = smooth_step(g / self.outer);
        match self.inner {
            None => outer,
            Some(r) => outer - smooth_step(g / r),
        }
    }
    fn support(&self) -> SupportBox {
        self.support
    }
}

/// Annular partition `psi_0, ..., psi_{L-1}` around `center`.
///
/// With `R_l = 2^{l} base` and cutoffs `c_l = eta(gauge / R_l)`, the pieces are
/// `psi_0 = c_0` and `psi_l = c_l - c_{l-1}`, so they sum to one wherever the
/// gauge is at most `R_{L-1}`. The gauge is [`smooth_gauge`], comparable to the
/// surrogate distance within absolute constants.
pub fn partition_annuli(
    center: GroupPoint,
    mp: MetricParams,
    base: f64,
    count: usize,
) -> Result<Vec<ProfileFunction>, CalcError> {
    if count == 0 {
        return Err(CalcError::Empty("annulus"));
    }
    if !(base > 0.0) {
        return Err(CalcError::BadScale(base));
    }
    let mut out = Vec::with_capacity(count);
    for l in 0..count {
        let outer = base * fmath::exp2(l as f64);
        let inner = if l == 0 { None } else { Some(outer * 0.5) };
        let support = gauge_box(mp, center, 2.0 * outer);
        out.push(ProfileFunction::new(Annulus { mp, center, inner, outer, support }, 0, "annulus"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_cap() {
        assert!(matches!(
            GridSpec::new([0.0; 3], [1.0; 3], [512, 512, 128]),
            Err(CalcError::CapExceeded { .. })
        ));
        assert!(GridSpec::new([0.0; 3], [1.0, 0.0, 1.0], [2, 2, 2]).is_err());
    }

    #[test]
    fn sample_constant() {
        let s = GridSpec::centered(1.0, 1.0, 4).unwrap();
        let g = sample(|_| 1.0, &s).unwrap();
        assert!(g.values.iter().all(|&v| v == 1.0));
        assert!((integrate(&g) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn interpolate_linear_exact() {
        let s = GridSpec::new([-1.0, 0.0, -2.0], [1.0, 3.0, 2.0], [5, 7, 4]).unwrap();
        let lin = |p: GroupPoint| 1.0 + 2.0 * p.x - 0.5 * p.y + 0.25 * p.t;
        let g = sample(lin, &s).unwrap();
        for p in [GroupPoint::new(0.13, 2.9, -1.99), GroupPoint::new(-0.99, 0.01, 1.5), s.node(2, 3, 1)] {
            assert!((interpolate(&g, p) - lin(p)).abs() < 1e-12);
        }
        assert_eq!(interpolate(&g, GroupPoint::new(1.5, 1.0, 0.0)), 0.0);
    }

    #[test]
    fn bump_mass_closed_form() {
        let spec = GridSpec::centered(1.0, 1.0, 96).unwrap();
        let chi = SmoothBump { amp: 1.0 };
        let q = integrate(&sample(|u| chi.value(u), &spec).unwrap());
        assert!((q - SmoothBump::unit_mass()).abs() < 1e-4, "{q}");
    }

    #[test]
    fn product_box_contains_products() {
        let a = SupportBox { lo: [-1.0, 0.5, -2.0], hi: [0.5, 2.0, 1.0] };
        let b = SupportBox { lo: [0.0, -1.0, -0.5], hi: [1.0, 1.0, 0.5] };
        let pb = a.product(&b);
        let (pa, _) = a.midpoints(4);
        let (pbb, _) = b.midpoints(4);
        for &u in &pa {
            for &w in &pbb {
                assert!(pb.contains(u * w));
            }
        }
    }

    #[test]
    fn vanishing_moment_orders() {
        assert!(matches!(make_vanishing_moment(1.0, 7, 0), Err(CalcError::OrderTooHigh { .. })));
        let g = make_vanishing_moment(1.0, 0, 0).unwrap();
        let spec = GridSpec::of_box(&g.support(), 64).unwrap();
        let m = integrate(&sample(|u| g.eval(u), &spec).unwrap());
        assert!((m - 1.0).abs() < 1e-4, "{m}");
    }

    #[test]
    fn raw_kernel_rejected() {
        let s = GridSpec::centered(1.0, 1.0, 4).unwrap();
        let f = GridFunction::zeros(s);
        let k = TwoSidedKernel::Raw(Arc::new(|_, _| 1.0));
        assert_eq!(op_two_sided(&k, &f), Err(CalcError::NonTensorKernel));
    }

    #[test]
    fn smooth_step_shape() {
        assert_eq!(smooth_step(0.5), 1.0);
        assert_eq!(smooth_step(1.0), 1.0);
        assert_eq!(smooth_step(2.0), 0.0);
        assert!(smooth_step(1.5) > 0.0 && smooth_step(1.5) < 1.0);
    }
}
