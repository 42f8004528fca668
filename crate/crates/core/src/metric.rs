//! Interpolated control distances `rho_eps^L`, `rho_eps^R` on `H^1`.
//!
//! `rho_eps^L` is generated by the left gradient with weight 1 and the right
//! gradient with weight `eps`; `rho_eps^R` swaps the roles. Three ways in:
//!
//! * [`dist_surrogate`], a closed-form quantity comparable to the distance,
//! * [`dist_oracle`], a best-first search over piecewise-flow paths,
//! * [`dist_composed`], the min-max composition of two distances.

use alloc::collections::BinaryHeap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use hashbrown::HashMap;

use crate::fmath;
use crate::group::{self, flow, im_z_wbar, FieldId, GroupPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "L",
            Side::Right => "R",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("eps must lie in [0, 1], got {0}")]
    BadEps(f64),
    #[error("radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("step must be positive, got {0}")]
    BadStep(f64),
    #[error("point outside the search box")]
    OutsideBox,
    #[error("search budget exhausted after {expanded} expansions; distance >= {lower_bound}")]
    Unreached { lower_bound: f64, expanded: usize },
    #[error("empty lattice")]
    EmptyLattice,
}

/// Which family carries weight one, and the weight `eps` of the other.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricParams {
    pub side: Side,
    pub eps: f64,
}

impl MetricParams {
    pub fn new(side: Side, eps: f64) -> Result<Self, MetricError> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(MetricError::BadEps(eps));
        }
        Ok(MetricParams { side, eps })
    }

    pub fn left(eps: f64) -> Self {
        MetricParams::new(Side::Left, eps).expect("eps in [0,1]")
    }

    pub fn right(eps: f64) -> Self {
        MetricParams::new(Side::Right, eps).expect("eps in [0,1]")
    }
}

/// The central coordinate of the side-appropriate difference of `p` and `q`:
/// `t - s + 2 Im(z conj w)` on the left, `t - s - 2 Im(z conj w)` on the right.
#[inline]
pub fn tau(side: Side, p: GroupPoint, q: GroupPoint) -> f64 {
    match side {
        Side::Left => p.t - q.t + 2.0 * im_z_wbar(p, q),
        Side::Right => p.t - q.t - 2.0 * im_z_wbar(p, q),
    }
}

/// Closed-form surrogate
/// `|z - w| + min(|tau|^{1/2}, |tau| / (eps max(|z|, |w|)))`.
///
/// A zero denominator selects the square-root branch.
pub fn dist_surrogate(mp: MetricParams, p: GroupPoint, q: GroupPoint) -> f64 {
    let dz = fmath::hypot(p.x - q.x, p.y - q.y);
    let ta = tau(mp.side, p, q).abs();
    let m = p.z_abs().max(q.z_abs());
    let den = mp.eps * m;
    let sq = fmath::sqrt(ta);
    let vert = if den > 0.0 { sq.min(ta / den) } else { sq };
    dz + vert
}

/// Ball volume surrogate `delta^4 + eps |z| delta^3` (both sides).
pub fn volume(mp: MetricParams, center: GroupPoint, delta: f64) -> Result<f64, MetricError> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(MetricError::BadRadius(delta));
    }
    Ok(volume_unchecked(mp.eps, center, delta))
}

#[inline]
pub(crate) fn volume_unchecked(eps: f64, center: GroupPoint, delta: f64) -> f64 {
    let d3 = delta * delta * delta;
    d3 * delta + eps * center.z_abs() * d3
}

/// A vector field with polynomial coefficients and a formal degree.
#[derive(Clone)]
pub struct WeightedField {
    pub coeffs: Arc<dyn Fn(GroupPoint) -> [f64; 3] + Send + Sync>,
    pub degree: u32,
    pub label: &'static str,
}

impl fmt::Debug for WeightedField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightedField")
            .field("label", &self.label)
            .field("degree", &self.degree)
            .finish()
    }
}

#[derive(Clone, Debug, Default)]
pub struct WeightedFieldList {
    pub entries: Vec<WeightedField>,
}

impl WeightedFieldList {
    pub fn push<F>(&mut self, label: &'static str, degree: u32, coeffs: F)
    where
        F: Fn(GroupPoint) -> [f64; 3] + Send + Sync + 'static,
    {
        self.entries.push(WeightedField { coeffs: Arc::new(coeffs), degree, label });
    }

    /// `{(XL,1), (YL,1), (T,2)}`.
    pub fn heisenberg_left() -> Self {
        let mut l = WeightedFieldList::default();
        for id in [FieldId::XL, FieldId::YL] {
            l.push(id.name(), 1, move |p| id.coefficients(p));
        }
        l.push("T", 2, |p| FieldId::T.coefficients(p));
        l
    }

    /// `{XL, YL, T, eps XR, eps YR, eps^2 T}` with degrees `1,1,2,1,1,2`.
    pub fn heisenberg_eps(eps: f64) -> Self {
        let mut l = WeightedFieldList::heisenberg_left();
        for id in [FieldId::XR, FieldId::YR] {
            l.push(id.name(), 1, move |p| {
                let c = id.coefficients(p);
                [eps * c[0], eps * c[1], eps * c[2]]
            });
        }
        l.push("eps^2 T", 2, move |_| [0.0, 0.0, eps * eps]);
        l
    }
}

fn det3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// `sum_I |det(coefficients of I)| delta^{d(I)}` over all 3-element subsets.
pub fn lambda_general(fields: &WeightedFieldList, x: GroupPoint, delta: f64) -> f64 {
    let rows: Vec<([f64; 3], u32)> =
        fields.entries.iter().map(|f| ((f.coeffs)(x), f.degree)).collect();
    let n = rows.len();
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let d = det3(rows[i].0, rows[j].0, rows[k].0).abs();
                if d != 0.0 {
                    sum += d * fmath::powi(delta, (rows[i].1 + rows[j].1 + rows[k].1) as i32);
                }
            }
        }
    }
    sum
}

/// Search settings for [`dist_oracle`].
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OracleConfig {
    pub h: f64,
    /// Maximum number of node expansions.
    pub node_budget: usize,
    /// States must satisfy `|x|, |y| <= half_width[0..2]`, `|t| <= half_width[2]`.
    pub half_width: [f64; 3],
    /// Below this weight the weighted family is dropped from the move set.
    pub eps_floor: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            h: 1.0 / 16.0,
            node_budget: 4_000_000,
            half_width: [8.0, 8.0, 64.0],
            eps_floor: 1.0 / 1048576.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub expanded: usize,
}

#[derive(Clone, Copy)]
struct Open {
    f: f64,
    g: f64,
    idx: u32,
}

impl PartialEq for Open {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Open {}
impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Open {
    // min-heap on f, ties broken towards larger g (deeper nodes)
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f).then(self.g.total_cmp(&o.g)).then(o.idx.cmp(&self.idx))
    }
}

/// Best-first (A*) search for the cheapest piecewise-flow path from `p` to `q`.
///
/// Moves are `+-h` along the four horizontal fields using the exact flows. On
/// the left side `XL, YL` cost `h` and `XR, YR` cost `h / eps`; the right side
/// is mirrored. Visited states are deduplicated on a lattice of pitch `h/2`
/// and the search stops once every coordinate is within `h/2` of `q`.
///
/// The returned value is the cost of an explicit path, so an upper bound
/// for the discrete problem. The heuristic is admissible, see
/// [`OracleSearch::heuristic`].
pub fn dist_oracle(
    mp: MetricParams,
    p: GroupPoint,
    q: GroupPoint,
    cfg: &OracleConfig,
) -> Result<OracleResult, MetricError> {
    if !(cfg.h > 0.0) || !cfg.h.is_finite() {
        return Err(MetricError::BadStep(cfg.h));
    }
    if !(0.0..=1.0).contains(&mp.eps) {
        return Err(MetricError::BadEps(mp.eps));
    }
    // Inversion swaps left and right invariant fields, so the right metric
    // between p, q is the left metric between their inverses.
    let (p, q) = match mp.side {
        Side::Left => (p, q),
        Side::Right => (p.inverse(), q.inverse()),
    };
    let inside = |s: GroupPoint| {
        s.x.abs() <= cfg.half_width[0] && s.y.abs() <= cfg.half_width[1] && s.t.abs() <= cfg.half_width[2]
    };
    if !inside(p) || !inside(q) {
        return Err(MetricError::OutsideBox);
    }
    let right_weight = if mp.eps >= cfg.eps_floor { mp.eps } else { 0.0 };
    let search = OracleSearch { q, h: cfg.h, tol: 0.5 * cfg.h * (1.0 + 1e-9), right_weight };
    search.run(p, cfg.node_budget, inside)
}

struct OracleSearch {
    q: GroupPoint,
    h: f64,
    tol: f64,
    /// weight of the expensive family, 0 when disabled
    right_weight: f64,
}

impl OracleSearch {
    fn is_goal(&self, s: GroupPoint) -> bool {
        (s.x - self.q.x).abs() <= self.tol
            && (s.y - self.q.y).abs() <= self.tol
            && (s.t - self.q.t).abs() <= self.tol
    }

    /// Lower bound on the remaining cost from `s`.
    ///
    /// With `w = q^{-1} s`, every move of cost `c` changes one of `w_x`,
    /// `w_y` by at most `c`, and changes `w_t` by at most `2 R c` with
    /// `R = max(|w_x|, |w_y|, eps |s_x + q_x|, eps |s_y + q_y|)`. Since `R`
    /// itself grows at most by the cost spent, reaching `q` costs at least
    /// `c` with `2 (R + c) c >= |w_t| - tol`.
    fn heuristic(&self, s: GroupPoint) -> f64 {
        let w = group::left_diff(self.q, s);
        let tol = self.tol;
        let hxy = (w.x.abs() - tol).max(0.0) + (w.y.abs() - tol).max(0.0);
        let e = self.right_weight;
        let r0 = w
            .x
            .abs()
            .max(w.y.abs())
            .max(e * (s.x + self.q.x).abs())
            .max(e * (s.y + self.q.y).abs());
        let dt = (w.t.abs() - tol).max(0.0);
        let ht = 0.5 * (fmath::sqrt(r0 * r0 + 2.0 * dt) - r0);
        hxy.max(ht)
    }

    fn key(&self, origin: GroupPoint, s: GroupPoint) -> (i64, i64, i64) {
        let pitch = 0.5 * self.h;
        (
            fmath::round((s.x - origin.x) / pitch) as i64,
            fmath::round((s.y - origin.y) / pitch) as i64,
            fmath::round((s.t - origin.t) / pitch) as i64,
        )
    }

    fn run<F: Fn(GroupPoint) -> bool>(
        &self,
        p: GroupPoint,
        budget: usize,
        inside: F,
    ) -> Result<OracleResult, MetricError> {
        if self.is_goal(p) {
            return Ok(OracleResult { value: 0.0, expanded: 0 });
        }
        let h = self.h;
        let mut moves: Vec<(FieldId, f64, f64)> = Vec::with_capacity(8);
        for id in FieldId::LEFT {
            moves.push((id, h, h));
            moves.push((id, -h, h));
        }
        if self.right_weight > 0.0 {
            let c = h / self.right_weight;
            for id in FieldId::RIGHT {
                moves.push((id, h, c));
                moves.push((id, -h, c));
            }
        }
        let mut nodes: Vec<(GroupPoint, f64)> = Vec::new();
        let mut seen: HashMap<(i64, i64, i64), u32> = HashMap::new();
        let mut open = BinaryHeap::new();
        nodes.push((p, 0.0));
        seen.insert(self.key(p, p), 0);
        open.push(Open { f: self.heuristic(p), g: 0.0, idx: 0 });
        let mut expanded = 0usize;
        while let Some(top) = open.pop() {
            let (s, g) = nodes[top.idx as usize];
            if top.g > g {
                continue;
            }
            if self.is_goal(s) {
                return Ok(OracleResult { value: g, expanded });
            }
            if expanded >= budget {
                return Err(MetricError::Unreached { lower_bound: top.f, expanded });
            }
            expanded += 1;
            for &(id, step, cost) in &moves {
                let n = flow(id, step, s);
                if !inside(n) {
                    continue;
                }
                let ng = g + cost;
                let k = self.key(p, n);
                match seen.get(&k) {
                    Some(&i) if nodes[i as usize].1 <= ng => continue,
                    Some(&i) => {
                        nodes[i as usize] = (n, ng);
                        open.push(Open { f: ng + self.heuristic(n), g: ng, idx: i });
                    }
                    None => {
                        let i = nodes.len() as u32;
                        nodes.push((n, ng));
                        seen.insert(k, i);
                        open.push(Open { f: ng + self.heuristic(n), g: ng, idx: i });
                    }
                }
            }
        }
        Err(MetricError::Unreached { lower_bound: f64::INFINITY, expanded })
    }
}

/// Candidate intermediate points for [`dist_composed`]: the midpoints of an
/// `n[0] x n[1] x n[2]` subdivision of the box `[lo, hi]`.
///
/// Refining every count by an odd factor keeps the old midpoints, so the
/// composed value can only decrease.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MidpointLattice {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub n: [usize; 3],
}

impl MidpointLattice {
    /// Box around `p` and `q` padded by `pad` in `x, y` and `pad^2` in `t`,
    /// after widening `t` by the shear `2 |z_p| |z_q|`.
    pub fn around(p: GroupPoint, q: GroupPoint, pad: f64, n: usize) -> Self {
        let shear = 2.0 * (p.z_abs() + pad) * (q.z_abs() + pad);
        MidpointLattice {
            lo: [p.x.min(q.x) - pad, p.y.min(q.y) - pad, p.t.min(q.t) - pad * pad - shear],
            hi: [p.x.max(q.x) + pad, p.y.max(q.y) + pad, p.t.max(q.t) + pad * pad + shear],
            n: [n, n, n],
        }
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn cell(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for a in 0..3 {
            c[a] = (self.hi[a] - self.lo[a]) / self.n[a] as f64;
        }
        c
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> GroupPoint {
        let c = self.cell();
        GroupPoint::new(
            self.lo[0] + (i as f64 + 0.5) * c[0],
            self.lo[1] + (j as f64 + 0.5) * c[1],
            self.lo[2] + (k as f64 + 0.5) * c[2],
        )
    }
}

/// `min_z max(rho1(p, z), rho2(z, q))` over the lattice midpoints and `z in {p, q}`.
///
/// Ties keep the first candidate: `p`, `q`, then lattice order.
pub fn dist_composed<R1, R2>(
    rho1: R1,
    rho2: R2,
    p: GroupPoint,
    q: GroupPoint,
    lattice: &MidpointLattice,
) -> Result<f64, MetricError>
where
    R1: Fn(GroupPoint, GroupPoint) -> f64,
    R2: Fn(GroupPoint, GroupPoint) -> f64,
{
    composed_search(&rho1, &rho2, p, q, lattice).map(|(v, _)| v)
}

fn composed_search<R1, R2>(
    rho1: &R1,
    rho2: &R2,
    p: GroupPoint,
    q: GroupPoint,
    lattice: &MidpointLattice,
) -> Result<(f64, GroupPoint), MetricError>
where
    R1: Fn(GroupPoint, GroupPoint) -> f64,
    R2: Fn(GroupPoint, GroupPoint) -> f64,
{
    if lattice.is_empty() {
        return Err(MetricError::EmptyLattice);
    }
    let score = |z: GroupPoint| rho1(p, z).max(rho2(z, q));
    let mut best = (score(p), p);
    let sq = score(q);
    if sq < best.0 {
        best = (sq, q);
    }
    for i in 0..lattice.n[0] {
        for j in 0..lattice.n[1] {
            for k in 0..lattice.n[2] {
                let z = lattice.point(i, j, k);
                let s = score(z);
                if s < best.0 {
                    best = (s, z);
                }
            }
        }
    }
    Ok(best)
}

/// [`dist_composed`] followed by `rounds` zooms: each round re-subdivides the
/// 3x3x3 block of cells around the current best midpoint by 3, which
/// contains that midpoint, so the value is nonincreasing in `rounds`.
pub fn dist_composed_refined<R1, R2>(
    rho1: R1,
    rho2: R2,
    p: GroupPoint,
    q: GroupPoint,
    lattice: &MidpointLattice,
    rounds: usize,
) -> Result<f64, MetricError>
where
    R1: Fn(GroupPoint, GroupPoint) -> f64,
    R2: Fn(GroupPoint, GroupPoint) -> f64,
{
    let (mut best, mut z) = composed_search(&rho1, &rho2, p, q, lattice)?;
    let mut cell = lattice.cell();
    for _ in 0..rounds {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        let c = z.to_array();
        for a in 0..3 {
            lo[a] = c[a] - 1.5 * cell[a];
            hi[a] = c[a] + 1.5 * cell[a];
        }
        let local = MidpointLattice { lo, hi, n: [9, 9, 9] };
        let (b, nz) = composed_search(&rho1, &rho2, p, q, &local)?;
        if b < best {
            best = b;
            z = nz;
        }
        cell = local.cell();
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    const E: GroupPoint = GroupPoint::IDENTITY;

    #[test]
    fn surrogate_examples() {
        let p = GroupPoint::new(1.0, 0.0, 0.0);
        assert_eq!(dist_surrogate(MetricParams::left(0.0), p, E), 1.0);
        let p = GroupPoint::new(0.0, 0.0, 1.0);
        assert_eq!(dist_surrogate(MetricParams::left(1.0), p, E), 1.0);
        assert_eq!(dist_surrogate(MetricParams::left(0.5), p, p), 0.0);
    }

    #[test]
    fn tau_is_center_of_difference() {
        let p = GroupPoint::new(0.3, -1.0, 2.0);
        let q = GroupPoint::new(-0.7, 0.4, 0.5);
        assert!((tau(Side::Left, p, q) - group::left_diff(q, p).t).abs() < 1e-14);
        assert!((tau(Side::Right, p, q) - group::right_diff(p, q).t).abs() < 1e-14);
    }

    #[test]
    fn volume_examples() {
        let c = GroupPoint::new(3.0, 4.0, 1.0);
        assert_eq!(volume(MetricParams::left(0.0), c, 0.5).unwrap(), 0.0625);
        assert_eq!(volume(MetricParams::left(1.0), c, 1.0).unwrap(), 6.0);
        assert!(volume(MetricParams::left(1.0), c, 0.0).is_err());
        assert!(MetricParams::new(Side::Left, 1.5).is_err());
    }

    #[test]
    fn lambda_left_only() {
        let l = WeightedFieldList::heisenberg_left();
        let p = GroupPoint::new(2.0, -3.0, 7.0);
        assert!((lambda_general(&l, p, 0.5) - 0.0625).abs() < 1e-15);
        assert_eq!(lambda_general(&l, p, 0.0), 0.0);
    }

    #[test]
    fn lambda_eps_minors() {
        // At (x, 0, t) the dominant minors are delta^4 and 4|x| eps delta^3;
        // the rest carry an extra factor eps and do not change the order.
        let eps = 0.25;
        let l = WeightedFieldList::heisenberg_eps(eps);
        let p = GroupPoint::new(2.0, 0.0, 1.0);
        for d in [1e-3, 0.1, 1.0, 10.0] {
            let lam = lambda_general(&l, p, d);
            let lead = d.powi(4) + 4.0 * 2.0 * eps * d.powi(3);
            assert!(lam >= lead * (1.0 - 1e-12), "{lam} vs {lead}");
            let v = volume(MetricParams::left(eps), p, d).unwrap();
            assert!(lam / v <= 16.0, "{}", lam / v);
        }
    }

    #[test]
    fn oracle_trivial() {
        let cfg = OracleConfig::default();
        let p = GroupPoint::new(0.2, 0.1, -0.4);
        assert_eq!(dist_oracle(MetricParams::left(0.5), p, p, &cfg).unwrap().value, 0.0);
    }

    #[test]
    fn oracle_straight_line() {
        let cfg = OracleConfig::default();
        let q = GroupPoint::new(1.0, 0.0, 0.0);
        let v = dist_oracle(MetricParams::left(1.0), E, q, &cfg).unwrap().value;
        assert!((0.9..=1.5).contains(&v), "{v}");
    }

    #[test]
    fn oracle_budget() {
        let cfg = OracleConfig { node_budget: 10, ..OracleConfig::default() };
        let q = GroupPoint::new(0.0, 0.0, 3.0);
        match dist_oracle(MetricParams::left(0.0), E, q, &cfg) {
            Err(MetricError::Unreached { lower_bound, expanded }) => {
                assert_eq!(expanded, 10);
                assert!(lower_bound > 0.0 && lower_bound.is_finite());
            }
            other => panic!("{other:?}"),
        }
        let far = GroupPoint::new(100.0, 0.0, 0.0);
        assert_eq!(dist_oracle(MetricParams::left(0.0), E, far, &cfg), Err(MetricError::OutsideBox));
    }

    #[test]
    fn composed_trivial() {
        let rho = |a, b| dist_surrogate(MetricParams::left(0.5), a, b);
        let p = GroupPoint::new(0.5, 0.5, 0.5);
        let lat = MidpointLattice::around(p, p, 1.0, 3);
        assert_eq!(dist_composed(rho, rho, p, p, &lat).unwrap(), 0.0);
        let empty = MidpointLattice { n: [0, 3, 3], ..lat };
        assert_eq!(dist_composed(rho, rho, p, p, &empty), Err(MetricError::EmptyLattice));
    }
}
