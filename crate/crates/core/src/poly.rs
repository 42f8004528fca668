//! Polynomials in `(x, y, t)` and functions of the form `P exp(-E)` with `E`
//! quadratic.
//!
//! The invariant fields map this family to itself, so derivatives of such
//! functions are exact. Pairings are evaluated with [`crate::gauss`].

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::fmath;
use crate::group::{FieldId, GroupPoint};

/// Exponents `(a, b, c)` of the monomial `x^a y^b t^c`.
pub type Mono = (u16, u16, u16);

/// Sparse polynomial, terms sorted by monomial, no zero coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly3 {
    terms: Vec<(Mono, f64)>,
    max_deg: [u16; 3],
}

impl Poly3 {
    pub fn zero() -> Self {
        Poly3::default()
    }

    pub fn constant(c: f64) -> Self {
        Poly3::from_terms([((0, 0, 0), c)])
    }

    pub fn monomial(m: Mono, c: f64) -> Self {
        Poly3::from_terms([(m, c)])
    }

    pub fn x() -> Self {
        Poly3::monomial((1, 0, 0), 1.0)
    }

    pub fn y() -> Self {
        Poly3::monomial((0, 1, 0), 1.0)
    }

    pub fn t() -> Self {
        Poly3::monomial((0, 0, 1), 1.0)
    }

    /// Affine form `c0 + cx x + cy y + ct t`.
    pub fn affine(c0: f64, cx: f64, cy: f64, ct: f64) -> Self {
        Poly3::from_terms([((0, 0, 0), c0), ((1, 0, 0), cx), ((0, 1, 0), cy), ((0, 0, 1), ct)])
    }

    pub fn from_terms<I: IntoIterator<Item = (Mono, f64)>>(it: I) -> Self {
        let mut map: BTreeMap<Mono, f64> = BTreeMap::new();
        for (m, c) in it {
            *map.entry(m).or_insert(0.0) += c;
        }
        Poly3::from_map(map)
    }

    fn from_map(map: BTreeMap<Mono, f64>) -> Self {
        let terms: Vec<(Mono, f64)> = map.into_iter().filter(|&(_, c)| c != 0.0).collect();
        let mut max_deg = [0u16; 3];
        for &((a, b, c), _) in &terms {
            max_deg[0] = max_deg[0].max(a);
            max_deg[1] = max_deg[1].max(b);
            max_deg[2] = max_deg[2].max(c);
        }
        Poly3 { terms, max_deg }
    }

    pub fn terms(&self) -> &[(Mono, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: Mono) -> f64 {
        match self.terms.binary_search_by(|(k, _)| k.cmp(&m)) {
            Ok(i) => self.terms[i].1,
            Err(_) => 0.0,
        }
    }

    /// Total degree `a + b + c`.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|&((a, b, c), _)| (a + b + c) as u32).max().unwrap_or(0)
    }

    /// Homogeneous degree `a + b + 2c`.
    pub fn hom_degree(&self) -> u32 {
        self.terms.iter().map(|&((a, b, c), _)| (a + b + 2 * c) as u32).max().unwrap_or(0)
    }

    pub fn eval(&self, p: GroupPoint) -> f64 {
        if self.terms.is_empty() {
            return 0.0;
        }
        const CAP: usize = 48;
        let md = self.max_deg;
        if md.iter().all(|&d| (d as usize) < CAP) {
            let mut px = [1.0f64; CAP];
            let mut py = [1.0f64; CAP];
            let mut pt = [1.0f64; CAP];
            for i in 1..=md[0] as usize {
                px[i] = px[i - 1] * p.x;
            }
            for i in 1..=md[1] as usize {
                py[i] = py[i - 1] * p.y;
            }
            for i in 1..=md[2] as usize {
                pt[i] = pt[i - 1] * p.t;
            }
            let mut s = 0.0;
            for &((a, b, c), k) in &self.terms {
                s += k * px[a as usize] * py[b as usize] * pt[c as usize];
            }
            s
        } else {
            self.terms
                .iter()
                .map(|&((a, b, c), k)| {
                    k * fmath::powi(p.x, a as i32) * fmath::powi(p.y, b as i32) * fmath::powi(p.t, c as i32)
                })
                .sum()
        }
    }

    pub fn add(&self, o: &Poly3) -> Poly3 {
        Poly3::from_terms(self.terms.iter().chain(o.terms.iter()).copied())
    }

    pub fn sub(&self, o: &Poly3) -> Poly3 {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Poly3 {
        Poly3::from_terms(self.terms.iter().map(|&(m, c)| (m, c * s)))
    }

    pub fn mul(&self, o: &Poly3) -> Poly3 {
        let mut map: BTreeMap<Mono, f64> = BTreeMap::new();
        for &((a, b, c), k) in &self.terms {
            for &((d, e, f), l) in &o.terms {
                *map.entry((a + d, b + e, c + f)).or_insert(0.0) += k * l;
            }
        }
        Poly3::from_map(map)
    }

    pub fn powu(&self, n: u32) -> Poly3 {
        let mut r = Poly3::constant(1.0);
        for _ in 0..n {
            r = r.mul(self);
        }
        r
    }

    /// Partial derivative along coordinate `axis` (0: x, 1: y, 2: t).
    pub fn partial(&self, axis: usize) -> Poly3 {
        Poly3::from_terms(self.terms.iter().filter_map(|&((a, b, c), k)| match axis {
            0 if a > 0 => Some(((a - 1, b, c), k * a as f64)),
            1 if b > 0 => Some(((a, b - 1, c), k * b as f64)),
            2 if c > 0 => Some(((a, b, c - 1), k * c as f64)),
            _ => None,
        }))
    }

    /// The invariant field `id` applied to the polynomial.
    pub fn apply_field(&self, id: FieldId) -> Poly3 {
        let dt = self.partial(2);
        match id {
            FieldId::XL => self.partial(0).add(&dt.mul(&Poly3::y()).scale(2.0)),
            FieldId::YL => self.partial(1).add(&dt.mul(&Poly3::x()).scale(-2.0)),
            FieldId::XR => self.partial(0).add(&dt.mul(&Poly3::y()).scale(-2.0)),
            FieldId::YR => self.partial(1).add(&dt.mul(&Poly3::x()).scale(2.0)),
            FieldId::T => dt,
        }
    }

    /// `u -> P(r u_x, r u_y, r^2 u_t)`.
    pub fn dilate(&self, r: f64) -> Poly3 {
        Poly3::from_terms(
            self.terms
                .iter()
                .map(|&((a, b, c), k)| ((a, b, c), k * fmath::powi(r, (a + b + 2 * c) as i32))),
        )
    }

    /// Composition with an affine change of variables: `u -> P(M u + v)` where
    /// row `i` of `m` gives coordinate `i`.
    pub fn compose_affine(&self, m: [[f64; 3]; 3], v: [f64; 3]) -> Poly3 {
        let lin: [Poly3; 3] =
            core::array::from_fn(|i| Poly3::affine(v[i], m[i][0], m[i][1], m[i][2]));
        let mut pows: [Vec<Poly3>; 3] = Default::default();
        for i in 0..3 {
            pows[i].push(Poly3::constant(1.0));
            for d in 1..=self.max_deg[i] as usize {
                let next = pows[i][d - 1].mul(&lin[i]);
                pows[i].push(next);
            }
        }
        let mut acc = Poly3::zero();
        for &((a, b, c), k) in &self.terms {
            let term = pows[0][a as usize].mul(&pows[1][b as usize]).mul(&pows[2][c as usize]);
            acc = acc.add(&term.scale(k));
        }
        acc
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, &(_, c)| m.max(c.abs()))
    }
}

/// The quadratic form `E(u) = u^T A u + b.u + c` read off a polynomial of
/// degree at most 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadratic {
    pub a: [[f64; 3]; 3],
    pub b: [f64; 3],
    pub c: f64,
}

impl Quadratic {
    pub fn from_poly(p: &Poly3) -> Option<Quadratic> {
        if p.degree() > 2 {
            return None;
        }
        let k = |m| p.coeff(m);
        let a = [
            [k((2, 0, 0)), 0.5 * k((1, 1, 0)), 0.5 * k((1, 0, 1))],
            [0.5 * k((1, 1, 0)), k((0, 2, 0)), 0.5 * k((0, 1, 1))],
            [0.5 * k((1, 0, 1)), 0.5 * k((0, 1, 1)), k((0, 0, 2))],
        ];
        Some(Quadratic { a, b: [k((1, 0, 0)), k((0, 1, 0)), k((0, 0, 1))], c: k((0, 0, 0)) })
    }

    /// Minimiser `mu = -A^{-1} b / 2` and minimum value, if `A` is positive definite.
    pub fn minimum(&self) -> Option<([f64; 3], f64)> {
        let l = crate::gauss::cholesky3(self.a)?;
        let half_b = [-0.5 * self.b[0], -0.5 * self.b[1], -0.5 * self.b[2]];
        let mu = crate::gauss::chol_solve(&l, half_b);
        let val = self.c + 0.5 * (self.b[0] * mu[0] + self.b[1] * mu[1] + self.b[2] * mu[2]);
        Some((mu, val))
    }
}

/// `P(u) exp(-E(u))` with `E` quadratic and positive definite.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyExp {
    pub poly: Poly3,
    pub expo: Poly3,
}

impl PolyExp {
    pub fn new(poly: Poly3, expo: Poly3) -> Self {
        PolyExp { poly, expo }
    }

    /// `amp exp(-(x^2 + y^2)/w^2 - t^2/w^4)`.
    pub fn gaussian(w: f64, amp: f64) -> Self {
        let w2 = w * w;
        let expo = Poly3::from_terms([
            ((2, 0, 0), 1.0 / w2),
            ((0, 2, 0), 1.0 / w2),
            ((0, 0, 2), 1.0 / (w2 * w2)),
        ]);
        PolyExp { poly: Poly3::constant(amp), expo }
    }

    pub fn eval(&self, p: GroupPoint) -> f64 {
        if self.poly.is_zero() {
            return 0.0;
        }
        self.poly.eval(p) * fmath::exp(-self.expo.eval(p))
    }

    pub fn apply_field(&self, id: FieldId) -> PolyExp {
        let dp = self.poly.apply_field(id);
        let de = self.expo.apply_field(id);
        PolyExp { poly: dp.sub(&self.poly.mul(&de)), expo: self.expo.clone() }
    }

    /// Applies `ids` right to left, as the operator `ids[0] ids[1] ... ids[n-1]`.
    pub fn apply_word(&self, ids: &[FieldId]) -> PolyExp {
        let mut f = self.clone();
        for &id in ids.iter().rev() {
            f = f.apply_field(id);
        }
        f
    }

    pub fn scale(&self, s: f64) -> PolyExp {
        PolyExp { poly: self.poly.scale(s), expo: self.expo.clone() }
    }

    /// `r^4 f(r u)`.
    pub fn dilate(&self, r: f64) -> PolyExp {
        PolyExp { poly: self.poly.dilate(r).scale(fmath::powi(r, 4)), expo: self.expo.dilate(r) }
    }

    pub fn quadratic(&self) -> Quadratic {
        Quadratic::from_poly(&self.expo).expect("exponent of degree <= 2")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::apply_field_total;

    #[test]
    fn field_matches_finite_difference() {
        let g = PolyExp::gaussian(0.7, 1.0).apply_word(&[FieldId::XL, FieldId::YR]);
        let p = GroupPoint::new(0.3, -0.2, 0.1);
        for id in FieldId::ALL {
            let exact = g.apply_field(id).eval(p);
            let fd = apply_field_total(id, |q| g.eval(q), p, 1e-5);
            assert!((exact - fd).abs() < 1e-6 * (1.0 + exact.abs()), "{id:?} {exact} {fd}");
        }
    }

    #[test]
    fn commutator_of_left_fields() {
        let g = PolyExp::gaussian(1.0, 1.0);
        let p = GroupPoint::new(0.4, 0.1, -0.3);
        let xy = g.apply_word(&[FieldId::XL, FieldId::YL]).eval(p);
        let yx = g.apply_word(&[FieldId::YL, FieldId::XL]).eval(p);
        let t = g.apply_field(FieldId::T).eval(p);
        assert!((xy - yx + 4.0 * t).abs() < 1e-12);
    }

    #[test]
    fn dilation_and_affine() {
        let p = Poly3::from_terms([((1, 0, 1), 2.0), ((0, 2, 0), -1.0), ((0, 0, 0), 0.5)]);
        let u = GroupPoint::new(0.3, 1.1, -0.7);
        let r = 1.7;
        let d = p.dilate(r).eval(u);
        assert!((d - p.eval(GroupPoint::new(r * u.x, r * u.y, r * r * u.t))).abs() < 1e-12);
        let m = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [2.0, -1.0, 1.0]];
        let v = [0.5, 0.0, -0.25];
        let c = p.compose_affine(m, v).eval(u);
        let mu = GroupPoint::new(u.x + 0.5, u.y, 2.0 * u.x - u.y + u.t - 0.25);
        assert!((c - p.eval(mu)).abs() < 1e-12);
    }

    #[test]
    fn quadratic_minimum() {
        let e = Poly3::from_terms([((2, 0, 0), 1.0), ((1, 0, 0), -2.0), ((0, 2, 0), 2.0), ((0, 0, 2), 1.0)]);
        let (mu, v) = Quadratic::from_poly(&e).unwrap().minimum().unwrap();
        assert!((mu[0] - 1.0).abs() < 1e-14 && mu[1].abs() < 1e-14 && mu[2].abs() < 1e-14);
        assert!((v + 1.0).abs() < 1e-14);
    }
}
