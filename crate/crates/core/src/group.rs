//! The Heisenberg group `H^1` in exponential coordinates `(x, y, t)`.
//!
//! The law is `(z, t)(w, s) = (z + w, t + s + 2 Im(z conj(w)))` with `z = x + iy`,
//! dilations are `r(z, t) = (rz, r^2 t)` and the homogeneous dimension is 4.

use core::fmt;
use core::ops::Mul;

use crate::fmath;

/// Homogeneous dimension of `H^1`.
pub const Q_DIM: u32 = 4;

/// Same as [`Q_DIM`], as a float.
pub const Q: f64 = 4.0;

/// A point of `H^1`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GroupPoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

/// Error returned by [`dilate`] and friends.
#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
#[error("dilation factor must be positive and finite, got {0}")]
pub struct BadDilation(pub f64);

/// Error returned by [`apply_field`] when `f` cannot be evaluated.
#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
#[error("function not defined at ({x}, {y}, {t})")]
pub struct OutsideDomain {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl GroupPoint {
    pub const IDENTITY: GroupPoint = GroupPoint { x: 0.0, y: 0.0, t: 0.0 };

    pub const fn new(x: f64, y: f64, t: f64) -> Self {
        GroupPoint { x, y, t }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        GroupPoint::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.t]
    }

    /// `|z|`, the Euclidean norm of the horizontal part.
    pub fn z_abs(self) -> f64 {
        fmath::hypot(self.x, self.y)
    }

    pub fn inverse(self) -> Self {
        inverse(self)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.t.is_finite()
    }
}

impl Mul for GroupPoint {
    type Output = GroupPoint;
    fn mul(self, rhs: GroupPoint) -> GroupPoint {
        multiply(self, rhs)
    }
}

impl fmt::Display for GroupPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.t)
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for GroupPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for GroupPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        <[f64; 3]>::deserialize(d).map(GroupPoint::from_array)
    }
}

/// `Im(z conj(w))` for `z = p.x + i p.y`, `w = q.x + i q.y`.
#[inline]
pub fn im_z_wbar(p: GroupPoint, q: GroupPoint) -> f64 {
    p.y * q.x - p.x * q.y
}

/// Group product `p q`.
#[inline]
pub fn multiply(p: GroupPoint, q: GroupPoint) -> GroupPoint {
    GroupPoint {
        x: p.x + q.x,
        y: p.y + q.y,
        t: p.t + q.t + 2.0 * im_z_wbar(p, q),
    }
}

#[inline]
pub fn inverse(p: GroupPoint) -> GroupPoint {
    GroupPoint { x: -p.x, y: -p.y, t: -p.t }
}

/// `q^{-1} p`, the left-translated difference used by left-invariant objects.
#[inline]
pub fn left_diff(q: GroupPoint, p: GroupPoint) -> GroupPoint {
    multiply(inverse(q), p)
}

/// `p q^{-1}`, the right-translated difference.
#[inline]
pub fn right_diff(p: GroupPoint, q: GroupPoint) -> GroupPoint {
    multiply(p, inverse(q))
}

/// Dilation `(rx, ry, r^2 t)`; rejects `r <= 0`.
pub fn dilate(r: f64, p: GroupPoint) -> Result<GroupPoint, BadDilation> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(BadDilation(r));
    }
    Ok(dilate_unchecked(r, p))
}

#[inline]
pub(crate) fn dilate_unchecked(r: f64, p: GroupPoint) -> GroupPoint {
    GroupPoint { x: r * p.x, y: r * p.y, t: r * r * p.t }
}

/// `(|z|^4 + t^2)^{1/4}`.
pub fn hom_norm(p: GroupPoint) -> f64 {
    let z2 = p.x * p.x + p.y * p.y;
    fmath::root4(z2 * z2 + p.t * p.t)
}

/// The five invariant fields of `H^1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FieldId {
    XL,
    YL,
    XR,
    YR,
    T,
}

impl FieldId {
    pub const ALL: [FieldId; 5] = [FieldId::XL, FieldId::YL, FieldId::XR, FieldId::YR, FieldId::T];
    pub const LEFT: [FieldId; 2] = [FieldId::XL, FieldId::YL];
    pub const RIGHT: [FieldId; 2] = [FieldId::XR, FieldId::YR];

    /// Formal degree: 2 for `T`, 1 otherwise.
    pub fn degree(self) -> u32 {
        match self {
            FieldId::T => 2,
            _ => 1,
        }
    }

    pub fn is_left(self) -> bool {
        matches!(self, FieldId::XL | FieldId::YL)
    }

    pub fn is_right(self) -> bool {
        matches!(self, FieldId::XR | FieldId::YR)
    }

    /// Coefficients `(a_x, a_y, a_t)` of the field at `p`, i.e. the field is
    /// `a_x d/dx + a_y d/dy + a_t d/dt`.
    ///
    /// | field | a_x | a_y | a_t  |
    /// |-------|-----|-----|------|
    /// | XL    | 1   | 0   | 2y   |
    /// | YL    | 0   | 1   | -2x  |
    /// | XR    | 1   | 0   | -2y  |
    /// | YR    | 0   | 1   | 2x   |
    /// | T     | 0   | 0   | 1    |
    pub fn coefficients(self, p: GroupPoint) -> [f64; 3] {
        match self {
            FieldId::XL => [1.0, 0.0, 2.0 * p.y],
            FieldId::YL => [0.0, 1.0, -2.0 * p.x],
            FieldId::XR => [1.0, 0.0, -2.0 * p.y],
            FieldId::YR => [0.0, 1.0, 2.0 * p.x],
            FieldId::T => [0.0, 0.0, 1.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldId::XL => "XL",
            FieldId::YL => "YL",
            FieldId::XR => "XR",
            FieldId::YR => "YR",
            FieldId::T => "T",
        }
    }
}

/// Default finite-difference step `1e-4 (1 + |p|)`.
pub fn default_step(p: GroupPoint) -> f64 {
    1e-4 * (1.0 + hom_norm(p))
}

/// Centered difference of `f` along the coordinate expression of `id` at `p`.
///
/// `f` returns `None` where it is undefined.
pub fn apply_field<F>(id: FieldId, f: F, p: GroupPoint, h: f64) -> Result<f64, OutsideDomain>
where
    F: Fn(GroupPoint) -> Option<f64>,
{
    let c = id.coefficients(p);
    let plus = GroupPoint::new(p.x + h * c[0], p.y + h * c[1], p.t + h * c[2]);
    let minus = GroupPoint::new(p.x - h * c[0], p.y - h * c[1], p.t - h * c[2]);
    let eval = |q: GroupPoint| f(q).ok_or(OutsideDomain { x: q.x, y: q.y, t: q.t });
    Ok((eval(plus)? - eval(minus)?) / (2.0 * h))
}

/// [`apply_field`] for a total function.
pub fn apply_field_total<F>(id: FieldId, f: F, p: GroupPoint, h: f64) -> f64
where
    F: Fn(GroupPoint) -> f64,
{
    match apply_field(id, |q| Some(f(q)), p, h) {
        Ok(v) => v,
        Err(_) => unreachable!(),
    }
}

/// Exact integral curve of `id` started at `p`, evaluated at time `s`.
pub fn flow(id: FieldId, s: f64, p: GroupPoint) -> GroupPoint {
    let GroupPoint { x, y, t } = p;
    match id {
        FieldId::XL => GroupPoint::new(x + s, y, t + 2.0 * y * s),
        FieldId::YL => GroupPoint::new(x, y + s, t - 2.0 * x * s),
        FieldId::XR => GroupPoint::new(x + s, y, t - 2.0 * y * s),
        FieldId::YR => GroupPoint::new(x, y + s, t + 2.0 * x * s),
        FieldId::T => GroupPoint::new(x, y, t + s),
    }
}

/// Componentwise relative residual `max_i |a_i - b_i| / max(1, |a_i|, |b_i|)`.
pub fn rel_residual(a: GroupPoint, b: GroupPoint) -> f64 {
    let r = |u: f64, v: f64| {
        let s = 1.0f64.max(u.abs()).max(v.abs());
        (u - v).abs() / s
    };
    r(a.x, b.x).max(r(a.y, b.y)).max(r(a.t, b.t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_example() {
        let p = multiply(GroupPoint::new(1.0, 0.0, 0.0), GroupPoint::new(0.0, 1.0, 0.0));
        assert_eq!(p, GroupPoint::new(1.0, 1.0, -2.0));
    }

    #[test]
    fn inverse_example() {
        let p = GroupPoint::new(1.0, 0.0, 5.0);
        assert_eq!(inverse(p), GroupPoint::new(-1.0, 0.0, -5.0));
        assert_eq!(multiply(p, inverse(p)), GroupPoint::IDENTITY);
        assert_eq!(inverse(GroupPoint::IDENTITY), GroupPoint::IDENTITY);
    }

    #[test]
    fn dilation_example() {
        let p = dilate(2.0, GroupPoint::new(1.0, 0.0, 1.0)).unwrap();
        assert_eq!(p, GroupPoint::new(2.0, 0.0, 4.0));
        assert!(dilate(0.0, p).is_err());
        assert!(dilate(-1.0, p).is_err());
    }

    #[test]
    fn norm_examples() {
        assert_eq!(hom_norm(GroupPoint::IDENTITY), 0.0);
        assert_eq!(hom_norm(GroupPoint::new(1.0, 0.0, 0.0)), 1.0);
        assert_eq!(hom_norm(GroupPoint::new(0.0, 0.0, 1.0)), 1.0);
    }

    #[test]
    fn field_on_t() {
        let v = apply_field_total(FieldId::XL, |q| q.t, GroupPoint::new(0.0, 3.0, 0.0), 1e-3);
        assert!((v - 6.0).abs() < 1e-9);
    }

    #[test]
    fn field_outside_domain() {
        let f = |q: GroupPoint| if q.x > 0.0 { Some(q.x) } else { None };
        assert!(apply_field(FieldId::XL, f, GroupPoint::IDENTITY, 1e-3).is_err());
    }

    #[test]
    fn flow_examples() {
        assert_eq!(flow(FieldId::XL, 0.7, GroupPoint::IDENTITY), GroupPoint::new(0.7, 0.0, 0.0));
        let p = flow(FieldId::YL, 0.5, GroupPoint::new(1.0, 0.0, 0.0));
        assert_eq!(p, GroupPoint::new(1.0, 0.5, -1.0));
        let q = GroupPoint::new(0.3, -1.2, 4.0);
        for id in FieldId::ALL {
            assert_eq!(flow(id, 0.0, q), q);
        }
    }
}
