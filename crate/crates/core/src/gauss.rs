//! Gauss-Hermite quadrature and 3x3 Cholesky helpers.

use alloc::vec::Vec;

use crate::fmath;
use crate::group::GroupPoint;
use crate::poly::{PolyExp, Quadratic};

/// Lower-triangular Cholesky factor of a symmetric 3x3 matrix.
pub fn cholesky3(a: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i][i] = fmath::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solves `L L^T x = b`.
pub fn chol_solve(l: &[[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let mut y = [0.0; 3];
    for i in 0..3 {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let mut s = y[i];
        for k in i + 1..3 {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Solves `L^T x = b`.
fn lt_solve(l: &[[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let mut s = b[i];
        for k in i + 1..3 {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Nodes and weights for `int f(s) exp(-s^2) ds`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Rule with `n` points, exact for polynomials of degree `< 2n`.
    pub fn new(n: usize) -> Self {
        assert!((1..=64).contains(&n), "unsupported Gauss-Hermite order {n}");
        let pim4 = 0.751_125_544_464_942_5; // pi^{-1/4}
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0;
        for i in 0..m {
            z = match i {
                0 => fmath::sqrt(2.0 * nf + 1.0) - 1.85575 * fmath::pow(2.0 * nf + 1.0, -1.0 / 6.0),
                1 => z - 1.14 * fmath::pow(nf, 0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * fmath::sqrt(2.0 / (jf + 1.0)) * p2 - fmath::sqrt(jf / (jf + 1.0)) * p3;
                }
                pp = fmath::sqrt(2.0 * nf) * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * (1.0 + z.abs()) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        GaussHermite { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// A Gaussian weight `exp(-E(u))` prepared for tensor Gauss-Hermite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianFrame {
    pub mu: [f64; 3],
    /// Cholesky factor of the quadratic part.
    pub l: [[f64; 3]; 3],
    /// `exp(-min E) / det L`
    pub scale: f64,
    /// `min E`
    pub min: f64,
}

impl GaussianFrame {
    pub fn new(q: &Quadratic) -> Option<Self> {
        let l = cholesky3(q.a)?;
        let (mu, min) = q.minimum()?;
        let det = l[0][0] * l[1][1] * l[2][2];
        Some(GaussianFrame { mu, l, scale: fmath::exp(-min) / det, min })
    }

    /// Point `mu + L^{-T} s`.
    pub fn map(&self, s: [f64; 3]) -> GroupPoint {
        let d = lt_solve(&self.l, s);
        GroupPoint::new(self.mu[0] + d[0], self.mu[1] + d[1], self.mu[2] + d[2])
    }

    /// Standard deviations along the coordinate axes, `sqrt(diag(A^{-1}) / 2)`.
    pub fn axis_widths(&self) -> [f64; 3] {
        let mut w = [0.0; 3];
        for i in 0..3 {
            let mut e = [0.0; 3];
            e[i] = 1.0;
            let col = chol_solve(&self.l, e);
            w[i] = fmath::sqrt(0.5 * col[i]);
        }
        w
    }

    /// `int f(u) exp(-E(u)) du` by the tensor rule.
    pub fn integrate<F: FnMut(GroupPoint) -> f64>(&self, gh: &GaussHermite, mut f: F) -> f64 {
        let mut total = 0.0;
        for (i, &si) in gh.nodes.iter().enumerate() {
            let mut acc_i = 0.0;
            for (j, &sj) in gh.nodes.iter().enumerate() {
                let mut acc_j = 0.0;
                for (k, &sk) in gh.nodes.iter().enumerate() {
                    acc_j += gh.weights[k] * f(self.map([si, sj, sk]));
                }
                acc_i += gh.weights[j] * acc_j;
            }
            total += gh.weights[i] * acc_i;
        }
        total * self.scale
    }

    /// All nodes and combined weights (including `scale`), in a fixed order.
    pub fn nodes(&self, gh: &GaussHermite) -> Vec<(GroupPoint, f64)> {
        let mut out = Vec::with_capacity(gh.len().pow(3));
        for (i, &si) in gh.nodes.iter().enumerate() {
            for (j, &sj) in gh.nodes.iter().enumerate() {
                for (k, &sk) in gh.nodes.iter().enumerate() {
                    let w = gh.weights[i] * gh.weights[j] * gh.weights[k] * self.scale;
                    out.push((self.map([si, sj, sk]), w));
                }
            }
        }
        out
    }
}

impl Quadratic {
    /// `s -> E(M s + v)`.
    pub fn compose_affine(&self, m: &[[f64; 3]; 3], v: [f64; 3]) -> Quadratic {
        let mut am = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                am[i][j] = (0..3).map(|k| self.a[i][k] * m[k][j]).sum();
            }
        }
        let mut a = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = (0..3).map(|k| m[k][i] * am[k][j]).sum();
            }
        }
        let av: [f64; 3] = core::array::from_fn(|i| (0..3).map(|k| self.a[i][k] * v[k]).sum());
        let b = core::array::from_fn(|j| (0..3).map(|k| m[k][j] * (2.0 * av[k] + self.b[k])).sum());
        let c = self.c + (0..3).map(|k| v[k] * (av[k] + self.b[k])).sum::<f64>();
        Quadratic { a, b, c }
    }

    pub fn add(&self, o: &Quadratic) -> Quadratic {
        Quadratic {
            a: core::array::from_fn(|i| core::array::from_fn(|j| self.a[i][j] + o.a[i][j])),
            b: core::array::from_fn(|i| self.b[i] + o.b[i]),
            c: self.c + o.c,
        }
    }

    /// Determinant of the quadratic part; larger means a narrower Gaussian.
    pub fn det(&self) -> f64 {
        let a = &self.a;
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    }
}

/// Gauss-Hermite rules of every order up to a cap, built once.
#[derive(Clone, Debug)]
pub struct GhTable {
    rules: Vec<GaussHermite>,
}

impl GhTable {
    pub fn new(max_n: usize) -> Self {
        GhTable { rules: (1..=max_n).map(GaussHermite::new).collect() }
    }

    pub fn max_n(&self) -> usize {
        self.rules.len()
    }

    /// Rule of order `n`, clamped to `1..=max_n`.
    pub fn get(&self, n: usize) -> &GaussHermite {
        &self.rules[n.clamp(1, self.rules.len()) - 1]
    }
}

/// Error from the Gaussian product integrals.
#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum GaussError {
    #[error("combined exponent is not positive definite")]
    NotDefinite,
    #[error("integrand of degree {0} exceeds the quadrature table")]
    DegreeTooHigh(u32),
}

/// `int f(s) g(M s + v) ds`, exact up to rounding: the combined exponent is
/// quadratic and the rule is chosen to integrate the polynomial part exactly.
pub fn integrate_affine_product(
    tab: &GhTable,
    f: &PolyExp,
    g: &PolyExp,
    m: &[[f64; 3]; 3],
    v: [f64; 3],
) -> Result<f64, GaussError> {
    if f.poly.is_zero() || g.poly.is_zero() {
        return Ok(0.0);
    }
    let q = f.quadratic().add(&g.quadratic().compose_affine(m, v));
    let deg = f.poly.degree() + g.poly.degree();
    let n = deg as usize / 2 + 1;
    if n > tab.max_n() {
        return Err(GaussError::DegreeTooHigh(deg));
    }
    let fr = GaussianFrame::new(&q).ok_or(GaussError::NotDefinite)?;
    Ok(fr.integrate(tab.get(n), |s| {
        let u = GroupPoint::new(
            m[0][0] * s.x + m[0][1] * s.y + m[0][2] * s.t + v[0],
            m[1][0] * s.x + m[1][1] * s.y + m[1][2] * s.t + v[1],
            m[2][0] * s.x + m[2][1] * s.y + m[2][2] * s.t + v[2],
        );
        f.poly.eval(s) * g.poly.eval(u)
    }))
}

pub const IDENTITY3: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// `int f g`, exact.
pub fn pair_exact(tab: &GhTable, f: &PolyExp, g: &PolyExp) -> Result<f64, GaussError> {
    integrate_affine_product(tab, f, g, &IDENTITY3, [0.0; 3])
}

/// `(f * g)(x) = int f(y) g(y^{-1} x) dy`, exact.
pub fn conv_point(tab: &GhTable, f: &PolyExp, g: &PolyExp, x: GroupPoint) -> Result<f64, GaussError> {
    // y^{-1} x = (x_z - y_z, x_t - y_t - 2 y_y x_x + 2 y_x x_y)
    let m = [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [2.0 * x.y, -2.0 * x.x, -1.0]];
    integrate_affine_product(tab, f, g, &m, [x.x, x.y, x.t])
}

/// `int f(x) g(y^{-1} x) dx`, exact.
pub fn corr_point(tab: &GhTable, f: &PolyExp, g: &PolyExp, y: GroupPoint) -> Result<f64, GaussError> {
    let m = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-2.0 * y.y, 2.0 * y.x, 1.0]];
    integrate_affine_product(tab, f, g, &m, [-y.x, -y.y, -y.t])
}

/// `int psi(w) phi(y^{-1} w^{-1} x) dw`, the kernel of `Op_L(phi) Op_R(psi)` at
/// `(x, y)`, exact.
pub fn tensor_point(tab: &GhTable, psi: &PolyExp, phi: &PolyExp, x: GroupPoint, y: GroupPoint) -> Result<f64, GaussError> {
    // w -> w^{-1} x, then p -> y^{-1} p
    let m1 = [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [2.0 * x.y, -2.0 * x.x, -1.0]];
    let m2 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-2.0 * y.y, 2.0 * y.x, 1.0]];
    let v1 = [x.x, x.y, x.t];
    let mut m = [[0.0; 3]; 3];
    let mut v = [-y.x, -y.y, -y.t];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..3).map(|k| m2[i][k] * m1[k][j]).sum();
            v[i] += m2[i][j] * v1[j];
        }
    }
    integrate_affine_product(tab, psi, phi, &m, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly3;

    #[test]
    fn hermite_moments() {
        // int s^{2k} e^{-s^2} = Gamma(k + 1/2)
        let gh = GaussHermite::new(8);
        let sqrt_pi = 1.772_453_850_905_516;
        let exact = [sqrt_pi, 0.5 * sqrt_pi, 0.75 * sqrt_pi, 1.875 * sqrt_pi];
        for (k, e) in exact.iter().enumerate() {
            let v: f64 = gh.nodes.iter().zip(&gh.weights).map(|(s, w)| w * s.powi(2 * k as i32)).sum();
            assert!((v - e).abs() < 1e-13, "{k}: {v} {e}");
        }
    }

    #[test]
    fn gaussian_mass() {
        let g = PolyExp::gaussian(0.5, 1.0);
        let fr = GaussianFrame::new(&g.quadratic()).unwrap();
        let v = fr.integrate(&GaussHermite::new(4), |_| 1.0);
        let exact = 1.772_453_850_905_516f64.powi(3) * 0.5f64.powi(4);
        assert!((v - exact).abs() < 1e-13 * exact);
    }

    #[test]
    fn sheared_gaussian_moment() {
        // exp(-((x-1)^2 + y^2 + (t - x)^2)): mean of t is 1
        let e = Poly3::from_terms([
            ((2, 0, 0), 2.0),
            ((1, 0, 0), -2.0),
            ((0, 0, 0), 1.0),
            ((0, 2, 0), 1.0),
            ((0, 0, 2), 1.0),
            ((1, 0, 1), -2.0),
        ]);
        let fr = GaussianFrame::new(&crate::poly::Quadratic::from_poly(&e).unwrap()).unwrap();
        let gh = GaussHermite::new(6);
        let m0 = fr.integrate(&gh, |_| 1.0);
        let m1 = fr.integrate(&gh, |u| u.t);
        assert!((m1 / m0 - 1.0).abs() < 1e-13);
        assert!((m0 - 1.772_453_850_905_516f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn convolution_of_gaussians_has_unit_mass() {
        let tab = GhTable::new(24);
        let mass = 1.772_453_850_905_516f64.powi(3);
        let f = PolyExp::gaussian(1.0, 1.0 / mass);
        let g = PolyExp::gaussian(0.5, 1.0 / (mass * 0.0625));
        let x = GroupPoint::new(0.3, -0.2, 0.4);
        let direct = conv_point(&tab, &f, &g, x).unwrap();
        let h = 0.05;
        let mut acc = 0.0;
        for i in -80..80 {
            for j in -80..80 {
                for k in -120..120 {
                    let y = GroupPoint::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h, (k as f64 + 0.5) * h);
                    acc += f.eval(y) * g.eval(crate::group::left_diff(y, x));
                }
            }
        }
        acc *= h * h * h;
        assert!((direct - acc).abs() < 1e-6 * acc.abs(), "{direct} {acc}");
        let back = corr_point(&tab, &f, &g, x.inverse()).unwrap();
        assert!(back.is_finite());
    }

    #[test]
    fn compose_affine_matches_poly() {
        let g = PolyExp::gaussian(0.7, 1.0);
        let m = [[1.0, 0.5, 0.0], [0.0, 2.0, 0.1], [0.3, -1.0, 1.0]];
        let v = [0.2, -0.4, 1.5];
        let a = g.quadratic().compose_affine(&m, v);
        let b = Quadratic::from_poly(&g.expo.compose_affine(m, v)).unwrap();
        for i in 0..3 {
            assert!((a.b[i] - b.b[i]).abs() < 1e-12);
            for j in 0..3 {
                assert!((a.a[i][j] - b.a[i][j]).abs() < 1e-12);
            }
        }
        assert!((a.c - b.c).abs() < 1e-12);
    }
    #[test]
    fn tensor_point_matches_midpoint() {
        let tab = GhTable::new(24);
        let psi = PolyExp::gaussian(0.8, 1.0);
        let g = PolyExp::gaussian(0.6, 1.0);
        let phi = PolyExp::new(g.poly.mul(&Poly3::affine(0.5, 1.0, -2.0, 0.0)), g.expo.clone());
        let x = GroupPoint::new(0.4, 0.1, -0.3);
        let y = GroupPoint::new(-0.2, 0.3, 0.2);
        let direct = tensor_point(&tab, &psi, &phi, x, y).unwrap();
        let h = 0.05;
        let mut acc = 0.0;
        for i in -80..80 {
            for j in -80..80 {
                for k in -100..100 {
                    let w = GroupPoint::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h, (k as f64 + 0.5) * h);
                    acc += psi.eval(w) * phi.eval(y.inverse() * w.inverse() * x);
                }
            }
        }
        acc *= h * h * h;
        assert!((direct - acc).abs() < 1e-6 * (1.0 + acc.abs()), "{direct} {acc}");
    }
}
