//! Small statistics and sampling helpers used by the checks.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::fmath;
use crate::group::GroupPoint;

/// Deterministic generator for a check seed and a stream index.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Uniform point in `[-a, a]^2 x [-b, b]`.
pub fn uniform_point<R: Rng>(r: &mut R, a: f64, b: f64) -> GroupPoint {
    GroupPoint::new(r.gen_range(-a..=a), r.gen_range(-a..=a), r.gen_range(-b..=b))
}

/// `exp` of a uniform draw on `[ln lo, ln hi]`.
pub fn log_uniform<R: Rng>(r: &mut R, lo: f64, hi: f64) -> f64 {
    fmath::exp(r.gen_range(fmath::ln(lo)..=fmath::ln(hi)))
}

/// Point with homogeneous norm log-uniform in `[lo, hi]` and uniformly drawn
/// direction on the unit sphere `|z|^4 + t^2 = 1`.
pub fn log_uniform_point<R: Rng>(r: &mut R, lo: f64, hi: f64) -> GroupPoint {
    let n = log_uniform(r, lo, hi);
    let th = r.gen_range(0.0..core::f64::consts::TAU);
    let t = r.gen_range(-1.0..=1.0f64);
    let z = fmath::root4(1.0 - t * t);
    GroupPoint::new(n * z * fmath::cos(th), n * z * fmath::sin(th), n * n * t)
}

/// Least-squares line `y = a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}

/// Least squares for `y = c0 + c1 u + c2 v`; returns `[c0, c1, c2]`.
pub fn plane_fit(u: &[f64], v: &[f64], y: &[f64]) -> [f64; 3] {
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for i in 0..y.len() {
        let row = [1.0, u[i], v[i]];
        for a in 0..3 {
            for b in 0..3 {
                m[a][b] += row[a] * row[b];
            }
            rhs[a] += row[a] * y[i];
        }
    }
    solve3(m, rhs)
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap_or(c);
        m.swap(c, p);
        b.swap(c, p);
        let d = m[c][c];
        if d == 0.0 {
            continue;
        }
        for r in c + 1..3 {
            let f = m[r][c] / d;
            for k in c..3 {
                m[r][k] -= f * m[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let mut s = b[r];
        for k in r + 1..3 {
            s -= m[r][k] * x[k];
        }
        x[r] = if m[r][r] != 0.0 { s / m[r][r] } else { 0.0 };
    }
    x
}

pub fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Sorted copy.
pub fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_recover_coefficients() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (a, b) = linear_fit(&x, &y);
        assert!((a - 2.0).abs() < 1e-12 && (b + 0.5).abs() < 1e-12);
        let u = [0.0, 1.0, 0.0, 2.0, 1.0];
        let v = [0.0, 0.0, 1.0, 1.0, 3.0];
        let y: Vec<f64> = (0..5).map(|i| 1.0 + 2.0 * u[i] - 3.0 * v[i]).collect();
        let c = plane_fit(&u, &v, &y);
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] - 2.0).abs() < 1e-12 && (c[2] + 3.0).abs() < 1e-12);
    }
}
