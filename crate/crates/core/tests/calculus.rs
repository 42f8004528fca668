use carnot_core::calculus::{
    dilate_profile, gaussian_box, integrate, make_vanishing_moment, moments, op_left, op_right, op_two_sided,
    partition_annuli, sample, smooth_gauge, transfer_E, GridFunction, GridSpec, TwoSidedKernel,
};
use carnot_core::gauss::{conv_point, GhTable};
use carnot_core::group::GroupPoint;
use carnot_core::metric::MetricParams;
use carnot_core::poly::{Poly3, PolyExp};
use carnot_core::stats;
use proptest::prelude::*;

const PI32: f64 = 5.568_327_996_831_708; // pi^{3/2}

/// `u -> f(a^{-1} u)`; the map is affine in exponential coordinates.
fn translate_left(f: &PolyExp, a: GroupPoint) -> PolyExp {
    let m = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-2.0 * a.y, 2.0 * a.x, 1.0]];
    let v = [-a.x, -a.y, -a.t];
    PolyExp { poly: f.poly.compose_affine(m, v), expo: f.expo.compose_affine(m, v) }
}

fn with_poly(g: &PolyExp, p: Poly3) -> PolyExp {
    PolyExp { poly: p, expo: g.expo.clone() }
}

fn eval_points(n: usize, a: f64) -> Vec<GroupPoint> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let c = |i: usize| -a + 2.0 * a * (i as f64 + 0.5) / n as f64;
                out.push(GroupPoint::new(c(i), c(j), c(k)));
            }
        }
    }
    out
}

#[test]
fn unit_gaussian_has_unit_mass() {
    let g = make_vanishing_moment(1.0, 0, 0).unwrap();
    let spec = GridSpec::of_box(&gaussian_box(1.0), 64).unwrap();
    let m = integrate(&sample(|u| g.eval(u), &spec).unwrap());
    assert!((m - 1.0).abs() < 1e-4, "{m}");
}

#[test]
fn box_indicator_integrates_to_its_volume() {
    let spec = GridSpec::centered(2.0, 2.0, 8).unwrap();
    let ind = |u: GroupPoint| if u.x.abs() < 1.0 && u.y.abs() < 1.0 && u.t.abs() < 1.0 { 1.0 } else { 0.0 };
    assert_eq!(integrate(&sample(ind, &spec).unwrap()), 8.0);
}

#[test]
fn dilation_preserves_the_integral() {
    let g = make_vanishing_moment(1.0, 0, 0).unwrap();
    for r in [0.5, 2.0] {
        let d = dilate_profile(&g, r).unwrap();
        let spec = GridSpec::of_box(&d.support(), 48).unwrap();
        let m = integrate(&sample(|u| d.eval(u), &spec).unwrap());
        assert!((m - 1.0).abs() < 1e-3, "r = {r}: {m}");
    }
}

#[test]
fn first_order_profile_has_zero_integral() {
    for seed in 0..4 {
        let phi = make_vanishing_moment(1.0, 1, seed).unwrap();
        let m = moments(&phi, 0, 48).unwrap();
        assert!(m[0].value.abs() <= 1e-8, "seed {seed}: {}", m[0].value);
    }
}

#[test]
fn grid_operators_are_linear() {
    let spec = GridSpec::centered(2.0, 2.0, 8).unwrap();
    let f = sample(|u| (-(u.x * u.x + u.y * u.y) - 0.5 * u.t * u.t).exp(), &spec).unwrap();
    let g = sample(|u| u.x * (-(u.x * u.x + u.y * u.y) - u.t * u.t).exp(), &spec).unwrap();
    let k = make_vanishing_moment(0.7, 0, 0).unwrap();
    let (a, b) = (1.5, -0.25);
    let comb = f.scale(a).add(&g.scale(b)).unwrap();
    for op in [op_left, op_right] {
        let lhs = op(&k, &comb);
        let rhs = op(&k, &f).scale(a).add(&op(&k, &g).scale(b)).unwrap();
        let err = lhs.sub(&rhs).unwrap().max_abs();
        assert!(err <= 1e-12 * (1.0 + rhs.max_abs()), "{err}");
    }
}

#[test]
fn two_sided_operator_components_commute() {
    // Op_L and Op_R commute exactly in the continuum; on the grid the
    // commutator is discretisation error and shrinks under refinement
    let k1 = make_vanishing_moment(0.6, 0, 0).unwrap();
    let k2 = make_vanishing_moment(0.6, 1, 3).unwrap();
    let mut prev = f64::INFINITY;
    for n in [10, 15, 20] {
        let spec = GridSpec::centered(2.5, 3.0, n).unwrap();
        let f = sample(|u| (-2.0 * (u.x * u.x + u.y * u.y) - 4.0 * u.t * u.t).exp(), &spec).unwrap();
        let lr = op_two_sided(&TwoSidedKernel::Tensor(vec![(k1.clone(), k2.clone())]), &f).unwrap();
        assert_eq!(lr, op_left(&k1, &op_right(&k2, &f)));
        let rl = op_right(&k2, &op_left(&k1, &f));
        let rel = lr.sub(&rl).unwrap().l2() / lr.l2();
        assert!(rel < prev, "n = {n}: {rel} >= {prev}");
        prev = rel;
    }
    assert!(prev < 0.01, "{prev}");
}

#[test]
fn group_convolution_is_not_commutative() {
    let tab = GhTable::new(16);
    let g = PolyExp::gaussian(1.0, 1.0);
    let f = with_poly(&g, Poly3::x());
    let h = with_poly(&PolyExp::gaussian(0.7, 1.0), Poly3::y());
    let x = GroupPoint::new(0.4, -0.3, 0.8);
    let a = conv_point(&tab, &f, &h, x).unwrap();
    let b = conv_point(&tab, &h, &f, x).unwrap();
    assert!((a - b).abs() > 1e-3 * (a.abs() + b.abs()), "{a} {b}");
}

#[test]
fn approximate_identity_error_decreases() {
    let tab = GhTable::new(16);
    let f = PolyExp::gaussian(1.0, 1.0);
    let pts = eval_points(6, 2.0);
    let mut prev = f64::INFINITY;
    for r in [1.0f64, 2.0, 4.0] {
        let phi = PolyExp::gaussian(1.0 / r, r.powi(4) / PI32);
        let err: f64 = pts.iter().map(|&x| (conv_point(&tab, &f, &phi, x).unwrap() - f.eval(x)).powi(2)).sum();
        assert!(err < prev, "r = {r}: {err} >= {prev}");
        prev = err;
    }
}

#[test]
fn transfer_at_identity_returns_f() {
    let spec = GridSpec::centered(2.0, 2.0, 8).unwrap();
    let f = sample(|u| u.x - 2.0 * u.y + 0.5 * u.t, &spec).unwrap();
    let e = transfer_E(&f);
    let c = GridFunction::new(spec, vec![3.0; spec.len()]).unwrap();
    let ec = transfer_E(&c);
    let mut rng = stats::rng(4, 0);
    for _ in 0..100 {
        let x = stats::uniform_point(&mut rng, 1.9, 1.9);
        let v = e.eval(x, GroupPoint::IDENTITY);
        assert!((v - (x.x - 2.0 * x.y + 0.5 * x.t)).abs() < 1e-12, "{v}");
        let y = stats::uniform_point(&mut rng, 0.2, 0.2);
        if spec.contains(y.inverse() * x) {
            assert!((ec.eval(x, y) - 3.0).abs() < 1e-12);
        }
    }
}

#[test]
fn annuli_sum_to_one_inside_the_last_radius() {
    let c = GroupPoint::new(1.0, -0.5, 0.25);
    let mp = MetricParams::left(0.5);
    let (base, count) = (0.25, 6);
    let parts = partition_annuli(c, mp, base, count).unwrap();
    let last = base * 2f64.powi(count as i32 - 1);
    let mut rng = stats::rng(6, 0);
    let mut checked = 0;
    for _ in 0..2000 {
        let p = c * stats::uniform_point(&mut rng, 8.0, 40.0);
        if smooth_gauge(mp, c, p) > last {
            continue;
        }
        checked += 1;
        let s: f64 = parts.iter().map(|q| q.eval(p)).sum();
        assert!((s - 1.0).abs() <= 1e-10, "{s}");
    }
    assert!(checked > 100);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn left_convolution_commutes_with_left_translation(
        ax in -1.0..1.0f64, ay in -1.0..1.0f64, at in -1.0..1.0f64,
        x in -1.5..1.5f64, y in -1.5..1.5f64, t in -1.5..1.5f64,
    ) {
        let tab = GhTable::new(16);
        let f = with_poly(&PolyExp::gaussian(1.0, 1.0), Poly3::affine(0.5, 1.0, -0.5, 0.25));
        let k = with_poly(&PolyExp::gaussian(0.6, 1.0), Poly3::x());
        let a = GroupPoint::new(ax, ay, at);
        let p = GroupPoint::new(x, y, t);
        // ((tau_a f) * k)(p) = (f * k)(a^{-1} p)
        let lhs = conv_point(&tab, &translate_left(&f, a), &k, p).unwrap();
        let rhs = conv_point(&tab, &f, &k, a.inverse() * p).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()), "{} {}", lhs, rhs);
    }
}
