use carnot_core::group::{self, GroupPoint};
use carnot_core::kernels::{bound_B, BoundParams};
use carnot_core::metric::{
    dist_composed, dist_composed_refined, dist_oracle, dist_surrogate, lambda_general, volume, MetricParams,
    MidpointLattice, OracleConfig, Side, WeightedFieldList,
};
use carnot_core::stats;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = GroupPoint> {
    (-4.0..4.0f64, -4.0..4.0f64, -16.0..16.0f64).prop_map(|(x, y, t)| GroupPoint::new(x, y, t))
}

fn side() -> impl Strategy<Value = Side> {
    prop_oneof![Just(Side::Left), Just(Side::Right)]
}

fn mp(side: Side, eps: f64) -> MetricParams {
    MetricParams::new(side, eps).unwrap()
}

#[test]
fn surrogate_unit_examples() {
    let e = GroupPoint::IDENTITY;
    assert_eq!(dist_surrogate(MetricParams::left(0.0), GroupPoint::new(1.0, 0.0, 0.0), e), 1.0);
    assert_eq!(dist_surrogate(MetricParams::left(1.0), GroupPoint::new(0.0, 0.0, 1.0), e), 1.0);
    // vertical offset over a far horizontal position takes the linear branch
    let p = GroupPoint::new(4.0, 0.0, 1.0);
    let q = GroupPoint::new(4.0, 0.0, 0.0);
    assert_eq!(dist_surrogate(MetricParams::left(1.0), p, q), 0.25);
    assert_eq!(dist_surrogate(MetricParams::left(0.0), p, q), 1.0);
}

#[test]
fn volume_at_zero_eps_is_quartic() {
    let x = GroupPoint::new(3.0, -1.0, 2.0);
    for d in [0.125, 1.0, 7.5] {
        assert_eq!(volume(MetricParams::left(0.0), x, d).unwrap(), d * d * d * d);
    }
    assert!(volume(MetricParams::left(0.5), x, 0.0).is_err());
    assert!(volume(MetricParams::left(0.5), x, f64::NAN).is_err());
    assert!(MetricParams::new(Side::Left, 1.5).is_err());
}

#[test]
fn lambda_tracks_the_volume_surrogate() {
    // the XL YL T, XL YL XR and XL YL YR minors give lambda >= V; summing
    // all twenty minors with eps <= 1 gives lambda <= 8 delta^4 + 16 eps |z| delta^3
    let mut rng = stats::rng(5, 0);
    for _ in 0..200 {
        let x = stats::uniform_point(&mut rng, 4.0, 4.0);
        let d = stats::log_uniform(&mut rng, 0.05, 20.0);
        for eps in [0.0, 0.25, 1.0] {
            let lam = lambda_general(&WeightedFieldList::heisenberg_eps(eps), x, d);
            let v = volume(MetricParams::left(eps), x, d).unwrap();
            let r = lam / v;
            assert!((1.0 - 1e-12..=16.0).contains(&r), "eps {eps} x {x:?} d {d}: {r}");
        }
    }
}

#[test]
fn composed_distance_bounds() {
    let lat = |p, q| MidpointLattice::around(p, q, 1.0, 8);
    let rl = |a, b| dist_surrogate(MetricParams::left(1.0), a, b);
    let rr = |a, b| dist_surrogate(MetricParams::right(1.0), a, b);
    let p = GroupPoint::new(0.5, -0.25, 1.0);
    assert_eq!(dist_composed(rl, rr, p, p, &lat(p, p)).unwrap(), 0.0);
    let mut rng = stats::rng(9, 0);
    for _ in 0..30 {
        let p = stats::uniform_point(&mut rng, 2.0, 2.0);
        let q = stats::uniform_point(&mut rng, 2.0, 2.0);
        let l = lat(p, q);
        let c0 = dist_composed(rl, rr, p, q, &l).unwrap();
        assert!(c0 <= rl(p, q).min(rr(p, q)) + 1e-15);
        let mut prev = c0;
        for rounds in 1..=3 {
            let c = dist_composed_refined(rl, rr, p, q, &l, rounds).unwrap();
            assert!(c <= prev, "refinement increased the value");
            prev = c;
        }
    }
}

#[test]
fn oracle_straight_x_path() {
    // the XL flow from e reaches (1, 0, 0) at cost 1; snapping adds at most a few steps
    let cfg = OracleConfig::default();
    let r = dist_oracle(MetricParams::left(1.0), GroupPoint::IDENTITY, GroupPoint::new(1.0, 0.0, 0.0), &cfg).unwrap();
    assert!((0.9..=1.5).contains(&r.value), "{}", r.value);
    let s = dist_oracle(MetricParams::right(1.0), GroupPoint::IDENTITY, GroupPoint::new(1.0, 0.0, 0.0), &cfg).unwrap();
    assert!((0.9..=1.5).contains(&s.value), "{}", s.value);
}

#[test]
fn bound_is_quasi_symmetric() {
    // rho is symmetric and ||z_x| - |z_y|| <= rho <= delta, so the volume
    // ratio is at most 1 + eps <= 2
    let mut rng = stats::rng(21, 0);
    for i in 0..1000 {
        let x = stats::uniform_point(&mut rng, 4.0, 4.0);
        let y = stats::uniform_point(&mut rng, 4.0, 4.0);
        let r_l = stats::log_uniform(&mut rng, 0.125, 8.0);
        let r_r = stats::log_uniform(&mut rng, 0.125, 8.0);
        let bp = BoundParams::new(r_l, r_r, (i % 3) as u32, (i % 2) as u32, (i % 4) as u32).unwrap();
        let r = bound_B(&bp, x, y) / bound_B(&bp, y, x);
        assert!((0.5..=2.0).contains(&r), "{r}");
    }
}

proptest! {
    #[test]
    fn surrogate_is_symmetric(s in side(), eps in 0.0..=1.0f64, p in point(), q in point()) {
        let m = mp(s, eps);
        prop_assert_eq!(dist_surrogate(m, p, q), dist_surrogate(m, q, p));
    }

    #[test]
    fn surrogate_decreases_in_eps(s in side(), e1 in 0.0..=1.0f64, e2 in 0.0..=1.0f64, p in point(), q in point()) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(dist_surrogate(mp(s, hi), p, q) <= dist_surrogate(mp(s, lo), p, q));
    }

    #[test]
    fn surrogate_scales_exactly(s in side(), eps in 0.0..=1.0f64, p in point(), q in point(), r in 0.05..20.0f64) {
        let m = mp(s, eps);
        let lhs = dist_surrogate(m, group::dilate(r, p).unwrap(), group::dilate(r, q).unwrap());
        let rhs = r * dist_surrogate(m, p, q);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
    }

    #[test]
    fn zero_eps_is_translation_invariant(a in point(), p in point(), q in point()) {
        let l = MetricParams::left(0.0);
        let r = MetricParams::right(0.0);
        let dl = dist_surrogate(l, a * p, a * q);
        let dr = dist_surrogate(r, p * a, q * a);
        prop_assert!((dl - dist_surrogate(l, p, q)).abs() <= 1e-9 * (1.0 + dl));
        prop_assert!((dr - dist_surrogate(r, p, q)).abs() <= 1e-9 * (1.0 + dr));
    }

    #[test]
    fn volume_doubles_by_at_most_sixteen(eps in 0.0..=1.0f64, x in point(), d in 1e-3..1e3f64) {
        let m = MetricParams::left(eps);
        let r = volume(m, x, 2.0 * d).unwrap() / volume(m, x, d).unwrap();
        prop_assert!((8.0..=16.0 * (1.0 + 1e-15)).contains(&r));
    }
}
