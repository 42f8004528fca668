use carnot_core::group::{self, apply_field_total, flow, hom_norm, FieldId, GroupPoint};
use proptest::prelude::*;

/// Product written with complex arithmetic: `(z, t)(w, s) = (z + w, t + s + 2 Im(z conj w))`.
fn product_oracle(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    let (zr, zi) = (a[0], a[1]);
    let (wr, wi) = (b[0], -b[1]); // conj w
    let im = zr * wi + zi * wr;
    [a[0] + b[0], a[1] + b[1], a[2] + b[2] + 2.0 * im]
}

fn point() -> impl Strategy<Value = GroupPoint> {
    (-4.0..4.0f64, -4.0..4.0f64, -16.0..16.0f64).prop_map(|(x, y, t)| GroupPoint::new(x, y, t))
}

fn close(a: GroupPoint, b: GroupPoint, tol: f64) -> bool {
    group::rel_residual(a, b) <= tol
}

proptest! {
    #[test]
    fn product_matches_complex_form(p in point(), q in point()) {
        let o = product_oracle(p.to_array(), q.to_array());
        prop_assert!(close(p * q, GroupPoint::from_array(o), 1e-15));
    }

    #[test]
    fn associative(p in point(), q in point(), r in point()) {
        prop_assert!(close((p * q) * r, p * (q * r), 1e-12));
    }

    #[test]
    fn inverse_both_sides(p in point()) {
        prop_assert!(close(p * p.inverse(), GroupPoint::IDENTITY, 1e-12));
        prop_assert!(close(p.inverse() * p, GroupPoint::IDENTITY, 1e-12));
        prop_assert_eq!(p.inverse().inverse(), p);
    }

    #[test]
    fn dilation_is_an_automorphism(p in point(), q in point(), r in 0.05..20.0f64) {
        let lhs = group::dilate(r, p * q).unwrap();
        let rhs = group::dilate(r, p).unwrap() * group::dilate(r, q).unwrap();
        prop_assert!(close(lhs, rhs, 1e-12));
        let n = hom_norm(group::dilate(r, p).unwrap());
        prop_assert!((n - r * hom_norm(p)).abs() <= 1e-12 * (1.0 + n));
    }

    #[test]
    fn flows_are_translations(p in point(), s in -3.0..3.0f64, s2 in -3.0..3.0f64) {
        let step = |id: FieldId, s: f64| match id {
            FieldId::XL | FieldId::XR => GroupPoint::new(s, 0.0, 0.0),
            FieldId::YL | FieldId::YR => GroupPoint::new(0.0, s, 0.0),
            FieldId::T => GroupPoint::new(0.0, 0.0, s),
        };
        for id in FieldId::ALL {
            let want = if id.is_right() { step(id, s) * p } else { p * step(id, s) };
            prop_assert!(close(flow(id, s, p), want, 1e-13));
            prop_assert!(close(flow(id, s2, flow(id, s, p)), flow(id, s + s2, p), 1e-12));
        }
    }

    #[test]
    fn left_and_right_fields_differ_by_vertical_terms(p in point()) {
        // X_L - X_R = 4 y d/dt, Y_L - Y_R = -4 x d/dt
        let f = |q: GroupPoint| (0.3 * q.x).sin() + q.y * q.t + 0.1 * q.t * q.t;
        let dt = |q: GroupPoint| q.y + 0.2 * q.t;
        let h = 1e-4;
        let dx = apply_field_total(FieldId::XL, f, p, h) - apply_field_total(FieldId::XR, f, p, h);
        let dy = apply_field_total(FieldId::YL, f, p, h) - apply_field_total(FieldId::YR, f, p, h);
        prop_assert!((dx - 4.0 * p.y * dt(p)).abs() < 1e-5 * (1.0 + p.y.abs() * 20.0));
        prop_assert!((dy + 4.0 * p.x * dt(p)).abs() < 1e-5 * (1.0 + p.x.abs() * 20.0));
    }
}

#[test]
fn left_field_on_t() {
    let v = apply_field_total(FieldId::XL, |q| q.t, GroupPoint::new(0.0, 3.0, 0.0), 1e-3);
    assert!((v - 6.0).abs() < 1e-10);
}

#[test]
fn left_commutator_is_minus_four_dt() {
    // [X_L, Y_L] t^2 = -4 d/dt (t^2) = -8 t, with O(h^2) nested differences
    let f = |q: GroupPoint| q.t * q.t;
    for p in [GroupPoint::new(0.2, -0.7, 1.3), GroupPoint::new(-1.0, 0.5, -0.4)] {
        let mut prev = f64::INFINITY;
        for h in [1e-2, 5e-3, 2.5e-3] {
            let xy = apply_field_total(FieldId::XL, |q| apply_field_total(FieldId::YL, f, q, h), p, h);
            let yx = apply_field_total(FieldId::YL, |q| apply_field_total(FieldId::XL, f, q, h), p, h);
            let err = (xy - yx + 8.0 * p.t).abs();
            assert!(err < 1e-6 + 10.0 * h * h, "h = {h}: {err}");
            assert!(err <= prev + 1e-9);
            prev = err;
        }
    }
}

#[test]
fn left_and_right_x_agree_on_the_axis() {
    let f = |q: GroupPoint| q.x * q.t + (q.t).cos();
    let p = GroupPoint::new(0.7, 0.0, -0.3);
    let h = 1e-4;
    let d = apply_field_total(FieldId::XL, f, p, h) - apply_field_total(FieldId::XR, f, p, h);
    assert!(d.abs() < 1e-8);
}
