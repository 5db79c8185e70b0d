//! Property tests for the invariants of the geometry, media, tracer,
//! hodograph and identity layers.

use std::f64::consts::PI;
use std::sync::OnceLock;

use approx::{assert_abs_diff_eq, assert_relative_eq};
use proptest::prelude::*;
use rigidity_core::catalog;
use rigidity_core::tracer::Recording;
use rigidity_core::rigidity::identities::{lemma_phi_identity_residual, rnn_bracket, squared_difference};
use rigidity_core::{
    build_hodograph, build_rho, star_shaped_domain, trace_chord, trace_forward, unit_disc, AngularFrame,
    DirectionClass, Domain, RadiusProfile, RefractionField, TraceOptions, Vec2,
};

fn disc() -> &'static Domain {
    static D: OnceLock<Domain> = OnceLock::new();
    D.get_or_init(unit_disc)
}

fn star() -> &'static Domain {
    static D: OnceLock<Domain> = OnceLock::new();
    D.get_or_init(|| star_shaped_domain(RadiusProfile::new(vec![1.0, 0.0, 0.0, 0.1]).unwrap()).unwrap())
}

fn media() -> &'static [(&'static str, RefractionField)] {
    static M: OnceLock<Vec<(&'static str, RefractionField)>> = OnceLock::new();
    M.get_or_init(|| catalog::media(disc()).unwrap())
}

fn bump() -> &'static RefractionField {
    static B: OnceLock<RefractionField> = OnceLock::new();
    B.get_or_init(|| catalog::bump(disc()).unwrap())
}

fn domains() -> [&'static Domain; 2] {
    [disc(), star()]
}

/// Interior point of the unit disc from polar samples.
fn disc_point(r: f64, a: f64) -> Vec2 {
    Vec2::new(r * a.cos(), r * a.sin())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boundary_is_closed_and_framed(u in 0.0..1.0f64, which in 0usize..2) {
        let d = domains()[which];
        let b = d.boundary();
        let l = b.total_length();
        let s = u * l;
        prop_assert!((b.point(s + l) - b.point(s)).norm() < 1e-12);
        let t = b.tangent(s);
        let nu = b.inward_conormal(s);
        prop_assert!(t.dot(&nu).abs() < 1e-12);
        prop_assert!((nu.norm() - 1.0).abs() < 1e-12);
        prop_assert!(d.inside(&(b.point(s) + 1e-4 * nu)));
        prop_assert!(d.signed_boundary_function(&b.point(s)).abs() < 1e-10);
    }

    #[test]
    fn boundary_is_arc_length_parameterized(u in 0.0..1.0f64, which in 0usize..2) {
        let b = domains()[which].boundary();
        let s = u * b.total_length();
        let h = 1e-5;
        let speed = ((b.point(s + h) - b.point(s - h)) / (2.0 * h)).norm();
        prop_assert!((speed - 1.0).abs() < 1e-8, "speed {speed}");
    }

    #[test]
    fn inside_iff_negative_boundary_function(x in -1.3..1.3f64, y in -1.3..1.3f64, which in 0usize..2) {
        let d = domains()[which];
        let p = Vec2::new(x, y);
        prop_assert_eq!(d.inside(&p), d.signed_boundary_function(&p) < 0.0);
    }

    #[test]
    fn opposite_directions_are_not_both_incoming(u in 0.0..1.0f64, phi in -PI..PI, which in 0usize..2) {
        let d = domains()[which];
        let s = u * d.boundary().total_length();
        let both = d.classify_direction(s, phi) == DirectionClass::Incoming
            && d.classify_direction(s, phi + PI) == DirectionClass::Incoming;
        prop_assert!(!both);
    }

    #[test]
    fn frame_is_positively_oriented(phi in -10.0..10.0f64) {
        let f = AngularFrame::at(phi);
        assert_abs_diff_eq!(f.determinant(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences(r in 0.0..0.98f64, a in 0.0..2.0 * PI, k in 0usize..6) {
        let (name, field) = &media()[k];
        let x = disc_point(r, a);
        let (_, g) = field.n_and_grad(&x);
        let h = 1e-5;
        let fd = Vec2::new(
            (field.n(&(x + Vec2::new(h, 0.0))) - field.n(&(x - Vec2::new(h, 0.0)))) / (2.0 * h),
            (field.n(&(x + Vec2::new(0.0, h))) - field.n(&(x - Vec2::new(0.0, h)))) / (2.0 * h),
        );
        prop_assert!((g - fd).norm() <= 1e-6 * g.norm().max(1e-3), "{name}: {g:?} vs {fd:?}");
        prop_assert!(field.n(&x) >= field.n_min());
    }

    #[test]
    fn cut_off_media_agree_with_the_base_on_the_boundary(u in 0.0..1.0f64) {
        let d = disc();
        let p = d.boundary().point(u * d.boundary().total_length());
        let one = catalog::constant(d).unwrap();
        let radial = catalog::radial(d).unwrap();
        for (name, base) in [("bump", &one), ("two_bumps", &one), ("radial_bump", &radial)] {
            let field = &media().iter().find(|(n, _)| *n == name).unwrap().1;
            prop_assert!((field.n(&p) - base.n(&p)).abs() <= 1e-10, "{name}");
        }
    }

    #[test]
    fn lemma_identity_holds(w1 in -1.4..1.4f64, w2 in -1.4..1.4f64, d1 in -10.0..10.0f64, d2 in -10.0..10.0f64) {
        prop_assert!(lemma_phi_identity_residual(w1, w2, d1, d2) < 1e-12);
    }

    #[test]
    fn bracket_dominates_squared_difference(
        n1 in 0.5..2.0f64, n2 in 0.5..2.0f64, w1 in -1.4..1.4f64, w2 in -1.4..1.4f64,
    ) {
        let bracket = rnn_bracket(n1, n2, w1, w2);
        let sq = squared_difference(n1, n2, w1, w2);
        prop_assert!(bracket - sq >= -1e-12 * bracket.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn time_reversal(u in 0.0..1.0f64, dev in -1.2..1.2f64) {
        let d = disc();
        let opts = TraceOptions::default();
        let s = u * 2.0 * PI;
        let fwd = trace_chord(s, s + PI + dev, bump(), d, &opts).unwrap();
        let hit = fwd.exit.clone().unwrap();
        let back = trace_chord(hit.s, hit.phi + PI, bump(), d, &opts).unwrap();
        prop_assert!((back.travel_time() - fwd.travel_time()).abs() < 1e-8);
    }

    #[test]
    fn constant_media_travel_time_is_scaled_chord_length(c in 0.2..5.0f64, u in 0.0..1.0f64, dev in -1.4..1.4f64) {
        let d = disc();
        let field = RefractionField::constant(c, d).unwrap();
        let s = u * 2.0 * PI;
        let path = trace_chord(s, s + PI + dev, &field, d, &TraceOptions::default()).unwrap();
        let chord = (path.exit.as_ref().unwrap().point - path.first().x).norm();
        // chord length 2cos(dev) in the unit disc
        assert_relative_eq!(chord, 2.0 * dev.cos(), max_relative = 1e-9);
        assert_relative_eq!(path.travel_time(), c * chord, max_relative = 1e-9);
    }

    #[test]
    fn scaling_the_medium_scales_travel_times(lambda in 0.3..4.0f64, u in 0.0..1.0f64, dev in -1.2..1.2f64) {
        let d = disc();
        let scaled = bump().scaled(lambda).unwrap();
        let s = u * 2.0 * PI;
        let opts = TraceOptions::default();
        let a = trace_chord(s, s + PI + dev, bump(), d, &opts).unwrap();
        let b = trace_chord(s, s + PI + dev, &scaled, d, &opts).unwrap();
        prop_assert!((b.travel_time() - lambda * a.travel_time()).abs() < 1e-10 * lambda.max(1.0));
        prop_assert_eq!(a.nodes.len(), b.nodes.len());
        for (p, q) in a.nodes.iter().zip(&b.nodes) {
            prop_assert!((p.x - q.x).norm() < 1e-10);
        }
    }

    #[test]
    fn travel_time_increases_along_forward_traces(r in 0.0..0.9f64, a in 0.0..2.0 * PI, phi in -PI..PI, k in 0usize..6) {
        let field = &media()[k].1;
        let opts = TraceOptions::default().with_recording(Recording::Dense { max_spacing: 2.5e-4 });
        let path = trace_forward(disc_point(r, a), phi, field, disc(), &opts);
        prop_assert!(path.nodes.windows(2).all(|w| w[1].tau > w[0].tau));
        let re = path.trapezoid_travel_time(field);
        prop_assert!(((re - path.travel_time()) / path.travel_time()).abs() < 1e-7);
    }
}

#[test]
fn rho_is_antisymmetric_and_vanishes_for_identical_media() {
    let d = disc();
    let a = build_hodograph(&catalog::constant(d).unwrap(), d, 16, 16).unwrap();
    let b = build_hodograph(bump(), d, 16, 16).unwrap();
    let ab = build_rho(&a, &b).unwrap();
    let ba = build_rho(&b, &a).unwrap();
    assert!(ab.sup_abs() > 1e-3);
    for (x, y) in ab.rho.iter().zip(&ba.rho) {
        assert_eq!(*x, -*y);
    }
    assert_eq!(build_rho(&b, &b).unwrap().sup_abs(), 0.0);
}
