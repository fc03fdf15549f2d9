use std::f64::consts::PI;

use abp_core::geom::{build_catalog_surface, SurfaceDescriptor};
use abp_core::quermass::{
    check_af_inequality, check_holder_chain, check_quermass_corollary, check_quermass_main, divergence_free_residual,
    functionals, kconvexity_check, maclaurin_violation, pointwise_det_tk_bound,
};
use abp_core::Error;

fn sphere(radius: f64, res: usize) -> abp_core::geom::Hypersurface {
    build_catalog_surface(&SurfaceDescriptor::Sphere { n: 2, radius }, res).unwrap()
}

fn ellipsoid(axes: &[f64], res: usize) -> abp_core::geom::Hypersurface {
    build_catalog_surface(&SurfaceDescriptor::Ellipsoid { axes: axes.to_vec() }, res).unwrap()
}

/// Composite Simpson rule with many panels.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Spheroid integrals of 1, H, 1/H from meridian curvature formulas.
fn spheroid_oracle(a: f64, c: f64) -> (f64, f64, f64) {
    let d = |t: f64| a * a * t.cos().powi(2) + c * c * t.sin().powi(2);
    let area_el = |t: f64| 2.0 * PI * a * t.sin() * d(t).sqrt();
    let mean = |t: f64| 0.5 * (a * c / d(t).powf(1.5) + c / (a * d(t).sqrt()));
    let n = 20000;
    (
        simpson(area_el, 0.0, PI, n),
        simpson(|t| area_el(t) * mean(t), 0.0, PI, n),
        simpson(|t| area_el(t) / mean(t), 0.0, PI, n),
    )
}

#[test]
fn convexity_of_catalog_surfaces() {
    assert!(kconvexity_check(&sphere(1.0, 12), 2).unwrap());
    let torus = build_catalog_surface(&SurfaceDescriptor::Torus { major: 2.0, minor: 0.5 }, 24).unwrap();
    assert!(kconvexity_check(&torus, 1).unwrap());
    assert!(!kconvexity_check(&torus, 2).unwrap());
}

#[test]
fn unit_sphere_functionals_and_equality() {
    let s = sphere(1.0, 64);
    let q = functionals(&s, 0).unwrap();
    for v in [q.int_hk, q.int_hk1, q.int_ratio] {
        assert!((v - 4.0 * PI).abs() < 1e-8);
    }
    let r = check_quermass_main(&s, 0).unwrap();
    assert!(r.pass && r.equality);
    assert!(r.deficit.abs() <= 1e-6 * r.rhs);
    let c = check_quermass_corollary(&s, 0).unwrap();
    assert!(c.pass && c.equality && c.deficit.abs() <= 1e-6 * c.rhs);
    let af = check_af_inequality(&s, 0).unwrap();
    assert!(af.pass && af.equality && af.deficit.abs() < 1e-8 * af.rhs);
    let h = check_holder_chain(&s, 0).unwrap();
    assert!(h.pass && h.deficit.abs() < 1e-8);
}

#[test]
fn sphere_radius_scaling_laws() {
    let radius = 3.0;
    let q = functionals(&sphere(radius, 32), 0).unwrap();
    assert!((q.int_hk - 4.0 * PI * radius * radius).abs() < 1e-8);
    assert!((q.int_hk1 - 4.0 * PI * radius).abs() < 1e-8);
    assert!((q.int_ratio - 4.0 * PI * radius.powi(3)).abs() < 1e-7);
    let r = check_quermass_main(&sphere(radius, 32), 0).unwrap();
    assert!(r.pass && r.deficit.abs() <= 1e-6 * r.rhs);
    for lambda in [0.5, 1.0, 3.0] {
        let af = check_af_inequality(&sphere(lambda, 24), 0).unwrap();
        assert!(af.pass && af.deficit.abs() <= 1e-8 * af.rhs);
    }
}

#[test]
fn prolate_ellipsoid_matches_meridian_oracle_and_is_strict() {
    let (area, int_h, int_inv_h) = spheroid_oracle(1.0, 2.0);
    let e = ellipsoid(&[1.0, 1.0, 2.0], 64);
    let q = functionals(&e, 0).unwrap();
    assert!((q.int_hk - area).abs() < 1e-6 * area);
    assert!((q.int_hk1 - int_h).abs() < 1e-6 * int_h);
    assert!((q.int_ratio - int_inv_h).abs() < 1e-6 * int_inv_h);

    let main = check_quermass_main(&e, 0).unwrap();
    let quad = main.meta_f64("quad_error_est").unwrap();
    assert!(main.pass && !main.equality);
    assert!(main.deficit > 10.0 * quad, "deficit {} vs quad {quad}", main.deficit);
    let cor = check_quermass_corollary(&e, 0).unwrap();
    assert!(cor.pass && cor.deficit > 10.0 * cor.meta_f64("quad_error_est").unwrap());
    assert!(cor.rhs >= cor.meta_f64("theorem_rhs").unwrap() - 1e-10);
    let af = check_af_inequality(&e, 0).unwrap();
    assert!(af.pass && af.deficit > 1e-3);
    assert!(int_h * int_h > 4.0 * PI * area);
    let chain = check_holder_chain(&e, 0).unwrap();
    assert!(chain.pass && chain.meta_f64("second_gap").unwrap() > 1e-3);
}

#[test]
fn scale_invariance_of_main_check() {
    for axes in [[1.0, 1.0, 2.0], [1.0, 1.5, 2.0]] {
        let base = ellipsoid(&axes, 32);
        let r0 = check_quermass_main(&base, 0).unwrap();
        for lambda in [0.5, 3.0] {
            let r = check_quermass_main(&base.scaled(lambda).unwrap(), 0).unwrap();
            assert_eq!(r.pass, r0.pass);
            assert_eq!(r.deficit > 0.0, r0.deficit > 0.0);
            // both sides are homogeneous of degree n(n+1) in λ
            assert!((r.deficit - r0.deficit * lambda.powi(6)).abs() < 1e-8 * r.rhs);
        }
    }
}

#[test]
fn torus_holder_chain_and_preconditions() {
    let torus = build_catalog_surface(&SurfaceDescriptor::Torus { major: 2.0, minor: 0.5 }, 32).unwrap();
    assert!(check_holder_chain(&torus, 0).unwrap().pass);
    assert!(check_quermass_main(&torus, 0).unwrap().pass);
    assert!(matches!(check_af_inequality(&torus, 0), Err(Error::Precondition(_))));
    assert!(matches!(functionals(&torus, 1), Err(Error::Precondition(_))));
    assert!(matches!(check_quermass_main(&sphere(1.0, 8), 1), Err(Error::Domain(_))));
    let clifford = build_catalog_surface(&SurfaceDescriptor::CliffordTorus, 9).unwrap();
    assert!(matches!(functionals(&clifford, 0), Err(Error::Precondition(_))));
}

#[test]
fn four_dimensional_ellipsoid_cases() {
    let e = ellipsoid(&[1.0, 1.0, 1.0, 1.3], 20);
    for k in [0, 1] {
        let r = check_quermass_main(&e, k).unwrap();
        assert!(r.pass && r.deficit > 0.0, "k = {k}: {r:?}");
        assert!(check_quermass_corollary(&e, k).unwrap().pass);
        assert!(check_af_inequality(&e, k).unwrap().pass);
        assert!(check_holder_chain(&e, k).unwrap().pass);
        assert!(pointwise_det_tk_bound(&e, k).unwrap().pass);
    }
    assert!(maclaurin_violation(&e, 1).unwrap() <= 1e-12);
    assert!(maclaurin_violation(&e, 2).unwrap() <= 1e-12);
}

#[test]
fn newton_tensor_of_shape_operator_is_divergence_free() {
    let e = ellipsoid(&[1.0, 1.2, 1.5], 12);
    assert!(divergence_free_residual(&e, 0).unwrap() < 1e-12);
    assert!(divergence_free_residual(&e, 1).unwrap() < 1e-6);
    let e4 = ellipsoid(&[1.0, 1.0, 1.0, 1.3], 8);
    assert!(divergence_free_residual(&e4, 1).unwrap() < 1e-6);
    assert!(divergence_free_residual(&e4, 2).unwrap() < 1e-6);
}
