use std::f64::consts::PI;

use abp_core::geom::{
    build_catalog_surface, build_named_surface, integrate, minimality_residual, principal_curvatures,
    surface_gradient_hessian, Chart, FunctionDescriptor, Monomial, SurfaceDescriptor, SurfaceInput,
};
use abp_core::jet::Jet;
use abp_core::Error;
use serde_json::json;

fn unit_sphere(n: usize) -> SurfaceDescriptor {
    SurfaceDescriptor::Sphere { n, radius: 1.0 }
}

#[test]
fn sphere_and_clifford_areas() {
    let s2 = build_catalog_surface(&unit_sphere(2), 64).unwrap();
    assert!((s2.area() - 4.0 * PI).abs() < 1e-8);
    let cl = build_named_surface("clifford-torus", &json!({}), 64).unwrap();
    assert!((cl.area() - 2.0 * PI * PI).abs() < 1e-8);
    let s3 = build_catalog_surface(&unit_sphere(3), 24).unwrap();
    assert!((s3.area() - 2.0 * PI * PI).abs() < 1e-8);
}

#[test]
fn prolate_ellipsoid_area_matches_closed_form() {
    // prolate spheroid, equatorial radius 1, polar semi-axis 2
    let exact = 2.0 * PI * (1.0 + (4.0 / 3f64.sqrt()) * (PI / 3.0));
    let e = build_catalog_surface(&SurfaceDescriptor::Ellipsoid { axes: vec![1.0, 1.0, 2.0] }, 64).unwrap();
    assert!((e.area() - exact).abs() < 1e-6 * exact, "{} vs {exact}", e.area());
}

#[test]
fn quadrature_converges_faster_than_second_order() {
    let exact = 2.0 * PI * (1.0 + (4.0 / 3f64.sqrt()) * (PI / 3.0));
    let d = SurfaceDescriptor::Ellipsoid { axes: vec![1.0, 1.0, 2.0] };
    let err = |res| (build_catalog_surface(&d, res).unwrap().area() - exact).abs();
    let (coarse, fine) = (err(6), err(12));
    assert!(fine * 4.0 <= coarse, "coarse {coarse} fine {fine}");
    let t = SurfaceDescriptor::Torus { major: 2.0, minor: 0.5 };
    let area = build_catalog_surface(&t, 16).unwrap().area();
    assert!((area - 4.0 * PI * PI).abs() < 1e-10);
}

#[test]
fn integrals_on_unit_sphere() {
    let s2 = build_catalog_surface(&unit_sphere(2), 64).unwrap();
    let ones = vec![1.0; s2.len()];
    assert!((integrate(&ones, &s2).unwrap() - 4.0 * PI).abs() < 1e-8);
    let h1: Vec<f64> = s2.samples.iter().map(|s| s.sff[0].trace() / 2.0).collect();
    assert!((integrate(&h1, &s2).unwrap() - 4.0 * PI).abs() < 1e-8);
    // cos² of latitude equals 1 − x₃²
    let cos2 = FunctionDescriptor::AmbientPoly {
        terms: vec![Monomial { coeff: 1.0, powers: vec![] }, Monomial { coeff: -1.0, powers: vec![0, 0, 2] }],
    };
    assert!((s2.integrate_fn(&cos2) - 8.0 * PI / 3.0).abs() < 1e-8);
    let x3sq = FunctionDescriptor::AmbientPoly { terms: vec![Monomial { coeff: 1.0, powers: vec![0, 0, 2] }] };
    assert!((s2.integrate_fn(&x3sq) - 4.0 * PI / 3.0).abs() < 1e-8);
    assert!(matches!(integrate(&ones[1..], &s2), Err(Error::InvalidInput(_))));
}

#[test]
fn sphere_curvatures_and_scaling() {
    for radius in [1.0, 0.5, 3.0] {
        let s = build_catalog_surface(&SurfaceDescriptor::Sphere { n: 2, radius }, 16).unwrap();
        for sample in &s.samples {
            let k = principal_curvatures(sample).unwrap();
            for lambda in &k.eigenvalues {
                assert!((lambda - 1.0 / radius).abs() < 1e-10);
            }
            let gauss: f64 = k.eigenvalues.iter().product();
            assert!((gauss - radius.powi(-2)).abs() < 1e-8);
        }
    }
    let e = build_catalog_surface(&SurfaceDescriptor::Ellipsoid { axes: vec![1.0, 1.5, 2.0] }, 12).unwrap();
    let e3 = e.scaled(3.0).unwrap();
    for (a, b) in e.samples.iter().zip(&e3.samples) {
        assert!((b.area_weight - 9.0 * a.area_weight).abs() < 1e-10 * b.area_weight);
        let (ka, kb) = (principal_curvatures(a).unwrap(), principal_curvatures(b).unwrap());
        for (x, y) in ka.eigenvalues.iter().zip(&kb.eigenvalues) {
            assert!((y - x / 3.0).abs() < 1e-10);
        }
    }
}

#[test]
fn inward_normals_and_orthonormal_frames() {
    let e = build_catalog_surface(&SurfaceDescriptor::Ellipsoid { axes: vec![1.0, 1.0, 1.0, 1.3] }, 8).unwrap();
    for s in &e.samples {
        assert!(s.normals[0].dot(&s.position) < 0.0);
        for (a, ea) in s.tangent_frame.iter().enumerate() {
            assert!(ea.dot(&s.normals[0]).abs() < 1e-10);
            for (b, eb) in s.tangent_frame.iter().enumerate() {
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((ea.dot(eb) - target).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn torus_curvatures_match_closed_form() {
    let (big, small) = (2.0, 0.5);
    let t = build_catalog_surface(&SurfaceDescriptor::Torus { major: big, minor: small }, 16).unwrap();
    for s in &t.samples {
        let v = s.params[1];
        let mut expected = [1.0 / small, v.cos() / (big + small * v.cos())];
        expected.sort_by(f64::total_cmp);
        let k = principal_curvatures(s).unwrap();
        for (a, b) in k.eigenvalues.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10);
        }
    }
    let outer = t.sample_at(0, &[0.3, 0.0]).unwrap();
    let k = principal_curvatures(&outer).unwrap();
    assert!((k.eigenvalues[0] - 0.4).abs() < 1e-12 && (k.eigenvalues[1] - 2.0).abs() < 1e-12);
}

#[test]
fn minimality_of_catalog_submanifolds() {
    let eq = build_catalog_surface(&SurfaceDescriptor::EquatorialSphere { n: 2, m: 1 }, 32).unwrap();
    assert!(minimality_residual(&eq).unwrap() < 1e-10);
    let cl = build_catalog_surface(&SurfaceDescriptor::CliffordTorus, 32).unwrap();
    assert!(minimality_residual(&cl).unwrap() < 1e-8);
    for s in &cl.samples {
        let k = principal_curvatures(s).unwrap();
        assert!((k.eigenvalues[0] + 1.0).abs() < 1e-12 && (k.eigenvalues[1] - 1.0).abs() < 1e-12);
    }
    let small = build_catalog_surface(&SurfaceDescriptor::SmallSphere { n: 1, latitude: PI / 4.0 }, 32).unwrap();
    let r = minimality_residual(&small).unwrap();
    assert!(r >= 0.1 && (r - 1.0).abs() < 1e-10);
    let gc = build_catalog_surface(&SurfaceDescriptor::GreatCircle { m: 2 }, 33).unwrap();
    assert!(minimality_residual(&gc).unwrap() < 1e-12);
    assert_eq!(gc.samples[0].normals.len(), 2);
    for s in eq.samples.iter().chain(&cl.samples).chain(&gc.samples) {
        for v in s.tangent_frame.iter().chain(&s.normals) {
            assert!(v.dot(&s.position).abs() < 1e-10);
        }
    }
    let sphere = build_catalog_surface(&unit_sphere(2), 8).unwrap();
    assert!(matches!(minimality_residual(&sphere), Err(Error::Precondition(_))));
}

#[test]
fn hessian_identities() {
    let s2 = build_catalog_surface(&unit_sphere(2), 24).unwrap();
    let constant = FunctionDescriptor::Constant { value: 3.0 };
    let field = surface_gradient_hessian(SurfaceInput::Analytic(&constant), &s2).unwrap();
    assert!(field.gradients.iter().all(|g| g.norm() == 0.0));
    assert!(field.hessians.iter().all(|h| h.max_abs() < 1e-14));
    let xi = vec![0.3, -0.5, 0.8];
    let linear = FunctionDescriptor::Affine { constant: 0.0, xi: xi.clone() };
    let field = surface_gradient_hessian(SurfaceInput::Analytic(&linear), &s2).unwrap();
    for (i, s) in s2.samples.iter().enumerate() {
        let l: f64 = xi.iter().zip(s.position.iter()).map(|(a, b)| a * b).sum();
        let h = &field.hessians[i];
        for a in 0..2 {
            for b in 0..2 {
                let target = if a == b { -l } else { 0.0 };
                assert!((h.get(a, b) - target).abs() < 1e-8);
            }
        }
    }

    let cl = build_catalog_surface(&SurfaceDescriptor::CliffordTorus, 33).unwrap();
    let values: Vec<f64> = cl.samples.iter().map(|s| s.params[0].cos()).collect();
    let field = surface_gradient_hessian(SurfaceInput::GridValues(&values), &cl).unwrap();
    let re_exp = |_: &Chart, p: &[Jet], _: &[Jet]| p[0].cos();
    let exact = surface_gradient_hessian(SurfaceInput::Analytic(&re_exp), &cl).unwrap();
    for i in 0..cl.len() {
        assert!(field.hessians[i].sub(&exact.hessians[i]).max_abs() < 1e-10);
        // flat metric g = I/2 makes the covariant Hessian twice the coordinate Hessian
        let u = cl.samples[i].params[0];
        assert!((field.hessians[i].get(0, 0) + 2.0 * u.cos()).abs() < 1e-10);
    }
    let e = build_catalog_surface(&unit_sphere(2), 8).unwrap();
    let raw = vec![0.0; e.len()];
    assert!(matches!(surface_gradient_hessian(SurfaceInput::GridValues(&raw), &e), Err(Error::Unsupported(_))));
}

#[test]
fn catalog_errors() {
    assert!(matches!(build_named_surface("klein-bottle", &json!({}), 16), Err(Error::UnknownCatalog(_))));
    let bad = SurfaceDescriptor::Ellipsoid { axes: vec![1.0, 0.0, 1.0] };
    assert!(matches!(build_catalog_surface(&bad, 16), Err(Error::Domain(_))));
    let parsed = SurfaceDescriptor::parse("sphere", &json!({"n": 2, "radius": 2.0})).unwrap();
    assert_eq!(parsed, SurfaceDescriptor::Sphere { n: 2, radius: 2.0 });
    let round = serde_json::to_value(&SurfaceDescriptor::CliffordTorus).unwrap();
    assert_eq!(round, json!({"name": "clifford-torus"}));
}
