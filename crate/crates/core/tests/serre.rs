use std::f64::consts::PI;

use abp_core::serre::*;
use abp_core::Error;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn disk() -> EuclideanDomain {
    EuclideanDomain::build(&DomainDescriptor::unit_disk(), 32).unwrap()
}

fn peanut() -> EuclideanDomain {
    EuclideanDomain::build(&DomainDescriptor::PeanutDomain { amplitude: 0.45 }, 48).unwrap()
}

fn field(desc: FieldDescriptor, n: usize) -> CatalogField {
    desc.instantiate(n).unwrap()
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Ellipse perimeter by the Gauss-Kummer AGM iteration.
fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    let (mut an, mut bn) = (a, b);
    let mut sum = 0.5 * (a * a - b * b);
    let mut pow = 1.0;
    for _ in 0..30 {
        let c = (an - bn) / 2.0;
        let (a1, b1) = ((an + bn) / 2.0, (an * bn).sqrt());
        an = a1;
        bn = b1;
        sum += pow * c * c;
        pow *= 2.0;
    }
    2.0 * PI / an * (a * a - sum)
}

#[test]
fn identity_on_disk_and_ball() {
    let id2 = field(FieldDescriptor::Identity, 2);
    let f = serre_functionals(&disk(), &id2).unwrap();
    assert!((f.bulk - PI).abs() < 1e-12);
    assert!((f.boundary - 2.0 * PI).abs() < 1e-12);
    assert_eq!(f.div_term, 0.0);
    let r = check_serre(&disk(), &id2).unwrap();
    assert!(r.pass && r.equality && r.deficit.abs() <= 1e-8, "{r:?}");
    assert!((r.lhs - 2.0 * PI).abs() < 1e-10);

    let ball = EuclideanDomain::build(&DomainDescriptor::Ball { center: vec![0.0; 3], radius: 1.0 }, 24).unwrap();
    let f = serre_functionals(&ball, &field(FieldDescriptor::Identity, 3)).unwrap();
    assert!((f.bulk - 4.0 * PI / 3.0).abs() < 1e-10, "{}", f.bulk);
    assert!((f.boundary - 4.0 * PI).abs() < 1e-10, "{}", f.boundary);
    let r = check_serre(&ball, &field(FieldDescriptor::Identity, 3)).unwrap();
    assert!(r.pass && r.equality, "{r:?}");
}

#[test]
fn radial_scalar_field_matches_radial_integrals() {
    let a = field(FieldDescriptor::RadialScalar { a: 1.0, b: 1.0 }, 2);
    let f = serre_functionals(&disk(), &a).unwrap();
    let bulk = 2.0 * PI * simpson(|r| (1.0 + r * r).powi(2) * r, 0.0, 1.0, 2000);
    let div = 2.0 * PI * simpson(|r| 2.0 * r * r, 0.0, 1.0, 2000);
    assert!((f.bulk - bulk).abs() < 1e-10, "{} {}", f.bulk, bulk);
    assert!((f.boundary - 4.0 * PI).abs() < 1e-10);
    assert!((f.div_term - div).abs() < 1e-10, "{} {}", f.div_term, div);
    assert!(check_serre(&disk(), &a).unwrap().pass);
}

#[test]
fn anisotropic_constant_field() {
    let a = field(FieldDescriptor::diag(&[4.0, 1.0]), 2);
    let f = serre_functionals(&disk(), &a).unwrap();
    assert!((f.bulk - 4.0 * PI).abs() < 1e-11);
    let boundary = ellipse_perimeter(4.0, 1.0);
    assert!((f.boundary - boundary).abs() < 1e-9, "{} {}", f.boundary, boundary);
    let r = check_serre(&disk(), &a).unwrap();
    assert!((r.deficit - (boundary - 4.0 * PI)).abs() < 1e-9);
    assert!(r.pass && !r.equality && r.deficit > 1.0);
}

#[test]
fn identity_reduces_to_isoperimetry() {
    let p = peanut();
    let r = check_serre(&p, &field(FieldDescriptor::Identity, 2)).unwrap();
    let eps = 0.45;
    let area = 0.5 * simpson(|t| (1.0 + eps * (2.0 * t).cos()).powi(2), 0.0, 2.0 * PI, 4000);
    let perimeter = simpson(
        |t| ((1.0 + eps * (2.0 * t).cos()).powi(2) + (2.0 * eps * (2.0 * t).sin()).powi(2)).sqrt(),
        0.0,
        2.0 * PI,
        4000,
    );
    assert!(!p.convex);
    assert!((p.volume() - area).abs() < 1e-9);
    assert!((p.perimeter() - perimeter).abs() < 1e-8, "{} {}", p.perimeter(), perimeter);
    let deficit = perimeter - 2.0 * (PI * area).sqrt();
    assert!((r.deficit - deficit).abs() < 1e-8);
    assert!(r.deficit > 1e-3 && r.pass && !r.equality);

    let ellipse = EuclideanDomain::build(&DomainDescriptor::Ellipse { center: vec![0.3, -0.2], axes: [2.0, 1.0] }, 48).unwrap();
    let r = check_serre(&ellipse, &field(FieldDescriptor::Identity, 2)).unwrap();
    let deficit = ellipse_perimeter(2.0, 1.0) - 2.0 * (PI * 2.0 * PI).sqrt();
    assert!((r.deficit - deficit).abs() < 1e-8, "{} {}", r.deficit, deficit);
}

#[test]
fn divergence_theorem_on_catalog_domains() {
    let domains = [
        DomainDescriptor::unit_disk(),
        DomainDescriptor::PeanutDomain { amplitude: 0.45 },
        DomainDescriptor::Ellipse { center: vec![0.5, 0.0], axes: [1.5, 0.7] },
        DomainDescriptor::Ball { center: vec![0.0, 0.1, 0.0], radius: 1.2 },
        DomainDescriptor::SolidEllipsoid { center: vec![0.0; 3], axes: [1.0, 1.5, 0.8] },
    ];
    for d in &domains {
        let dom = EuclideanDomain::build(d, 32).unwrap();
        let res = dom.divergence_theorem_residual(|x: &DVector<f64>| {
            let n = x.len();
            let mut f = DVector::zeros(n);
            f[0] = x[0] * x[0] + x[1];
            f[1] = x[0] * x[1] * x[1];
            let mut div = 2.0 * x[0] + 2.0 * x[0] * x[1];
            if n == 3 {
                f[2] = x[2].powi(3);
                div += 3.0 * x[2] * x[2];
            }
            (f, div)
        });
        assert!(res <= 1e-8, "{d:?}: {res}");
        for b in &dom.boundary {
            assert!((b.normal.norm() - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn randomized_positive_fields_satisfy_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (d, p) = (disk(), peanut());
    for i in 0..40 {
        let a = field(FieldDescriptor::random_trig_gram(&mut rng, 2, 2), 2);
        let dom = if i % 2 == 0 { &d } else { &p };
        let r = check_serre(dom, &a).unwrap();
        assert!(r.pass, "{r:?}");
    }
    let ball = EuclideanDomain::build(&DomainDescriptor::Ball { center: vec![0.0; 3], radius: 1.0 }, 16).unwrap();
    for _ in 0..5 {
        let a = field(FieldDescriptor::random_trig_gram(&mut rng, 3, 2), 3);
        assert!(check_serre(&ball, &a).unwrap().pass);
    }
}

#[test]
fn analytic_divergence_matches_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-5;
    let cases = vec![
        field(FieldDescriptor::random_trig_gram(&mut rng, 2, 3), 2),
        field(FieldDescriptor::random_trig_gram(&mut rng, 3, 2), 3),
        field(FieldDescriptor::Cofactor { potential: Potential::ExpPerturbed { xi: vec![0.4, -0.3, 0.2], eps: 0.3 } }, 3),
        field(FieldDescriptor::AffineScalar { c: 2.0, xi: vec![0.3, 0.1] }, 2),
    ];
    for a in &cases {
        let x = DVector::from_fn(a.dim(), |i, _| 0.3 - 0.2 * i as f64);
        let an = a.analytic_divergence(&x).unwrap();
        let fd = fd_divergence(a, &x, h);
        assert!((&an - &fd).norm() < 1e-7, "{an} {fd}");
    }
}

#[test]
fn cofactor_fields_are_divergence_free() {
    let d = disk();
    let ball = EuclideanDomain::build(&DomainDescriptor::Ball { center: vec![0.0; 3], radius: 1.0 }, 12).unwrap();
    let potentials = [
        (Potential::QuarticRadial { alpha: 1.0, beta: 1.0, center: vec![0.0, 0.0] }, &d),
        (Potential::ExpPerturbed { xi: vec![0.5, 0.2], eps: 0.4 }, &d),
        (Potential::ExpPerturbed { xi: vec![0.5, 0.2, -0.3], eps: 0.4 }, &ball),
        (Potential::QuarticRadial { alpha: 0.5, beta: 2.0, center: vec![0.1, 0.0, 0.0] }, &ball),
    ];
    for (u, dom) in potentials {
        let a = build_equality_case(&u, dom).unwrap();
        assert!(divergence_free_residual(&a, dom) <= 1e-10);
        assert!(divergence_free_residual_fd(&a, dom) <= 1e-6);
    }
    let c = field(FieldDescriptor::diag(&[3.0, 0.5]), 2);
    assert_eq!(divergence_free_residual(&c, &d), 0.0);
    let affine = field(FieldDescriptor::AffineScalar { c: 1.0, xi: vec![1.0, 0.0] }, 2);
    assert!((divergence_free_residual(&affine, &d) - 1.0).abs() < 1e-14);
}

#[test]
fn equality_cases() {
    let d = disk();
    let a = build_equality_case(&Potential::half_square(2, &[0.0, 0.0]), &d).unwrap();
    let r = check_serre(&d, &a).unwrap();
    assert!(r.equality && r.deficit.abs() <= 1e-6);

    let quartic = Potential::QuarticRadial { alpha: 1.0, beta: 0.5, center: vec![0.0, 0.0] };
    let a = build_equality_case(&quartic, &d).unwrap();
    let f = serre_functionals(&d, &a).unwrap();
    // u' = r + r³/2; det D²u = u'' u'/r, boundary |Aν| = u'(1)/1.
    let bulk = 2.0 * PI * simpson(|r| (1.0 + 1.5 * r * r) * (1.0 + 0.5 * r * r) * r, 0.0, 1.0, 2000);
    assert!((f.bulk - bulk).abs() < 1e-10);
    assert!((f.boundary - 2.0 * PI * 1.5).abs() < 1e-10);
    let r = check_serre(&d, &a).unwrap();
    assert!(r.equality && r.deficit.abs() <= 1e-6, "{r:?}");

    // A translated disk with u = |x|²/2 still has A = I, so the value is the isoperimetric one.
    let shifted = EuclideanDomain::build(&DomainDescriptor::Disk { center: vec![2.0, 0.0], radius: 1.0 }, 32).unwrap();
    let a = build_equality_case(&Potential::half_square(2, &[0.0, 0.0]), &shifted).unwrap();
    let r = check_serre(&shifted, &a).unwrap();
    assert!(r.deficit.abs() <= 1e-8 && r.equality);

    let saddle = Potential::Quadratic { matrix: vec![vec![1.0, 0.0], vec![0.0, -1.0]], center: vec![0.0, 0.0] };
    assert!(matches!(build_equality_case(&saddle, &d), Err(Error::Precondition(_))));
}

#[test]
fn positivity_sweep_reports_witness() {
    let a = field(FieldDescriptor::RadialScalar { a: -0.5, b: 1.0 }, 2);
    match serre_functionals(&disk(), &a) {
        Err(Error::Precondition(msg)) => assert!(msg.contains("x =")),
        other => panic!("{other:?}"),
    }
    assert!(FieldDescriptor::diag(&[1.0, 2.0]).instantiate(3).is_err());
}

#[test]
fn catalog_parsing() {
    let f = FieldDescriptor::parse("radial-scalar", &serde_json::json!({"a": 1.0, "b": 0.5})).unwrap();
    assert_eq!(f, FieldDescriptor::RadialScalar { a: 1.0, b: 0.5 });
    assert!(matches!(FieldDescriptor::parse("nope", &serde_json::Value::Null), Err(Error::UnknownCatalog(_))));
    let d = DomainDescriptor::parse("peanut-domain", &serde_json::json!({})).unwrap();
    assert_eq!(d, DomainDescriptor::PeanutDomain { amplitude: 0.45 });
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn scaling_consistency(seed in 0u64..1000, c in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dom = EuclideanDomain::build(&DomainDescriptor::unit_disk(), 16).unwrap();
        let base = FieldDescriptor::random_trig_gram(&mut rng, 2, 2).instantiate(2).unwrap();
        let scaled = FdField { n: 2, f: |x: &DVector<f64>| base.value(x).scale(c) };
        let f0 = serre_functionals(&dom, &base).unwrap();
        let f1 = serre_functionals(&dom, &scaled).unwrap();
        prop_assert!((f1.bulk - c * c * f0.bulk).abs() <= 1e-10 * f1.bulk);
        prop_assert!((f1.boundary - c * f0.boundary).abs() <= 1e-10 * f1.boundary);
        prop_assert!((f1.div_term - c * f0.div_term).abs() <= 1e-5 * (1.0 + f1.div_term));
        let k = f0.scaling_constant(2);
        let normalized = FdField { n: 2, f: |x: &DVector<f64>| base.value(x).scale(k) };
        let fn_ = serre_functionals(&dom, &normalized).unwrap();
        prop_assert!((2.0 * fn_.bulk - fn_.rhs()).abs() <= 1e-4 * fn_.rhs());
        let d0 = f0.rhs() - f0.lhs(2);
        let d1 = f1.rhs() - f1.lhs(2);
        prop_assert!(d0 >= -1e-8 && d1 >= -1e-8);
    }
}
