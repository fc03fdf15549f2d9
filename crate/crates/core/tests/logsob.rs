use std::f64::consts::PI;

use abp_core::geom::{build_catalog_surface, random_positive_trig, FunctionDescriptor, Hypersurface, Scaled, SurfaceDescriptor};
use abp_core::logsob::*;
use abp_core::numeric::sphere_area;
use abp_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn surface(d: SurfaceDescriptor, res: usize) -> Hypersurface {
    build_catalog_surface(&d, res).unwrap()
}

fn one() -> FunctionDescriptor {
    FunctionDescriptor::Constant { value: 1.0 }
}

fn deficit(s: &Hypersurface, f: &FunctionDescriptor, v: ConstantVariant) -> abp_core::VerificationReport {
    logsob_deficit(&LogSobInput::new(s, f, v).unwrap()).unwrap()
}

#[test]
fn constant_on_equator_is_equality() {
    let s = surface(SurfaceDescriptor::EquatorialSphere { n: 2, m: 1 }, 24);
    let r = deficit(&s, &one(), ConstantVariant::SharpM12);
    assert!(r.deficit.abs() < 1e-10 && r.equality && r.pass, "{r:?}");
}

#[test]
fn constant_on_clifford_torus() {
    let s = surface(SurfaceDescriptor::CliffordTorus, 17);
    let r = deficit(&s, &one(), ConstantVariant::SharpM12);
    let expected = 2.0 * PI * PI * (PI / 2.0).ln();
    assert!((r.deficit - expected).abs() < 1e-10, "{} {expected}", r.deficit);
    assert!((r.deficit - 8.9139).abs() < 1e-4);
    assert!(r.pass && !r.equality);
}

#[test]
fn great_circle_matches_trapezoid_oracle() {
    let s = surface(SurfaceDescriptor::GreatCircle { m: 1 }, 33);
    let f = FunctionDescriptor::Affine { constant: 1.0, xi: vec![0.5, 0.0, 0.0] };
    let r = deficit(&s, &f, ConstantVariant::SharpM12);
    let m = 4096;
    let h = 2.0 * PI / m as f64;
    let (mut int_f, mut int_flogf, mut grad) = (0.0, 0.0, 0.0);
    for i in 0..m {
        let t = i as f64 * h;
        let v = 1.0 + 0.5 * t.cos();
        int_f += h * v;
        int_flogf += h * v * v.ln();
        grad += h * 0.25 * t.sin().powi(2) / v;
    }
    let oracle = grad - (int_flogf + (2.0 * PI).ln() * int_f - int_f * int_f.ln());
    assert!((r.deficit - oracle).abs() < 1e-10, "{} {oracle}", r.deficit);
    assert!(r.deficit > 0.0 && !r.equality);
}

#[test]
fn classical_sphere_inequality() {
    let r = classical_sphere_check(&one(), 2, 16).unwrap();
    assert!(r.deficit.abs() < 1e-10 && r.equality);
    let seven = FunctionDescriptor::Constant { value: 7.0 };
    let r = classical_sphere_check(&seven, 2, 16).unwrap();
    assert!(r.deficit.abs() < 1e-10 && r.equality);
    let f = FunctionDescriptor::ExpLinear { xi: vec![0.0, 0.0, 0.3], coeff: 1.0 };
    let coarse = classical_sphere_check(&f, 2, 16).unwrap();
    let fine = classical_sphere_check(&f, 2, 48).unwrap();
    assert!((coarse.deficit - fine.deficit).abs() < 1e-11);
    assert!(fine.deficit > 1e-4 && !fine.equality);
    let r = classical_sphere_check(&f, 3, 12).unwrap();
    assert!(r.pass && r.deficit > 0.0);
}

#[test]
fn sharp_coefficient_dominates_classical() {
    let f = FunctionDescriptor::Affine { constant: 1.0, xi: vec![0.0, 0.0, 0.5] };
    for s in [
        surface(SurfaceDescriptor::Sphere { n: 2, radius: 1.0 }, 24),
        surface(SurfaceDescriptor::EquatorialSphere { n: 2, m: 1 }, 24),
    ] {
        let g = abp_core::logsob::functionals(&s, &f).unwrap();
        let r = sharpness_comparison(&f, &s).unwrap();
        assert!(r.pass);
        assert!((r.deficit - (3.0 / 8.0 - 0.25) * g.int_grad_sq_over_f).abs() < 1e-10);
        assert!(r.deficit > 0.0);
        assert_eq!(r.meta_f64("coefficient_sharp"), Some(0.375));
        let c = sharpness_comparison(&FunctionDescriptor::Constant { value: 3.0 }, &s).unwrap();
        assert!(c.equality && c.deficit.abs() < 1e-10);
    }
}

#[test]
fn area_comparisons() {
    let r = area_comparison(&surface(SurfaceDescriptor::EquatorialSphere { n: 2, m: 1 }, 24)).unwrap();
    assert!(r.deficit.abs() < 1e-10 && r.equality);
    let r = area_comparison(&surface(SurfaceDescriptor::CliffordTorus, 9)).unwrap();
    assert!((r.deficit - (2.0 * PI * PI - 4.0 * PI)).abs() < 1e-10 && !r.equality);
    assert!((r.deficit - 7.17).abs() < 0.01);
    let r = area_comparison(&surface(SurfaceDescriptor::GreatCircle { m: 2 }, 17)).unwrap();
    assert!(r.deficit.abs() < 1e-12 && r.equality);
    assert!(area_comparison(&surface(SurfaceDescriptor::EquatorialSphere { n: 1, m: 3 }, 9)).is_err());
}

#[test]
fn constant_reduction() {
    assert!((2.0 * sphere_area(3) - 4.0 * PI * PI).abs() < 1e-12);
    assert!((3.0 * sphere_area(4) - 8.0 * PI * PI).abs() < 1e-12);
    for n in 1..=8 {
        let r = constant_reduction_check(n).unwrap();
        assert!(r.pass, "{n}: {r:?}");
    }
}

#[test]
fn linear_functions_are_eigenfunctions() {
    let circle = surface(SurfaceDescriptor::GreatCircle { m: 1 }, 17);
    assert!(eigenfunction_identity_check(&circle, &[1.0, 0.0, 0.0]).unwrap().lhs <= 1e-10);
    let torus = surface(SurfaceDescriptor::CliffordTorus, 13);
    assert!(eigenfunction_identity_check(&torus, &[0.3, -1.0, 0.7, 0.2]).unwrap().lhs <= 1e-8);
    let eq = surface(SurfaceDescriptor::EquatorialSphere { n: 2, m: 1 }, 16);
    let r = eigenfunction_identity_check(&eq, &[0.0, 0.0, 0.0, 1.0]).unwrap();
    assert!(r.lhs <= 1e-14 && r.pass);
    assert!(eigenfunction_identity_check(&eq, &[1.0, 2.0, 0.5, 0.0]).unwrap().pass);
}

#[test]
fn superadditivity() {
    let r = superadditivity_check(1.0, 1.0).unwrap();
    assert!((r.deficit - 2.0 * 2f64.ln()).abs() < 1e-14);
    let e = std::f64::consts::E;
    let r = superadditivity_check(e, e).unwrap();
    assert!((r.deficit - 2.0 * e * 2f64.ln()).abs() < 1e-13);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let (a, b) = (rng.gen_range(1e-6..=10.0), rng.gen_range(1e-6..=10.0));
        assert!(superadditivity_check(a, b).unwrap().pass);
    }
    assert!(superadditivity_check(0.0, 1.0).is_err());
}

fn minimal_catalog() -> Vec<Hypersurface> {
    vec![
        surface(SurfaceDescriptor::GreatCircle { m: 1 }, 33),
        surface(SurfaceDescriptor::GreatCircle { m: 2 }, 33),
        surface(SurfaceDescriptor::EquatorialSphere { n: 2, m: 1 }, 24),
        surface(SurfaceDescriptor::EquatorialSphere { n: 2, m: 2 }, 24),
        surface(SurfaceDescriptor::CliffordTorus, 25),
    ]
}

#[test]
fn randomized_positive_functions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for s in minimal_catalog() {
        for _ in 0..6 {
            let f = random_positive_trig(&mut rng, s.ambient_dim(), 3, 0.3);
            let r = deficit(&s, &f, ConstantVariant::SharpM12);
            assert!(r.pass, "{:?} {r:?}", s.descriptor);
            assert!(!r.equality);
            if native_codimension(&s).unwrap() == 2 {
                assert!(deficit(&s, &f, ConstantVariant::GeneralM).pass);
            }
        }
    }
}

#[test]
fn normalization_covariance() {
    let s = surface(SurfaceDescriptor::CliffordTorus, 25);
    let f = FunctionDescriptor::Affine { constant: 1.5, xi: vec![0.3, 0.2, -0.4, 0.1] };
    let base = deficit(&s, &f, ConstantVariant::SharpM12).deficit;
    for c in [0.1, 1.0, 10.0] {
        let g = Scaled { factor: c, inner: &f };
        let r = logsob_deficit(&LogSobInput::new(&s, &g, ConstantVariant::SharpM12).unwrap()).unwrap();
        assert!((r.deficit - c * base).abs() < 1e-10 * (1.0 + c * base.abs()));
    }
    let fun = abp_core::logsob::functionals(&s, &f).unwrap();
    let c = fun.normalization_constant();
    let g = Scaled { factor: c, inner: &f };
    let nf = abp_core::logsob::functionals(&s, &g).unwrap();
    assert!((2.0 / 3.0 * nf.int_f_log_f - 0.25 * nf.int_grad_sq_over_f).abs() < 1e-10);
}

#[test]
fn general_and_sharp_constants_differ_by_mass_term() {
    let s = surface(SurfaceDescriptor::EquatorialSphere { n: 1, m: 1 }, 33);
    let f = FunctionDescriptor::Affine { constant: 2.0, xi: vec![0.4, 0.3, 0.0] };
    let sharp = logsob_deficit(&LogSobInput::new(&s, &f, ConstantVariant::SharpM12).unwrap().with_codimension(2).unwrap()).unwrap();
    for m in 2..=4 {
        let general = logsob_deficit(&LogSobInput::new(&s, &f, ConstantVariant::GeneralM).unwrap().with_codimension(m).unwrap()).unwrap();
        let int_f = general.meta_f64("int_f").unwrap();
        let shift = int_f * (ConstantVariant::GeneralM.constant(1, m) - ConstantVariant::SharpM12.constant(1, 2));
        assert!((sharp.deficit - general.deficit - shift).abs() < 1e-10);
        assert!(general.pass);
    }
}

#[test]
fn equality_flag_only_on_constant_totally_geodesic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for s in minimal_catalog() {
        let r = deficit(&s, &one(), ConstantVariant::SharpM12);
        assert_eq!(r.equality, s.descriptor.is_totally_geodesic());
        let f = random_positive_trig(&mut rng, s.ambient_dim(), 2, 0.5);
        assert!(!deficit(&s, &f, ConstantVariant::SharpM12).equality);
    }
}

#[test]
fn precondition_errors() {
    let s = surface(SurfaceDescriptor::GreatCircle { m: 1 }, 17);
    let f = FunctionDescriptor::Affine { constant: 0.0, xi: vec![1.0, 0.0, 0.0] };
    let err = logsob_deficit(&LogSobInput::new(&s, &f, ConstantVariant::SharpM12).unwrap()).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
    let small = surface(SurfaceDescriptor::SmallSphere { n: 2, latitude: 1.0 }, 16);
    assert!(matches!(logsob_deficit(&LogSobInput::new(&small, &one(), ConstantVariant::SharpM12).unwrap()), Err(Error::Precondition(_))));
    assert!(logsob_deficit(&LogSobInput::new(&s, &one(), ConstantVariant::GeneralM).unwrap()).is_err());
    let torus = surface(SurfaceDescriptor::CliffordTorus, 9);
    assert!(logsob_deficit(&LogSobInput::new(&torus, &one(), ConstantVariant::EuclideanSphere).unwrap()).is_err());
    assert!(LogSobInput::new(&torus, &one(), ConstantVariant::SharpM12).unwrap().with_codimension(0).is_err());
    assert!(ConstantVariant::parse("sharp_m12").is_ok() && ConstantVariant::parse("x").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn superadditivity_positive(a in 1e-6f64..=10.0, b in 1e-6f64..=10.0) {
        prop_assert!(superadditivity_check(a, b).unwrap().deficit > 0.0);
    }

    #[test]
    fn deficit_nonnegative_on_clifford(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = surface(SurfaceDescriptor::CliffordTorus, 21);
        let f = random_positive_trig(&mut rng, 4, 2, 0.2);
        prop_assert!(deficit(&s, &f, ConstantVariant::SharpM12).pass);
    }
}
