//! Logarithmic Sobolev functionals on minimal submanifolds of unit spheres.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{minimality_residual, AmbientKind, Hypersurface, SurfaceDescriptor, SurfaceFunction};
use crate::numeric::{pairwise_sum, sphere_area};
use crate::report::VerificationReport;

/// Accepted mean-curvature residual of the input submanifold.
pub const MINIMALITY_TOL: f64 = 1e-6;
/// Relative spread of `f` below which it is treated as constant.
pub const CONSTANT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantVariant {
    /// `log|S^n|` with coefficient `(n+1)/(2n²)`, for `m ∈ {1, 2}`.
    SharpM12,
    /// `log((n+1)|S^{n+m}|/|S^{m−1}|)` with coefficient `(n+1)/(2n²)`, for `m ≥ 2`.
    GeneralM,
    /// `log|S^n|` with coefficient `1/(2n)`, on the round sphere itself.
    EuclideanSphere,
}

impl ConstantVariant {
    pub const NAMES: [&'static str; 3] = ["sharp_m12", "general_m", "euclidean_sphere"];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "sharp_m12" => Ok(Self::SharpM12),
            "general_m" => Ok(Self::GeneralM),
            "euclidean_sphere" => Ok(Self::EuclideanSphere),
            other => Err(Error::UnknownCatalog(format!("log-Sobolev variant '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::SharpM12 => "sharp_m12",
            Self::GeneralM => "general_m",
            Self::EuclideanSphere => "euclidean_sphere",
        }
    }

    pub fn constant(&self, n: usize, m: usize) -> f64 {
        match self {
            Self::SharpM12 | Self::EuclideanSphere => sphere_area(n).ln(),
            Self::GeneralM => ((n as f64 + 1.0) * sphere_area(n + m) / sphere_area(m - 1)).ln(),
        }
    }

    pub fn coefficient(&self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            Self::EuclideanSphere => 1.0 / (2.0 * nf),
            _ => (nf + 1.0) / (2.0 * nf * nf),
        }
    }
}

/// `Σ ⊂ S^{n+m}` with a positive function `f`.
pub struct LogSobInput<'a> {
    pub surface: &'a Hypersurface,
    pub f: &'a dyn SurfaceFunction,
    pub m: usize,
    pub variant: ConstantVariant,
}

/// Native codimension of a submanifold of the unit sphere.
pub fn native_codimension(surface: &Hypersurface) -> Result<usize> {
    match surface.charts[0].ambient_kind() {
        AmbientKind::UnitSphere => Ok(surface.ambient_dim() - 1 - surface.dim()),
        AmbientKind::Euclidean => match surface.descriptor {
            SurfaceDescriptor::Sphere { radius, .. } if radius == 1.0 => Ok(0),
            _ => Err(Error::Precondition("log-Sobolev functionals need a submanifold of a unit sphere".into())),
        },
    }
}

impl<'a> LogSobInput<'a> {
    /// Input at the native codimension.
    pub fn new(surface: &'a Hypersurface, f: &'a dyn SurfaceFunction, variant: ConstantVariant) -> Result<Self> {
        let m = native_codimension(surface)?;
        Ok(Self { surface, f, m, variant })
    }

    /// Input viewing `Σ` inside a larger sphere through totally geodesic equators.
    pub fn with_codimension(mut self, m: usize) -> Result<Self> {
        let native = native_codimension(self.surface)?;
        if m < native {
            return Err(Error::InvalidInput(format!("codimension {m} is below the native codimension {native}")));
        }
        self.m = m;
        Ok(self)
    }
}

/// The integrals entering the inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogSobFunctionals {
    pub n: usize,
    pub area: f64,
    pub int_f: f64,
    pub int_f_log_f: f64,
    pub int_grad_sq_over_f: f64,
    pub min_f: f64,
    pub max_f: f64,
}

impl LogSobFunctionals {
    /// `∫f(log f + C) − (∫f) log(∫f)`.
    pub fn entropy_side(&self, constant: f64) -> f64 {
        self.int_f_log_f + constant * self.int_f - self.int_f * self.int_f.ln()
    }

    /// `c` with `n/(n+1) ∫ cf log(cf) = 1/(2n) ∫ |∇(cf)|²/(cf)`.
    pub fn normalization_constant(&self) -> f64 {
        let nf = self.n as f64;
        (((nf + 1.0) / (2.0 * nf * nf) * self.int_grad_sq_over_f - self.int_f_log_f) / self.int_f).exp()
    }

    pub fn is_constant(&self) -> bool {
        self.max_f - self.min_f <= CONSTANT_REL_TOL * self.max_f
    }
}

pub fn functionals(surface: &Hypersurface, f: &dyn SurfaceFunction) -> Result<LogSobFunctionals> {
    let points: Vec<(f64, f64, f64, f64)> = surface
        .samples
        .par_iter()
        .map(|s| {
            let d = s.derivatives(&s.jet_of(&surface.charts, f));
            let v = d.value;
            let w = s.area_weight;
            (v, w * v, w * v * v.ln(), w * d.gradient.norm_squared() / v)
        })
        .collect();
    let (min_f, max_f) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    if !(min_f > 0.0) {
        let at = points.iter().position(|p| !(p.0 > 0.0)).unwrap_or(0);
        return Err(Error::Precondition(format!(
            "f must be positive, f = {min_f:.3e} at sample {at} (params {:?})",
            surface.samples[at].params
        )));
    }
    let col = |k: usize| pairwise_sum(&points.iter().map(|p| [p.0, p.1, p.2, p.3][k]).collect::<Vec<_>>());
    Ok(LogSobFunctionals {
        n: surface.dim(),
        area: surface.area(),
        int_f: col(1),
        int_f_log_f: col(2),
        int_grad_sq_over_f: col(3),
        min_f,
        max_f,
    })
}

fn tolerance(lhs: f64, rhs: f64) -> f64 {
    1e-8 * (1.0 + lhs.abs() + rhs.abs())
}

fn check_minimal(surface: &Hypersurface) -> Result<f64> {
    if native_codimension(surface)? == 0 {
        return Ok(0.0);
    }
    let res = minimality_residual(surface)?;
    if res > MINIMALITY_TOL {
        return Err(Error::Precondition(format!("surface is not minimal: mean curvature residual {res:.3e}")));
    }
    Ok(res)
}

fn is_round_sphere(surface: &Hypersurface) -> bool {
    surface.descriptor.is_totally_geodesic() || native_codimension(surface).ok() == Some(0)
}

pub fn logsob_deficit(input: &LogSobInput<'_>) -> Result<VerificationReport> {
    let surface = input.surface;
    let minimality = check_minimal(surface)?;
    let (n, m) = (surface.dim(), input.m);
    match input.variant {
        ConstantVariant::SharpM12 if !(1..=2).contains(&m) => {
            return Err(Error::Precondition(format!("sharp_m12 needs codimension 1 or 2, got {m}")))
        }
        ConstantVariant::GeneralM if m < 2 => {
            return Err(Error::Precondition(format!("general_m needs codimension at least 2, got {m}")))
        }
        ConstantVariant::EuclideanSphere if !is_round_sphere(surface) => {
            return Err(Error::Precondition("euclidean_sphere variant needs Σ to be a unit n-sphere".into()))
        }
        ConstantVariant::SharpM12 if native_codimension(surface)? == 0 => {
            return Err(Error::Precondition("sharp_m12 needs a submanifold of a larger sphere".into()))
        }
        _ => {}
    }
    let fun = functionals(surface, input.f)?;
    let constant = input.variant.constant(n, m);
    let coeff = input.variant.coefficient(n);
    let lhs = fun.entropy_side(constant);
    let rhs = coeff * fun.int_grad_sq_over_f;
    let tol = tolerance(lhs, rhs);
    let report = VerificationReport::inequality(format!("logsob:{}", input.variant.name()), lhs, rhs, tol);
    let equality = fun.is_constant() && is_round_sphere(surface) && report.deficit.abs() <= tol;
    Ok(report
        .with_equality(equality)
        .with("variant", input.variant.name())
        .with("n", n)
        .with("m", m)
        .with("constant", constant)
        .with("coefficient", coeff)
        .with("area", fun.area)
        .with("int_f", fun.int_f)
        .with("int_f_log_f", fun.int_f_log_f)
        .with("int_grad_sq_over_f", fun.int_grad_sq_over_f)
        .with("min_f", fun.min_f)
        .with("minimality_residual", minimality)
        .with("resolution", surface.resolution))
}

/// The classical inequality on `S^n` with coefficient `1/(2n)`.
pub fn classical_sphere_check(f: &dyn SurfaceFunction, n: usize, resolution: usize) -> Result<VerificationReport> {
    let sphere = crate::geom::build_catalog_surface(&SurfaceDescriptor::Sphere { n, radius: 1.0 }, resolution)?;
    logsob_deficit(&LogSobInput::new(&sphere, f, ConstantVariant::EuclideanSphere)?)
}

/// Both coefficients on `S^n`; the larger one must give the larger deficit.
pub fn sharpness_comparison(f: &dyn SurfaceFunction, surface: &Hypersurface) -> Result<VerificationReport> {
    if !is_round_sphere(surface) {
        return Err(Error::Precondition("sharpness comparison needs Σ = S^n".into()));
    }
    let n = surface.dim();
    let weak = logsob_deficit(&LogSobInput::new(surface, f, ConstantVariant::EuclideanSphere)?)?;
    let strong_variant = if native_codimension(surface)? == 0 { None } else { Some(ConstantVariant::SharpM12) };
    let strong_coeff = ConstantVariant::SharpM12.coefficient(n);
    let fun = functionals(surface, f)?;
    let strong = match strong_variant {
        Some(v) => logsob_deficit(&LogSobInput::new(surface, f, v)?)?.deficit,
        None => strong_coeff * fun.int_grad_sq_over_f - fun.entropy_side(ConstantVariant::SharpM12.constant(n, 1)),
    };
    let gap = (strong_coeff - ConstantVariant::EuclideanSphere.coefficient(n)) * fun.int_grad_sq_over_f;
    let tol = tolerance(weak.deficit, strong);
    let report = VerificationReport::inequality("logsob:sharpness", weak.deficit, strong, tol)
        .with("coefficient_sharp", strong_coeff)
        .with("coefficient_classical", ConstantVariant::EuclideanSphere.coefficient(n))
        .with("predicted_gap", gap)
        .and_require(strong_coeff >= ConstantVariant::EuclideanSphere.coefficient(n), "coefficient_order")
        .and_require(((strong - weak.deficit) - gap).abs() <= tol, "gap_identity");
    let equality = fun.is_constant() && report.deficit.abs() <= tol;
    Ok(report.with_equality(equality))
}

/// `|S^n| ≤ |Σ|` for minimal `Σ ⊂ S^{n+m}`, `m ∈ {1, 2}`.
pub fn area_comparison(surface: &Hypersurface) -> Result<VerificationReport> {
    check_minimal(surface)?;
    let m = native_codimension(surface)?;
    if !(1..=2).contains(&m) {
        return Err(Error::Precondition(format!("area comparison needs codimension 1 or 2, got {m}")));
    }
    let n = surface.dim();
    let (small, large) = (sphere_area(n), surface.area());
    let tol = 1e-10 * large.max(1.0);
    let report = VerificationReport::inequality("logsob:area", small, large, tol);
    let equality = surface.descriptor.is_totally_geodesic() && report.deficit.abs() <= tol;
    Ok(report.with_equality(equality).with("n", n).with("m", m))
}

/// `(n+1)|S^{n+2}| = 2π|S^n|`, and the general constant at `m = 2` equals `log|S^n|`.
pub fn constant_reduction_check(n: usize) -> Result<VerificationReport> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let s = sphere_area(n);
    let residual = ((n as f64 + 1.0) * sphere_area(n + 2) - 2.0 * std::f64::consts::PI * s).abs();
    let const_gap = (ConstantVariant::GeneralM.constant(n, 2) - ConstantVariant::SharpM12.constant(n, 2)).abs();
    Ok(VerificationReport::residual("logsob:constant_reduction", residual, 1e-12 * s)
        .with("n", n)
        .with("constant_gap", const_gap)
        .and_require(const_gap <= 1e-12, "constant_gap"))
}

/// `max |Δ_Σ L + n L|` for the linear function `L = ⟨ξ, x⟩`.
pub fn eigenfunction_identity_check(surface: &Hypersurface, xi: &[f64]) -> Result<VerificationReport> {
    if xi.len() != surface.ambient_dim() {
        return Err(Error::InvalidInput(format!("ξ has {} components, ambient dimension is {}", xi.len(), surface.ambient_dim())));
    }
    check_minimal(surface)?;
    let n = surface.dim() as f64;
    let lin = crate::geom::FunctionDescriptor::Affine { constant: 0.0, xi: xi.to_vec() };
    let residual = surface
        .samples
        .par_iter()
        .map(|s| {
            let d = s.derivatives(&s.jet_of(&surface.charts, &lin));
            (d.hessian.trace() + n * d.value).abs()
        })
        .reduce(|| 0.0, f64::max);
    Ok(VerificationReport::residual("logsob:eigenfunction", residual, 1e-8)
        .with("n", surface.dim())
        .with("resolution", surface.resolution))
}

/// `(a+b) log(a+b) − a log a − b log b > 0`.
pub fn superadditivity_check(a: f64, b: f64) -> Result<VerificationReport> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!("superadditivity needs a, b > 0, got ({a}, {b})")));
    }
    let lhs = a * a.ln() + b * b.ln();
    let rhs = (a + b) * (a + b).ln();
    let report = VerificationReport::inequality("logsob:superadditivity", lhs, rhs, 0.0);
    let strict = report.deficit > 0.0;
    Ok(report.and_require(strict, "strict"))
}
