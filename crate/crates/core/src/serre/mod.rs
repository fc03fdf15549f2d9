//! Sobolev-type inequality for positive symmetric matrix fields on Euclidean domains.
//!
//! For `A` uniformly positive on `Ω ⊂ ℝⁿ`,
//! `n^{(n−1)/n} |S^{n−1}|^{1/n} (∫_Ω (det A)^{1/(n−1)})^{(n−1)/n} ≤ ∫_∂Ω |Aν| + ∫_Ω |Div A|`,
//! with equality for `A = cof D²u` when `∇u(Ω)` is a ball centered at the origin.

pub mod domain;
pub mod field;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use domain::{BoundaryNode, DomainDescriptor, DomainShape, EuclideanDomain, InteriorNode, RadialProfile, RadialTerm};
pub use field::{divergence, fd_divergence, CatalogField, FdField, FieldDescriptor, MatrixField, Potential};

use crate::error::{Error, Result};
use crate::numeric::{pairwise_sum, sphere_area};
use crate::report::{scale_of, VerificationReport};

/// Minimum eigenvalue accepted by the positivity sweep.
pub const POSITIVITY_FLOOR: f64 = 1e-10;
/// Relative tolerance of `check_serre`.
pub const SERRE_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerreFunctionals {
    pub bulk: f64,
    pub boundary: f64,
    pub div_term: f64,
}

impl SerreFunctionals {
    /// `n^{(n−1)/n} |S^{n−1}|^{1/n} bulk^{(n−1)/n}`.
    pub fn lhs(&self, n: usize) -> f64 {
        let nf = n as f64;
        nf.powf((nf - 1.0) / nf) * sphere_area(n - 1).powf(1.0 / nf) * self.bulk.powf((nf - 1.0) / nf)
    }

    pub fn rhs(&self) -> f64 {
        self.boundary + self.div_term
    }

    /// The constant `c` for which `cA` satisfies `n ∫ (det cA)^{1/(n−1)} = ∫ |cAν| + ∫ |Div cA|`.
    pub fn scaling_constant(&self, n: usize) -> f64 {
        (self.rhs() / (n as f64 * self.bulk)).powi(n as i32 - 1)
    }
}

/// FD step used when a field has no analytic divergence.
pub fn fd_step(domain: &EuclideanDomain) -> f64 {
    1e-5 * domain.diameter
}

fn positivity_sweep(domain: &EuclideanDomain, field: &dyn MatrixField) -> Result<()> {
    if field.dim() != domain.n {
        return Err(Error::InvalidInput(format!(
            "field dimension {} does not match domain dimension {}",
            field.dim(),
            domain.n
        )));
    }
    let points = domain.interior.iter().map(|p| &p.x).chain(domain.boundary.iter().map(|b| &b.x));
    let worst = points
        .map(|x| (field.value(x).min_eigenvalue(), x))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    match worst {
        Some((lam, x)) if !(lam >= POSITIVITY_FLOOR) => Err(Error::Precondition(format!(
            "matrix field is not uniformly positive: min eigenvalue {lam:.3e} at x = {:?}",
            x.as_slice()
        ))),
        _ => Ok(()),
    }
}

/// `bulk = ∫_Ω (det A)^{1/(n−1)}`, `boundary = ∫_∂Ω |Aν|`, `div_term = ∫_Ω |Div A|`.
pub fn serre_functionals(domain: &EuclideanDomain, field: &dyn MatrixField) -> Result<SerreFunctionals> {
    positivity_sweep(domain, field)?;
    let n = domain.n;
    let h = fd_step(domain);
    let expo = 1.0 / (n as f64 - 1.0);
    let (bulk_terms, div_terms): (Vec<f64>, Vec<f64>) = domain
        .interior
        .par_iter()
        .map(|p| {
            let a = field.value(&p.x);
            let d = divergence(field, &p.x, h);
            (p.weight * a.determinant().powf(expo), p.weight * d.norm())
        })
        .unzip();
    let boundary_terms: Vec<f64> = domain
        .boundary
        .par_iter()
        .map(|b| b.weight * (field.value(&b.x).matrix() * &b.normal).norm())
        .collect();
    Ok(SerreFunctionals {
        bulk: pairwise_sum(&bulk_terms),
        boundary: pairwise_sum(&boundary_terms),
        div_term: pairwise_sum(&div_terms),
    })
}

pub fn check_serre(domain: &EuclideanDomain, field: &dyn MatrixField) -> Result<VerificationReport> {
    let f = serre_functionals(domain, field)?;
    let (lhs, rhs) = (f.lhs(domain.n), f.rhs());
    let tol = SERRE_REL_TOL * scale_of(lhs, rhs);
    let report = VerificationReport::inequality("serre", lhs, rhs, tol);
    let equality = report.deficit.abs() <= tol;
    Ok(report
        .with_equality(equality)
        .with("bulk", f.bulk)
        .with("boundary", f.boundary)
        .with("div_term", f.div_term)
        .with("n", domain.n)
        .with("resolution", domain.resolution)
        .with("convex", domain.convex))
}

/// `A = cof D²u` for a potential that is strictly convex on `Ω̄`.
pub fn build_equality_case(potential: &Potential, domain: &EuclideanDomain) -> Result<CatalogField> {
    let field = FieldDescriptor::Cofactor { potential: potential.clone() }.instantiate(domain.n)?;
    let points = domain.interior.iter().map(|p| &p.x).chain(domain.boundary.iter().map(|b| &b.x));
    for x in points {
        let lam = potential.hessian(x).min_eigenvalue();
        if !(lam > POSITIVITY_FLOOR) {
            return Err(Error::Precondition(format!(
                "potential is not strictly convex: min Hessian eigenvalue {lam:.3e} at x = {:?}",
                x.as_slice()
            )));
        }
    }
    Ok(field)
}

/// `max_{interior} |Div A|`.
pub fn divergence_free_residual(field: &dyn MatrixField, domain: &EuclideanDomain) -> f64 {
    let h = fd_step(domain);
    domain
        .interior
        .par_iter()
        .map(|p| divergence(field, &p.x, h).norm())
        .reduce(|| 0.0, f64::max)
}

/// FD divergence residual, ignoring any analytic callback.
pub fn divergence_free_residual_fd(field: &dyn MatrixField, domain: &EuclideanDomain) -> f64 {
    let h = fd_step(domain);
    domain
        .interior
        .par_iter()
        .map(|p| fd_divergence(field, &p.x, h).norm())
        .reduce(|| 0.0, f64::max)
}

/// Point at which `A` is evaluated during positivity checks; exposed for diagnostics.
pub fn min_eigenvalue_over(domain: &EuclideanDomain, field: &dyn MatrixField) -> (f64, DVector<f64>) {
    domain
        .interior
        .iter()
        .map(|p| &p.x)
        .chain(domain.boundary.iter().map(|b| &b.x))
        .map(|x| (field.value(x).min_eigenvalue(), x.clone()))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap_or((f64::NAN, DVector::zeros(domain.n)))
}
