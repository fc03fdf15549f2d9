//! The contact-set argument for the quermassintegral inequality on convex hypersurfaces.

use super::contact::{jacobian_summary, ContactProblem, ContactSample, FiberGrid, FiberModel, JACOBIAN_TOL};
use super::solver::{solve_divergence_form, NewtonTensorCoefficient, SurfacePDESolution};
use crate::error::{Error, Result};
use crate::geom::{Chart, Hypersurface, PointDerivatives, SurfaceSample};
use crate::numeric::binomial;
use crate::quermass::{functionals, sample_quantities};
use crate::report::VerificationReport;

pub const QUERMASS_PDE_TOL: f64 = 1e-6;
pub const T_GRID_NODES: usize = 200;

/// `Σ` rescaled so that `∫H_k = ∫H_{k+1}`, with the solution of `div(T_k∇u) = (n−k)C(n,k)(H_k − H_{k+1})`.
#[derive(Debug, Clone)]
pub struct QuermassSolution {
    pub k: usize,
    pub scale: f64,
    pub surface: Hypersurface,
    pub solution: SurfacePDESolution,
    /// `max H_k / H_{k+1}` over the rescaled samples.
    pub max_ratio: f64,
}

fn quermass_rhs(sample: &SurfaceSample, k: usize) -> f64 {
    let n = sample.dim();
    let (hk, hk1, _) = sample_quantities(sample, k).expect("order checked by caller");
    (n - k) as f64 * binomial(n, k) * (hk - hk1)
}

pub fn solve_quermass_pde(surface: &Hypersurface, k: usize) -> Result<QuermassSolution> {
    let n = surface.dim();
    if n < 2 || k + 2 > n {
        return Err(Error::Domain(format!("need n ≥ 2 and 0 ≤ k ≤ n − 2, got n = {n}, k = {k}")));
    }
    let fun = functionals(surface, k)?;
    let scale = fun.int_hk1 / fun.int_hk;
    let scaled = surface.scaled(scale)?;
    let rhs = |s: &SurfaceSample, _: &[Chart]| quermass_rhs(s, k);
    let solution = solve_divergence_form(&scaled, &NewtonTensorCoefficient { k }, &rhs, QUERMASS_PDE_TOL)?;
    let max_ratio = scaled
        .samples
        .iter()
        .map(|s| {
            let (hk, hk1, _) = sample_quantities(s, k).expect("order checked");
            hk / hk1
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(QuermassSolution { k, scale, surface: scaled, solution, max_ratio })
}

impl QuermassSolution {
    /// The t-fiber grid over `[−1, max H_k/H_{k+1} − 1]`.
    pub fn t_grid(&self, nodes: usize) -> FiberGrid {
        FiberGrid::t_only(-1.0, self.max_ratio - 1.0, nodes)
    }

    pub fn problem(&self) -> QuermassProblem<'_> {
        QuermassProblem { solution: self }
    }
}

pub struct QuermassProblem<'a> {
    pub solution: &'a QuermassSolution,
}

impl ContactProblem for QuermassProblem<'_> {
    fn surface(&self) -> &Hypersurface {
        &self.solution.surface
    }

    fn solution(&self) -> &SurfacePDESolution {
        &self.solution.solution
    }

    fn model(&self) -> FiberModel {
        FiberModel::InwardNormal
    }

    fn bound(&self, sample: &SurfaceSample, _du: &PointDerivatives, t: f64) -> f64 {
        let n = sample.dim();
        let k = self.solution.k;
        let (hk, hk1, tk) = sample_quantities(sample, k).expect("order checked");
        (binomial(n - 1, k) * (hk - (1.0 + t) * hk1)).powi(n as i32) / tk.determinant()
    }

    fn t_range(&self, sample: &SurfaceSample, _du: &PointDerivatives) -> (f64, f64) {
        let (hk, hk1, _) = sample_quantities(sample, self.solution.k).expect("order checked");
        (-1.0, hk / hk1 - 1.0)
    }
}

/// Lemma checks on the t-fiber contact set: curvature sign, Jacobian bound, AM-GM step and t-range.
pub fn quermass_jacobian_check(sol: &QuermassSolution, samples: &[ContactSample]) -> VerificationReport {
    let s = jacobian_summary(samples);
    let surface = &sol.surface;
    let worst_sign = samples
        .iter()
        .filter(|c| c.in_v)
        .map(|c| {
            let i = c.sample.expect("grid sample");
            let (hk, hk1, _) = sample_quantities(&surface.samples[i], sol.k).expect("order checked");
            hk - (1.0 + c.t) * hk1
        })
        .fold(f64::INFINITY, f64::min);
    let worst = if s.in_v == 0 { 0.0 } else { s.worst_bound_violation };
    VerificationReport::inequality("abp.quermass_jacobian", worst, 0.0, JACOBIAN_TOL)
        .with("in_v", s.in_v)
        .with("total", s.total)
        .with("failures", s.failures)
        .with("equalities", s.equalities)
        .with("min_curvature_gap", if worst_sign.is_finite() { worst_sign } else { 0.0 })
        .with("worst_t_range_violation", s.worst_t_range_violation)
        .with("scale", sol.scale)
        .and_require(s.failures == 0, "all_in_v_samples")
        .and_require(worst_sign >= -JACOBIAN_TOL, "curvature_gap_nonnegative")
        .and_require(s.in_v > 0, "nonempty_contact_set")
}
