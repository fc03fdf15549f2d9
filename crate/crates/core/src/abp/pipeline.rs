//! End-to-end runs of each contact-set argument, reported as a list of checks.

use super::contact::{covering_check, sample_contact_set, uniform_targets, CoveringResult, FiberGrid, FiberModel, GAP_TOL};
use super::logsob::{
    annulus_chain_check, jacobian_bound_check, normalize_f, pointwise_laplacian_bound, solve_logsob_pde, volume_chain_check_m1,
    LogSobProblem, LOGSOB_PDE_TOL,
};
use super::quermass::{quermass_jacobian_check, solve_quermass_pde, QUERMASS_PDE_TOL, T_GRID_NODES};
use super::serre::{serre_contact_samples, serre_covering_check, serre_jacobian_check, solve_serre_pde, CollocationGrid, COVERING_DELTA};
use super::solver::SurfacePDESolution;
use crate::error::Result;
use crate::geom::{Hypersurface, SurfaceFunction};
use crate::report::VerificationReport;
use crate::serre::{EuclideanDomain, MatrixField};

/// Required fraction of recovered covering targets.
pub const COVERING_FRACTION: f64 = 0.999;
/// Accuracy of the fiber quadrature in the volume chain.
pub const FIBER_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct AbpOptions {
    pub targets: usize,
    pub seed: u64,
    /// Nodes per fiber axis of the contact-set sweep.
    pub fiber_nodes: usize,
}

impl Default for AbpOptions {
    fn default() -> Self {
        Self { targets: 10_000, seed: 1, fiber_nodes: 41 }
    }
}

pub fn covering_report(check: &str, r: &CoveringResult) -> VerificationReport {
    VerificationReport::inequality(check, COVERING_FRACTION, r.fraction, 0.0)
        .with("targets", r.total_samples)
        .with("recovered", r.recovered)
        .with("worst_gap", r.worst_gap)
        .with("outside_v", r.outside_v)
        .with("bound_violations", r.bound_violations)
        .with("newton_steps_max", r.newton_steps_max)
        .with("max_norm_sq", r.max_norm_sq)
        .with("min_norm_sq", if r.min_norm_sq.is_finite() { r.min_norm_sq } else { 0.0 })
        .and_require(r.worst_gap <= GAP_TOL, "worst_gap")
        .and_require(r.bound_violations == 0, "bound_at_minimizers")
}

fn pde_report(check: &str, sol: &SurfacePDESolution, tol: f64) -> VerificationReport {
    let mut r = VerificationReport::residual(check, sol.residual_norm, tol)
        .with("solver", sol.solver)
        .with("internal_resolution", sol.internal_resolution)
        .with("rhs_integral", sol.rhs_integral);
    if let Some(d) = sol.degree {
        r.set("degree", d);
    }
    r
}

/// Normalization, PDE, pointwise bounds, covering and the volume chain for `Σ ⊂ S^{n+1}`.
pub fn logsob_m1(surface: &Hypersurface, f: &dyn SurfaceFunction, opts: &AbpOptions) -> Result<Vec<VerificationReport>> {
    let density = normalize_f(surface, f)?;
    let fnorm = density.function(f);
    let sol = solve_logsob_pde(surface, &fnorm)?;
    let problem = LogSobProblem { surface, solution: &sol, f: &fnorm };
    let mut out = vec![pde_report("abp.logsob_pde", &sol, LOGSOB_PDE_TOL)
        .with("log_c", density.log_c)
        .with("balance_residual", density.balance_residual)];
    out.push(pointwise_laplacian_bound(surface, &fnorm, &sol));
    let contacts = sample_contact_set(&problem, &FiberGrid::uniform(opts.fiber_nodes));
    out.push(jacobian_bound_check(&contacts).with("fiber_nodes", opts.fiber_nodes));
    let dim = surface.dim() + FiberModel::SphereNormal.fiber_dim(surface);
    let targets = uniform_targets(dim, opts.targets, 0.0, opts.seed);
    out.push(covering_report("abp.logsob_covering", &covering_check(&problem, &targets)?).with("seed", opts.seed));
    out.push(volume_chain_check_m1(&problem, FIBER_TOL)?);
    Ok(out)
}

/// The annulus variant for higher codimension: PDE, covering of an annulus, and the radius chain.
pub fn logsob_annulus(
    surface: &Hypersurface,
    f: &dyn SurfaceFunction,
    r_grid: &[f64],
    inner_radius: f64,
    opts: &AbpOptions,
) -> Result<Vec<VerificationReport>> {
    let density = normalize_f(surface, f)?;
    let fnorm = density.function(f);
    let sol = solve_logsob_pde(surface, &fnorm)?;
    let problem = LogSobProblem { surface, solution: &sol, f: &fnorm };
    let mut out = vec![pde_report("abp.logsob_pde", &sol, LOGSOB_PDE_TOL).with("log_c", density.log_c)];
    let contacts = sample_contact_set(&problem, &FiberGrid::uniform(opts.fiber_nodes));
    out.push(jacobian_bound_check(&contacts).with("fiber_nodes", opts.fiber_nodes));
    let dim = surface.dim() + FiberModel::SphereNormal.fiber_dim(surface);
    let targets = uniform_targets(dim, opts.targets, inner_radius, opts.seed);
    let cover = covering_check(&problem, &targets)?;
    let inner_ok = cover.recovered == 0 || cover.min_norm_sq >= inner_radius * inner_radius - 1e-12;
    out.push(
        covering_report("abp.logsob_annulus_covering", &cover)
            .with("seed", opts.seed)
            .with("inner_radius", inner_radius)
            .and_require(inner_ok, "annulus_inner_radius"),
    );
    out.push(annulus_chain_check(&problem, r_grid)?);
    Ok(out)
}

/// Rescaling, the Newton-tensor PDE, the Jacobian lemma on the t-fiber grid and covering.
pub fn quermass(surface: &Hypersurface, k: usize, opts: &AbpOptions) -> Result<Vec<VerificationReport>> {
    let sol = solve_quermass_pde(surface, k)?;
    let problem = sol.problem();
    let mut out = vec![pde_report("abp.quermass_pde", &sol.solution, QUERMASS_PDE_TOL).with("scale", sol.scale).with("k", k)];
    let contacts = sample_contact_set(&problem, &sol.t_grid(T_GRID_NODES));
    out.push(quermass_jacobian_check(&sol, &contacts).with("t_nodes", T_GRID_NODES));
    let targets = uniform_targets(surface.dim() + 1, opts.targets, 0.0, opts.seed);
    out.push(covering_report("abp.quermass_covering", &covering_check(&problem, &targets)?).with("seed", opts.seed));
    Ok(out)
}

/// The Neumann problem on a planar domain, the determinant lemma and covering of `(1 − δ)B²`.
pub fn serre(
    domain: &EuclideanDomain,
    field: &dyn MatrixField,
    grid: CollocationGrid,
    opts: &AbpOptions,
) -> Result<Vec<VerificationReport>> {
    let sol = solve_serre_pde(domain, field, grid)?;
    let mut out = vec![sol.residual_report()];
    let samples = serre_contact_samples(&sol, field);
    out.push(serre_jacobian_check(&sol, &samples));
    let targets = uniform_targets(2, opts.targets, 0.0, opts.seed);
    let cover = serre_covering_check(&sol, field, &targets, COVERING_DELTA);
    out.push(
        covering_report("abp.serre_covering", &cover.result)
            .with("seed", opts.seed)
            .with("delta", cover.delta)
            .with("boundary_minimizers", cover.boundary_minimizers)
            .and_require(cover.boundary_minimizers == 0, "interior_minimizers"),
    );
    Ok(out)
}
