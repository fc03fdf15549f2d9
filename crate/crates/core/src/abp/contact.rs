//! Contact sets, the map Φ and Monte-Carlo covering on catalog surfaces.
//!
//! A fiber frame at a base point lists ambient directions `d_β` and matrices
//! `K_β` so that `Φ(x, c) = ∇u(x) + Σ c_β d_β(x)` and the shifted Hessian is
//! `M(x, c) = D²u(x) + Σ c_β K_β(x)`. The lower-right block of `DΦ` is the
//! identity, so `det DΦ = det M`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::solver::SurfacePDESolution;
use crate::error::Result;
use crate::geom::{Hypersurface, PointDerivatives, SurfaceFunction, SurfaceSample};
use crate::jet::Jet;
use crate::symalg::SymMatrix;

/// Absolute floor on the minimum eigenvalue for membership in V.
pub const EPS_PSD: f64 = 1e-8;
/// Largest admissible `|Φ(x₀, ·) − ξ|` for a recovered target.
pub const GAP_TOL: f64 = 1e-6;
pub const MAX_NEWTON_STEPS: usize = 20;

/// How the fiber over a base point is attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiberModel {
    /// `Σ ⊂ S^{n+m}`: coordinates `(y_1, …, y_m, t)` along the normals in the sphere and the position vector.
    SphereNormal,
    /// `Σ ⊂ R^{n+1}`: one coordinate `t` along the inward normal.
    InwardNormal,
}

pub struct FiberFrame {
    pub directions: Vec<DVector<f64>>,
    pub hessian_terms: Vec<SymMatrix>,
}

impl FiberModel {
    pub fn frame(&self, sample: &SurfaceSample) -> FiberFrame {
        let n = sample.dim();
        match self {
            FiberModel::SphereNormal => {
                let mut directions = sample.normals.clone();
                let mut hessian_terms: Vec<SymMatrix> = sample.sff.iter().map(|h| h.scale(-1.0)).collect();
                directions.push(sample.position.clone());
                hessian_terms.push(SymMatrix::identity(n));
                FiberFrame { directions, hessian_terms }
            }
            FiberModel::InwardNormal => FiberFrame {
                directions: vec![sample.normals[0].clone()],
                hessian_terms: vec![sample.sff[0].scale(-1.0)],
            },
        }
    }

    /// Number of fiber coordinates for a surface.
    pub fn fiber_dim(&self, surface: &Hypersurface) -> usize {
        match self {
            FiberModel::SphereNormal => surface.ambient_dim() - surface.dim(),
            FiberModel::InwardNormal => 1,
        }
    }
}

/// A point `(x, y, t)` of the fiber bundle with its V-membership data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactSample {
    /// Base sample index, or `None` for off-grid points found by the covering search.
    pub sample: Option<usize>,
    pub params: Vec<f64>,
    /// Normal fiber coordinates (`s` for hypersurfaces of spheres, `y` in higher codimension; empty for Euclidean hypersurfaces).
    pub y: Vec<f64>,
    pub t: f64,
    pub norm_sq: f64,
    pub min_eigenvalue: f64,
    pub in_v: bool,
    pub det_dphi: f64,
    /// `(tr M / n)^n`.
    pub amgm_value: f64,
    pub bound_value: f64,
    /// Admissible t-interval at the base point.
    pub t_range: (f64, f64),
}

/// A geometric problem whose contact set is being sampled.
pub trait ContactProblem: Sync {
    fn surface(&self) -> &Hypersurface;
    fn solution(&self) -> &SurfacePDESolution;
    fn model(&self) -> FiberModel;
    /// Upper bound for `det DΦ` at `(x, t)`.
    fn bound(&self, sample: &SurfaceSample, du: &PointDerivatives, t: f64) -> f64;
    /// Range of `t` implied by the Jacobian lemma at the base point.
    fn t_range(&self, sample: &SurfaceSample, du: &PointDerivatives) -> (f64, f64);
}

/// Split fiber coordinates `c` into `(y, t)` for the given model.
fn split(model: FiberModel, c: &[f64]) -> (Vec<f64>, f64) {
    match model {
        FiberModel::SphereNormal => (c[..c.len() - 1].to_vec(), c[c.len() - 1]),
        FiberModel::InwardNormal => (Vec::new(), c[0]),
    }
}

pub fn evaluate_contact(
    problem: &dyn ContactProblem,
    sample: &SurfaceSample,
    index: Option<usize>,
    du: &PointDerivatives,
    frame: &FiberFrame,
    c: &[f64],
) -> ContactSample {
    let n = sample.dim();
    let mut m = du.hessian.clone();
    for (cb, k) in c.iter().zip(&frame.hessian_terms) {
        m = m.add(&k.scale(*cb));
    }
    let norm_sq = du.gradient.norm_squared() + c.iter().map(|v| v * v).sum::<f64>();
    let min_eigenvalue = m.min_eigenvalue();
    let (y, t) = split(problem.model(), c);
    ContactSample {
        sample: index,
        params: sample.params.clone(),
        y,
        t,
        norm_sq,
        min_eigenvalue,
        in_v: norm_sq < 1.0 && min_eigenvalue >= -EPS_PSD,
        det_dphi: m.determinant(),
        amgm_value: (m.trace() / n as f64).powi(n as i32),
        bound_value: problem.bound(sample, du, t),
        t_range: problem.t_range(sample, du),
    }
}

/// Fiber grid: the same nodes on every normal axis, and a separate t-axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberGrid {
    pub normal: Vec<f64>,
    pub t: Vec<f64>,
}

impl FiberGrid {
    /// `nodes` equispaced points on `[−1, 1]` for every fiber axis.
    pub fn uniform(nodes: usize) -> Self {
        let axis = linspace(-1.0, 1.0, nodes);
        Self { normal: axis.clone(), t: axis }
    }

    /// Nested grid with `2^level + 1` nodes per axis on `[−1, 1]`.
    pub fn dyadic(level: u32) -> Self {
        Self::uniform((1usize << level) + 1)
    }

    pub fn t_only(lo: f64, hi: f64, nodes: usize) -> Self {
        Self { normal: Vec::new(), t: linspace(lo, hi, nodes) }
    }

    fn points(&self, model: FiberModel, fiber_dim: usize) -> Vec<Vec<f64>> {
        let normal_axes = match model {
            FiberModel::SphereNormal => fiber_dim - 1,
            FiberModel::InwardNormal => 0,
        };
        let mut out = vec![Vec::new()];
        for _ in 0..normal_axes {
            out = out.into_iter().flat_map(|p| self.normal.iter().map(move |v| [p.clone(), vec![*v]].concat())).collect();
        }
        out.into_iter().flat_map(|p| self.t.iter().map(move |v| [p.clone(), vec![*v]].concat())).collect()
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Every grid point of `Σ × fiber grid` with membership flags.
pub fn sample_contact_set(problem: &dyn ContactProblem, grid: &FiberGrid) -> Vec<ContactSample> {
    let surface = problem.surface();
    let sol = problem.solution();
    let model = problem.model();
    let points = grid.points(model, model.fiber_dim(surface));
    surface
        .samples
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, s)| {
            let du = sol.u.at(i);
            let frame = model.frame(s);
            points.iter().map(move |c| evaluate_contact(problem, s, Some(i), &du, &frame, c)).collect::<Vec<_>>()
        })
        .collect()
}

/// Outcome of the Monte-Carlo covering test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringResult {
    pub total_samples: usize,
    pub recovered: usize,
    /// Max `|Φ(x₀, ·) − ξ|` over all targets.
    pub worst_gap: f64,
    pub fraction: f64,
    /// Targets whose minimizer reproduced ξ but failed the V-membership test.
    pub outside_v: usize,
    pub worst_min_eigenvalue: f64,
    /// Max `|∇u|² + |y|² + t²` at the recovered points.
    pub max_norm_sq: f64,
    /// Min `|∇u|² + |y|² + t²`, used for the annulus variant.
    pub min_norm_sq: f64,
    /// Jacobian-bound violations at the recovered points.
    pub bound_violations: usize,
    pub newton_steps_max: usize,
}

/// `count` targets uniform in `{r ≤ |ξ| < 1} ⊂ R^dim`.
pub fn uniform_targets(dim: usize, count: usize, inner_radius: f64, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let r2 = v.norm_squared();
        if r2 < 1.0 && r2 >= inner_radius * inner_radius && r2 > 0.0 {
            out.push(v);
        }
    }
    out
}

struct Minimizer {
    sample: SurfaceSample,
    value: f64,
    steps: usize,
}

fn shifted_jet(sample: &SurfaceSample, surface: &Hypersurface, u: &dyn SurfaceFunction, xi: &DVector<f64>) -> Jet {
    let ju = sample.jet_of(&surface.charts, u);
    sample.embedding.iter().zip(xi.iter()).fold(ju, |acc, (x, c)| acc - *x * *c)
}

/// Riemannian Newton for `v = u − ⟨ξ, x⟩` from a grid point, retracting through the chart.
fn minimize(surface: &Hypersurface, u: &dyn SurfaceFunction, xi: &DVector<f64>, start: &SurfaceSample) -> Result<Minimizer> {
    let chart = &surface.charts[start.chart];
    let mut sample = surface.sample_at(start.chart, &start.params)?;
    let mut d = sample.derivatives(&shifted_jet(&sample, surface, u, xi));
    let mut steps = 0;
    while steps < MAX_NEWTON_STEPS && d.gradient.norm() > 1e-14 {
        steps += 1;
        let g = &d.gradient;
        let mut dir = match nalgebra::Cholesky::new(d.hessian.matrix().clone()) {
            Some(ch) => -ch.solve(g),
            None => -g.clone(),
        };
        if dir.norm() > 0.5 {
            dir *= 0.5 / dir.norm();
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let x = &sample.position + sample.ambient_tangent(&(&dir * alpha));
            let params = chart.locate(&x);
            if let Ok(trial) = surface.sample_at(start.chart, &params) {
                let dt = trial.derivatives(&shifted_jet(&trial, surface, u, xi));
                let tiny = alpha * dir.norm() < 1e-6;
                if dt.value < d.value || (tiny && dt.gradient.norm() < g.norm()) {
                    accepted = Some((trial, dt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((s, dt)) => {
                sample = s;
                d = dt;
            }
            None => break,
        }
    }
    Ok(Minimizer { value: d.value, sample, steps })
}

/// Recover each target ξ as `Φ(x₀, y₀, t₀)` at a global minimizer of `u − ⟨ξ, x⟩`.
pub fn covering_check(problem: &dyn ContactProblem, targets: &[DVector<f64>]) -> Result<CoveringResult> {
    let surface = problem.surface();
    let sol = problem.solution();
    let model = problem.model();
    let positions: Vec<&DVector<f64>> = surface.samples.iter().map(|s| &s.position).collect();
    struct Outcome {
        gap: f64,
        contact: Option<ContactSample>,
        steps: usize,
    }
    let outcomes: Vec<Outcome> = targets
        .par_iter()
        .map(|xi| {
            let (best, grid_min) = positions
                .iter()
                .enumerate()
                .map(|(i, x)| (i, sol.u.values[i] - x.dot(xi)))
                .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
            let Ok(min) = minimize(surface, &sol.function, xi, &surface.samples[best]) else {
                return Outcome { gap: f64::INFINITY, contact: None, steps: MAX_NEWTON_STEPS };
            };
            let s = &min.sample;
            let du = s.derivatives(&s.jet_of(&surface.charts, &sol.function));
            let frame = model.frame(s);
            let c: Vec<f64> = frame.directions.iter().map(|d| d.dot(xi)).collect();
            let phi = frame.directions.iter().zip(&c).fold(s.ambient_tangent(&du.gradient), |acc, (d, cb)| acc + d * *cb);
            let gap = (phi - xi).norm();
            let contact = evaluate_contact(problem, s, None, &du, &frame, &c);
            let global = min.value <= grid_min + 1e-12;
            Outcome { gap, contact: global.then_some(contact), steps: min.steps }
        })
        .collect();
    let total = targets.len();
    let mut res = CoveringResult {
        total_samples: total,
        recovered: 0,
        worst_gap: 0.0,
        fraction: 0.0,
        outside_v: 0,
        worst_min_eigenvalue: f64::INFINITY,
        max_norm_sq: 0.0,
        min_norm_sq: f64::INFINITY,
        bound_violations: 0,
        newton_steps_max: 0,
    };
    for o in &outcomes {
        res.worst_gap = res.worst_gap.max(o.gap);
        res.newton_steps_max = res.newton_steps_max.max(o.steps);
        let Some(c) = &o.contact else { continue };
        if o.gap > GAP_TOL {
            continue;
        }
        if !c.in_v {
            res.outside_v += 1;
            continue;
        }
        res.recovered += 1;
        res.worst_min_eigenvalue = res.worst_min_eigenvalue.min(c.min_eigenvalue);
        res.max_norm_sq = res.max_norm_sq.max(c.norm_sq);
        res.min_norm_sq = res.min_norm_sq.min(c.norm_sq);
        if c.det_dphi > c.bound_value + JACOBIAN_TOL {
            res.bound_violations += 1;
        }
    }
    res.fraction = if total == 0 { 1.0 } else { res.recovered as f64 / total as f64 };
    Ok(res)
}

/// Absolute tolerance of the pointwise Jacobian bounds.
pub const JACOBIAN_TOL: f64 = 1e-8;

/// Summary of the pointwise Jacobian-lemma checks over in-V samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianSummary {
    pub in_v: usize,
    pub total: usize,
    /// `max(det DΦ − bound)` over in-V samples.
    pub worst_bound_violation: f64,
    /// `max(det M − (tr M/n)^n)`.
    pub worst_amgm_violation: f64,
    /// `max(−det DΦ)`.
    pub worst_negative_det: f64,
    /// Largest distance of `t` outside the admissible range.
    pub worst_t_range_violation: f64,
    /// Number of in-V samples where any check fails.
    pub failures: usize,
    /// Samples with `det DΦ = bound` within tolerance.
    pub equalities: usize,
}

pub fn jacobian_summary(samples: &[ContactSample]) -> JacobianSummary {
    let mut out = JacobianSummary {
        in_v: 0,
        total: samples.len(),
        worst_bound_violation: f64::NEG_INFINITY,
        worst_amgm_violation: f64::NEG_INFINITY,
        worst_negative_det: f64::NEG_INFINITY,
        worst_t_range_violation: 0.0,
        failures: 0,
        equalities: 0,
    };
    for c in samples.iter().filter(|c| c.in_v) {
        out.in_v += 1;
        let bound = c.det_dphi - c.bound_value;
        let amgm = c.det_dphi - c.amgm_value;
        let t_out = (c.t_range.0 - c.t).max(c.t - c.t_range.1).max(0.0);
        out.worst_bound_violation = out.worst_bound_violation.max(bound);
        out.worst_amgm_violation = out.worst_amgm_violation.max(amgm);
        out.worst_negative_det = out.worst_negative_det.max(-c.det_dphi);
        out.worst_t_range_violation = out.worst_t_range_violation.max(t_out);
        if bound > JACOBIAN_TOL || amgm > JACOBIAN_TOL || -c.det_dphi > JACOBIAN_TOL || t_out > JACOBIAN_TOL {
            out.failures += 1;
        }
        if bound.abs() <= JACOBIAN_TOL {
            out.equalities += 1;
        }
    }
    out
}

/// Covering fractions of a discrete contact set on nested fiber grids.
///
/// A target counts at a level when some in-V node `(x_i, c)` of that level has
/// `|Φ(x_i, c) − ξ| ≤ delta`. The base points are fixed and the fiber grids are
/// nested, so the fractions are nondecreasing in the level.
pub fn fiber_grid_covering(problem: &dyn ContactProblem, targets: &[DVector<f64>], levels: &[u32], delta: f64) -> Vec<f64> {
    let surface = problem.surface();
    let sol = problem.solution();
    let model = problem.model();
    let bases: Vec<(PointDerivatives, FiberFrame, DVector<f64>)> = surface
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let du = sol.u.at(i);
            let grad = s.ambient_tangent(&du.gradient);
            (du, model.frame(s), grad)
        })
        .collect();
    levels
        .iter()
        .map(|&level| {
            let nodes = (1usize << level) + 1;
            let h = 2.0 / (nodes - 1) as f64;
            let hit = targets
                .par_iter()
                .filter(|xi| {
                    bases.iter().enumerate().any(|(i, (du, frame, grad))| {
                        let cstar: Vec<f64> = frame.directions.iter().map(|d| d.dot(xi)).collect();
                        let phi0 = frame.directions.iter().zip(&cstar).fold(grad.clone(), |acc, (d, c)| acc + d * *c);
                        let tangential = (phi0 - *xi).norm_squared();
                        if tangential > delta * delta {
                            return false;
                        }
                        let radius = (delta * delta - tangential).sqrt();
                        // nodes within `radius` of c* in each coordinate
                        let ranges: Vec<Vec<f64>> = cstar
                            .iter()
                            .map(|c| {
                                let lo = ((c - radius + 1.0) / h).ceil().max(0.0) as usize;
                                let hi = ((c + radius + 1.0) / h).floor().min((nodes - 1) as f64);
                                if hi < 0.0 {
                                    return Vec::new();
                                }
                                (lo..=hi as usize).map(|j| -1.0 + j as f64 * h).collect()
                            })
                            .collect();
                        let mut stack = vec![Vec::new()];
                        for r in &ranges {
                            stack = stack.into_iter().flat_map(|p: Vec<f64>| r.iter().map(move |v| [p.clone(), vec![*v]].concat())).collect();
                        }
                        stack.iter().any(|c| {
                            let d2: f64 = c.iter().zip(&cstar).map(|(a, b)| (a - b) * (a - b)).sum();
                            d2 <= radius * radius
                                && evaluate_contact(problem, &surface.samples[i], Some(i), du, frame, c).in_v
                        })
                    })
                })
                .count();
            hit as f64 / targets.len().max(1) as f64
        })
        .collect()
}
