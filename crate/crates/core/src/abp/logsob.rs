//! The contact-set argument for the log-Sobolev inequality on minimal submanifolds of spheres.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contact::{jacobian_summary, ContactProblem, ContactSample, FiberModel, JACOBIAN_TOL};
use super::solver::{solve_divergence_form, ScalarCoefficient, SurfacePDESolution};
use crate::error::{Error, Result};
use crate::geom::{surface_gradient_hessian, Hypersurface, PointDerivatives, ScalarField, Scaled, SurfaceFunction, SurfaceInput, SurfaceSample};
use crate::logsob::{functionals, native_codimension};
use crate::numeric::{ball_volume, gauss_legendre, pairwise_sum, sphere_area};
use crate::report::{scale_of, VerificationReport};
use crate::symalg::SymMatrix;

/// Solver tolerance on the pointwise residual.
pub const LOGSOB_PDE_TOL: f64 = 1e-8;
pub const BALANCE_TOL: f64 = 1e-10;

/// `c·f` balanced so that `n/(n+1) ∫ cf log(cf) = 1/(2n) ∫ |∇(cf)|²/(cf)`.
#[derive(Debug, Clone)]
pub struct NormalizedDensity {
    pub log_c: f64,
    pub field: ScalarField,
    /// `|n/(n+1) ∫ cf log cf − 1/(2n) ∫ |∇cf|²/cf|`.
    pub balance_residual: f64,
}

impl NormalizedDensity {
    pub fn scale(&self) -> f64 {
        self.log_c.exp()
    }

    /// `c·f` as an analytic function.
    pub fn function<'a>(&self, f: &'a dyn SurfaceFunction) -> Scaled<'a> {
        Scaled { factor: self.scale(), inner: f }
    }
}

fn balance(surface: &Hypersurface, f: &dyn SurfaceFunction) -> Result<(f64, f64)> {
    let fun = functionals(surface, f)?;
    let n = surface.dim() as f64;
    let entropy = n / (n + 1.0) * fun.int_f_log_f;
    let fisher = fun.int_grad_sq_over_f / (2.0 * n);
    Ok((entropy, fisher))
}

pub fn normalize_f(surface: &Hypersurface, f: &dyn SurfaceFunction) -> Result<NormalizedDensity> {
    if surface.dim() == 0 {
        return Err(Error::InvalidInput("surface has dimension zero".into()));
    }
    let fun = functionals(surface, f)?;
    let n = surface.dim() as f64;
    let log_c = ((n + 1.0) / (2.0 * n * n) * fun.int_grad_sq_over_f - fun.int_f_log_f) / fun.int_f;
    let scaled = Scaled { factor: log_c.exp(), inner: f };
    let (entropy, fisher) = balance(surface, &scaled)?;
    let field = surface_gradient_hessian(SurfaceInput::Analytic(&scaled), surface)?;
    Ok(NormalizedDensity { log_c, field, balance_residual: (entropy - fisher).abs() })
}

/// Right-hand side `n/(n+1) f log f − |∇f|²/(2n f)`.
pub fn logsob_rhs(sample: &SurfaceSample, charts: &[crate::geom::Chart], f: &dyn SurfaceFunction) -> f64 {
    let n = sample.dim() as f64;
    let d = sample.derivatives(&sample.jet_of(charts, f));
    n / (n + 1.0) * d.value * d.value.ln() - d.gradient.norm_squared() / (2.0 * n * d.value)
}

/// Solve `div(f∇u) = n/(n+1) f log f − |∇f|²/(2n f)` for a balanced `f`.
pub fn solve_logsob_pde(surface: &Hypersurface, f_normalized: &dyn SurfaceFunction) -> Result<SurfacePDESolution> {
    native_codimension(surface)?;
    let rhs = |s: &SurfaceSample, c: &[crate::geom::Chart]| logsob_rhs(s, c, f_normalized);
    solve_divergence_form(surface, &ScalarCoefficient(f_normalized), &rhs, LOGSOB_PDE_TOL)
}

/// The log-Sobolev contact problem on `Σ ⊂ S^{n+m}`.
pub struct LogSobProblem<'a> {
    pub surface: &'a Hypersurface,
    pub solution: &'a SurfacePDESolution,
    pub f: &'a dyn SurfaceFunction,
}

impl LogSobProblem<'_> {
    fn f_root(&self, sample: &SurfaceSample) -> f64 {
        let n = sample.dim() as f64;
        sample.jet_of(&self.surface.charts, self.f).value.powf(1.0 / (n + 1.0))
    }
}

fn root_term(du: &PointDerivatives) -> f64 {
    (1.0 - du.gradient.norm_squared()).max(0.0).sqrt()
}

impl ContactProblem for LogSobProblem<'_> {
    fn surface(&self) -> &Hypersurface {
        self.surface
    }

    fn solution(&self) -> &SurfacePDESolution {
        self.solution
    }

    fn model(&self) -> FiberModel {
        FiberModel::SphereNormal
    }

    fn bound(&self, sample: &SurfaceSample, du: &PointDerivatives, t: f64) -> f64 {
        (self.f_root(sample) - root_term(du) + t).powi(sample.dim() as i32)
    }

    fn t_range(&self, sample: &SurfaceSample, du: &PointDerivatives) -> (f64, f64) {
        let r = root_term(du);
        (r - self.f_root(sample), r)
    }
}

/// `Δu ≤ n(f^{1/(n+1)} − √(1 − |∇u|²))` wherever `|∇u| < 1`, plus the two scalar inequalities behind it.
pub fn pointwise_laplacian_bound(surface: &Hypersurface, f: &dyn SurfaceFunction, sol: &SurfacePDESolution) -> VerificationReport {
    let n = surface.dim() as f64;
    let laps = sol.u.laplacians();
    let (worst, count) = surface
        .samples
        .iter()
        .enumerate()
        .filter(|(i, _)| sol.u.gradients[*i].norm_squared() < 1.0)
        .map(|(i, s)| {
            let fv = s.jet_of(&surface.charts, f).value;
            let g2 = sol.u.gradients[i].norm_squared();
            laps[i] - n * (fv.powf(1.0 / (n + 1.0)) - (1.0 - g2).sqrt())
        })
        .fold((f64::NEG_INFINITY, 0usize), |(w, c), v| (w.max(v), c + 1));
    let worst = if count == 0 { 0.0 } else { worst };
    let (log_ok, log_eq) = log_inequality_sweep();
    let (sqrt_ok, sqrt_eq) = sqrt_inequality_sweep();
    VerificationReport::inequality("abp.laplacian_bound", worst, 0.0, JACOBIAN_TOL)
        .with("samples", count)
        .with("log_sweep_equality_at_one", log_eq)
        .with("sqrt_sweep_equality_at_zero", sqrt_eq)
        .and_require(log_ok, "log_le_linear")
        .and_require(sqrt_ok, "sqrt_le_linear")
}

/// `log λ ≤ λ − 1` on `(0, 10]`; returns (holds, equality at λ = 1).
pub fn log_inequality_sweep() -> (bool, bool) {
    let holds = (1..=10_000).map(|i| i as f64 * 1e-3).all(|l| l.ln() <= l - 1.0 + 1e-15);
    (holds, (1.0f64.ln() - 0.0).abs() == 0.0)
}

/// `√(1 − θ) ≤ 1 − θ/2` on `[0, 1]`; returns (holds, equality at θ = 0).
pub fn sqrt_inequality_sweep() -> (bool, bool) {
    let holds = (0..=10_000).map(|i| i as f64 * 1e-4).all(|th| (1.0 - th).sqrt() <= 1.0 - th / 2.0 + 1e-15);
    (holds, (1.0f64).sqrt() == 1.0)
}

/// Pointwise Jacobian-lemma checks over the in-V part of a contact sample set.
pub fn jacobian_bound_check(samples: &[ContactSample]) -> VerificationReport {
    let s = jacobian_summary(samples);
    let worst = if s.in_v == 0 { 0.0 } else { s.worst_bound_violation };
    VerificationReport::inequality("abp.jacobian_bound", worst, 0.0, JACOBIAN_TOL)
        .with("in_v", s.in_v)
        .with("total", s.total)
        .with("failures", s.failures)
        .with("equalities", s.equalities)
        .with("worst_amgm_violation", finite_or_zero(s.worst_amgm_violation))
        .with("worst_negative_det", finite_or_zero(s.worst_negative_det))
        .with("worst_t_range_violation", s.worst_t_range_violation)
        .and_require(s.failures == 0, "all_in_v_samples")
        .and_require(s.in_v > 0, "nonempty_contact_set")
}

fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// Base-point data for the fiber integrals.
struct Base {
    weight: f64,
    g2: f64,
    hess: SymMatrix,
    sff: SymMatrix,
    f_root: f64,
}

fn bases(problem: &LogSobProblem<'_>) -> Result<Vec<Base>> {
    let surface = problem.surface;
    if surface.ambient_dim() != surface.dim() + 2 {
        return Err(Error::Unsupported("the codimension-one chain needs a hypersurface of a sphere".into()));
    }
    Ok(surface
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| Base {
            weight: s.area_weight,
            g2: problem.solution.u.gradients[i].norm_squared(),
            hess: problem.solution.u.hessians[i].clone(),
            sff: s.sff[0].clone(),
            f_root: problem.f_root(s),
        })
        .collect())
}

/// `M = D²u + tI − s·h` at a base point.
fn shifted(b: &Base, s: f64, t: f64) -> SymMatrix {
    let n = b.hess.n();
    b.hess.add(&SymMatrix::scaled_identity(n, t)).sub(&b.sff.scale(s))
}

/// Entries of `M` for `n ≤ 2` without allocation.
fn small_entries(b: &Base, s: f64, t: f64) -> (f64, f64, f64) {
    let (h, k) = (&b.hess, &b.sff);
    let m00 = h.get(0, 0) + t - s * k.get(0, 0);
    if h.n() == 1 {
        return (m00, 0.0, 0.0);
    }
    (m00, h.get(0, 1) - s * k.get(0, 1), h.get(1, 1) + t - s * k.get(1, 1))
}

fn min_eig(b: &Base, s: f64, t: f64) -> f64 {
    match b.hess.n() {
        1 => small_entries(b, s, t).0,
        2 => {
            let (a, c, d) = small_entries(b, s, t);
            0.5 * (a + d) - (0.25 * (a - d) * (a - d) + c * c).sqrt()
        }
        _ => shifted(b, s, t).min_eigenvalue(),
    }
}

fn det_m(b: &Base, s: f64, t: f64) -> f64 {
    match b.hess.n() {
        1 => small_entries(b, s, t).0,
        2 => {
            let (a, c, d) = small_entries(b, s, t);
            a * d - c * c
        }
        _ => shifted(b, s, t).determinant(),
    }
}

/// Maximize a concave function on `[lo, hi]` by golden-section search.
fn golden_max(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..64 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let candidates = [(lo, f(lo)), (x, f(x)), (hi, f(hi))];
    candidates.into_iter().fold((x, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc })
}

/// Boundary of `{f ≥ 0}` between `inside` (f ≥ 0) and `outside` (f < 0).
fn bisect(f: &dyn Fn(f64) -> f64, mut inside: f64, mut outside: f64) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (inside + outside);
        if f(mid) >= 0.0 {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// Feasible sub-interval of `[lo, hi]` where a concave function is nonnegative.
fn feasible_interval(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let (x, fx) = golden_max(f, lo, hi);
    if fx < 0.0 {
        return None;
    }
    let a = if f(lo) >= 0.0 { lo } else { bisect(f, x, lo) };
    let b = if f(hi) >= 0.0 { hi } else { bisect(f, x, hi) };
    Some((a, b))
}

/// `∫∫_{V_x} det M(s,t) / √(1 − |∇u|² − s² − t²) ds dt` at one base point, with an error estimate.
///
/// With `t = a₀ sin ψ` and `s = a(t) sin φ` the weight disappears; the outer
/// integral is adaptive because the feasible φ-interval has kinks in ψ.
fn fiber_integral(b: &Base, tol: f64) -> (f64, f64) {
    let a0 = (1.0 - b.g2).max(0.0).sqrt();
    if a0 == 0.0 {
        return (0.0, 0.0);
    }
    let best_over_s = |t: f64| {
        let a = (a0 * a0 - t * t).max(0.0).sqrt();
        golden_max(&|s| min_eig(b, s, t), -a, a).1
    };
    let Some((t_lo, t_hi)) = feasible_interval(&best_over_s, -a0, a0) else { return (0.0, 0.0) };
    let inner = |psi: f64| {
        let t = a0 * psi.sin();
        let a = (a0 * a0 - t * t).max(0.0).sqrt();
        if a == 0.0 {
            return 0.0;
        }
        let Some((s_lo, s_hi)) = s_interval(b, t, a) else { return 0.0 };
        let (phis, fw) = gauss_legendre(INNER_NODES, (s_lo / a).clamp(-1.0, 1.0).asin(), (s_hi / a).clamp(-1.0, 1.0).asin());
        let v: f64 = phis.iter().zip(&fw).map(|(phi, w)| w * det_m(b, a * phi.sin(), t)).sum();
        a0 * psi.cos() * v
    };
    let (psi_lo, psi_hi) = ((t_lo / a0).clamp(-1.0, 1.0).asin(), (t_hi / a0).clamp(-1.0, 1.0).asin());
    adaptive_gl(&inner, psi_lo, psi_hi, tol, 0)
}

/// `{s ∈ [−a, a] : M(s, t) ≥ 0}`; closed form through the trace and determinant for `n ≤ 2`.
fn s_interval(b: &Base, t: f64, a: f64) -> Option<(f64, f64)> {
    let n = b.hess.n();
    if n > 2 {
        return feasible_interval(&|s| min_eig(b, s, t), -a, a);
    }
    let (p00, p01, p11) = small_entries(b, 0.0, t);
    let (k00, k01, k11) = if n == 1 {
        (b.sff.get(0, 0), 0.0, 0.0)
    } else {
        (b.sff.get(0, 0), b.sff.get(0, 1), b.sff.get(1, 1))
    };
    let mut cuts = vec![-a, a];
    let mut push = |r: f64| {
        if r.is_finite() && r > -a && r < a {
            cuts.push(r);
        }
    };
    if n == 1 {
        push(p00 / k00);
    } else {
        let qa = k00 * k11 - k01 * k01;
        let qb = -(p00 * k11 + p11 * k00) + 2.0 * p01 * k01;
        let qc = p00 * p11 - p01 * p01;
        push((p00 + p11) / (k00 + k11));
        if qa.abs() > 1e-300 {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let q = -0.5 * (qb + qb.signum() * disc.sqrt());
                push(q / qa);
                push(qc / q);
            }
        } else if qb != 0.0 {
            push(-qc / qb);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let feasible: Vec<(f64, f64)> = cuts
        .windows(2)
        .filter(|w| w[1] > w[0] && min_eig(b, 0.5 * (w[0] + w[1]), t) >= 0.0)
        .map(|w| (w[0], w[1]))
        .collect();
    Some((feasible.first()?.0, feasible.last()?.1))
}

const INNER_NODES: usize = 12;
const PANEL_NODES: usize = 8;

fn gl_panel(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let (x, w) = gauss_legendre(PANEL_NODES, lo, hi);
    x.iter().zip(&w).map(|(x, w)| w * f(*x)).sum()
}

/// Adaptive bisection of Gauss–Legendre panels; returns (value, error estimate).
fn adaptive_gl(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64, depth: usize) -> (f64, f64) {
    let mid = 0.5 * (lo + hi);
    let whole = gl_panel(f, lo, hi);
    let (l, r) = (gl_panel(f, lo, mid), gl_panel(f, mid, hi));
    let err = (l + r - whole).abs();
    if err <= tol || depth >= 40 {
        return (l + r, err);
    }
    let (a, ea) = adaptive_gl(f, lo, mid, 0.5 * tol, depth + 1);
    let (b, eb) = adaptive_gl(f, mid, hi, 0.5 * tol, depth + 1);
    (a + b, ea + eb)
}

/// Terms of the weighted-volume chain for a hypersurface of `S^{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeChain {
    /// `π|B^{n+1}|`.
    pub ball_term: f64,
    /// `∫_{B^{n+2}} (1 − |ξ|²)^{−1/2} dξ` by quadrature.
    pub weighted_ball: f64,
    /// Numerical `∫_{−a}^{a} ds/√(a² − s²)` at `a = 0.7`.
    pub arc_identity: f64,
    /// `∫_V |det DΦ| (1 − |Φ|²)^{−1/2}`.
    pub jacobian_integral: f64,
    pub jacobian_error: f64,
    /// Same with `det DΦ` replaced by its pointwise bound over the full t-range.
    pub bound_integral: f64,
    /// `π/(n+1) ∫ f`.
    pub final_term: f64,
}

/// The chain terms; `fiber_tol` is the absolute quadrature tolerance per base point.
pub fn volume_chain(problem: &LogSobProblem<'_>, fiber_tol: f64) -> Result<VolumeChain> {
    let n = problem.surface.dim();
    let nf = n as f64;
    let bs = bases(problem)?;
    let parts: Vec<(f64, f64)> = bs
        .par_iter()
        .map(|b| {
            let (v, e) = fiber_integral(b, fiber_tol);
            (b.weight * v, b.weight * e)
        })
        .collect();
    let fine = pairwise_sum(&parts.iter().map(|p| p.0).collect::<Vec<_>>());
    let error = pairwise_sum(&parts.iter().map(|p| p.1).collect::<Vec<_>>());
    // substitute r = sin φ in |S^{n+1}| ∫_0^1 r^{n+1} / √(1 − r²) dr
    let (phis, w) = gauss_legendre(64, 0.0, PI / 2.0);
    let radial: f64 = phis.iter().zip(&w).map(|(p, w)| w * p.sin().powi(n as i32 + 1)).sum();
    let a = 0.7;
    let (phis, w) = gauss_legendre(16, -PI / 2.0, PI / 2.0);
    let arc: f64 = phis.iter().zip(&w).map(|(p, w)| w * a * p.cos() / (a * a - (a * p.sin()).powi(2)).sqrt()).sum();
    let (ts, tw) = gauss_legendre(n + 2, 0.0, 1.0);
    let bound: Vec<f64> = bs
        .iter()
        .map(|b| {
            let lo = (1.0 - b.g2).max(0.0).sqrt() - b.f_root;
            let len = b.f_root;
            let inner: f64 = ts.iter().zip(&tw).map(|(x, w)| w * len * (b.f_root - (1.0 - b.g2).max(0.0).sqrt() + lo + len * x).powi(n as i32)).sum();
            b.weight * PI * inner
        })
        .collect();
    let int_f: f64 = pairwise_sum(&bs.iter().map(|b| b.weight * b.f_root.powi(n as i32 + 1)).collect::<Vec<_>>());
    Ok(VolumeChain {
        ball_term: PI * ball_volume(n + 1),
        weighted_ball: sphere_area(n + 1) * radial,
        arc_identity: arc,
        jacobian_integral: fine,
        jacobian_error: error,
        bound_integral: pairwise_sum(&bound),
        final_term: PI / (nf + 1.0) * int_f,
    })
}

/// The chain `π|B^{n+1}| ≤ ∫_V |det DΦ| w ≤ π/(n+1) ∫ f`, each link checked.
pub fn volume_chain_check_m1(problem: &LogSobProblem<'_>, fiber_tol: f64) -> Result<VerificationReport> {
    let c = volume_chain(problem, fiber_tol)?;
    let scale = scale_of(c.ball_term, c.final_term);
    let tol = 1e-8 * scale;
    let identity_ok = (c.weighted_ball - c.ball_term).abs() <= 1e-10 * scale;
    let arc_ok = (c.arc_identity - PI).abs() <= 1e-12;
    let covering_ok = c.ball_term <= c.jacobian_integral + c.jacobian_error + tol;
    let bound_ok = c.jacobian_integral <= c.bound_integral + c.jacobian_error + tol;
    let final_ok = (c.bound_integral - c.final_term).abs() <= 1e-10 * scale;
    Ok(VerificationReport::inequality("abp.volume_chain_m1", c.ball_term, c.final_term, tol)
        .with("weighted_ball", c.weighted_ball)
        .with("arc_identity", c.arc_identity)
        .with("jacobian_integral", c.jacobian_integral)
        .with("jacobian_error", c.jacobian_error)
        .with("bound_integral", c.bound_integral)
        .with("fiber_tol", fiber_tol)
        .with_equality((c.final_term - c.ball_term).abs() <= tol)
        .and_require(identity_ok, "radial_identity")
        .and_require(arc_ok, "arc_identity")
        .and_require(covering_ok, "ball_le_jacobian_integral")
        .and_require(bound_ok, "jacobian_integral_le_bound")
        .and_require(final_ok, "bound_integral_closed_form"))
}

/// One radius of the annulus chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusTerm {
    pub r: f64,
    /// `|B^{n+m+1}|(1 − r^{n+m+1})`.
    pub annulus: f64,
    /// `∫_Σ∫_t bound^n |B^m| ((1 − g² − t²)₊^{m/2} − (r² − g² − t²)₊^{m/2}) dt`.
    pub fiber_bound: f64,
    /// `m/(2(n+1)) |B^m| (1 − r²) ∫ f`.
    pub final_term: f64,
}

fn positive_pow(x: f64, p: f64) -> f64 {
    if x > 0.0 {
        x.powf(p)
    } else {
        0.0
    }
}

pub fn annulus_terms(problem: &LogSobProblem<'_>, r_grid: &[f64]) -> Result<Vec<AnnulusTerm>> {
    let surface = problem.surface;
    let n = surface.dim();
    let m = surface.ambient_dim() - n - 1;
    if m < 2 {
        return Err(Error::Precondition(format!("annulus chain needs codimension m ≥ 2, got {m}")));
    }
    let (nf, mf) = (n as f64, m as f64);
    let bm = ball_volume(m);
    let data: Vec<(f64, f64, f64)> = surface
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| (s.area_weight, problem.solution.u.gradients[i].norm_squared(), problem.f_root(s)))
        .collect();
    let int_f = pairwise_sum(&data.iter().map(|(w, _, fr)| w * fr.powi(n as i32 + 1)).collect::<Vec<_>>());
    r_grid
        .iter()
        .map(|&r| {
            if !(0.0 < r && r < 1.0) {
                return Err(Error::InvalidInput(format!("annulus radius {r} outside (0, 1)")));
            }
            let per: Vec<f64> = data
                .iter()
                .map(|&(w, g2, fr)| {
                    let root = (1.0 - g2).max(0.0).sqrt();
                    let (lo, hi) = (root - fr, root);
                    let mut cuts = vec![lo, hi];
                    for k in [(1.0 - g2).max(0.0).sqrt(), (r * r - g2).max(0.0).sqrt()] {
                        for c in [k, -k] {
                            if c > lo && c < hi {
                                cuts.push(c);
                            }
                        }
                    }
                    cuts.sort_by(f64::total_cmp);
                    let mut total = 0.0;
                    for win in cuts.windows(2) {
                        let (ts, tw) = gauss_legendre(n + m + 4, win[0], win[1]);
                        total += ts
                            .iter()
                            .zip(&tw)
                            .map(|(t, v)| {
                                let base = (fr - root + t).powi(n as i32);
                                let fiber = positive_pow(1.0 - g2 - t * t, mf / 2.0) - positive_pow(r * r - g2 - t * t, mf / 2.0);
                                v * base * bm * fiber
                            })
                            .sum::<f64>();
                    }
                    w * total
                })
                .collect();
            Ok(AnnulusTerm {
                r,
                annulus: ball_volume(n + m + 1) * (1.0 - r.powi((n + m + 1) as i32)),
                fiber_bound: pairwise_sum(&per),
                final_term: mf / (2.0 * (nf + 1.0)) * bm * (1.0 - r * r) * int_f,
            })
        })
        .collect()
}

/// `b^{m/2} − a^{m/2} ≤ (m/2)(b − a)` on a grid of `0 ≤ a ≤ b < 1`; returns the worst violation.
pub fn fiber_inequality_violation(m: usize) -> f64 {
    let p = m as f64 / 2.0;
    let grid: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
    let mut worst = f64::NEG_INFINITY;
    for (i, a) in grid.iter().enumerate() {
        for b in &grid[i..] {
            worst = worst.max(b.powf(p) - a.powf(p) - p * (b - a));
        }
    }
    worst
}

/// Every radius of the annulus chain, the `r → 1` limit form and the fiber inequality.
pub fn annulus_chain_check(problem: &LogSobProblem<'_>, r_grid: &[f64]) -> Result<VerificationReport> {
    let surface = problem.surface;
    let (n, m) = (surface.dim(), surface.ambient_dim() - surface.dim() - 1);
    let terms = annulus_terms(problem, r_grid)?;
    let mut worst_link: f64 = f64::INFINITY;
    let mut all_ok = true;
    for t in &terms {
        let tol = 1e-10 * scale_of(t.annulus, t.final_term);
        let first = t.fiber_bound - t.annulus;
        let second = t.final_term - t.fiber_bound;
        worst_link = worst_link.min(first.min(second));
        all_ok &= first >= -tol && second >= -tol;
    }
    let int_f = pairwise_sum(
        &surface.samples.iter().map(|s| s.area_weight * s.jet_of(&surface.charts, problem.f).value).collect::<Vec<_>>(),
    );
    let lhs = sphere_area(n + m);
    let rhs = sphere_area(m - 1) / (n as f64 + 1.0) * int_f;
    let tol = 1e-8 * scale_of(lhs, rhs);
    let fiber = fiber_inequality_violation(m);
    Ok(VerificationReport::inequality("abp.annulus_chain", lhs, rhs, tol)
        .with("radii", terms.len())
        .with("worst_link_slack", if terms.is_empty() { 0.0 } else { worst_link })
        .with("fiber_inequality_worst", fiber)
        .with("terms", serde_json::to_value(&terms).unwrap_or_default())
        .with_equality((rhs - lhs).abs() <= tol)
        .and_require(all_ok, "annulus_radii")
        .and_require(fiber <= 1e-15, "fiber_inequality"))
}
