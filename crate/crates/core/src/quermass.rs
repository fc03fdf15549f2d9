//! Quermassintegral-type inequalities on closed hypersurfaces of Euclidean space.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{integrate, AmbientKind, Hypersurface, SurfaceSample, MIN_RESOLUTION};
use crate::numeric::{binomial, sphere_area};
use crate::report::VerificationReport;
use crate::symalg::{
    det_tk_lower_bound, elementary_symmetric_all, garding_membership, newton_tensor, normalized_all, SymMatrix,
};

/// Relative spread of principal curvatures below which a sample is umbilical.
pub const UMBILIC_REL_TOL: f64 = 1e-6;
/// Floor for `H_{k+1}` relative to the surface curvature scale.
pub const HK1_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuermassFunctionals {
    pub n: usize,
    pub k: usize,
    pub int_hk: f64,
    pub int_hk1: f64,
    /// `∫ H_k^{n+1} / (det T_k · H_{k+1})`.
    pub int_ratio: f64,
    /// `∫ H_k^{n+1} / H_{k+1}^{nk/(k+1)+1}`.
    pub int_corollary_ratio: f64,
    /// `∫ H_k^{(n+1)/(k+2)} / H_{k+1}^{(nk−k(k+1))/((k+1)(k+2))}`.
    pub int_holder_middle: f64,
}

fn require_euclidean(surface: &Hypersurface) -> Result<()> {
    if surface.charts.iter().any(|c| c.ambient_kind() != AmbientKind::Euclidean) {
        return Err(Error::Precondition("quermass checks need a closed hypersurface of Euclidean space".into()));
    }
    Ok(())
}

fn require_theorem_range(n: usize, k: usize) -> Result<()> {
    if n < 2 || k > n - 2 {
        return Err(Error::Domain(format!("need n ≥ 2 and 0 ≤ k ≤ n − 2, got n = {n}, k = {k}")));
    }
    Ok(())
}

/// True iff the second fundamental form lies in `Γ_k` at every sample.
pub fn kconvexity_check(surface: &Hypersurface, k: usize) -> Result<bool> {
    require_euclidean(surface)?;
    Ok(surface.samples.par_iter().all(|s| garding_membership(&s.sff[0], k).member))
}

fn curvature_scale(surface: &Hypersurface) -> f64 {
    surface.samples.iter().map(|s| s.sff[0].max_abs()).fold(0.0, f64::max)
}

/// Per-sample `H_0..H_n`.
fn h_values(sample: &SurfaceSample) -> Vec<f64> {
    normalized_all(&sample.sff[0].spectrum())
}

/// The three integrals of the main theorem plus the corollary and Hölder integrands.
pub fn functionals(surface: &Hypersurface, k: usize) -> Result<QuermassFunctionals> {
    require_euclidean(surface)?;
    let n = surface.dim();
    if k + 1 > n {
        return Err(Error::Domain(format!("k + 1 = {} exceeds n = {n}", k + 1)));
    }
    let floor = HK1_FLOOR * curvature_scale(surface).powi(k as i32 + 1);
    for (i, s) in surface.samples.iter().enumerate() {
        let g = garding_membership(&s.sff[0], k + 1);
        let h = h_values(s);
        if !g.member || h[k + 1] < floor {
            return Err(Error::Precondition(format!(
                "surface is not {}-convex: sample {i} at chart parameters {:?} has H = {:?}",
                k + 1,
                s.params,
                g.h_values
            )));
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let per_sample: Vec<[f64; 5]> = surface
        .samples
        .par_iter()
        .map(|s| {
            let h = h_values(s);
            let (hk, hk1) = (h[k], h[k + 1]);
            let det_t = newton_tensor(&s.sff[0], k).expect("k in range").determinant();
            let ratio = hk.powf(nf + 1.0) / (det_t * hk1);
            let cor = hk.powf(nf + 1.0) / hk1.powf(nf * kf / (kf + 1.0) + 1.0);
            let middle = hk.powf((nf + 1.0) / (kf + 2.0)) / hk1.powf((nf * kf - kf * (kf + 1.0)) / ((kf + 1.0) * (kf + 2.0)));
            [hk, hk1, ratio, cor, middle]
        })
        .collect();
    let column = |c: usize| {
        let v: Vec<f64> = per_sample.iter().map(|r| r[c]).collect();
        integrate(&v, surface).expect("lengths match")
    };
    Ok(QuermassFunctionals {
        n,
        k,
        int_hk: column(0),
        int_hk1: column(1),
        int_ratio: column(2),
        int_corollary_ratio: column(3),
        int_holder_middle: column(4),
    })
}

/// Every sample umbilical within [`UMBILIC_REL_TOL`].
pub fn is_umbilical(surface: &Hypersurface) -> bool {
    surface.samples.iter().all(|s| {
        let ev = s.sff[0].spectrum().eigenvalues;
        let spread = ev[ev.len() - 1] - ev[0];
        spread <= UMBILIC_REL_TOL * ev.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    })
}

fn coarse_resolution(resolution: usize) -> usize {
    (resolution / 2).max(MIN_RESOLUTION)
}

/// Deficit at the surface's resolution together with the difference to a
/// half-resolution grid as the quadrature error estimate.
fn two_grid<F>(surface: &Hypersurface, k: usize, deficit: F) -> Result<(QuermassFunctionals, f64)>
where
    F: Fn(&QuermassFunctionals) -> f64,
{
    let fine = functionals(surface, k)?;
    let coarse = functionals(&surface.with_resolution(coarse_resolution(surface.resolution))?, k)?;
    Ok((fine.clone(), (deficit(&fine) - deficit(&coarse)).abs()))
}

fn quermass_report(
    name: &str,
    surface: &Hypersurface,
    q: &QuermassFunctionals,
    lhs: f64,
    rhs: f64,
    quad_err: f64,
) -> VerificationReport {
    let deficit = rhs - lhs;
    let tol = 1e-9 * lhs.abs().max(rhs.abs()) + quad_err;
    VerificationReport::from_deficit(name, lhs, rhs, deficit, tol)
        .with("surface", serde_json::to_value(&surface.descriptor).unwrap_or_default())
        .with("resolution", surface.resolution)
        .with("n", q.n)
        .with("k", q.k)
        .with("int_Hk", q.int_hk)
        .with("int_Hk1", q.int_hk1)
        .with("int_ratio", q.int_ratio)
        .with("quad_error_est", quad_err)
        .with("strict", deficit > 10.0 * quad_err && deficit > tol)
}

fn main_sides(q: &QuermassFunctionals) -> (f64, f64) {
    let nf = q.n as f64;
    let lhs = sphere_area(q.n) * q.int_hk.powf(nf + 1.0);
    let rhs = binomial(q.n - 1, q.k).powf(nf) * q.int_hk1.powf(nf + 1.0) * q.int_ratio;
    (lhs, rhs)
}

fn corollary_sides(q: &QuermassFunctionals) -> (f64, f64) {
    let nf = q.n as f64;
    let lhs = sphere_area(q.n) * q.int_hk.powf(nf + 1.0);
    let rhs = q.int_hk1.powf(nf + 1.0) * q.int_corollary_ratio;
    (lhs, rhs)
}

/// `|S^n| (∫H_k)^{n+1} ≤ C(n−1,k)^n (∫H_{k+1})^{n+1} ∫ H_k^{n+1}/((det T_k) H_{k+1})`.
pub fn check_quermass_main(surface: &Hypersurface, k: usize) -> Result<VerificationReport> {
    require_euclidean(surface)?;
    require_theorem_range(surface.dim(), k)?;
    let (q, err) = two_grid(surface, k, |q| {
        let (l, r) = main_sides(q);
        r - l
    })?;
    let (lhs, rhs) = main_sides(&q);
    Ok(quermass_report("quermass_main", surface, &q, lhs, rhs, err).with_equality(is_umbilical(surface)))
}

/// The determinant-free form, plus the pointwise comparison of the two integrands.
pub fn check_quermass_corollary(surface: &Hypersurface, k: usize) -> Result<VerificationReport> {
    require_euclidean(surface)?;
    let n = surface.dim();
    require_theorem_range(n, k)?;
    let (q, err) = two_grid(surface, k, |q| {
        let (l, r) = corollary_sides(q);
        r - l
    })?;
    let (lhs, rhs) = corollary_sides(&q);
    let c = binomial(n - 1, k).powi(n as i32);
    let nf = n as f64;
    let kf = k as f64;
    let worst_pointwise = surface
        .samples
        .iter()
        .map(|s| {
            let h = h_values(s);
            let det_t = newton_tensor(&s.sff[0], k).expect("k in range").determinant();
            let theorem = c * h[k].powf(nf + 1.0) / (det_t * h[k + 1]);
            let corollary = h[k].powf(nf + 1.0) / h[k + 1].powf(nf * kf / (kf + 1.0) + 1.0);
            (corollary - theorem) / corollary.abs().max(1.0)
        })
        .fold(f64::INFINITY, f64::min);
    let (_, theorem_rhs) = main_sides(&q);
    Ok(quermass_report("quermass_corollary", surface, &q, lhs, rhs, err)
        .with_equality(is_umbilical(surface))
        .with("theorem_rhs", theorem_rhs)
        .with("worst_pointwise_gap", worst_pointwise)
        .and_require(worst_pointwise >= -1e-10, "pointwise integrand comparison"))
}

/// `|S^n| (∫H_k)^{n−k−1} ≤ (∫H_{k+1})^{n−k}` on convex surfaces.
pub fn check_af_inequality(surface: &Hypersurface, k: usize) -> Result<VerificationReport> {
    require_euclidean(surface)?;
    let n = surface.dim();
    require_theorem_range(n, k)?;
    if !kconvexity_check(surface, n)? {
        return Err(Error::Precondition("Alexandrov–Fenchel check needs a convex surface".into()));
    }
    let sides = |q: &QuermassFunctionals| {
        (sphere_area(n) * q.int_hk.powi((n - k - 1) as i32), q.int_hk1.powi((n - k) as i32))
    };
    let (q, err) = two_grid(surface, k, |q| {
        let (l, r) = sides(q);
        r - l
    })?;
    let (lhs, rhs) = sides(&q);
    Ok(quermass_report("af_inequality", surface, &q, lhs, rhs, err).with_equality(is_umbilical(surface)))
}

/// `∫H_k ≤ ∫(Maclaurin middle) ≤ (∫H_{k+1})^{(k+1)/(k+2)} (∫ corollary ratio)^{1/(k+2)}`.
pub fn check_holder_chain(surface: &Hypersurface, k: usize) -> Result<VerificationReport> {
    require_euclidean(surface)?;
    let n = surface.dim();
    require_theorem_range(n, k)?;
    let kf = k as f64;
    let terms = |q: &QuermassFunctionals| {
        let right = q.int_hk1.powf((kf + 1.0) / (kf + 2.0)) * q.int_corollary_ratio.powf(1.0 / (kf + 2.0));
        (q.int_hk, q.int_holder_middle, right)
    };
    let gap = |q: &QuermassFunctionals| {
        let (a, b, c) = terms(q);
        (b - a).min(c - b)
    };
    let (q, err) = two_grid(surface, k, gap)?;
    let (left, middle, right) = terms(&q);
    let r = VerificationReport::from_deficit("holder_chain", left, right, gap(&q), 1e-9 * right.abs() + err);
    Ok(r.with_equality(is_umbilical(surface))
        .with("middle", middle)
        .with("first_gap", middle - left)
        .with("second_gap", right - middle)
        .with("quad_error_est", err)
        .with("strict_second", right - middle > 10.0 * err && right - middle > 1e-9 * right.abs()))
}

/// Maximum over samples of `H_{k+1}^{1/(k+1)} − H_k^{1/k}` (should be ≤ 0).
pub fn maclaurin_violation(surface: &Hypersurface, k: usize) -> Result<f64> {
    require_euclidean(surface)?;
    if k == 0 || k + 1 > surface.dim() {
        return Err(Error::Domain(format!("Maclaurin comparison needs 1 ≤ k ≤ n − 1, got {k}")));
    }
    if !kconvexity_check(surface, k + 1)? {
        return Err(Error::Precondition(format!("surface is not {}-convex", k + 1)));
    }
    let kf = k as f64;
    Ok(surface
        .samples
        .iter()
        .map(|s| {
            let h = h_values(s);
            h[k + 1].powf(1.0 / (kf + 1.0)) - h[k].powf(1.0 / kf)
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Smallest normalized `det T_k` lower-bound deficit over samples.
pub fn pointwise_det_tk_bound(surface: &Hypersurface, k: usize) -> Result<VerificationReport> {
    require_euclidean(surface)?;
    let mut worst: Option<VerificationReport> = None;
    for s in &surface.samples {
        let r = det_tk_lower_bound(&s.sff[0], k)?;
        let rel = r.deficit / r.lhs.abs().max(r.rhs.abs()).max(1.0);
        if worst.as_ref().map_or(true, |w| rel < w.deficit / w.lhs.abs().max(w.rhs.abs()).max(1.0)) {
            worst = Some(r);
        }
    }
    let mut r = worst.ok_or_else(|| Error::InvalidInput("surface has no samples".into()))?;
    r.check = "pointwise_det_tk_bound".into();
    Ok(r)
}

/// Newton tensor of a (generally non-symmetric) matrix by the same recursion.
fn newton_tensor_general(s: &DMatrix<f64>, sigma: &[f64], k: usize) -> DMatrix<f64> {
    let n = s.nrows();
    let mut t = DMatrix::identity(n, n);
    for &sk in sigma.iter().take(k + 1).skip(1) {
        t = DMatrix::identity(n, n) * sk - &t * s;
    }
    t
}

/// `T_k` of the shape operator as a (1,1) tensor in chart coordinates.
fn coordinate_newton_tensor(surface: &Hypersurface, chart: usize, params: &[f64], k: usize) -> Result<DMatrix<f64>> {
    let s = surface.sample_at(chart, params)?;
    let n = s.dim();
    let nu = &s.normals[0];
    let h = DMatrix::from_fn(n, n, |i, j| s.embedding.iter().zip(nu.iter()).map(|(c, v)| c.hess[i][j] * v).sum());
    let shape = &s.metric_inv * h;
    let sigma = elementary_symmetric_all(&s.sff[0].spectrum().eigenvalues);
    Ok(newton_tensor_general(&shape, &sigma, k))
}

/// Maximum over samples of `|∇_i (T_k)^i_j|`, with chart derivatives of `T_k`
/// from fourth-order central differences.
pub fn divergence_free_residual(surface: &Hypersurface, k: usize) -> Result<f64> {
    require_euclidean(surface)?;
    let n = surface.dim();
    if k + 1 > n {
        return Err(Error::Domain(format!("k = {k} outside 0..={}", n - 1)));
    }
    let h = 1e-3;
    let residuals = surface
        .samples
        .par_iter()
        .map(|s| -> Result<f64> {
            let t0 = coordinate_newton_tensor(surface, s.chart, &s.params, k)?;
            let mut deriv = Vec::with_capacity(n);
            for i in 0..n {
                let at = |offset: f64| {
                    let mut p = s.params.clone();
                    p[i] += offset;
                    coordinate_newton_tensor(surface, s.chart, &p, k)
                };
                let d = (at(-2.0 * h)? - at(2.0 * h)? + (at(h)? - at(-h)?) * 8.0) / (12.0 * h);
                deriv.push(d);
            }
            let div = DVector::from_fn(n, |j, _| {
                let mut v = 0.0;
                for i in 0..n {
                    v += deriv[i][(i, j)];
                    for l in 0..n {
                        v += s.christoffel[i][(i, l)] * t0[(l, j)] - s.christoffel[l][(i, j)] * t0[(i, l)];
                    }
                }
                v
            });
            Ok((div.transpose() * &s.metric_inv * &div)[(0, 0)].max(0.0).sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

/// `(H_k, H_{k+1}, T_k)` of the second fundamental form at a sample.
pub fn sample_quantities(sample: &SurfaceSample, k: usize) -> Result<(f64, f64, SymMatrix)> {
    let h = h_values(sample);
    Ok((h[k], h[k + 1], newton_tensor(&sample.sff[0], k)?))
}
