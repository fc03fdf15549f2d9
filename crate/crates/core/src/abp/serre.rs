//! Chebyshev–Fourier collocation of the Neumann problem behind Serre's inequality,
//! with the gradient-covering and determinant checks on its contact set.

use std::f64::consts::{PI, TAU};

use faer::prelude::SpSolver;
use faer::Mat;
use nalgebra::{DVector, Matrix2, Vector2};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use super::contact::{CoveringResult, EPS_PSD, GAP_TOL, JACOBIAN_TOL, MAX_NEWTON_STEPS};
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;
use crate::report::VerificationReport;
use crate::serre::{divergence, fd_step, serre_functionals, DomainShape, EuclideanDomain, MatrixField, RadialProfile, SerreFunctionals};
use crate::spectral::fourier::{forward, wavenumbers};

pub const SERRE_PDE_TOL: f64 = 1e-6;
pub const COVERING_DELTA: f64 = 1e-3;
const COMPAT_TOL: f64 = 1e-10;
/// Degree and relative half-width of the Cartesian patch that replaces the polar
/// representation near the coordinate singularity.
const PATCH_DEGREE: usize = 12;
const PATCH_WIDTH: f64 = 0.1;
/// Minimizers with `ρ` above this count as boundary minimizers.
const BOUNDARY_RHO: f64 = 1.0 - 1e-9;

/// Collocation sizes: `radial` Chebyshev points on the full diameter (odd) and `angular` Fourier points (even).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollocationGrid {
    pub radial: usize,
    pub angular: usize,
}

impl Default for CollocationGrid {
    fn default() -> Self {
        Self { radial: 47, angular: 128 }
    }
}

impl CollocationGrid {
    /// Default sizes; non-elliptic star profiles get a finer angular grid.
    pub fn for_domain(domain: &EuclideanDomain) -> Self {
        match &domain.shape {
            DomainShape::Star2 { profile: RadialProfile::Fourier { .. }, .. } => Self { radial: 63, angular: 160 },
            _ => Self::default(),
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        let radial = ((self.radial as f64 * factor).round() as usize).max(9) | 1;
        let angular = (((self.angular as f64 * factor).round() as usize).max(16) + 1) & !1;
        Self { radial, angular }
    }

    fn validate(&self) -> Result<()> {
        if self.radial < 5 || self.radial.is_multiple_of(2) || self.angular < 8 || self.angular % 2 == 1 {
            return Err(Error::InvalidInput(format!(
                "collocation grid needs odd radial ≥ 5 and even angular ≥ 8, got {} × {}",
                self.radial, self.angular
            )));
        }
        Ok(())
    }
}

/// Value, Cartesian gradient and Hessian of the solution at a point.
#[derive(Debug, Clone, Copy)]
pub struct PlanarDerivatives {
    pub value: f64,
    pub gradient: Vector2<f64>,
    pub hessian: Matrix2<f64>,
}

/// Derivatives in the star coordinates `(ρ, θ)`.
#[derive(Debug, Clone, Copy, Default)]
struct PolarJet {
    u: f64,
    r: f64,
    t: f64,
    rr: f64,
    rt: f64,
    tt: f64,
}

/// The star map `F(ρ, θ) = c + ρ r(θ) e(θ)` and its derivatives at one point.
struct StarGeometry {
    x: Vector2<f64>,
    jac: Matrix2<f64>,
    jac_inv: Matrix2<f64>,
    f_rt: Vector2<f64>,
    f_tt: Vector2<f64>,
}

impl StarGeometry {
    fn new(center: &Vector2<f64>, profile: &RadialProfile, rho: f64, theta: f64) -> Self {
        let jet = profile.jet(theta);
        let (r, r1, r2) = (jet.value, jet.grad[0], jet.hess[0][0]);
        let (s, c) = theta.sin_cos();
        let e = Vector2::new(c, s);
        let ep = Vector2::new(-s, c);
        let f_r = e * r;
        let f_t = (e * r1 + ep * r) * rho;
        let jac = Matrix2::from_columns(&[f_r, f_t]);
        let jac_inv = jac.try_inverse().unwrap_or_else(Matrix2::zeros);
        Self { x: center + e * (rho * r), jac, jac_inv, f_rt: e * r1 + ep * r, f_tt: (e * r2 + ep * (2.0 * r1) - e * r) * rho }
    }

    /// `(B, w)` with `B = J⁻¹AJ⁻ᵀ` and `w_c = tr(B ∂²F_c)`.
    fn pulled_back(&self, a: &Matrix2<f64>) -> (Matrix2<f64>, Vector2<f64>) {
        let b = self.jac_inv * a * self.jac_inv.transpose();
        let w = Vector2::new(
            2.0 * b[(0, 1)] * self.f_rt[0] + b[(1, 1)] * self.f_tt[0],
            2.0 * b[(0, 1)] * self.f_rt[1] + b[(1, 1)] * self.f_tt[1],
        );
        (b, w)
    }

    fn cartesian(&self, p: &PolarJet) -> PlanarDerivatives {
        let q = Vector2::new(p.r, p.t);
        let g = self.jac_inv.transpose() * q;
        let hp = Matrix2::new(p.rr, p.rt, p.rt, p.tt)
            - Matrix2::new(0.0, self.f_rt.dot(&g), self.f_rt.dot(&g), self.f_tt.dot(&g));
        let h = self.jac_inv.transpose() * hp * self.jac_inv;
        PlanarDerivatives { value: p.u, gradient: g, hessian: (h + h.transpose()) * 0.5 }
    }
}

/// `u(ρ, θ) = Σ_n a_n(θ) T_n(ρ)` with trigonometric `a_n`.
#[derive(Debug, Clone)]
pub struct PolarInterpolant {
    center: Vector2<f64>,
    profile: RadialProfile,
    /// `coeffs[n]` holds the Fourier coefficients of `a_n`.
    coeffs: Vec<Vec<Complex64>>,
    angular: usize,
    patch: Option<CenterPatch>,
}

/// Tensor Chebyshev interpolant of `u` on a square around the center; used on its inner half.
#[derive(Debug, Clone)]
struct CenterPatch {
    center: Vector2<f64>,
    half: f64,
    coeffs: Vec<Vec<f64>>,
}

impl CenterPatch {
    fn covers(&self, x: &Vector2<f64>) -> bool {
        (x - self.center).norm() < 0.5 * self.half
    }

    fn eval(&self, x: &Vector2<f64>) -> PlanarDerivatives {
        let d = (x - self.center) / self.half;
        let m = self.coeffs.len() - 1;
        let (bx, by) = (chebyshev_basis(d[0], m), chebyshev_basis(d[1], m));
        let (mut v, mut gx, mut gy, mut hxx, mut hxy, mut hyy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (row, tx) in self.coeffs.iter().zip(&bx) {
            for (c, ty) in row.iter().zip(&by) {
                v += c * tx[0] * ty[0];
                gx += c * tx[1] * ty[0];
                gy += c * tx[0] * ty[1];
                hxx += c * tx[2] * ty[0];
                hxy += c * tx[1] * ty[1];
                hyy += c * tx[0] * ty[2];
            }
        }
        let (s1, s2) = (1.0 / self.half, 1.0 / (self.half * self.half));
        PlanarDerivatives {
            value: v,
            gradient: Vector2::new(gx, gy) * s1,
            hessian: Matrix2::new(hxx, hxy, hxy, hyy) * s2,
        }
    }
}

fn chebyshev_basis(x: f64, degree: usize) -> Vec<[f64; 3]> {
    let mut out = vec![[0.0; 3]; degree + 1];
    out[0] = [1.0, 0.0, 0.0];
    if degree >= 1 {
        out[1] = [x, 1.0, 0.0];
    }
    for n in 1..degree {
        let (a, b) = (out[n], out[n - 1]);
        out[n + 1] = [2.0 * x * a[0] - b[0], 2.0 * a[0] + 2.0 * x * a[1] - b[1], 4.0 * a[1] + 2.0 * x * a[2] - b[2]];
    }
    out
}

fn fourier_basis(theta: f64, n: usize) -> Vec<[Complex64; 3]> {
    wavenumbers(n)
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            if n.is_multiple_of(2) && j == n / 2 {
                let (s, c) = (k * theta).sin_cos();
                [Complex64::new(c, 0.0), Complex64::new(-k * s, 0.0), Complex64::new(-k * k * c, 0.0)]
            } else {
                let e = Complex64::from_polar(1.0, k * theta);
                [e, e * Complex64::new(0.0, k), e * (-k * k)]
            }
        })
        .collect()
}

impl PolarInterpolant {
    /// Build from nodal values `values[j][k]` at `(cos(jπ/N), θ_k)` for `j ≤ (N−1)/2`.
    fn from_nodes(center: Vector2<f64>, profile: RadialProfile, values: &[Vec<f64>], radial: usize, angular: usize) -> Self {
        let big_n = radial;
        let half = angular / 2;
        // full Chebyshev lines through the symmetric extension
        let line = |j: usize, k: usize| -> f64 {
            if 2 * j < big_n {
                values[j][k]
            } else {
                values[big_n - j][(k + half) % angular]
            }
        };
        let mut cheb = vec![vec![0.0; angular]; big_n + 1];
        for k in 0..angular {
            for (n, row) in cheb.iter_mut().enumerate() {
                let mut s = 0.0;
                for j in 0..=big_n {
                    let w = if j == 0 || j == big_n { 0.5 } else { 1.0 };
                    s += w * line(j, k) * (PI * (n * j) as f64 / big_n as f64).cos();
                }
                let w = if n == 0 || n == big_n { 1.0 } else { 2.0 };
                row[k] = w * s / big_n as f64;
            }
        }
        let coeffs = cheb.iter().map(|row| forward(row, &[angular])).collect();
        let mut out = Self { center, profile, coeffs, angular, patch: None };
        out.build_patch();
        out
    }

    fn polar_jet(&self, rho: f64, theta: f64) -> PolarJet {
        let tb = chebyshev_basis(rho, self.coeffs.len() - 1);
        let fb = fourier_basis(theta, self.angular);
        let mut p = PolarJet::default();
        for (c, t) in self.coeffs.iter().zip(&tb) {
            let zero = Complex64::new(0.0, 0.0);
            let mut a = [zero; 3];
            for (ci, bi) in c.iter().zip(&fb) {
                a[0] += ci * bi[0];
                a[1] += ci * bi[1];
                a[2] += ci * bi[2];
            }
            let (a0, a1, a2) = (a[0].re, a[1].re, a[2].re);
            p.u += a0 * t[0];
            p.r += a0 * t[1];
            p.rr += a0 * t[2];
            p.t += a1 * t[0];
            p.rt += a1 * t[1];
            p.tt += a2 * t[0];
        }
        p
    }

    fn polar_of(&self, x: &Vector2<f64>) -> (f64, f64) {
        let d = x - self.center;
        let theta = d[1].atan2(d[0]).rem_euclid(TAU);
        (d.norm() / self.profile.radius(theta), theta)
    }

    /// Star coordinate `ρ` of a point; `ρ ≤ 1` on the closed domain.
    pub fn rho(&self, x: &Vector2<f64>) -> f64 {
        self.polar_of(x).0
    }

    pub fn value(&self, x: &Vector2<f64>) -> f64 {
        match self.patch.as_ref().filter(|p| p.covers(x)) {
            Some(p) => p.eval(x).value,
            None => self.polar_value(x),
        }
    }

    pub fn derivatives(&self, x: &Vector2<f64>) -> PlanarDerivatives {
        if let Some(p) = self.patch.as_ref().filter(|p| p.covers(x)) {
            return p.eval(x);
        }
        let (rho, theta) = self.polar_of(x);
        let geom = StarGeometry::new(&self.center, &self.profile, rho, theta);
        geom.cartesian(&self.polar_jet(rho, theta))
    }

    fn polar_value(&self, x: &Vector2<f64>) -> f64 {
        let (rho, theta) = self.polar_of(x);
        self.polar_jet(rho, theta).u
    }

    fn build_patch(&mut self) {
        let r_min = (0..64).map(|k| self.profile.radius(TAU * k as f64 / 64.0)).fold(f64::INFINITY, f64::min);
        let half = PATCH_WIDTH * r_min;
        let m = PATCH_DEGREE;
        let nodes: Vec<f64> = (0..=m).map(|j| (PI * j as f64 / m as f64).cos()).collect();
        let grid: Vec<Vec<f64>> = nodes
            .iter()
            .map(|&a| nodes.iter().map(|&b| self.polar_value(&(self.center + Vector2::new(a, b) * half))).collect())
            .collect();
        let dct = |vals: &dyn Fn(usize) -> f64, n: usize| -> f64 {
            let s: f64 = (0..=m)
                .map(|j| {
                    let w = if j == 0 || j == m { 0.5 } else { 1.0 };
                    w * vals(j) * (PI * (n * j) as f64 / m as f64).cos()
                })
                .sum();
            (if n == 0 || n == m { 1.0 } else { 2.0 }) * s / m as f64
        };
        let partial: Vec<Vec<f64>> = (0..=m).map(|i| (0..=m).map(|q| dct(&|j| grid[i][j], q)).collect()).collect();
        let coeffs: Vec<Vec<f64>> = (0..=m).map(|p| (0..=m).map(|q| dct(&|i| partial[i][q], p)).collect()).collect();
        self.patch = Some(CenterPatch { center: self.center, half, coeffs });
    }

    fn shift(&mut self, delta: f64) {
        self.coeffs[0][0] += Complex64::new(delta, 0.0);
        if let Some(p) = self.patch.as_mut() {
            p.coeffs[0][0] += delta;
        }
    }
}

/// Solution of `div(cA∇u) = 2 det(cA) − |Div cA|`, `⟨cA∇u, ν⟩ = |cAν|` with zero mean.
#[derive(Debug, Clone)]
pub struct SerrePDESolution {
    pub domain: EuclideanDomain,
    pub functionals: SerreFunctionals,
    /// Normalizing constant `c`.
    pub scale: f64,
    pub u: PolarInterpolant,
    pub grid: CollocationGrid,
    /// Max strong residual over off-grid interior and boundary quadrature nodes.
    pub residual_norm: f64,
    /// Bordering multiplier; vanishes for an exactly compatible discrete system.
    pub multiplier: f64,
    /// `∫ rhs − ∫ |cAν|` on the domain quadrature.
    pub compatibility: f64,
    pub solver: &'static str,
}

fn cheb_matrix(n: usize) -> Vec<Vec<f64>> {
    let x: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect();
    let c = |j: usize| (if j == 0 || j == n { 2.0 } else { 1.0 }) * if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut d = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[i][j] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
        d[i][i] = -d[i].iter().sum::<f64>();
    }
    d
}

fn fourier_matrices(n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let h = TAU / n as f64;
    let mut d1 = vec![vec![0.0; n]; n];
    let mut d2 = vec![vec![0.0; n]; n];
    for k in 0..n {
        for l in 0..n {
            let m = k as i64 - l as i64;
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            if m == 0 {
                d2[k][l] = -PI * PI / (3.0 * h * h) - 1.0 / 6.0;
            } else {
                let half = 0.5 * m as f64 * h;
                d1[k][l] = 0.5 * sign / half.tan();
                d2[k][l] = -0.5 * sign / half.sin().powi(2);
            }
        }
    }
    (d1, d2)
}

fn star_data(domain: &EuclideanDomain) -> Result<(Vector2<f64>, RadialProfile)> {
    match &domain.shape {
        DomainShape::Star2 { center, profile } => {
            if !profile.is_centrally_symmetric() {
                return Err(Error::Unsupported(
                    "symmetric disk collocation needs a centrally symmetric boundary profile".into(),
                ));
            }
            Ok((Vector2::new(center[0], center[1]), profile.clone()))
        }
        DomainShape::Linear3 { .. } => Err(Error::Unsupported("the Neumann solver handles planar domains only".into())),
    }
}

fn to_matrix2(a: &crate::symalg::SymMatrix) -> Matrix2<f64> {
    let m = a.matrix();
    Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

/// Normalized coefficient data `(cA, Div cA)` at a point.
fn coefficient(field: &dyn MatrixField, scale: f64, h: f64, x: &Vector2<f64>) -> (Matrix2<f64>, Vector2<f64>) {
    let xv = DVector::from_column_slice(x.as_slice());
    let a = to_matrix2(&field.value(&xv)) * scale;
    let d = divergence(field, &xv, h);
    (a, Vector2::new(d[0], d[1]) * scale)
}

fn outward_normal(geom: &StarGeometry) -> Vector2<f64> {
    let t = geom.jac.column(1);
    Vector2::new(t[1], -t[0]).normalize()
}

pub fn solve_serre_pde(domain: &EuclideanDomain, field: &dyn MatrixField, grid: CollocationGrid) -> Result<SerrePDESolution> {
    grid.validate()?;
    if domain.n != 2 || field.dim() != 2 {
        return Err(Error::Unsupported(format!("the Neumann solver handles n = 2, got n = {}", domain.n)));
    }
    let (center, profile) = star_data(domain)?;
    let functionals = serre_functionals(domain, field)?;
    let scale = functionals.scaling_constant(2);
    let h = fd_step(domain);

    let rhs_at = |x: &Vector2<f64>| {
        let (a, d) = coefficient(field, scale, h, x);
        2.0 * a.determinant() - d.norm()
    };
    let to_v2 = |x: &DVector<f64>| Vector2::new(x[0], x[1]);
    let bulk = domain.integrate_interior(|x| rhs_at(&to_v2(x)));
    let flux = domain.integrate_boundary(|b| {
        let (a, _) = coefficient(field, scale, h, &to_v2(&b.x));
        (a * Vector2::new(b.normal[0], b.normal[1])).norm()
    });
    let compatibility = bulk - flux;
    if compatibility.abs() > COMPAT_TOL * 1f64.max(bulk.abs()) {
        return Err(Error::Precondition(format!("normalized Neumann data is incompatible: ∫rhs − ∫|Aν| = {compatibility:.3e}")));
    }

    let big_n = grid.radial;
    let half_n = (big_n - 1) / 2;
    let nt = grid.angular;
    let rows = half_n + 1;
    let unknowns = rows * nt;
    let d = cheb_matrix(big_n);
    let d2: Vec<Vec<f64>> = (0..=big_n)
        .map(|i| (0..=big_n).map(|j| (0..=big_n).map(|l| d[i][l] * d[l][j]).sum()).collect())
        .collect();
    let (f1, f2) = fourier_matrices(nt);
    let rho: Vec<f64> = (0..rows).map(|j| (PI * j as f64 / big_n as f64).cos()).collect();
    let theta: Vec<f64> = (0..nt).map(|k| TAU * k as f64 / nt as f64).collect();
    let idx = |j: usize, k: usize| j * nt + k;
    let fold = |j: usize, k: usize| if j <= half_n { (j, k) } else { (big_n - j, (k + nt / 2) % nt) };

    let row_data: Vec<(Vec<f64>, f64)> = (0..unknowns)
        .into_par_iter()
        .map(|row| {
            let (i, k) = (row / nt, row % nt);
            let geom = StarGeometry::new(&center, &profile, rho[i], theta[k]);
            let (a, div) = coefficient(field, scale, h, &geom.x);
            let mut line = vec![0.0; unknowns + 1];
            if i == 0 {
                let nu = outward_normal(&geom);
                let an = a * nu;
                let c = geom.jac_inv * an;
                for (j, dij) in d[0].iter().enumerate() {
                    let (jj, kk) = fold(j, k);
                    line[idx(jj, kk)] += c[0] * dij;
                }
                for l in 0..nt {
                    line[idx(0, l)] += c[1] * f1[k][l];
                }
                return (line, an.norm());
            }
            let (b, w) = geom.pulled_back(&a);
            let v = geom.jac_inv * (div - w);
            // interior rows are scaled by ρ² to balance the angular terms near the center
            let s = rho[i] * rho[i];
            for j in 0..=big_n {
                let (jj, kk) = fold(j, k);
                line[idx(jj, kk)] += s * (b[(0, 0)] * d2[i][j] + v[0] * d[i][j]);
                let mixed = s * 2.0 * b[(0, 1)] * d[i][j];
                if mixed != 0.0 {
                    for l in 0..nt {
                        line[idx(jj, l)] += mixed * f1[kk][l];
                    }
                }
            }
            for l in 0..nt {
                line[idx(i, l)] += s * (b[(1, 1)] * f2[k][l] + v[1] * f1[k][l]);
            }
            line[unknowns] = s;
            (line, s * (2.0 * a.determinant() - div.norm()))
        })
        .collect();

    let size = unknowns + 1;
    let mut mat = Mat::<f64>::zeros(size, size);
    let mut rhs = Mat::<f64>::zeros(size, 1);
    for (r, (line, b)) in row_data.iter().enumerate() {
        for (c, v) in line.iter().enumerate() {
            if *v != 0.0 {
                mat.write(r, c, *v);
            }
        }
        rhs.write(r, 0, *b);
    }
    for c in 0..unknowns {
        mat.write(unknowns, c, 1.0);
    }
    let sol = mat.partial_piv_lu().solve(&rhs);
    let values: Vec<Vec<f64>> = (0..rows).map(|j| (0..nt).map(|k| sol.read(idx(j, k), 0)).collect()).collect();
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonConvergence("collocation system is singular".into()));
    }
    let multiplier = sol.read(unknowns, 0);
    let mut u = PolarInterpolant::from_nodes(center, profile, &values, big_n, nt);
    let mean = domain.integrate_interior(|x| u.value(&to_v2(x))) / domain.volume();
    u.shift(-mean);

    let interior_res = domain
        .interior
        .par_iter()
        .map(|p| {
            let x = to_v2(&p.x);
            let du = u.derivatives(&x);
            let (a, div) = coefficient(field, scale, h, &x);
            ((a * du.hessian).trace() + div.dot(&du.gradient) - (2.0 * a.determinant() - div.norm())).abs()
        })
        .reduce(|| 0.0, f64::max);
    let boundary_res = domain
        .boundary
        .par_iter()
        .map(|b| {
            let x = to_v2(&b.x);
            let nu = Vector2::new(b.normal[0], b.normal[1]);
            let du = u.derivatives(&x);
            let (a, _) = coefficient(field, scale, h, &x);
            ((a * du.gradient).dot(&nu) - (a * nu).norm()).abs()
        })
        .reduce(|| 0.0, f64::max);
    let residual_norm = interior_res.max(boundary_res);
    Ok(SerrePDESolution {
        domain: domain.clone(),
        functionals,
        scale,
        u,
        grid,
        residual_norm,
        multiplier,
        compatibility,
        solver: "chebyshev-fourier-collocation",
    })
}

impl SerrePDESolution {
    pub fn residual_report(&self) -> VerificationReport {
        VerificationReport::residual("abp.serre_pde", self.residual_norm, SERRE_PDE_TOL)
            .with("solver", self.solver)
            .with("radial_nodes", self.grid.radial)
            .with("angular_nodes", self.grid.angular)
            .with("scale", self.scale)
            .with("multiplier", self.multiplier)
            .with("compatibility", self.compatibility)
    }

    fn normalized(&self, field: &dyn MatrixField, x: &Vector2<f64>) -> (Matrix2<f64>, Vector2<f64>) {
        coefficient(field, self.scale, fd_step(&self.domain), x)
    }
}

/// One point of the contact-set sweep.
#[derive(Debug, Clone, Copy)]
pub struct SerreContactSample {
    pub x: Vector2<f64>,
    pub norm_sq: f64,
    pub min_eigenvalue: f64,
    pub in_v: bool,
    pub det_hessian: f64,
    /// `(det cA)^{1/(n−1)}`.
    pub bound: f64,
    pub trace_a_hessian: f64,
    pub det_a_hessian: f64,
}

fn min_eig2(h: &Matrix2<f64>) -> f64 {
    let m = 0.5 * (h[(0, 0)] + h[(1, 1)]);
    let r = (0.25 * (h[(0, 0)] - h[(1, 1)]).powi(2) + h[(0, 1)] * h[(1, 0)]).max(0.0).sqrt();
    m - r
}

fn contact_sample(sol: &SerrePDESolution, field: &dyn MatrixField, x: Vector2<f64>) -> SerreContactSample {
    let du = sol.u.derivatives(&x);
    let (a, _) = sol.normalized(field, &x);
    let norm_sq = du.gradient.norm_squared();
    let min_eigenvalue = min_eig2(&du.hessian);
    let ah = a * du.hessian;
    SerreContactSample {
        x,
        norm_sq,
        min_eigenvalue,
        in_v: norm_sq < 1.0 && min_eigenvalue >= -EPS_PSD,
        det_hessian: du.hessian.determinant(),
        bound: a.determinant(),
        trace_a_hessian: ah.trace(),
        det_a_hessian: ah.determinant(),
    }
}

/// Contact-set sweep over the interior quadrature nodes.
pub fn serre_contact_samples(sol: &SerrePDESolution, field: &dyn MatrixField) -> Vec<SerreContactSample> {
    sol.domain
        .interior
        .par_iter()
        .map(|p| contact_sample(sol, field, Vector2::new(p.x[0], p.x[1])))
        .collect()
}

/// `det D²u ≤ det(cA)` on `V`, with the trace and arithmetic-geometric steps checked separately.
pub fn serre_jacobian_check(sol: &SerrePDESolution, samples: &[SerreContactSample]) -> VerificationReport {
    let in_v: Vec<&SerreContactSample> = samples.iter().filter(|s| s.in_v).collect();
    let tol = |b: f64| JACOBIAN_TOL * 1f64.max(b.abs());
    let mut worst = f64::NEG_INFINITY;
    let (mut failures, mut equalities) = (0usize, 0usize);
    let (mut worst_trace, mut worst_amgm) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for s in &in_v {
        let excess = s.det_hessian - s.bound;
        let trace_excess = s.trace_a_hessian - 2.0 * s.bound;
        let amgm_excess = s.det_a_hessian - (0.5 * s.trace_a_hessian).powi(2);
        worst = worst.max(excess);
        worst_trace = worst_trace.max(trace_excess);
        worst_amgm = worst_amgm.max(amgm_excess);
        if excess > tol(s.bound) || trace_excess > tol(s.bound) || amgm_excess > tol(s.det_a_hessian) {
            failures += 1;
        }
        if excess.abs() <= tol(s.bound) {
            equalities += 1;
        }
    }
    let worst = if in_v.is_empty() { 0.0 } else { worst };
    VerificationReport::inequality("abp.serre_jacobian", worst, 0.0, JACOBIAN_TOL)
        .with_equality(!in_v.is_empty() && equalities == in_v.len())
        .with("in_v", in_v.len())
        .with("total", samples.len())
        .with("failures", failures)
        .with("equalities", equalities)
        .with("worst_trace_excess", if in_v.is_empty() { 0.0 } else { worst_trace })
        .with("worst_amgm_excess", if in_v.is_empty() { 0.0 } else { worst_amgm })
        .with("scale", sol.scale)
        .and_require(failures == 0, "all_in_v_samples")
        .and_require(!in_v.is_empty(), "nonempty_contact_set")
}

/// Gradient covering of `(1 − δ)·B²` together with the number of minimizers found on `∂Ω`.
#[derive(Debug, Clone)]
pub struct SerreCovering {
    pub result: CoveringResult,
    pub boundary_minimizers: usize,
    pub delta: f64,
}

struct CloudPoint {
    x: Vector2<f64>,
    value: f64,
}

fn newton_minimize(u: &PolarInterpolant, xi: &Vector2<f64>, start: Vector2<f64>, step_cap: f64) -> (Vector2<f64>, usize) {
    let mut x = start;
    let inside = |p: &Vector2<f64>| u.rho(p) <= 1.0;
    let mut steps = 0;
    for _ in 0..MAX_NEWTON_STEPS {
        let du = u.derivatives(&x);
        let r = du.gradient - xi;
        if r.norm() <= 1e-14 {
            break;
        }
        let mut p = match du.hessian.cholesky() {
            Some(ch) => -ch.solve(&r),
            None => -r,
        };
        if p.norm() > step_cap {
            p *= step_cap / p.norm();
        }
        let v0 = du.value - xi.dot(&x);
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let trial = x + p * alpha;
            if inside(&trial) && u.value(&trial) - xi.dot(&trial) <= v0 + 1e-15 * v0.abs().max(1.0) {
                x = trial;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        steps += 1;
        if !moved {
            break;
        }
    }
    (x, steps)
}

/// Minimize `u − ⟨ξ, x⟩` over `Ω̄` for targets `ξ ∈ (1 − δ)B²`.
pub fn serre_covering_check(
    sol: &SerrePDESolution,
    field: &dyn MatrixField,
    targets: &[DVector<f64>],
    delta: f64,
) -> SerreCovering {
    let u = &sol.u;
    let cloud: Vec<CloudPoint> = sol
        .domain
        .interior
        .iter()
        .map(|p| &p.x)
        .chain(sol.domain.boundary.iter().map(|b| &b.x))
        .map(|x| Vector2::new(x[0], x[1]))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|x| CloudPoint { x, value: u.value(&x) })
        .collect();
    let step_cap = 0.25 * sol.domain.diameter;
    struct Outcome {
        gap: f64,
        recovered: bool,
        in_v: bool,
        boundary: bool,
        sample: SerreContactSample,
        steps: usize,
    }
    let outcomes: Vec<Outcome> = targets
        .par_iter()
        .map(|t| {
            let xi = Vector2::new(t[0], t[1]) * (1.0 - delta);
            let best = cloud
                .iter()
                .min_by(|a, b| (a.value - xi.dot(&a.x)).total_cmp(&(b.value - xi.dot(&b.x))))
                .expect("nonempty cloud");
            let cloud_min = best.value - xi.dot(&best.x);
            let (x, steps) = newton_minimize(u, &xi, best.x, step_cap);
            let du = u.derivatives(&x);
            let gap = (du.gradient - xi).norm();
            let boundary = u.rho(&x) >= BOUNDARY_RHO;
            let sample = contact_sample(sol, field, x);
            let global = du.value - xi.dot(&x) <= cloud_min + 1e-12;
            let recovered = gap <= GAP_TOL && sample.in_v && global && !boundary;
            Outcome { gap, recovered, in_v: sample.in_v, boundary, sample, steps }
        })
        .collect();
    let recovered = outcomes.iter().filter(|o| o.recovered).count();
    let rec: Vec<&Outcome> = outcomes.iter().filter(|o| o.recovered).collect();
    let bound_violations = rec
        .iter()
        .filter(|o| o.sample.det_hessian - o.sample.bound > JACOBIAN_TOL * 1f64.max(o.sample.bound))
        .count();
    let fold = |f: fn(&Outcome) -> f64, init: f64, op: fn(f64, f64) -> f64| rec.iter().map(|o| f(o)).fold(init, op);
    let result = CoveringResult {
        total_samples: targets.len(),
        recovered,
        worst_gap: outcomes.iter().map(|o| o.gap).fold(0.0, f64::max),
        fraction: if targets.is_empty() { 1.0 } else { recovered as f64 / targets.len() as f64 },
        outside_v: outcomes.iter().filter(|o| o.gap <= GAP_TOL && !o.in_v).count(),
        worst_min_eigenvalue: fold(|o| o.sample.min_eigenvalue, f64::INFINITY, f64::min),
        max_norm_sq: fold(|o| o.sample.norm_sq, 0.0, f64::max),
        min_norm_sq: fold(|o| o.sample.norm_sq, f64::INFINITY, f64::min),
        bound_violations,
        newton_steps_max: outcomes.iter().map(|o| o.steps).max().unwrap_or(0),
    };
    SerreCovering { result, boundary_minimizers: outcomes.iter().filter(|o| o.boundary).count(), delta }
}

/// `|B²| ≤ ∫_Ω det(cA)` recomputed from the normalized field.
pub fn serre_volume_bound(sol: &SerrePDESolution, field: &dyn MatrixField) -> (f64, f64) {
    let terms: Vec<f64> = sol
        .domain
        .interior
        .iter()
        .map(|p| p.weight * sol.normalized(field, &Vector2::new(p.x[0], p.x[1])).0.determinant())
        .collect();
    (PI, pairwise_sum(&terms))
}
