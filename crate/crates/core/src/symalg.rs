//! Symmetric functions of eigenvalues, Newton tensors, Gårding cones and the
//! matrix inequalities built on them.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::binomial;
use crate::report::{scale_of, VerificationReport};

/// Largest matrix size accepted.
pub const MAX_DIM: usize = 16;
/// Relative Frobenius distance below which a matrix counts as a multiple of the identity.
pub const EQUALITY_REL_TOL: f64 = 1e-8;
/// Relative tolerance used by the matrix-lemma deficits.
pub const LEMMA_REL_TOL: f64 = 1e-10;

/// Dense symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Wrap a square matrix after checking symmetry to `1e-12 · max|entry|`.
    /// The stored matrix is the exact symmetric part.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "expected a nonempty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if n > MAX_DIM {
            return Err(Error::Unsupported(format!("matrix size {n} exceeds {MAX_DIM}")));
        }
        let amax = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        for i in 0..n {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * amax {
                    return Err(Error::InvalidInput(format!(
                        "matrix not symmetric at ({i},{j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(Self::symmetrized(m))
    }

    /// Symmetric part `(M + Mᵀ)/2` without any check.
    pub fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self((m + t) * 0.5)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn scaled_identity(n: usize, lambda: f64) -> Self {
        Self(DMatrix::identity(n, n) * lambda)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn diag(values: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values)))
    }

    /// Build from row-major entries.
    pub fn from_rows(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn spectrum(&self) -> Spectrum {
        let mut eigenvalues: Vec<f64> = SymmetricEigen::new(self.0.clone()).eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(f64::total_cmp);
        Spectrum { eigenvalues }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.spectrum().eigenvalues[0]
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(&self.0 * c)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    /// Symmetric part of `self · other` (exact product when the factors commute).
    pub fn sym_product(&self, other: &Self) -> Self {
        Self::symmetrized(&self.0 * &other.0)
    }

    /// Relative Frobenius distance to the nearest multiple of the identity, and that multiple.
    pub fn distance_to_scalar(&self) -> (f64, f64) {
        let n = self.n();
        let lambda = self.trace() / n as f64;
        let diff = &self.0 - DMatrix::identity(n, n) * lambda;
        (diff.norm() / self.frobenius().max(f64::MIN_POSITIVE), lambda)
    }
}

/// Eigenvalues in non-decreasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// Cone membership record for `Γ_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GardingReport {
    pub k: usize,
    pub h_values: Vec<f64>,
    pub member: bool,
}

/// All elementary symmetric polynomials `e_0..e_n` of a list of values,
/// from the coefficients of `∏ (1 + λ_i x)`.
pub fn elementary_symmetric_all(values: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; values.len() + 1];
    e[0] = 1.0;
    for (i, &lambda) in values.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            e[j] += lambda * e[j - 1];
        }
    }
    e
}

fn check_degree(n: usize, k: usize, max: usize, what: &str) -> Result<()> {
    if k > max {
        return Err(Error::Domain(format!("{what}: k = {k} outside 0..={max} for n = {n}")));
    }
    Ok(())
}

/// `σ_k(A)`, the k-th elementary symmetric function of the eigenvalues of `A`.
pub fn elementary_symmetric(a: &SymMatrix, k: usize) -> Result<f64> {
    check_degree(a.n(), k, a.n(), "elementary_symmetric")?;
    Ok(elementary_symmetric_all(&a.spectrum().eigenvalues)[k])
}

/// `H_k(A) = σ_k(A) / C(n, k)`.
pub fn normalized_hk(a: &SymMatrix, k: usize) -> Result<f64> {
    let n = a.n();
    Ok(elementary_symmetric(a, k)? / binomial(n, k))
}

/// Normalized symmetric functions `H_0..H_n` from a spectrum.
pub fn normalized_all(spectrum: &Spectrum) -> Vec<f64> {
    let n = spectrum.len();
    elementary_symmetric_all(&spectrum.eigenvalues)
        .into_iter()
        .enumerate()
        .map(|(k, s)| s / binomial(n, k))
        .collect()
}

/// Newton tensor `T_k(A)` from `T_0 = I`, `T_j = σ_j I − T_{j−1} A`.
pub fn newton_tensor(a: &SymMatrix, k: usize) -> Result<SymMatrix> {
    let n = a.n();
    if n == 0 || k > n - 1 {
        return Err(Error::Domain(format!("newton_tensor: k = {k} outside 0..={} for n = {n}", n - 1)));
    }
    let sigma = elementary_symmetric_all(&a.spectrum().eigenvalues);
    Ok(newton_tensor_with(a, k, &sigma))
}

fn newton_tensor_with(a: &SymMatrix, k: usize, sigma: &[f64]) -> SymMatrix {
    let n = a.n();
    let mut t = SymMatrix::identity(n);
    for &s in sigma.iter().take(k + 1).skip(1) {
        t = SymMatrix::scaled_identity(n, s).sub(&t.sym_product(a));
    }
    t
}

fn positivity_floor(spectrum: &Spectrum) -> f64 {
    1e-10 * (1.0 + spectrum.max_abs())
}

/// Membership of `A` in the Gårding cone `Γ_k`: `H_1, …, H_k` all above the positivity floor.
pub fn garding_membership(a: &SymMatrix, k: usize) -> GardingReport {
    let spectrum = a.spectrum();
    let floor = positivity_floor(&spectrum);
    let h = normalized_all(&spectrum);
    let k = k.min(a.n());
    let h_values: Vec<f64> = h[1..=k].to_vec();
    let member = h_values.iter().all(|&v| v > floor);
    GardingReport { k, h_values, member }
}

fn require_cone(a: &SymMatrix, k: usize, name: &str) -> Result<()> {
    let r = garding_membership(a, k);
    if !r.member {
        return Err(Error::Precondition(format!("{name} is not in Γ_{k}: H = {:?}", r.h_values)));
    }
    Ok(())
}

/// Gårding's inequality `tr(T_k(A) B) ≥ (k+1) σ_{k+1}(A)^{k/(k+1)} σ_{k+1}(B)^{1/(k+1)}`.
pub fn check_garding_inequality(a: &SymMatrix, b: &SymMatrix, k: usize) -> Result<VerificationReport> {
    let n = a.n();
    if b.n() != n {
        return Err(Error::InvalidInput("matrix sizes differ".into()));
    }
    if k > n - 1 {
        return Err(Error::Domain(format!("garding: k = {k} outside 0..={}", n - 1)));
    }
    require_cone(a, k + 1, "A")?;
    require_cone(b, k + 1, "B")?;
    let t = newton_tensor(a, k)?;
    let lhs = (t.matrix() * b.matrix()).trace();
    let sa = elementary_symmetric(a, k + 1)?;
    let sb = elementary_symmetric(b, k + 1)?;
    let kf = k as f64;
    let rhs = (kf + 1.0) * sa.powf(kf / (kf + 1.0)) * sb.powf(1.0 / (kf + 1.0));
    let tol = LEMMA_REL_TOL * scale_of(lhs, rhs);
    let proportional = {
        let ratio = b.frobenius() / a.frobenius();
        (b.matrix() - a.matrix() * ratio).norm() <= EQUALITY_REL_TOL * b.frobenius()
    };
    Ok(VerificationReport::from_deficit("garding_inequality", lhs, rhs, lhs - rhs, tol)
        .with_equality(proportional)
        .with("n", n)
        .with("k", k))
}

/// Lower bound `det T_k(A) ≥ C(n−1,k)^n H_{k+1}(A)^{nk/(k+1)}` for `A ∈ Γ_{k+1}`.
pub fn det_tk_lower_bound(a: &SymMatrix, k: usize) -> Result<VerificationReport> {
    let n = a.n();
    if k > n - 1 {
        return Err(Error::Domain(format!("det_tk_lower_bound: k = {k} outside 0..={}", n - 1)));
    }
    require_cone(a, k + 1, "A")?;
    let lhs = newton_tensor(a, k)?.determinant();
    let h = normalized_hk(a, k + 1)?;
    let nf = n as f64;
    let kf = k as f64;
    let rhs = binomial(n - 1, k).powi(n as i32) * h.powf(nf * kf / (kf + 1.0));
    let tol = LEMMA_REL_TOL * scale_of(lhs, rhs);
    let (dist, _) = a.distance_to_scalar();
    Ok(VerificationReport::from_deficit("det_tk_lower_bound", lhs, rhs, lhs - rhs, tol)
        .with_equality(dist <= EQUALITY_REL_TOL || k == n - 1 || k == 0)
        .with("n", n)
        .with("k", k))
}

/// `det(AB) ≤ (tr(AB)/n)^n` for `A` positive definite and `B` positive semi-definite.
pub fn amgm_det_trace(a: &SymMatrix, b: &SymMatrix) -> Result<VerificationReport> {
    let n = a.n();
    if b.n() != n {
        return Err(Error::InvalidInput("matrix sizes differ".into()));
    }
    let sa = a.spectrum();
    if sa.eigenvalues[0] <= positivity_floor(&sa) {
        return Err(Error::Precondition(format!(
            "A is not positive definite (min eigenvalue {})",
            sa.eigenvalues[0]
        )));
    }
    let sb = b.spectrum();
    if sb.eigenvalues[0] < -positivity_floor(&sb) {
        return Err(Error::Precondition(format!(
            "B is not positive semi-definite (min eigenvalue {})",
            sb.eigenvalues[0]
        )));
    }
    let ab = a.matrix() * b.matrix();
    let tr = ab.trace();
    let det = a.determinant() * b.determinant();
    let rhs = (tr / n as f64).powi(n as i32);
    let tol = LEMMA_REL_TOL * scale_of(det, rhs);
    let lambda = tr / n as f64;
    let dist = (&ab - DMatrix::identity(n, n) * lambda).norm();
    let equality = dist <= EQUALITY_REL_TOL * ab.norm().max(1.0);
    Ok(VerificationReport::from_deficit("amgm_det_trace", det, rhs, rhs - det, tol)
        .with_equality(equality)
        .with("n", n))
}

/// Cofactor matrix, `A · cof(A) = det(A) · I` (for symmetric `A`, the adjugate).
pub fn cofactor(a: &SymMatrix) -> SymMatrix {
    let n = a.n();
    if n == 1 {
        return SymMatrix::identity(1);
    }
    let m = a.matrix();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let minor = m.clone().remove_row(i).remove_column(j);
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            let v = sign * minor.determinant();
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    SymMatrix(c)
}

/// Random matrices for property suites.
pub mod sampling {
    use super::*;

    /// Symmetric matrix with entries uniform in `[-1, 1]`.
    pub fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SymMatrix {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..=1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix(m)
    }

    /// Random symmetric matrix shifted by `c·I` until it lies in `Γ_k`.
    /// The initial shift is random so samples also land near the cone boundary.
    pub fn random_in_cone<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> SymMatrix {
        let base = random_symmetric(rng, n);
        let mut c = rng.gen_range(-0.5..1.0);
        loop {
            let candidate = base.add(&SymMatrix::scaled_identity(n, c));
            if garding_membership(&candidate, k).member {
                return candidate;
            }
            c += 0.25;
        }
    }

    /// Positive definite `BᵀB + εI`.
    pub fn random_positive_definite<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SymMatrix {
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..=1.0));
        let eps = rng.gen_range(0.01..0.5);
        SymMatrix::symmetrized(b.transpose() * &b + DMatrix::identity(n, n) * eps)
    }

    /// Positive semi-definite `CᵀC` with `C` of random rank `1..=n`.
    pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SymMatrix {
        let rank = rng.gen_range(1..=n);
        let c = DMatrix::from_fn(rank, n, |_, _| rng.gen_range(-1.0..=1.0));
        SymMatrix::symmetrized(c.transpose() * &c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * 1.0f64.max(a.abs()).max(b.abs())
    }

    #[test]
    fn sigma_of_identity_and_diagonal() {
        let i3 = SymMatrix::identity(3);
        assert!(close(elementary_symmetric(&i3, 2).unwrap(), 3.0, 1e-14));
        let d = SymMatrix::diag(&[1.0, 2.0, 3.0]);
        assert!(close(elementary_symmetric(&d, 1).unwrap(), 6.0, 1e-14));
        assert!(close(elementary_symmetric(&d, 0).unwrap(), 1.0, 1e-14));
        assert!(matches!(elementary_symmetric(&d, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn normalized_values() {
        for n in 1..6 {
            let i = SymMatrix::identity(n);
            for k in 0..=n {
                assert!(close(normalized_hk(&i, k).unwrap(), 1.0, 1e-13));
            }
        }
        let d = SymMatrix::diag(&[1.0, 2.0, 3.0]);
        assert!(close(normalized_hk(&d, 2).unwrap(), 11.0 / 3.0, 1e-14));
        let two = SymMatrix::scaled_identity(4, 2.0);
        assert!(close(normalized_hk(&two, 3).unwrap(), 8.0, 1e-13));
    }

    #[test]
    fn newton_tensor_examples() {
        let d = SymMatrix::diag(&[1.0, 2.0, 3.0]);
        assert_eq!(newton_tensor(&d, 0).unwrap(), SymMatrix::identity(3));
        let t1 = newton_tensor(&d, 1).unwrap();
        let expected = SymMatrix::diag(&[5.0, 4.0, 3.0]);
        assert!((t1.matrix() - expected.matrix()).norm() < 1e-13);
        assert!(newton_tensor(&d, 3).is_err());
    }

    #[test]
    fn garding_membership_examples() {
        assert!(garding_membership(&SymMatrix::identity(4), 4).member);
        assert!(!garding_membership(&SymMatrix::diag(&[-1.0, -1.0, -1.0]), 1).member);
        let r = garding_membership(&SymMatrix::diag(&[3.0, 3.0, -1.0]), 2);
        assert!(r.member);
        assert!(close(r.h_values[0], 5.0 / 3.0, 1e-14));
        // σ_2 = 9 − 3 − 3 = 3, H_2 = 1
        assert!(close(r.h_values[1], 1.0, 1e-13));
    }

    #[test]
    fn garding_equality_at_identity_and_diagonal() {
        for n in 2..6 {
            for k in 0..n {
                let i = SymMatrix::identity(n);
                let r = check_garding_inequality(&i, &i, k).unwrap();
                assert!(r.deficit.abs() <= r.tolerance, "n={n} k={k} deficit={}", r.deficit);
                let expected = (n - k) as f64 * binomial(n, k);
                assert!(close(r.lhs, expected, 1e-12));
                assert!(r.equality);
            }
        }
        let a = SymMatrix::diag(&[1.0, 2.0, 3.0]);
        let r = check_garding_inequality(&a, &a, 1).unwrap();
        assert!(r.deficit.abs() <= 1e-12 * r.lhs);
        let out = SymMatrix::diag(&[-1.0, 1.0, 1.0]);
        assert!(matches!(check_garding_inequality(&out, &a, 2), Err(Error::Precondition(_))));
    }

    #[test]
    fn det_tk_examples() {
        let d = SymMatrix::diag(&[1.0, 2.0, 3.0]);
        let r = det_tk_lower_bound(&d, 1).unwrap();
        assert!(close(r.lhs, 60.0, 1e-13));
        let expected_rhs = 8.0 * (11.0f64 / 3.0).powf(1.5);
        assert!(close(r.rhs, expected_rhs, 1e-13));
        assert!(r.deficit > 0.0 && r.pass && !r.equality);
        let l = SymMatrix::scaled_identity(4, 1.7);
        for k in 0..4 {
            let r = det_tk_lower_bound(&l, k).unwrap();
            assert!(r.deficit.abs() <= r.tolerance);
            assert!(r.equality);
        }
    }

    #[test]
    fn amgm_examples() {
        let i = SymMatrix::identity(3);
        let r = amgm_det_trace(&i, &i).unwrap();
        assert!(r.deficit.abs() < 1e-14 && r.equality);
        let z = SymMatrix::zeros(3);
        let r = amgm_det_trace(&i, &z).unwrap();
        assert!(r.deficit.abs() < 1e-14 && r.equality);
        let indefinite = SymMatrix::diag(&[1.0, -1.0, 2.0]);
        assert!(matches!(amgm_det_trace(&indefinite, &i), Err(Error::Precondition(_))));
    }

    #[test]
    fn cofactor_examples() {
        assert_eq!(cofactor(&SymMatrix::identity(4)), SymMatrix::identity(4));
        let c = cofactor(&SymMatrix::diag(&[2.0, 3.0]));
        assert!((c.matrix() - SymMatrix::diag(&[3.0, 2.0]).matrix()).norm() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.1, 1.0]);
        assert!(SymMatrix::new(m).is_err());
        assert!(SymMatrix::new(DMatrix::zeros(0, 0)).is_err());
    }
}
