//! Symmetric matrix fields on Euclidean domains and convex potentials.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::TrigTerm;
use crate::symalg::{elementary_symmetric_all, SymMatrix};

/// Smooth `x ↦ A(x)` with an optional analytic divergence `(Div A)_j = Σ_i ∂_i A_ij`.
pub trait MatrixField: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> SymMatrix;
    fn analytic_divergence(&self, _x: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }
}

/// Central-difference divergence with step `h`.
pub fn fd_divergence(field: &dyn MatrixField, x: &DVector<f64>, h: f64) -> DVector<f64> {
    let n = field.dim();
    let mut div = DVector::zeros(n);
    for i in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        let (ap, am) = (field.value(&xp), field.value(&xm));
        for j in 0..n {
            div[j] += (ap.get(i, j) - am.get(i, j)) / (2.0 * h);
        }
    }
    div
}

/// Analytic divergence when available, central differences otherwise.
pub fn divergence(field: &dyn MatrixField, x: &DVector<f64>, h: f64) -> DVector<f64> {
    field.analytic_divergence(x).unwrap_or_else(|| fd_divergence(field, x, h))
}

fn trig_value_grad(terms: &[TrigTerm], x: &DVector<f64>) -> (f64, DVector<f64>) {
    let mut v = 0.0;
    let mut g = DVector::zeros(x.len());
    for t in terms {
        let phase: f64 = t.freq.iter().zip(x.iter()).map(|(k, c)| k * c).sum();
        let (s, c) = phase.sin_cos();
        v += t.cos * c + t.sin * s;
        for (m, k) in t.freq.iter().enumerate() {
            g[m] += k * (t.sin * c - t.cos * s);
        }
    }
    (v, g)
}

fn zero() -> f64 {
    0.0
}

/// Convex potentials `u` with analytic derivatives up to third order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "potential", rename_all = "kebab-case")]
pub enum Potential {
    /// `½ (x−c)ᵀ M (x−c)`.
    Quadratic { matrix: Vec<Vec<f64>>, center: Vec<f64> },
    /// `α|y|²/2 + β|y|⁴/4` with `y = x − c`.
    QuarticRadial { alpha: f64, beta: f64, center: Vec<f64> },
    /// `|x|²/2 + ε exp(⟨ξ, x⟩)`.
    ExpPerturbed { xi: Vec<f64>, eps: f64 },
}

impl Potential {
    pub fn half_square(n: usize, center: &[f64]) -> Self {
        let matrix = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Potential::Quadratic { matrix, center: center.to_vec() }
    }

    pub fn dim(&self) -> usize {
        match self {
            Potential::Quadratic { center, .. } | Potential::QuarticRadial { center, .. } => center.len(),
            Potential::ExpPerturbed { xi, .. } => xi.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Potential::Quadratic { matrix, center } = self {
            if matrix.len() != center.len() || matrix.iter().any(|r| r.len() != center.len()) {
                return Err(Error::InvalidInput("quadratic potential matrix does not match center".into()));
            }
        }
        Ok(())
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            Potential::Quadratic { matrix, center } => {
                let y = x - DVector::from_column_slice(center);
                let m = DMatrix::from_fn(y.len(), y.len(), |i, j| matrix[i][j]);
                0.5 * y.dot(&(m * &y))
            }
            Potential::QuarticRadial { alpha, beta, center } => {
                let r2 = (x - DVector::from_column_slice(center)).norm_squared();
                alpha * r2 / 2.0 + beta * r2 * r2 / 4.0
            }
            Potential::ExpPerturbed { xi, eps } => {
                0.5 * x.norm_squared() + eps * DVector::from_column_slice(xi).dot(x).exp()
            }
        }
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Potential::Quadratic { matrix, center } => {
                let y = x - DVector::from_column_slice(center);
                DMatrix::from_fn(y.len(), y.len(), |i, j| matrix[i][j]) * y
            }
            Potential::QuarticRadial { alpha, beta, center } => {
                let y = x - DVector::from_column_slice(center);
                let r2 = y.norm_squared();
                y * (alpha + beta * r2)
            }
            Potential::ExpPerturbed { xi, eps } => {
                let xi = DVector::from_column_slice(xi);
                let e = xi.dot(x).exp();
                x + xi * (eps * e)
            }
        }
    }

    pub fn hessian(&self, x: &DVector<f64>) -> SymMatrix {
        let n = x.len();
        match self {
            Potential::Quadratic { matrix, .. } => SymMatrix::symmetrized(DMatrix::from_fn(n, n, |i, j| matrix[i][j])),
            Potential::QuarticRadial { alpha, beta, center } => {
                let y = x - DVector::from_column_slice(center);
                let r2 = y.norm_squared();
                SymMatrix::symmetrized(DMatrix::identity(n, n) * (alpha + beta * r2) + &y * y.transpose() * (2.0 * beta))
            }
            Potential::ExpPerturbed { xi, eps } => {
                let xi = DVector::from_column_slice(xi);
                let e = xi.dot(x).exp();
                SymMatrix::symmetrized(DMatrix::identity(n, n) + &xi * xi.transpose() * (eps * e))
            }
        }
    }

    /// `∂_k D²u` for each `k`.
    pub fn third(&self, x: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let n = x.len();
        match self {
            Potential::Quadratic { .. } => vec![DMatrix::zeros(n, n); n],
            Potential::QuarticRadial { beta, center, .. } => {
                let y = x - DVector::from_column_slice(center);
                (0..n)
                    .map(|k| {
                        DMatrix::from_fn(n, n, |i, j| {
                            let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                            2.0 * beta * (y[k] * d(i, j) + d(i, k) * y[j] + d(j, k) * y[i])
                        })
                    })
                    .collect()
            }
            Potential::ExpPerturbed { xi, eps } => {
                let xv = DVector::from_column_slice(xi);
                let e = xv.dot(x).exp();
                (0..n).map(|k| &xv * xv.transpose() * (eps * e * xi[k])).collect()
            }
        }
    }
}

/// Derivative of the adjugate `T_{n−1}(H)` along `dH`, by differentiating the Newton recursion.
fn adjugate_derivative(h: &DMatrix<f64>, dh: &DMatrix<f64>) -> DMatrix<f64> {
    let n = h.nrows();
    let sym = SymMatrix::symmetrized(h.clone());
    let sigma = elementary_symmetric_all(&sym.spectrum().eigenvalues);
    let id = DMatrix::<f64>::identity(n, n);
    let mut t = id.clone();
    let mut dt = DMatrix::zeros(n, n);
    for s in sigma.iter().take(n).skip(1) {
        let dsigma = (&t * dh).trace();
        let next_dt = &id * dsigma - &dt * h - &t * dh;
        t = &id * *s - &t * h;
        dt = next_dt;
    }
    dt
}

/// Serializable catalog of matrix fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "field", rename_all = "kebab-case")]
pub enum FieldDescriptor {
    Identity,
    Constant { matrix: Vec<Vec<f64>> },
    /// `(a + b|x|²) I`.
    RadialScalar { a: f64, b: f64 },
    /// `(c + ⟨ξ, x⟩) I`.
    AffineScalar { c: f64, xi: Vec<f64> },
    /// `B(x)ᵀ B(x) + c I` with trigonometric-polynomial entries `b[l][i]`.
    TrigGram {
        #[serde(default = "zero")]
        c: f64,
        b: Vec<Vec<Vec<TrigTerm>>>,
    },
    /// `cof D²u` of a convex potential.
    Cofactor { potential: Potential },
}

impl FieldDescriptor {
    pub const NAMES: [&'static str; 6] = ["identity", "constant", "radial-scalar", "affine-scalar", "trig-gram", "cofactor"];

    pub fn parse(name: &str, parameters: &serde_json::Value) -> Result<Self> {
        if !Self::NAMES.contains(&name) {
            return Err(Error::UnknownCatalog(format!("matrix field '{name}'")));
        }
        let mut obj = match parameters {
            serde_json::Value::Object(m) => m.clone(),
            serde_json::Value::Null => serde_json::Map::new(),
            other => return Err(Error::InvalidInput(format!("field parameters must be an object, got {other}"))),
        };
        obj.insert("field".into(), name.into());
        serde_json::from_value(serde_json::Value::Object(obj))
            .map_err(|e| Error::InvalidInput(format!("matrix field '{name}': {e}")))
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        FieldDescriptor::Constant {
            matrix: (0..n).map(|i| (0..n).map(|j| if i == j { values[i] } else { 0.0 }).collect()).collect(),
        }
    }

    /// Random `BᵀB + cI` with `terms` trigonometric terms per entry of `B`.
    pub fn random_trig_gram<R: Rng + ?Sized>(rng: &mut R, n: usize, terms: usize) -> Self {
        let b = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        (0..terms)
                            .map(|_| TrigTerm {
                                freq: (0..n).map(|_| rng.gen_range(-1i32..=1) as f64).collect(),
                                cos: rng.gen_range(-0.5..0.5),
                                sin: rng.gen_range(-0.5..0.5),
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        FieldDescriptor::TrigGram { c: rng.gen_range(0.1..1.0), b }
    }

    pub fn instantiate(&self, n: usize) -> Result<CatalogField> {
        let bad = |what: &str| Err(Error::InvalidInput(format!("{what} does not match dimension {n}")));
        match self {
            FieldDescriptor::Constant { matrix } => {
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return bad("constant matrix");
                }
                SymMatrix::new(DMatrix::from_fn(n, n, |i, j| matrix[i][j]))?;
            }
            FieldDescriptor::AffineScalar { xi, .. } if xi.len() != n => return bad("affine direction"),
            FieldDescriptor::TrigGram { b, .. } => {
                if b.len() != n || b.iter().any(|r| r.len() != n || r.iter().any(|e| e.iter().any(|t| t.freq.len() != n))) {
                    return bad("trig-gram coefficients");
                }
            }
            FieldDescriptor::Cofactor { potential } => {
                potential.validate()?;
                if potential.dim() != n {
                    return bad("potential");
                }
            }
            _ => {}
        }
        Ok(CatalogField { n, descriptor: self.clone() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogField {
    pub n: usize,
    pub descriptor: FieldDescriptor,
}

impl CatalogField {
    fn gram_parts(&self, x: &DVector<f64>) -> Option<(f64, DMatrix<f64>, Vec<DMatrix<f64>>)> {
        let FieldDescriptor::TrigGram { c, b } = &self.descriptor else {
            return None;
        };
        let n = self.n;
        let mut bm = DMatrix::zeros(n, n);
        let mut db = vec![DMatrix::zeros(n, n); n];
        for l in 0..n {
            for i in 0..n {
                let (v, g) = trig_value_grad(&b[l][i], x);
                bm[(l, i)] = v;
                for m in 0..n {
                    db[m][(l, i)] = g[m];
                }
            }
        }
        Some((*c, bm, db))
    }
}

impl MatrixField for CatalogField {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &DVector<f64>) -> SymMatrix {
        let n = self.n;
        match &self.descriptor {
            FieldDescriptor::Identity => SymMatrix::identity(n),
            FieldDescriptor::Constant { matrix } => SymMatrix::symmetrized(DMatrix::from_fn(n, n, |i, j| matrix[i][j])),
            FieldDescriptor::RadialScalar { a, b } => SymMatrix::scaled_identity(n, a + b * x.norm_squared()),
            FieldDescriptor::AffineScalar { c, xi } => {
                SymMatrix::scaled_identity(n, c + xi.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>())
            }
            FieldDescriptor::TrigGram { .. } => {
                let (c, bm, _) = self.gram_parts(x).expect("trig-gram");
                SymMatrix::symmetrized(bm.transpose() * &bm + DMatrix::identity(n, n) * c)
            }
            FieldDescriptor::Cofactor { potential } => crate::symalg::cofactor(&potential.hessian(x)),
        }
    }

    fn analytic_divergence(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let n = self.n;
        Some(match &self.descriptor {
            FieldDescriptor::Identity | FieldDescriptor::Constant { .. } => DVector::zeros(n),
            FieldDescriptor::RadialScalar { b, .. } => x * (2.0 * b),
            FieldDescriptor::AffineScalar { xi, .. } => DVector::from_column_slice(xi),
            FieldDescriptor::TrigGram { .. } => {
                let (_, bm, db) = self.gram_parts(x).expect("trig-gram");
                DVector::from_fn(n, |j, _| {
                    let mut s = 0.0;
                    for i in 0..n {
                        for l in 0..n {
                            s += db[i][(l, i)] * bm[(l, j)] + bm[(l, i)] * db[i][(l, j)];
                        }
                    }
                    s
                })
            }
            FieldDescriptor::Cofactor { potential } => {
                let h = potential.hessian(x).into_matrix();
                let third = potential.third(x);
                let mut div = DVector::zeros(n);
                for (i, dh) in third.iter().enumerate() {
                    let d = adjugate_derivative(&h, dh);
                    for j in 0..n {
                        div[j] += d[(i, j)];
                    }
                }
                div
            }
        })
    }
}

/// A field given only by its values, differentiated numerically.
pub struct FdField<F> {
    pub n: usize,
    pub f: F,
}

impl<F> MatrixField for FdField<F>
where
    F: Fn(&DVector<f64>) -> SymMatrix + Send + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &DVector<f64>) -> SymMatrix {
        (self.f)(x)
    }
}
