//! Analytic scalar functions on catalog surfaces.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::chart::Chart;
use crate::jet::Jet;

/// A function on a chart, evaluated as a jet in the chart parameters.
///
/// `params` are the chart parameters and `x` the ambient embedding jets at the
/// same point, so both chart-coordinate and ambient-coordinate formulas can be
/// differentiated exactly.
pub trait SurfaceFunction: Send + Sync {
    fn jet(&self, chart: &Chart, params: &[Jet], x: &[Jet]) -> Jet;
}

impl<F> SurfaceFunction for F
where
    F: Fn(&Chart, &[Jet], &[Jet]) -> Jet + Send + Sync,
{
    fn jet(&self, chart: &Chart, params: &[Jet], x: &[Jet]) -> Jet {
        self(chart, params, x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub freq: Vec<f64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// Serializable function families used by the catalog and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FunctionDescriptor {
    Constant { value: f64 },
    /// `constant + ⟨xi, x⟩`.
    Affine {
        #[serde(default)]
        constant: f64,
        xi: Vec<f64>,
    },
    /// `coeff · exp(⟨xi, x⟩)`.
    ExpLinear {
        xi: Vec<f64>,
        #[serde(default = "one")]
        coeff: f64,
    },
    /// `constant + Σ cos·cos(k·p) + sin·sin(k·p)` in chart parameters `p`.
    ChartTrig {
        constant: f64,
        terms: Vec<TrigTerm>,
    },
    /// Same form in ambient coordinates `x`.
    AmbientTrig {
        constant: f64,
        terms: Vec<TrigTerm>,
    },
    /// Polynomial in ambient coordinates.
    AmbientPoly { terms: Vec<Monomial> },
}

fn one() -> f64 {
    1.0
}

fn dot(freq: &[f64], v: &[Jet]) -> Jet {
    let dim = v[0].dim;
    freq.iter().zip(v).fold(Jet::constant(dim, 0.0), |acc, (k, c)| acc + *c * *k)
}

fn trig(constant: f64, terms: &[TrigTerm], v: &[Jet]) -> Jet {
    let dim = v[0].dim;
    terms.iter().fold(Jet::constant(dim, constant), |acc, t| {
        let phase = dot(&t.freq, v);
        acc + phase.cos() * t.cos + phase.sin() * t.sin
    })
}

impl SurfaceFunction for FunctionDescriptor {
    fn jet(&self, _chart: &Chart, params: &[Jet], x: &[Jet]) -> Jet {
        let dim = params[0].dim;
        match self {
            FunctionDescriptor::Constant { value } => Jet::constant(dim, *value),
            FunctionDescriptor::Affine { constant, xi } => dot(xi, x) + *constant,
            FunctionDescriptor::ExpLinear { xi, coeff } => dot(xi, x).exp() * *coeff,
            FunctionDescriptor::ChartTrig { constant, terms } => trig(*constant, terms, params),
            FunctionDescriptor::AmbientTrig { constant, terms } => trig(*constant, terms, x),
            FunctionDescriptor::AmbientPoly { terms } => terms.iter().fold(Jet::constant(dim, 0.0), |acc, m| {
                let mono = m
                    .powers
                    .iter()
                    .zip(x)
                    .filter(|(p, _)| **p > 0)
                    .fold(Jet::constant(dim, m.coeff), |prod, (p, c)| prod * c.powi(*p as i32));
                acc + mono
            }),
        }
    }
}

impl FunctionDescriptor {
    /// Lower bound of the function over all points with `|x| <= radius`
    /// (exact for constants, a crude envelope otherwise).
    pub fn positive_floor(&self, radius: f64) -> Option<f64> {
        match self {
            FunctionDescriptor::Constant { value } => Some(*value),
            FunctionDescriptor::Affine { constant, xi } => {
                Some(constant - radius * xi.iter().map(|v| v * v).sum::<f64>().sqrt())
            }
            FunctionDescriptor::ExpLinear { xi, coeff } => {
                Some(coeff * (-radius * xi.iter().map(|v| v * v).sum::<f64>().sqrt()).exp())
            }
            FunctionDescriptor::ChartTrig { constant, terms } | FunctionDescriptor::AmbientTrig { constant, terms } => {
                Some(constant - terms.iter().map(|t| t.cos.hypot(t.sin)).sum::<f64>())
            }
            FunctionDescriptor::AmbientPoly { .. } => None,
        }
    }

    /// Multiply by a positive constant, staying inside the family where possible.
    pub fn scaled(&self, c: f64) -> FunctionDescriptor {
        let scale_terms = |terms: &[TrigTerm]| {
            terms.iter().map(|t| TrigTerm { freq: t.freq.clone(), cos: c * t.cos, sin: c * t.sin }).collect()
        };
        match self {
            FunctionDescriptor::Constant { value } => FunctionDescriptor::Constant { value: c * value },
            FunctionDescriptor::Affine { constant, xi } => {
                FunctionDescriptor::Affine { constant: c * constant, xi: xi.iter().map(|v| c * v).collect() }
            }
            FunctionDescriptor::ExpLinear { xi, coeff } => FunctionDescriptor::ExpLinear { xi: xi.clone(), coeff: c * coeff },
            FunctionDescriptor::ChartTrig { constant, terms } => {
                FunctionDescriptor::ChartTrig { constant: c * constant, terms: scale_terms(terms) }
            }
            FunctionDescriptor::AmbientTrig { constant, terms } => {
                FunctionDescriptor::AmbientTrig { constant: c * constant, terms: scale_terms(terms) }
            }
            FunctionDescriptor::AmbientPoly { terms } => FunctionDescriptor::AmbientPoly {
                terms: terms.iter().map(|m| Monomial { coeff: c * m.coeff, powers: m.powers.clone() }).collect(),
            },
        }
    }
}

/// Positive function `c·g` for any surface function `g`.
pub struct Scaled<'a> {
    pub factor: f64,
    pub inner: &'a dyn SurfaceFunction,
}

impl SurfaceFunction for Scaled<'_> {
    fn jet(&self, chart: &Chart, params: &[Jet], x: &[Jet]) -> Jet {
        self.inner.jet(chart, params, x) * self.factor
    }
}

/// Random ambient trigonometric polynomial bounded below by `floor > 0`.
pub fn random_positive_trig<R: Rng + ?Sized>(rng: &mut R, ambient_dim: usize, terms: usize, floor: f64) -> FunctionDescriptor {
    let terms: Vec<TrigTerm> = (0..terms)
        .map(|_| TrigTerm {
            freq: (0..ambient_dim).map(|_| rng.gen_range(-2i32..=2) as f64).collect(),
            cos: rng.gen_range(-0.5..0.5),
            sin: rng.gen_range(-0.5..0.5),
        })
        .collect();
    let amplitude: f64 = terms.iter().map(|t| t.cos.hypot(t.sin)).sum();
    FunctionDescriptor::AmbientTrig { constant: floor + amplitude, terms }
}
