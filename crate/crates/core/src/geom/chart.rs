//! Catalog charts: closed-form embeddings evaluated on jets.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::jet::Jet;

/// Where a chart's image lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AmbientKind {
    /// Closed hypersurface of `R^{n+1}`; one inward unit normal.
    Euclidean,
    /// Submanifold of the unit sphere `S^{n+m} ⊂ R^{n+m+1}`; `m` normals tangent to the sphere.
    UnitSphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Chart {
    /// Ellipsoid `Σ x_i²/a_i² = 1` in `R^{n+1}` over hyperspherical angles
    /// `(θ_1, …, θ_{n−1}, φ)`. Equal axes give a round sphere.
    Ellipsoid { axes: Vec<f64> },
    /// Torus of revolution about the `x_3` axis, params `(u, v)`.
    Torus { major: f64, minor: f64 },
    /// `x = (sin α · p, cos α, 0, …, 0)` with `p ∈ S^n`, inside `S^{n+m}`.
    /// `α = π/2` is the totally geodesic equator.
    Subsphere { n: usize, m: usize, latitude: f64 },
    /// `S¹(1/√2) × S¹(1/√2) ⊂ S³`, params `(u, v)`.
    CliffordTorus,
}

/// Unit-sphere coordinates `p_0..p_n` over hyperspherical angles.
fn hyperspherical(params: &[Jet]) -> Vec<Jet> {
    let n = params.len();
    let dim = params[0].dim;
    let mut p = vec![Jet::constant(dim, 0.0); n + 1];
    let phi = params[n - 1];
    let mut sines = Jet::constant(dim, 1.0);
    for i in 0..n - 1 {
        p[n - i] = sines * params[i].cos();
        sines = sines * params[i].sin();
    }
    p[0] = sines * phi.cos();
    p[1] = sines * phi.sin();
    p
}

fn hyperspherical_angles(p: &[f64]) -> Vec<f64> {
    let n = p.len() - 1;
    let mut angles = Vec::with_capacity(n);
    for i in 1..n {
        let idx = n - i + 1;
        let rest: f64 = p[..idx].iter().map(|v| v * v).sum::<f64>().sqrt();
        angles.push(rest.atan2(p[idx]));
    }
    angles.push(p[1].atan2(p[0]).rem_euclid(TAU));
    angles
}

impl Chart {
    pub fn param_dim(&self) -> usize {
        match self {
            Chart::Ellipsoid { axes } => axes.len() - 1,
            Chart::Torus { .. } | Chart::CliffordTorus => 2,
            Chart::Subsphere { n, .. } => *n,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Chart::Ellipsoid { axes } => axes.len(),
            Chart::Torus { .. } => 3,
            Chart::Subsphere { n, m, .. } => n + m + 1,
            Chart::CliffordTorus => 4,
        }
    }

    pub fn ambient_kind(&self) -> AmbientKind {
        match self {
            Chart::Ellipsoid { .. } | Chart::Torus { .. } => AmbientKind::Euclidean,
            Chart::Subsphere { .. } | Chart::CliffordTorus => AmbientKind::UnitSphere,
        }
    }

    /// Parameter intervals and periodicity flags.
    pub fn param_box(&self) -> Vec<(f64, f64, bool)> {
        match self {
            Chart::Ellipsoid { .. } | Chart::Subsphere { .. } => {
                let n = self.param_dim();
                let mut b = vec![(0.0, PI, false); n - 1];
                b.push((0.0, TAU, true));
                b
            }
            Chart::Torus { .. } | Chart::CliffordTorus => vec![(0.0, TAU, true), (0.0, TAU, true)],
        }
    }

    /// Constant metric in chart coordinates with all parameters periodic.
    pub fn is_flat_periodic(&self) -> bool {
        match self {
            Chart::CliffordTorus => true,
            Chart::Subsphere { n, .. } => *n == 1,
            _ => false,
        }
    }

    /// Surfaces parametrized by hyperspherical angles on a linear image of a sphere.
    pub fn is_sphere_type(&self) -> bool {
        matches!(self, Chart::Ellipsoid { .. } | Chart::Subsphere { .. })
    }

    /// Ambient coordinates as jets in the chart parameters.
    pub fn embed(&self, params: &[f64]) -> Vec<Jet> {
        let vars = Jet::variables(params);
        match self {
            Chart::Ellipsoid { axes } => {
                let p = hyperspherical(&vars);
                p.into_iter().zip(axes).map(|(c, a)| c * *a).collect()
            }
            Chart::Torus { major, minor } => {
                let (u, v) = (vars[0], vars[1]);
                let ring = v.cos() * *minor + *major;
                vec![ring * u.cos(), ring * u.sin(), v.sin() * *minor]
            }
            Chart::Subsphere { n, m, latitude } => {
                let p = hyperspherical(&vars);
                let dim = vars[0].dim;
                let (s, c) = latitude.sin_cos();
                let mut x: Vec<Jet> = p.into_iter().map(|c| c * s).collect();
                x.push(Jet::constant(dim, c));
                x.extend((1..*m).map(|_| Jet::constant(dim, 0.0)));
                debug_assert_eq!(x.len(), n + m + 1);
                x
            }
            Chart::CliffordTorus => {
                let (u, v) = (vars[0], vars[1]);
                vec![u.cos() * FRAC_1_SQRT_2, u.sin() * FRAC_1_SQRT_2, v.cos() * FRAC_1_SQRT_2, v.sin() * FRAC_1_SQRT_2]
            }
        }
    }

    /// Orthonormal normal frame: the inward normal for Euclidean hypersurfaces,
    /// a basis of the normal space inside the sphere otherwise.
    pub fn normals(&self, params: &[f64], position: &DVector<f64>) -> Vec<DVector<f64>> {
        match self {
            Chart::Ellipsoid { axes } => {
                let g = DVector::from_iterator(axes.len(), position.iter().zip(axes).map(|(x, a)| -x / (a * a)));
                vec![g.normalize()]
            }
            Chart::Torus { .. } => {
                let (u, v) = (params[0], params[1]);
                vec![DVector::from_vec(vec![-v.cos() * u.cos(), -v.cos() * u.sin(), -v.sin()])]
            }
            Chart::Subsphere { n, m, latitude } => {
                let (s, c) = latitude.sin_cos();
                let dim = n + m + 1;
                let mut first = DVector::zeros(dim);
                for i in 0..=*n {
                    first[i] = c * position[i] / s;
                }
                first[n + 1] = -s;
                let mut out = vec![first];
                for extra in 1..*m {
                    let mut e = DVector::zeros(dim);
                    e[n + 1 + extra] = 1.0;
                    out.push(e);
                }
                out
            }
            Chart::CliffordTorus => {
                let (u, v) = (params[0], params[1]);
                vec![DVector::from_vec(vec![
                    u.cos() * FRAC_1_SQRT_2,
                    u.sin() * FRAC_1_SQRT_2,
                    -v.cos() * FRAC_1_SQRT_2,
                    -v.sin() * FRAC_1_SQRT_2,
                ])]
            }
        }
    }

    /// Parameters of the surface point nearest (in the chart's natural
    /// projection) to an ambient point close to the surface.
    pub fn locate(&self, x: &DVector<f64>) -> Vec<f64> {
        match self {
            Chart::Ellipsoid { axes } => {
                let q: Vec<f64> = x.iter().zip(axes).map(|(v, a)| v / a).collect();
                hyperspherical_angles(&q)
            }
            Chart::Torus { major, .. } => {
                let u = x[1].atan2(x[0]).rem_euclid(TAU);
                let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let v = x[2].atan2(rho - major).rem_euclid(TAU);
                vec![u, v]
            }
            Chart::Subsphere { n, .. } => hyperspherical_angles(&x.as_slice()[..=*n]),
            Chart::CliffordTorus => vec![x[1].atan2(x[0]).rem_euclid(TAU), x[3].atan2(x[2]).rem_euclid(TAU)],
        }
    }

    /// Same chart with every length multiplied by `lambda` (Euclidean charts only).
    pub fn scaled(&self, lambda: f64) -> Option<Chart> {
        match self {
            Chart::Ellipsoid { axes } => Some(Chart::Ellipsoid { axes: axes.iter().map(|a| a * lambda).collect() }),
            Chart::Torus { major, minor } => Some(Chart::Torus { major: major * lambda, minor: minor * lambda }),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locate_inverts_embed() {
        let charts = [
            Chart::Ellipsoid { axes: vec![1.0, 1.5, 2.0] },
            Chart::Ellipsoid { axes: vec![1.0, 1.0, 1.0, 1.3] },
            Chart::Torus { major: 2.0, minor: 0.5 },
            Chart::Subsphere { n: 2, m: 1, latitude: PI / 2.0 },
            Chart::CliffordTorus,
        ];
        for chart in &charts {
            let d = chart.param_dim();
            let params: Vec<f64> = (0..d).map(|i| 0.4 + 0.7 * i as f64).collect();
            let x = DVector::from_iterator(chart.ambient_dim(), chart.embed(&params).iter().map(|j| j.value));
            let back = chart.locate(&x);
            for (a, b) in params.iter().zip(&back) {
                assert!((a - b).abs() < 1e-12, "{chart:?}: {params:?} vs {back:?}");
            }
        }
    }
}
