//! Star-shaped Euclidean domains with interior and boundary quadrature.

use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::numeric::{gauss_legendre, pairwise_sum, periodic_trapezoid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialTerm {
    pub k: usize,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

fn origin2() -> Vec<f64> {
    vec![0.0, 0.0]
}

fn origin3() -> Vec<f64> {
    vec![0.0, 0.0, 0.0]
}

fn peanut_amplitude() -> f64 {
    0.45
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum DomainDescriptor {
    Disk {
        #[serde(default = "origin2")]
        center: Vec<f64>,
        radius: f64,
    },
    Ellipse {
        #[serde(default = "origin2")]
        center: Vec<f64>,
        axes: [f64; 2],
    },
    /// `r(θ) = 1 + amplitude · cos 2θ`, smooth and non-convex for amplitude 0.45.
    PeanutDomain {
        #[serde(default = "peanut_amplitude")]
        amplitude: f64,
    },
    /// `r(θ) = base + Σ cos·cos kθ + sin·sin kθ`.
    StarDomain {
        #[serde(default = "origin2")]
        center: Vec<f64>,
        base: f64,
        terms: Vec<RadialTerm>,
    },
    Ball {
        #[serde(default = "origin3")]
        center: Vec<f64>,
        radius: f64,
    },
    SolidEllipsoid {
        #[serde(default = "origin3")]
        center: Vec<f64>,
        axes: [f64; 3],
    },
}

impl DomainDescriptor {
    pub const NAMES: [&'static str; 6] = ["disk", "ellipse", "peanut-domain", "star-domain", "ball", "solid-ellipsoid"];

    pub fn parse(name: &str, parameters: &serde_json::Value) -> Result<Self> {
        if !Self::NAMES.contains(&name) {
            return Err(Error::UnknownCatalog(format!("domain '{name}'")));
        }
        let mut obj = match parameters {
            serde_json::Value::Object(m) => m.clone(),
            serde_json::Value::Null => serde_json::Map::new(),
            other => return Err(Error::InvalidInput(format!("domain parameters must be an object, got {other}"))),
        };
        obj.insert("name".into(), name.into());
        serde_json::from_value(serde_json::Value::Object(obj))
            .map_err(|e| Error::InvalidInput(format!("domain '{name}': {e}")))
    }

    pub fn unit_disk() -> Self {
        DomainDescriptor::Disk { center: origin2(), radius: 1.0 }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainDescriptor::Ball { .. } | DomainDescriptor::SolidEllipsoid { .. } => 3,
            _ => 2,
        }
    }
}

/// Boundary profile `θ ↦ r(θ)` of a planar star-shaped domain.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialProfile {
    Constant(f64),
    Ellipse(f64, f64),
    Fourier { base: f64, terms: Vec<RadialTerm> },
}

impl RadialProfile {
    /// `r`, `r'`, `r''` at `θ`.
    pub fn jet(&self, theta: f64) -> Jet {
        let t = Jet::variable(1, 0, theta);
        match self {
            RadialProfile::Constant(r) => Jet::constant(1, *r),
            RadialProfile::Ellipse(a, b) => {
                let q = t.cos().powi(2) * (b * b) + t.sin().powi(2) * (a * a);
                q.sqrt().recip() * (a * b)
            }
            RadialProfile::Fourier { base, terms } => terms.iter().fold(Jet::constant(1, *base), |acc, term| {
                let kt = t * term.k as f64;
                acc + kt.cos() * term.cos + kt.sin() * term.sin
            }),
        }
    }

    pub fn radius(&self, theta: f64) -> f64 {
        self.jet(theta).value
    }

    /// `r(θ + π) = r(θ)`, needed by the symmetric disk collocation.
    pub fn is_centrally_symmetric(&self) -> bool {
        match self {
            RadialProfile::Fourier { terms, .. } => terms.iter().all(|t| t.k % 2 == 0 || (t.cos == 0.0 && t.sin == 0.0)),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainShape {
    /// `x = center + ρ r(θ) (cos θ, sin θ)`.
    Star2 { center: DVector<f64>, profile: RadialProfile },
    /// `x = center + ρ diag(axes) p(θ, φ)`.
    Linear3 { center: DVector<f64>, axes: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteriorNode {
    pub x: DVector<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryNode {
    pub x: DVector<f64>,
    /// Outward unit normal.
    pub normal: DVector<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanDomain {
    pub n: usize,
    pub descriptor: DomainDescriptor,
    pub shape: DomainShape,
    pub resolution: usize,
    pub interior: Vec<InteriorNode>,
    pub boundary: Vec<BoundaryNode>,
    pub convex: bool,
    pub diameter: f64,
}

fn center_of(c: &[f64], n: usize) -> Result<DVector<f64>> {
    if c.len() != n {
        return Err(Error::Domain(format!("center has {} coordinates, expected {n}", c.len())));
    }
    Ok(DVector::from_column_slice(c))
}

fn positive(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be positive, got {v}")))
    }
}

impl EuclideanDomain {
    pub fn build(descriptor: &DomainDescriptor, resolution: usize) -> Result<Self> {
        if resolution < 4 {
            return Err(Error::Domain(format!("domain resolution {resolution} below minimum 4")));
        }
        let shape = match descriptor {
            DomainDescriptor::Disk { center, radius } => {
                positive(*radius, "radius")?;
                DomainShape::Star2 { center: center_of(center, 2)?, profile: RadialProfile::Constant(*radius) }
            }
            DomainDescriptor::Ellipse { center, axes } => {
                positive(axes[0], "ellipse axis")?;
                positive(axes[1], "ellipse axis")?;
                DomainShape::Star2 { center: center_of(center, 2)?, profile: RadialProfile::Ellipse(axes[0], axes[1]) }
            }
            DomainDescriptor::PeanutDomain { amplitude } => {
                if !(0.0..1.0).contains(amplitude) {
                    return Err(Error::Domain(format!("peanut amplitude must lie in [0, 1), got {amplitude}")));
                }
                DomainShape::Star2 {
                    center: DVector::zeros(2),
                    profile: RadialProfile::Fourier {
                        base: 1.0,
                        terms: vec![RadialTerm { k: 2, cos: *amplitude, sin: 0.0 }],
                    },
                }
            }
            DomainDescriptor::StarDomain { center, base, terms } => {
                let profile = RadialProfile::Fourier { base: *base, terms: terms.clone() };
                let min_r = (0..720).map(|i| profile.radius(TAU * i as f64 / 720.0)).fold(f64::INFINITY, f64::min);
                positive(min_r, "star-domain radius")?;
                DomainShape::Star2 { center: center_of(center, 2)?, profile }
            }
            DomainDescriptor::Ball { center, radius } => {
                positive(*radius, "radius")?;
                DomainShape::Linear3 { center: center_of(center, 3)?, axes: [*radius; 3] }
            }
            DomainDescriptor::SolidEllipsoid { center, axes } => {
                for a in axes {
                    positive(*a, "ellipsoid axis")?;
                }
                DomainShape::Linear3 { center: center_of(center, 3)?, axes: *axes }
            }
        };
        Ok(match &shape {
            DomainShape::Star2 { center, profile } => Self::build_star2(descriptor, shape.clone(), center, profile, resolution),
            DomainShape::Linear3 { center, axes } => Self::build_linear3(descriptor, shape.clone(), center, axes, resolution)?,
        })
    }

    fn build_star2(
        descriptor: &DomainDescriptor,
        shape: DomainShape,
        center: &DVector<f64>,
        profile: &RadialProfile,
        resolution: usize,
    ) -> Self {
        let (rho, wr) = gauss_legendre(resolution, 0.0, 1.0);
        let (theta, wt) = periodic_trapezoid(2 * resolution, 0.0, TAU);
        let mut interior = Vec::with_capacity(rho.len() * theta.len());
        for (t, w_t) in theta.iter().zip(&wt) {
            let r = profile.radius(*t);
            let e = DVector::from_vec(vec![t.cos(), t.sin()]);
            for (p, w_p) in rho.iter().zip(&wr) {
                interior.push(InteriorNode { x: center + &e * (p * r), weight: p * r * r * w_p * w_t });
            }
        }
        let (bt, bw) = periodic_trapezoid(4 * resolution, 0.0, TAU);
        let boundary: Vec<BoundaryNode> = bt
            .iter()
            .zip(&bw)
            .map(|(t, w)| {
                let j = profile.jet(*t);
                let (r, dr) = (j.value, j.grad[0]);
                let e = DVector::from_vec(vec![t.cos(), t.sin()]);
                let e_perp = DVector::from_vec(vec![-t.sin(), t.cos()]);
                let speed = (r * r + dr * dr).sqrt();
                BoundaryNode { x: center + &e * r, normal: (&e * r - &e_perp * dr) / speed, weight: speed * w }
            })
            .collect();
        // convex iff the signed curvature numerator r² + 2r'² − r r'' stays nonnegative
        let convex = (0..2048).all(|i| {
            let j = profile.jet(TAU * i as f64 / 2048.0);
            let (r, dr, d2r) = (j.value, j.grad[0], j.hess[0][0]);
            r * r + 2.0 * dr * dr - r * d2r >= 0.0
        });
        let max_r = (0..2048).map(|i| profile.radius(TAU * i as f64 / 2048.0)).fold(0.0, f64::max);
        Self { n: 2, descriptor: descriptor.clone(), shape, resolution, interior, boundary, convex, diameter: 2.0 * max_r }
    }

    fn build_linear3(
        descriptor: &DomainDescriptor,
        shape: DomainShape,
        center: &DVector<f64>,
        axes: &[f64; 3],
        resolution: usize,
    ) -> Result<Self> {
        let (rho, wr) = gauss_legendre(resolution, 0.0, 1.0);
        let (theta, wt) = gauss_legendre(resolution, 0.0, PI);
        let (phi, wp) = periodic_trapezoid(2 * resolution, 0.0, TAU);
        let det = axes[0] * axes[1] * axes[2];
        let mut interior = Vec::new();
        for (t, w_t) in theta.iter().zip(&wt) {
            for (f, w_f) in phi.iter().zip(&wp) {
                let p = [t.sin() * f.cos(), t.sin() * f.sin(), t.cos()];
                for (r, w_r) in rho.iter().zip(&wr) {
                    let x = DVector::from_fn(3, |i, _| center[i] + r * axes[i] * p[i]);
                    interior.push(InteriorNode { x, weight: det * r * r * t.sin() * w_r * w_t * w_f });
                }
            }
        }
        let surface = crate::geom::build_catalog_surface(
            &crate::geom::SurfaceDescriptor::Ellipsoid { axes: axes.to_vec() },
            resolution,
        )?;
        let boundary = surface
            .samples
            .iter()
            .map(|s| BoundaryNode { x: center + &s.position, normal: -&s.normals[0], weight: s.area_weight })
            .collect();
        let max_axis = axes.iter().fold(0.0f64, |a, b| a.max(*b));
        Ok(Self {
            n: 3,
            descriptor: descriptor.clone(),
            shape,
            resolution,
            interior,
            boundary,
            convex: true,
            diameter: 2.0 * max_axis,
        })
    }

    pub fn volume(&self) -> f64 {
        pairwise_sum(&self.interior.iter().map(|p| p.weight).collect::<Vec<_>>())
    }

    pub fn perimeter(&self) -> f64 {
        pairwise_sum(&self.boundary.iter().map(|p| p.weight).collect::<Vec<_>>())
    }

    pub fn integrate_interior<F: Fn(&DVector<f64>) -> f64>(&self, f: F) -> f64 {
        pairwise_sum(&self.interior.iter().map(|p| f(&p.x) * p.weight).collect::<Vec<_>>())
    }

    pub fn integrate_boundary<F: Fn(&BoundaryNode) -> f64>(&self, f: F) -> f64 {
        pairwise_sum(&self.boundary.iter().map(|p| f(p) * p.weight).collect::<Vec<_>>())
    }

    /// `|∫_Ω div F − ∫_∂Ω ⟨F, ν⟩|` for a vector field given with its divergence.
    pub fn divergence_theorem_residual<F>(&self, field: F) -> f64
    where
        F: Fn(&DVector<f64>) -> (DVector<f64>, f64),
    {
        let bulk = self.integrate_interior(|x| field(x).1);
        let flux = self.integrate_boundary(|b| field(&b.x).0.dot(&b.normal));
        (bulk - flux).abs()
    }

    /// Inverse of the star map: `(ρ, θ)` of a planar point.
    pub fn polar_coordinates(&self, x: &DVector<f64>) -> Option<(f64, f64)> {
        match &self.shape {
            DomainShape::Star2 { center, profile } => {
                let d = x - center;
                let theta = d[1].atan2(d[0]).rem_euclid(TAU);
                Some((d.norm() / profile.radius(theta), theta))
            }
            DomainShape::Linear3 { .. } => None,
        }
    }

    /// Whether a point lies in the closed domain.
    pub fn contains(&self, x: &DVector<f64>) -> bool {
        match &self.shape {
            DomainShape::Star2 { .. } => self.polar_coordinates(x).is_some_and(|(rho, _)| rho <= 1.0),
            DomainShape::Linear3 { center, axes } => {
                (0..3).map(|i| ((x[i] - center[i]) / axes[i]).powi(2)).sum::<f64>() <= 1.0
            }
        }
    }
}
