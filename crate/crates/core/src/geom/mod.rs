//! Parametric surfaces with analytic second-order chart data and quadrature.

mod chart;
mod function;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use chart::{AmbientKind, Chart};
pub use function::{random_positive_trig, FunctionDescriptor, Monomial, Scaled, SurfaceFunction, TrigTerm};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::numeric::{gauss_legendre, pairwise_sum, periodic_trapezoid};
use crate::spectral::fourier;
use crate::symalg::{SymMatrix, Spectrum};

/// Smallest accepted grid resolution.
pub const MIN_RESOLUTION: usize = 4;

/// Named catalog surfaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum SurfaceDescriptor {
    /// Round sphere `S^n(R) ⊂ R^{n+1}`.
    Sphere { n: usize, radius: f64 },
    /// Ellipsoid with the given semi-axes in `R^{axes.len()}`.
    Ellipsoid { axes: Vec<f64> },
    /// Torus of revolution in `R³`.
    Torus { major: f64, minor: f64 },
    /// Totally geodesic `S^n ⊂ S^{n+m}`.
    EquatorialSphere { n: usize, m: usize },
    /// Great circle `S¹ ⊂ S^{1+m}`.
    GreatCircle { m: usize },
    /// Non-equatorial `S^n ⊂ S^{n+1}` at polar angle `latitude`.
    SmallSphere { n: usize, latitude: f64 },
    /// `S¹(1/√2) × S¹(1/√2) ⊂ S³`.
    CliffordTorus,
}

impl SurfaceDescriptor {
    pub const NAMES: [&'static str; 7] =
        ["sphere", "ellipsoid", "torus", "equatorial-sphere", "great-circle", "small-sphere", "clifford-torus"];

    /// Parse a descriptor from a catalog name and a JSON parameter object.
    pub fn parse(name: &str, parameters: &serde_json::Value) -> Result<Self> {
        if !Self::NAMES.contains(&name) {
            return Err(Error::UnknownCatalog(format!("surface '{name}'")));
        }
        let mut obj = match parameters {
            serde_json::Value::Object(m) => m.clone(),
            serde_json::Value::Null => serde_json::Map::new(),
            other => return Err(Error::InvalidInput(format!("surface parameters must be an object, got {other}"))),
        };
        obj.insert("name".into(), name.into());
        serde_json::from_value(serde_json::Value::Object(obj))
            .map_err(|e| Error::InvalidInput(format!("surface '{name}': {e}")))
    }

    pub fn chart(&self) -> Result<Chart> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{what} must be positive and finite, got {v}")))
            }
        };
        let dims = |n: usize| {
            if (1..=3).contains(&n) {
                Ok(())
            } else {
                Err(Error::Domain(format!("surface dimension {n} outside supported range 1..=3")))
            }
        };
        Ok(match self {
            SurfaceDescriptor::Sphere { n, radius } => {
                dims(*n)?;
                positive(*radius, "radius")?;
                Chart::Ellipsoid { axes: vec![*radius; n + 1] }
            }
            SurfaceDescriptor::Ellipsoid { axes } => {
                if axes.len() < 2 {
                    return Err(Error::Domain("ellipsoid needs at least two axes".into()));
                }
                dims(axes.len() - 1)?;
                for a in axes {
                    positive(*a, "ellipsoid axis")?;
                }
                Chart::Ellipsoid { axes: axes.clone() }
            }
            SurfaceDescriptor::Torus { major, minor } => {
                positive(*minor, "minor radius")?;
                positive(*major - *minor, "major minus minor radius")?;
                Chart::Torus { major: *major, minor: *minor }
            }
            SurfaceDescriptor::EquatorialSphere { n, m } => {
                dims(*n)?;
                if *m == 0 {
                    return Err(Error::Domain("codimension must be at least 1".into()));
                }
                Chart::Subsphere { n: *n, m: *m, latitude: PI / 2.0 }
            }
            SurfaceDescriptor::GreatCircle { m } => {
                if *m == 0 {
                    return Err(Error::Domain("codimension must be at least 1".into()));
                }
                Chart::Subsphere { n: 1, m: *m, latitude: PI / 2.0 }
            }
            SurfaceDescriptor::SmallSphere { n, latitude } => {
                dims(*n)?;
                if !(*latitude > 0.0 && *latitude < PI) {
                    return Err(Error::Domain(format!("latitude must lie in (0, π), got {latitude}")));
                }
                Chart::Subsphere { n: *n, m: 1, latitude: *latitude }
            }
            SurfaceDescriptor::CliffordTorus => Chart::CliffordTorus,
        })
    }

    /// Intrinsic dimension `n`.
    pub fn dim(&self) -> usize {
        self.chart().map(|c| c.param_dim()).unwrap_or(0)
    }

    /// The descriptor of `λΣ` for Euclidean surfaces.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("scale factor must be positive, got {lambda}")));
        }
        Ok(match self {
            SurfaceDescriptor::Sphere { n, radius } => SurfaceDescriptor::Sphere { n: *n, radius: radius * lambda },
            SurfaceDescriptor::Ellipsoid { axes } => {
                SurfaceDescriptor::Ellipsoid { axes: axes.iter().map(|a| a * lambda).collect() }
            }
            SurfaceDescriptor::Torus { major, minor } => {
                SurfaceDescriptor::Torus { major: major * lambda, minor: minor * lambda }
            }
            other => return Err(Error::Unsupported(format!("scaling a submanifold of the unit sphere ({other:?})"))),
        })
    }

    /// Closed-form area where one is known.
    pub fn analytic_area(&self) -> Option<f64> {
        use crate::numeric::sphere_area;
        match self {
            SurfaceDescriptor::Sphere { n, radius } => Some(sphere_area(*n) * radius.powi(*n as i32)),
            SurfaceDescriptor::Torus { major, minor } => Some(4.0 * PI * PI * major * minor),
            SurfaceDescriptor::EquatorialSphere { n, .. } => Some(sphere_area(*n)),
            SurfaceDescriptor::GreatCircle { .. } => Some(2.0 * PI),
            SurfaceDescriptor::SmallSphere { n, latitude } => Some(sphere_area(*n) * latitude.sin().powi(*n as i32)),
            SurfaceDescriptor::CliffordTorus => Some(2.0 * PI * PI),
            SurfaceDescriptor::Ellipsoid { axes } => {
                let first = axes[0];
                if axes.iter().all(|a| (a - first).abs() <= 1e-15 * first) {
                    Some(sphere_area(axes.len() - 1) * first.powi(axes.len() as i32 - 1))
                } else {
                    None
                }
            }
        }
    }

    /// Totally geodesic submanifold of a sphere.
    pub fn is_totally_geodesic(&self) -> bool {
        matches!(self, SurfaceDescriptor::EquatorialSphere { .. } | SurfaceDescriptor::GreatCircle { .. })
    }
}

/// One axis of a tensor-product quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub periodic: bool,
    pub lo: f64,
    pub hi: f64,
}

/// Tensor grid of one chart; samples are stored with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartGrid {
    pub axes: Vec<Axis>,
    pub first_sample: usize,
}

impl ChartGrid {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.nodes.len()).collect()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Multi-index of the flat local index.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut idx = vec![0; shape.len()];
        for d in (0..shape.len()).rev() {
            idx[d] = flat % shape[d];
            flat /= shape[d];
        }
        idx
    }
}

/// All chart data at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSample {
    pub chart: usize,
    pub params: Vec<f64>,
    pub position: DVector<f64>,
    /// Ambient coordinates as jets in the chart parameters.
    pub embedding: Vec<Jet>,
    /// Coordinate tangent vectors `∂_i X`.
    pub coord_tangents: Vec<DVector<f64>>,
    pub metric: DMatrix<f64>,
    pub metric_inv: DMatrix<f64>,
    /// Orthonormal frame coefficients: `e_a = Σ_i frame_coeffs[(a, i)] ∂_i X`.
    pub frame_coeffs: DMatrix<f64>,
    pub tangent_frame: Vec<DVector<f64>>,
    /// `christoffel[k][(i, j)] = Γ^k_ij`.
    pub christoffel: Vec<DMatrix<f64>>,
    pub normals: Vec<DVector<f64>>,
    /// `sff[α](e_a, e_b) = ⟨∂²X(e_a, e_b), ν_α⟩` in the orthonormal frame.
    pub sff: Vec<SymMatrix>,
    /// `√det g` at the point.
    pub volume_density: f64,
    pub area_weight: f64,
}

/// Value, frame gradient and covariant Hessian of a function at one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PointDerivatives {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: SymMatrix,
}

impl SurfaceSample {
    pub fn from_chart(chart_index: usize, chart: &Chart, params: &[f64], weight: f64) -> Result<Self> {
        let n = chart.param_dim();
        let embedding = chart.embed(params);
        let dim = embedding.len();
        let position = DVector::from_iterator(dim, embedding.iter().map(|j| j.value));
        let coord_tangents: Vec<DVector<f64>> =
            (0..n).map(|i| DVector::from_iterator(dim, embedding.iter().map(|j| j.grad[i]))).collect();
        let second = |i: usize, j: usize| DVector::from_iterator(dim, embedding.iter().map(|c| c.hess[i][j]));
        let metric = DMatrix::from_fn(n, n, |i, j| coord_tangents[i].dot(&coord_tangents[j]));
        let chol = metric
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Domain(format!("degenerate metric at chart parameters {params:?}")))?;
        let l = chol.l();
        let frame_coeffs = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Domain(format!("degenerate metric at chart parameters {params:?}")))?;
        let metric_inv = chol.inverse();
        let volume_density = l.diagonal().iter().product::<f64>();
        let tangent_frame: Vec<DVector<f64>> = (0..n)
            .map(|a| (0..n).fold(DVector::zeros(dim), |acc, i| acc + &coord_tangents[i] * frame_coeffs[(a, i)]))
            .collect();
        let seconds: Vec<Vec<DVector<f64>>> = (0..n).map(|i| (0..n).map(|j| second(i, j)).collect()).collect();
        let lowered: Vec<DMatrix<f64>> =
            (0..n).map(|l| DMatrix::from_fn(n, n, |i, j| seconds[i][j].dot(&coord_tangents[l]))).collect();
        let christoffel: Vec<DMatrix<f64>> = (0..n)
            .map(|k| DMatrix::from_fn(n, n, |i, j| (0..n).map(|l| metric_inv[(k, l)] * lowered[l][(i, j)]).sum()))
            .collect();
        let normals = chart.normals(params, &position);
        let sff = normals
            .iter()
            .map(|nu| {
                let coord = DMatrix::from_fn(n, n, |i, j| seconds[i][j].dot(nu));
                SymMatrix::symmetrized(&frame_coeffs * coord * frame_coeffs.transpose())
            })
            .collect();
        Ok(Self {
            chart: chart_index,
            params: params.to_vec(),
            position,
            embedding,
            coord_tangents,
            metric,
            metric_inv,
            frame_coeffs,
            tangent_frame,
            christoffel,
            normals,
            sff,
            volume_density,
            area_weight: volume_density * weight,
        })
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    /// Frame gradient and covariant Hessian from a jet in the chart parameters.
    pub fn derivatives(&self, jet: &Jet) -> PointDerivatives {
        let n = self.dim();
        let du = DVector::from_iterator(n, jet.grad.iter().take(n).copied());
        let coord_hess = DMatrix::from_fn(n, n, |i, j| {
            jet.hess[i][j] - (0..n).map(|k| self.christoffel[k][(i, j)] * du[k]).sum::<f64>()
        });
        let e = &self.frame_coeffs;
        PointDerivatives {
            value: jet.value,
            gradient: e * &du,
            hessian: SymMatrix::symmetrized(e * coord_hess * e.transpose()),
        }
    }

    /// Evaluate an analytic function as a jet at this sample.
    pub fn jet_of(&self, charts: &[Chart], f: &dyn SurfaceFunction) -> Jet {
        let params = Jet::variables(&self.params);
        f.jet(&charts[self.chart], &params, &self.embedding)
    }

    /// Ambient vector `Σ_a v_a e_a` for frame components `v`.
    pub fn ambient_tangent(&self, frame_components: &DVector<f64>) -> DVector<f64> {
        self.tangent_frame
            .iter()
            .zip(frame_components.iter())
            .fold(DVector::zeros(self.position.len()), |acc, (e, c)| acc + e * *c)
    }

    /// Frame components of the tangential part of an ambient vector.
    pub fn tangential_components(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.tangent_frame.iter().map(|e| e.dot(v)))
    }
}

/// Values, frame gradients and covariant Hessians at every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub gradients: Vec<DVector<f64>>,
    pub hessians: Vec<SymMatrix>,
}

impl ScalarField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, i: usize) -> PointDerivatives {
        PointDerivatives { value: self.values[i], gradient: self.gradients[i].clone(), hessian: self.hessians[i].clone() }
    }

    pub fn from_points(points: Vec<PointDerivatives>) -> Self {
        let mut values = Vec::with_capacity(points.len());
        let mut gradients = Vec::with_capacity(points.len());
        let mut hessians = Vec::with_capacity(points.len());
        for p in points {
            values.push(p.value);
            gradients.push(p.gradient);
            hessians.push(p.hessian);
        }
        Self { values, gradients, hessians }
    }

    pub fn laplacians(&self) -> Vec<f64> {
        self.hessians.iter().map(|h| h.trace()).collect()
    }
}

/// Input accepted by [`surface_gradient_hessian`].
pub enum SurfaceInput<'a> {
    Analytic(&'a dyn SurfaceFunction),
    /// Raw nodal values; differentiable only on flat periodic charts.
    GridValues(&'a [f64]),
}

#[derive(Debug, Clone)]
pub struct Hypersurface {
    pub descriptor: SurfaceDescriptor,
    pub resolution: usize,
    pub charts: Vec<Chart>,
    pub grids: Vec<ChartGrid>,
    pub samples: Vec<SurfaceSample>,
}

fn chart_grid(chart: &Chart, resolution: usize, first_sample: usize) -> ChartGrid {
    let axes = chart
        .param_box()
        .into_iter()
        .map(|(lo, hi, periodic)| {
            let (nodes, weights) = if periodic {
                // odd node counts keep the Fourier operators free of a Nyquist mode
                let count = if chart.is_flat_periodic() { resolution | 1 } else { resolution };
                periodic_trapezoid(count, lo, hi - lo)
            } else {
                gauss_legendre(resolution, lo, hi)
            };
            Axis { nodes, weights, periodic, lo, hi }
        })
        .collect();
    ChartGrid { axes, first_sample }
}

/// Build a catalog surface with its quadrature grid.
pub fn build_catalog_surface(descriptor: &SurfaceDescriptor, resolution: usize) -> Result<Hypersurface> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::Domain(format!("resolution {resolution} below minimum {MIN_RESOLUTION}")));
    }
    let chart = descriptor.chart()?;
    let grid = chart_grid(&chart, resolution, 0);
    let count = grid.len();
    let samples = (0..count)
        .into_par_iter()
        .map(|flat| {
            let idx = grid.multi_index(flat);
            let params: Vec<f64> = idx.iter().zip(&grid.axes).map(|(i, a)| a.nodes[*i]).collect();
            let weight: f64 = idx.iter().zip(&grid.axes).map(|(i, a)| a.weights[*i]).product();
            SurfaceSample::from_chart(0, &chart, &params, weight)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Hypersurface { descriptor: descriptor.clone(), resolution, charts: vec![chart], grids: vec![grid], samples })
}

/// Parse and build in one step.
pub fn build_named_surface(name: &str, parameters: &serde_json::Value, resolution: usize) -> Result<Hypersurface> {
    build_catalog_surface(&SurfaceDescriptor::parse(name, parameters)?, resolution)
}

/// `Σ_i value_i · area_weight_i` with pairwise summation.
pub fn integrate(values: &[f64], surface: &Hypersurface) -> Result<f64> {
    if values.len() != surface.samples.len() {
        return Err(Error::InvalidInput(format!(
            "field has {} values but surface has {} samples",
            values.len(),
            surface.samples.len()
        )));
    }
    let terms: Vec<f64> = values.iter().zip(&surface.samples).map(|(v, s)| v * s.area_weight).collect();
    Ok(pairwise_sum(&terms))
}

/// Eigenvalues of the (single) scalar second fundamental form.
pub fn principal_curvatures(sample: &SurfaceSample) -> Result<Spectrum> {
    match sample.sff.as_slice() {
        [only] => Ok(only.spectrum()),
        other => Err(Error::Precondition(format!("principal curvatures need one normal, sample has {}", other.len()))),
    }
}

/// Maximum norm of the mean-curvature vector over samples.
pub fn minimality_residual(surface: &Hypersurface) -> Result<f64> {
    if surface.charts.iter().any(|c| c.ambient_kind() != AmbientKind::UnitSphere) {
        return Err(Error::Precondition("minimality residual needs a submanifold of the unit sphere".into()));
    }
    Ok(surface
        .samples
        .iter()
        .map(|s| s.sff.iter().map(|b| b.trace().powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max))
}

/// Tangential gradients and covariant Hessians of `u` at every sample.
pub fn surface_gradient_hessian(u: SurfaceInput<'_>, surface: &Hypersurface) -> Result<ScalarField> {
    match u {
        SurfaceInput::Analytic(f) => {
            let points = surface
                .samples
                .par_iter()
                .map(|s| s.derivatives(&s.jet_of(&surface.charts, f)))
                .collect();
            Ok(ScalarField::from_points(points))
        }
        SurfaceInput::GridValues(values) => {
            if values.len() != surface.samples.len() {
                return Err(Error::InvalidInput(format!(
                    "{} grid values for {} samples",
                    values.len(),
                    surface.samples.len()
                )));
            }
            if !surface.charts.iter().all(Chart::is_flat_periodic) {
                return Err(Error::Unsupported(
                    "raw grid values can only be differentiated on flat periodic charts; pass an analytic function".into(),
                ));
            }
            let grid = &surface.grids[0];
            let jets = fourier::nodal_jets(values, &grid.shape(), &grid.axes.iter().map(|a| a.hi - a.lo).collect::<Vec<_>>());
            let points = surface.samples.iter().zip(&jets).map(|(s, j)| s.derivatives(j)).collect();
            Ok(ScalarField::from_points(points))
        }
    }
}

impl Hypersurface {
    pub fn dim(&self) -> usize {
        self.charts[0].param_dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.charts[0].ambient_dim()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn area(&self) -> f64 {
        pairwise_sum(&self.samples.iter().map(|s| s.area_weight).collect::<Vec<_>>())
    }

    /// Integral of an analytic function.
    pub fn integrate_fn(&self, f: &dyn SurfaceFunction) -> f64 {
        let values: Vec<f64> = self.samples.par_iter().map(|s| s.jet_of(&self.charts, f).value).collect();
        integrate(&values, self).expect("lengths match by construction")
    }

    pub fn values_of(&self, f: &dyn SurfaceFunction) -> Vec<f64> {
        self.samples.par_iter().map(|s| s.jet_of(&self.charts, f).value).collect()
    }

    /// Chart data at an arbitrary parameter point (zero area weight).
    pub fn sample_at(&self, chart: usize, params: &[f64]) -> Result<SurfaceSample> {
        SurfaceSample::from_chart(chart, &self.charts[chart], params, 0.0)
    }

    /// `λΣ` for a Euclidean hypersurface at the same resolution.
    pub fn scaled(&self, lambda: f64) -> Result<Hypersurface> {
        build_catalog_surface(&self.descriptor.scaled(lambda)?, self.resolution)
    }

    /// Same surface on a different grid.
    pub fn with_resolution(&self, resolution: usize) -> Result<Hypersurface> {
        build_catalog_surface(&self.descriptor, resolution)
    }
}
