//! Tensor-product Fourier transforms, spectral derivatives and trigonometric
//! interpolation on uniform periodic grids.

use std::f64::consts::TAU;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::jet::Jet;

/// Integer wavenumbers in FFT order.
pub fn wavenumbers(n: usize) -> Vec<f64> {
    (0..n).map(|j| if j <= n / 2 { j as f64 } else { j as f64 - n as f64 }).collect()
}

fn is_nyquist(j: usize, n: usize) -> bool {
    n % 2 == 0 && j == n / 2
}

fn transform_axes(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    let mut planner = FftPlanner::new();
    let total: usize = shape.iter().product();
    for axis in 0..shape.len() {
        let len = shape[axis];
        let stride: usize = shape[axis + 1..].iter().product();
        let fft = if inverse { planner.plan_fft_inverse(len) } else { planner.plan_fft_forward(len) };
        let mut line = vec![Complex64::new(0.0, 0.0); len];
        for start in 0..total {
            // `start` enumerates lines whose index along `axis` is zero
            if (start / stride) % len != 0 {
                continue;
            }
            for (i, slot) in line.iter_mut().enumerate() {
                *slot = data[start + i * stride];
            }
            fft.process(&mut line);
            for (i, v) in line.iter().enumerate() {
                data[start + i * stride] = *v;
            }
        }
    }
}

/// Normalized coefficients `ĉ` with `u_j = Σ_k ĉ_k e^{i k·x_j}`.
pub fn forward(values: &[f64], shape: &[usize]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    transform_axes(&mut data, shape, false);
    let scale = 1.0 / values.len() as f64;
    data.iter_mut().for_each(|c| *c *= scale);
    data
}

/// Real part of the nodal values of a coefficient array.
pub fn inverse(coeffs: &[Complex64], shape: &[usize]) -> Vec<f64> {
    let mut data = coeffs.to_vec();
    transform_axes(&mut data, shape, true);
    data.iter().map(|c| c.re).collect()
}

fn multi_index(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for d in (0..shape.len()).rev() {
        idx[d] = flat % shape[d];
        flat /= shape[d];
    }
    idx
}

/// Symbol of `Π_a ∂_a^{orders[a]}` at a coefficient index.
fn symbol(idx: &[usize], shape: &[usize], periods: &[f64], orders: &[usize]) -> Complex64 {
    let mut s = Complex64::new(1.0, 0.0);
    for d in 0..shape.len() {
        let p = orders[d];
        if p == 0 {
            continue;
        }
        if p % 2 == 1 && is_nyquist(idx[d], shape[d]) {
            return Complex64::new(0.0, 0.0);
        }
        let k = wavenumbers(shape[d])[idx[d]] * TAU / periods[d];
        s *= Complex64::new(0.0, k).powu(p as u32);
    }
    s
}

/// Spectral derivative `Π_a ∂_a^{orders[a]} u` at the nodes.
pub fn derivative(values: &[f64], shape: &[usize], periods: &[f64], orders: &[usize]) -> Vec<f64> {
    let mut coeffs = forward(values, shape);
    apply_symbol(&mut coeffs, shape, periods, orders);
    inverse(&coeffs, shape)
}

fn apply_symbol(coeffs: &mut [Complex64], shape: &[usize], periods: &[f64], orders: &[usize]) {
    for (flat, c) in coeffs.iter_mut().enumerate() {
        *c *= symbol(&multi_index(flat, shape), shape, periods, orders);
    }
}

/// Value, gradient and Hessian at every node as jets in the grid coordinates.
pub fn nodal_jets(values: &[f64], shape: &[usize], periods: &[f64]) -> Vec<Jet> {
    let d = shape.len();
    let coeffs = forward(values, shape);
    let deriv = |orders: &[usize]| {
        let mut c = coeffs.clone();
        apply_symbol(&mut c, shape, periods, orders);
        inverse(&c, shape)
    };
    let mut grads = Vec::with_capacity(d);
    for a in 0..d {
        let mut o = vec![0; d];
        o[a] = 1;
        grads.push(deriv(&o));
    }
    let mut hess = vec![vec![Vec::new(); d]; d];
    for a in 0..d {
        for b in a..d {
            let mut o = vec![0; d];
            o[a] += 1;
            o[b] += 1;
            hess[a][b] = deriv(&o);
        }
    }
    (0..values.len())
        .map(|i| {
            let mut j = Jet::constant(d, values[i]);
            for a in 0..d {
                j.grad[a] = grads[a][i];
                for b in a..d {
                    j.hess[a][b] = hess[a][b][i];
                    j.hess[b][a] = hess[a][b][i];
                }
            }
            j
        })
        .collect()
}

/// Trigonometric interpolant of nodal data on `Π_a [lo_a, lo_a + period_a)`.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    shape: Vec<usize>,
    lo: Vec<f64>,
    periods: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn new(values: &[f64], shape: &[usize], lo: &[f64], periods: &[f64]) -> Self {
        Self { shape: shape.to_vec(), lo: lo.to_vec(), periods: periods.to_vec(), coeffs: forward(values, shape) }
    }

    pub fn from_coeffs(coeffs: Vec<Complex64>, shape: &[usize], lo: &[f64], periods: &[f64]) -> Self {
        Self { shape: shape.to_vec(), lo: lo.to_vec(), periods: periods.to_vec(), coeffs }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Per-axis basis values and first two derivatives.
    fn basis(&self, axis: usize, x: f64) -> Vec<[Complex64; 3]> {
        let n = self.shape[axis];
        let scale = TAU / self.periods[axis];
        let t = (x - self.lo[axis]) * scale;
        wavenumbers(n)
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                let ks = k * scale;
                if is_nyquist(j, n) {
                    let (s, c) = (k * t).sin_cos();
                    [Complex64::new(c, 0.0), Complex64::new(-ks * s, 0.0), Complex64::new(-ks * ks * c, 0.0)]
                } else {
                    let e = Complex64::from_polar(1.0, k * t);
                    [e, e * Complex64::new(0.0, ks), e * (-ks * ks)]
                }
            })
            .collect()
    }

    /// Interpolant and its exact derivatives at a point.
    pub fn eval(&self, x: &[f64]) -> Jet {
        let d = self.shape.len();
        assert!(d <= 2, "trigonometric interpolation implemented for one or two axes");
        let mut jet = Jet::constant(d, 0.0);
        if d == 1 {
            let b = self.basis(0, x[0]);
            let mut acc = [Complex64::new(0.0, 0.0); 3];
            for (c, bj) in self.coeffs.iter().zip(&b) {
                for r in 0..3 {
                    acc[r] += c * bj[r];
                }
            }
            jet.value = acc[0].re;
            jet.grad[0] = acc[1].re;
            jet.hess[0][0] = acc[2].re;
            return jet;
        }
        let b0 = self.basis(0, x[0]);
        let b1 = self.basis(1, x[1]);
        let n1 = self.shape[1];
        // inner sums over the second axis for each first-axis index
        let zero = Complex64::new(0.0, 0.0);
        let (mut v, mut g0, mut g1, mut h00, mut h01, mut h11) = (zero, zero, zero, zero, zero, zero);
        for (i0, bi) in b0.iter().enumerate() {
            let row = &self.coeffs[i0 * n1..(i0 + 1) * n1];
            let (mut s0, mut s1, mut s2) = (zero, zero, zero);
            for (c, bj) in row.iter().zip(&b1) {
                s0 += c * bj[0];
                s1 += c * bj[1];
                s2 += c * bj[2];
            }
            v += bi[0] * s0;
            g0 += bi[1] * s0;
            g1 += bi[0] * s1;
            h00 += bi[2] * s0;
            h01 += bi[1] * s1;
            h11 += bi[0] * s2;
        }
        jet.value = v.re;
        jet.grad[0] = g0.re;
        jet.grad[1] = g1.re;
        jet.hess[0][0] = h00.re;
        jet.hess[0][1] = h01.re;
        jet.hess[1][0] = h01.re;
        jet.hess[1][1] = h11.re;
        jet
    }
}
