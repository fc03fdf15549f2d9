//! Second-order forward-mode jets in up to three variables.
//!
//! Catalog charts and test functions are written once as closed-form
//! expressions over [`Jet`] and their first and second partial derivatives
//! come out exactly (to round-off).

use std::ops::{Add, Div, Mul, Neg, Sub};

pub const MAX_VARS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub dim: usize,
    pub value: f64,
    pub grad: [f64; MAX_VARS],
    pub hess: [[f64; MAX_VARS]; MAX_VARS],
}

impl Jet {
    pub fn constant(dim: usize, value: f64) -> Self {
        debug_assert!(dim <= MAX_VARS);
        Self { dim, value, grad: [0.0; MAX_VARS], hess: [[0.0; MAX_VARS]; MAX_VARS] }
    }

    /// The coordinate function `x_index` evaluated at `value`.
    pub fn variable(dim: usize, index: usize, value: f64) -> Self {
        let mut j = Self::constant(dim, value);
        j.grad[index] = 1.0;
        j
    }

    /// All coordinate functions at a point.
    pub fn variables(point: &[f64]) -> Vec<Jet> {
        (0..point.len()).map(|i| Jet::variable(point.len(), i, point[i])).collect()
    }

    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        let mut out = Self::constant(self.dim, f);
        for i in 0..self.dim {
            out.grad[i] = df * self.grad[i];
            for j in 0..self.dim {
                out.hess[i][j] = d2f * self.grad[i] * self.grad[j] + df * self.hess[i][j];
            }
        }
        out
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    pub fn sqrt(self) -> Self {
        let r = self.value.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.value))
    }

    pub fn powf(self, p: f64) -> Self {
        let v = self.value;
        self.chain(v.powf(p), p * v.powf(p - 1.0), p * (p - 1.0) * v.powf(p - 2.0))
    }

    pub fn powi(self, p: i32) -> Self {
        let v = self.value;
        let pf = p as f64;
        let d1 = if p == 0 { 0.0 } else { pf * v.powi(p - 1) };
        let d2 = if p <= 1 { 0.0 } else { pf * (pf - 1.0) * v.powi(p - 2) };
        self.chain(v.powi(p), d1, d2)
    }

    pub fn recip(self) -> Self {
        let v = self.value;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn gradient(&self) -> Vec<f64> {
        self.grad[..self.dim].to_vec()
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        self.value += rhs.value;
        for i in 0..self.dim {
            self.grad[i] += rhs.grad[i];
            for j in 0..self.dim {
                self.hess[i][j] += rhs.hess[i][j];
            }
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.value = -self.value;
        for i in 0..self.dim {
            self.grad[i] = -self.grad[i];
            for j in 0..self.dim {
                self.hess[i][j] = -self.hess[i][j];
            }
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut out = Jet::constant(self.dim, self.value * rhs.value);
        for i in 0..self.dim {
            out.grad[i] = self.grad[i] * rhs.value + self.value * rhs.grad[i];
            for j in 0..self.dim {
                out.hess[i][j] = self.hess[i][j] * rhs.value
                    + self.grad[i] * rhs.grad[j]
                    + rhs.grad[i] * self.grad[j]
                    + self.value * rhs.hess[i][j];
            }
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, c: f64) -> Jet {
        self.value *= c;
        for i in 0..self.dim {
            self.grad[i] *= c;
            for j in 0..self.dim {
                self.hess[i][j] *= c;
            }
        }
        self
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, c: f64) -> Jet {
        self.value += c;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, c: f64) -> Jet {
        self.value -= c;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let f = |x: &[Jet]| (x[0] * x[1]).sin() * x[0].exp() + (x[1] * x[1] + 1.0).sqrt() / (x[0] + 3.0);
        let p = [0.3, -0.7];
        let j = f(&Jet::variables(&p));
        let h = 1e-4;
        let eval = |a: f64, b: f64| f(&Jet::variables(&[a, b])).value;
        let dx = (eval(p[0] + h, p[1]) - eval(p[0] - h, p[1])) / (2.0 * h);
        let dxy = (eval(p[0] + h, p[1] + h) - eval(p[0] + h, p[1] - h) - eval(p[0] - h, p[1] + h)
            + eval(p[0] - h, p[1] - h))
            / (4.0 * h * h);
        assert!((j.grad[0] - dx).abs() < 1e-7);
        assert!((j.hess[0][1] - dxy).abs() < 1e-6);
        assert_eq!(j.hess[0][1], j.hess[1][0]);
    }
}
