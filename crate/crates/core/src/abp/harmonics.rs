//! Real orthonormal spherical harmonics as jets in the polar and azimuthal angles.

use std::f64::consts::PI;

use crate::jet::Jet;

/// Number of harmonics of degree at most `l_max`.
pub fn basis_len(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 1)
}

/// Flat index of `Y_{l,m}`, `−l ≤ m ≤ l`.
pub fn index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Degree of the harmonic stored at a flat index.
pub fn degree(idx: usize) -> usize {
    (idx as f64).sqrt().floor() as usize
}

/// `Y_{l,m}(θ, φ)` for all `l ≤ l_max`: `P̄_l^{|m|}(cos θ)` times `√2 cos mφ` (`m > 0`) or `√2 sin |m|φ` (`m < 0`).
pub fn real_harmonics(l_max: usize, theta: Jet, phi: Jet) -> Vec<Jet> {
    let dim = theta.dim;
    let (x, s) = (theta.cos(), theta.sin());
    let mut out = vec![Jet::constant(dim, 0.0); basis_len(l_max)];
    let mut diag = Jet::constant(dim, 1.0 / (4.0 * PI).sqrt());
    for m in 0..=l_max {
        if m > 0 {
            let mf = m as f64;
            diag = diag * s * (-((2.0 * mf + 1.0) / (2.0 * mf)).sqrt());
        }
        let (trig_c, trig_s) = if m == 0 {
            (Jet::constant(dim, 1.0), Jet::constant(dim, 0.0))
        } else {
            let arg = phi * m as f64;
            (arg.cos() * 2f64.sqrt(), arg.sin() * 2f64.sqrt())
        };
        let mut prev2 = Jet::constant(dim, 0.0);
        let mut prev = diag;
        for l in m..=l_max {
            let p = if l == m {
                diag
            } else if l == m + 1 {
                x * diag * (2.0 * m as f64 + 3.0).sqrt()
            } else {
                let (lf, mf) = (l as f64, m as f64);
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
                (x * prev - prev2 * b) * a
            };
            if l > m {
                prev2 = prev;
                prev = p;
            }
            if m == 0 {
                out[index(l, 0)] = p;
            } else {
                out[index(l, m as i64)] = p * trig_c;
                out[index(l, -(m as i64))] = p * trig_s;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{gauss_legendre, periodic_trapezoid};

    #[test]
    fn orthonormal_on_the_sphere() {
        let l_max = 6;
        // Gauss-Legendre in z = cos θ is exact for products of degree ≤ 12
        let (zn, zw) = gauss_legendre(16, -1.0, 1.0);
        let (pn, pw) = periodic_trapezoid(16, 0.0, 2.0 * PI);
        let nb = basis_len(l_max);
        let mut gram = vec![0.0; nb * nb];
        for (z, wz) in zn.iter().zip(&zw) {
            for (p, wp) in pn.iter().zip(&pw) {
                let y = real_harmonics(l_max, Jet::variable(2, 0, z.acos()), Jet::variable(2, 1, *p));
                let w = wz * wp;
                for a in 0..nb {
                    for b in 0..nb {
                        gram[a * nb + b] += w * y[a].value * y[b].value;
                    }
                }
            }
        }
        for a in 0..nb {
            for b in 0..nb {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((gram[a * nb + b] - expect).abs() < 1e-12, "{a} {b} {}", gram[a * nb + b]);
            }
        }
    }

    #[test]
    fn eigenfunctions_of_the_sphere_laplacian() {
        let (t, p) = (0.7, 1.9);
        let y = real_harmonics(5, Jet::variable(2, 0, t), Jet::variable(2, 1, p));
        for (idx, yj) in y.iter().enumerate() {
            let l = degree(idx) as f64;
            let lap = yj.hess[0][0] + t.cos() / t.sin() * yj.grad[0] + yj.hess[1][1] / t.sin().powi(2);
            assert!((lap + l * (l + 1.0) * yj.value).abs() < 1e-11, "{idx}");
        }
        assert_eq!(index(2, -2), 4);
        assert_eq!(degree(8), 2);
        assert_eq!(degree(9), 3);
    }
}
