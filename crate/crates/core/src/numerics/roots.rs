//! Polynomial roots (Aberth–Ehrlich) and real root bracketing.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Horner evaluation of `Σ coeffs[k] x^k` and its derivative.
fn horner<T: Real>(coeffs: &[T], x: Complex<T>) -> (Complex<T>, Complex<T>) {
    let mut p = Complex::new(T::zero(), T::zero());
    let mut dp = p;
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + Complex::new(c, T::zero());
    }
    (p, dp)
}

/// All complex roots of `Σ coeffs[k] x^k` (ascending order, nonzero leading
/// coefficient).
pub fn poly_roots<T: Real>(coeffs: &[T]) -> Result<Vec<Complex<T>>> {
    let mut c: Vec<T> = coeffs.to_vec();
    while c.len() > 1 && c[c.len() - 1] == T::zero() {
        c.pop();
    }
    let n = c.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = c[n];
    for v in c.iter_mut() {
        *v /= lead;
    }
    if n == 1 {
        return Ok(vec![Complex::new(-c[0], T::zero())]);
    }
    if n == 2 {
        let (b, q) = (c[1], c[0]);
        let d = b * b - T::lit(4.0) * q;
        return Ok(if d >= T::zero() {
            // cancellation-free form
            let s = d.sqrt();
            let t = -T::lit(0.5) * (b + b.signum() * s);
            let r1 = if t != T::zero() { t } else { T::zero() };
            let r2 = if t != T::zero() { q / t } else { -b };
            vec![Complex::new(r1, T::zero()), Complex::new(r2, T::zero())]
        } else {
            let re = -b / T::lit(2.0);
            let im = (-d).sqrt() / T::lit(2.0);
            vec![Complex::new(re, -im), Complex::new(re, im)]
        });
    }
    // Cauchy bound for the initial circle
    let radius = T::one() + c[..n].iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let mut z: Vec<Complex<T>> = (0..n)
        .map(|k| {
            let ang = T::TAU() * T::from_usize_lossy(k) / T::from_usize_lossy(n) + T::lit(0.4);
            Complex::new(ang.cos(), ang.sin()) * (radius * T::lit(0.5))
        })
        .collect();
    let tol = T::epsilon() * T::lit(4.0);
    for _ in 0..500 {
        let mut moved = T::zero();
        for i in 0..n {
            let (p, dp) = horner(&c, z[i]);
            if p.norm() == T::zero() {
                continue;
            }
            let ratio = p / dp;
            let mut s = Complex::new(T::zero(), T::zero());
            for j in 0..n {
                if j != i {
                    s += Complex::new(T::one(), T::zero()) / (z[i] - z[j]);
                }
            }
            let w = ratio / (Complex::new(T::one(), T::zero()) - ratio * s);
            z[i] -= w;
            moved = moved.max(w.norm() / z[i].norm().max(T::one()));
        }
        if moved < tol {
            return Ok(polish(&c, z));
        }
    }
    Err(Error::NonConvergence {
        estimate: f64::NAN,
        error: f64::NAN,
    })
}

fn polish<T: Real>(c: &[T], mut z: Vec<Complex<T>>) -> Vec<Complex<T>> {
    for r in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner(c, *r);
            if dp.norm() == T::zero() {
                break;
            }
            *r -= p / dp;
        }
        // snap numerically real roots
        if r.im.abs() <= T::lit(1e3) * T::epsilon() * r.re.abs().max(T::one()) {
            r.im = T::zero();
        }
    }
    z
}

/// Root of `f` on `[a, b]` with a sign change: each iteration takes a secant
/// step inside the bracket followed by a bisection step.
pub fn brent<T: Real, F: FnMut(T) -> T>(mut f: F, mut a: T, mut b: T, tol: T) -> Result<T> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if fa * fb > T::zero() {
        return Err(Error::Domain(format!("no sign change on [{a}, {b}]")));
    }
    for _ in 0..200 {
        let x = b - fb * (b - a) / (fb - fa);
        let m = T::lit(0.5) * (a + b);
        for cand in [x, m] {
            if !(cand > a.min(b) && cand < a.max(b)) {
                continue;
            }
            let fc = f(cand);
            if fc == T::zero() {
                return Ok(cand);
            }
            if fa * fc < T::zero() {
                b = cand;
                fb = fc;
            } else {
                a = cand;
                fa = fc;
            }
        }
        if (b - a).abs() <= tol * (T::one() + a.abs().max(b.abs())) {
            break;
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cubic_roots() {
        // (x-1)(x+2)(x-3) = x^3 - 2x^2 - 5x + 6
        let mut r = poly_roots(&[6.0_f64, -5.0, -2.0, 1.0]).unwrap();
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert_relative_eq!(r[0].re, -2.0, epsilon = 1e-12);
        assert_relative_eq!(r[1].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(r[2].re, 3.0, epsilon = 1e-12);
        assert!(r.iter().all(|z| z.im == 0.0));
        let c = poly_roots(&[1.0_f64, 0.0, 1.0]).unwrap();
        assert_relative_eq!(c[0].im.abs(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn brent_finds_cos_root() {
        let r = brent(|x: f64| x.cos() - x, 0.0, 1.0, 1e-14).unwrap();
        assert_relative_eq!(r, 0.739_085_133_215_160_6, epsilon = 1e-12);
    }
}
