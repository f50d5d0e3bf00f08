//! Confluent (Kummer M and U) and Gauss hypergeometric functions on the real
//! line.

use super::gamma::{gamma_sign, is_pole, ln_gamma, pochhammer, rgamma};
use super::quadrature::{Quadrature, Upper};
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_TERMS: usize = 100_000;

/// `Γ(n_1)…Γ(n_k) / (Γ(d_1)…Γ(d_m))`; zero if a denominator argument is a pole.
fn gamma_ratio<T: Real>(num: &[T], den: &[T]) -> T {
    if den.iter().any(|&d| is_pole(d)) {
        return T::zero();
    }
    if num.iter().any(|&n| is_pole(n)) {
        return T::nan();
    }
    let mut sign = T::one();
    let mut lg = T::zero();
    for &n in num {
        sign *= gamma_sign(n);
        lg += ln_gamma(n);
    }
    for &d in den {
        sign *= gamma_sign(d);
        lg -= ln_gamma(d);
    }
    sign * lg.exp()
}

/// `M(a, b, z) = m · e^{scale}` with `|m|` kept moderate; usable for large `z`.
pub fn kummer_m_scaled<T: Real>(a: T, b: T, z: T) -> Result<(T, T)> {
    if is_pole(b) {
        return Err(Error::Domain(format!("M(a, b, z) undefined for b = {b}")));
    }
    if z < T::zero() {
        // Kummer transformation keeps the series positive-term
        let (m, s) = kummer_m_scaled(b - a, b, -z)?;
        return Ok((m, s + z));
    }
    let big = T::lit(1e100);
    let ln_big = big.ln();
    let mut scale = T::zero();
    let mut term = T::one();
    let mut sum = T::one();
    for k in 0..MAX_TERMS {
        let fk = T::from_usize_lossy(k);
        term *= (a + fk) / (b + fk) * z / (fk + T::one());
        sum += term;
        if term == T::zero() {
            break;
        }
        if sum.abs() > big {
            sum /= big;
            term /= big;
            scale += ln_big;
        }
        let past_peak = fk > z - a && fk > T::zero();
        if past_peak && term.abs() <= T::epsilon() * sum.abs() {
            return Ok((sum, scale));
        }
    }
    if term == T::zero() {
        return Ok((sum, scale));
    }
    Err(Error::NonConvergence {
        estimate: sum.to_f64_lossy(),
        error: term.to_f64_lossy(),
    })
}

/// Kummer's function `M(a, b, z) = ₁F₁(a; b; z)`.
pub fn kummer_m<T: Real>(a: T, b: T, z: T) -> Result<T> {
    let (m, s) = kummer_m_scaled(a, b, z)?;
    Ok(m * s.exp())
}

/// Derivatives `M^{(k)}(a, b, z)` for `k = 0..=order`, each as `(mantissa, scale)`.
pub fn kummer_m_derivs_scaled<T: Real>(a: T, b: T, z: T, order: usize) -> Result<Vec<(T, T)>> {
    (0..=order)
        .map(|k| {
            let (m, s) = kummer_m_scaled(a + T::from_usize_lossy(k), b + T::from_usize_lossy(k), z)?;
            Ok((m * pochhammer(a, k) / pochhammer(b, k), s))
        })
        .collect()
}

fn kummer_u_connection<T: Real>(a: T, b: T, z: T) -> Result<T> {
    let near_int = (b - b.round()).abs() < T::lit(1e-6);
    if near_int {
        let h = T::lit(1e-7);
        let lo = kummer_u_connection_raw(a, b - h, z)?;
        let hi = kummer_u_connection_raw(a, b + h, z)?;
        return Ok(T::lit(0.5) * (lo + hi));
    }
    kummer_u_connection_raw(a, b, z)
}

fn kummer_u_connection_raw<T: Real>(a: T, b: T, z: T) -> Result<T> {
    let one = T::one();
    let t1 = if is_pole(one - b) {
        T::zero()
    } else {
        gamma_ratio(&[one - b], &[a - b + one]) * kummer_m(a, b, z)?
    };
    let t2 = if is_pole(b - one) {
        T::zero()
    } else {
        gamma_ratio(&[b - one], &[a]) * z.powf(one - b) * kummer_m(a - b + one, T::lit(2.0) - b, z)?
    };
    Ok(t1 + t2)
}

/// `U^{(k)}(a, b, z)` for `k = 0..=order` from the Laplace integral, `a > 0`,
/// `z > 0`. The substitution `t = s/z` makes the integrand O(1); for
/// `a < 1` a further `v = s^a` removes the endpoint singularity.
fn kummer_u_integral<T: Real>(a: T, b: T, z: T, order: usize) -> Result<Vec<T>> {
    let dim = order + 1;
    let e = b - a - T::one();
    let q = Quadrature::relative(T::lit(1e-13));
    let res = if a >= T::one() {
        q.integrate_vec(
            |s, out| {
                let base = (-s).exp() * s.powf(a - T::one()) * (T::one() + s / z).powf(e);
                let mut w = base;
                for o in out.iter_mut() {
                    *o = w;
                    w *= s;
                }
                Ok(())
            },
            dim,
            T::zero(),
            Upper::Infinity,
        )?
    } else {
        let inv_a = T::one() / a;
        q.integrate_vec(
            |v, out| {
                let s = v.powf(inv_a);
                let base = (-s).exp() * (T::one() + s / z).powf(e);
                let mut w = base;
                for o in out.iter_mut() {
                    *o = w;
                    w *= s;
                }
                Ok(())
            },
            dim,
            T::zero(),
            Upper::Infinity,
        )?
    };
    // U^{(k)} = (-1)^k z^{-a-k} / Γ(a) ∫ e^{-s} s^{a-1+k} (1+s/z)^{b-a-1} ds
    let pre = if a >= T::one() {
        rgamma(a)
    } else {
        rgamma(a + T::one())
    };
    let mut out = Vec::with_capacity(dim);
    for (k, v) in res.into_iter().map(|r| r.value).enumerate() {
        let sign = if k % 2 == 0 { T::one() } else { -T::one() };
        out.push(sign * pre * z.powf(-a - T::from_usize_lossy(k)) * v);
    }
    Ok(out)
}

/// Tricomi's function `U(a, b, z)` for `z > 0`.
pub fn kummer_u<T: Real>(a: T, b: T, z: T) -> Result<T> {
    Ok(kummer_u_derivs(a, b, z, 0)?[0])
}

/// `U^{(k)}(a, b, z)` for `k = 0..=order`.
pub fn kummer_u_derivs<T: Real>(a: T, b: T, z: T, order: usize) -> Result<Vec<T>> {
    if !(z > T::zero()) {
        return Err(Error::Domain(format!("U(a, b, z) needs z > 0, got {z}")));
    }
    if a > T::zero() {
        return kummer_u_integral(a, b, z, order);
    }
    // U' = -a U(a+1, b+1, z)
    let mut out = Vec::with_capacity(order + 1);
    let mut coef = T::one();
    for k in 0..=order {
        let fk = T::from_usize_lossy(k);
        out.push(coef * kummer_u_connection(a + fk, b + fk, z)?);
        coef *= -(a + fk);
    }
    Ok(out)
}

/// Value of `₂F₁` together with how it was obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyp2F1<T> {
    pub value: T,
    /// `z > 1`: the value is the real part of the principal branch.
    pub branch_cut: bool,
    /// A degenerate parameter combination was resolved by symmetric perturbation.
    pub perturbed: bool,
}

fn hyp2f1_series<T: Real>(a: T, b: T, c: T, z: T) -> Result<T> {
    let mut term = T::one();
    let mut sum = T::one();
    for k in 0..MAX_TERMS {
        let fk = T::from_usize_lossy(k);
        term *= (a + fk) * (b + fk) / ((c + fk) * (fk + T::one())) * z;
        sum += term;
        if term == T::zero() || term.abs() <= T::epsilon() * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        estimate: sum.to_f64_lossy(),
        error: term.to_f64_lossy(),
    })
}

fn near_integer<T: Real>(x: T) -> bool {
    (x - x.round()).abs() < T::lit(1e-9)
}

const PERTURB: f64 = 1e-5;

/// Gauss hypergeometric function on the real axis.
pub fn hyp2f1<T: Real>(a: T, b: T, c: T, z: T) -> Result<Hyp2F1<T>> {
    if is_pole(c) {
        return Err(Error::Domain(format!("₂F₁ undefined for c = {c}")));
    }
    let one = T::one();
    let plain = |value| Hyp2F1 {
        value,
        branch_cut: false,
        perturbed: false,
    };
    if z == T::zero() {
        return Ok(plain(one));
    }
    if z == one {
        if !(c - a - b > T::zero()) {
            return Err(Error::Divergence(format!(
                "₂F₁ at z = 1 needs c - a - b > 0, got {}",
                c - a - b
            )));
        }
        return Ok(plain(gamma_ratio(&[c, c - a - b], &[c - a, c - b])));
    }
    if z < T::zero() {
        // Pfaff
        let inner = hyp2f1(a, c - b, c, z / (z - one))?;
        return Ok(Hyp2F1 {
            value: (one - z).powf(-a) * inner.value,
            ..inner
        });
    }
    if z <= T::lit(0.75) {
        return hyp2f1_series(a, b, c, z).map(plain);
    }
    if z < one {
        if near_integer(c - a - b) {
            let h = T::lit(PERTURB);
            let lo = hyp2f1_one_minus_z(a - h, b, c, z)?;
            let hi = hyp2f1_one_minus_z(a + h, b, c, z)?;
            return Ok(Hyp2F1 {
                value: T::lit(0.5) * (lo + hi),
                branch_cut: false,
                perturbed: true,
            });
        }
        return hyp2f1_one_minus_z(a, b, c, z).map(plain);
    }
    if near_integer(a - b) {
        let h = T::lit(PERTURB);
        let lo = hyp2f1_inverse_z(a - h, b, c, z)?;
        let hi = hyp2f1_inverse_z(a + h, b, c, z)?;
        return Ok(Hyp2F1 {
            value: T::lit(0.5) * (lo.value + hi.value),
            branch_cut: true,
            perturbed: true,
        });
    }
    hyp2f1_inverse_z(a, b, c, z)
}

fn hyp2f1_one_minus_z<T: Real>(a: T, b: T, c: T, z: T) -> Result<T> {
    let one = T::one();
    let w = one - z;
    let t1 = gamma_ratio(&[c, c - a - b], &[c - a, c - b]) * hyp2f1(a, b, a + b - c + one, w)?.value;
    let t2 = gamma_ratio(&[c, a + b - c], &[a, b]) * w.powf(c - a - b) * hyp2f1(c - a, c - b, c - a - b + one, w)?.value;
    Ok(t1 + t2)
}

fn hyp2f1_inverse_z<T: Real>(a: T, b: T, c: T, z: T) -> Result<Hyp2F1<T>> {
    let one = T::one();
    let w = one / z;
    // Re (-z)^{-s} on the principal branch = z^{-s} cos(π s)
    let re_pow = |s: T| z.powf(-s) * (T::PI() * s).cos();
    let t1 = if is_pole(b - a) {
        T::zero()
    } else {
        gamma_ratio(&[c, b - a], &[b, c - a]) * re_pow(a) * hyp2f1(a, a - c + one, a - b + one, w)?.value
    };
    let t2 = if is_pole(a - b) {
        T::zero()
    } else {
        gamma_ratio(&[c, a - b], &[a, c - b]) * re_pow(b) * hyp2f1(b, b - c + one, b - a + one, w)?.value
    };
    Ok(Hyp2F1 {
        value: t1 + t2,
        branch_cut: true,
        perturbed: false,
    })
}
