//! The constants `π_i` of the expansion theorem, as signed permutation sums.

use crate::error::{Error, Result};
use crate::numerics::linalg::det;
use crate::scalar::Real;

/// Largest size accepted by the enumeration (`8! = 40320` permutations).
pub const MAX_PI_SIZE: usize = 8;

/// All permutations of `0..n` with their signs, in Heap's order.
fn signed_permutations(n: usize) -> Vec<(Vec<usize>, bool)> {
    let mut a: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut even = true;
    let mut out = vec![(a.clone(), even)];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            even = !even;
            out.push((a.clone(), even));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

fn check_rates<T: Real>(rates: &[T]) -> Result<()> {
    let n = rates.len();
    if n == 0 || n > MAX_PI_SIZE {
        return Err(Error::Domain(format!("π constants need 1..={MAX_PI_SIZE} rates, got {n}")));
    }
    for (i, &a) in rates.iter().enumerate() {
        if a == T::zero() || !a.is_finite() {
            return Err(Error::Degenerate(format!("rate y_{} = {a}", i + 1)));
        }
        for &b in &rates[..i] {
            if (a - b).abs() <= T::epsilon() * T::lit(16.0) * a.abs().max(b.abs()) {
                return Err(Error::Degenerate(format!("coinciding rates {a} and {b}")));
            }
        }
    }
    Ok(())
}

/// `π_i = Σ_{φ(i)=N} sgn φ Π_{k≠i} y_k^{φ(k)} / Σ_φ sgn φ Π_k y_k^{φ(k)}`
/// with exponents `φ(k) ∈ {1..N}`, by direct enumeration.
pub fn pi_constants<T: Real>(rates: &[T]) -> Result<Vec<T>> {
    check_rates(rates)?;
    let n = rates.len();
    let mut num = vec![T::zero(); n];
    let mut den = T::zero();
    for (perm, even) in signed_permutations(n) {
        let sign = if even { T::one() } else { -T::one() };
        let mut full = sign;
        for (k, &e) in perm.iter().enumerate() {
            full *= rates[k].powi(e as i32 + 1);
        }
        den += full;
        let top = perm.iter().position(|&e| e == n - 1).expect("a permutation hits N");
        let mut part = sign;
        for (k, &e) in perm.iter().enumerate() {
            if k != top {
                part *= rates[k].powi(e as i32 + 1);
            }
        }
        num[top] += part;
    }
    if den == T::zero() {
        return Err(Error::Degenerate("vanishing permutation sum".into()));
    }
    Ok(num.into_iter().map(|x| x / den).collect())
}

/// The same constants as ratios of determinants of `V = [y_k^j]`: the
/// denominator is `det V` and the numerator for `i` is the cofactor of the
/// entry `(i, N)`.
pub fn pi_constants_by_determinants<T: Real>(rates: &[T]) -> Result<Vec<T>> {
    check_rates(rates)?;
    let n = rates.len();
    let v: Vec<T> = (0..n)
        .flat_map(|k| (1..=n).map(move |j| rates[k].powi(j as i32)))
        .collect();
    let d = det(&v, n);
    if d == T::zero() {
        return Err(Error::Degenerate("singular power matrix".into()));
    }
    (0..n)
        .map(|i| {
            if n == 1 {
                return Ok(T::one() / d);
            }
            let minor: Vec<T> = (0..n)
                .filter(|&k| k != i)
                .flat_map(|k| (1..n).map(move |j| rates[k].powi(j as i32)))
                .collect();
            let sign = if (i + n - 1) % 2 == 0 { T::one() } else { -T::one() };
            Ok(sign * det(&minor, n - 1) / d)
        })
        .collect()
}

/// `1 / (y_i Π_{k≠i} (y_i - y_k))`, the closed pattern of the constants.
pub fn pi_closed_pattern<T: Real>(rates: &[T]) -> Result<Vec<T>> {
    check_rates(rates)?;
    Ok(rates
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let p = rates
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != i)
                .fold(y, |acc, (_, &z)| acc * (y - z));
            T::one() / p
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_rates_by_hand() {
        let p: Vec<f64> = pi_constants(&[-1.0, 2.0]).unwrap();
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn permutation_signs_sum_to_zero() {
        for n in 2..=6 {
            let perms = signed_permutations(n);
            let f: usize = (1..=n).product();
            assert_eq!(perms.len(), f);
            assert_eq!(perms.iter().filter(|p| p.1).count() * 2, f);
        }
    }

    #[test]
    fn coinciding_rates_refused() {
        assert!(matches!(pi_constants(&[1.0, 1.0]), Err(Error::Degenerate(_))));
        assert!(pi_constants(&[0.0, 1.0]).is_err());
    }
}
