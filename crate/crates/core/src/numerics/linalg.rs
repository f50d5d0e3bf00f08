//! Dense LU with partial pivoting for the small matrices used in Wronskians.

use crate::scalar::Real;

/// In-place LU of a row-major `n x n` matrix. Returns the permutation sign,
/// or `None` when a zero pivot is met.
pub fn lu_in_place<T: Real>(a: &mut [T], n: usize, perm: &mut [usize]) -> Option<T> {
    debug_assert_eq!(a.len(), n * n);
    for (i, p) in perm.iter_mut().enumerate().take(n) {
        *p = i;
    }
    let mut sign = T::one();
    for k in 0..n {
        let mut piv = k;
        let mut best = a[k * n + k].abs();
        for i in (k + 1)..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == T::zero() || !best.is_finite() {
            return None;
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            perm.swap(k, piv);
            sign = -sign;
        }
        let d = a[k * n + k];
        for i in (k + 1)..n {
            let l = a[i * n + k] / d;
            a[i * n + k] = l;
            for j in (k + 1)..n {
                let u = a[k * n + j];
                a[i * n + j] -= l * u;
            }
        }
    }
    Some(sign)
}

/// Determinant of a row-major `n x n` matrix; zero for singular input.
pub fn det<T: Real>(a: &[T], n: usize) -> T {
    match n {
        0 => T::one(),
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        _ => {
            let mut m = a.to_vec();
            let mut perm = vec![0; n];
            match lu_in_place(&mut m, n, &mut perm) {
                None => T::zero(),
                Some(sign) => (0..n).fold(sign, |acc, k| acc * m[k * n + k]),
            }
        }
    }
}

/// Solves `A x = b`; `None` for singular `A`.
pub fn solve<T: Real>(a: &[T], b: &[T], n: usize) -> Option<Vec<T>> {
    let mut m = a.to_vec();
    let mut perm = vec![0; n];
    lu_in_place(&mut m, n, &mut perm)?;
    let mut x: Vec<T> = perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for j in 0..i {
            let l = m[i * n + j];
            let xj = x[j];
            x[i] -= l * xj;
        }
    }
    for i in (0..n).rev() {
        for j in (i + 1)..n {
            let u = m[i * n + j];
            let xj = x[j];
            x[i] -= u * xj;
        }
        x[i] /= m[i * n + i];
    }
    Some(x)
}

/// Minor of a row-major `n x n` matrix with one row and one column removed.
pub fn minor<T: Real>(a: &[T], n: usize, row: usize, col: usize) -> Vec<T> {
    let mut out = Vec::with_capacity((n - 1) * (n - 1));
    for i in (0..n).filter(|&i| i != row) {
        for j in (0..n).filter(|&j| j != col) {
            out.push(a[i * n + j]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn det_and_solve_agree_with_hand_values() {
        let a = [2.0, 1.0, 1.0, 1.0, 3.0, 2.0, 1.0, 0.0, 0.0];
        assert_relative_eq!(det(&a, 3), -1.0, max_relative = 1e-14);
        let x = solve(&a, &[4.0, 5.0, 6.0], 3).unwrap();
        assert_relative_eq!(x[0], 6.0, max_relative = 1e-13);
        assert_relative_eq!(x[1], 15.0, max_relative = 1e-13);
        assert_relative_eq!(x[2], -23.0, max_relative = 1e-13);
    }

    #[test]
    fn singular_matrix_has_zero_determinant() {
        let a = [1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 1.0];
        assert_eq!(det(&a, 3), 0.0);
        assert!(solve(&a, &[1.0, 1.0, 1.0], 3).is_none());
    }
}
