//! Truncated Taylor series ("jets") for forward-mode differentiation of
//! coefficient functions to arbitrary order.
//!
//! A jet of length `n + 1` at a point `u` stores `f^(k)(u) / k!` for
//! `k = 0..=n`. Arithmetic propagates these exactly up to truncation, so
//! premium derivatives, operator coefficients and WKB root derivatives can
//! all be obtained from one evaluation of the defining formula.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Jet<T> {
    coeffs: Vec<T>,
}

impl<T: Real> Jet<T> {
    pub fn constant(value: T, order: usize) -> Self {
        let mut coeffs = vec![T::zero(); order + 1];
        coeffs[0] = value;
        Self { coeffs }
    }

    /// The identity function `x ↦ x` expanded at `u`.
    pub fn variable(u: T, order: usize) -> Self {
        let mut j = Self::constant(u, order);
        if order > 0 {
            j.coeffs[1] = T::one();
        }
        j
    }

    /// Builds a jet from derivative values `f, f', f'', ...`.
    pub fn from_derivatives(derivs: &[T]) -> Self {
        let mut fact = T::one();
        let coeffs = derivs
            .iter()
            .enumerate()
            .map(|(k, &d)| {
                if k > 0 {
                    fact *= T::from_usize_lossy(k);
                }
                d / fact
            })
            .collect();
        Self { coeffs }
    }

    pub fn from_coeffs(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "jet needs at least one coefficient");
        Self { coeffs }
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    #[inline]
    pub fn value(&self) -> T {
        self.coeffs[0]
    }

    #[inline]
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// `f^(k)(u)`, zero beyond the stored order.
    pub fn derivative(&self, k: usize) -> T {
        if k > self.order() {
            return T::zero();
        }
        let mut fact = T::one();
        for i in 2..=k {
            fact *= T::from_usize_lossy(i);
        }
        self.coeffs[k] * fact
    }

    /// All derivatives `f, f', ..., f^(order)`.
    pub fn derivatives(&self) -> Vec<T> {
        (0..=self.order()).map(|k| self.derivative(k)).collect()
    }

    /// Jet of `f'`, one order shorter.
    pub fn differentiate(&self) -> Self {
        if self.order() == 0 {
            return Self::constant(T::zero(), 0);
        }
        let coeffs = (1..self.coeffs.len())
            .map(|k| self.coeffs[k] * T::from_usize_lossy(k))
            .collect();
        Self { coeffs }
    }

    /// Jet of an antiderivative with value `at_point` at the expansion point.
    pub fn integrate(&self, at_point: T) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(at_point);
        for (k, &c) in self.coeffs.iter().enumerate() {
            coeffs.push(c / T::from_usize_lossy(k + 1));
        }
        Self { coeffs }
    }

    pub fn truncate(mut self, order: usize) -> Self {
        self.coeffs.truncate(order + 1);
        self
    }

    pub fn scale(&self, k: T) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&c| c * k).collect(),
        }
    }

    pub fn add_scalar(&self, k: T) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += k;
        out
    }

    pub fn recip(&self) -> Self {
        Self::constant(T::one(), self.order()) / self.clone()
    }

    pub fn exp(&self) -> Self {
        let n = self.coeffs.len();
        let a = &self.coeffs;
        let mut e = vec![T::zero(); n];
        e[0] = a[0].exp();
        for k in 1..n {
            let mut acc = T::zero();
            for j in 1..=k {
                acc += T::from_usize_lossy(j) * a[j] * e[k - j];
            }
            e[k] = acc / T::from_usize_lossy(k);
        }
        Self { coeffs: e }
    }

    pub fn ln(&self) -> Self {
        let n = self.coeffs.len();
        let a = &self.coeffs;
        let mut l = vec![T::zero(); n];
        l[0] = a[0].ln();
        for k in 1..n {
            let mut acc = T::zero();
            for j in 1..k {
                acc += T::from_usize_lossy(j) * l[j] * a[k - j];
            }
            l[k] = (a[k] - acc / T::from_usize_lossy(k)) / a[0];
        }
        Self { coeffs: l }
    }

    /// `f^r` for real `r`; requires `f(u) > 0` unless `r` is a small integer.
    pub fn powf(&self, r: T) -> Self {
        let n = self.coeffs.len();
        let a = &self.coeffs;
        let mut p = vec![T::zero(); n];
        p[0] = a[0].powf(r);
        for k in 1..n {
            let mut acc = T::zero();
            for j in 1..=k {
                let w = (r + T::one()) * T::from_usize_lossy(j) - T::from_usize_lossy(k);
                acc += w * a[j] * p[k - j];
            }
            p[k] = acc / (T::from_usize_lossy(k) * a[0]);
        }
        Self { coeffs: p }
    }

    pub fn sqrt(&self) -> Self {
        self.powf(T::lit(0.5))
    }

    pub fn powi(&self, k: u32) -> Self {
        let mut out = Self::constant(T::one(), self.order());
        for _ in 0..k {
            out = out * self.clone();
        }
        out
    }

    fn zip_len(a: &Self, b: &Self) -> usize {
        a.coeffs.len().min(b.coeffs.len())
    }
}

impl<T: Real> Add for Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: Self) -> Self {
        let n = Self::zip_len(&self, &rhs);
        Jet {
            coeffs: (0..n).map(|k| self.coeffs[k] + rhs.coeffs[k]).collect(),
        }
    }
}

impl<T: Real> Sub for Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: Self) -> Self {
        let n = Self::zip_len(&self, &rhs);
        Jet {
            coeffs: (0..n).map(|k| self.coeffs[k] - rhs.coeffs[k]).collect(),
        }
    }
}

impl<T: Real> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Self {
        Jet {
            coeffs: self.coeffs.into_iter().map(|c| -c).collect(),
        }
    }
}

impl<T: Real> Mul for Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: Self) -> Self {
        let n = Self::zip_len(&self, &rhs);
        let mut out = vec![T::zero(); n];
        for (k, slot) in out.iter_mut().enumerate() {
            for j in 0..=k {
                *slot += self.coeffs[j] * rhs.coeffs[k - j];
            }
        }
        Jet { coeffs: out }
    }
}

impl<T: Real> Div for Jet<T> {
    type Output = Jet<T>;
    fn div(self, rhs: Self) -> Self {
        let n = Self::zip_len(&self, &rhs);
        let b0 = rhs.coeffs[0];
        let mut q = vec![T::zero(); n];
        for k in 0..n {
            let mut acc = self.coeffs[k];
            for j in 1..=k {
                acc -= rhs.coeffs[j] * q[k - j];
            }
            q[k] = acc / b0;
        }
        Jet { coeffs: q }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exp_of_linear_matches_closed_form() {
        // d^k/du^k e^{2u} = 2^k e^{2u}
        let u = 0.3_f64;
        let j = Jet::variable(u, 5).scale(2.0).exp();
        for k in 0..=5 {
            assert_relative_eq!(j.derivative(k), 2f64.powi(k as i32) * (2.0 * u).exp(), max_relative = 1e-13);
        }
    }

    #[test]
    fn quotient_and_log_derivatives() {
        // f = ln(1 + u) / (2 + u) at u = 0.7, checked against hand derivatives
        let u = 0.7_f64;
        let x = Jet::variable(u, 3);
        let f = x.add_scalar(1.0).ln() / x.add_scalar(2.0);
        let a = 1.0 + u;
        let b = 2.0 + u;
        let f1 = 1.0 / (a * b) - a.ln() / (b * b);
        let f2 = -1.0 / (a * a * b) - 2.0 / (a * b * b) + 2.0 * a.ln() / (b * b * b);
        assert_relative_eq!(f.value(), a.ln() / b, max_relative = 1e-14);
        assert_relative_eq!(f.derivative(1), f1, max_relative = 1e-13);
        assert_relative_eq!(f.derivative(2), f2, max_relative = 1e-12);
    }

    #[test]
    fn powf_matches_repeated_product() {
        let x = Jet::variable(1.3_f64, 4).add_scalar(0.5);
        let a = x.powf(3.0);
        let b = x.powi(3);
        for k in 0..=4 {
            assert_relative_eq!(a.coeffs()[k], b.coeffs()[k], max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn integrate_then_differentiate_is_identity() {
        let f = Jet::variable(0.2_f64, 3).exp();
        let g = f.integrate(5.0).differentiate();
        assert_eq!(g.coeffs().len(), f.coeffs().len());
        for (a, b) in g.coeffs().iter().zip(f.coeffs()) {
            assert_relative_eq!(*a, *b, max_relative = 1e-15);
        }
    }
}
