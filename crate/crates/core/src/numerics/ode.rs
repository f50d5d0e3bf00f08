//! Dormand–Prince 5(4) with step-size control. Steps are clipped so that
//! every requested output point is hit exactly.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug)]
pub struct Dopri5<T> {
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
}

impl<T: Real> Default for Dopri5<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-11),
            atol: T::lit(1e-14),
            max_steps: 2_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl<T: Real> Dopri5<T> {
    pub fn with_tol(rtol: T, atol: T) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    /// Integrates `y' = f(u, y)` from `(u0, y0)` and returns the state at each
    /// of `targets`, which must be monotone in the direction of integration.
    /// `f` may signal failure (for example a blow-up) through its result.
    pub fn solve_at<F>(&self, mut f: F, u0: T, y0: &[T], targets: &[T]) -> Result<Vec<Vec<T>>>
    where
        F: FnMut(T, &[T], &mut [T]) -> Result<()>,
    {
        let n = y0.len();
        let mut out = Vec::with_capacity(targets.len());
        if targets.is_empty() {
            return Ok(out);
        }
        let last = targets[targets.len() - 1];
        let dir = if last >= u0 { T::one() } else { -T::one() };
        let mut u = u0;
        let mut y = y0.to_vec();
        let mut k: Vec<Vec<T>> = vec![vec![T::zero(); n]; 7];
        let mut tmp = vec![T::zero(); n];
        let mut y5 = vec![T::zero(); n];
        f(u, &y, &mut k[0])?;
        let span = (last - u0).abs().max(T::lit(1e-12));
        let mut h = span * T::lit(1e-4);
        let hmin = span * T::lit(1e-15);
        let mut steps = 0usize;
        for &target in targets {
            if (target - u) * dir < T::zero() {
                return Err(Error::Ode(format!("output point {target} is behind the integrator at {u}")));
            }
            while (target - u) * dir > T::zero() {
                steps += 1;
                if steps > self.max_steps {
                    return Err(Error::Ode(format!("step budget exhausted at u = {u}")));
                }
                let remaining = (target - u).abs();
                let mut hs = h.min(remaining);
                // avoid a tiny final sliver before the target
                if remaining - hs < T::lit(1e-3) * hs {
                    hs = remaining;
                }
                let step = dir * hs;
                for s in 1..7 {
                    for i in 0..n {
                        let mut acc = y[i];
                        for (j, kj) in k.iter().enumerate().take(s) {
                            acc += step * T::lit(A[s][j]) * kj[i];
                        }
                        tmp[i] = acc;
                    }
                    f(u + step * T::lit(C[s]), &tmp, &mut k[s])?;
                }
                let mut err = T::zero();
                for i in 0..n {
                    let mut hi5 = y[i];
                    let mut diff = T::zero();
                    for s in 0..7 {
                        hi5 += step * T::lit(B5[s]) * k[s][i];
                        diff += step * (T::lit(B5[s]) - T::lit(B4[s])) * k[s][i];
                    }
                    y5[i] = hi5;
                    let sc = self.atol + self.rtol * y[i].abs().max(hi5.abs());
                    let r = diff / sc;
                    err += r * r;
                }
                err = (err / T::from_usize_lossy(n)).sqrt();
                if !err.is_finite() {
                    h = hs * T::lit(0.1);
                    if h < hmin {
                        return Err(Error::Ode(format!("non-finite state near u = {u}")));
                    }
                    continue;
                }
                if err <= T::one() {
                    u = if hs == remaining { target } else { u + step };
                    y.copy_from_slice(&y5);
                    // FSAL: the last stage is f at the new point
                    let last_stage = k[6].clone();
                    k[0] = last_stage;
                    let fac = if err == T::zero() {
                        T::lit(5.0)
                    } else {
                        (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0))
                    };
                    h = hs * fac.max(T::lit(0.2));
                } else {
                    let fac = (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.1));
                    h = hs * fac;
                    if h < hmin {
                        return Err(Error::Ode(format!("step size underflow near u = {u}")));
                    }
                }
            }
            out.push(y.clone());
        }
        Ok(out)
    }
}
