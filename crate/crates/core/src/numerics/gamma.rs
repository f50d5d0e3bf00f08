//! Gamma function family: Lanczos `ln Γ`, reciprocal gamma, and the upper
//! incomplete gamma function (series / continued fraction, with a recurrence
//! extension to non-positive shape for analytic tail integrals).

use crate::error::{Error, Result};
use crate::scalar::Real;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_ITER: usize = 10_000;

/// Nonpositive integers are poles of Γ.
pub fn is_pole<T: Real>(x: T) -> bool {
    x <= T::zero() && x == x.round()
}

/// `ln |Γ(x)|`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // reflection
        let s = (T::PI() * x).sin().abs();
        return T::PI().ln() - s.ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += T::lit(c) / (x + T::from_usize_lossy(i));
    }
    let t = x + T::lit(LANCZOS_G) + half;
    half * (T::TAU()).ln() + (x + half) * t.ln() - t + acc.ln()
}

/// Sign of Γ(x) (zero at poles).
pub fn gamma_sign<T: Real>(x: T) -> T {
    if x > T::zero() {
        return T::one();
    }
    if is_pole(x) {
        return T::zero();
    }
    // Γ alternates sign between consecutive negative integers
    let k = (-x).floor().to_f64_lossy() as i64;
    if k % 2 == 0 {
        -T::one()
    } else {
        T::one()
    }
}

pub fn gamma<T: Real>(x: T) -> T {
    if is_pole(x) {
        return T::nan();
    }
    if x > T::zero() && x < T::lit(20.0) && x == x.round() {
        let mut f = T::one();
        let mut k = T::lit(2.0);
        while k < x {
            f *= k;
            k += T::one();
        }
        return f;
    }
    gamma_sign(x) * ln_gamma(x).exp()
}

/// `1/Γ(x)`, zero at the poles of Γ.
pub fn rgamma<T: Real>(x: T) -> T {
    if is_pole(x) {
        return T::zero();
    }
    gamma_sign(x) * (-ln_gamma(x)).exp()
}

/// Pochhammer symbol `(a)_k`.
pub fn pochhammer<T: Real>(a: T, k: usize) -> T {
    (0..k).fold(T::one(), |acc, j| acc * (a + T::from_usize_lossy(j)))
}

/// Series for the regularized lower gamma: returns `ln γ(η,x)`.
fn ln_lower_series<T: Real>(eta: T, x: T) -> T {
    let mut term = T::one() / eta;
    let mut sum = term;
    let mut ap = eta;
    for _ in 0..MAX_ITER {
        ap += T::one();
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * T::epsilon() {
            break;
        }
    }
    -x + eta * x.ln() + sum.ln()
}

/// Modified Lentz continued fraction: returns `ln Γ(η,x)`; valid for any real
/// `η` and converges quickly for `x > η + 1`.
fn ln_upper_cf<T: Real>(eta: T, x: T) -> T {
    let tiny = T::min_positive_value() / T::epsilon();
    let mut b = x + T::one() - eta;
    let mut c = T::one() / tiny;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let fi = T::from_usize_lossy(i);
        let an = -fi * (fi - eta);
        b += T::lit(2.0);
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = T::one() / d;
        let del = d * c;
        h *= del;
        if (del - T::one()).abs() < T::epsilon() {
            break;
        }
    }
    -x + eta * x.ln() + h.ln()
}

fn check_args<T: Real>(eta: T, x: T) -> Result<()> {
    if !(eta > T::zero()) {
        return Err(Error::Domain(format!("incomplete gamma needs η > 0, got {eta}")));
    }
    if !(x >= T::zero()) {
        return Err(Error::Domain(format!("incomplete gamma needs x ≥ 0, got {x}")));
    }
    Ok(())
}

/// `ln Γ(η, x)` for `η > 0`, `x ≥ 0`, safe against overflow of either factor.
pub fn ln_upper_incomplete_gamma<T: Real>(eta: T, x: T) -> Result<T> {
    check_args(eta, x)?;
    if x == T::zero() {
        return Ok(ln_gamma(eta));
    }
    if x < eta + T::one() {
        let lg = ln_gamma(eta);
        let p = (ln_lower_series(eta, x) - lg).exp();
        Ok(lg + (-p).ln_1p())
    } else {
        Ok(ln_upper_cf(eta, x))
    }
}

/// Upper incomplete gamma `Γ(η, x) = ∫_x^∞ t^{η-1} e^{-t} dt` for `η > 0`.
pub fn upper_incomplete_gamma<T: Real>(eta: T, x: T) -> Result<T> {
    ln_upper_incomplete_gamma(eta, x).map(T::exp)
}

/// Exponential integral `E_1(x)` for `x > 0`.
pub fn exp_integral_e1<T: Real>(x: T) -> T {
    if x > T::one() {
        return ln_upper_cf(T::zero(), x).exp();
    }
    let mut sum = T::zero();
    let mut term = T::one();
    for k in 1..MAX_ITER {
        let fk = T::from_usize_lossy(k);
        term *= -x / fk;
        let add = term / fk;
        sum += add;
        if add.abs() < T::epsilon() * sum.abs() {
            break;
        }
    }
    -T::lit(EULER_GAMMA) - x.ln() - sum
}

/// `Γ(a, x)` for any real `a` and `x > 0`, used for tails of the form
/// `u^p e^{-r u}` with arbitrary real power.
pub fn upper_incomplete_gamma_any<T: Real>(a: T, x: T) -> Result<T> {
    if !(x > T::zero()) {
        if a > T::zero() && x == T::zero() {
            return Ok(gamma(a));
        }
        return Err(Error::Domain(format!("Γ(a, x) with a ≤ 0 needs x > 0, got {x}")));
    }
    if a > T::zero() {
        return upper_incomplete_gamma(a, x);
    }
    if x > T::lit(1.5) && x > a + T::one() {
        return Ok(ln_upper_cf(a, x).exp());
    }
    // downward recurrence Γ(a, x) = (Γ(a+1, x) - x^a e^{-x}) / a from a
    // starting shape in (0, 1], or from E_1 when a is an integer
    let (mut shape, mut val) = if a == a.round() {
        (T::zero(), exp_integral_e1(x))
    } else {
        let k = (-a).floor() + T::one();
        let s = a + k;
        (s, upper_incomplete_gamma(s, x)?)
    };
    while shape > a + T::lit(0.5) {
        shape -= T::one();
        val = (val - x.powf(shape) * (-x).exp()) / shape;
    }
    Ok(val)
}
