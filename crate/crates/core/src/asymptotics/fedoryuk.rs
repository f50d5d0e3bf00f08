//! Fedoryuk-type WKB approximants for second-order operators: frozen roots
//! `ϱ_{1,2}` of `x² + c_1 x + c_0` plus the first correction
//! `ϱ^{(1)} = -ϱ'/(2ϱ + c_1)`.

use crate::error::{Error, Result};
use crate::model::{PremiumClass, RiskModel};
use crate::numerics::jet::Jet;
use crate::numerics::quadrature::{Quadrature, Upper};
use crate::operator::LinearODE;
use crate::scalar::Real;

/// Root jets `(ϱ_1, ϱ_2)` with `ϱ_1 ≤ ϱ_2` at `u`, to the given order.
pub fn root_jets<T: Real>(ode: &LinearODE<T>, u: T, order: usize) -> Result<(Jet<T>, Jet<T>)> {
    if ode.order() != 2 {
        return Err(Error::Unsupported("WKB roots are wired for second-order operators".into()));
    }
    let c = ode.coefficient_jets(u, order);
    let (c0, c1) = (c[0].clone(), c[1].clone());
    let disc = c1.clone() * c1.clone() - c0.scale(T::lit(4.0));
    if disc.value() < T::zero() {
        return Err(Error::Domain(format!("complex frozen roots at u = {u}")));
    }
    let sq = if disc.value() == T::zero() {
        Jet::constant(T::zero(), order)
    } else {
        disc.sqrt()
    };
    // big root first, the small one from the product c_0 to avoid cancellation
    let sign = if c1.value() >= T::zero() { T::one() } else { -T::one() };
    let big = (c1.clone() + sq.scale(sign)).scale(-T::lit(0.5));
    let small = if big.value() == T::zero() {
        (c1.scale(-T::one()) - big.clone()).truncate(order)
    } else {
        c0 / big.clone()
    };
    Ok(if big.value() <= small.value() { (big, small) } else { (small, big) })
}

/// `ϱ_i + ϱ_i^{(1)}` for the stable (`i = 1`) and unstable (`i = 2`) roots,
/// with their derivatives up to `order`.
pub fn corrected_log_derivatives<T: Real>(ode: &LinearODE<T>, u: T, order: usize) -> Result<(Jet<T>, Jet<T>)> {
    let c1 = ode.coefficient_jets(u, order + 1)[1].clone();
    let (r1, r2) = root_jets(ode, u, order + 1)?;
    let corr = |r: &Jet<T>| -> Jet<T> {
        let denom = r.scale(T::lit(2.0)) + c1.clone();
        let d = r.differentiate();
        if denom.value() == T::zero() {
            r.clone().truncate(order)
        } else {
            r.clone().truncate(order) - d / denom.truncate(order)
        }
    };
    Ok((corr(&r1), corr(&r2)))
}

/// `η' + η² + c_1 η + c_0` for `η = ϱ_i + ϱ_i^{(1)}`; small when the WKB
/// approximant nearly solves the equation.
pub fn wkb_residual<T: Real>(ode: &LinearODE<T>, u: T, stable: bool) -> Result<T> {
    let (e1, e2) = corrected_log_derivatives(ode, u, 1)?;
    let eta = if stable { e1 } else { e2 };
    let c = ode.coefficients(u);
    let (v, d) = (eta.value(), eta.derivative(1));
    Ok(d + v * v + c[1] * v + c[0])
}

/// The two WKB approximants `exp ∫_{lo}^u (ϱ_i + ϱ_i^{(1)})`.
#[derive(Clone)]
pub struct FedoryukSolutions<T: Real> {
    ode: LinearODE<T>,
    pub lo: T,
}

impl<T: Real> FedoryukSolutions<T> {
    pub fn eval(&self, u: T, stable: bool) -> Result<T> {
        let ode = self.ode.clone();
        let q = Quadrature::relative(T::lit(1e-10));
        let r = q.integrate(
            move |x| {
                corrected_log_derivatives(&ode, x, 0)
                    .map(|(a, b)| if stable { a.value() } else { b.value() })
                    .unwrap_or_else(|_| T::nan())
            },
            self.lo,
            Upper::Finite(u),
        )?;
        Ok(r.value.exp())
    }

    /// `|T t̃| / |t̃|` at `u`, which equals the WKB residual.
    pub fn relative_residual(&self, u: T, stable: bool) -> Result<T> {
        wkb_residual(&self.ode, u, stable).map(T::abs)
    }
}

/// Checks the premium class and returns the approximants.
pub fn fedoryuk_solutions<T: Real>(ode: &LinearODE<T>, model: &RiskModel<T>) -> Result<FedoryukSolutions<T>> {
    match model.premium.class() {
        Some(PremiumClass::Bounded { .. }) | Some(PremiumClass::Polynomial { .. }) => Ok(FedoryukSolutions {
            ode: ode.clone(),
            lo: ode.lo,
        }),
        None => Err(Error::Condition(format!(
            "premium `{}` is neither asymptotically constant nor polynomial",
            model.premium.family()
        ))),
    }
}
