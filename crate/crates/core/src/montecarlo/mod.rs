//! Path simulation of the surplus process, used as an independent oracle.
//!
//! Between claims the surplus follows `du/dt = p(u)`. A path survives once it
//! reaches the barrier and is censored after `max_claims` claims.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage, StageExt};
use crate::gerber_shiu::closed_form::TichyRuin;
use crate::model::{validate_drift, PremiumFunction, RationalLaw, RiskModel};
use crate::numerics::ode::Dopri5;
use crate::scalar::Real;

#[cfg(test)]
mod tests;

/// Paths handled per parallel batch; bounds the memory of the ordered collect.
const BATCH: usize = 1 << 15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub paths: usize,
    /// Survival level. `None` means `10 · u_max`.
    pub barrier: Option<f64>,
    pub max_claims: usize,
    pub seed: u64,
    /// Relative tolerance of the Runge–Kutta flow.
    pub ode_step: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            paths: 100_000,
            barrier: None,
            max_claims: 1_000_000,
            seed: 0x5eed,
            ode_step: 1e-10,
        }
    }
}

impl SimConfig {
    pub fn with_paths(mut self, paths: usize) -> Self {
        self.paths = paths;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_barrier(mut self, barrier: f64) -> Self {
        self.barrier = Some(barrier);
        self
    }

    fn barrier_for<T: Real>(&self, model: &RiskModel<T>) -> f64 {
        self.barrier.unwrap_or(10.0 * model.u_max.to_f64_lossy())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub paths: usize,
    pub n_ruined: usize,
    pub n_censored: usize,
    pub barrier: f64,
    /// `ψ(barrier)` from the quadrature formula when it applies: the ruin
    /// probability a surviving path still carries.
    pub barrier_bound: Option<f64>,
    /// Set when censored paths make the bias direction unknown.
    pub biased: bool,
}

impl SimEstimate {
    pub fn censored_fraction(&self) -> f64 {
        self.n_censored as f64 / self.paths as f64
    }

    /// `(reference - mean) / se`; infinite when the estimate has no spread
    /// but misses the reference.
    pub fn z_score(&self, reference: f64) -> f64 {
        let d = reference - self.mean;
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    }
}

/// How a simulated path ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PathOutcome {
    Ruin { time: f64, before: f64, deficit: f64 },
    Survived,
    Censored,
}

/// Solves `du/dt = p(u)` from `u0` over `t`. Returns `+∞` after a blow-up.
pub fn flow<T: Real>(p: &PremiumFunction<T>, u0: T, t: T, rtol: T) -> Result<T> {
    flow_capped(p, u0, t, T::infinity(), rtol)
}

/// As [`flow`], but the result is `min(u(t), cap)`; the Runge–Kutta route
/// stops integrating once the cap is reached.
pub fn flow_capped<T: Real>(p: &PremiumFunction<T>, u0: T, t: T, cap: T, rtol: T) -> Result<T> {
    if !(u0 >= T::zero()) || !(t >= T::zero()) {
        return Err(Error::Domain(format!("flow needs u0 ≥ 0 and t ≥ 0, got u0 = {u0}, t = {t}")));
    }
    if u0 >= cap {
        return Ok(cap);
    }
    let one = T::one();
    let u = match p {
        PremiumFunction::Constant { c } => u0 + *c * t,
        PremiumFunction::Linear { c, eps } if *eps == T::zero() => u0 + *c * t,
        PremiumFunction::Linear { c, eps } => {
            let k = *c / *eps;
            // u0 e^{εt} + (c/ε)(e^{εt} - 1), without cancellation for small εt
            u0 * (*eps * t).exp() + k * (*eps * t).exp_m1()
        }
        PremiumFunction::Quadratic { c } if *c == T::zero() => {
            if u0 * t >= one {
                T::infinity()
            } else {
                u0 / (one - u0 * t)
            }
        }
        PremiumFunction::Quadratic { c } => {
            let r = c.sqrt();
            let arg = r * t + (u0 / r).atan();
            if arg >= T::FRAC_PI_2() {
                T::infinity()
            } else {
                r * arg.tan()
            }
        }
        PremiumFunction::ExpDecay { c } => {
            // ln((e^{u0} + 1) e^{ct} - 1), written to stay finite for large u0
            let ct = *c * t;
            u0 + ct + ((one + (-u0).exp()) - (-u0 - ct).exp()).ln()
        }
        _ => return flow_rk(p, u0, t, cap, rtol),
    };
    Ok(if u.is_finite() { u.min(cap) } else { cap })
}

fn flow_rk<T: Real>(p: &PremiumFunction<T>, u0: T, t: T, cap: T, rtol: T) -> Result<T> {
    if t == T::zero() {
        return Ok(u0);
    }
    let ode = Dopri5::with_tol(rtol, rtol * T::lit(1e-3));
    let out = ode.solve_at(
        |_, y, dy| {
            // freeze at the cap: the path is absorbed there
            dy[0] = if y[0] >= cap { T::zero() } else { p.eval(y[0]) };
            if dy[0].is_finite() {
                Ok(())
            } else {
                Err(Error::Ode(format!("premium is not finite at u = {}", y[0])))
            }
        },
        T::zero(),
        &[u0],
        &[t],
    )?;
    Ok(out[0][0].min(cap))
}

/// Sampler for a law with Laplace transform `a_0 / L(s)`: a sum of
/// independent exponential stages with rates `-r_k` for the roots `r_k` of `L`.
#[derive(Clone, Debug)]
struct StageSampler {
    rates: Vec<f64>,
}

impl StageSampler {
    fn new<T: Real>(law: &RationalLaw<T>, what: &str) -> Result<Self> {
        let rates: Vec<f64> = law
            .stage_rates()
            .map_err(|e| Error::Unsupported(format!("{what}: {e}")))?
            .into_iter()
            .map(|r| r.to_f64_lossy())
            .collect();
        if rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::Unsupported(format!(
                "{what}: stage rates {rates:?} are not all positive, so the law has no exponential-stage form"
            )));
        }
        Ok(Self { rates })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        self.rates.iter().map(|r| rng.sample::<f64, _>(Exp1) / r).sum()
    }
}

struct Simulator<'a, T> {
    model: &'a RiskModel<T>,
    interclaims: StageSampler,
    claims: StageSampler,
    barrier: T,
    max_claims: usize,
    seed: u64,
    rtol: T,
}

impl<'a, T: Real> Simulator<'a, T> {
    fn new(model: &'a RiskModel<T>, cfg: &SimConfig) -> Result<Self> {
        model.validate()?;
        if cfg.paths == 0 {
            return Err(Error::Validation("paths must be at least 1".into()));
        }
        let barrier = cfg.barrier_for(model);
        if !(barrier > 0.0 && barrier.is_finite()) {
            return Err(Error::Validation(format!("barrier must be positive, got {barrier}")));
        }
        if !(cfg.ode_step > 0.0) {
            return Err(Error::Validation(format!("ode_step must be positive, got {}", cfg.ode_step)));
        }
        // the drift must stay positive from u_max up to the barrier, otherwise
        // reaching the barrier is not a terminal event
        let rate = model.claim_outflow_rate();
        let reach = model.clone().with_u_max(T::lit(barrier).max(model.u_max));
        if !validate_drift(&reach, rate * T::lit(1e-3), model.u_max)? {
            return Err(Error::Validation(format!(
                "net profit condition fails: p(u) does not exceed the claim outflow rate {rate} on [{}, {barrier}]",
                model.u_max
            )));
        }
        Ok(Self {
            model,
            interclaims: StageSampler::new(&model.interclaims.rational(), "interclaim law")?,
            claims: StageSampler::new(&model.claims.rational(), "claim law")?,
            barrier: T::lit(barrier),
            max_claims: cfg.max_claims,
            seed: cfg.seed,
            rtol: T::lit(cfg.ode_step),
        })
    }

    fn rng(&self, path: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(path as u64);
        rng
    }

    fn path(&self, u0: T, idx: usize) -> Result<PathOutcome> {
        let mut rng = self.rng(idx);
        let mut u = u0;
        let mut time = 0.0;
        for _ in 0..self.max_claims {
            if u >= self.barrier {
                return Ok(PathOutcome::Survived);
            }
            let tau = self.interclaims.sample(&mut rng);
            time += tau;
            u = flow_capped(&self.model.premium, u, T::lit(tau), self.barrier, self.rtol)?;
            if u >= self.barrier {
                return Ok(PathOutcome::Survived);
            }
            let x = T::lit(self.claims.sample(&mut rng));
            if u < x {
                return Ok(PathOutcome::Ruin {
                    time,
                    before: u.to_f64_lossy(),
                    deficit: (x - u).to_f64_lossy(),
                });
            }
            u -= x;
        }
        Ok(PathOutcome::Censored)
    }
}

/// Neumaier's compensated sum.
#[derive(Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Runs `cfg.paths` paths from `u0` and averages `score` over them. The
/// reduction follows path order, so the result does not depend on scheduling.
fn estimate<T, F>(model: &RiskModel<T>, u0: T, cfg: &SimConfig, score: F) -> Result<SimEstimate>
where
    T: Real,
    F: Fn(&PathOutcome) -> f64 + Sync,
{
    let sim = Simulator::new(model, cfg)?;
    if !(u0 >= T::zero()) {
        return Err(Error::Domain(format!("initial surplus must be ≥ 0, got {u0}")));
    }
    let (mut s1, mut s2) = (CompensatedSum::default(), CompensatedSum::default());
    let (mut ruined, mut censored) = (0usize, 0usize);
    let mut start = 0;
    while start < cfg.paths {
        let end = (start + BATCH).min(cfg.paths);
        let batch: Vec<PathOutcome> = (start..end)
            .into_par_iter()
            .map(|i| sim.path(u0, i))
            .collect::<Result<_>>()?;
        for o in &batch {
            match o {
                PathOutcome::Ruin { .. } => ruined += 1,
                PathOutcome::Censored => censored += 1,
                PathOutcome::Survived => {}
            }
            let v = score(o);
            s1.add(v);
            s2.add(v * v);
        }
        start = end;
    }
    let n = cfg.paths as f64;
    let mean = s1.value() / n;
    let var = if cfg.paths > 1 {
        ((s2.value() - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    let barrier = cfg.barrier_for(model);
    Ok(SimEstimate {
        mean,
        std_error: (var / n).sqrt(),
        paths: cfg.paths,
        n_ruined: ruined,
        n_censored: censored,
        barrier,
        barrier_bound: barrier_ruin(model, barrier),
        biased: censored > 0,
    })
}

/// Ruin probability from the barrier, when the quadrature formula applies.
fn barrier_ruin<T: Real>(model: &RiskModel<T>, barrier: f64) -> Option<f64> {
    let (lambda, mu) = model.exp_rates()?;
    let t = TichyRuin::new(&model.premium, lambda, mu).ok()?;
    t.eval(T::lit(barrier)).ok().map(|v| v.to_f64_lossy()).filter(|v| v.is_finite())
}

/// Simulates one path with the estimator's stream for `path`.
pub fn simulate_path<T: Real>(model: &RiskModel<T>, u0: T, cfg: &SimConfig, path: usize) -> Result<PathOutcome> {
    Simulator::new(model, cfg).and_then(|s| s.path(u0, path)).stage(Stage::MonteCarlo)
}

/// Estimates `ψ(u0)` from the fraction of ruined paths.
pub fn estimate_ruin<T: Real>(model: &RiskModel<T>, u0: T, cfg: &SimConfig) -> Result<SimEstimate> {
    estimate(model, u0, cfg, |o| f64::from(matches!(o, PathOutcome::Ruin { .. }))).stage(Stage::MonteCarlo)
}

/// Estimates `Φ(u0) = E[e^{-δT} w(U(T-), |U(T)|); T < ∞]`.
pub fn estimate_penalty<T: Real>(model: &RiskModel<T>, u0: T, cfg: &SimConfig) -> Result<SimEstimate> {
    let delta = model.delta.to_f64_lossy();
    estimate(model, u0, cfg, |o| match *o {
        PathOutcome::Ruin { time, before, deficit } => {
            let w = model.penalty.eval(T::lit(before), T::lit(deficit)).to_f64_lossy();
            if delta == 0.0 {
                w
            } else {
                (-delta * time).exp() * w
            }
        }
        _ => 0.0,
    })
    .stage(Stage::MonteCarlo)
}
