//! Adaptive Gauss–Kronrod quadrature on finite and semi-infinite ranges.
//!
//! The integrator is globally adaptive: the panel with the largest
//! (normalized) error is bisected until every component meets
//! `max(abs_tol, rel_tol·|I|)`. Semi-infinite ranges use the map
//! `x = lo + t/(1-t)`. A vector variant integrates several integrands that
//! share the same expensive core in one pass.

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK21: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];
const WGK21: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];
const WG10: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

const XGK15: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_47,
    0.0,
];
const WGK15: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG7: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Upper integration limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Upper<T> {
    Finite(T),
    Infinity,
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
    pub evals: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct Quadrature<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_depth: usize,
    pub max_intervals: usize,
}

impl<T: Real> Default for Quadrature<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::lit(1e-10),
            rel_tol: T::lit(1e-10),
            max_depth: 200,
            max_intervals: 4000,
        }
    }
}

/// One 15-point Kronrod panel on `[a, b]`: `(integral, |K15 - G7|)`.
pub fn gk15<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let c = half * (a + b);
    let h = half * (b - a);
    let fc = f(c);
    let mut k = fc * T::lit(WGK15[7]);
    let mut g = fc * T::lit(WG7[3]);
    for j in 0..7 {
        let x = h * T::lit(XGK15[j]);
        let s = f(c - x) + f(c + x);
        k += s * T::lit(WGK15[j]);
        if j % 2 == 1 {
            g += s * T::lit(WG7[j / 2]);
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Panel<T> {
    a: T,
    b: T,
    depth: usize,
    est: Vec<T>,
    err: Vec<T>,
    abs_sum: Vec<T>,
}

fn gk21_vec<T: Real, F: FnMut(T, &mut [T]) -> Result<()>>(
    f: &mut F,
    a: T,
    b: T,
    dim: usize,
    buf_l: &mut [T],
    buf_r: &mut [T],
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let half = T::lit(0.5);
    let c = half * (a + b);
    let h = half * (b - a);
    let mut k = vec![T::zero(); dim];
    let mut g = vec![T::zero(); dim];
    let mut abs_sum = vec![T::zero(); dim];
    f(c, buf_l)?;
    for d in 0..dim {
        k[d] = buf_l[d] * T::lit(WGK21[10]);
        abs_sum[d] = buf_l[d].abs() * T::lit(WGK21[10]);
    }
    for j in 0..10 {
        let x = h * T::lit(XGK21[j]);
        f(c - x, buf_l)?;
        f(c + x, buf_r)?;
        let w = T::lit(WGK21[j]);
        for d in 0..dim {
            let s = buf_l[d] + buf_r[d];
            k[d] += s * w;
            abs_sum[d] += (buf_l[d].abs() + buf_r[d].abs()) * w;
            if j % 2 == 1 {
                g[d] += s * T::lit(WG10[j / 2]);
            }
        }
    }
    let ah = h.abs();
    let est: Vec<T> = k.iter().map(|&v| v * h).collect();
    let err: Vec<T> = k.iter().zip(&g).map(|(&kv, &gv)| ((kv - gv) * h).abs()).collect();
    let abs_sum: Vec<T> = abs_sum.into_iter().map(|v| v * ah).collect();
    Ok((est, err, abs_sum))
}

impl<T: Real> Quadrature<T> {
    pub fn with_tol(tol: T) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: tol,
            ..Self::default()
        }
    }

    /// Relative-error oriented integrator with a negligible absolute floor.
    pub fn relative(tol: T) -> Self {
        Self {
            abs_tol: T::min_positive_value().sqrt(),
            rel_tol: tol,
            ..Self::default()
        }
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F, lo: T, hi: Upper<T>) -> Result<QuadResult<T>> {
        let res = self.integrate_vec(
            |x, out: &mut [T]| {
                out[0] = f(x);
                Ok(())
            },
            1,
            lo,
            hi,
        )?;
        Ok(res[0])
    }

    /// Integrates `dim` components at once; `f(x, out)` fills `out`.
    pub fn integrate_vec<F: FnMut(T, &mut [T]) -> Result<()>>(
        &self,
        mut f: F,
        dim: usize,
        lo: T,
        hi: Upper<T>,
    ) -> Result<Vec<QuadResult<T>>> {
        let mut buf = vec![T::zero(); dim];
        let evals = std::cell::Cell::new(0usize);
        // map to a finite parameter interval
        let (a0, b0, mapped) = match hi {
            Upper::Finite(b) => (lo, b, false),
            Upper::Infinity => (T::zero(), T::one(), true),
        };
        if !mapped && a0 == b0 {
            return Ok(vec![
                QuadResult {
                    value: T::zero(),
                    error: T::zero(),
                    evals: 0,
                };
                dim
            ]);
        }
        let mut g = |t: T, out: &mut [T]| -> Result<()> {
            evals.set(evals.get() + 1);
            let (x, jac) = if mapped {
                let om = T::one() - t;
                (lo + t / om, T::one() / (om * om))
            } else {
                (t, T::one())
            };
            if mapped && !x.is_finite() {
                out.iter_mut().for_each(|o| *o = T::zero());
                return Ok(());
            }
            f(x, &mut buf)?;
            for d in 0..dim {
                let v = buf[d] * jac;
                if !v.is_finite() {
                    if mapped && buf[d] == T::zero() {
                        out[d] = T::zero();
                        continue;
                    }
                    return Err(Error::Domain(format!("integrand not finite at x = {x}")));
                }
                out[d] = v;
            }
            Ok(())
        };

        let mut bl = vec![T::zero(); dim];
        let mut br = vec![T::zero(); dim];
        let (est, err, abs_sum) = gk21_vec(&mut g, a0, b0, dim, &mut bl, &mut br)?;
        let mut panels = vec![Panel {
            a: a0,
            b: b0,
            depth: 0,
            est,
            err,
            abs_sum,
        }];

        loop {
            let mut total = vec![T::zero(); dim];
            let mut total_err = vec![T::zero(); dim];
            let mut total_abs = vec![T::zero(); dim];
            for p in &panels {
                for d in 0..dim {
                    total[d] += p.est[d];
                    total_err[d] += p.err[d];
                    total_abs[d] += p.abs_sum[d];
                }
            }
            let targets: Vec<T> = (0..dim)
                .map(|d| {
                    let floor = T::lit(50.0) * T::epsilon() * total_abs[d];
                    self.abs_tol.max(self.rel_tol * total[d].abs()).max(floor)
                })
                .collect();
            let converged = (0..dim).all(|d| total_err[d] <= targets[d]);
            let score = |p: &Panel<T>| {
                (0..dim)
                    .map(|d| p.err[d] / targets[d].max(T::min_positive_value()))
                    .fold(T::zero(), T::max)
            };
            let worst = panels
                .iter()
                .enumerate()
                .filter(|(_, p)| p.depth < self.max_depth)
                .max_by(|(_, x), (_, y)| score(x).partial_cmp(&score(y)).unwrap_or(std::cmp::Ordering::Equal))
                .map(|(i, _)| i);
            let exhausted = worst.is_none() || panels.len() >= self.max_intervals;
            if converged || exhausted {
                if !converged {
                    let d = (0..dim)
                        .max_by(|&x, &y| {
                            (total_err[x] / targets[x])
                                .partial_cmp(&(total_err[y] / targets[y]))
                                .unwrap_or(std::cmp::Ordering::Equal)
                        })
                        .unwrap_or(0);
                    return Err(Error::NonConvergence {
                        estimate: total[d].to_f64_lossy(),
                        error: total_err[d].to_f64_lossy(),
                    });
                }
                return Ok((0..dim)
                    .map(|d| QuadResult {
                        value: crate::scalar::compensated_sum(panels.iter().map(|p| p.est[d])),
                        error: total_err[d],
                        evals: evals.get(),
                    })
                    .collect());
            }
            let i = worst.unwrap_or(0);
            let p = panels.swap_remove(i);
            let mid = T::lit(0.5) * (p.a + p.b);
            for (a, b) in [(p.a, mid), (mid, p.b)] {
                let (est, err, abs_sum) = gk21_vec(&mut g, a, b, dim, &mut bl, &mut br)?;
                panels.push(Panel {
                    a,
                    b,
                    depth: p.depth + 1,
                    est,
                    err,
                    abs_sum,
                });
            }
        }
    }
}

/// Convenience wrapper with the default tolerance `1e-10`.
pub fn integrate<T: Real, F: FnMut(T) -> T>(f: F, lo: T, hi: Upper<T>, tol: T) -> Result<QuadResult<T>> {
    Quadrature::with_tol(tol).integrate(f, lo, hi)
}
