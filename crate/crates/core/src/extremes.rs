//! Block extremes of `|Δ|^q`, the ratio `R_N`, the `λ_N` sequence and exact
//! checkers for the deterministic inequalities that tie them to the
//! empirical moments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{abs_pow, same_order};
use crate::sampler::IncrementSeries;
use crate::special::{gamma, upper_incomplete_gamma};
use crate::stable::{tail_constant, StableParams};

/// Per-block largest (`u`) and second largest (`v`) of `|δ|^q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockExtremes {
    pub q: f64,
    pub tau: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl BlockExtremes {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

/// Top two of a block (multiset semantics: a repeated maximum gives `v = u`).
fn top_two(block: &[f64], q: f64) -> (f64, f64) {
    let mut u = f64::NEG_INFINITY;
    let mut v = f64::NEG_INFINITY;
    for &x in block {
        let y = abs_pow(x, q);
        if y >= u {
            v = u;
            u = y;
        } else if y > v {
            v = y;
        }
    }
    (u, v)
}

/// Block extremes of a unit-lag series at an order `q >= α`.
pub fn block_extremes(s: &IncrementSeries, q: f64, tau: usize) -> Result<BlockExtremes> {
    let alpha = s.params.alpha();
    if q < alpha && !same_order(q, alpha) {
        return Err(Error::InvalidOrder { q, alpha });
    }
    block_extremes_of_values(&s.values, q, tau)
}

/// [`block_extremes`] on a bare slice, with no order restriction.
pub fn block_extremes_of_values(values: &[f64], q: f64, tau: usize) -> Result<BlockExtremes> {
    if tau < 2 {
        return Err(Error::TauTooSmall(tau));
    }
    if values.is_empty() || values.len() % tau != 0 {
        return Err(Error::TauDoesNotDivide {
            tau,
            n: values.len(),
        });
    }
    let pairs: Vec<(f64, f64)> = values.par_chunks_exact(tau).map(|b| top_two(b, q)).collect();
    let (u, v) = pairs.into_iter().unzip();
    Ok(BlockExtremes { q, tau, u, v })
}

/// `R_N = Σ v / Σ u` over the first `upto` blocks.
pub fn ratio_rn(e: &BlockExtremes, upto: usize) -> Result<f64> {
    if upto == 0 || upto > e.len() {
        return Err(Error::InvalidArgument(format!(
            "upto = {upto} outside 1..={}",
            e.len()
        )));
    }
    let su: f64 = e.u[..upto].iter().sum();
    let sv: f64 = e.v[..upto].iter().sum();
    if su == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(sv / su)
}

/// The sequence `λ_N` of the small-ball estimate for `U_0`, with its
/// constants `δ` and `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaSequence {
    pub q: f64,
    pub alpha: f64,
    pub tau: usize,
    pub beta: f64,
    pub c: f64,
    pub delta: f64,
    pub k_const: f64,
}

impl LambdaSequence {
    pub fn new(params: &StableParams, q: f64, tau: usize) -> Result<Self> {
        let alpha = params.alpha();
        if q < alpha && !same_order(q, alpha) {
            return Err(Error::InvalidOrder { q, alpha });
        }
        if tau == 0 {
            return Err(Error::TauTooSmall(tau));
        }
        let c = tail_constant(params)?;
        let beta = if same_order(q, alpha) { 1.0 } else { alpha / q };
        let t = tau as f64;
        let (delta, k_const) = if beta < 1.0 {
            let delta = t * c * gamma(1.0 - beta) / 4.0;
            let k = beta
                * delta.powf(1.0 / beta)
                * ((1.0 - beta) / 2.0).powf((1.0 - beta) / beta);
            (delta, k)
        } else {
            let delta = t * c / 4.0;
            (delta, delta / 3.0)
        };
        Ok(Self {
            q,
            alpha,
            tau,
            beta,
            c,
            delta,
            k_const,
        })
    }

    pub fn lambda(&self, n: u64) -> f64 {
        let n = n as f64;
        let l = n.ln() + 1.0;
        if self.beta < 1.0 {
            let b = self.beta;
            self.k_const * n.powf(1.0 / b) * l.powf(-(1.0 - b) / b)
        } else {
            self.k_const * n * l
        }
    }

    /// `λ_N^{-2β}`.
    pub fn series_term(&self, n: u64) -> f64 {
        self.lambda(n).powf(-2.0 * self.beta)
    }

    /// `Σ_{N=1}^{m} λ_N^{-2β}`, accumulated in index order.
    pub fn partial_sum(&self, m: u64) -> f64 {
        (1..=m).map(|n| self.series_term(n)).sum()
    }

    /// `∫_m^∞ λ_x^{-2β} dx` in closed form.
    ///
    /// With `t = ln x + 1` the integrand becomes `k^{-2β} e^{1-t} t^p`, where
    /// `p = 2(1-β)` for `β < 1` and `p = -2` for `β = 1`.
    pub fn tail_integral(&self, m: u64) -> f64 {
        let p = if self.beta < 1.0 {
            2.0 * (1.0 - self.beta)
        } else {
            -2.0
        };
        let lower = (m as f64).ln() + 1.0;
        self.k_const.powf(-2.0 * self.beta) * std::f64::consts::E * upper_incomplete_gamma(p + 1.0, lower)
    }

    /// Partial sum completed by the trapezoid estimate of the remainder:
    /// `S_m + ∫_m^∞ f - f(m)/2`. Converges to the full series value much
    /// faster than `S_m` itself.
    pub fn completed_sum(&self, m: u64) -> f64 {
        self.partial_sum(m) + self.tail_integral(m) - 0.5 * self.series_term(m)
    }

    /// Upper bound on `E[exp(-ξ U_0)]` for small `ξ`.
    pub fn exp_bound(&self, xi: f64) -> f64 {
        if self.beta < 1.0 {
            (-self.delta * xi.powf(self.beta)).exp()
        } else {
            (self.delta * xi * xi.ln()).exp()
        }
    }
}

/// `h = 2τ` for `q <= 1`, `(q + 2) τ^q` otherwise.
pub fn lemma2_constant_h(tau: usize, q: f64) -> f64 {
    let t = tau as f64;
    if q <= 1.0 {
        2.0 * t
    } else {
        (q + 2.0) * t.powf(q)
    }
}

/// `e = min(1, 1/q)`.
pub fn lemma2_exponent_e(q: f64) -> f64 {
    (1.0 / q).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// Relative round-off allowance for the deterministic checkers.
pub const CHECK_TOL: f64 = 1e-9;

/// Evaluates both sides of
///
/// ```text
/// | Σ_n |Σ_i δ_{n,i}|^q / Σ_n Σ_i |δ_{n,i}|^q - 1 | <= h (Σ v / Σ u)^e
/// ```
///
/// for blocks of `tau` consecutive entries.
pub fn check_lemma2_inequality(deltas: &[f64], tau: usize, q: f64) -> Result<InequalityCheck> {
    if !(q > 0.0) {
        return Err(Error::InvalidArgument(format!("q = {q} must be > 0")));
    }
    if deltas.iter().all(|&d| d == 0.0) {
        return Err(Error::AllZeroInput);
    }
    let e = block_extremes_of_values(deltas, q, tau)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for block in deltas.chunks_exact(tau) {
        num += abs_pow(block.iter().sum(), q);
        den += block.iter().map(|&d| abs_pow(d, q)).sum::<f64>();
    }
    let lhs = (num / den - 1.0).abs();
    let su: f64 = e.u.iter().sum();
    let sv: f64 = e.v.iter().sum();
    let rhs = lemma2_constant_h(tau, q) * (sv / su).powf(lemma2_exponent_e(q));
    Ok(InequalityCheck {
        holds: lhs <= rhs + CHECK_TOL * (1.0 + rhs),
        lhs,
        rhs,
    })
}

/// The four-term chains
///
/// ```text
/// q <= 1: 1 - ξ^q        <= (1-ξ)_+^q <= (1+ξ)^q <= 1 + ξ^q
/// q >  1: 1 - ξ^q - qξ   <= (1-ξ)_+^q <= (1+ξ)^q <= 1 + q(1+ξ)^{q-1} ξ
/// ```
pub fn check_scalar_inequalities(xi: f64, q: f64) -> bool {
    let lower = (1.0 - xi).max(0.0).powf(q);
    let upper = (1.0 + xi).powf(q);
    let (a, d) = if q <= 1.0 {
        (1.0 - xi.powf(q), 1.0 + xi.powf(q))
    } else {
        (
            1.0 - xi.powf(q) - q * xi,
            1.0 + q * (1.0 + xi).powf(q - 1.0) * xi,
        )
    };
    let le = |x: f64, y: f64| x <= y + CHECK_TOL * x.abs().max(y.abs()).max(1.0);
    le(a, lower) && le(lower, upper) && le(upper, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpMomentCheck {
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// Monte Carlo `E[exp(-ξ U_0)]` from the block maxima against the bound
/// `exp(-δ ξ^β)` (β < 1) or `exp(δ ξ ln ξ)` (β = 1).
///
/// The bound is only claimed below an unspecified threshold in `ξ`; the
/// comparison is reported for whatever `ξ` is given.
pub fn exp_moment_bound(e: &BlockExtremes, xi: f64, lam: &LambdaSequence) -> Result<ExpMomentCheck> {
    if !(xi > 0.0) {
        return Err(Error::InvalidArgument(format!("xi = {xi} must be > 0")));
    }
    if e.u.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: e.u.len(),
        });
    }
    let vals: Vec<f64> = e.u.iter().map(|&u| (-xi * u).exp()).collect();
    let estimate = crate::stats::mean(&vals);
    let stderr = crate::stats::std_dev(&vals) / (vals.len() as f64).sqrt();
    let bound = lam.exp_bound(xi);
    Ok(ExpMomentCheck {
        estimate,
        stderr,
        bound,
        satisfied: estimate <= bound + 3.0 * stderr,
    })
}

/// Default share of top order statistics used by [`estimate_tail_exponent`].
pub const DEFAULT_HILL_FRACTION: f64 = 0.05;

/// Hill estimate of the upper-tail exponent from the `floor(fraction·n)`
/// largest observations.
pub fn estimate_tail_exponent(samples: &[f64], fraction: f64) -> Result<f64> {
    if samples.len() < 100 {
        return Err(Error::TooFewSamples {
            needed: 100,
            got: samples.len(),
        });
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "fraction = {fraction} must lie in (0, 1)"
        )));
    }
    if samples.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument("Hill samples must be positive and finite".into()));
    }
    let mut desc = samples.to_vec();
    desc.sort_by(|a, b| b.total_cmp(a));
    let k = ((fraction * desc.len() as f64).floor() as usize).max(1);
    let threshold = desc[k];
    let sum: f64 = desc[..k].iter().map(|x| (x / threshold).ln()).sum();
    if sum == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(k as f64 / sum)
}

/// Law of the block maximum in terms of the unit law: `F^τ`.
pub fn max_cdf(f: f64, tau: usize) -> f64 {
    f.powi(tau as i32)
}

/// Law of the block second maximum: `F^τ + τ(1 - F)F^{τ-1}`.
pub fn second_max_cdf(f: f64, tau: usize) -> f64 {
    let t = tau as i32;
    f.powi(t) + tau as f64 * (1.0 - f) * f.powi(t - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn block_extremes_examples() {
        let e = block_extremes_of_values(&[3.0, -1.0], 1.0, 2).unwrap();
        assert_eq!((e.u[0], e.v[0]), (3.0, 1.0));
        let e = block_extremes_of_values(&[2.0, 2.0, 1.0], 2.0, 3).unwrap();
        assert_eq!((e.u[0], e.v[0]), (4.0, 4.0));
        let e = block_extremes_of_values(&[1.0, -5.0, 2.0, 0.5, 0.5, 0.25], 1.0, 3).unwrap();
        assert_eq!(e.u, vec![5.0, 0.5]);
        assert_eq!(e.v, vec![2.0, 0.5]);
        assert_eq!(block_extremes_of_values(&[1.0, 2.0], 1.0, 1), Err(Error::TauTooSmall(1)));
        assert!(matches!(
            block_extremes_of_values(&[1.0, 2.0, 3.0], 1.0, 2),
            Err(Error::TauDoesNotDivide { .. })
        ));
        let s = IncrementSeries::from_values(StableParams::symmetric(1.5).unwrap(), 1, 0, vec![1.0, 2.0]).unwrap();
        assert!(matches!(block_extremes(&s, 1.0, 2), Err(Error::InvalidOrder { .. })));
    }

    #[test]
    fn ratio_examples() {
        let e = block_extremes_of_values(&[3.0, -1.0], 1.0, 2).unwrap();
        assert_relative_eq!(ratio_rn(&e, 1).unwrap(), 1.0 / 3.0);
        let tied = block_extremes_of_values(&[2.0, -2.0, 1.0, 1.0], 1.0, 2).unwrap();
        assert_eq!(ratio_rn(&tied, 2).unwrap(), 1.0);
        let flat = BlockExtremes {
            q: 1.0,
            tau: 2,
            u: vec![1.0, 2.0],
            v: vec![0.0, 0.0],
        };
        assert_eq!(ratio_rn(&flat, 2).unwrap(), 0.0);
        let zero = block_extremes_of_values(&[0.0, 0.0], 1.0, 2).unwrap();
        assert_eq!(ratio_rn(&zero, 1), Err(Error::ZeroDenominator));
    }

    #[test]
    fn lambda_hand_values() {
        let cauchy = StableParams::symmetric(1.0).unwrap();
        let l = LambdaSequence::new(&cauchy, 1.0, 2).unwrap();
        assert_eq!(l.beta, 1.0);
        assert_relative_eq!(l.c, 2.0 / PI, max_relative = 1e-14);
        assert_relative_eq!(l.delta, 1.0 / PI, max_relative = 1e-14);
        assert_relative_eq!(l.k_const, 1.0 / (3.0 * PI), max_relative = 1e-14);
        assert_relative_eq!(l.lambda(1), 1.0 / (3.0 * PI), max_relative = 1e-14);
        assert_relative_eq!(l.exp_bound(0.1), (0.1 * 0.1f64.ln() / PI).exp(), max_relative = 1e-14);

        let half = LambdaSequence::new(&StableParams::symmetric(1.5).unwrap(), 3.0, 2).unwrap();
        assert_eq!(half.beta, 0.5);
        assert_relative_eq!(half.lambda(1), half.k_const, max_relative = 1e-14);
        let n = 50u64;
        assert_relative_eq!(
            half.lambda(n),
            half.k_const * (n * n) as f64 / ((n as f64).ln() + 1.0),
            max_relative = 1e-13
        );
    }

    #[test]
    fn lambda_over_n_increases() {
        for (alpha, q) in [(1.0, 1.0), (1.5, 3.0), (0.7, 1.0), (1.2, 1.2)] {
            let l = LambdaSequence::new(&StableParams::symmetric(alpha).unwrap(), q, 2).unwrap();
            let mut prev = 0.0;
            for n in 1..2000u64 {
                let r = l.lambda(n) / n as f64;
                assert!(r > prev, "alpha={alpha} q={q} n={n}");
                prev = r;
            }
        }
    }

    #[test]
    fn tail_integral_matches_quadrature() {
        let l = LambdaSequence::new(&StableParams::symmetric(1.5).unwrap(), 3.0, 2).unwrap();
        // midpoint rule in log-space, independent of the incomplete gamma
        let m = 100.0f64;
        let (a, b) = (m.ln(), 60.0f64);
        let steps = 400_000;
        let h = (b - a) / steps as f64;
        let quad: f64 = (0..steps)
            .map(|i| {
                let y = a + (i as f64 + 0.5) * h;
                let x = y.exp();
                let lam = l.k_const * x * x / (y + 1.0);
                lam.powf(-1.0) * x * h
            })
            .sum();
        assert_relative_eq!(l.tail_integral(100), quad, max_relative = 1e-8);
    }

    #[test]
    fn sandwich_constants() {
        assert_eq!(lemma2_constant_h(2, 1.0), 4.0);
        assert_eq!(lemma2_constant_h(2, 2.0), 16.0);
        assert_eq!(lemma2_exponent_e(2.0), 0.5);
        assert_eq!(lemma2_exponent_e(0.5), 1.0);
    }

    #[test]
    fn sandwich_small_cases() {
        let c = check_lemma2_inequality(&[1.0, -1.0], 2, 1.0).unwrap();
        assert!(c.holds);
        assert_eq!(c.lhs, 1.0);
        assert_eq!(c.rhs, 4.0);
        assert_eq!(check_lemma2_inequality(&[0.0, 0.0], 2, 1.0), Err(Error::AllZeroInput));
        // a single dominant entry per block leaves lhs tiny
        let c = check_lemma2_inequality(&[100.0, 1e-3, -50.0, 1e-4], 2, 3.0).unwrap();
        assert!(c.holds && c.lhs < 1e-3);
    }

    #[test]
    fn scalar_inequalities_examples() {
        assert!(check_scalar_inequalities(1.0, 0.5));
        for q in [0.3, 1.0, 2.0, 4.0] {
            assert!(check_scalar_inequalities(1e-12, q));
        }
    }

    #[test]
    fn hill_on_exact_pareto() {
        let beta = 0.8;
        let n = 100_000;
        // deterministic quantile grid of a Pareto(β) law
        let xs: Vec<f64> = (0..n)
            .map(|i| (1.0 - (i as f64 + 0.5) / n as f64).powf(-1.0 / beta))
            .collect();
        let est = estimate_tail_exponent(&xs, 0.05).unwrap();
        assert!((est - beta).abs() < 0.02, "{est}");
        assert_eq!(
            estimate_tail_exponent(&xs[..50], 0.05),
            Err(Error::TooFewSamples { needed: 100, got: 50 })
        );
    }

    #[test]
    fn order_statistic_cdfs() {
        assert_eq!(max_cdf(0.5, 2), 0.25);
        assert_eq!(second_max_cdf(0.5, 2), 0.75);
        assert_eq!(second_max_cdf(1.0, 3), 1.0);
        assert_eq!(second_max_cdf(0.0, 3), 0.0);
    }
}
