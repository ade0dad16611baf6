//! Strictly-stable law parameters, the characteristic exponent, tail
//! asymptotics and the scaling functions of self-similar Lévy processes.
//!
//! The parameterization is the one where `E[exp(ik X_t)] = exp(-t ψ(k))` with
//!
//! ```text
//! ψ(k) = σ^α |k|^α [1 - iγ tan(πα/2) sgn(k)]   α ≠ 1
//! ψ(k) = σ|k| - iγk                            α = 1
//! ```
//!
//! For `α = 1` the skewness slot acts as a drift, so `γ` is unconstrained.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::gamma;

/// Validated `(α, σ, γ)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    alpha: f64,
    sigma: f64,
    gamma: f64,
}

impl StableParams {
    pub fn new(alpha: f64, sigma: f64, gamma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::SigmaNonPositive(sigma));
        }
        if !gamma.is_finite() || (alpha != 1.0 && gamma.abs() > 1.0) {
            return Err(Error::GammaOutOfRange { alpha, gamma });
        }
        Ok(Self { alpha, sigma, gamma })
    }

    /// Symmetric law with unit scale.
    pub fn symmetric(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Self-similarity exponent `H = 1/α`.
    pub fn hurst(&self) -> f64 {
        1.0 / self.alpha
    }

    pub fn is_gaussian(&self) -> bool {
        self.alpha == 2.0
    }

    fn require_fat_tail(&self) -> Result<()> {
        if self.is_gaussian() {
            Err(Error::AlphaNotFatTailed)
        } else {
            Ok(())
        }
    }
}

pub fn validate_params(alpha: f64, sigma: f64, gamma: f64) -> Result<StableParams> {
    StableParams::new(alpha, sigma, gamma)
}

/// `sgn(0) = +1`.
fn sign(k: f64) -> f64 {
    if k >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Characteristic exponent `ψ(k)` of the law of `X_1`.
pub fn char_exponent(k: f64, p: &StableParams) -> Complex64 {
    if p.alpha == 1.0 {
        Complex64::new(p.sigma * k.abs(), -p.gamma * k)
    } else {
        let modulus = (p.sigma * k.abs()).powf(p.alpha);
        let skew = if p.is_gaussian() {
            0.0
        } else {
            p.gamma * (PI * p.alpha / 2.0).tan() * sign(k)
        };
        Complex64::new(modulus, -modulus * skew)
    }
}

/// Tail constant `c = (2/π) Γ(α) sin(πα/2) σ^α` of `P[|X_1| > x] ~ c x^-α`.
pub fn tail_constant(p: &StableParams) -> Result<f64> {
    p.require_fat_tail()?;
    Ok(2.0 / PI * gamma(p.alpha) * (PI * p.alpha / 2.0).sin() * p.sigma.powf(p.alpha))
}

/// Power law `prefactor · x^-exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailAsymptote {
    pub exponent: f64,
    pub prefactor: f64,
}

impl TailAsymptote {
    pub fn eval(&self, x: f64) -> f64 {
        self.prefactor * x.powf(-self.exponent)
    }
}

/// Asymptote of `P[|X_t| > x]`.
pub fn abs_tail_asymptote(p: &StableParams, t: f64) -> Result<TailAsymptote> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    Ok(TailAsymptote {
        exponent: p.alpha,
        prefactor: t * tail_constant(p)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Right,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OneSidedTail {
    PowerLaw(TailAsymptote),
    /// Totally skewed away from this side: the tail is identically zero
    /// (α < 1) or exponentially thin (α > 1).
    Degenerate,
}

/// Asymptote of `P[X_t > x]` (right) or `P[X_t < -x]` (left).
///
/// For `α = 1` the law is a Cauchy law shifted by `tγ`; the shift does not
/// affect the leading term, so both sides decay as `tσ/(πx)`.
pub fn one_sided_tail_asymptote(p: &StableParams, t: f64, side: Side) -> Result<OneSidedTail> {
    p.require_fat_tail()?;
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    if p.alpha == 1.0 {
        return Ok(OneSidedTail::PowerLaw(TailAsymptote {
            exponent: 1.0,
            prefactor: t * p.sigma / PI,
        }));
    }
    let weight = match side {
        Side::Right => 1.0 + p.gamma,
        Side::Left => 1.0 - p.gamma,
    };
    if weight == 0.0 {
        return Ok(OneSidedTail::Degenerate);
    }
    let prefactor =
        t / PI * weight * gamma(p.alpha) * (PI * p.alpha / 2.0).sin() * p.sigma.powf(p.alpha);
    Ok(OneSidedTail::PowerLaw(TailAsymptote {
        exponent: p.alpha,
        prefactor,
    }))
}

/// Exact right tail `P[X_t > x] = 1/2 - arctan((x - tγ)/(tσ))/π` for `α = 1`.
pub fn cauchy_tail_exact(p: &StableParams, t: f64, x: f64) -> Result<f64> {
    if p.alpha != 1.0 {
        return Err(Error::WrongAlpha(p.alpha));
    }
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    Ok(0.5 - ((x - t * p.gamma) / (t * p.sigma)).atan() / PI)
}

/// Piecewise-linear scaling function exhibited by empirical moments:
/// `q/α` below the stability index, `1` from it on. The Gaussian case has
/// every moment and no kink.
pub fn empirical_nu(q: f64, alpha: f64) -> f64 {
    if q < alpha || alpha == 2.0 {
        q / alpha
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MomentScaling {
    Exponent(f64),
    MomentDoesNotExist,
}

impl MomentScaling {
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            MomentScaling::Exponent(v) => Some(v),
            MomentScaling::MomentDoesNotExist => None,
        }
    }
}

/// Scaling function of the true moments, `ν(q) = q/α` where `E|X_1|^q < ∞`.
/// The Gaussian case (`α = 2`) has every moment.
pub fn theoretical_nu(q: f64, alpha: f64) -> MomentScaling {
    if q < alpha || alpha == 2.0 {
        MomentScaling::Exponent(q / alpha)
    } else {
        MomentScaling::MomentDoesNotExist
    }
}

/// Moment scaling law `E|X_t|^q = μ(q) t^ν(q)` restricted to `q < b`.
///
/// `μ(q)` has no closed form here; see [`crate::limits::mc_abs_moment`].
pub struct ScalingLaw<F: Fn(f64) -> f64> {
    pub upper_order: f64,
    pub nu: F,
}

impl ScalingLaw<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
    /// `b = α`, `ν(q) = q/α` (the Gaussian case keeps every order).
    pub fn self_similar(p: &StableParams) -> Self {
        let alpha = p.alpha;
        ScalingLaw {
            upper_order: if p.is_gaussian() { f64::INFINITY } else { alpha },
            nu: Box::new(move |q| q / alpha),
        }
    }
}

impl<F: Fn(f64) -> f64> ScalingLaw<F> {
    pub fn contains(&self, q: f64) -> bool {
        q >= 0.0 && q < self.upper_order
    }

    /// Checks `ν(0) = 0` and midpoint concavity on consecutive grid triples
    /// inside `[0, b)`.
    pub fn is_valid_on(&self, grid: &[f64], tol: f64) -> bool {
        if (self.nu)(0.0).abs() > tol {
            return false;
        }
        let pts: Vec<f64> = grid.iter().copied().filter(|&q| self.contains(q)).collect();
        pts.windows(3).all(|w| {
            let (a, b, c) = (w[0], w[1], w[2]);
            let lam = (c - b) / (c - a);
            let chord = lam * (self.nu)(a) + (1.0 - lam) * (self.nu)(c);
            (self.nu)(b) >= chord - tol
        })
    }
}
