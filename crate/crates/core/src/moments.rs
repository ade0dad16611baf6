//! Empirical moments over non-overlapping windows and their scaling in the
//! window size.
//!
//! For a unit-lag series `δ_0, ..., δ_{N-1}` and a window size `τ | N`,
//!
//! ```text
//! M(q, τ, N) = (τ/N) Σ_{m < N/τ} |δ_{mτ} + ... + δ_{mτ+τ-1}|^q
//! ```
//!
//! estimates `E|X_τ|^q` whenever that moment exists. The horizon scheme keeps
//! `N` a multiple of `lcm(1, ..., T)` so that every `τ <= T` divides it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::{block_sums, IncrementSeries};
use crate::stable::{tail_constant, StableParams};

/// Relative tolerance used when deciding whether `q` equals `α`.
pub const ORDER_EQ_TOL: f64 = 1e-12;

pub(crate) fn same_order(q: f64, alpha: f64) -> bool {
    (q - alpha).abs() <= ORDER_EQ_TOL * alpha.abs().max(1.0)
}

/// `|x|^q` with `0^0 = 1`.
#[inline]
pub fn abs_pow(x: f64, q: f64) -> f64 {
    if q == 0.0 {
        1.0
    } else {
        x.abs().powf(q)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `lcm(1, 2, ..., t)`.
pub fn lcm_first(t: u64) -> Result<u64> {
    if t == 0 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    (1..=t).try_fold(1u64, |acc, i| {
        (acc / gcd(acc, i)).checked_mul(i).ok_or(Error::Overflow(t))
    })
}

/// `N = multiplier · lcm(1..=horizon)` so every `τ <= horizon` divides `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HorizonScheme {
    pub horizon: usize,
    pub lcm: u64,
    pub multiplier: u64,
}

impl HorizonScheme {
    pub fn new(horizon: usize, multiplier: u64) -> Result<Self> {
        if multiplier == 0 {
            return Err(Error::InvalidArgument("multiplier must be >= 1".into()));
        }
        let lcm = lcm_first(horizon as u64)?;
        lcm.checked_mul(multiplier).ok_or(Error::Overflow(horizon as u64))?;
        Ok(Self {
            horizon,
            lcm,
            multiplier,
        })
    }

    /// Largest admissible scheme for a series of `len` values.
    pub fn fitting(horizon: usize, len: usize) -> Result<Self> {
        let lcm = lcm_first(horizon as u64)?;
        let multiplier = len as u64 / lcm;
        if multiplier == 0 {
            return Err(Error::InvalidArgument(format!(
                "series of length {len} is shorter than lcm(1..={horizon}) = {lcm}"
            )));
        }
        Self::new(horizon, multiplier)
    }

    pub fn n(&self) -> usize {
        (self.lcm * self.multiplier) as usize
    }

    pub fn taus(&self) -> Vec<usize> {
        (1..=self.horizon).collect()
    }

    /// Same horizon, different multiplier.
    pub fn with_multiplier(&self, multiplier: u64) -> Result<Self> {
        Self::new(self.horizon, multiplier)
    }
}

fn mean_abs_pow(blocks: &[f64], q: f64) -> f64 {
    blocks.iter().map(|&b| abs_pow(b, q)).sum::<f64>() / blocks.len() as f64
}

/// Empirical moment of order `q` over windows of `tau` values.
pub fn empirical_moment(s: &IncrementSeries, q: f64, tau: usize) -> Result<f64> {
    moment_of_values(&s.values, q, tau)
}

/// [`empirical_moment`] on a bare slice.
pub fn moment_of_values(values: &[f64], q: f64, tau: usize) -> Result<f64> {
    check_order(q)?;
    let blocks = block_sums(values, tau)?;
    Ok(mean_abs_pow(&blocks, q))
}

fn check_order(q: f64) -> Result<()> {
    if !(q >= 0.0) || !q.is_finite() {
        return Err(Error::InvalidArgument(format!("moment order q = {q} must be >= 0")));
    }
    Ok(())
}

/// Empirical moments over a `(q, τ)` grid of one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentGrid {
    pub qs: Vec<f64>,
    pub taus: Vec<usize>,
    pub n: usize,
    /// `values[i][j]` is the moment at `qs[i]`, `taus[j]`.
    pub values: Vec<Vec<f64>>,
}

impl MomentGrid {
    /// Grid assembled from precomputed values (e.g. for testing regressions).
    pub fn from_values(qs: Vec<f64>, taus: Vec<usize>, n: usize, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != qs.len() || values.iter().any(|row| row.len() != taus.len()) {
            return Err(Error::InvalidArgument("grid shape does not match axes".into()));
        }
        Ok(Self { qs, taus, n, values })
    }

    pub fn q_index(&self, q: f64) -> Result<usize> {
        self.qs
            .iter()
            .position(|&x| (x - q).abs() <= 1e-12 * q.abs().max(1.0))
            .ok_or_else(|| Error::InvalidArgument(format!("q = {q} is not on the grid")))
    }

    pub fn tau_index(&self, tau: usize) -> Result<usize> {
        self.taus
            .iter()
            .position(|&t| t == tau)
            .ok_or_else(|| Error::InvalidArgument(format!("tau = {tau} is not on the grid")))
    }

    pub fn get(&self, q: f64, tau: usize) -> Result<f64> {
        Ok(self.values[self.q_index(q)?][self.tau_index(tau)?])
    }

    pub fn row(&self, q: f64) -> Result<&[f64]> {
        Ok(&self.values[self.q_index(q)?])
    }
}

/// Moments for every `q` in `qs` and every `τ` in `1..=horizon`.
///
/// Cells are computed independently (one task per window size), so the
/// result does not depend on scheduling.
pub fn moment_grid(s: &IncrementSeries, qs: &[f64], scheme: &HorizonScheme) -> Result<MomentGrid> {
    if s.len() != scheme.n() {
        return Err(Error::InvalidArgument(format!(
            "series length {} differs from scheme N = {}",
            s.len(),
            scheme.n()
        )));
    }
    for &q in qs {
        check_order(q)?;
    }
    let taus = scheme.taus();
    let columns: Vec<Vec<f64>> = taus
        .par_iter()
        .map(|&tau| {
            let blocks = block_sums(&s.values, tau)?;
            Ok(qs.iter().map(|&q| mean_abs_pow(&blocks, q)).collect())
        })
        .collect::<Result<_>>()?;
    let values = (0..qs.len())
        .map(|i| columns.iter().map(|col| col[i]).collect())
        .collect();
    Ok(MomentGrid {
        qs: qs.to_vec(),
        taus,
        n: s.len(),
        values,
    })
}

/// Default order grid: step 0.25 on `[0, 2α]`.
pub fn default_q_grid(alpha: f64) -> Vec<f64> {
    let steps = (2.0 * alpha / 0.25).floor() as usize;
    (0..=steps).map(|i| i as f64 * 0.25).collect()
}

/// Least-squares fit of `ln M` against `ln τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub q: f64,
    pub nu_hat: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r2: f64,
}

/// Unweighted OLS of `ln M(q, τ)` on `ln τ` over every window size of the
/// grid; the slope estimates the scaling exponent.
pub fn fit_scaling(grid: &MomentGrid, q: f64) -> Result<ScalingFit> {
    let row = grid.row(q)?;
    if grid.taus.len() < 2 {
        return Err(Error::DegenerateGrid(grid.taus.len()));
    }
    if let Some(j) = row.iter().position(|&m| !(m > 0.0)) {
        return Err(Error::NonPositiveMoment {
            q,
            tau: grid.taus[j],
        });
    }
    let xs: Vec<f64> = grid.taus.iter().map(|&t| (t as f64).ln()).collect();
    let ys: Vec<f64> = row.iter().map(|m| m.ln()).collect();
    let (slope, intercept, stderr, r2) = ols(&xs, &ys);
    Ok(ScalingFit {
        q,
        nu_hat: slope,
        intercept,
        stderr,
        r2,
    })
}

/// Simple linear regression; returns (slope, intercept, slope stderr, r²).
pub(crate) fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let stderr = if xs.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    (slope, intercept, stderr, r2)
}

/// Stochastically normalized moment `M(q, τ, N) / M(q, 1, N)`.
pub fn ratio_normalized(grid: &MomentGrid, q: f64, tau: usize) -> Result<f64> {
    let unit = grid.get(q, 1)?;
    if !(unit > 0.0) {
        return Err(Error::DivisionByZeroMoment(q));
    }
    Ok(grid.get(q, tau)? / unit)
}

/// [`ratio_normalized`] straight from a series, without building a grid.
pub fn ratio_of_values(values: &[f64], q: f64, tau: usize) -> Result<f64> {
    let unit = moment_of_values(values, q, 1)?;
    if !(unit > 0.0) {
        return Err(Error::DivisionByZeroMoment(q));
    }
    Ok(moment_of_values(values, q, tau)? / unit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormingKind {
    /// The bare empirical moment.
    Raw,
    /// `M - c τ ln(N/τ)`, for `q = α`.
    CenteredLog,
    /// `N^(1 - q/α) M`, for `q > α`.
    PowerNormed,
}

impl NormingKind {
    pub fn name(&self) -> &'static str {
        match self {
            NormingKind::Raw => "raw",
            NormingKind::CenteredLog => "centered_log",
            NormingKind::PowerNormed => "power_normed",
        }
    }
}

/// Deterministic normalization of an empirical moment at a non-existent
/// order, under which the moment has a non-degenerate limit law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormingSpec {
    pub kind: NormingKind,
    pub q: f64,
    pub alpha: f64,
    /// Tail constant; zero for [`NormingKind::Raw`].
    pub c: f64,
}

impl NormingSpec {
    pub fn raw(q: f64, alpha: f64) -> Self {
        Self {
            kind: NormingKind::Raw,
            q,
            alpha,
            c: 0.0,
        }
    }

    pub fn centered_log(params: &StableParams, q: f64) -> Result<Self> {
        let spec = Self {
            kind: NormingKind::CenteredLog,
            q,
            alpha: params.alpha(),
            c: tail_constant(params)?,
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn power_normed(params: &StableParams, q: f64) -> Result<Self> {
        let spec = Self {
            kind: NormingKind::PowerNormed,
            q,
            alpha: params.alpha(),
            c: tail_constant(params)?,
        };
        spec.check()?;
        Ok(spec)
    }

    /// The normalization under which the moment converges in law:
    /// centering at `q = α`, power norming above.
    pub fn for_order(params: &StableParams, q: f64) -> Result<Self> {
        if same_order(q, params.alpha()) {
            Self::centered_log(params, q)
        } else {
            Self::power_normed(params, q)
        }
    }

    fn check(&self) -> Result<()> {
        let ok = match self.kind {
            NormingKind::Raw => true,
            NormingKind::CenteredLog => same_order(self.q, self.alpha),
            NormingKind::PowerNormed => self.q > self.alpha && !same_order(self.q, self.alpha),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::SpecMismatch {
                kind: self.kind.name(),
                q: self.q,
                alpha: self.alpha,
            })
        }
    }

    /// Applies the normalization to a moment computed at window `tau` from
    /// `n` unit increments.
    pub fn apply(&self, moment: f64, n: usize, tau: usize) -> f64 {
        let n = n as f64;
        match self.kind {
            NormingKind::Raw => moment,
            NormingKind::CenteredLog => moment - self.c * tau as f64 * (n / tau as f64).ln(),
            NormingKind::PowerNormed => n.powf(1.0 - self.q / self.alpha) * moment,
        }
    }
}

/// Normed empirical moment of a unit-lag series.
pub fn normed_statistic(s: &IncrementSeries, q: f64, tau: usize, spec: &NormingSpec) -> Result<f64> {
    let mismatch = Error::SpecMismatch {
        kind: spec.kind.name(),
        q,
        alpha: s.params.alpha(),
    };
    if (spec.q - q).abs() > ORDER_EQ_TOL * q.abs().max(1.0) || spec.alpha != s.params.alpha() {
        return Err(mismatch);
    }
    spec.check()?;
    let m = empirical_moment(s, q, tau)?;
    Ok(spec.apply(m, s.len(), tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesVerdict {
    Converges,
    Diverges,
}

/// Exponent `(1 + p) α / q` of the p-series `Σ_k k^{-(1+p)α/q}` that decides
/// the fate of `M / N^p` along `N_k = k lcm(T)`.
pub fn norming_series_exponent(p_exponent: f64, q: f64, alpha: f64) -> f64 {
    (1.0 + p_exponent) * alpha / q
}

/// Almost-sure dichotomy for `M(q, τ, N_k) / N_k^p` at `q >= α`: zero limit
/// when `Σ (k a_{N_k})^{-α/q}` converges, infinite limsup otherwise.
///
/// Exponents within 1e-12 of one are treated as exactly one (divergent).
pub fn feller_classifier(p_exponent: f64, q: f64, alpha: f64) -> Result<SeriesVerdict> {
    if !(alpha > 0.0) || q < alpha && !same_order(q, alpha) {
        return Err(Error::InvalidOrder { q, alpha });
    }
    if !(p_exponent >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "norming exponent p = {p_exponent} must be >= 0"
        )));
    }
    let s = norming_series_exponent(p_exponent, q, alpha);
    Ok(if s > 1.0 + 1e-12 {
        SeriesVerdict::Converges
    } else {
        SeriesVerdict::Diverges
    })
}
