//! Monte Carlo harnesses for the limit behaviour of empirical moments.
//!
//! Every harness is a pure function of its inputs: replica `r` always draws
//! from stream `r` of the master seed, work is spread over threads with
//! rayon and results are gathered in replica order.

use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremes::{block_extremes_of_values, ratio_rn};
use crate::moments::{
    abs_pow, feller_classifier, moment_of_values, normed_statistic, ratio_of_values, same_order,
    HorizonScheme, NormingKind, NormingSpec, SeriesVerdict,
};
use crate::rng::RngStream;
use crate::sampler::{block_sums, generate_on_stream, StableSampler};
use crate::stable::{empirical_nu, tail_constant, StableParams};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub params: StableParams,
    pub q: f64,
    pub taus: Vec<usize>,
    pub scheme: HorizonScheme,
    pub replicas: usize,
    pub master_seed: u64,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::InvalidArgument("replicas must be >= 1".into()));
        }
        if self.taus.is_empty() {
            return Err(Error::InvalidArgument("at least one tau is required".into()));
        }
        if let Some(&t) = self.taus.iter().find(|&&t| t == 0 || t > self.scheme.horizon) {
            return Err(Error::InvalidArgument(format!(
                "tau = {t} outside 1..={}",
                self.scheme.horizon
            )));
        }
        if !(self.q >= 0.0) {
            return Err(Error::InvalidArgument(format!("q = {} must be >= 0", self.q)));
        }
        Ok(())
    }

    fn stream(&self, r: usize) -> RngStream {
        RngStream::new(self.master_seed, r as u64)
    }
}

/// Asymptotic two-sample KS constant at level 0.01.
pub const KS_CRITICAL_001: f64 = 1.628;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub n1: usize,
    pub n2: usize,
    pub threshold: f64,
}

impl KsResult {
    pub fn passes(&self) -> bool {
        self.statistic < self.threshold
    }
}

/// Exact two-sample Kolmogorov–Smirnov statistic with the level-0.01
/// asymptotic threshold.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let a = stats::sorted(a);
    let b = stats::sorted(b);
    let (n1, n2) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n1 && j < n2 {
        // step past every copy of the smaller value in both samples
        let x = a[i].min(b[j]);
        while i < n1 && a[i] <= x {
            i += 1;
        }
        while j < n2 && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let (f1, f2) = (n1 as f64, n2 as f64);
    Ok(KsResult {
        statistic: d,
        n1,
        n2,
        threshold: KS_CRITICAL_001 * ((f1 + f2) / (f1 * f2)).sqrt(),
    })
}

/// One-sample KS distance between a sample and a continuous CDF.
pub fn ks_against_cdf(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let s = stats::sorted(sample);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let x = s[i];
        let below = i as f64 / n;
        while i < s.len() && s[i] == x {
            i += 1;
        }
        let at = i as f64 / n;
        let f = cdf(x);
        d = d.max((at - f).abs()).max((f - below).abs());
    }
    Ok(d)
}

/// Normed moments at a single window size, one per replica.
pub fn mc_normed_sample(cfg: &McConfig, tau: usize, spec: &NormingSpec) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !cfg.taus.contains(&tau) {
        return Err(Error::InvalidArgument(format!("tau = {tau} is not in the config")));
    }
    let n = cfg.scheme.n();
    (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let s = generate_on_stream(&cfg.params, n, cfg.stream(r))?;
            normed_statistic(&s, cfg.q, tau, spec)
        })
        .collect()
}

/// Statistic compared across window sizes: normed moments are divided by
/// `τ` since their limit is `τ Z`; raw moments are compared as they are.
fn invariance_statistic(normed: f64, tau: usize, kind: NormingKind) -> f64 {
    match kind {
        NormingKind::Raw => normed,
        _ => normed / tau as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauInvariance {
    pub pairs: Vec<(usize, usize, KsResult)>,
    pub pass: bool,
}

/// KS comparison of the rescaled normed moments for every pair of window
/// sizes. All window sizes of a replica are read off the same series.
pub fn tau_invariance_test(cfg: &McConfig, spec: &NormingSpec) -> Result<TauInvariance> {
    cfg.validate()?;
    if cfg.taus.len() < 2 {
        return Err(Error::InvalidArgument("tau invariance needs at least two taus".into()));
    }
    let n = cfg.scheme.n();
    let rows: Vec<Vec<f64>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let s = generate_on_stream(&cfg.params, n, cfg.stream(r))?;
            cfg.taus
                .iter()
                .map(|&tau| {
                    let v = normed_statistic(&s, cfg.q, tau, spec)?;
                    Ok(invariance_statistic(v, tau, spec.kind))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let column = |j: usize| rows.iter().map(|row| row[j]).collect::<Vec<f64>>();
    let mut pairs = Vec::new();
    for i in 0..cfg.taus.len() {
        for j in i + 1..cfg.taus.len() {
            let ks = ks_two_sample(&column(i), &column(j))?;
            pairs.push((cfg.taus[i], cfg.taus[j], ks));
        }
    }
    let pass = pairs.iter().all(|(_, _, ks)| ks.passes());
    Ok(TauInvariance { pairs, pass })
}

/// KS comparison of `M(q, τ, N)` against `τ^{q/α} M(q, 1, N/τ)`, the latter
/// computed on independent series (streams `replicas..2·replicas`).
pub fn equality_in_law_test(cfg: &McConfig, tau: usize) -> Result<KsResult> {
    cfg.validate()?;
    let n = cfg.scheme.n();
    if tau == 0 || n % tau != 0 {
        return Err(Error::TauDoesNotDivide { tau, n });
    }
    let (q, alpha) = (cfg.q, cfg.params.alpha());
    let direct: Vec<f64> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let s = generate_on_stream(&cfg.params, n, cfg.stream(r))?;
            moment_of_values(&s.values, q, tau)
        })
        .collect::<Result<_>>()?;
    let scale = (tau as f64).powf(q / alpha);
    let rescaled: Vec<f64> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let s = generate_on_stream(&cfg.params, n / tau, cfg.stream(cfg.replicas + r))?;
            Ok(scale * moment_of_values(&s.values, q, 1)?)
        })
        .collect::<Result<_>>()?;
    ks_two_sample(&direct, &rescaled)
}

const CHUNK: usize = 1 << 16;

/// Monte Carlo `E[N sin(|X_1|^α / N)] - c ln N` for each `N`, all `N`
/// sharing one pool of `draws` variates.
pub fn lemma1_curve(params: &StableParams, ns: &[u64], draws: usize, seed: u64) -> Result<Vec<f64>> {
    let c = tail_constant(params)?;
    if draws == 0 {
        return Err(Error::InvalidArgument("draws must be >= 1".into()));
    }
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) || ns[0] == 0 {
        return Err(Error::InvalidArgument("Ns must be positive and increasing".into()));
    }
    let alpha = params.alpha();
    let sampler = StableSampler::new(*params);
    let chunks = draws.div_ceil(CHUNK);
    let partial: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let len = CHUNK.min(draws - ci * CHUNK);
            let mut rng = RngStream::new(seed, ci as u64).rng();
            let mut acc = vec![0.0; ns.len()];
            for _ in 0..len {
                let a = sampler.sample(&mut rng).abs().powf(alpha);
                for (slot, &n) in acc.iter_mut().zip(ns) {
                    let n = n as f64;
                    *slot += n * (a / n).sin();
                }
            }
            acc
        })
        .collect();
    let mut totals = vec![0.0; ns.len()];
    for acc in &partial {
        for (t, a) in totals.iter_mut().zip(acc) {
            *t += a;
        }
    }
    Ok(totals
        .iter()
        .zip(ns)
        .map(|(t, &n)| t / draws as f64 - c * (n as f64).ln())
        .collect())
}

/// Monte Carlo `E|X_1|^q` with its standard error, for orders where the
/// moment exists.
pub fn mc_abs_moment(params: &StableParams, q: f64, draws: usize, seed: u64) -> Result<(f64, f64)> {
    if draws < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: draws });
    }
    let sampler = StableSampler::new(*params);
    let chunks = draws.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let len = CHUNK.min(draws - ci * CHUNK);
            let mut rng = RngStream::new(seed, ci as u64).rng();
            (0..len).fold((0.0, 0.0), |(s, s2), _| {
                let y = abs_pow(sampler.sample(&mut rng), q);
                (s + y, s2 + y * y)
            })
        })
        .collect();
    let (s, s2) = partial.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let n = draws as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub tau: usize,
    pub ns: Vec<usize>,
    pub medians: Vec<f64>,
    /// Interquartile ranges across replicas.
    pub spreads: Vec<f64>,
    pub target: f64,
}

impl ConvergenceReport {
    fn from_samples(tau: usize, ns: Vec<usize>, samples: &[Vec<f64>], target: f64) -> Self {
        Self {
            tau,
            ns,
            medians: samples.iter().map(|s| stats::median(s)).collect(),
            spreads: samples.iter().map(|s| stats::iqr(s)).collect(),
            target,
        }
    }

    /// Relative distance of the last median from the target.
    pub fn final_relative_error(&self) -> f64 {
        let last = *self.medians.last().expect("empty report");
        (last / self.target - 1.0).abs()
    }

    pub fn spreads_decreasing(&self) -> bool {
        self.spreads.windows(2).all(|w| w[1] < w[0])
    }

    pub fn medians_decreasing(&self) -> bool {
        self.medians.windows(2).all(|w| w[1] < w[0])
    }
}

fn ladder(cfg: &McConfig, multipliers: &[u64]) -> Result<Vec<usize>> {
    if multipliers.is_empty() || multipliers.windows(2).any(|w| w[0] >= w[1]) || multipliers[0] == 0 {
        return Err(Error::InvalidArgument("multipliers must be positive and increasing".into()));
    }
    multipliers
        .iter()
        .map(|&k| Ok(cfg.scheme.with_multiplier(k)?.n()))
        .collect()
}

/// Replica matrix `out[r][i]` of `stat(prefix of length ns[i])`, each
/// replica drawing one series of the largest length.
fn on_prefixes<F>(cfg: &McConfig, ns: &[usize], stat: F) -> Result<Vec<Vec<Vec<f64>>>>
where
    F: Fn(&[f64], usize) -> Result<Vec<f64>> + Sync,
{
    let nmax = *ns.last().expect("empty ladder");
    (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let s = generate_on_stream(&cfg.params, nmax, cfg.stream(r))?;
            ns.iter().map(|&n| stat(&s.values[..n], n)).collect()
        })
        .collect()
}

/// Regroups `out[r][i][j]` into per-`j` lists of per-`i` samples.
fn regroup(raw: &[Vec<Vec<f64>>], n_ladder: usize, n_taus: usize) -> Vec<Vec<Vec<f64>>> {
    (0..n_taus)
        .map(|j| {
            (0..n_ladder)
                .map(|i| raw.iter().map(|rep| rep[i][j]).collect())
                .collect()
        })
        .collect()
}

/// Median and IQR of `M(q, τ, N) / M(q, 1, N)` along `N = k lcm(T)`, one
/// report per window size, with target `τ^{ν_e(q)}`.
pub fn ratio_convergence_study(cfg: &McConfig, multipliers: &[u64]) -> Result<Vec<ConvergenceReport>> {
    cfg.validate()?;
    let ns = ladder(cfg, multipliers)?;
    let raw = on_prefixes(cfg, &ns, |v, _| {
        cfg.taus.iter().map(|&tau| ratio_of_values(v, cfg.q, tau)).collect()
    })?;
    let grouped = regroup(&raw, ns.len(), cfg.taus.len());
    let nu = empirical_nu(cfg.q, cfg.params.alpha());
    Ok(cfg
        .taus
        .iter()
        .zip(&grouped)
        .map(|(&tau, samples)| {
            ConvergenceReport::from_samples(tau, ns.clone(), samples, (tau as f64).powf(nu))
        })
        .collect())
}

/// Median and IQR of `R_N` along the ladder for every `τ >= 2`; target 0.
pub fn rn_study(cfg: &McConfig, multipliers: &[u64]) -> Result<Vec<ConvergenceReport>> {
    cfg.validate()?;
    let alpha = cfg.params.alpha();
    if cfg.q < alpha && !same_order(cfg.q, alpha) {
        return Err(Error::InvalidOrder { q: cfg.q, alpha });
    }
    if let Some(&t) = cfg.taus.iter().find(|&&t| t < 2) {
        return Err(Error::TauTooSmall(t));
    }
    let ns = ladder(cfg, multipliers)?;
    let nmax = *ns.last().expect("empty ladder");
    let raw: Vec<Vec<Vec<f64>>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let s = generate_on_stream(&cfg.params, nmax, cfg.stream(r))?;
            let per_tau: Vec<Vec<f64>> = cfg
                .taus
                .iter()
                .map(|&tau| {
                    let e = block_extremes_of_values(&s.values, cfg.q, tau)?;
                    ns.iter().map(|&n| ratio_rn(&e, n / tau)).collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?;
            // reorder to [ladder][tau]
            Ok((0..ns.len())
                .map(|i| per_tau.iter().map(|row| row[i]).collect())
                .collect())
        })
        .collect::<Result<_>>()?;
    let grouped = regroup(&raw, ns.len(), cfg.taus.len());
    Ok(cfg
        .taus
        .iter()
        .zip(&grouped)
        .map(|(&tau, samples)| ConvergenceReport::from_samples(tau, ns.clone(), samples, 0.0))
        .collect())
}

/// Trajectories of `M(q, τ, N_k) / N_k^p` along `N_k = k lcm(T)`,
/// `k = 1..=k_max`, one seed per replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceDemo {
    pub p_exponent: f64,
    pub verdict: SeriesVerdict,
    pub tau: usize,
    pub lcm: usize,
    pub ks: Vec<u64>,
    /// `values[seed][k - 1]`.
    pub values: Vec<Vec<f64>>,
    /// Running maxima of `values` over `k`.
    pub running_max: Vec<Vec<f64>>,
}

impl DivergenceDemo {
    fn at(&self, k: u64) -> usize {
        (k - 1) as usize
    }

    /// Share of seeds whose running maximum at `k_hi` exceeds the one at
    /// `k_lo`.
    pub fn fraction_running_max_grows(&self, k_lo: u64, k_hi: u64) -> f64 {
        let (a, b) = (self.at(k_lo), self.at(k_hi));
        let hits = self.running_max.iter().filter(|t| t[b] > t[a]).count();
        hits as f64 / self.running_max.len() as f64
    }

    /// Share of seeds whose value at `k_hi` is below `factor` times the
    /// value at `k_lo`.
    pub fn fraction_decayed(&self, k_lo: u64, k_hi: u64, factor: f64) -> f64 {
        let (a, b) = (self.at(k_lo), self.at(k_hi));
        let hits = self.values.iter().filter(|t| t[b] < factor * t[a]).count();
        hits as f64 / self.values.len() as f64
    }

    /// Median running maximum across seeds at every `k`.
    pub fn report(&self) -> ConvergenceReport {
        let ns: Vec<usize> = self.ks.iter().map(|&k| k as usize * self.lcm).collect();
        let samples: Vec<Vec<f64>> = (0..self.ks.len())
            .map(|i| self.running_max.iter().map(|t| t[i]).collect())
            .collect();
        let target = match self.verdict {
            SeriesVerdict::Converges => 0.0,
            SeriesVerdict::Diverges => f64::INFINITY,
        };
        ConvergenceReport::from_samples(self.tau, ns, &samples, target)
    }
}

/// Runs the norming dichotomy demonstration at `cfg.taus[0]` for
/// `k = 1..=k_max`, attaching the series-criterion verdict.
pub fn divergence_demo(cfg: &McConfig, p_exponent: f64, k_max: u64) -> Result<DivergenceDemo> {
    cfg.validate()?;
    let verdict = feller_classifier(p_exponent, cfg.q, cfg.params.alpha())?;
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be >= 1".into()));
    }
    let tau = cfg.taus[0];
    let lcm = cfg.scheme.lcm as usize;
    let blocks_per_k = lcm / tau;
    let nmax = lcm * k_max as usize;
    let values: Vec<Vec<f64>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let s = generate_on_stream(&cfg.params, nmax, cfg.stream(r))?;
            let sums = block_sums(&s.values, tau)?;
            let mut acc = 0.0;
            Ok((1..=k_max as usize)
                .map(|k| {
                    for &b in &sums[(k - 1) * blocks_per_k..k * blocks_per_k] {
                        acc += abs_pow(b, cfg.q);
                    }
                    let n = (k * lcm) as f64;
                    (tau as f64 / n) * acc / n.powf(p_exponent)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let running_max = values
        .iter()
        .map(|t| {
            let mut m = f64::NEG_INFINITY;
            t.iter()
                .map(|&x| {
                    m = m.max(x);
                    m
                })
                .collect()
        })
        .collect();
    Ok(DivergenceDemo {
        p_exponent,
        verdict,
        tau,
        lcm,
        ks: (1..=k_max).collect(),
        values,
        running_max,
    })
}
