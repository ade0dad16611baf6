use std::io::Write;

use levyscale::extremes::{
    check_lemma2_inequality, check_scalar_inequalities, estimate_tail_exponent, lemma2_constant_h,
    lemma2_exponent_e,
};
use levyscale::io::write_series;
use levyscale::limits::{ratio_convergence_study, tau_invariance_test, McConfig};
use levyscale::moments::{fit_scaling, moment_grid, HorizonScheme, NormingSpec, ORDER_EQ_TOL};
use levyscale::rng::{open01, RngStream, StreamRng};
use levyscale::sampler::{differences, generate_increments, IncrementSeries, StableSampler};
use levyscale::stable::{empirical_nu, tail_constant, theoretical_nu};
use levyscale::stats;
use rand::distr::Distribution;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::table::{num, with_output, Table};

/// A series read from disk, before configuration is resolved.
pub struct Loaded {
    pub header: Vec<(String, String)>,
    pub values: Vec<f64>,
}

fn write_table(cfg: &RunConfig, path: Option<&std::path::Path>, table: &Table) -> Result<(), CliError> {
    with_output(path, |w| table.write_to(w, cfg.format))
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let scheme = HorizonScheme::new(cfg.horizon, cfg.multiplier)?;
    let s = generate_increments(&cfg.params, scheme.n(), cfg.seed)?;
    let mut header = cfg.echo();
    header.push(("n".into(), s.len().to_string()));
    with_output(cfg.output.as_deref(), |w: &mut dyn Write| match cfg.format {
        Format::Csv => write_series(w, &header, &s.values),
        Format::Json => {
            let config: serde_json::Map<String, Value> =
                header.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
            serde_json::to_writer(&mut *w, &json!({ "config": config, "values": s.values }))?;
            writeln!(w)
        }
    })
}

/// The series to analyse: the input file when given, otherwise a fresh
/// simulation of `k lcm(1..=T)` increments.
fn series(cfg: &RunConfig, loaded: Option<&Loaded>) -> Result<IncrementSeries, CliError> {
    match loaded {
        Some(l) => {
            let values = if cfg.levels {
                differences(&l.values)
            } else {
                l.values.clone()
            };
            Ok(IncrementSeries::from_values(cfg.params, 1, cfg.seed, values)?)
        }
        None => {
            let scheme = HorizonScheme::new(cfg.horizon, cfg.multiplier)?;
            Ok(generate_increments(&cfg.params, scheme.n(), cfg.seed)?)
        }
    }
}

fn same_order(q: f64, alpha: f64) -> bool {
    (q - alpha).abs() <= ORDER_EQ_TOL * alpha.max(1.0)
}

pub fn scaling(cfg: &RunConfig, loaded: Option<&Loaded>) -> Result<(), CliError> {
    let mut s = series(cfg, loaded)?;
    let scheme = HorizonScheme::fitting(cfg.horizon, s.len())?;
    if scheme.n() != s.len() {
        eprintln!(
            "warning: series length {} is not a multiple of lcm(1..={}) = {}; truncated to {}",
            s.len(),
            cfg.horizon,
            scheme.lcm,
            scheme.n()
        );
        s = s.truncated(scheme.n())?;
    }
    let grid = moment_grid(&s, &cfg.qs, &scheme)?;
    let alpha = cfg.params.alpha();
    let mut header = cfg.echo();
    header.push(("n".into(), scheme.n().to_string()));
    let mut fits = Table::new(
        header.clone(),
        vec!["q", "nu_hat", "intercept", "stderr", "r2", "nu_empirical", "nu_theoretical"],
    );
    let mut misses = Vec::new();
    for &q in &cfg.qs {
        let f = fit_scaling(&grid, q)?;
        let nu_e = empirical_nu(q, alpha);
        let nu_t = theoretical_nu(q, alpha).exponent().unwrap_or(f64::NAN);
        fits.push(vec![
            num(q),
            num(f.nu_hat),
            num(f.intercept),
            num(f.stderr),
            num(f.r2),
            num(nu_e),
            num(nu_t),
        ]);
        if let Some(t) = cfg.tolerance {
            if !same_order(q, alpha) && (f.nu_hat - nu_e).abs() > t {
                misses.push(format!("q={q}: nu_hat={:.4} vs {nu_e:.4}", f.nu_hat));
            }
        }
    }
    write_table(cfg, cfg.output.as_deref(), &fits)?;
    if let Some(path) = &cfg.grid {
        let mut table = Table::new(header, vec!["q", "tau", "moment"]);
        for (i, &q) in grid.qs.iter().enumerate() {
            for (j, &tau) in grid.taus.iter().enumerate() {
                table.push(vec![num(q), json!(tau), num(grid.values[i][j])]);
            }
        }
        write_table(cfg, Some(path), &table)?;
    }
    if misses.is_empty() {
        Ok(())
    } else {
        Err(CliError::Assertion(misses.join("; ")))
    }
}

pub fn ratio(cfg: &RunConfig) -> Result<(), CliError> {
    let mut table = Table::new(cfg.echo(), vec!["q", "tau", "n", "median", "iqr", "target"]);
    let mut misses = Vec::new();
    for &q in &cfg.qs {
        let mc = McConfig {
            params: cfg.params,
            q,
            taus: cfg.taus.clone(),
            scheme: HorizonScheme::new(cfg.horizon, 1)?,
            replicas: cfg.replicas,
            master_seed: cfg.seed,
        };
        for r in ratio_convergence_study(&mc, &cfg.ladder)? {
            for i in 0..r.ns.len() {
                table.push(vec![
                    num(q),
                    json!(r.tau),
                    json!(r.ns[i]),
                    num(r.medians[i]),
                    num(r.spreads[i]),
                    num(r.target),
                ]);
            }
            if let Some(t) = cfg.tolerance {
                if r.final_relative_error() > t {
                    misses.push(format!(
                        "q={q}, tau={}: median {:.4} vs target {:.4}",
                        r.tau,
                        r.medians.last().unwrap(),
                        r.target
                    ));
                }
            }
        }
    }
    write_table(cfg, cfg.output.as_deref(), &table)?;
    if misses.is_empty() {
        Ok(())
    } else {
        Err(CliError::Assertion(misses.join("; ")))
    }
}

/// τ-invariance of the normed moments, plus the raw-moment negative
/// control, which must fail for the run to pass.
pub fn limits(cfg: &RunConfig) -> Result<(), CliError> {
    let mut table = Table::new(
        cfg.echo(),
        vec!["q", "norming", "tau_a", "tau_b", "statistic", "threshold", "pass"],
    );
    let mut problems = Vec::new();
    let alpha = cfg.params.alpha();
    for &q in &cfg.qs {
        let mc = McConfig {
            params: cfg.params,
            q,
            taus: cfg.taus.clone(),
            scheme: HorizonScheme::new(cfg.horizon, cfg.multiplier)?,
            replicas: cfg.replicas,
            master_seed: cfg.seed,
        };
        let spec = NormingSpec::for_order(&cfg.params, q)?;
        let main = tau_invariance_test(&mc, &spec)?;
        let mut runs = vec![(spec.kind.name(), main)];
        if !same_order(q, alpha) {
            runs.push(("raw", tau_invariance_test(&mc, &NormingSpec::raw(q, alpha))?));
        }
        for (name, result) in &runs {
            for (a, b, ks) in &result.pairs {
                table.push(vec![
                    num(q),
                    json!(name),
                    json!(a),
                    json!(b),
                    num(ks.statistic),
                    num(ks.threshold),
                    json!(ks.passes()),
                ]);
            }
        }
        if !runs[0].1.pass {
            problems.push(format!("q={q}: {} moments are not tau-invariant", runs[0].0));
        }
        if runs.len() > 1 && runs[1].1.pass {
            problems.push(format!("q={q}: raw negative control did not fail"));
        }
    }
    write_table(cfg, cfg.output.as_deref(), &table)?;
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Assertion(problems.join("; ")))
    }
}

fn random_vector(kind: usize, len: usize, heavy: &StableSampler, rng: &mut StreamRng) -> Vec<f64> {
    (0..len)
        .map(|_| match kind {
            0 => 2.0 * open01(rng) - 1.0,
            1 => heavy.sample(rng),
            _ => {
                let sign = if open01(rng) < 0.5 { -1.0 } else { 1.0 };
                sign * open01(rng).powf(-1.5)
            }
        })
        .collect()
}

/// Sweep of the deterministic block sandwich over random vectors (uniform,
/// stable with the configured law, signed Pareto) and of the scalar chains.
pub fn extremes(cfg: &RunConfig) -> Result<(), CliError> {
    let heavy = StableSampler::new(cfg.params);
    let mut header = cfg.echo();
    let mut scalar_failures = 0;
    for &q in cfg.qs.iter().chain(&[0.3, 1.0, 2.0, 4.0]) {
        if q > 0.0 {
            scalar_failures += (1..=10_000)
                .filter(|&i| !check_scalar_inequalities(i as f64 * 1e-3, q))
                .count();
        }
    }
    header.push(("scalar_failures".into(), scalar_failures.to_string()));
    let mut table = Table::new(
        header,
        vec!["tau", "q", "h", "e", "vectors", "violations", "max_lhs_over_rhs"],
    );
    let mut violations_total = 0;
    let mut combo = 0u64;
    for &tau in &cfg.taus {
        if tau < 2 {
            return Err(CliError::Invalid(format!("extremes needs tau >= 2, got {tau}")));
        }
        for &q in &cfg.qs {
            if !(q > 0.0) {
                return Err(CliError::Invalid(format!("extremes needs q > 0, got {q}")));
            }
            let mut rng = RngStream::new(cfg.seed, combo).rng();
            combo += 1;
            let mut violations = 0;
            let mut worst: f64 = 0.0;
            for i in 0..cfg.replicas {
                let blocks = 1 + (open01(&mut rng) * 8.0) as usize;
                let v = random_vector(i % 3, tau * blocks, &heavy, &mut rng);
                if v.iter().all(|&x| x == 0.0) {
                    continue;
                }
                let c = check_lemma2_inequality(&v, tau, q)?;
                if !c.holds {
                    violations += 1;
                }
                if c.rhs > 0.0 {
                    worst = worst.max(c.lhs / c.rhs);
                }
            }
            violations_total += violations;
            table.push(vec![
                json!(tau),
                num(q),
                num(lemma2_constant_h(tau, q)),
                num(lemma2_exponent_e(q)),
                json!(cfg.replicas),
                json!(violations),
                num(worst),
            ]);
        }
    }
    write_table(cfg, cfg.output.as_deref(), &table)?;
    if violations_total == 0 && scalar_failures == 0 {
        Ok(())
    } else {
        Err(CliError::Assertion(format!(
            "{violations_total} sandwich violations, {scalar_failures} scalar failures"
        )))
    }
}

pub fn tails(cfg: &RunConfig, loaded: Option<&Loaded>) -> Result<(), CliError> {
    let s = series(cfg, loaded)?;
    let abs: Vec<f64> = s.values.iter().map(|x| x.abs()).filter(|&x| x > 0.0).collect();
    let alpha = cfg.params.alpha();
    let c = tail_constant(&cfg.params)?;
    let hill = estimate_tail_exponent(&abs, cfg.fraction)?;
    let mut header = cfg.echo();
    header.push(("n".into(), abs.len().to_string()));
    header.push(("fraction".into(), cfg.fraction.to_string()));
    header.push(("hill".into(), hill.to_string()));
    header.push(("tail_constant".into(), c.to_string()));
    let mut table = Table::new(
        header,
        vec!["quantile", "x", "exceedance", "asymptote", "ratio"],
    );
    let sorted = stats::sorted(&abs);
    for p in [0.9, 0.99, 0.999, 0.9999] {
        // keep at least ten exceedances
        if (1.0 - p) * (sorted.len() as f64) < 10.0 {
            continue;
        }
        let x = stats::quantile_sorted(&sorted, p);
        let exceed = 1.0 - stats::ecdf_sorted(&sorted, x);
        let asym = c * x.powf(-alpha);
        table.push(vec![num(p), num(x), num(exceed), num(asym), num(exceed / asym)]);
    }
    write_table(cfg, cfg.output.as_deref(), &table)?;
    match cfg.tolerance {
        Some(t) if (hill - alpha).abs() > t => Err(CliError::Assertion(format!(
            "tail exponent {hill:.4} differs from alpha = {alpha} by more than {t}"
        ))),
        _ => Ok(()),
    }
}
