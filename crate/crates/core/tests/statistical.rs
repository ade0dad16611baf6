//! Monte Carlo checks with pinned seeds.

use levyscale::extremes::{
    block_extremes, estimate_tail_exponent, exp_moment_bound, max_cdf, ratio_rn, LambdaSequence,
};
use levyscale::limits::{
    ks_against_cdf, lemma1_curve, mc_normed_sample, ratio_convergence_study, rn_study,
    tau_invariance_test, McConfig,
};
use levyscale::moments::{fit_scaling, moment_grid, NormingSpec};
use levyscale::rng::{open01, RngStream};
use levyscale::sampler::generate_increments;
use levyscale::stable::cauchy_tail_exact;
use levyscale::{stats, HorizonScheme, StableParams};

fn sym(alpha: f64) -> StableParams {
    StableParams::symmetric(alpha).unwrap()
}

fn config(alpha: f64, q: f64, taus: Vec<usize>, horizon: usize, k: u64, replicas: usize, seed: u64) -> McConfig {
    McConfig {
        params: sym(alpha),
        q,
        taus,
        scheme: HorizonScheme::new(horizon, k).unwrap(),
        replicas,
        master_seed: seed,
    }
}

#[test]
fn skewed_cauchy_matches_exact_tail() {
    let p = StableParams::new(1.0, 2.0, -1.5).unwrap();
    let s = generate_increments(&p, 200_000, 21).unwrap();
    for x in [-5.0, 0.0, 3.0, 10.0] {
        let emp = s.values.iter().filter(|&&v| v > x).count() as f64 / s.len() as f64;
        let exact = cauchy_tail_exact(&p, 1.0, x).unwrap();
        assert!((emp - exact).abs() < 0.005, "x={x}: {emp} vs {exact}");
    }
}

#[test]
fn gaussian_case_has_variance_two_sigma_squared() {
    // ψ(k) = σ²k² means Var X_1 = 2σ²
    let p = StableParams::new(2.0, 1.5, 0.0).unwrap();
    let s = generate_increments(&p, 200_000, 22).unwrap();
    let var = stats::std_dev(&s.values).powi(2);
    assert!((var / 4.5 - 1.0).abs() < 0.02, "{var}");
}

#[test]
fn hill_recovers_sampled_pareto() {
    let beta = 1.3;
    let mut rng = RngStream::new(23, 0).rng();
    let xs: Vec<f64> = (0..100_000).map(|_| open01(&mut rng).powf(-1.0 / beta)).collect();
    let est = estimate_tail_exponent(&xs, 0.05).unwrap();
    assert!((est - beta).abs() < 0.1, "{est}");
}

#[test]
fn block_maximum_law_at_tau_two() {
    let (alpha, q, tau) = (1.2, 2.0, 2);
    let s = generate_increments(&sym(alpha), 200_000, 24).unwrap();
    let e = block_extremes(&s, q, tau).unwrap();
    // F from an independent unit sample
    let unit = generate_increments(&sym(alpha), 400_000, 25).unwrap();
    let f = stats::sorted(&unit.values.iter().map(|x| x.abs().powf(q)).collect::<Vec<_>>());
    let d = ks_against_cdf(&e.u, |x| max_cdf(stats::ecdf_sorted(&f, x), tau)).unwrap();
    assert!(d < 0.01, "{d}");
}

#[test]
fn exp_moment_bound_for_cauchy_squares() {
    let p = sym(1.0);
    let s = generate_increments(&p, 2_000_000, 26).unwrap();
    let e = block_extremes(&s, 2.0, 2).unwrap();
    let lam = LambdaSequence::new(&p, 2.0, 2).unwrap();
    let r = exp_moment_bound(&e, 0.01, &lam).unwrap();
    assert!(r.satisfied, "{r:?}");
    let tiny = exp_moment_bound(&e, 1e-15, &lam).unwrap();
    assert!((tiny.estimate - 1.0).abs() < 1e-5 && (tiny.bound - 1.0).abs() < 1e-5);
}

#[test]
fn gaussian_scaling_is_linear_up_to_two() {
    let p = StableParams::symmetric(2.0).unwrap();
    let scheme = HorizonScheme::new(10, 100).unwrap();
    let s = generate_increments(&p, scheme.n(), 27).unwrap();
    let grid = moment_grid(&s, &[0.0, 0.5, 1.0, 2.0, 3.0], &scheme).unwrap();
    assert_eq!(fit_scaling(&grid, 0.0).unwrap().nu_hat, 0.0);
    for q in [0.5, 1.0, 2.0, 3.0] {
        let nu = fit_scaling(&grid, q).unwrap().nu_hat;
        assert!((nu - q / 2.0).abs() < 0.07, "q={q}: {nu}");
    }
}

#[test]
fn ratio_below_alpha_follows_strong_law() {
    let cfg = config(1.5, 1.0, vec![2], 10, 1, 20, 28);
    let r = &ratio_convergence_study(&cfg, &[4, 40, 400]).unwrap()[0];
    assert!((r.target - 2f64.powf(2.0 / 3.0)).abs() < 1e-12);
    assert!(r.final_relative_error() < 0.02, "{r:?}");
}

#[test]
fn ratio_target_at_the_kink_is_tau() {
    let cfg = config(1.5, 1.5, vec![2, 3], 3, 10, 2, 29);
    let reports = ratio_convergence_study(&cfg, &[1, 2]).unwrap();
    assert_eq!(reports[0].target, 2.0);
    assert_eq!(reports[1].target, 3.0);
}

#[test]
fn rn_at_the_stability_index_decreases() {
    let cfg = config(1.5, 1.5, vec![2], 10, 1, 20, 30);
    let r = &rn_study(&cfg, &[4, 40, 400]).unwrap()[0];
    assert!(r.medians_decreasing(), "{:?}", r.medians);
}

#[test]
fn rn_of_tied_input_is_one() {
    let values: Vec<f64> = (0..2520).map(|i| if i % 2 == 0 { 3.0 } else { -3.0 }).collect();
    let s = levyscale::IncrementSeries::from_values(sym(1.5), 1, 0, values).unwrap();
    let e = block_extremes(&s, 3.0, 2).unwrap();
    for upto in [1, 10, 1260] {
        assert_eq!(ratio_rn(&e, upto).unwrap(), 1.0);
    }
}

#[test]
fn cauchy_tau_invariance_with_centering() {
    let cfg = config(1.0, 1.0, vec![1, 2], 10, 10, 1000, 31);
    let spec = NormingSpec::centered_log(&cfg.params, 1.0).unwrap();
    let t = tau_invariance_test(&cfg, &spec).unwrap();
    assert!(t.pass, "{t:?}");
}

#[test]
fn normed_samples_are_reproducible() {
    let cfg = config(1.5, 3.0, vec![1, 2], 2, 100, 50, 32);
    let spec = NormingSpec::power_normed(&cfg.params, 3.0).unwrap();
    let a = mc_normed_sample(&cfg, 2, &spec).unwrap();
    let b = mc_normed_sample(&cfg, 2, &spec).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 50);
}

#[test]
fn sine_curve_matches_cauchy_closed_form() {
    // E[N sin(|X|/N)] - (2/π) ln N for standard Cauchy, from
    // ∫_0^∞ sin(ax)/(1+x²) dx = [e^{-a} Ei(a) - e^{a} Ei(-a)]/2, 40 digits.
    let ns = [100u64, 1_000, 10_000, 100_000];
    let exact = [0.269215057701, 0.269153733385, 0.269152878276, 0.269152867306];
    let draws = 2_000_000;
    let mc = lemma1_curve(&sym(1.0), &ns, draws, 33).unwrap();
    for ((&n, e), m) in ns.iter().zip(exact).zip(mc) {
        // Var[N sin(|X|/N)] <= E[min(|X|, N)²] < N
        let tol = 5.0 * (n as f64 / draws as f64).sqrt();
        assert!((m - e).abs() < tol, "N={n}: {m} vs {e} (tol {tol})");
    }
}
