//! Limit laws of the group statistics, used as executable oracles.
//!
//! For a group of `m` draws whose norms are regularly varying with index
//! `alpha`, `(M1 / b_m, M2 / b_m)` converges to `(G1^(-1/alpha), G2^(-1/alpha))`
//! where `G1 < G2 < ...` are the arrival times of a unit-rate Poisson process.
//! Consequently `kappa = M2 / M1` converges to `U^(1/alpha)` with `U` uniform,
//! i.e. `P(kappa <= t) -> t^alpha`.

use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouping::summarize_group;
use crate::rng::{replicate_seed, stream};
use crate::synth::{sample_max_cone, RadialLaw};

/// Normalizing constants of the product construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitParams {
    pub alpha: f64,
    pub c1: f64,
    pub b_m: f64,
}

impl LimitParams {
    pub fn new(alpha: f64, c1: f64, m: usize) -> Result<Self> {
        if !(alpha > 0.0 && c1 > 0.0) || m == 0 {
            return Err(Error::Input(format!(
                "need alpha > 0, c1 > 0, m >= 1; got {alpha}, {c1}, {m}"
            )));
        }
        Ok(LimitParams {
            alpha,
            c1,
            b_m: (c1 * m as f64).powf(1.0 / alpha),
        })
    }

    pub fn for_law(law: &RadialLaw, m: usize) -> Result<Self> {
        let (c1, alpha, _, _) = law.coefficients();
        Self::new(alpha, c1, m)
    }
}

/// Limit cdf of the group ratio, `t^alpha` on `[0, 1]`.
pub fn limit_kappa_cdf(alpha: f64, t: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Input(format!("alpha must be positive, got {alpha}")));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Input(format!("t must lie in [0, 1], got {t}")));
    }
    Ok(t.powf(alpha))
}

/// Mean of the limit ratio, `alpha / (alpha + 1)`.
pub fn limit_kappa_mean(alpha: f64) -> f64 {
    alpha / (alpha + 1.0)
}

/// Variance of the limit ratio, `alpha / ((alpha + 1)^2 (alpha + 2))`.
pub fn limit_kappa_var(alpha: f64) -> f64 {
    alpha / ((alpha + 1.0).powi(2) * (alpha + 2.0))
}

/// `n_draws` vectors of the first `k` Poisson arrival times `G_1 < ... < G_k`.
pub fn sample_gamma_points(k: usize, n_draws: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if k == 0 {
        return Err(Error::Input("k must be at least 1".into()));
    }
    let mut rng = stream(seed);
    Ok((0..n_draws)
        .map(|_| {
            let mut acc = 0.0;
            (0..k)
                .map(|_| {
                    let e: f64 = Exp1.sample(&mut rng);
                    acc += e;
                    acc
                })
                .collect()
        })
        .collect())
}

/// Draws of `(G_1^(-1/alpha), ..., G_k^(-1/alpha))`.
pub fn sample_gamma_limit(
    alpha: f64,
    k: usize,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if !(alpha > 0.0) {
        return Err(Error::Input(format!("alpha must be positive, got {alpha}")));
    }
    let mut draws = sample_gamma_points(k, n_draws, seed)?;
    for d in &mut draws {
        for g in d.iter_mut() {
            *g = g.powf(-1.0 / alpha);
        }
    }
    Ok(draws)
}

/// Closed-form cdf of `G_k^(-1/alpha)`: `P(G_k >= x^-alpha)`, a Poisson tail.
pub fn gamma_limit_cdf(alpha: f64, k: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let y = x.powf(-alpha);
    let mut term = (-y).exp();
    let mut total = term;
    for j in 1..k {
        term *= y / j as f64;
        total += term;
    }
    total.min(1.0)
}

fn sorted(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::Input("empty sample".into()));
    }
    if sample.iter().any(|v| v.is_nan()) {
        return Err(Error::Input("sample contains NaN".into()));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

/// One-sample Kolmogorov-Smirnov distance `sup |F_n - F|`.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64> {
    let xs = sorted(sample)?;
    let n = xs.len() as f64;
    Ok(xs.iter().enumerate().fold(0.0_f64, |d, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    }))
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let xs = sorted(a)?;
    let ys = sorted(b)?;
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0_f64);
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic Kolmogorov quantile `sqrt(-ln(level / 2) / 2)`.
pub fn kolmogorov_quantile(level: f64) -> f64 {
    (-0.5 * (level / 2.0).ln()).sqrt()
}

/// Rejection threshold for the one-sample distance at `n` points.
pub fn ks_critical(n: usize, level: f64) -> f64 {
    kolmogorov_quantile(level) / (n as f64).sqrt()
}

/// Rejection threshold for the two-sample distance.
pub fn ks_critical_two_sample(n: usize, m: usize, level: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    kolmogorov_quantile(level) * ((n + m) / (n * m)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub test: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    pub n: usize,
    pub seed: u64,
}

impl DiagnosticReport {
    pub fn below(
        test: impl Into<String>,
        statistic: f64,
        threshold: f64,
        n: usize,
        seed: u64,
    ) -> Self {
        DiagnosticReport {
            test: test.into(),
            statistic,
            threshold,
            pass: statistic < threshold,
            n,
            seed,
        }
    }
}

/// Top two norms of `groups` independent groups of size `m`, group `g` drawn
/// from the stream `replicate_seed(seed, g)`.
pub fn group_maxima(
    law: &RadialLaw,
    m: usize,
    groups: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if m < 2 || groups == 0 {
        return Err(Error::Input(format!(
            "need m >= 2 and at least one group, got m = {m}, groups = {groups}"
        )));
    }
    let spec = crate::cone::ConeSpec::max_cone();
    (0..groups)
        .map(|g| {
            let ds = sample_max_cone(m, law, replicate_seed(seed, g as u64))?;
            let s = summarize_group(&spec, g, ds.as_flat())?;
            Ok((s.m1, s.m2))
        })
        .collect()
}

/// KS test of `kappa^alpha` against Uniform(0, 1) for exact-Pareto groups.
pub fn kappa_uniformity(
    alpha: f64,
    m: usize,
    groups: usize,
    level: f64,
    seed: u64,
) -> Result<DiagnosticReport> {
    let law = RadialLaw::pareto(alpha)?;
    let powered: Vec<f64> = group_maxima(&law, m, groups, seed)?
        .into_iter()
        .map(|(m1, m2)| (m2 / m1).powf(alpha))
        .collect();
    let d = ks_distance(&powered, |t| t.clamp(0.0, 1.0))?;
    Ok(DiagnosticReport::below(
        format!("kappa_uniformity_m{m}"),
        d,
        ks_critical(groups, level),
        groups,
        seed,
    ))
}

/// Two-sample KS distances of `M1 / b_m` and `M2 / b_m` against draws of
/// the Poisson-arrival limit.
pub fn order_statistics_limit(
    law: &RadialLaw,
    m: usize,
    groups: usize,
    limit_draws: usize,
    threshold: f64,
    seed: u64,
) -> Result<[DiagnosticReport; 2]> {
    let params = LimitParams::for_law(law, m)?;
    let maxima = group_maxima(law, m, groups, seed)?;
    let first: Vec<f64> = maxima.iter().map(|p| p.0 / params.b_m).collect();
    let second: Vec<f64> = maxima.iter().map(|p| p.1 / params.b_m).collect();
    let limit = sample_gamma_limit(params.alpha, 2, limit_draws, replicate_seed(seed, u64::MAX))?;
    let l1: Vec<f64> = limit.iter().map(|d| d[0]).collect();
    let l2: Vec<f64> = limit.iter().map(|d| d[1]).collect();
    Ok([
        DiagnosticReport::below(
            "order_stat_limit_m1",
            ks_two_sample(&first, &l1)?,
            threshold,
            groups,
            seed,
        ),
        DiagnosticReport::below(
            "order_stat_limit_m2",
            ks_two_sample(&second, &l2)?,
            threshold,
            groups,
            seed,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_cdf_examples() {
        assert_eq!(limit_kappa_cdf(1.7, 1.0).unwrap(), 1.0);
        assert_eq!(limit_kappa_cdf(1.7, 0.0).unwrap(), 0.0);
        assert!((limit_kappa_cdf(2.0, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!(limit_kappa_cdf(1.0, 1.5).is_err());
        assert!(limit_kappa_cdf(1.0, -0.1).is_err());
    }

    /// Oracle: P((E1/(E1+E2))^(1/a) <= t) = P(E1 <= s (E1+E2)) with s = t^a,
    /// integrated numerically over the joint exponential density.
    fn double_integral_cdf(alpha: f64, t: f64) -> f64 {
        let s = t.powf(alpha);
        // Inner integral over e1 in [0, s e2 / (1 - s)] is closed-form; midpoint
        // rule over e2 in [0, 60].
        let steps = 200_000;
        let h = 60.0 / steps as f64;
        (0..steps)
            .map(|i| {
                let e2 = (i as f64 + 0.5) * h;
                let upper = if s >= 1.0 {
                    f64::INFINITY
                } else {
                    s * e2 / (1.0 - s)
                };
                (-e2).exp() * (1.0 - (-upper).exp()) * h
            })
            .sum()
    }

    #[test]
    fn kappa_cdf_against_exponential_ratio() {
        for (alpha, t) in [(2.0, 0.5), (0.5, 0.3), (1.0, 0.9), (3.0, 0.8)] {
            let oracle = double_integral_cdf(alpha, t);
            assert!((limit_kappa_cdf(alpha, t).unwrap() - oracle).abs() < 1e-6);
        }
    }

    #[test]
    fn kappa_limit_mean_and_variance_by_quadrature() {
        for alpha in [0.5, 1.0, 2.0, 3.5] {
            // E k = int_0^1 (1 - t^a) dt, E k^2 = int_0^1 2t (1 - t^a) dt.
            let steps = 200_000;
            let h = 1.0 / steps as f64;
            let (mut m1, mut m2) = (0.0, 0.0);
            for i in 0..steps {
                let t = (i as f64 + 0.5) * h;
                let surv = 1.0 - limit_kappa_cdf(alpha, t).unwrap();
                m1 += surv * h;
                m2 += 2.0 * t * surv * h;
            }
            assert!((m1 - limit_kappa_mean(alpha)).abs() < 1e-8);
            assert!((m2 - m1 * m1 - limit_kappa_var(alpha)).abs() < 1e-8);
        }
        assert_eq!(limit_kappa_mean(1.0), 0.5);
        assert!((limit_kappa_var(1.0) - 1.0 / 12.0).abs() < 1e-16);
    }

    #[test]
    fn kappa_cdf_is_a_cdf() {
        for alpha in [0.1, 1.0, 7.0] {
            let mut prev = 0.0;
            for i in 0..=100 {
                let v = limit_kappa_cdf(alpha, i as f64 / 100.0).unwrap();
                assert!(v >= prev);
                prev = v;
            }
            assert_eq!(prev, 1.0);
        }
    }

    #[test]
    fn gamma_points() {
        let draws = sample_gamma_points(3, 100_000, 5).unwrap();
        let mean: f64 = draws.iter().map(|d| d[0]).sum::<f64>() / draws.len() as f64;
        assert!((mean - 1.0).abs() < 0.01);
        assert!(draws.iter().all(|d| d[0] < d[1] && d[1] < d[2]));
        assert!(sample_gamma_points(0, 10, 5).is_err());
        assert_eq!(draws, sample_gamma_points(3, 100_000, 5).unwrap());
    }

    #[test]
    fn gamma_limit_matches_closed_form() {
        let alpha = 1.5;
        let draws = sample_gamma_limit(alpha, 2, 20_000, 9).unwrap();
        for k in 0..2 {
            let xs: Vec<f64> = draws.iter().map(|d| d[k]).collect();
            let d = ks_distance(&xs, |x| gamma_limit_cdf(alpha, k + 1, x)).unwrap();
            assert!(d < ks_critical(xs.len(), 0.01), "k = {k}: {d}");
        }
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_distance(&[0.5], |x| x).unwrap(), 0.5);
        let n = 400;
        let q: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        assert!((ks_distance(&q, |x| x).unwrap() - 0.5 / n as f64).abs() < 1e-15);
        assert!(ks_distance(&[], |x| x).is_err());
    }

    #[test]
    fn ks_self_sample() {
        use rand::Rng;
        let mut rng = stream(77);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_distance(&xs, |x| x).unwrap() < 0.025);
    }

    #[test]
    fn two_sample_distance() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
        assert!((ks_two_sample(&[1.0, 3.0], &[2.0, 4.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_quantiles() {
        assert!((kolmogorov_quantile(0.01) - 1.6276).abs() < 1e-4);
        assert!((kolmogorov_quantile(0.05) - 1.3581).abs() < 1e-4);
        assert!((ks_critical(500, 0.01) - 0.0728).abs() < 1e-4);
    }

    #[test]
    fn limit_params() {
        let p = LimitParams::for_law(&RadialLaw::fristedt_toy(2.0, 0.5).unwrap(), 50).unwrap();
        assert!((p.b_m - 5.0).abs() < 1e-14);
        assert!(
            LimitParams::new(1.0, 1.0, 10).unwrap().b_m
                < LimitParams::new(1.0, 1.0, 11).unwrap().b_m
        );
    }

    #[test]
    fn small_kappa_uniformity_passes() {
        let r = kappa_uniformity(1.3, 5, 2_000, 0.01, 4).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
