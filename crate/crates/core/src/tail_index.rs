//! Tail index from group-maxima ratios.
//!
//! With `kappa_bar = S_n / n`, the estimate is `alpha_hat = S_n / (n - S_n)`,
//! the inverse of `kappa_bar = alpha / (alpha + 1)`. Interval estimates use the
//! delta method with `alpha_hat` plugged into the `(alpha + 1)^2` factor:
//! `alpha_hat +/- z * (alpha_hat + 1)^2 * sqrt(kappa_var / n)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouping::GroupSummary;
use crate::stats::two_sided_z;

/// Empirical moments of the group ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaMoments {
    pub n: usize,
    pub sum: f64,
    pub mean: f64,
    pub second_moment: f64,
    /// Second moment minus squared mean, floored at zero.
    pub var: f64,
}

impl KappaMoments {
    pub fn from_kappas<I: IntoIterator<Item = f64>>(kappas: I) -> Result<Self> {
        let (mut n, mut sum, mut sq) = (0usize, 0.0, 0.0);
        for k in kappas {
            n += 1;
            sum += k;
            sq += k * k;
        }
        if n == 0 {
            return Err(Error::Input("no group ratios".into()));
        }
        let nf = n as f64;
        let mean = sum / nf;
        let second_moment = sq / nf;
        Ok(KappaMoments {
            n,
            sum,
            mean,
            second_moment,
            var: (second_moment - mean * mean).max(0.0),
        })
    }

    pub fn from_summaries(summaries: &[GroupSummary]) -> Result<Self> {
        Self::from_kappas(summaries.iter().map(|s| s.kappa))
    }

    /// `sqrt(n) (kappa_bar - alpha/(alpha+1)) / sqrt(kappa_var)`.
    pub fn studentized(&self, alpha_true: f64) -> Result<f64> {
        studentized_from_moments(self.n, self.mean, self.var, alpha_true)
    }
}

pub fn studentized_from_moments(n: usize, mean: f64, var: f64, alpha_true: f64) -> Result<f64> {
    if !(alpha_true > 0.0) {
        return Err(Error::Input(format!(
            "alpha must be positive, got {alpha_true}"
        )));
    }
    if !(var > 0.0) {
        return Err(Error::DegenerateVariance("kappa variance is zero".into()));
    }
    let target = alpha_true / (alpha_true + 1.0);
    Ok((n as f64).sqrt() * (mean - target) / var.sqrt())
}

pub fn studentized_stat(summaries: &[GroupSummary], alpha_true: f64) -> Result<f64> {
    KappaMoments::from_summaries(summaries)?.studentized(alpha_true)
}

/// Delta-method interval for alpha. The lower end is not clamped at zero.
pub fn confidence_interval(
    alpha_hat: f64,
    kappa_var: f64,
    n: usize,
    level: f64,
) -> Result<(f64, f64)> {
    if !(kappa_var > 0.0) {
        return Err(Error::DegenerateVariance("kappa variance is zero".into()));
    }
    if n < 2 {
        return Err(Error::Input(format!("need n >= 2 groups, got {n}")));
    }
    let z = two_sided_z(level)?;
    let h = z * standard_error(alpha_hat, kappa_var, n);
    Ok((alpha_hat - h, alpha_hat + h))
}

fn standard_error(alpha_hat: f64, kappa_var: f64, n: usize) -> f64 {
    (alpha_hat + 1.0).powi(2) * (kappa_var / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub alpha_hat: f64,
    pub n: usize,
    pub s_n: f64,
    pub kappa_mean: f64,
    pub kappa_second_moment: f64,
    pub kappa_var: f64,
    /// `None` when every ratio is identical (zero variance).
    pub se: Option<f64>,
    pub ci: Option<[f64; 2]>,
    pub level: f64,
    pub ci_lower_negative: bool,
}

impl AlphaEstimate {
    pub fn covers(&self, alpha: f64) -> Option<bool> {
        self.ci.map(|[lo, hi]| lo <= alpha && alpha <= hi)
    }
}

pub fn estimate_alpha(summaries: &[GroupSummary], level: f64) -> Result<AlphaEstimate> {
    let mom = KappaMoments::from_summaries(summaries)?;
    estimate_alpha_from_moments(&mom, level)
}

pub fn estimate_alpha_from_moments(mom: &KappaMoments, level: f64) -> Result<AlphaEstimate> {
    if mom.n < 2 {
        return Err(Error::Input(format!("need n >= 2 groups, got {}", mom.n)));
    }
    two_sided_z(level)?;
    let nf = mom.n as f64;
    if mom.sum >= nf {
        return Err(Error::DivergingEstimate);
    }
    if mom.sum <= 0.0 {
        return Err(Error::ZeroEstimate);
    }
    let alpha_hat = mom.sum / (nf - mom.sum);
    let (se, ci) = if mom.var > 0.0 {
        let ci = confidence_interval(alpha_hat, mom.var, mom.n, level)?;
        (
            Some(standard_error(alpha_hat, mom.var, mom.n)),
            Some([ci.0, ci.1]),
        )
    } else {
        (None, None)
    };
    Ok(AlphaEstimate {
        alpha_hat,
        n: mom.n,
        s_n: mom.sum,
        kappa_mean: mom.mean,
        kappa_second_moment: mom.second_moment,
        kappa_var: mom.var,
        se,
        ci,
        level,
        ci_lower_negative: ci.is_some_and(|c| c[0] < 0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summaries(ks: &[f64]) -> Vec<GroupSummary> {
        ks.iter()
            .enumerate()
            .map(|(i, &k)| GroupSummary {
                group_index: i,
                m1: 1.0,
                m2: k,
                kappa: k,
                theta: vec![1.0],
                argmax_offset: 0,
            })
            .collect()
    }

    #[test]
    fn constant_half_gives_one() {
        let est = estimate_alpha(&summaries(&[0.5; 4]), 0.95).unwrap();
        assert_eq!(est.alpha_hat, 1.0);
        assert_eq!(est.kappa_var, 0.0);
        assert_eq!(est.ci, None);
    }

    #[test]
    fn inverse_of_mean_map() {
        // kappa_bar = alpha/(alpha+1) at alpha = 2.
        let est = estimate_alpha(&summaries(&[0.5, 5.0 / 6.0, 2.0 / 3.0]), 0.95).unwrap();
        assert!((est.kappa_mean - 2.0 / 3.0).abs() < 1e-15);
        assert!((est.alpha_hat - 2.0).abs() < 1e-13);
        let [lo, hi] = est.ci.unwrap();
        assert!(lo <= est.alpha_hat && est.alpha_hat <= hi);
    }

    #[test]
    fn degenerate_sums() {
        assert_eq!(
            estimate_alpha(&summaries(&[1.0; 5]), 0.95).unwrap_err(),
            Error::DivergingEstimate
        );
        assert_eq!(
            estimate_alpha(&summaries(&[0.0; 5]), 0.95).unwrap_err(),
            Error::ZeroEstimate
        );
        assert!(estimate_alpha(&summaries(&[0.5]), 0.95).is_err());
    }

    #[test]
    fn monotone_in_sn() {
        let mut prev = 0.0;
        for i in 1..100 {
            let k = i as f64 / 100.0;
            let a = estimate_alpha(&summaries(&[k, k]), 0.9).unwrap().alpha_hat;
            assert!(a > prev);
            prev = a;
        }
    }

    #[test]
    fn studentized_examples() {
        assert_eq!(studentized_from_moments(100, 0.5, 0.01, 1.0).unwrap(), 0.0);
        let t = studentized_from_moments(100, 0.55, 0.01, 1.0).unwrap();
        assert!((t - 5.0).abs() < 1e-12);
        assert!(matches!(
            studentized_from_moments(100, 0.55, 0.0, 1.0),
            Err(Error::DegenerateVariance(_))
        ));
    }

    #[test]
    fn interval_half_width() {
        let (lo, hi) = confidence_interval(1.0, 1.0 / 12.0, 10_000, 0.95).unwrap();
        let h = 1.959_963_984_540_054 * 4.0 * (1.0f64 / 12.0).sqrt() / 100.0;
        assert!((hi - 1.0 - h).abs() < 1e-10);
        assert!((1.0 - lo - h).abs() < 1e-10);
        assert!((h - 0.02263).abs() < 5e-6);

        let (lo, hi) = confidence_interval(1.0, 1.0 / 12.0, 10_000, 1e-12).unwrap();
        assert!(hi - lo < 1e-12);
        assert!(confidence_interval(1.0, 0.0, 100, 0.95).is_err());
        assert!(confidence_interval(1.0, 0.1, 1, 0.95).is_err());
    }

    #[test]
    fn negative_lower_bound_is_flagged_not_clamped() {
        let est = estimate_alpha(&summaries(&[0.0, 0.2, 0.0, 0.6]), 0.95).unwrap();
        let [lo, _] = est.ci.unwrap();
        assert!(lo < 0.0);
        assert!(est.ci_lower_negative);
    }

    #[test]
    fn json_report_fields() {
        let est = estimate_alpha(&summaries(&[0.2, 0.6, 0.5, 0.7]), 0.95).unwrap();
        let v: serde_json::Value = serde_json::to_value(&est).unwrap();
        for key in [
            "alpha_hat",
            "n",
            "s_n",
            "kappa_mean",
            "kappa_var",
            "se",
            "ci",
            "level",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["ci"].as_array().unwrap().len(), 2);
    }
}
