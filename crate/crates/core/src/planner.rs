//! Choice of the number of groups `n` and the group size `m`.
//!
//! The simple rule takes `n = floor(N^r)`. The second-order rule balances the
//! bias of a finite group size against the variance of an `n`-term average:
//! with `zeta = (beta - alpha) / alpha` it uses `n = N^(2 zeta / (1 + 2 zeta) - eps)`.
//! For spectral estimation `zeta` is capped at 1. In both cases `m = floor(N / n)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouping::{GroupingPlan, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanTarget {
    AlphaEstimation,
    SpectralEstimation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderParams {
    /// Tail index, possibly a pilot estimate. Absent when `zeta` was set directly.
    pub alpha: Option<f64>,
    #[serde(with = "crate::serde_inf::option")]
    pub beta: Option<f64>,
    #[serde(with = "crate::serde_inf")]
    pub zeta: f64,
    /// `None` selects [`default_epsilon`].
    pub epsilon: Option<f64>,
    pub target: PlanTarget,
}

/// `zeta` from the first- and second-order exponents. `beta = inf` gives
/// `zeta = inf` for alpha estimation and 1 for spectral estimation.
pub fn zeta_for(alpha: f64, beta: f64, target: PlanTarget) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Plan(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    if !(beta > alpha) {
        return Err(Error::Plan(format!(
            "beta must exceed alpha, got beta = {beta}"
        )));
    }
    let zeta = (beta - alpha) / alpha;
    Ok(match target {
        PlanTarget::AlphaEstimation => zeta,
        PlanTarget::SpectralEstimation => zeta.min(1.0),
    })
}

impl SecondOrderParams {
    /// With `beta = None` the stable-law expansion `beta = 2 alpha` is assumed.
    pub fn from_tail(alpha: f64, beta: Option<f64>, target: PlanTarget) -> Result<Self> {
        let beta = beta.unwrap_or(2.0 * alpha);
        Ok(SecondOrderParams {
            alpha: Some(alpha),
            beta: Some(beta),
            zeta: zeta_for(alpha, beta, target)?,
            epsilon: None,
            target,
        })
    }

    pub fn from_zeta(zeta: f64, target: PlanTarget) -> Result<Self> {
        if !(zeta > 0.0) {
            return Err(Error::Plan(format!("zeta must be positive, got {zeta}")));
        }
        Ok(SecondOrderParams {
            alpha: None,
            beta: None,
            zeta,
            epsilon: None,
            target,
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }
}

/// `ln ln N / ln N`, so that `N^eps = ln N`.
///
/// The rate-optimal count is thus divided by `ln N`, which drives
/// `sqrt(n) * m^(-zeta)` to zero like `(ln N)^(-(zeta + 1/2))`.
pub fn default_epsilon(total: usize) -> f64 {
    let ln = (total as f64).ln();
    if ln <= 1.0 {
        return 0.0;
    }
    ln.ln() / ln
}

/// Exponent of `N` giving the group count.
pub fn group_count_exponent(zeta: f64, epsilon: f64) -> f64 {
    if zeta == f64::INFINITY {
        1.0 - epsilon
    } else {
        2.0 * zeta / (1.0 + 2.0 * zeta) - epsilon
    }
}

/// `floor(N^e)`, snapping results within 1e-9 relative of an integer, so
/// `10^6^(2/3)` is 10000 and not 9999.
fn floor_pow(total: usize, exponent: f64) -> usize {
    let v = (total as f64).powf(exponent);
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        v.floor() as usize
    }
}

fn finish(total: usize, n: usize, provenance: Provenance) -> Result<GroupingPlan> {
    if n < 1 {
        return Err(Error::Plan(format!("no groups for N = {total}")));
    }
    let m = total / n;
    if m < 2 {
        return Err(Error::Plan(format!(
            "group size m = {m} < 2 for N = {total}, n = {n}; lower the group-count exponent"
        )));
    }
    GroupingPlan::new(n, m, provenance)
}

pub fn plan_simple(total: usize, r: f64) -> Result<GroupingPlan> {
    if total < 4 {
        return Err(Error::Plan(format!("need N >= 4, got {total}")));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Plan(format!("r must lie in (0, 1), got {r}")));
    }
    finish(total, floor_pow(total, r), Provenance::Simple { r })
}

pub fn plan_second_order(total: usize, params: &SecondOrderParams) -> Result<GroupingPlan> {
    if total < 4 {
        return Err(Error::Plan(format!("need N >= 4, got {total}")));
    }
    if !(params.zeta > 0.0) {
        return Err(Error::Plan(format!(
            "zeta must be positive, got {}",
            params.zeta
        )));
    }
    let epsilon = params.epsilon.unwrap_or_else(|| default_epsilon(total));
    if !(epsilon >= 0.0) {
        return Err(Error::Plan(format!(
            "epsilon must be nonnegative, got {epsilon}"
        )));
    }
    let e = group_count_exponent(params.zeta, epsilon);
    if !(e > 0.0 && e < 1.0) {
        return Err(Error::Plan(format!(
            "group-count exponent {e} outside (0, 1) for zeta = {}, epsilon = {epsilon}",
            params.zeta
        )));
    }
    finish(
        total,
        floor_pow(total, e),
        Provenance::SecondOrder {
            zeta: params.zeta,
            epsilon,
        },
    )
}

/// A plan recipe that can be applied to any sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanRule {
    Simple {
        r: f64,
    },
    SecondOrder {
        #[serde(
            default,
            with = "crate::serde_inf::option",
            skip_serializing_if = "Option::is_none"
        )]
        zeta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha_pilot: Option<f64>,
        #[serde(
            default,
            with = "crate::serde_inf::option",
            skip_serializing_if = "Option::is_none"
        )]
        beta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
        #[serde(default = "default_target")]
        target: PlanTarget,
    },
    Explicit {
        n: usize,
        m: usize,
    },
}

fn default_target() -> PlanTarget {
    PlanTarget::AlphaEstimation
}

impl PlanRule {
    /// Resolves the rule for `total` observations. `known_tail` supplies
    /// `(alpha, beta)` when a second-order rule gives neither `zeta` nor a
    /// pilot `alpha`.
    pub fn resolve(
        &self,
        total: usize,
        known_tail: Option<(f64, Option<f64>)>,
    ) -> Result<GroupingPlan> {
        match *self {
            PlanRule::Simple { r } => plan_simple(total, r),
            PlanRule::Explicit { n, m } => {
                let plan = GroupingPlan::explicit(n, m)?;
                if plan.used() > total {
                    return Err(Error::InsufficientData {
                        needed: plan.used(),
                        available: total,
                    });
                }
                Ok(plan)
            }
            PlanRule::SecondOrder {
                zeta,
                alpha_pilot,
                beta,
                epsilon,
                target,
            } => {
                let params = match (zeta, alpha_pilot, known_tail) {
                    (Some(z), _, _) => SecondOrderParams::from_zeta(z, target)?,
                    (None, Some(a), _) => SecondOrderParams::from_tail(a, beta, target)?,
                    (None, None, Some((a, b))) => {
                        SecondOrderParams::from_tail(a, beta.or(b).or(Some(f64::INFINITY)), target)?
                    }
                    (None, None, None) => {
                        return Err(Error::Plan(
                            "second-order plan needs zeta or a pilot alpha".into(),
                        ))
                    }
                };
                let params = match epsilon {
                    Some(e) => params.with_epsilon(e),
                    None => params,
                };
                plan_second_order(total, &params)
            }
        }
    }
}
