//! Standard normal helpers.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

fn standard() -> Normal {
    Normal::standard()
}

pub fn normal_cdf(x: f64) -> f64 {
    standard().cdf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    standard().inverse_cdf(p)
}

/// `z_{(1+level)/2}`, the two-sided critical value for a confidence level.
pub fn two_sided_z(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Input(format!(
            "level must lie in (0, 1), got {level}"
        )));
    }
    Ok(normal_quantile((1.0 + level) / 2.0))
}
