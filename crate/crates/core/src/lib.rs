//! Tail index and spectral measure estimation for regularly varying laws on
//! normed cones, by the ratio of the two largest norms within groups.
//!
//! A sample of `N` cone elements is cut into `n` contiguous groups of `m`.
//! In each group the largest norm `M1`, the second largest `M2` and the
//! direction of the maximizer are kept. The ratios `kappa = M2 / M1` have mean
//! tending to `alpha / (alpha + 1)`, so `alpha_hat = S_n / (n - S_n)` with
//! `S_n` their sum; the directions form an empirical spectral measure.
//!
//! ```
//! use conetail::{cone::ConeSpec, grouping, planner, spectral, synth, tail_index};
//!
//! let cone = ConeSpec::euclidean(2).unwrap();
//! let radial = synth::RadialLaw::pareto(1.5).unwrap();
//! let dir = synth::DirectionLaw::two_atoms(vec![1.0, 0.0], vec![0.0, 1.0], 0.3);
//! let data = synth::sample(100_000, &radial, &dir, &cone, 42).unwrap();
//!
//! let plan = planner::plan_simple(data.len(), 2.0 / 3.0).unwrap();
//! let grouped = grouping::summarize(&data, plan).unwrap();
//! let alpha = tail_index::estimate_alpha(&grouped.summaries, 0.95).unwrap();
//! assert!((alpha.alpha_hat - 1.5).abs() < 0.2);
//!
//! let sigma = spectral::estimate_spectral(&grouped.summaries, &cone).unwrap();
//! assert_eq!(sigma.n(), plan.n);
//! ```

// `!(x > 0.0)` is how NaN gets rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cone;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod grouping;
pub mod planner;
pub mod rng;
mod serde_inf;
pub mod spectral;
pub mod stats;
pub mod study;
pub mod synth;
pub mod tail_index;

pub use error::{Error, ErrorClass, Result};

/// Version tag carried by every JSON document the CLI emits.
pub const SCHEMA_VERSION: u32 = 1;
