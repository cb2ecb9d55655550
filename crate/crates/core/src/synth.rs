//! Synthetic regularly varying samples with known tail index and spectral
//! measure.
//!
//! Observations are products `X = R * Theta` with the radius `R` and the
//! direction `Theta` independent. The radius has survival function
//! `G(x) = P(R > x)` on `[1, inf)`:
//!
//! * `pareto`: `G(x) = x^-alpha`,
//! * `second_order`: `G(x) = c1 x^-alpha + c2 x^-beta` with `c1 + c2 = 1`,
//! * `fristedt_toy`: `second_order` with `beta = 2 alpha` and `c2 = 1 - c1`.
//!
//! The direction law is then exactly the (normalized) spectral measure, and
//! `b_m = (c1 m)^(1/alpha)` normalizes group maxima.

use rand::distr::{Distribution, Open01};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cone::{ConeKind, ConeSpec, SphereSet};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::stream;

/// Lower end of every radial support.
pub const SUPPORT_MIN: f64 = 1.0;

const ROOT_REL_TOL: f64 = 1e-12;
const ROOT_MAX_ITER: usize = 200;

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialLaw {
    Pareto {
        alpha: f64,
    },
    SecondOrder {
        c1: f64,
        alpha: f64,
        c2: f64,
        beta: f64,
    },
    FristedtToy {
        alpha: f64,
        #[serde(default = "half")]
        c1: f64,
    },
}

impl RadialLaw {
    pub fn pareto(alpha: f64) -> Result<Self> {
        let law = RadialLaw::Pareto { alpha };
        law.validate()?;
        Ok(law)
    }

    pub fn second_order(c1: f64, alpha: f64, c2: f64, beta: f64) -> Result<Self> {
        let law = RadialLaw::SecondOrder {
            c1,
            alpha,
            c2,
            beta,
        };
        law.validate()?;
        Ok(law)
    }

    pub fn fristedt_toy(alpha: f64, c1: f64) -> Result<Self> {
        let law = RadialLaw::FristedtToy { alpha, c1 };
        law.validate()?;
        Ok(law)
    }

    /// `(c1, alpha, c2, beta)`; pure Pareto reports `c2 = 0, beta = inf`.
    pub fn coefficients(&self) -> (f64, f64, f64, f64) {
        match *self {
            RadialLaw::Pareto { alpha } => (1.0, alpha, 0.0, f64::INFINITY),
            RadialLaw::SecondOrder {
                c1,
                alpha,
                c2,
                beta,
            } => (c1, alpha, c2, beta),
            RadialLaw::FristedtToy { alpha, c1 } => (c1, alpha, 1.0 - c1, 2.0 * alpha),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.coefficients().1
    }

    /// Second-order exponent, `None` for exact Pareto.
    pub fn beta(&self) -> Option<f64> {
        match self {
            RadialLaw::Pareto { .. } => None,
            _ => Some(self.coefficients().3),
        }
    }

    pub fn support_min(&self) -> f64 {
        SUPPORT_MIN
    }

    /// `(c1 m)^(1/alpha)`.
    pub fn normalizer(&self, m: usize) -> f64 {
        let (c1, alpha, _, _) = self.coefficients();
        (c1 * m as f64).powf(1.0 / alpha)
    }

    pub fn validate(&self) -> Result<()> {
        let (c1, alpha, c2, beta) = self.coefficients();
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::LawValidation(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        if let RadialLaw::Pareto { .. } = self {
            return Ok(());
        }
        if !(beta > alpha && beta.is_finite()) {
            return Err(Error::LawValidation(format!(
                "beta must be finite and exceed alpha, got beta = {beta}"
            )));
        }
        if !(c1 > 0.0 && c1.is_finite() && c2.is_finite()) {
            return Err(Error::LawValidation(format!(
                "c1 must be positive, got {c1}"
            )));
        }
        if (c1 + c2 - 1.0).abs() > 1e-12 {
            return Err(Error::LawValidation(format!(
                "c1 + c2 must equal 1 so that G(1) = 1, got {}",
                c1 + c2
            )));
        }
        // -G'(x) x^(alpha+1) = alpha c1 + beta c2 x^(alpha-beta) is smallest at
        // x = 1 when c2 < 0.
        if alpha * c1 + beta * c2 <= 0.0 {
            return Err(Error::LawValidation(format!(
                "survival function is not decreasing on [1, inf): alpha c1 + beta c2 = {}",
                alpha * c1 + beta * c2
            )));
        }
        Ok(())
    }

    /// `G(x) = P(R > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        if x < SUPPORT_MIN {
            return 1.0;
        }
        let (c1, alpha, c2, beta) = self.coefficients();
        match self {
            RadialLaw::Pareto { .. } => x.powf(-alpha),
            _ => c1 * x.powf(-alpha) + c2 * x.powf(-beta),
        }
    }

    /// Generalized inverse of `G`: the `x >= 1` with `G(x) = u`.
    pub fn inverse_cdf(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Input(format!("u must lie in (0, 1), got {u}")));
        }
        match *self {
            RadialLaw::Pareto { alpha } => Ok(u.powf(-1.0 / alpha)),
            _ => self.solve_survival(u),
        }
    }

    /// Solves `G(x) = u` through `y = x^-alpha`, where the equation reads
    /// `c1 y + c2 y^k = u` with `k = beta / alpha > 1`. The left side increases
    /// on `[0, 1]` for a validated law, so Newton steps are safeguarded by
    /// bisection on that bracket.
    fn solve_survival(&self, u: f64) -> Result<f64> {
        let (c1, alpha, c2, beta) = self.coefficients();
        let k = beta / alpha;
        let km1 = k - 1.0;
        let int_power = (km1.fract() == 0.0 && km1 <= 16.0).then_some(km1 as i32);
        let pow_km1 = |y: f64| match int_power {
            Some(e) => y.powi(e),
            None => y.powf(km1),
        };
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut y = (u / c1).clamp(f64::MIN_POSITIVE, 1.0);
        for _ in 0..ROOT_MAX_ITER {
            let yk1 = pow_km1(y);
            let f = c1 * y + c2 * yk1 * y - u;
            if f == 0.0 {
                return Ok(y.powf(-1.0 / alpha));
            }
            if f < 0.0 {
                lo = y;
            } else {
                hi = y;
            }
            let slope = c1 + k * c2 * yk1;
            let mut next = y - f / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - y).abs() <= ROOT_REL_TOL * 1e-3 * next || hi - lo <= ROOT_REL_TOL * 1e-3 * lo
            {
                return Ok(next.powf(-1.0 / alpha));
            }
            y = next;
        }
        Err(Error::Numeric(format!(
            "root finding did not converge for u = {u} in {ROOT_MAX_ITER} iterations"
        )))
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let u: f64 = Open01.sample(rng);
        self.inverse_cdf(u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionLaw {
    Discrete {
        atoms: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
    /// Isotropic Gaussian projected radially onto the cone's unit sphere.
    UniformSphere { dimension: usize },
    Mixture {
        components: Vec<DirectionLaw>,
        weights: Vec<f64>,
    },
}

fn check_weights(weights: &[f64], count: usize) -> Result<()> {
    if weights.len() != count || count == 0 {
        return Err(Error::LawValidation(format!(
            "{} weights for {count} components",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::LawValidation("weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::LawValidation(format!(
            "weights sum to {total}, not 1"
        )));
    }
    Ok(())
}

impl DirectionLaw {
    pub fn two_atoms(u: Vec<f64>, v: Vec<f64>, weight_u: f64) -> Self {
        DirectionLaw::Discrete {
            atoms: vec![u, v],
            weights: vec![weight_u, 1.0 - weight_u],
        }
    }

    pub fn dimension(&self) -> Option<usize> {
        match self {
            DirectionLaw::Discrete { atoms, .. } => atoms.first().map(Vec::len),
            DirectionLaw::UniformSphere { dimension } => Some(*dimension),
            DirectionLaw::Mixture { components, .. } => {
                components.first().and_then(|c| c.dimension())
            }
        }
    }

    pub fn validate(&self, spec: &ConeSpec) -> Result<()> {
        match self {
            DirectionLaw::Discrete { atoms, weights } => {
                check_weights(weights, atoms.len())?;
                for (i, a) in atoms.iter().enumerate() {
                    spec.check_unit(a)
                        .map_err(|e| Error::LawValidation(format!("atom {i}: {e}")))?;
                }
                Ok(())
            }
            DirectionLaw::UniformSphere { dimension } => {
                if *dimension != spec.dimension() {
                    return Err(Error::LawValidation(format!(
                        "direction dimension {dimension} does not match cone dimension {}",
                        spec.dimension()
                    )));
                }
                Ok(())
            }
            DirectionLaw::Mixture {
                components,
                weights,
            } => {
                check_weights(weights, components.len())?;
                components.iter().try_for_each(|c| c.validate(spec))
            }
        }
    }

    /// Exact `sigma(B)` for laws built from atoms; `None` if any component is
    /// continuous.
    pub fn mass_of(&self, set: &SphereSet) -> Option<f64> {
        match self {
            DirectionLaw::Discrete { atoms, weights } => Some(
                atoms
                    .iter()
                    .zip(weights)
                    .filter(|(a, _)| set.contains_unchecked(a))
                    .map(|(_, w)| w)
                    .sum(),
            ),
            DirectionLaw::UniformSphere { .. } => None,
            DirectionLaw::Mixture {
                components,
                weights,
            } => components
                .iter()
                .zip(weights)
                .map(|(c, w)| c.mass_of(set).map(|p| p * w))
                .sum(),
        }
    }

    fn sampler(&self) -> DirectionSampler<'_> {
        match self {
            DirectionLaw::Discrete { atoms, weights } => DirectionSampler::Discrete {
                atoms,
                cumulative: cumulative(weights),
            },
            DirectionLaw::UniformSphere { dimension } => DirectionSampler::Gaussian(*dimension),
            DirectionLaw::Mixture {
                components,
                weights,
            } => DirectionSampler::Mixture {
                parts: components.iter().map(|c| c.sampler()).collect(),
                cumulative: cumulative(weights),
            },
        }
    }
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = f64::INFINITY;
    }
    out
}

fn pick(cumulative: &[f64], u: f64) -> usize {
    cumulative.partition_point(|&c| c <= u)
}

enum DirectionSampler<'a> {
    Discrete {
        atoms: &'a [Vec<f64>],
        cumulative: Vec<f64>,
    },
    Gaussian(usize),
    Mixture {
        parts: Vec<DirectionSampler<'a>>,
        cumulative: Vec<f64>,
    },
}

impl DirectionSampler<'_> {
    /// Appends one unit-sphere point to `out`.
    fn draw_into<R: Rng + ?Sized>(&self, spec: &ConeSpec, rng: &mut R, out: &mut Vec<f64>) {
        match self {
            DirectionSampler::Discrete { atoms, cumulative } => {
                let u: f64 = rng.random();
                out.extend_from_slice(&atoms[pick(cumulative, u)]);
            }
            DirectionSampler::Gaussian(d) => {
                let start = out.len();
                loop {
                    out.truncate(start);
                    for _ in 0..*d {
                        out.push(StandardNormal.sample(rng));
                    }
                    let r = spec.norm_unchecked(&out[start..]);
                    if r > 0.0 {
                        for v in &mut out[start..] {
                            *v /= r;
                        }
                        break;
                    }
                }
            }
            DirectionSampler::Mixture { parts, cumulative } => {
                let u: f64 = rng.random();
                parts[pick(cumulative, u)].draw_into(spec, rng, out);
            }
        }
    }
}

/// Radial law, direction law and cone of a synthetic sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawSpec {
    pub radial: RadialLaw,
    pub direction: DirectionLaw,
    pub cone: ConeSpec,
}

impl LawSpec {
    pub fn validate(&self) -> Result<()> {
        self.radial.validate()?;
        self.direction.validate(&self.cone)
    }

    pub fn sample(&self, n_obs: usize, seed: u64) -> Result<Dataset> {
        sample(n_obs, &self.radial, &self.direction, &self.cone, seed)
    }
}

/// `n_obs` observations `R_i * Theta_i`, each pair drawn in order from one
/// ChaCha8 stream seeded by `seed` (radius first).
pub fn sample(
    n_obs: usize,
    radial: &RadialLaw,
    dir: &DirectionLaw,
    spec: &ConeSpec,
    seed: u64,
) -> Result<Dataset> {
    if n_obs == 0 {
        return Err(Error::Input("n_obs must be at least 1".into()));
    }
    radial.validate()?;
    dir.validate(spec)?;
    if spec.kind() == ConeKind::MaxConeRplus {
        return sample_max_cone(n_obs, radial, seed);
    }
    let d = spec.dimension();
    let sampler = dir.sampler();
    let mut rng = stream(seed);
    let mut coords = Vec::with_capacity(n_obs * d);
    for _ in 0..n_obs {
        let r = radial.draw(&mut rng)?;
        let start = coords.len();
        sampler.draw_into(spec, &mut rng, &mut coords);
        for v in &mut coords[start..] {
            *v *= r;
        }
    }
    Ok(Dataset::from_flat_trusted(*spec, coords))
}

/// Scalar observations on `([0, inf), max)`; every direction is 1.
pub fn sample_max_cone(n_obs: usize, radial: &RadialLaw, seed: u64) -> Result<Dataset> {
    if n_obs == 0 {
        return Err(Error::Input("n_obs must be at least 1".into()));
    }
    radial.validate()?;
    let mut rng = stream(seed);
    let coords = (0..n_obs)
        .map(|_| radial.draw(&mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset::from_flat_trusted(ConeSpec::max_cone(), coords))
}

/// Radii only, from the same stream layout as [`sample_max_cone`].
pub fn sample_radii(n_obs: usize, radial: &RadialLaw, seed: u64) -> Result<Vec<f64>> {
    Ok(sample_max_cone(n_obs, radial, seed)?.as_flat().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pareto_inverse_examples() {
        let p2 = RadialLaw::pareto(2.0).unwrap();
        assert!((p2.inverse_cdf(0.25).unwrap() - 2.0).abs() < 1e-15);
        let p1 = RadialLaw::pareto(1.0).unwrap();
        assert!((p1.inverse_cdf(0.1).unwrap() - 10.0).abs() < 1e-13);
        assert!(p1.inverse_cdf(0.0).is_err());
        assert!(p1.inverse_cdf(1.0).is_err());
    }

    #[test]
    fn fristedt_inverse_matches_quadratic_root() {
        // 0.5/x + 0.5/x^2 = 0.5  <=>  x^2 - x - 1 = 0.
        let law = RadialLaw::fristedt_toy(1.0, 0.5).unwrap();
        let x = law.inverse_cdf(0.5).unwrap();
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((x - golden).abs() < 1e-12);
        assert!((law.survival(x) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn inverse_against_closed_form_for_doubled_exponent() {
        // With beta = 2 alpha, y = x^-alpha solves c2 y^2 + c1 y - u = 0.
        for (alpha, c1) in [(1.0, 0.5), (0.7, 0.3), (2.0, 1.4)] {
            let law = RadialLaw::fristedt_toy(alpha, c1).unwrap();
            let c2 = 1.0 - c1;
            for i in 1..200 {
                let u = i as f64 / 200.0;
                let y = if c2 == 0.0 {
                    u / c1
                } else {
                    2.0 * u / (c1 + (c1 * c1 + 4.0 * c2 * u).sqrt())
                };
                let expected = y.powf(-1.0 / alpha);
                let got = law.inverse_cdf(u).unwrap();
                assert!(
                    ((got - expected) / expected).abs() < 1e-11,
                    "alpha {alpha} c1 {c1} u {u}: {got} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn validation() {
        assert!(RadialLaw::pareto(0.0).is_err());
        assert!(RadialLaw::second_order(0.6, 1.0, 0.4, 0.5).is_err());
        assert!(RadialLaw::second_order(0.6, 1.0, 0.5, 2.0).is_err());
        // G'(1) > 0.
        assert!(matches!(
            RadialLaw::second_order(3.0, 1.0, -2.0, 2.0),
            Err(Error::LawValidation(_))
        ));
        // Negative c2 that keeps G decreasing.
        assert!(RadialLaw::second_order(1.5, 1.0, -0.5, 2.0).is_ok());
        assert!(RadialLaw::fristedt_toy(1.0, 0.0).is_err());
    }

    #[test]
    fn survival_at_support_min() {
        for law in [
            RadialLaw::pareto(1.3).unwrap(),
            RadialLaw::second_order(1.5, 1.0, -0.5, 2.0).unwrap(),
            RadialLaw::fristedt_toy(0.8, 0.5).unwrap(),
        ] {
            assert!((law.survival(1.0) - 1.0).abs() < 1e-15);
            assert_eq!(law.survival(0.5), 1.0);
        }
    }

    #[test]
    fn direction_validation() {
        let spec = ConeSpec::euclidean(2).unwrap();
        let ok = DirectionLaw::two_atoms(vec![1.0, 0.0], vec![0.0, 1.0], 0.3);
        assert!(ok.validate(&spec).is_ok());
        let off = DirectionLaw::two_atoms(vec![1.0, 1.0], vec![0.0, 1.0], 0.3);
        assert!(off.validate(&spec).is_err());
        let bad_w = DirectionLaw::Discrete {
            atoms: vec![vec![1.0, 0.0]],
            weights: vec![0.9],
        };
        assert!(bad_w.validate(&spec).is_err());
        assert!(DirectionLaw::UniformSphere { dimension: 3 }
            .validate(&spec)
            .is_err());
    }

    #[test]
    fn mass_of_discrete_and_mixture() {
        let a = DirectionLaw::two_atoms(vec![1.0, 0.0], vec![0.0, 1.0], 0.3);
        let cap = SphereSet::cap(vec![1.0, 0.0], 0.1);
        assert_eq!(a.mass_of(&cap), Some(0.3));
        let mix = DirectionLaw::Mixture {
            components: vec![a.clone(), DirectionLaw::UniformSphere { dimension: 2 }],
            weights: vec![0.5, 0.5],
        };
        assert_eq!(mix.mass_of(&cap), None);
        let mix = DirectionLaw::Mixture {
            components: vec![a.clone(), a],
            weights: vec![0.5, 0.5],
        };
        assert!((mix.mass_of(&cap).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn samples_are_deterministic_and_supported() {
        let spec = ConeSpec::lp(3, 1.5).unwrap();
        let dir = DirectionLaw::UniformSphere { dimension: 3 };
        let law = RadialLaw::fristedt_toy(1.2, 0.5).unwrap();
        let a = sample(500, &law, &dir, &spec, 11).unwrap();
        let b = sample(500, &law, &dir, &spec, 11).unwrap();
        assert_eq!(a.as_flat(), b.as_flat());
        for row in a.rows() {
            assert!(spec.norm(row).unwrap() >= 1.0 - 1e-12);
        }
        let c = sample(500, &law, &dir, &spec, 12).unwrap();
        assert_ne!(a.as_flat(), c.as_flat());
    }

    #[test]
    fn max_cone_samples() {
        let law = RadialLaw::pareto(1.0).unwrap();
        let a = sample_max_cone(100, &law, 3).unwrap();
        assert_eq!(a.spec().kind(), ConeKind::MaxConeRplus);
        assert!(a.as_flat().iter().all(|&r| r >= 1.0));
        assert_eq!(a, sample_max_cone(100, &law, 3).unwrap());
    }

    #[test]
    fn law_spec_json() {
        let json = r#"{
            "radial": {"fristedt_toy": {"alpha": 1.0}},
            "direction": {"discrete": {"atoms": [[1.0, 0.0], [0.0, 1.0]], "weights": [0.3, 0.7]}},
            "cone": {"kind": "euclidean_rd", "dimension": 2}
        }"#;
        let law: LawSpec = serde_json::from_str(json).unwrap();
        assert!(law.validate().is_ok());
        assert_eq!(law.radial.coefficients(), (0.5, 1.0, 0.5, 2.0));
    }
}
