//! Monte Carlo studies: repeated sampling from a known law, estimation, and
//! aggregation of bias, RMSE and interval coverage.
//!
//! Replicate `r` at sample size `N` draws from the stream
//! `replicate_seed(replicate_seed(seed, N), r)`. Replicates run on the current
//! rayon pool and are collected in index order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::SphereSet;
use crate::error::{Error, ErrorClass, Result};
use crate::grouping::{summarize, GroupingPlan};
use crate::planner::PlanRule;
use crate::rng::replicate_seed;
use crate::spectral::{estimate_spectral, SpectralQueryResult};
use crate::synth::LawSpec;
use crate::tail_index::{estimate_alpha_from_moments, AlphaEstimate, KappaMoments};

fn default_level() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyQuery {
    pub set: SphereSet,
    /// True `sigma(B)`; derived from the direction law when it is discrete.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySpec {
    pub law: LawSpec,
    pub n_list: Vec<usize>,
    pub plan: PlanRule,
    pub replicates: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<StudyQuery>,
}

/// Everything one replicate produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub index: usize,
    pub seed: u64,
    pub plan: GroupingPlan,
    pub moments: KappaMoments,
    pub alpha: AlphaEstimate,
    /// Studentized mean ratio at the true alpha; `None` for zero variance.
    pub studentized: Option<f64>,
    pub spectral: Option<SpectralQueryResult>,
}

/// Inputs shared by every replicate at one sample size.
#[derive(Debug, Clone)]
pub struct ReplicateConfig<'a> {
    pub law: &'a LawSpec,
    pub n_obs: usize,
    pub plan: GroupingPlan,
    pub level: f64,
    pub query: Option<&'a SphereSet>,
}

impl ReplicateConfig<'_> {
    pub fn run_one(&self, index: usize, seed: u64) -> Result<ReplicateRecord> {
        let data = self.law.sample(self.n_obs, seed)?;
        let grouped = summarize(&data, self.plan)?;
        let moments = KappaMoments::from_summaries(&grouped.summaries)?;
        let alpha = estimate_alpha_from_moments(&moments, self.level)?;
        let studentized = moments.studentized(self.law.radial.alpha()).ok();
        let spectral = match self.query {
            Some(set) => {
                Some(estimate_spectral(&grouped.summaries, &grouped.spec)?.query(set, self.level)?)
            }
            None => None,
        };
        Ok(ReplicateRecord {
            index,
            seed,
            plan: self.plan,
            moments,
            alpha,
            studentized,
            spectral,
        })
    }

    /// Replicates `0..replicates` with seeds derived from `base_seed`.
    pub fn run(&self, replicates: usize, base_seed: u64) -> Vec<Result<ReplicateRecord>> {
        (0..replicates)
            .into_par_iter()
            .map(|r| self.run_one(r, replicate_seed(base_seed, r as u64)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Alpha,
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub n_obs: usize,
    pub metric: Metric,
    pub plan: Option<GroupingPlan>,
    pub truth: f64,
    pub replicates: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub mean: Option<f64>,
    pub bias: Option<f64>,
    pub rmse: Option<f64>,
    /// Fraction of replicates with an interval that covers the truth, among
    /// those that produced an interval.
    pub coverage: Option<f64>,
    pub with_interval: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    pub failed_replicates: usize,
    /// Class of the first failure, in row order.
    #[serde(skip)]
    pub first_failure: Option<ErrorClass>,
}

#[derive(Default)]
struct Accumulator {
    values: Vec<f64>,
    covered: usize,
    with_interval: usize,
}

impl Accumulator {
    fn push(&mut self, value: f64, covers: Option<bool>) {
        self.values.push(value);
        if let Some(c) = covers {
            self.with_interval += 1;
            self.covered += usize::from(c);
        }
    }

    fn row(
        &self,
        n_obs: usize,
        metric: Metric,
        plan: Option<GroupingPlan>,
        truth: f64,
        replicates: usize,
        errors: &[String],
    ) -> StudyRow {
        let k = self.values.len();
        let (mean, bias, rmse) = if k == 0 {
            (None, None, None)
        } else {
            let mean = self.values.iter().sum::<f64>() / k as f64;
            let mse = self.values.iter().map(|v| (v - truth).powi(2)).sum::<f64>() / k as f64;
            (Some(mean), Some(mean - truth), Some(mse.sqrt()))
        };
        StudyRow {
            n_obs,
            metric,
            plan,
            truth,
            replicates,
            succeeded: k,
            failed: replicates - k,
            mean,
            bias,
            rmse,
            coverage: (self.with_interval > 0)
                .then(|| self.covered as f64 / self.with_interval as f64),
            with_interval: self.with_interval,
            errors: errors.to_vec(),
        }
    }
}

const MAX_REPORTED_ERRORS: usize = 5;

impl StudySpec {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::Input(format!(
                "a study needs at least 2 replicates, got {}",
                self.replicates
            )));
        }
        if self.n_list.is_empty() {
            return Err(Error::Input("n_list is empty".into()));
        }
        crate::stats::two_sided_z(self.level)?;
        self.law.validate()?;
        if let Some(q) = &self.query {
            q.set.validate(&self.law.cone)?;
            self.spectral_truth()?;
        }
        Ok(())
    }

    fn spectral_truth(&self) -> Result<Option<f64>> {
        match &self.query {
            None => Ok(None),
            Some(q) => q
                .truth
                .or_else(|| self.law.direction.mass_of(&q.set))
                .map(Some)
                .ok_or_else(|| {
                    Error::Input("query truth must be given for a continuous direction law".into())
                }),
        }
    }

    fn known_tail(&self) -> (f64, Option<f64>) {
        (self.law.radial.alpha(), self.law.radial.beta())
    }

    /// Seed base for sample size `n_obs`.
    pub fn size_seed(&self, n_obs: usize) -> u64 {
        replicate_seed(self.seed, n_obs as u64)
    }

    /// All replicates at one sample size.
    pub fn replicates_at(
        &self,
        n_obs: usize,
    ) -> Result<(GroupingPlan, Vec<Result<ReplicateRecord>>)> {
        let plan = self.plan.resolve(n_obs, Some(self.known_tail()))?;
        let cfg = ReplicateConfig {
            law: &self.law,
            n_obs,
            plan,
            level: self.level,
            query: self.query.as_ref().map(|q| &q.set),
        };
        Ok((plan, cfg.run(self.replicates, self.size_seed(n_obs))))
    }

    pub fn run(&self) -> Result<StudyReport> {
        self.validate()?;
        let alpha_truth = self.law.radial.alpha();
        let spectral_truth = self.spectral_truth()?;
        let mut rows = Vec::new();
        let mut failed_replicates = 0;
        let mut first_failure = None;
        for &n_obs in &self.n_list {
            let (plan, records) = match self.replicates_at(n_obs) {
                Ok(x) => x,
                Err(e) => {
                    // An infeasible plan fails every replicate at this size.
                    failed_replicates += self.replicates;
                    first_failure.get_or_insert(e.class());
                    let errs = vec![e.to_string()];
                    rows.push(Accumulator::default().row(
                        n_obs,
                        Metric::Alpha,
                        None,
                        alpha_truth,
                        self.replicates,
                        &errs,
                    ));
                    if let Some(t) = spectral_truth {
                        rows.push(Accumulator::default().row(
                            n_obs,
                            Metric::Spectral,
                            None,
                            t,
                            self.replicates,
                            &errs,
                        ));
                    }
                    continue;
                }
            };
            let mut alpha_acc = Accumulator::default();
            let mut spec_acc = Accumulator::default();
            let mut errors = Vec::new();
            for rec in &records {
                match rec {
                    Ok(r) => {
                        alpha_acc.push(r.alpha.alpha_hat, r.alpha.covers(alpha_truth));
                        if let (Some(q), Some(t)) = (&r.spectral, spectral_truth) {
                            spec_acc.push(q.p_hat, q.covers(t));
                        }
                    }
                    Err(e) => {
                        failed_replicates += 1;
                        first_failure.get_or_insert(e.class());
                        if errors.len() < MAX_REPORTED_ERRORS {
                            errors.push(e.to_string());
                        }
                    }
                }
            }
            rows.push(alpha_acc.row(
                n_obs,
                Metric::Alpha,
                Some(plan),
                alpha_truth,
                self.replicates,
                &errors,
            ));
            if let Some(t) = spectral_truth {
                rows.push(spec_acc.row(
                    n_obs,
                    Metric::Spectral,
                    Some(plan),
                    t,
                    self.replicates,
                    &errors,
                ));
            }
        }
        Ok(StudyReport {
            rows,
            failed_replicates,
            first_failure,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::ConeSpec;
    use crate::synth::{DirectionLaw, RadialLaw};

    fn spec(replicates: usize) -> StudySpec {
        StudySpec {
            law: LawSpec {
                radial: RadialLaw::fristedt_toy(1.0, 0.5).unwrap(),
                direction: DirectionLaw::two_atoms(vec![1.0, 0.0], vec![0.0, 1.0], 0.3),
                cone: ConeSpec::euclidean(2).unwrap(),
            },
            n_list: vec![500, 2000],
            plan: PlanRule::Simple { r: 0.5 },
            replicates,
            level: 0.95,
            seed: 99,
            query: Some(StudyQuery {
                set: SphereSet::cap(vec![1.0, 0.0], 0.5),
                truth: None,
            }),
        }
    }

    #[test]
    fn smoke_table() {
        let report = spec(2).run().unwrap();
        assert_eq!(report.rows.len(), 4);
        assert_eq!(report.failed_replicates, 0);
        for row in &report.rows {
            assert!(row.mean.unwrap().is_finite());
            assert!(row.rmse.unwrap().is_finite());
        }
        assert_eq!(report.rows[1].truth, 0.3);
    }

    #[test]
    fn deterministic() {
        assert_eq!(spec(3).run().unwrap(), spec(3).run().unwrap());
    }

    #[test]
    fn needs_two_replicates() {
        assert!(spec(1).run().is_err());
    }

    #[test]
    fn infeasible_sizes_are_recorded() {
        let mut s = spec(2);
        s.n_list = vec![3, 500];
        let report = s.run().unwrap();
        assert_eq!(report.failed_replicates, 2);
        assert_eq!(report.rows[0].failed, 2);
        assert!(!report.rows[0].errors.is_empty());
        assert_eq!(report.rows[2].failed, 0);
    }

    #[test]
    fn continuous_law_needs_truth() {
        let mut s = spec(2);
        s.law.direction = DirectionLaw::UniformSphere { dimension: 2 };
        assert!(s.validate().is_err());
        s.query.as_mut().unwrap().truth = Some(0.5 / std::f64::consts::PI);
        assert!(s.validate().is_ok());
    }
}
