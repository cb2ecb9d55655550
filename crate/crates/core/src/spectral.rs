//! Empirical spectral measure: equal-weight atoms at the directions of the
//! group maxima.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cone::{ConeSpec, SphereSet, UNIT_INPUT_TOL};
use crate::error::{Error, Result};
use crate::grouping::GroupSummary;
use crate::stats::two_sided_z;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate {
    cone: ConeSpec,
    atoms: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralQueryResult {
    pub set: SphereSet,
    pub p_hat: f64,
    pub count: usize,
    pub n: usize,
    pub ci: Option<[f64; 2]>,
    pub level: Option<f64>,
    /// Set when the interval is undefined or extends outside `[0, 1]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_flag: Option<String>,
}

impl SpectralQueryResult {
    pub fn covers(&self, p: f64) -> Option<bool> {
        self.ci.map(|[lo, hi]| lo <= p && p <= hi)
    }
}

pub fn estimate_spectral(summaries: &[GroupSummary], spec: &ConeSpec) -> Result<SpectralEstimate> {
    if summaries.is_empty() {
        return Err(Error::Input("no group summaries".into()));
    }
    SpectralEstimate::from_atoms(*spec, summaries.iter().map(|s| s.theta.clone()).collect())
}

impl SpectralEstimate {
    pub fn from_atoms(cone: ConeSpec, atoms: Vec<Vec<f64>>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Input(
                "spectral estimate needs at least one atom".into(),
            ));
        }
        for (i, a) in atoms.iter().enumerate() {
            cone.check_unit(a)
                .map_err(|e| Error::Input(format!("atom {i}: {e}")))?;
        }
        Ok(SpectralEstimate { cone, atoms })
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn n(&self) -> usize {
        self.atoms.len()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.atoms.len() as f64
    }

    pub fn cone(&self) -> &ConeSpec {
        &self.cone
    }

    pub fn count_in(&self, set: &SphereSet) -> Result<usize> {
        set.validate(&self.cone)?;
        Ok(self
            .atoms
            .iter()
            .filter(|a| set.contains_unchecked(a))
            .count())
    }

    /// `sigma_hat(B)` without an interval.
    pub fn measure_of(&self, set: &SphereSet) -> Result<SpectralQueryResult> {
        let count = self.count_in(set)?;
        Ok(SpectralQueryResult {
            set: set.clone(),
            p_hat: count as f64 / self.n() as f64,
            count,
            n: self.n(),
            ci: None,
            level: None,
            ci_flag: None,
        })
    }

    /// `sigma_hat(B)` with a Wald interval. A degenerate `p_hat` yields a
    /// result without interval and a flag instead of an error.
    pub fn query(&self, set: &SphereSet, level: f64) -> Result<SpectralQueryResult> {
        let mut res = self.measure_of(set)?;
        res.level = Some(level);
        match spectral_ci(res.p_hat, res.n, level) {
            Ok((lo, hi)) => {
                res.ci = Some([lo, hi]);
                if lo < 0.0 || hi > 1.0 {
                    res.ci_flag = Some("interval extends outside [0, 1]".into());
                }
            }
            Err(e @ Error::DegenerateVariance(_)) => res.ci_flag = Some(e.to_string()),
            Err(e) => return Err(e),
        }
        Ok(res)
    }

    /// Atoms lying within `tol` of a boundary of `set`.
    pub fn atoms_near_boundary(&self, set: &SphereSet, tol: f64) -> Vec<usize> {
        self.atoms
            .iter()
            .enumerate()
            .filter(|(_, a)| set.boundary_distance(a) <= tol)
            .map(|(i, _)| i)
            .collect()
    }

    /// Per-cell masses of pairwise disjoint sets.
    pub fn partition_histogram(&self, cells: &[SphereSet]) -> Result<Vec<(SphereSet, f64)>> {
        for c in cells {
            c.validate(&self.cone)?;
        }
        let mut counts = vec![0usize; cells.len()];
        for (i, a) in self.atoms.iter().enumerate() {
            let mut hit: Option<usize> = None;
            for (j, c) in cells.iter().enumerate() {
                if c.contains_unchecked(a) {
                    if let Some(first) = hit {
                        return Err(Error::OverlappingPartition {
                            atom: i,
                            first,
                            second: j,
                        });
                    }
                    hit = Some(j);
                    counts[j] += 1;
                }
            }
        }
        let n = self.n() as f64;
        Ok(cells
            .iter()
            .cloned()
            .zip(counts)
            .map(|(c, k)| (c, k as f64 / n))
            .collect())
    }

    /// One atom per row, `d` columns.
    pub fn write_atoms_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = std::io::BufWriter::new(writer);
        for a in &self.atoms {
            for (j, v) in a.iter().enumerate() {
                if j > 0 {
                    w.write_all(b",")?;
                }
                write!(w, "{v:?}")?;
            }
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Wald interval `p_hat +/- z * sqrt(p_hat (1 - p_hat) / n)`, unclamped.
pub fn spectral_ci(p_hat: f64, n: usize, level: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(Error::Input(format!(
            "p_hat must lie in [0, 1], got {p_hat}"
        )));
    }
    if p_hat == 0.0 || p_hat == 1.0 {
        return Err(Error::DegenerateVariance(format!(
            "p_hat = {p_hat} has zero variance"
        )));
    }
    if n < 2 {
        return Err(Error::Input(format!("need n >= 2 atoms, got {n}")));
    }
    let h = two_sided_z(level)? * (p_hat * (1.0 - p_hat) / n as f64).sqrt();
    Ok((p_hat - h, p_hat + h))
}

/// Warning threshold for atoms sitting on a query boundary.
pub const BOUNDARY_WARN_TOL: f64 = UNIT_INPUT_TOL;
