//! Contiguous-block grouping and per-group order statistics.
//!
//! Group `i` holds observations `[i*m, (i+1)*m)` in input order; the trailing
//! `N - n*m` observations are dropped and reported. For each group the largest
//! norm `m1`, the runner-up `m2` among the other `m - 1` elements, their ratio
//! `kappa = m2 / m1` and the direction of the maximizer are recorded.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::ConeSpec;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// How a plan's `(n, m)` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Simple {
        r: f64,
    },
    SecondOrder {
        #[serde(with = "crate::serde_inf")]
        zeta: f64,
        epsilon: f64,
    },
    Explicit,
}

/// `n` groups of `m` observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupingPlan {
    pub n: usize,
    pub m: usize,
    pub provenance: Provenance,
}

impl GroupingPlan {
    pub fn new(n: usize, m: usize, provenance: Provenance) -> Result<Self> {
        if n < 1 {
            return Err(Error::Plan("need at least one group".into()));
        }
        if m < 2 {
            return Err(Error::Plan(format!(
                "group size must be at least 2 to form kappa, got {m}"
            )));
        }
        Ok(GroupingPlan { n, m, provenance })
    }

    pub fn explicit(n: usize, m: usize) -> Result<Self> {
        Self::new(n, m, Provenance::Explicit)
    }

    /// Observations consumed, `n * m`.
    pub fn used(&self) -> usize {
        self.n * self.m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group_index: usize,
    pub m1: f64,
    pub m2: f64,
    pub kappa: f64,
    pub theta: Vec<f64>,
    pub argmax_offset: usize,
}

/// A dataset viewed as `n` contiguous groups.
#[derive(Debug, Clone, Copy)]
pub struct Partition<'a> {
    dataset: &'a Dataset,
    plan: GroupingPlan,
    discarded: usize,
}

impl<'a> Partition<'a> {
    pub fn plan(&self) -> GroupingPlan {
        self.plan
    }

    pub fn discarded(&self) -> usize {
        self.discarded
    }

    pub fn len(&self) -> usize {
        self.plan.n
    }

    pub fn is_empty(&self) -> bool {
        self.plan.n == 0
    }

    /// Row-major coordinates of group `i`.
    pub fn group(&self, i: usize) -> &'a [f64] {
        let d = self.dataset.spec().dimension();
        let width = self.plan.m * d;
        &self.dataset.as_flat()[i * width..(i + 1) * width]
    }

    pub fn groups(&self) -> impl ExactSizeIterator<Item = &'a [f64]> + '_ {
        (0..self.plan.n).map(move |i| self.group(i))
    }

    /// Observation indices covered by group `i`.
    pub fn group_range(&self, i: usize) -> std::ops::Range<usize> {
        i * self.plan.m..(i + 1) * self.plan.m
    }
}

pub fn partition(dataset: &Dataset, plan: GroupingPlan) -> Result<Partition<'_>> {
    let available = dataset.len();
    let needed = plan.used();
    if available < needed {
        return Err(Error::InsufficientData { needed, available });
    }
    Ok(Partition {
        dataset,
        plan,
        discarded: available - needed,
    })
}

/// Order statistics of one group given as row-major coordinates.
///
/// Ties for the maximum resolve to the first offset; a duplicated maximum
/// gives `m2 == m1`.
pub fn summarize_group(spec: &ConeSpec, group_index: usize, group: &[f64]) -> Result<GroupSummary> {
    let d = spec.dimension();
    if !group.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: group.len() % d,
        });
    }
    let m = group.len() / d;
    if m < 2 {
        return Err(Error::Input(format!(
            "group needs at least 2 elements, has {m}"
        )));
    }
    let mut m1 = f64::NEG_INFINITY;
    let mut m2 = f64::NEG_INFINITY;
    let mut arg = 0;
    for (j, row) in group.chunks_exact(d).enumerate() {
        let r = spec.norm_unchecked(row);
        if r > m1 {
            m2 = m1;
            m1 = r;
            arg = j;
        } else if r > m2 {
            m2 = r;
        }
    }
    if m1 <= 0.0 {
        return Err(Error::DegenerateGroup { group: group_index });
    }
    let maximizer = &group[arg * d..(arg + 1) * d];
    Ok(GroupSummary {
        group_index,
        m1,
        m2,
        kappa: m2 / m1,
        theta: spec.direction_with_norm(maximizer, m1),
        argmax_offset: arg,
    })
}

/// Summaries of every group, in group order.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSample {
    pub plan: GroupingPlan,
    pub discarded: usize,
    pub spec: ConeSpec,
    pub summaries: Vec<GroupSummary>,
}

impl GroupedSample {
    pub fn kappas(&self) -> impl Iterator<Item = f64> + '_ {
        self.summaries.iter().map(|s| s.kappa)
    }
}

/// Partitions `dataset` and summarizes every group. Groups are processed in
/// parallel and collected in index order.
pub fn summarize(dataset: &Dataset, plan: GroupingPlan) -> Result<GroupedSample> {
    let part = partition(dataset, plan)?;
    let spec = *dataset.spec();
    let summaries = (0..part.len())
        .into_par_iter()
        .map(|i| summarize_group(&spec, i, part.group(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupedSample {
        plan,
        discarded: part.discarded(),
        spec,
        summaries,
    })
}

/// `S_n`, the sum of the group ratios.
pub fn statistic_sn(summaries: &[GroupSummary]) -> Result<f64> {
    if summaries.is_empty() {
        return Err(Error::Input("S_n of an empty summary list".into()));
    }
    Ok(summaries.iter().map(|s| s.kappa).sum())
}

/// CSV with header `group_index,m1,m2,kappa,theta_0..theta_{d-1}`.
pub fn write_summaries_csv<W: Write>(
    writer: W,
    summaries: &[GroupSummary],
    dimension: usize,
) -> Result<()> {
    let mut w = std::io::BufWriter::new(writer);
    write!(w, "group_index,m1,m2,kappa")?;
    for j in 0..dimension {
        write!(w, ",theta_{j}")?;
    }
    writeln!(w)?;
    for s in summaries {
        write!(w, "{},{:?},{:?},{:?}", s.group_index, s.m1, s.m2, s.kappa)?;
        for t in &s.theta {
            write!(w, ",{t:?}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
