use std::fs::{self, File};
use std::path::{Path, PathBuf};

use conetail::cone::{ConeSpec, SphereSet};
use conetail::dataset::Dataset;
use conetail::diagnostics::{self, DiagnosticReport};
use conetail::grouping::{self, GroupingPlan};
use conetail::planner::PlanTarget;
use conetail::spectral::{estimate_spectral, SpectralQueryResult, BOUNDARY_WARN_TOL};
use conetail::stats::normal_cdf;
use conetail::study::{ReplicateConfig, StudySpec};
use conetail::synth::{LawSpec, RadialLaw};
use conetail::tail_index::{estimate_alpha, AlphaEstimate};
use conetail::{Error, Result, SCHEMA_VERSION};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{Cli, Command, Diagnose, EstimateArgs};

const DEFAULT_LEVEL: f64 = 0.95;
const DEFAULT_SEED: u64 = 0;

#[derive(Serialize)]
struct RunReport {
    schema_version: u32,
    command: &'static str,
    n_obs: usize,
    plan: GroupingPlan,
    discarded: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<AlphaEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spectral_queries: Option<Vec<SpectralQueryResult>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    histogram: Option<Vec<HistogramCell>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    input_digest: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct HistogramCell {
    set: SphereSet,
    mass: f64,
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| io_err(path, e))
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn parse_json<T: DeserializeOwned>(path: &Path, bytes: &[u8]) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<(T, String)> {
    let bytes = read_bytes(path)?;
    Ok((parse_json(path, &bytes)?, digest(&bytes)))
}

/// A single set or a JSON list of sets.
fn read_sets(path: &Path) -> Result<Vec<SphereSet>> {
    let bytes = read_bytes(path)?;
    let value: serde_json::Value = parse_json(path, &bytes)?;
    let parsed = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|s| vec![s])
    };
    parsed.map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn emit<T: Serialize>(doc: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(doc).map_err(|e| Error::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| io_err(path, e))
}

fn single_thread_pool() -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::Io(e.to_string()))
}

pub fn run(cli: Cli) -> Result<u8> {
    let level = cli.level.unwrap_or(DEFAULT_LEVEL);
    conetail::stats::two_sided_z(level)?;
    if let Command::McStudy { spec } = &cli.command {
        return mc_study(spec, cli.seed, cli.level, cli.jobs);
    }
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    single_thread_pool()?.install(|| match cli.command {
        Command::Simulate {
            law,
            n_obs,
            out,
            header,
        } => simulate(&law, n_obs, &out, header, seed),
        Command::Plan { n_obs, plan } => {
            let plan = plan
                .rule(PlanTarget::AlphaEstimation)?
                .resolve(n_obs, None)?;
            emit(&serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "command": "plan",
                "n_obs": n_obs,
                "plan": plan,
                "discarded": n_obs - plan.used(),
            }))?;
            Ok(0)
        }
        Command::Estimate(args) => estimate("estimate", &args, None, None, level, cli.seed),
        Command::Spectral {
            common,
            partition,
            atoms_out,
        } => estimate("spectral", &common, partition, atoms_out, level, cli.seed),
        Command::Diagnose(d) => diagnose(d, level, seed),
        Command::McStudy { .. } => unreachable!(),
    })
}

fn simulate(law_path: &Path, n_obs: usize, out: &Path, header: bool, seed: u64) -> Result<u8> {
    let (law, law_digest): (LawSpec, String) = read_json(law_path)?;
    law.validate()?;
    let data = law.sample(n_obs, seed)?;
    data.write_csv(create(out)?, header)?;
    log::info!("wrote {n_obs} observations to {}", out.display());
    emit(&serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "command": "simulate",
        "n_obs": n_obs,
        "seed": seed,
        "out": out,
        "input_digest": law_digest,
    }))?;
    Ok(0)
}

fn estimate(
    command: &'static str,
    args: &EstimateArgs,
    partition: Option<PathBuf>,
    atoms_out: Option<PathBuf>,
    level: f64,
    seed: Option<u64>,
) -> Result<u8> {
    let (cone, _): (ConeSpec, String) = read_json(&args.cone)?;
    let bytes = read_bytes(&args.input)?;
    let input_digest = digest(&bytes);
    let mut data = Dataset::read_csv(&bytes[..], cone, args.header)?;
    let used_seed = if args.shuffle {
        let s = seed.unwrap_or(DEFAULT_SEED);
        data = data.shuffled(s);
        Some(s)
    } else {
        None
    };
    let default_target = if command == "spectral" {
        PlanTarget::SpectralEstimation
    } else {
        PlanTarget::AlphaEstimation
    };
    let plan = args.plan.rule(default_target)?.resolve(data.len(), None)?;
    let grouped = grouping::summarize(&data, plan)?;
    if let Some(path) = &args.summaries_out {
        grouping::write_summaries_csv(create(path)?, &grouped.summaries, cone.dimension())?;
    }
    let alpha = if command == "estimate" {
        Some(estimate_alpha(&grouped.summaries, level)?)
    } else {
        None
    };

    let mut warnings = Vec::new();
    let needs_sigma = args.query_set.is_some() || partition.is_some() || atoms_out.is_some();
    let sigma = if needs_sigma {
        Some(estimate_spectral(&grouped.summaries, &cone)?)
    } else {
        None
    };
    let mut spectral_queries = None;
    let mut histogram = None;
    if let Some(sigma) = &sigma {
        if let Some(path) = &args.query_set {
            let mut results = Vec::new();
            for set in read_sets(path)? {
                set.validate(&cone)?;
                let near = sigma.atoms_near_boundary(&set, BOUNDARY_WARN_TOL);
                if !near.is_empty() {
                    let msg = format!(
                        "{} atom(s) within {BOUNDARY_WARN_TOL:e} of a query boundary; sigma of the boundary may be positive",
                        near.len()
                    );
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
                let res = sigma.query(&set, level)?;
                if let Some(flag) = &res.ci_flag {
                    log::warn!("{flag}");
                }
                results.push(res);
            }
            spectral_queries = Some(results);
        }
        if let Some(path) = &partition {
            let cells = read_sets(path)?;
            for c in &cells {
                c.validate(&cone)?;
            }
            histogram = Some(
                sigma
                    .partition_histogram(&cells)?
                    .into_iter()
                    .map(|(set, mass)| HistogramCell { set, mass })
                    .collect(),
            );
        }
        if let Some(path) = &atoms_out {
            sigma.write_atoms_csv(create(path)?)?;
        }
    }

    emit(&RunReport {
        schema_version: SCHEMA_VERSION,
        command,
        n_obs: data.len(),
        plan,
        discarded: grouped.discarded,
        alpha,
        spectral_queries,
        histogram,
        seed: used_seed,
        input_digest,
        warnings,
    })?;
    Ok(0)
}

fn mc_study(path: &Path, seed: Option<u64>, level: Option<f64>, jobs: Option<usize>) -> Result<u8> {
    let (mut spec, spec_digest): (StudySpec, String) = read_json(path)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(l) = level {
        spec.level = l;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::Input("--jobs must be positive".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| Error::Io(e.to_string()))?;
    let report = pool.install(|| spec.run())?;
    if report.failed_replicates > 0 {
        log::warn!("{} replicate(s) failed", report.failed_replicates);
    }
    emit(&serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "command": "mc-study",
        "seed": spec.seed,
        "level": spec.level,
        "replicates": spec.replicates,
        "rows": report.rows,
        "failed_replicates": report.failed_replicates,
        "input_digest": spec_digest,
    }))?;
    Ok(report.first_failure.map_or(0, |c| c.exit_code() as u8))
}

fn diagnose(d: Diagnose, level: f64, seed: u64) -> Result<u8> {
    let (reports, input_digest): (Vec<DiagnosticReport>, Option<String>) = match d {
        Diagnose::KappaUniformity {
            alpha,
            m,
            groups,
            test_level,
        } => (
            vec![diagnostics::kappa_uniformity(
                alpha, m, groups, test_level, seed,
            )?],
            None,
        ),
        Diagnose::OrderStatistics {
            radial,
            m,
            groups,
            limit_draws,
            threshold,
        } => {
            let (law, dg): (RadialLaw, String) = read_json(&radial)?;
            law.validate()?;
            (
                diagnostics::order_statistics_limit(&law, m, groups, limit_draws, threshold, seed)?
                    .to_vec(),
                Some(dg),
            )
        }
        Diagnose::Studentized {
            law,
            n_obs,
            replicates,
            plan,
            test_level,
        } => {
            let (law_spec, dg): (LawSpec, String) = read_json(&law)?;
            law_spec.validate()?;
            let tail = (law_spec.radial.alpha(), law_spec.radial.beta());
            let plan = plan
                .rule(PlanTarget::AlphaEstimation)?
                .resolve(n_obs, Some(tail))?;
            let cfg = ReplicateConfig {
                law: &law_spec,
                n_obs,
                plan,
                level,
                query: None,
            };
            let stats = cfg
                .run(replicates, seed)
                .into_iter()
                .map(|r| {
                    r?.studentized.ok_or_else(|| {
                        Error::DegenerateVariance("zero kappa variance in a replicate".into())
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            let d = diagnostics::ks_distance(&stats, normal_cdf)?;
            let crit = diagnostics::ks_critical(replicates, test_level);
            (
                vec![DiagnosticReport::below(
                    "studentized_normality",
                    d,
                    crit,
                    replicates,
                    seed,
                )],
                Some(dg),
            )
        }
    };
    for r in &reports {
        log::info!(
            "{}: statistic {} threshold {} pass {}",
            r.test,
            r.statistic,
            r.threshold,
            r.pass
        );
    }
    let mut doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "command": "diagnose",
        "reports": reports,
        "pass": reports.iter().all(|r| r.pass),
    });
    if let Some(dg) = input_digest {
        doc["input_digest"] = dg.into();
    }
    emit(&doc)?;
    Ok(0)
}
