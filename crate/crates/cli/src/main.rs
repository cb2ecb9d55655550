use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conetail::planner::{PlanRule, PlanTarget};
use conetail::{Error, Result};

mod commands;

/// Tail index and spectral measure estimation by group-maxima ratios.
#[derive(Parser, Debug)]
#[command(name = "conetail", version)]
struct Cli {
    /// Seed for sampling and shuffling; overrides the seed of a study spec.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for mc-study.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Confidence level for intervals [default: 0.95].
    #[arg(long, global = true)]
    level: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a synthetic sample from a law spec and write it as CSV.
    Simulate {
        #[arg(long)]
        law: PathBuf,
        #[arg(long)]
        n_obs: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        header: bool,
    },
    /// Resolve a grouping plan for a sample size.
    Plan {
        #[arg(long)]
        n_obs: usize,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Estimate alpha, and optionally sigma of query sets, from a CSV sample.
    Estimate(EstimateArgs),
    /// Estimate sigma of query sets or of a partition, and dump atoms.
    Spectral {
        #[command(flatten)]
        common: EstimateArgs,
        /// JSON list of disjoint sets; their masses form a histogram.
        #[arg(long)]
        partition: Option<PathBuf>,
        /// Write the estimated atoms as CSV.
        #[arg(long)]
        atoms_out: Option<PathBuf>,
    },
    /// Run a Monte Carlo study described by a JSON spec.
    McStudy {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Limit-law diagnostics on synthetic data.
    #[command(subcommand)]
    Diagnose(Diagnose),
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Cone spec JSON, e.g. {"kind":"euclidean_rd","dimension":2}.
    #[arg(long)]
    cone: PathBuf,
    #[command(flatten)]
    plan: PlanArgs,
    /// Input has a header row.
    #[arg(long)]
    header: bool,
    /// JSON set or list of sets to query.
    #[arg(long)]
    query_set: Option<PathBuf>,
    /// Shuffle rows with the global seed before grouping.
    #[arg(long)]
    shuffle: bool,
    /// Write per-group summaries as CSV.
    #[arg(long)]
    summaries_out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct PlanArgs {
    /// Number of groups (with --m).
    #[arg(long, requires = "m")]
    n: Option<usize>,
    /// Group size (with --n).
    #[arg(long, requires = "n")]
    m: Option<usize>,
    /// Simple plan n = floor(N^r).
    #[arg(long, conflicts_with_all = ["n", "zeta", "beta", "alpha_pilot"])]
    r: Option<f64>,
    #[arg(long, conflicts_with = "n")]
    zeta: Option<f64>,
    /// Second-order index; "inf" for an exact power tail.
    #[arg(long, conflicts_with = "n")]
    beta: Option<f64>,
    #[arg(long, conflicts_with = "n")]
    alpha_pilot: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum)]
    target: Option<TargetArg>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TargetArg {
    Alpha,
    Spectral,
}

impl PlanArgs {
    fn rule(&self, default_target: PlanTarget) -> Result<PlanRule> {
        let target = match self.target {
            Some(TargetArg::Alpha) => PlanTarget::AlphaEstimation,
            Some(TargetArg::Spectral) => PlanTarget::SpectralEstimation,
            None => default_target,
        };
        if let (Some(n), Some(m)) = (self.n, self.m) {
            return Ok(PlanRule::Explicit { n, m });
        }
        if let Some(r) = self.r {
            return Ok(PlanRule::Simple { r });
        }
        if self.zeta.is_some() || self.alpha_pilot.is_some() || self.beta.is_some() {
            return Ok(PlanRule::SecondOrder {
                zeta: self.zeta,
                alpha_pilot: self.alpha_pilot,
                beta: self.beta,
                epsilon: self.epsilon,
                target,
            });
        }
        Err(Error::Plan(
            "no plan given: use --n/--m, --r, or --zeta/--alpha-pilot".into(),
        ))
    }
}

#[derive(Subcommand, Debug)]
enum Diagnose {
    /// KS test of kappa^alpha against Uniform(0, 1) for exact-Pareto groups.
    KappaUniformity {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        groups: usize,
        /// Test level for the KS threshold.
        #[arg(long, default_value_t = 0.01)]
        test_level: f64,
    },
    /// Two-sample KS of normalized group maxima against the limit law.
    OrderStatistics {
        /// Radial law JSON.
        #[arg(long)]
        radial: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        groups: usize,
        #[arg(long, default_value_t = 100_000)]
        limit_draws: usize,
        #[arg(long, default_value_t = 0.02)]
        threshold: f64,
    },
    /// KS of the studentized mean ratio against N(0, 1) over replicates.
    Studentized {
        /// Law spec JSON.
        #[arg(long)]
        law: PathBuf,
        #[arg(long)]
        n_obs: usize,
        #[arg(long)]
        replicates: usize,
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, default_value_t = 0.01)]
        test_level: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let class = e.class();
            let doc = serde_json::json!({
                "schema_version": conetail::SCHEMA_VERSION,
                "error": class.name(),
                "message": e.to_string(),
            });
            eprintln!("{doc}");
            ExitCode::from(class.exit_code() as u8)
        }
    }
}
