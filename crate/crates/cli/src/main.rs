use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use specdist::experiment::{run_loss_experiment, ExperimentConfig};
use specdist::pipeline::{run_baseline, run_distance_matrix, EstimateRequest, QChoice};
use specdist::{Error, ManifoldConfig, OptimizerConfig};

/// Intrinsic distance estimation on sampled manifolds.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the circle loss experiment described by a JSON config.
    LossExperiment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Estimate all pairwise intrinsic distances of a point cloud.
    Estimate(EstimateArgs),
    /// Shortest-path distances in the neighbourhood graph.
    Baseline {
        #[arg(long)]
        input: PathBuf,
        /// Edge radius: points closer than this are joined.
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct EstimateArgs {
    /// Point cloud CSV, one point per row.
    #[arg(long)]
    input: PathBuf,
    /// Intrinsic dimension of the manifold.
    #[arg(long)]
    dim: usize,
    /// Riemannian volume of the manifold.
    #[arg(long)]
    volume: f64,
    /// Kernel bandwidth.
    #[arg(long)]
    bandwidth: f64,
    /// Number of eigenvectors spanning the candidate functions.
    #[arg(long, conflicts_with = "adaptive")]
    q: Option<usize>,
    /// Pick q from the spectrum (the default when --q is absent).
    #[arg(long)]
    adaptive: bool,
    /// Slack in the adaptive rule 2|λ_q| + ε < |λ_r|.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Quadratic truncation; defaults to min(20, rank).
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = OptimizerConfig::default().n_samples)]
    samples: usize,
    #[arg(long, default_value_t = OptimizerConfig::default().n_refine)]
    refine: usize,
    #[arg(long, default_value_t = OptimizerConfig::default().keep_top)]
    keep_top: usize,
    #[arg(long, default_value_t = OptimizerConfig::default().step0)]
    step0: f64,
    #[arg(long)]
    output: PathBuf,
}

impl EstimateArgs {
    fn request(&self) -> Result<EstimateRequest, Error> {
        Ok(EstimateRequest {
            manifold: ManifoldConfig::new(self.dim, self.volume, self.bandwidth)?,
            q: match self.q {
                Some(q) => QChoice::Fixed(q),
                None => QChoice::Adaptive {
                    epsilon: self.epsilon,
                },
            },
            r: self.r,
            optimizer: OptimizerConfig {
                n_samples: self.samples,
                n_refine: self.refine,
                step0: self.step0,
                seed: self.seed,
                keep_top: self.keep_top,
            },
        })
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::LossExperiment { config } => {
            let cfg = ExperimentConfig::from_json(&std::fs::read_to_string(config)?)?;
            let table = run_loss_experiment(&cfg)?;
            info!(
                "wrote {} rows to {}",
                table.rows.len(),
                cfg.output_path.display()
            );
        }
        Command::Estimate(args) => {
            let report = run_distance_matrix(&args.input, &args.request()?, &args.output)?;
            eprintln!("q = {}, r = {}, rank = {}", report.q, report.r, report.rank);
        }
        Command::Baseline {
            input,
            radius,
            output,
        } => {
            run_baseline(&input, radius, &output)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with 2 on usage errors; 2 is reserved for numerical failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
