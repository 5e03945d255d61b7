use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use physnet::data::{generate, linspace};
use physnet::gp::GpModel;
use physnet::io;
use physnet::kernels::{boogaart_residual, boogaart_residual_fd, Kernel, KERNEL_FD_STEP};
use physnet::nn::ActivationKind;
use physnet::operators::{FdScheme, LinearOperator, OperatorKind};
use physnet::width_limit::{correspondence_check, square_grid, transformed_correspondence, WeightPrior};
use physnet_cli::config::{ExperimentConfig, VariantSelection};
use physnet_cli::{run_experiment, CliError, CliResult};
use serde_json::json;

#[derive(Parser)]
#[command(name = "physnet", version, about = "Physics-constrained single-layer networks for the 1-D Helmholtz equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the three variants, fit the GP and write all artifacts.
    #[command(allow_negative_numbers = true)]
    Run {
        /// TOML configuration; defaults reproduce the reference experiment.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        variant: Option<VariantSelection>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo covariance of a wide sine layer against its cosine kernel.
    #[command(allow_negative_numbers = true)]
    CheckCorrespondence {
        #[arg(long, default_value_t = 0.51)]
        alpha: f64,
        #[arg(long, default_value_t = 100_000)]
        n_samples: usize,
        #[arg(long, default_value_t = 5)]
        grid_points: usize,
        #[arg(long, default_value_t = 0.0)]
        lo: f64,
        #[arg(long, default_value_t = 4.0 * PI)]
        hi: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Apply the Helmholtz operator with wave number `alpha` to both
        /// arguments before comparing.
        #[arg(long)]
        transformed: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// GP regression with the cosine kernel.
    #[command(allow_negative_numbers = true)]
    GpPosterior {
        /// Dataset CSV with columns x,y; generated from the flags below if absent.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 0.51)]
        omega: f64,
        #[arg(long, default_value_t = 0.50001)]
        phi: f64,
        #[arg(long, default_value_t = 11)]
        n_points: usize,
        #[arg(long, default_value_t = 0.2)]
        noise_frac: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Kernel frequency; defaults to `omega`.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 0.04)]
        noise_variance: f64,
        #[arg(long, default_value_t = 400)]
        query_points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Largest diagonal entry of O_x O_x' k on a grid.
    #[command(allow_negative_numbers = true)]
    Boogaart {
        #[arg(long, value_enum, default_value_t = KernelChoice::Cosine)]
        kernel: KernelChoice,
        #[arg(long, default_value_t = 0.51)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        lengthscale: f64,
        #[arg(long, default_value_t = 1.0)]
        variance: f64,
        #[arg(long, default_value_t = 0.51)]
        nu: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Use nested finite differences instead of the closed form.
        #[arg(long)]
        fd: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelChoice {
    Cosine,
    Se,
}

fn print_json(value: &serde_json::Value) {
    println!("{value}");
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Run { config, omega, lambda, iterations, seed, variant, out } => {
            let mut cfg = match config {
                Some(path) => ExperimentConfig::load(&path)?,
                None => ExperimentConfig::default(),
            };
            if let Some(v) = omega {
                cfg.data.omega = v;
            }
            if let Some(v) = lambda {
                cfg.train.lambda = v;
            }
            if let Some(v) = iterations {
                cfg.train.iterations = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if let Some(v) = variant {
                cfg.variant = v;
            }
            if let Some(v) = out {
                cfg.output.dir = v;
            }
            let report = run_experiment(&cfg)?;
            print_json(&json!({ "out": cfg.output.dir, "report": report }));
        }
        Command::CheckCorrespondence { alpha, n_samples, grid_points, lo, hi, seed, transformed, out } => {
            let prior = WeightPrior::helmholtz(alpha);
            let grid = square_grid(lo, hi, grid_points);
            let target = Kernel::cosine(alpha);
            let report = if transformed {
                let op = LinearOperator::new(OperatorKind::Helmholtz, alpha)?;
                transformed_correspondence(&op, ActivationKind::Sin, &prior, &target, &grid, n_samples, seed)?
            } else {
                correspondence_check(ActivationKind::Sin, &prior, &target, &grid, n_samples, seed)?
            };
            if let Some(path) = &out {
                io::write_correspondence(path, &report)?;
            }
            print_json(&json!({
                "max_abs_error": report.max_abs_error,
                "n_samples": report.n_samples,
                "seed": report.seed,
                "grid_pairs": report.grid.len(),
            }));
        }
        Command::GpPosterior {
            data,
            omega,
            phi,
            n_points,
            noise_frac,
            seed,
            alpha,
            noise_variance,
            query_points,
            out,
        } => {
            let dataset = match data {
                Some(path) => io::read_dataset(&path)?,
                None => generate(omega, phi, n_points, noise_frac, (0.0, 4.0 * PI), seed)?,
            };
            if dataset.is_empty() {
                return Err(CliError::Config("dataset has no rows".into()));
            }
            let xs = dataset.xs();
            let (lo, hi) = (xs[0], xs[xs.len() - 1]);
            let query = linspace(lo, hi, query_points);
            let model = GpModel::new(Kernel::cosine(alpha.unwrap_or(omega)), noise_variance)?;
            let post = model.posterior(xs, dataset.ys(), &query)?;
            if let Some(path) = &out {
                io::write_posterior(path, &query, &post)?;
            }
            let max_std = post.std().into_iter().fold(0.0, f64::max);
            print_json(&json!({ "n_train": dataset.len(), "n_query": query.len(), "max_std": max_std }));
        }
        Command::Boogaart { kernel, alpha, lengthscale, variance, nu, points, fd } => {
            let k = match kernel {
                KernelChoice::Cosine => Kernel::cosine(alpha),
                KernelChoice::Se => Kernel::squared_exponential(lengthscale, variance)?,
            };
            let op = LinearOperator::new(OperatorKind::Helmholtz, nu)?;
            let grid = linspace(0.0, 4.0 * PI, points);
            let residual = if fd {
                boogaart_residual_fd(&op, &k, &grid, &FdScheme::new(KERNEL_FD_STEP)?)?
            } else {
                boogaart_residual(&op, &k, &grid)?
            };
            print_json(&json!({ "residual": residual, "route": if fd { "fd" } else { "auto" } }));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e);
            ExitCode::FAILURE
        }
    }
}

fn report_error(e: &CliError) {
    eprintln!("{}", json!({ "error": { "kind": e.kind(), "message": e.to_string() } }));
}
