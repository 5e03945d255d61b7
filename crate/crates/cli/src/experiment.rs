//! End-to-end Helmholtz experiment: data, three training variants, GP
//! posterior, width-limit check, CSV/JSON/SVG outputs.

use std::fs;
use std::path::Path;

use physnet::data::{fundamental_solution, generate, linspace, Dataset};
use physnet::gp::GpModel;
use physnet::io::{self, Table, SOLUTION_HEADER};
use physnet::kernels::Kernel;
use physnet::nn::{ActivationKind, SingleLayerNet};
use physnet::rng::derive_seed;
use physnet::training::{default_pivots, train, TrainConfig, TrainTrace, Variant};
use physnet::width_limit::{correspondence_check, square_grid, WeightPrior};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::svg::{emit_svg, Axes, Series};

pub const CONFIG_FILE: &str = "config.toml";
pub const SUMMARY_FILE: &str = "summary.json";
pub const DATA_FILE: &str = "data.csv";
pub const GP_FILE: &str = "gp_posterior.csv";
pub const CORRESPONDENCE_FILE: &str = "correspondence.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Diverged,
    Failed,
}

/// Outcome of one training variant. File names are relative to the output
/// directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: String,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diverged_at: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub initial_data_loss: Option<f64>,
    pub final_data_loss: Option<f64>,
    pub final_physics_loss: Option<f64>,
    pub final_total_loss: Option<f64>,
    /// Mean squared deviation from the clean signal on the dense grid.
    pub truth_mse: Option<f64>,
    pub trace: Option<String>,
    pub solution: Option<String>,
    pub checkpoint: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub config: String,
    pub dataset: String,
    pub variants: Vec<VariantSummary>,
    pub gp_posterior: Option<String>,
    pub gp_truth_sup_error: Option<f64>,
    pub correspondence: Option<String>,
    pub correspondence_max_abs_error: Option<f64>,
    pub figures: Vec<String>,
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    pub fn variant(&self, name: &str) -> Option<&VariantSummary> {
        self.variants.iter().find(|v| v.variant == name)
    }

    /// Every file the report references.
    pub fn files(&self) -> Vec<&str> {
        let mut out = vec![self.config.as_str(), self.dataset.as_str()];
        for v in &self.variants {
            out.extend([&v.trace, &v.solution, &v.checkpoint].into_iter().flatten().map(String::as_str));
        }
        out.extend([&self.gp_posterior, &self.correspondence].into_iter().flatten().map(String::as_str));
        out.extend(self.figures.iter().map(String::as_str));
        out
    }

    pub fn load(dir: &Path) -> CliResult<Self> {
        Ok(io::read_json(&dir.join(SUMMARY_FILE))?)
    }
}

struct Trained {
    variant: Variant,
    outcome: physnet::Result<(SingleLayerNet, TrainTrace)>,
}

fn variant_color(variant: Variant) -> &'static str {
    match variant {
        Variant::Vanilla => "#1f77b4",
        Variant::PhysicsInformed => "#2ca02c",
        Variant::PhysicsConstrained => "#d62728",
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.to_path_buf(), source: e })
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

/// Training configuration of one variant under `cfg`.
pub fn train_config(cfg: &ExperimentConfig, variant: Variant) -> CliResult<TrainConfig> {
    Ok(TrainConfig {
        variant,
        lambda: if variant == Variant::Vanilla { 0.0 } else { cfg.train.lambda },
        optimizer: cfg.optimizer(),
        iterations: cfg.train.iterations,
        n_hidden: cfg.train.n_hidden,
        pivots: default_pivots((cfg.data.lo, cfg.data.hi), cfg.train.n_pivots),
        operator: cfg.operator()?,
        seed: derive_seed(cfg.seed, "init"),
        learn_frequency: cfg.train.learn_frequency,
    })
}

pub fn dataset(cfg: &ExperimentConfig) -> CliResult<Dataset> {
    let d = &cfg.data;
    Ok(generate(d.omega, d.phi, d.n_points, d.noise_frac, (d.lo, d.hi), derive_seed(cfg.seed, "data"))?)
}

/// Run the experiment described by `cfg` and write every artifact into
/// `cfg.output.dir`.
///
/// A diverging or invalid variant is recorded in its summary entry; the
/// remaining variants still run.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<ExperimentReport> {
    cfg.validate()?;
    let resolved = cfg.resolved();
    let dir = resolved.output.dir.clone();
    create_dir(&dir)?;
    write_text(&dir.join(CONFIG_FILE), &resolved.to_toml()?)?;

    let data = dataset(&resolved)?;
    io::write_dataset(&dir.join(DATA_FILE), &data)?;

    let (omega, phi) = (resolved.data.omega, resolved.data.phi);
    let dense = linspace(resolved.data.lo, resolved.data.hi, resolved.output.dense_points);
    let truth: Vec<f64> = dense.iter().map(|&x| fundamental_solution(omega, phi, x)).collect();

    let trained: Vec<Trained> = resolved
        .variant
        .variants()
        .into_par_iter()
        .map(|variant| {
            let outcome = train_config(&resolved, variant)
                .map_err(|e| physnet::Error::InvalidArgument(e.to_string()))
                .and_then(|tc| train(&tc, &data));
            Trained { variant, outcome }
        })
        .collect();

    let mut variants = Vec::new();
    let mut solution_series = vec![
        Series::markers("data", data.iter().collect()).with_color("#7f7f7f"),
        Series::line("truth", dense.iter().copied().zip(truth.iter().copied()).collect()).with_color("#000000"),
    ];
    let mut loss_series = Vec::new();

    for t in &trained {
        let name = t.variant.short_name();
        let mut summary = VariantSummary {
            variant: name.to_string(),
            status: RunStatus::Ok,
            diverged_at: None,
            error: None,
            initial_data_loss: None,
            final_data_loss: None,
            final_physics_loss: None,
            final_total_loss: None,
            truth_mse: None,
            trace: None,
            solution: None,
            checkpoint: None,
        };
        match &t.outcome {
            Ok((net, trace)) => {
                let trace_file = format!("trace_{name}.csv");
                let solution_file = format!("solution_{name}.csv");
                let net_file = format!("net_{name}.json");
                io::write_trace(&dir.join(&trace_file), trace)?;
                let f: Vec<f64> = dense.iter().map(|&x| net.forward(x)).collect();
                let rows = dense.iter().zip(&f).zip(&truth).map(|((&x, &f), &y)| vec![x, f, y]).collect();
                Table::new(&SOLUTION_HEADER, rows).write_path(&dir.join(&solution_file))?;
                io::write_json(&dir.join(&net_file), net)?;

                let first = trace.records.first().expect("trace has an initial record");
                let last = trace.last().expect("trace has an initial record");
                summary.initial_data_loss = Some(first.data_loss);
                summary.final_data_loss = Some(last.data_loss);
                summary.final_physics_loss = Some(last.physics_loss);
                summary.final_total_loss = Some(last.total_loss);
                summary.truth_mse =
                    Some(f.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / dense.len() as f64);
                summary.trace = Some(trace_file);
                summary.solution = Some(solution_file);
                summary.checkpoint = Some(net_file);

                let color = variant_color(t.variant);
                solution_series.push(Series::line(name, dense.iter().copied().zip(f).collect()).with_color(color));
                loss_series.push(
                    Series::line(name, trace.records.iter().map(|r| (r.iteration as f64, r.data_loss)).collect())
                        .with_color(color),
                );
            }
            Err(physnet::Error::Diverged { iteration }) => {
                summary.status = RunStatus::Diverged;
                summary.diverged_at = Some(*iteration);
                summary.error = Some(format!("training diverged at iteration {iteration}"));
            }
            Err(e) => {
                summary.status = RunStatus::Failed;
                summary.error = Some(e.to_string());
            }
        }
        variants.push(summary);
    }

    let mut report = ExperimentReport {
        seed: resolved.seed,
        config: CONFIG_FILE.into(),
        dataset: DATA_FILE.into(),
        variants,
        gp_posterior: None,
        gp_truth_sup_error: None,
        correspondence: None,
        correspondence_max_abs_error: None,
        figures: Vec::new(),
        warnings: Vec::new(),
    };

    if resolved.gp.enabled {
        let model = GpModel::new(Kernel::cosine(resolved.nu()), resolved.gp.noise_variance)?;
        let post = model.posterior(data.xs(), data.ys(), &dense)?;
        io::write_posterior(&dir.join(GP_FILE), &dense, &post)?;
        report.gp_truth_sup_error = Some(post.mean.iter().zip(&truth).map(|(m, t)| (m - t).abs()).fold(0.0, f64::max));
        report.gp_posterior = Some(GP_FILE.into());
        solution_series.push(
            Series::line("GP mean", dense.iter().copied().zip(post.mean.iter().copied()).collect()).with_color("#9467bd"),
        );
    }

    if resolved.correspondence.enabled {
        let nu = resolved.nu();
        let grid = square_grid(resolved.data.lo, resolved.data.hi, resolved.correspondence.grid_points);
        let check = correspondence_check(
            ActivationKind::Sin,
            &WeightPrior::helmholtz(nu),
            &Kernel::cosine(nu),
            &grid,
            resolved.correspondence.n_samples,
            derive_seed(resolved.seed, "correspondence"),
        )?;
        io::write_correspondence(&dir.join(CORRESPONDENCE_FILE), &check)?;
        report.correspondence_max_abs_error = Some(check.max_abs_error);
        report.correspondence = Some(CORRESPONDENCE_FILE.into());
    }

    if resolved.output.svg {
        let solutions = emit_svg(&solution_series, &Axes::new("Learned solutions", "x", "f(x)"))?;
        write_text(&dir.join("solutions.svg"), &solutions.text)?;
        report.figures.push("solutions.svg".into());
        report.warnings.extend(solutions.warnings);
        if !loss_series.is_empty() {
            let convergence = emit_svg(&loss_series, &Axes::new("Data loss", "iteration", "data loss").log_y())?;
            write_text(&dir.join("convergence.svg"), &convergence.text)?;
            report.figures.push("convergence.svg".into());
            report.warnings.extend(convergence.warnings);
        }
    }

    io::write_json(&dir.join(SUMMARY_FILE), &report)?;
    Ok(report)
}

