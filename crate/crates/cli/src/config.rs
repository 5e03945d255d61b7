//! TOML experiment configuration.
//!
//! Every table and key is optional; missing values take the defaults of the
//! reference Helmholtz experiment. Unknown keys are rejected.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use physnet::operators::{LinearOperator, OperatorKind};
use physnet::optim::OptimizerConfig;
use physnet::training::Variant;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum VariantSelection {
    All,
    Vanilla,
    Informed,
    Constrained,
}

impl VariantSelection {
    pub fn variants(self) -> Vec<Variant> {
        match self {
            Self::All => Variant::ALL.to_vec(),
            Self::Vanilla => vec![Variant::Vanilla],
            Self::Informed => vec![Variant::PhysicsInformed],
            Self::Constrained => vec![Variant::PhysicsConstrained],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub variant: VariantSelection,
    pub output: OutputConfig,
    pub data: DataConfig,
    pub operator: OperatorConfig,
    pub train: TrainSection,
    pub gp: GpSection,
    pub correspondence: CorrespondenceSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub dense_points: usize,
    pub svg: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub omega: f64,
    pub phi: f64,
    pub n_points: usize,
    pub noise_frac: f64,
    pub lo: f64,
    pub hi: f64,
}

/// The wave number defaults to the data frequency when `nu` is absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorConfig {
    pub kind: OperatorKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub iterations: usize,
    pub n_hidden: usize,
    pub lambda: f64,
    pub n_pivots: usize,
    pub learn_frequency: bool,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpSection {
    pub enabled: bool,
    pub noise_variance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrespondenceSection {
    pub enabled: bool,
    pub n_samples: usize,
    pub grid_points: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            variant: VariantSelection::All,
            output: OutputConfig::default(),
            data: DataConfig::default(),
            operator: OperatorConfig::default(),
            train: TrainSection::default(),
            gp: GpSection::default(),
            correspondence: CorrespondenceSection::default(),
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), dense_points: 400, svg: true }
    }
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { omega: 0.51, phi: 0.50001, n_points: 11, noise_frac: 0.2, lo: 0.0, hi: 4.0 * PI }
    }
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self { kind: OperatorKind::Helmholtz, nu: None }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            iterations: 2000,
            n_hidden: 50,
            lambda: 0.1,
            n_pivots: 100,
            learn_frequency: false,
            optimizer: OptimizerKind::Adam,
            lr: 0.02,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl Default for GpSection {
    fn default() -> Self {
        Self { enabled: true, noise_variance: 0.04 }
    }
}

impl Default for CorrespondenceSection {
    fn default() -> Self {
        Self { enabled: true, n_samples: 100_000, grid_points: 5 }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        Ok(toml::to_string(self)?)
    }

    /// Copy with every derived default written out explicitly.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        out.operator.nu = Some(self.nu());
        out
    }

    pub fn nu(&self) -> f64 {
        match self.operator.kind {
            OperatorKind::Helmholtz => self.operator.nu.unwrap_or(self.data.omega),
            _ => self.operator.nu.unwrap_or(0.0),
        }
    }

    pub fn operator(&self) -> CliResult<LinearOperator> {
        Ok(LinearOperator::new(self.operator.kind, self.nu())?)
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        let t = &self.train;
        match t.optimizer {
            OptimizerKind::Adam => OptimizerConfig::Adam { lr: t.lr, beta1: t.beta1, beta2: t.beta2, eps: t.eps },
            OptimizerKind::Sgd => OptimizerConfig::Sgd { lr: t.lr },
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let d = &self.data;
        if !(d.lo.is_finite() && d.hi.is_finite() && d.lo < d.hi) {
            return Err(CliError::Config(format!("data domain [{}, {}] is not a finite interval", d.lo, d.hi)));
        }
        if self.output.dense_points < 2 {
            return Err(CliError::Config("output.dense_points must be >= 2".into()));
        }
        if self.correspondence.enabled && self.correspondence.grid_points == 0 {
            return Err(CliError::Config("correspondence.grid_points must be >= 1".into()));
        }
        if !(self.gp.noise_variance >= 0.0 && self.gp.noise_variance.is_finite()) {
            return Err(CliError::Config("gp.noise_variance must be finite and >= 0".into()));
        }
        self.operator()?;
        self.optimizer().validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml("sead = 1").is_err());
        assert!(ExperimentConfig::from_toml("[train]\niteration = 5").is_err());
        assert!(ExperimentConfig::from_toml("[plot]\nx = 1").is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = ExperimentConfig::from_toml("seed = 4\nvariant = \"constrained\"\n[data]\nomega = 0.7\n").unwrap();
        let resolved = cfg.resolved();
        assert_eq!(resolved.operator.nu, Some(0.7));
        let back = ExperimentConfig::from_toml(&resolved.to_toml().unwrap()).unwrap();
        assert_eq!(back, resolved);
        assert_eq!(back.data.hi.to_bits(), (4.0 * PI).to_bits());
    }

    #[test]
    fn explicit_nu_overrides_omega() {
        let cfg = ExperimentConfig::from_toml("[operator]\nkind = \"helmholtz\"\nnu = 1.5\n").unwrap();
        assert_eq!(cfg.nu(), 1.5);
    }
}
