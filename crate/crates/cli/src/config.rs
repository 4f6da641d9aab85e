//! Declarative experiment description.

use std::path::{Path, PathBuf};

use cfextract_core::attack::{AdversaryConfig, ArchKnowledge, Scenario};
use cfextract_core::dataset::SplitSpec;
use cfextract_core::explainer::CfConfig;
use cfextract_core::neuralnet::MlpSpec;
use cfextract_core::seed::{self, stream};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// The target model: one of the reference architectures or a full spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Reference { architecture: usize },
    Custom(MlpSpec),
}

impl TargetSpec {
    pub fn spec(&self) -> Result<MlpSpec> {
        match self {
            TargetSpec::Reference { architecture } => Ok(MlpSpec::architecture(*architecture)?),
            TargetSpec::Custom(spec) => Ok(spec.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchMode {
    Known,
    Unknown,
}

impl ArchMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ArchMode::Known => "known",
            ArchMode::Unknown => "unknown",
        }
    }
}

fn known_only() -> Vec<ArchMode> {
    vec![ArchMode::Known]
}
fn mad_on() -> Vec<bool> {
    vec![true]
}
fn k_one() -> Vec<usize> {
    vec![1]
}
fn lambda1_default() -> Vec<f64> {
    vec![CfConfig::default().lambda1]
}
fn lambda2_default() -> Vec<f64> {
    vec![CfConfig::default().lambda2]
}

/// Every combination of these values is one report cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub query_budgets: Vec<usize>,
    #[serde(default = "known_only")]
    pub arch_knowledge: Vec<ArchMode>,
    #[serde(default = "mad_on")]
    pub explainer_uses_training_data: Vec<bool>,
    #[serde(default = "k_one")]
    pub k: Vec<usize>,
    #[serde(default = "lambda1_default")]
    pub lambda1: Vec<f64>,
    #[serde(default = "lambda2_default")]
    pub lambda2: Vec<f64>,
}

fn standard_split() -> SplitSpec {
    SplitSpec::standard(0)
}
fn ten() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub dataset: PathBuf,
    pub schema: PathBuf,
    /// Fractions only; the split seed is derived from `seed`.
    #[serde(default = "standard_split")]
    pub split: SplitSpec,
    pub target: TargetSpec,
    pub scenario: Scenario,
    pub grid: Grid,
    /// Explainer settings shared by all cells; k and the lambdas come from
    /// the grid.
    #[serde(default)]
    pub cf: CfConfig,
    #[serde(default = "ten")]
    pub repetitions: usize,
    /// Architectures tried when the target's is unknown. Defaults to the
    /// other reference architectures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<MlpSpec>>,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Target model file; defaults to `<out_dir>/target_model.json`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_path: Option<PathBuf>,
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub arch: ArchMode,
    pub mad: bool,
    pub query_budget: usize,
    pub k: usize,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.query_budgets.is_empty() || g.query_budgets.contains(&0) {
            return Err(CliError::Config("query_budgets must be non-empty and positive".into()));
        }
        if g.arch_knowledge.is_empty()
            || g.explainer_uses_training_data.is_empty()
            || g.k.is_empty()
            || g.lambda1.is_empty()
            || g.lambda2.is_empty()
        {
            return Err(CliError::Config("every grid axis needs at least one value".into()));
        }
        if self.repetitions == 0 {
            return Err(CliError::Config("repetitions must be >= 1".into()));
        }
        self.split.validate()?;
        self.target.spec()?.validate()?;
        if g.arch_knowledge.contains(&ArchMode::Unknown) {
            self.candidate_specs()?;
        }
        Ok(())
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            seed: seed::derive(self.seed, stream::SPLIT),
            ..self.split
        }
    }

    /// Target spec with its training seed derived from the master seed.
    pub fn target_spec(&self) -> Result<MlpSpec> {
        Ok(self.target.spec()?.with_seed(seed::derive(self.seed, stream::TARGET)))
    }

    pub fn candidate_specs(&self) -> Result<Vec<MlpSpec>> {
        match (&self.candidates, &self.target) {
            (Some(c), _) if !c.is_empty() => Ok(c.clone()),
            (Some(_), _) => Err(CliError::Config("candidates must not be empty".into())),
            (None, TargetSpec::Reference { architecture }) => Ok(MlpSpec::candidates_excluding(*architecture)),
            (None, TargetSpec::Custom(_)) => Err(CliError::Config(
                "a custom target with unknown architecture needs an explicit candidates list".into(),
            )),
        }
    }

    pub fn model_path(&self) -> PathBuf {
        self.model_path
            .clone()
            .unwrap_or_else(|| self.out_dir.join("target_model.json"))
    }

    pub fn arch_knowledge(&self, mode: ArchMode) -> Result<ArchKnowledge> {
        Ok(match mode {
            ArchMode::Known => ArchKnowledge::Known,
            ArchMode::Unknown => ArchKnowledge::Unknown {
                candidates: self.candidate_specs()?,
            },
        })
    }

    /// Grid points in report order.
    pub fn cells(&self) -> Vec<Cell> {
        let g = &self.grid;
        let mut cells = Vec::new();
        let mut archs = g.arch_knowledge.clone();
        archs.sort();
        archs.dedup();
        for &arch in &archs {
            for &mad in &g.explainer_uses_training_data {
                for &query_budget in &g.query_budgets {
                    for &k in &g.k {
                        for &lambda1 in &g.lambda1 {
                            for &lambda2 in &g.lambda2 {
                                cells.push(Cell {
                                    arch,
                                    mad,
                                    query_budget,
                                    k,
                                    lambda1,
                                    lambda2,
                                });
                            }
                        }
                    }
                }
            }
        }
        cells
    }

    pub fn adversary(&self, cell: &Cell) -> Result<AdversaryConfig> {
        Ok(AdversaryConfig {
            data_knowledge: self.scenario.data_knowledge(),
            arch_knowledge: self.arch_knowledge(cell.arch)?,
            explainer_uses_training_data: cell.mad,
            query_budget: cell.query_budget,
            cf_config: CfConfig {
                k: cell.k,
                lambda1: cell.lambda1,
                lambda2: cell.lambda2,
                ..self.cf.clone()
            },
            repetitions: self.repetitions,
            seed: self.seed,
        })
    }
}
