//! Subcommand implementations, usable without the binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use cfextract_core::attack::{
    baseline_config, collect_transfer, fit_surrogate, run_scenario, trace_explanations, Deployment, ExtractionOutcome,
    Scenario, ScenarioReport,
};
use cfextract_core::dataset::{load_dataset_with_report, split, synthetic, Dataset, FeatureSchema};
use cfextract_core::explainer::write_traces_csv;
use cfextract_core::metrics::{accuracy, percent};
use cfextract_core::neuralnet::{train, MlpModel, MlpSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ArchMode, Cell, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::report::{write_csv_file, write_json, CellRecord, ReportRow};

/// Queries per trace file written by `--cf-trace`.
pub const TRACE_QUERIES: usize = 50;

pub fn load_data(config: &ExperimentConfig) -> Result<Dataset> {
    for p in [&config.schema, &config.dataset] {
        if !p.exists() {
            return Err(CliError::Config(format!("{} does not exist", p.display())));
        }
    }
    let schema = FeatureSchema::from_json_file(&config.schema)?;
    let (data, report) = load_dataset_with_report(&config.dataset, &schema)?;
    if report.dropped_missing > 0 {
        log::info!("dropped {} rows with missing values", report.dropped_missing);
    }
    Ok(data)
}

fn create_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn describe(spec: &MlpSpec) -> String {
    let hidden: Vec<String> = spec.hidden_layers.iter().map(usize::to_string).collect();
    format!("{}/{:?}/l1={}/epochs={}", hidden.join("-"), spec.optimizer, spec.l1_lambda, spec.epochs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetSummary {
    pub dataset: String,
    pub architecture: String,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub n_pool: usize,
    pub seed: u64,
    pub model_path: PathBuf,
}

/// Splits the data, trains the target, saves it and writes
/// `target_report.csv` to the output directory.
pub fn cmd_train_target(config: &ExperimentConfig) -> Result<TargetSummary> {
    let data = load_data(config)?;
    let (tr, test, pool) = split(&data, &config.split_spec())?;
    let spec = config.target_spec()?;
    let (model, report) = train(&spec, &tr)?;
    log::info!("trained target in {:.1?}", report.wall_time);
    create_out_dir(&config.out_dir)?;
    let model_path = config.model_path();
    if let Some(parent) = model_path.parent() {
        create_out_dir(parent)?;
    }
    model.save_json(&model_path)?;
    let summary = TargetSummary {
        dataset: data.schema().name().to_string(),
        architecture: describe(&spec),
        train_accuracy: accuracy(&model, &tr)?.accuracy,
        test_accuracy: accuracy(&model, &test)?.accuracy,
        n_train: tr.len(),
        n_test: test.len(),
        n_pool: pool.len(),
        seed: config.seed,
        model_path,
    };
    let path = config.out_dir.join("target_report.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "dataset",
        "architecture",
        "train_accuracy",
        "test_accuracy",
        "n_train",
        "n_test",
        "n_pool",
        "seed",
    ])?;
    w.write_record([
        summary.dataset.clone(),
        summary.architecture.clone(),
        percent(summary.train_accuracy),
        percent(summary.test_accuracy),
        summary.n_train.to_string(),
        summary.n_test.to_string(),
        summary.n_pool.to_string(),
        summary.seed.to_string(),
    ])?;
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(summary)
}

/// Re-creates the splits and loads the trained target.
pub fn load_deployment(config: &ExperimentConfig) -> Result<Deployment> {
    let model_path = config.model_path();
    if !model_path.exists() {
        return Err(CliError::Config(format!(
            "target model {} not found; run train-target first",
            model_path.display()
        )));
    }
    let data = load_data(config)?;
    let (tr, test, pool) = split(&data, &config.split_spec())?;
    let model = MlpModel::load_json(&model_path)?;
    Ok(Deployment::new(model, tr, test, pool)?)
}

/// Runs every grid cell. Cells that differ only in architecture knowledge
/// share their transfer sets, which are identical by construction.
pub fn run_cells(config: &ExperimentConfig, deployment: &Deployment) -> Result<Vec<(Cell, ScenarioReport)>> {
    let cells = config.cells();
    let mut results: Vec<Option<ScenarioReport>> = vec![None; cells.len()];
    let mut done = vec![false; cells.len()];
    for i in 0..cells.len() {
        if done[i] {
            continue;
        }
        let same_transfer: Vec<usize> = (i..cells.len())
            .filter(|&j| {
                let (a, b) = (&cells[i], &cells[j]);
                !done[j]
                    && (a.mad, a.query_budget, a.k) == (b.mad, b.query_budget, b.k)
                    && a.lambda1.to_bits() == b.lambda1.to_bits()
                    && a.lambda2.to_bits() == b.lambda2.to_bits()
            })
            .collect();
        let adversary = config.adversary(&cells[i])?;
        adversary.validate_for(config.scenario)?;
        let archs = same_transfer
            .iter()
            .map(|&j| config.arch_knowledge(cells[j].arch))
            .collect::<Result<Vec<_>>>()?;
        log::info!("running {} cell(s) at budget {}", same_transfer.len(), cells[i].query_budget);
        let per_repetition: Vec<Vec<ExtractionOutcome>> = (1..=config.repetitions)
            .into_par_iter()
            .map(|r| {
                let collected = collect_transfer(deployment, &adversary, r)?;
                archs
                    .iter()
                    .map(|arch| fit_surrogate(deployment, arch, &collected))
                    .collect::<cfextract_core::Result<Vec<_>>>()
            })
            .collect::<cfextract_core::Result<Vec<_>>>()?;
        for (slot, &j) in same_transfer.iter().enumerate() {
            let outcomes = per_repetition.iter().map(|o| o[slot].clone()).collect();
            results[j] = Some(ScenarioReport::from_outcomes(outcomes));
            done[j] = true;
        }
    }
    Ok(cells
        .into_iter()
        .zip(results)
        .map(|(c, r)| (c, r.expect("every cell is run")))
        .collect())
}

fn scenario_rows(config: &ExperimentConfig, dataset: &str, results: &[(Cell, ScenarioReport)]) -> Vec<ReportRow> {
    results
        .iter()
        .map(|(cell, report)| ReportRow::new(config.scenario, dataset, cell, config.seed, report))
        .collect()
}

/// Runs the configured scenario over the whole grid and writes
/// `<scenario>_report.csv` and `<scenario>_repetitions.json`.
pub fn cmd_run_scenario(config: &ExperimentConfig, cf_trace: Option<&Path>) -> Result<Vec<ReportRow>> {
    let deployment = load_deployment(config)?;
    let dataset = deployment.train.schema().name().to_string();
    let results = run_cells(config, &deployment)?;
    let rows = scenario_rows(config, &dataset, &results);
    create_out_dir(&config.out_dir)?;
    let stem = config.scenario.to_string();
    write_csv_file(&config.out_dir.join(format!("{stem}_report.csv")), &rows)?;
    let records: Vec<CellRecord<'_>> = results
        .iter()
        .map(|(cell, report)| CellRecord {
            scenario: config.scenario,
            dataset: &dataset,
            arch_knowledge: cell.arch,
            mad_flag: cell.mad,
            query_budget: cell.query_budget,
            k: cell.k,
            lambda1: cell.lambda1,
            lambda2: cell.lambda2,
            seed: config.seed,
            outcomes: &report.outcomes,
        })
        .collect();
    write_json(&config.out_dir.join(format!("{stem}_repetitions.json")), &records)?;
    if let Some(path) = cf_trace {
        let first = config.cells()[0];
        let traces = trace_explanations(&deployment, &config.adversary(&first)?, 1, TRACE_QUERIES)?;
        let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        write_traces_csv(
            std::io::BufWriter::new(file),
            traces.iter().enumerate().map(|(i, t)| (i, t.trace.as_slice())),
        )?;
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub dataset: String,
    pub method: &'static str,
    pub arch_knowledge: ArchMode,
    pub mad_flag: bool,
    pub query_budget: usize,
    pub k: usize,
    pub mean_fidelity: f64,
    pub mean_accuracy: f64,
    pub std_fidelity: f64,
    /// Mean fidelity minus the baseline's.
    pub delta_fidelity: f64,
    pub repetitions: usize,
    pub seed: u64,
}

/// Counterfactual attack at every configured budget (first value of the
/// other grid axes) against traditional extraction on the whole pool.
/// Writes `compare_baseline.csv`.
pub fn cmd_compare_baseline(config: &ExperimentConfig) -> Result<Vec<ComparisonRow>> {
    if config.scenario != Scenario::S1 {
        return Err(CliError::Config("compare-baseline runs the S1 attack".into()));
    }
    let deployment = load_deployment(config)?;
    let dataset = deployment.train.schema().name().to_string();
    let g = &config.grid;
    let (arch, mad, k) = (g.arch_knowledge[0], g.explainer_uses_training_data[0], g.k[0]);
    let baseline_adv = baseline_config(
        deployment.pool.len(),
        config.arch_knowledge(arch)?,
        config.repetitions,
        config.seed,
    );
    let baseline = run_scenario(Scenario::S1, &deployment, &baseline_adv)?;
    let mut rows = Vec::new();
    let mut budgets = g.query_budgets.clone();
    budgets.sort_unstable();
    for budget in budgets {
        let cell = Cell {
            arch,
            mad,
            query_budget: budget,
            k,
            lambda1: g.lambda1[0],
            lambda2: g.lambda2[0],
        };
        let report = run_scenario(Scenario::S1, &deployment, &config.adversary(&cell)?)?;
        rows.push(ComparisonRow {
            dataset: dataset.clone(),
            method: "counterfactual",
            arch_knowledge: arch,
            mad_flag: mad,
            query_budget: budget,
            k,
            mean_fidelity: report.mean_fidelity,
            mean_accuracy: report.mean_accuracy,
            std_fidelity: report.std_fidelity,
            delta_fidelity: report.mean_fidelity - baseline.mean_fidelity,
            repetitions: config.repetitions,
            seed: config.seed,
        });
    }
    rows.push(ComparisonRow {
        dataset: dataset.clone(),
        method: "baseline",
        arch_knowledge: arch,
        mad_flag: false,
        query_budget: deployment.pool.len(),
        k: 0,
        mean_fidelity: baseline.mean_fidelity,
        mean_accuracy: baseline.mean_accuracy,
        std_fidelity: baseline.std_fidelity,
        delta_fidelity: 0.0,
        repetitions: config.repetitions,
        seed: config.seed,
    });
    create_out_dir(&config.out_dir)?;
    let path = config.out_dir.join("compare_baseline.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "dataset",
        "method",
        "arch_knowledge",
        "mad_flag",
        "query_budget",
        "k",
        "mean_fidelity",
        "mean_accuracy",
        "std_fidelity",
        "delta_fidelity",
        "repetitions",
        "seed",
    ])?;
    for r in &rows {
        w.write_record([
            r.dataset.clone(),
            r.method.to_string(),
            r.arch_knowledge.as_str().to_string(),
            r.mad_flag.to_string(),
            r.query_budget.to_string(),
            r.k.to_string(),
            percent(r.mean_fidelity),
            percent(r.mean_accuracy),
            percent(r.std_fidelity),
            percent(r.delta_fidelity),
            r.repetitions.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SyntheticKind {
    TwoMoons,
    Linear,
}

/// Writes a synthetic dataset to `out` and its schema next to it as
/// `<stem>.schema.json`. Returns the schema path.
pub fn cmd_gen_synthetic(kind: SyntheticKind, n: usize, noise: f64, seed: u64, out: &Path) -> Result<PathBuf> {
    let data = match kind {
        SyntheticKind::TwoMoons => synthetic::two_moons(n, noise, seed)?,
        SyntheticKind::Linear => synthetic::linear(n, noise, seed)?,
    };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_out_dir(parent)?;
    }
    data.write_csv(out)?;
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("synthetic");
    let schema_path = out.with_file_name(format!("{stem}.schema.json"));
    let schema: &Arc<FeatureSchema> = data.schema();
    schema.to_json_file(&schema_path)?;
    Ok(schema_path)
}
