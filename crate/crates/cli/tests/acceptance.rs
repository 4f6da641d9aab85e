//! Acceptance checks C1 to C10 on the bundled datasets.
//!
//! Runs as a plain binary (`harness = false`): every criterion prints one
//! `PASS` or `FAIL` line, then the process exits non-zero if any failed.
//! Experiments use the shipped configs (master seed 42) so the numbers match
//! what `cfextract run-scenario` reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use cfextract_cli::commands::{self, SyntheticKind};
use cfextract_cli::{ExperimentConfig, Grid};
use cfextract_core::attack::{
    collect_transfer, fit_surrogate, run_baseline, AdversaryConfig, ArchKnowledge, Deployment, Provenance,
    RepetitionTransfer, Scenario, ScenarioReport, TransferSet,
};
use cfextract_core::dataset::synthetic;
use cfextract_core::explainer::{generate, CfConfig, DistanceWeights};
use cfextract_core::gradcheck;
use cfextract_core::metrics::accuracy;
use cfextract_core::neuralnet::{train, Dense, MlpModel, MlpSpec, OptimizerKind};
use cfextract_core::Instance;
use ndarray::{arr1, arr2};

type Outcome = Result<Verdict, Box<dyn std::error::Error>>;
type Criterion = (&'static str, &'static str, fn(&mut Shared) -> Outcome);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Outcome {
    Ok(Verdict {
        pass,
        detail: detail.into(),
    })
}

fn pct(rate: f64) -> String {
    format!("{:.2}", 100.0 * rate)
}

const REPETITIONS: usize = 10;
const BUDGETS: [usize; 4] = [100, 250, 500, 1000];

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn shipped_config(name: &str) -> ExperimentConfig {
    let root = repo_root();
    let mut c = ExperimentConfig::from_json_file(root.join("configs").join(name)).expect("shipped config parses");
    c.dataset = root.join(&c.dataset);
    c.schema = root.join(&c.schema);
    c
}

/// Per-transfer record for the balance check.
struct Balance {
    label: String,
    counts: [usize; 2],
    invalid: usize,
    invalid_by_class: [usize; 2],
}

fn balance_of(label: String, t: &TransferSet) -> Balance {
    let mut by_class = [0usize; 2];
    for i in 0..t.len() {
        if t.provenance[i] == Provenance::Query {
            by_class[t.labels[i] as usize] += 1;
        } else {
            by_class[t.labels[t.origin[i]] as usize] -= 1;
        }
    }
    Balance {
        label,
        counts: t.class_counts(),
        invalid: t.invalid_counterfactuals,
        invalid_by_class: by_class,
    }
}

struct Lab {
    config: ExperimentConfig,
    deployment: Deployment,
    balances: Vec<Balance>,
}

impl Lab {
    fn adversary(&self, scenario: Scenario, budget: usize, k: usize) -> AdversaryConfig {
        AdversaryConfig {
            data_knowledge: scenario.data_knowledge(),
            arch_knowledge: ArchKnowledge::Known,
            explainer_uses_training_data: true,
            query_budget: budget,
            cf_config: CfConfig { k, ..self.config.cf.clone() },
            repetitions: REPETITIONS,
            seed: self.config.seed,
        }
    }

    fn transfers(&mut self, scenario: Scenario, budget: usize, k: usize) -> cfextract_core::Result<Vec<RepetitionTransfer>> {
        let adv = self.adversary(scenario, budget, k);
        adv.validate_for(scenario)?;
        let out = (1..=REPETITIONS)
            .map(|r| collect_transfer(&self.deployment, &adv, r))
            .collect::<cfextract_core::Result<Vec<_>>>()?;
        if k == 1 {
            let name = self.deployment.train.schema().name().to_string();
            for t in &out {
                let label = format!("{name}/{scenario}/|Q|={budget}/rep {}", t.repetition);
                self.balances.push(balance_of(label, &t.transfer));
            }
        }
        Ok(out)
    }

    fn fit(&self, transfers: &[RepetitionTransfer], arch: &ArchKnowledge) -> cfextract_core::Result<ScenarioReport> {
        let outcomes = transfers
            .iter()
            .map(|t| fit_surrogate(&self.deployment, arch, t))
            .collect::<cfextract_core::Result<Vec<_>>>()?;
        Ok(ScenarioReport::from_outcomes(outcomes))
    }

    fn run(&mut self, scenario: Scenario, budget: usize, k: usize) -> cfextract_core::Result<ScenarioReport> {
        let t = self.transfers(scenario, budget, k)?;
        self.fit(&t, &ArchKnowledge::Known)
    }
}

/// Results shared between criteria.
#[derive(Default)]
struct Shared {
    adult: Option<Lab>,
    compas: Option<Lab>,
    adult_s1: Vec<(usize, ScenarioReport)>,
    adult_s1_1000: Vec<RepetitionTransfer>,
}

impl Shared {
    fn adult_s1(&self, budget: usize) -> Option<&ScenarioReport> {
        self.adult_s1.iter().find(|(b, _)| *b == budget).map(|(_, r)| r)
    }
}

fn lab(config: ExperimentConfig) -> Result<(Lab, f64, f64), Box<dyn std::error::Error>> {
    let data = commands::load_data(&config)?;
    let (deployment, report) = Deployment::train_target(&data, &config.split_spec(), &config.target_spec()?)?;
    let train_acc = report.final_train_accuracy;
    let test_acc = accuracy(&deployment.model, &deployment.test)?.accuracy;
    Ok((
        Lab {
            config,
            deployment,
            balances: Vec::new(),
        },
        train_acc,
        test_acc,
    ))
}

fn c1(shared: &mut Shared) -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (file, reference) in [
        ("adult_s1.json", 0.8470),
        ("compas_s1.json", 0.6630),
        ("default_credit_s1.json", 0.8070),
    ] {
        let config = shipped_config(file);
        let name = file.trim_end_matches("_s1.json");
        if !config.dataset.exists() {
            pass = false;
            parts.push(format!("{name}: {} not present", config.dataset.display()));
            continue;
        }
        let (l, _, test_acc) = lab(config)?;
        let ok = (test_acc - reference).abs() <= 0.02;
        pass &= ok;
        parts.push(format!("{name} test {} (ref {})", pct(test_acc), pct(reference)));
        match name {
            "adult" => shared.adult = Some(l),
            "compas" => shared.compas = Some(l),
            _ => {}
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 600.0;
    parts.push(format!("{secs:.0}s"));
    verdict(pass, parts.join("; "))
}

fn c2(shared: &mut Shared) -> Outcome {
    let adult = shared.adult.as_ref().ok_or("Adult target unavailable")?;
    let attack = shared.adult_s1(250).ok_or("S1 Adult |Q|=250 not run")?;
    let baseline = run_baseline(&adult.deployment, ArchKnowledge::Known, REPETITIONS, adult.config.seed)?;
    let pool = adult.deployment.pool.len();
    let pass = attack.mean_fidelity >= 0.88 && attack.mean_fidelity > baseline.mean_fidelity;
    verdict(
        pass,
        format!(
            "CF |Q|=250 fidelity {} vs baseline |Q|={pool} fidelity {}",
            pct(attack.mean_fidelity),
            pct(baseline.mean_fidelity)
        ),
    )
}

/// Non-decreasing up to a single drop of at most 0.5 pp.
fn monotone_enough(means: &[f64]) -> bool {
    let drops: Vec<f64> = means.windows(2).map(|w| w[0] - w[1]).filter(|&d| d > 0.0).collect();
    drops.is_empty() || (drops.len() == 1 && drops[0] <= 0.005)
}

fn c3(shared: &mut Shared) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    {
        let adult = shared.adult.as_mut().ok_or("Adult target unavailable")?;
        for budget in BUDGETS {
            let t = adult.transfers(Scenario::S1, budget, 1)?;
            let report = adult.fit(&t, &ArchKnowledge::Known)?;
            shared.adult_s1.push((budget, report));
            if budget == 1000 {
                shared.adult_s1_1000 = t;
            }
        }
        let means: Vec<f64> = shared.adult_s1.iter().map(|(_, r)| r.mean_fidelity).collect();
        pass &= monotone_enough(&means);
        parts.push(format!("adult [{}]", means.iter().map(|&m| pct(m)).collect::<Vec<_>>().join(", ")));
    }
    let compas = shared.compas.as_mut().ok_or("COMPAS target unavailable")?;
    let mut means = Vec::new();
    for budget in BUDGETS {
        means.push(compas.run(Scenario::S1, budget, 1)?.mean_fidelity);
    }
    pass &= monotone_enough(&means);
    parts.push(format!("compas [{}]", means.iter().map(|&m| pct(m)).collect::<Vec<_>>().join(", ")));
    verdict(pass, parts.join("; "))
}

fn c4(shared: &mut Shared) -> Outcome {
    let s1 = shared.adult_s1(1000).ok_or("S1 Adult |Q|=1000 not run")?.mean_fidelity;
    let adult = shared.adult.as_mut().ok_or("Adult target unavailable")?;
    let s2 = adult.run(Scenario::S2, 1000, 1)?.mean_fidelity;
    let s3 = adult.run(Scenario::S3, 1000, 1)?.mean_fidelity;
    let pass = s1 - s3 >= 0.03 && s2 <= s1.max(s3) && s2 >= s1.min(s3);
    verdict(pass, format!("S1 {} / S2 {} / S3 {}", pct(s1), pct(s2), pct(s3)))
}

fn c5(shared: &mut Shared) -> Outcome {
    let k1 = shared.adult_s1(500).ok_or("S1 Adult |Q|=500 not run")?.mean_fidelity;
    let adult = shared.adult.as_mut().ok_or("Adult target unavailable")?;
    let report = adult.run(Scenario::S4, 500, 5)?;
    let k5 = report.mean_fidelity;
    let n = report.outcomes.len() as f64;
    let invalid = report.outcomes.iter().map(|o| o.invalid_counterfactuals as f64 / 2500.0).sum::<f64>() / n;
    let positive = report
        .outcomes
        .iter()
        .map(|o| o.label_counts[1] as f64 / o.transfer_rows as f64)
        .sum::<f64>()
        / n;
    verdict(
        k5 >= k1,
        format!(
            "|Q|=500 k=5 {} vs k=1 {}; k=5 invalid {}%, positive rows {}%",
            pct(k5),
            pct(k1),
            pct(invalid),
            pct(positive)
        ),
    )
}

fn c6(shared: &mut Shared) -> Outcome {
    let known = shared.adult_s1(1000).ok_or("S1 Adult |Q|=1000 not run")?.mean_fidelity;
    let adult = shared.adult.as_ref().ok_or("Adult target unavailable")?;
    let arch = adult.config.arch_knowledge(cfextract_cli::ArchMode::Unknown)?;
    let unknown = adult.fit(&shared.adult_s1_1000, &arch)?;
    let chosen: Vec<String> = unknown
        .outcomes
        .iter()
        .map(|o| {
            o.chosen_spec
                .hidden_layers
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join("-")
        })
        .collect();
    let gap = (known - unknown.mean_fidelity).abs();
    verdict(
        gap <= 0.02,
        format!(
            "known {} vs unknown {} (chosen {})",
            pct(known),
            pct(unknown.mean_fidelity),
            chosen.join(",")
        ),
    )
}

fn c7(_: &mut Shared) -> Outcome {
    let p = gradcheck::mlp_parameter_gradients(150, 1)?;
    let i = gradcheck::mlp_input_gradients(150, 2)?;
    let o = gradcheck::cf_objective_gradients(150, 3)?;
    let pass = p.cases >= 100
        && i.cases >= 100
        && o.cases >= 100
        && p.max_relative_error < 1e-4
        && i.max_relative_error < 1e-4
        && o.max_relative_error < 1e-3;
    verdict(
        pass,
        format!(
            "max rel err: params {:.1e} ({}), inputs {:.1e} ({}), objective {:.1e} ({})",
            p.max_relative_error, p.cases, i.max_relative_error, i.cases, o.max_relative_error, o.cases
        ),
    )
}

/// logit = 20 * (x1 + x2 - 1).
fn linear_model() -> cfextract_core::Result<MlpModel> {
    let hidden = Dense {
        weights: arr2(&[[1.0, -1.0], [1.0, -1.0]]),
        bias: arr1(&[-1.0, 1.0]),
    };
    let out = Dense {
        weights: arr2(&[[20.0], [-20.0]]),
        bias: arr1(&[0.0]),
    };
    MlpModel::from_layers(MlpSpec::new(vec![2], OptimizerKind::Adam, 0.0, 1), 2, vec![hidden, out])
}

fn c8(_: &mut Shared) -> Outcome {
    let train_set = synthetic::two_moons(1000, 0.1, 11)?;
    let test_set = synthetic::two_moons(200, 0.1, 12)?;
    let spec = MlpSpec {
        learning_rate: 0.01,
        ..MlpSpec::new(vec![16, 16], OptimizerKind::Adam, 0.0, 150).with_seed(5)
    };
    let (model, _) = train(&spec, &train_set)?;
    let weights = DistanceWeights::from_mad(&train_set)?;
    let cfg = CfConfig::default();
    let mut valid = 0;
    for (i, x) in test_set.instances().iter().enumerate() {
        valid += generate(&model, x, &cfg, &weights, i as u64)?.n_valid();
    }
    let validity = valid as f64 / test_set.len() as f64;

    let linear = linear_model()?;
    let unit = DistanceWeights::unit(Arc::new(synthetic::linear_schema()));
    let negatives: Vec<Instance> = synthetic::linear(200, 0.15, 8)?
        .instances()
        .iter()
        .filter(|x| x.encoded[0] + x.encoded[1] < 1.0)
        .take(20)
        .cloned()
        .collect();
    let (mut crossed, mut worst_ratio) = (0, 0.0f64);
    for (i, x0) in negatives.iter().enumerate() {
        let r = generate(&linear, x0, &cfg, &unit, i as u64)?;
        let c = &r.counterfactuals[0];
        if linear.predict(c)? == 1 {
            crossed += 1;
        }
        let l1: f64 = c.encoded.iter().zip(&x0.encoded).map(|(a, b)| (a - b).abs()).sum();
        let analytic = 1.0 - x0.encoded[0] - x0.encoded[1];
        worst_ratio = worst_ratio.max(l1 / analytic);
    }
    let pass = validity >= 0.95 && crossed == negatives.len() && worst_ratio <= 2.0;
    verdict(
        pass,
        format!(
            "two-moons validity {}%; linear {crossed}/{} crossed, worst distance ratio {worst_ratio:.2}",
            pct(validity),
            negatives.len()
        ),
    )
}

fn c9(shared: &mut Shared) -> Outcome {
    let mut records: Vec<&Balance> = Vec::new();
    for l in [&shared.adult, &shared.compas].into_iter().flatten() {
        records.extend(&l.balances);
    }
    if records.is_empty() {
        return verdict(false, "no k=1 transfer sets were collected");
    }
    let mismatched: Vec<&&Balance> = records
        .iter()
        .filter(|b| b.counts[0].abs_diff(b.counts[1]) != b.invalid)
        .collect();
    let identity_holds = records
        .iter()
        .all(|b| b.counts[0].abs_diff(b.counts[1]) == b.invalid_by_class[0].abs_diff(b.invalid_by_class[1]));
    let mut detail = format!(
        "{} k=1 transfer sets, {} with |imbalance| != invalid count; |imbalance| == |invalid(0) - invalid(1)| holds for {}",
        records.len(),
        mismatched.len(),
        if identity_holds { "all" } else { "NOT all" }
    );
    if let Some(b) = mismatched.first() {
        detail.push_str(&format!(
            "; e.g. {}: counts {:?}, invalid {} (by query class {:?})",
            b.label, b.counts, b.invalid, b.invalid_by_class
        ));
    }
    verdict(mismatched.is_empty() && identity_holds, detail)
}

fn file_bytes(path: &Path) -> Result<Vec<u8>, Box<dyn std::error::Error>> {
    fs::read(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn c10(_: &mut Shared) -> Outcome {
    let dir = tempfile::tempdir()?;
    let mut compared = Vec::new();
    let mut identical = true;

    let data = dir.path().join("moons.csv");
    let schema = commands::cmd_gen_synthetic(SyntheticKind::TwoMoons, 1000, 0.1, 3, &data)?;
    let mut synthetic = shipped_config("synthetic.json");
    synthetic.dataset = data;
    synthetic.schema = schema;

    let mut compas = shipped_config("compas_s1.json");
    compas.grid = Grid {
        query_budgets: vec![100],
        ..compas.grid.clone()
    };
    compas.repetitions = 2;
    let mut compas_s3 = compas.clone();
    compas_s3.scenario = Scenario::S3;
    compas_s3.grid.explainer_uses_training_data = vec![true];

    for (name, base) in [("synthetic", synthetic), ("compas", compas), ("compas_s3", compas_s3)] {
        let mut outputs: Vec<Vec<Vec<u8>>> = Vec::new();
        for run in 0..2 {
            let mut c = base.clone();
            c.out_dir = dir.path().join(format!("{name}_{run}"));
            commands::cmd_train_target(&c)?;
            commands::cmd_run_scenario(&c, None)?;
            let stem = c.scenario.to_string();
            outputs.push(
                [
                    "target_report.csv".to_string(),
                    "target_model.json".to_string(),
                    format!("{stem}_report.csv"),
                    format!("{stem}_repetitions.json"),
                ]
                .iter()
                .map(|f| file_bytes(&c.out_dir.join(f)))
                .collect::<Result<_, _>>()?,
            );
        }
        let same = outputs[0] == outputs[1];
        identical &= same;
        compared.push(format!("{name} {}", if same { "identical" } else { "DIFFERENT" }));
    }
    verdict(identical, format!("two runs each: {}", compared.join(", ")))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("C1", "target test accuracy within 2 pp", c1),
        ("C3", "S1 fidelity monotone in budget", c3),
        ("C2", "S1 |Q|=250 fidelity >= 88% and above baseline", c2),
        ("C4", "knowledge ordering S1 > S2 > S3 at |Q|=1000", c4),
        ("C5", "k=5 >= k=1 at |Q|=500", c5),
        ("C6", "known vs unknown architecture within 2 pp", c6),
        ("C7", "gradients match finite differences", c7),
        ("C8", "counterfactual validity and linear boundary", c8),
        ("C9", "k=1 transfer-set imbalance equals invalid count", c9),
        ("C10", "byte-identical reruns", c10),
    ];
    let mut shared = Shared::default();
    let mut lines = Vec::new();
    for (id, title, check) in criteria {
        let start = Instant::now();
        let (pass, detail) = match check(&mut shared) {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let line = format!(
            "{} {id}: {title} ({detail}) [{:.0}s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        println!("{line}");
        lines.push((id, pass, line));
    }
    lines.sort_by_key(|(id, _, _)| id[1..].parse::<u32>().unwrap_or(0));
    println!("\nsummary:");
    for (_, _, line) in &lines {
        println!("{line}");
    }
    let failed = lines.iter().filter(|(_, pass, _)| !pass).count();
    println!("{} passed, {failed} failed", lines.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
