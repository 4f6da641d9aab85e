use std::sync::{Arc, OnceLock};

use cfextract_core::attack::{
    build_transfer_set, collect_transfer, run_baseline, run_scenario, AdversaryConfig, ArchKnowledge,
    DataKnowledgeKind, Deployment, Oracle, Provenance, Scenario, TransferSet,
};
use cfextract_core::dataset::{synthetic, Instance, SplitSpec};
use cfextract_core::explainer::{CfConfig, DistanceWeights};
use cfextract_core::neuralnet::{Dense, MlpModel, MlpSpec, OptimizerKind};
use cfextract_core::Error;
use ndarray::{arr1, arr2};

fn target_spec() -> MlpSpec {
    MlpSpec {
        learning_rate: 0.01,
        ..MlpSpec::new(vec![12, 8], OptimizerKind::Adam, 0.0, 40).with_seed(3)
    }
}

fn moons() -> &'static Deployment {
    static DEPLOYMENT: OnceLock<Deployment> = OnceLock::new();
    DEPLOYMENT.get_or_init(|| {
        let data = synthetic::two_moons(1500, 0.15, 21).unwrap();
        Deployment::train_target(&data, &SplitSpec::standard(4), &target_spec()).unwrap().0
    })
}

fn adversary(budget: usize, k: usize, seed: u64) -> AdversaryConfig {
    AdversaryConfig {
        data_knowledge: DataKnowledgeKind::Full,
        arch_knowledge: ArchKnowledge::Known,
        explainer_uses_training_data: true,
        query_budget: budget,
        cf_config: CfConfig::default().with_k(k),
        repetitions: 3,
        seed,
    }
}

/// logit = 20 * (x1 + x2 - 1)
fn linear_target() -> MlpModel {
    let spec = MlpSpec::new(vec![2], OptimizerKind::Adam, 0.0, 1);
    let hidden = Dense {
        weights: arr2(&[[1.0, -1.0], [1.0, -1.0]]),
        bias: arr1(&[-1.0, 1.0]),
    };
    let out = Dense {
        weights: arr2(&[[20.0], [-20.0]]),
        bias: arr1(&[0.0]),
    };
    MlpModel::from_layers(spec, 2, vec![hidden, out]).unwrap()
}

#[test]
fn counterfactual_rows_cross_the_known_boundary() {
    let schema = Arc::new(synthetic::linear_schema());
    let model = linear_target();
    let weights = DistanceWeights::unit(schema.clone());
    let oracle = Oracle::new(&model, &weights, CfConfig::default());
    let queries: Vec<Instance> = [(0.1, 0.2), (0.8, 0.7), (0.3, 0.5)]
        .iter()
        .map(|&(a, b)| Instance::from_encoded(&schema, vec![a, b]).unwrap())
        .collect();
    let t = build_transfer_set(&oracle, &queries, 5).unwrap();
    assert_eq!(t.len(), 6);
    assert_eq!(t.invalid_counterfactuals, 0);
    assert_eq!(t.class_counts(), [3, 3]);
    let side = |x: &Instance| x.encoded[0] + x.encoded[1] > 1.0;
    for i in 0..t.len() {
        let origin = &t.instances[t.origin[i]];
        match t.provenance[i] {
            Provenance::Query => assert_eq!(t.labels[i], u8::from(side(&t.instances[i]))),
            Provenance::Counterfactual => {
                assert_ne!(side(&t.instances[i]), side(origin));
                assert_ne!(t.labels[i], t.labels[t.origin[i]]);
            }
        }
    }
    assert_eq!(oracle.prediction_calls(), 3);
    assert_eq!(oracle.explanation_calls(), 3);
}

/// Queries of each class whose counterfactual was dropped (k = 1).
fn invalid_by_origin_class(t: &TransferSet) -> [usize; 2] {
    let mut out = [0; 2];
    for i in 0..t.len() {
        if t.provenance[i] == Provenance::Query {
            out[t.labels[i] as usize] += 1;
        } else {
            out[t.labels[t.origin[i]] as usize] -= 1;
        }
    }
    out
}

#[test]
fn transfer_set_sizes_and_accounting() {
    let d = moons();
    for k in [1, 5] {
        let c = collect_transfer(d, &adversary(40, k, 8), 1).unwrap();
        let t = &c.transfer;
        assert_eq!(c.prediction_calls, 40);
        assert_eq!(c.explanation_calls, 40);
        assert_eq!(t.n_queries(), 40);
        assert_eq!(t.len() + t.invalid_counterfactuals, 40 * (1 + k));
        for i in 0..t.len() {
            let x = &t.instances[i];
            match t.provenance[i] {
                Provenance::Query => assert_eq!(t.labels[i], d.model.predict(x).unwrap()),
                Provenance::Counterfactual => {
                    assert_eq!(t.labels[i], d.model.predict(x).unwrap());
                    assert_ne!(t.labels[i], t.labels[t.origin[i]]);
                }
            }
        }
        if k == 1 {
            let [zeros, ones] = t.class_counts();
            let invalid = invalid_by_origin_class(t);
            assert_eq!(invalid[0] + invalid[1], t.invalid_counterfactuals);
            assert_eq!(zeros.abs_diff(ones), invalid[0].abs_diff(invalid[1]));
        }
    }
}

#[test]
fn label_only_full_pool_is_the_baseline() {
    let d = moons();
    let mut adv = adversary(d.pool.len(), 0, 17);
    adv.repetitions = 2;
    let scenario = run_scenario(Scenario::S1, d, &adv).unwrap();
    let baseline = run_baseline(d, ArchKnowledge::Known, 2, 17).unwrap();
    for (a, b) in scenario.outcomes.iter().zip(&baseline.outcomes) {
        assert_eq!(a.surrogate, b.surrogate);
        assert_eq!(a.fidelity, b.fidelity);
        assert_eq!(a.queries_used, d.pool.len());
        assert_eq!(a.explanation_calls, 0);
    }
}

#[test]
fn scenarios_are_reproducible() {
    let d = moons();
    let a = run_scenario(Scenario::S1, d, &adversary(30, 1, 5)).unwrap();
    let b = run_scenario(Scenario::S1, d, &adversary(30, 1, 5)).unwrap();
    assert_eq!(a.outcomes.len(), 3);
    for (x, y) in a.outcomes.iter().zip(&b.outcomes) {
        assert_eq!(x.surrogate, y.surrogate);
        assert_eq!(x.fidelity, y.fidelity);
        assert_eq!(x.seed, y.seed);
    }
    assert_eq!(a.outcomes[0].seed, 5 ^ 1);
}

#[test]
fn counterfactuals_beat_labels_alone_on_the_same_queries() {
    let d = moons();
    let (mut cf_total, mut lo_total) = (0.0, 0.0);
    for budget in [10, 20, 50, 100] {
        let mut with_cf = adversary(budget, 1, 30);
        with_cf.repetitions = 10;
        let mut labels_only = with_cf.clone();
        labels_only.cf_config.k = 0;
        cf_total += run_scenario(Scenario::S1, d, &with_cf).unwrap().mean_fidelity;
        lo_total += run_scenario(Scenario::S1, d, &labels_only).unwrap().mean_fidelity;
    }
    assert!(cf_total >= lo_total, "{cf_total} vs {lo_total}");
}

#[test]
fn unknown_architecture_with_the_true_spec_is_competitive() {
    let d = moons();
    let mut known = adversary(60, 1, 40);
    known.repetitions = 10;
    let other = MlpSpec {
        learning_rate: 0.01,
        ..MlpSpec::new(vec![3], OptimizerKind::Rmsprop, 0.01, 5)
    };
    let unknown = AdversaryConfig {
        arch_knowledge: ArchKnowledge::Unknown {
            candidates: vec![other, target_spec()],
        },
        ..known.clone()
    };
    let k = run_scenario(Scenario::S1, d, &known).unwrap();
    let u = run_scenario(Scenario::S1, d, &unknown).unwrap();
    assert!(u.mean_fidelity >= k.mean_fidelity - 0.03, "{} vs {}", u.mean_fidelity, k.mean_fidelity);
}

#[test]
fn configuration_errors() {
    let d = moons();
    let adv = adversary(10, 1, 1);
    assert!(matches!(run_scenario(Scenario::S2, d, &adv), Err(Error::Config(_))));
    assert!(matches!(run_scenario(Scenario::S5, d, &adv), Err(Error::Config(_))));
    let empty = AdversaryConfig {
        arch_knowledge: ArchKnowledge::Unknown { candidates: vec![] },
        ..adv.clone()
    };
    assert!(run_scenario(Scenario::S1, d, &empty).is_err());
    assert!(matches!(
        run_scenario(Scenario::S1, d, &adversary(d.pool.len() + 1, 1, 1)),
        Err(Error::PoolTooSmall { .. })
    ));
}

#[test]
fn single_row_pool_baseline_is_degenerate() {
    let d = moons();
    let tiny = Deployment::new(d.model.clone(), d.train.clone(), d.test.clone(), d.pool.subset(&[0]).unwrap()).unwrap();
    assert!(matches!(
        run_baseline(&tiny, ArchKnowledge::Known, 1, 0),
        Err(Error::SingleClass(_))
    ));
}

#[test]
fn marginal_and_uniform_scenarios_run() {
    let d = moons();
    for (scenario, kind) in [(Scenario::S2, DataKnowledgeKind::Marginal), (Scenario::S3, DataKnowledgeKind::None)] {
        let adv = AdversaryConfig {
            data_knowledge: kind,
            ..adversary(30, 1, 2)
        };
        let r = run_scenario(scenario, d, &adv).unwrap();
        assert!(r.mean_fidelity > 0.5);
        assert!(r.outcomes.iter().all(|o| o.queries_used == 30));
    }
}

