mod common;

use common::{acceptance_blobs, blob_config};
use pllac::data::{write_labeled_csv, CandidateSet};
use pllac::harness::{
    aggregate, evaluate_threshold, run_grid, run_threshold_baseline_on_split, run_trials, train_on_split,
    train_on_split_with, ExperimentConfig, GridSpec, ThetaMode, TrialKind,
};
use pllac::risk::{empirical_unbiased_risk, PllBatch, RiskConfig};
use pllac::synth::BlobSpec;

#[test]
fn training_is_deterministic_for_a_seed() {
    let split = acceptance_blobs().with_sizes(200, 200, 200).split(1).unwrap();
    let cfg = ExperimentConfig { epochs: 5, hidden: Some(8), ..blob_config() };
    let a = train_on_split(&split, &cfg, 3).unwrap();
    let b = train_on_split(&split, &cfg, 3).unwrap();
    assert_eq!(a.epochs, b.epochs);
    assert_eq!(a.params.unwrap().to_flat(), b.params.unwrap().to_flat());
    assert_eq!(a.theta_hat, b.theta_hat);
    let c = train_on_split(&split, &cfg, 4).unwrap();
    assert_ne!(a.epochs, c.epochs);
}

#[test]
fn logged_objective_is_the_full_batch_risk() {
    let split = acceptance_blobs().with_sizes(150, 100, 120).split(2).unwrap();
    let cfg = ExperimentConfig { epochs: 3, theta: ThetaMode::Fixed(0.7), lambda: 1.5, t: 2, ..blob_config() };
    let risk = RiskConfig { theta: 0.7, lambda: 1.5, t: 2, pll_loss: cfg.pll_loss, prob_floor: cfg.prob_floor };
    let mut seen = 0;
    let result = train_on_split_with(&split, &cfg, 0, |view| {
        let batch = PllBatch {
            features: split.pll_train.features.view(),
            candidates: &split.pll_train.candidates,
            confidence: view.confidence.weights(),
        };
        let again = empirical_unbiased_risk(view.params, &batch, split.unlabeled.view(), &risk, false).unwrap();
        assert_eq!(again.breakdown, view.record.objective);
        let b = again.breakdown;
        let omega = if b.r_pac < 0.0 { b.r_pac * b.r_pac } else { 0.0 };
        assert!((b.total - (b.pll_term + b.r_pac + 1.5 * omega)).abs() < 1e-12);
        seen += 1;
    })
    .unwrap();
    assert_eq!(seen, 3);
    assert_eq!(result.epochs.iter().map(|e| e.epoch).collect::<Vec<_>>(), vec![1, 2, 3]);
}

#[test]
fn zero_epochs_evaluates_the_initial_model() {
    let split = acceptance_blobs().with_sizes(50, 60, 50).split(0).unwrap();
    let cfg = ExperimentConfig { epochs: 0, theta: ThetaMode::Fixed(0.5), ..blob_config() };
    let r = train_on_split(&split, &cfg, 0).unwrap();
    assert!(r.epochs.is_empty());
    assert_eq!(r.report.confusion.iter().flatten().sum::<u64>(), 60);
    assert!(r.diverged_at_epoch.is_none());
}

#[test]
fn separated_blobs_are_learned() {
    let spec = BlobSpec::default().with_sizes(600, 1000, 1000);
    let cfg = ExperimentConfig { hidden: Some(16), ..blob_config() };
    // with exact labels the task is easy
    let mut supervised = spec.split(5).unwrap();
    supervised.pll_train.candidates = supervised
        .pll_truth
        .iter()
        .map(|&y| CandidateSet::from_labels(spec.known_classes, &[y]).unwrap())
        .collect();
    let sup = train_on_split(&supervised, &ExperimentConfig { theta: ThetaMode::Fixed(0.7), ..cfg.clone() }, 5).unwrap();
    assert!(sup.report.accuracy >= 0.95, "supervised accuracy {}", sup.report.accuracy);

    let split = spec.split(5).unwrap();
    let r = train_on_split(&split, &cfg, 5).unwrap();
    assert!(r.report.accuracy >= 0.90, "accuracy {}", r.report.accuracy);
    assert!((r.theta_hat.unwrap() - 0.7).abs() < 0.15, "theta_hat {:?}", r.theta_hat);
}

#[test]
fn threshold_of_one_predicts_only_the_augmented_class() {
    let split = acceptance_blobs().with_sizes(200, 150, 10).split(3).unwrap();
    let cfg = ExperimentConfig { epochs: 20, ..blob_config() };
    let r = run_threshold_baseline_on_split(&split, &cfg, 0).unwrap();
    assert!(r.theta_hat.is_none());
    let params = r.params.unwrap();
    let k = split.k();
    let rep = evaluate_threshold(&params, split.test_features.view(), &split.test_labels, 1.0).unwrap();
    for row in &rep.confusion {
        assert_eq!(row[..k].iter().sum::<u64>(), 0);
    }
    let rep0 = evaluate_threshold(&params, split.test_features.view(), &split.test_labels, 0.0).unwrap();
    assert!(rep0.confusion.iter().all(|row| row[k] == 0));
}

fn blob_csv(dir: &std::path::Path) -> std::path::PathBuf {
    let spec = acceptance_blobs();
    let data = spec.labeled(400, 11).unwrap();
    let path = dir.join("blobs.csv");
    let names: Vec<String> = vec!["a".into(), "b".into(), "c".into(), "far".into()];
    write_labeled_csv(&path, data.features.view(), &data.labels, &names).unwrap();
    path
}

#[test]
fn aggregation_matches_a_direct_computation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        data: Some(blob_csv(dir.path())),
        ac_class: Some("far".into()),
        epochs: 3,
        trials: 4,
        seed: 10,
        ..blob_config()
    };
    let results = run_trials(&cfg, TrialKind::Pllac);
    let seeds: Vec<u64> = results.iter().map(|r| r.as_ref().unwrap().seed).collect();
    assert_eq!(seeds, vec![10, 11, 12, 13]);
    let agg = aggregate(&results);
    let acc: Vec<f64> = results.iter().map(|r| r.as_ref().unwrap().report.accuracy).collect();
    let mean = acc.iter().sum::<f64>() / 4.0;
    let std = (acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / 3.0).sqrt();
    let stat = agg.accuracy.unwrap();
    assert!((stat.mean - mean).abs() < 1e-12 && (stat.std - std).abs() < 1e-12);
    assert_eq!(agg.trials_ok, 4);
    assert!(agg.failures.is_empty());
}

#[test]
fn grid_records_failures_and_keeps_going() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = GridSpec::single(ExperimentConfig {
        data: Some(blob_csv(dir.path())),
        ac_class: Some("far".into()),
        epochs: 2,
        trials: 2,
        ..blob_config()
    });
    spec.set("lambda", "0,1").unwrap();
    spec.set("theta", "fixed:0.6,kme").unwrap();
    assert_eq!(spec.cells().len(), 4);
    let mut broken = spec.clone();
    broken.base.ac_class = Some("missing".into());
    let mut calls = 0;
    let cells = run_grid(&broken, TrialKind::Pllac, |_, _| {
        calls += 1;
        Ok(())
    })
    .unwrap();
    assert_eq!(calls, 4);
    assert!(cells.iter().all(|c| c.aggregate.trials_ok == 0 && c.aggregate.failures.len() == 2));

    let cells = run_grid(&spec, TrialKind::Pllac, |_, _| Ok(())).unwrap();
    assert_eq!(cells.iter().map(|c| c.lambda).collect::<Vec<_>>(), vec![0.0, 0.0, 1.0, 1.0]);
    assert!(cells.iter().all(|c| c.aggregate.trials_ok == 2));
    assert_eq!(cells[0].theta, "fixed:0.6");
}
