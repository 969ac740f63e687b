use deconv_core::harness::{run_experiment, write_records, ExperimentConfig, RunOptions};

fn config(extra: &str) -> ExperimentConfig {
    let text = format!(
        r#"{{
            "experiment_id": "t",
            "kind": "mse-density",
            "process": {{"kind": "srd-finite", "weights": [1.0]}},
            "noise": "laplace:1",
            "x0": [0.0, 1.0],
            "n_grid": [512],
            "bandwidth": {{"rule": "iid-like"}},
            "replicates": 2,
            "seed": 11
            {extra}
        }}"#
    );
    ExperimentConfig::from_json(&text).unwrap()
}

fn records_csv(cfg: &ExperimentConfig, threads: usize) -> Vec<u8> {
    let out = run_experiment(
        cfg,
        &RunOptions {
            threads: Some(threads),
            progress: None,
        },
    )
    .unwrap();
    let mut buf = Vec::new();
    write_records(&mut buf, &out.records).unwrap();
    buf
}

#[test]
fn record_count_is_replicates_times_points() {
    let out = run_experiment(&config(""), &RunOptions::default()).unwrap();
    assert_eq!(out.records.len(), 4);
    for r in &out.records {
        assert_eq!(r.squared_error, (r.estimate - r.truth).powi(2));
    }
    assert_eq!(out.summary.cells.len(), 2);
}

#[test]
fn thread_count_does_not_change_records() {
    let mut cfg = config("");
    cfg.replicates = 24;
    cfg.n_grid = vec![256, 1024];
    cfg.process = deconv_core::harness::ProcessSpec::lrd(0.7);
    cfg.process.truncation_lag = Some(4096);
    let one = records_csv(&cfg, 1);
    let four = records_csv(&cfg, 4);
    assert_eq!(one, four);
    assert!(one.starts_with(b"experiment_id,replicate,n,h,x0,estimate,truth,squared_error,standardized,seed\n"));
}

#[test]
fn noise_free_mse_matches_kde_theory() {
    // i.i.d. N(0,1), no noise, h = n^{-1/5}: ordinary KDE.
    let mut cfg = config("");
    cfg.noise = deconv_core::NoiseModel::None;
    cfg.x0 = vec![0.0];
    cfg.n_grid = vec![1 << 14];
    cfg.replicates = 400;
    let out = run_experiment(&cfg, &RunOptions::default()).unwrap();
    let cell = &out.summary.cells[0];
    assert!((cell.h - (16384f64).powf(-0.2)).abs() < 1e-12);
    let theory = cell.theory.unwrap().total;
    let ratio = cell.mse / theory;
    assert!((0.75..=1.25).contains(&ratio), "mse {} theory {theory} ratio {ratio}", cell.mse);
}

#[test]
fn clt_records_carry_standardized_values() {
    let mut cfg = config("");
    cfg.kind = deconv_core::harness::ExperimentKind::Clt;
    cfg.replicates = 50;
    let out = run_experiment(&cfg, &RunOptions::default()).unwrap();
    assert!(out.records.iter().all(|r| r.standardized.is_some_and(f64::is_finite)));
    assert_eq!(out.summary.clt.len(), 2);
}

#[test]
fn coverage_runs_write_intervals() {
    let mut cfg = config("");
    cfg.kind = deconv_core::harness::ExperimentKind::Coverage;
    cfg.bandwidth = deconv_core::harness::BandwidthSpec::IidUndersmoothed { c: 1.0 };
    cfg.replicates = 20;
    let out = run_experiment(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(out.intervals.len(), 40);
    assert_eq!(out.summary.coverage.len(), 2);
    let dir = tempfile::tempdir().unwrap();
    deconv_core::harness::write_outputs(dir.path(), &out).unwrap();
    for f in ["records.csv", "summary.json", "intervals.csv"] {
        assert!(dir.path().join(f).exists());
    }
}
