//! End-to-end checks of the command implementations and their outputs.

use netestim_cli::commands::{self, BoundsArgs, GlobalOpts};
use netestim_cli::config::RunConfig;
use std::fs;
use std::path::PathBuf;

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("netestim-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn opts(dir: &PathBuf) -> GlobalOpts {
    GlobalOpts {
        out: dir.clone(),
        jobs: 2,
    }
}

fn quick_run_config() -> RunConfig {
    let mut config = RunConfig::default();
    config.n = 10;
    config.radius = netestim::sim::default_radius(10);
    config.side = 5.0;
    config.length = 120;
    config.warmup = 40;
    config.trials = 2;
    config
}

#[test]
fn topo_writes_edge_list_and_stats() {
    let dir = temp_dir("topo");
    let mut config = RunConfig::default();
    config.family = "line".into();
    config.n = 5;
    let summary = commands::cmd_topo(&config, &opts(&dir)).unwrap();
    assert!(summary.contains("nodes=5"));
    assert!(summary.contains("edges=4"));
    let edges = fs::read_to_string(dir.join("edges.txt")).unwrap();
    assert_eq!(edges, "5\n1 2\n2 3\n3 4\n4 5\n");
    assert!(dir.join("manifest.cfg").exists());
}

#[test]
fn topo_cayley_is_regular() {
    let dir = temp_dir("topo-cayley");
    let mut config = RunConfig::default();
    config.family = "cayley".into();
    // A bare generator list: the command closes it under negation mod n.
    config.n = 15;
    config.generators = vec![1, 3, 4];
    let summary = commands::cmd_topo(&config, &opts(&dir)).unwrap();
    assert!(summary.contains("mean=7.000"), "summary: {summary}");
    let edges = fs::read_to_string(dir.join("edges.txt")).unwrap();
    // 15 nodes of degree 6: 45 undirected edges plus the node-count line.
    assert_eq!(edges.lines().count(), 46);
}

#[test]
fn thresholds_solves_known_cases() {
    let dir = temp_dir("thr-line");
    let mut config = RunConfig::default();
    config.family = "line".into();
    config.n = 5;
    let summary = commands::cmd_thresholds(&config, 0.8, &opts(&dir)).unwrap();
    assert!(summary.contains("5 caps"));
    let psi = fs::read_to_string(dir.join("psi.csv")).unwrap();
    assert_eq!(psi.lines().count(), 6);
    for line in psi.lines().skip(1) {
        let value: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(value > 0.0 && value < 0.8);
    }

    // Two mutually coupled nodes split the budget evenly.
    let dir = temp_dir("thr-pair");
    let mut config = RunConfig::default();
    config.family = "line".into();
    config.n = 2;
    commands::cmd_thresholds(&config, 0.8, &opts(&dir)).unwrap();
    let psi = fs::read_to_string(dir.join("psi.csv")).unwrap();
    for line in psi.lines().skip(1) {
        let value: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((value - 0.4).abs() < 1e-8);
    }

    // A single node takes the whole budget.
    let dir = temp_dir("thr-single");
    let mut config = RunConfig::default();
    config.family = "line".into();
    config.n = 1;
    commands::cmd_thresholds(&config, 0.7, &opts(&dir)).unwrap();
    let psi = fs::read_to_string(dir.join("psi.csv")).unwrap();
    assert_eq!(psi, "node,psi\n1,0.7\n");
}

#[test]
fn thresholds_under_a_fixed_realization_loosen_in_total() {
    // Restricting the coupling sets to one sampled realization enlarges
    // the feasible set, so the solved cap total can only grow. Per-node
    // caps may move either way (the equality system is coupled).
    let dir_free = temp_dir("thr-free");
    let dir_lossy = temp_dir("thr-lossy");
    let mut config = RunConfig::default();
    config.family = "geometric".into();
    config.n = 12;
    config.side = 6.0;
    config.radius = netestim::sim::default_radius(12);
    config.q = 0.4;
    config.jitter = 0.0;
    commands::cmd_thresholds(&config, 0.8, &opts(&dir_free)).unwrap();
    config.under_losses = true;
    commands::cmd_thresholds(&config, 0.8, &opts(&dir_lossy)).unwrap();
    let read = |dir: &PathBuf| -> Vec<f64> {
        fs::read_to_string(dir.join("psi.csv"))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    let free = read(&dir_free);
    let lossy = read(&dir_lossy);
    assert_eq!(free.len(), lossy.len());
    let free_total: f64 = free.iter().sum();
    let lossy_total: f64 = lossy.iter().sum();
    assert!(
        lossy_total >= free_total - 1e-9,
        "restricted total {lossy_total} below loss-free total {free_total}"
    );
}

#[test]
fn run_outputs_are_deterministic_from_manifest() {
    let dir_a = temp_dir("run-a");
    let config = quick_run_config();
    commands::cmd_run(&config, &opts(&dir_a)).unwrap();

    // Re-run from the emitted manifest into a fresh directory.
    let manifest = RunConfig::from_file(&dir_a.join("manifest.cfg")).unwrap();
    let dir_b = temp_dir("run-b");
    commands::cmd_run(&manifest, &opts(&dir_b)).unwrap();

    for name in [
        "report.csv",
        "trace_gamma.csv",
        "trace_estimates.csv",
        "trace_filter.csv",
        "psi.csv",
    ] {
        let a = fs::read(dir_a.join(name)).unwrap();
        let b = fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn run_with_different_jobs_is_identical() {
    let config = quick_run_config();
    let dir_a = temp_dir("jobs-1");
    commands::cmd_run(
        &config,
        &GlobalOpts {
            out: dir_a.clone(),
            jobs: 1,
        },
    )
    .unwrap();
    let dir_b = temp_dir("jobs-4");
    commands::cmd_run(
        &config,
        &GlobalOpts {
            out: dir_b.clone(),
            jobs: 4,
        },
    )
    .unwrap();
    let a = fs::read(dir_a.join("report.csv")).unwrap();
    let b = fs::read(dir_b.join("report.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn zero_noise_constant_signal_run_reports_zero_mse() {
    let dir = temp_dir("zero-noise");
    let mut config = quick_run_config();
    config.sigma2 = 0.0;
    config.q = 0.0;
    config.jitter = 0.0;
    config.signal_kind = netestim::sim::SignalKind::Constant;
    config.gamma_max = Some(0.5);
    config.estimators = vec![
        netestim::sim::EstimatorKind::Ep,
        netestim::sim::EstimatorKind::E2,
    ];
    config.trials = 1;
    commands::cmd_run(&config, &opts(&dir)).unwrap();
    let report = fs::read_to_string(dir.join("report.csv")).unwrap();
    for line in report.lines().skip(1) {
        let mse: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(mse < 1e-20, "line: {line}");
    }
}

#[test]
fn bounds_grid_values_are_in_range() {
    let dir = temp_dir("bounds");
    let table = commands::cmd_bounds(&BoundsArgs::default(), &opts(&dir)).unwrap();
    assert!(table.contains("asymptotic_bias_bound"));

    let factor = fs::read_to_string(dir.join("fig_factor_gamma.csv")).unwrap();
    for line in factor.lines().skip(1) {
        let v: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(v < 1.0 && v > 0.5);
    }

    let loss = fs::read_to_string(dir.join("fig_factor_q.csv")).unwrap();
    for line in loss.lines().skip(1) {
        let mut cells = line.split(',');
        let q: f64 = cells.next().unwrap().parse().unwrap();
        let m: usize = cells.next().unwrap().parse().unwrap();
        let v: f64 = cells.next().unwrap().parse().unwrap();
        assert!(v <= 1.0 + 1e-12);
        if m == 1 {
            assert!((v - 1.0).abs() < 1e-12);
        }
        if q == 0.0 {
            assert!((v - 1.0 / m as f64).abs() < 1e-12);
        }
    }
}

#[test]
fn bundled_benchmark_config_parses() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_fig5.cfg");
    let config = RunConfig::from_file(&path).unwrap();
    assert_eq!(config.n, 20);
    assert_eq!(config.trials, 30);
    assert_eq!(config.sigma2, 1.5);
    assert_eq!(config.warmup, 70);
    config.sim_config().unwrap();
}
