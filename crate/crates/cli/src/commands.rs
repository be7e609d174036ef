//! The five subcommands. Every command writes its outputs plus a manifest
//! sufficient to reproduce them byte-for-byte into the output directory.

use crate::config::RunConfig;
use crate::CliError;
use netestim::bounds;
use netestim::channel::LossModel;
use netestim::seed;
use netestim::sim::{self, EstimatorKind, RunContext, SimReport};
use netestim::thresholds;
use netestim::topology::Topology;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct GlobalOpts {
    pub out: PathBuf,
    pub jobs: usize,
}

impl Default for GlobalOpts {
    fn default() -> Self {
        GlobalOpts {
            out: PathBuf::from("out"),
            jobs: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        }
    }
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn build_topology(config: &RunConfig) -> Result<Topology, CliError> {
    Ok(config.topology_spec()?.build(None)?)
}

/// `topo`: write the edge list and report neighborhood statistics.
pub fn cmd_topo(config: &RunConfig, opts: &GlobalOpts) -> Result<String, CliError> {
    let topo = build_topology(config)?;
    write_output(&opts.out, "edges.txt", &topo.to_edge_list())?;
    write_output(
        &opts.out,
        "manifest.cfg",
        &config.manifest("topo", &["edges.txt"]),
    )?;
    let (mean, min, max) = topo.neighborhood_stats();
    Ok(format!(
        "nodes={} edges={} closed_neighborhood mean={mean:.3} min={min} max={max}",
        topo.n(),
        topo.edges().len()
    ))
}

/// `thresholds`: solve the cap system on one topology and write the caps.
///
/// `gamma` is the cap-system budget itself (the `run` command, by
/// contrast, squares its spectral budget before solving).
pub fn cmd_thresholds(
    config: &RunConfig,
    gamma: f64,
    opts: &GlobalOpts,
) -> Result<String, CliError> {
    if !(0.0 < gamma && gamma < 1.0) {
        return Err(CliError::Config(format!(
            "threshold budget {gamma} outside (0, 1)"
        )));
    }
    let topo = build_topology(config)?;
    let theta = if config.under_losses {
        let model = if config.jitter > 0.0 {
            LossModel::jittered(&topo, config.q, config.jitter, config.master_seed)
        } else {
            LossModel::uniform(&topo, config.q)
        };
        let mut rng = seed::rng(seed::derive(
            config.master_seed,
            seed::stream::THRESHOLD_REALIZATION,
        ));
        let fixed = model.sample(&mut rng);
        (0..topo.n())
            .map(|i| topo.two_hop_set(i, Some(&fixed), config.theta_mode))
            .collect()
    } else {
        topo.theta_sets(config.theta_mode)
    };
    let (caps, iterations) =
        thresholds::fixed_point_solve(&theta, gamma, config.solver_tol, config.solver_max_iter)?;
    write_output(&opts.out, "psi.csv", &caps.to_csv())?;
    write_output(
        &opts.out,
        "manifest.cfg",
        &config.manifest("thresholds", &["psi.csv"]),
    )?;
    let worst = thresholds::constraint_residuals(&caps.psi, &theta, gamma)
        .iter()
        .fold(0.0f64, |a, r| a.max(r.abs()));
    Ok(format!(
        "solved {} caps in {iterations} sweeps, max residual {worst:.3e}",
        topo.n()
    ))
}

fn report_csv(report: &SimReport, q: f64) -> String {
    let mut out = String::from("estimator,q,mse_mean,mse_var,chi\n");
    let chi: std::collections::BTreeMap<&str, f64> = report
        .improvement_factors()
        .into_iter()
        .map(|(k, v)| (k.label(), v))
        .collect();
    for est in &report.estimators {
        let chi_cell = chi
            .get(est.kind.label())
            .map(|v| v.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            est.kind.label(),
            q,
            est.mse_mean,
            est.mse_var,
            chi_cell
        );
    }
    out
}

fn gamma_trace_csv(report: &SimReport) -> String {
    let mut out = String::from("trial,t,gamma\n");
    for (trial, trace) in report.gamma_traces.iter().enumerate() {
        for (idx, g) in trace.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", trial, idx + 1, g);
        }
    }
    out
}

fn estimates_trace_csv(report: &SimReport) -> String {
    let mut out = String::from("t,d,estimator,node,x\n");
    if let Some(trial) = &report.first_trial {
        for (kind, trace) in &trial.estimates {
            for (t, row) in trace.iter().enumerate() {
                for (node, x) in row.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        t,
                        report.signal[t],
                        kind.label(),
                        node + 1,
                        x
                    );
                }
            }
        }
    }
    out
}

fn filter_trace_csv(report: &SimReport, n: usize) -> String {
    let mut out = String::from("step,node,x,lambda,k_norm_sq,kh_sum");
    for j in 1..=n {
        let _ = write!(out, ",k_{j}");
    }
    out.push('\n');
    if let Some(trial) = &report.first_trial {
        for record in &trial.records {
            let _ = write!(
                out,
                "{},{},{},{},{},{}",
                record.step,
                record.node + 1,
                record.x,
                record.lambda,
                record.k_norm_sq,
                record.kh_sum
            );
            for v in &record.k_row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}

/// `run`: one Monte Carlo run with full traces.
pub fn cmd_run(config: &RunConfig, opts: &GlobalOpts) -> Result<String, CliError> {
    let sim_config = config.sim_config()?;
    let report = sim::monte_carlo(&sim_config, opts.jobs)?;
    let ctx = RunContext::prepare(&sim_config, 0)?;

    write_output(&opts.out, "report.csv", &report_csv(&report, config.q))?;
    write_output(&opts.out, "trace_gamma.csv", &gamma_trace_csv(&report))?;
    write_output(
        &opts.out,
        "trace_estimates.csv",
        &estimates_trace_csv(&report),
    )?;
    write_output(
        &opts.out,
        "trace_filter.csv",
        &filter_trace_csv(&report, ctx.topo.n()),
    )?;
    write_output(&opts.out, "psi.csv", &ctx.psi.to_csv())?;
    write_output(
        &opts.out,
        "manifest.cfg",
        &config.manifest(
            "run",
            &[
                "report.csv",
                "trace_gamma.csv",
                "trace_estimates.csv",
                "trace_filter.csv",
                "psi.csv",
            ],
        ),
    )?;

    let mut summary = format!(
        "gamma_max={:.4} delta_cap={:.4} solver_sweeps={}\n",
        ctx.gamma_max, ctx.delta_cap, ctx.threshold_iterations
    );
    for est in &report.estimators {
        let _ = writeln!(
            summary,
            "{}: mse={:.6} var={:.3e}",
            est.kind.label(),
            est.mse_mean,
            est.mse_var
        );
    }
    Ok(summary)
}

/// Signal labels of the benchmark sweep, slowest first.
pub const BENCH_FREQ_SCALES: [(&str, f64); 5] = [
    ("d1", 1.0),
    ("d2", 2.0),
    ("d3", 4.0),
    ("d4", 8.0),
    ("d5", 16.0),
];
pub const BENCH_LOSS_LEVELS: [f64; 4] = [0.0, 0.1, 0.2, 0.3];

/// `bench`: the full benchmark sweep (5 signals x 4 loss levels).
pub fn cmd_bench(config: &RunConfig, opts: &GlobalOpts) -> Result<String, CliError> {
    let mut out = String::from("signal,freq_scale,q,estimator,mse_mean,mse_var,chi\n");
    let mut summary = String::new();
    for (label, freq) in BENCH_FREQ_SCALES {
        for q in BENCH_LOSS_LEVELS {
            let mut cell = config.clone();
            cell.freq_scale = freq;
            cell.q = q;
            let report = sim::monte_carlo(&cell.sim_config()?, opts.jobs)?;
            let chi: std::collections::BTreeMap<&str, f64> = report
                .improvement_factors()
                .into_iter()
                .map(|(k, v)| (k.label(), v))
                .collect();
            for est in &report.estimators {
                let chi_cell = chi
                    .get(est.kind.label())
                    .map(|v| v.to_string())
                    .unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{label},{freq},{q},{},{},{},{chi_cell}",
                    est.kind.label(),
                    est.mse_mean,
                    est.mse_var
                );
            }
            if let Some(proposed) = report.mse_of(EstimatorKind::Ep) {
                let _ = writeln!(summary, "{label} q={q}: proposed mse={proposed:.6}");
            }
        }
    }
    write_output(&opts.out, "report.csv", &out)?;
    write_output(
        &opts.out,
        "manifest.cfg",
        &config.manifest("bench", &["report.csv"]),
    )?;
    Ok(summary)
}

/// Inputs of the `bounds` command.
#[derive(Debug, Clone)]
pub struct BoundsArgs {
    pub n: usize,
    pub m: usize,
    pub q: f64,
    pub gamma: f64,
    pub sigma2: f64,
    pub delta: f64,
    pub upsilon: f64,
}

impl Default for BoundsArgs {
    fn default() -> Self {
        BoundsArgs {
            n: 20,
            m: 7,
            q: 0.1,
            gamma: 0.9,
            sigma2: 1.5,
            delta: 0.05,
            upsilon: 1.0,
        }
    }
}

/// `bounds`: print the closed-form quantities and write the figure grids.
pub fn cmd_bounds(args: &BoundsArgs, opts: &GlobalOpts) -> Result<String, CliError> {
    let p_vector = vec![1.0 - args.q; args.m.saturating_sub(1)];
    let inputs = bounds::BoundInputs {
        n_total: args.n,
        neighborhood_size: args.m,
        gamma_max: args.gamma,
        sigma2: args.sigma2,
        delta_cap: args.delta,
        p_vector: p_vector.clone(),
    };

    let mut table = String::from("quantity,value\n");
    let mut push = |k: &str, v: f64| {
        let _ = writeln!(table, "{k},{v}");
    };
    push(
        "asymptotic_bias_bound",
        bounds::asymptotic_bias_bound(args.delta, args.n, args.gamma),
    );
    push(
        "gamma_max_from_bias_power",
        bounds::gamma_max_from_bias_power(args.upsilon, args.delta),
    );
    push(
        "variance_bound_first_factor",
        bounds::variance_bound_first_factor(args.n, args.gamma),
    );
    push("uniform_q_factor", bounds::uniform_q_factor(args.q, args.m));
    push(
        "expected_inverse_count",
        bounds::expected_inverse_count(&p_vector),
    );
    push(
        "variance_upper_bound",
        bounds::variance_upper_bound(&inputs),
    );
    push(
        "benchmark_variance",
        bounds::benchmark_variance(&p_vector, args.sigma2),
    );
    push(
        "multiplier_sup_bound",
        bounds::multiplier_sup_bound(args.n, args.gamma, args.sigma2),
    );

    // First-factor surface over the contraction budget and network size.
    let mut factor_grid = String::from("gamma,n,factor\n");
    for n in 2..=100usize {
        let mut gamma = 0.5;
        while gamma < 0.995 {
            let _ = writeln!(
                factor_grid,
                "{gamma},{n},{}",
                bounds::variance_bound_first_factor(n, gamma)
            );
            gamma += 0.01;
        }
    }

    // Loss-factor surface over the drop probability and neighborhood size.
    let mut loss_grid = String::from("q,m,factor\n");
    for m in 1..=20usize {
        let mut q = 0.0;
        while q <= 0.3 + 1e-9 {
            let _ = writeln!(loss_grid, "{q},{m},{}", bounds::uniform_q_factor(q, m));
            q += 0.01;
        }
    }

    write_output(&opts.out, "bounds.csv", &table)?;
    write_output(&opts.out, "fig_factor_gamma.csv", &factor_grid)?;
    write_output(&opts.out, "fig_factor_q.csv", &loss_grid)?;
    let command = format!(
        "bounds --n {} --m {} --q {} --gamma {} --sigma2 {} --delta {} --upsilon {}",
        args.n, args.m, args.q, args.gamma, args.sigma2, args.delta, args.upsilon
    );
    write_output(
        &opts.out,
        "manifest.cfg",
        &RunConfig::default().manifest(
            &command,
            &["bounds.csv", "fig_factor_gamma.csv", "fig_factor_q.csv"],
        ),
    )?;
    Ok(table)
}
