//! Browser bindings for the interactive demo page.
//!
//! Three operations, each returning a JSON string the page renders on
//! canvases: build a graph and solve its weight caps, run one seeded
//! tracking trial, and evaluate the closed-form bound surfaces.

use netestim::sim::{
    monte_carlo, EstimatorKind, LossSpec, RunContext, SignalSpec, SimConfig, TopologySpec,
};
use netestim::topology::{ThetaMode, Topology};
use netestim::{bounds, thresholds};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn parse_theta(theta_mode: &str) -> ThetaMode {
    theta_mode.parse().unwrap_or(ThetaMode::Neighborhood)
}

fn layout(topo: &Topology, family: &str) -> Vec<(f64, f64)> {
    if let Some(pos) = topo.positions() {
        return pos.to_vec();
    }
    let n = topo.n();
    match family {
        "line" => (0..n).map(|i| (i as f64, 0.5)).collect(),
        _ => {
            // Ring layout for vertex-transitive graphs.
            let tau = std::f64::consts::TAU;
            (0..n)
                .map(|i| {
                    let a = tau * i as f64 / n as f64;
                    (a.cos(), a.sin())
                })
                .collect()
        }
    }
}

/// Build a graph, solve the caps, and describe both for rendering.
#[wasm_bindgen]
pub fn topology_demo(
    family: &str,
    n: usize,
    seed: u32,
    gamma_spectral: f64,
    theta_mode: &str,
) -> String {
    let n = n.clamp(1, 200);
    let gamma_spectral = gamma_spectral.clamp(0.05, 0.99);
    let topo = match family {
        "line" => Topology::line(n),
        "star" => Topology::star(n),
        "cayley" => {
            let gens: Vec<usize> = [0usize, 1, 3, 4]
                .iter()
                .flat_map(|&g| [g % n, (n - g % n) % n])
                .collect();
            match Topology::cayley(n, &gens) {
                Ok(t) => t,
                Err(e) => return json!({ "error": e.to_string() }).to_string(),
            }
        }
        _ => Topology::geometric(
            n,
            n as f64 / 2.0,
            netestim::sim::default_radius(n),
            seed as u64,
        ),
    };
    let mode = parse_theta(theta_mode);
    let theta = topo.theta_sets(mode);
    let sizes: Vec<usize> = theta.iter().map(|t| t.len()).collect();
    let budget = gamma_spectral * gamma_spectral;
    let lower = thresholds::feasible_lower_bound(&sizes, budget);
    let solved = thresholds::fixed_point_solve(&theta, budget, 1e-10, 10_000);
    let (caps, iterations) = match solved {
        Ok(v) => v,
        Err(e) => return json!({ "error": e.to_string() }).to_string(),
    };
    let (mean, min, max) = topo.neighborhood_stats();
    json!({
        "n": topo.n(),
        "positions": layout(&topo, family),
        "edges": topo.edges(),
        "psi": caps.psi,
        "psi_lower": lower.psi,
        "theta_sizes": sizes,
        "iterations": iterations,
        "neighborhood": { "mean": mean, "min": min, "max": max },
        "solver_budget": budget,
    })
    .to_string()
}

/// One seeded tracking trial; node traces for the chosen estimator plus
/// the MSE of every estimator.
#[wasm_bindgen]
pub fn simulation_demo(
    freq_scale: f64,
    q: f64,
    seed: u32,
    estimator: &str,
    steps: usize,
) -> String {
    let steps = steps.clamp(100, 1000);
    let q = q.clamp(0.0, 0.9);
    let mut config = SimConfig::benchmark_defaults();
    config.topology = TopologySpec::geometric_default(20, seed as u64);
    config.signal = SignalSpec::multisine(freq_scale.clamp(0.25, 32.0), steps);
    config.loss = LossSpec::Jittered { q, jitter: 0.05 };
    config.trials = 1;
    config.warmup = 70.min(steps / 2);
    config.master_seed = seed as u64;

    let shown: EstimatorKind = estimator.parse().unwrap_or(EstimatorKind::Ep);
    let report = match monte_carlo(&config, 1) {
        Ok(r) => r,
        Err(e) => return json!({ "error": e.to_string() }).to_string(),
    };
    let ctx = match RunContext::prepare(&config, 0) {
        Ok(c) => c,
        Err(e) => return json!({ "error": e.to_string() }).to_string(),
    };
    let trial = report.first_trial.as_ref().unwrap();
    let traces = trial.estimates_of(shown).unwrap();
    // Transpose to per-node series for direct plotting.
    let n = ctx.topo.n();
    let node_traces: Vec<Vec<f64>> = (0..n)
        .map(|i| traces.iter().map(|row| row[i]).collect())
        .collect();
    let mse: Vec<(String, f64)> = report
        .estimators
        .iter()
        .map(|e| (e.kind.label().to_string(), e.mse_mean))
        .collect();
    json!({
        "signal": report.signal,
        "nodes": node_traces,
        "estimator": shown.label(),
        "mse": mse,
        "gamma_trace": trial.gamma_trace,
        "gamma_max": ctx.gamma_max,
        "delta_cap": ctx.delta_cap,
        "warmup": config.warmup,
    })
    .to_string()
}

/// Bound surfaces: the loss factor against the drop probability and the
/// variance-shrink factor against the contraction budget.
#[wasm_bindgen]
pub fn bounds_demo(n: usize, m: usize, gamma_spectral: f64, sigma2: f64) -> String {
    let n = n.clamp(2, 500);
    let m = m.clamp(1, 30);
    let gamma = gamma_spectral.clamp(0.05, 0.999);
    let sigma2 = sigma2.max(0.0);

    let mut q_grid = Vec::new();
    let mut benchmark = Vec::new();
    let mut bound = Vec::new();
    let mut q = 0.0;
    while q <= 0.5 + 1e-9 {
        let p = vec![1.0 - q; m - 1];
        q_grid.push(q);
        benchmark.push(bounds::benchmark_variance(&p, sigma2));
        bound.push(bounds::variance_upper_bound(&bounds::BoundInputs {
            n_total: n,
            neighborhood_size: m,
            gamma_max: gamma,
            sigma2,
            delta_cap: 0.0,
            p_vector: p,
        }));
        q += 0.01;
    }

    let mut gamma_grid = Vec::new();
    let mut factor = Vec::new();
    let mut g = 0.05;
    while g <= 0.99 + 1e-9 {
        gamma_grid.push(g);
        factor.push(bounds::variance_bound_first_factor(n, g));
        g += 0.01;
    }

    json!({
        "q": q_grid,
        "benchmark_variance": benchmark,
        "variance_bound": bound,
        "gamma": gamma_grid,
        "first_factor": factor,
        "multiplier_bound": bounds::multiplier_sup_bound(n, gamma, sigma2),
    })
    .to_string()
}
