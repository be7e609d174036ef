//! Synchronous-round simulation of the estimators over a lossy network,
//! with seeded Monte Carlo aggregation.
//!
//! One trial: build the graph, solve the weight caps once on the loss-free
//! coupling sets, then per step sample a reception realization, form noisy
//! measurements, and let every enabled estimator update from the previous
//! round's estimates. Everything is keyed off one master seed; trials are
//! independent and may run on worker threads without affecting results.

pub mod signal;

pub use signal::{SignalKind, SignalSpec};

use crate::baselines::BaselineKind;
use crate::bounds;
use crate::channel::{LossModel, LossRealization};
use crate::filter::{FilterError, FilterParams, NodeState, StepRecord};
use crate::linalg;
use crate::seed;
use crate::thresholds::{self, ThresholdError, ThresholdVector};
use crate::topology::{ThetaMode, Topology, TopologyError, TwoHopSet};
use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("step {step}, node {node}: {source}")]
    Filter {
        step: usize,
        node: usize,
        source: FilterError,
    },
    #[error(transparent)]
    Threshold(#[from] ThresholdError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Default connection radius of the benchmark geometric graphs; tuned so
/// 20 nodes on a square of side 10 average about 6.6 closed neighbors.
pub fn default_radius(n: usize) -> f64 {
    0.85 * (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    /// The proposed adaptive minimum-variance estimator.
    Ep,
    E1,
    E2,
    E3,
    E4,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::Ep,
        EstimatorKind::E1,
        EstimatorKind::E2,
        EstimatorKind::E3,
        EstimatorKind::E4,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            EstimatorKind::Ep => "Ep",
            EstimatorKind::E1 => "E1",
            EstimatorKind::E2 => "E2",
            EstimatorKind::E3 => "E3",
            EstimatorKind::E4 => "E4",
        }
    }

    fn baseline(&self) -> Option<BaselineKind> {
        match self {
            EstimatorKind::Ep => None,
            EstimatorKind::E1 => Some(BaselineKind::E1),
            EstimatorKind::E2 => Some(BaselineKind::E2),
            EstimatorKind::E3 => Some(BaselineKind::E3),
            EstimatorKind::E4 => Some(BaselineKind::E4),
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Ep" | "ep" | "EP" => Ok(EstimatorKind::Ep),
            "E1" | "e1" => Ok(EstimatorKind::E1),
            "E2" | "e2" => Ok(EstimatorKind::E2),
            "E3" | "e3" => Ok(EstimatorKind::E3),
            "E4" | "e4" => Ok(EstimatorKind::E4),
            other => Err(format!("unknown estimator `{other}`")),
        }
    }
}

/// Which graph a run uses.
#[derive(Debug, Clone, PartialEq)]
pub enum TopologySpec {
    Geometric {
        n: usize,
        side: f64,
        radius: f64,
        seed: u64,
    },
    Line {
        n: usize,
    },
    Cayley {
        n: usize,
        generators: Vec<usize>,
    },
    Star {
        n: usize,
    },
}

impl TopologySpec {
    pub fn geometric_default(n: usize, seed: u64) -> Self {
        TopologySpec::Geometric {
            n,
            side: n as f64 / 2.0,
            radius: default_radius(n),
            seed,
        }
    }

    /// Build the graph; geometric graphs get a fresh placement per trial
    /// variant.
    pub fn build(&self, variant: Option<u64>) -> Result<Topology, TopologyError> {
        Ok(match self {
            TopologySpec::Geometric {
                n,
                side,
                radius,
                seed,
            } => {
                let seed = match variant {
                    Some(v) => seed::derive(*seed, seed::stream::TRIAL_BASE + v),
                    None => *seed,
                };
                Topology::geometric(*n, *side, *radius, seed)
            }
            TopologySpec::Line { n } => Topology::line(*n),
            TopologySpec::Cayley { n, generators } => Topology::cayley(*n, generators)?,
            TopologySpec::Star { n } => Topology::star(*n),
        })
    }
}

/// Link loss regime of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum LossSpec {
    /// Same drop probability on every link.
    Uniform { q: f64 },
    /// Per-link drop probabilities drawn once from `q +/- jitter`.
    Jittered { q: f64, jitter: f64 },
}

impl LossSpec {
    fn build(&self, topo: &Topology, jitter_seed: u64) -> LossModel {
        match self {
            LossSpec::Uniform { q } => LossModel::uniform(topo, *q),
            LossSpec::Jittered { q, jitter } => LossModel::jittered(topo, *q, *jitter, jitter_seed),
        }
    }

    pub fn q(&self) -> f64 {
        match self {
            LossSpec::Uniform { q } | LossSpec::Jittered { q, .. } => *q,
        }
    }
}

/// Full description of a Monte Carlo run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub topology: TopologySpec,
    /// Re-place geometric graphs per trial, matching the benchmark
    /// protocol of averaging over random graphs.
    pub per_trial_graphs: bool,
    pub loss: LossSpec,
    pub symmetric_losses: bool,
    pub theta_mode: ThetaMode,
    pub signal: SignalSpec,
    pub sigma2: f64,
    /// Target per-node bias power used to derive the contraction rate when
    /// `gamma_max` is not set explicitly.
    pub upsilon: f64,
    /// Budget on the spectral norm of the masked estimate-weight matrix.
    /// The cap solver is fed its square: the per-node caps bound
    /// `lambda_max(K K')`, the squared spectral norm.
    pub gamma_max: Option<f64>,
    /// The signal increment cap is assumed known only up to this factor.
    pub delta_margin: f64,
    pub forgetting: f64,
    pub bisection_tol: f64,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    /// Solve the caps under one sampled realization instead of the
    /// loss-free coupling sets (experiments only).
    pub thresholds_under_losses: bool,
    pub estimators: Vec<EstimatorKind>,
    pub trials: usize,
    pub warmup: usize,
    pub master_seed: u64,
}

impl SimConfig {
    /// The reference benchmark setting: 20-node geometric graphs re-drawn
    /// per trial, sigma^2 = 1.5, unit bias power, warmup 70.
    pub fn benchmark_defaults() -> Self {
        SimConfig {
            topology: TopologySpec::geometric_default(20, 1),
            per_trial_graphs: true,
            loss: LossSpec::Jittered {
                q: 0.1,
                jitter: 0.05,
            },
            symmetric_losses: false,
            theta_mode: ThetaMode::Neighborhood,
            signal: SignalSpec::multisine(1.0, 400),
            sigma2: 1.5,
            upsilon: 1.0,
            gamma_max: None,
            delta_margin: 1.05,
            forgetting: crate::filter::DEFAULT_FORGETTING,
            bisection_tol: crate::filter::DEFAULT_BISECTION_TOL,
            solver_tol: thresholds::DEFAULT_TOL,
            solver_max_iter: thresholds::DEFAULT_MAX_ITER,
            thresholds_under_losses: false,
            estimators: EstimatorKind::ALL.to_vec(),
            trials: 30,
            warmup: 70,
            master_seed: 1,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.trials < 1 {
            return Err(SimError::InvalidConfig("trials must be >= 1".into()));
        }
        if self.warmup >= self.signal.length {
            return Err(SimError::InvalidConfig(format!(
                "warmup {} must be below the signal length {}",
                self.warmup, self.signal.length
            )));
        }
        if self.sigma2 < 0.0 {
            return Err(SimError::InvalidConfig("sigma2 must be >= 0".into()));
        }
        if self.estimators.is_empty() {
            return Err(SimError::InvalidConfig("no estimators enabled".into()));
        }
        if let Some(g) = self.gamma_max {
            if !(0.0 < g && g < 1.0) {
                return Err(SimError::InvalidConfig(format!(
                    "gamma_max {g} outside (0, 1)"
                )));
            }
        }
        Ok(())
    }
}

/// Contraction rates are clamped into this range when derived from the
/// bias-power rule (the rule returns the open boundary 1 for a constant
/// signal).
const GAMMA_CLAMP: (f64, f64) = (1e-3, 0.995);

/// Everything one trial needs, fully resolved.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub topo: Topology,
    pub theta: Vec<TwoHopSet>,
    /// Per-node caps; `psi.gamma_max` is the solver-level budget, the
    /// square of the spectral budget below.
    pub psi: ThresholdVector,
    pub threshold_iterations: usize,
    pub loss: LossModel,
    pub signal: Vec<f64>,
    pub delta_cap: f64,
    /// Spectral-norm budget on the masked estimate-weight matrix.
    pub gamma_max: f64,
    pub sigma2: f64,
    pub forgetting: f64,
    pub bisection_tol: f64,
    pub estimators: Vec<EstimatorKind>,
    pub warmup: usize,
}

impl RunContext {
    /// Resolve the context of one trial. The signal is shared by all
    /// trials; geometric graphs and link jitter are re-drawn per trial
    /// when `per_trial_graphs` is set.
    pub fn prepare(config: &SimConfig, trial: usize) -> Result<RunContext, SimError> {
        config.validate()?;

        let variant = if config.per_trial_graphs {
            Some(trial as u64)
        } else {
            None
        };
        let topo = config.topology.build(variant)?;

        let mut signal_rng = seed::rng(seed::derive(config.master_seed, seed::stream::SIGNAL));
        let (signal_values, delta_cap) = signal::generate(&config.signal, &mut signal_rng);

        let gamma_max = match config.gamma_max {
            Some(g) => g,
            None => {
                bounds::gamma_max_from_bias_power(config.upsilon, delta_cap * config.delta_margin)
                    .clamp(GAMMA_CLAMP.0, GAMMA_CLAMP.1)
            }
        };

        let jitter_seed = match variant {
            Some(v) => seed::derive(config.master_seed, seed::stream::TRIAL_BASE + v),
            None => config.master_seed,
        };
        let loss = config
            .loss
            .build(&topo, jitter_seed)
            .with_symmetric_losses(config.symmetric_losses);

        let theta = if config.thresholds_under_losses {
            let mut rng = seed::rng(seed::derive(
                config.master_seed,
                seed::stream::THRESHOLD_REALIZATION,
            ));
            let fixed = loss.sample(&mut rng);
            (0..topo.n())
                .map(|i| topo.two_hop_set(i, Some(&fixed), config.theta_mode))
                .collect()
        } else {
            topo.theta_sets(config.theta_mode)
        };

        // The cap system bounds lambda_max(K K') = gamma(K)^2, so the
        // solver budget is the square of the spectral budget.
        let (psi, threshold_iterations) = thresholds::fixed_point_solve(
            &theta,
            gamma_max * gamma_max,
            config.solver_tol,
            config.solver_max_iter,
        )?;

        Ok(RunContext {
            topo,
            theta,
            psi,
            threshold_iterations,
            loss,
            signal: signal_values,
            delta_cap,
            gamma_max,
            sigma2: config.sigma2,
            forgetting: config.forgetting,
            bisection_tol: config.bisection_tol,
            estimators: config.estimators.clone(),
            warmup: config.warmup,
        })
    }
}

/// Traces of a single trial.
#[derive(Debug, Clone)]
pub struct TrialResult {
    /// Per estimator: `estimates[t][i]` is node `i`'s estimate at step `t`.
    pub estimates: Vec<(EstimatorKind, Vec<Vec<f64>>)>,
    /// Spectral norm of the proposed estimator's masked weight matrix at
    /// each step from 1 on; empty when `Ep` is not enabled.
    pub gamma_trace: Vec<f64>,
    /// Per-step per-node solve records of the proposed estimator.
    pub records: Vec<StepRecord>,
}

impl TrialResult {
    pub fn estimates_of(&self, kind: EstimatorKind) -> Option<&Vec<Vec<f64>>> {
        self.estimates
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, e)| e)
    }
}

/// Mean squared error over nodes and post-warmup steps.
pub fn mse(estimates: &[Vec<f64>], signal: &[f64], warmup: usize) -> Result<f64, SimError> {
    if warmup >= estimates.len() {
        return Err(SimError::InvalidConfig(format!(
            "warmup {} not below trace length {}",
            warmup,
            estimates.len()
        )));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for t in warmup..estimates.len() {
        for &x in &estimates[t] {
            let e = x - signal[t];
            total += e * e;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Relative error reduction of the proposed estimator over a baseline.
pub fn improvement_factor(mse_baseline: f64, mse_proposed: f64) -> f64 {
    (mse_baseline - mse_proposed) / mse_baseline
}

/// Run one trial: synchronous rounds, every enabled estimator stepping
/// from the same realizations and measurements.
pub fn run_trial(ctx: &RunContext, trial_seed: u64) -> Result<TrialResult, SimError> {
    let n = ctx.topo.n();
    let steps = ctx.signal.len();
    let mut loss_rng = seed::rng(seed::derive(trial_seed, seed::stream::TRIAL_LOSS));
    let mut noise_rng = seed::rng(seed::derive(trial_seed, seed::stream::TRIAL_NOISE));
    let noise =
        Normal::new(0.0, ctx.sigma2.sqrt()).map_err(|e| SimError::InvalidConfig(e.to_string()))?;

    // Step 0: everyone starts from their own first measurement.
    let first_realization = ctx.loss.sample(&mut loss_rng);
    let u0: Vec<f64> = (0..n)
        .map(|_| ctx.signal[0] + noise.sample(&mut noise_rng))
        .collect();

    let mut estimates: Vec<(EstimatorKind, Vec<Vec<f64>>)> = ctx
        .estimators
        .iter()
        .map(|&kind| (kind, vec![u0.clone()]))
        .collect();

    let run_proposed = ctx.estimators.contains(&EstimatorKind::Ep);
    let mut nodes: Vec<NodeState> = if run_proposed {
        (0..n)
            .map(|i| {
                NodeState::init(
                    i,
                    n,
                    ctx.topo.neighborhood(i),
                    u0[i],
                    first_realization.active_set(i),
                    ctx.sigma2,
                )
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut gamma_trace = Vec::new();
    let mut records = Vec::new();

    for t in 1..steps {
        let realization = ctx.loss.sample(&mut loss_rng);
        let u: Vec<f64> = (0..n)
            .map(|_| ctx.signal[t] + noise.sample(&mut noise_rng))
            .collect();

        for (kind, trace) in estimates.iter_mut() {
            let prev = trace.last().unwrap().clone();
            let new = match kind.baseline() {
                Some(b) => step_baseline(b, &realization, &ctx.topo, &prev, &u),
                None => {
                    let new = step_proposed(
                        ctx,
                        &mut nodes,
                        &realization,
                        &prev,
                        &u,
                        t,
                        &mut gamma_trace,
                        &mut records,
                    )?;
                    update_covariances(ctx, &mut nodes, &new, &u);
                    new
                }
            };
            trace.push(new);
        }
    }

    Ok(TrialResult {
        estimates,
        gamma_trace,
        records,
    })
}

fn step_baseline(
    kind: BaselineKind,
    realization: &LossRealization,
    topo: &Topology,
    prev: &[f64],
    u: &[f64],
) -> Vec<f64> {
    (0..prev.len())
        .map(|i| {
            let (k, h) = kind.node_weights(realization, topo, i);
            crate::filter::update_estimate(&k, &h, prev, u)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn step_proposed(
    ctx: &RunContext,
    nodes: &mut [NodeState],
    realization: &LossRealization,
    prev: &[f64],
    u: &[f64],
    t: usize,
    gamma_trace: &mut Vec<f64>,
    records: &mut Vec<StepRecord>,
) -> Result<Vec<f64>, SimError> {
    let n = nodes.len();
    let mut new = vec![0.0; n];
    let mut weight_matrix = DMatrix::zeros(n, n);
    for (i, node) in nodes.iter_mut().enumerate() {
        let params = FilterParams {
            sigma2: ctx.sigma2,
            psi_i: ctx.psi.psi[i],
            bisection_tol: ctx.bisection_tol,
            forgetting: ctx.forgetting,
        };
        let mut record = node
            .step(&params, prev, u, realization.active_set(i))
            .map_err(|source| SimError::Filter {
                step: t,
                node: i,
                source,
            })?;
        record.step = t;
        new[i] = record.x;
        for (j, &w) in record.k_row.iter().enumerate() {
            weight_matrix[(i, j)] = w;
        }
        debug_multiplier_bound_check(ctx, node);
        records.push(record);
    }
    // Rows are already masked to the realized support, so this is the
    // spectral norm of the effective estimate-weight matrix.
    gamma_trace.push(linalg::spectral_norm(&weight_matrix));
    Ok(new)
}

/// Covariance tracking: each node compares the fresh estimates of the
/// nodes it heard from against the mean of the measurements it received
/// this step (its only unbiased local reference for the signal). The
/// reference mean carries variance `sigma2 / m`, which contaminates every
/// residual product identically and is subtracted.
fn update_covariances(ctx: &RunContext, nodes: &mut [NodeState], new: &[f64], u: &[f64]) {
    for node in nodes.iter_mut() {
        let active = node.active_set.clone();
        let m = active.len() as f64;
        let u_bar: f64 = active.iter().map(|&j| u[j]).sum::<f64>() / m;
        let mut residuals = vec![0.0; new.len()];
        for &j in &active {
            residuals[j] = new[j] - u_bar;
        }
        node.covariance_update_debiased(&residuals, ctx.forgetting, ctx.sigma2 / m);
    }
}

/// In debug builds, check the analytic cap on the largest eigenvalue of
/// the shifted covariance block whenever the tracked covariance is in its
/// nominal regime (diagonal at or below the measurement variance).
fn debug_multiplier_bound_check(ctx: &RunContext, node: &NodeState) {
    if !cfg!(debug_assertions) || ctx.sigma2 == 0.0 {
        return;
    }
    let active = &node.active_set;
    let diag_ok = active.iter().all(|&j| node.gamma_hat[(j, j)] <= ctx.sigma2);
    if !diag_ok {
        return;
    }
    let m = active.len();
    let block = DMatrix::from_fn(m, m, |r, c| {
        node.gamma_hat[(active[r], active[c])] + if r == c { node.lambda } else { 0.0 }
    });
    let top = linalg::max_symmetric_eigenvalue(&block);
    // The multiplier interval is driven by the solver-level budget.
    let cap = bounds::multiplier_sup_bound(ctx.topo.n(), ctx.psi.gamma_max, ctx.sigma2);
    debug_assert!(
        top < cap,
        "shifted covariance eigenvalue {top} reached the analytic cap {cap}"
    );
}

/// Per-estimator aggregate over a Monte Carlo run.
#[derive(Debug, Clone)]
pub struct EstimatorReport {
    pub kind: EstimatorKind,
    pub mse_mean: f64,
    /// Sample variance of the per-trial MSEs (0 for a single trial).
    pub mse_var: f64,
    pub per_trial_mse: Vec<f64>,
}

/// Aggregated result of a Monte Carlo run.
#[derive(Debug, Clone)]
pub struct SimReport {
    pub estimators: Vec<EstimatorReport>,
    /// Per-trial spectral-norm traces of the proposed estimator.
    pub gamma_traces: Vec<Vec<f64>>,
    /// Norm over nodes of the trial-averaged error of the proposed
    /// estimator, per step.
    pub bias_trace: Vec<f64>,
    pub threshold_iterations: Vec<usize>,
    pub warmup: usize,
    /// Full traces of the first trial, for per-step output.
    pub first_trial: Option<TrialResult>,
    pub signal: Vec<f64>,
}

impl SimReport {
    pub fn mse_of(&self, kind: EstimatorKind) -> Option<f64> {
        self.estimators
            .iter()
            .find(|e| e.kind == kind)
            .map(|e| e.mse_mean)
    }

    /// Improvement factors of the proposed estimator versus each enabled
    /// baseline, recomputed from the stored mean MSEs.
    pub fn improvement_factors(&self) -> Vec<(EstimatorKind, f64)> {
        let Some(proposed) = self.mse_of(EstimatorKind::Ep) else {
            return Vec::new();
        };
        self.estimators
            .iter()
            .filter(|e| e.kind != EstimatorKind::Ep)
            .map(|e| (e.kind, improvement_factor(e.mse_mean, proposed)))
            .collect()
    }
}

type TrialOutcome = Result<(RunContext, TrialResult), SimError>;

/// Run all trials of a configuration, optionally on `jobs` worker
/// threads. Trial seeds depend only on the master seed and the trial
/// index, so the schedule cannot change any result.
pub fn monte_carlo(config: &SimConfig, jobs: usize) -> Result<SimReport, SimError> {
    config.validate()?;
    let trials = config.trials;
    let one_trial = |t: usize| -> TrialOutcome {
        RunContext::prepare(config, t).and_then(|ctx| {
            let trial_seed = seed::derive(config.master_seed, seed::stream::TRIAL_BASE + t as u64);
            run_trial(&ctx, trial_seed).map(|r| (ctx, r))
        })
    };
    // No threads on wasm targets; a single worker also runs inline.
    let workers = if cfg!(target_arch = "wasm32") {
        1
    } else {
        jobs.max(1).min(trials)
    };
    let outcomes: Vec<Option<TrialOutcome>> = if workers <= 1 {
        (0..trials).map(|t| Some(one_trial(t))).collect()
    } else {
        let slots: Mutex<Vec<Option<TrialOutcome>>> =
            Mutex::new((0..trials).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let t = next.fetch_add(1, Ordering::Relaxed);
                    if t >= trials {
                        break;
                    }
                    let outcome = one_trial(t);
                    slots.lock().unwrap()[t] = Some(outcome);
                });
            }
        });
        slots.into_inner().unwrap()
    };

    let mut per_trial: Vec<(RunContext, TrialResult)> = Vec::with_capacity(trials);
    for outcome in outcomes {
        per_trial.push(outcome.expect("all trials visited")?);
    }

    let signal = per_trial[0].0.signal.clone();
    let steps = signal.len();
    let mut estimators = Vec::new();
    for &kind in &config.estimators {
        let per_trial_mse: Vec<f64> = per_trial
            .iter()
            .map(|(ctx, trial)| {
                mse(
                    trial.estimates_of(kind).expect("estimator enabled"),
                    &ctx.signal,
                    config.warmup,
                )
            })
            .collect::<Result<_, _>>()?;
        let mean = per_trial_mse.iter().sum::<f64>() / trials as f64;
        let var = if trials > 1 {
            per_trial_mse
                .iter()
                .map(|m| (m - mean).powi(2))
                .sum::<f64>()
                / (trials as f64 - 1.0)
        } else {
            0.0
        };
        estimators.push(EstimatorReport {
            kind,
            mse_mean: mean,
            mse_var: var,
            per_trial_mse,
        });
    }

    let gamma_traces: Vec<Vec<f64>> = per_trial
        .iter()
        .map(|(_, trial)| trial.gamma_trace.clone())
        .collect();

    let bias_trace = if config.estimators.contains(&EstimatorKind::Ep) {
        let n = per_trial[0].0.topo.n();
        let mut mean_error = vec![vec![0.0f64; n]; steps];
        for (ctx, trial) in &per_trial {
            let traces = trial.estimates_of(EstimatorKind::Ep).unwrap();
            for t in 0..steps {
                for i in 0..n {
                    mean_error[t][i] += (traces[t][i] - ctx.signal[t]) / trials as f64;
                }
            }
        }
        mean_error
            .iter()
            .map(|row| row.iter().map(|e| e * e).sum::<f64>().sqrt())
            .collect()
    } else {
        Vec::new()
    };

    let threshold_iterations = per_trial
        .iter()
        .map(|(ctx, _)| ctx.threshold_iterations)
        .collect();

    let first_trial = Some(per_trial.swap_remove(0).1);

    Ok(SimReport {
        estimators,
        gamma_traces,
        bias_trace,
        threshold_iterations,
        warmup: config.warmup,
        first_trial,
        signal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_config() -> SimConfig {
        let mut config = SimConfig::benchmark_defaults();
        config.topology = TopologySpec::geometric_default(10, 3);
        config.signal = SignalSpec::multisine(2.0, 120);
        config.trials = 2;
        config.warmup = 40;
        config.master_seed = 11;
        config
    }

    #[test]
    fn mse_rejects_bad_warmup() {
        let est = vec![vec![0.0]; 5];
        assert!(mse(&est, &[0.0; 5], 5).is_err());
        assert!(mse(&est, &[0.0; 5], 4).is_ok());
    }

    #[test]
    fn mse_arithmetic() {
        let est = vec![vec![1.0, 3.0], vec![2.0, 0.0]];
        let signal = vec![1.0, 1.0];
        // Only t = 1 counts with warmup 1: errors 1 and -1.
        assert_eq!(mse(&est, &signal, 1).unwrap(), 1.0);
    }

    #[test]
    fn improvement_factor_examples() {
        assert_eq!(improvement_factor(2.0, 0.5), 0.75);
        assert_eq!(improvement_factor(1.0, 1.0), 0.0);
        assert_eq!(improvement_factor(1.0, 0.0), 1.0);
    }

    #[test]
    fn noiseless_constant_signal_is_tracked_exactly() {
        let mut config = quick_config();
        config.sigma2 = 0.0;
        config.loss = LossSpec::Uniform { q: 0.0 };
        config.signal = SignalSpec {
            kind: SignalKind::Constant,
            freq_scale: 1.0,
            amplitude: 2.0,
            length: 100,
        };
        config.gamma_max = Some(0.5);
        config.trials = 1;
        let report = monte_carlo(&config, 1).unwrap();
        for est in &report.estimators {
            assert!(
                est.mse_mean < 1e-24,
                "{} mse {}",
                est.kind.label(),
                est.mse_mean
            );
        }
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let config = quick_config();
        let a = monte_carlo(&config, 1).unwrap();
        let b = monte_carlo(&config, 1).unwrap();
        for (x, y) in a.estimators.iter().zip(&b.estimators) {
            assert_eq!(x.per_trial_mse, y.per_trial_mse);
        }
        assert_eq!(a.gamma_traces, b.gamma_traces);
        assert_eq!(a.bias_trace, b.bias_trace);
    }

    #[test]
    fn parallel_and_serial_runs_agree() {
        let config = quick_config();
        let serial = monte_carlo(&config, 1).unwrap();
        let parallel = monte_carlo(&config, 4).unwrap();
        for (x, y) in serial.estimators.iter().zip(&parallel.estimators) {
            assert_eq!(x.per_trial_mse, y.per_trial_mse);
        }
        assert_eq!(serial.gamma_traces, parallel.gamma_traces);
    }

    #[test]
    fn contraction_budget_derivation() {
        // Explicit budget wins.
        let mut config = quick_config();
        config.gamma_max = Some(0.5);
        let ctx = RunContext::prepare(&config, 0).unwrap();
        assert_eq!(ctx.gamma_max, 0.5);
        assert!((ctx.psi.gamma_max - 0.25).abs() < 1e-15);

        // Otherwise the bias-power rule applies to the margined increment
        // cap.
        config.gamma_max = None;
        config.upsilon = 1.0;
        let ctx = RunContext::prepare(&config, 0).unwrap();
        let expected = 1.0 / (1.0 + 1.05 * ctx.delta_cap);
        assert!((ctx.gamma_max - expected).abs() < 1e-12);

        // A constant signal pushes the rule to its boundary; the budget
        // clamps below 1.
        config.signal = SignalSpec {
            kind: SignalKind::Constant,
            freq_scale: 1.0,
            amplitude: 1.0,
            length: 120,
        };
        let ctx = RunContext::prepare(&config, 0).unwrap();
        assert!(ctx.gamma_max < 1.0);
    }

    #[test]
    fn single_trial_aggregate_equals_the_trial() {
        let mut config = quick_config();
        config.trials = 1;
        let report = monte_carlo(&config, 1).unwrap();
        for est in &report.estimators {
            assert_eq!(est.per_trial_mse.len(), 1);
            assert_eq!(est.mse_mean, est.per_trial_mse[0]);
            assert_eq!(est.mse_var, 0.0);
        }
    }

    #[test]
    fn weight_matrix_norm_respects_the_contraction_cap() {
        // Two-hop coupling sets: the mode under which the cap is
        // guaranteed for every realization.
        let mut config = quick_config();
        config.trials = 2;
        config.theta_mode = ThetaMode::TwoHop;
        let report = monte_carlo(&config, 2).unwrap();
        let ctx = RunContext::prepare(&config, 0).unwrap();
        for trace in &report.gamma_traces {
            assert!(!trace.is_empty());
            for &g in trace {
                assert!(
                    g <= ctx.gamma_max + 1e-9,
                    "spectral norm {g} above {}",
                    ctx.gamma_max
                );
            }
        }
    }

    #[test]
    fn improvement_factors_recompute_from_means() {
        let config = quick_config();
        let report = monte_carlo(&config, 1).unwrap();
        let proposed = report.mse_of(EstimatorKind::Ep).unwrap();
        for (kind, chi) in report.improvement_factors() {
            let baseline = report.mse_of(kind).unwrap();
            assert_eq!(chi, (baseline - proposed) / baseline);
        }
    }

    #[test]
    fn e2_variance_matches_closed_form_on_a_star() {
        // Measurement averaging on a fixed star graph against the
        // closed-form benchmark variance at the hub.
        let mut config = quick_config();
        config.topology = TopologySpec::Star { n: 4 };
        config.per_trial_graphs = false;
        config.loss = LossSpec::Uniform { q: 0.3 };
        config.signal = SignalSpec {
            kind: SignalKind::Constant,
            freq_scale: 1.0,
            amplitude: 1.0,
            length: 4000,
        };
        config.sigma2 = 1.5;
        config.gamma_max = Some(0.5);
        config.estimators = vec![EstimatorKind::E2];
        config.trials = 1;
        config.warmup = 10;
        let ctx = RunContext::prepare(&config, 0).unwrap();
        let trial = run_trial(&ctx, 99).unwrap();
        let traces = trial.estimates_of(EstimatorKind::E2).unwrap();
        let errors: Vec<f64> = traces.iter().skip(10).map(|row| row[0] - 1.0).collect();
        let count = errors.len() as f64;
        let empirical = errors.iter().map(|e| e * e).sum::<f64>() / count;
        let expected = bounds::benchmark_variance(&ctx.loss.incoming_probabilities(0), 1.5);
        // Hub errors are independent across steps; 3 standard errors.
        let tol = 3.0 * empirical * (2.0 / count).sqrt();
        assert!(
            (empirical - expected).abs() < tol,
            "empirical {empirical} expected {expected} tol {tol}"
        );
        // Memoryless averaging is unbiased: the mean error vanishes.
        let mean = errors.iter().sum::<f64>() / count;
        assert!(
            mean.abs() < 3.0 * (empirical / count).sqrt(),
            "mean error {mean}"
        );
    }
}
