//! The proposed per-node estimator.
//!
//! At every step a node mixes the previous estimates and current
//! measurements it actually received:
//!
//! ```text
//! x_i(t) = sum_j k_j * x_j(t-1) + sum_j h_j * u_j(t)
//! ```
//!
//! with weights minimizing the local error variance
//! `k' (G ∘ phi phi') k + sigma2 * ||h ∘ phi||^2` subject to the unbiasedness
//! condition `sum(k + h) = 1` on the realized support and the stability cap
//! `||k ∘ phi||^2 <= psi_i`. The minimizer is closed-form given the
//! Lagrange multiplier of the cap, which is found by bisection. The error
//! covariance `G` is tracked from data with exponential forgetting and
//! re-initialized row/column-wise when a neighbor rejoins after an outage.

use crate::linalg;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Tolerance on the cap residual `||k||^2 - psi_i` in the bisection.
pub const DEFAULT_BISECTION_TOL: f64 = 1e-10;
/// Exponential forgetting factor of the covariance tracker.
pub const DEFAULT_FORGETTING: f64 = 0.96;
/// Added to the support diagonal before inversion to guard conditioning.
const DIAGONAL_LOADING: f64 = 1e-12;
/// Pivot-ratio estimate above which a support block counts as singular.
const CONDITION_LIMIT: f64 = 1e12;
/// Bracket expansions allowed when the multiplier interval, computed from
/// an estimated covariance, fails to straddle the root.
const MAX_BRACKET_DOUBLINGS: usize = 40;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("support block is numerically singular (condition estimate {condition:.3e})")]
    SingularBlock { condition: f64 },
    #[error("multiplier bisection failed: {reason}")]
    BisectionFailure { reason: String },
}

/// Per-node filter parameters.
#[derive(Debug, Clone)]
pub struct FilterParams {
    /// Measurement noise variance; must be positive for the
    /// variance-minimizing solve (0 selects the exact-measurement limit,
    /// where the node simply averages received measurements).
    pub sigma2: f64,
    /// Stability cap on the squared estimate-weight norm.
    pub psi_i: f64,
    pub bisection_tol: f64,
    pub forgetting: f64,
}

impl FilterParams {
    pub fn new(sigma2: f64, psi_i: f64) -> Self {
        FilterParams {
            sigma2,
            psi_i,
            bisection_tol: DEFAULT_BISECTION_TOL,
            forgetting: DEFAULT_FORGETTING,
        }
    }
}

/// Inverse of the `support x support` block of a symmetric matrix,
/// scattered back into an otherwise-zero matrix. Equals the Moore-Penrose
/// pseudo-inverse of `m` masked to the support when the block is
/// invertible.
pub fn masked_pseudoinverse(
    m: &DMatrix<f64>,
    support: &[usize],
) -> Result<DMatrix<f64>, FilterError> {
    let n = m.nrows();
    let block = gather(m, support, 0.0);
    let (inv, _) = invert_checked(&block)?;
    let mut out = DMatrix::zeros(n, n);
    scatter(&inv, support, &mut out);
    Ok(out)
}

fn gather(m: &DMatrix<f64>, support: &[usize], diag_shift: f64) -> DMatrix<f64> {
    let s = support.len();
    DMatrix::from_fn(s, s, |r, c| {
        m[(support[r], support[c])] + if r == c { diag_shift } else { 0.0 }
    })
}

fn scatter(block: &DMatrix<f64>, support: &[usize], out: &mut DMatrix<f64>) {
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            out[(i, j)] = block[(r, c)];
        }
    }
}

fn invert_checked(block: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64), FilterError> {
    match linalg::invert_block(block) {
        Some((inv, condition)) if condition <= CONDITION_LIMIT => Ok((inv, condition)),
        Some((_, condition)) => Err(FilterError::SingularBlock { condition }),
        None => Err(FilterError::SingularBlock {
            condition: f64::INFINITY,
        }),
    }
}

/// Minimum-variance weights for a fixed multiplier `lambda >= 0`.
///
/// With `A` the support block of `gamma_hat` shifted by `lambda` on the
/// diagonal and `S` the total sum of `A^-1`'s entries, the normalizer is
/// `D = S + |support| / sigma2`; then `k_i = rowsum_i(A^-1) / D` and
/// `h_i = 1 / (sigma2 * D)` on the support, zero elsewhere. The support
/// sums of `k + h` add to exactly 1 in exact arithmetic.
pub fn weights_for_lambda(
    gamma_hat: &DMatrix<f64>,
    support: &[usize],
    sigma2: f64,
    lambda: f64,
) -> Result<(DVector<f64>, DVector<f64>), FilterError> {
    assert!(!support.is_empty());
    assert!(sigma2 > 0.0 && lambda >= 0.0);
    let n = gamma_hat.nrows();
    let block = gather(gamma_hat, support, lambda + DIAGONAL_LOADING);
    let (inv, _) = invert_checked(&block)?;

    let m = support.len();
    let row_sums: Vec<f64> = (0..m).map(|r| inv.row(r).sum()).collect();
    let total: f64 = row_sums.iter().sum();
    let normalizer = total + m as f64 / sigma2;

    let mut k = DVector::zeros(n);
    let mut h = DVector::zeros(n);
    for (r, &i) in support.iter().enumerate() {
        k[i] = row_sums[r] / normalizer;
        h[i] = 1.0 / (sigma2 * normalizer);
    }
    Ok((k, h))
}

/// Multiplier of the stability cap: 0 when the unconstrained weights
/// already satisfy `||k||^2 <= psi_i`, otherwise the root of
/// `||k(lambda)||^2 = psi_i` found by bisection over the analytic
/// interval, expanded if the estimated covariance made it too short.
pub fn solve_lambda(
    gamma_hat: &DMatrix<f64>,
    support: &[usize],
    sigma2: f64,
    psi_i: f64,
    tol: f64,
) -> Result<f64, FilterError> {
    assert!(psi_i > 0.0 && tol > 0.0);
    // A singular shifted block means an unbounded weight norm, so the cap
    // is exceeded there: the bisection just has to move up. This happens
    // when a tracked covariance estimate is momentarily indefinite and
    // the probe multiplier sits near one of its negative eigenvalues.
    let residual = |lambda: f64| -> Result<f64, FilterError> {
        match weights_for_lambda(gamma_hat, support, sigma2, lambda) {
            Ok((k, _)) => Ok(k.norm_squared() - psi_i),
            Err(FilterError::SingularBlock { .. }) => Ok(f64::INFINITY),
            Err(other) => Err(other),
        }
    };

    let m = support.len() as f64;
    let min_eig = linalg::min_symmetric_eigenvalue(&gather(gamma_hat, support, 0.0));
    // An indefinite estimate makes the problem non-convex below
    // -min_eig; the search starts where the shifted block turns positive
    // semidefinite.
    let floor = if min_eig < 0.0 {
        -min_eig * (1.0 + 1e-9) + f64::MIN_POSITIVE
    } else {
        0.0
    };
    if residual(floor)? <= 0.0 {
        return Ok(floor);
    }

    let analytic_hi = sigma2 / (m * psi_i).sqrt() - min_eig;
    let mut hi = if analytic_hi > floor {
        analytic_hi
    } else {
        floor + sigma2
    };
    let mut hi_residual = residual(hi)?;
    let mut doublings = 0;
    while hi_residual > 0.0 {
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS {
            return Err(FilterError::BisectionFailure {
                reason: format!(
                    "no sign change up to lambda = {hi:.3e} (covariance estimate inconsistent)"
                ),
            });
        }
        hi *= 2.0;
        hi_residual = residual(hi)?;
    }

    let mut lo = floor;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        // Bracket exhausted at floating-point resolution: the residual is
        // too steep near the root (almost-singular shifted block) to land
        // within tol, and the upper end is the nearest multiplier that
        // keeps the cap.
        if mid <= lo || mid >= hi {
            return Ok(hi);
        }
        let r = residual(mid)?;
        // Converge from the feasible side so the returned multiplier never
        // leaves the cap exceeded.
        if r.abs() < tol && r <= 0.0 {
            return Ok(mid);
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Mix previous estimates and current measurements.
pub fn update_estimate(
    k: &DVector<f64>,
    h: &DVector<f64>,
    prev_estimates: &[f64],
    measurements: &[f64],
) -> f64 {
    let mut x = 0.0;
    for j in 0..k.len() {
        x += k[j] * prev_estimates[j] + h[j] * measurements[j];
    }
    x
}

/// What one node carries between steps.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: usize,
    /// Current estimate of the tracked signal.
    pub x: f64,
    pub k: DVector<f64>,
    pub h: DVector<f64>,
    pub lambda: f64,
    /// Error covariance estimate over the node's closed neighborhood.
    pub gamma_hat: DMatrix<f64>,
    /// Nodes received from at the latest step (self included).
    pub active_set: Vec<usize>,
    neighborhood: Vec<usize>,
}

/// Per-step diagnostic record of one node's solve.
#[derive(Debug, Clone)]
pub struct StepRecord {
    /// Simulation step; 0 until the simulation engine stamps it.
    pub step: usize,
    pub node: usize,
    pub x: f64,
    pub lambda: f64,
    pub k_norm_sq: f64,
    /// Support sum of k + h; 1 up to solver tolerance.
    pub kh_sum: f64,
    pub k_row: Vec<f64>,
}

impl NodeState {
    /// State at time 0: the estimate is the node's own first measurement,
    /// the covariance diagonal starts at the variance of that estimate
    /// relative to the neighbor average, and the multiplier is 0.
    pub fn init(
        id: usize,
        n: usize,
        neighborhood: Vec<usize>,
        own_measurement: f64,
        initial_active: Vec<usize>,
        sigma2: f64,
    ) -> Self {
        let m0 = initial_active.len();
        let init_var = if m0 > 1 {
            sigma2 * (1.0 + 1.0 / (m0 as f64 - 1.0))
        } else {
            sigma2
        };
        let mut gamma_hat = DMatrix::zeros(n, n);
        for &j in &neighborhood {
            gamma_hat[(j, j)] = init_var;
        }
        NodeState {
            id,
            x: own_measurement,
            k: DVector::zeros(n),
            h: DVector::zeros(n),
            lambda: 0.0,
            gamma_hat,
            active_set: initial_active,
            neighborhood,
        }
    }

    /// One synchronous round: re-initialize covariance entries of
    /// rejoining neighbors, solve for the weights, update the estimate.
    pub fn step(
        &mut self,
        params: &FilterParams,
        prev_estimates: &[f64],
        measurements: &[f64],
        active: Vec<usize>,
    ) -> Result<StepRecord, FilterError> {
        for &j in &active {
            if !self.active_set.contains(&j) {
                self.covariance_reinit(j);
            }
        }

        let (k, h, lambda) = if params.sigma2 == 0.0 {
            // Exact measurements: averaging them is optimal and the
            // variance solve is degenerate.
            let n = self.gamma_hat.nrows();
            let mut h = DVector::zeros(n);
            for &j in &active {
                h[j] = 1.0 / active.len() as f64;
            }
            (DVector::zeros(n), h, 0.0)
        } else {
            let lambda = solve_lambda(
                &self.gamma_hat,
                &active,
                params.sigma2,
                params.psi_i,
                params.bisection_tol,
            )?;
            let (k, h) = weights_for_lambda(&self.gamma_hat, &active, params.sigma2, lambda)?;
            (k, h, lambda)
        };

        let x = update_estimate(&k, &h, prev_estimates, measurements);
        let record = StepRecord {
            step: 0,
            node: self.id,
            x,
            lambda,
            k_norm_sq: k.norm_squared(),
            kh_sum: active.iter().map(|&j| k[j] + h[j]).sum(),
            k_row: k.iter().copied().collect(),
        };
        self.x = x;
        self.k = k;
        self.h = h;
        self.lambda = lambda;
        self.active_set = active;
        Ok(record)
    }

    /// Rank-one covariance refresh over the nodes heard from this step:
    /// `G[j][l] <- f * G[j][l] + (1 - f) * r_j * r_l`.
    pub fn covariance_update(&mut self, residuals: &[f64], forgetting: f64) {
        self.covariance_update_debiased(residuals, forgetting, 0.0);
    }

    /// Covariance refresh with a known common term subtracted from every
    /// product. When the residuals are measured against a noisy common
    /// reference (the mean of the received measurements), the reference
    /// variance contaminates every pair identically; removing it keeps the
    /// tracked matrix close to the actual error covariance. Diagonal
    /// entries are floored at zero.
    pub fn covariance_update_debiased(
        &mut self,
        residuals: &[f64],
        forgetting: f64,
        common_term: f64,
    ) {
        for &j in &self.active_set {
            for &l in &self.active_set {
                let product = residuals[j] * residuals[l] - common_term;
                let updated = forgetting * self.gamma_hat[(j, l)] + (1.0 - forgetting) * product;
                self.gamma_hat[(j, l)] = if j == l { updated.max(0.0) } else { updated };
            }
        }
    }

    /// A neighbor came back after an outage: its stale variance entry is
    /// replaced by the worst current diagonal and its cross terms are
    /// dropped.
    pub fn covariance_reinit(&mut self, rejoined: usize) {
        let max_diag = self
            .neighborhood
            .iter()
            .map(|&j| self.gamma_hat[(j, j)])
            .fold(f64::NEG_INFINITY, f64::max);
        self.gamma_hat[(rejoined, rejoined)] = max_diag;
        for &l in &self.neighborhood.clone() {
            if l != rejoined {
                self.gamma_hat[(l, rejoined)] = 0.0;
                self.gamma_hat[(rejoined, l)] = 0.0;
            }
        }
    }

    pub fn neighborhood(&self) -> &[usize] {
        &self.neighborhood
    }
}
