//! Per-node caps on the squared estimate-weight norm.
//!
//! The caps `psi` are the componentwise-largest positive vector satisfying
//!
//! ```text
//! S_i(psi) = psi_i + sqrt(psi_i) * sum_{j in Theta_i} sqrt(psi_j) - gamma_max <= 0
//! ```
//!
//! for every node, where `Theta_i` is the node's coupling set. Capping
//! `||k_i ∘ phi_i||^2 <= psi_i` then keeps the spectral norm of the global
//! estimate-weight matrix below `gamma_max` for every loss realization. The
//! optimum satisfies all constraints with equality and is found by a
//! componentwise damped fixed-point iteration with per-node optimal step
//! size; the caps are solved once on the loss-free coupling sets before
//! estimation starts.

use crate::topology::TwoHopSet;
use nalgebra::DMatrix;
use thiserror::Error;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Debug, Error)]
pub enum ThresholdError {
    #[error("fixed point not reached after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
}

/// Solved caps, one per node, together with the contraction rate they
/// enforce.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdVector {
    pub psi: Vec<f64>,
    pub gamma_max: f64,
}

impl ThresholdVector {
    /// CSV lines `node,psi` with 1-based node ids.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,psi\n");
        for (i, v) in self.psi.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, v));
        }
        out
    }
}

/// Closed-form feasible point: the cap each node gets when all coupled
/// nodes are assumed to already hold the largest possible value
/// `gamma_max`. Always feasible, and a componentwise lower bound on the
/// optimum.
pub fn feasible_lower_bound(theta_sizes: &[usize], gamma_max: f64) -> ThresholdVector {
    assert!(gamma_max > 0.0 && gamma_max < 1.0);
    let psi = theta_sizes
        .iter()
        .map(|&m| {
            let m = m as f64;
            gamma_max / 4.0 * ((m * m + 4.0).sqrt() - m).powi(2)
        })
        .collect();
    ThresholdVector { psi, gamma_max }
}

/// `S_i(psi)` for every node; all nonpositive iff `psi` is feasible.
pub fn constraint_residuals(psi: &[f64], theta: &[TwoHopSet], gamma_max: f64) -> Vec<f64> {
    theta
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let coupled: f64 = t.members.iter().map(|&j| psi[j].sqrt()).sum();
            psi[i] + psi[i].sqrt() * coupled - gamma_max
        })
        .collect()
}

/// Fastest contractive step size for component `i`, or 0 when the
/// contraction certificate cannot be established at the current iterate.
pub fn rho_star(psi: &[f64], i: usize, theta_i: &TwoHopSet) -> f64 {
    let si = psi[i].sqrt();
    let coupled: f64 = theta_i.members.iter().map(|&j| psi[j].sqrt()).sum();
    let cross: f64 = theta_i
        .members
        .iter()
        .map(|&j| si / (2.0 * psi[j].sqrt()))
        .sum();
    if 1.0 + coupled / (2.0 * si) >= cross {
        2.0 * si / (2.0 * si + coupled)
    } else {
        0.0
    }
}

/// Exact root of `S_i` in `psi_i` with the coupled values held fixed:
/// solving `psi_i + sqrt(psi_i) C - gamma = 0` for the positive root.
fn component_root(coupled_sqrt_sum: f64, gamma_max: f64) -> f64 {
    let c = coupled_sqrt_sum;
    (0.5 * ((c * c + 4.0 * gamma_max).sqrt() - c)).powi(2)
}

/// Solve the equality system by componentwise damped sweeps started from
/// the feasible lower bound. Returns the caps and the number of sweeps.
///
/// Each sweep updates the components in index order using the latest
/// values: `psi_i <- psi_i - rho*_i S_i(psi)` where the step size is valid,
/// and the exact per-component root otherwise. The constraint Jacobian is
/// strictly column-dominant with a unit Gershgorin gap, so the sweep
/// contracts near the solution regardless of how uneven the coupling sets
/// are.
pub fn fixed_point_solve(
    theta: &[TwoHopSet],
    gamma_max: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(ThresholdVector, usize), ThresholdError> {
    assert!(gamma_max > 0.0 && gamma_max < 1.0);
    assert!(tol > 0.0);
    let sizes: Vec<usize> = theta.iter().map(|t| t.len()).collect();
    let lower = feasible_lower_bound(&sizes, gamma_max).psi;
    let mut psi = lower.clone();

    for iter in 0..max_iter {
        let residuals = constraint_residuals(&psi, theta, gamma_max);
        let worst = residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        if worst < tol {
            debug_assert!(psi
                .iter()
                .zip(&lower)
                .all(|(&p, &l)| p >= l - tol && p <= gamma_max + tol));
            return Ok((ThresholdVector { psi, gamma_max }, iter));
        }

        for i in 0..psi.len() {
            let rho = rho_star(&psi, i, &theta[i]);
            let coupled: f64 = theta[i].members.iter().map(|&j| psi[j].sqrt()).sum();
            let updated = if rho > 0.0 {
                debug_assert!(contraction_modulus(&psi, i, &theta[i], rho) < 1.0 + 1e-12);
                let residual = psi[i] + psi[i].sqrt() * coupled - gamma_max;
                psi[i] - rho * residual
            } else {
                component_root(coupled, gamma_max)
            };
            debug_assert!(updated > 0.0 && updated <= gamma_max + tol);
            psi[i] = updated;
        }
    }

    let residual = constraint_residuals(&psi, theta, gamma_max)
        .iter()
        .fold(0.0f64, |a, r| a.max(r.abs()));
    Err(ThresholdError::NonConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Contraction modulus of the damped update for component `i`; below 1 the
/// component update is a contraction.
fn contraction_modulus(psi: &[f64], i: usize, theta_i: &TwoHopSet, rho: f64) -> f64 {
    let si = psi[i].sqrt();
    let coupled: f64 = theta_i.members.iter().map(|&j| psi[j].sqrt()).sum();
    let cross: f64 = theta_i
        .members
        .iter()
        .map(|&j| si / (2.0 * psi[j].sqrt()))
        .sum();
    (1.0 - rho * (1.0 + coupled / (2.0 * si))).abs() + rho * cross
}

/// Jacobian of the constraint map at `psi`: diagonal
/// `1 + sum sqrt(psi_j) / (2 sqrt(psi_i))`, entry `(j, i)` equal to
/// `sqrt(psi_j) / (2 sqrt(psi_i))` when `j` is coupled to `i`. All its
/// eigenvalues have real part at least 1.
pub fn constraint_jacobian(psi: &[f64], theta: &[TwoHopSet]) -> DMatrix<f64> {
    let n = psi.len();
    let mut jac = DMatrix::zeros(n, n);
    for i in 0..n {
        let si = psi[i].sqrt();
        let coupled: f64 = theta[i].members.iter().map(|&j| psi[j].sqrt()).sum();
        jac[(i, i)] = 1.0 + coupled / (2.0 * si);
        for &j in &theta[i].members {
            jac[(j, i)] = psi[j].sqrt() / (2.0 * si);
        }
    }
    jac
}

/// Eigenvalues of the constraint Jacobian. Conjugating by
/// `diag(sqrt(psi))` turns the Jacobian into a symmetric matrix with the
/// same spectrum (every off-diagonal entry becomes 1/2 on the coupling
/// pattern), so the eigenvalues are real and can be computed by the
/// symmetric solver.
pub fn jacobian_eigenvalues(psi: &[f64], theta: &[TwoHopSet]) -> Vec<f64> {
    let jac = constraint_jacobian(psi, theta);
    let n = psi.len();
    let scale: Vec<f64> = psi.iter().map(|p| p.sqrt()).collect();
    let mut sym = DMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            sym[(r, c)] = jac[(r, c)] * scale[c] / scale[r];
        }
    }
    // Symmetrize away rounding before the eigensolve.
    let sym = (&sym + sym.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().copied().collect()
}
