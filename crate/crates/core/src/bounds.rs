//! Closed-form performance bounds for the proposed estimator and its
//! measurement-averaging benchmark.

/// Inputs for the variance bound of one node.
#[derive(Debug, Clone)]
pub struct BoundInputs {
    /// Network size N.
    pub n_total: usize,
    /// Closed-neighborhood size of the node.
    pub neighborhood_size: usize,
    pub gamma_max: f64,
    pub sigma2: f64,
    /// Cap on the per-step signal increment |d(t) - d(t-1)|.
    pub delta_cap: f64,
    /// Success probabilities of the node's incoming links, self excluded
    /// (length `neighborhood_size - 1`).
    pub p_vector: Vec<f64>,
}

/// Steady-state cap on the norm of the network-wide expected error when the
/// signal moves at most `delta_cap` per step:
/// `delta_cap * sqrt(N) * gamma_max / (1 - gamma_max)`.
pub fn asymptotic_bias_bound(delta_cap: f64, n_total: usize, gamma_max: f64) -> f64 {
    assert!(delta_cap >= 0.0 && gamma_max > 0.0 && gamma_max < 1.0);
    delta_cap * (n_total as f64).sqrt() * gamma_max / (1.0 - gamma_max)
}

/// Contraction rate that makes the per-node bias power equal `upsilon`:
/// `sqrt(upsilon) / (sqrt(upsilon) + delta_cap)`. Returns the boundary
/// value 1 when `delta_cap` is 0; callers must clamp below 1.
pub fn gamma_max_from_bias_power(upsilon: f64, delta_cap: f64) -> f64 {
    assert!(upsilon >= 0.0, "bias power must be nonnegative");
    assert!(delta_cap >= 0.0);
    let root = upsilon.sqrt();
    if root == 0.0 {
        return 0.0;
    }
    root / (root + delta_cap)
}

/// Distribution of the number of successfully received in-neighbors
/// (self excluded): coefficient `k` of the polynomial
/// `prod_j (q_j + p_j z)`. Sums to 1.
pub fn chi_coefficients(p_vector: &[f64]) -> Vec<f64> {
    assert!(
        p_vector.len() <= 64,
        "refusing {} links: iterated polynomial products lose precision",
        p_vector.len()
    );
    let mut coeff = vec![1.0f64];
    for &p in p_vector {
        assert!((0.0..=1.0).contains(&p));
        let q = 1.0 - p;
        let mut next = vec![0.0; coeff.len() + 1];
        for (k, &c) in coeff.iter().enumerate() {
            next[k] += q * c;
            next[k + 1] += p * c;
        }
        coeff = next;
    }
    coeff
}

/// `E[1 / (realized neighbor count)]` for one node:
/// `sum_k chi(k) / (k + 1)`.
pub fn expected_inverse_count(p_vector: &[f64]) -> f64 {
    chi_coefficients(p_vector)
        .iter()
        .enumerate()
        .map(|(k, &c)| c / (k + 1) as f64)
        .sum()
}

/// Closed form of `expected_inverse_count` when every link has the same
/// drop probability `q` and the closed neighborhood has `m` nodes:
/// `(1 - q^m) / ((1 - q) m)`, evaluated through the geometric sum so the
/// `q -> 1` limit is exact.
pub fn uniform_q_factor(q: f64, neighborhood_size: usize) -> f64 {
    assert!((0.0..=1.0).contains(&q) && neighborhood_size >= 1);
    let m = neighborhood_size;
    let sum: f64 = (0..m).map(|k| q.powi(k as i32)).sum();
    sum / m as f64
}

/// Shrink factor the proposed estimator enjoys over plain measurement
/// averaging; strictly below 1 for every `gamma_max` in (0, 1).
pub fn variance_bound_first_factor(n_total: usize, gamma_max: f64) -> f64 {
    let s = (5.0f64.sqrt() - 1.0) * gamma_max.sqrt();
    let n2 = 2.0 * n_total as f64;
    (s + n2) / (2.0 * s + n2)
}

/// Upper bound on the expected error variance of one node under the
/// proposed estimator.
pub fn variance_upper_bound(inputs: &BoundInputs) -> f64 {
    variance_bound_first_factor(inputs.n_total, inputs.gamma_max)
        * inputs.sigma2
        * expected_inverse_count(&inputs.p_vector)
}

/// Strict upper bound on the largest eigenvalue of the masked, shifted
/// covariance block used by the weight computation:
/// `sigma2 * (1 + 2N / ((sqrt(5) - 1) sqrt(gamma_max)))`.
pub fn multiplier_sup_bound(n_total: usize, gamma_max: f64, sigma2: f64) -> f64 {
    sigma2 * (1.0 + 2.0 * n_total as f64 / ((5.0f64.sqrt() - 1.0) * gamma_max.sqrt()))
}

/// Steady-state variance of the measurement-averaging benchmark:
/// `sigma2 * E[1 / (realized neighbor count)]`.
pub fn benchmark_variance(p_vector: &[f64], sigma2: f64) -> f64 {
    sigma2 * expected_inverse_count(p_vector)
}

/// Node position on a line graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinePosition {
    Extreme,
    Interior,
}

/// Quoted coupling-set caps for line graphs, for comparison against the
/// sizes measured on a concrete topology.
pub fn theta_bound_line(position: LinePosition) -> usize {
    match position {
        LinePosition::Extreme => 2,
        LinePosition::Interior => 3,
    }
}

/// Quoted coupling-set cap for Cayley graphs of degree `nu`: `2 nu + 1`.
pub fn theta_bound_cayley(nu: usize) -> usize {
    2 * nu + 1
}
