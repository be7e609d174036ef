//! The four heuristic comparison estimators.
//!
//! All of them share the proposed estimator's update shape
//! `x_i = k' x(t-1) + h' u(t)` with fixed weights over the realized
//! reception set:
//!
//! - `E1`: diffusion weights `K = H = (I - L) / 2` from the instantaneous
//!   reception Laplacian;
//! - `E2`: average of the received measurements;
//! - `E3`: average of the received previous estimates plus the node's own
//!   measurement;
//! - `E4`: half previous estimates, half current measurements.

use crate::channel::LossRealization;
use crate::topology::Topology;
use nalgebra::DVector;

/// Tags for the comparison estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    E1,
    E2,
    E3,
    E4,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        BaselineKind::E1,
        BaselineKind::E2,
        BaselineKind::E3,
        BaselineKind::E4,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            BaselineKind::E1 => "E1",
            BaselineKind::E2 => "E2",
            BaselineKind::E3 => "E3",
            BaselineKind::E4 => "E4",
        }
    }

    /// Weight rows of estimator `self` for node `i` under the given
    /// realization.
    pub fn node_weights(
        &self,
        r: &LossRealization,
        topo: &Topology,
        i: usize,
    ) -> (DVector<f64>, DVector<f64>) {
        match self {
            BaselineKind::E1 => laplacian_weights(r, topo, i),
            BaselineKind::E2 => average_weights(r, i),
            BaselineKind::E3 => old_estimates_plus_own(r, i),
            BaselineKind::E4 => half_half_weights(r, i),
        }
    }
}

/// Row `i` of `K = H = (I - L) / 2`, with `L` the degree-normalized
/// Laplacian of the reception graph seen row-wise by the receiver: lost
/// arcs disappear, the static degree normalizes. `L_ii` is the realized
/// in-degree over the static degree, `L_ij = -1 / degree_i` for each
/// received link; an edgeless realization therefore collapses to
/// `K = H = I / 2`.
pub fn laplacian_weights(
    r: &LossRealization,
    topo: &Topology,
    i: usize,
) -> (DVector<f64>, DVector<f64>) {
    let n = r.n();
    let mut k = DVector::zeros(n);
    let degree = topo.degree(i);
    if degree == 0 {
        k[i] = 0.5;
        return (k.clone(), k);
    }
    let in_degree = r.neighbor_count(i) - 1;
    for j in 0..n {
        if j != i && r.received(i, j) {
            k[j] = 0.5 / degree as f64;
        }
    }
    k[i] = 0.5 * (1.0 - in_degree as f64 / degree as f64);
    (k.clone(), k)
}

/// Row `i` of the measurement-averaging estimator: `k = 0`,
/// `h_j = 1 / |reception set|` on the realized support.
pub fn average_weights(r: &LossRealization, i: usize) -> (DVector<f64>, DVector<f64>) {
    let n = r.n();
    let m = r.neighbor_count(i) as f64;
    let mut h = DVector::zeros(n);
    for j in 0..n {
        if r.received(i, j) {
            h[j] = 1.0 / m;
        }
    }
    (DVector::zeros(n), h)
}

/// Row `i` of the past-estimates-plus-own-measurement estimator:
/// `k_ii = h_ii = 1/(2m)`, `k_ij = 1/m` for received `j != i`.
pub fn old_estimates_plus_own(r: &LossRealization, i: usize) -> (DVector<f64>, DVector<f64>) {
    let n = r.n();
    let m = r.neighbor_count(i) as f64;
    let mut k = DVector::zeros(n);
    let mut h = DVector::zeros(n);
    for j in 0..n {
        if j != i && r.received(i, j) {
            k[j] = 1.0 / m;
        }
    }
    k[i] = 1.0 / (2.0 * m);
    h[i] = 1.0 / (2.0 * m);
    (k, h)
}

/// Row `i` of the half-and-half estimator: `k_ij = h_ij = 1/(2m)` on the
/// realized support.
pub fn half_half_weights(r: &LossRealization, i: usize) -> (DVector<f64>, DVector<f64>) {
    let n = r.n();
    let m = r.neighbor_count(i) as f64;
    let mut k = DVector::zeros(n);
    let mut h = DVector::zeros(n);
    for j in 0..n {
        if r.received(i, j) {
            k[j] = 1.0 / (2.0 * m);
            h[j] = 1.0 / (2.0 * m);
        }
    }
    (k, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LossModel;
    use crate::topology::Topology;

    fn complete(n: usize) -> Topology {
        Topology::cayley(n, &(0..n).collect::<Vec<_>>()).unwrap()
    }

    fn full(n: usize) -> LossRealization {
        LossRealization::full(&complete(n))
    }

    fn isolated(n: usize) -> LossRealization {
        let topo = complete(n);
        let model = LossModel::uniform(&topo, 1.0);
        let mut rng = crate::seed::rng(0);
        model.sample(&mut rng)
    }

    #[test]
    fn laplacian_edgeless_is_half_identity() {
        let topo = complete(3);
        let r = isolated(3);
        for i in 0..3 {
            let (k, h) = laplacian_weights(&r, &topo, i);
            assert_eq!(k[i], 0.5);
            assert_eq!(h[i], 0.5);
            let total: f64 = (0..3).map(|j| k[j] + h[j]).sum();
            assert!((total - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn laplacian_pair_example() {
        let topo = complete(2);
        let r = full(2);
        let (k, h) = laplacian_weights(&r, &topo, 0);
        assert_eq!(k[0], 0.0);
        assert_eq!(k[1], 0.5);
        assert_eq!(k, h);
    }

    #[test]
    fn laplacian_k_equals_h_always() {
        let topo = Topology::geometric(10, 5.0, 2.5, 3);
        let model = LossModel::uniform(&topo, 0.3);
        let mut rng = crate::seed::rng(9);
        for _ in 0..20 {
            let r = model.sample(&mut rng);
            for i in 0..10 {
                let (k, h) = laplacian_weights(&r, &topo, i);
                assert_eq!(k, h);
            }
        }
    }

    #[test]
    fn average_weights_examples() {
        let r = isolated(4);
        let (k, h) = average_weights(&r, 2);
        assert_eq!(k.sum(), 0.0);
        assert_eq!(h[2], 1.0);

        let r = full(4);
        let (_, h) = average_weights(&r, 0);
        for j in 0..4 {
            assert!((h[j] - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn old_estimates_plus_own_examples() {
        let r = isolated(3);
        let (k, h) = old_estimates_plus_own(&r, 1);
        assert_eq!(k[1], 0.5);
        assert_eq!(h[1], 0.5);

        let r = full(2);
        let (k, h) = old_estimates_plus_own(&r, 0);
        assert_eq!(k[0], 0.25);
        assert_eq!(k[1], 0.5);
        assert_eq!(h[0], 0.25);
        let total: f64 = (0..2).map(|j| k[j] + h[j]).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn half_half_examples() {
        let r = isolated(2);
        let (k, h) = half_half_weights(&r, 0);
        assert_eq!(k[0], 0.5);
        assert_eq!(h[0], 0.5);

        let r = full(5);
        let (k, h) = half_half_weights(&r, 3);
        for j in 0..5 {
            assert!((k[j] - 0.1).abs() < 1e-15);
            assert!((h[j] - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn rows_are_stochastic_on_the_support() {
        let topo = Topology::geometric(12, 6.0, 3.0, 1);
        let model = LossModel::uniform(&topo, 0.4);
        let mut rng = crate::seed::rng(17);
        for _ in 0..25 {
            let r = model.sample(&mut rng);
            for i in 0..12 {
                for kind in [BaselineKind::E2, BaselineKind::E3, BaselineKind::E4] {
                    let (k, h) = kind.node_weights(&r, &topo, i);
                    let total: f64 = (0..12).map(|j| k[j] + h[j]).sum();
                    assert!(
                        (total - 1.0).abs() < 1e-12,
                        "{} row sum {total}",
                        kind.label()
                    );
                    for j in 0..12 {
                        if !r.received(i, j) {
                            assert_eq!(k[j] + h[j], 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn laplacian_stays_contractive_on_dense_graphs() {
        use nalgebra::DMatrix;
        let topo = Topology::geometric(20, 10.0, 3.8, 5);
        let model = LossModel::uniform(&topo, 0.2);
        let mut rng = crate::seed::rng(21);
        for _ in 0..10 {
            let r = model.sample(&mut rng);
            let n = topo.n();
            let mut kmat = DMatrix::zeros(n, n);
            for i in 0..n {
                let (k, _) = laplacian_weights(&r, &topo, i);
                for j in 0..n {
                    kmat[(i, j)] = k[j];
                }
            }
            let norm = kmat.svd(false, false).singular_values.max();
            assert!(norm <= 0.75, "diffusion weight norm {norm}");
        }
    }
}
