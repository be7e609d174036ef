//! Static communication graphs and the neighborhood queries used by the
//! threshold solver.
//!
//! A node is always a member of its own (closed) neighborhood. Node ids are
//! 0-based in the API; the edge-list text format is 1-based.

use crate::channel::LossRealization;
use crate::seed;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("invalid generator set: {0}")]
    InvalidGenerators(String),
    #[error("bad edge list: {0}")]
    ParseError(String),
}

/// How the coupling set of the decentralized stability constraint is read.
///
/// `TwoHop` collects every other node whose closed neighborhood intersects
/// the owner's; `Neighborhood` restricts to direct neighbors only. `TwoHop`
/// is larger, hence conservative: it shrinks the solved thresholds and
/// strengthens the spectral-norm guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThetaMode {
    #[default]
    TwoHop,
    Neighborhood,
}

impl std::str::FromStr for ThetaMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "two_hop" => Ok(ThetaMode::TwoHop),
            "neighborhood" => Ok(ThetaMode::Neighborhood),
            other => Err(format!("unknown theta mode `{other}`")),
        }
    }
}

/// Coupling set of one node: the nodes (owner excluded) whose realized
/// neighborhoods can interact with the owner's weight constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoHopSet {
    pub owner: usize,
    /// Sorted, never contains `owner`.
    pub members: Vec<usize>,
}

impl TwoHopSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Undirected communication graph with a true diagonal (each node hears
/// itself). Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    n: usize,
    adj: Vec<bool>,
    positions: Option<Vec<(f64, f64)>>,
}

impl Topology {
    fn empty(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let mut adj = vec![false; n * n];
        for i in 0..n {
            adj[i * n + i] = true;
        }
        Topology {
            n,
            adj,
            positions: None,
        }
    }

    fn connect(&mut self, i: usize, j: usize) {
        self.adj[i * self.n + j] = true;
        self.adj[j * self.n + i] = true;
    }

    /// Geometric random graph: `n` nodes placed uniformly i.i.d. in
    /// `[0, side]^2`, connected when closer than `radius`. Deterministic
    /// given the seed. Degenerate inputs yield edgeless or complete graphs;
    /// connectivity is not enforced.
    pub fn geometric(n: usize, side: f64, radius: f64, graph_seed: u64) -> Self {
        assert!(n >= 1 && side > 0.0 && radius > 0.0);
        let mut rng = seed::rng(seed::derive(graph_seed, seed::stream::TOPOLOGY));
        let positions: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen::<f64>() * side, rng.gen::<f64>() * side))
            .collect();
        Self::from_positions(&positions, radius)
    }

    /// Geometric graph over explicitly placed nodes.
    pub fn from_positions(positions: &[(f64, f64)], radius: f64) -> Self {
        let n = positions.len();
        let mut topo = Self::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let (dx, dy) = (
                    positions[i].0 - positions[j].0,
                    positions[i].1 - positions[j].1,
                );
                if (dx * dx + dy * dy).sqrt() < radius {
                    topo.connect(i, j);
                }
            }
        }
        topo.positions = Some(positions.to_vec());
        topo
    }

    /// Path graph: nodes adjacent when their indices differ by one.
    pub fn line(n: usize) -> Self {
        let mut topo = Self::empty(n);
        for i in 1..n {
            topo.connect(i - 1, i);
        }
        topo
    }

    /// Star graph: node 0 connected to every other node.
    pub fn star(n: usize) -> Self {
        let mut topo = Self::empty(n);
        for i in 1..n {
            topo.connect(0, i);
        }
        topo
    }

    /// Cayley graph on Z_n: `i` and `j` adjacent iff `(i - j) mod n` is in
    /// the generator set. The set must contain 0 and be closed under
    /// negation mod n.
    pub fn cayley(n: usize, generators: &[usize]) -> Result<Self, TopologyError> {
        let mut gens: Vec<usize> = generators.iter().map(|g| g % n).collect();
        gens.sort_unstable();
        gens.dedup();
        if !gens.contains(&0) {
            return Err(TopologyError::InvalidGenerators(
                "generator set must contain 0".into(),
            ));
        }
        for &g in &gens {
            if !gens.contains(&((n - g) % n)) {
                return Err(TopologyError::InvalidGenerators(format!(
                    "generator {g} has no inverse {} in the set",
                    (n - g) % n
                )));
            }
        }
        let mut topo = Self::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if gens.contains(&((i + n - j) % n)) {
                    topo.connect(i, j);
                }
            }
        }
        Ok(topo)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn positions(&self) -> Option<&[(f64, f64)]> {
        self.positions.as_deref()
    }

    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j]
    }

    /// Closed neighborhood of `i` (contains `i`), ascending.
    pub fn neighborhood(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.is_adjacent(i, j)).collect()
    }

    /// Size of the closed neighborhood.
    pub fn neighborhood_size(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.is_adjacent(i, j)).count()
    }

    /// Degree excluding the node itself.
    pub fn degree(&self, i: usize) -> usize {
        self.neighborhood_size(i) - 1
    }

    /// Undirected edges, each listed once as (i, j) with i < j.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.is_adjacent(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Coupling set of node `i`, optionally restricted to the links active
    /// in a reception realization. With a realization, node `v`'s
    /// neighborhood shrinks to the senders it actually heard from.
    pub fn two_hop_set(
        &self,
        i: usize,
        realization: Option<&LossRealization>,
        mode: ThetaMode,
    ) -> TwoHopSet {
        assert!(i < self.n);
        let realized = |v: usize| -> Vec<usize> {
            match realization {
                None => self.neighborhood(v),
                Some(r) => self
                    .neighborhood(v)
                    .into_iter()
                    .filter(|&j| r.received(v, j))
                    .collect(),
            }
        };
        let own = realized(i);
        let members = match mode {
            ThetaMode::Neighborhood => own.into_iter().filter(|&j| j != i).collect(),
            ThetaMode::TwoHop => {
                let mut in_own = vec![false; self.n];
                for &j in &own {
                    in_own[j] = true;
                }
                (0..self.n)
                    .filter(|&j| j != i && realized(j).iter().any(|&l| in_own[l]))
                    .collect()
            }
        };
        TwoHopSet { owner: i, members }
    }

    /// Loss-free coupling sets for every node.
    pub fn theta_sets(&self, mode: ThetaMode) -> Vec<TwoHopSet> {
        (0..self.n)
            .map(|i| self.two_hop_set(i, None, mode))
            .collect()
    }

    /// (mean, min, max) of the closed-neighborhood sizes.
    pub fn neighborhood_stats(&self) -> (f64, usize, usize) {
        let sizes: Vec<usize> = (0..self.n).map(|i| self.neighborhood_size(i)).collect();
        let mean = sizes.iter().sum::<usize>() as f64 / self.n as f64;
        (
            mean,
            *sizes.iter().min().unwrap(),
            *sizes.iter().max().unwrap(),
        )
    }

    /// Edge-list text: first line `n`, then one `i j` pair per undirected
    /// edge, 1-based. Self-loops are implicit and not listed.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for (i, j) in self.edges() {
            out.push_str(&format!("{} {}\n", i + 1, j + 1));
        }
        out
    }

    /// Parse the edge-list text format. Positions are not preserved.
    pub fn from_edge_list(text: &str) -> Result<Self, TopologyError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| TopologyError::ParseError("empty input".into()))?
            .trim()
            .parse()
            .map_err(|e| TopologyError::ParseError(format!("bad node count: {e}")))?;
        if n == 0 {
            return Err(TopologyError::ParseError("node count must be >= 1".into()));
        }
        let mut topo = Self::empty(n);
        for line in lines {
            let mut it = line.split_whitespace();
            let (a, b) = (it.next(), it.next());
            let (a, b) = match (a, b) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(TopologyError::ParseError(format!("bad edge line `{line}`"))),
            };
            let parse = |s: &str| -> Result<usize, TopologyError> {
                let v: usize = s
                    .parse()
                    .map_err(|e| TopologyError::ParseError(format!("bad node id `{s}`: {e}")))?;
                if v < 1 || v > n {
                    return Err(TopologyError::ParseError(format!(
                        "node id {v} out of range 1..={n}"
                    )));
                }
                Ok(v - 1)
            };
            let (i, j) = (parse(a)?, parse(b)?);
            topo.connect(i, j);
        }
        Ok(topo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LossModel;
    use proptest::prelude::*;

    #[test]
    fn single_node_is_its_own_neighborhood() {
        let t = Topology::geometric(1, 5.0, 1.0, 3);
        assert_eq!(t.neighborhood(0), vec![0]);
    }

    #[test]
    fn injected_positions_follow_distance_rule() {
        let t = Topology::from_positions(&[(0.0, 0.0), (1.0, 0.0), (5.0, 0.0)], 2.0);
        assert!(t.is_adjacent(0, 1));
        assert!(!t.is_adjacent(0, 2));
        assert!(!t.is_adjacent(1, 2));
        assert_eq!(t.edges(), vec![(0, 1)]);
    }

    #[test]
    fn geometric_is_deterministic() {
        let a = Topology::geometric(20, 10.0, 3.8, 7);
        let b = Topology::geometric(20, 10.0, 3.8, 7);
        assert_eq!(a, b);
    }

    #[test]
    fn geometric_mean_neighborhood_matches_reference_density() {
        // Reference setting: 20 nodes on a square of side N/2 with the
        // default radius used by the simulator; the expected mean closed
        // neighborhood is about 6.6.
        let mut total = 0.0;
        for graph_seed in 0..30 {
            let t = Topology::geometric(20, 10.0, crate::sim::default_radius(20), graph_seed);
            total += t.neighborhood_stats().0;
        }
        let mean = total / 30.0;
        assert!(
            (mean - 6.6).abs() <= 1.5,
            "mean closed neighborhood {mean} out of 6.6 +/- 1.5"
        );
    }

    #[test]
    fn line_graph_basics() {
        let t = Topology::line(2);
        assert!(t.is_adjacent(0, 1));

        let t = Topology::line(5);
        assert_eq!(t.neighborhood(2), vec![1, 2, 3]);
        assert_eq!(t.edges().len(), 4);
    }

    #[test]
    fn line_two_hop_examples() {
        let t = Topology::line(5);
        let theta = t.two_hop_set(0, None, ThetaMode::TwoHop);
        assert_eq!(theta.members, vec![1, 2]);

        let t = Topology::line(7);
        let ends = t.two_hop_set(0, None, ThetaMode::TwoHop);
        assert_eq!(ends.members, vec![1, 2]);
        let middle = t.two_hop_set(3, None, ThetaMode::TwoHop);
        assert_eq!(middle.members, vec![1, 2, 4, 5]);
        // Under the neighborhood reading the middle set shrinks to 2.
        let middle_nb = t.two_hop_set(3, None, ThetaMode::Neighborhood);
        assert_eq!(middle_nb.members, vec![2, 4]);
    }

    #[test]
    fn complete_graph_two_hop_covers_everyone() {
        let t = Topology::cayley(4, &[0, 1, 2, 3]).unwrap();
        let theta = t.two_hop_set(0, None, ThetaMode::TwoHop);
        assert_eq!(theta.members, vec![1, 2, 3]);
    }

    #[test]
    fn cayley_example_is_six_regular() {
        let t = Topology::cayley(15, &[0, 1, 3, 4, 11, 12, 14]).unwrap();
        for i in 0..15 {
            assert_eq!(t.degree(i), 6);
        }
        // Vertex-transitivity: identical coupling-set sizes everywhere.
        let sizes: Vec<usize> = (0..15)
            .map(|i| t.two_hop_set(i, None, ThetaMode::TwoHop).len())
            .collect();
        assert!(sizes.iter().all(|&s| s == sizes[0]));
        // The direct-neighbor reading respects the 2*degree+1 cap; the
        // conservative two-hop reading may exceed it on dense generator
        // sets like this one.
        for i in 0..15 {
            let nb = t.two_hop_set(i, None, ThetaMode::Neighborhood);
            assert!(nb.len() <= 2 * 6 + 1);
        }
    }

    #[test]
    fn cayley_self_loops_only() {
        let t = Topology::cayley(5, &[0]).unwrap();
        assert!(t.edges().is_empty());
        for i in 0..5 {
            assert_eq!(t.neighborhood(i), vec![i]);
        }
    }

    #[test]
    fn cayley_rejects_unclosed_generators() {
        assert!(Topology::cayley(10, &[0, 1]).is_err());
        assert!(Topology::cayley(10, &[1, 9]).is_err());
        assert!(Topology::cayley(10, &[0, 1, 9]).is_ok());
    }

    #[test]
    fn star_graph_shape() {
        let t = Topology::star(4);
        assert_eq!(t.neighborhood_size(0), 4);
        for i in 1..4 {
            assert_eq!(t.neighborhood_size(i), 2);
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let t = Topology::geometric(12, 6.0, 2.5, 11);
        let text = t.to_edge_list();
        let back = Topology::from_edge_list(&text).unwrap();
        assert_eq!(t.n(), back.n());
        for i in 0..t.n() {
            for j in 0..t.n() {
                assert_eq!(t.is_adjacent(i, j), back.is_adjacent(i, j));
            }
        }
    }

    #[test]
    fn edge_list_rejects_garbage() {
        assert!(Topology::from_edge_list("").is_err());
        assert!(Topology::from_edge_list("3\n1\n").is_err());
        assert!(Topology::from_edge_list("3\n1 4\n").is_err());
        assert!(Topology::from_edge_list("0\n").is_err());
    }

    proptest! {
        #[test]
        fn adjacency_is_symmetric(n_seed in 0u64..50) {
            let t = Topology::geometric(15, 8.0, 3.0, n_seed);
            for i in 0..15 {
                for j in 0..15 {
                    prop_assert_eq!(t.is_adjacent(i, j), t.is_adjacent(j, i));
                }
                prop_assert!(t.is_adjacent(i, i));
            }
        }

        #[test]
        fn restricting_links_never_enlarges_theta(g_seed in 0u64..30, loss_seed in 0u64..30) {
            let t = Topology::geometric(12, 6.0, 3.0, g_seed);
            let model = LossModel::uniform(&t, 0.4);
            let mut rng = crate::seed::rng(loss_seed);
            let r = model.sample(&mut rng);
            for i in 0..12 {
                let full = t.two_hop_set(i, None, ThetaMode::TwoHop);
                let restricted = t.two_hop_set(i, Some(&r), ThetaMode::TwoHop);
                for m in &restricted.members {
                    prop_assert!(full.members.contains(m));
                }
            }
        }
    }
}
