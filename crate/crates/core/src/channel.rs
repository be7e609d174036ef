//! Independent per-link Bernoulli packet losses.
//!
//! `p[i][j]` is the probability that node `i` receives what `j` broadcast at
//! a given step. Local information is never lost (`p[i][i] = 1`) and links
//! absent from the topology never deliver (`p[i][j] = 0`). Reception is
//! directional: by default `phi[i][j]` and `phi[j][i]` are independent draws.

use crate::seed;
use crate::topology::Topology;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid loss model: {0}")]
    InvalidModel(String),
    #[error("bad loss-model text: {0}")]
    ParseError(String),
}

/// Per-link success probabilities for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct LossModel {
    n: usize,
    p: Vec<f64>,
    symmetric_losses: bool,
}

impl LossModel {
    /// All links always deliver.
    pub fn lossless(topo: &Topology) -> Self {
        Self::uniform(topo, 0.0)
    }

    /// Every existing link drops with the same probability `q`.
    pub fn uniform(topo: &Topology, q: f64) -> Self {
        assert!((0.0..=1.0).contains(&q));
        let n = topo.n();
        let mut p = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    p[i * n + i] = 1.0;
                } else if topo.is_adjacent(i, j) {
                    p[i * n + j] = 1.0 - q;
                }
            }
        }
        LossModel {
            n,
            p,
            symmetric_losses: false,
        }
    }

    /// Heterogeneous links: each directed link's drop probability is drawn
    /// once, uniformly from `[q - jitter, q + jitter]` clamped to [0, 1].
    pub fn jittered(topo: &Topology, q: f64, jitter: f64, jitter_seed: u64) -> Self {
        let mut model = Self::uniform(topo, q);
        if jitter == 0.0 {
            return model;
        }
        let n = model.n;
        let mut rng = seed::rng(seed::derive(jitter_seed, seed::stream::LINK_JITTER));
        for i in 0..n {
            for j in 0..n {
                if i != j && topo.is_adjacent(i, j) {
                    let qij = (q + jitter * (2.0 * rng.gen::<f64>() - 1.0)).clamp(0.0, 1.0);
                    model.p[i * n + j] = 1.0 - qij;
                }
            }
        }
        model
    }

    /// Build from an explicit dense probability matrix, validating the
    /// diagonal and the adjacency zero pattern.
    pub fn from_probabilities(topo: &Topology, p: Vec<f64>) -> Result<Self, ChannelError> {
        let n = topo.n();
        if p.len() != n * n {
            return Err(ChannelError::InvalidModel(format!(
                "expected {} entries, got {}",
                n * n,
                p.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = p[i * n + j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(ChannelError::InvalidModel(format!(
                        "p[{i}][{j}] = {v} outside [0, 1]"
                    )));
                }
                if i == j && v != 1.0 {
                    return Err(ChannelError::InvalidModel(format!(
                        "p[{i}][{i}] must be 1, got {v}"
                    )));
                }
                if i != j && !topo.is_adjacent(i, j) && v != 0.0 {
                    return Err(ChannelError::InvalidModel(format!(
                        "p[{i}][{j}] = {v} on a non-edge"
                    )));
                }
            }
        }
        Ok(LossModel {
            n,
            p,
            symmetric_losses: false,
        })
    }

    /// Force `phi[i][j] = phi[j][i]` at sampling time (sensitivity studies).
    pub fn with_symmetric_losses(mut self, on: bool) -> Self {
        self.symmetric_losses = on;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    /// Success probabilities from node `i`'s other in-neighbors, ascending
    /// by sender id; excludes the self link.
    pub fn incoming_probabilities(&self, i: usize) -> Vec<f64> {
        (0..self.n)
            .filter(|&j| j != i && self.p(i, j) > 0.0)
            .map(|j| self.p(i, j))
            .collect()
    }

    /// Draw one reception realization. Entries with `p` strictly between 0
    /// and 1 are independent Bernoulli draws; deterministic entries consume
    /// no randomness.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> LossRealization {
        let n = self.n;
        let mut phi = vec![false; n * n];
        for i in 0..n {
            phi[i * n + i] = true;
        }
        let draw = |p: f64, rng: &mut R| -> bool {
            if p >= 1.0 {
                true
            } else if p <= 0.0 {
                false
            } else {
                rng.gen_bool(p)
            }
        };
        if self.symmetric_losses {
            for i in 0..n {
                for j in (i + 1)..n {
                    let got = draw(self.p(i, j), rng);
                    phi[i * n + j] = got;
                    phi[j * n + i] = got && self.p(j, i) > 0.0;
                }
            }
        } else {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        phi[i * n + j] = draw(self.p(i, j), rng);
                    }
                }
            }
        }
        LossRealization { n, phi }
    }

    /// Dense text block: one row per line, probabilities space-separated.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| format!("{}", self.p(i, j))).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(topo: &Topology, text: &str) -> Result<Self, ChannelError> {
        let mut p = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            for tok in line.split_whitespace() {
                p.push(
                    tok.parse::<f64>()
                        .map_err(|e| ChannelError::ParseError(format!("`{tok}`: {e}")))?,
                );
            }
        }
        Self::from_probabilities(topo, p)
    }
}

/// One step's binary reception outcome; row `i` is what node `i` heard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LossRealization {
    n: usize,
    phi: Vec<bool>,
}

impl LossRealization {
    /// Full reception over a topology (no losses).
    pub fn full(topo: &Topology) -> Self {
        let n = topo.n();
        LossRealization {
            n,
            phi: (0..n * n)
                .map(|idx| topo.is_adjacent(idx / n, idx % n))
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Did node `i` receive from node `j` this step?
    pub fn received(&self, i: usize, j: usize) -> bool {
        self.phi[i * self.n + j]
    }

    /// Nodes node `i` heard from this step (itself included), ascending.
    pub fn active_set(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.received(i, j)).collect()
    }

    /// Realized in-neighbor count of node `i`; at least 1.
    pub fn neighbor_count(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.received(i, j)).count()
    }
}
