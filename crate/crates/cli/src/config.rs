//! Flat sectioned key-value run configuration.
//!
//! The format is line-oriented: `[section]` headers, `key = value` pairs,
//! `#` comments. Unknown sections or keys are hard errors so a typo cannot
//! silently fall back to a default. Serializing a parsed config and
//! parsing it again is the identity; the manifest written next to every
//! output is this same format plus a `[manifest]` section, so a manifest
//! is itself a valid config for exact reproduction.

use crate::CliError;
use netestim::sim::{EstimatorKind, LossSpec, SignalKind, SignalSpec, SimConfig, TopologySpec};
use netestim::thresholds;
use netestim::ThetaMode;
use std::collections::BTreeMap;
use std::str::FromStr;

/// A run configuration with every default resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub family: String,
    pub n: usize,
    pub side: f64,
    pub radius: f64,
    pub topology_seed: u64,
    pub generators: Vec<usize>,
    pub per_trial: bool,
    pub theta_mode: ThetaMode,

    pub q: f64,
    pub jitter: f64,
    pub symmetric: bool,

    pub signal_kind: SignalKind,
    pub freq_scale: f64,
    pub amplitude: f64,
    pub length: usize,

    pub sigma2: f64,
    pub upsilon: f64,
    pub gamma_max: Option<f64>,
    pub delta_margin: f64,
    pub forgetting: f64,
    pub bisection_tol: f64,

    pub solver_tol: f64,
    pub solver_max_iter: usize,
    pub under_losses: bool,

    pub estimators: Vec<EstimatorKind>,
    pub trials: usize,
    pub warmup: usize,
    pub master_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimConfig::benchmark_defaults();
        RunConfig {
            family: "geometric".into(),
            n: 20,
            side: 10.0,
            radius: netestim::sim::default_radius(20),
            topology_seed: 1,
            generators: Vec::new(),
            per_trial: true,
            theta_mode: sim.theta_mode,
            q: 0.1,
            jitter: 0.05,
            symmetric: false,
            signal_kind: SignalKind::Multisine,
            freq_scale: 1.0,
            amplitude: 1.0,
            length: 400,
            sigma2: 1.5,
            upsilon: 1.0,
            gamma_max: None,
            delta_margin: 1.05,
            forgetting: sim.forgetting,
            bisection_tol: sim.bisection_tol,
            solver_tol: thresholds::DEFAULT_TOL,
            solver_max_iter: thresholds::DEFAULT_MAX_ITER,
            under_losses: false,
            estimators: EstimatorKind::ALL.to_vec(),
            trials: 30,
            warmup: 70,
            master_seed: 1,
        }
    }
}

fn parse_value<T: FromStr>(section: &str, key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Config(format!("[{section}] {key} = `{value}`: {e}")))
}

fn parse_bool(section: &str, key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(CliError::Config(format!(
            "[{section}] {key} = `{other}`: expected true or false"
        ))),
    }
}

impl RunConfig {
    /// Parse the sectioned key-value text. Unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut config = RunConfig::default();
        let mut gamma_set = false;
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(CliError::Config(format!(
                        "line {}: malformed section `{line}`",
                        lineno + 1
                    )));
                }
                section = line[1..line.len() - 1].trim().to_string();
                match section.as_str() {
                    "topology" | "loss" | "signal" | "filter" | "solver" | "run" | "manifest" => {}
                    other => {
                        return Err(CliError::Config(format!("unknown section `[{other}]`")));
                    }
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            match (section.as_str(), key) {
                ("topology", "family") => {
                    match value {
                        "geometric" | "line" | "cayley" | "star" => {}
                        other => {
                            return Err(CliError::Config(format!(
                                "unknown topology family `{other}`"
                            )))
                        }
                    }
                    config.family = value.to_string();
                }
                ("topology", "n") => config.n = parse_value(&section, key, value)?,
                ("topology", "side") => config.side = parse_value(&section, key, value)?,
                ("topology", "radius") => config.radius = parse_value(&section, key, value)?,
                ("topology", "seed") => config.topology_seed = parse_value(&section, key, value)?,
                ("topology", "generators") => {
                    config.generators = value
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| parse_value(&section, key, s.trim()))
                        .collect::<Result<_, _>>()?;
                }
                ("topology", "per_trial") => config.per_trial = parse_bool(&section, key, value)?,
                ("topology", "theta_mode") => {
                    config.theta_mode = value.parse().map_err(|e: String| CliError::Config(e))?;
                }
                ("loss", "q") => config.q = parse_value(&section, key, value)?,
                ("loss", "jitter") => config.jitter = parse_value(&section, key, value)?,
                ("loss", "symmetric") => config.symmetric = parse_bool(&section, key, value)?,
                ("signal", "kind") => {
                    config.signal_kind = value.parse().map_err(|e: String| CliError::Config(e))?;
                }
                ("signal", "freq_scale") => config.freq_scale = parse_value(&section, key, value)?,
                ("signal", "amplitude") => config.amplitude = parse_value(&section, key, value)?,
                ("signal", "length") => config.length = parse_value(&section, key, value)?,
                ("filter", "sigma2") => config.sigma2 = parse_value(&section, key, value)?,
                ("filter", "upsilon") => config.upsilon = parse_value(&section, key, value)?,
                ("filter", "gamma_max") => {
                    config.gamma_max = Some(parse_value(&section, key, value)?);
                    gamma_set = true;
                }
                ("filter", "delta_margin") => {
                    config.delta_margin = parse_value(&section, key, value)?
                }
                ("filter", "forgetting") => config.forgetting = parse_value(&section, key, value)?,
                ("filter", "bisection_tol") => {
                    config.bisection_tol = parse_value(&section, key, value)?
                }
                ("solver", "tol") => config.solver_tol = parse_value(&section, key, value)?,
                ("solver", "max_iter") => {
                    config.solver_max_iter = parse_value(&section, key, value)?
                }
                ("solver", "under_losses") => {
                    config.under_losses = parse_bool(&section, key, value)?
                }
                ("run", "estimators") => {
                    config.estimators = value
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| s.trim().parse::<EstimatorKind>().map_err(CliError::Config))
                        .collect::<Result<_, _>>()?;
                }
                ("run", "trials") => config.trials = parse_value(&section, key, value)?,
                ("run", "warmup") => config.warmup = parse_value(&section, key, value)?,
                ("run", "master_seed") => config.master_seed = parse_value(&section, key, value)?,
                // Manifest bookkeeping keys are accepted and ignored so a
                // manifest file reproduces its run when fed back in.
                ("manifest", _) => {}
                (sec, key) => {
                    return Err(CliError::Config(format!(
                        "unknown key `{key}` in section `[{sec}]`"
                    )));
                }
            }
        }
        let _ = gamma_set;
        Ok(config)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Deterministic serialization; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str("[topology]\n");
        out.push_str(&format!("family = {}\n", self.family));
        out.push_str(&format!("n = {}\n", self.n));
        out.push_str(&format!("side = {}\n", self.side));
        out.push_str(&format!("radius = {}\n", self.radius));
        out.push_str(&format!("seed = {}\n", self.topology_seed));
        if !self.generators.is_empty() {
            let gens: Vec<String> = self.generators.iter().map(|g| g.to_string()).collect();
            out.push_str(&format!("generators = {}\n", gens.join(",")));
        }
        out.push_str(&format!("per_trial = {}\n", self.per_trial));
        out.push_str(&format!(
            "theta_mode = {}\n",
            match self.theta_mode {
                ThetaMode::TwoHop => "two_hop",
                ThetaMode::Neighborhood => "neighborhood",
            }
        ));
        out.push_str("\n[loss]\n");
        out.push_str(&format!("q = {}\n", self.q));
        out.push_str(&format!("jitter = {}\n", self.jitter));
        out.push_str(&format!("symmetric = {}\n", self.symmetric));
        out.push_str("\n[signal]\n");
        out.push_str(&format!("kind = {}\n", self.signal_kind.label()));
        out.push_str(&format!("freq_scale = {}\n", self.freq_scale));
        out.push_str(&format!("amplitude = {}\n", self.amplitude));
        out.push_str(&format!("length = {}\n", self.length));
        out.push_str("\n[filter]\n");
        out.push_str(&format!("sigma2 = {}\n", self.sigma2));
        out.push_str(&format!("upsilon = {}\n", self.upsilon));
        if let Some(g) = self.gamma_max {
            out.push_str(&format!("gamma_max = {g}\n"));
        }
        out.push_str(&format!("delta_margin = {}\n", self.delta_margin));
        out.push_str(&format!("forgetting = {}\n", self.forgetting));
        out.push_str(&format!("bisection_tol = {}\n", self.bisection_tol));
        out.push_str("\n[solver]\n");
        out.push_str(&format!("tol = {}\n", self.solver_tol));
        out.push_str(&format!("max_iter = {}\n", self.solver_max_iter));
        out.push_str(&format!("under_losses = {}\n", self.under_losses));
        out.push_str("\n[run]\n");
        let est: Vec<&str> = self.estimators.iter().map(|e| e.label()).collect();
        out.push_str(&format!("estimators = {}\n", est.join(",")));
        out.push_str(&format!("trials = {}\n", self.trials));
        out.push_str(&format!("warmup = {}\n", self.warmup));
        out.push_str(&format!("master_seed = {}\n", self.master_seed));
        out
    }

    pub fn topology_spec(&self) -> Result<TopologySpec, CliError> {
        Ok(match self.family.as_str() {
            "geometric" => TopologySpec::Geometric {
                n: self.n,
                side: self.side,
                radius: self.radius,
                seed: self.topology_seed,
            },
            "line" => TopologySpec::Line { n: self.n },
            "star" => TopologySpec::Star { n: self.n },
            "cayley" => {
                if self.generators.is_empty() {
                    return Err(CliError::Config(
                        "cayley topology needs a generator set".into(),
                    ));
                }
                // Close the user's set under negation mod n and include 0,
                // so `generators = 1,3,4` describes the usual +/- family.
                let mut closed: std::collections::BTreeSet<usize> =
                    self.generators.iter().map(|g| g % self.n).collect();
                closed.insert(0);
                for g in closed.clone() {
                    closed.insert((self.n - g) % self.n);
                }
                TopologySpec::Cayley {
                    n: self.n,
                    generators: closed.into_iter().collect(),
                }
            }
            other => return Err(CliError::Config(format!("unknown family `{other}`"))),
        })
    }

    /// Lower into the simulation configuration.
    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        Ok(SimConfig {
            topology: self.topology_spec()?,
            per_trial_graphs: self.per_trial && self.family == "geometric",
            loss: if self.jitter > 0.0 {
                LossSpec::Jittered {
                    q: self.q,
                    jitter: self.jitter,
                }
            } else {
                LossSpec::Uniform { q: self.q }
            },
            symmetric_losses: self.symmetric,
            theta_mode: self.theta_mode,
            signal: SignalSpec {
                kind: self.signal_kind,
                freq_scale: self.freq_scale,
                amplitude: self.amplitude,
                length: self.length,
            },
            sigma2: self.sigma2,
            upsilon: self.upsilon,
            gamma_max: self.gamma_max,
            delta_margin: self.delta_margin,
            forgetting: self.forgetting,
            bisection_tol: self.bisection_tol,
            solver_tol: self.solver_tol,
            solver_max_iter: self.solver_max_iter,
            thresholds_under_losses: self.under_losses,
            estimators: self.estimators.clone(),
            trials: self.trials,
            warmup: self.warmup,
            master_seed: self.master_seed,
        })
    }

    /// Manifest text: the resolved config plus provenance keys. A manifest
    /// parses back into exactly this config.
    pub fn manifest(&self, command: &str, outputs: &[&str]) -> String {
        let mut out = self.serialize();
        out.push_str("\n[manifest]\n");
        out.push_str(&format!("tool = netestim {}\n", env!("CARGO_PKG_VERSION")));
        out.push_str(&format!("command = {command}\n"));
        for (i, path) in outputs.iter().enumerate() {
            out.push_str(&format!("output_{i} = {path}\n"));
        }
        out
    }
}

/// Trailing helper for tests and commands: a BTreeMap view of a manifest's
/// `[manifest]` section.
pub fn manifest_entries(text: &str) -> BTreeMap<String, String> {
    let mut entries = BTreeMap::new();
    let mut in_manifest = false;
    for line in text.lines() {
        let line = line.trim();
        if line.starts_with('[') {
            in_manifest = line == "[manifest]";
            continue;
        }
        if in_manifest {
            if let Some((k, v)) = line.split_once('=') {
                entries.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
    }
    entries
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let mut config = RunConfig::default();
        config.family = "cayley".into();
        config.generators = vec![0, 1, 3, 4, 11, 12, 14];
        config.gamma_max = Some(0.8);
        config.estimators = vec![EstimatorKind::Ep, EstimatorKind::E2];
        let text = config.serialize();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(config, back);
        assert_eq!(text, back.serialize());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("[topology]\nfamly = line\n").is_err());
        assert!(RunConfig::parse("[topo]\nn = 5\n").is_err());
        assert!(RunConfig::parse("[run]\ntrials = 5\nspeed = fast\n").is_err());
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let config =
            RunConfig::parse("# a comment\n[run]\ntrials = 5 # inline\n\n[loss]\nq = 0.2\n")
                .unwrap();
        assert_eq!(config.trials, 5);
        assert_eq!(config.q, 0.2);
    }

    #[test]
    fn manifest_parses_back_to_the_same_config() {
        let config = RunConfig::default();
        let manifest = config.manifest("run", &["report.csv"]);
        let back = RunConfig::parse(&manifest).unwrap();
        assert_eq!(config, back);
        let entries = manifest_entries(&manifest);
        assert_eq!(entries.get("command").unwrap(), "run");
    }

    #[test]
    fn bad_values_name_the_offending_key() {
        let err = RunConfig::parse("[run]\ntrials = many\n").unwrap_err();
        assert!(err.to_string().contains("trials"));
    }
}
