//! Test-signal generation.
//!
//! Signals are generated together with the realized cap on their per-step
//! increment, which downstream code uses to pick the contraction rate.

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    /// Three incommensurate sinusoids under a slow envelope; alternates
    /// near-flat stretches with steep ones. `freq_scale` multiplies all
    /// carrier frequencies.
    Multisine,
    /// Piecewise-linear ramps between seeded levels.
    Piecewise,
    Constant,
    /// Constant slope of `amplitude` per step.
    Ramp,
}

impl std::str::FromStr for SignalKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "multisine" => Ok(SignalKind::Multisine),
            "piecewise" => Ok(SignalKind::Piecewise),
            "constant" => Ok(SignalKind::Constant),
            "ramp" => Ok(SignalKind::Ramp),
            other => Err(format!("unknown signal kind `{other}`")),
        }
    }
}

impl SignalKind {
    pub fn label(&self) -> &'static str {
        match self {
            SignalKind::Multisine => "multisine",
            SignalKind::Piecewise => "piecewise",
            SignalKind::Constant => "constant",
            SignalKind::Ramp => "ramp",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SignalSpec {
    pub kind: SignalKind,
    /// Scales all carrier frequencies of the multisine family; the five
    /// benchmark signals use 1, 2, 4, 8, 16.
    pub freq_scale: f64,
    pub amplitude: f64,
    pub length: usize,
}

impl SignalSpec {
    pub fn multisine(freq_scale: f64, length: usize) -> Self {
        SignalSpec {
            kind: SignalKind::Multisine,
            freq_scale,
            amplitude: 1.0,
            length,
        }
    }
}

/// Carrier frequencies (cycles per step) and relative weights of the
/// multisine family at `freq_scale = 1`.
const CARRIER_FREQS: [f64; 3] = [0.0040, 0.0093, 0.0151];
const CARRIER_WEIGHTS: [f64; 3] = [1.0, 0.6, 0.35];

/// Generate the signal and the realized cap `max_t |d(t) - d(t-1)|`.
pub fn generate(spec: &SignalSpec, rng: &mut impl Rng) -> (Vec<f64>, f64) {
    assert!(spec.length >= 1);
    let values = match spec.kind {
        SignalKind::Constant => vec![spec.amplitude; spec.length],
        SignalKind::Ramp => (0..spec.length)
            .map(|t| spec.amplitude * t as f64)
            .collect(),
        SignalKind::Multisine => multisine(spec, rng),
        SignalKind::Piecewise => piecewise(spec, rng),
    };
    let delta_cap = values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0f64, f64::max);
    (values, delta_cap)
}

fn multisine(spec: &SignalSpec, rng: &mut impl Rng) -> Vec<f64> {
    let tau = std::f64::consts::TAU;
    let phases: [f64; 3] = [
        rng.gen::<f64>() * tau,
        rng.gen::<f64>() * tau,
        rng.gen::<f64>() * tau,
    ];
    let env_phase = rng.gen::<f64>() * tau;
    let env_period = (spec.length as f64 * 0.7).max(50.0);
    let weight_total: f64 = CARRIER_WEIGHTS.iter().sum();

    (0..spec.length)
        .map(|t| {
            let t = t as f64;
            let envelope = 0.25 + 0.75 * 0.5 * (1.0 - (tau * t / env_period + env_phase).cos());
            let carrier: f64 = (0..3)
                .map(|k| {
                    CARRIER_WEIGHTS[k] / weight_total
                        * (tau * CARRIER_FREQS[k] * spec.freq_scale * t + phases[k]).sin()
                })
                .sum();
            spec.amplitude * envelope * carrier
        })
        .collect()
}

fn piecewise(spec: &SignalSpec, rng: &mut impl Rng) -> Vec<f64> {
    let segments = ((spec.length / 50).max(2) as f64 * spec.freq_scale.max(1.0)) as usize;
    let seg_len = (spec.length / segments).max(1);
    let mut levels: Vec<f64> = (0..=segments + 1)
        .map(|_| spec.amplitude * (2.0 * rng.gen::<f64>() - 1.0))
        .collect();
    levels[0] = 0.0;
    (0..spec.length)
        .map(|t| {
            let seg = t / seg_len;
            let frac = (t % seg_len) as f64 / seg_len as f64;
            let lo = levels[seg.min(levels.len() - 2)];
            let hi = levels[(seg + 1).min(levels.len() - 1)];
            lo + (hi - lo) * frac
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn constant_signal_has_zero_increment() {
        let spec = SignalSpec {
            kind: SignalKind::Constant,
            freq_scale: 1.0,
            amplitude: 3.5,
            length: 100,
        };
        let (values, delta) = generate(&spec, &mut seed::rng(1));
        assert!(values.iter().all(|&v| v == 3.5));
        assert_eq!(delta, 0.0);
    }

    #[test]
    fn ramp_increment_is_the_slope() {
        let spec = SignalSpec {
            kind: SignalKind::Ramp,
            freq_scale: 1.0,
            amplitude: 0.05,
            length: 50,
        };
        let (values, delta) = generate(&spec, &mut seed::rng(1));
        assert!((delta - 0.05).abs() < 1e-15);
        assert!((values[10] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn doubling_frequency_roughly_doubles_the_increment_cap() {
        for seed_v in [1u64, 5, 9] {
            let base = SignalSpec::multisine(1.0, 800);
            let double = SignalSpec::multisine(2.0, 800);
            let (_, d1) = generate(&base, &mut seed::rng(seed_v));
            let (_, d2) = generate(&double, &mut seed::rng(seed_v));
            let ratio = d2 / d1;
            assert!(
                (1.6..=2.4).contains(&ratio),
                "seed {seed_v}: ratio {ratio} (d1={d1}, d2={d2})"
            );
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SignalSpec::multisine(4.0, 300);
        let (a, da) = generate(&spec, &mut seed::rng(77));
        let (b, db) = generate(&spec, &mut seed::rng(77));
        assert_eq!(a, b);
        assert_eq!(da, db);
    }

    #[test]
    fn piecewise_is_bounded_by_amplitude() {
        let spec = SignalSpec {
            kind: SignalKind::Piecewise,
            freq_scale: 1.0,
            amplitude: 2.0,
            length: 400,
        };
        let (values, delta) = generate(&spec, &mut seed::rng(3));
        assert!(values.iter().all(|v| v.abs() <= 2.0 + 1e-12));
        assert!(delta > 0.0);
    }
}
