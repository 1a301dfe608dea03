//! The i.i.d. random durations τ₁, τ₂, … of the split flows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Uniform};
use serde::{Deserialize, Serialize};

/// Mean-one laws with at most exponential tails.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauDistribution {
    #[default]
    Exponential,
    Uniform,
    Constant,
}

impl TauDistribution {
    fn draw(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            TauDistribution::Exponential => Exp1.sample(rng),
            TauDistribution::Uniform => Uniform::new(0.0, 2.0).expect("valid range").sample(rng),
            TauDistribution::Constant => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TauDistribution::Exponential => "exponential",
            TauDistribution::Uniform => "uniform",
            TauDistribution::Constant => "constant",
        }
    }
}

/// Identifies a schedule in trajectory metadata.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleRef {
    pub distribution: TauDistribution,
    pub seed: u64,
    pub stream: u64,
    pub fingerprint: String,
}

/// Lazily extended sequence of durations drawn from a ChaCha8 stream.
/// Index 0 holds τ₁.
#[derive(Clone, Debug)]
pub struct TauSchedule {
    distribution: TauDistribution,
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
    draws: Vec<f64>,
}

impl TauSchedule {
    pub fn new(distribution: TauDistribution, seed: u64) -> Self {
        Self::with_stream(distribution, seed, 0)
    }

    /// Independent sub-stream for parallel workers.
    pub fn with_stream(distribution: TauDistribution, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        TauSchedule {
            distribution,
            seed,
            stream,
            rng,
            draws: Vec::new(),
        }
    }

    pub fn distribution(&self) -> TauDistribution {
        self.distribution
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// τ_{k+1}.
    pub fn get(&mut self, k: usize) -> f64 {
        self.extend_to(k + 1);
        self.draws[k]
    }

    pub fn prefix(&mut self, len: usize) -> &[f64] {
        self.extend_to(len);
        &self.draws[..len]
    }

    fn extend_to(&mut self, len: usize) {
        while self.draws.len() < len {
            let d = self.distribution.draw(&mut self.rng);
            self.draws.push(d);
        }
    }

    /// Stable identifier of the generating law: distribution, seed, stream and
    /// the first draws' bit patterns.
    pub fn fingerprint(&self) -> String {
        let mut probe = TauSchedule::with_stream(self.distribution, self.seed, self.stream);
        let bits = probe
            .prefix(4)
            .iter()
            .fold(0u64, |acc, t| acc.rotate_left(17) ^ t.to_bits());
        format!(
            "{}:{}:{}:{:016x}",
            self.distribution.name(),
            self.seed,
            self.stream,
            bits
        )
    }

    pub fn reference(&self) -> ScheduleRef {
        ScheduleRef {
            distribution: self.distribution,
            seed: self.seed,
            stream: self.stream,
            fingerprint: self.fingerprint(),
        }
    }

    /// Draw a fresh seed for a derived stream (used when fanning out work).
    pub fn derive_seed(seed: u64, index: u64) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index.wrapping_add(1 << 32));
        rng.random()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_lazy() {
        let mut a = TauSchedule::new(TauDistribution::Exponential, 7);
        let mut b = TauSchedule::new(TauDistribution::Exponential, 7);
        let late = a.get(99);
        let first: Vec<f64> = b.prefix(100).to_vec();
        assert_eq!(first[99].to_bits(), late.to_bits());
        assert_eq!(a.prefix(100), &first[..]);
        assert_eq!(a.fingerprint(), b.fingerprint());
        let mut c = TauSchedule::new(TauDistribution::Exponential, 8);
        assert_ne!(c.get(0), first[0]);
        let mut s = TauSchedule::with_stream(TauDistribution::Exponential, 7, 1);
        assert_ne!(s.get(0), first[0]);
    }

    #[test]
    fn laws_have_mean_one_and_are_nonnegative() {
        for d in [
            TauDistribution::Exponential,
            TauDistribution::Uniform,
            TauDistribution::Constant,
        ] {
            let mut s = TauSchedule::new(d, 1);
            let v = s.prefix(200_000);
            assert!(v.iter().all(|&t| t >= 0.0));
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            assert!((mean - 1.0).abs() < 0.01, "{d:?}: {mean}");
        }
        let mut u = TauSchedule::new(TauDistribution::Uniform, 2);
        assert!(u.prefix(10_000).iter().all(|&t| t < 2.0));
    }
}
