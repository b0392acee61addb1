//! Simulation: the uniformized chain under common random numbers, the
//! continuous-time DVO simulator and switch-time estimation.

mod continuous;
mod discrete;
mod switching;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::heuristics::PolicySpec;
use crate::network::NetworkSpec;

pub use continuous::simulate_dvo;
pub use discrete::{simulate_discrete, simulate_discrete_observed, StepEvent, StepRecord};
pub use switching::{estimate_switch_time_bound, switch_time_bound, SwitchTimeEstimate};

pub const DEFAULT_WARMUP_STEPS: u64 = 10_000;
pub const DEFAULT_HORIZON_STEPS: u64 = 1_000_000;
pub const DEFAULT_WARMUP_TIME: f64 = 10_000.0;
pub const DEFAULT_HORIZON_TIME: f64 = 1_000_000.0;

/// Batches used for batch-means standard errors.
pub const BATCHES: usize = 30;

/// Reproducible stream of uniforms on [0, 1).
#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream for one replication of one instance, shared by every policy
    /// run on that pair.
    pub fn for_run(instance: u64, replication: u64) -> Self {
        Self::new(mix_seed(instance, replication))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// SplitMix64 finalizer over the pair, so nearby ids give unrelated seeds.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clock {
    Steps,
    Continuous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub policy: String,
    pub clock: Clock,
    pub average_cost: f64,
    /// Batch-means standard error of `average_cost`.
    pub std_error: f64,
    /// 1.96 standard errors.
    pub half_width: f64,
    pub warmup: f64,
    pub horizon: f64,
    pub seed: u64,
    pub mean_queue: Vec<f64>,
    pub arrivals: u64,
    pub services: u64,
    pub switches: u64,
}

/// Mean and batch-means standard error of equal-length batches.
pub(crate) fn batch_stats(batch_means: &[f64]) -> (f64, f64) {
    let b = batch_means.len() as f64;
    let mean = batch_means.iter().sum::<f64>() / b;
    if batch_means.len() < 2 {
        return (mean, 0.0);
    }
    let var = batch_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0);
    (mean, (var / b).sqrt())
}

/// Simulates `spec` on `net`: DVO in continuous time with the time-based
/// warm-up and horizon, everything else on the uniformized chain.
pub fn simulate_policy(
    net: &NetworkSpec,
    spec: &PolicySpec,
    seed: u64,
    steps: (u64, u64),
    time: (f64, f64),
) -> Result<SimReport> {
    let mut report = if spec.is_stationary() {
        let mut policy = spec.build(net)?;
        simulate_discrete(net, policy.as_mut(), seed, steps.0, steps.1)?
    } else {
        simulate_dvo(net, seed, time.0, time.1)?
    };
    report.policy = spec.to_string();
    Ok(report)
}
