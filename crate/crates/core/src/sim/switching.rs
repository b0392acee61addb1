use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heuristics::{KStopPolicy, Policy};
use crate::model::{event_probability, SystemState};
use crate::network::NetworkSpec;

use super::RandomStream;

/// Safety stop for a single episode.
const MAX_EPISODE_STEPS: u64 = 100_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchTimeEstimate {
    pub trials: usize,
    pub mean: f64,
    pub std_error: f64,
    pub bound: f64,
    /// Largest stage-to-demand-point distance.
    pub max_distance: u32,
}

/// `(M/τ)((Λ+τ)/τ)^{2(M−1)}`.
pub fn switch_time_bound(net: &NetworkSpec) -> Option<f64> {
    let m = net.topology().max_stage_distance()? as f64;
    let tau = net.tau();
    Some(m / tau * ((net.total_arrival() + tau) / tau).powf(2.0 * (m - 1.0)))
}

/// Mean time for the K-stop server to reach a demand point from an
/// intermediate stage. Episodes start from every stage in turn with all
/// queues empty and run on the uniformized chain, one time unit per step.
pub fn estimate_switch_time_bound(net: &NetworkSpec, k: usize, seed: u64, trials: usize) -> Result<SwitchTimeEstimate> {
    let bound = switch_time_bound(net).ok_or_else(|| Error::InvalidParameter("network has no intermediate stages".into()))?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let d = net.demand_count();
    let stages: Vec<usize> = (d..net.node_count()).collect();
    let total_arrival = net.total_arrival();
    let cumulative: Vec<f64> = net
        .lambda()
        .iter()
        .scan(0.0, |acc, &l| {
            *acc += l;
            Some(*acc)
        })
        .collect();
    let mut policy = KStopPolicy::new(k);
    let mut stream = RandomStream::new(seed);
    let mut times = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut state = SystemState::new(stages[trial % stages.len()], vec![0; d]);
        let mut steps = 0u64;
        while !net.is_demand(state.server) {
            if steps >= MAX_EPISODE_STEPS {
                return Err(Error::InvalidParameter("episode did not reach a demand point".into()));
            }
            let action = policy.decide(net, &state);
            let p = event_probability(net, &state, action);
            let u = stream.next_uniform();
            if u < total_arrival {
                let i = cumulative.partition_point(|&c| c <= u).min(d - 1);
                state.jobs[i] += 1;
            } else if u < total_arrival + p && action != state.server {
                state.server = action;
            }
            steps += 1;
        }
        times.push(steps as f64);
    }
    let n = trials as f64;
    let mean = times.iter().sum::<f64>() / n;
    let var = if trials > 1 { times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Ok(SwitchTimeEstimate {
        trials,
        mean,
        std_error: (var / n).sqrt(),
        bound,
        max_distance: net.topology().max_stage_distance().unwrap_or(0),
    })
}
