use crate::error::{Error, Result};
use crate::heuristics::Policy;
use crate::model::{event_probability, is_valid_action, step_cost, SystemState};
use crate::network::NetworkSpec;

use super::{batch_stats, Clock, RandomStream, SimReport, BATCHES};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepEvent {
    Arrival(usize),
    Service(usize),
    Move(usize),
    Nothing,
}

/// What happened during one step of the uniformized chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub action: usize,
    pub event: StepEvent,
    /// Holding cost of the state the step started in.
    pub cost: f64,
}

/// Runs `policy` for `warmup + horizon` steps from `(1, (0, …, 0))` and
/// averages the cost over the last `horizon` steps.
pub fn simulate_discrete(
    net: &NetworkSpec,
    policy: &mut dyn Policy,
    seed: u64,
    warmup: u64,
    horizon: u64,
) -> Result<SimReport> {
    let mut stream = RandomStream::new(seed);
    let start = SystemState::empty(net.demand_count());
    simulate_discrete_observed(net, policy, &mut stream, warmup, horizon, start, &mut |_| {})
}

/// General form of [`simulate_discrete`].
///
/// Each step draws one uniform `u`. Arrival bands `[0, λ_1)`,
/// `[λ_1, λ_1 + λ_2)`, … come first, the band of the action's event (service
/// or move) follows, and the rest of the interval is the self-transition.
/// Arrivals therefore depend on the stream alone, not on the policy.
pub fn simulate_discrete_observed(
    net: &NetworkSpec,
    policy: &mut dyn Policy,
    stream: &mut RandomStream,
    warmup: u64,
    horizon: u64,
    start: SystemState,
    observer: &mut dyn FnMut(&StepRecord),
) -> Result<SimReport> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be positive".into()));
    }
    start.validate(net)?;
    let d = net.demand_count();
    let cumulative: Vec<f64> = net
        .lambda()
        .iter()
        .scan(0.0, |acc, &l| {
            *acc += l;
            Some(*acc)
        })
        .collect();
    let total_arrival = cumulative.last().copied().unwrap_or(0.0);

    let batches = BATCHES.min(horizon as usize).max(1);
    let batch_len = horizon / batches as u64;
    let mut batch_sums = vec![0.0; batches];
    let mut queue_sums = vec![0.0; d];
    let (mut arrivals, mut services, mut switches) = (0u64, 0u64, 0u64);

    policy.reset();
    let mut state = start;
    for step in 0..warmup + horizon {
        let counted = step >= warmup;
        let cost = step_cost(net, &state);
        if counted {
            let k = step - warmup;
            let b = ((k / batch_len.max(1)) as usize).min(batches - 1);
            batch_sums[b] += cost;
            for (q, &x) in queue_sums.iter_mut().zip(&state.jobs) {
                *q += x as f64;
            }
        }
        let action = policy.decide(net, &state);
        if !is_valid_action(net, &state, action) {
            return Err(Error::InvalidAction {
                node: state.server,
                action,
            });
        }
        let event_prob = event_probability(net, &state, action);
        if total_arrival + event_prob > 1.0 + 1e-12 {
            return Err(Error::UniformizationViolated(total_arrival + event_prob));
        }
        let u = stream.next_uniform();
        let event = if u < total_arrival {
            let i = cumulative.partition_point(|&c| c <= u).min(d - 1);
            state.jobs[i] += 1;
            StepEvent::Arrival(i)
        } else if u < total_arrival + event_prob {
            if action == state.server {
                state.jobs[action] -= 1;
                StepEvent::Service(action)
            } else {
                state.server = action;
                StepEvent::Move(action)
            }
        } else {
            StepEvent::Nothing
        };
        if counted {
            match event {
                StepEvent::Arrival(_) => arrivals += 1,
                StepEvent::Service(_) => services += 1,
                StepEvent::Move(_) => switches += 1,
                StepEvent::Nothing => {}
            }
        }
        observer(&StepRecord { step, action, event, cost });
    }

    // the last batch absorbs the remainder of an uneven split
    let means: Vec<f64> = batch_sums
        .iter()
        .enumerate()
        .map(|(b, s)| {
            let len = if b + 1 == batches { horizon - batch_len * (batches as u64 - 1) } else { batch_len };
            s / len as f64
        })
        .collect();
    let (_, se) = batch_stats(&means);
    let average_cost = batch_sums.iter().sum::<f64>() / horizon as f64;
    Ok(SimReport {
        policy: String::new(),
        clock: Clock::Steps,
        average_cost,
        std_error: se,
        half_width: 1.96 * se,
        warmup: warmup as f64,
        horizon: horizon as f64,
        seed: stream.seed(),
        mean_queue: queue_sums.iter().map(|q| q / horizon as f64).collect(),
        arrivals,
        services,
        switches,
    })
}
