use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::heuristics::{dvo_decide, DvoCommitment, DvoMode, EpochKind};
use crate::model::{step_cost, SystemState};
use crate::network::NetworkSpec;

use super::{batch_stats, Clock, RandomStream, SimReport, BATCHES};

/// Time integrals of cost and queue lengths over `[start, start + len)`,
/// split into equal batches.
struct TimeIntegrals {
    start: f64,
    len: f64,
    batch_cost: Vec<f64>,
    queue: Vec<f64>,
}

impl TimeIntegrals {
    fn new(start: f64, len: f64, d: usize) -> Self {
        Self {
            start,
            len,
            batch_cost: vec![0.0; BATCHES],
            queue: vec![0.0; d],
        }
    }

    /// Adds the piecewise-constant state over `[from, to)`.
    fn add(&mut self, from: f64, to: f64, cost: f64, jobs: &[u32]) {
        let end = self.start + self.len;
        let (a, b) = (from.max(self.start), to.min(end));
        if b <= a {
            return;
        }
        for (q, &x) in self.queue.iter_mut().zip(jobs) {
            *q += x as f64 * (b - a);
        }
        if cost == 0.0 {
            return;
        }
        let width = self.len / BATCHES as f64;
        let mut lo = a;
        while lo < b {
            let k = (((lo - self.start) / width) as usize).min(BATCHES - 1);
            let hi = if k + 1 == BATCHES { b } else { b.min(self.start + (k + 1) as f64 * width) };
            self.batch_cost[k] += cost * (hi - lo);
            if hi <= lo {
                break;
            }
            lo = hi;
        }
    }
}

/// Event-driven simulation of the DVO heuristic.
///
/// Arrivals are Poisson per demand point, services exponential(μ_i) and every
/// edge of a switch exponential(τ), so a switch over δ edges is Erlang. The
/// next event is drawn from the superposition of the running exponential
/// clocks, which is equivalent to taking the earliest of them. The server
/// starts idle at the first demand point with every queue empty.
pub fn simulate_dvo(net: &NetworkSpec, seed: u64, warmup: f64, horizon: f64) -> Result<SimReport> {
    if horizon.is_nan() || horizon <= 0.0 || warmup.is_nan() || warmup < 0.0 {
        return Err(Error::InvalidParameter("horizon must be positive and warm-up nonnegative".into()));
    }
    let d = net.demand_count();
    let mut stream = RandomStream::new(seed);
    let cumulative: Vec<f64> = net
        .lambda()
        .iter()
        .scan(0.0, |acc, &l| {
            *acc += l;
            Some(*acc)
        })
        .collect();
    let total_arrival = net.total_arrival();
    let end = warmup + horizon;

    let mut integrals = TimeIntegrals::new(warmup, horizon, d);
    let mut state = SystemState::empty(d);
    let mut commitment = DvoCommitment::idle();
    let (mut arrivals, mut services, mut switches) = (0u64, 0u64, 0u64);
    let mut now = 0.0;

    loop {
        let activity = match commitment.mode {
            DvoMode::Processing => net.mu()[state.server],
            DvoMode::Switching => net.tau(),
            DvoMode::Idle => 0.0,
        };
        let rate = total_arrival + activity;
        let cost = step_cost(net, &state);
        if rate == 0.0 {
            integrals.add(now, end, cost, &state.jobs);
            break;
        }
        let dt = Exp::new(rate).expect("positive rate").sample(stream.rng());
        let next = now + dt;
        integrals.add(now, next, cost, &state.jobs);
        if next >= end {
            break;
        }
        now = next;
        let counted = now >= warmup;

        let u = stream.next_uniform() * rate;
        let epoch = if u < total_arrival {
            let i = cumulative.partition_point(|&c| c <= u).min(d - 1);
            state.jobs[i] += 1;
            arrivals += u64::from(counted);
            (commitment.mode == DvoMode::Idle).then_some(EpochKind::IdleArrival)
        } else {
            match commitment.mode {
                DvoMode::Processing => {
                    state.jobs[state.server] -= 1;
                    services += u64::from(counted);
                    Some(EpochKind::JobFinished)
                }
                DvoMode::Switching => {
                    state.server = commitment.path.remove(0);
                    switches += u64::from(counted);
                    commitment.path.is_empty().then_some(EpochKind::ArrivedAtPoint)
                }
                DvoMode::Idle => unreachable!("idle server has no running clock"),
            }
        };
        if let Some(epoch) = epoch {
            let (_, next_commitment) = dvo_decide(net, &state, epoch, &commitment)?;
            commitment = next_commitment;
        }
    }

    let width = horizon / BATCHES as f64;
    let means: Vec<f64> = integrals.batch_cost.iter().map(|c| c / width).collect();
    let (_, se) = batch_stats(&means);
    Ok(SimReport {
        policy: "dvo".into(),
        clock: Clock::Continuous,
        average_cost: integrals.batch_cost.iter().sum::<f64>() / horizon,
        std_error: se,
        half_width: 1.96 * se,
        warmup,
        horizon,
        seed,
        mean_queue: integrals.queue.iter().map(|q| q / horizon).collect(),
        arrivals,
        services,
        switches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Topology;

    #[test]
    fn empty_system_costs_nothing() {
        let topo = Topology::from_edges(3, 2, &[(0, 2), (1, 2)]).unwrap();
        let net = NetworkSpec::new(topo, vec![0.0; 2], vec![0.3; 2], vec![1.0; 2], 0.5).unwrap();
        let r = simulate_dvo(&net, 3, 10.0, 1000.0).unwrap();
        assert_eq!(r.average_cost, 0.0);
        assert_eq!(r.arrivals, 0);
    }

    #[test]
    fn single_queue_near_closed_form() {
        let topo = Topology::from_edges(1, 1, &[]).unwrap();
        let net = NetworkSpec::new(topo, vec![0.2], vec![0.5], vec![1.0], 0.5).unwrap();
        let r = simulate_dvo(&net, 9, 1000.0, 200_000.0).unwrap();
        assert!((r.average_cost - 2.0 / 3.0).abs() < 4.0 * r.std_error + 0.02, "{r:?}");
        assert_eq!(r.switches, 0);
    }

    #[test]
    fn switches_walk_whole_paths() {
        let topo = Topology::from_edges(6, 3, &[(0, 3), (1, 3), (3, 4), (4, 5), (5, 2)]).unwrap();
        let net = NetworkSpec::new(topo, vec![0.05, 0.05, 0.1], vec![0.4; 3], vec![1.0; 3], 0.3).unwrap();
        let a = simulate_dvo(&net, 1, 100.0, 20_000.0).unwrap();
        let b = simulate_dvo(&net, 1, 100.0, 20_000.0).unwrap();
        assert_eq!(a, b);
        assert!(a.switches > 0 && a.services > 0);
        assert!(a.average_cost > 0.0);
    }

    #[test]
    fn integrals_split_across_batches() {
        let mut t = TimeIntegrals::new(10.0, 30.0, 1);
        t.add(0.0, 100.0, 2.0, &[1]);
        assert!(t.batch_cost.iter().all(|&c| (c - 2.0).abs() < 1e-12));
        assert!((t.queue[0] - 30.0).abs() < 1e-12);
    }
}
