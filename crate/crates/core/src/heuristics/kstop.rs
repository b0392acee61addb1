use crate::fluid::{approx_ge, DemandSequence, RouteAccumulator, INDEX_TOLERANCE};
use crate::model::SystemState;
use crate::network::NetworkSpec;

use super::{EligibilityTrace, PolicyDecision};

/// Best sequence seen so far; earlier (lexicographically smaller) sequences
/// win ties because only a strictly larger ψ replaces the incumbent.
#[derive(Default)]
struct Best {
    psi: f64,
    stops: Vec<usize>,
}

impl Best {
    fn offer(&mut self, psi: f64, acc: &RouteAccumulator<'_>) {
        if self.stops.is_empty() || psi > self.psi + INDEX_TOLERANCE {
            self.psi = psi;
            self.stops.clear();
            self.stops.extend(acc.stops());
        }
    }
}

/// K-stop decision with candidate stops drawn from `pool` (ascending ids).
pub(crate) fn decide_over(net: &NetworkSpec, state: &SystemState, k: usize, pool: &[usize]) -> PolicyDecision {
    let v = state.server;
    let d = net.demand_count();
    let busy = v < d && state.jobs[v] > 0;
    let mut trace = EligibilityTrace::default();
    let k = k.min(pool.len());

    let chosen = if busy {
        let origin_rate = net.cost()[v] * net.mu()[v];
        let mut best = Best::default();
        let mut acc = RouteAccumulator::new(net, &state.jobs, v, 0.0);
        for &first in pool.iter().filter(|&&j| j != v) {
            acc.push(first);
            busy_walk(&mut acc, pool, k, origin_rate, &mut best, &mut trace);
            acc.pop();
        }
        trace.sigma = trace.sigma1;
        (!best.stops.is_empty()).then_some(best.stops)
    } else {
        let mut best1 = Best::default();
        let mut best2 = Best::default();
        let mut acc = RouteAccumulator::new(net, &state.jobs, v, 0.0);
        for &first in pool.iter().filter(|&&j| j != v) {
            let mut relocated = RouteAccumulator::new(net, &state.jobs, first, 0.0);
            acc.push(first);
            relocated.push(first);
            idle_walk(&mut acc, &mut relocated, pool, k, &mut best1, &mut best2, &mut trace);
            acc.pop();
        }
        if !best1.stops.is_empty() {
            trace.sigma = trace.sigma1;
            Some(best1.stops)
        } else {
            trace.sigma = trace.sigma2;
            (!best2.stops.is_empty()).then_some(best2.stops)
        }
    };

    match chosen {
        Some(stops) => {
            let action = net.next_step(v, stops[0]).expect("first stop differs from the server");
            PolicyDecision {
                action,
                chosen_sequence: Some(DemandSequence::new(stops).expect("distinct stops")),
                trace: Some(trace),
            }
        }
        None => PolicyDecision {
            action: v,
            chosen_sequence: None,
            trace: Some(trace),
        },
    }
}

/// Case 1: a sequence is eligible iff every prefix satisfies φ_j ≥ β_j and
/// ψ is nonincreasing in the idle time. A failing prefix rules out all its
/// extensions, so the subtree is only counted.
fn busy_walk(
    acc: &mut RouteAccumulator<'_>,
    pool: &[usize],
    k: usize,
    origin_rate: f64,
    best: &mut Best,
    trace: &mut EligibilityTrace,
) {
    trace.candidates += 1;
    if !approx_ge(acc.phi(), acc.beta(origin_rate)) {
        trace.candidates += extensions(pool.len(), acc.depth(), k);
        return;
    }
    if acc.derivative_sign() <= 0 {
        trace.sigma1 += 1;
        best.offer(acc.psi(), acc);
    }
    if acc.depth() < k {
        for &next in pool {
            if !acc.contains(next) {
                acc.push(next);
                busy_walk(acc, pool, k, origin_rate, best, trace);
                acc.pop();
            }
        }
    }
}

/// Case 2: σ_2 holds sequences with nonincreasing ψ; those also passing the
/// γ tests from both the current state and the relocated one go to σ_1.
fn idle_walk(
    acc: &mut RouteAccumulator<'_>,
    relocated: &mut RouteAccumulator<'_>,
    pool: &[usize],
    k: usize,
    best1: &mut Best,
    best2: &mut Best,
    trace: &mut EligibilityTrace,
) {
    trace.candidates += 1;
    if acc.derivative_sign() <= 0 {
        let psi = acc.psi();
        let promoted = approx_ge(psi, acc.gamma()) && (acc.depth() == 1 || approx_ge(relocated.psi(), relocated.gamma()));
        if promoted {
            trace.sigma1 += 1;
            best1.offer(psi, acc);
        } else {
            trace.sigma2 += 1;
            best2.offer(psi, acc);
        }
    }
    if acc.depth() < k {
        for &next in pool {
            if !acc.contains(next) {
                acc.push(next);
                relocated.push(next);
                idle_walk(acc, relocated, pool, k, best1, best2, trace);
                relocated.pop();
                acc.pop();
            }
        }
    }
}

/// Number of proper extensions of a prefix of length `depth` over `pool`
/// distinct stops, up to length `k`.
fn extensions(pool: usize, depth: usize, k: usize) -> usize {
    let mut total = 0;
    let mut level = 1;
    for len in depth + 1..=k {
        level *= pool - (len - 1);
        total += level;
    }
    total
}

/// `|S|`: sequences of length ≤ `k` over `pool` distinct demand points whose
/// first element avoids one excluded point (the server's node) when it is in
/// the pool.
pub fn candidate_count(pool: usize, k: usize, server_in_pool: bool) -> usize {
    let firsts = if server_in_pool { pool - 1 } else { pool };
    if firsts == 0 {
        return 0;
    }
    firsts * (1 + extensions(pool, 1, k.min(pool)))
}
