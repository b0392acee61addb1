//! The uniformized discrete-time MDP on a [`NetworkSpec`].
//!
//! Rates are read as per-step probabilities (Δ = 1). Arrivals happen at every
//! demand point regardless of the action; the action decides whether the
//! server processes (stays at a non-empty demand point) or attempts a move.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::NetworkSpec;

/// Server location plus the job count at every demand point.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemState {
    pub server: usize,
    pub jobs: Vec<u32>,
}

impl SystemState {
    pub fn new(server: usize, jobs: Vec<u32>) -> Self {
        Self { server, jobs }
    }

    /// Server at the first demand point, all queues empty.
    pub fn empty(d: usize) -> Self {
        Self::new(0, vec![0; d])
    }

    /// Copy with the server relocated to `node`.
    pub fn relocated(&self, node: usize) -> Self {
        Self::new(node, self.jobs.clone())
    }

    /// Jobs at the server's node, or `None` at an intermediate stage.
    pub fn jobs_at_server(&self) -> Option<u32> {
        self.jobs.get(self.server).copied()
    }

    pub fn validate(&self, net: &NetworkSpec) -> Result<()> {
        if self.server >= net.node_count() || self.jobs.len() != net.demand_count() {
            return Err(Error::InvalidParameter(format!(
                "state {self:?} does not fit a network with {} nodes and {} demand points",
                net.node_count(),
                net.demand_count()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionEntry {
    pub next: SystemState,
    pub prob: f64,
}

/// Current node plus its neighbors, ascending.
pub fn action_set(net: &NetworkSpec, state: &SystemState) -> Vec<usize> {
    let v = state.server;
    let mut out: Vec<usize> = net.neighbors(v).to_vec();
    let pos = out.partition_point(|&u| u < v);
    out.insert(pos, v);
    out
}

pub fn is_valid_action(net: &NetworkSpec, state: &SystemState, action: usize) -> bool {
    action == state.server || net.neighbors(state.server).binary_search(&action).is_ok()
}

/// Probability of the action-dependent event: a departure when processing,
/// a completed move when switching, zero when idling.
#[inline]
pub fn event_probability(net: &NetworkSpec, state: &SystemState, action: usize) -> f64 {
    let v = state.server;
    if action != v {
        net.tau()
    } else if v < net.demand_count() && state.jobs[v] > 0 {
        net.mu()[v]
    } else {
        0.0
    }
}

/// Successor distribution for `action` in `state`; the self-transition carries
/// the residual mass and is always listed last.
pub fn transition_distribution(
    net: &NetworkSpec,
    state: &SystemState,
    action: usize,
) -> Result<Vec<TransitionEntry>> {
    state.validate(net)?;
    if !is_valid_action(net, state, action) {
        return Err(Error::InvalidAction {
            node: state.server,
            action,
        });
    }
    let event = event_probability(net, state, action);
    let total = net.total_arrival() + event;
    if total > 1.0 + 1e-12 {
        return Err(Error::UniformizationViolated(total));
    }
    let mut out = Vec::with_capacity(net.demand_count() + 2);
    for (i, &l) in net.lambda().iter().enumerate() {
        if l > 0.0 {
            let mut next = state.clone();
            next.jobs[i] += 1;
            out.push(TransitionEntry { next, prob: l });
        }
    }
    if event > 0.0 {
        let mut next = state.clone();
        if action == state.server {
            next.jobs[action] -= 1;
        } else {
            next.server = action;
        }
        out.push(TransitionEntry { next, prob: event });
    }
    let residual = 1.0 - out.iter().map(|e| e.prob).sum::<f64>();
    out.push(TransitionEntry {
        next: state.clone(),
        prob: residual.max(0.0),
    });
    Ok(out)
}

/// Σ c_i x_i.
pub fn step_cost(net: &NetworkSpec, state: &SystemState) -> f64 {
    net.cost()
        .iter()
        .zip(&state.jobs)
        .map(|(c, &x)| c * x as f64)
        .sum()
}

/// c_i μ_i when processing at a non-empty demand point i, zero otherwise.
pub fn reward_rate(net: &NetworkSpec, state: &SystemState, action: usize) -> f64 {
    let v = state.server;
    if action == v && net.is_demand(v) && state.jobs[v] >= 1 {
        net.cost()[v] * net.mu()[v]
    } else {
        0.0
    }
}
