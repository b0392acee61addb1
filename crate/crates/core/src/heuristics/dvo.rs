//! The DVO benchmark heuristic. Services and switches are uninterruptible,
//! so the policy is driven by decision epochs rather than by every step and
//! carries a [`DvoCommitment`] between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluid::{approx_ge, INDEX_TOLERANCE};
use crate::model::SystemState;
use crate::network::NetworkSpec;

use super::PolicyDecision;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpochKind {
    JobFinished,
    ArrivedAtPoint,
    IdleArrival,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DvoMode {
    Processing,
    Switching,
    Idle,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DvoCommitment {
    pub mode: DvoMode,
    /// Destination while switching.
    pub target: Option<usize>,
    /// Nodes still to traverse, next one first.
    pub path: Vec<usize>,
}

impl DvoCommitment {
    pub fn idle() -> Self {
        Self {
            mode: DvoMode::Idle,
            target: None,
            path: Vec::new(),
        }
    }

    pub fn processing() -> Self {
        Self {
            mode: DvoMode::Processing,
            target: None,
            path: Vec::new(),
        }
    }

    fn switching(net: &NetworkSpec, from: usize, to: usize) -> Self {
        Self {
            mode: DvoMode::Switching,
            target: Some(to),
            path: net.topology().path(from, to),
        }
    }

    /// Node the server is heading for in its next step.
    pub fn next_node(&self, current: usize) -> usize {
        self.path.first().copied().unwrap_or(current)
    }
}

/// Rule 1(a): compare continuing at `i` against a round trip to `j`.
fn busy_rule(net: &NetworkSpec, state: &SystemState) -> Option<usize> {
    let i = state.server;
    let (lambda, mu, cost, tau) = (net.lambda(), net.mu(), net.cost(), net.tau());
    let rho = net.rho();
    let here = cost[i] * mu[i];
    let mut best: Option<(usize, f64)> = None;
    for j in (0..net.demand_count()).filter(|&j| j != i) {
        let w = cost[j] * mu[j];
        if w < here {
            continue;
        }
        let out = net.dist(i, j) as f64 / tau;
        let back = net.dist(j, i) as f64 / tau;
        let x = state.jobs[j] as f64;
        let psi = w * (x + lambda[j] * out) / (x + mu[j] * out + (mu[j] - lambda[j]) * back);
        if approx_ge(psi, w * rho + here * (1.0 - rho)) && best.is_none_or(|(_, b)| psi > b + INDEX_TOLERANCE) {
            best = Some((j, psi));
        }
    }
    best.map(|(j, _)| j)
}

/// Rule 1(b): the idling rule at an empty point. Returns the point to switch
/// to, or `None` to stay idle.
fn idle_rule(net: &NetworkSpec, state: &SystemState) -> Option<usize> {
    let i = state.server;
    let (lambda, mu, cost, tau) = (net.lambda(), net.mu(), net.cost(), net.tau());
    let rho = net.rho();
    let mut best1: Option<(usize, f64)> = None;
    let mut best2: Option<(usize, f64)> = None;
    for j in (0..net.demand_count()).filter(|&j| j != i) {
        let w = cost[j] * mu[j];
        let out = net.dist(i, j) as f64 / tau;
        let x = state.jobs[j] as f64;
        let phi = w * (x + lambda[j] * out) / (x + mu[j] * out);
        let slot = if phi > w * rho + INDEX_TOLERANCE { &mut best1 } else { &mut best2 };
        if slot.is_none_or(|(_, b)| phi > b + INDEX_TOLERANCE) {
            *slot = Some((j, phi));
        }
    }
    let (j, _) = best1.or(best2)?;
    let threshold = lambda[j] * net.dist(j, i) as f64 / tau;
    (state.jobs[j] as f64 > threshold).then_some(j)
}

/// One DVO decision at a decision epoch.
pub fn dvo_decide(
    net: &NetworkSpec,
    state: &SystemState,
    epoch: EpochKind,
    commitment: &DvoCommitment,
) -> Result<(PolicyDecision, DvoCommitment)> {
    let i = state.server;
    if !net.is_demand(i) {
        return Err(Error::MidCommitment(format!("server is at intermediate stage {i}")));
    }
    let consistent = match epoch {
        EpochKind::JobFinished => commitment.mode == DvoMode::Processing,
        EpochKind::ArrivedAtPoint => commitment.mode == DvoMode::Switching && commitment.path.is_empty(),
        EpochKind::IdleArrival => commitment.mode == DvoMode::Idle,
    };
    if !consistent {
        return Err(Error::MidCommitment(format!("{epoch:?} while {:?}", commitment.mode)));
    }
    let x_i = state.jobs[i];
    let next = match epoch {
        EpochKind::JobFinished if x_i > 0 => match busy_rule(net, state) {
            Some(j) => DvoCommitment::switching(net, i, j),
            None => DvoCommitment::processing(),
        },
        _ if x_i > 0 => DvoCommitment::processing(),
        _ => match idle_rule(net, state) {
            Some(j) => DvoCommitment::switching(net, i, j),
            None => DvoCommitment::idle(),
        },
    };
    let decision = PolicyDecision {
        action: next.next_node(i),
        chosen_sequence: next.target.map(|j| crate::fluid::DemandSequence::new(vec![j]).expect("single stop")),
        trace: None,
    };
    Ok((decision, next))
}
