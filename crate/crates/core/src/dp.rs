//! Optimal average cost on truncated state spaces.
//!
//! Queues are capped at `m`; an arrival to a full queue becomes a
//! self-transition. Transition rows are generated on demand from mixed-radix
//! strides instead of being stored, and the arrival part of each Bellman
//! update is shared by all actions of a state.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heuristics::Policy;
use crate::model::SystemState;
use crate::network::NetworkSpec;

/// Hard cap on the number of states held in memory.
const MAX_STATES: u128 = 1 << 28;

/// `(d + n)(m + 1)^d`, computed without overflow.
pub fn truncated_state_count(node_count: usize, demand_count: usize, m: u32) -> u128 {
    let radix = m as u128 + 1;
    let mut count = node_count as u128;
    for _ in 0..demand_count {
        count = count.saturating_mul(radix);
    }
    count
}

#[derive(Clone, Debug)]
pub struct TruncatedMdp<'a> {
    net: &'a NetworkSpec,
    m: u32,
    /// `(m+1)^i` for each demand point.
    strides: Vec<usize>,
    /// States per server location, `(m+1)^d`.
    per_node: usize,
    /// Holding cost of each job vector, indexed like the job part of a state.
    costs: Vec<f64>,
    /// Bit i set when queue i is full (at `m`), per job vector.
    full: Vec<u32>,
    /// Bit i set when queue i is nonempty, per job vector.
    busy: Vec<u32>,
}

impl<'a> TruncatedMdp<'a> {
    pub fn new(net: &'a NetworkSpec, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("truncation level must be at least 1".into()));
        }
        let d = net.demand_count();
        let count = truncated_state_count(net.node_count(), d, m);
        if count > MAX_STATES {
            return Err(Error::StateSpaceTooLarge(count));
        }
        let radix = m as usize + 1;
        let strides: Vec<usize> = (0..d).map(|i| radix.pow(i as u32)).collect();
        let per_node = radix.pow(d as u32);
        let costs = (0..per_node)
            .map(|p| {
                (0..d)
                    .map(|i| net.cost()[i] * ((p / strides[i]) % radix) as f64)
                    .sum()
            })
            .collect();
        let mask = |p: usize, test: &dyn Fn(usize) -> bool| -> u32 {
            (0..d).filter(|&i| test((p / strides[i]) % radix)).fold(0, |acc, i| acc | 1 << i)
        };
        let full = (0..per_node).map(|p| mask(p, &|x| x == m as usize)).collect();
        let busy = (0..per_node).map(|p| mask(p, &|x| x > 0)).collect();
        Ok(Self {
            net,
            m,
            strides,
            per_node,
            costs,
            full,
            busy,
        })
    }

    pub fn network(&self) -> &NetworkSpec {
        self.net
    }

    pub fn truncation(&self) -> u32 {
        self.m
    }

    pub fn state_count(&self) -> usize {
        self.per_node * self.net.node_count()
    }

    #[inline]
    fn jobs_at(&self, job_part: usize, i: usize) -> u32 {
        ((job_part / self.strides[i]) % (self.m as usize + 1)) as u32
    }

    /// Index of `state`; job counts above `m` are clamped to `m`.
    pub fn index(&self, state: &SystemState) -> usize {
        let job_part: usize = state
            .jobs
            .iter()
            .zip(&self.strides)
            .map(|(&x, &s)| x.min(self.m) as usize * s)
            .sum();
        state.server * self.per_node + job_part
    }

    pub fn state(&self, index: usize) -> SystemState {
        let (v, p) = (index / self.per_node, index % self.per_node);
        SystemState::new(v, (0..self.net.demand_count()).map(|i| self.jobs_at(p, i)).collect())
    }

    /// Current node plus neighbors, ascending.
    pub fn actions(&self, index: usize) -> Vec<usize> {
        crate::model::action_set(self.net, &self.state(index))
    }

    /// Transition row of `(index, action)`, self-transition last.
    pub fn transitions(&self, index: usize, action: usize) -> Result<Vec<(usize, f64)>> {
        let state = self.state(index);
        if !crate::model::is_valid_action(self.net, &state, action) {
            return Err(Error::InvalidAction {
                node: state.server,
                action,
            });
        }
        let p = index % self.per_node;
        let event = crate::model::event_probability(self.net, &state, action);
        if self.net.total_arrival() + event > 1.0 + 1e-12 {
            return Err(Error::UniformizationViolated(self.net.total_arrival() + event));
        }
        let mut row = Vec::with_capacity(self.net.demand_count() + 2);
        for (i, &l) in self.net.lambda().iter().enumerate() {
            // arrivals to a full queue stay in the self-transition mass
            if l > 0.0 && state.jobs[i] < self.m {
                row.push((index + self.strides[i], l));
            }
        }
        if event > 0.0 {
            let next = if action == state.server {
                index - self.strides[action]
            } else {
                action * self.per_node + p
            };
            row.push((next, event));
        }
        let used: f64 = row.iter().map(|e| e.1).sum();
        row.push((index, (1.0 - used).max(0.0)));
        Ok(row)
    }

    /// Expected next value under each action of `index`, sharing the arrival
    /// part. Calls `visit(action, value)` in ascending action order.
    #[inline]
    fn action_values(&self, index: usize, h: &[f64], mut visit: impl FnMut(usize, f64)) {
        let net = self.net;
        let v = index / self.per_node;
        let p = index % self.per_node;
        let here = h[index];
        let total_arrival = net.total_arrival();
        let full = self.full[p];
        let mut arrival = 0.0;
        for (i, (&l, &stride)) in net.lambda().iter().zip(&self.strides).enumerate() {
            let next = if full & (1 << i) == 0 { index + stride } else { index };
            arrival += l * h[next];
        }
        let stay = if v < net.demand_count() && self.busy[p] & (1 << v) != 0 {
            let mu = net.mu()[v];
            arrival + mu * h[index - self.strides[v]] + (1.0 - total_arrival - mu) * here
        } else {
            arrival + (1.0 - total_arrival) * here
        };
        let tau = net.tau();
        let move_to = |u: usize| arrival + tau * h[u * self.per_node + p] + (1.0 - total_arrival - tau) * here;
        let neighbors = net.neighbors(v);
        let split = neighbors.partition_point(|&u| u < v);
        for &u in &neighbors[..split] {
            visit(u, move_to(u));
        }
        visit(v, stay);
        for &u in &neighbors[split..] {
            visit(u, move_to(u));
        }
    }

    fn bellman(&self, index: usize, h: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        self.action_values(index, h, |_, val| best = best.min(val));
        self.costs[index % self.per_node] + best
    }

    /// Lowest-numbered action attaining the minimum in the Bellman update.
    pub fn greedy_action(&self, index: usize, h: &[f64]) -> usize {
        let mut best = (usize::MAX, f64::INFINITY);
        self.action_values(index, h, |a, val| {
            if best.0 == usize::MAX || val < best.1 - 1e-12 * best.1.abs().max(1.0) {
                best = (a, val);
            }
        });
        best.0
    }

    /// Bias of this truncation seeded from a coarser one: each state reads
    /// the value of its job vector clamped to the coarser level.
    pub fn lift_bias(&self, coarse: &TruncatedMdp<'_>, h: &[f64]) -> Vec<f64> {
        (0..self.state_count())
            .map(|idx| h[coarse.index(&self.state(idx))])
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RviConfig {
    /// Stop once `max(Th − h) − min(Th − h)` falls below this.
    pub tolerance: f64,
    pub max_iters: usize,
    /// Weight κ of the update `h ← (1−κ)h + κTh`. `None` picks 1, or 0.95
    /// when some action leaves less than 5% self-transition mass, which
    /// breaks periodicity.
    pub damping: Option<f64>,
    /// Abandon the solve after this much wall-clock time.
    pub time_limit: Option<Duration>,
}

impl Default for RviConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            max_iters: 1_000_000,
            damping: None,
            time_limit: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DpResult {
    pub g_star: f64,
    pub iterations: usize,
    pub span: f64,
    pub truncation: u32,
    pub tolerance: f64,
    pub damping: f64,
    pub elapsed_secs: f64,
    #[serde(skip)]
    pub bias: Vec<f64>,
}

fn auto_damping(net: &NetworkSpec) -> f64 {
    if 1.0 - net.rate_budget() < 0.05 {
        0.95
    } else {
        1.0
    }
}

/// Relative value iteration from a zero bias.
pub fn relative_value_iteration(mdp: &TruncatedMdp<'_>, config: &RviConfig) -> Result<DpResult> {
    relative_value_iteration_from(mdp, config, None)
}

/// Relative value iteration, optionally warm-started from `initial`. The
/// reference state is index 0 (server at the first demand point, no jobs).
/// Sweeps are Jacobi updates, so the result does not depend on the number of
/// threads.
pub fn relative_value_iteration_from(
    mdp: &TruncatedMdp<'_>,
    config: &RviConfig,
    initial: Option<Vec<f64>>,
) -> Result<DpResult> {
    let n = mdp.state_count();
    let kappa = config.damping.unwrap_or_else(|| auto_damping(mdp.net));
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::InvalidParameter(format!("damping must lie in (0, 1], got {kappa}")));
    }
    let mut h = match initial {
        Some(h) if h.len() == n => h,
        Some(h) => {
            return Err(Error::InvalidParameter(format!("initial bias has {} entries, expected {n}", h.len())));
        }
        None => vec![0.0; n],
    };
    let mut next = vec![0.0; n];
    let started = Instant::now();
    let mut span = f64::INFINITY;
    for iter in 1..=config.max_iters {
        next.par_iter_mut()
            .enumerate()
            .with_min_len(1024)
            .for_each(|(idx, out)| *out = mdp.bellman(idx, &h));
        let (lo, hi) = next
            .par_iter()
            .zip(h.par_iter())
            .with_min_len(1024)
            .map(|(a, b)| (a - b, a - b))
            .reduce(|| (f64::INFINITY, f64::NEG_INFINITY), |x, y| (x.0.min(y.0), x.1.max(y.1)));
        span = hi - lo;
        let reference = (1.0 - kappa) * h[0] + kappa * next[0];
        h.par_iter_mut()
            .zip(next.par_iter())
            .with_min_len(1024)
            .for_each(|(hv, &tv)| *hv = (1.0 - kappa) * *hv + kappa * tv - reference);
        if span < config.tolerance {
            return Ok(DpResult {
                g_star: 0.5 * (lo + hi),
                iterations: iter,
                span,
                truncation: mdp.truncation(),
                tolerance: config.tolerance,
                damping: kappa,
                elapsed_secs: started.elapsed().as_secs_f64(),
                bias: h,
            });
        }
        if config.time_limit.is_some_and(|limit| started.elapsed() > limit) {
            return Err(Error::NotConverged { iterations: iter, span });
        }
    }
    Err(Error::NotConverged {
        iterations: config.max_iters,
        span,
    })
}

/// Stationary policy read off a converged bias; states beyond the truncation
/// use the clamped job vector.
#[derive(Clone, Debug)]
pub struct GreedyPolicy {
    m: u32,
    strides: Vec<usize>,
    per_node: usize,
    actions: Vec<u32>,
}

impl GreedyPolicy {
    pub fn from_bias(mdp: &TruncatedMdp<'_>, h: &[f64]) -> Self {
        let actions = (0..mdp.state_count())
            .into_par_iter()
            .map(|idx| mdp.greedy_action(idx, h) as u32)
            .collect();
        Self {
            m: mdp.m,
            strides: mdp.strides.clone(),
            per_node: mdp.per_node,
            actions,
        }
    }

    pub fn action(&self, state: &SystemState) -> usize {
        let p: usize = state
            .jobs
            .iter()
            .zip(&self.strides)
            .map(|(&x, &s)| x.min(self.m) as usize * s)
            .sum();
        self.actions[state.server * self.per_node + p] as usize
    }
}

impl Policy for GreedyPolicy {
    fn decide(&mut self, _net: &NetworkSpec, state: &SystemState) -> usize {
        self.action(state)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeasibilityLimits {
    /// Instances with at least this many demand points are not attempted.
    pub max_demand_points: usize,
    pub state_limit: u128,
    pub time_limit: Duration,
    pub m_start: u32,
    pub m_step: u32,
    /// Largest acceptable increase of g* between the last two truncations.
    pub epsilon: f64,
    pub rvi: RviConfig,
}

impl Default for FeasibilityLimits {
    fn default() -> Self {
        Self {
            max_demand_points: 4,
            state_limit: 1_000_000,
            time_limit: Duration::from_secs(600),
            m_start: 10,
            m_step: 10,
            epsilon: 1e-3,
            rvi: RviConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Feasibility {
    Feasible { g_star: f64, m: u32 },
    Infeasible { reason: String },
}

impl Feasibility {
    pub fn g_star(&self) -> Option<f64> {
        match self {
            Self::Feasible { g_star, .. } => Some(*g_star),
            Self::Infeasible { .. } => None,
        }
    }
}

/// Result of the escalation loop plus what it computed on the way.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub outcome: Feasibility,
    /// `(m, g*, seconds)` of every completed solve.
    pub solves: Vec<(u32, f64, f64)>,
    #[serde(skip)]
    pub policy: Option<GreedyPolicy>,
}

/// Raises the truncation level in steps until the state space or the solve
/// time runs out, then accepts g* only if it is positive (beyond the solver
/// tolerance) and the last step moved it by at most ε.
pub fn feasibility_escalation(net: &NetworkSpec, limits: &FeasibilityLimits) -> Result<FeasibilityReport> {
    let d = net.demand_count();
    let infeasible = |reason: String, solves| FeasibilityReport {
        outcome: Feasibility::Infeasible { reason },
        solves,
        policy: None,
    };
    if d >= limits.max_demand_points {
        return Ok(infeasible(format!("{d} demand points"), Vec::new()));
    }
    let mut solves: Vec<(u32, f64, f64)> = Vec::new();
    let mut previous_g = 0.0;
    let mut latest_g = 0.0;
    let mut m = limits.m_start;
    let mut warm: Option<(u32, Vec<f64>)> = None;
    let mut policy = None;
    loop {
        if truncated_state_count(net.node_count(), d, m) >= limits.state_limit {
            break;
        }
        let mdp = TruncatedMdp::new(net, m)?;
        let initial = warm.as_ref().map(|(wm, h)| {
            let coarse = TruncatedMdp::new(net, *wm).expect("coarser level was built before");
            mdp.lift_bias(&coarse, h)
        });
        let started = Instant::now();
        let mut config = limits.rvi.clone();
        config.time_limit = Some(config.time_limit.map_or(limits.time_limit * 4, |t| t.min(limits.time_limit * 4)));
        let result = match relative_value_iteration_from(&mdp, &config, initial) {
            Ok(r) => r,
            Err(Error::NotConverged { iterations, span }) => {
                return Ok(infeasible(
                    format!("value iteration stalled at m = {m} after {iterations} sweeps (span {span:e})"),
                    solves,
                ));
            }
            Err(e) => return Err(e),
        };
        let elapsed = started.elapsed();
        solves.push((m, result.g_star, elapsed.as_secs_f64()));
        previous_g = latest_g;
        latest_g = result.g_star;
        policy = Some(GreedyPolicy::from_bias(&mdp, &result.bias));
        warm = Some((m, result.bias));
        if elapsed >= limits.time_limit {
            break;
        }
        m += limits.m_step;
    }
    if solves.is_empty() {
        return Ok(infeasible("state space too large at the first level".into(), solves));
    }
    if latest_g.abs() < limits.rvi.tolerance {
        return Ok(infeasible("g* is zero".into(), solves));
    }
    let increment = latest_g - previous_g;
    if increment > limits.epsilon {
        return Ok(infeasible(format!("last increment {increment:.3e} exceeds {}", limits.epsilon), solves));
    }
    let m_last = solves.last().map(|s| s.0).unwrap_or(limits.m_start);
    Ok(FeasibilityReport {
        outcome: Feasibility::Feasible {
            g_star: latest_g,
            m: m_last,
        },
        solves,
        policy,
    })
}
