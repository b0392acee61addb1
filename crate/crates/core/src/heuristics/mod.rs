//! Decision policies: the K-stop family, DVO, exhaustive polling and serve
//! the longest queue.

mod dvo;
mod kfroml;
mod kstop;
mod polling;
mod slq;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluid::DemandSequence;
use crate::model::SystemState;
use crate::network::NetworkSpec;

pub use dvo::{dvo_decide, DvoCommitment, DvoMode, EpochKind};
pub use kfroml::{k_from_l_decide, select_points, stratified_quotas, SelectionMethod};
pub use kstop::candidate_count;
pub use polling::polling_decide;
pub use slq::serve_longest_queue_decide;

/// Sizes of the candidate and eligible sets behind one decision.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EligibilityTrace {
    pub candidates: usize,
    pub sigma: usize,
    pub sigma1: usize,
    pub sigma2: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyDecision {
    pub action: usize,
    pub chosen_sequence: Option<DemandSequence>,
    pub trace: Option<EligibilityTrace>,
}

/// K-stop decision over all demand points.
pub fn kstop_decide(net: &NetworkSpec, state: &SystemState, k: usize) -> PolicyDecision {
    let pool: Vec<usize> = (0..net.demand_count()).collect();
    kstop::decide_over(net, state, k.max(1), &pool)
}

/// A policy that picks an action at every step of the uniformized chain.
pub trait Policy: Send {
    fn decide(&mut self, net: &NetworkSpec, state: &SystemState) -> usize;

    /// Clears any per-run memory before a new simulation.
    fn reset(&mut self) {}
}

/// Policy selection strings: `dvo`, `kstop:K`, `kfroml:K:L:impartial|stratified`,
/// `polling`, `slq`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum PolicySpec {
    Dvo,
    KStop { k: usize },
    KFromL { k: usize, l: usize, method: SelectionMethod },
    Polling,
    Slq,
}

impl PolicySpec {
    /// DVO runs in continuous time; everything else steps the uniformized
    /// chain.
    pub fn is_stationary(&self) -> bool {
        !matches!(self, Self::Dvo)
    }

    /// Column-friendly label, e.g. `kstop2` or `kfroml2_4_impartial`.
    pub fn label(&self) -> String {
        match self {
            Self::Dvo => "dvo".into(),
            Self::KStop { k } => format!("kstop{k}"),
            Self::KFromL { k, l, method } => format!("kfroml{k}_{l}_{method}"),
            Self::Polling => "polling".into(),
            Self::Slq => "slq".into(),
        }
    }

    /// Instantiates a step-driven policy for `net`. A (K from L) spec with
    /// L above the number of demand points considers all of them.
    pub fn build(&self, net: &NetworkSpec) -> Result<Box<dyn Policy>> {
        Ok(match *self {
            Self::Dvo => {
                return Err(Error::PolicySpec("dvo runs in the continuous-time simulator".into()));
            }
            Self::KStop { k } => Box::new(KStopPolicy::new(k)),
            Self::KFromL { k, l, method } => {
                if l == 0 {
                    return Err(Error::InvalidParameter("L must be positive".into()));
                }
                if method == SelectionMethod::Stratified && net.topology().clusters().is_none() {
                    return Err(Error::InvalidParameter("stratified selection needs clusters".into()));
                }
                Box::new(KFromLPolicy::new(k, l.min(net.demand_count()), method))
            }
            Self::Polling => Box::new(PollingPolicy::default()),
            Self::Slq => {
                if !net.topology().is_complete() {
                    return Err(Error::NotComplete);
                }
                Box::new(SlqPolicy)
            }
        })
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dvo => f.write_str("dvo"),
            Self::KStop { k } => write!(f, "kstop:{k}"),
            Self::KFromL { k, l, method } => write!(f, "kfroml:{k}:{l}:{method}"),
            Self::Polling => f.write_str("polling"),
            Self::Slq => f.write_str("slq"),
        }
    }
}

impl From<PolicySpec> for String {
    fn from(p: PolicySpec) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for PolicySpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::PolicySpec(s.to_string());
        let positive = |p: &str| p.parse::<usize>().ok().filter(|&v| v >= 1).ok_or_else(bad);
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["dvo"] => Ok(Self::Dvo),
            ["polling"] => Ok(Self::Polling),
            ["slq"] => Ok(Self::Slq),
            ["kstop", k] => Ok(Self::KStop { k: positive(k)? }),
            ["kfroml", k, l, m] => {
                let method = match *m {
                    "impartial" => SelectionMethod::Impartial,
                    "stratified" => SelectionMethod::Stratified,
                    _ => return Err(bad()),
                };
                Ok(Self::KFromL {
                    k: positive(k)?,
                    l: positive(l)?,
                    method,
                })
            }
            _ => Err(bad()),
        }
    }
}

/// Upper bound on memoized states before the table is flushed.
const CACHE_LIMIT: usize = 1 << 21;

/// Memo table for stationary rules, which are pure functions of the state.
#[derive(Default)]
struct DecisionCache(HashMap<SystemState, usize>);

impl DecisionCache {
    fn get_or(&mut self, state: &SystemState, f: impl FnOnce() -> usize) -> usize {
        if let Some(&a) = self.0.get(state) {
            return a;
        }
        let a = f();
        if self.0.len() >= CACHE_LIMIT {
            self.0.clear();
        }
        self.0.insert(state.clone(), a);
        a
    }
}

pub struct KStopPolicy {
    k: usize,
    cache: DecisionCache,
}

impl KStopPolicy {
    pub fn new(k: usize) -> Self {
        Self {
            k: k.max(1),
            cache: DecisionCache::default(),
        }
    }
}

impl Policy for KStopPolicy {
    fn decide(&mut self, net: &NetworkSpec, state: &SystemState) -> usize {
        let k = self.k;
        self.cache.get_or(state, || kstop_decide(net, state, k).action)
    }

    fn reset(&mut self) {
        self.cache.0.clear();
    }
}

pub struct KFromLPolicy {
    k: usize,
    l: usize,
    method: SelectionMethod,
    cache: DecisionCache,
}

impl KFromLPolicy {
    pub fn new(k: usize, l: usize, method: SelectionMethod) -> Self {
        Self {
            k: k.max(1),
            l,
            method,
            cache: DecisionCache::default(),
        }
    }
}

impl Policy for KFromLPolicy {
    fn decide(&mut self, net: &NetworkSpec, state: &SystemState) -> usize {
        let (k, l, method) = (self.k, self.l, self.method);
        self.cache.get_or(state, || {
            k_from_l_decide(net, state, k, l, method)
                .expect("validated when the policy was built")
                .action
        })
    }

    fn reset(&mut self) {
        self.cache.0.clear();
    }
}

#[derive(Default)]
pub struct PollingPolicy {
    last_emptied: Option<usize>,
}

impl Policy for PollingPolicy {
    fn decide(&mut self, net: &NetworkSpec, state: &SystemState) -> usize {
        let (action, last) = polling_decide(net, state, self.last_emptied);
        self.last_emptied = last;
        action
    }

    fn reset(&mut self) {
        self.last_emptied = None;
    }
}

pub struct SlqPolicy;

impl Policy for SlqPolicy {
    fn decide(&mut self, net: &NetworkSpec, state: &SystemState) -> usize {
        serve_longest_queue_decide(net, state).expect("complete graph checked at build time")
    }
}

/// Wraps a closure as a policy; handy for fixed rules in tests and benches.
pub struct FnPolicy<F>(pub F);

impl<F> Policy for FnPolicy<F>
where
    F: FnMut(&NetworkSpec, &SystemState) -> usize + Send,
{
    fn decide(&mut self, net: &NetworkSpec, state: &SystemState) -> usize {
        (self.0)(net, state)
    }
}
