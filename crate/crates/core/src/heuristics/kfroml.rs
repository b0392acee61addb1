use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluid::{approx_ge, RouteAccumulator};
use crate::model::SystemState;
use crate::network::NetworkSpec;

use super::{kstop, PolicyDecision};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMethod {
    Impartial,
    Stratified,
}

impl std::fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Impartial => "impartial",
            Self::Stratified => "stratified",
        })
    }
}

/// Singleton index of every demand point, with the server's own point valued
/// at `c_v μ_v` when it has work and 0 otherwise. The flag says whether the
/// singleton passes ψ ≥ γ (only used when the server has no work).
fn singleton_indices(net: &NetworkSpec, state: &SystemState) -> Vec<(usize, f64, bool)> {
    let v = state.server;
    (0..net.demand_count())
        .map(|j| {
            if j == v {
                let x = state.jobs[j];
                let psi = if x > 0 { net.cost()[j] * net.mu()[j] } else { 0.0 };
                (j, psi, false)
            } else {
                let mut acc = RouteAccumulator::new(net, &state.jobs, v, 0.0);
                acc.push(j);
                let psi = acc.psi();
                (j, psi, approx_ge(psi, acc.gamma()))
            }
        })
        .collect()
}

/// Takes `count` points from `group`: highest index first, ties to the
/// lowest id. With `prioritize`, points passing ψ ≥ γ come before the rest.
fn take_top(group: &mut [(usize, f64, bool)], count: usize, prioritize: bool) -> Vec<usize> {
    group.sort_by(|a, b| {
        let pa = prioritize && a.2;
        let pb = prioritize && b.2;
        pb.cmp(&pa).then(b.1.total_cmp(&a.1)).then(a.0.cmp(&b.0))
    });
    group.iter().take(count).map(|e| e.0).collect()
}

/// Per-cluster quotas: `L / C` each, remainder to the first clusters, and any
/// quota a small cluster cannot absorb carried to the next ones.
pub fn stratified_quotas(sizes: &[usize], l: usize) -> Result<Vec<usize>> {
    let total: usize = sizes.iter().sum();
    if l > total {
        return Err(Error::InvalidParameter(format!("L = {l} exceeds the {total} demand points")));
    }
    let c = sizes.len();
    if c == 0 {
        return Err(Error::InvalidParameter("stratified selection needs clusters".into()));
    }
    let mut quotas: Vec<usize> = (0..c).map(|i| l / c + usize::from(i < l % c)).collect();
    let mut carry = 0;
    for (q, &size) in quotas.iter_mut().zip(sizes) {
        let want = *q + carry;
        *q = want.min(size);
        carry = want - *q;
    }
    for (q, &size) in quotas.iter_mut().zip(sizes) {
        let extra = carry.min(size - *q);
        *q += extra;
        carry -= extra;
    }
    debug_assert_eq!(quotas.iter().sum::<usize>(), l);
    Ok(quotas)
}

/// The restricted set 𝓛, ascending.
pub fn select_points(
    net: &NetworkSpec,
    state: &SystemState,
    l: usize,
    method: SelectionMethod,
) -> Result<Vec<usize>> {
    let d = net.demand_count();
    if l == 0 || l > d {
        return Err(Error::InvalidParameter(format!("L must lie in 1..={d}, got {l}")));
    }
    let v = state.server;
    let prioritize = !(v < d && state.jobs[v] > 0);
    let indices = singleton_indices(net, state);
    let mut chosen = match method {
        SelectionMethod::Impartial => take_top(&mut indices.clone(), l, prioritize),
        SelectionMethod::Stratified => {
            let clusters = net
                .topology()
                .clusters()
                .ok_or_else(|| Error::InvalidParameter("stratified selection needs clusters".into()))?;
            let sizes: Vec<usize> = clusters.iter().map(Vec::len).collect();
            let quotas = stratified_quotas(&sizes, l)?;
            let mut out = Vec::with_capacity(l);
            for (members, &q) in clusters.iter().zip(&quotas) {
                let mut group: Vec<_> = members.iter().map(|&j| indices[j]).collect();
                out.extend(take_top(&mut group, q, prioritize));
            }
            out
        }
    };
    chosen.sort_unstable();
    Ok(chosen)
}

/// (K from L)-stop decision.
pub fn k_from_l_decide(
    net: &NetworkSpec,
    state: &SystemState,
    k: usize,
    l: usize,
    method: SelectionMethod,
) -> Result<PolicyDecision> {
    let pool = select_points(net, state, l, method)?;
    Ok(kstop::decide_over(net, state, k, &pool))
}
