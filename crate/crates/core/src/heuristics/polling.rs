use crate::model::SystemState;
use crate::network::NetworkSpec;

/// Exhaustive cyclic polling over `0, 1, …, d-1, 0, …`.
///
/// `last_emptied` is the most recent demand point at which the server saw no
/// jobs. The target is the point after it in cyclic order; the server serves
/// the target until it is empty and otherwise walks towards it.
pub fn polling_decide(net: &NetworkSpec, state: &SystemState, last_emptied: Option<usize>) -> (usize, Option<usize>) {
    let v = state.server;
    let d = net.demand_count();
    let last = if v < d && state.jobs[v] == 0 { Some(v) } else { last_emptied };
    let target = last.map_or(0, |w| (w + 1) % d);
    let action = if v == target { v } else { net.next_step(v, target).expect("distinct nodes") };
    (action, last)
}
