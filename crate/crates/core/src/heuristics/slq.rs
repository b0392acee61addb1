use crate::error::{Error, Result};
use crate::model::SystemState;
use crate::network::NetworkSpec;

/// Serve the Longest Queue on a complete graph: keep serving a non-empty
/// point, otherwise switch to the other point with the most jobs (lowest id
/// on ties), even when every queue is empty.
pub fn serve_longest_queue_decide(net: &NetworkSpec, state: &SystemState) -> Result<usize> {
    if !net.topology().is_complete() {
        return Err(Error::NotComplete);
    }
    let v = state.server;
    if state.jobs[v] > 0 {
        return Ok(v);
    }
    let best = (0..net.demand_count())
        .filter(|&j| j != v)
        .fold(None::<usize>, |best, j| match best {
            Some(b) if state.jobs[b] >= state.jobs[j] => Some(b),
            _ => Some(j),
        });
    Ok(best.unwrap_or(v))
}
