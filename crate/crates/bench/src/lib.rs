//! Shared fixtures for the benchmarks.

use netsched_core::instgen::generate;
use netsched_core::{LayoutKind, NetworkSpec, SystemState};

/// Two-cluster instance for `seed`, redrawn with the next seeds until it
/// has exactly `d` demand points.
pub fn two_cluster_with(d: usize, seed: u64) -> NetworkSpec {
    (seed..)
        .map(|s| generate(LayoutKind::TwoCluster, s).expect("generator failed").network)
        .find(|n| n.demand_count() == d)
        .expect("unbounded search")
}

/// Server at the first intermediate stage (or point 0), a few jobs everywhere.
pub fn loaded_state(net: &NetworkSpec) -> SystemState {
    let d = net.demand_count();
    let server = if net.node_count() > d { d } else { 0 };
    SystemState::new(server, (0..d).map(|i| 1 + (i as u32 * 3) % 7).collect())
}
