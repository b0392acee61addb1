//! Stochastic dynamic job scheduling on networks.
//!
//! A single server moves between the nodes of an undirected graph and
//! processes jobs that arrive at demand points. The crate builds the
//! uniformized MDP, implements the K-stop family of index heuristics together
//! with the DVO, polling and serve-the-longest-queue baselines, simulates
//! them under common random numbers, and computes optimal average costs on
//! truncated state spaces.

pub mod dp;
pub mod error;
pub mod experiment;
pub mod fluid;
pub mod heuristics;
pub mod instgen;
pub mod io;
pub mod model;
pub mod network;
pub mod sim;

pub use error::{Error, Result};
pub use fluid::{DemandSequence, FluidEvaluation};
pub use heuristics::{Policy, PolicyDecision, PolicySpec};
pub use instgen::{InstanceSpec, Layout, LayoutKind};
pub use model::{SystemState, TransitionEntry};
pub use network::{NetworkSpec, Topology};
pub use sim::{RandomStream, SimReport};
