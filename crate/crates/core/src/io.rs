//! JSON instance files.
//!
//! ```json
//! {"nodes": 3, "edges": [[1, 3], [2, 3]],
//!  "demand": [{"id": 1, "lambda": 0.1, "mu": 0.5, "cost": 1.0}, …],
//!  "tau": 0.5, "clusters": [[1], [2]]}
//! ```
//!
//! Ids are 1-based; demand points must be `1..=d`. Generated instances also
//! carry their layout, seed and generator version under `instance`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instgen::{InstanceSpec, Layout};
use crate::network::{NetworkSpec, Topology};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandEntry {
    pub id: usize,
    pub lambda: f64,
    pub mu: f64,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub layout: Layout,
    pub target_rho: f64,
    /// Absent when there are no arrivals (η undefined).
    pub target_eta: Option<f64>,
    pub rho: f64,
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub generator: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub nodes: usize,
    pub edges: Vec<[usize; 2]>,
    pub demand: Vec<DemandEntry>,
    pub tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceMeta>,
}

impl NetworkFile {
    pub fn from_network(net: &NetworkSpec) -> Self {
        let topo = net.topology();
        Self {
            nodes: net.node_count(),
            edges: topo.edges().into_iter().map(|(a, b)| [a + 1, b + 1]).collect(),
            demand: (0..net.demand_count())
                .map(|i| DemandEntry {
                    id: i + 1,
                    lambda: net.lambda()[i],
                    mu: net.mu()[i],
                    cost: net.cost()[i],
                })
                .collect(),
            tau: net.tau(),
            clusters: topo
                .clusters()
                .map(|cs| cs.iter().map(|c| c.iter().map(|j| j + 1).collect()).collect()),
            instance: None,
        }
    }

    pub fn from_instance(inst: &InstanceSpec) -> Self {
        let mut file = Self::from_network(&inst.network);
        file.instance = Some(InstanceMeta {
            layout: inst.layout.clone(),
            target_rho: inst.target_rho,
            target_eta: finite(inst.target_eta),
            rho: inst.rho(),
            eta: finite(inst.eta()),
            seed: inst.seed,
            generator: inst.generator.clone(),
        });
        file
    }

    pub fn to_network(&self) -> Result<NetworkSpec> {
        let d = self.demand.len();
        let mut demand = self.demand.clone();
        demand.sort_by_key(|e| e.id);
        if demand.iter().enumerate().any(|(k, e)| e.id != k + 1) {
            return Err(Error::InvalidTopology(format!("demand ids must be exactly 1..={d}")));
        }
        let zero_based = |id: usize| -> Result<usize> {
            id.checked_sub(1)
                .filter(|&v| v < self.nodes)
                .ok_or_else(|| Error::InvalidTopology(format!("node id {id} outside 1..={}", self.nodes)))
        };
        let edges = self
            .edges
            .iter()
            .map(|[a, b]| Ok((zero_based(*a)?, zero_based(*b)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut topo = Topology::from_edges(self.nodes, d, &edges)?;
        if let Some(clusters) = &self.clusters {
            let clusters = clusters
                .iter()
                .map(|c| c.iter().map(|&j| zero_based(j)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            topo = topo.with_clusters(clusters)?;
        }
        NetworkSpec::new(
            topo,
            demand.iter().map(|e| e.lambda).collect(),
            demand.iter().map(|e| e.mu).collect(),
            demand.iter().map(|e| e.cost).collect(),
            self.tau,
        )
    }

    pub fn to_instance(&self) -> Result<InstanceSpec> {
        let network = self.to_network()?;
        Ok(match &self.instance {
            Some(meta) => InstanceSpec {
                network,
                target_rho: meta.target_rho,
                target_eta: meta.target_eta.unwrap_or(f64::INFINITY),
                layout: meta.layout.clone(),
                seed: meta.seed,
                generator: meta.generator.clone(),
            },
            None => InstanceSpec {
                target_rho: network.rho(),
                target_eta: network.eta(),
                network,
                layout: Layout::Custom,
                seed: None,
                generator: String::new(),
            },
        })
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn instance_to_json(inst: &InstanceSpec) -> Result<String> {
    Ok(serde_json::to_string_pretty(&NetworkFile::from_instance(inst))?)
}

pub fn instance_from_json(text: &str) -> Result<InstanceSpec> {
    serde_json::from_str::<NetworkFile>(text)?.to_instance()
}

pub fn read_instance(path: &Path) -> Result<InstanceSpec> {
    instance_from_json(&fs::read_to_string(path)?)
}

pub fn write_instance(path: &Path, inst: &InstanceSpec) -> Result<()> {
    let mut text = instance_to_json(inst)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
