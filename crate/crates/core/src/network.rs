//! Graph topology, all-pairs distances and the experiment layouts.
//!
//! Nodes are indexed from zero internally. Demand points always occupy
//! `0..demand_count` and intermediate stages follow, so "node 0" is the
//! first demand point. Every tie (shortest-path step, lattice numbering)
//! is broken by ascending node index.

use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};

/// Edge-count distances between every pair of nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<u32>,
}

impl DistanceMatrix {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.n + j]
    }

    pub fn size(&self) -> usize {
        self.n
    }
}

/// Breadth-first search from every node.
pub fn all_pairs_distance(adjacency: &[Vec<usize>]) -> Result<DistanceMatrix> {
    let n = adjacency.len();
    let mut data = vec![u32::MAX; n * n];
    let mut queue = VecDeque::with_capacity(n);
    for src in 0..n {
        let row = &mut data[src * n..(src + 1) * n];
        row[src] = 0;
        queue.clear();
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = row[u];
            for &w in &adjacency[u] {
                if row[w] == u32::MAX {
                    row[w] = du + 1;
                    queue.push_back(w);
                }
            }
        }
        if let Some(unreached) = row.iter().position(|&x| x == u32::MAX) {
            return Err(Error::Disconnected(unreached));
        }
    }
    Ok(DistanceMatrix { n, data })
}

/// An undirected, connected graph whose first `demand_count` nodes are
/// demand points.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    adjacency: Vec<Vec<usize>>,
    demand_count: usize,
    dist: DistanceMatrix,
    clusters: Option<Vec<Vec<usize>>>,
}

impl Topology {
    /// Builds a topology from an undirected edge list over `0..node_count`.
    pub fn from_edges(
        node_count: usize,
        demand_count: usize,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        if node_count == 0 || demand_count == 0 {
            return Err(Error::InvalidTopology(
                "need at least one node and one demand point".into(),
            ));
        }
        if demand_count > node_count {
            return Err(Error::InvalidTopology(format!(
                "demand count {demand_count} exceeds node count {node_count}"
            )));
        }
        let mut adjacency = vec![Vec::new(); node_count];
        for &(a, b) in edges {
            if a >= node_count || b >= node_count {
                return Err(Error::InvalidTopology(format!(
                    "edge ({a}, {b}) references a node outside 0..{node_count}"
                )));
            }
            if a == b {
                return Err(Error::InvalidTopology(format!("self-loop at node {a}")));
            }
            if !adjacency[a].contains(&b) {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let dist = all_pairs_distance(&adjacency)?;
        Ok(Self {
            adjacency,
            demand_count,
            dist,
            clusters: None,
        })
    }

    /// Attaches a partition of the demand points into clusters.
    pub fn with_clusters(mut self, clusters: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; self.demand_count];
        for cluster in &clusters {
            for &i in cluster {
                if i >= self.demand_count || seen[i] {
                    return Err(Error::InvalidTopology(format!(
                        "clusters must partition the demand points (bad entry {i})"
                    )));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidTopology(
                "clusters do not cover every demand point".into(),
            ));
        }
        self.clusters = Some(clusters.into_iter().filter(|c| !c.is_empty()).collect());
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn demand_count(&self) -> usize {
        self.demand_count
    }

    pub fn stage_count(&self) -> usize {
        self.adjacency.len() - self.demand_count
    }

    #[inline]
    pub fn is_demand(&self, v: usize) -> bool {
        v < self.demand_count
    }

    /// Neighbors of `v` in ascending order.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> u32 {
        self.dist.get(i, j)
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.dist
    }

    pub fn clusters(&self) -> Option<&[Vec<usize>]> {
        self.clusters.as_deref()
    }

    /// Undirected edges with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, list) in self.adjacency.iter().enumerate() {
            for &b in list {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// The lowest-numbered neighbor of `from` that lies on a shortest path
    /// to `to`.
    pub fn next_step(&self, from: usize, to: usize) -> Result<usize> {
        if from == to {
            return Err(Error::SameNode(from));
        }
        let target = self.dist(from, to) - 1;
        self.adjacency[from]
            .iter()
            .copied()
            .find(|&u| self.dist(u, to) == target)
            .ok_or_else(|| Error::InvalidTopology("no shortest-path neighbor".into()))
    }

    /// Shortest path `from -> to` (excluding `from`, including `to`) built by
    /// repeated [`Topology::next_step`].
    pub fn path(&self, from: usize, to: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dist(from, to) as usize);
        let mut cur = from;
        while cur != to {
            cur = self.next_step(cur, to).expect("connected graph");
            out.push(cur);
        }
        out
    }

    /// Largest distance between an intermediate stage and a demand point,
    /// or `None` when there are no stages.
    pub fn max_stage_distance(&self) -> Option<u32> {
        (self.demand_count..self.node_count())
            .flat_map(|s| (0..self.demand_count).map(move |j| (s, j)))
            .map(|(s, j)| self.dist(s, j))
            .max()
    }

    /// True when every pair of demand points is adjacent and there are no
    /// intermediate stages.
    pub fn is_complete(&self) -> bool {
        self.stage_count() == 0
            && (0..self.demand_count)
                .all(|i| (0..self.demand_count).all(|j| i == j || self.dist(i, j) == 1))
    }
}

/// Two clusters of demand points joined by a chain of `n` stages.
///
/// Left points are `0..d1`, right points `d1..d1+d2`, chain stages follow
/// from left to right. Every left point touches the leftmost stage and
/// every right point touches the rightmost one.
pub fn build_two_cluster(d1: usize, d2: usize, n: usize) -> Result<Topology> {
    if d1 == 0 || d2 == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "two-cluster layout needs positive sizes, got d1={d1}, d2={d2}, n={n}"
        )));
    }
    let d = d1 + d2;
    let first = d;
    let last = d + n - 1;
    let mut edges = Vec::with_capacity(d + n);
    edges.extend((0..d1).map(|i| (i, first)));
    edges.extend((d1..d).map(|i| (i, last)));
    edges.extend((first..last).map(|s| (s, s + 1)));
    Topology::from_edges(d + n, d, &edges)?
        .with_clusters(vec![(0..d1).collect(), (d1..d).collect()])
}

/// Complete graph over `d` demand points with no stages.
pub fn build_complete(d: usize) -> Result<Topology> {
    let mut edges = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            edges.push((i, j));
        }
    }
    Topology::from_edges(d, d, &edges)
}

pub const LATTICE_SIDE: usize = 5;

/// A lattice layout with its demand-point cells, in the final numbering.
#[derive(Clone, Debug)]
pub struct LatticeLayout {
    pub topology: Topology,
    /// 1-based `(row, column)` lattice coordinates of every kept node.
    pub cells: Vec<(usize, usize)>,
}

/// Picks `d` distinct cells of the 5×5 lattice uniformly at random.
pub fn build_random_lattice<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Result<LatticeLayout> {
    let total = LATTICE_SIDE * LATTICE_SIDE;
    if !(2..=total).contains(&d) {
        return Err(Error::InvalidParameter(format!(
            "lattice demand count must lie in [2, {total}], got {d}"
        )));
    }
    let cells: Vec<(usize, usize)> = sample(rng, total, d)
        .into_iter()
        .map(|k| (k / LATTICE_SIDE + 1, k % LATTICE_SIDE + 1))
        .collect();
    build_lattice_from_cells(&cells)
}

/// Builds the pruned lattice for the given demand cells (1-based coords).
///
/// A stage survives iff it lies on a shortest path between some pair of
/// demand points. Demand points are numbered by ascending lattice index,
/// surviving stages likewise after them.
pub fn build_lattice_from_cells(demand_cells: &[(usize, usize)]) -> Result<LatticeLayout> {
    let side = LATTICE_SIDE;
    let total = side * side;
    let index_of = |(r, c): (usize, usize)| (r - 1) * side + (c - 1);
    let mut demand: Vec<usize> = Vec::with_capacity(demand_cells.len());
    for &(r, c) in demand_cells {
        if !(1..=side).contains(&r) || !(1..=side).contains(&c) {
            return Err(Error::InvalidParameter(format!(
                "lattice cell ({r}, {c}) outside 1..={side}"
            )));
        }
        demand.push(index_of((r, c)));
    }
    demand.sort_unstable();
    if demand.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParameter("duplicate lattice cell".into()));
    }
    if !(2..=total).contains(&demand.len()) {
        return Err(Error::InvalidParameter(format!(
            "lattice demand count must lie in [2, {total}], got {}",
            demand.len()
        )));
    }

    let mut full_adj = vec![Vec::new(); total];
    for k in 0..total {
        let (r, c) = (k / side, k % side);
        if c + 1 < side {
            full_adj[k].push(k + 1);
            full_adj[k + 1].push(k);
        }
        if r + 1 < side {
            full_adj[k].push(k + side);
            full_adj[k + side].push(k);
        }
    }
    let full = all_pairs_distance(&full_adj)?;

    let is_demand = |k: usize| demand.binary_search(&k).is_ok();
    let stages: Vec<usize> = (0..total)
        .filter(|&k| !is_demand(k))
        .filter(|&k| {
            demand.iter().enumerate().any(|(a, &i)| {
                demand[a + 1..]
                    .iter()
                    .any(|&j| full.get(i, k) + full.get(k, j) == full.get(i, j))
            })
        })
        .collect();

    let order: Vec<usize> = demand.iter().chain(stages.iter()).copied().collect();
    let mut relabel = vec![usize::MAX; total];
    for (new, &old) in order.iter().enumerate() {
        relabel[old] = new;
    }
    let mut edges = Vec::new();
    for &old in &order {
        for &nb in &full_adj[old] {
            if relabel[nb] != usize::MAX && old < nb {
                edges.push((relabel[old], relabel[nb]));
            }
        }
    }
    let topology = Topology::from_edges(order.len(), demand.len(), &edges)?;
    let cells = order.iter().map(|&k| (k / side + 1, k % side + 1)).collect();
    Ok(LatticeLayout { topology, cells })
}

/// Per-demand-point rates and the switching rate, on the uniformized
/// (Δ = 1) time scale.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    topology: Topology,
    lambda: Vec<f64>,
    mu: Vec<f64>,
    cost: Vec<f64>,
    tau: f64,
    total_arrival: f64,
    rho: f64,
}

/// Slack allowed on the unit rate budget for values rounded from JSON.
const BUDGET_SLACK: f64 = 1e-12;

impl NetworkSpec {
    pub fn new(
        topology: Topology,
        lambda: Vec<f64>,
        mu: Vec<f64>,
        cost: Vec<f64>,
        tau: f64,
    ) -> Result<Self> {
        let d = topology.demand_count();
        if lambda.len() != d || mu.len() != d || cost.len() != d {
            return Err(Error::InvalidParameter(format!(
                "rate vectors must have length {d}"
            )));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        for i in 0..d {
            if !(lambda[i] >= 0.0 && lambda[i].is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "lambda[{i}] must be nonnegative, got {}",
                    lambda[i]
                )));
            }
            if !(mu[i] > 0.0 && cost[i] > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "mu[{i}] and cost[{i}] must be positive"
                )));
            }
            if lambda[i] >= mu[i] {
                return Err(Error::UnstableStop(i));
            }
        }
        let total_arrival: f64 = lambda.iter().sum();
        let rho = lambda.iter().zip(&mu).map(|(l, m)| l / m).sum();
        let spec = Self {
            topology,
            lambda,
            mu,
            cost,
            tau,
            total_arrival,
            rho,
        };
        let budget = spec.rate_budget();
        if budget > 1.0 + BUDGET_SLACK {
            return Err(Error::UniformizationViolated(budget));
        }
        Ok(spec)
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn node_count(&self) -> usize {
        self.topology.node_count()
    }

    pub fn demand_count(&self) -> usize {
        self.topology.demand_count()
    }

    #[inline]
    pub fn is_demand(&self, v: usize) -> bool {
        self.topology.is_demand(v)
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> u32 {
        self.topology.dist(i, j)
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        self.topology.neighbors(v)
    }

    pub fn next_step(&self, from: usize, to: usize) -> Result<usize> {
        self.topology.next_step(from, to)
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Λ, the total arrival rate.
    pub fn total_arrival(&self) -> f64 {
        self.total_arrival
    }

    /// ρ = Σ λ_i / μ_i.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// η = τ / Λ (infinite when there are no arrivals).
    pub fn eta(&self) -> f64 {
        self.tau / self.total_arrival
    }

    /// Σ λ_i + max{μ_1, …, μ_d, τ}; the uniformized chain needs this ≤ 1.
    pub fn rate_budget(&self) -> f64 {
        let max_rate = self.mu.iter().copied().fold(self.tau, f64::max);
        self.total_arrival + max_rate
    }

    /// Same topology with replaced rates.
    pub fn with_rates(&self, lambda: Vec<f64>, mu: Vec<f64>, cost: Vec<f64>, tau: f64) -> Result<Self> {
        Self::new(self.topology.clone(), lambda, mu, cost, tau)
    }

    /// Same rates, every arrival rate set to zero.
    pub fn without_arrivals(&self) -> Self {
        let d = self.demand_count();
        Self::new(
            self.topology.clone(),
            vec![0.0; d],
            self.mu.clone(),
            self.cost.clone(),
            self.tau,
        )
        .expect("removing arrivals keeps a valid network")
    }
}
