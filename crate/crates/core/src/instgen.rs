//! Random problem instances for the two experiment layouts.
//!
//! Rates follow one protocol for both layouts: a target ρ ~ U(0.1, 0.9),
//! μ_i ~ U(0.1, 0.9), λ'_i ~ U(0.1μ_i, μ_i) whose loads are rescaled to sum to
//! ρ, holding costs c_i ~ U(0.1, 0.9), and a bimodal relative switching rate
//! η (U(0.1, 1) or U(1, 10) with equal probability) giving τ = ηΣλ. Rates are
//! then scaled so that Σλ + max(μ, τ) = 1 and rounded to two significant
//! figures.

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{build_random_lattice, build_two_cluster, NetworkSpec, Topology};

/// Bumped whenever the sampling sequence changes.
pub const GENERATOR_VERSION: &str = "netsched-instgen/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layout {
    TwoCluster { d1: usize, d2: usize, n: usize },
    Lattice { d: usize, cells: Vec<(usize, usize)> },
    Custom,
}

impl Layout {
    pub fn name(&self) -> &'static str {
        match self {
            Self::TwoCluster { .. } => "two_cluster",
            Self::Lattice { .. } => "lattice",
            Self::Custom => "custom",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutKind {
    TwoCluster,
    Lattice,
}

impl std::str::FromStr for LayoutKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-cluster" | "two_cluster" => Ok(Self::TwoCluster),
            "lattice" => Ok(Self::Lattice),
            _ => Err(Error::InvalidParameter(format!("unknown layout `{s}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct InstanceSpec {
    pub network: NetworkSpec,
    /// ρ and η as drawn, before rescaling and rounding.
    pub target_rho: f64,
    pub target_eta: f64,
    pub layout: Layout,
    pub seed: Option<u64>,
    pub generator: String,
}

impl InstanceSpec {
    pub fn rho(&self) -> f64 {
        self.network.rho()
    }

    pub fn eta(&self) -> f64 {
        self.network.eta()
    }

    /// Intermediate stages.
    pub fn stages(&self) -> usize {
        self.network.node_count() - self.network.demand_count()
    }
}

/// Rounds to `digits` significant figures.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().expect("formatted float")
}

/// Like [`round_sig`] but never rounds up.
fn floor_sig(x: f64, digits: usize) -> f64 {
    let rounded = round_sig(x, digits);
    if rounded <= x {
        return rounded;
    }
    let exp = x.abs().log10().floor() as i32 - (digits as i32 - 1);
    let unit = 10f64.powi(exp);
    round_sig((x / unit).floor() * unit, digits)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rates {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub cost: Vec<f64>,
    pub tau: f64,
    pub target_rho: f64,
    pub target_eta: f64,
}

fn draw_raw<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Rates {
    let target_rho = rng.random_range(0.1..0.9);
    let mu: Vec<f64> = (0..d).map(|_| rng.random_range(0.1..0.9)).collect();
    let loads: Vec<f64> = mu.iter().map(|&m| rng.random_range(0.1 * m..m) / m).collect();
    let total: f64 = loads.iter().sum();
    let lambda: Vec<f64> = loads.iter().zip(&mu).map(|(r, m)| r / total * target_rho * m).collect();
    let cost = (0..d).map(|_| rng.random_range(0.1..0.9)).collect();
    let p: f64 = rng.random();
    let eta = if p < 0.5 { rng.random_range(0.1..1.0) } else { rng.random_range(1.0..10.0) };
    let tau = eta * lambda.iter().sum::<f64>();
    Rates {
        lambda,
        mu,
        cost,
        tau,
        target_rho,
        target_eta: eta,
    }
}

fn budget(r: &Rates) -> f64 {
    r.lambda.iter().sum::<f64>() + r.mu.iter().copied().fold(r.tau, f64::max)
}

fn round_rates(r: &Rates, round: impl Fn(f64) -> f64) -> Rates {
    Rates {
        lambda: r.lambda.iter().map(|&x| round(x)).collect(),
        mu: r.mu.iter().map(|&x| round(x)).collect(),
        cost: r.cost.clone(),
        tau: round(r.tau),
        target_rho: r.target_rho,
        target_eta: r.target_eta,
    }
}

/// Draws rates for `d` demand points, rescaled to a unit budget and rounded.
/// If rounding pushes the budget above 1 the rates are rounded down instead;
/// draws that end with some λ_i ≥ μ_i are discarded and redrawn.
pub fn draw_rates<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Rates {
    loop {
        let raw = draw_raw(rng, d);
        let scale = 1.0 / budget(&raw);
        let scaled = Rates {
            lambda: raw.lambda.iter().map(|x| x * scale).collect(),
            mu: raw.mu.iter().map(|x| x * scale).collect(),
            cost: raw.cost.clone(),
            tau: raw.tau * scale,
            target_rho: raw.target_rho,
            target_eta: raw.target_eta,
        };
        let mut rounded = round_rates(&scaled, |x| round_sig(x, 2));
        if budget(&rounded) > 1.0 {
            rounded = round_rates(&scaled, |x| floor_sig(x, 2));
        }
        if rounded.lambda.iter().zip(&rounded.mu).all(|(l, m)| l < m) {
            return rounded;
        }
        debug!("rejected a draw with λ ≥ μ after rounding: {rounded:?}");
    }
}

fn assemble(topology: Topology, rates: Rates, layout: Layout, seed: Option<u64>) -> Result<InstanceSpec> {
    let network = NetworkSpec::new(topology, rates.lambda, rates.mu, rates.cost, rates.tau)?;
    Ok(InstanceSpec {
        network,
        target_rho: rates.target_rho,
        target_eta: rates.target_eta,
        layout,
        seed,
        generator: GENERATOR_VERSION.into(),
    })
}

/// Two clusters of 1–4 points each joined by a chain of 1–6 stages.
pub fn generate_two_cluster<R: Rng + ?Sized>(rng: &mut R) -> Result<InstanceSpec> {
    let d1 = rng.random_range(1..=4);
    let d2 = rng.random_range(1..=4);
    let n = rng.random_range(1..=6);
    let topology = build_two_cluster(d1, d2, n)?;
    let rates = draw_rates(rng, d1 + d2);
    assemble(topology, rates, Layout::TwoCluster { d1, d2, n }, None)
}

/// 2–8 demand points on a pruned 5×5 lattice.
pub fn generate_lattice<R: Rng + ?Sized>(rng: &mut R) -> Result<InstanceSpec> {
    let d = rng.random_range(2..=8);
    let lattice = build_random_lattice(rng, d)?;
    let rates = draw_rates(rng, d);
    assemble(lattice.topology, rates, Layout::Lattice { d, cells: lattice.cells }, None)
}

/// Instance generated from its own seeded stream.
pub fn generate(kind: LayoutKind, seed: u64) -> Result<InstanceSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inst = match kind {
        LayoutKind::TwoCluster => generate_two_cluster(&mut rng)?,
        LayoutKind::Lattice => generate_lattice(&mut rng)?,
    };
    inst.seed = Some(seed);
    Ok(inst)
}
