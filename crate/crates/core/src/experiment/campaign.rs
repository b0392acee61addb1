use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dp::{feasibility_escalation, Feasibility, FeasibilityLimits};
use crate::error::{Error, Result};
use crate::heuristics::PolicySpec;
use crate::instgen::{generate, InstanceSpec, Layout, LayoutKind};
use crate::sim::{mix_seed, simulate_policy, DEFAULT_HORIZON_STEPS, DEFAULT_HORIZON_TIME, DEFAULT_WARMUP_STEPS, DEFAULT_WARMUP_TIME};

/// First line of every results file.
pub const CSV_SCHEMA: &str = "# netsched-campaign/1";

/// Attempts per instance id before giving up on `max_demand_points`.
const MAX_REDRAWS: u64 = 10_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub layout: LayoutKind,
    pub count: usize,
    pub base_seed: u64,
    pub policies: Vec<PolicySpec>,
    pub replications: u64,
    pub warmup_steps: u64,
    pub horizon_steps: u64,
    pub warmup_time: f64,
    pub horizon_time: f64,
    /// Run the DP escalation on every instance with these limits.
    pub dp: Option<FeasibilityLimits>,
    /// Redraw instances with more demand points than this.
    pub max_demand_points: Option<usize>,
    /// Worker threads; `None` uses rayon's default.
    pub workers: Option<usize>,
}

impl CampaignConfig {
    pub fn new(layout: LayoutKind, count: usize, base_seed: u64, policies: Vec<PolicySpec>) -> Self {
        Self {
            layout,
            count,
            base_seed,
            policies,
            replications: 1,
            warmup_steps: DEFAULT_WARMUP_STEPS,
            horizon_steps: DEFAULT_HORIZON_STEPS,
            warmup_time: DEFAULT_WARMUP_TIME,
            horizon_time: DEFAULT_HORIZON_TIME,
            dp: None,
            max_demand_points: None,
            workers: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.policies.is_empty() {
            return Err(Error::InvalidParameter("campaign needs at least one policy".into()));
        }
        if self.replications == 0 || self.horizon_steps == 0 || self.horizon_time <= 0.0 {
            return Err(Error::InvalidParameter("replications and horizons must be positive".into()));
        }
        let labels: BTreeSet<String> = self.policies.iter().map(|p| p.label()).collect();
        if labels.len() != self.policies.len() {
            return Err(Error::InvalidParameter("duplicate policy in campaign".into()));
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<String> {
        self.policies.iter().map(|p| p.label()).collect()
    }

    /// Instance for `id`, together with the seed that produced it.
    pub fn instance(&self, id: u64) -> Result<(u64, InstanceSpec)> {
        let base = mix_seed(self.base_seed, id);
        for attempt in 0..MAX_REDRAWS {
            let seed = if attempt == 0 { base } else { mix_seed(base, attempt) };
            let inst = generate(self.layout, seed)?;
            if self.max_demand_points.is_none_or(|m| inst.network.demand_count() <= m) {
                return Ok((seed, inst));
            }
        }
        Err(Error::InvalidParameter("no instance satisfies the demand-point filter".into()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyResult {
    pub cost: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignRow {
    pub instance_id: u64,
    pub seed: u64,
    pub layout: String,
    pub d1: Option<usize>,
    pub d2: Option<usize>,
    /// Intermediate stages.
    pub n: usize,
    pub d: usize,
    pub rho: f64,
    pub eta: f64,
    pub target_rho: f64,
    pub target_eta: f64,
    /// One entry per campaign policy, in campaign order.
    pub results: Vec<Option<PolicyResult>>,
    pub g_star: Option<f64>,
    pub dp_m: Option<u32>,
    pub feasible: bool,
    pub error: Option<String>,
}

fn run_instance(config: &CampaignConfig, id: u64) -> CampaignRow {
    let (seed, inst) = match config.instance(id) {
        Ok(x) => x,
        Err(e) => {
            return CampaignRow {
                instance_id: id,
                seed: mix_seed(config.base_seed, id),
                layout: config.layout_name().into(),
                d1: None,
                d2: None,
                n: 0,
                d: 0,
                rho: f64::NAN,
                eta: f64::NAN,
                target_rho: f64::NAN,
                target_eta: f64::NAN,
                results: vec![None; config.policies.len()],
                g_star: None,
                dp_m: None,
                feasible: false,
                error: Some(e.to_string()),
            }
        }
    };
    let net = &inst.network;
    let (d1, d2) = match inst.layout {
        Layout::TwoCluster { d1, d2, .. } => (Some(d1), Some(d2)),
        _ => (None, None),
    };
    let mut errors = Vec::new();
    let results = config
        .policies
        .iter()
        .map(|spec| {
            let mut costs = Vec::new();
            let mut var = 0.0;
            for rep in 0..config.replications {
                match simulate_policy(
                    net,
                    spec,
                    mix_seed(seed, rep),
                    (config.warmup_steps, config.horizon_steps),
                    (config.warmup_time, config.horizon_time),
                ) {
                    Ok(r) => {
                        costs.push(r.average_cost);
                        var += r.std_error * r.std_error;
                    }
                    Err(e) => {
                        errors.push(format!("{spec}: {e}"));
                        return None;
                    }
                }
            }
            let r = costs.len() as f64;
            Some(PolicyResult {
                cost: costs.iter().sum::<f64>() / r,
                std_error: var.sqrt() / r,
            })
        })
        .collect();
    let (g_star, dp_m, feasible) = match &config.dp {
        Some(limits) => match feasibility_escalation(net, limits) {
            Ok(report) => match report.outcome {
                Feasibility::Feasible { g_star, m } => (Some(g_star), Some(m), true),
                Feasibility::Infeasible { .. } => (None, None, false),
            },
            Err(e) => {
                errors.push(format!("dp: {e}"));
                (None, None, false)
            }
        },
        None => (None, None, false),
    };
    CampaignRow {
        instance_id: id,
        seed,
        layout: inst.layout.name().into(),
        d1,
        d2,
        n: inst.stages(),
        d: net.demand_count(),
        rho: inst.rho(),
        eta: inst.eta(),
        target_rho: inst.target_rho,
        target_eta: inst.target_eta,
        results,
        g_star,
        dp_m,
        feasible,
        error: (!errors.is_empty()).then(|| errors.join("; ")),
    }
}

impl CampaignConfig {
    fn layout_name(&self) -> &'static str {
        match self.layout {
            LayoutKind::TwoCluster => "two_cluster",
            LayoutKind::Lattice => "lattice",
        }
    }
}

fn fmt_opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn csv_header(labels: &[String]) -> Vec<String> {
    let mut h: Vec<String> = ["instance_id", "seed", "layout", "d1", "d2", "n", "d", "rho", "eta", "target_rho", "target_eta"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for l in labels {
        h.push(format!("cost_{l}"));
        h.push(format!("se_{l}"));
    }
    h.extend(["g_star", "dp_m", "feasible", "error"].map(String::from));
    h
}

fn csv_record(row: &CampaignRow) -> Vec<String> {
    let mut r = vec![
        row.instance_id.to_string(),
        row.seed.to_string(),
        row.layout.clone(),
        fmt_opt(row.d1),
        fmt_opt(row.d2),
        row.n.to_string(),
        row.d.to_string(),
        row.rho.to_string(),
        row.eta.to_string(),
        row.target_rho.to_string(),
        row.target_eta.to_string(),
    ];
    for res in &row.results {
        r.push(fmt_opt(res.as_ref().map(|p| p.cost)));
        r.push(fmt_opt(res.as_ref().map(|p| p.std_error)));
    }
    r.push(fmt_opt(row.g_star));
    r.push(fmt_opt(row.dp_m));
    r.push(row.feasible.to_string());
    r.push(row.error.clone().unwrap_or_default());
    r
}

fn parse_opt<T: std::str::FromStr>(s: &str) -> Result<Option<T>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::InvalidParameter(format!("bad field `{s}`")))
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    parse_opt(s)?.ok_or_else(|| Error::InvalidParameter("missing field".into()))
}

/// Results file: policy labels plus one row per instance.
#[derive(Clone, Debug, PartialEq)]
pub struct CampaignResults {
    pub labels: Vec<String>,
    pub rows: Vec<CampaignRow>,
}

impl CampaignResults {
    pub fn policy_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

pub fn read_results(path: &Path) -> Result<CampaignResults> {
    let file = BufReader::new(File::open(path)?);
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    let labels: Vec<String> = header.iter().filter_map(|h| h.strip_prefix("cost_").map(String::from)).collect();
    if header != csv_header(&labels) {
        return Err(Error::InvalidParameter(format!("{} is not a campaign results file", path.display())));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let rec = record?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        let results = (0..labels.len())
            .map(|k| {
                let cost: Option<f64> = parse_opt(f(11 + 2 * k))?;
                let se: Option<f64> = parse_opt(f(12 + 2 * k))?;
                Ok(cost.map(|cost| PolicyResult {
                    cost,
                    std_error: se.unwrap_or(0.0),
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        let tail = 11 + 2 * labels.len();
        let error = f(tail + 3);
        rows.push(CampaignRow {
            instance_id: parse(f(0))?,
            seed: parse(f(1))?,
            layout: f(2).into(),
            d1: parse_opt(f(3))?,
            d2: parse_opt(f(4))?,
            n: parse(f(5))?,
            d: parse(f(6))?,
            rho: parse(f(7))?,
            eta: parse(f(8))?,
            target_rho: parse(f(9))?,
            target_eta: parse(f(10))?,
            results,
            g_star: parse_opt(f(tail))?,
            dp_m: parse_opt(f(tail + 1))?,
            feasible: parse(f(tail + 2))?,
            error: (!error.is_empty()).then(|| error.into()),
        });
    }
    Ok(CampaignResults { labels, rows })
}

/// Ids already present in a partial results file written for `labels`.
fn completed_ids(path: &Path, labels: &[String]) -> Result<BTreeSet<u64>> {
    let existing = read_results(path)?;
    if existing.labels != labels {
        return Err(Error::InvalidParameter(format!(
            "{} was written for policies {:?}, not {:?}",
            path.display(),
            existing.labels,
            labels
        )));
    }
    Ok(existing.rows.iter().map(|r| r.instance_id).collect())
}

/// Runs every instance of the campaign and appends rows to `output` in
/// instance order. Instances already in `output` are skipped, so an
/// interrupted sweep resumes where it stopped. Per-instance failures are
/// recorded in the `error` column.
pub fn run_campaign(config: &CampaignConfig, output: &Path) -> Result<CampaignResults> {
    config.validate()?;
    let labels = config.labels();
    let resume = output.exists() && fs::metadata(output)?.len() > 0;
    let done = if resume { completed_ids(output, &labels)? } else { BTreeSet::new() };
    let pending: Vec<u64> = (0..config.count as u64).filter(|id| !done.contains(id)).collect();
    if resume {
        info!("resuming {}: {} done, {} pending", output.display(), done.len(), pending.len());
    } else {
        let mut f = File::create(output)?;
        writeln!(f, "{CSV_SCHEMA}")?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(csv_header(&labels))?;
        w.flush()?;
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let chunk = pool.current_num_threads().max(1) * 2;
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(OpenOptions::new().append(true).open(output)?);
    for ids in pending.chunks(chunk) {
        let rows: Vec<CampaignRow> = pool.install(|| ids.par_iter().map(|&id| run_instance(config, id)).collect());
        for row in &rows {
            if let Some(e) = &row.error {
                warn!("instance {}: {e}", row.instance_id);
            }
            writer.write_record(csv_record(row))?;
        }
        writer.flush()?;
        info!("{} / {} instances", ids.last().map_or(0, |i| i + 1), config.count);
    }
    drop(writer);
    read_results(output)
}

/// True if `path` starts with the campaign schema line.
pub fn is_results_file(path: &Path) -> bool {
    File::open(path)
        .ok()
        .and_then(|f| BufReader::new(f).lines().next())
        .and_then(|l| l.ok())
        .is_some_and(|l| l.trim() == CSV_SCHEMA)
}
