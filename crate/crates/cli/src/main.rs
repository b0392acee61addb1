//! `netsched`: generate instances, simulate policies, solve truncated MDPs
//! and run experiment sweeps.

use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use netsched_core::dp::{relative_value_iteration, FeasibilityLimits, RviConfig, TruncatedMdp};
use netsched_core::experiment::aggregate::{self, BucketBy, Comparison};
use netsched_core::experiment::{read_results, run_campaign, CampaignConfig};
use netsched_core::io::{read_instance, write_instance};
use netsched_core::sim::{simulate_policy, SimReport};
use netsched_core::{instgen, LayoutKind, PolicySpec};

#[derive(Parser)]
#[command(name = "netsched", version, about = "Dynamic job scheduling on networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random instance and write it as JSON.
    GenInstance {
        #[arg(long, value_parser = parse_layout)]
        layout: LayoutKind,
        #[arg(long)]
        seed: u64,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate one policy on one instance and print a JSON report.
    Simulate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        policy: PolicySpec,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Warm-up steps (time units for DVO).
        #[arg(long, default_value_t = 10_000)]
        warmup: u64,
        /// Horizon in steps (time units for DVO).
        #[arg(long, default_value_t = 1_000_000)]
        horizon: u64,
        /// Append a results row to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Relative value iteration on the truncated MDP.
    DpSolve {
        #[arg(long)]
        instance: PathBuf,
        /// Per-point queue cap.
        #[arg(long, default_value_t = 50)]
        m: u32,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, default_value_t = 1_000_000)]
        max_iters: usize,
    },
    /// Run a sweep of generated instances and write one CSV row per instance.
    Campaign(CampaignArgs),
    /// Summarize a campaign results file.
    Aggregate {
        #[arg(long)]
        results: PathBuf,
        /// `improvement` (against --baseline) or `suboptimality`.
        #[arg(long, default_value = "improvement")]
        metric: String,
        #[arg(long, default_value = "dvo")]
        baseline: String,
        #[arg(long, default_value = "none", value_parser = parse_bucket)]
        bucket_by: BucketBy,
        /// Print JSON instead of CSV.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct CampaignArgs {
    #[arg(long, value_parser = parse_layout)]
    layout: LayoutKind,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated policy strings.
    #[arg(long, value_delimiter = ',', required = true)]
    policies: Vec<PolicySpec>,
    #[arg(long, default_value_t = 1)]
    replications: u64,
    #[arg(long, default_value_t = 10_000)]
    warmup_steps: u64,
    #[arg(long, default_value_t = 1_000_000)]
    horizon_steps: u64,
    #[arg(long, default_value_t = 10_000.0)]
    warmup_time: f64,
    #[arg(long, default_value_t = 1_000_000.0)]
    horizon_time: f64,
    /// Also compute g* with the DP escalation loop.
    #[arg(long)]
    dp: bool,
    #[arg(long, default_value_t = 1_000_000)]
    dp_state_limit: u128,
    /// Seconds.
    #[arg(long, default_value_t = 600.0)]
    dp_time_limit: f64,
    /// Redraw instances with more demand points than this.
    #[arg(long)]
    max_demand_points: Option<usize>,
    #[arg(long, env = "NETSCHED_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_layout(s: &str) -> Result<LayoutKind, String> {
    s.parse().map_err(|e: netsched_core::Error| e.to_string())
}

fn parse_bucket(s: &str) -> Result<BucketBy, String> {
    s.parse().map_err(|e: netsched_core::Error| e.to_string())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn append_report(path: &Path, instance: &Path, report: &SimReport) -> Result<()> {
    let new = !path.exists() || std::fs::metadata(path)?.len() == 0;
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::Writer::from_writer(file);
    if new {
        w.write_record(["instance", "policy", "seed", "warmup", "horizon", "average_cost", "std_error", "half_width"])?;
    }
    w.write_record([
        instance.display().to_string(),
        report.policy.clone(),
        report.seed.to_string(),
        report.warmup.to_string(),
        report.horizon.to_string(),
        report.average_cost.to_string(),
        report.std_error.to_string(),
        report.half_width.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct DpOutput {
    g_star: f64,
    iterations: usize,
    span: f64,
    m: u32,
    states: usize,
    elapsed_secs: f64,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenInstance { layout, seed, out } => {
            let inst = instgen::generate(layout, seed)?;
            match out {
                Some(path) => {
                    write_instance(&path, &inst).with_context(|| format!("writing {}", path.display()))?;
                    info!("wrote {}", path.display());
                }
                None => println!("{}", netsched_core::io::instance_to_json(&inst)?),
            }
        }
        Command::Simulate {
            instance,
            policy,
            seed,
            warmup,
            horizon,
            csv,
        } => {
            let inst = read_instance(&instance).with_context(|| format!("reading {}", instance.display()))?;
            let report = simulate_policy(&inst.network, &policy, seed, (warmup, horizon), (warmup as f64, horizon as f64))?;
            if let Some(path) = csv {
                append_report(&path, &instance, &report)?;
            }
            print_json(&report)?;
        }
        Command::DpSolve { instance, m, tol, max_iters } => {
            let inst = read_instance(&instance).with_context(|| format!("reading {}", instance.display()))?;
            let mdp = TruncatedMdp::new(&inst.network, m)?;
            let config = RviConfig {
                tolerance: tol,
                max_iters,
                ..RviConfig::default()
            };
            let r = relative_value_iteration(&mdp, &config)?;
            print_json(&DpOutput {
                g_star: r.g_star,
                iterations: r.iterations,
                span: r.span,
                m,
                states: mdp.state_count(),
                elapsed_secs: r.elapsed_secs,
            })?;
        }
        Command::Campaign(args) => {
            let mut config = CampaignConfig::new(args.layout, args.count, args.seed, args.policies);
            config.replications = args.replications;
            config.warmup_steps = args.warmup_steps;
            config.horizon_steps = args.horizon_steps;
            config.warmup_time = args.warmup_time;
            config.horizon_time = args.horizon_time;
            config.max_demand_points = args.max_demand_points;
            config.workers = args.workers;
            if args.dp {
                if args.dp_time_limit.is_nan() || args.dp_time_limit <= 0.0 {
                    bail!("--dp-time-limit must be positive");
                }
                config.dp = Some(FeasibilityLimits {
                    state_limit: args.dp_state_limit,
                    time_limit: Duration::from_secs_f64(args.dp_time_limit),
                    ..FeasibilityLimits::default()
                });
            }
            let results = run_campaign(&config, &args.out)?;
            let failed = results.rows.iter().filter(|r| r.error.is_some()).count();
            eprintln!("{} rows in {} ({failed} with errors)", results.rows.len(), args.out.display());
        }
        Command::Aggregate {
            results,
            metric,
            baseline,
            bucket_by,
            json,
        } => {
            let res = read_results(&results).with_context(|| format!("reading {}", results.display()))?;
            let comparisons: Vec<Comparison> = match metric.as_str() {
                "improvement" => {
                    if res.policy_index(&baseline).is_none() {
                        bail!("baseline `{baseline}` is not in {}", results.display());
                    }
                    aggregate::improvements_over(&res, &baseline)
                }
                "suboptimality" => aggregate::suboptimalities(&res),
                other => bail!("unknown metric `{other}`"),
            };
            let rows = aggregate::aggregate(&res, &comparisons, bucket_by)?;
            if json {
                print_json(&rows)?;
            } else {
                aggregate::write_aggregate_csv(&rows, io::stdout().lock())?;
            }
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
