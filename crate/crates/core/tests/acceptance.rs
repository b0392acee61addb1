//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines show up in `cargo test` output.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use netsched_core::dp::{feasibility_escalation, relative_value_iteration, FeasibilityLimits, RviConfig, TruncatedMdp};
use netsched_core::experiment::aggregate::{aggregate, improvements_over, suboptimalities, AggregateRow, BucketBy};
use netsched_core::experiment::{run_campaign, CampaignConfig, CampaignResults};
use netsched_core::fluid;
use netsched_core::heuristics::{
    k_from_l_decide, kstop_decide, serve_longest_queue_decide, FnPolicy, KStopPolicy, Policy, SelectionMethod,
};
use netsched_core::instgen::{draw_rates, generate};
use netsched_core::model::action_set;
use netsched_core::network::{build_complete, build_two_cluster};
use netsched_core::sim::{
    estimate_switch_time_bound, simulate_discrete, simulate_discrete_observed, simulate_dvo, switch_time_bound,
    RandomStream, StepEvent, StepRecord,
};
use netsched_core::{DemandSequence, LayoutKind, NetworkSpec, PolicySpec, SystemState, Topology};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn mm1() -> NetworkSpec {
    let topo = Topology::from_edges(1, 1, &[]).unwrap();
    NetworkSpec::new(topo, vec![0.2], vec![0.5], vec![1.0], 0.5).unwrap()
}

fn branched_path(lambda: [f64; 3]) -> NetworkSpec {
    let topo = Topology::from_edges(6, 3, &[(0, 3), (1, 3), (3, 4), (4, 5), (5, 2)]).unwrap();
    NetworkSpec::new(topo, lambda.to_vec(), vec![0.4, 0.5, 0.3], vec![1.0, 2.0, 1.5], 0.4).unwrap()
}

fn two_point_star(lambda: f64, mu: f64, tau: f64) -> NetworkSpec {
    let topo = Topology::from_edges(3, 2, &[(0, 2), (1, 2)]).unwrap();
    NetworkSpec::new(topo, vec![lambda; 2], vec![mu; 2], vec![1.0, 2.0], tau).unwrap()
}

fn homogeneous_complete(d: usize, lambda: f64, mu: f64, tau: f64) -> NetworkSpec {
    NetworkSpec::new(build_complete(d).unwrap(), vec![lambda; d], vec![mu; d], vec![1.0; d], tau).unwrap()
}

fn random_state<R: Rng>(rng: &mut R, net: &NetworkSpec, max_jobs: u32) -> SystemState {
    let server = rng.random_range(0..net.node_count());
    let jobs = (0..net.demand_count()).map(|_| rng.random_range(0..=max_jobs)).collect();
    SystemState::new(server, jobs)
}

/// Distinct demand points, length 1..=min(4, d), not starting at the server.
fn random_sequence<R: Rng>(rng: &mut R, net: &NetworkSpec, server: usize) -> Option<Vec<usize>> {
    let d = net.demand_count();
    let mut pool: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        pool.swap(i, rng.random_range(0..=i));
    }
    let len = rng.random_range(1..=d.min(4));
    let mut s: Vec<usize> = pool.into_iter().take(len).collect();
    if s[0] == server {
        if s.len() == 1 {
            return None;
        }
        s.swap(0, 1);
    }
    Some(s)
}

fn random_instance(seed: u64) -> NetworkSpec {
    let kind = if seed.is_multiple_of(2) { LayoutKind::TwoCluster } else { LayoutKind::Lattice };
    generate(kind, seed).unwrap().network
}

fn criterion_1() -> Outcome {
    let net = mm1();
    let exact = 2.0 / 3.0;
    let started = Instant::now();
    let mdp = TruncatedMdp::new(&net, 200).unwrap();
    let dp = relative_value_iteration(&mdp, &RviConfig::default()).unwrap();
    let dp_secs = started.elapsed().as_secs_f64();
    let dp_ok = (dp.g_star - exact).abs() / exact < 0.01 && dp_secs < 10.0;

    let started = Instant::now();
    let mut stay = FnPolicy(|_: &NetworkSpec, s: &SystemState| s.server);
    let disc = simulate_discrete(&net, &mut stay, 1, 10_000, 1_000_000).unwrap();
    let disc_secs = started.elapsed().as_secs_f64();
    let disc_ok = (disc.average_cost - exact).abs() <= 3.0 * disc.std_error && disc_secs < 5.0;

    let dvo = simulate_dvo(&net, 1, 10_000.0, 1_000_000.0).unwrap();
    let dvo_ok = (dvo.average_cost - exact).abs() <= 3.0 * dvo.std_error;
    outcome(
        dp_ok && disc_ok && dvo_ok,
        format!(
            "g* = {:.6} ({dp_secs:.2}s), discrete {:.4} ± {:.4} SE ({disc_secs:.2}s), DVO {:.4} ± {:.4} SE, exact {exact:.6}",
            dp.g_star, disc.average_cost, disc.std_error, dvo.average_cost, dvo.std_error
        ),
    )
}

fn criterion_2() -> Outcome {
    let nets = [
        ("branched path", branched_path([0.1, 0.05, 0.1])),
        ("two-point star", two_point_star(0.1, 0.5, 0.5)),
        ("two-point star, saturated", two_point_star(0.25, 0.5, 0.5)),
    ];
    let mut rows = 0usize;
    let mut bad = Vec::new();
    for (name, net) in &nets {
        let m = 3;
        let mdp = TruncatedMdp::new(net, m).unwrap();
        for idx in 0..mdp.state_count() {
            let state = mdp.state(idx);
            let actions = mdp.actions(idx);
            if actions != action_set(net, &state) {
                bad.push(format!("{name}: action set of {state:?}"));
            }
            for &a in &actions {
                rows += 1;
                let row = mdp.transitions(idx, a).unwrap();
                let total: f64 = row.iter().map(|e| e.1).sum();
                let mut got: BTreeMap<usize, f64> = BTreeMap::new();
                for &(j, p) in &row {
                    *got.entry(j).or_default() += p;
                }
                // independent construction of the row
                let mut want: BTreeMap<usize, f64> = BTreeMap::new();
                let mut used = 0.0;
                for i in 0..net.demand_count() {
                    let l = net.lambda()[i];
                    if l == 0.0 {
                        continue;
                    }
                    let mut next = state.clone();
                    if next.jobs[i] < m {
                        next.jobs[i] += 1;
                        *want.entry(mdp.index(&next)).or_default() += l;
                        used += l;
                    }
                }
                let v = state.server;
                if a == v {
                    if v < net.demand_count() && state.jobs[v] > 0 {
                        let mut next = state.clone();
                        next.jobs[v] -= 1;
                        *want.entry(mdp.index(&next)).or_default() += net.mu()[v];
                        used += net.mu()[v];
                    }
                } else {
                    *want.entry(mdp.index(&state.relocated(a))).or_default() += net.tau();
                    used += net.tau();
                }
                *want.entry(idx).or_default() += 1.0 - used;
                want.retain(|_, p| *p > 0.0);
                got.retain(|_, p| *p > 0.0);
                let same = want.len() == got.len()
                    && want.iter().zip(&got).all(|((a, p), (b, q))| a == b && (p - q).abs() <= 1e-15);
                if (total - 1.0).abs() > 1e-15 || !same {
                    bad.push(format!("{name}: state {state:?} action {a}: sum {total:e}"));
                }
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!("{rows} (state, action) rows checked, {} mismatches{}", bad.len(), bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut sign_errors = 0;
    let mut checked = 0;
    while checked < 10_000 {
        let net = random_instance(rng.random());
        let state = random_state(&mut rng, &net, 15);
        let j = rng.random_range(0..net.demand_count());
        if j == state.server {
            continue;
        }
        let t = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..100.0) };
        let seq = DemandSequence::new(vec![j]).unwrap();
        let x = state.jobs[j] as f64;
        let w = t + net.dist(state.server, j) as f64 / net.tau();
        let (l, mu) = (net.lambda()[j], net.mu()[j]);
        let closed = net.cost()[j] * mu * (x + l * w) / (x + mu * w);
        let general = fluid::psi(&net, &state, &seq, t).unwrap();
        let rel = (general - closed).abs() / closed.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        let sign = fluid::psi_derivative_sign(&net, &state, &seq).unwrap();
        let expected = if state.jobs[j] == 0 { 0 } else { -1 };
        if sign != expected {
            sign_errors += 1;
        }
        checked += 1;
    }
    outcome(
        worst <= 1e-12 && sign_errors == 0,
        format!("{checked} inputs, max relative gap {worst:.2e}, derivative-sign mismatches {sign_errors}"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0;
    let mut disagreements = 0;
    let mut checked = 0;
    let h = 1.0;
    while checked < 10_000 {
        let net = random_instance(rng.random());
        let state = random_state(&mut rng, &net, 15);
        let Some(stops) = random_sequence(&mut rng, &net, state.server) else {
            continue;
        };
        let seq = DemandSequence::new(stops).unwrap();
        let psi = |t: f64| fluid::psi(&net, &state, &seq, t).unwrap();
        let signs: Vec<i8> = [0.0, 1.0, 10.0, 100.0]
            .iter()
            .map(|&t| {
                let (a, b) = (psi(t), psi(t + h));
                let diff = b - a;
                if diff.abs() <= 1e-12 * a.abs().max(b.abs()) {
                    0
                } else {
                    diff.signum() as i8
                }
            })
            .collect();
        if signs.contains(&1) && signs.contains(&-1) {
            violations += 1;
        }
        let exact = fluid::psi_derivative_sign(&net, &state, &seq).unwrap();
        if signs.iter().any(|&s| s != 0 && s != exact) {
            disagreements += 1;
        }
        checked += 1;
    }
    outcome(
        violations == 0 && disagreements == 0,
        format!("{checked} triples, sign changes {violations}, disagreements with the exact derivative sign {disagreements}"),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut walks = 0;
    let mut violations = Vec::new();
    for inst in 0..100u64 {
        let net = generate(LayoutKind::Lattice, 5_000 + inst).unwrap().network.without_arrivals();
        let d = net.demand_count();
        for stage in d..net.node_count() {
            let job_sets: [Vec<u32>; 3] = [
                vec![0; d],
                (0..d).map(|_| rng.random_range(0..=5)).collect(),
                (0..d).map(|_| rng.random_range(0..=30)).collect(),
            ];
            for jobs in job_sets {
                for k in 1..=3 {
                    walks += 1;
                    let mut state = SystemState::new(stage, jobs.clone());
                    let mut path = vec![stage];
                    while !net.is_demand(state.server) && path.len() <= net.node_count() {
                        let a = kstop_decide(&net, &state, k).action;
                        if a == state.server {
                            break;
                        }
                        state.server = a;
                        path.push(a);
                    }
                    let target = state.server;
                    let reached = net.is_demand(target);
                    let decreasing = path.windows(2).all(|w| net.dist(w[1], target) + 1 == net.dist(w[0], target));
                    if !reached || !decreasing {
                        violations.push(format!("instance {inst}, stage {stage}, K={k}, path {path:?}"));
                    }
                }
            }
        }
    }
    outcome(
        violations.is_empty(),
        format!("{walks} walks from intermediate stages, {} violations{}", violations.len(), violations.first().map(|v| format!("; first: {v}")).unwrap_or_default()),
    )
}

fn criterion_6() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for (i, lambda) in [[0.05, 0.05, 0.05], [0.1, 0.05, 0.1], [0.15, 0.1, 0.15]].into_iter().enumerate() {
        let net = branched_path(lambda);
        let est = estimate_switch_time_bound(&net, 2, 60 + i as u64, 10_000).unwrap();
        pass &= est.mean <= est.bound;
        lines.push(format!("Λ={:.2}: {:.3} ≤ {:.3}", net.total_arrival(), est.mean, est.bound));
    }
    let flat = two_point_star(0.0, 0.5, 0.25);
    let est = estimate_switch_time_bound(&flat, 2, 66, 10_000).unwrap();
    let bound = switch_time_bound(&flat).unwrap();
    let equal = (est.mean - bound).abs() <= 3.0 * est.std_error && (bound - 1.0 / flat.tau()).abs() < 1e-12;
    pass &= equal;
    lines.push(format!("M=1, Λ=0: {:.3} ± {:.3} SE vs {:.3}", est.mean, est.std_error, bound));
    outcome(pass, lines.join("; "))
}

fn criterion_7() -> Outcome {
    let net = homogeneous_complete(4, 0.05, 0.5, 0.3);
    let mut epochs = 0u64;
    let mut mismatches = 0u64;
    for k in 1..=3 {
        let mut inner = KStopPolicy::new(k);
        let mut policy = FnPolicy(|net: &NetworkSpec, s: &SystemState| {
            let a = inner.decide(net, s);
            epochs += 1;
            if a != serve_longest_queue_decide(net, s).unwrap() {
                mismatches += 1;
            }
            a
        });
        let mut stream = RandomStream::new(70 + k as u64);
        let steps = 100_000 / 3 + 1;
        simulate_discrete_observed(&net, &mut policy, &mut stream, 0, steps, SystemState::empty(4), &mut |_| {}).unwrap();
    }

    let small = homogeneous_complete(3, 0.06, 0.5, 0.4);
    let limits = FeasibilityLimits {
        state_limit: 250_000,
        time_limit: Duration::from_secs(20),
        ..FeasibilityLimits::default()
    };
    let report = feasibility_escalation(&small, &limits).unwrap();
    let Some(g_star) = report.outcome.g_star() else {
        return outcome(false, format!("homogeneous d=3 instance not DP-feasible: {:?}", report.outcome));
    };
    let sim = simulate_discrete(&small, &mut KStopPolicy::new(2), 7, 10_000, 1_000_000).unwrap();
    let within = (sim.average_cost - g_star).abs() <= sim.half_width;
    outcome(
        mismatches == 0 && within,
        format!(
            "{epochs} epochs, {mismatches} K-stop/SLQ mismatches; d=3: 2-stop {:.5} ± {:.5} vs g* {g_star:.5}",
            sim.average_cost, sim.half_width
        ),
    )
}

fn criterion_8() -> Outcome {
    let window = 100_000u64;
    let windows = 10u64;
    let mut checked = 0;
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let mut seed = 8_000u64;
    while checked < 50 {
        seed += 1;
        let inst = generate(LayoutKind::TwoCluster, seed).unwrap();
        if inst.rho() > 0.9 {
            continue;
        }
        checked += 1;
        let net = &inst.network;
        let mut sums = vec![0.0; windows as usize];
        let mut policy = PolicySpec::Polling.build(net).unwrap();
        let mut stream = RandomStream::new(seed);
        let warmup = 10_000;
        simulate_discrete_observed(
            net,
            policy.as_mut(),
            &mut stream,
            warmup,
            window * windows,
            SystemState::empty(net.demand_count()),
            &mut |r: &StepRecord| {
                if r.step >= warmup {
                    sums[((r.step - warmup) / window) as usize] += r.cost;
                }
            },
        )
        .unwrap();
        let means: Vec<f64> = sums.iter().map(|s| s / window as f64).collect();
        let (a, b) = (means[windows as usize - 2], means[windows as usize - 1]);
        let gap = (a - b).abs() / a.max(b);
        worst = worst.max(gap);
        if gap > 0.1 {
            // spread of single-window means on the same run, for telling drift from noise
            let m = means.iter().sum::<f64>() / means.len() as f64;
            let sd = (means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (means.len() - 1) as f64).sqrt();
            failures.push(format!("seed {seed} (ρ={:.2}): {a:.3} vs {b:.3}, window sd {:.1}% of mean", inst.rho(), 100.0 * sd / m));
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{checked} instances, largest relative gap between the last two windows {:.1}%, {} over 10%{}",
            100.0 * worst,
            failures.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

fn mean_of<'a>(rows: &'a [AggregateRow], comparison: &str) -> Option<&'a AggregateRow> {
    rows.iter().find(|r| r.comparison == comparison)
}

fn print_table(title: &str, rows: &[AggregateRow]) {
    println!("    {title}");
    for r in rows {
        let p = r.summary.percentiles;
        println!(
            "      {:<36} n={:<4} mean {:>7.2} ± {:<5.2} p10 {:>6.2} p25 {:>6.2} p50 {:>6.2} p75 {:>6.2} p90 {:>6.2}",
            r.comparison, r.summary.count, r.summary.mean, r.summary.half_width, p[0], p[1], p[2], p[3], p[4]
        );
    }
}

fn campaign(dir: &Path, name: &str, config: &CampaignConfig) -> CampaignResults {
    run_campaign(config, &dir.join(name)).unwrap()
}

fn criterion_9(dir: &Path) -> Outcome {
    let started = Instant::now();
    let policies = ["dvo", "kstop:1", "kstop:2", "kstop:3"].iter().map(|p| p.parse().unwrap()).collect();
    let mut config = CampaignConfig::new(LayoutKind::TwoCluster, 140, 2024, policies);
    config.max_demand_points = Some(3);
    config.dp = Some(FeasibilityLimits {
        state_limit: 100_000,
        time_limit: Duration::from_secs(1),
        ..FeasibilityLimits::default()
    });
    let mut results = campaign(dir, "table1.csv", &config);
    // extend the same sweep (the runner resumes) until 50 instances are DP-feasible
    while results.rows.iter().filter(|r| r.feasible).count() < 50 && config.count < 1_000 {
        config.count += 40;
        results = campaign(dir, "table1.csv", &config);
    }
    let feasible = results.rows.iter().filter(|r| r.feasible).count();
    let rows = aggregate(&results, &suboptimalities(&results), BucketBy::None).unwrap();
    let elapsed = started.elapsed();
    print_table(&format!("suboptimality (%) on {feasible} DP-feasible instances of {}", results.rows.len()), &rows);
    let m = |label: &str| mean_of(&rows, &format!("{label} vs optimal")).map_or(f64::NAN, |r| r.summary.mean);
    let (dvo, k1, k2, k3) = (m("dvo"), m("kstop1"), m("kstop2"), m("kstop3"));
    let pass = feasible >= 50
        && dvo > k1
        && k1 > k2
        && k2 >= k3
        && (10.0..=40.0).contains(&dvo)
        && k2 < 10.0
        && elapsed < Duration::from_secs(2 * 3600);
    outcome(
        pass,
        format!(
            "means DVO {dvo:.2}, 1-stop {k1:.2}, 2-stop {k2:.2}, 3-stop {k3:.2} over {feasible} feasible instances ({:.0}s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_10(dir: &Path) -> Outcome {
    let started = Instant::now();
    let policies = ["dvo", "kstop:1", "kstop:2", "kstop:3", "kfroml:2:4:impartial", "kfroml:2:4:stratified"]
        .iter()
        .map(|p| p.parse().unwrap())
        .collect();
    let config = CampaignConfig::new(LayoutKind::TwoCluster, 200, 2025, policies);
    let results = campaign(dir, "table2.csv", &config);
    let rows = aggregate(&results, &improvements_over(&results, "dvo"), BucketBy::None).unwrap();
    print_table(&format!("improvement over DVO (%) on {} two-cluster instances", results.rows.len()), &rows);
    let lower = |label: &str| mean_of(&rows, &format!("{label} vs dvo")).map_or(f64::NAN, |r| r.summary.mean - r.summary.half_width);
    let mean = |label: &str| mean_of(&rows, &format!("{label} vs dvo")).map_or(f64::NAN, |r| r.summary.mean);
    let positive = ["kstop1", "kstop2", "kstop3", "kfroml2_4_impartial", "kfroml2_4_stratified"]
        .iter()
        .all(|l| lower(l) > 0.0);
    let gap = (mean("kfroml2_4_impartial") - mean("kstop2")).abs();
    let errors = results.rows.iter().filter(|r| r.error.is_some()).count();
    outcome(
        positive && gap <= 1.0 && errors == 0,
        format!(
            "lower 95% bounds: 1-stop {:.2}, 2-stop {:.2}, 3-stop {:.2}, (2 from 4) imp. {:.2}, str. {:.2}; |(2 from 4) imp. − 2-stop| = {gap:.2} pp ({:.0}s)",
            lower("kstop1"),
            lower("kstop2"),
            lower("kstop3"),
            lower("kfroml2_4_impartial"),
            lower("kfroml2_4_stratified"),
            started.elapsed().as_secs_f64()
        ),
    )
}

fn trajectory(net: &NetworkSpec, policy: &mut dyn Policy, seed: u64, steps: u64) -> Vec<StepRecord> {
    let mut out = Vec::with_capacity(steps as usize);
    let mut stream = RandomStream::new(seed);
    simulate_discrete_observed(net, policy, &mut stream, 0, steps, SystemState::empty(net.demand_count()), &mut |r| out.push(*r)).unwrap();
    out
}

fn criterion_11() -> Outcome {
    let mut compared = 0u64;
    let mut mismatches = 0u64;
    for seed in 0..6u64 {
        let net = generate(LayoutKind::TwoCluster, 11_000 + seed).unwrap().network;
        let d = net.demand_count();
        for k in 1..=3 {
            for method in [SelectionMethod::Impartial, SelectionMethod::Stratified] {
                let mut inner = KStopPolicy::new(k);
                let mut policy = FnPolicy(|net: &NetworkSpec, s: &SystemState| {
                    let a = inner.decide(net, s);
                    compared += 1;
                    if k_from_l_decide(net, s, k, d, method).unwrap().action != a {
                        mismatches += 1;
                    }
                    a
                });
                trajectory(&net, &mut policy, seed, 10_000);
            }
        }
    }

    let mut differing = 0;
    let mut pairs = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..10u64 {
        let n = rng.random_range(1..=6);
        let rates = draw_rates(&mut rng, 2);
        let net = NetworkSpec::new(build_two_cluster(1, 1, n).unwrap(), rates.lambda, rates.mu, rates.cost, rates.tau).unwrap();
        let base = trajectory(&net, &mut KStopPolicy::new(2), seed, 10_000);
        for k in [3, 4] {
            pairs += 1;
            if trajectory(&net, &mut KStopPolicy::new(k), seed, 10_000) != base {
                differing += 1;
            }
        }
    }
    outcome(
        mismatches == 0 && differing == 0,
        format!("(K from L=d) vs K-stop: {mismatches} mismatches in {compared} decisions; d=2: {differing} of {pairs} 3-/4-stop trajectories differ from 2-stop"),
    )
}

fn criterion_12() -> Outcome {
    let specs: Vec<PolicySpec> = ["kstop:1", "kstop:2", "kstop:3", "kfroml:2:4:impartial", "kfroml:2:4:stratified", "polling"]
        .iter()
        .map(|p| p.parse().unwrap())
        .collect();
    let mut runs = 0;
    let mut differing = 0;
    for inst in 0..20u64 {
        let net = generate(LayoutKind::TwoCluster, 12_000 + inst).unwrap().network;
        for seed in 0..5u64 {
            let arrivals = |spec: &PolicySpec| -> Vec<(u64, usize)> {
                let mut policy = spec.build(&net).unwrap();
                trajectory(&net, policy.as_mut(), seed, 20_000)
                    .into_iter()
                    .filter_map(|r| match r.event {
                        StepEvent::Arrival(i) => Some((r.step, i)),
                        _ => None,
                    })
                    .collect()
            };
            let reference = arrivals(&specs[0]);
            for spec in &specs[1..] {
                runs += 1;
                if arrivals(spec) != reference {
                    differing += 1;
                }
            }
        }
    }
    outcome(differing == 0, format!("{runs} policy runs compared against 1-stop arrivals, {differing} differ"))
}

type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() -> ExitCode {
    let dir = tempfile::tempdir().unwrap();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("M/M/1 oracle", Box::new(criterion_1)),
        ("transition-kernel soundness", Box::new(criterion_2)),
        ("fluid closed form", Box::new(criterion_3)),
        ("monotonicity in idle time", Box::new(criterion_4)),
        ("pathwise consistency", Box::new(criterion_5)),
        ("switch-time bound", Box::new(criterion_6)),
        ("homogeneous equivalence", Box::new(criterion_7)),
        ("polling stability", Box::new(criterion_8)),
        ("suboptimality ordering", Box::new(|| criterion_9(dir.path()))),
        ("improvement over DVO", Box::new(|| criterion_10(dir.path()))),
        ("equivalence degeneracies", Box::new(criterion_11)),
        ("common random numbers", Box::new(criterion_12)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("criterion {:>2} [{name}]: {verdict} ({:.1}s) {}", i + 1, started.elapsed().as_secs_f64(), o.detail);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    // the verdict lines are the report; set NETSCHED_ACCEPTANCE_STRICT to turn a FAIL into a failing exit status
    if failed > 0 && std::env::var_os("NETSCHED_ACCEPTANCE_STRICT").is_some() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
