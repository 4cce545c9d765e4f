//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use iotdraw_core::analysis::{
    enumerate_deployments, evaluated_deployments, lifetime_sweep, rank_scenarios, scenario_availability,
    scenario_response_time, scenarios_csv, DeploymentScenario, Metric, SweepOptions, SweepParameter,
};
use iotdraw_core::energy::{
    joules_to_mah, lifetime_closed_form, sense_energy, transmit_energy, EnergyAmount, Lifetime,
};
use iotdraw_core::engine::rng::SimRng;
use iotdraw_core::engine::{run_with, EventKind, FreshnessPolicy, RunOptions};
use iotdraw_core::extmod::{
    availability_analysis, deployment_scenarios, response_time_analysis, ModuleRegistry, SystemSnapshot,
};
use iotdraw_core::model::{shortest_path_latency, DeviceEnergyProfile, ExecutionModuleDecl, IoTSystemModel};
use iotdraw_core::modelfmt::{parse_model, serialize_model};
use iotdraw_core::synth::{lifetime_model, random_model, scale_model, RandomModelConfig};
use iotdraw_core::validate::{check_protocol_bridge, resolve_bindings, Endpoint};

const PADOVA: &str = include_str!("../models/padova_fw.iot");
const FRESHNESS: &str = include_str!("../models/freshness_demo.iot");

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(elapsed: Duration, limit_s: f64, what: &str) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_s {
        Ok(())
    } else {
        Err(format!("{what} took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64()))
    }
}

fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs()
}

fn reference_profile() -> DeviceEnergyProfile {
    DeviceEnergyProfile::new(100.0, 3.0, 25.0, 10.0, 2.0, 50.0, 100.0, 2)
}

fn energy_formulas() -> Outcome {
    let p = reference_profile();
    let sense = sense_energy(&p).joules();
    ensure!(rel_eq(sense, 1.5e-3, 1e-12), "sense energy {sense}");
    let tx = transmit_energy(&p, 10.0).joules();
    ensure!(rel_eq(tx, 1.2e-4, 1e-12), "transmit energy {tx}");
    let mah = joules_to_mah(EnergyAmount::from_joules(3600.0), 1.0);
    ensure!(rel_eq(mah, 1000.0008, 1e-12), "3600 J at 1 V = {mah} mAh");
    Ok(format!("sense={sense:e} J transmit={tx:e} J charge={mah} mAh"))
}

fn availability_model() -> IoTSystemModel {
    parse_model(
        r#"system "avail" {}
cloud "a" { location = (0, 0) cpu_frequency_ghz = 1 mtbf_hours = 99 mttr_hours = 1 }
cloud "b" { location = (0, 0) cpu_frequency_ghz = 1 mtbf_hours = 98 mttr_hours = 2 }
component "X" { mean_cpu_demand_cycles = 1 }
component "Y" { mean_cpu_demand_cycles = 1 }
application "app" { region = (0, 0) components = ["X", "Y"] }"#,
    )
    .expect("availability model parses")
}

fn scenario(pairs: &[(&str, &str)]) -> DeploymentScenario {
    DeploymentScenario {
        id: 1,
        assignment: pairs.iter().map(|(c, p)| (c.to_string(), p.to_string())).collect(),
        availability: None,
        response_time_ms: None,
    }
}

fn availability_formula() -> Outcome {
    let m = availability_model();
    let single = scenario_availability(&scenario(&[("X", "a"), ("Y", "a")]), &m);
    ensure!(single == 0.99, "single platform {single}");
    let pair = scenario_availability(&scenario(&[("X", "a"), ("Y", "b")]), &m);
    ensure!(pair == 0.99 * 0.98, "two platforms {pair}");
    ensure!((pair - 0.9702).abs() < 1e-15, "two platforms {pair} vs 0.9702");
    Ok(format!("single={single} product={pair}"))
}

fn response_time() -> Outcome {
    let m = parse_model(
        r#"system "rt" {}
fog "edge" { location = (0, 0) cpu_frequency_ghz = 1 mtbf_hours = 1 mttr_hours = 0 }
cloud "core" { location = (0, 0) cpu_frequency_ghz = 3 mtbf_hours = 1 mttr_hours = 0 }
link "edge" <-> "core" { protocol = "HTTP" latency_ms = 50 distance_m = 1 }
interface "I" {}
component "Server" { mean_cpu_demand_cycles = 3500 provides "i" { interface = "I" protocol = "HTTP" } }
component "Client" { mean_cpu_demand_cycles = 1 requires "i" { interface = "I" protocol = "HTTP" } }
application "app" { region = (0, 0) components = ["Server", "Client"] }"#,
    )
    .map_err(|e| format!("{e:?}"))?;
    let rt = scenario_response_time(&scenario(&[("Server", "core"), ("Client", "edge")]), &m)
        .map_err(|e| e.to_string())?;
    ensure!((rt - 50.001_166_7).abs() < 1e-6, "response time {rt}");
    Ok(format!("{rt:.7} ms"))
}

/// All |P|^|C| assignments, kept when software fits and every dependency has
/// a route whose protocols agree or pass through a fog.
fn brute_force(model: &IoTSystemModel) -> BTreeSet<Vec<(String, String)>> {
    let comps: Vec<_> = model.components().map(|(_, c)| c).collect();
    let plats = &model.platforms;
    let (bindings, _) = resolve_bindings(model);
    let mut out = BTreeSet::new();
    if plats.is_empty() && !comps.is_empty() {
        return out;
    }
    for mut code in 0..plats.len().pow(comps.len() as u32) {
        let mut assignment = Vec::new();
        for c in &comps {
            assignment.push((c.name.clone(), plats[code % plats.len()].name.clone()));
            code /= plats.len();
        }
        let host = |c: &str| assignment.iter().find(|(n, _)| n == c).map(|(_, p)| p.clone()).unwrap();
        let ok = comps.iter().all(|c| model.platform(&host(&c.name)).unwrap().provides_all(&c.required_software))
            && bindings.dependencies.iter().all(|d| {
                let to = match &d.provider {
                    Endpoint::Component(c) => host(c),
                    Endpoint::Platform(p) => p.clone(),
                };
                let consumer = iotdraw_core::model::ServicePort::new(
                    &d.port,
                    &d.provider_port.interface,
                    &d.consumer_protocol,
                );
                shortest_path_latency(model, &host(&d.consumer), &to)
                    .is_some_and(|r| check_protocol_bridge(model, &consumer, &d.provider_port, &r.path))
            });
        if ok {
            out.insert(assignment);
        }
    }
    out
}

fn enumeration_oracle() -> Outcome {
    let start = Instant::now();
    let cfg = RandomModelConfig::default();
    let mut compared = 0;
    for seed in 0..40u64 {
        let m = random_model(seed, &cfg);
        let got: BTreeSet<_> = enumerate_deployments(&m).into_iter().map(|s| s.assignment).collect();
        ensure!(got == brute_force(&m), "seed {seed}: enumeration differs from brute force");
        compared += got.len();
    }
    let oracle_time = start.elapsed();

    let start = Instant::now();
    let fw = parse_model(PADOVA).map_err(|e| format!("{e:?}"))?;
    let scenarios = enumerate_deployments(&fw);
    let elapsed = start.elapsed();
    ensure!(scenarios.len() == 30, "padova yields {}", scenarios.len());
    let candidates = fw.platforms.iter().filter(|p| p.device().is_none()).count().pow(3);
    ensure!(candidates == 125, "cloud/fog product is {candidates}");
    let set: BTreeSet<_> = scenarios.into_iter().map(|s| s.assignment).collect();
    ensure!(set == brute_force(&fw), "padova differs from brute force");
    within(elapsed, 1.0, "padova enumeration")?;
    Ok(format!(
        "40 generated models ({compared} scenarios, {:.2}s with oracle); padova 30 of 125 in {:.1} ms",
        oracle_time.as_secs_f64(),
        elapsed.as_secs_f64() * 1e3
    ))
}

fn check_ranking(s: &[DeploymentScenario]) -> Result<(), String> {
    if s.is_empty() {
        return Ok(());
    }
    let best_a = s.iter().map(|x| x.availability.unwrap()).fold(f64::MIN, f64::max);
    let best_r = s.iter().map(|x| x.response_time_ms.unwrap()).fold(f64::MAX, f64::min);
    let first_a = s.iter().filter(|x| x.availability.unwrap() == best_a).map(|x| x.id).min();
    let first_r = s.iter().filter(|x| x.response_time_ms.unwrap() == best_r).map(|x| x.id).min();
    let by_a = rank_scenarios(s, Metric::Availability);
    let by_r = rank_scenarios(s, Metric::ResponseTime);
    ensure!(Some(by_a[0].id) == first_a, "availability top {} vs {first_a:?}", by_a[0].id);
    ensure!(Some(by_r[0].id) == first_r, "response-time top {} vs {first_r:?}", by_r[0].id);
    for w in by_a.windows(2) {
        let (x, y) = (w[0].availability.unwrap(), w[1].availability.unwrap());
        ensure!(x > y || (x == y && w[0].id < w[1].id), "availability order at {}", w[1].id);
    }
    for w in by_r.windows(2) {
        let (x, y) = (w[0].response_time_ms.unwrap(), w[1].response_time_ms.unwrap());
        ensure!(x < y || (x == y && w[0].id < w[1].id), "response-time order at {}", w[1].id);
    }
    Ok(())
}

fn ranking_oracle() -> Outcome {
    let fw = parse_model(PADOVA).map_err(|e| format!("{e:?}"))?;
    let s = evaluated_deployments(&fw).map_err(|e| e.to_string())?;
    check_ranking(&s)?;
    for seed in 0..40u64 {
        let m = random_model(seed, &RandomModelConfig::default());
        check_ranking(&evaluated_deployments(&m).map_err(|e| e.to_string())?).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    let mut tie: Vec<DeploymentScenario> = (1..=3).map(|id| DeploymentScenario { id, ..scenario(&[]) }).collect();
    for (x, a) in tie.iter_mut().zip([0.99, 0.97, 0.99]) {
        x.availability = Some(a);
    }
    let order: Vec<usize> = rank_scenarios(&tie, Metric::Availability).iter().map(|x| x.id).collect();
    ensure!(order == [1, 3, 2], "tie order {order:?}");
    let top_a = &rank_scenarios(&s, Metric::Availability)[0];
    let top_r = &rank_scenarios(&s, Metric::ResponseTime)[0];
    Ok(format!(
        "padova best availability #{} ({:.6}), best response #{} ({:.3} ms); 40 generated models",
        top_a.id,
        top_a.availability.unwrap(),
        top_r.id,
        top_r.response_time_ms.unwrap()
    ))
}

fn random_profile(rng: &mut SimRng) -> DeviceEnergyProfile {
    let mut p = DeviceEnergyProfile::new(
        rng.uniform(5.2, 6.5),
        rng.uniform(1.8, 3.6),
        rng.uniform(5.0, 40.0),
        rng.uniform(1.0, 20.0),
        rng.uniform(0.5, 4.0),
        rng.uniform(20.0, 80.0),
        rng.uniform(10.0, 200.0),
        2 + rng.below(3) as u32,
    );
    p.depletion_threshold_mah = 5.0;
    p
}

fn lifetime_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = SimRng::new(0x11FE);
    let mut worst = 0.0f64;
    for case in 0..50 {
        let profile = random_profile(&mut rng);
        let interval = 1 + rng.below(10);
        let distance = rng.uniform(1.0, 60.0);
        let Lifetime::Ticks(expected) = lifetime_closed_form(&profile, distance, interval) else {
            return Err(format!("case {case}: closed form unbounded"));
        };
        let model = lifetime_model(profile, interval, distance, expected + 10 * interval);
        let opts = RunOptions { stop: iotdraw_core::engine::StopRule::AnyDevice, ..RunOptions::default() };
        let report = run_with(&model, &opts).map_err(|e| e.to_string())?;
        let got = report.lifetime("probe").ok_or_else(|| format!("case {case}: no depletion"))?;
        let gap = got.abs_diff(expected);
        ensure!(gap <= interval, "case {case}: simulated {got} vs closed form {expected} (interval {interval})");
        worst = worst.max(gap as f64 / interval as f64);
    }
    within(start.elapsed(), 5.0, "50 lifetime runs")?;
    Ok(format!("50 profiles, worst gap {worst} intervals, {:.2}s", start.elapsed().as_secs_f64()))
}

fn means(table: &iotdraw_core::analysis::SweepTable) -> Result<Vec<f64>, String> {
    table
        .rows
        .iter()
        .map(|r| r.mean_lifetime_ticks.ok_or_else(|| format!("{}={} never depleted", table.parameter, r.parameter)))
        .collect()
}

fn dq1_monotonicity() -> Outcome {
    let start = Instant::now();
    let fw = parse_model(PADOVA).map_err(|e| format!("{e:?}"))?;
    let table = lifetime_sweep(
        &fw,
        "water_sensor",
        &SweepParameter::Interval(vec![2, 4, 6]),
        30,
        fw.sim_config.rng_seed,
        &SweepOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let m = means(&table)?;
    ensure!(m[0] < m[1] && m[1] < m[2], "means not strictly increasing: {m:?}");
    within(start.elapsed(), 10.0, "interval sweep")?;
    Ok(format!("means {:.0} < {:.0} < {:.0} ticks, {:.2}s", m[0], m[1], m[2], start.elapsed().as_secs_f64()))
}

fn dq2_freshness() -> Outcome {
    let start = Instant::now();
    let model = parse_model(FRESHNESS).map_err(|e| format!("{e:?}"))?;
    let table = lifetime_sweep(
        &model,
        "soil_probe",
        &SweepParameter::MaxAge(vec![1, 2]),
        30,
        model.sim_config.rng_seed,
        &SweepOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let m = means(&table)?;
    let gain = m[1] / m[0] - 1.0;
    ensure!(gain >= 0.40, "max_age 2 vs 1 gains {:.1}%", gain * 100.0);
    within(start.elapsed(), 10.0, "freshness sweep")?;
    Ok(format!("+{:.1}% ({:.0} -> {:.0} ticks), {:.2}s", gain * 100.0, m[0], m[1], start.elapsed().as_secs_f64()))
}

fn scale_run() -> Outcome {
    let model = scale_model(1);
    let platforms = model.platforms.len();
    let components = model.components().count();
    let start = Instant::now();
    let s = evaluated_deployments(&model).map_err(|e| e.to_string())?;
    let by_a = rank_scenarios(&s, Metric::Availability);
    let by_r = rank_scenarios(&s, Metric::ResponseTime);
    let elapsed = start.elapsed();
    ensure!(components == 12, "{components} components");
    ensure!((45..=55).contains(&platforms), "{platforms} platforms");
    ensure!((500..5000).contains(&s.len()), "{} scenarios", s.len());
    ensure!(by_a.len() == s.len() && by_r.len() == s.len(), "ranking lost scenarios");
    within(elapsed, 5.0, "scale enumeration and ranking")?;
    Ok(format!("{components} components, {platforms} platforms, {} scenarios in {:.2}s", s.len(), elapsed.as_secs_f64()))
}

fn logged_csv(model: &IoTSystemModel) -> Result<String, String> {
    let report = run_with(model, &RunOptions::logged(FreshnessPolicy::new(2), false)).map_err(|e| e.to_string())?;
    report.events_csv().map_err(|e| e.to_string())
}

fn determinism_and_round_trip() -> Outcome {
    let fw = parse_model(PADOVA).map_err(|e| format!("{e:?}"))?;
    let demo = parse_model(FRESHNESS).map_err(|e| format!("{e:?}"))?;
    for m in [&fw, &demo] {
        let (a, b) = (logged_csv(m)?, logged_csv(m)?);
        ensure!(a == b, "{}: event logs differ between runs", m.name);
    }
    let mut models = vec![fw, demo, scale_model(1)];
    models.extend((0..100).map(|s| random_model(s, &RandomModelConfig::default())));
    for m in &models {
        let back = parse_model(&serialize_model(m)).map_err(|e| format!("{}: {e:?}", m.name))?;
        ensure!(&back == m, "{}: parse(serialize(m)) != m", m.name);
    }
    Ok(format!("identical logs for 2 bundled models; {} models round-trip", models.len()))
}

fn list_trace() -> Outcome {
    let model = lifetime_model(reference_profile(), 2, 10.0, 10);
    let report = run_with(&model, &RunOptions::logged(FreshnessPolicy::default(), false)).map_err(|e| e.to_string())?;
    let ticks: Vec<u64> = report
        .events
        .iter()
        .filter(|e| e.kind == EventKind::PeriodicRequest)
        .map(|e| e.tick)
        .collect();
    ensure!(ticks == [2, 4, 6, 8, 10], "periodic requests at {ticks:?}");
    Ok(format!("periodic requests at {ticks:?}"))
}

fn extension_purity() -> Outcome {
    let fw = parse_model(PADOVA).map_err(|e| format!("{e:?}"))?;
    let mut bare = fw.clone();
    bare.sim_config.execution_modules.clear();
    let mut hooked = fw.clone();
    hooked.sim_config.execution_modules.push(ExecutionModuleDecl {
        module: "Probe".into(),
        language: "rust".into(),
        code: String::new(),
    });
    let mut registry = ModuleRegistry::with_builtins();
    registry
        .register_module("Probe", |s: &SystemSnapshot| format!("devices={}", s.residual_energy.len()))
        .map_err(|e| e.to_string())?;

    let run = |m: &IoTSystemModel| {
        let opts = RunOptions { registry: Some(&registry), ..RunOptions::logged(FreshnessPolicy::new(1), true) };
        run_with(m, &opts).map_err(|e| e.to_string())
    };
    let (plain, with) = (run(&bare)?, run(&hooked)?);
    let strip = |r: &iotdraw_core::engine::SimulationReport| {
        r.events.iter().filter(|e| e.kind != EventKind::ModuleOutput).cloned().collect::<Vec<_>>()
    };
    ensure!(strip(&plain) == strip(&with), "non-module events differ");
    ensure!(plain.devices == with.devices, "device summaries differ");
    ensure!(with.module_outputs.len() == 2 && plain.module_outputs.is_empty(), "module outputs {:?}", with.module_outputs.len());

    let snap = SystemSnapshot::of_model(&fw);
    let s = evaluated_deployments(&fw).map_err(|e| e.to_string())?;
    let csv = |v: &[DeploymentScenario]| scenarios_csv(v).map_err(|e| e.to_string());
    ensure!(deployment_scenarios(&snap) == csv(&s)?, "DeploymentScenarios output differs");
    ensure!(availability_analysis(&snap) == csv(&rank_scenarios(&s, Metric::Availability))?, "AvailabilityAnalysis differs");
    ensure!(response_time_analysis(&snap) == csv(&rank_scenarios(&s, Metric::ResponseTime))?, "ResponseTimeAnalysis differs");
    ensure!(with.module_outputs[0].1 == csv(&s)?, "logged DeploymentScenarios output differs");
    Ok(format!("{} events identical apart from module output; built-ins match", strip(&plain).len()))
}

fn main() {
    let criteria: [(&str, Check); 12] = [
        ("energy formulas", energy_formulas),
        ("availability formula", availability_formula),
        ("response time", response_time),
        ("deployment enumeration oracle", enumeration_oracle),
        ("ranking oracle", ranking_oracle),
        ("lifetime oracle", lifetime_oracle),
        ("request interval monotonicity", dq1_monotonicity),
        ("freshness gain", dq2_freshness),
        ("scale run", scale_run),
        ("determinism and round trip", determinism_and_round_trip),
        ("tick loop trace", list_trace),
        ("extension module purity", extension_purity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
