use proptest::prelude::*;

use super::*;
use crate::energy::{lifetime_closed_form, request_energy, Lifetime};
use crate::extmod::ModuleRegistry;
use crate::model::{CompareOp, DeviceEnergyProfile};
use crate::modelfmt::parse_model;
use crate::synth::{lifetime_model, random_model, RandomModelConfig};

const FRESHNESS: &str = include_str!("../../models/freshness_demo.iot");
const FW: &str = include_str!("../../models/padova_fw.iot");

fn profile(battery: f64) -> DeviceEnergyProfile {
    DeviceEnergyProfile::new(battery, 3.0, 25.0, 10.0, 2.0, 50.0, 100.0, 2)
}

fn ticks_of(report: &SimulationReport, kind: EventKind) -> Vec<u64> {
    report.events.iter().filter(|e| e.kind == kind).map(|e| e.tick).collect()
}

/// Literal per-tick loop with one timer, no skipping.
fn naive_fire_ticks(interval: u64, simulation_time: u64) -> Vec<u64> {
    let mut fired = Vec::new();
    let mut timer = 0;
    let mut global = 0;
    while global <= simulation_time {
        if timer == interval {
            fired.push(global);
            timer = 0;
        }
        timer += 1;
        global += 1;
    }
    fired
}

fn detail_value(detail: &str, key: &str) -> Option<f64> {
    detail
        .split(' ')
        .find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
        .and_then(|v| v.parse().ok())
}

#[test]
fn zero_simulation_time_runs_one_empty_tick() {
    let report = run_simulation(&lifetime_model(profile(40.0), 1, 10.0, 0), FreshnessPolicy::default(), false).unwrap();
    assert_eq!(report.final_tick, Some(0));
    assert!(report.events.is_empty());
    assert_eq!(report.count(EventKind::PeriodicRequest), 0);
}

#[test]
fn interval_two_over_ten_ticks() {
    let report = run_simulation(&lifetime_model(profile(40.0), 2, 10.0, 10), FreshnessPolicy::default(), false).unwrap();
    assert_eq!(ticks_of(&report, EventKind::PeriodicRequest), [2, 4, 6, 8, 10]);
    assert_eq!(naive_fire_ticks(2, 10), [2, 4, 6, 8, 10]);
}

#[test]
fn cache_hit_within_max_age_costs_nothing() {
    let model = lifetime_model(profile(40.0), 2, 10.0, 4);
    let report = run_simulation(&model, FreshnessPolicy::new(4), false).unwrap();
    let kinds: Vec<EventKind> = report.events.iter().map(|e| e.kind).collect();
    assert_eq!(
        kinds,
        [
            EventKind::PeriodicRequest,
            EventKind::SenseSample,
            EventKind::PeriodicRequest,
            EventKind::CacheHit
        ]
    );
    let after_first = detail_value(&report.events[1].detail, "residual_mah").unwrap();
    assert_eq!(report.devices[0].residual_mah, after_first);
    assert_eq!((report.devices[0].samples, report.devices[0].cache_hits), (1, 1));
}

#[test]
fn disabled_cache_senses_every_request() {
    let model = lifetime_model(profile(40.0), 1, 10.0, 20);
    let report = run_simulation(&model, FreshnessPolicy::new(0), false).unwrap();
    assert_eq!(report.count(EventKind::SenseSample), 20);
    assert_eq!(report.count(EventKind::CacheHit), 0);
    let per = joules_to_mah(request_energy(&profile(40.0), 10.0), 3.0);
    assert!((40.0 - report.devices[0].residual_mah - 20.0 * per).abs() < 1e-12);
}

#[test]
fn freshness_window_spaces_samples() {
    let model = parse_model(FRESHNESS).unwrap();
    let mut opts = RunOptions::logged(FreshnessPolicy::new(2), false);
    opts.stop = StopRule::Never;
    let mut m = model.clone();
    m.sim_config.simulation_time = 12;
    let report = run_with(&m, &opts).unwrap();
    assert_eq!(ticks_of(&report, EventKind::SenseSample), [1, 4, 7, 10]);
    assert_eq!(ticks_of(&report, EventKind::CacheHit), [2, 3, 5, 6, 8, 9, 11, 12]);
}

#[test]
fn conditions() {
    let expr = |op| ConditionExpr {
        field: "level_cm".into(),
        op,
        threshold: 20.0,
    };
    let rec = |v: f64| SampleRecord::from([("level_cm".to_string(), v)]);
    assert_eq!(eval_condition(&expr(CompareOp::Gt), &rec(25.0)), Ok(true));
    assert_eq!(eval_condition(&expr(CompareOp::Gt), &rec(20.0)), Ok(false));
    assert_eq!(eval_condition(&expr(CompareOp::Ge), &rec(20.0)), Ok(true));
    assert_eq!(
        eval_condition(&expr(CompareOp::Gt), &SampleRecord::new()),
        Err(MissingField("level_cm".into()))
    );
}

#[test]
fn samples() {
    let mut s = SampleStream::new(1);
    assert_eq!(next_sample(&DataSource::Constant(7.0), &mut s), 7.0);
    assert_eq!(next_sample(&DataSource::Constant(7.0), &mut s), 7.0);
    let degenerate = DataSource::Uniform { lo: 5.0, hi: 5.0, seed: None };
    assert_eq!(next_sample(&degenerate, &mut s), 5.0);
    let trace = DataSource::Trace(vec![1.0, 2.0]);
    let mut t = SampleStream::new(1);
    let got: Vec<f64> = (0..3).map(|_| next_sample(&trace, &mut t)).collect();
    assert_eq!(got, [1.0, 2.0, 1.0]);
}

#[test]
fn unknown_module_aborts_before_first_tick() {
    let model = parse_model(FW).unwrap();
    let empty = ModuleRegistry::new();
    let opts = RunOptions {
        registry: Some(&empty),
        ..RunOptions::default()
    };
    assert_eq!(
        run_with(&model, &opts).unwrap_err(),
        SimulationError::UnknownModule("DeploymentScenarios".into())
    );
}

#[test]
fn flood_warning_alarm_follows_water_level() {
    let mut model = parse_model(FW).unwrap();
    model.sim_config.simulation_time = 2000;
    let report = run_simulation(&model, FreshnessPolicy::default(), false).unwrap();
    assert_eq!(report.count(EventKind::SenseSample), 1000);
    let triggers = report.count(EventKind::EventRequest);
    assert!(triggers > 200 && triggers < 450, "{triggers}");
    assert_eq!(report.count(EventKind::Actuation), triggers);
    assert_eq!(report.device("alarm").unwrap().residual_mah, 25.0);
    assert_eq!(report.module_outputs.len(), 1);
    assert_eq!(report.events[0].kind, EventKind::ModuleOutput);
}

#[test]
fn transmit_distance_uses_first_hop_toward_consumer() {
    let mut model = parse_model(FW).unwrap();
    model.sim_config.simulation_time = 2;
    let report = run_simulation(&model, FreshnessPolicy::default(), false).unwrap();
    let sample = report.events.iter().find(|e| e.kind == EventKind::SenseSample).unwrap();
    assert_eq!(detail_value(&sample.detail, "distance_m"), Some(12.0));
}

#[test]
fn unreachable_device_fails_requests() {
    let mut model = lifetime_model(profile(40.0), 1, 10.0, 3);
    model.networks.clear();
    let report = run_simulation(&model, FreshnessPolicy::default(), false).unwrap();
    assert_eq!(ticks_of(&report, EventKind::RequestFailed), [1, 2, 3]);
    assert_eq!(report.devices[0].residual_mah, 40.0);
}

#[test]
fn depleted_device_stops_serving() {
    let p = profile(5.0005);
    let model = lifetime_model(p.clone(), 1, 10.0, 10);
    let report = run_simulation(&model, FreshnessPolicy::default(), false).unwrap();
    assert_eq!(report.lifetime("probe"), Some(4));
    assert_eq!(report.count(EventKind::DeviceDepleted), 1);
    assert_eq!(ticks_of(&report, EventKind::RequestFailed), [5, 6, 7, 8, 9, 10]);
    let stopped = run_simulation(&model, FreshnessPolicy::default(), true).unwrap();
    assert!(stopped.stopped);
    assert_eq!(stopped.final_tick, Some(4));
}

#[test]
fn lifetime_matches_closed_form() {
    let p = profile(5.05);
    for interval in [1, 3, 7] {
        let report = run_simulation(&lifetime_model(p.clone(), interval, 20.0, 100_000), FreshnessPolicy::default(), true).unwrap();
        let Lifetime::Ticks(expected) = lifetime_closed_form(&p, 20.0, interval) else {
            panic!("bounded")
        };
        let got = report.lifetime("probe").unwrap();
        assert!(got.abs_diff(expected) <= interval, "{got} vs {expected}");
    }
}

fn random_runs() -> impl Strategy<Value = (u64, u64)> {
    (any::<u64>(), 0u64..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn skipping_matches_the_literal_loop(interval in 1u64..20, end in 0u64..300) {
        let report = run_simulation(&lifetime_model(profile(1000.0), interval, 5.0, end), FreshnessPolicy::default(), false).unwrap();
        prop_assert_eq!(ticks_of(&report, EventKind::PeriodicRequest), naive_fire_ticks(interval, end));
    }

    #[test]
    fn runs_are_deterministic((seed, max_age) in random_runs()) {
        let m = random_model(seed, &RandomModelConfig::default());
        let a = run_simulation(&m, FreshnessPolicy::new(max_age), false);
        let b = run_simulation(&m, FreshnessPolicy::new(max_age), false);
        prop_assert_eq!(&a, &b);
        if let Ok(a) = a {
            prop_assert_eq!(a.events_csv().unwrap(), b.unwrap().events_csv().unwrap());
            for e in &a.events {
                prop_assert!(e.tick <= m.sim_config.simulation_time);
            }
        }
    }

    #[test]
    fn drained_charge_is_conserved((seed, max_age) in random_runs()) {
        let mut m = random_model(seed, &RandomModelConfig::default());
        m.sim_config.simulation_time = 500;
        let Ok(report) = run_simulation(&m, FreshnessPolicy::new(max_age), false) else { return Ok(()) };
        for d in &report.devices {
            let joules: f64 = report
                .events
                .iter()
                .filter(|e| e.subject == d.name)
                .map(|e| detail_value(&e.detail, "sense_j").unwrap_or(0.0) + detail_value(&e.detail, "transmit_j").unwrap_or(0.0))
                .sum();
            let voltage = m.platform(&d.name).unwrap().device().unwrap().energy.supply_voltage_v;
            let logged = joules_to_mah(EnergyAmount::from_joules(joules), voltage);
            let drained = d.capacity_mah - d.residual_mah;
            prop_assert!((logged - drained).abs() <= 1e-9 * drained.max(f64::MIN_POSITIVE) || logged == drained,
                "{}: logged {logged} drained {drained}", d.name);
        }
    }

    #[test]
    fn events_follow_their_trigger_sample((seed, max_age) in random_runs()) {
        let m = random_model(seed, &RandomModelConfig::default());
        let Ok(report) = run_simulation(&m, FreshnessPolicy::new(max_age), false) else { return Ok(()) };
        let mut expecting = false;
        let mut periodic_sample: Option<(u64, f64)> = None;
        for e in &report.events {
            match e.kind {
                EventKind::PeriodicRequest => expecting = true,
                EventKind::SenseSample | EventKind::CacheHit if expecting => {
                    periodic_sample = Some((e.tick, detail_value(&e.detail, "value").unwrap()));
                    expecting = false;
                }
                EventKind::EventRequest => {
                    let cond = &m.component(&e.subject).unwrap().event_request.as_ref().unwrap().condition;
                    let (tick, value) = periodic_sample.expect("a sample precedes every event");
                    prop_assert_eq!(tick, e.tick);
                    prop_assert!(cond.op.apply(value, cond.threshold));
                }
                _ => {}
            }
        }
    }

    #[test]
    fn cache_hits_are_never_stale(seed in any::<u64>(), max_age in 1u64..5) {
        let m = random_model(seed, &RandomModelConfig::default());
        let Ok(report) = run_simulation(&m, FreshnessPolicy::new(max_age), false) else { return Ok(()) };
        let mut last: BTreeMap<&str, u64> = BTreeMap::new();
        for e in &report.events {
            match e.kind {
                EventKind::SenseSample => {
                    if let Some(s) = last.get(e.subject.as_str()) {
                        prop_assert!(e.tick - s > max_age, "{} resampled a fresh entry", e.subject);
                    }
                    last.insert(&e.subject, e.tick);
                }
                EventKind::CacheHit => {
                    let s = last.get(e.subject.as_str()).expect("hit after a sample");
                    prop_assert!(e.tick - s <= max_age);
                }
                _ => {}
            }
        }
    }

    #[test]
    fn lifetime_non_decreasing_in_interval_and_max_age(
        battery in 5.01f64..5.3,
        distance in 1.0f64..50.0,
        interval in 1u64..6,
        max_age in 0u64..4,
    ) {
        let run = |interval: u64, max_age: u64| {
            let m = lifetime_model(profile(battery), interval, distance, 200_000);
            run_simulation(&m, FreshnessPolicy::new(max_age), true).unwrap().lifetime("probe").unwrap()
        };
        prop_assert!(run(interval + 1, 0) >= run(interval, 0));
        prop_assert!(run(interval, max_age + 1) >= run(interval, max_age));
    }
}
