use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;

use super::*;
use crate::model::shortest_path_latency;
use crate::modelfmt::parse_model;
use crate::synth::{random_model, RandomModelConfig};
use crate::validate::check_protocol_bridge;

const FW: &str = include_str!("../../models/padova_fw.iot");

fn scenario(id: usize, pairs: &[(&str, &str)]) -> DeploymentScenario {
    DeploymentScenario {
        id,
        assignment: pairs.iter().map(|(c, p)| (c.to_string(), p.to_string())).collect(),
        availability: None,
        response_time_ms: None,
    }
}

/// Every assignment over the full platform product, filtered by software,
/// reachability and protocol agreement on the shortest route.
fn brute_force(model: &IoTSystemModel) -> BTreeSet<Vec<(String, String)>> {
    let comps: Vec<_> = model.components().map(|(_, c)| c).collect();
    let plats: Vec<_> = model.platforms.iter().collect();
    let (bindings, _) = resolve_bindings(model);
    let mut routes: HashMap<(String, String), Option<Vec<String>>> = HashMap::new();
    let mut out = BTreeSet::new();
    let total = plats.len().pow(comps.len() as u32);
    for mut code in 0..total {
        let mut hosts = HashMap::new();
        for c in &comps {
            hosts.insert(c.name.clone(), plats[code % plats.len()].name.clone());
            code /= plats.len();
        }
        let software_ok = comps
            .iter()
            .all(|c| model.platform(&hosts[&c.name]).unwrap().provides_all(&c.required_software));
        if !software_ok {
            continue;
        }
        let edges_ok = bindings.dependencies.iter().all(|d| {
            let from = hosts[&d.consumer].clone();
            let to = match &d.provider {
                Endpoint::Component(c) => hosts[c].clone(),
                Endpoint::Platform(p) => p.clone(),
            };
            let path = routes
                .entry((from.clone(), to.clone()))
                .or_insert_with(|| shortest_path_latency(model, &from, &to).map(|r| r.path))
                .clone();
            let consumer = crate::model::ServicePort::new(&d.port, &d.provider_port.interface, &d.consumer_protocol);
            path.is_some_and(|p| check_protocol_bridge(model, &consumer, &d.provider_port, &p))
        });
        if edges_ok {
            out.insert(
                comps
                    .iter()
                    .map(|c| (c.name.clone(), hosts[&c.name].clone()))
                    .collect(),
            );
        }
    }
    out
}

fn as_set(scenarios: &[DeploymentScenario]) -> BTreeSet<Vec<(String, String)>> {
    scenarios.iter().map(|s| s.assignment.clone()).collect()
}

fn small(n_platforms: usize, software: &str, links: &str) -> IoTSystemModel {
    let mut text = String::from("system \"s\" {}\n");
    for i in 0..n_platforms {
        text.push_str(&format!(
            "fog \"p{i}\" {{ location = (0, 0) cpu_frequency_ghz = 3 software = [{software}] mtbf_hours = {} mttr_hours = 1 }}\n",
            99 - i
        ));
    }
    text.push_str(links);
    text.push_str(
        r#"
interface "I" {}
component "A" { mean_cpu_demand_cycles = 3500 software = ["X"] provides "i" { interface = "I" protocol = "HTTP" } }
component "B" { mean_cpu_demand_cycles = 10 software = ["X"] requires "i" { interface = "I" protocol = "HTTP" } }
component "C" { mean_cpu_demand_cycles = 10 software = ["X"] }
application "app" { region = (0, 0) components = ["A", "B", "C"] }
"#,
    );
    parse_model(&text).unwrap()
}

fn full_mesh(n: usize) -> String {
    let mut s = String::new();
    for i in 0..n {
        for j in i + 1..n {
            s.push_str(&format!("link \"p{i}\" <-> \"p{j}\" {{ protocol = \"HTTP\" latency_ms = 50 distance_m = 1 }}\n"));
        }
    }
    s
}

#[test]
fn single_component_single_platform() {
    let m = parse_model(
        r#"system "t" {}
cloud "P" { location = (0, 0) cpu_frequency_ghz = 1 software = ["S"] mtbf_hours = 1 mttr_hours = 0 }
component "C" { mean_cpu_demand_cycles = 1 software = ["S"] }
application "a" { region = (0, 0) components = ["C"] }"#,
    )
    .unwrap();
    let s = enumerate_deployments(&m);
    assert_eq!(s.len(), 1);
    assert_eq!(s[0].to_text(), "Scenario 1: C>P");
}

#[test]
fn full_product_when_unconstrained() {
    let m = small(5, "\"X\"", &full_mesh(5));
    let s = enumerate_deployments(&m);
    assert_eq!(s.len(), 125);
    assert_eq!(as_set(&s), brute_force(&m));
    assert_eq!(s[0].to_text(), "Scenario 1: A>p0, B>p0, C>p0");
    assert_eq!(s[1].to_text(), "Scenario 2: A>p0, B>p0, C>p1");
}

#[test]
fn disconnected_dependency_is_pruned() {
    let m = small(2, "\"X\"", "");
    let s = enumerate_deployments(&m);
    // A and B must share a platform; C is free.
    assert_eq!(s.len(), 4);
}

#[test]
fn flood_warning_has_thirty_deployments() {
    let m = parse_model(FW).unwrap();
    let s = enumerate_deployments(&m);
    assert_eq!(s.len(), 30);
    assert_eq!(as_set(&s), brute_force(&m));
    let fog_and_cloud = m.platforms.iter().filter(|p| p.device().is_none()).count();
    assert_eq!(fog_and_cloud.pow(3), 125);
    assert_eq!(s[0].to_text(), "Scenario 1: Analytics>Michigan, FloodMonitor>Michigan, FloodAPI>fog_1");
}

#[test]
fn availability_examples() {
    let m = parse_model(
        r#"system "t" {}
cloud "a" { location = (0, 0) cpu_frequency_ghz = 1 mtbf_hours = 99 mttr_hours = 1 }
cloud "b" { location = (0, 0) cpu_frequency_ghz = 1 mtbf_hours = 98 mttr_hours = 2 }
cloud "c" { location = (0, 0) cpu_frequency_ghz = 1 mtbf_hours = 7 mttr_hours = 0 }
component "X" { mean_cpu_demand_cycles = 1 }
component "Y" { mean_cpu_demand_cycles = 1 }
application "app" { region = (0, 0) components = ["X", "Y"] }"#,
    )
    .unwrap();
    assert_eq!(scenario_availability(&scenario(1, &[("X", "a"), ("Y", "a")]), &m), 0.99);
    assert_eq!(scenario_availability(&scenario(1, &[("X", "a"), ("Y", "b")]), &m), 0.99 * 0.98);
    assert!((scenario_availability(&scenario(1, &[("X", "a"), ("Y", "b")]), &m) - 0.9702).abs() < 1e-15);
    assert_eq!(scenario_availability(&scenario(1, &[("X", "c"), ("Y", "c")]), &m), 1.0);
}

fn edge_model(latency: f64) -> IoTSystemModel {
    parse_model(&format!(
        r#"system "t" {{}}
fog "f" {{ location = (0, 0) cpu_frequency_ghz = 1 mtbf_hours = 1 mttr_hours = 0 }}
cloud "c" {{ location = (0, 0) cpu_frequency_ghz = 3 mtbf_hours = 1 mttr_hours = 0 }}
link "f" <-> "c" {{ protocol = "HTTP" latency_ms = {latency} distance_m = 1 }}
interface "I" {{}}
component "P" {{ mean_cpu_demand_cycles = 3500 provides "i" {{ interface = "I" protocol = "HTTP" }} }}
component "Q" {{ mean_cpu_demand_cycles = 1 requires "i" {{ interface = "I" protocol = "HTTP" }} }}
application "app" {{ region = (0, 0) components = ["P", "Q"] }}"#
    ))
    .unwrap()
}

#[test]
fn response_time_examples() {
    let s = scenario(1, &[("P", "c"), ("Q", "f")]);
    let rt = scenario_response_time(&s, &edge_model(50.0)).unwrap();
    assert!((rt - 50.001_166_7).abs() < 1e-6, "{rt}");
    let slow = scenario_response_time(&s, &edge_model(160.0)).unwrap();
    assert!((slow - 160.001_166_7).abs() < 1e-6);
    assert!(slow > rt);
    let colocated = scenario(1, &[("P", "c"), ("Q", "c")]);
    let rt = scenario_response_time(&colocated, &edge_model(50.0)).unwrap();
    assert!((rt - 3500.0 / 3e9 * 1000.0).abs() < 1e-15);
}

#[test]
fn device_provider_costs_its_sense_duration() {
    let m = parse_model(FW).unwrap();
    let s = scenario(
        1,
        &[("Analytics", "Stuttgart"), ("FloodMonitor", "Stuttgart"), ("FloodAPI", "fog_1")],
    );
    let rt = scenario_response_time(&s, &m).unwrap();
    let expected = (3500.0 * 0.0 + 800.0 / 3e9 * 1000.0) // Analytics -> FloodMonitor, co-located
        + (50.0 + 500.0 / 1.2e9 * 1000.0) // FloodMonitor -> FloodAPI
        + (50.0 + 3.0 + 10.0) // FloodMonitor -> alarm via fog_2 (alarm sensing time)
        + (5.0 + 10.0); // FloodAPI -> water_sensor
    assert!((rt - expected).abs() < 1e-9, "{rt} vs {expected}");
}

#[test]
fn ranking_breaks_ties_by_id() {
    let mut s: Vec<DeploymentScenario> = (1..=3).map(|i| scenario(i, &[])).collect();
    for (sc, a) in s.iter_mut().zip([0.99, 0.97, 0.99]) {
        sc.availability = Some(a);
    }
    let ids: Vec<usize> = rank_scenarios(&s, Metric::Availability).iter().map(|s| s.id).collect();
    assert_eq!(ids, [1, 3, 2]);
    assert_eq!(rank_scenarios(&s[..1], Metric::Availability), s[..1].to_vec());
}

#[test]
fn csv_parses_back() {
    let m = parse_model(FW).unwrap();
    let s = evaluated_deployments(&m).unwrap();
    let text = scenarios_csv(&s).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(r.headers().unwrap(), vec!["id", "assignment", "availability", "response_time_ms"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 30);
    assert_eq!(&rows[0][1], "Analytics=Michigan;FloodMonitor=Michigan;FloodAPI=fog_1");
    let a: f64 = rows[0][2].parse().unwrap();
    assert_eq!(a, s[0].availability.unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn enumeration_matches_brute_force(seed in any::<u64>()) {
        let m = random_model(seed, &RandomModelConfig::default());
        let s = enumerate_deployments(&m);
        let ids: Vec<usize> = s.iter().map(|s| s.id).collect();
        prop_assert_eq!(ids, (1..=s.len()).collect::<Vec<_>>());
        prop_assert_eq!(as_set(&s), brute_force(&m));
    }

    #[test]
    fn rankings_agree_with_exhaustive_extremes(seed in any::<u64>()) {
        let m = random_model(seed, &RandomModelConfig::default());
        let s = evaluated_deployments(&m).unwrap();
        if s.is_empty() {
            return Ok(());
        }
        let best_a = s.iter().map(|s| s.availability.unwrap()).fold(f64::MIN, f64::max);
        let best_r = s.iter().map(|s| s.response_time_ms.unwrap()).fold(f64::MAX, f64::min);
        let by_a = rank_scenarios(&s, Metric::Availability);
        let by_r = rank_scenarios(&s, Metric::ResponseTime);
        prop_assert_eq!(by_a[0].availability.unwrap(), best_a);
        prop_assert_eq!(by_r[0].response_time_ms.unwrap(), best_r);
        let first_a = s.iter().find(|s| s.availability.unwrap() == best_a).unwrap().id;
        prop_assert_eq!(by_a[0].id, first_a);
        for w in by_r.windows(2) {
            let (x, y) = (w[0].response_time_ms.unwrap(), w[1].response_time_ms.unwrap());
            prop_assert!(x < y || (x == y && w[0].id < w[1].id));
        }
    }

    #[test]
    fn availability_is_a_probability_and_shrinks_with_platforms(seed in any::<u64>()) {
        let m = random_model(seed, &RandomModelConfig::default());
        let eval = ScenarioEvaluator::new(&m);
        for s in eval.enumerate() {
            let a = eval.availability(&s);
            prop_assert!(a > 0.0 && a <= 1.0);
            let used: BTreeSet<&str> = s.assignment.iter().map(|(_, p)| p.as_str()).collect();
            if let Some(extra) = m.platforms.iter().find(|p| !used.contains(p.name.as_str())) {
                let mut wider = s.clone();
                wider.assignment.push(("ghost".into(), extra.name.clone()));
                prop_assert!(eval.availability(&wider) <= a);
            }
        }
    }

    #[test]
    fn response_time_is_a_sum_of_edges(seed in any::<u64>()) {
        let m = random_model(seed, &RandomModelConfig::default());
        let eval = ScenarioEvaluator::new(&m);
        for s in eval.enumerate().into_iter().take(20) {
            let mut total = 0.0;
            for d in eval.dependencies() {
                let from = s.host(&d.consumer).unwrap();
                let to = match &d.provider {
                    Endpoint::Component(c) => s.host(c).unwrap(),
                    Endpoint::Platform(p) => p.as_str(),
                };
                let host = m.platform(to).unwrap();
                let p_time = match &d.provider {
                    Endpoint::Component(c) => m.component(c).unwrap().mean_cpu_demand_cycles / (host.cpu_frequency_ghz * 1e9) * 1000.0,
                    Endpoint::Platform(_) => host.device().map_or(0.0, |dev| dev.energy.sense_duration_ms),
                };
                total += shortest_path_latency(&m, from, to).unwrap().latency_ms + p_time;
            }
            let got = eval.response_time(&s).unwrap();
            prop_assert!((got - total).abs() <= 1e-9 * total.max(1.0));
        }
    }
}
