//! Seeded model generators for tests, benchmarks and the scale run.

use std::collections::BTreeSet;

use crate::engine::rng::SimRng;
use crate::model::{
    build_system, ApplicationDecl, CompareOp, Component, ConditionExpr, DataSource, Declarations,
    DeviceEnergyProfile, DeviceSpec, EventRequest, ExecutionModuleDecl, GeoLocation, InterfaceDecl,
    IoTSystemModel, MessageType, NetworkLink, PeriodicRequest, PhysicalEntity, Platform, PlatformKind,
    RequiredPort, ScalarKind, ServiceContract, ServicePort, SimConfig, Spanned, SystemDecl, Task,
    TaskKind,
};

const SOFTWARE: [&str; 3] = ["Java", "Node", "Python"];
const PROTOCOLS: [&str; 3] = ["HTTP", "CoAP", "MQTT"];

fn loc(lat: f64, lon: f64) -> GeoLocation {
    GeoLocation::new(lat, lon).expect("generated coordinates are in range")
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn platform(name: String, kind: PlatformKind, ghz: f64, software: BTreeSet<String>, mtbf: f64, mttr: f64) -> Platform {
    Platform {
        name,
        kind,
        location: loc(45.4, 11.87),
        cpu_frequency_ghz: ghz,
        provided_software: software,
        mtbf_hours: mtbf,
        mttr_hours: mttr,
        services: Vec::new(),
    }
}

fn sensing_contract(name: &str, interface: &str, task: &str, field: &str) -> ServiceContract {
    ServiceContract {
        name: name.into(),
        provider_interface: interface.into(),
        consumer_interface: format!("{interface}Client"),
        tasks: vec![Task {
            name: task.into(),
            kind: TaskKind::Sense,
        }],
        message_type: MessageType {
            name: format!("{interface}Reading"),
            fields: vec![(field.into(), ScalarKind::Real)],
        },
    }
}

fn link(a: &str, b: &str, protocol: &str, latency_ms: f64, distance_m: f64) -> NetworkLink {
    NetworkLink {
        endpoint_a: a.into(),
        endpoint_b: b.into(),
        protocol: protocol.into(),
        latency_ms,
        distance_m,
    }
}

fn build(decls: Declarations) -> IoTSystemModel {
    match build_system(decls) {
        Ok(m) => m,
        Err(errors) => panic!("generator produced an invalid model: {errors:?}"),
    }
}

fn bare<T>(items: Vec<T>) -> Vec<Spanned<T>> {
    items.into_iter().map(Spanned::bare).collect()
}

/// Size limits for [`random_model`].
#[derive(Debug, Clone)]
pub struct RandomModelConfig {
    pub max_components: usize,
    pub max_platforms: usize,
    pub link_probability: f64,
}

impl Default for RandomModelConfig {
    fn default() -> Self {
        Self {
            max_components: 5,
            max_platforms: 6,
            link_probability: 0.5,
        }
    }
}

/// A structurally valid model with random platforms, links, software and
/// dependencies. Contract agreement is not guaranteed.
pub fn random_model(seed: u64, cfg: &RandomModelConfig) -> IoTSystemModel {
    let mut rng = SimRng::new(seed);
    let pick = |rng: &mut SimRng, items: &[&'static str]| items[rng.below(items.len() as u64) as usize];

    let n_platforms = 1 + rng.below(cfg.max_platforms.max(1) as u64) as usize;
    let n_components = 1 + rng.below(cfg.max_components.max(1) as u64) as usize;
    let n_contracts = 1 + rng.below(2) as usize;

    let contracts: Vec<ServiceContract> = (0..n_contracts)
        .map(|k| sensing_contract(&format!("Read{k}"), &format!("Sensor{k}"), &format!("Sense{k}"), &format!("value_{k}")))
        .collect();

    let mut platforms = Vec::with_capacity(n_platforms);
    let mut offered: Vec<usize> = Vec::new();
    for i in 0..n_platforms {
        let software: BTreeSet<String> = SOFTWARE.iter().filter(|_| rng.chance(0.6)).map(|s| s.to_string()).collect();
        let mtbf = round3(rng.uniform(10.0, 10_000.0));
        let mttr = round3(rng.uniform(0.0, 48.0));
        let ghz = round3(rng.uniform(0.5, 4.0));
        let p = match rng.below(3) {
            0 => platform(format!("cloud_{i}"), PlatformKind::Cloud, ghz, software, mtbf, mttr),
            1 => platform(format!("fog_{i}"), PlatformKind::Fog, ghz, software, mtbf, mttr),
            _ => {
                let k = rng.below(n_contracts as u64) as usize;
                let data_source = match rng.below(4) {
                    0 => DataSource::Constant(round3(rng.uniform(0.0, 50.0))),
                    1 => DataSource::Uniform { lo: 0.0, hi: 40.0, seed: None },
                    2 => DataSource::Uniform { lo: 5.0, hi: 25.0, seed: Some(rng.below(1000)) },
                    _ => DataSource::Trace((0..1 + rng.below(4)).map(|_| round3(rng.uniform(0.0, 30.0))).collect()),
                };
                let energy = DeviceEnergyProfile::new(
                    round3(rng.uniform(6.0, 200.0)),
                    3.0,
                    round3(rng.uniform(1.0, 30.0)),
                    round3(rng.uniform(1.0, 20.0)),
                    1.0 + rng.below(4) as f64,
                    50.0,
                    100.0,
                    2 + rng.below(3) as u32,
                );
                let mut p = platform(
                    format!("dev_{i}"),
                    PlatformKind::Device(DeviceSpec {
                        attached_to: "site".into(),
                        energy,
                        data_source,
                    }),
                    0.016,
                    software,
                    mtbf,
                    mttr,
                );
                p.services.push(ServicePort::new("reading", format!("Sensor{k}"), "CoAP"));
                offered.push(k);
                p
            }
        };
        platforms.push(p);
    }

    let mut links = Vec::new();
    for i in 0..n_platforms {
        for j in i + 1..n_platforms {
            if rng.chance(cfg.link_probability) {
                let protocol = pick(&mut rng, &PROTOCOLS);
                links.push(link(
                    &platforms[i].name,
                    &platforms[j].name,
                    protocol,
                    round3(rng.uniform(1.0, 200.0)),
                    round3(rng.uniform(1.0, 100.0)),
                ));
            }
        }
    }

    let mut interfaces = Vec::new();
    let mut components = Vec::with_capacity(n_components);
    for i in 0..n_components {
        let mut c = Component::new(format!("c{i}"), round3(rng.uniform(100.0, 5000.0)));
        c.required_software = SOFTWARE.iter().filter(|_| rng.chance(0.3)).map(|s| s.to_string()).collect();
        c.provided_service = Some(ServicePort::new("api", format!("Api{i}"), pick(&mut rng, &PROTOCOLS)));
        interfaces.push(InterfaceDecl { name: format!("Api{i}") });
        for j in 0..i {
            if rng.chance(0.4) {
                c.required_interfaces.push(RequiredPort {
                    name: format!("to_c{j}"),
                    interface: format!("Api{j}"),
                    protocol: pick(&mut rng, &PROTOCOLS).into(),
                    provider: None,
                });
            }
        }
        if !offered.is_empty() && rng.chance(0.6) {
            let k = offered[rng.below(offered.len() as u64) as usize];
            c.required_interfaces.push(RequiredPort {
                name: "sensor".into(),
                interface: format!("Sensor{k}"),
                protocol: pick(&mut rng, &PROTOCOLS).into(),
                provider: None,
            });
            if rng.chance(0.7) {
                c.periodic_request = Some(PeriodicRequest {
                    task: format!("Sense{k}"),
                    interval_ticks: 1 + rng.below(6),
                    local_timer: 0,
                    provider: None,
                });
            } else {
                c.event_request = Some(EventRequest {
                    task: format!("Sense{k}"),
                    condition: ConditionExpr {
                        field: format!("value_{k}"),
                        op: [CompareOp::Gt, CompareOp::Le, CompareOp::Ne][rng.below(3) as usize],
                        threshold: round3(rng.uniform(0.0, 30.0)),
                    },
                    provider: None,
                });
            }
        }
        components.push(c);
    }

    let split = 1 + rng.below(n_components as u64) as usize;
    let mut applications = vec![ApplicationDecl {
        name: "app_a".into(),
        region: loc(45.4, 11.87),
        components: components[..split].iter().map(|c| c.name.clone()).collect(),
    }];
    if split < n_components {
        applications.push(ApplicationDecl {
            name: "app_b".into(),
            region: loc(45.41, 11.88),
            components: components[split..].iter().map(|c| c.name.clone()).collect(),
        });
    }

    let mut execution_modules = Vec::new();
    if rng.chance(0.3) {
        execution_modules.push(ExecutionModuleDecl {
            module: "DeploymentScenarios".into(),
            language: "Rust".into(),
            code: "builtin".into(),
        });
    }
    build(Declarations {
        system: Some(Spanned::bare(SystemDecl {
            name: format!("random_{seed}"),
            config: SimConfig {
                simulation_time: rng.below(200),
                tick_seconds: 60.0,
                global_timer: 0,
                execution_modules,
                rng_seed: rng.next_u64(),
            },
        })),
        entities: bare(vec![PhysicalEntity {
            name: "site".into(),
            location: loc(45.4, 11.87),
        }]),
        interfaces: bare(interfaces),
        contracts: bare(contracts),
        platforms: bare(platforms),
        components: bare(components),
        applications: bare(applications),
        links: bare(links),
    })
}

/// Component demand and software of the four street-monitoring applications.
const SCALE_COMPONENTS: [(&str, &str, f64, &[&str]); 12] = [
    ("LM", "MonitorLM", 800.0, &[".NET", "Python"]),
    ("LM", "AnalyticsLM", 3500.0, &["Spark", "C++"]),
    ("LM", "APILM", 500.0, &["JBoss"]),
    ("TM", "MonitorTM", 650.0, &[".NET"]),
    ("TM", "AnalyticsTM", 3000.0, &["Python", "MySQL"]),
    ("TM", "APITM", 550.0, &["Python"]),
    ("HM", "MonitorHM", 700.0, &["Java"]),
    ("HM", "AnalyticsHM", 2500.0, &["Anaconda"]),
    ("HM", "APIHM", 490.0, &["JBoss"]),
    ("AM", "MonitorAM", 685.0, &["Java"]),
    ("AM", "AnalyticsAM", 2530.0, &["Spark"]),
    ("AM", "APIAM", 250.0, &["JBoss"]),
];

/// Sensor families per application: (application, interface, field, count).
const SCALE_SENSORS: [(&str, &str, &str, usize); 4] = [
    ("LM", "LightSensor", "lux", 15),
    ("TM", "TemperatureSensor", "temp_c", 12),
    ("HM", "HumiditySensor", "humidity_pct", 13),
    ("AM", "BenzeneSensor", "benzene_ugm3", 5),
];

/// Four three-tier monitoring applications over 2 clouds, 3 fogs and 45
/// sensing devices. Software placement admits 972 deployments; the seed
/// varies device distances, latencies and which device each API reads.
pub fn scale_model(seed: u64) -> IoTSystemModel {
    let mut rng = SimRng::new(seed);
    let mut platforms = vec![
        platform("Michigan".into(), PlatformKind::Cloud, 3.0, set(&["Spark", "C++", "Anaconda"]), 4380.0, 2.0),
        platform("Stuttgart".into(), PlatformKind::Cloud, 3.2, set(&["Python", "MySQL"]), 4380.0, 4.0),
        platform("fog_1".into(), PlatformKind::Fog, 1.2, set(&[".NET", "Python", "JBoss", "Java"]), 2190.0, 6.0),
        platform("fog_2".into(), PlatformKind::Fog, 1.2, set(&["JBoss", "Java"]), 2190.0, 3.0),
        platform("fog_3".into(), PlatformKind::Fog, 1.5, set(&[".NET", "JBoss", "Java"]), 1460.0, 8.0),
    ];
    let fogs = ["fog_1", "fog_2", "fog_3"];
    let mut links = vec![
        link("Michigan", "Stuttgart", "HTTP", 120.0, 6_900_000.0),
        link("fog_1", "fog_2", "HTTP", 4.0, 450.0),
        link("fog_2", "fog_3", "HTTP", 4.0, 700.0),
    ];
    for f in fogs {
        links.push(link(f, "Stuttgart", "HTTP", round3(rng.uniform(45.0, 55.0)), 520_000.0));
        links.push(link(f, "Michigan", "HTTP", round3(rng.uniform(150.0, 170.0)), 7_400_000.0));
    }

    let mut contracts = Vec::new();
    let mut entities = Vec::new();
    let mut device_names: Vec<Vec<String>> = Vec::new();
    for (app, interface, field, count) in SCALE_SENSORS {
        contracts.push(sensing_contract(&format!("Request{interface}"), interface, &format!("Sense{app}"), field));
        let mut names = Vec::with_capacity(count);
        for i in 1..=count {
            let name = format!("{}_{i:02}", interface.trim_end_matches("Sensor").to_lowercase());
            let pole = format!("pole_{name}");
            entities.push(PhysicalEntity {
                name: pole.clone(),
                location: loc(45.40 + round3(rng.uniform(0.0, 0.02)), 11.86 + round3(rng.uniform(0.0, 0.03))),
            });
            let energy = DeviceEnergyProfile::new(40.0, 3.0, 25.0, 10.0, 2.0, 50.0, 100.0, 2);
            let mut p = platform(
                name.clone(),
                PlatformKind::Device(DeviceSpec {
                    attached_to: pole,
                    energy,
                    data_source: DataSource::Uniform { lo: 0.0, hi: 100.0, seed: None },
                }),
                0.016,
                BTreeSet::new(),
                8760.0,
                24.0,
            );
            p.services.push(ServicePort::new("reading", interface, "CoAP"));
            platforms.push(p);
            let first = rng.below(3) as usize;
            links.push(link(&name, fogs[first], "CoAP", round3(rng.uniform(2.0, 12.0)), round3(rng.uniform(1.0, 50.0))));
            if rng.chance(0.5) {
                let second = (first + 1 + rng.below(2) as usize) % 3;
                links.push(link(&name, fogs[second], "CoAP", round3(rng.uniform(2.0, 12.0)), round3(rng.uniform(1.0, 50.0))));
            }
            names.push(name);
        }
        device_names.push(names);
    }

    let mut interfaces = Vec::new();
    let mut components = Vec::new();
    for (idx, (app, name, cycles, software)) in SCALE_COMPONENTS.iter().enumerate() {
        let mut c = Component::new(*name, *cycles);
        c.required_software = set(software);
        let family = idx / 3;
        match idx % 3 {
            0 => {
                c.provided_service = Some(ServicePort::new("monitor", format!("Monitor{app}"), "HTTP"));
                interfaces.push(InterfaceDecl { name: format!("Monitor{app}") });
                c.required_interfaces.push(RequiredPort {
                    name: "api".into(),
                    interface: format!("Api{app}"),
                    protocol: "HTTP".into(),
                    provider: None,
                });
            }
            1 => c.required_interfaces.push(RequiredPort {
                name: "monitor".into(),
                interface: format!("Monitor{app}"),
                protocol: "HTTP".into(),
                provider: None,
            }),
            _ => {
                c.provided_service = Some(ServicePort::new("api", format!("Api{app}"), "HTTP"));
                interfaces.push(InterfaceDecl { name: format!("Api{app}") });
                let devices = &device_names[family];
                let device = devices[rng.below(devices.len() as u64) as usize].clone();
                let (_, interface, _, _) = SCALE_SENSORS[family];
                c.required_interfaces.push(RequiredPort {
                    name: "sensor".into(),
                    interface: interface.into(),
                    protocol: "HTTP".into(),
                    provider: Some(device.clone()),
                });
                c.periodic_request = Some(PeriodicRequest {
                    task: format!("Sense{app}"),
                    interval_ticks: 5,
                    local_timer: 0,
                    provider: Some(device),
                });
            }
        }
        components.push(c);
    }
    let applications = ["LM", "TM", "HM", "AM"]
        .iter()
        .map(|app| ApplicationDecl {
            name: app.to_string(),
            region: loc(45.4064, 11.8768),
            components: SCALE_COMPONENTS
                .iter()
                .filter(|(a, ..)| a == app)
                .map(|(_, n, ..)| n.to_string())
                .collect(),
        })
        .collect();

    build(Declarations {
        system: Some(Spanned::bare(SystemDecl {
            name: "PadovaStreets".into(),
            config: SimConfig {
                simulation_time: 10_000,
                rng_seed: seed,
                ..SimConfig::default()
            },
        })),
        entities: bare(entities),
        interfaces: bare(interfaces),
        contracts: bare(contracts),
        platforms: bare(platforms),
        components: bare(components),
        applications: bare(applications),
        links: bare(links),
    })
}

/// One fog-hosted reader polling one device at a fixed link distance.
/// Sensing is the only drain; the data source is constant.
pub fn lifetime_model(
    profile: DeviceEnergyProfile,
    interval_ticks: u64,
    distance_m: f64,
    simulation_time: u64,
) -> IoTSystemModel {
    let mut gateway = platform("gateway".into(), PlatformKind::Fog, 1.0, BTreeSet::new(), 1000.0, 1.0);
    gateway.location = loc(0.0, 0.0);
    let mut probe = platform(
        "probe".into(),
        PlatformKind::Device(DeviceSpec {
            attached_to: "post".into(),
            energy: profile,
            data_source: DataSource::Constant(1.0),
        }),
        0.016,
        BTreeSet::new(),
        1000.0,
        1.0,
    );
    probe.services.push(ServicePort::new("reading", "Probe", "CoAP"));
    let mut reader = Component::new("Reader", 100.0);
    reader.host = Some("gateway".into());
    reader.required_interfaces.push(RequiredPort {
        name: "probe".into(),
        interface: "Probe".into(),
        protocol: "CoAP".into(),
        provider: None,
    });
    reader.periodic_request = Some(PeriodicRequest {
        task: "Sense".into(),
        interval_ticks,
        local_timer: 0,
        provider: None,
    });
    build(Declarations {
        system: Some(Spanned::bare(SystemDecl {
            name: "lifetime".into(),
            config: SimConfig {
                simulation_time,
                ..SimConfig::default()
            },
        })),
        entities: bare(vec![PhysicalEntity {
            name: "post".into(),
            location: loc(0.0, 0.0),
        }]),
        interfaces: Vec::new(),
        contracts: bare(vec![sensing_contract("ReadProbe", "Probe", "Sense", "value")]),
        platforms: bare(vec![gateway, probe]),
        components: bare(vec![reader]),
        applications: bare(vec![ApplicationDecl {
            name: "app".into(),
            region: loc(0.0, 0.0),
            components: vec!["Reader".into()],
        }]),
        links: bare(vec![link("gateway", "probe", "CoAP", 1.0, distance_m)]),
    })
}
