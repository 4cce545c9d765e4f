//! Turns the syntax tree into model declarations, checking the closed
//! keyword set and attribute types.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{Attr, Block, Item, Value, ValueKind};
use super::condition::parse_condition_syntax;
use crate::diag::{Diagnostic, ElementKind, SourceMap, SourceSpan};
use crate::model::ApplicationDecl;
use crate::model::{
    Component, DataSource, Declarations, DeviceEnergyProfile, DeviceSpec, EventRequest,
    ExecutionModuleDecl, GeoLocation, InterfaceDecl, MessageType, NetworkLink, PeriodicRequest,
    PhysicalEntity, Platform, PlatformKind, RequiredPort, ScalarKind, ServiceContract, ServicePort,
    SimConfig, Spanned, SystemDecl, Task, TaskKind, DEFAULT_DEPLETION_THRESHOLD_MAH,
};

const TOP_LEVEL: &[&str] = &[
    "system",
    "entity",
    "interface",
    "contract",
    "cloud",
    "fog",
    "device",
    "component",
    "application",
    "link",
];

fn stem(key: &str) -> &str {
    key.rsplit_once('_').map_or(key, |(s, _)| s)
}

struct Reader<'a> {
    block: &'a Block,
    attrs: BTreeMap<&'a str, &'a Attr>,
    diags: Vec<Diagnostic>,
}

type Conv<T> = fn(&Value) -> Result<T, String>;

impl<'a> Reader<'a> {
    fn new(block: &'a Block, keys: &[&str], blocks: &[&str]) -> Self {
        let mut diags = Vec::new();
        let mut attrs = BTreeMap::new();
        for item in &block.items {
            match item {
                Item::Attr(attr) => {
                    if !keys.contains(&attr.key.as_str()) {
                        let suggestion = keys
                            .iter()
                            .find(|k| attr.key.contains('_') && stem(k) == stem(&attr.key));
                        let d = match suggestion {
                            Some(k) => Diagnostic::error(
                                "P005",
                                format!(
                                    "unit suffix mismatch: '{}' in '{}' block (expected '{}')",
                                    attr.key, block.keyword, k
                                ),
                            ),
                            None => Diagnostic::error(
                                "P003",
                                format!("unknown attribute '{}' in '{}' block", attr.key, block.keyword),
                            ),
                        };
                        diags.push(d.at(attr.span.clone()));
                    } else if attrs.insert(attr.key.as_str(), attr).is_some() {
                        diags.push(
                            Diagnostic::error("P007", format!("attribute '{}' given twice", attr.key))
                                .at(attr.span.clone()),
                        );
                    }
                }
                Item::Block(sub) => {
                    if !blocks.contains(&sub.keyword.as_str()) {
                        diags.push(
                            Diagnostic::error(
                                "P003",
                                format!(
                                    "unknown block keyword '{}' inside '{}'",
                                    sub.keyword, block.keyword
                                ),
                            )
                            .at(sub.span.clone()),
                        );
                    }
                }
            }
        }
        Self { block, attrs, diags }
    }

    fn sub_blocks(&self, keyword: &'a str) -> impl Iterator<Item = &'a Block> + 'a {
        let block: &'a Block = self.block;
        block.items.iter().filter_map(move |i| match i {
            Item::Block(b) if b.keyword == keyword => Some(b),
            _ => None,
        })
    }

    fn opt<T>(&mut self, key: &str, conv: Conv<T>) -> Option<T> {
        let attr = self.attrs.get(key)?;
        match conv(&attr.value) {
            Ok(v) => Some(v),
            Err(msg) => {
                self.diags.push(
                    Diagnostic::error("P004", format!("type mismatch for '{key}': {msg}"))
                        .at(attr.value.span.clone()),
                );
                None
            }
        }
    }

    fn req<T>(&mut self, key: &str, conv: Conv<T>) -> Option<T> {
        if !self.attrs.contains_key(key) {
            self.diags.push(
                Diagnostic::error(
                    "P006",
                    format!("missing attribute '{key}' in '{}' block", self.block.keyword),
                )
                .at(self.block.span.clone()),
            );
            return None;
        }
        self.opt(key, conv)
    }

    fn label(&mut self) -> Option<String> {
        match self.block.labels.as_slice() {
            [name] => Some(name.clone()),
            _ => {
                self.diags.push(
                    Diagnostic::error(
                        "P002",
                        format!("'{}' block needs exactly one quoted name", self.block.keyword),
                    )
                    .at(self.block.span.clone()),
                );
                None
            }
        }
    }

    fn no_label(&mut self) {
        if !self.block.labels.is_empty() {
            self.diags.push(
                Diagnostic::error("P002", format!("'{}' block takes no name", self.block.keyword))
                    .at(self.block.span.clone()),
            );
        }
    }
}

fn as_f64(v: &Value) -> Result<f64, String> {
    match &v.kind {
        ValueKind::Num(raw) => raw
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("'{raw}' is not a finite number")),
        other => Err(format!("expected number, found {}", other.describe())),
    }
}

fn as_u64(v: &Value) -> Result<u64, String> {
    match &v.kind {
        ValueKind::Num(raw) => {
            let digits = raw.strip_prefix('+').unwrap_or(raw);
            digits
                .parse::<u64>()
                .map_err(|_| format!("expected non-negative integer, found {raw}"))
        }
        other => Err(format!("expected integer, found {}", other.describe())),
    }
}

fn as_u32(v: &Value) -> Result<u32, String> {
    as_u64(v).and_then(|x| u32::try_from(x).map_err(|_| format!("{x} is too large")))
}

fn as_string(v: &Value) -> Result<String, String> {
    match &v.kind {
        ValueKind::Str(s) => Ok(s.clone()),
        other => Err(format!("expected quoted string, found {}", other.describe())),
    }
}

fn as_ident(v: &Value) -> Result<String, String> {
    match &v.kind {
        ValueKind::Ident(s) => Ok(s.clone()),
        other => Err(format!("expected keyword, found {}", other.describe())),
    }
}

fn as_string_list(v: &Value) -> Result<Vec<String>, String> {
    match &v.kind {
        ValueKind::List(items) => items.iter().map(as_string).collect(),
        other => Err(format!("expected list of strings, found {}", other.describe())),
    }
}

fn as_string_set(v: &Value) -> Result<BTreeSet<String>, String> {
    as_string_list(v).map(|l| l.into_iter().collect())
}

fn as_location(v: &Value) -> Result<GeoLocation, String> {
    match &v.kind {
        ValueKind::Tuple(items) if items.len() == 2 => {
            GeoLocation::new(as_f64(&items[0])?, as_f64(&items[1])?)
        }
        other => Err(format!("expected (latitude, longitude), found {}", other.describe())),
    }
}

fn as_task_kind(v: &Value) -> Result<TaskKind, String> {
    let word = as_ident(v)?;
    TaskKind::from_keyword(&word).ok_or_else(|| {
        format!("unknown task kind '{word}' (sense, actuate, transmit, receive, compute)")
    })
}

fn as_scalar_kind(v: &Value) -> Result<ScalarKind, String> {
    let word = as_ident(v)?;
    ScalarKind::from_keyword(&word)
        .ok_or_else(|| format!("unknown field kind '{word}' (real, integer, text, boolean)"))
}

fn as_data_source(v: &Value) -> Result<DataSource, String> {
    let ValueKind::Call { name, args, seed } = &v.kind else {
        return Err(format!(
            "expected constant(..), uniform(..) or trace(..), found {}",
            v.kind.describe()
        ));
    };
    let seed = seed.as_deref().map(as_u64).transpose()?;
    if seed.is_some() && name != "uniform" {
        return Err(format!("'seed' only applies to uniform, not {name}"));
    }
    let nums = args.iter().map(as_f64).collect::<Result<Vec<_>, _>>()?;
    match (name.as_str(), nums.as_slice()) {
        ("constant", [x]) => Ok(DataSource::Constant(*x)),
        ("uniform", [lo, hi]) => Ok(DataSource::Uniform {
            lo: *lo,
            hi: *hi,
            seed,
        }),
        ("trace", values) if !values.is_empty() => Ok(DataSource::Trace(values.to_vec())),
        ("constant", _) => Err("constant takes one value".into()),
        ("uniform", _) => Err("uniform takes two bounds".into()),
        ("trace", _) => Err("trace needs at least one value".into()),
        (other, _) => Err(format!("unknown data source '{other}'")),
    }
}

fn as_condition(v: &Value) -> Result<crate::model::ConditionExpr, String> {
    let text = as_string(v)?;
    parse_condition_syntax(&text).map_err(|e| e.to_string())
}

pub(crate) struct Decoded {
    pub decls: Declarations,
    pub sources: SourceMap,
    pub diagnostics: Vec<Diagnostic>,
}

pub(crate) fn decode(blocks: &[Block], file: &str) -> Decoded {
    let mut out = Decoded {
        decls: Declarations::default(),
        sources: SourceMap::default(),
        diagnostics: Vec::new(),
    };
    for block in blocks {
        match block.keyword.as_str() {
            "system" => decode_system(block, &mut out),
            "entity" => decode_entity(block, &mut out),
            "interface" => decode_interface(block, &mut out),
            "contract" => decode_contract(block, &mut out),
            "cloud" | "fog" | "device" => decode_platform(block, &mut out),
            "component" => decode_component(block, &mut out),
            "application" => decode_application(block, &mut out),
            "link" => decode_link(block, &mut out),
            other => out.diagnostics.push(
                Diagnostic::error(
                    "P003",
                    format!(
                        "unknown block keyword '{other}' (expected one of: {})",
                        TOP_LEVEL.join(", ")
                    ),
                )
                .at(block.span.clone()),
            ),
        }
    }
    if out.decls.system.is_none() && !out.diagnostics.iter().any(Diagnostic::is_error) {
        out.diagnostics.push(
            Diagnostic::error("P002", "expected 'system' block").at(SourceSpan::new(file, 1, 1)),
        );
    }
    out
}

fn finish<T>(reader: Reader<'_>, out: &mut Decoded, value: Option<T>) -> Option<T> {
    let ok = reader.diags.is_empty();
    out.diagnostics.extend(reader.diags);
    value.filter(|_| ok)
}

fn decode_system(block: &Block, out: &mut Decoded) {
    let mut r = Reader::new(block, &["simulation_time", "tick_seconds", "seed"], &["module"]);
    let name = r.label();
    let simulation_time = r.opt("simulation_time", as_u64).unwrap_or(0);
    let tick_seconds = r.opt("tick_seconds", as_f64).unwrap_or(SimConfig::default().tick_seconds);
    let rng_seed = r.opt("seed", as_u64).unwrap_or(0);
    let mut execution_modules = Vec::new();
    for m in r.sub_blocks("module") {
        let mut mr = Reader::new(m, &["language", "code"], &[]);
        let module = mr.label();
        let language = mr.opt("language", as_string).unwrap_or_default();
        let code = mr.opt("code", as_string).unwrap_or_default();
        if let Some(module) = finish(mr, out, module) {
            out.sources.insert(ElementKind::Module, &module, m.span.clone());
            execution_modules.push(ExecutionModuleDecl {
                module,
                language,
                code,
            });
        }
    }
    if let Some(name) = finish(r, out, name) {
        if let Some(prev) = &out.decls.system {
            out.diagnostics.push(
                Diagnostic::error(
                    "P002",
                    format!("second 'system' block (first is \"{}\")", prev.value.name),
                )
                .at(block.span.clone()),
            );
            return;
        }
        out.sources.insert(ElementKind::System, &name, block.span.clone());
        out.decls.system = Some(Spanned::new(
            SystemDecl {
                name,
                config: SimConfig {
                    simulation_time,
                    tick_seconds,
                    global_timer: 0,
                    execution_modules,
                    rng_seed,
                },
            },
            Some(block.span.clone()),
        ));
    }
}

fn decode_entity(block: &Block, out: &mut Decoded) {
    let mut r = Reader::new(block, &["location"], &[]);
    let name = r.label();
    let location = r.req("location", as_location);
    let value = name.zip(location);
    if let Some((name, location)) = finish(r, out, value) {
        out.sources.insert(ElementKind::Entity, &name, block.span.clone());
        out.decls.entities.push(Spanned::new(
            PhysicalEntity { name, location },
            Some(block.span.clone()),
        ));
    }
}

fn decode_interface(block: &Block, out: &mut Decoded) {
    let mut r = Reader::new(block, &[], &[]);
    let name = r.label();
    if let Some(name) = finish(r, out, name) {
        out.sources.insert(ElementKind::Interface, &name, block.span.clone());
        out.decls
            .interfaces
            .push(Spanned::new(InterfaceDecl { name }, Some(block.span.clone())));
    }
}

fn decode_contract(block: &Block, out: &mut Decoded) {
    let mut r = Reader::new(block, &["provider", "consumer"], &["task", "message"]);
    let name = r.label();
    let provider = r.req("provider", as_string);
    let consumer = r.req("consumer", as_string);
    let mut tasks = Vec::new();
    for t in r.sub_blocks("task") {
        let mut tr = Reader::new(t, &["kind"], &[]);
        let tname = tr.label();
        let kind = tr.req("kind", as_task_kind);
        if let Some((name, kind)) = finish(tr, out, tname.zip(kind)) {
            tasks.push(Task { name, kind });
        }
    }
    let mut message_type = MessageType::default();
    for (i, m) in r.sub_blocks("message").enumerate() {
        if i > 0 {
            out.diagnostics.push(
                Diagnostic::error("P002", "contract declares more than one message type")
                    .at(m.span.clone()),
            );
            continue;
        }
        let mut fields = Vec::new();
        for item in &m.items {
            match item {
                Item::Attr(a) => match as_scalar_kind(&a.value) {
                    Ok(kind) if fields.iter().all(|(f, _)| f != &a.key) => {
                        fields.push((a.key.clone(), kind))
                    }
                    Ok(_) => out.diagnostics.push(
                        Diagnostic::error("P007", format!("message field '{}' given twice", a.key))
                            .at(a.span.clone()),
                    ),
                    Err(e) => out.diagnostics.push(
                        Diagnostic::error("P004", format!("type mismatch for '{}': {e}", a.key))
                            .at(a.value.span.clone()),
                    ),
                },
                Item::Block(b) => out.diagnostics.push(
                    Diagnostic::error("P003", format!("unknown block keyword '{}' inside 'message'", b.keyword))
                        .at(b.span.clone()),
                ),
            }
        }
        let mname = match m.labels.as_slice() {
            [n] => n.clone(),
            _ => {
                out.diagnostics.push(
                    Diagnostic::error("P002", "'message' block needs exactly one quoted name")
                        .at(m.span.clone()),
                );
                String::new()
            }
        };
        message_type = MessageType {
            name: mname,
            fields,
        };
    }
    let value = match (name, provider, consumer) {
        (Some(n), Some(p), Some(c)) => Some((n, p, c)),
        _ => None,
    };
    if let Some((name, provider_interface, consumer_interface)) = finish(r, out, value) {
        out.sources.insert(ElementKind::Contract, &name, block.span.clone());
        out.decls.contracts.push(Spanned::new(
            ServiceContract {
                name,
                provider_interface,
                consumer_interface,
                tasks,
                message_type,
            },
            Some(block.span.clone()),
        ));
    }
}

fn decode_service(block: &Block, out: &mut Decoded) -> Option<ServicePort> {
    let mut r = Reader::new(block, &["interface", "protocol"], &[]);
    let name = r.label();
    let interface = r.req("interface", as_string);
    let protocol = r.req("protocol", as_string);
    let value = match (name, interface, protocol) {
        (Some(n), Some(i), Some(p)) => Some(ServicePort::new(n, i, p)),
        _ => None,
    };
    finish(r, out, value)
}

const ENERGY_KEYS: &[&str] = &[
    "battery_mah",
    "supply_v",
    "sense_current_ma",
    "sense_duration_ms",
    "packet_kb",
    "e_elec_nj_per_bit",
    "e_amp_pj_per_bit_m",
    "loss_exponent",
    "depletion_threshold_mah",
];

fn decode_energy(block: &Block, out: &mut Decoded) -> Option<DeviceEnergyProfile> {
    let mut r = Reader::new(block, ENERGY_KEYS, &[]);
    r.no_label();
    let nums: Vec<Option<f64>> = ENERGY_KEYS[..7].iter().map(|k| r.req(k, as_f64)).collect();
    let n = r.req("loss_exponent", as_u32);
    let threshold = r
        .opt("depletion_threshold_mah", as_f64)
        .unwrap_or(DEFAULT_DEPLETION_THRESHOLD_MAH);
    let value = match (nums.as_slice(), n) {
        (
            [Some(battery), Some(v), Some(i), Some(t), Some(b), Some(elec), Some(amp)],
            Some(n),
        ) => Some(
            DeviceEnergyProfile::new(*battery, *v, *i, *t, *b, *elec, *amp, n).with_threshold(threshold),
        ),
        _ => None,
    };
    finish(r, out, value)
}

fn decode_platform(block: &Block, out: &mut Decoded) {
    let is_device = block.keyword == "device";
    let mut keys = vec![
        "location",
        "cpu_frequency_ghz",
        "software",
        "mtbf_hours",
        "mttr_hours",
    ];
    let mut subs = vec!["service"];
    if is_device {
        keys.extend(["attached_to", "data"]);
        subs.push("energy");
    }
    let mut r = Reader::new(block, &keys, &subs);
    let name = r.label();
    let location = r.req("location", as_location);
    let cpu = r.req("cpu_frequency_ghz", as_f64);
    let software = r.opt("software", as_string_set).unwrap_or_default();
    let mtbf = r.req("mtbf_hours", as_f64);
    let mttr = r.req("mttr_hours", as_f64);
    let services: Vec<Option<ServicePort>> =
        r.sub_blocks("service").map(|s| decode_service(s, out)).collect();
    let kind = match block.keyword.as_str() {
        "cloud" => Some(PlatformKind::Cloud),
        "fog" => Some(PlatformKind::Fog),
        _ => {
            let attached = r.req("attached_to", as_string);
            let data = r.req("data", as_data_source);
            let energies: Vec<&Block> = r.sub_blocks("energy").collect();
            let energy = match energies.as_slice() {
                [e] => decode_energy(e, out),
                [] => {
                    r.diags.push(
                        Diagnostic::error("P006", "missing 'energy' block in 'device' block")
                            .at(block.span.clone()),
                    );
                    None
                }
                [_, second, ..] => {
                    r.diags.push(
                        Diagnostic::error("P007", "'energy' block given twice").at(second.span.clone()),
                    );
                    None
                }
            };
            match (attached, energy, data) {
                (Some(attached_to), Some(energy), Some(data_source)) => {
                    Some(PlatformKind::Device(DeviceSpec {
                        attached_to,
                        energy,
                        data_source,
                    }))
                }
                _ => None,
            }
        }
    };
    let services: Option<Vec<ServicePort>> = services.into_iter().collect();
    let value = match (name, location, cpu, mtbf, mttr, kind, services) {
        (Some(name), Some(location), Some(cpu), Some(mtbf), Some(mttr), Some(kind), Some(services)) => {
            Some(Platform {
                name,
                kind,
                location,
                cpu_frequency_ghz: cpu,
                provided_software: software,
                mtbf_hours: mtbf,
                mttr_hours: mttr,
                services,
            })
        }
        _ => None,
    };
    if let Some(p) = finish(r, out, value) {
        out.sources.insert(ElementKind::Platform, &p.name, block.span.clone());
        out.decls.platforms.push(Spanned::new(p, Some(block.span.clone())));
    }
}

fn decode_component(block: &Block, out: &mut Decoded) {
    let mut r = Reader::new(
        block,
        &["mean_cpu_demand_cycles", "software", "host"],
        &["requires", "provides", "periodic", "event"],
    );
    let name = r.label();
    let cycles = r.req("mean_cpu_demand_cycles", as_f64);
    let software = r.opt("software", as_string_set).unwrap_or_default();
    let host = r.opt("host", as_string);
    let mut ok = true;

    let mut required = Vec::new();
    for b in r.sub_blocks("requires") {
        let mut rr = Reader::new(b, &["interface", "protocol", "provider"], &[]);
        let port = rr.label();
        let interface = rr.req("interface", as_string);
        let protocol = rr.req("protocol", as_string);
        let provider = rr.opt("provider", as_string);
        let value = match (port, interface, protocol) {
            (Some(name), Some(interface), Some(protocol)) => Some(RequiredPort {
                name,
                interface,
                protocol,
                provider,
            }),
            _ => None,
        };
        match finish(rr, out, value) {
            Some(v) => required.push(v),
            None => ok = false,
        }
    }

    let mut provided = None;
    for (i, b) in r.sub_blocks("provides").enumerate() {
        if i > 0 {
            out.diagnostics
                .push(Diagnostic::error("P007", "component provides more than one service").at(b.span.clone()));
            ok = false;
            continue;
        }
        match decode_service(b, out) {
            Some(s) => provided = Some(s),
            None => ok = false,
        }
    }

    let mut periodic = None;
    for (i, b) in r.sub_blocks("periodic").enumerate() {
        let mut pr = Reader::new(b, &["task", "interval_ticks", "provider"], &[]);
        pr.no_label();
        if i > 0 {
            pr.diags
                .push(Diagnostic::error("P007", "'periodic' block given twice").at(b.span.clone()));
        }
        let task = pr.req("task", as_string);
        let interval = pr.req("interval_ticks", as_u64);
        let provider = pr.opt("provider", as_string);
        let value = task.zip(interval).map(|(task, interval_ticks)| PeriodicRequest {
            task,
            interval_ticks,
            local_timer: 0,
            provider,
        });
        match finish(pr, out, value) {
            Some(v) => periodic = Some(v),
            None => ok = false,
        }
    }

    let mut event = None;
    for (i, b) in r.sub_blocks("event").enumerate() {
        let mut er = Reader::new(b, &["task", "condition", "provider"], &[]);
        er.no_label();
        if i > 0 {
            er.diags
                .push(Diagnostic::error("P007", "'event' block given twice").at(b.span.clone()));
        }
        let task = er.req("task", as_string);
        let condition = er.req("condition", as_condition);
        let provider = er.opt("provider", as_string);
        let value = task.zip(condition).map(|(task, condition)| EventRequest {
            task,
            condition,
            provider,
        });
        match finish(er, out, value) {
            Some(v) => event = Some(v),
            None => ok = false,
        }
    }

    let value = name.zip(cycles).filter(|_| ok).map(|(name, cycles)| Component {
        name,
        mean_cpu_demand_cycles: cycles,
        required_software: software,
        required_interfaces: required,
        provided_service: provided,
        periodic_request: periodic,
        event_request: event,
        host,
    });
    if let Some(c) = finish(r, out, value) {
        out.sources.insert(ElementKind::Component, &c.name, block.span.clone());
        out.decls.components.push(Spanned::new(c, Some(block.span.clone())));
    }
}

fn decode_application(block: &Block, out: &mut Decoded) {
    let mut r = Reader::new(block, &["region", "components"], &[]);
    let name = r.label();
    let region = r.req("region", as_location);
    let components = r.req("components", as_string_list);
    let value = match (name, region, components) {
        (Some(name), Some(region), Some(components)) => Some(ApplicationDecl {
            name,
            region,
            components,
        }),
        _ => None,
    };
    if let Some(a) = finish(r, out, value) {
        out.sources.insert(ElementKind::Application, &a.name, block.span.clone());
        out.decls.applications.push(Spanned::new(a, Some(block.span.clone())));
    }
}

fn decode_link(block: &Block, out: &mut Decoded) {
    let mut r = Reader::new(block, &["protocol", "latency_ms", "distance_m"], &[]);
    let ends = match block.labels.as_slice() {
        [a, b] => Some((a.clone(), b.clone())),
        _ => {
            r.diags.push(
                Diagnostic::error("P002", "link needs two endpoints: link \"a\" <-> \"b\" { ... }")
                    .at(block.span.clone()),
            );
            None
        }
    };
    let protocol = r.req("protocol", as_string);
    let latency = r.req("latency_ms", as_f64);
    let distance = r.req("distance_m", as_f64);
    let value = match (ends, protocol, latency, distance) {
        (Some((a, b)), Some(protocol), Some(latency_ms), Some(distance_m)) => Some(NetworkLink {
            endpoint_a: a,
            endpoint_b: b,
            protocol,
            latency_ms,
            distance_m,
        }),
        _ => None,
    };
    if let Some(l) = finish(r, out, value) {
        let (a, b) = if l.endpoint_a <= l.endpoint_b {
            (&l.endpoint_a, &l.endpoint_b)
        } else {
            (&l.endpoint_b, &l.endpoint_a)
        };
        out.sources.insert(ElementKind::Link, format!("{a} <-> {b}"), block.span.clone());
        out.decls.links.push(Spanned::new(l, Some(block.span.clone())));
    }
}
