use std::collections::BTreeSet;
use std::fmt::Write;

use crate::model::{
    Component, DataSource, IoTSystemModel, Platform, PlatformKind, ServicePort, Tier,
};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Shortest decimal text that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x}")
}

fn string_list<'a>(items: impl IntoIterator<Item = &'a String>) -> String {
    let quoted: Vec<String> = items.into_iter().map(|s| quote(s)).collect();
    format!("[{}]", quoted.join(", "))
}

fn set(items: &BTreeSet<String>) -> String {
    string_list(items)
}

fn location(lat: f64, lon: f64) -> String {
    format!("({}, {})", num(lat), num(lon))
}

fn data_source(ds: &DataSource) -> String {
    match ds {
        DataSource::Constant(v) => format!("constant({})", num(*v)),
        DataSource::Uniform { lo, hi, seed } => {
            let mut s = format!("uniform({}, {})", num(*lo), num(*hi));
            if let Some(seed) = seed {
                let _ = write!(s, " seed {seed}");
            }
            s
        }
        DataSource::Trace(values) => {
            let items: Vec<String> = values.iter().map(|v| num(*v)).collect();
            format!("trace({})", items.join(", "))
        }
    }
}

struct Out {
    text: String,
    depth: usize,
}

impl Out {
    fn line(&mut self, content: impl AsRef<str>) {
        for _ in 0..self.depth {
            self.text.push_str("  ");
        }
        self.text.push_str(content.as_ref());
        self.text.push('\n');
    }

    fn open(&mut self, header: impl AsRef<str>) {
        self.line(format!("{} {{", header.as_ref()));
        self.depth += 1;
    }

    fn close(&mut self) {
        self.depth -= 1;
        self.line("}");
    }

    fn attr(&mut self, key: &str, value: impl AsRef<str>) {
        self.line(format!("{key} = {}", value.as_ref()));
    }
}

fn service(out: &mut Out, keyword: &str, port: &ServicePort) {
    out.open(format!("{keyword} {}", quote(&port.name)));
    out.attr("interface", quote(&port.interface));
    out.attr("protocol", quote(&port.protocol));
    out.close();
}

fn platform(out: &mut Out, p: &Platform) {
    out.open(format!("{} {}", p.tier().keyword(), quote(&p.name)));
    out.attr("location", location(p.location.latitude(), p.location.longitude()));
    out.attr("cpu_frequency_ghz", num(p.cpu_frequency_ghz));
    out.attr("software", set(&p.provided_software));
    out.attr("mtbf_hours", num(p.mtbf_hours));
    out.attr("mttr_hours", num(p.mttr_hours));
    if let PlatformKind::Device(spec) = &p.kind {
        out.attr("attached_to", quote(&spec.attached_to));
        out.attr("data", data_source(&spec.data_source));
        let e = &spec.energy;
        out.open("energy");
        out.attr("battery_mah", num(e.battery_capacity_mah));
        out.attr("supply_v", num(e.supply_voltage_v));
        out.attr("sense_current_ma", num(e.sense_current_ma));
        out.attr("sense_duration_ms", num(e.sense_duration_ms));
        out.attr("packet_kb", num(e.packet_kb));
        out.attr("e_elec_nj_per_bit", num(e.e_elec_nj_per_bit));
        out.attr("e_amp_pj_per_bit_m", num(e.e_amp_pj_per_bit_m));
        out.attr("loss_exponent", e.loss_exponent_n.to_string());
        out.attr("depletion_threshold_mah", num(e.depletion_threshold_mah));
        out.close();
    }
    for s in &p.services {
        service(out, "service", s);
    }
    out.close();
}

fn component(out: &mut Out, c: &Component) {
    out.open(format!("component {}", quote(&c.name)));
    out.attr("mean_cpu_demand_cycles", num(c.mean_cpu_demand_cycles));
    out.attr("software", set(&c.required_software));
    if let Some(host) = &c.host {
        out.attr("host", quote(host));
    }
    for r in &c.required_interfaces {
        out.open(format!("requires {}", quote(&r.name)));
        out.attr("interface", quote(&r.interface));
        out.attr("protocol", quote(&r.protocol));
        if let Some(p) = &r.provider {
            out.attr("provider", quote(p));
        }
        out.close();
    }
    if let Some(s) = &c.provided_service {
        service(out, "provides", s);
    }
    if let Some(p) = &c.periodic_request {
        out.open("periodic");
        out.attr("task", quote(&p.task));
        out.attr("interval_ticks", p.interval_ticks.to_string());
        if let Some(provider) = &p.provider {
            out.attr("provider", quote(provider));
        }
        out.close();
    }
    if let Some(e) = &c.event_request {
        out.open("event");
        out.attr("task", quote(&e.task));
        out.attr("condition", quote(&e.condition.to_string()));
        if let Some(provider) = &e.provider {
            out.attr("provider", quote(provider));
        }
        out.close();
    }
    out.close();
}

/// Canonical text form: blocks grouped by category, each group sorted by
/// name, two-space indentation.
pub fn serialize_model(model: &IoTSystemModel) -> String {
    let mut out = Out {
        text: String::new(),
        depth: 0,
    };
    let cfg = &model.sim_config;
    out.open(format!("system {}", quote(&model.name)));
    out.attr("simulation_time", cfg.simulation_time.to_string());
    out.attr("tick_seconds", num(cfg.tick_seconds));
    out.attr("seed", cfg.rng_seed.to_string());
    for m in &cfg.execution_modules {
        out.open(format!("module {}", quote(&m.module)));
        out.attr("language", quote(&m.language));
        out.attr("code", quote(&m.code));
        out.close();
    }
    out.close();

    let mut entities: Vec<_> = model.physical_entities.iter().collect();
    entities.sort_by(|a, b| a.name.cmp(&b.name));
    for e in entities {
        out.line("");
        out.open(format!("entity {}", quote(&e.name)));
        out.attr("location", location(e.location.latitude(), e.location.longitude()));
        out.close();
    }

    let mut interfaces: Vec<_> = model.interfaces.iter().collect();
    interfaces.sort_by(|a, b| a.name.cmp(&b.name));
    for i in interfaces {
        out.line("");
        out.line(format!("interface {} {{}}", quote(&i.name)));
    }

    let mut contracts: Vec<_> = model.contracts.iter().collect();
    contracts.sort_by(|a, b| a.name.cmp(&b.name));
    for c in contracts {
        out.line("");
        out.open(format!("contract {}", quote(&c.name)));
        out.attr("provider", quote(&c.provider_interface));
        out.attr("consumer", quote(&c.consumer_interface));
        for t in &c.tasks {
            out.open(format!("task {}", quote(&t.name)));
            out.attr("kind", t.kind.keyword());
            out.close();
        }
        let m = &c.message_type;
        if !m.name.is_empty() || !m.fields.is_empty() {
            out.open(format!("message {}", quote(&m.name)));
            for (field, kind) in &m.fields {
                out.attr(field, kind.keyword());
            }
            out.close();
        }
        out.close();
    }

    for tier in [Tier::Cloud, Tier::Fog, Tier::Device] {
        let mut platforms: Vec<_> = model.platforms.iter().filter(|p| p.tier() == tier).collect();
        platforms.sort_by(|a, b| a.name.cmp(&b.name));
        for p in platforms {
            out.line("");
            platform(&mut out, p);
        }
    }

    let mut components: Vec<_> = model.components().map(|(_, c)| c).collect();
    components.sort_by(|a, b| a.name.cmp(&b.name));
    for c in components {
        out.line("");
        component(&mut out, c);
    }

    let mut apps: Vec<_> = model.applications.iter().collect();
    apps.sort_by(|a, b| a.name.cmp(&b.name));
    for a in apps {
        out.line("");
        out.open(format!("application {}", quote(&a.name)));
        out.attr("region", location(a.region.latitude(), a.region.longitude()));
        out.attr("components", string_list(a.components.iter().map(|c| &c.name)));
        out.close();
    }

    let mut links: Vec<_> = model.networks.iter().collect();
    links.sort_by(|a, b| (&a.endpoint_a, &a.endpoint_b).cmp(&(&b.endpoint_a, &b.endpoint_b)));
    for l in links {
        out.line("");
        out.open(format!("link {} <-> {}", quote(&l.endpoint_a), quote(&l.endpoint_b)));
        out.attr("protocol", quote(&l.protocol));
        out.attr("latency_ms", num(l.latency_ms));
        out.attr("distance_m", num(l.distance_m));
        out.close();
    }
    out.text
}
