//! Contract agreement and connectivity rules over a built model.

mod binding;

pub use binding::{resolve_bindings, Bindings, Dependency, Endpoint, TaskBinding, Trigger};

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::diag::{Diagnostic, ElementKind, Severity, SourceMap};
use crate::model::{IoTSystemModel, PlatformKind, ServicePort, Topology};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
    pub ok: bool,
}

impl ValidationReport {
    pub fn new(diagnostics: Vec<Diagnostic>) -> Self {
        let ok = !diagnostics.iter().any(Diagnostic::is_error);
        Self { diagnostics, ok }
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.is_error())
    }

    pub fn locate(&mut self, sources: &SourceMap) {
        sources.locate(&mut self.diagnostics);
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for d in &self.diagnostics {
            let _ = writeln!(out, "{d}");
        }
        let errors = self.errors().count();
        let warnings = self.diagnostics.len() - errors;
        let _ = writeln!(
            out,
            "{}: {errors} error(s), {warnings} warning(s)",
            if self.ok { "ok" } else { "invalid" }
        );
        out
    }

    /// `severity,code,message,file,line`; file and line are blank when unknown.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["severity", "code", "message", "file", "line"])?;
        for d in &self.diagnostics {
            let (file, line) = d
                .span
                .as_ref()
                .map_or((String::new(), String::new()), |s| (s.file.clone(), s.line.to_string()));
            w.write_record([d.severity.as_str(), d.code, &d.message, &file, &line])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Protocols agree when equal ignoring case, or when a fog on the path can
/// translate between them.
pub fn check_protocol_bridge(
    model: &IoTSystemModel,
    consumer_port: &ServicePort,
    provider_port: &ServicePort,
    path: &[String],
) -> bool {
    consumer_port.protocol.eq_ignore_ascii_case(&provider_port.protocol)
        || path
            .iter()
            .any(|p| model.platform(p).is_some_and(|p| matches!(p.kind, PlatformKind::Fog)))
}

/// Platform an endpoint runs on, if known without a deployment.
pub fn pinned_host<'a>(model: &'a IoTSystemModel, endpoint: &'a Endpoint) -> Option<&'a str> {
    match endpoint {
        Endpoint::Platform(p) => Some(p),
        Endpoint::Component(c) => model.component(c).and_then(|c| c.host.as_deref()),
    }
}

fn declared_interfaces(model: &IoTSystemModel) -> BTreeSet<&str> {
    model
        .contracts
        .iter()
        .flat_map(|c| [c.provider_interface.as_str(), c.consumer_interface.as_str()])
        .chain(model.interfaces.iter().map(|i| i.name.as_str()))
        .collect()
}

/// Runs every agreement rule. Diagnostics name their element; call
/// [`ValidationReport::locate`] to attach source positions.
pub fn validate_model(model: &IoTSystemModel) -> ValidationReport {
    let (bindings, mut diags) = resolve_bindings(model);
    let declared = declared_interfaces(model);

    for p in &model.platforms {
        for s in p.services.iter().filter(|s| !declared.contains(s.interface.as_str())) {
            diags.push(
                Diagnostic::error(
                    "V002",
                    format!("service {} on {} offers undeclared interface {}", s.name, p.name, s.interface),
                )
                .about(ElementKind::Platform, &p.name),
            );
        }
    }
    for (_, c) in model.components() {
        if let Some(s) = c.provided_service.as_ref().filter(|s| !declared.contains(s.interface.as_str())) {
            diags.push(
                Diagnostic::error(
                    "V002",
                    format!("service {} of {} offers undeclared interface {}", s.name, c.name, s.interface),
                )
                .about(ElementKind::Component, &c.name),
            );
        }
        if let Some(e) = &c.event_request {
            let known = model.contracts.iter().any(|k| k.message_type.has_field(&e.condition.field));
            if !known {
                diags.push(
                    Diagnostic::error(
                        "V008",
                        format!(
                            "condition '{}' of {} uses unknown field {}",
                            e.condition, c.name, e.condition.field
                        ),
                    )
                    .about(ElementKind::Component, &c.name),
                );
            }
        }
    }

    let topology = Topology::new(model);
    for d in &bindings.dependencies {
        let consumer = Endpoint::Component(d.consumer.clone());
        let (Some(from), Some(to)) = (pinned_host(model, &consumer), pinned_host(model, &d.provider)) else {
            continue;
        };
        match topology.route(from, to) {
            None => diags.push(
                Diagnostic::error(
                    "V009",
                    format!("no network path from {from} ({}) to {to} ({})", d.consumer, d.provider.name()),
                )
                .about(ElementKind::Component, &d.consumer),
            ),
            Some(route) => {
                let consumer_port = ServicePort::new(&d.port, &d.provider_port.interface, &d.consumer_protocol);
                if !check_protocol_bridge(model, &consumer_port, &d.provider_port, &route.path) {
                    diags.push(
                        Diagnostic::error(
                            "V010",
                            format!(
                                "{} speaks {} but {} offers {} over {} with no fog to translate",
                                d.consumer,
                                d.consumer_protocol,
                                d.provider.name(),
                                d.provider_port.protocol,
                                route.path.join(" -> ")
                            ),
                        )
                        .about(ElementKind::Component, &d.consumer),
                    );
                }
            }
        }
    }
    diags.sort_by_key(|d| d.severity != Severity::Error);
    ValidationReport::new(diags)
}
