use std::collections::{BTreeMap, BTreeSet, HashSet};

use thiserror::Error;

use super::{
    Application, Component, DeviceSpec, GeoLocation, InterfaceDecl,
    IoTSystemModel, NetworkLink, PhysicalEntity, Platform, PlatformKind, ServiceContract,
    SimConfig,
};
use crate::diag::{ElementKind, SourceSpan};

/// A declaration paired with where it came from, if it came from text.
#[derive(Debug, Clone, PartialEq)]
pub struct Spanned<T> {
    pub value: T,
    pub span: Option<SourceSpan>,
}

impl<T> Spanned<T> {
    pub fn new(value: T, span: Option<SourceSpan>) -> Self {
        Self { value, span }
    }

    pub fn bare(value: T) -> Self {
        Self { value, span: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemDecl {
    pub name: String,
    pub config: SimConfig,
}

/// Unresolved declarations; components are declared on their own and
/// gathered into applications by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Declarations {
    pub system: Option<Spanned<SystemDecl>>,
    pub entities: Vec<Spanned<PhysicalEntity>>,
    pub interfaces: Vec<Spanned<InterfaceDecl>>,
    pub contracts: Vec<Spanned<ServiceContract>>,
    pub platforms: Vec<Spanned<Platform>>,
    pub components: Vec<Spanned<Component>>,
    pub applications: Vec<Spanned<ApplicationDecl>>,
    pub links: Vec<Spanned<NetworkLink>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApplicationDecl {
    pub name: String,
    pub region: GeoLocation,
    pub components: Vec<String>,
}

impl Declarations {
    /// Flattens a model back into declarations (no spans).
    pub fn from_model(model: &IoTSystemModel) -> Self {
        Self {
            system: Some(Spanned::bare(SystemDecl {
                name: model.name.clone(),
                config: model.sim_config.clone(),
            })),
            entities: model.physical_entities.iter().cloned().map(Spanned::bare).collect(),
            interfaces: model.interfaces.iter().cloned().map(Spanned::bare).collect(),
            contracts: model.contracts.iter().cloned().map(Spanned::bare).collect(),
            platforms: model.platforms.iter().cloned().map(Spanned::bare).collect(),
            components: model
                .components()
                .map(|(_, c)| Spanned::bare(c.clone()))
                .collect(),
            applications: model
                .applications
                .iter()
                .map(|app| {
                    Spanned::bare(ApplicationDecl {
                        name: app.name.clone(),
                        region: app.region,
                        components: app.components.iter().map(|c| c.name.clone()).collect(),
                    })
                })
                .collect(),
            links: model.networks.iter().cloned().map(Spanned::bare).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelErrorKind {
    Duplicate,
    Dangling,
    Invariant,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", self.render())]
pub struct ModelError {
    pub kind: ModelErrorKind,
    pub element: ElementKind,
    /// The offending declaration.
    pub owner: String,
    /// The duplicated or missing name, or the broken rule.
    pub detail: String,
    pub span: Option<SourceSpan>,
}

impl ModelError {
    fn render(&self) -> String {
        match self.kind {
            ModelErrorKind::Duplicate => format!("duplicate identifier: {}", self.detail),
            ModelErrorKind::Dangling => format!(
                "dangling reference: {} (in {} {})",
                self.detail,
                self.element.as_str(),
                self.owner
            ),
            ModelErrorKind::Invariant => format!(
                "invariant violation in {} {}: {}",
                self.element.as_str(),
                self.owner,
                self.detail
            ),
        }
    }

    pub fn code(&self) -> &'static str {
        match self.kind {
            ModelErrorKind::Duplicate => "M001",
            ModelErrorKind::Dangling => "M002",
            ModelErrorKind::Invariant => "M003",
        }
    }
}

struct Errors(Vec<ModelError>);

impl Errors {
    fn push(
        &mut self,
        kind: ModelErrorKind,
        element: ElementKind,
        owner: &str,
        detail: impl Into<String>,
        span: &Option<SourceSpan>,
    ) {
        self.0.push(ModelError {
            kind,
            element,
            owner: owner.to_string(),
            detail: detail.into(),
            span: span.clone(),
        });
    }

    fn invariant(
        &mut self,
        element: ElementKind,
        owner: &str,
        detail: impl Into<String>,
        span: &Option<SourceSpan>,
    ) {
        self.push(ModelErrorKind::Invariant, element, owner, detail, span);
    }

    fn dangling(
        &mut self,
        element: ElementKind,
        owner: &str,
        missing: &str,
        span: &Option<SourceSpan>,
    ) {
        self.push(ModelErrorKind::Dangling, element, owner, missing, span);
    }
}

fn unique_names<'a, T: 'a>(
    items: impl IntoIterator<Item = &'a Spanned<T>>,
    name: impl Fn(&T) -> &str,
    element: ElementKind,
    errors: &mut Errors,
) -> BTreeSet<String> {
    let mut seen = BTreeSet::new();
    for item in items {
        let n = name(&item.value);
        if !seen.insert(n.to_string()) {
            errors.push(ModelErrorKind::Duplicate, element, n, n, &item.span);
        }
    }
    seen
}

fn positive(value: f64) -> bool {
    value.is_finite() && value > 0.0
}

/// Assembles and checks a model.
///
/// Every top-level collection comes back sorted by name and links are stored
/// with `endpoint_a < endpoint_b`, so two declaration sets that differ only
/// in ordering build equal models.
pub fn build_system(decls: Declarations) -> Result<IoTSystemModel, Vec<ModelError>> {
    let mut errors = Errors(Vec::new());

    let (name, sim_config) = match &decls.system {
        Some(sys) => {
            let cfg = &sys.value.config;
            if !positive(cfg.tick_seconds) {
                errors.invariant(
                    ElementKind::System,
                    &sys.value.name,
                    "tick_seconds must be positive",
                    &sys.span,
                );
            }
            if cfg.global_timer > cfg.simulation_time {
                errors.invariant(
                    ElementKind::System,
                    &sys.value.name,
                    "global_timer exceeds simulation_time",
                    &sys.span,
                );
            }
            let mut modules = HashSet::new();
            for m in &cfg.execution_modules {
                if !modules.insert(m.module.as_str()) {
                    errors.push(
                        ModelErrorKind::Duplicate,
                        ElementKind::Module,
                        &m.module,
                        &m.module,
                        &sys.span,
                    );
                }
            }
            (sys.value.name.clone(), cfg.clone())
        }
        None => (String::new(), SimConfig::default()),
    };

    let entities = unique_names(&decls.entities, |e| &e.name, ElementKind::Entity, &mut errors);
    unique_names(&decls.interfaces, |i| &i.name, ElementKind::Interface, &mut errors);
    unique_names(&decls.contracts, |c| &c.name, ElementKind::Contract, &mut errors);
    let platforms = unique_names(&decls.platforms, |p| &p.name, ElementKind::Platform, &mut errors);
    let components =
        unique_names(&decls.components, |c| &c.name, ElementKind::Component, &mut errors);
    unique_names(
        &decls.applications,
        |a| &a.name,
        ElementKind::Application,
        &mut errors,
    );

    for c in &decls.contracts {
        let c_ref = &c.value;
        if c_ref.tasks.is_empty() {
            errors.invariant(ElementKind::Contract, &c_ref.name, "contract declares no task", &c.span);
        }
        let mut seen = HashSet::new();
        for t in &c_ref.tasks {
            if !seen.insert(t.name.as_str()) {
                errors.push(
                    ModelErrorKind::Duplicate,
                    ElementKind::Contract,
                    &c_ref.name,
                    format!("{}.{}", c_ref.name, t.name),
                    &c.span,
                );
            }
        }
        if c_ref.provider_interface == c_ref.consumer_interface {
            errors.invariant(
                ElementKind::Contract,
                &c_ref.name,
                "provider and consumer interfaces must differ",
                &c.span,
            );
        }
    }

    for p in &decls.platforms {
        let pv = &p.value;
        if !positive(pv.cpu_frequency_ghz) {
            errors.invariant(ElementKind::Platform, &pv.name, "cpu_frequency_ghz must be positive", &p.span);
        }
        if !positive(pv.mtbf_hours) {
            errors.invariant(ElementKind::Platform, &pv.name, "mtbf_hours must be positive", &p.span);
        }
        if !(pv.mttr_hours.is_finite() && pv.mttr_hours >= 0.0) {
            errors.invariant(ElementKind::Platform, &pv.name, "mttr_hours must be non-negative", &p.span);
        }
        let mut ports = HashSet::new();
        for s in &pv.services {
            if !ports.insert(s.name.as_str()) {
                errors.push(
                    ModelErrorKind::Duplicate,
                    ElementKind::Platform,
                    &pv.name,
                    format!("{}.{}", pv.name, s.name),
                    &p.span,
                );
            }
        }
        if let PlatformKind::Device(DeviceSpec {
            attached_to,
            energy,
            data_source,
        }) = &pv.kind
        {
            if !entities.contains(attached_to) {
                errors.dangling(ElementKind::Platform, &pv.name, attached_to, &p.span);
            }
            if let Err(e) = energy.check() {
                errors.invariant(ElementKind::Platform, &pv.name, e, &p.span);
            }
            if let Err(e) = data_source.check() {
                errors.invariant(ElementKind::Platform, &pv.name, e, &p.span);
            }
        }
    }

    let mut pairs = HashSet::new();
    let mut links = Vec::with_capacity(decls.links.len());
    for l in &decls.links {
        let mut link = l.value.clone();
        if link.endpoint_b < link.endpoint_a {
            std::mem::swap(&mut link.endpoint_a, &mut link.endpoint_b);
        }
        let owner = format!("{} <-> {}", link.endpoint_a, link.endpoint_b);
        for end in [&link.endpoint_a, &link.endpoint_b] {
            if !platforms.contains(end) {
                errors.dangling(ElementKind::Link, &owner, end, &l.span);
            }
        }
        if link.endpoint_a == link.endpoint_b {
            errors.invariant(ElementKind::Link, &owner, "a link cannot connect a platform to itself", &l.span);
        }
        if !(link.latency_ms.is_finite() && link.latency_ms >= 0.0) {
            errors.invariant(ElementKind::Link, &owner, "latency_ms must be non-negative", &l.span);
        }
        if !positive(link.distance_m) {
            errors.invariant(ElementKind::Link, &owner, "distance_m must be positive", &l.span);
        }
        if !pairs.insert((link.endpoint_a.clone(), link.endpoint_b.clone())) {
            errors.push(ModelErrorKind::Duplicate, ElementKind::Link, &owner, owner.clone(), &l.span);
        }
        links.push(link);
    }

    for c in &decls.components {
        let cv = &c.value;
        if !positive(cv.mean_cpu_demand_cycles) {
            errors.invariant(
                ElementKind::Component,
                &cv.name,
                "mean_cpu_demand_cycles must be positive",
                &c.span,
            );
        }
        if let Some(host) = &cv.host {
            if !platforms.contains(host) {
                errors.dangling(ElementKind::Component, &cv.name, host, &c.span);
            }
        }
        let mut ports = HashSet::new();
        for r in &cv.required_interfaces {
            if !ports.insert(r.name.as_str()) {
                errors.push(
                    ModelErrorKind::Duplicate,
                    ElementKind::Component,
                    &cv.name,
                    format!("{}.{}", cv.name, r.name),
                    &c.span,
                );
            }
        }
        let providers = cv
            .required_interfaces
            .iter()
            .filter_map(|r| r.provider.as_ref())
            .chain(cv.periodic_request.as_ref().and_then(|p| p.provider.as_ref()))
            .chain(cv.event_request.as_ref().and_then(|e| e.provider.as_ref()));
        for provider in providers {
            if !platforms.contains(provider) && !components.contains(provider) {
                errors.dangling(ElementKind::Component, &cv.name, provider, &c.span);
            }
        }
        if let Some(p) = &cv.periodic_request {
            if p.interval_ticks == 0 {
                errors.invariant(ElementKind::Component, &cv.name, "interval_ticks must be positive", &c.span);
            }
            if p.local_timer > p.interval_ticks {
                errors.invariant(ElementKind::Component, &cv.name, "local_timer exceeds interval_ticks", &c.span);
            }
        }
        if let Some(e) = &cv.event_request {
            if !e.condition.threshold.is_finite() {
                errors.invariant(ElementKind::Component, &cv.name, "condition threshold must be finite", &c.span);
            }
        }
    }

    let mut by_name: BTreeMap<String, Component> = BTreeMap::new();
    for c in &decls.components {
        by_name.entry(c.value.name.clone()).or_insert_with(|| c.value.clone());
    }
    let mut owner_of: BTreeMap<String, String> = BTreeMap::new();
    let mut applications = Vec::with_capacity(decls.applications.len());
    for a in &decls.applications {
        let av = &a.value;
        if av.components.is_empty() {
            errors.invariant(ElementKind::Application, &av.name, "application has no component", &a.span);
        }
        let mut members = Vec::with_capacity(av.components.len());
        for comp in &av.components {
            match owner_of.get(comp) {
                Some(other) => errors.invariant(
                    ElementKind::Application,
                    &av.name,
                    format!("component {comp} already belongs to application {other}"),
                    &a.span,
                ),
                None => match by_name.get(comp) {
                    Some(c) => {
                        owner_of.insert(comp.clone(), av.name.clone());
                        members.push(c.clone());
                    }
                    None => errors.dangling(ElementKind::Application, &av.name, comp, &a.span),
                },
            }
        }
        applications.push(Application {
            name: av.name.clone(),
            region: av.region,
            components: members,
        });
    }
    for c in &decls.components {
        if !owner_of.contains_key(&c.value.name) {
            errors.invariant(
                ElementKind::Component,
                &c.value.name,
                "component belongs to no application",
                &c.span,
            );
        }
    }

    if !errors.0.is_empty() {
        return Err(errors.0);
    }

    let mut platforms: Vec<Platform> = decls.platforms.into_iter().map(|p| p.value).collect();
    platforms.sort_by(|a, b| a.name.cmp(&b.name));
    for p in &mut platforms {
        if let PlatformKind::Device(spec) = &mut p.kind {
            spec.energy.residual_energy_mah = spec.energy.battery_capacity_mah;
        }
    }
    let mut contracts: Vec<ServiceContract> = decls.contracts.into_iter().map(|c| c.value).collect();
    contracts.sort_by(|a, b| a.name.cmp(&b.name));
    let mut interfaces: Vec<InterfaceDecl> = decls.interfaces.into_iter().map(|i| i.value).collect();
    interfaces.sort_by(|a, b| a.name.cmp(&b.name));
    let mut physical_entities: Vec<PhysicalEntity> = decls.entities.into_iter().map(|e| e.value).collect();
    physical_entities.sort_by(|a, b| a.name.cmp(&b.name));
    links.sort_by(|a, b| (&a.endpoint_a, &a.endpoint_b).cmp(&(&b.endpoint_a, &b.endpoint_b)));
    applications.sort_by(|a, b| a.name.cmp(&b.name));
    for app in &mut applications {
        for c in &mut app.components {
            if let Some(p) = &mut c.periodic_request {
                p.local_timer = 0;
            }
        }
    }
    let mut sim_config = sim_config;
    sim_config.global_timer = 0;

    Ok(IoTSystemModel {
        name,
        platforms,
        networks: links,
        applications,
        contracts,
        interfaces,
        physical_entities,
        sim_config,
    })
}
