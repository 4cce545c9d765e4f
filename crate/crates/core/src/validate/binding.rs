use crate::diag::{Diagnostic, ElementKind};
use crate::model::{Component, IoTSystemModel, ServicePort, TaskKind};

/// The serving side of a dependency.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Endpoint {
    Component(String),
    Platform(String),
}

impl Endpoint {
    pub fn name(&self) -> &str {
        match self {
            Endpoint::Component(n) | Endpoint::Platform(n) => n,
        }
    }
}

/// A resolved consumer requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct Dependency {
    pub consumer: String,
    /// Required port name; for implicit request bindings, the task name.
    pub port: String,
    pub consumer_protocol: String,
    pub provider: Endpoint,
    pub provider_port: ServicePort,
    /// Governing contract; `None` for plain interfaces.
    pub contract: Option<String>,
    /// Created for a request whose contract no required port covers.
    pub implicit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    Periodic,
    Event,
}

/// A periodic or event request tied to its contract and provider.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskBinding {
    pub component: String,
    pub application: String,
    pub trigger: Trigger,
    pub task: String,
    pub kind: TaskKind,
    pub contract: String,
    /// Index into [`Bindings::dependencies`].
    pub dependency: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings {
    pub dependencies: Vec<Dependency>,
    pub tasks: Vec<TaskBinding>,
}

impl Bindings {
    pub fn provider_of(&self, task: &TaskBinding) -> &Endpoint {
        &self.dependencies[task.dependency].provider
    }
}

/// What an interface name refers to.
enum InterfaceRef<'a> {
    Contract { contract: &'a str, provider_interface: &'a str },
    Plain(String),
}

fn lookup_interface<'a>(
    model: &'a IoTSystemModel,
    interface: &str,
    component: &str,
    diags: &mut Vec<Diagnostic>,
) -> Result<Option<InterfaceRef<'a>>, ()> {
    let contracts: Vec<_> = model.contracts.iter().filter(|c| c.declares(interface)).collect();
    let plain = model.interfaces.iter().any(|i| i.name == interface);
    if contracts.len() + usize::from(plain) > 1 {
        let mut owners: Vec<String> = contracts.iter().map(|c| format!("contract {}", c.name)).collect();
        if plain {
            owners.push(format!("interface {interface}"));
        }
        diags.push(
            Diagnostic::error(
                "V005",
                format!("interface {interface} is declared more than once ({})", owners.join(", ")),
            )
            .about(ElementKind::Component, component),
        );
        return Err(());
    }
    if let Some(c) = contracts.first() {
        return Ok(Some(InterfaceRef::Contract {
            contract: &c.name,
            provider_interface: &c.provider_interface,
        }));
    }
    if plain {
        return Ok(Some(InterfaceRef::Plain(interface.to_string())));
    }
    Ok(interface
        .strip_prefix('~')
        .filter(|base| model.interfaces.iter().any(|i| i.name == *base))
        .map(|base| InterfaceRef::Plain(base.to_string())))
}

/// Services offered under `interface`, sorted by provider name; the consumer
/// itself is excluded.
fn offers(model: &IoTSystemModel, interface: &str, consumer: &str) -> Vec<(Endpoint, ServicePort)> {
    let mut found: Vec<(Endpoint, ServicePort)> = Vec::new();
    for p in &model.platforms {
        for s in p.services.iter().filter(|s| s.interface == interface) {
            found.push((Endpoint::Platform(p.name.clone()), s.clone()));
        }
    }
    for (_, c) in model.components() {
        if c.name == consumer {
            continue;
        }
        if let Some(s) = c.provided_service.as_ref().filter(|s| s.interface == interface) {
            found.push((Endpoint::Component(c.name.clone()), s.clone()));
        }
    }
    found.sort_by(|a, b| a.0.name().cmp(b.0.name()));
    found
}

fn offered_by(model: &IoTSystemModel, name: &str) -> Option<(Endpoint, Vec<ServicePort>)> {
    if let Some(p) = model.platform(name) {
        return Some((Endpoint::Platform(p.name.clone()), p.services.clone()));
    }
    model.component(name).map(|c| {
        (
            Endpoint::Component(c.name.clone()),
            c.provided_service.iter().cloned().collect(),
        )
    })
}

/// Picks the provider of `provider_interface` for `consumer`.
fn choose_provider(
    model: &IoTSystemModel,
    consumer: &Component,
    requested: &str,
    provider_interface: &str,
    pinned: Option<&str>,
    diags: &mut Vec<Diagnostic>,
) -> Option<(Endpoint, ServicePort)> {
    if let Some(name) = pinned {
        let (endpoint, services) = offered_by(model, name)?;
        return match services.into_iter().find(|s| s.interface == provider_interface) {
            Some(s) => Some((endpoint, s)),
            None => {
                diags.push(
                    Diagnostic::error(
                        "V003",
                        format!(
                            "component {} binds {requested} to {name}, which does not offer the conjugate interface {provider_interface}",
                            consumer.name
                        ),
                    )
                    .about(ElementKind::Component, &consumer.name),
                );
                None
            }
        };
    }
    let mut candidates = offers(model, provider_interface, &consumer.name);
    match candidates.len() {
        0 => {
            diags.push(
                Diagnostic::error(
                    "V006",
                    format!(
                        "component {} requires {requested}, but nothing offers {provider_interface}",
                        consumer.name
                    ),
                )
                .about(ElementKind::Component, &consumer.name),
            );
            None
        }
        1 => candidates.pop(),
        _ => {
            let names: Vec<&str> = candidates.iter().map(|(e, _)| e.name()).collect();
            diags.push(
                Diagnostic::warning(
                    "V007",
                    format!(
                        "component {} requires {requested}, offered by {}; bound to {}",
                        consumer.name,
                        names.join(", "),
                        names[0]
                    ),
                )
                .about(ElementKind::Component, &consumer.name),
            );
            Some(candidates.swap_remove(0))
        }
    }
}

/// Binds every required port and request to a provider.
///
/// Diagnostics cover unresolvable interfaces, bindings that are not a
/// conjugate pair, missing or ambiguous providers and unknown tasks.
pub fn resolve_bindings(model: &IoTSystemModel) -> (Bindings, Vec<Diagnostic>) {
    let mut out = Bindings::default();
    let mut diags = Vec::new();

    for (app, comp) in model.components() {
        let first_dep = out.dependencies.len();
        for port in &comp.required_interfaces {
            let target = match lookup_interface(model, &port.interface, &comp.name, &mut diags) {
                Ok(Some(target)) => target,
                Ok(None) => {
                    diags.push(
                        Diagnostic::error(
                            "V001",
                            format!(
                                "component {} requires interface {}, which no contract or interface declares",
                                comp.name, port.interface
                            ),
                        )
                        .about(ElementKind::Component, &comp.name),
                    );
                    continue;
                }
                Err(()) => continue,
            };
            let (contract, provider_interface) = match &target {
                InterfaceRef::Contract {
                    contract,
                    provider_interface,
                } => (Some(contract.to_string()), provider_interface.to_string()),
                InterfaceRef::Plain(i) => (None, i.clone()),
            };
            if let Some((provider, provider_port)) = choose_provider(
                model,
                comp,
                &port.interface,
                &provider_interface,
                port.provider.as_deref(),
                &mut diags,
            ) {
                out.dependencies.push(Dependency {
                    consumer: comp.name.clone(),
                    port: port.name.clone(),
                    consumer_protocol: port.protocol.clone(),
                    provider,
                    provider_port,
                    contract,
                    implicit: false,
                });
            }
        }

        let requests = comp
            .periodic_request
            .iter()
            .map(|p| (Trigger::Periodic, p.task.as_str(), p.provider.as_deref()))
            .chain(
                comp.event_request
                    .iter()
                    .map(|e| (Trigger::Event, e.task.as_str(), e.provider.as_deref())),
            );
        for (trigger, task, pinned) in requests {
            let contracts: Vec<_> = model.contracts_with_task(task).collect();
            if contracts.is_empty() {
                diags.push(
                    Diagnostic::error(
                        "V004",
                        format!("component {} requests task {task}, which no contract exposes", comp.name),
                    )
                    .about(ElementKind::Component, &comp.name),
                );
                continue;
            }
            let covering = (first_dep..out.dependencies.len()).find(|&i| {
                let d = &out.dependencies[i];
                d.contract.as_deref().is_some_and(|c| contracts.iter().any(|k| k.name == c))
                    && pinned.is_none_or(|p| d.provider.name() == p)
            });
            let dependency = match covering {
                Some(i) => i,
                None => {
                    if contracts.len() > 1 {
                        let names: Vec<&str> = contracts.iter().map(|c| c.name.as_str()).collect();
                        diags.push(
                            Diagnostic::error(
                                "V011",
                                format!(
                                    "component {} requests task {task}, exposed by several contracts ({}) and bound by none",
                                    comp.name,
                                    names.join(", ")
                                ),
                            )
                            .about(ElementKind::Component, &comp.name),
                        );
                        continue;
                    }
                    let contract = contracts[0];
                    let Some((provider, provider_port)) = choose_provider(
                        model,
                        comp,
                        &contract.consumer_interface,
                        &contract.provider_interface,
                        pinned,
                        &mut diags,
                    ) else {
                        continue;
                    };
                    out.dependencies.push(Dependency {
                        consumer: comp.name.clone(),
                        port: task.to_string(),
                        consumer_protocol: provider_port.protocol.clone(),
                        provider,
                        provider_port,
                        contract: Some(contract.name.clone()),
                        implicit: true,
                    });
                    out.dependencies.len() - 1
                }
            };
            let contract = out.dependencies[dependency].contract.clone().unwrap_or_default();
            let kind = model
                .contract(&contract)
                .and_then(|c| c.task(task))
                .map(|t| t.kind)
                .unwrap_or(TaskKind::Compute);
            out.tasks.push(TaskBinding {
                component: comp.name.clone(),
                application: app.name.clone(),
                trigger,
                task: task.to_string(),
                kind,
                contract,
                dependency,
            });
        }
    }
    (out, diags)
}
