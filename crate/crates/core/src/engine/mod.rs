//! Tick-driven execution of a model.
//!
//! Each tick walks applications and their components in declaration order.
//! A component's timer is checked against its interval before it is
//! incremented, so a component with interval `k` fires at ticks `k, 2k, ...`
//! up to and including `simulation_time`. Ticks on which no timer can fire
//! are skipped without changing the outcome.
//!
//! Periodic requests to a device run the bound contract's choreography:
//! a sensing task either reuses a cached sample that is at most
//! `max_age_ticks` old or senses, transmits and drains the battery. Event
//! requests are evaluated against every sample produced in the same
//! application whose record carries the condition's field.

mod report;
pub mod rng;

pub use report::{DeviceSummary, SimulationReport};

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::diag::Diagnostic;
use crate::energy::{drain, joules_to_mah, sense_energy, transmit_energy, BatteryState, EnergyAmount};
use crate::extmod::{ModuleRegistry, SystemSnapshot};
use crate::model::{
    ConditionExpr, DataSource, DeviceEnergyProfile, IoTSystemModel, TaskKind, Topology,
};
use crate::validate::{resolve_bindings, Endpoint, Trigger};
use rng::{fnv1a, sub_seed, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FreshnessPolicy {
    /// Zero disables caching.
    pub max_age_ticks: u64,
}

impl FreshnessPolicy {
    pub fn new(max_age_ticks: u64) -> Self {
        Self { max_age_ticks }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    PeriodicRequest,
    EventRequest,
    CacheHit,
    SenseSample,
    Transmission,
    Actuation,
    RequestFailed,
    DeviceDepleted,
    ModuleOutput,
}

impl EventKind {
    pub const ALL: [EventKind; 9] = [
        EventKind::PeriodicRequest,
        EventKind::EventRequest,
        EventKind::CacheHit,
        EventKind::SenseSample,
        EventKind::Transmission,
        EventKind::Actuation,
        EventKind::RequestFailed,
        EventKind::DeviceDepleted,
        EventKind::ModuleOutput,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::PeriodicRequest => "PeriodicRequest",
            EventKind::EventRequest => "EventRequest",
            EventKind::CacheHit => "CacheHit",
            EventKind::SenseSample => "SenseSample",
            EventKind::Transmission => "Transmission",
            EventKind::Actuation => "Actuation",
            EventKind::RequestFailed => "RequestFailed",
            EventKind::DeviceDepleted => "DeviceDepleted",
            EventKind::ModuleOutput => "ModuleOutput",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == text)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimEvent {
    pub tick: u64,
    pub kind: EventKind,
    pub subject: String,
    pub detail: String,
}

/// A message instance: field name to value.
pub type SampleRecord = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("sample has no field {0}")]
pub struct MissingField(pub String);

pub fn eval_condition(expr: &ConditionExpr, sample: &SampleRecord) -> Result<bool, MissingField> {
    let value = sample
        .get(&expr.field)
        .ok_or_else(|| MissingField(expr.field.clone()))?;
    Ok(expr.op.apply(*value, expr.threshold))
}

/// Per-device generator state for [`next_sample`].
#[derive(Debug, Clone)]
pub struct SampleStream {
    rng: SimRng,
    position: usize,
}

impl SampleStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: SimRng::new(seed),
            position: 0,
        }
    }
}

pub fn next_sample(source: &DataSource, stream: &mut SampleStream) -> f64 {
    match source {
        DataSource::Constant(v) => *v,
        DataSource::Uniform { lo, hi, .. } => stream.rng.uniform(*lo, *hi),
        DataSource::Trace(values) => {
            let v = values[stream.position % values.len()];
            stream.position = (stream.position + 1) % values.len();
            v
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheEntry {
    pub value: f64,
    pub sampled_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum StopRule {
    #[default]
    Never,
    /// Halt at the first depletion of any device.
    AnyDevice,
    /// Halt when this device depletes.
    Device(String),
}

/// Knobs for [`run_with`].
#[derive(Clone, Default)]
pub struct RunOptions<'a> {
    pub freshness: FreshnessPolicy,
    pub stop: StopRule,
    /// Replaces the model's seed.
    pub seed: Option<u64>,
    /// Transmit distance per device, replacing the topology-derived one.
    pub distance_overrides: BTreeMap<String, f64>,
    /// Keep the full event log; counts are kept either way.
    pub record_log: bool,
    /// Hooks for the model's execution modules; built-ins when `None`.
    pub registry: Option<&'a ModuleRegistry>,
}

impl RunOptions<'_> {
    pub fn logged(freshness: FreshnessPolicy, stop_on_depletion: bool) -> Self {
        Self {
            freshness,
            stop: if stop_on_depletion { StopRule::AnyDevice } else { StopRule::Never },
            record_log: true,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("model does not validate: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("unknown execution module {0}")]
    UnknownModule(String),
}

#[derive(Debug, Clone)]
struct DeviceRt {
    name: String,
    profile: DeviceEnergyProfile,
    source: DataSource,
    battery: BatteryState,
    cache: Option<CacheEntry>,
    stream: SampleStream,
    depleted_at: Option<u64>,
    samples: u64,
    cache_hits: u64,
    energy_joules: f64,
}

#[derive(Debug, Clone)]
enum ProviderRt {
    Device {
        index: usize,
        /// Transmit distance, or why the device cannot be reached.
        distance: Result<f64, String>,
    },
    Other(String),
}

#[derive(Debug, Clone)]
struct TaskRt {
    component: String,
    task: String,
    kind: TaskKind,
    provider: ProviderRt,
    /// First field of the contract's message, keyed by the sampled value.
    record_field: Option<String>,
    condition: Option<ConditionExpr>,
}

#[derive(Debug, Clone)]
struct PeriodicRt {
    task: usize,
    interval: u64,
    app: usize,
}

/// Mutable run state; the model itself is never modified.
#[derive(Debug, Clone)]
pub struct SimulationState {
    pub global_timer: u64,
    /// Indexed like the run's periodic components, in declaration order.
    pub component_timers: Vec<(String, u64)>,
    devices: Vec<DeviceRt>,
    log: EventSink,
}

impl SimulationState {
    pub fn battery(&self, device: &str) -> Option<BatteryState> {
        self.devices.iter().find(|d| d.name == device).map(|d| d.battery)
    }

    pub fn cache(&self, device: &str) -> Option<CacheEntry> {
        self.devices.iter().find(|d| d.name == device).and_then(|d| d.cache)
    }

    pub fn events(&self) -> &[SimEvent] {
        &self.log.events
    }

    /// Residual charge per device, in model order.
    pub fn residuals(&self) -> Vec<(String, f64)> {
        self.devices.iter().map(|d| (d.name.clone(), d.battery.residual_mah)).collect()
    }
}

#[derive(Debug, Clone, Default)]
struct EventSink {
    record: bool,
    events: Vec<SimEvent>,
    counts: [u64; EventKind::ALL.len()],
}

impl EventSink {
    fn push(&mut self, tick: u64, kind: EventKind, subject: &str, detail: impl FnOnce() -> String) {
        self.counts[kind as usize] += 1;
        if self.record {
            self.events.push(SimEvent {
                tick,
                kind,
                subject: subject.to_string(),
                detail: detail(),
            });
        }
    }

    /// Counts of the kinds that occurred.
    fn count_map(&self) -> BTreeMap<EventKind, u64> {
        EventKind::ALL
            .iter()
            .zip(self.counts)
            .filter(|(_, n)| *n > 0)
            .map(|(k, n)| (*k, n))
            .collect()
    }
}

fn transmit_distance(
    model: &IoTSystemModel,
    topology: &Topology,
    device: &str,
    consumer_host: Option<&str>,
) -> Result<f64, String> {
    if let Some(host) = consumer_host {
        if host == device {
            return Ok(0.0);
        }
        let route = topology
            .route(device, host)
            .ok_or_else(|| format!("no path from {device} to {host}"))?;
        let hop = &route.path[1];
        return model
            .link_between(device, hop)
            .map(|l| l.distance_m)
            .ok_or_else(|| format!("no link from {device} to {hop}"));
    }
    model
        .networks
        .iter()
        .filter_map(|l| l.connects(device).map(|other| (l, other)))
        .min_by(|(a, an), (b, bn)| a.latency_ms.total_cmp(&b.latency_ms).then_with(|| an.cmp(bn)))
        .map(|(l, _)| l.distance_m)
        .ok_or_else(|| format!("{device} has no network link"))
}

struct Plan {
    tasks: Vec<TaskRt>,
    periodic: Vec<PeriodicRt>,
    /// Event-request task indices per application.
    events: Vec<Vec<usize>>,
}

fn plan(model: &IoTSystemModel, options: &RunOptions, devices: &[DeviceRt]) -> Result<Plan, SimulationError> {
    let (bindings, diags) = resolve_bindings(model);
    let errors: Vec<Diagnostic> = diags.into_iter().filter(Diagnostic::is_error).collect();
    if !errors.is_empty() {
        return Err(SimulationError::Invalid(errors));
    }
    let topology = Topology::new(model);
    let app_index = |name: &str| model.applications.iter().position(|a| a.name == name).unwrap_or(0);
    let mut plan = Plan {
        tasks: Vec::new(),
        periodic: Vec::new(),
        events: vec![Vec::new(); model.applications.len()],
    };
    for tb in &bindings.tasks {
        let component = model.component(&tb.component).expect("bound component exists");
        let provider = match bindings.provider_of(tb) {
            Endpoint::Platform(p) => match devices.iter().position(|d| &d.name == p) {
                Some(index) => {
                    let distance = match options.distance_overrides.get(p) {
                        Some(d) => Ok(*d),
                        None => transmit_distance(model, &topology, p, component.host.as_deref()),
                    };
                    ProviderRt::Device { index, distance }
                }
                None => ProviderRt::Other(p.clone()),
            },
            Endpoint::Component(c) => ProviderRt::Other(c.clone()),
        };
        let record_field = model
            .contract(&tb.contract)
            .and_then(|c| c.message_type.fields.first())
            .map(|(f, _)| f.clone());
        let index = plan.tasks.len();
        let app = app_index(&tb.application);
        let condition = match tb.trigger {
            Trigger::Periodic => {
                let p = component.periodic_request.as_ref().expect("periodic binding has a request");
                plan.periodic.push(PeriodicRt {
                    task: index,
                    interval: p.interval_ticks,
                    app,
                });
                None
            }
            Trigger::Event => {
                plan.events[app].push(index);
                component.event_request.as_ref().map(|e| e.condition.clone())
            }
        };
        plan.tasks.push(TaskRt {
            component: tb.component.clone(),
            task: tb.task.clone(),
            kind: tb.kind,
            provider,
            record_field,
            condition,
        });
    }
    Ok(plan)
}

/// Runs the model with the given freshness policy and a full event log.
pub fn run_simulation(
    model: &IoTSystemModel,
    freshness: FreshnessPolicy,
    stop_on_depletion: bool,
) -> Result<SimulationReport, SimulationError> {
    run_with(model, &RunOptions::logged(freshness, stop_on_depletion))
}

pub fn run_with(model: &IoTSystemModel, options: &RunOptions) -> Result<SimulationReport, SimulationError> {
    let seed = options.seed.unwrap_or(model.sim_config.rng_seed);
    let devices: Vec<DeviceRt> = model
        .devices()
        .map(|(p, spec)| {
            let stream_seed = match spec.data_source {
                DataSource::Uniform { seed: Some(s), .. } => s,
                _ => sub_seed(seed, fnv1a(&p.name)),
            };
            DeviceRt {
                name: p.name.clone(),
                profile: spec.energy.clone(),
                source: spec.data_source.clone(),
                battery: BatteryState::with_residual(&spec.energy, spec.energy.residual_energy_mah),
                cache: None,
                stream: SampleStream::new(stream_seed),
                depleted_at: None,
                samples: 0,
                cache_hits: 0,
                energy_joules: 0.0,
            }
        })
        .collect();
    let plan = plan(model, options, &devices)?;
    let mut state = SimulationState {
        global_timer: 0,
        component_timers: plan
            .periodic
            .iter()
            .map(|p| (plan.tasks[p.task].component.clone(), 0))
            .collect(),
        devices,
        log: EventSink {
            record: options.record_log,
            ..EventSink::default()
        },
    };

    let builtins;
    let registry = match options.registry {
        Some(r) => r,
        None => {
            builtins = ModuleRegistry::with_builtins();
            &builtins
        }
    };
    let mut module_outputs = Vec::new();
    if !model.sim_config.execution_modules.is_empty() {
        let snapshot = SystemSnapshot::capture(model, &state);
        for decl in &model.sim_config.execution_modules {
            let output = registry
                .invoke_module(&decl.module, &snapshot)
                .map_err(|_| SimulationError::UnknownModule(decl.module.clone()))?;
            state.log.push(0, EventKind::ModuleOutput, &decl.module, || output.clone());
            module_outputs.push((decl.module.clone(), output));
        }
    }

    let mut runner = Runner {
        plan: &plan,
        freshness: options.freshness,
        stop: &options.stop,
        halted: false,
    };
    let end = model.sim_config.simulation_time;
    let mut last_tick = None;
    while state.global_timer <= end && !runner.halted {
        let tick = state.global_timer;
        last_tick = Some(tick);
        for (i, p) in plan.periodic.iter().enumerate() {
            if state.component_timers[i].1 == p.interval {
                runner.fire_periodic(&mut state, i, tick);
                state.component_timers[i].1 = 0;
                if runner.halted {
                    break;
                }
            }
            state.component_timers[i].1 += 1;
        }
        if runner.halted {
            break;
        }
        let skip = plan
            .periodic
            .iter()
            .zip(&state.component_timers)
            .map(|(p, (_, t))| p.interval.saturating_sub(*t))
            .min();
        let Some(skip) = skip else {
            state.global_timer = end.saturating_add(1);
            break;
        };
        let skip = skip.min(end.saturating_sub(tick));
        for (_, t) in &mut state.component_timers {
            *t += skip;
        }
        state.global_timer = tick + 1 + skip;
        if tick == u64::MAX {
            break;
        }
    }
    Ok(SimulationReport::assemble(model, state, last_tick, runner.halted, module_outputs))
}

struct Runner<'p> {
    plan: &'p Plan,
    freshness: FreshnessPolicy,
    stop: &'p StopRule,
    halted: bool,
}

impl Runner<'_> {
    fn fire_periodic(&mut self, state: &mut SimulationState, periodic: usize, tick: u64) {
        let plan = self.plan;
        let p = &plan.periodic[periodic];
        let task = &plan.tasks[p.task];
        let provider = provider_name(task, &state.devices);
        state.log.push(tick, EventKind::PeriodicRequest, &task.component, || {
            format!("task={} provider={provider}", task.task)
        });
        let value = self.execute_choreography(state, task, tick);
        if let (Some(value), Some(field)) = (value, &task.record_field) {
            for &e in &plan.events[p.app] {
                if self.halted {
                    return;
                }
                let event = &plan.tasks[e];
                let condition = event.condition.as_ref().expect("event task has a condition");
                // Same outcome as eval_condition on the one-field record.
                if condition.field == *field && condition.op.apply(value, condition.threshold) {
                    state.log.push(tick, EventKind::EventRequest, &event.component, || {
                        format!("task={} condition={condition} sample={field}={value}", event.task)
                    });
                    self.execute_choreography(state, event, tick);
                }
            }
        }
    }

    /// Runs one request against its provider; returns the value a sensing
    /// task produced.
    fn execute_choreography(&mut self, state: &mut SimulationState, task: &TaskRt, tick: u64) -> Option<f64> {
        let ProviderRt::Device { index, distance } = &task.provider else {
            return None;
        };
        let dev = &mut state.devices[*index];
        let log = &mut state.log;
        if dev.battery.depleted {
            log.push(tick, EventKind::RequestFailed, &dev.name, || {
                format!("task={} reason=depleted", task.task)
            });
            return None;
        }
        match task.kind {
            TaskKind::Actuate => {
                log.push(tick, EventKind::Actuation, &dev.name, || format!("task={}", task.task));
                None
            }
            TaskKind::Receive | TaskKind::Compute => None,
            TaskKind::Transmit => {
                let distance = match distance {
                    Ok(d) => *d,
                    Err(reason) => {
                        log.push(tick, EventKind::RequestFailed, &dev.name, || reason.clone());
                        return None;
                    }
                };
                let e = transmit_energy(&dev.profile, distance);
                dev.energy_joules += e.joules();
                dev.battery = drain(dev.battery, &dev.profile, e);
                let residual = dev.battery.residual_mah;
                log.push(tick, EventKind::Transmission, &dev.name, || {
                    format!(
                        "task={} distance_m={distance} transmit_j={} residual_mah={residual}",
                        task.task,
                        e.joules()
                    )
                });
                self.after_drain(state, *index, tick);
                None
            }
            TaskKind::Sense => {
                let max_age = self.freshness.max_age_ticks;
                let fresh = dev
                    .cache
                    .filter(|c| max_age > 0 && tick - c.sampled_at <= max_age);
                let value = if let Some(c) = fresh {
                    dev.cache_hits += 1;
                    log.push(tick, EventKind::CacheHit, &dev.name, || {
                        format!("value={} age={}", c.value, tick - c.sampled_at)
                    });
                    c.value
                } else {
                    let distance = match distance {
                        Ok(d) => *d,
                        Err(reason) => {
                            log.push(tick, EventKind::RequestFailed, &dev.name, || reason.clone());
                            return None;
                        }
                    };
                    let value = next_sample(&dev.source, &mut dev.stream);
                    let sense = sense_energy(&dev.profile);
                    let transmit = transmit_energy(&dev.profile, distance);
                    dev.battery = drain(dev.battery, &dev.profile, sense);
                    dev.battery = drain(dev.battery, &dev.profile, transmit);
                    dev.energy_joules += (sense + transmit).joules();
                    dev.samples += 1;
                    dev.cache = Some(CacheEntry {
                        value,
                        sampled_at: tick,
                    });
                    let residual = dev.battery.residual_mah;
                    log.push(tick, EventKind::SenseSample, &dev.name, || {
                        format!(
                            "value={value} distance_m={distance} sense_j={} transmit_j={} residual_mah={residual}",
                            sense.joules(),
                            transmit.joules()
                        )
                    });
                    self.after_drain(state, *index, tick);
                    value
                };
                Some(value)
            }
        }
    }

    fn after_drain(&mut self, state: &mut SimulationState, index: usize, tick: u64) {
        let dev = &mut state.devices[index];
        if dev.battery.depleted && dev.depleted_at.is_none() {
            dev.depleted_at = Some(tick);
            let residual = dev.battery.residual_mah;
            state.log.push(tick, EventKind::DeviceDepleted, &dev.name, || {
                format!("residual_mah={residual}")
            });
            self.halted |= match self.stop {
                StopRule::Never => false,
                StopRule::AnyDevice => true,
                StopRule::Device(name) => *name == dev.name,
            };
        }
    }
}

fn provider_name<'a>(task: &'a TaskRt, devices: &'a [DeviceRt]) -> &'a str {
    match &task.provider {
        ProviderRt::Device { index, .. } => &devices[*index].name,
        ProviderRt::Other(name) => name,
    }
}

/// Total mAh a device lost, computed from the energy it spent.
pub fn drained_mah(energy: EnergyAmount, profile: &DeviceEnergyProfile) -> f64 {
    joules_to_mah(energy, profile.supply_voltage_v)
}

#[cfg(test)]
mod tests;
