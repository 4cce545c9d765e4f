//! In-memory system model: platforms, networks, contracts and applications.
//!
//! A model is assembled from a [`Declarations`] set by [`build_system`], which
//! enforces identity and reference invariants and puts every top-level
//! collection into canonical (name-sorted) order. Contract agreement rules
//! live in [`crate::validate`].

mod build;
mod topology;

pub use build::{build_system, ApplicationDecl, Declarations, ModelError, ModelErrorKind, Spanned, SystemDecl};
pub use topology::{shortest_path_latency, PathTable, Route, Topology};

use std::collections::BTreeSet;
use std::fmt;

/// The complete parsed system.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IoTSystemModel {
    pub name: String,
    pub platforms: Vec<Platform>,
    pub networks: Vec<NetworkLink>,
    pub applications: Vec<Application>,
    pub contracts: Vec<ServiceContract>,
    /// Plain interfaces offered by components that are not backed by a
    /// device contract (e.g. a component's HTTP API).
    pub interfaces: Vec<InterfaceDecl>,
    pub physical_entities: Vec<PhysicalEntity>,
    pub sim_config: SimConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub simulation_time: u64,
    /// Wall-clock seconds represented by one tick.
    pub tick_seconds: f64,
    /// Always zero in a freshly built model; the engine owns the running value.
    pub global_timer: u64,
    pub execution_modules: Vec<ExecutionModuleDecl>,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            simulation_time: 0,
            tick_seconds: 60.0,
            global_timer: 0,
            execution_modules: Vec::new(),
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionModuleDecl {
    pub module: String,
    pub language: String,
    pub code: String,
}

/// Latitude/longitude in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeoLocation {
    latitude: f64,
    longitude: f64,
}

impl GeoLocation {
    pub fn new(latitude: f64, longitude: f64) -> Result<Self, String> {
        if !(-90.0..=90.0).contains(&latitude) {
            return Err(format!("latitude {latitude} outside [-90, 90]"));
        }
        if !(-180.0..=180.0).contains(&longitude) {
            return Err(format!("longitude {longitude} outside [-180, 180]"));
        }
        Ok(Self {
            latitude,
            longitude,
        })
    }

    pub fn latitude(&self) -> f64 {
        self.latitude
    }

    pub fn longitude(&self) -> f64 {
        self.longitude
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalEntity {
    pub name: String,
    pub location: GeoLocation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tier {
    Cloud,
    Fog,
    Device,
}

impl Tier {
    pub fn keyword(self) -> &'static str {
        match self {
            Tier::Cloud => "cloud",
            Tier::Fog => "fog",
            Tier::Device => "device",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlatformKind {
    Cloud,
    Fog,
    Device(DeviceSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSpec {
    pub attached_to: String,
    pub energy: DeviceEnergyProfile,
    pub data_source: DataSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Platform {
    pub name: String,
    pub kind: PlatformKind,
    pub location: GeoLocation,
    pub cpu_frequency_ghz: f64,
    pub provided_software: BTreeSet<String>,
    pub mtbf_hours: f64,
    pub mttr_hours: f64,
    pub services: Vec<ServicePort>,
}

impl Platform {
    pub fn tier(&self) -> Tier {
        match self.kind {
            PlatformKind::Cloud => Tier::Cloud,
            PlatformKind::Fog => Tier::Fog,
            PlatformKind::Device(_) => Tier::Device,
        }
    }

    pub fn device(&self) -> Option<&DeviceSpec> {
        match &self.kind {
            PlatformKind::Device(spec) => Some(spec),
            _ => None,
        }
    }

    pub fn provides_all(&self, software: &BTreeSet<String>) -> bool {
        software.is_subset(&self.provided_software)
    }

    pub fn availability(&self) -> f64 {
        self.mtbf_hours / (self.mtbf_hours + self.mttr_hours)
    }
}

/// Energy parameters of a battery-powered device.
///
/// Units follow the key names: kilobits, volts, milliamperes, milliseconds,
/// nanojoules per bit and picojoules per bit per m^n.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceEnergyProfile {
    pub battery_capacity_mah: f64,
    pub residual_energy_mah: f64,
    pub supply_voltage_v: f64,
    pub sense_current_ma: f64,
    pub sense_duration_ms: f64,
    pub packet_kb: f64,
    pub e_elec_nj_per_bit: f64,
    pub e_amp_pj_per_bit_m: f64,
    pub loss_exponent_n: u32,
    pub depletion_threshold_mah: f64,
}

pub const DEFAULT_DEPLETION_THRESHOLD_MAH: f64 = 5.0;

impl DeviceEnergyProfile {
    /// A full battery with the default depletion threshold.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        battery_capacity_mah: f64,
        supply_voltage_v: f64,
        sense_current_ma: f64,
        sense_duration_ms: f64,
        packet_kb: f64,
        e_elec_nj_per_bit: f64,
        e_amp_pj_per_bit_m: f64,
        loss_exponent_n: u32,
    ) -> Self {
        Self {
            battery_capacity_mah,
            residual_energy_mah: battery_capacity_mah,
            supply_voltage_v,
            sense_current_ma,
            sense_duration_ms,
            packet_kb,
            e_elec_nj_per_bit,
            e_amp_pj_per_bit_m,
            loss_exponent_n,
            depletion_threshold_mah: DEFAULT_DEPLETION_THRESHOLD_MAH,
        }
    }

    pub fn with_threshold(mut self, threshold_mah: f64) -> Self {
        self.depletion_threshold_mah = threshold_mah;
        self
    }

    pub fn check(&self) -> Result<(), String> {
        let positive = [
            ("battery_mah", self.battery_capacity_mah),
            ("supply_v", self.supply_voltage_v),
            ("sense_current_ma", self.sense_current_ma),
            ("sense_duration_ms", self.sense_duration_ms),
            ("packet_kb", self.packet_kb),
            ("e_elec_nj_per_bit", self.e_elec_nj_per_bit),
            ("e_amp_pj_per_bit_m", self.e_amp_pj_per_bit_m),
        ];
        for (key, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(format!("{key} must be positive, got {value}"));
            }
        }
        if self.loss_exponent_n == 0 {
            return Err("loss_exponent must be a positive integer".into());
        }
        if self.depletion_threshold_mah.is_nan() || self.depletion_threshold_mah < 0.0 {
            return Err("depletion_threshold_mah must be non-negative".into());
        }
        if self.depletion_threshold_mah >= self.battery_capacity_mah {
            return Err(format!(
                "depletion threshold {} mAh must be below battery capacity {} mAh",
                self.depletion_threshold_mah, self.battery_capacity_mah
            ));
        }
        if !(0.0..=self.battery_capacity_mah).contains(&self.residual_energy_mah) {
            return Err("residual energy outside [0, capacity]".into());
        }
        Ok(())
    }
}

/// How a device produces sensed values during simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Constant(f64),
    /// Inclusive range; `seed` pins the device's own stream.
    Uniform { lo: f64, hi: f64, seed: Option<u64> },
    /// Replayed in order, cycling when exhausted.
    Trace(Vec<f64>),
}

impl DataSource {
    pub fn check(&self) -> Result<(), String> {
        match self {
            DataSource::Constant(v) if !v.is_finite() => Err("constant must be finite".into()),
            DataSource::Uniform { lo, hi, .. } if !(lo.is_finite() && hi.is_finite()) => {
                Err("uniform bounds must be finite".into())
            }
            DataSource::Uniform { lo, hi, .. } if lo > hi => {
                Err(format!("uniform lower bound {lo} exceeds upper bound {hi}"))
            }
            DataSource::Trace(values) if values.is_empty() => Err("trace must not be empty".into()),
            DataSource::Trace(values) if values.iter().any(|v| !v.is_finite()) => {
                Err("trace values must be finite".into())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkLink {
    pub endpoint_a: String,
    pub endpoint_b: String,
    pub protocol: String,
    pub latency_ms: f64,
    pub distance_m: f64,
}

impl NetworkLink {
    pub fn connects(&self, platform: &str) -> Option<&str> {
        if self.endpoint_a == platform {
            Some(&self.endpoint_b)
        } else if self.endpoint_b == platform {
            Some(&self.endpoint_a)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Application {
    pub name: String,
    pub region: GeoLocation,
    pub components: Vec<Component>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub name: String,
    pub mean_cpu_demand_cycles: f64,
    pub required_software: BTreeSet<String>,
    pub required_interfaces: Vec<RequiredPort>,
    pub provided_service: Option<ServicePort>,
    pub periodic_request: Option<PeriodicRequest>,
    pub event_request: Option<EventRequest>,
    /// Platform the component runs on during simulation, if pinned.
    pub host: Option<String>,
}

impl Component {
    pub fn new(name: impl Into<String>, mean_cpu_demand_cycles: f64) -> Self {
        Self {
            name: name.into(),
            mean_cpu_demand_cycles,
            required_software: BTreeSet::new(),
            required_interfaces: Vec::new(),
            provided_service: None,
            periodic_request: None,
            event_request: None,
            host: None,
        }
    }
}

/// A provided service endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServicePort {
    pub name: String,
    pub interface: String,
    pub protocol: String,
}

impl ServicePort {
    pub fn new(
        name: impl Into<String>,
        interface: impl Into<String>,
        protocol: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            interface: interface.into(),
            protocol: protocol.into(),
        }
    }
}

/// A consumer-side port. `interface` may name either side of a contract;
/// `provider` optionally pins the component or platform that serves it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequiredPort {
    pub name: String,
    pub interface: String,
    pub protocol: String,
    pub provider: Option<String>,
}

impl RequiredPort {
    pub fn port(&self) -> ServicePort {
        ServicePort::new(&self.name, &self.interface, &self.protocol)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodicRequest {
    pub task: String,
    pub interval_ticks: u64,
    pub local_timer: u64,
    pub provider: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRequest {
    pub task: String,
    pub condition: ConditionExpr,
    pub provider: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterfaceDecl {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceContract {
    pub name: String,
    pub provider_interface: String,
    pub consumer_interface: String,
    pub tasks: Vec<Task>,
    pub message_type: MessageType,
}

impl ServiceContract {
    pub fn task(&self, name: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.name == name)
    }

    pub fn declares(&self, interface: &str) -> bool {
        self.provider_interface == interface || self.consumer_interface == interface
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MessageType {
    pub name: String,
    pub fields: Vec<(String, ScalarKind)>,
}

impl MessageType {
    pub fn has_field(&self, field: &str) -> bool {
        self.fields.iter().any(|(f, _)| f == field)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarKind {
    Real,
    Integer,
    Text,
    Boolean,
}

impl ScalarKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ScalarKind::Real => "real",
            ScalarKind::Integer => "integer",
            ScalarKind::Text => "text",
            ScalarKind::Boolean => "boolean",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Some(match word {
            "real" => ScalarKind::Real,
            "integer" => ScalarKind::Integer,
            "text" => ScalarKind::Text,
            "boolean" => ScalarKind::Boolean,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub name: String,
    pub kind: TaskKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Sense,
    Actuate,
    Transmit,
    Receive,
    Compute,
}

impl TaskKind {
    pub fn keyword(self) -> &'static str {
        match self {
            TaskKind::Sense => "sense",
            TaskKind::Actuate => "actuate",
            TaskKind::Transmit => "transmit",
            TaskKind::Receive => "receive",
            TaskKind::Compute => "compute",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Some(match word {
            "sense" => TaskKind::Sense,
            "actuate" => TaskKind::Actuate,
            "transmit" => TaskKind::Transmit,
            "receive" => TaskKind::Receive,
            "compute" => TaskKind::Compute,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
            CompareOp::Eq => "==",
            CompareOp::Ne => "!=",
        }
    }

    pub fn apply(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CompareOp::Lt => lhs < rhs,
            CompareOp::Le => lhs <= rhs,
            CompareOp::Gt => lhs > rhs,
            CompareOp::Ge => lhs >= rhs,
            CompareOp::Eq => lhs == rhs,
            CompareOp::Ne => lhs != rhs,
        }
    }
}

/// `field op threshold`, e.g. `level_cm > 20`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionExpr {
    pub field: String,
    pub op: CompareOp,
    pub threshold: f64,
}

impl fmt::Display for ConditionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.field, self.op.symbol(), self.threshold)
    }
}

impl IoTSystemModel {
    pub fn platform(&self, name: &str) -> Option<&Platform> {
        self.platforms.iter().find(|p| p.name == name)
    }

    pub fn contract(&self, name: &str) -> Option<&ServiceContract> {
        self.contracts.iter().find(|c| c.name == name)
    }

    pub fn components(&self) -> impl Iterator<Item = (&Application, &Component)> {
        self.applications
            .iter()
            .flat_map(|app| app.components.iter().map(move |c| (app, c)))
    }

    pub fn component(&self, name: &str) -> Option<&Component> {
        self.components().map(|(_, c)| c).find(|c| c.name == name)
    }

    pub fn component_mut(&mut self, name: &str) -> Option<&mut Component> {
        self.applications
            .iter_mut()
            .flat_map(|app| app.components.iter_mut())
            .find(|c| c.name == name)
    }

    pub fn devices(&self) -> impl Iterator<Item = (&Platform, &DeviceSpec)> {
        self.platforms
            .iter()
            .filter_map(|p| p.device().map(|spec| (p, spec)))
    }

    /// Contracts exposing a task with this name.
    pub fn contracts_with_task<'a>(
        &'a self,
        task: &'a str,
    ) -> impl Iterator<Item = &'a ServiceContract> + 'a {
        self.contracts.iter().filter(move |c| c.task(task).is_some())
    }

    pub fn link_between(&self, a: &str, b: &str) -> Option<&NetworkLink> {
        self.networks.iter().find(|l| l.connects(a) == Some(b))
    }

    /// Re-checks every structural invariant; a built model always passes.
    pub fn check(&self) -> Result<(), Vec<ModelError>> {
        build_system(Declarations::from_model(self)).map(|_| ())
    }
}
