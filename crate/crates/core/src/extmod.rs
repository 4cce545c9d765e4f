//! Named analysis hooks run once before the first tick.
//!
//! A hook receives a [`SystemSnapshot`] (an owned copy of the model plus
//! the run's scalar state) and returns a text report. Hooks never see live
//! simulation state, so registering them cannot change a run's outcome.
//! The `language` and `code` of a declared module are informational only.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::analysis::{evaluated_deployments, rank_scenarios, scenarios_csv, Metric};
use crate::engine::SimulationState;
use crate::model::IoTSystemModel;

/// Read-only copy of the system at the moment modules run.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSnapshot {
    pub model: IoTSystemModel,
    pub global_timer: u64,
    /// Device name and residual charge in mAh.
    pub residual_energy: Vec<(String, f64)>,
}

impl SystemSnapshot {
    pub fn capture(model: &IoTSystemModel, state: &SimulationState) -> Self {
        Self {
            model: model.clone(),
            global_timer: state.global_timer,
            residual_energy: state.residuals(),
        }
    }

    /// Snapshot of a model before any simulation.
    pub fn of_model(model: &IoTSystemModel) -> Self {
        Self {
            model: model.clone(),
            global_timer: model.sim_config.global_timer,
            residual_energy: model
                .devices()
                .map(|(p, spec)| (p.name.clone(), spec.energy.residual_energy_mah))
                .collect(),
        }
    }
}

pub type Hook = Arc<dyn Fn(&SystemSnapshot) -> String + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModuleError {
    #[error("execution module {0} is already registered")]
    Duplicate(String),
    #[error("unknown execution module {0}")]
    Unknown(String),
}

#[derive(Clone, Default)]
pub struct ModuleRegistry {
    entries: BTreeMap<String, Hook>,
}

impl fmt::Debug for ModuleRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.entries.keys()).finish()
    }
}

pub const DEPLOYMENT_SCENARIOS: &str = "DeploymentScenarios";
pub const AVAILABILITY_ANALYSIS: &str = "AvailabilityAnalysis";
pub const RESPONSE_TIME_ANALYSIS: &str = "ResponseTimeAnalysis";

impl ModuleRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding the three built-in analysis modules.
    pub fn with_builtins() -> Self {
        let mut r = Self::new();
        r.register_module(DEPLOYMENT_SCENARIOS, deployment_scenarios)
            .and_then(|_| r.register_module(AVAILABILITY_ANALYSIS, availability_analysis))
            .and_then(|_| r.register_module(RESPONSE_TIME_ANALYSIS, response_time_analysis))
            .expect("built-in names are distinct");
        r
    }

    pub fn register_module(
        &mut self,
        name: impl Into<String>,
        hook: impl Fn(&SystemSnapshot) -> String + Send + Sync + 'static,
    ) -> Result<(), ModuleError> {
        let name = name.into();
        if self.entries.contains_key(&name) {
            return Err(ModuleError::Duplicate(name));
        }
        self.entries.insert(name, Arc::new(hook));
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn invoke_module(&self, name: &str, snapshot: &SystemSnapshot) -> Result<String, ModuleError> {
        let hook = self
            .entries
            .get(name)
            .ok_or_else(|| ModuleError::Unknown(name.to_string()))?;
        Ok(hook(snapshot))
    }
}

fn ranked_csv(snapshot: &SystemSnapshot, metric: Option<Metric>) -> String {
    let result = evaluated_deployments(&snapshot.model).map(|s| match metric {
        Some(m) => rank_scenarios(&s, m),
        None => s,
    });
    match result.map_err(|e| e.to_string()).and_then(|s| scenarios_csv(&s).map_err(|e| e.to_string())) {
        Ok(csv) => csv,
        Err(e) => format!("error: {e}\n"),
    }
}

/// Every eligible scenario in enumeration order.
pub fn deployment_scenarios(snapshot: &SystemSnapshot) -> String {
    ranked_csv(snapshot, None)
}

/// Scenarios ranked by availability, highest first.
pub fn availability_analysis(snapshot: &SystemSnapshot) -> String {
    ranked_csv(snapshot, Some(Metric::Availability))
}

/// Scenarios ranked by response time, lowest first.
pub fn response_time_analysis(snapshot: &SystemSnapshot) -> String {
    ranked_csv(snapshot, Some(Metric::ResponseTime))
}
