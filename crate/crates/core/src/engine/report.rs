use std::collections::BTreeMap;
use std::fmt::Write;

use super::{EventKind, SimEvent, SimulationState};
use crate::model::IoTSystemModel;

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSummary {
    pub name: String,
    pub capacity_mah: f64,
    pub residual_mah: f64,
    /// Tick of the device's depletion, if it happened.
    pub lifetime: Option<u64>,
    pub samples: u64,
    pub cache_hits: u64,
    /// Sum of all sense and transmit energy drawn.
    pub energy_joules: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub model: String,
    pub simulation_time: u64,
    /// Last tick processed; `None` when the loop never ran a tick.
    pub final_tick: Option<u64>,
    /// Halted early by the stop rule.
    pub stopped: bool,
    pub devices: Vec<DeviceSummary>,
    pub event_counts: BTreeMap<EventKind, u64>,
    /// In invocation order.
    pub module_outputs: Vec<(String, String)>,
    /// Empty unless the run recorded its log.
    pub events: Vec<SimEvent>,
}

impl SimulationReport {
    pub(super) fn assemble(
        model: &IoTSystemModel,
        state: SimulationState,
        final_tick: Option<u64>,
        stopped: bool,
        module_outputs: Vec<(String, String)>,
    ) -> Self {
        let devices = state
            .devices
            .iter()
            .map(|d| DeviceSummary {
                name: d.name.clone(),
                capacity_mah: d.profile.battery_capacity_mah,
                residual_mah: d.battery.residual_mah,
                lifetime: d.depleted_at,
                samples: d.samples,
                cache_hits: d.cache_hits,
                energy_joules: d.energy_joules,
            })
            .collect();
        Self {
            model: model.name.clone(),
            simulation_time: model.sim_config.simulation_time,
            final_tick,
            stopped,
            devices,
            event_counts: state.log.count_map(),
            module_outputs,
            events: state.log.events,
        }
    }

    pub fn lifetime(&self, device: &str) -> Option<u64> {
        self.device(device).and_then(|d| d.lifetime)
    }

    pub fn device(&self, device: &str) -> Option<&DeviceSummary> {
        self.devices.iter().find(|d| d.name == device)
    }

    pub fn count(&self, kind: EventKind) -> u64 {
        self.event_counts.get(&kind).copied().unwrap_or(0)
    }

    /// `tick,kind,subject,detail`.
    pub fn events_csv(&self) -> Result<String, csv::Error> {
        write_events_csv(&self.events)
    }

    /// `device,capacity_mah,residual_mah,lifetime_tick,samples,cache_hits,energy_j`.
    pub fn devices_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "device",
            "capacity_mah",
            "residual_mah",
            "lifetime_tick",
            "samples",
            "cache_hits",
            "energy_j",
        ])?;
        for d in &self.devices {
            w.write_record([
                d.name.clone(),
                d.capacity_mah.to_string(),
                d.residual_mah.to_string(),
                d.lifetime.map(|t| t.to_string()).unwrap_or_default(),
                d.samples.to_string(),
                d.cache_hits.to_string(),
                d.energy_joules.to_string(),
            ])?;
        }
        finish(w)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model {}", self.model);
        match self.final_tick {
            Some(t) if self.stopped => {
                let _ = writeln!(out, "stopped at tick {t} of {}", self.simulation_time);
            }
            Some(t) => {
                let _ = writeln!(out, "ran ticks 0..={t} of {}", self.simulation_time);
            }
            None => {
                let _ = writeln!(out, "no ticks run");
            }
        }
        if !self.devices.is_empty() {
            let _ = writeln!(out, "devices:");
            let width = self.devices.iter().map(|d| d.name.len()).max().unwrap_or(0);
            for d in &self.devices {
                let lifetime = match d.lifetime {
                    Some(t) => format!("depleted at tick {t}"),
                    None => "not depleted".to_string(),
                };
                let _ = writeln!(
                    out,
                    "  {:<width$}  residual {:.6} / {} mAh  samples {}  cache hits {}  {lifetime}",
                    d.name, d.residual_mah, d.capacity_mah, d.samples, d.cache_hits
                );
            }
        }
        let _ = writeln!(out, "events:");
        for kind in EventKind::ALL {
            let n = self.count(kind);
            if n > 0 {
                let _ = writeln!(out, "  {kind:<16} {n}");
            }
        }
        for (name, output) in &self.module_outputs {
            let _ = writeln!(out, "module {name}:");
            for line in output.lines() {
                let _ = writeln!(out, "  {line}");
            }
        }
        out
    }
}

pub(crate) fn write_events_csv(events: &[SimEvent]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["tick", "kind", "subject", "detail"])?;
    for e in events {
        w.write_record([e.tick.to_string().as_str(), e.kind.as_str(), &e.subject, &e.detail])?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, csv::Error> {
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
