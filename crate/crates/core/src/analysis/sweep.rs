use std::collections::BTreeMap;
use std::fmt::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::rng::{sub_seed, SimRng};
use crate::engine::{run_with, FreshnessPolicy, RunOptions, SimulationError, StopRule};
use crate::model::IoTSystemModel;
use crate::validate::{resolve_bindings, Endpoint, Trigger};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SweepParameter {
    /// Request interval of every periodic component reading the device.
    Interval(Vec<u64>),
    /// Freshness window, with intervals as declared.
    MaxAge(Vec<u64>),
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::Interval(_) => "interval_ticks",
            SweepParameter::MaxAge(_) => "max_age_ticks",
        }
    }

    fn values(&self) -> &[u64] {
        match self {
            SweepParameter::Interval(v) | SweepParameter::MaxAge(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    /// Closed range the per-round transmit distance is drawn from, in metres.
    pub distance_range_m: (f64, f64),
    /// Freshness window for interval sweeps.
    pub max_age_ticks: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            distance_range_m: (1.0, 50.0),
            max_age_ticks: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub parameter: u64,
    /// `None` when some round did not deplete the device.
    pub mean_lifetime_ticks: Option<f64>,
    pub stddev: Option<f64>,
    /// Per-round lifetime; `None` for a round without depletion.
    pub lifetimes: Vec<Option<u64>>,
}

impl SweepRow {
    pub fn flagged(&self) -> bool {
        self.lifetimes.iter().any(Option::is_none)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub device: String,
    pub parameter: &'static str,
    pub rounds: usize,
    /// Ascending by parameter value.
    pub rows: Vec<SweepRow>,
}

pub const NO_DEPLETION: &str = "no depletion within simulation_time";

impl SweepTable {
    /// `parameter,mean_lifetime_ticks,stddev`; flagged rows leave both blank.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["parameter", "mean_lifetime_ticks", "stddev"])?;
        for r in &self.rows {
            w.write_record([
                r.parameter.to_string(),
                r.mean_lifetime_ticks.map(|m| m.to_string()).unwrap_or_default(),
                r.stddev.map(|s| s.to_string()).unwrap_or_default(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "lifetime of {} over {} round(s)", self.device, self.rounds);
        let _ = writeln!(out, "{:>14}  {:>20}  {:>14}", self.parameter, "mean_lifetime_ticks", "stddev");
        for r in &self.rows {
            match (r.mean_lifetime_ticks, r.stddev) {
                (Some(m), Some(s)) => {
                    let _ = writeln!(out, "{:>14}  {m:>20.3}  {s:>14.3}", r.parameter);
                }
                _ => {
                    let _ = writeln!(out, "{:>14}  {NO_DEPLETION}", r.parameter);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("unknown device {0}")]
    UnknownDevice(String),
    #[error("rounds must be at least 1")]
    NoRounds,
    #[error("no parameter values to sweep")]
    NoValues,
    #[error("interval must be positive")]
    ZeroInterval,
    #[error("invalid distance range [{0}, {1}]")]
    DistanceRange(f64, f64),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

fn mean_and_stddev(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Lifetime of `device` under each parameter value, averaged over rounds.
///
/// Round `r` draws one transmit distance from the configured range using a
/// stream derived from `(seed, r)` alone, so every parameter value sees the
/// same distances and data.
pub fn lifetime_sweep(
    model: &IoTSystemModel,
    device: &str,
    parameter: &SweepParameter,
    rounds: usize,
    seed: u64,
    options: &SweepOptions,
) -> Result<SweepTable, SweepError> {
    if model.platform(device).and_then(|p| p.device()).is_none() {
        return Err(SweepError::UnknownDevice(device.to_string()));
    }
    if rounds == 0 {
        return Err(SweepError::NoRounds);
    }
    let mut values = parameter.values().to_vec();
    if values.is_empty() {
        return Err(SweepError::NoValues);
    }
    values.sort_unstable();
    values.dedup();
    if matches!(parameter, SweepParameter::Interval(_)) && values[0] == 0 {
        return Err(SweepError::ZeroInterval);
    }
    let (lo, hi) = options.distance_range_m;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
        return Err(SweepError::DistanceRange(lo, hi));
    }

    let (bindings, _) = resolve_bindings(model);
    let readers: Vec<String> = bindings
        .tasks
        .iter()
        .filter(|t| t.trigger == Trigger::Periodic)
        .filter(|t| matches!(bindings.provider_of(t), Endpoint::Platform(p) if p == device))
        .map(|t| t.component.clone())
        .collect();

    let jobs: Vec<(usize, usize)> = (0..values.len()).flat_map(|v| (0..rounds).map(move |r| (v, r))).collect();
    let results: Vec<Result<Option<u64>, SimulationError>> = jobs
        .par_iter()
        .map(|&(v, r)| {
            let round_seed = sub_seed(seed, r as u64);
            let distance = SimRng::new(round_seed).uniform(lo, hi);
            let mut variant = model.clone();
            let mut freshness = FreshnessPolicy::new(options.max_age_ticks);
            match parameter {
                SweepParameter::Interval(_) => {
                    for name in &readers {
                        if let Some(p) = variant.component_mut(name).and_then(|c| c.periodic_request.as_mut()) {
                            p.interval_ticks = values[v];
                        }
                    }
                }
                SweepParameter::MaxAge(_) => freshness = FreshnessPolicy::new(values[v]),
            }
            let run = RunOptions {
                freshness,
                stop: StopRule::Device(device.to_string()),
                seed: Some(sub_seed(round_seed, 0x5EED)),
                distance_overrides: BTreeMap::from([(device.to_string(), distance)]),
                record_log: false,
                registry: None,
            };
            variant.sim_config.execution_modules.clear();
            Ok(run_with(&variant, &run)?.lifetime(device))
        })
        .collect();

    let mut rows: Vec<SweepRow> = values
        .iter()
        .map(|&parameter| SweepRow {
            parameter,
            mean_lifetime_ticks: None,
            stddev: None,
            lifetimes: Vec::with_capacity(rounds),
        })
        .collect();
    for (&(v, _), result) in jobs.iter().zip(results) {
        rows[v].lifetimes.push(result?);
    }
    for row in &mut rows {
        if !row.flagged() {
            let ticks: Vec<f64> = row.lifetimes.iter().map(|l| l.unwrap_or(0) as f64).collect();
            let (mean, sd) = mean_and_stddev(&ticks);
            row.mean_lifetime_ticks = Some(mean);
            row.stddev = Some(sd);
        }
    }
    Ok(SweepTable {
        device: device.to_string(),
        parameter: parameter.name(),
        rounds,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_stddev() {
        let (m, s) = mean_and_stddev(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_and_stddev(&[3.0]), (3.0, 0.0));
    }
}
