//! Deployment enumeration, availability and response-time ranking, and
//! lifetime sweeps.
//!
//! Scenario availability is the product of per-platform availability
//! `MTBF / (MTBF + MTTR)` over the distinct platforms used. Scenario response
//! time sums, over every dependency edge, the shortest-path latency between
//! the two hosts plus the provider's processing time: CPU demand over host
//! frequency for a component, the sensing duration for a device, zero for
//! other platforms.

mod sweep;

pub use sweep::{lifetime_sweep, SweepError, SweepOptions, SweepParameter, SweepRow, SweepTable};

use std::collections::BTreeSet;
use std::fmt::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{IoTSystemModel, PathTable, PlatformKind, Topology};
use crate::validate::{resolve_bindings, Dependency, Endpoint};

#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentScenario {
    pub id: usize,
    /// Component to platform, in model declaration order.
    pub assignment: Vec<(String, String)>,
    pub availability: Option<f64>,
    pub response_time_ms: Option<f64>,
}

impl DeploymentScenario {
    pub fn host(&self, component: &str) -> Option<&str> {
        self.assignment
            .iter()
            .find(|(c, _)| c == component)
            .map(|(_, p)| p.as_str())
    }

    /// `Scenario 7: A>fog_1, B>Michigan`.
    pub fn to_text(&self) -> String {
        let parts: Vec<String> = self.assignment.iter().map(|(c, p)| format!("{c}>{p}")).collect();
        format!("Scenario {}: {}", self.id, parts.join(", "))
    }

    /// `component=platform;...`
    pub fn assignment_field(&self) -> String {
        self.assignment
            .iter()
            .map(|(c, p)| format!("{c}={p}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Highest first.
    Availability,
    /// Lowest first.
    ResponseTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("scenario {id}: {consumer} cannot reach {provider}")]
    Unreachable {
        id: usize,
        consumer: String,
        provider: String,
    },
    #[error("scenario {id} does not place component {component}")]
    Unplaced { id: usize, component: String },
}

/// Precomputed routes and bindings for evaluating many scenarios of one model.
pub struct ScenarioEvaluator<'m> {
    model: &'m IoTSystemModel,
    topology: Topology,
    paths: PathTable,
    dependencies: Vec<Dependency>,
    /// Per platform index: is it a fog.
    fog: Vec<bool>,
}

impl<'m> ScenarioEvaluator<'m> {
    pub fn new(model: &'m IoTSystemModel) -> Self {
        let topology = Topology::new(model);
        let paths = topology.all_pairs();
        let fog = (0..topology.len())
            .map(|i| {
                model
                    .platform(topology.name(i))
                    .is_some_and(|p| matches!(p.kind, PlatformKind::Fog))
            })
            .collect();
        let (bindings, _) = resolve_bindings(model);
        Self {
            model,
            topology,
            paths,
            dependencies: bindings.dependencies,
            fog,
        }
    }

    pub fn dependencies(&self) -> &[Dependency] {
        &self.dependencies
    }

    /// Whether a dependency may run from host `from` to host `to`: a route
    /// exists and the protocols agree or a fog on the route translates.
    fn edge_ok(&self, dep: &Dependency, from: usize, to: usize) -> bool {
        let Some(path) = self.paths.path(from, to) else {
            return false;
        };
        dep.consumer_protocol.eq_ignore_ascii_case(&dep.provider_port.protocol) || path.iter().any(|&i| self.fog[i])
    }

    fn host_of<'s>(&self, scenario: &'s DeploymentScenario, endpoint: &'s Endpoint) -> Result<&'s str, AnalysisError> {
        match endpoint {
            Endpoint::Platform(p) => Ok(p),
            Endpoint::Component(c) => scenario.host(c).ok_or_else(|| AnalysisError::Unplaced {
                id: scenario.id,
                component: c.clone(),
            }),
        }
    }

    pub fn availability(&self, scenario: &DeploymentScenario) -> f64 {
        let hosts: BTreeSet<&str> = scenario.assignment.iter().map(|(_, p)| p.as_str()).collect();
        hosts
            .into_iter()
            .filter_map(|h| self.model.platform(h))
            .map(|p| p.availability())
            .product()
    }

    pub fn response_time(&self, scenario: &DeploymentScenario) -> Result<f64, AnalysisError> {
        let mut total = 0.0;
        for dep in &self.dependencies {
            let consumer = Endpoint::Component(dep.consumer.clone());
            let from = self.host_of(scenario, &consumer)?;
            let to = self.host_of(scenario, &dep.provider)?;
            let latency = self
                .topology
                .index_of(from)
                .zip(self.topology.index_of(to))
                .and_then(|(a, b)| self.paths.latency(a, b))
                .ok_or_else(|| AnalysisError::Unreachable {
                    id: scenario.id,
                    consumer: dep.consumer.clone(),
                    provider: dep.provider.name().to_string(),
                })?;
            total += latency + self.processing_time_ms(&dep.provider, to);
        }
        Ok(total)
    }

    fn processing_time_ms(&self, provider: &Endpoint, host: &str) -> f64 {
        let Some(platform) = self.model.platform(host) else {
            return 0.0;
        };
        match provider {
            Endpoint::Component(c) => {
                let cycles = self.model.component(c).map_or(0.0, |c| c.mean_cpu_demand_cycles);
                cycles / (platform.cpu_frequency_ghz * 1e9) * 1000.0
            }
            Endpoint::Platform(_) => platform.device().map_or(0.0, |d| d.energy.sense_duration_ms),
        }
    }

    /// All eligible scenarios, numbered in lexicographic order of
    /// (component name, platform name) choices.
    pub fn enumerate(&self) -> Vec<DeploymentScenario> {
        let model = self.model;
        let mut order: Vec<&str> = model.components().map(|(_, c)| c.name.as_str()).collect();
        order.sort_unstable();
        let position = |name: &str| order.binary_search(&name).ok();

        let mut platforms: Vec<&str> = model.platforms.iter().map(|p| p.name.as_str()).collect();
        platforms.sort_unstable();
        let eligible: Vec<Vec<usize>> = order
            .iter()
            .map(|name| {
                let c = model.component(name).expect("listed component exists");
                platforms
                    .iter()
                    .map(|p| self.topology.index_of(p).expect("platform is indexed"))
                    .filter(|&i| {
                        model
                            .platform(self.topology.name(i))
                            .is_some_and(|p| p.provides_all(&c.required_software))
                    })
                    .collect()
            })
            .collect();

        // Each edge is checked once its later-placed endpoint is assigned.
        enum Side {
            Slot(usize),
            Fixed(usize),
        }
        let mut checks: Vec<Vec<(usize, Side, Side)>> = (0..order.len()).map(|_| Vec::new()).collect();
        let mut impossible = false;
        for (d, dep) in self.dependencies.iter().enumerate() {
            let Some(consumer) = position(&dep.consumer) else { continue };
            let provider = match &dep.provider {
                Endpoint::Component(c) => match position(c) {
                    Some(s) => Side::Slot(s),
                    None => continue,
                },
                Endpoint::Platform(p) => match self.topology.index_of(p) {
                    Some(i) => Side::Fixed(i),
                    None => {
                        impossible = true;
                        continue;
                    }
                },
            };
            let last = match provider {
                Side::Slot(s) => s.max(consumer),
                Side::Fixed(_) => consumer,
            };
            checks[last].push((d, Side::Slot(consumer), provider));
        }
        if impossible || order.is_empty() {
            return Vec::new();
        }

        let mut out = Vec::new();
        let mut chosen = vec![0usize; order.len()];
        let declared: Vec<&str> = model.components().map(|(_, c)| c.name.as_str()).collect();
        let resolve = |side: &Side, chosen: &[usize]| match side {
            Side::Slot(s) => chosen[*s],
            Side::Fixed(i) => *i,
        };
        // Iterative depth-first search over slots.
        let mut cursor = vec![0usize; order.len()];
        let mut depth = 0usize;
        loop {
            if cursor[depth] == eligible[depth].len() {
                if depth == 0 {
                    break;
                }
                cursor[depth] = 0;
                depth -= 1;
                cursor[depth] += 1;
                continue;
            }
            chosen[depth] = eligible[depth][cursor[depth]];
            let ok = checks[depth].iter().all(|(d, a, b)| {
                self.edge_ok(&self.dependencies[*d], resolve(a, &chosen), resolve(b, &chosen))
            });
            if !ok {
                cursor[depth] += 1;
                continue;
            }
            if depth + 1 == order.len() {
                let assignment = declared
                    .iter()
                    .map(|name| {
                        let slot = position(name).expect("declared component is ordered");
                        (name.to_string(), self.topology.name(chosen[slot]).to_string())
                    })
                    .collect();
                out.push(DeploymentScenario {
                    id: out.len() + 1,
                    assignment,
                    availability: None,
                    response_time_ms: None,
                });
                cursor[depth] += 1;
            } else {
                depth += 1;
            }
        }
        out
    }

    /// Fills both metrics for every scenario in parallel.
    pub fn evaluate(&self, scenarios: &mut [DeploymentScenario]) -> Result<(), AnalysisError> {
        scenarios.par_iter_mut().try_for_each(|s| {
            s.availability = Some(self.availability(s));
            s.response_time_ms = Some(self.response_time(s)?);
            Ok(())
        })
    }
}

pub fn enumerate_deployments(model: &IoTSystemModel) -> Vec<DeploymentScenario> {
    ScenarioEvaluator::new(model).enumerate()
}

/// Enumerates and fills both metrics.
pub fn evaluated_deployments(model: &IoTSystemModel) -> Result<Vec<DeploymentScenario>, AnalysisError> {
    let eval = ScenarioEvaluator::new(model);
    let mut scenarios = eval.enumerate();
    eval.evaluate(&mut scenarios)?;
    Ok(scenarios)
}

pub fn scenario_availability(scenario: &DeploymentScenario, model: &IoTSystemModel) -> f64 {
    ScenarioEvaluator::new(model).availability(scenario)
}

pub fn scenario_response_time(scenario: &DeploymentScenario, model: &IoTSystemModel) -> Result<f64, AnalysisError> {
    ScenarioEvaluator::new(model).response_time(scenario)
}

/// Sorted best first; ties and missing metrics are ordered by id, missing last.
pub fn rank_scenarios(scenarios: &[DeploymentScenario], metric: Metric) -> Vec<DeploymentScenario> {
    let mut ranked = scenarios.to_vec();
    let key = |s: &DeploymentScenario| match metric {
        Metric::Availability => s.availability.map(|a| -a),
        Metric::ResponseTime => s.response_time_ms,
    };
    ranked.sort_by(|a, b| match (key(a), key(b)) {
        (Some(x), Some(y)) => x.total_cmp(&y).then(a.id.cmp(&b.id)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.id.cmp(&b.id),
    });
    ranked
}

/// `id,assignment,availability,response_time_ms`; missing metrics are blank.
pub fn scenarios_csv(scenarios: &[DeploymentScenario]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "assignment", "availability", "response_time_ms"])?;
    for s in scenarios {
        w.write_record([
            s.id.to_string(),
            s.assignment_field(),
            s.availability.map(|a| a.to_string()).unwrap_or_default(),
            s.response_time_ms.map(|r| r.to_string()).unwrap_or_default(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One scenario per line, with metrics when present.
pub fn scenarios_text(scenarios: &[DeploymentScenario]) -> String {
    let mut out = String::new();
    for s in scenarios {
        out.push_str(&s.to_text());
        if let Some(a) = s.availability {
            let _ = write!(out, "  [availability {a:.6}]");
        }
        if let Some(r) = s.response_time_ms {
            let _ = write!(out, "  [response {r:.6} ms]");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests;
