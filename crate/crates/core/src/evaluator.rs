//! Out-of-sample evaluation: replay a fixed plan under fresh travel-time
//! draws and count how often each vehicle misses a window.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Matrix, PdpNetwork};
use crate::scenarios::{
    realize, sample_pair_multipliers, stream_rng, ScenarioConfig, ScenarioError, ScenarioSet,
    StreamTag,
};
use crate::solver::{aligned_table, RoutePlan};
use crate::TIME_EPS;

/// Name of the only dispatch policy: serve at `max(window open, arrival)`.
pub const EARLIEST_FEASIBLE: &str = "earliest-feasible";

/// Normal quantile for two-sided 95% intervals.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("route visits unknown node {0}")]
    UnknownNode(usize),
    #[error("trials must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Scenarios(#[from] ScenarioError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RouteOutcome {
    Success,
    Violation {
        /// Position in the route.
        position: usize,
        node: usize,
        /// Seconds past the window close.
        lateness: f64,
    },
}

impl RouteOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, RouteOutcome::Success)
    }
}

/// Drives `route` with earliest-feasible dispatch starting at time zero and
/// reports the first window it misses.
pub fn simulate_route(
    route: &[usize],
    times: &Matrix,
    earliest: &[f64],
    latest: &[f64],
) -> Result<RouteOutcome, EvalError> {
    let size = times.size().min(earliest.len()).min(latest.len());
    if let Some(&bad) = route.iter().find(|&&node| node >= size) {
        return Err(EvalError::UnknownNode(bad));
    }
    let mut now = 0.0;
    for (position, pair) in route.windows(2).enumerate() {
        let (from, to) = (pair[0], pair[1]);
        now = (now + times.get(from, to)).max(earliest[to]);
        if now > latest[to] + TIME_EPS {
            return Ok(RouteOutcome::Violation {
                position: position + 1,
                node: to,
                lateness: now - latest[to],
            });
        }
    }
    Ok(RouteOutcome::Success)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub mean: f64,
    pub variance: f64,
    pub seed: u64,
    pub trials: usize,
}

impl EvalConfig {
    pub fn new(seed: u64, trials: usize) -> Self {
        let base = ScenarioConfig::new(seed, trials.max(1));
        Self {
            mean: base.mean,
            variance: base.variance,
            seed,
            trials,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureEstimate {
    pub failures: u64,
    pub frequency: f64,
    /// Half-width of the normal-approximation 95% interval.
    pub half_width: f64,
}

impl FailureEstimate {
    fn from_counts(failures: u64, trials: u64) -> Self {
        let p = failures as f64 / trials as f64;
        Self::from_frequency(failures, p, trials)
    }

    fn from_frequency(failures: u64, p: f64, trials: u64) -> Self {
        Self {
            failures,
            frequency: p,
            half_width: Z95 * (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleReport {
    /// One-based, as in the route tables.
    pub vehicle: usize,
    pub v_nodes: String,
    pub graph_nodes: String,
    pub failure: FailureEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub trials: usize,
    pub seed: Option<u64>,
    pub policy: String,
    pub vehicles: Vec<VehicleReport>,
    /// A trial fails when any vehicle fails.
    pub overall: FailureEstimate,
}

impl EvaluationReport {
    pub fn max_vehicle_failure(&self) -> f64 {
        self.vehicles
            .iter()
            .map(|v| v.failure.frequency)
            .fold(0.0, f64::max)
    }

    /// Table with one row per vehicle, failure as a fraction of trials.
    pub fn table(&self) -> String {
        let rows: Vec<[String; 4]> = self
            .vehicles
            .iter()
            .map(|v| {
                [
                    v.vehicle.to_string(),
                    v.v_nodes.clone(),
                    v.graph_nodes.clone(),
                    format_fraction(v.failure.frequency),
                ]
            })
            .collect();
        let mut out = aligned_table(&["MHE", "V Nodes", "Graph Nodes", "% Failure"], &rows);
        out.push_str(&format!(
            "overall: {} ({} trials, {} dispatch)\n",
            format_fraction(self.overall.frequency),
            self.trials,
            self.policy
        ));
        out
    }
}

fn format_fraction(p: f64) -> String {
    let s = format!("{p:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() {
        "0".into()
    } else {
        s.to_string()
    }
}

fn vehicle_fails(plan: &RoutePlan, network: &PdpNetwork, times: &Matrix) -> Vec<bool> {
    let earliest: Vec<f64> = (0..network.node_count())
        .map(|i| network.earliest(i))
        .collect();
    let latest: Vec<f64> = (0..network.node_count())
        .map(|i| network.latest(i))
        .collect();
    plan.routes()
        .iter()
        .map(|r| {
            !simulate_route(r, times, &earliest, &latest)
                .expect("plan nodes are validated")
                .is_success()
        })
        .collect()
}

fn assemble(
    plan: &RoutePlan,
    network: &PdpNetwork,
    per_trial: &[Vec<bool>],
    weights: Option<&[f64]>,
    seed: Option<u64>,
) -> EvaluationReport {
    let trials = per_trial.len() as u64;
    let estimate = |hit: &dyn Fn(&[bool]) -> bool| {
        let failures = per_trial.iter().filter(|f| hit(f)).count() as u64;
        match weights {
            None => FailureEstimate::from_counts(failures, trials),
            Some(w) => {
                let p = per_trial
                    .iter()
                    .zip(w)
                    .filter(|(f, _)| hit(f))
                    // fold from +0.0: an empty f64 sum is -0.0
                    .fold(0.0, |acc, (_, p)| acc + p)
                    .min(1.0);
                FailureEstimate::from_frequency(failures, p, trials)
            }
        }
    };
    let vehicles = (0..plan.vehicle_count())
        .map(|k| VehicleReport {
            vehicle: k + 1,
            v_nodes: plan.v_nodes(k),
            graph_nodes: plan.graph_nodes(network, k),
            failure: estimate(&|f: &[bool]| f[k]),
        })
        .collect();
    EvaluationReport {
        trials: per_trial.len(),
        seed,
        policy: EARLIEST_FEASIBLE.into(),
        vehicles,
        overall: estimate(&|f: &[bool]| f.iter().any(|&x| x)),
    }
}

/// Monte Carlo failure estimate over `config.trials` fresh draws.
///
/// Trial `t` samples from the evaluation stream `(seed, t)`, which is
/// disjoint from every scenario-generation stream.
pub fn out_of_sample(
    plan: &RoutePlan,
    network: &PdpNetwork,
    config: &EvalConfig,
) -> Result<EvaluationReport, EvalError> {
    if config.trials == 0 {
        return Err(EvalError::NoTrials);
    }
    let scenario_cfg = ScenarioConfig {
        mean: config.mean,
        variance: config.variance,
        seed: config.seed,
        count: config.trials,
    };
    let sampler = scenario_cfg.sampler()?;
    let nodes = network.node_count();
    let per_trial: Vec<Vec<bool>> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(config.seed, StreamTag::Evaluation, t as u64);
            let mult = sample_pair_multipliers(nodes, &sampler, &mut rng);
            let times = realize(network.time_matrix(), &mult);
            vehicle_fails(plan, network, &times)
        })
        .collect();
    Ok(assemble(plan, network, &per_trial, None, Some(config.seed)))
}

/// Failure frequencies over a given scenario set, weighted by its
/// probabilities.
pub fn evaluate_on_scenarios(
    plan: &RoutePlan,
    network: &PdpNetwork,
    scenarios: &ScenarioSet,
) -> Result<EvaluationReport, EvalError> {
    scenarios.check_network(network)?;
    let per_trial: Vec<Vec<bool>> = (0..scenarios.len())
        .map(|s| vehicle_fails(plan, network, &scenarios.travel_times(network, s)))
        .collect();
    let seed = scenarios.provenance().map(|p| p.config.seed);
    Ok(assemble(
        plan,
        network,
        &per_trial,
        Some(scenarios.probabilities()),
        seed,
    ))
}
