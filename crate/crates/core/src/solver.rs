//! Exact depth-first branch-and-bound for the routing model.
//!
//! Routes are built vehicle by vehicle, node by node. Each partial route
//! carries an earliest-feasible schedule per scenario; a scenario whose
//! schedule misses a window is marked failed, and a branch dies once the
//! failed probability mass exceeds alpha. The deterministic model is the
//! special case of one nominal scenario and alpha zero.
//!
//! Vehicles are interchangeable, so a newly opened vehicle must serve the
//! lowest-indexed task still unassigned. Idle vehicles come last.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Matrix, PdpNetwork};
use crate::scenarios::{ScenarioError, ScenarioSet};
use crate::TIME_EPS;

/// Largest task count the bitmask search supports.
pub const MAX_TASKS: usize = 31;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("alpha must lie in [0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("the supremum shortcut requires alpha = 0, got {0}")]
    AlphaNotZero(f64),
    #[error("instance has {0} tasks; at most {MAX_TASKS} are supported")]
    TooManyTasks(usize),
    #[error(transparent)]
    Scenarios(#[from] ScenarioError),
}

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("plan has {found} routes for {expected} vehicles")]
    VehicleCount { expected: usize, found: usize },
    #[error("route of vehicle {0} must start at the source and end at the terminal")]
    Endpoints(usize),
    #[error("route of vehicle {vehicle} visits unknown node {node}")]
    UnknownNode { vehicle: usize, node: usize },
    #[error("node {0} is visited more than once")]
    Repeated(usize),
    #[error("node {0} is never visited")]
    Unvisited(usize),
    #[error("task {0} is picked up and delivered by different vehicles")]
    Split(usize),
    #[error("task {0} is delivered before it is picked up")]
    Order(usize),
}

/// Per-vehicle node sequences over the network nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutePlan {
    routes: Vec<Vec<usize>>,
}

impl RoutePlan {
    /// Validates endpoints, coverage, pairing and precedence.
    pub fn new(network: &PdpNetwork, routes: Vec<Vec<usize>>) -> Result<Self, PlanError> {
        if routes.len() != network.vehicles() {
            return Err(PlanError::VehicleCount {
                expected: network.vehicles(),
                found: routes.len(),
            });
        }
        let size = network.node_count();
        let mut owner = vec![None; size];
        let mut position = vec![0; size];
        for (k, route) in routes.iter().enumerate() {
            if route.len() < 2
                || route[0] != network.source()
                || route[route.len() - 1] != network.terminal()
            {
                return Err(PlanError::Endpoints(k));
            }
            for (p, &node) in route.iter().enumerate().skip(1).take(route.len() - 2) {
                if node >= size || node == network.source() || node == network.terminal() {
                    return Err(PlanError::UnknownNode { vehicle: k, node });
                }
                if owner[node].is_some() {
                    return Err(PlanError::Repeated(node));
                }
                owner[node] = Some(k);
                position[node] = p;
            }
        }
        for t in 0..network.n() {
            let (p, d) = (network.pickup(t), network.delivery(t));
            match (owner[p], owner[d]) {
                (None, _) => return Err(PlanError::Unvisited(p)),
                (_, None) => return Err(PlanError::Unvisited(d)),
                (Some(a), Some(b)) if a != b => return Err(PlanError::Split(t)),
                _ if position[p] > position[d] => return Err(PlanError::Order(t)),
                _ => {}
            }
        }
        Ok(Self { routes })
    }

    pub fn routes(&self) -> &[Vec<usize>] {
        &self.routes
    }

    pub fn route(&self, vehicle: usize) -> &[usize] {
        &self.routes[vehicle]
    }

    pub fn vehicle_count(&self) -> usize {
        self.routes.len()
    }

    pub fn route_distance(&self, network: &PdpNetwork, vehicle: usize) -> f64 {
        self.routes[vehicle]
            .windows(2)
            .map(|w| network.distance(w[0], w[1]))
            .sum()
    }

    /// Total travel distance in meters.
    pub fn distance(&self, network: &PdpNetwork) -> f64 {
        (0..self.routes.len())
            .map(|k| self.route_distance(network, k))
            .sum()
    }

    /// Whether vehicle `vehicle` drives arc `(i, j)`.
    pub fn uses_arc(&self, vehicle: usize, i: usize, j: usize) -> bool {
        self.routes[vehicle]
            .windows(2)
            .any(|w| w[0] == i && w[1] == j)
    }

    /// Network indices joined by dashes, e.g. `0-3-9-13`.
    pub fn v_nodes(&self, vehicle: usize) -> String {
        join(self.routes[vehicle].iter().map(|n| n.to_string()))
    }

    /// Layout labels joined by dashes, e.g. `6-E-A-6`.
    pub fn graph_nodes(&self, network: &PdpNetwork, vehicle: usize) -> String {
        join(
            self.routes[vehicle]
                .iter()
                .map(|&n| network.label(n).to_string()),
        )
    }
}

fn join(parts: impl Iterator<Item = String>) -> String {
    parts.collect::<Vec<_>>().join("-")
}

/// Earliest-feasible service times along `route` under `times`, honoring
/// window openings and pickup-to-delivery precedence.
///
/// Returns the times and the first position whose window closes too early.
pub fn propagate_route(
    network: &PdpNetwork,
    route: &[usize],
    times: &Matrix,
) -> (Vec<f64>, Option<usize>) {
    let mut w = vec![0.0; network.node_count()];
    let mut out = Vec::with_capacity(route.len());
    let mut violation = None;
    let mut prev: Option<usize> = None;
    for (p, &node) in route.iter().enumerate() {
        let mut arrival = match prev {
            Some(q) => w[q] + times.get(q, node),
            None => 0.0,
        };
        if network.is_delivery(node) {
            let pickup = node - network.n();
            arrival = arrival.max(w[pickup] + times.get(pickup, node));
        }
        let service = arrival.max(network.earliest(node));
        if violation.is_none() && service > network.latest(node) + TIME_EPS {
            violation = Some(p);
        }
        w[node] = service;
        out.push(service);
        prev = Some(node);
    }
    (out, violation)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub alpha: f64,
    pub time_limit: Duration,
    /// Recorded for audit; the search itself is deterministic.
    pub seed: u64,
    /// Absolute objective gap at which the search may stop improving.
    pub tolerance: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            time_limit: Duration::from_secs(300),
            seed: 0,
            tolerance: 0.0,
        }
    }
}

impl SolveConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    TimeLimitWithIncumbent,
    TimeLimitNoIncumbent,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::TimeLimitWithIncumbent => "time-limit-with-incumbent",
            SolveStatus::TimeLimitNoIncumbent => "time-limit-no-incumbent",
        }
    }
}

/// Service times per scenario, vehicle and route position, with the
/// scenarios the plan ignores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub times: Vec<Vec<Vec<f64>>>,
    pub ignored: Vec<bool>,
}

impl Schedule {
    pub fn ignored_count(&self) -> usize {
        self.ignored.iter().filter(|&&z| z).count()
    }

    pub fn ignored_scenarios(&self) -> Vec<usize> {
        self.ignored
            .iter()
            .enumerate()
            .filter_map(|(s, &z)| z.then_some(s))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes: u64,
    pub bound_prunes: u64,
    pub window_prunes: u64,
    pub incumbents: u64,
}

/// Why an instance has no feasible plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Infeasibility {
    /// A task that cannot be served even on its own vehicle.
    pub task: Option<String>,
    /// Scenarios in which that task alone misses its windows.
    pub limiting_scenarios: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    pub plan: Option<RoutePlan>,
    pub schedule: Option<Schedule>,
    /// Total distance in meters.
    pub objective: Option<f64>,
    pub stats: SearchStats,
    pub infeasibility: Option<Infeasibility>,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn record(&self, network: &PdpNetwork) -> SolutionRecord {
        let routes = self
            .plan
            .as_ref()
            .map(|plan| {
                (0..plan.vehicle_count())
                    .map(|k| RouteRecord {
                        vehicle: k + 1,
                        v_nodes: plan.v_nodes(k),
                        graph_nodes: plan.graph_nodes(network, k),
                        nodes: plan.route(k).to_vec(),
                        distance_m: plan.route_distance(network, k),
                    })
                    .collect()
            })
            .unwrap_or_default();
        SolutionRecord {
            status: self.status,
            objective_m: self.objective,
            tasks: network.n(),
            vehicles: network.vehicles(),
            routes,
            ignored_scenarios: self
                .schedule
                .as_ref()
                .map(Schedule::ignored_scenarios)
                .unwrap_or_default(),
            schedule: self.schedule.as_ref().map(|s| s.times.clone()),
            stats: self.stats,
            infeasibility: self.infeasibility.clone(),
        }
    }

    /// Aligned text table: one row per vehicle.
    pub fn table(&self, network: &PdpNetwork) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "status: {}", self.status.name());
        if let Some(obj) = self.objective {
            let _ = writeln!(out, "total distance: {obj} m");
        }
        if let Some(plan) = &self.plan {
            let rows: Vec<[String; 4]> = (0..plan.vehicle_count())
                .map(|k| {
                    [
                        (k + 1).to_string(),
                        plan.v_nodes(k),
                        plan.graph_nodes(network, k),
                        format!("{}", plan.route_distance(network, k)),
                    ]
                })
                .collect();
            out.push_str(&aligned_table(
                &["MHE", "V Nodes", "Graph Nodes", "Distance (m)"],
                &rows,
            ));
        }
        if let Some(inf) = &self.infeasibility {
            match &inf.task {
                Some(t) => {
                    let _ = writeln!(out, "task {t} cannot be served on its own");
                }
                None => out.push_str("no single task is infeasible; the combination is\n"),
            }
        }
        out
    }
}

/// Renders rows under headers with columns padded to equal width.
pub fn aligned_table<const N: usize>(headers: &[&str; N], rows: &[[String; N]]) -> String {
    let mut width = headers.map(str::len);
    for row in rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&width)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", padded.join(" | ").trim_end());
    };
    line(&mut out, headers.to_vec());
    let _ = writeln!(
        out,
        "{}",
        width
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .join("-+-")
    );
    for row in rows {
        line(&mut out, row.iter().map(String::as_str).collect());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteRecord {
    /// One-based vehicle number.
    pub vehicle: usize,
    pub v_nodes: String,
    pub graph_nodes: String,
    pub nodes: Vec<usize>,
    pub distance_m: f64,
}

/// Serialized form of a [`Solution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub status: SolveStatus,
    pub objective_m: Option<f64>,
    pub tasks: usize,
    pub vehicles: usize,
    pub routes: Vec<RouteRecord>,
    pub ignored_scenarios: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<Vec<Vec<f64>>>>,
    pub stats: SearchStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infeasibility: Option<Infeasibility>,
}

impl SolutionRecord {
    pub fn plan(&self, network: &PdpNetwork) -> Result<RoutePlan, PlanError> {
        RoutePlan::new(
            network,
            self.routes.iter().map(|r| r.nodes.clone()).collect(),
        )
    }
}

/// Optimal plan under nominal travel times.
pub fn solve_deterministic(
    network: &PdpNetwork,
    config: &SolveConfig,
) -> Result<Solution, SolveError> {
    let nominal = ScenarioSet::nominal(network);
    solve_with_times(
        network,
        &[network.time_matrix().clone()],
        nominal.probabilities(),
        0.0,
        config,
    )
}

/// Optimal plan whose ignored scenarios weigh at most `config.alpha`.
pub fn solve_stochastic(
    network: &PdpNetwork,
    scenarios: &ScenarioSet,
    config: &SolveConfig,
) -> Result<Solution, SolveError> {
    if !(0.0..1.0).contains(&config.alpha) {
        return Err(SolveError::InvalidAlpha(config.alpha));
    }
    scenarios.validate()?;
    scenarios.check_network(network)?;
    let times = scenarios.all_travel_times(network);
    solve_with_times(
        network,
        &times,
        scenarios.probabilities(),
        config.alpha,
        config,
    )
}

/// Robust plan from the single worst-case scenario.
///
/// A plan feasible under the element-wise supremum is feasible under every
/// sampled scenario, so this is a conservative restriction of the alpha-zero
/// model. The schedule returned covers the original scenarios.
pub fn solve_alpha_zero_fast(
    network: &PdpNetwork,
    scenarios: &ScenarioSet,
    config: &SolveConfig,
) -> Result<Solution, SolveError> {
    if config.alpha != 0.0 {
        return Err(SolveError::AlphaNotZero(config.alpha));
    }
    scenarios.validate()?;
    scenarios.check_network(network)?;
    let sup = scenarios.supremum_scenario();
    let mut solution = solve_with_times(
        network,
        &[sup.travel_times(network, 0)],
        &[1.0],
        0.0,
        config,
    )?;
    let times = scenarios.all_travel_times(network);
    if let Some(plan) = &solution.plan {
        solution.schedule = Some(schedule_for(network, plan, &times));
    }
    if let Some(inf) = &mut solution.infeasibility {
        // Report the sampled scenarios in which the task fails on its own.
        if let Some(task) = &inf.task {
            let t = network
                .task_ids()
                .iter()
                .position(|id| id == task)
                .expect("certificate names a task");
            inf.limiting_scenarios = failing_alone(network, t, &times);
        }
    }
    Ok(solution)
}

/// Per-scenario earliest-feasible schedule of `plan`; a scenario is ignored
/// when any vehicle misses a window in it.
pub fn schedule_for(network: &PdpNetwork, plan: &RoutePlan, times: &[Matrix]) -> Schedule {
    let mut all = Vec::with_capacity(times.len());
    let mut ignored = Vec::with_capacity(times.len());
    for t in times {
        let mut fails = false;
        let per_vehicle = plan
            .routes()
            .iter()
            .map(|r| {
                let (w, v) = propagate_route(network, r, t);
                fails |= v.is_some();
                w
            })
            .collect();
        all.push(per_vehicle);
        ignored.push(fails);
    }
    Schedule {
        times: all,
        ignored,
    }
}

fn failing_alone(network: &PdpNetwork, task: usize, times: &[Matrix]) -> Vec<usize> {
    let route = [
        network.source(),
        network.pickup(task),
        network.delivery(task),
        network.terminal(),
    ];
    times
        .iter()
        .enumerate()
        .filter_map(|(s, t)| propagate_route(network, &route, t).1.map(|_| s))
        .collect()
}

fn certificate(
    network: &PdpNetwork,
    times: &[Matrix],
    probabilities: &[f64],
    alpha: f64,
) -> Infeasibility {
    for t in 0..network.n() {
        let failing = failing_alone(network, t, times);
        let mass = failing.iter().fold(0.0, |acc, &s| acc + probabilities[s]);
        if mass > alpha + TIME_EPS {
            return Infeasibility {
                task: Some(network.task_ids()[t].clone()),
                limiting_scenarios: failing,
            };
        }
    }
    Infeasibility {
        task: None,
        limiting_scenarios: Vec::new(),
    }
}

/// Floyd-Warshall closure: sampled times need not obey the triangle
/// inequality, so multi-hop paths can beat the direct arc.
fn shortest_closure(times: &Matrix) -> Matrix {
    let n = times.size();
    let mut m = times.clone();
    for k in 0..n {
        for i in 0..n {
            let ik = m.get(i, k);
            for j in 0..n {
                let via = ik + m.get(k, j);
                if via < m.get(i, j) {
                    m.set(i, j, via);
                }
            }
        }
    }
    m
}

fn solve_with_times(
    network: &PdpNetwork,
    times: &[Matrix],
    probabilities: &[f64],
    alpha: f64,
    config: &SolveConfig,
) -> Result<Solution, SolveError> {
    if network.n() > MAX_TASKS {
        return Err(SolveError::TooManyTasks(network.n()));
    }
    let mut search = Search::new(network, times, probabilities, alpha, config);
    search.run();
    let stats = search.stats;
    let timed_out = search.timed_out;
    let best = search.best_plan.take();
    let status = match (&best, timed_out) {
        (Some(_), false) => SolveStatus::Optimal,
        (Some(_), true) => SolveStatus::TimeLimitWithIncumbent,
        (None, false) => SolveStatus::Infeasible,
        (None, true) => SolveStatus::TimeLimitNoIncumbent,
    };
    let plan =
        best.map(|routes| RoutePlan::new(network, routes).expect("search builds valid plans"));
    let schedule = plan.as_ref().map(|p| schedule_for(network, p, times));
    let objective = plan.as_ref().map(|p| p.distance(network));
    let infeasibility = (status == SolveStatus::Infeasible)
        .then(|| certificate(network, times, probabilities, alpha));
    Ok(Solution {
        status,
        plan,
        schedule,
        objective,
        stats,
        infeasibility,
    })
}

struct Search<'a> {
    net: &'a PdpNetwork,
    times: &'a [Matrix],
    lower: Vec<Matrix>,
    prob: &'a [f64],
    alpha: f64,
    gap: f64,
    n: usize,
    size: usize,
    vehicles: usize,
    /// Service time of `node` in scenario `s` at `s * size + node`.
    w: Vec<f64>,
    failed: Vec<bool>,
    failed_mass: f64,
    visited: u64,
    onboard: u64,
    closed: Vec<Vec<usize>>,
    route: Vec<usize>,
    cost: f64,
    best_cost: f64,
    best_plan: Option<Vec<Vec<usize>>>,
    stats: SearchStats,
    started: Instant,
    limit: Duration,
    timed_out: bool,
    scratch: Vec<usize>,
}

impl<'a> Search<'a> {
    fn new(
        net: &'a PdpNetwork,
        times: &'a [Matrix],
        prob: &'a [f64],
        alpha: f64,
        config: &SolveConfig,
    ) -> Self {
        let size = net.node_count();
        Self {
            net,
            times,
            lower: times.iter().map(shortest_closure).collect(),
            prob,
            alpha,
            gap: config.tolerance.max(TIME_EPS),
            n: net.n(),
            size,
            vehicles: net.vehicles(),
            w: vec![0.0; times.len() * size],
            failed: vec![false; times.len()],
            failed_mass: 0.0,
            visited: 0,
            onboard: 0,
            closed: Vec::with_capacity(net.vehicles()),
            route: Vec::with_capacity(size),
            cost: 0.0,
            best_cost: f64::INFINITY,
            best_plan: None,
            stats: SearchStats::default(),
            started: Instant::now(),
            limit: config.time_limit,
            timed_out: false,
            scratch: Vec::with_capacity(times.len()),
        }
    }

    fn run(&mut self) {
        self.open_vehicle();
        self.dfs(1);
    }

    fn open_vehicle(&mut self) {
        let src = self.net.source();
        self.route.clear();
        self.route.push(src);
        for s in 0..self.times.len() {
            self.w[s * self.size + src] = self.net.earliest(src);
        }
    }

    #[inline]
    fn bit(node: usize) -> u64 {
        1u64 << node
    }

    fn all_pickups_visited(&self) -> bool {
        (1..=self.n).all(|p| self.visited & Self::bit(p) != 0)
    }

    /// Admissible estimate of the distance still to be driven.
    fn completion_bound(&self, cur: usize) -> f64 {
        let mut rest = Vec::with_capacity(2 * self.n);
        for u in 1..=2 * self.n {
            if self.visited & Self::bit(u) == 0 {
                rest.push(u);
            }
        }
        let more_vehicles = self.closed.len() + 1 < self.vehicles;
        let mut total = 0.0;
        for &u in &rest {
            let mut best = self.net.distance(cur, u);
            if more_vehicles && self.net.is_pickup(u) {
                best = best.min(self.net.distance(self.net.source(), u));
            }
            for &v in &rest {
                if v != u {
                    best = best.min(self.net.distance(v, u));
                }
            }
            total += best;
        }
        if self.route.len() > 1 {
            let t = self.net.terminal();
            let mut back = self.net.distance(cur, t);
            for &v in &rest {
                back = back.min(self.net.distance(v, t));
            }
            total += back;
        }
        total
    }

    fn check_time(&mut self) -> bool {
        if self.timed_out {
            return true;
        }
        if self.stats.nodes.is_multiple_of(1024) && self.started.elapsed() > self.limit {
            self.timed_out = true;
        }
        self.timed_out
    }

    /// Schedules `next` after `cur` in every live scenario. Newly failed
    /// scenarios are pushed onto `self.scratch`.
    /// Returns false when the failed mass exceeds alpha.
    fn advance(&mut self, cur: usize, next: usize) -> bool {
        let size = self.size;
        let a = self.net.earliest(next);
        let b = self.net.latest(next) + TIME_EPS;
        let pickup = self.net.is_delivery(next).then(|| next - self.n);
        let mut mass = self.failed_mass;
        for s in 0..self.times.len() {
            if self.failed[s] {
                continue;
            }
            let t = &self.times[s];
            let base = s * size;
            let mut arrival = self.w[base + cur] + t.get(cur, next);
            if let Some(p) = pickup {
                arrival = arrival.max(self.w[base + p] + t.get(p, next));
            }
            let service = arrival.max(a);
            if service > b {
                self.failed[s] = true;
                self.scratch.push(s);
                mass += self.prob[s];
            } else {
                self.w[base + next] = service;
            }
        }
        self.failed_mass = mass;
        mass <= self.alpha + TIME_EPS
    }

    fn restore(&mut self, mark: usize, mass: f64) {
        for s in self.scratch.drain(mark..) {
            self.failed[s] = false;
        }
        self.failed_mass = mass;
    }

    /// Mass of live scenarios that can no longer meet a pending deadline
    /// from `cur`.
    fn doomed_mass(&self, cur: usize) -> f64 {
        let last_vehicle = self.closed.len() + 1 == self.vehicles;
        let mut extra = 0.0;
        for s in 0..self.times.len() {
            if self.failed[s] {
                continue;
            }
            let base = s * self.size;
            let t = &self.times[s];
            let lb = &self.lower[s];
            let now = self.w[base + cur];
            let mut doomed = false;
            for p in 1..=self.n {
                let d = p + self.n;
                let bound = if self.onboard & Self::bit(p) != 0 {
                    (now + lb.get(cur, d)).max(self.w[base + p] + t.get(p, d))
                } else if last_vehicle && self.visited & Self::bit(p) == 0 {
                    let at_pickup = (now + lb.get(cur, p)).max(self.net.earliest(p));
                    at_pickup + t.get(p, d)
                } else {
                    continue;
                };
                if bound > self.net.latest(d) + TIME_EPS {
                    doomed = true;
                    break;
                }
            }
            if doomed {
                extra += self.prob[s];
            }
        }
        extra
    }

    fn dfs(&mut self, required: usize) {
        self.stats.nodes += 1;
        if self.check_time() {
            return;
        }
        let cur = *self.route.last().expect("route starts at source");
        let bound = self.cost + self.completion_bound(cur);
        if bound >= self.best_cost - self.gap {
            self.stats.bound_prunes += 1;
            return;
        }
        if self.failed_mass + self.doomed_mass(cur) > self.alpha + TIME_EPS {
            self.stats.window_prunes += 1;
            return;
        }

        for next in 1..=2 * self.n {
            let allowed = if self.net.is_pickup(next) {
                self.visited & Self::bit(next) == 0
            } else {
                self.onboard & Self::bit(next - self.n) != 0
            };
            if !allowed {
                continue;
            }
            let mark = self.scratch.len();
            let mass = self.failed_mass;
            let ok = self.advance(cur, next);
            if ok {
                let step = self.net.distance(cur, next);
                self.cost += step;
                self.visited |= Self::bit(next);
                if self.net.is_pickup(next) {
                    self.onboard |= Self::bit(next);
                } else {
                    self.onboard &= !Self::bit(next - self.n);
                }
                self.route.push(next);
                self.dfs(required);
                self.route.pop();
                if self.net.is_pickup(next) {
                    self.onboard &= !Self::bit(next);
                } else {
                    self.onboard |= Self::bit(next - self.n);
                }
                self.visited &= !Self::bit(next);
                self.cost -= step;
            } else {
                self.stats.window_prunes += 1;
            }
            self.restore(mark, mass);
            if self.timed_out {
                return;
            }
        }

        // Close the current vehicle.
        let served_required = self.visited & Self::bit(required) != 0;
        if self.onboard != 0 || self.route.len() < 2 || !served_required {
            return;
        }
        let done = self.all_pickups_visited();
        if !done && self.closed.len() + 1 >= self.vehicles {
            return;
        }
        let term = self.net.terminal();
        let mark = self.scratch.len();
        let mass = self.failed_mass;
        if self.advance(cur, term) {
            let step = self.net.distance(cur, term);
            self.cost += step;
            self.route.push(term);
            if done {
                if self.cost < self.best_cost - self.gap {
                    let mut plan = self.closed.clone();
                    plan.push(self.route.clone());
                    while plan.len() < self.vehicles {
                        plan.push(vec![self.net.source(), term]);
                    }
                    self.best_cost = self.cost;
                    self.best_plan = Some(plan);
                    self.stats.incumbents += 1;
                }
                self.route.pop();
            } else {
                let finished = std::mem::take(&mut self.route);
                self.closed.push(finished);
                self.open_vehicle();
                let next_required = (1..=self.n)
                    .find(|&p| self.visited & Self::bit(p) == 0)
                    .expect("some task is unassigned");
                self.dfs(next_required);
                self.route = self.closed.pop().expect("pushed above");
                self.route.pop();
            }
            self.cost -= step;
        } else {
            self.stats.window_prunes += 1;
        }
        self.restore(mark, mass);
    }
}
