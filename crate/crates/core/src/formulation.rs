//! Explicit mixed-integer constraint systems for the deterministic and the
//! scenario-based chance-constrained routing models, plus an independent
//! feasibility checker.
//!
//! The solver never consumes these systems. They exist so that any plan the
//! solver produces can be verified against the linear model constraint by
//! constraint, and so the model can be exported for external MILP tools.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::instance::{Matrix, PdpNetwork};
use crate::scenarios::{ScenarioError, ScenarioSet};

/// Absolute tolerance when evaluating constraints.
pub const CHECK_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("alpha must lie in [0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error(transparent)]
    Scenarios(#[from] ScenarioError),
    #[error("assignment has no value for variable `{0}`")]
    MissingVariable(String),
    #[error("route plan does not fit the system: {0}")]
    PlanMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Deterministic,
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Binary,
    /// Continuous and non-negative.
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarIndex {
    Arc {
        vehicle: usize,
        from: usize,
        to: usize,
    },
    Time {
        vehicle: usize,
        node: usize,
    },
    ScenarioTime {
        vehicle: usize,
        node: usize,
        scenario: usize,
    },
    Ignore {
        scenario: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub index: VarIndex,
}

pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

/// Constraint family. Together with the [`ModelKind`] this identifies the
/// constraint group of the model that a constraint belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Every pickup is left exactly once, by some vehicle.
    Coverage,
    /// A vehicle leaves a pickup iff it leaves the matching delivery.
    Pairing,
    /// Every vehicle departs the source once.
    SourceDeparture,
    /// Every vehicle enters the terminal once.
    TerminalArrival,
    /// Entering a pickup or delivery implies leaving it.
    FlowConservation,
    /// Big-M service-time propagation along selected arcs.
    TimePropagation,
    /// Delivery starts no earlier than pickup plus direct travel.
    Precedence,
    TimeWindow,
    /// Probability mass of ignored scenarios is at most alpha.
    ScenarioBudget,
    /// Arc variables are binary.
    ArcDomain,
    /// Scenario-ignore variables are binary.
    IgnoreDomain,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Coverage => "coverage",
            Family::Pairing => "pairing",
            Family::SourceDeparture => "source-departure",
            Family::TerminalArrival => "terminal-arrival",
            Family::FlowConservation => "flow-conservation",
            Family::TimePropagation => "time-propagation",
            Family::Precedence => "precedence",
            Family::TimeWindow => "time-window",
            Family::ScenarioBudget => "scenario-budget",
            Family::ArcDomain => "arc-domain",
            Family::IgnoreDomain => "ignore-domain",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub family: Family,
}

/// Per-family big-M constants, tightened per arc or node.
///
/// Ignored scenarios keep their service times in `[0, T]` with `T` the
/// latest window close over all nodes; the ignore constants are sized so
/// every relaxed constraint is vacuous on that box.
#[derive(Debug, Clone, PartialEq)]
pub struct BigMSet {
    /// Propagation on arc `(i, j)` when the arc is unused.
    pub propagation: Matrix,
    /// Propagation on arc `(i, j)` when the scenario is ignored.
    pub propagation_ignore: Option<Matrix>,
    /// Precedence of task `t` (zero based) when the scenario is ignored.
    pub precedence_ignore: Option<Vec<f64>>,
    /// Upper window of node `i` when the scenario is ignored.
    pub window_ignore: Option<Vec<f64>>,
}

impl BigMSet {
    /// Every constant multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale_matrix = |m: &Matrix| {
            let mut out = m.clone();
            for i in 0..m.size() {
                for j in 0..m.size() {
                    out.set(i, j, m.get(i, j) * factor);
                }
            }
            out
        };
        let scale_vec = |v: &Vec<f64>| v.iter().map(|x| x * factor).collect();
        Self {
            propagation: scale_matrix(&self.propagation),
            propagation_ignore: self.propagation_ignore.as_ref().map(scale_matrix),
            precedence_ignore: self.precedence_ignore.as_ref().map(scale_vec),
            window_ignore: self.window_ignore.as_ref().map(scale_vec),
        }
    }
}

/// Smallest propagation constant that deactivates `w_j >= w_i + d - M` for
/// `w_i <= latest_i` and `w_j >= earliest_j`.
pub fn propagation_big_m(latest_i: f64, travel: f64, earliest_j: f64) -> f64 {
    (latest_i + travel - earliest_j).max(0.0)
}

/// Big-M constants for `network`, using worst-case scenario times when
/// `scenarios` is given and nominal times otherwise.
pub fn compute_big_m(network: &PdpNetwork, scenarios: Option<&ScenarioSet>) -> BigMSet {
    let size = network.node_count();
    let worst = match scenarios {
        Some(set) => set.supremum_scenario().travel_times(network, 0),
        None => network.time_matrix().clone(),
    };
    let top = (0..size).map(|i| network.latest(i)).fold(0.0, f64::max);
    let mut propagation = Matrix::zeros(size);
    let mut propagation_ignore = Matrix::zeros(size);
    for (i, j) in network.arcs() {
        let d = worst.get(i, j);
        propagation.set(
            i,
            j,
            propagation_big_m(network.latest(i), d, network.earliest(j)),
        );
        propagation_ignore.set(i, j, top + d);
    }
    if scenarios.is_none() {
        return BigMSet {
            propagation,
            propagation_ignore: None,
            precedence_ignore: None,
            window_ignore: None,
        };
    }
    let precedence = (0..network.n())
        .map(|t| top + worst.get(network.pickup(t), network.delivery(t)))
        .collect();
    let window = (0..size).map(|i| top - network.latest(i)).collect();
    BigMSet {
        propagation,
        propagation_ignore: Some(propagation_ignore),
        precedence_ignore: Some(precedence),
        window_ignore: Some(window),
    }
}

#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    kind: ModelKind,
    vehicles: usize,
    nodes: usize,
    scenarios: usize,
    alpha: f64,
    variables: Vec<Variable>,
    constraints: Vec<LinearConstraint>,
    objective: Vec<(VarId, f64)>,
    lookup: HashMap<VarIndex, VarId>,
    big_m: BigMSet,
}

struct Builder {
    variables: Vec<Variable>,
    lookup: HashMap<VarIndex, VarId>,
    constraints: Vec<LinearConstraint>,
}

impl Builder {
    fn new() -> Self {
        Self {
            variables: Vec::new(),
            lookup: HashMap::new(),
            constraints: Vec::new(),
        }
    }

    fn var(&mut self, index: VarIndex, kind: VarKind) -> VarId {
        let name = match index {
            VarIndex::Arc { vehicle, from, to } => format!("x_{vehicle}_{from}_{to}"),
            VarIndex::Time { vehicle, node } => format!("w_{vehicle}_{node}"),
            VarIndex::ScenarioTime {
                vehicle,
                node,
                scenario,
            } => format!("w_{vehicle}_{node}_{scenario}"),
            VarIndex::Ignore { scenario } => format!("z_{scenario}"),
        };
        let id = self.variables.len();
        self.variables.push(Variable { name, kind, index });
        self.lookup.insert(index, id);
        id
    }

    fn id(&self, index: VarIndex) -> VarId {
        self.lookup[&index]
    }

    fn push(
        &mut self,
        family: Family,
        name: String,
        terms: Vec<(VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) {
        self.constraints.push(LinearConstraint {
            name,
            terms,
            relation,
            rhs,
            family,
        });
    }

    fn arc(&self, vehicle: usize, from: usize, to: usize) -> VarId {
        self.id(VarIndex::Arc { vehicle, from, to })
    }

    /// Arc variables plus the scenario-independent routing constraints.
    fn routing(&mut self, network: &PdpNetwork) {
        let k_count = network.vehicles();
        let size = network.node_count();
        for k in 0..k_count {
            for (i, j) in network.arcs() {
                self.var(
                    VarIndex::Arc {
                        vehicle: k,
                        from: i,
                        to: j,
                    },
                    VarKind::Binary,
                );
            }
        }
        let out_arcs = |b: &Builder, k: usize, i: usize| -> Vec<(VarId, f64)> {
            (0..size)
                .filter(|&j| network.is_arc(i, j))
                .map(|j| (b.arc(k, i, j), 1.0))
                .collect()
        };
        let in_arcs = |b: &Builder, k: usize, j: usize| -> Vec<(VarId, f64)> {
            (0..size)
                .filter(|&i| network.is_arc(i, j))
                .map(|i| (b.arc(k, i, j), 1.0))
                .collect()
        };
        for i in network.pickups() {
            let terms = (0..k_count).flat_map(|k| out_arcs(self, k, i)).collect();
            self.push(
                Family::Coverage,
                format!("cover_{i}"),
                terms,
                Relation::Eq,
                1.0,
            );
        }
        for k in 0..k_count {
            for i in network.pickups() {
                let mut terms = out_arcs(self, k, i);
                terms.extend(
                    out_arcs(self, k, i + network.n())
                        .into_iter()
                        .map(|(v, c)| (v, -c)),
                );
                self.push(
                    Family::Pairing,
                    format!("pair_{k}_{i}"),
                    terms,
                    Relation::Eq,
                    0.0,
                );
            }
        }
        for k in 0..k_count {
            let terms = out_arcs(self, k, network.source());
            self.push(
                Family::SourceDeparture,
                format!("depart_{k}"),
                terms,
                Relation::Eq,
                1.0,
            );
            let terms = in_arcs(self, k, network.terminal());
            self.push(
                Family::TerminalArrival,
                format!("arrive_{k}"),
                terms,
                Relation::Eq,
                1.0,
            );
        }
        for k in 0..k_count {
            for i in 1..=2 * network.n() {
                let mut terms = out_arcs(self, k, i);
                terms.extend(in_arcs(self, k, i).into_iter().map(|(v, c)| (v, -c)));
                self.push(
                    Family::FlowConservation,
                    format!("flow_{k}_{i}"),
                    terms,
                    Relation::Eq,
                    0.0,
                );
            }
        }
    }

    fn objective(&self, network: &PdpNetwork) -> Vec<(VarId, f64)> {
        (0..network.vehicles())
            .flat_map(|k| {
                network
                    .arcs()
                    .map(move |(i, j)| (k, i, j))
                    .collect::<Vec<_>>()
            })
            .map(|(k, i, j)| (self.arc(k, i, j), network.distance(i, j)))
            .collect()
    }
}

/// The deterministic model under the network's nominal travel times.
pub fn build_deterministic(network: &PdpNetwork) -> ConstraintSystem {
    build_deterministic_with(network, network.time_matrix(), compute_big_m(network, None))
}

/// The deterministic model under arbitrary travel times.
pub fn build_deterministic_with(
    network: &PdpNetwork,
    times: &Matrix,
    big_m: BigMSet,
) -> ConstraintSystem {
    let mut b = Builder::new();
    b.routing(network);
    let size = network.node_count();
    for k in 0..network.vehicles() {
        for i in 0..size {
            b.var(
                VarIndex::Time {
                    vehicle: k,
                    node: i,
                },
                VarKind::Continuous,
            );
        }
    }
    let w = |b: &Builder, k, i| {
        b.id(VarIndex::Time {
            vehicle: k,
            node: i,
        })
    };
    for k in 0..network.vehicles() {
        for (i, j) in network.arcs() {
            let m = big_m.propagation.get(i, j);
            let terms = vec![
                (w(&b, k, j), 1.0),
                (w(&b, k, i), -1.0),
                (b.arc(k, i, j), -m),
            ];
            b.push(
                Family::TimePropagation,
                format!("prop_{k}_{i}_{j}"),
                terms,
                Relation::Ge,
                times.get(i, j) - m,
            );
        }
        for i in network.pickups() {
            let d = i + network.n();
            let terms = vec![(w(&b, k, i), 1.0), (w(&b, k, d), -1.0)];
            b.push(
                Family::Precedence,
                format!("prec_{k}_{i}"),
                terms,
                Relation::Le,
                -times.get(i, d),
            );
        }
        for i in 0..size {
            let v = w(&b, k, i);
            b.push(
                Family::TimeWindow,
                format!("open_{k}_{i}"),
                vec![(v, 1.0)],
                Relation::Ge,
                network.earliest(i),
            );
            b.push(
                Family::TimeWindow,
                format!("close_{k}_{i}"),
                vec![(v, 1.0)],
                Relation::Le,
                network.latest(i),
            );
        }
    }
    let objective = b.objective(network);
    ConstraintSystem {
        kind: ModelKind::Deterministic,
        vehicles: network.vehicles(),
        nodes: size,
        scenarios: 1,
        alpha: 0.0,
        variables: b.variables,
        constraints: b.constraints,
        objective,
        lookup: b.lookup,
        big_m,
    }
}

/// The scenario reformulation of the chance-constrained model.
pub fn build_stochastic(
    network: &PdpNetwork,
    scenarios: &ScenarioSet,
    alpha: f64,
) -> Result<ConstraintSystem, FormulationError> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(FormulationError::InvalidAlpha(alpha));
    }
    scenarios.validate()?;
    scenarios.check_network(network)?;
    build_stochastic_with(
        network,
        scenarios,
        alpha,
        compute_big_m(network, Some(scenarios)),
    )
}

/// [`build_stochastic`] with caller-provided big-M constants.
pub fn build_stochastic_with(
    network: &PdpNetwork,
    scenarios: &ScenarioSet,
    alpha: f64,
    big_m: BigMSet,
) -> Result<ConstraintSystem, FormulationError> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(FormulationError::InvalidAlpha(alpha));
    }
    let missing = || FormulationError::PlanMismatch("big-M set lacks scenario constants".into());
    let m_prop_ignore = big_m.propagation_ignore.clone().ok_or_else(missing)?;
    let m_prec_ignore = big_m.precedence_ignore.clone().ok_or_else(missing)?;
    let m_window_ignore = big_m.window_ignore.clone().ok_or_else(missing)?;

    let mut b = Builder::new();
    b.routing(network);
    let size = network.node_count();
    let omega = scenarios.len();
    for s in 0..omega {
        for k in 0..network.vehicles() {
            for i in 0..size {
                b.var(
                    VarIndex::ScenarioTime {
                        vehicle: k,
                        node: i,
                        scenario: s,
                    },
                    VarKind::Continuous,
                );
            }
        }
    }
    for s in 0..omega {
        b.var(VarIndex::Ignore { scenario: s }, VarKind::Binary);
    }
    let w = |b: &Builder, k, i, s| {
        b.id(VarIndex::ScenarioTime {
            vehicle: k,
            node: i,
            scenario: s,
        })
    };
    for s in 0..omega {
        let times = scenarios.travel_times(network, s);
        let z = b.id(VarIndex::Ignore { scenario: s });
        for k in 0..network.vehicles() {
            for (i, j) in network.arcs() {
                let m1 = big_m.propagation.get(i, j);
                let m2 = m_prop_ignore.get(i, j);
                let terms = vec![
                    (w(&b, k, j, s), 1.0),
                    (w(&b, k, i, s), -1.0),
                    (b.arc(k, i, j), -m1),
                    (z, m2),
                ];
                b.push(
                    Family::TimePropagation,
                    format!("prop_{k}_{i}_{j}_{s}"),
                    terms,
                    Relation::Ge,
                    times.get(i, j) - m1,
                );
            }
            for (t, i) in network.pickups().enumerate() {
                let d = i + network.n();
                let terms = vec![
                    (w(&b, k, i, s), 1.0),
                    (w(&b, k, d, s), -1.0),
                    (z, -m_prec_ignore[t]),
                ];
                b.push(
                    Family::Precedence,
                    format!("prec_{k}_{i}_{s}"),
                    terms,
                    Relation::Le,
                    -times.get(i, d),
                );
            }
            for (i, &m) in m_window_ignore.iter().enumerate().take(size) {
                let v = w(&b, k, i, s);
                // a_i (1 - z) <= w: the lower bound drops to zero when ignored.
                let a = network.earliest(i);
                b.push(
                    Family::TimeWindow,
                    format!("open_{k}_{i}_{s}"),
                    vec![(v, 1.0), (z, a)],
                    Relation::Ge,
                    a,
                );
                b.push(
                    Family::TimeWindow,
                    format!("close_{k}_{i}_{s}"),
                    vec![(v, 1.0), (z, -m)],
                    Relation::Le,
                    network.latest(i),
                );
            }
        }
    }
    let budget = (0..omega)
        .map(|s| {
            (
                b.id(VarIndex::Ignore { scenario: s }),
                scenarios.probabilities()[s],
            )
        })
        .collect();
    b.push(
        Family::ScenarioBudget,
        "budget".into(),
        budget,
        Relation::Le,
        alpha,
    );
    let objective = b.objective(network);
    Ok(ConstraintSystem {
        kind: ModelKind::Stochastic,
        vehicles: network.vehicles(),
        nodes: size,
        scenarios: omega,
        alpha,
        variables: b.variables,
        constraints: b.constraints,
        objective,
        lookup: b.lookup,
        big_m,
    })
}

/// Variable values keyed by variable name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    values: HashMap<String, f64>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.values.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub family: Family,
    pub name: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    /// Amount by which the constraint is violated (always positive).
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Feasible,
    Violated(Vec<Violation>),
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible)
    }

    pub fn violations(&self) -> &[Violation] {
        match self {
            Verdict::Feasible => &[],
            Verdict::Violated(v) => v,
        }
    }
}

impl ConstraintSystem {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn vehicles(&self) -> usize {
        self.vehicles
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn scenario_count(&self) -> usize {
        self.scenarios
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(VarId, f64)] {
        &self.objective
    }

    pub fn big_m(&self) -> &BigMSet {
        &self.big_m
    }

    pub fn variable(&self, index: VarIndex) -> Option<&Variable> {
        self.lookup.get(&index).map(|&id| &self.variables[id])
    }

    pub fn count_variables(&self, kind: VarKind) -> usize {
        self.variables.iter().filter(|v| v.kind == kind).count()
    }

    pub fn count_family(&self, family: Family) -> usize {
        self.constraints
            .iter()
            .filter(|c| c.family == family)
            .count()
    }

    /// Same system with every big-M coefficient scaled by `factor`.
    pub fn with_big_m_scaled(
        &self,
        network: &PdpNetwork,
        scenarios: Option<&ScenarioSet>,
        factor: f64,
    ) -> Result<Self, FormulationError> {
        let big_m = self.big_m.scaled(factor);
        match (self.kind, scenarios) {
            (ModelKind::Deterministic, _) => Ok(build_deterministic_with(
                network,
                network.time_matrix(),
                big_m,
            )),
            (ModelKind::Stochastic, Some(set)) => {
                build_stochastic_with(network, set, self.alpha, big_m)
            }
            (ModelKind::Stochastic, None) => Err(FormulationError::PlanMismatch(
                "stochastic system needs its scenario set".into(),
            )),
        }
    }

    /// Evaluates every constraint and domain at [`CHECK_TOLERANCE`].
    pub fn check_solution(&self, assignment: &Assignment) -> Result<Verdict, FormulationError> {
        let mut values = Vec::with_capacity(self.variables.len());
        for v in &self.variables {
            values.push(
                assignment
                    .get(&v.name)
                    .ok_or_else(|| FormulationError::MissingVariable(v.name.clone()))?,
            );
        }
        let mut violations = Vec::new();
        for (v, &value) in self.variables.iter().zip(&values) {
            if v.kind == VarKind::Binary
                && (value.abs() > CHECK_TOLERANCE && (value - 1.0).abs() > CHECK_TOLERANCE)
            {
                let family = match v.index {
                    VarIndex::Ignore { .. } => Family::IgnoreDomain,
                    _ => Family::ArcDomain,
                };
                violations.push(Violation {
                    family,
                    name: v.name.clone(),
                    lhs: value,
                    relation: Relation::Eq,
                    rhs: value.round().clamp(0.0, 1.0),
                    excess: (value - value.round().clamp(0.0, 1.0)).abs(),
                });
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(v, coef)| coef * values[v]).sum();
            let excess = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            if excess > CHECK_TOLERANCE {
                violations.push(Violation {
                    family: c.family,
                    name: c.name.clone(),
                    lhs,
                    relation: c.relation,
                    rhs: c.rhs,
                    excess,
                });
            }
        }
        Ok(if violations.is_empty() {
            Verdict::Feasible
        } else {
            Verdict::Violated(violations)
        })
    }

    /// CPLEX LP-format text.
    pub fn to_lp(&self) -> String {
        let mut out = String::new();
        let term = |out: &mut String, first: &mut bool, coef: f64, name: &str| {
            if coef == 0.0 {
                return;
            }
            let sign = if coef < 0.0 { "-" } else { "+" };
            if *first && coef >= 0.0 {
                let _ = write!(out, " {} {}", fmt_num(coef.abs()), name);
            } else {
                let _ = write!(out, " {} {} {}", sign, fmt_num(coef.abs()), name);
            }
            *first = false;
        };
        out.push_str("\\ plroute routing model\nMinimize\n obj:");
        let mut first = true;
        for &(v, coef) in &self.objective {
            term(&mut out, &mut first, coef, &self.variables[v].name);
        }
        if first {
            out.push_str(" 0");
        }
        out.push_str("\nSubject To\n");
        for c in &self.constraints {
            let _ = write!(out, " {}:", c.name);
            let mut first = true;
            for &(v, coef) in &c.terms {
                term(&mut out, &mut first, coef, &self.variables[v].name);
            }
            if first {
                out.push_str(" 0 x_empty");
            }
            let _ = writeln!(out, " {} {}", c.relation.symbol(), fmt_num(c.rhs));
        }
        out.push_str("Binaries\n");
        for v in self.variables.iter().filter(|v| v.kind == VarKind::Binary) {
            let _ = writeln!(out, " {}", v.name);
        }
        out.push_str("End\n");
        out
    }
}

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

/// Builds a full assignment for `system` from per-vehicle routes and
/// service times.
///
/// `times[s][k][p]` is the service time at position `p` of route `k` in
/// scenario `s`; deterministic systems use `times[0]`. Nodes a vehicle does
/// not visit get their earliest consistent times. Ignored scenarios have
/// their times clamped into `[0, T]`.
pub fn assignment_from_routes(
    system: &ConstraintSystem,
    network: &PdpNetwork,
    routes: &[Vec<usize>],
    scenario_times: &[Matrix],
    times: &[Vec<Vec<f64>>],
    ignored: &[bool],
) -> Result<Assignment, FormulationError> {
    if routes.len() != system.vehicles() {
        return Err(FormulationError::PlanMismatch(format!(
            "{} routes for {} vehicles",
            routes.len(),
            system.vehicles()
        )));
    }
    let scenario_rows = match system.kind() {
        ModelKind::Deterministic => 1,
        ModelKind::Stochastic => system.scenario_count(),
    };
    if times.len() != scenario_rows || scenario_times.len() != scenario_rows {
        return Err(FormulationError::PlanMismatch(format!(
            "expected {scenario_rows} scenario schedules"
        )));
    }
    let mut a = Assignment::new();
    for (k, route) in routes.iter().enumerate() {
        for (i, j) in network.arcs() {
            a.set(format!("x_{k}_{i}_{j}"), 0.0);
        }
        for pair in route.windows(2) {
            if !network.is_arc(pair[0], pair[1]) {
                return Err(FormulationError::PlanMismatch(format!(
                    "vehicle {k} uses non-arc ({}, {})",
                    pair[0], pair[1]
                )));
            }
            a.set(format!("x_{k}_{}_{}", pair[0], pair[1]), 1.0);
        }
    }
    let top = (0..network.node_count())
        .map(|i| network.latest(i))
        .fold(0.0, f64::max);
    for s in 0..scenario_rows {
        let d = &scenario_times[s];
        let skip = ignored.get(s).copied().unwrap_or(false);
        for k in 0..system.vehicles() {
            let route = &routes[k];
            if times[s][k].len() != route.len() {
                return Err(FormulationError::PlanMismatch(format!(
                    "schedule of vehicle {k} has {} entries for {} stops",
                    times[s][k].len(),
                    route.len()
                )));
            }
            let mut w = vec![None; network.node_count()];
            for (p, &node) in route.iter().enumerate() {
                w[node] = Some(times[s][k][p]);
            }
            for t in 0..network.n() {
                let (pu, de) = (network.pickup(t), network.delivery(t));
                if w[pu].is_none() {
                    let at = network.earliest(pu);
                    w[pu] = Some(at);
                    w[de] = Some(network.earliest(de).max(at + d.get(pu, de)));
                }
            }
            for (node, value) in w.into_iter().enumerate() {
                let mut value = value.unwrap_or(network.earliest(node));
                if skip {
                    value = value.clamp(0.0, top);
                }
                let name = match system.kind() {
                    ModelKind::Deterministic => format!("w_{k}_{node}"),
                    ModelKind::Stochastic => format!("w_{k}_{node}_{s}"),
                };
                a.set(name, value);
            }
        }
        if system.kind() == ModelKind::Stochastic {
            a.set(format!("z_{s}"), if skip { 1.0 } else { 0.0 });
        }
    }
    Ok(a)
}
