//! Factory layouts, logistics tasks and their compilation into a
//! pickup-and-delivery network.
//!
//! A network with `n` tasks has nodes `0..=2n+1`: node `0` is the source,
//! `1..=n` are pickups, `n+1..=2n` are deliveries (the delivery of pickup
//! `i` is `i + n`) and `2n+1` is the terminal. Source and terminal both sit
//! at the depot.

use std::collections::{HashMap, HashSet};

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default vehicle speed in meters per second.
pub const DEFAULT_SPEED: f64 = 1.5;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("malformed instance document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate layout node id `{0}`")]
    DuplicateNode(String),
    #[error("{field} references unknown location `{id}`")]
    UnknownLocation { field: String, id: String },
    #[error("edge {from}-{to} has non-positive length {length}")]
    NonPositiveLength {
        from: String,
        to: String,
        length: f64,
    },
    #[error("layout is disconnected: no path between `{from}` and `{to}`")]
    Unreachable { from: String, to: String },
    #[error("task `{task}`: latest delivery {latest} must exceed earliest pickup {earliest}")]
    InvalidWindow {
        task: String,
        earliest: f64,
        latest: f64,
    },
    #[error("task `{0}`: pickup and delivery location coincide")]
    SameLocation(String),
    #[error("duplicate task id `{0}`")]
    DuplicateTask(String),
    #[error("instance needs at least one task")]
    NoTasks,
    #[error("instance needs at least one vehicle")]
    NoVehicles,
    #[error("speed must be positive and finite, got {0}")]
    InvalidSpeed(f64),
    #[error("horizon {horizon} is below the latest delivery deadline {latest}")]
    HorizonTooShort { horizon: f64, latest: f64 },
}

/// A layout location with a display label (defaults to the id).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutNode {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutEdge {
    pub from: String,
    pub to: String,
    pub length_m: f64,
}

/// Undirected physical layout with edge lengths in meters.
#[derive(Debug, Clone)]
pub struct LayoutGraph {
    nodes: Vec<LayoutNode>,
    edges: Vec<LayoutEdge>,
    index: HashMap<String, usize>,
}

impl LayoutGraph {
    /// Validates ids, edge lengths and connectivity.
    pub fn new(nodes: Vec<LayoutNode>, edges: Vec<LayoutEdge>) -> Result<Self, InstanceError> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.id.clone(), i).is_some() {
                return Err(InstanceError::DuplicateNode(node.id.clone()));
            }
        }
        for (e, edge) in edges.iter().enumerate() {
            for end in [&edge.from, &edge.to] {
                if !index.contains_key(end) {
                    return Err(InstanceError::UnknownLocation {
                        field: format!("layout.edges[{e}]"),
                        id: end.clone(),
                    });
                }
            }
            if !(edge.length_m > 0.0) || !edge.length_m.is_finite() {
                return Err(InstanceError::NonPositiveLength {
                    from: edge.from.clone(),
                    to: edge.to.clone(),
                    length: edge.length_m,
                });
            }
        }
        let layout = Self {
            nodes,
            edges,
            index,
        };
        if let Some(first) = layout.nodes.first() {
            let reach = layout.distances_from(0);
            if let Some(missing) = (0..layout.nodes.len()).find(|v| !reach.contains_key(v)) {
                return Err(InstanceError::Unreachable {
                    from: first.id.clone(),
                    to: layout.nodes[missing].id.clone(),
                });
            }
        }
        Ok(layout)
    }

    pub fn nodes(&self) -> &[LayoutNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[LayoutEdge] {
        &self.edges
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn label(&self, idx: usize) -> &str {
        &self.nodes[idx].label
    }

    fn graph(&self) -> UnGraph<(), f64> {
        let mut g = UnGraph::with_capacity(self.nodes.len(), self.edges.len());
        for _ in &self.nodes {
            g.add_node(());
        }
        for edge in &self.edges {
            g.add_edge(
                NodeIndex::new(self.index[&edge.from]),
                NodeIndex::new(self.index[&edge.to]),
                edge.length_m,
            );
        }
        g
    }

    /// Shortest-path lengths in meters from `source` to every reachable node.
    fn distances_from(&self, source: usize) -> HashMap<usize, f64> {
        let g = self.graph();
        dijkstra(&g, NodeIndex::new(source), None, |e| *e.weight())
            .into_iter()
            .map(|(k, v)| (k.index(), v))
            .collect()
    }
}

/// Dense square matrix indexed by network node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    size: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            data: vec![0.0; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.size + j] = value;
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }
}

/// One material-handling task: carry from `from` to `to`, available for
/// pickup at `earliest_pickup_s`, due at the destination by `latest_delivery_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    pub earliest_pickup_s: f64,
    pub latest_delivery_s: f64,
}

#[derive(Debug, Clone)]
pub struct PdpInstance {
    pub layout: LayoutGraph,
    pub tasks: Vec<TaskSpec>,
    pub vehicles: usize,
    pub depot: String,
    pub speed: f64,
    pub horizon: f64,
}

impl PdpInstance {
    pub fn new(
        layout: LayoutGraph,
        tasks: Vec<TaskSpec>,
        vehicles: usize,
        depot: String,
        speed: f64,
        horizon: f64,
    ) -> Result<Self, InstanceError> {
        if tasks.is_empty() {
            return Err(InstanceError::NoTasks);
        }
        if vehicles == 0 {
            return Err(InstanceError::NoVehicles);
        }
        if !(speed > 0.0) || !speed.is_finite() {
            return Err(InstanceError::InvalidSpeed(speed));
        }
        if layout.position(&depot).is_none() {
            return Err(InstanceError::UnknownLocation {
                field: "depot".into(),
                id: depot,
            });
        }
        let mut seen = HashSet::new();
        for (t, task) in tasks.iter().enumerate() {
            if !seen.insert(task.id.as_str()) {
                return Err(InstanceError::DuplicateTask(task.id.clone()));
            }
            for (field, loc) in [("from", &task.from), ("to", &task.to)] {
                if layout.position(loc).is_none() {
                    return Err(InstanceError::UnknownLocation {
                        field: format!("tasks[{t}].{field}"),
                        id: loc.clone(),
                    });
                }
            }
            if task.from == task.to {
                return Err(InstanceError::SameLocation(task.id.clone()));
            }
            if !(task.earliest_pickup_s >= 0.0)
                || !(task.latest_delivery_s > task.earliest_pickup_s)
                || !task.latest_delivery_s.is_finite()
            {
                return Err(InstanceError::InvalidWindow {
                    task: task.id.clone(),
                    earliest: task.earliest_pickup_s,
                    latest: task.latest_delivery_s,
                });
            }
        }
        let latest = tasks
            .iter()
            .map(|t| t.latest_delivery_s)
            .fold(f64::NEG_INFINITY, f64::max);
        if !(horizon >= latest) || !horizon.is_finite() {
            return Err(InstanceError::HorizonTooShort { horizon, latest });
        }
        Ok(Self {
            layout,
            tasks,
            vehicles,
            depot,
            speed,
            horizon,
        })
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum NodeDoc {
    Bare(String),
    Labeled { id: String, label: Option<String> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutDoc {
    nodes: Vec<NodeDoc>,
    edges: Vec<(String, String, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    note: Option<String>,
    layout: LayoutDoc,
    tasks: Vec<TaskSpec>,
    vehicles: usize,
    depot: String,
    #[serde(default = "default_speed")]
    speed: f64,
    horizon: f64,
}

fn default_speed() -> f64 {
    DEFAULT_SPEED
}

/// Parses and validates an instance document (JSON).
pub fn load_instance(text: &str) -> Result<PdpInstance, InstanceError> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    let nodes = doc
        .layout
        .nodes
        .into_iter()
        .map(|n| match n {
            NodeDoc::Bare(id) => LayoutNode {
                label: id.clone(),
                id,
            },
            NodeDoc::Labeled { id, label } => LayoutNode {
                label: label.unwrap_or_else(|| id.clone()),
                id,
            },
        })
        .collect();
    let edges = doc
        .layout
        .edges
        .into_iter()
        .map(|(from, to, length_m)| LayoutEdge { from, to, length_m })
        .collect();
    let layout = LayoutGraph::new(nodes, edges)?;
    PdpInstance::new(
        layout,
        doc.tasks,
        doc.vehicles,
        doc.depot,
        doc.speed,
        doc.horizon,
    )
}

/// Shortest-path distances in meters between the given layout locations.
pub fn shortest_distance_matrix(
    layout: &LayoutGraph,
    locations: &[&str],
) -> Result<Matrix, InstanceError> {
    let mut positions = Vec::with_capacity(locations.len());
    for loc in locations {
        positions.push(
            layout
                .position(loc)
                .ok_or_else(|| InstanceError::UnknownLocation {
                    field: "locations".into(),
                    id: loc.to_string(),
                })?,
        );
    }
    let mut cache: HashMap<usize, HashMap<usize, f64>> = HashMap::new();
    let mut out = Matrix::zeros(locations.len());
    for (i, &pi) in positions.iter().enumerate() {
        let from = cache.entry(pi).or_insert_with(|| layout.distances_from(pi));
        for (j, &pj) in positions.iter().enumerate() {
            if i == j {
                continue;
            }
            let dist = from.get(&pj).ok_or_else(|| InstanceError::Unreachable {
                from: locations[i].to_string(),
                to: locations[j].to_string(),
            })?;
            out.set(i, j, *dist);
        }
    }
    // Dijkstra sums in path order; mirror the lower triangle so the matrix is
    // exactly symmetric.
    for i in 0..out.size() {
        for j in 0..i {
            let v = out.get(j, i);
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Travel times in seconds: shortest-path meters divided by `speed`.
pub fn shortest_travel_matrix(
    layout: &LayoutGraph,
    locations: &[&str],
    speed: f64,
) -> Result<Matrix, InstanceError> {
    if !(speed > 0.0) || !speed.is_finite() {
        return Err(InstanceError::InvalidSpeed(speed));
    }
    let mut m = shortest_distance_matrix(layout, locations)?;
    for v in &mut m.data {
        *v /= speed;
    }
    Ok(m)
}

/// The compiled pickup-and-delivery network.
#[derive(Debug, Clone)]
pub struct PdpNetwork {
    n: usize,
    vehicles: usize,
    horizon: f64,
    speed: f64,
    task_ids: Vec<String>,
    location: Vec<String>,
    labels: Vec<String>,
    earliest: Vec<f64>,
    latest: Vec<f64>,
    distance: Matrix,
    time: Matrix,
}

/// Compiles an instance into the node set, windows and travel matrices.
///
/// Pickups get `[earliest, horizon]`, deliveries `[0, latest]`, and the
/// source and terminal `[0, horizon]`.
pub fn build_network(instance: &PdpInstance) -> Result<PdpNetwork, InstanceError> {
    let n = instance.task_count();
    let size = 2 * n + 2;
    let mut location = Vec::with_capacity(size);
    let mut earliest = vec![0.0; size];
    let mut latest = vec![instance.horizon; size];
    location.push(instance.depot.clone());
    for (i, task) in instance.tasks.iter().enumerate() {
        location.push(task.from.clone());
        earliest[i + 1] = task.earliest_pickup_s;
    }
    for (i, task) in instance.tasks.iter().enumerate() {
        location.push(task.to.clone());
        latest[i + 1 + n] = task.latest_delivery_s;
    }
    location.push(instance.depot.clone());

    let refs: Vec<&str> = location.iter().map(String::as_str).collect();
    let distance = shortest_distance_matrix(&instance.layout, &refs)?;
    let mut time = distance.clone();
    for v in &mut time.data {
        *v /= instance.speed;
    }
    let labels = location
        .iter()
        .map(|l| {
            let idx = instance.layout.position(l).expect("validated location");
            instance.layout.label(idx).to_string()
        })
        .collect();
    Ok(PdpNetwork {
        n,
        vehicles: instance.vehicles,
        horizon: instance.horizon,
        speed: instance.speed,
        task_ids: instance.tasks.iter().map(|t| t.id.clone()).collect(),
        location,
        labels,
        earliest,
        latest,
        distance,
        time,
    })
}

impl PdpNetwork {
    /// Number of tasks.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vehicles(&self) -> usize {
        self.vehicles
    }

    pub fn node_count(&self) -> usize {
        2 * self.n + 2
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub const fn source(&self) -> usize {
        0
    }

    pub fn terminal(&self) -> usize {
        2 * self.n + 1
    }

    /// Pickup node of task `t` (zero based).
    pub fn pickup(&self, t: usize) -> usize {
        t + 1
    }

    pub fn delivery(&self, t: usize) -> usize {
        t + 1 + self.n
    }

    pub fn is_pickup(&self, node: usize) -> bool {
        (1..=self.n).contains(&node)
    }

    pub fn is_delivery(&self, node: usize) -> bool {
        (self.n + 1..=2 * self.n).contains(&node)
    }

    pub fn pickups(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.n
    }

    pub fn task_ids(&self) -> &[String] {
        &self.task_ids
    }

    /// Layout id of network node `node`.
    pub fn location(&self, node: usize) -> &str {
        &self.location[node]
    }

    /// Display label of the layout node under network node `node`.
    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    pub fn earliest(&self, node: usize) -> f64 {
        self.earliest[node]
    }

    pub fn latest(&self, node: usize) -> f64 {
        self.latest[node]
    }

    /// Nominal travel distance in meters.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distance.get(i, j)
    }

    /// Nominal travel time in seconds.
    pub fn time(&self, i: usize, j: usize) -> f64 {
        self.time.get(i, j)
    }

    pub fn distance_matrix(&self) -> &Matrix {
        &self.distance
    }

    pub fn time_matrix(&self) -> &Matrix {
        &self.time
    }

    /// Whether `(i, j)` belongs to the arc set: no self-arcs, nothing enters
    /// the source and nothing leaves the terminal.
    pub fn is_arc(&self, i: usize, j: usize) -> bool {
        i != j && j != self.source() && i != self.terminal()
    }

    /// All arcs in row-major order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let size = self.node_count();
        (0..size)
            .flat_map(move |i| (0..size).map(move |j| (i, j)))
            .filter(move |&(i, j)| self.is_arc(i, j))
    }

    pub fn arc_count(&self) -> usize {
        self.arcs().count()
    }

    /// Same layout and tasks with replaced windows; used to probe window
    /// monotonicity and to build synthetic variants in tests.
    pub fn with_windows(&self, earliest: Vec<f64>, latest: Vec<f64>) -> Self {
        assert_eq!(earliest.len(), self.node_count());
        assert_eq!(latest.len(), self.node_count());
        Self {
            earliest,
            latest,
            ..self.clone()
        }
    }

    /// Network restricted to a subset of tasks (in the given order), keeping
    /// windows and distances.
    pub fn restrict(&self, tasks: &[usize], vehicles: usize) -> Self {
        let m = tasks.len();
        let mut map = Vec::with_capacity(2 * m + 2);
        map.push(self.source());
        map.extend(tasks.iter().map(|&t| self.pickup(t)));
        map.extend(tasks.iter().map(|&t| self.delivery(t)));
        map.push(self.terminal());
        let size = map.len();
        let mut distance = Matrix::zeros(size);
        let mut time = Matrix::zeros(size);
        for (a, &i) in map.iter().enumerate() {
            for (b, &j) in map.iter().enumerate() {
                distance.set(a, b, self.distance(i, j));
                time.set(a, b, self.time(i, j));
            }
        }
        Self {
            n: m,
            vehicles,
            horizon: self.horizon,
            speed: self.speed,
            task_ids: tasks.iter().map(|&t| self.task_ids[t].clone()).collect(),
            location: map.iter().map(|&i| self.location[i].clone()).collect(),
            labels: map.iter().map(|&i| self.labels[i].clone()).collect(),
            earliest: map.iter().map(|&i| self.earliest[i]).collect(),
            latest: map.iter().map(|&i| self.latest[i]).collect(),
            distance,
            time,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RING: &str = r#"{
        "layout": {
            "nodes": ["DEP", "A", "B", "C"],
            "edges": [["DEP","A",15], ["A","B",15], ["B","C",15], ["C","DEP",15]]
        },
        "tasks": [{"id":"T1","from":"A","to":"B","earliest_pickup_s":10,"latest_delivery_s":30}],
        "vehicles": 1,
        "depot": "DEP",
        "horizon": 200
    }"#;

    fn edit(f: impl FnOnce(&mut serde_json::Value)) -> String {
        let mut v: serde_json::Value = serde_json::from_str(RING).unwrap();
        f(&mut v);
        v.to_string()
    }

    #[test]
    fn minimal_document_loads() {
        let inst = load_instance(RING).unwrap();
        assert_eq!(inst.task_count(), 1);
        assert_eq!(inst.vehicles, 1);
        assert_eq!(inst.speed, DEFAULT_SPEED);
    }

    #[test]
    fn unknown_task_location_is_named() {
        let text = edit(|v| v["tasks"][0]["to"] = "Z".into());
        let err = load_instance(&text).unwrap_err();
        assert!(matches!(&err, InstanceError::UnknownLocation { id, .. } if id == "Z"));
        assert!(err.to_string().contains("Z"));
    }

    #[test]
    fn negative_edge_is_rejected() {
        let text = edit(|v| v["layout"]["edges"][1][2] = (-5.0).into());
        let err = load_instance(&text).unwrap_err();
        match err {
            InstanceError::NonPositiveLength { from, to, length } => {
                assert_eq!((from.as_str(), to.as_str(), length), ("A", "B", -5.0));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn disconnected_layout_is_rejected() {
        let text = edit(|v| {
            v["layout"]["nodes"]
                .as_array_mut()
                .unwrap()
                .push("X".into());
        });
        assert!(matches!(
            load_instance(&text).unwrap_err(),
            InstanceError::Unreachable { to, .. } if to == "X"
        ));
    }

    #[test]
    fn inverted_window_is_rejected() {
        let text = edit(|v| v["tasks"][0]["latest_delivery_s"] = 10.0.into());
        assert!(matches!(
            load_instance(&text).unwrap_err(),
            InstanceError::InvalidWindow { .. }
        ));
    }

    #[test]
    fn malformed_document_is_a_parse_error() {
        assert!(matches!(
            load_instance("{\"layout\": 3}").unwrap_err(),
            InstanceError::Parse(_)
        ));
    }

    #[test]
    fn ring_travel_times() {
        let inst = load_instance(RING).unwrap();
        let m = shortest_travel_matrix(&inst.layout, &["DEP", "A", "B", "C"], 1.5).unwrap();
        assert_eq!(m.get(0, 1), 10.0);
        assert_eq!(m.get(0, 2), 20.0);
        for i in 0..4 {
            assert_eq!(m.get(i, i), 0.0);
        }
    }

    #[test]
    fn network_windows_follow_task_semantics() {
        let net = build_network(&load_instance(RING).unwrap()).unwrap();
        assert_eq!(net.node_count(), 4);
        assert_eq!(net.earliest(1), 10.0);
        assert_eq!(net.latest(2), 30.0);
        assert_eq!(net.latest(1), 200.0);
        assert_eq!((net.earliest(0), net.latest(3)), (0.0, 200.0));
        assert_eq!(net.time(0, 3), 0.0);
    }

    #[test]
    fn delivery_index_arithmetic() {
        let text = edit(|v| {
            v["tasks"]
                .as_array_mut()
                .unwrap()
                .push(serde_json::json!({"id":"T2","from":"C","to":"B","earliest_pickup_s":0,"latest_delivery_s":50}));
        });
        let net = build_network(&load_instance(&text).unwrap()).unwrap();
        assert_eq!(net.delivery(1), 4);
        assert_eq!(net.terminal(), 5);
    }
}
