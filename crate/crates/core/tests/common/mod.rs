//! Shared helpers for integration tests: an exhaustive enumeration oracle
//! and a seeded random instance generator.

#![allow(dead_code)]

pub mod oracle;

use plroute::instance::{
    build_network, LayoutEdge, LayoutGraph, LayoutNode, PdpInstance, PdpNetwork, TaskSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random connected layout (a ring plus chords) with `tasks` tasks.
pub fn random_network(seed: u64, tasks: usize, vehicles: usize) -> PdpNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let locations = rng.random_range(4..=6usize);
    let ids: Vec<String> = (0..locations)
        .map(|i| {
            if i == 0 {
                "DEP".to_string()
            } else {
                format!("L{i}")
            }
        })
        .collect();
    let nodes = ids
        .iter()
        .map(|id| LayoutNode {
            id: id.clone(),
            label: id.clone(),
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..locations {
        edges.push(LayoutEdge {
            from: ids[i].clone(),
            to: ids[(i + 1) % locations].clone(),
            length_m: 15.0 * rng.random_range(1..=3u32) as f64,
        });
    }
    for _ in 0..rng.random_range(0..=2u32) {
        let a = rng.random_range(0..locations);
        let b = rng.random_range(0..locations);
        if a != b {
            edges.push(LayoutEdge {
                from: ids[a].clone(),
                to: ids[b].clone(),
                length_m: 15.0 * rng.random_range(1..=4u32) as f64,
            });
        }
    }
    let layout = LayoutGraph::new(nodes, edges).unwrap();
    let specs = (0..tasks)
        .map(|t| {
            let from = rng.random_range(1..locations);
            let mut to = rng.random_range(0..locations);
            if to == from {
                to = (to + 1) % locations;
            }
            let earliest = 10.0 * rng.random_range(0..=6u32) as f64;
            let latest = earliest + 10.0 * rng.random_range(1..=8u32) as f64;
            TaskSpec {
                id: format!("T{}", t + 1),
                from: ids[from].clone(),
                to: ids[to].clone(),
                earliest_pickup_s: earliest,
                latest_delivery_s: latest,
            }
        })
        .collect();
    let instance = PdpInstance::new(layout, specs, vehicles, "DEP".into(), 1.5, 300.0).unwrap();
    build_network(&instance).unwrap()
}
