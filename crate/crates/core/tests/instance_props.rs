use plroute::benchmarks;
use plroute::instance::{
    build_network, shortest_travel_matrix, LayoutEdge, LayoutGraph, LayoutNode, PdpInstance,
    TaskSpec,
};
use proptest::prelude::*;

/// Every simple path between two nodes, by brute force.
fn brute_force_shortest(len: usize, edges: &[(usize, usize, f64)], from: usize, to: usize) -> f64 {
    fn walk(
        at: usize,
        to: usize,
        edges: &[(usize, usize, f64)],
        seen: &mut Vec<bool>,
        acc: f64,
        best: &mut f64,
    ) {
        if at == to {
            *best = best.min(acc);
            return;
        }
        for &(a, b, w) in edges {
            for (x, y) in [(a, b), (b, a)] {
                if x == at && !seen[y] {
                    seen[y] = true;
                    walk(y, to, edges, seen, acc + w, best);
                    seen[y] = false;
                }
            }
        }
    }
    let mut seen = vec![false; len];
    seen[from] = true;
    let mut best = f64::INFINITY;
    walk(from, to, edges, &mut seen, 0.0, &mut best);
    best
}

fn layout(len: usize, edges: &[(usize, usize, f64)], names: &[String]) -> LayoutGraph {
    LayoutGraph::new(
        names
            .iter()
            .map(|n| LayoutNode {
                id: n.clone(),
                label: n.clone(),
            })
            .collect(),
        edges
            .iter()
            .map(|&(a, b, w)| LayoutEdge {
                from: names[a].clone(),
                to: names[b].clone(),
                length_m: w,
            })
            .collect(),
    )
    .inspect(|g| assert_eq!(g.nodes().len(), len))
    .unwrap()
}

#[test]
fn ring_distances_match_enumeration() {
    let edges = [(0, 1, 15.0), (1, 2, 15.0), (2, 3, 15.0), (3, 0, 15.0)];
    let names: Vec<String> = ["DEP", "A", "B", "C"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let g = layout(4, &edges, &names);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let m = shortest_travel_matrix(&g, &refs, 1.5).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let expected = if i == j {
                0.0
            } else {
                brute_force_shortest(4, &edges, i, j) / 1.5
            };
            assert_eq!(m.get(i, j), expected);
        }
    }
    assert_eq!(m.get(0, 2), 20.0);
}

#[test]
fn tri3_source_to_first_pickup() {
    let net = benchmarks::tri3_network();
    assert_eq!(net.time(0, net.pickup(0)), 10.0);
}

fn arb_layout() -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (3usize..7).prop_flat_map(|len| {
        let ring = proptest::collection::vec(1u32..40, len);
        let chords = proptest::collection::vec((0..len, 0..len, 1u32..60), 0..4);
        (Just(len), ring, chords).prop_map(|(len, ring, chords)| {
            let mut edges: Vec<(usize, usize, f64)> = ring
                .iter()
                .enumerate()
                .map(|(i, &w)| (i, (i + 1) % len, w as f64 * 1.5))
                .collect();
            edges.extend(
                chords
                    .into_iter()
                    .filter(|(a, b, _)| a != b)
                    .map(|(a, b, w)| (a, b, w as f64 * 0.75)),
            );
            (len, edges)
        })
    })
}

proptest! {
    #[test]
    fn network_times_are_a_metric((len, edges) in arb_layout(), seed in 0u64..1000) {
        let names: Vec<String> = (0..len).map(|i| format!("N{i}")).collect();
        let g = layout(len, &edges, &names);
        let tasks = (0..2).map(|t| {
            let from = 1 + (seed as usize + t) % (len - 1);
            TaskSpec {
                id: format!("T{t}"),
                from: names[from].clone(),
                to: names[(from + 1) % len].clone(),
                earliest_pickup_s: 0.0,
                latest_delivery_s: 100.0,
            }
        }).collect();
        let inst = PdpInstance::new(g, tasks, 2, names[0].clone(), 1.5, 100.0).unwrap();
        let net = build_network(&inst).unwrap();
        let size = net.node_count();
        for i in 0..size {
            prop_assert_eq!(net.time(i, i), 0.0);
            for j in 0..size {
                prop_assert_eq!(net.time(i, j), net.time(j, i));
                prop_assert!((net.time(i, j) - net.distance(i, j) / 1.5).abs() <= 1e-9);
                for k in 0..size {
                    prop_assert!(net.time(i, k) <= net.time(i, j) + net.time(j, k) + 1e-9);
                }
            }
        }
        let again = build_network(&inst).unwrap();
        prop_assert_eq!(again.time_matrix(), net.time_matrix());
    }

    #[test]
    fn relabeling_permutes_the_matrix((len, edges) in arb_layout(), shift in 1usize..5) {
        let names: Vec<String> = (0..len).map(|i| format!("N{i}")).collect();
        let g = layout(len, &edges, &names);
        // Same graph, node ids renamed and listed in a rotated order.
        let rename = |i: usize| format!("R{}", (i + shift) % len);
        let mut order: Vec<usize> = (0..len).collect();
        order.rotate_left(shift % len);
        let renamed_nodes: Vec<LayoutNode> = order.iter().map(|&i| LayoutNode { id: rename(i), label: rename(i) }).collect();
        let renamed_edges = edges.iter().map(|&(a, b, w)| LayoutEdge { from: rename(a), to: rename(b), length_m: w }).collect();
        let h = LayoutGraph::new(renamed_nodes, renamed_edges).unwrap();
        let original: Vec<&str> = names.iter().map(String::as_str).collect();
        let renamed: Vec<String> = (0..len).map(rename).collect();
        let renamed_refs: Vec<&str> = renamed.iter().map(String::as_str).collect();
        let m1 = shortest_travel_matrix(&g, &original, 1.5).unwrap();
        let m2 = shortest_travel_matrix(&h, &renamed_refs, 1.5).unwrap();
        for i in 0..len {
            for j in 0..len {
                prop_assert!((m1.get(i, j) - m2.get(i, j)).abs() <= 1e-9);
                let brute = if i == j { 0.0 } else { brute_force_shortest(len, &edges, i, j) / 1.5 };
                prop_assert!((m1.get(i, j) - brute).abs() <= 1e-9);
            }
        }
    }
}
