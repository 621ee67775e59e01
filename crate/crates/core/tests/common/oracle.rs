//! Exhaustive enumeration over every task-to-vehicle assignment, every
//! pickup/delivery order per vehicle and every ignore-set of scenarios.
//! Shares nothing with the branch-and-bound apart from the network data.

use plroute::instance::PdpNetwork;

/// Realized travel times, one dense row-major matrix per scenario.
pub struct Times {
    pub size: usize,
    pub data: Vec<Vec<f64>>,
}

impl Times {
    pub fn nominal(net: &PdpNetwork) -> Self {
        let size = net.node_count();
        let mut row = vec![0.0; size * size];
        for i in 0..size {
            for j in 0..size {
                row[i * size + j] = net.time(i, j);
            }
        }
        Self {
            size,
            data: vec![row],
        }
    }

    pub fn from_multipliers(net: &PdpNetwork, scenarios: &plroute::scenarios::ScenarioSet) -> Self {
        let size = net.node_count();
        let data = (0..scenarios.len())
            .map(|s| {
                let mut row = vec![0.0; size * size];
                for i in 0..size {
                    for j in 0..size {
                        if i != j {
                            row[i * size + j] = scenarios.multiplier(s, i, j) * net.time(i, j);
                        }
                    }
                }
                row
            })
            .collect();
        Self { size, data }
    }

    fn get(&self, s: usize, i: usize, j: usize) -> f64 {
        self.data[s][i * self.size + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Best {
    pub objective: f64,
    pub routes: Vec<Vec<usize>>,
}

/// Service time at each route position when every node is served as early
/// as its window, its predecessor and (for deliveries) its pickup allow.
pub fn schedule(net: &PdpNetwork, times: &Times, s: usize, route: &[usize]) -> Vec<f64> {
    let n = net.n();
    let mut at = vec![f64::NAN; net.node_count()];
    let mut out = Vec::with_capacity(route.len());
    let mut clock = net.earliest(route[0]).max(0.0);
    at[route[0]] = clock;
    out.push(clock);
    for pair in route.windows(2) {
        let (last, v) = (pair[0], pair[1]);
        let mut t = clock + times.get(s, last, v);
        if v > n && v <= 2 * n {
            t = t.max(at[v - n] + times.get(s, v - n, v));
        }
        t = t.max(net.earliest(v));
        at[v] = t;
        out.push(t);
        clock = t;
    }
    out
}

/// Whether the earliest schedule of `route` meets every window in scenario `s`.
pub fn route_ok(net: &PdpNetwork, times: &Times, s: usize, route: &[usize]) -> bool {
    schedule(net, times, s, route)
        .iter()
        .zip(route)
        .all(|(&t, &v)| t <= net.latest(v) + 1e-9)
}

/// Every plan: each task assignment to vehicles times every
/// precedence-respecting order on each vehicle.
pub fn plans(net: &PdpNetwork) -> Vec<Vec<Vec<usize>>> {
    let (n, k) = (net.n(), net.vehicles());
    let mut out = Vec::new();
    for code in 0..k.pow(n as u32) {
        let mut groups = vec![Vec::new(); k];
        let mut c = code;
        for t in 0..n {
            groups[c % k].push(t);
            c /= k;
        }
        let mut partial: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
        for g in &groups {
            let options = orders(net, g);
            partial = partial
                .into_iter()
                .flat_map(|p| {
                    options.iter().map(move |o| {
                        let mut q = p.clone();
                        q.push(o.clone());
                        q
                    })
                })
                .collect();
        }
        out.extend(partial);
    }
    out
}

fn orders(net: &PdpNetwork, tasks: &[usize]) -> Vec<Vec<usize>> {
    fn rec(
        net: &PdpNetwork,
        pending: &mut Vec<usize>,
        open: &mut Vec<usize>,
        seq: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if pending.is_empty() && open.is_empty() {
            let mut r = vec![0];
            r.extend(seq.iter().copied());
            r.push(net.terminal());
            out.push(r);
            return;
        }
        for idx in 0..pending.len() {
            let t = pending.remove(idx);
            open.push(t);
            seq.push(t + 1);
            rec(net, pending, open, seq, out);
            seq.pop();
            open.pop();
            pending.insert(idx, t);
        }
        for idx in 0..open.len() {
            let t = open.remove(idx);
            seq.push(t + 1 + net.n());
            rec(net, pending, open, seq, out);
            seq.pop();
            open.insert(idx, t);
        }
    }
    let mut out = Vec::new();
    rec(
        net,
        &mut tasks.to_vec(),
        &mut Vec::new(),
        &mut Vec::new(),
        &mut out,
    );
    out
}

fn route_length(net: &PdpNetwork, route: &[usize]) -> f64 {
    route.windows(2).map(|w| net.distance(w[0], w[1])).sum()
}

/// Minimum-distance plan admitting an ignore-set of mass at most `alpha`,
/// or `None` when no plan is feasible.
pub fn solve(net: &PdpNetwork, times: &Times, probs: &[f64], alpha: f64) -> Option<Best> {
    let n = net.n();
    let k = net.vehicles();
    let omega = times.data.len();
    let mut best: Option<Best> = None;
    let assignments = k.pow(n as u32);
    for code in 0..assignments {
        let mut groups = vec![Vec::new(); k];
        let mut c = code;
        for t in 0..n {
            groups[c % k].push(t);
            c /= k;
        }
        let per_vehicle: Vec<Vec<Vec<usize>>> = groups.iter().map(|g| orders(net, g)).collect();
        let mut pick = vec![0usize; k];
        loop {
            let routes: Vec<Vec<usize>> = (0..k).map(|v| per_vehicle[v][pick[v]].clone()).collect();
            let objective: f64 = routes.iter().map(|r| route_length(net, r)).sum();
            if best.as_ref().is_none_or(|b| objective < b.objective - 1e-9) {
                let feasible = (0..1u32 << omega).any(|ignore| {
                    let mass: f64 = (0..omega)
                        .filter(|s| ignore & (1 << s) != 0)
                        .map(|s| probs[s])
                        .sum();
                    mass <= alpha + 1e-9
                        && (0..omega)
                            .filter(|s| ignore & (1 << s) == 0)
                            .all(|s| routes.iter().all(|r| route_ok(net, times, s, r)))
                });
                if feasible {
                    best = Some(Best { objective, routes });
                }
            }
            let mut v = 0;
            while v < k {
                pick[v] += 1;
                if pick[v] < per_vehicle[v].len() {
                    break;
                }
                pick[v] = 0;
                v += 1;
            }
            if v == k {
                break;
            }
        }
    }
    best
}
