mod common;

use common::oracle::{self, Times};
use common::random_network;
use plroute::benchmarks;
use plroute::formulation::{assignment_from_routes, build_deterministic, build_stochastic};
use plroute::instance::PdpNetwork;
use plroute::scenarios::{generate_scenarios, ScenarioConfig, ScenarioSet};
use plroute::solver::{
    solve_alpha_zero_fast, solve_deterministic, solve_stochastic, Solution, SolveConfig,
    SolveStatus,
};

fn checker_passes(net: &PdpNetwork, scenarios: Option<&ScenarioSet>, alpha: f64, sol: &Solution) {
    let plan = sol.plan.as_ref().expect("optimal has plan");
    let schedule = sol.schedule.as_ref().expect("optimal has schedule");
    let (system, times) = match scenarios {
        None => (build_deterministic(net), vec![net.time_matrix().clone()]),
        Some(set) => (
            build_stochastic(net, set, alpha).unwrap(),
            set.all_travel_times(net),
        ),
    };
    let a = assignment_from_routes(
        &system,
        net,
        plan.routes(),
        &times,
        &schedule.times,
        &schedule.ignored,
    )
    .unwrap();
    let verdict = system.check_solution(&a).unwrap();
    assert!(verdict.is_feasible(), "{:?}", verdict.violations());
}

#[test]
fn tri3_matches_enumeration() {
    let net = benchmarks::tri3_network();
    let best = oracle::solve(&net, &Times::nominal(&net), &[1.0], 0.0).unwrap();
    assert_eq!(best.objective, 90.0);
    let sol = solve_deterministic(&net, &SolveConfig::default()).unwrap();
    assert_eq!(sol.objective, Some(best.objective));
    checker_passes(&net, None, 0.0, &sol);
}

#[test]
fn single_task_enumeration() {
    let net = benchmarks::tri3_network().restrict(&[0], 1);
    let wide = net.with_windows(vec![0.0; 4], vec![200.0; 4]);
    let best = oracle::solve(&wide, &Times::nominal(&wide), &[1.0], 0.0).unwrap();
    assert_eq!(best.objective, 60.0);
    assert_eq!(best.routes, vec![vec![0, 1, 2, 3]]);
}

#[test]
fn randomized_equivalence_with_enumeration() {
    let mut feasible = 0;
    let mut infeasible = 0;
    for seed in 0..60u64 {
        let n = 1 + (seed % 3) as usize;
        let k = 1 + (seed / 3 % 2) as usize;
        let net = random_network(1000 + seed, n, k);
        let omega = 1 + (seed / 6 % 3) as usize;
        let set = generate_scenarios(&net, &ScenarioConfig::new(seed, omega)).unwrap();
        let alpha = [0.0, 0.34, 0.5, 0.67][(seed % 4) as usize];
        let sol = solve_stochastic(&net, &set, &SolveConfig::with_alpha(alpha)).unwrap();
        let expected = oracle::solve(
            &net,
            &Times::from_multipliers(&net, &set),
            set.probabilities(),
            alpha,
        );
        match expected {
            Some(best) => {
                feasible += 1;
                assert_eq!(sol.status, SolveStatus::Optimal, "seed {seed}");
                assert!(
                    (sol.objective.unwrap() - best.objective).abs() <= 1e-9,
                    "seed {seed}"
                );
                checker_passes(&net, Some(&set), alpha, &sol);
            }
            None => {
                infeasible += 1;
                assert_eq!(sol.status, SolveStatus::Infeasible, "seed {seed}");
            }
        }
    }
    assert!(
        feasible >= 20 && infeasible >= 3,
        "{feasible} feasible, {infeasible} infeasible"
    );
}

#[test]
fn nominal_single_scenario_reproduces_deterministic() {
    for seed in 0..10u64 {
        let net = random_network(77 + seed, 3, 2);
        let det = solve_deterministic(&net, &SolveConfig::default()).unwrap();
        let sto =
            solve_stochastic(&net, &ScenarioSet::nominal(&net), &SolveConfig::default()).unwrap();
        assert_eq!(det, sto);
    }
}

#[test]
fn stochastic_never_cheaper_than_deterministic() {
    let net = benchmarks::tri3_network();
    let det = solve_deterministic(&net, &SolveConfig::default()).unwrap();
    let set = generate_scenarios(&net, &ScenarioConfig::new(7, 30)).unwrap();
    let sto = solve_stochastic(&net, &set, &SolveConfig::default()).unwrap();
    if let Some(obj) = sto.objective {
        assert!(obj >= det.objective.unwrap() - 1e-9);
        checker_passes(&net, Some(&set), 0.0, &sto);
    }
}

#[test]
fn shortcut_is_conservative_and_exact_on_one_scenario() {
    for seed in 0..10u64 {
        let net = random_network(500 + seed, 3, 2);
        let set = generate_scenarios(&net, &ScenarioConfig::new(seed, 1)).unwrap();
        let fast = solve_alpha_zero_fast(&net, &set, &SolveConfig::default()).unwrap();
        let full = solve_stochastic(&net, &set, &SolveConfig::default()).unwrap();
        assert_eq!(fast.status, full.status);
        assert_eq!(fast.objective, full.objective);
        assert_eq!(fast.plan, full.plan);

        let many = generate_scenarios(&net, &ScenarioConfig::new(seed, 8)).unwrap();
        let fast = solve_alpha_zero_fast(&net, &many, &SolveConfig::default()).unwrap();
        let full = solve_stochastic(&net, &many, &SolveConfig::default()).unwrap();
        if let Some(obj) = fast.objective {
            // Anything feasible under the supremum is feasible per scenario.
            assert_eq!(full.status, SolveStatus::Optimal);
            assert!(obj >= full.objective.unwrap() - 1e-9);
            checker_passes(&net, Some(&many), 0.0, &fast);
        }
    }
}

#[test]
fn shortcut_with_dominating_scenario() {
    let net = benchmarks::tri3_network();
    let pairs = net.node_count() * (net.node_count() - 1) / 2;
    let set = ScenarioSet::uniform(
        net.node_count(),
        vec![vec![1.1; pairs], vec![0.8; pairs], vec![1.3; pairs]],
    )
    .unwrap();
    let fast = solve_alpha_zero_fast(&net, &set, &SolveConfig::default()).unwrap();
    let alone = ScenarioSet::uniform(net.node_count(), vec![vec![1.3; pairs]]).unwrap();
    let direct = solve_stochastic(&net, &alone, &SolveConfig::default()).unwrap();
    assert_eq!(fast.objective, direct.objective);
    assert_eq!(fast.plan, direct.plan);
}

/// One task whose delivery is met unless the worst scenario stretches its
/// leg; with alpha = 0.1 over ten scenarios the plan ignores exactly that one.
#[test]
fn alpha_budget_ignores_the_worst_scenario() {
    let base = benchmarks::tri3_network().restrict(&[0], 1);
    // 0 -> A (10 s) -> B (10 s) -> 0; deliver by 21 s.
    let net = base.with_windows(vec![0.0; 4], vec![200.0, 200.0, 21.0, 200.0]);
    let pairs = 6;
    let mut rows = vec![vec![1.0; pairs]; 10];
    let ab = plroute::scenarios::pair_index(4, 1, 2);
    rows[6][ab] = 1.5;
    let set = ScenarioSet::uniform(4, rows).unwrap();

    let strict = solve_stochastic(&net, &set, &SolveConfig::default()).unwrap();
    assert_eq!(strict.status, SolveStatus::Infeasible);
    assert_eq!(strict.infeasibility.unwrap().limiting_scenarios, vec![6]);

    let relaxed = solve_stochastic(&net, &set, &SolveConfig::with_alpha(0.1)).unwrap();
    assert_eq!(relaxed.status, SolveStatus::Optimal);
    let schedule = relaxed.schedule.as_ref().unwrap();
    assert_eq!(schedule.ignored_scenarios(), vec![6]);
    let best = oracle::solve(
        &net,
        &Times::from_multipliers(&net, &set),
        set.probabilities(),
        0.1,
    )
    .unwrap();
    assert_eq!(relaxed.objective, Some(best.objective));
    checker_passes(&net, Some(&set), 0.1, &relaxed);
}

#[test]
fn enlarging_windows_never_raises_cost() {
    for seed in 0..15u64 {
        let net = random_network(300 + seed, 3, 2);
        let before = solve_deterministic(&net, &SolveConfig::default()).unwrap();
        let latest: Vec<f64> = (0..net.node_count())
            .map(|i| net.latest(i) + 25.0)
            .collect();
        let earliest: Vec<f64> = (0..net.node_count())
            .map(|i| (net.earliest(i) - 5.0).max(0.0))
            .collect();
        let wider = net.with_windows(earliest, latest);
        let after = solve_deterministic(&wider, &SolveConfig::default()).unwrap();
        if let Some(b) = before.objective {
            assert!(after.objective.unwrap() <= b + 1e-9, "seed {seed}");
        }
    }
}

#[test]
fn raising_alpha_never_raises_cost() {
    for seed in 0..15u64 {
        let net = random_network(900 + seed, 3, 2);
        let set = generate_scenarios(&net, &ScenarioConfig::new(seed, 3)).unwrap();
        let mut last = f64::INFINITY;
        for alpha in [0.0, 0.34, 0.67] {
            let sol = solve_stochastic(&net, &set, &SolveConfig::with_alpha(alpha)).unwrap();
            let obj = sol.objective.unwrap_or(f64::INFINITY);
            assert!(obj <= last + 1e-9, "seed {seed} alpha {alpha}");
            last = obj;
        }
    }
}

#[test]
fn idle_vehicles_cost_nothing() {
    let net = random_network(42, 1, 2);
    let net = net.restrict(&[0], 3);
    let sol = solve_deterministic(&net, &SolveConfig::default()).unwrap();
    if let Some(plan) = sol.plan {
        let idle: Vec<_> = plan.routes().iter().filter(|r| r.len() == 2).collect();
        assert_eq!(idle.len(), 2);
        assert!(idle.iter().all(|r| r == &&vec![0, net.terminal()]));
    }
}

#[test]
fn repeated_runs_are_identical() {
    let net = benchmarks::tri3_network();
    let set = generate_scenarios(&net, &ScenarioConfig::new(3, 12)).unwrap();
    let a = solve_stochastic(&net, &set, &SolveConfig::with_alpha(0.2)).unwrap();
    let b = solve_stochastic(&net, &set, &SolveConfig::with_alpha(0.2)).unwrap();
    assert_eq!(a, b);
}
