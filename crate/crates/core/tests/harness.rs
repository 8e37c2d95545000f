use ots_core::harness::{
    default_spanning_tree, read_runs_csv, run_benchmark, run_spanning_tree_baseline, summarize, HarnessConfig, MethodId,
};
use ots_core::iterative::IterConfig;
use ots_core::network::{sample_scenarios, Bus, Generator, Line, PowerNetwork};
use ots_core::solver::{enumerate_topologies_oracle, HighsEngine, SolveStatus};

/// Cheap supply behind a strong but thin line that loops with the main
/// corridor, so closing everything congests it.
fn congested() -> PowerNetwork {
    let buses = [(1, 0.0), (2, 30.0), (3, 120.0), (4, 40.0)]
        .map(|(id, d)| Bus {
            id,
            baseline_demand: d,
            is_reference: id == 1,
        })
        .to_vec();
    let generators = vec![
        Generator {
            id: 1,
            bus: 1,
            p_min: 0.0,
            p_max: 300.0,
            marginal_cost: 10.0,
        },
        Generator {
            id: 2,
            bus: 3,
            p_min: 0.0,
            p_max: 200.0,
            marginal_cost: 45.0,
        },
    ];
    let lines = vec![
        Line::new(1, 1, 2, 10.0, 250.0),
        Line::new(2, 2, 3, 10.0, 250.0),
        Line::new(3, 1, 3, 12.0, 40.0),
        Line::new(4, 3, 4, 8.0, 80.0),
        Line::new(5, 2, 4, 6.0, 30.0),
    ];
    PowerNetwork::new(buses, generators, lines, 100.0).unwrap()
}

fn cfg() -> HarnessConfig {
    HarnessConfig {
        time_limit: 60.0,
        iter: IterConfig {
            outer_times: vec![2.0, 4.0, 8.0],
            heuristic_time: 2.0,
            ..IterConfig::default()
        },
        bigm_time_limit: 10.0,
        ..HarnessConfig::default()
    }
}

#[test]
fn six_methods_match_enumeration() {
    let net = congested();
    let scenarios = sample_scenarios(&net, 3, 9);
    let bundle = run_benchmark(&net, &scenarios, &MethodId::six(), &cfg(), &HighsEngine).unwrap();
    assert_eq!(bundle.reports.len(), 18);
    for s in &scenarios {
        let oracle = enumerate_topologies_oracle(&net, s, &HighsEngine).unwrap().objective_cost;
        for r in bundle.reports.iter().filter(|r| r.scenario_id == s.scenario_id) {
            assert_eq!(r.status, SolveStatus::Optimal, "{}", r.method);
            let obj = r.objective.unwrap();
            assert!((obj - oracle).abs() <= 1e-4 * oracle, "{} {obj} vs {oracle}", r.method);
        }
    }
    let dir = tempfile::tempdir().unwrap();
    bundle.write(dir.path(), serde_json::json!({})).unwrap();
    let rows = read_runs_csv(std::fs::File::open(dir.path().join("runs.csv")).unwrap()).unwrap();
    assert_eq!(summarize(&rows), bundle.summary);
    for (method, curve) in &bundle.curves {
        assert!(curve.windows(2).all(|w| w[0].solved <= w[1].solved && w[0].time_s <= w[1].time_s), "{method}");
        assert!(curve.last().unwrap().solved <= scenarios.len());
    }
}

#[test]
fn baseline_pays_for_the_fixed_tree() {
    let net = congested();
    let tree = default_spanning_tree(&net);
    assert_eq!(tree.len(), 3);
    let mut strictly_lower = 0;
    for s in sample_scenarios(&net, 4, 1) {
        let base = run_spanning_tree_baseline(&net, &s, &tree, &cfg(), &HighsEngine).unwrap();
        let oracle = enumerate_topologies_oracle(&net, &s, &HighsEngine).unwrap().objective_cost;
        let base = base.objective.unwrap();
        assert!(oracle <= base * (1.0 + 1e-9));
        if oracle < base * (1.0 - 1e-6) {
            strictly_lower += 1;
        }
    }
    assert!(strictly_lower >= 1);
}
