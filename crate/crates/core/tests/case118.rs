use std::collections::BTreeMap;

use ots_core::network::{parse_case, read_scenarios_csv, sample_scenarios, write_case, write_scenarios_csv, PowerNetwork};

fn case118() -> PowerNetwork {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/case118.m");
    parse_case(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn sizes() {
    let net = case118();
    assert_eq!(net.bus_count(), 118);
    assert_eq!(net.line_count(), 186);
    let g = net.to_multigraph();
    assert_eq!(g.vertex_count(), 118);
    assert_eq!(g.edge_count(), 186);
    let mut a: Vec<(usize, usize)> = net.lines().iter().map(|l| l.endpoints()).collect();
    let mut b: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.u, e.v)).collect();
    a.sort();
    b.sort();
    assert_eq!(a, b);
    for (l, e) in net.lines().iter().zip(g.edges()) {
        assert_eq!(e.weight, l.capacity / (net.base_mva() * l.susceptance()));
    }
}

#[test]
fn round_trip() {
    let net = case118();
    assert_eq!(parse_case(&write_case(&net)).unwrap(), net);
}

#[test]
fn scenarios_stay_in_band() {
    let net = case118();
    let s = sample_scenarios(&net, 100, 11);
    assert_eq!(s.len(), 100);
    assert_eq!(s, sample_scenarios(&net, 100, 11));
    assert_ne!(s, sample_scenarios(&net, 100, 12));
    for sc in &s {
        for b in net.buses() {
            let d = sc.demand_at(b.id);
            assert!(d >= 0.9 * b.baseline_demand && d <= 1.1 * b.baseline_demand);
        }
    }
    let mut buf = Vec::new();
    write_scenarios_csv(&s, &mut buf).unwrap();
    assert_eq!(read_scenarios_csv(&net, buf.as_slice()).unwrap(), s);
}

#[test]
fn sampler_marginals() {
    let net = case118();
    let bus = net.buses().iter().max_by(|a, b| a.baseline_demand.total_cmp(&b.baseline_demand)).unwrap();
    let d = bus.baseline_demand;
    let draws: Vec<f64> = sample_scenarios(&net, 10_000, 5).iter().map(|s| s.demand_at(bus.id)).collect();
    let lo = draws.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = draws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!((lo - 0.9 * d).abs() <= 0.005 * 0.9 * d, "{lo} vs {}", 0.9 * d);
    assert!((hi - 1.1 * d).abs() <= 0.005 * 1.1 * d, "{hi} vs {}", 1.1 * d);
    let mut buckets: BTreeMap<usize, usize> = BTreeMap::new();
    for x in &draws {
        *buckets.entry((((x / d) - 0.9) / 0.02).floor().min(9.0) as usize).or_default() += 1;
    }
    assert_eq!(buckets.len(), 10);
    assert!(buckets.values().all(|&c| (800..1200).contains(&c)), "{buckets:?}");
}
