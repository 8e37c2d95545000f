use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{MilpModel, ObjectiveSense, Sense, VarId};
use crate::bigm::BigMSet;
use crate::network::{BusId, DemandScenario, GeneratorId, LineId, PowerNetwork};
use crate::{OtsError, Result};

/// Tolerance (MW, rad) for verifying decoded switching solutions.
pub const SOLUTION_TOLERANCE: f64 = 1e-4;

/// Column positions of every modelled quantity, in network order.
#[derive(Debug, Clone, PartialEq)]
pub struct OtsLayout {
    pub lines: Vec<LineId>,
    pub buses: Vec<BusId>,
    pub generators: Vec<GeneratorId>,
    /// Empty for dispatch models.
    pub x: Vec<VarId>,
    pub y: Vec<VarId>,
    pub z: Vec<VarId>,
    pub u: Vec<VarId>,
    pub f: Vec<VarId>,
    pub theta: Vec<VarId>,
    pub p: Vec<VarId>,
    /// Closed lines of a dispatch model.
    pub fixed_topology: Option<BTreeSet<LineId>>,
}

impl OtsLayout {
    pub fn has_switching(&self) -> bool {
        !self.x.is_empty()
    }
}

/// A built model together with its column layout.
#[derive(Debug, Clone, PartialEq)]
pub struct OtsModel {
    pub model: MilpModel,
    pub layout: OtsLayout,
}

impl OtsModel {
    /// Full column vector representing `sol` in this model.
    pub fn values_of(&self, sol: &SwitchingSolution) -> Vec<f64> {
        let l = &self.layout;
        let mut values = vec![0.0; self.model.num_vars()];
        let flag = |b: Option<&bool>| if b.copied().unwrap_or(false) { 1.0 } else { 0.0 };
        for (i, id) in l.lines.iter().enumerate() {
            values[l.f[i].0] = sol.f.get(id).copied().unwrap_or(0.0);
            if l.has_switching() {
                values[l.x[i].0] = flag(sol.x.get(id));
                values[l.y[i].0] = flag(sol.y.get(id));
                values[l.z[i].0] = flag(sol.z.get(id));
            }
        }
        for (i, id) in l.buses.iter().enumerate() {
            values[l.theta[i].0] = sol.theta.get(id).copied().unwrap_or(0.0);
            if l.has_switching() {
                values[l.u[i].0] = sol.u.get(id).copied().unwrap_or(1.0);
            }
        }
        for (i, id) in l.generators.iter().enumerate() {
            values[l.p[i].0] = sol.p.get(id).copied().unwrap_or(0.0);
        }
        values
    }
}

/// Decoded switching decision with its dispatch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchingSolution {
    pub x: BTreeMap<LineId, bool>,
    /// Line flows in MW, positive from `from_bus` to `to_bus`.
    pub f: BTreeMap<LineId, f64>,
    /// Bus angles in radians.
    pub theta: BTreeMap<BusId, f64>,
    pub p: BTreeMap<GeneratorId, f64>,
    pub objective_cost: f64,
    pub u: BTreeMap<BusId, f64>,
    pub y: BTreeMap<LineId, bool>,
    pub z: BTreeMap<LineId, bool>,
}

impl SwitchingSolution {
    pub fn closed_lines(&self) -> BTreeSet<LineId> {
        self.x.iter().filter(|(_, &on)| on).map(|(&l, _)| l).collect()
    }

    pub fn open_lines(&self) -> BTreeSet<LineId> {
        self.x.iter().filter(|(_, &on)| !on).map(|(&l, _)| l).collect()
    }

    /// Switching vector as 0/1 in line order, used to compare topologies.
    pub fn topology_key(&self) -> Vec<bool> {
        self.x.values().copied().collect()
    }
}

/// Arc orientation and ordering values that satisfy the connectivity
/// constraints for a connected set of closed lines.
///
/// Lines are oriented towards the reference bus along a breadth-first tree,
/// other closed lines from the later-visited end to the earlier one. Returns
/// `(y, z, u)`.
pub fn mtz_orientation(
    network: &PowerNetwork,
    closed: &BTreeSet<LineId>,
) -> Result<(BTreeMap<LineId, bool>, BTreeMap<LineId, bool>, BTreeMap<BusId, f64>)> {
    let n = network.bus_count();
    let root = network.reference_bus();
    let mut adj: BTreeMap<BusId, Vec<(LineId, BusId)>> = BTreeMap::new();
    for line in network.lines().iter().filter(|l| closed.contains(&l.id)) {
        adj.entry(line.from_bus).or_default().push((line.id, line.to_bus));
        adj.entry(line.to_bus).or_default().push((line.id, line.from_bus));
    }
    let mut order: BTreeMap<BusId, usize> = BTreeMap::from([(root, 0)]);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &(_, w) in adj.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
            if !order.contains_key(&w) {
                order.insert(w, order.len());
                queue.push_back(w);
            }
        }
    }
    if order.len() != n {
        return Err(OtsError::Disconnected);
    }
    let u: BTreeMap<BusId, f64> = order
        .iter()
        .map(|(&b, &k)| (b, if b == root { 1.0 } else { (n - k) as f64 }))
        .collect();
    let mut y = BTreeMap::new();
    let mut z = BTreeMap::new();
    for line in network.lines() {
        let on = closed.contains(&line.id);
        // Forward arc when the far end comes earlier in the search.
        let forward = on && order[&line.to_bus] < order[&line.from_bus];
        y.insert(line.id, forward);
        z.insert(line.id, on && !forward);
    }
    Ok((y, z, u))
}

fn add_common(
    m: &mut MilpModel,
    network: &PowerNetwork,
    scenario: &DemandScenario,
    switching: bool,
) -> Result<OtsLayout> {
    let n = network.bus_count() as f64;
    let mut layout = OtsLayout {
        lines: network.line_ids().collect(),
        buses: network.buses().iter().map(|b| b.id).collect(),
        generators: network.generators().iter().map(|g| g.id).collect(),
        x: Vec::new(),
        y: Vec::new(),
        z: Vec::new(),
        u: Vec::new(),
        f: Vec::new(),
        theta: Vec::new(),
        p: Vec::new(),
        fixed_topology: None,
    };
    for g in network.generators() {
        layout.p.push(m.continuous(format!("p_{}", g.id), g.p_min, g.p_max)?);
    }
    for b in network.buses() {
        layout.theta.push(m.continuous(format!("th_{}", b.id), f64::NEG_INFINITY, f64::INFINITY)?);
    }
    for l in network.lines() {
        layout.f.push(m.continuous(format!("f_{}", l.id), -l.capacity, l.capacity)?);
    }
    if switching {
        for l in network.lines() {
            layout.x.push(m.binary(format!("x_{}", l.id))?);
        }
        for l in network.lines() {
            layout.y.push(m.binary(format!("y_{}", l.id))?);
            layout.z.push(m.binary(format!("z_{}", l.id))?);
        }
        for b in network.buses() {
            layout.u.push(m.continuous(format!("u_{}", b.id), 1.0, n)?);
        }
    }
    m.set_objective(
        network
            .generators()
            .iter()
            .zip(&layout.p)
            .map(|(g, &v)| (v, g.marginal_cost))
            .collect(),
    );

    // Nodal balance: generation minus demand equals net outflow.
    for b in network.buses() {
        let mut terms = Vec::new();
        for (g, &v) in network.generators().iter().zip(&layout.p) {
            if g.bus == b.id {
                terms.push((v, 1.0));
            }
        }
        for (l, &v) in network.lines().iter().zip(&layout.f) {
            if l.from_bus == b.id {
                terms.push((v, -1.0));
            } else if l.to_bus == b.id {
                terms.push((v, 1.0));
            }
        }
        m.add_constraint(format!("bal_{}", b.id), terms, Sense::Eq, scenario.demand_at(b.id))?;
    }
    let ref_pos = network.bus_index(network.reference_bus()).expect("reference bus");
    m.add_constraint("slack", vec![(layout.theta[ref_pos], 1.0)], Sense::Eq, 0.0)?;

    if switching {
        for (i, l) in network.lines().iter().enumerate() {
            let (f, x) = (layout.f[i], layout.x[i]);
            m.add_constraint(format!("cap_hi_{}", l.id), vec![(f, 1.0), (x, -l.capacity)], Sense::Le, 0.0)?;
            m.add_constraint(format!("cap_lo_{}", l.id), vec![(f, 1.0), (x, l.capacity)], Sense::Ge, 0.0)?;
        }
        let root = network.reference_bus();
        for b in network.buses().iter().filter(|b| b.id != root) {
            let mut terms = Vec::new();
            for (i, l) in network.lines().iter().enumerate() {
                if l.from_bus == b.id {
                    terms.push((layout.y[i], 1.0));
                } else if l.to_bus == b.id {
                    terms.push((layout.z[i], 1.0));
                }
            }
            m.add_constraint(format!("arc_{}", b.id), terms, Sense::Ge, 1.0)?;
        }
        let ref_lines = network.reference_lines();
        for (i, l) in network.lines().iter().enumerate() {
            if ref_lines.contains(&l.id) {
                continue;
            }
            let un = layout.u[network.bus_index(l.from_bus).expect("bus")];
            let um = layout.u[network.bus_index(l.to_bus).expect("bus")];
            m.add_constraint(
                format!("ord_y_{}", l.id),
                vec![(un, 1.0), (um, -1.0), (layout.y[i], n)],
                Sense::Le,
                n - 1.0,
            )?;
            m.add_constraint(
                format!("ord_z_{}", l.id),
                vec![(um, 1.0), (un, -1.0), (layout.z[i], n)],
                Sense::Le,
                n - 1.0,
            )?;
        }
        for (i, l) in network.lines().iter().enumerate() {
            m.add_constraint(
                format!("dir_{}", l.id),
                vec![(layout.y[i], 1.0), (layout.z[i], 1.0), (layout.x[i], -1.0)],
                Sense::Eq,
                0.0,
            )?;
        }
        m.add_constraint("uref", vec![(layout.u[ref_pos], 1.0)], Sense::Eq, 1.0)?;
    }
    Ok(layout)
}

/// Big-M linearised flow definition for one line:
/// `|f - B (th_n - th_m)| <= M (1 - x)`.
fn add_flow_pair(m: &mut MilpModel, network: &PowerNetwork, layout: &OtsLayout, i: usize, big_m: f64) -> Result<()> {
    let l = &network.lines()[i];
    let coef = network.flow_coefficient(l);
    let tn = layout.theta[network.bus_index(l.from_bus).expect("bus")];
    let tm = layout.theta[network.bus_index(l.to_bus).expect("bus")];
    let (f, x) = (layout.f[i], layout.x[i]);
    m.add_constraint(
        format!("flow_hi_{}", l.id),
        vec![(f, 1.0), (tn, -coef), (tm, coef), (x, big_m)],
        Sense::Le,
        big_m,
    )?;
    m.add_constraint(
        format!("flow_lo_{}", l.id),
        vec![(f, 1.0), (tn, -coef), (tm, coef), (x, -big_m)],
        Sense::Ge,
        -big_m,
    )?;
    Ok(())
}

/// Full switching MILP with the given per-line big-M values (MW).
pub fn build_ots_model(network: &PowerNetwork, scenario: &DemandScenario, bigms: &BigMSet) -> Result<OtsModel> {
    for id in network.line_ids() {
        if bigms.value(id).is_none() {
            return Err(OtsError::MissingBigM(id));
        }
    }
    let mut m = MilpModel::new(format!("ots_s{}", scenario.scenario_id), ObjectiveSense::Minimize);
    let layout = add_common(&mut m, network, scenario, true)?;
    for (i, l) in network.lines().iter().enumerate() {
        add_flow_pair(&mut m, network, &layout, i, bigms.value(l.id).expect("checked"))?;
    }
    Ok(OtsModel {
        model: m,
        layout,
    })
}

/// Switching model restricted around a pool of known solutions.
///
/// Each line uses the largest big-M over `pool_bigms` (falling back to
/// `outer_bigms` when a pool set lacks the line), and lines closed in every
/// pool member are fixed closed. The best pool member is the warm start.
pub fn build_restricted_model(
    network: &PowerNetwork,
    scenario: &DemandScenario,
    pool: &[SwitchingSolution],
    pool_bigms: &[BigMSet],
    outer_bigms: &BigMSet,
) -> Result<OtsModel> {
    if pool.is_empty() {
        return Err(OtsError::Model("restricted model needs a nonempty pool".into()));
    }
    if pool_bigms.len() != pool.len() {
        return Err(OtsError::Model(format!(
            "{} big-M sets for a pool of {}",
            pool_bigms.len(),
            pool.len()
        )));
    }
    let mut m = MilpModel::new(format!("restricted_s{}", scenario.scenario_id), ObjectiveSense::Minimize);
    let layout = add_common(&mut m, network, scenario, true)?;
    let k = pool.len();
    for (i, l) in network.lines().iter().enumerate() {
        let mut big_m = f64::NEG_INFINITY;
        for set in pool_bigms {
            let v = set
                .value(l.id)
                .or_else(|| outer_bigms.value(l.id))
                .ok_or(OtsError::MissingBigM(l.id))?;
            big_m = big_m.max(v);
        }
        add_flow_pair(&mut m, network, &layout, i, big_m)?;
        let closed_in = pool.iter().filter(|s| s.x.get(&l.id).copied().unwrap_or(false)).count();
        let lower = (closed_in / k) as f64;
        m.set_bounds(layout.x[i], lower, 1.0);
    }
    let best = pool
        .iter()
        .min_by(|a, b| a.objective_cost.total_cmp(&b.objective_cost))
        .expect("nonempty pool");
    let mut out = OtsModel { model: m, layout };
    let start = out.values_of(best);
    out.model.set_warm_start(start)?;
    Ok(out)
}

/// Continuous dispatch model on a fixed topology: closed lines obey the DC
/// flow law exactly, open lines carry nothing.
pub fn build_dispatch_model(
    network: &PowerNetwork,
    scenario: &DemandScenario,
    closed_lines: &BTreeSet<LineId>,
) -> Result<OtsModel> {
    if !network.is_connected_by(closed_lines) {
        return Err(OtsError::Disconnected);
    }
    let mut m = MilpModel::new(format!("dispatch_s{}", scenario.scenario_id), ObjectiveSense::Minimize);
    let mut layout = add_common(&mut m, network, scenario, false)?;
    for (i, l) in network.lines().iter().enumerate() {
        let f = layout.f[i];
        if closed_lines.contains(&l.id) {
            let coef = network.flow_coefficient(l);
            let tn = layout.theta[network.bus_index(l.from_bus).expect("bus")];
            let tm = layout.theta[network.bus_index(l.to_bus).expect("bus")];
            m.add_constraint(
                format!("flow_{}", l.id),
                vec![(f, 1.0), (tn, -coef), (tm, coef)],
                Sense::Eq,
                0.0,
            )?;
        } else {
            m.set_bounds(f, 0.0, 0.0);
        }
    }
    layout.fixed_topology = Some(closed_lines.clone());
    Ok(OtsModel {
        model: m,
        layout,
    })
}

/// Decodes raw column values into a switching solution and verifies it.
///
/// Binaries are rounded at 0.5; flow limits, the flow law on closed lines,
/// zero flow on open lines and connectivity are checked at
/// [`SOLUTION_TOLERANCE`].
pub fn extract_switching_solution(ots: &OtsModel, values: &[f64], network: &PowerNetwork) -> Result<SwitchingSolution> {
    let m = &ots.model;
    let l = &ots.layout;
    if values.len() != m.num_vars() {
        return Err(OtsError::Model(format!(
            "{} values for {} variables",
            values.len(),
            m.num_vars()
        )));
    }
    let round = |v: VarId| values[v.0] >= 0.5;
    let mut sol = SwitchingSolution {
        x: BTreeMap::new(),
        f: BTreeMap::new(),
        theta: BTreeMap::new(),
        p: BTreeMap::new(),
        objective_cost: m.objective_value(values),
        u: BTreeMap::new(),
        y: BTreeMap::new(),
        z: BTreeMap::new(),
    };
    for (i, &id) in l.lines.iter().enumerate() {
        let on = match (&l.fixed_topology, l.has_switching()) {
            (_, true) => round(l.x[i]),
            (Some(closed), false) => closed.contains(&id),
            (None, false) => true,
        };
        sol.x.insert(id, on);
        sol.f.insert(id, values[l.f[i].0]);
        if l.has_switching() {
            sol.y.insert(id, round(l.y[i]));
            sol.z.insert(id, round(l.z[i]));
        }
    }
    for (i, &id) in l.buses.iter().enumerate() {
        sol.theta.insert(id, values[l.theta[i].0]);
        if l.has_switching() {
            sol.u.insert(id, values[l.u[i].0]);
        }
    }
    for (i, &id) in l.generators.iter().enumerate() {
        sol.p.insert(id, values[l.p[i].0]);
    }
    if !l.has_switching() {
        let (y, z, u) = mtz_orientation(network, &sol.closed_lines())?;
        sol.y = y;
        sol.z = z;
        sol.u = u;
    }
    verify_solution(&sol, network)?;
    Ok(sol)
}

/// Checks flow limits, the flow law, generator limits and connectivity.
pub fn verify_solution(sol: &SwitchingSolution, network: &PowerNetwork) -> Result<()> {
    let eps = SOLUTION_TOLERANCE;
    let violation = |what: String, magnitude: f64| Err(OtsError::Violation { what, magnitude });
    for line in network.lines() {
        let on = sol.x.get(&line.id).copied().unwrap_or(false);
        let f = sol.f.get(&line.id).copied().unwrap_or(0.0);
        let limit = if on { line.capacity } else { 0.0 };
        if f.abs() > limit + eps {
            return violation(format!("flow limit of line {}", line.id), f.abs() - limit);
        }
        if on {
            let dth = sol.theta[&line.from_bus] - sol.theta[&line.to_bus];
            let gap = (f - network.flow_coefficient(line) * dth).abs();
            if gap > eps {
                return violation(format!("flow law of line {}", line.id), gap);
            }
        }
    }
    for g in network.generators() {
        let p = sol.p.get(&g.id).copied().unwrap_or(0.0);
        let excess = (g.p_min - p).max(p - g.p_max);
        if excess > eps {
            return violation(format!("limits of generator {}", g.id), excess);
        }
    }
    if !network.is_connected_by(&sol.closed_lines()) {
        return violation("connectivity of the closed lines".into(), 1.0);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigm::{compute_bn, BigMSet, Strategy};
    use crate::model::VarKind;
    use crate::network::fixtures::*;

    fn all_closed(net: &PowerNetwork) -> BTreeSet<LineId> {
        net.line_ids().collect()
    }

    #[test]
    fn variable_counts_follow_network_size() {
        let net = five_bus();
        let s = DemandScenario::baseline(&net);
        let m = build_ots_model(&net, &s, &compute_bn(&net)).unwrap();
        let (nl, nb, ng) = (net.line_count(), net.bus_count(), net.generators().len());
        assert_eq!(m.model.num_binaries(), 3 * nl);
        assert_eq!(m.model.num_vars(), 3 * nl + nl + 2 * nb + ng);
        let ord = m.model.constraints().iter().filter(|c| c.name.starts_with("ord_")).count();
        assert_eq!(ord, 2 * (nl - net.reference_lines().len()));
        assert_eq!(m.model.constraints().iter().filter(|c| c.name.starts_with("arc_")).count(), nb - 1);
    }

    #[test]
    fn missing_big_m_is_reported() {
        let net = triangle();
        let partial = BigMSet::from_values(Strategy::BN, [(1, 1.0), (2, 1.0)]).unwrap();
        let err = build_ots_model(&net, &DemandScenario::baseline(&net), &partial).unwrap_err();
        assert!(matches!(err, OtsError::MissingBigM(3)));
    }

    #[test]
    fn zero_big_m_pins_the_flow_law() {
        let net = triangle();
        let zero = BigMSet::from_values(Strategy::SR, net.line_ids().map(|l| (l, 0.0))).unwrap();
        let m = build_ots_model(&net, &DemandScenario::baseline(&net), &zero).unwrap();
        for l in net.lines() {
            let hi = m.model.constraint(&format!("flow_hi_{}", l.id)).unwrap();
            let lo = m.model.constraint(&format!("flow_lo_{}", l.id)).unwrap();
            assert_eq!(hi.rhs, 0.0);
            assert_eq!(lo.rhs, 0.0);
            let x = m.model.var(&format!("x_{}", l.id)).unwrap();
            assert!(hi.terms.iter().all(|&(v, _)| v != x));
        }
    }

    #[test]
    fn orientation_satisfies_connectivity_rows() {
        let net = five_bus();
        let s = DemandScenario::baseline(&net);
        let m = build_ots_model(&net, &s, &compute_bn(&net)).unwrap();
        for closed in [all_closed(&net), BTreeSet::from([1, 2, 4, 5, 7]), BTreeSet::from([1, 3, 6, 7])] {
            let (y, z, u) = mtz_orientation(&net, &closed).unwrap();
            let sol = SwitchingSolution {
                x: net.line_ids().map(|l| (l, closed.contains(&l))).collect(),
                f: BTreeMap::new(),
                theta: BTreeMap::new(),
                p: BTreeMap::new(),
                objective_cost: 0.0,
                u,
                y,
                z,
            };
            let values = m.values_of(&sol);
            let bad: Vec<_> = m
                .model
                .violations(&values, 1e-9)
                .into_iter()
                .filter(|v| ["arc_", "ord_", "dir_", "uref"].iter().any(|p| v.what.contains(p)))
                .collect();
            assert!(bad.is_empty(), "{closed:?}: {bad:?}");
        }
        assert!(mtz_orientation(&net, &BTreeSet::from([1, 2, 3])).is_err());
    }

    #[test]
    fn restricted_model_fixes_lines_closed_everywhere() {
        let net = five_bus();
        let s = DemandScenario::baseline(&net);
        let bn = compute_bn(&net);
        let mk = |closed: BTreeSet<LineId>, cost: f64| {
            let (y, z, u) = mtz_orientation(&net, &closed).unwrap();
            SwitchingSolution {
                x: net.line_ids().map(|l| (l, closed.contains(&l))).collect(),
                f: BTreeMap::new(),
                theta: BTreeMap::new(),
                p: BTreeMap::new(),
                objective_cost: cost,
                u,
                y,
                z,
            }
        };
        let pool = vec![mk(BTreeSet::from([1, 2, 3, 4, 7]), 5.0), mk(BTreeSet::from([1, 3, 4, 5, 7]), 4.0)];
        let sets = vec![bn.clone(), bn.clone()];
        let m = build_restricted_model(&net, &s, &pool, &sets, &bn).unwrap();
        let lower = |l: LineId| m.model.variables()[m.model.var(&format!("x_{l}")).unwrap().0].lower;
        assert_eq!(lower(1), 1.0);
        assert_eq!(lower(3), 1.0);
        assert_eq!(lower(2), 0.0);
        assert_eq!(lower(5), 0.0);
        assert_eq!(lower(6), 0.0);
        let ws = m.model.warm_start().unwrap();
        assert_eq!(ws[m.model.var("x_5").unwrap().0], 1.0);
        assert!(m.model.variables().iter().filter(|v| v.kind == VarKind::Binary).all(|v| v.upper == 1.0));
        assert!(build_restricted_model(&net, &s, &[], &[], &bn).is_err());
    }

    #[test]
    fn floor_rule_needs_every_pool_member() {
        let net = triangle();
        let s = DemandScenario::baseline(&net);
        let bn = compute_bn(&net);
        let mut pool = Vec::new();
        for k in 0..10 {
            let closed: BTreeSet<LineId> = if k == 0 { BTreeSet::from([1, 2]) } else { all_closed(&net) };
            let (y, z, u) = mtz_orientation(&net, &closed).unwrap();
            pool.push(SwitchingSolution {
                x: net.line_ids().map(|l| (l, closed.contains(&l))).collect(),
                f: BTreeMap::new(),
                theta: BTreeMap::new(),
                p: BTreeMap::new(),
                objective_cost: k as f64,
                u,
                y,
                z,
            });
        }
        let sets = vec![bn.clone(); 10];
        let m = build_restricted_model(&net, &s, &pool, &sets, &bn).unwrap();
        let x3 = m.model.var("x_3").unwrap();
        assert_eq!(m.model.variables()[x3.0].lower, 0.0);
        let x1 = m.model.var("x_1").unwrap();
        assert_eq!(m.model.variables()[x1.0].lower, 1.0);
    }

    #[test]
    fn dispatch_rejects_disconnected_topology() {
        let net = triangle_with_tail();
        let s = DemandScenario::baseline(&net);
        assert!(matches!(
            build_dispatch_model(&net, &s, &BTreeSet::from([1, 2, 3])),
            Err(OtsError::Disconnected)
        ));
        let m = build_dispatch_model(&net, &s, &BTreeSet::from([1, 2, 4])).unwrap();
        assert!(!m.model.is_mip());
        let f3 = m.model.var("f_3").unwrap();
        assert_eq!((m.model.variables()[f3.0].lower, m.model.variables()[f3.0].upper), (0.0, 0.0));
    }

    fn triangle_point(x1: f64) -> (OtsModel, Vec<f64>) {
        let net = triangle();
        let m = build_ots_model(&net, &DemandScenario::baseline(&net), &compute_bn(&net)).unwrap();
        let mut v = vec![0.0; m.model.num_vars()];
        // Lines 1 and 2 closed, line 3 open.
        let set = |v: &mut Vec<f64>, name: &str, x: f64| v[m.model.var(name).unwrap().0] = x;
        set(&mut v, "x_1", x1);
        set(&mut v, "x_2", 1.0);
        set(&mut v, "p_1", 40.0);
        set(&mut v, "p_2", 60.0);
        set(&mut v, "f_1", 40.0);
        set(&mut v, "f_2", 100.0);
        set(&mut v, "th_2", -0.04);
        set(&mut v, "th_3", -0.14);
        (m, v)
    }

    #[test]
    fn extraction_rounds_binaries() {
        let (m, v) = triangle_point(0.9999);
        let sol = extract_switching_solution(&m, &v, &triangle()).unwrap();
        assert_eq!(sol.closed_lines(), BTreeSet::from([1, 2]));
        assert_eq!(sol.objective_cost, 40.0 * 10.0 + 60.0 * 30.0);
    }

    #[test]
    fn extraction_rejects_islands_and_flow_errors() {
        let (m, v) = triangle_point(0.2);
        let err = extract_switching_solution(&m, &v, &triangle()).unwrap_err();
        assert!(matches!(err, OtsError::Violation { .. }), "{err}");
        let (m, mut v) = triangle_point(1.0);
        v[m.model.var("th_3").unwrap().0] = -0.15;
        match extract_switching_solution(&m, &v, &triangle()) {
            Err(OtsError::Violation { what, magnitude }) => {
                assert_eq!(what, "flow law of line 2");
                assert!((magnitude - 10.0).abs() < 1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
