//! Physical network model: buses, generators, switchable lines and demand.

mod case;
mod scenario;

pub use case::{parse_case, write_case};
pub use scenario::{read_scenarios_csv, sample_scenarios, write_scenarios_csv, DemandScenario};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graph::{spans, Edge, WeightedMultigraph};
use crate::{OtsError, Result};

pub type BusId = usize;
pub type LineId = usize;
pub type GeneratorId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    /// Baseline demand in MW.
    pub baseline_demand: f64,
    pub is_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: GeneratorId,
    pub bus: BusId,
    pub p_min: f64,
    pub p_max: f64,
    /// Linear cost per MWh.
    pub marginal_cost: f64,
}

/// A switchable transmission line.
///
/// The reactance is kept next to the susceptance so that a network written
/// back to a case file re-parses to bit-identical values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: LineId,
    pub from_bus: BusId,
    pub to_bus: BusId,
    susceptance: f64,
    reactance: f64,
    /// Thermal rating in MW.
    pub capacity: f64,
}

impl Line {
    /// Builds a line from its per-unit susceptance.
    pub fn new(id: LineId, from_bus: BusId, to_bus: BusId, susceptance: f64, capacity: f64) -> Self {
        Line {
            id,
            from_bus,
            to_bus,
            susceptance,
            reactance: 1.0 / susceptance,
            capacity,
        }
    }

    /// Builds a line from its per-unit series reactance (`b = 1/x`).
    pub fn from_reactance(id: LineId, from_bus: BusId, to_bus: BusId, reactance: f64, capacity: f64) -> Self {
        Line {
            id,
            from_bus,
            to_bus,
            susceptance: 1.0 / reactance,
            reactance,
            capacity,
        }
    }

    /// Per-unit susceptance on the system base.
    pub fn susceptance(&self) -> f64 {
        self.susceptance
    }

    pub fn reactance(&self) -> f64 {
        self.reactance
    }

    pub fn endpoints(&self) -> (BusId, BusId) {
        (self.from_bus, self.to_bus)
    }
}

/// A validated, immutable power network.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerNetwork {
    buses: Vec<Bus>,
    generators: Vec<Generator>,
    lines: Vec<Line>,
    base_mva: f64,
    bus_pos: BTreeMap<BusId, usize>,
    line_pos: BTreeMap<LineId, usize>,
}

impl PowerNetwork {
    /// Validates and assembles a network.
    ///
    /// Buses are stored sorted by id, lines and generators keep their given
    /// order. When no bus is flagged as reference the lowest id is used.
    pub fn new(mut buses: Vec<Bus>, generators: Vec<Generator>, lines: Vec<Line>, base_mva: f64) -> Result<Self> {
        if !(base_mva > 0.0 && base_mva.is_finite()) {
            return Err(OtsError::invalid("network", format!("base MVA must be positive, got {base_mva}")));
        }
        if buses.len() < 2 {
            return Err(OtsError::invalid("network", "at least two buses are required"));
        }
        buses.sort_by_key(|b| b.id);
        let mut bus_pos = BTreeMap::new();
        for (pos, bus) in buses.iter().enumerate() {
            if bus_pos.insert(bus.id, pos).is_some() {
                return Err(OtsError::invalid(format!("bus {}", bus.id), "duplicate bus id"));
            }
            if !(bus.baseline_demand >= 0.0 && bus.baseline_demand.is_finite()) {
                return Err(OtsError::invalid(
                    format!("bus {}", bus.id),
                    format!("demand must be nonnegative, got {}", bus.baseline_demand),
                ));
            }
        }
        match buses.iter().filter(|b| b.is_reference).count() {
            0 => buses[0].is_reference = true,
            1 => {}
            n => return Err(OtsError::invalid("network", format!("{n} reference buses, expected one"))),
        }
        for g in &generators {
            if !bus_pos.contains_key(&g.bus) {
                return Err(OtsError::invalid(
                    format!("generator {}", g.id),
                    format!("references unknown bus {}", g.bus),
                ));
            }
            if !(0.0 <= g.p_min && g.p_min <= g.p_max && g.p_max.is_finite()) {
                return Err(OtsError::invalid(
                    format!("generator {}", g.id),
                    format!("limits must satisfy 0 <= p_min <= p_max, got [{}, {}]", g.p_min, g.p_max),
                ));
            }
            if !(g.marginal_cost >= 0.0 && g.marginal_cost.is_finite()) {
                return Err(OtsError::invalid(
                    format!("generator {}", g.id),
                    format!("marginal cost must be nonnegative, got {}", g.marginal_cost),
                ));
            }
        }
        let mut line_pos = BTreeMap::new();
        for (pos, line) in lines.iter().enumerate() {
            let name = format!("line {}", line.id);
            if line_pos.insert(line.id, pos).is_some() {
                return Err(OtsError::invalid(name, "duplicate line id"));
            }
            for bus in [line.from_bus, line.to_bus] {
                if !bus_pos.contains_key(&bus) {
                    return Err(OtsError::invalid(name, format!("references unknown bus {bus}")));
                }
            }
            if line.from_bus == line.to_bus {
                return Err(OtsError::invalid(name, "both ends on the same bus"));
            }
            if !(line.susceptance > 0.0 && line.susceptance.is_finite()) {
                return Err(OtsError::invalid(
                    name,
                    format!("susceptance must be positive, got {}", line.susceptance),
                ));
            }
            if !(line.capacity > 0.0 && line.capacity.is_finite()) {
                return Err(OtsError::invalid(name, format!("capacity must be positive, got {}", line.capacity)));
            }
        }
        let network = PowerNetwork {
            buses,
            generators,
            lines,
            base_mva,
            bus_pos,
            line_pos,
        };
        if !network.to_multigraph().is_connected() {
            return Err(OtsError::invalid("network", "line graph is disconnected"));
        }
        Ok(network)
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn base_mva(&self) -> f64 {
        self.base_mva
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    pub fn reference_bus(&self) -> BusId {
        self.buses
            .iter()
            .find(|b| b.is_reference)
            .map(|b| b.id)
            .expect("validated network has a reference bus")
    }

    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        self.bus_pos.get(&id).map(|&p| &self.buses[p])
    }

    /// Position of a bus in [`PowerNetwork::buses`].
    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.bus_pos.get(&id).copied()
    }

    pub fn line(&self, id: LineId) -> Option<&Line> {
        self.line_pos.get(&id).map(|&p| &self.lines[p])
    }

    /// Position of a line in [`PowerNetwork::lines`].
    pub fn line_index(&self, id: LineId) -> Option<usize> {
        self.line_pos.get(&id).copied()
    }

    pub fn line_ids(&self) -> impl Iterator<Item = LineId> + '_ {
        self.lines.iter().map(|l| l.id)
    }

    /// Flow per radian of angle difference, `base_mva * b`, in MW/rad.
    pub fn flow_coefficient(&self, line: &Line) -> f64 {
        self.base_mva * line.susceptance
    }

    pub fn total_demand(&self) -> f64 {
        self.buses.iter().map(|b| b.baseline_demand).sum()
    }

    /// Lines incident to the reference bus.
    pub fn reference_lines(&self) -> BTreeSet<LineId> {
        let r = self.reference_bus();
        self.lines
            .iter()
            .filter(|l| l.from_bus == r || l.to_bus == r)
            .map(|l| l.id)
            .collect()
    }

    /// Network with unit susceptance and base on the topology of `g`: each
    /// edge becomes a line rated at its weight. No generators, no demand.
    pub fn from_topology(g: &WeightedMultigraph) -> Result<Self> {
        let buses = g
            .vertices()
            .iter()
            .map(|&id| Bus {
                id,
                baseline_demand: 0.0,
                is_reference: false,
            })
            .collect();
        let lines = g.edges().iter().map(|e| Line::new(e.id, e.u, e.v, 1.0, e.weight)).collect();
        PowerNetwork::new(buses, Vec::new(), lines, 1.0)
    }

    /// True when the lines in `closed` connect every bus.
    pub fn is_connected_by(&self, closed: &BTreeSet<LineId>) -> bool {
        let vertices: BTreeSet<BusId> = self.buses.iter().map(|b| b.id).collect();
        let edges: Vec<Edge> = self
            .lines
            .iter()
            .filter(|l| closed.contains(&l.id))
            .map(|l| Edge::new(l.id, l.from_bus, l.to_bus, 0.0))
            .collect();
        spans(&vertices, &edges)
    }

    /// Topology view with one edge per line, weighted by `F / (base * b)`,
    /// the largest angle difference (rad) the line can sustain.
    pub fn to_multigraph(&self) -> WeightedMultigraph {
        let edges = self
            .lines
            .iter()
            .map(|l| Edge {
                id: l.id,
                u: l.from_bus,
                v: l.to_bus,
                weight: l.capacity / self.flow_coefficient(l),
            })
            .collect();
        WeightedMultigraph::new(self.buses.iter().map(|b| b.id), edges)
            .expect("validated network maps onto a valid multigraph")
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn bus(id: BusId, demand: f64) -> Bus {
        Bus {
            id,
            baseline_demand: demand,
            is_reference: false,
        }
    }

    fn two_bus() -> PowerNetwork {
        PowerNetwork::new(
            vec![bus(1, 0.0), bus(2, 50.0)],
            vec![Generator {
                id: 1,
                bus: 1,
                p_min: 0.0,
                p_max: 100.0,
                marginal_cost: 10.0,
            }],
            vec![Line::new(1, 1, 2, 5.0, 100.0)],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn edge_weight_is_capacity_over_susceptance() {
        let g = two_bus().to_multigraph();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge(1).unwrap().weight, 20.0);
    }

    #[test]
    fn weight_uses_system_base() {
        let net = PowerNetwork::new(
            vec![bus(1, 0.0), bus(2, 0.0)],
            vec![],
            vec![Line::new(1, 1, 2, 5.0, 100.0)],
            100.0,
        )
        .unwrap();
        assert_eq!(net.to_multigraph().edge(1).unwrap().weight, 0.2);
    }

    #[test]
    fn defaults_reference_to_lowest_id() {
        let net = two_bus();
        assert_eq!(net.reference_bus(), 1);
        assert_eq!(net.reference_lines().into_iter().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn parallel_lines_stay_distinct() {
        let net = PowerNetwork::new(
            vec![bus(1, 0.0), bus(2, 0.0)],
            vec![],
            vec![Line::new(1, 1, 2, 1.0, 10.0), Line::new(2, 1, 2, 2.0, 10.0)],
            1.0,
        )
        .unwrap();
        let g = net.to_multigraph();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.edge(1).unwrap().weight, 10.0);
        assert_eq!(g.edge(2).unwrap().weight, 5.0);
    }

    #[test]
    fn rejects_invalid_elements() {
        let gens = vec![];
        let err = PowerNetwork::new(
            vec![bus(1, 0.0), bus(2, 0.0)],
            gens,
            vec![Line::new(1, 1, 999, 1.0, 10.0)],
            1.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("999"), "{err}");

        let err = PowerNetwork::new(
            vec![bus(1, 0.0), bus(2, 0.0), bus(3, 0.0)],
            vec![],
            vec![Line::new(1, 1, 2, 1.0, 10.0)],
            1.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("disconnected"), "{err}");

        let err = PowerNetwork::new(
            vec![bus(1, -1.0), bus(2, 0.0)],
            vec![],
            vec![Line::new(1, 1, 2, 1.0, 10.0)],
            1.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("bus 1"), "{err}");

        let err = PowerNetwork::new(
            vec![bus(1, 0.0), bus(2, 0.0)],
            vec![],
            vec![Line::new(7, 1, 2, 1.0, 0.0)],
            1.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("line 7"), "{err}");
    }
}
