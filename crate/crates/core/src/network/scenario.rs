use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BusId, PowerNetwork};
use crate::{OtsError, Result};

/// Relative half-width of the demand sampling interval.
pub const DEMAND_SPREAD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct DemandScenario {
    pub scenario_id: usize,
    /// Nodal demand in MW for every bus.
    pub demand: BTreeMap<BusId, f64>,
}

impl DemandScenario {
    /// The network's baseline demand as a scenario.
    pub fn baseline(network: &PowerNetwork) -> Self {
        DemandScenario {
            scenario_id: 0,
            demand: network.buses().iter().map(|b| (b.id, b.baseline_demand)).collect(),
        }
    }

    pub fn demand_at(&self, bus: BusId) -> f64 {
        self.demand.get(&bus).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.demand.values().sum()
    }
}

/// Draws `count` scenarios, each nodal demand independently uniform on
/// `[0.9 d, 1.1 d]`. The same `(network, count, seed)` always produces the
/// same scenarios.
pub fn sample_scenarios(network: &PowerNetwork, count: usize, seed: u64) -> Vec<DemandScenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new_inclusive(1.0 - DEMAND_SPREAD, 1.0 + DEMAND_SPREAD);
    (0..count)
        .map(|scenario_id| DemandScenario {
            scenario_id,
            demand: network
                .buses()
                .iter()
                .map(|b| (b.id, b.baseline_demand * unit.sample(&mut rng)))
                .collect(),
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioRecord {
    scenario_id: usize,
    bus_id: BusId,
    demand_mw: f64,
}

/// Writes scenarios as `scenario_id,bus_id,demand_mw` rows.
pub fn write_scenarios_csv<W: Write>(scenarios: &[DemandScenario], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    for s in scenarios {
        for (&bus_id, &demand_mw) in &s.demand {
            csv.serialize(ScenarioRecord {
                scenario_id: s.scenario_id,
                bus_id,
                demand_mw,
            })?;
        }
    }
    csv.flush()?;
    Ok(())
}

/// Reads scenarios written by [`write_scenarios_csv`] and checks that every
/// bus of `network` has a demand entry.
pub fn read_scenarios_csv<R: Read>(network: &PowerNetwork, reader: R) -> Result<Vec<DemandScenario>> {
    let mut csv = csv::Reader::from_reader(reader);
    let mut by_id: BTreeMap<usize, BTreeMap<BusId, f64>> = BTreeMap::new();
    for record in csv.deserialize() {
        let r: ScenarioRecord = record?;
        if network.bus(r.bus_id).is_none() {
            return Err(OtsError::invalid(
                format!("scenario {}", r.scenario_id),
                format!("unknown bus {}", r.bus_id),
            ));
        }
        if !(r.demand_mw >= 0.0) {
            return Err(OtsError::invalid(
                format!("scenario {}", r.scenario_id),
                format!("negative demand {} at bus {}", r.demand_mw, r.bus_id),
            ));
        }
        by_id.entry(r.scenario_id).or_default().insert(r.bus_id, r.demand_mw);
    }
    by_id
        .into_iter()
        .map(|(scenario_id, demand)| {
            if let Some(b) = network.buses().iter().find(|b| !demand.contains_key(&b.id)) {
                return Err(OtsError::invalid(
                    format!("scenario {scenario_id}"),
                    format!("no demand for bus {}", b.id),
                ));
            }
            Ok(DemandScenario { scenario_id, demand })
        })
        .collect()
}
