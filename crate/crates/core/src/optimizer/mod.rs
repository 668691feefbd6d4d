//! Siting and sizing search.
//!
//! A candidate solution is a vector with one coordinate per (kind, candidate
//! bus) slot holding a capacity in kW. [`SearchSpace::repair`] maps any real
//! vector onto the discrete grid so that every kind's capacities add up to
//! its penetration total exactly; the swarm in [`pso`] only ever evaluates
//! repaired vectors.

mod objective;
pub mod pso;
mod repair;

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dg::{DgKind, DgUnit};
use crate::grid::Network;
use crate::powerflow::PowerFlowError;

pub use objective::{Evaluator, ObjectiveReport, NON_CONVERGED_FITNESS};
pub use pso::{pso_optimize, PsoOutcome, PsoSettings};
pub use repair::repair_penetration;

const GRID_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("infeasible penetration spec: {0}")]
    InfeasibleSpec(String),
    #[error("invalid allocation: {}", .0.join("; "))]
    InvalidAllocation(Vec<String>),
    #[error("invalid settings: {0}")]
    Settings(String),
    #[error(transparent)]
    PowerFlow(#[from] PowerFlowError),
}

/// Installed capacity required per kind, kW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PenetrationSpec {
    pub wind_kw: f64,
    pub solar_kw: f64,
    pub biomass_kw: f64,
}

impl Default for PenetrationSpec {
    fn default() -> Self {
        Self {
            wind_kw: 400.0,
            solar_kw: 200.0,
            biomass_kw: 600.0,
        }
    }
}

impl PenetrationSpec {
    /// Totals from percentages of a reference power, each rounded to `step_kw`.
    pub fn from_percentages(reference_kw: f64, wind_pct: f64, solar_pct: f64, biomass_pct: f64, step_kw: f64) -> Self {
        let q = |pct: f64| (pct / 100.0 * reference_kw / step_kw).round() * step_kw;
        Self {
            wind_kw: q(wind_pct),
            solar_kw: q(solar_pct),
            biomass_kw: q(biomass_pct),
        }
    }

    pub fn total(&self, kind: DgKind) -> f64 {
        match kind {
            DgKind::Wind => self.wind_kw,
            DgKind::Solar => self.solar_kw,
            DgKind::Biomass => self.biomass_kw,
        }
    }

    pub fn renewable_total(&self) -> f64 {
        self.wind_kw + self.solar_kw + self.biomass_kw
    }

    /// Share of each kind relative to `reference_kw`, in percent.
    pub fn percentages(&self, reference_kw: f64) -> [f64; 3] {
        DgKind::ALL.map(|k| 100.0 * self.total(k) / reference_kw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SizingRules {
    pub step_kw: f64,
    pub per_bus_max_kw: f64,
}

impl Default for SizingRules {
    fn default() -> Self {
        Self {
            step_kw: 25.0,
            per_bus_max_kw: 100.0,
        }
    }
}

/// Allowed buses per kind; `None` means every non-slack bus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CandidateBuses {
    pub wind: Option<Vec<u32>>,
    pub solar: Option<Vec<u32>>,
    pub biomass: Option<Vec<u32>>,
}

impl CandidateBuses {
    pub fn get(&self, kind: DgKind) -> Option<&Vec<u32>> {
        match kind {
            DgKind::Wind => self.wind.as_ref(),
            DgKind::Solar => self.solar.as_ref(),
            DgKind::Biomass => self.biomass.as_ref(),
        }
    }
}

/// One coordinate of the search vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub kind: DgKind,
    pub bus: u32,
    pub bus_index: usize,
}

/// A set of DG units. Kept sorted by (kind, bus).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation {
    pub units: Vec<DgUnit>,
}

impl Allocation {
    pub fn new(mut units: Vec<DgUnit>) -> Self {
        units.sort_by(|a, b| a.kind.cmp(&b.kind).then(a.bus.cmp(&b.bus)));
        Self { units }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn kind_total(&self, kind: DgKind) -> f64 {
        self.units.iter().filter(|u| u.kind == kind).fold(0.0, |acc, u| acc + u.capacity_kw)
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

/// The JSON allocation block: `{"allocation": [{"kind", "bus", "kw"}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationFile {
    pub allocation: Allocation,
}

/// Slot layout, sizing grid and per-kind targets for one problem instance.
#[derive(Debug, Clone)]
pub struct SearchSpace {
    spec: PenetrationSpec,
    sizing: SizingRules,
    slots: Vec<Slot>,
    ranges: [Range<usize>; 3],
}

impl SearchSpace {
    pub fn new(
        network: &Network,
        spec: PenetrationSpec,
        sizing: SizingRules,
        candidates: &CandidateBuses,
    ) -> Result<Self, OptimizeError> {
        let infeasible = |msg: String| Err(OptimizeError::InfeasibleSpec(msg));
        let step = sizing.step_kw;
        if !(step > 0.0 && step.is_finite()) {
            return infeasible(format!("sizing step {step} kW must be positive"));
        }
        if !on_grid(sizing.per_bus_max_kw, step) || sizing.per_bus_max_kw < step {
            return infeasible(format!(
                "per-bus maximum {} kW must be a positive multiple of the {step} kW step",
                sizing.per_bus_max_kw
            ));
        }

        let mut slots = Vec::new();
        let mut ranges: [Range<usize>; 3] = [0..0, 0..0, 0..0];
        for (k, kind) in DgKind::ALL.into_iter().enumerate() {
            let buses: BTreeSet<u32> = match candidates.get(kind) {
                Some(list) => list.iter().copied().collect(),
                None => network.load_bus_ids().into_iter().collect(),
            };
            let start = slots.len();
            for bus in buses {
                let Some(bus_index) = network.index_of(bus) else {
                    return infeasible(format!("{kind} candidate bus {bus} is not in the network"));
                };
                if bus_index == network.slack_index() {
                    return infeasible(format!("{kind} candidate bus {bus} is the slack bus"));
                }
                slots.push(Slot { kind, bus, bus_index });
            }
            ranges[k] = start..slots.len();

            let total = spec.total(kind);
            let capacity = ranges[k].len() as f64 * sizing.per_bus_max_kw;
            if !(total >= 0.0 && total.is_finite()) {
                return infeasible(format!("{kind} total {total} kW must be non-negative"));
            }
            if !on_grid(total, step) {
                return infeasible(format!("{kind} total {total} kW is not a multiple of the {step} kW step"));
            }
            if total > capacity + GRID_EPS {
                return infeasible(format!(
                    "{kind} total {total} kW exceeds {} candidate buses x {} kW",
                    ranges[k].len(),
                    sizing.per_bus_max_kw
                ));
            }
        }
        Ok(Self {
            spec,
            sizing,
            slots,
            ranges,
        })
    }

    pub fn dimension(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn spec(&self) -> &PenetrationSpec {
        &self.spec
    }

    pub fn sizing(&self) -> &SizingRules {
        &self.sizing
    }

    pub fn kind_range(&self, kind: DgKind) -> Range<usize> {
        self.ranges[kind_slot(kind)].clone()
    }

    pub fn max_steps(&self) -> i64 {
        (self.sizing.per_bus_max_kw / self.sizing.step_kw).round() as i64
    }

    pub fn target_steps(&self, kind: DgKind) -> i64 {
        (self.spec.total(kind) / self.sizing.step_kw).round() as i64
    }

    /// Allocation for an on-grid vector. Zero coordinates produce no unit.
    pub fn decode(&self, grid: &[f64]) -> Allocation {
        Allocation::new(
            self.slots
                .iter()
                .zip(grid)
                .filter(|(_, &kw)| kw > 0.0)
                .map(|(slot, &kw)| DgUnit {
                    kind: slot.kind,
                    bus: slot.bus,
                    capacity_kw: kw,
                })
                .collect(),
        )
    }

    /// Lists every way `allocation` breaks the sizing, candidate or
    /// penetration rules. Empty means valid.
    pub fn violations(&self, allocation: &Allocation) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for unit in &allocation.units {
            let (kind, bus, kw) = (unit.kind, unit.bus, unit.capacity_kw);
            if !self.slots[self.kind_range(kind)].iter().any(|s| s.bus == bus) {
                out.push(format!("{kind} unit at bus {bus}: not a candidate bus"));
            }
            if !seen.insert((kind, bus)) {
                out.push(format!("{kind} unit at bus {bus}: duplicate"));
            }
            if !(kw > 0.0) || !on_grid(kw, self.sizing.step_kw) {
                out.push(format!(
                    "{kind} unit at bus {bus}: {kw} kW is not a positive multiple of {} kW",
                    self.sizing.step_kw
                ));
            } else if kw > self.sizing.per_bus_max_kw + GRID_EPS {
                out.push(format!(
                    "{kind} unit at bus {bus}: {kw} kW exceeds the {} kW per-bus maximum",
                    self.sizing.per_bus_max_kw
                ));
            }
        }
        for kind in DgKind::ALL {
            let (got, want) = (allocation.kind_total(kind), self.spec.total(kind));
            if (got - want).abs() > GRID_EPS * want.max(1.0) {
                out.push(format!("{kind} capacity totals {got} kW, required {want} kW"));
            }
        }
        out
    }

    pub fn validate(&self, allocation: &Allocation) -> Result<(), OptimizeError> {
        let v = self.violations(allocation);
        if v.is_empty() {
            Ok(())
        } else {
            Err(OptimizeError::InvalidAllocation(v))
        }
    }
}

fn kind_slot(kind: DgKind) -> usize {
    match kind {
        DgKind::Wind => 0,
        DgKind::Solar => 1,
        DgKind::Biomass => 2,
    }
}

fn on_grid(kw: f64, step: f64) -> bool {
    let q = kw / step;
    kw.is_finite() && (q - q.round()).abs() < GRID_EPS
}
