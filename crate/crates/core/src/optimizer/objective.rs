use serde::{Deserialize, Serialize};

use super::{Allocation, OptimizeError};
use crate::dg::{DgKind, DgModels};
use crate::grid::{Network, VoltageLimits};
use crate::powerflow::{solve, InjectionSet, PowerFlowResult, SweepSettings};
use crate::stochastic::{State, StateSet};

/// Fitness assigned when any state fails to converge or collapses.
pub const NON_CONVERGED_FITNESS: f64 = 1e12;

/// Expected loss and voltage screen of one allocation over a state set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveReport {
    /// Probability-weighted loss over converged states, kW.
    pub expected_loss_kw: f64,
    /// `None` for states that did not converge.
    pub per_state_loss_kw: Vec<Option<f64>>,
    /// Lowest bus voltage seen in any state, pu.
    pub worst_voltage_pu: f64,
    pub worst_voltage_bus: u32,
    pub max_voltage_pu: f64,
    /// Weighted sum over states of per-bus excursions outside the limits, pu.
    pub violation_pu: f64,
    pub non_converged_states: usize,
    pub feasible: bool,
    /// `expected_loss + penalty * violation`, kW.
    pub fitness_kw: f64,
}

impl ObjectiveReport {
    pub fn converged(&self) -> bool {
        self.non_converged_states == 0
    }
}

/// Everything needed to score allocations. Cheap to clone; holds borrows.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    pub network: &'a Network,
    pub states: &'a StateSet,
    pub models: &'a DgModels,
    pub limits: VoltageLimits,
    pub sweep: SweepSettings,
    /// kW of fitness per pu of aggregate voltage violation.
    pub penalty_kw_per_pu: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(network: &'a Network, states: &'a StateSet, models: &'a DgModels, limits: VoltageLimits) -> Self {
        Self {
            network,
            states,
            models,
            limits,
            sweep: SweepSettings::default(),
            penalty_kw_per_pu: 1e4,
        }
    }

    pub fn with_sweep(mut self, sweep: SweepSettings) -> Self {
        self.sweep = sweep;
        self
    }

    pub fn with_penalty(mut self, penalty_kw_per_pu: f64) -> Self {
        self.penalty_kw_per_pu = penalty_kw_per_pu;
        self
    }

    /// Net injections for one state.
    pub fn injections(&self, units: &[(usize, DgKind, f64)], state: &State) -> InjectionSet {
        let mut inj = InjectionSet::from_loads(self.network);
        for &(index, kind, kw) in units {
            inj.inject(index, kw * self.models.output_fraction(kind, state));
        }
        inj
    }

    fn resolve(&self, allocation: &Allocation) -> Result<Vec<(usize, DgKind, f64)>, OptimizeError> {
        allocation
            .units
            .iter()
            .map(|u| {
                self.network
                    .index_of(u.bus)
                    .map(|i| (i, u.kind, u.capacity_kw))
                    .ok_or_else(|| OptimizeError::InvalidAllocation(vec![format!("bus {} is not in the network", u.bus)]))
            })
            .collect()
    }

    /// Power-flow solution of every state, `None` where the solve failed.
    pub fn solve_states(&self, allocation: &Allocation) -> Result<Vec<Option<PowerFlowResult>>, OptimizeError> {
        let units = self.resolve(allocation)?;
        Ok(self
            .states
            .states
            .iter()
            .map(|state| {
                solve(self.network, &self.injections(&units, state), &self.sweep)
                    .ok()
                    .filter(|r| r.converged)
            })
            .collect())
    }

    pub fn evaluate(&self, allocation: &Allocation) -> Result<ObjectiveReport, OptimizeError> {
        let results = self.solve_states(allocation)?;
        let buses = self.network.buses();

        let mut expected_loss = 0.0;
        let mut violation = 0.0;
        let mut worst = (f64::INFINITY, buses[self.network.slack_index()].id);
        let mut max_v = f64::NEG_INFINITY;
        let mut failed = 0;
        let mut per_state = Vec::with_capacity(results.len());
        for (state, result) in self.states.states.iter().zip(&results) {
            let Some(res) = result else {
                failed += 1;
                per_state.push(None);
                continue;
            };
            expected_loss += state.weight * res.total_loss_kw;
            per_state.push(Some(res.total_loss_kw));
            let mut excursion = 0.0;
            for (bus, v) in buses.iter().zip(res.magnitudes()) {
                excursion += self.limits.excursion(v);
                if v < worst.0 {
                    worst = (v, bus.id);
                }
                max_v = max_v.max(v);
            }
            violation += state.weight * excursion;
        }

        let fitness = if failed > 0 {
            NON_CONVERGED_FITNESS
        } else {
            expected_loss + self.penalty_kw_per_pu * violation
        };
        Ok(ObjectiveReport {
            expected_loss_kw: expected_loss,
            per_state_loss_kw: per_state,
            worst_voltage_pu: worst.0,
            worst_voltage_bus: worst.1,
            max_voltage_pu: max_v,
            violation_pu: violation,
            non_converged_states: failed,
            feasible: failed == 0 && violation == 0.0,
            fitness_kw: fitness,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use crate::dg::DgUnit;

    #[test]
    fn empty_allocation_matches_base_case() {
        let net = cases::ieee33();
        let states = StateSet::single(8.0, 0.5);
        let models = DgModels::default();
        let eval = Evaluator::new(&net, &states, &models, VoltageLimits::default());
        let report = eval.evaluate(&Allocation::empty()).unwrap();
        let base = solve(&net, &InjectionSet::from_loads(&net), &SweepSettings::default()).unwrap();
        assert_eq!(report.expected_loss_kw, base.total_loss_kw);
        assert!(!report.feasible, "the bare feeder sags below 0.95 pu");
        assert_eq!(report.worst_voltage_bus, 18);
    }

    #[test]
    fn unknown_bus_is_an_error() {
        let net = cases::ieee33();
        let states = StateSet::single(8.0, 0.5);
        let models = DgModels::default();
        let eval = Evaluator::new(&net, &states, &models, VoltageLimits::default());
        let alloc = Allocation::new(vec![DgUnit {
            kind: DgKind::Biomass,
            bus: 99,
            capacity_kw: 25.0,
        }]);
        assert!(eval.evaluate(&alloc).is_err());
    }

    #[test]
    fn identical_states_average_to_one() {
        let net = cases::ieee33();
        let s = State {
            hour: 3,
            wind_speed: 11.0,
            irradiance: 0.4,
            weight: 0.25,
        };
        let four = StateSet::from_states(vec![s; 4], 0).unwrap();
        let one = StateSet::single(11.0, 0.4);
        let models = DgModels::default();
        let alloc = cases::reference_allocation();
        let a = Evaluator::new(&net, &four, &models, VoltageLimits::default()).evaluate(&alloc).unwrap();
        let b = Evaluator::new(&net, &one, &models, VoltageLimits::default()).evaluate(&alloc).unwrap();
        assert!((a.expected_loss_kw - b.expected_loss_kw).abs() < 1e-12 * b.expected_loss_kw);
    }
}
