//! Backward/forward sweep load flow for radial feeders.
//!
//! Loads are constant-power. Each iteration computes load currents
//! `I = conj(S / V)`, accumulates branch currents from the leaves toward the
//! slack (backward sweep) and then updates voltages from the slack outward
//! with `V_child = V_parent - Z * I_branch` (forward sweep).

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Network;

/// Any bus voltage below this magnitude aborts the solve.
pub const COLLAPSE_VOLTAGE_PU: f64 = 0.3;

#[derive(Debug, Error)]
pub enum PowerFlowError {
    #[error("injection set has {got} entries, network has {expected} buses")]
    SizeMismatch { expected: usize, got: usize },
    #[error("voltage collapse at bus {bus}: |V| = {v_pu:.4} pu after {iteration} iterations")]
    VoltageCollapse { bus: u32, v_pu: f64, iteration: usize },
    #[error("power flow did not converge in {iterations} iterations (last update {last_update:.3e} pu)")]
    NotConverged { iterations: usize, last_update: f64 },
    #[error("invalid sweep settings: {0}")]
    Settings(String),
}

/// Net demand per bus after subtracting DG output. DG is modeled as negative
/// active load at unity power factor.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionSet {
    p_net_kw: Vec<f64>,
    q_net_kvar: Vec<f64>,
}

impl InjectionSet {
    /// Nominal loads of the network, no generation.
    pub fn from_loads(network: &Network) -> Self {
        Self {
            p_net_kw: network.buses().iter().map(|b| b.p_load_kw).collect(),
            q_net_kvar: network.buses().iter().map(|b| b.q_load_kvar).collect(),
        }
    }

    pub fn zeros(bus_count: usize) -> Self {
        Self {
            p_net_kw: vec![0.0; bus_count],
            q_net_kvar: vec![0.0; bus_count],
        }
    }

    /// Subtracts `kw` of unity-power-factor generation at bus `index`.
    pub fn inject(&mut self, index: usize, kw: f64) {
        self.p_net_kw[index] -= kw;
    }

    pub fn set(&mut self, index: usize, p_kw: f64, q_kvar: f64) {
        self.p_net_kw[index] = p_kw;
        self.q_net_kvar[index] = q_kvar;
    }

    pub fn len(&self) -> usize {
        self.p_net_kw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_net_kw.is_empty()
    }

    pub fn p_net_kw(&self) -> &[f64] {
        &self.p_net_kw
    }

    pub fn q_net_kvar(&self) -> &[f64] {
        &self.q_net_kvar
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSettings {
    /// Stop when the largest per-bus voltage change falls below this, in pu.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Substation voltage magnitude, pu (angle 0).
    pub slack_voltage: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 100,
            slack_voltage: 1.0,
        }
    }
}

impl SweepSettings {
    pub fn validate(&self) -> Result<(), PowerFlowError> {
        if !(self.tolerance > 0.0) {
            return Err(PowerFlowError::Settings(format!("tolerance {} must be > 0", self.tolerance)));
        }
        if self.max_iterations < 1 {
            return Err(PowerFlowError::Settings("max_iterations must be >= 1".into()));
        }
        if !(self.slack_voltage > COLLAPSE_VOLTAGE_PU && self.slack_voltage.is_finite()) {
            return Err(PowerFlowError::Settings(format!(
                "slack voltage {} pu is not usable",
                self.slack_voltage
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowResult {
    /// Complex bus voltages in pu, indexed like [`Network::buses`].
    pub voltages: Vec<Complex64>,
    /// Branch currents in pu, indexed like [`Network::branches`] and
    /// oriented away from the slack.
    pub branch_current: Vec<Complex64>,
    /// Real loss per branch in kW, indexed like [`Network::branches`].
    pub branch_loss_kw: Vec<f64>,
    pub total_loss_kw: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest per-bus voltage change in the final iteration, pu.
    pub last_update: f64,
    /// Complex power delivered by the slack bus, pu.
    pub slack_power_pu: Complex64,
}

impl PowerFlowResult {
    pub fn magnitudes(&self) -> impl Iterator<Item = f64> + '_ {
        self.voltages.iter().map(|v| v.norm())
    }

    /// Lowest voltage magnitude and the index of its bus.
    pub fn min_voltage(&self) -> (usize, f64) {
        self.magnitudes()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc })
    }

    pub fn max_voltage(&self) -> (usize, f64) {
        self.magnitudes()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc })
    }
}

/// Solves one operating state.
///
/// Non-convergence is reported through [`PowerFlowResult::converged`] rather
/// than as an error; only malformed input and voltage collapse fail.
pub fn solve(
    network: &Network,
    injections: &InjectionSet,
    settings: &SweepSettings,
) -> Result<PowerFlowResult, PowerFlowError> {
    settings.validate()?;
    let n = network.bus_count();
    if injections.len() != n {
        return Err(PowerFlowError::SizeMismatch {
            expected: n,
            got: injections.len(),
        });
    }
    let base = network.base();
    let sweep = network.sweep_order();
    let slack = sweep.slack;

    let demand: Vec<Complex64> = (0..n)
        .map(|i| {
            if i == slack {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(
                    base.kw_to_pu(injections.p_net_kw[i]),
                    base.kw_to_pu(injections.q_net_kvar[i]),
                )
            }
        })
        .collect();

    let v_slack = Complex64::new(settings.slack_voltage, 0.0);
    let mut voltages = vec![v_slack; n];
    let mut accum = vec![Complex64::new(0.0, 0.0); n];
    let mut current = vec![Complex64::new(0.0, 0.0); network.branches().len()];

    let mut iterations = 0;
    let mut last_update = f64::INFINITY;
    let mut converged = false;
    while iterations < settings.max_iterations {
        iterations += 1;
        backward_sweep(network, &demand, &voltages, &mut accum, &mut current);

        last_update = 0.0;
        for sb in &sweep.branches {
            let updated = voltages[sb.parent] - sb.z_pu * current[sb.branch];
            last_update = last_update.max((updated - voltages[sb.child]).norm());
            voltages[sb.child] = updated;
        }

        if let Some((i, v)) = voltages
            .iter()
            .map(|v| v.norm())
            .enumerate()
            .find(|(_, v)| !(*v >= COLLAPSE_VOLTAGE_PU))
        {
            return Err(PowerFlowError::VoltageCollapse {
                bus: network.buses()[i].id,
                v_pu: v,
                iteration: iterations,
            });
        }
        if last_update < settings.tolerance {
            converged = true;
            break;
        }
    }

    // Currents consistent with the final voltages.
    backward_sweep(network, &demand, &voltages, &mut accum, &mut current);

    let mut branch_loss_kw = vec![0.0; current.len()];
    for sb in &sweep.branches {
        branch_loss_kw[sb.branch] = base.pu_to_kw(current[sb.branch].norm_sqr() * sb.z_pu.re);
    }
    let total_loss_kw = branch_loss_kw.iter().fold(0.0, |acc, x| acc + x);
    let slack_power_pu = v_slack * accum[slack].conj();

    Ok(PowerFlowResult {
        voltages,
        branch_current: current,
        branch_loss_kw,
        total_loss_kw,
        iterations,
        converged,
        last_update,
        slack_power_pu,
    })
}

/// Leaves-to-root current accumulation. After the call `accum[slack]` holds
/// the total current drawn from the substation.
fn backward_sweep(
    network: &Network,
    demand: &[Complex64],
    voltages: &[Complex64],
    accum: &mut [Complex64],
    current: &mut [Complex64],
) {
    for ((a, s), v) in accum.iter_mut().zip(demand).zip(voltages) {
        *a = (s / v).conj();
    }
    for sb in network.sweep_order().branches.iter().rev() {
        let flow = accum[sb.child];
        current[sb.branch] = flow;
        accum[sb.parent] += flow;
    }
}

/// Total real loss of a converged solution, kW.
pub fn total_loss(result: &PowerFlowResult) -> Result<f64, PowerFlowError> {
    if !result.converged {
        return Err(PowerFlowError::NotConverged {
            iterations: result.iterations,
            last_update: result.last_update,
        });
    }
    Ok(result.total_loss_kw)
}

pub const VOLTAGE_PROFILE_HEADER: &str = "bus_id,v_mag_pu,v_angle_deg";

/// Writes `bus_id,v_mag_pu,v_angle_deg` rows in network bus order.
pub fn write_voltage_profile<W: Write>(
    network: &Network,
    result: &PowerFlowResult,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "{VOLTAGE_PROFILE_HEADER}")?;
    for (bus, v) in network.buses().iter().zip(&result.voltages) {
        let angle = v.arg().to_degrees();
        // avoid printing -0.000000
        let angle = if angle.abs() < 5e-7 { 0.0 } else { angle };
        writeln!(out, "{},{:.8},{:.6}", bus.id, v.norm(), angle)?;
    }
    Ok(())
}
