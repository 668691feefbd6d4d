//! Output models for the three generator kinds, expressed as a fraction of
//! installed capacity so that any unit size scales linearly.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stochastic::State;

#[derive(Debug, Error)]
pub enum DgError {
    #[error("irradiance {0} kW/m^2 is outside [0, 1]")]
    Irradiance(f64),
    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DgKind {
    Wind,
    Solar,
    Biomass,
}

impl DgKind {
    pub const ALL: [DgKind; 3] = [DgKind::Wind, DgKind::Solar, DgKind::Biomass];

    pub fn as_str(self) -> &'static str {
        match self {
            DgKind::Wind => "wind",
            DgKind::Solar => "solar",
            DgKind::Biomass => "biomass",
        }
    }
}

impl fmt::Display for DgKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// PV module datasheet values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PvModuleParams {
    pub k_i_a_per_c: f64,
    pub k_v_v_per_c: f64,
    pub i_mp_a: f64,
    pub v_mp_v: f64,
    pub i_sc_a: f64,
    pub v_oc_v: f64,
    /// Nominal operating cell temperature.
    pub t_op_c: f64,
    pub p_max_w: f64,
    /// Ambient temperature.
    pub t_a_c: f64,
    pub n_modules: u32,
}

impl Default for PvModuleParams {
    fn default() -> Self {
        Self {
            k_i_a_per_c: 1.22e-3,
            k_v_v_per_c: 14.40e-3,
            i_mp_a: 4.76,
            v_mp_v: 17.32,
            i_sc_a: 5.32,
            v_oc_v: 21.98,
            t_op_c: 43.0,
            p_max_w: 75.0,
            t_a_c: 25.0,
            n_modules: 1,
        }
    }
}

impl PvModuleParams {
    pub fn validate(&self) -> Result<(), DgError> {
        let positive = [
            ("k_i_a_per_c", self.k_i_a_per_c),
            ("k_v_v_per_c", self.k_v_v_per_c),
            ("i_mp_a", self.i_mp_a),
            ("v_mp_v", self.v_mp_v),
            ("i_sc_a", self.i_sc_a),
            ("v_oc_v", self.v_oc_v),
            ("p_max_w", self.p_max_w),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(DgError::Invalid {
                what: "PV module",
                message: format!("{name} = {v} must be positive"),
            });
        }
        if self.i_mp_a > self.i_sc_a || self.v_mp_v > self.v_oc_v {
            return Err(DgError::Invalid {
                what: "PV module",
                message: "maximum-power point exceeds short-circuit current or open-circuit voltage".into(),
            });
        }
        if !(self.t_op_c.is_finite() && self.t_a_c.is_finite()) || self.n_modules == 0 {
            return Err(DgError::Invalid {
                what: "PV module",
                message: "temperatures must be finite and n_modules >= 1".into(),
            });
        }
        Ok(())
    }

    /// Fill factor `(V_mp I_mp) / (V_oc I_sc)`.
    pub fn fill_factor(&self) -> f64 {
        (self.v_mp_v * self.i_mp_a) / (self.v_oc_v * self.i_sc_a)
    }

    fn cell_temperature(&self, s: f64) -> f64 {
        self.t_a_c + s * (self.t_op_c - 20.0) / 0.8
    }

    fn module_power(&self, s: f64) -> f64 {
        let t_c = self.cell_temperature(s);
        let i_c = s * (self.i_sc_a + self.k_i_a_per_c * (t_c - 25.0));
        let v_c = self.v_oc_v - self.k_v_v_per_c * t_c;
        (self.fill_factor() * v_c * i_c).max(0.0)
    }
}

fn check_irradiance(s: f64) -> Result<(), DgError> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(DgError::Irradiance(s))
    }
}

/// Cell temperature in degC at irradiance `s_avg` kW/m^2.
pub fn pv_cell_temperature(s_avg: f64, params: &PvModuleParams) -> Result<f64, DgError> {
    check_irradiance(s_avg)?;
    Ok(params.cell_temperature(s_avg))
}

/// Power of one module in W at irradiance `s_avg`.
pub fn pv_module_power(s_avg: f64, params: &PvModuleParams) -> Result<f64, DgError> {
    check_irradiance(s_avg)?;
    Ok(params.module_power(s_avg))
}

/// Module output relative to its rating. Slightly above 1 is possible at
/// full sun.
pub fn pv_output_fraction(s_avg: f64, params: &PvModuleParams) -> Result<f64, DgError> {
    Ok(pv_module_power(s_avg, params)? / params.p_max_w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindTurbineParams {
    pub v_in_ms: f64,
    pub v_off_ms: f64,
    pub v_n_ms: f64,
    pub p_n_kw: f64,
}

impl Default for WindTurbineParams {
    fn default() -> Self {
        Self {
            v_in_ms: 4.0,
            v_off_ms: 25.0,
            v_n_ms: 16.0,
            p_n_kw: 400.0,
        }
    }
}

impl WindTurbineParams {
    pub fn validate(&self) -> Result<(), DgError> {
        if !(0.0 < self.v_in_ms && self.v_in_ms < self.v_n_ms && self.v_n_ms < self.v_off_ms && self.v_off_ms.is_finite())
        {
            return Err(DgError::Invalid {
                what: "wind turbine",
                message: format!(
                    "need 0 < v_in < v_n < v_off, got {} / {} / {}",
                    self.v_in_ms, self.v_n_ms, self.v_off_ms
                ),
            });
        }
        if !(self.p_n_kw > 0.0) {
            return Err(DgError::Invalid {
                what: "wind turbine",
                message: format!("p_n_kw = {} must be positive", self.p_n_kw),
            });
        }
        Ok(())
    }
}

/// Piecewise-linear power curve: zero below cut-in, linear ramp to rated at
/// `v_n`, rated up to cut-off inclusive, zero beyond. Negative speeds give 0.
pub fn wind_output_fraction(v: f64, params: &WindTurbineParams) -> f64 {
    if v < params.v_in_ms {
        0.0
    } else if v < params.v_n_ms {
        (v - params.v_in_ms) / (params.v_n_ms - params.v_in_ms)
    } else if v <= params.v_off_ms {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BiomassParams {
    pub p_n_kw: f64,
}

impl Default for BiomassParams {
    fn default() -> Self {
        Self { p_n_kw: 600.0 }
    }
}

/// Model parameters for the whole fleet.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DgModels {
    pub pv: PvModuleParams,
    pub wind: WindTurbineParams,
    pub biomass: BiomassParams,
}

impl DgModels {
    pub fn validate(&self) -> Result<(), DgError> {
        self.pv.validate()?;
        self.wind.validate()?;
        if !(self.biomass.p_n_kw > 0.0) {
            return Err(DgError::Invalid {
                what: "biomass",
                message: format!("p_n_kw = {} must be positive", self.biomass.p_n_kw),
            });
        }
        Ok(())
    }

    /// Output per kW installed for `kind` in `state`.
    pub fn output_fraction(&self, kind: DgKind, state: &State) -> f64 {
        match kind {
            DgKind::Wind => wind_output_fraction(state.wind_speed, &self.wind),
            DgKind::Solar => self.pv.module_power(state.irradiance.clamp(0.0, 1.0)) / self.pv.p_max_w,
            DgKind::Biomass => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgUnit {
    pub kind: DgKind,
    pub bus: u32,
    #[serde(rename = "kw")]
    pub capacity_kw: f64,
}

/// Output of an installed unit in kW for one weather state.
pub fn dg_state_output(unit: &DgUnit, state: &State, models: &DgModels) -> f64 {
    unit.capacity_kw * models.output_fraction(unit.kind, state)
}
