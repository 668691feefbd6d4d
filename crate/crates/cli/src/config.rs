//! Run configuration: one TOML file whose sections mirror the library types.
//! Every section is optional; omitted values take library defaults and
//! omitted data paths fall back to the bundled 33-bus case.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dgsite::dg::DgModels;
use dgsite::grid::{load_network, Network, SystemBase, VoltageLimits};
use dgsite::optimizer::{CandidateBuses, PenetrationSpec, PsoSettings, SizingRules};
use dgsite::powerflow::SweepSettings;
use dgsite::stochastic::{HourlyProfile, ProfileKind, ScenarioSettings};
use dgsite::cases;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkPaths {
    pub buses: Option<PathBuf>,
    pub branches: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfilePaths {
    pub wind: Option<PathBuf>,
    pub solar: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seeds both the weather sampling and the swarm.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub network: NetworkPaths,
    pub profiles: ProfilePaths,
    pub base: SystemBase,
    pub limits: VoltageLimits,
    pub powerflow: SweepSettings,
    pub scenarios: ScenarioSettings,
    pub penetration: PenetrationSpec,
    pub sizing: SizingRules,
    pub candidates: CandidateBuses,
    pub dg: DgModels,
    pub pso: PsoSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            output_dir: PathBuf::from("out"),
            network: NetworkPaths::default(),
            profiles: ProfilePaths::default(),
            base: SystemBase::default(),
            limits: VoltageLimits::default(),
            powerflow: SweepSettings::default(),
            scenarios: ScenarioSettings::default(),
            penetration: PenetrationSpec::default(),
            sizing: SizingRules::default(),
            candidates: CandidateBuses::default(),
            dg: DgModels::default(),
            pso: PsoSettings::default(),
        }
    }
}

impl RunConfig {
    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory and stored absolute.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut config: RunConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let dir = std::path::absolute(dir).unwrap_or_else(|_| dir.to_path_buf());
        for p in [
            &mut config.network.buses,
            &mut config.network.branches,
            &mut config.profiles.wind,
            &mut config.profiles.solar,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                let joined = dir.join(&*p);
                *p = std::fs::canonicalize(&joined).unwrap_or(joined);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.limits.validate()?;
        self.powerflow.validate()?;
        self.dg.validate()?;
        self.pso.validate()?;
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn network(&self) -> Result<Network> {
        match (&self.network.buses, &self.network.branches) {
            (None, None) => Ok(cases::ieee33_with_base(self.base)),
            (Some(buses), Some(branches)) => Ok(load_network(buses, branches, self.base)?),
            _ => anyhow::bail!("[network] needs both `buses` and `branches`, or neither"),
        }
    }

    pub fn profiles(&self) -> Result<(HourlyProfile, HourlyProfile)> {
        let wind = match &self.profiles.wind {
            Some(p) => HourlyProfile::load(p, ProfileKind::WindSpeed)?,
            None => cases::wind_profile(),
        };
        let solar = match &self.profiles.solar {
            Some(p) => HourlyProfile::load(p, ProfileKind::Irradiance)?,
            None => cases::solar_profile(),
        };
        Ok((wind, solar))
    }
}
