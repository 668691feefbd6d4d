//! Weather uncertainty: Beta irradiance and Rayleigh wind-speed models, their
//! hourly fits, and the sampled state set over which expected loss is taken.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::grid::{field, read_table, GridError};

pub const HOURS: usize = 24;

/// Ratio between the Rayleigh scale and the mean speed, 2/sqrt(pi) to three
/// decimals.
pub const RAYLEIGH_SCALE_PER_MEAN: f64 = 1.128;

#[derive(Debug, Error)]
pub enum StochasticError {
    #[error("{0}")]
    Domain(String),
    #[error("no Beta distribution has mean {mu} and standard deviation {sigma} (need sigma^2 < mu(1-mu))")]
    InfeasibleMoments { mu: f64, sigma: f64 },
    #[error("hour {hour}: {source}")]
    Hour {
        hour: usize,
        #[source]
        source: Box<StochasticError>,
    },
    #[error("profile: {0}")]
    Profile(String),
    #[error(transparent)]
    Table(#[from] GridError),
    #[error("state set: {0}")]
    Json(#[from] serde_json::Error),
    #[error("state set: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, StochasticError> {
        if !(alpha.is_finite() && alpha > 0.0 && beta.is_finite() && beta > 0.0) {
            return Err(StochasticError::Domain(format!(
                "Beta shapes must be positive and finite, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * s * (s + 1.0))
    }

    /// Gamma-ratio sampler: `X / (X + Y)` with `X ~ Gamma(alpha)`, `Y ~ Gamma(beta)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = Gamma::new(self.alpha, 1.0).expect("alpha validated").sample(rng);
        let y = Gamma::new(self.beta, 1.0).expect("beta validated").sample(rng);
        if x + y == 0.0 {
            // both draws underflowed; only possible for tiny shapes
            return self.mean();
        }
        (x / (x + y)).clamp(0.0, 1.0)
    }
}

/// Beta density on [0, 1]; zero outside the support.
pub fn beta_pdf(s: f64, params: &BetaParams) -> f64 {
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    let BetaParams { alpha, beta } = *params;
    let norm = (ln_gamma(alpha + beta) - ln_gamma(alpha) - ln_gamma(beta)).exp();
    norm * s.powf(alpha - 1.0) * (1.0 - s).powf(beta - 1.0)
}

/// How the Beta shape parameters are recovered from hourly moments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaFit {
    /// Standard moment matching, `beta = (1-mu)(mu(1-mu)/sigma^2 - 1)`.
    #[default]
    Moments,
    /// The `mu(1+mu)` variant of the same expression. Does not reproduce the
    /// input variance; kept for comparison runs.
    Paper,
}

impl std::str::FromStr for BetaFit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "moments" => Ok(Self::Moments),
            "paper" => Ok(Self::Paper),
            other => Err(format!("unknown Beta fit mode `{other}` (expected moments|paper)")),
        }
    }
}

pub fn fit_beta_moments(mu: f64, sigma: f64, mode: BetaFit) -> Result<BetaParams, StochasticError> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(StochasticError::Domain(format!("Beta mean {mu} is outside (0, 1)")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(StochasticError::Domain(format!("standard deviation {sigma} must be positive")));
    }
    let var = sigma * sigma;
    if var >= mu * (1.0 - mu) {
        return Err(StochasticError::InfeasibleMoments { mu, sigma });
    }
    let spread = match mode {
        BetaFit::Moments => mu * (1.0 - mu),
        BetaFit::Paper => mu * (1.0 + mu),
    };
    let beta = (1.0 - mu) * (spread / var - 1.0);
    let alpha = mu * beta / (1.0 - mu);
    BetaParams::new(alpha, beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighParams {
    /// Scale `c` in m/s.
    pub c: f64,
}

impl RayleighParams {
    pub fn new(c: f64) -> Result<Self, StochasticError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(StochasticError::Domain(format!("Rayleigh scale {c} must be positive")));
        }
        Ok(Self { c })
    }

    pub fn mean(&self) -> f64 {
        self.c * std::f64::consts::PI.sqrt() / 2.0
    }

    /// Inverse-CDF draw `c * sqrt(-ln u)`, `u` in (0, 1].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = 1.0 - rng.random::<f64>();
        self.c * (-u.ln()).sqrt()
    }
}

/// Shape-2 Weibull density `(2v/c^2) exp(-(v/c)^2)`.
pub fn rayleigh_pdf(v: f64, params: &RayleighParams) -> Result<f64, StochasticError> {
    if !(v >= 0.0) {
        return Err(StochasticError::Domain(format!("wind speed {v} must be non-negative")));
    }
    let c = params.c;
    Ok(2.0 * v / (c * c) * (-(v / c).powi(2)).exp())
}

/// Scale from the characteristic speed `v_m`: `c = 1.128 v_m`.
pub fn fit_rayleigh(v_m: f64) -> Result<RayleighParams, StochasticError> {
    if !(v_m.is_finite() && v_m > 0.0) {
        return Err(StochasticError::Domain(format!("wind speed {v_m} must be positive")));
    }
    RayleighParams::new(RAYLEIGH_SCALE_PER_MEAN * v_m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    /// m/s
    WindSpeed,
    /// kW/m^2
    Irradiance,
}

/// One representative day of hourly means.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyProfile {
    kind: ProfileKind,
    values: [f64; HOURS],
}

impl HourlyProfile {
    /// Irradiance values are clamped into [0, 1] kW/m^2.
    pub fn new(kind: ProfileKind, values: [f64; HOURS]) -> Result<Self, StochasticError> {
        let mut values = values;
        for (hour, v) in values.iter_mut().enumerate() {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(StochasticError::Profile(format!(
                    "hour {hour}: value {v} must be finite and non-negative"
                )));
            }
            if kind == ProfileKind::Irradiance {
                *v = v.min(1.0);
            }
        }
        Ok(Self { kind, values })
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn values(&self) -> &[f64; HOURS] {
        &self.values
    }

    pub fn from_csv<R: Read>(reader: R, source_name: &str, kind: ProfileKind) -> Result<Self, StochasticError> {
        let rows = read_table(reader, source_name, &["hour", "value"])?;
        if rows.len() != HOURS {
            return Err(StochasticError::Profile(format!(
                "{source_name}: expected {HOURS} rows, found {}",
                rows.len()
            )));
        }
        let mut values = [f64::NAN; HOURS];
        for (line, rec) in rows {
            let hour: usize = field(&rec, 0, "hour", source_name, line)?;
            let value: f64 = field(&rec, 1, "value", source_name, line)?;
            if hour >= HOURS {
                return Err(StochasticError::Profile(format!("{source_name}, line {line}: hour {hour} is not in 0..23")));
            }
            if !values[hour].is_nan() {
                return Err(StochasticError::Profile(format!("{source_name}, line {line}: hour {hour} repeated")));
            }
            values[hour] = value;
        }
        Self::new(kind, values)
    }

    pub fn load(path: &Path, kind: ProfileKind) -> Result<Self, StochasticError> {
        let file = std::fs::File::open(path).map_err(|source| GridError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_csv(file, &path.display().to_string(), kind)
    }
}

/// Standard deviation assigned to an hourly irradiance mean:
/// `max(relative * mu, floor)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SigmaRule {
    pub relative: f64,
    pub floor: f64,
}

impl Default for SigmaRule {
    fn default() -> Self {
        Self {
            relative: 0.1,
            floor: 0.02,
        }
    }
}

impl SigmaRule {
    pub fn sigma(&self, mu: f64) -> f64 {
        (self.relative * mu).max(self.floor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub hour: u8,
    /// m/s
    pub wind_speed: f64,
    /// kW/m^2 in [0, 1]
    pub irradiance: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSet {
    pub seed: u64,
    pub samples_per_hour: usize,
    pub states: Vec<State>,
}

impl StateSet {
    /// Wraps hand-made states, checking weights and ranges.
    pub fn from_states(states: Vec<State>, seed: u64) -> Result<Self, StochasticError> {
        let set = Self {
            seed,
            samples_per_hour: 0,
            states,
        };
        set.validate()?;
        Ok(set)
    }

    /// A single certain state.
    pub fn single(wind_speed: f64, irradiance: f64) -> Self {
        Self {
            seed: 0,
            samples_per_hour: 0,
            states: vec![State {
                hour: 0,
                wind_speed,
                irradiance,
                weight: 1.0,
            }],
        }
    }

    pub fn validate(&self) -> Result<(), StochasticError> {
        if self.states.is_empty() {
            return Err(StochasticError::Domain("state set is empty".into()));
        }
        for (n, s) in self.states.iter().enumerate() {
            if !(s.weight > 0.0) || !(s.wind_speed >= 0.0) || !(0.0..=1.0).contains(&s.irradiance) || s.hour as usize >= HOURS {
                return Err(StochasticError::Domain(format!("state {n} is out of range: {s:?}")));
            }
        }
        let total: f64 = self.states.iter().map(|s| s.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(StochasticError::Domain(format!("state weights sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<(), StochasticError> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self, StochasticError> {
        let set: Self = serde_json::from_reader(input)?;
        set.validate()?;
        Ok(set)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSettings {
    pub samples_per_hour: usize,
    pub sigma_rule: SigmaRule,
    pub beta_fit: BetaFit,
}

impl Default for ScenarioSettings {
    fn default() -> Self {
        Self {
            samples_per_hour: 10,
            sigma_rule: SigmaRule::default(),
            beta_fit: BetaFit::Moments,
        }
    }
}

/// Distribution parameters fitted for one hour. `None` marks a degenerate
/// hour whose mean is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HourFit {
    pub hour: usize,
    pub wind_mean: f64,
    pub rayleigh: Option<RayleighParams>,
    pub irradiance_mean: f64,
    pub irradiance_sigma: f64,
    pub beta: Option<BetaParams>,
}

pub fn fit_hours(
    wind: &HourlyProfile,
    solar: &HourlyProfile,
    sigma_rule: &SigmaRule,
    beta_fit: BetaFit,
) -> Result<Vec<HourFit>, StochasticError> {
    if wind.kind() != ProfileKind::WindSpeed || solar.kind() != ProfileKind::Irradiance {
        return Err(StochasticError::Profile("expected a wind-speed and an irradiance profile".into()));
    }
    (0..HOURS)
        .map(|hour| {
            let at_hour = |source| StochasticError::Hour {
                hour,
                source: Box::new(source),
            };
            let wind_mean = wind.values()[hour];
            let rayleigh = if wind_mean > 0.0 {
                Some(fit_rayleigh(wind_mean).map_err(at_hour)?)
            } else {
                None
            };
            let mu = solar.values()[hour];
            let (sigma, beta) = if mu > 0.0 {
                let sigma = sigma_rule.sigma(mu);
                (sigma, Some(fit_beta_moments(mu, sigma, beta_fit).map_err(at_hour)?))
            } else {
                (0.0, None)
            };
            Ok(HourFit {
                hour,
                wind_mean,
                rayleigh,
                irradiance_mean: mu,
                irradiance_sigma: sigma,
                beta,
            })
        })
        .collect()
}

/// Samples `samples_per_hour` states for every hour of the day. Each state
/// weighs `1 / (24 M)`. The draw order is fixed (per hour: all wind samples,
/// then all irradiance samples), so a seed reproduces the set exactly.
pub fn build_state_set(
    wind: &HourlyProfile,
    solar: &HourlyProfile,
    settings: &ScenarioSettings,
    seed: u64,
) -> Result<StateSet, StochasticError> {
    let m = settings.samples_per_hour;
    if m < 1 {
        return Err(StochasticError::Domain("samples_per_hour must be at least 1".into()));
    }
    let fits = fit_hours(wind, solar, &settings.sigma_rule, settings.beta_fit)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weight = 1.0 / (HOURS * m) as f64;
    let mut states = Vec::with_capacity(HOURS * m);
    for fit in &fits {
        let speeds: Vec<f64> = match fit.rayleigh {
            Some(r) => (0..m).map(|_| r.sample(&mut rng)).collect(),
            None => vec![0.0; m],
        };
        let irradiance: Vec<f64> = match fit.beta {
            Some(b) => (0..m).map(|_| b.sample(&mut rng)).collect(),
            None => vec![0.0; m],
        };
        states.extend(speeds.into_iter().zip(irradiance).map(|(wind_speed, irradiance)| State {
            hour: fit.hour as u8,
            wind_speed,
            irradiance,
            weight,
        }));
    }
    Ok(StateSet {
        seed,
        samples_per_hour: m,
        states,
    })
}
