//! Bundled test data: the standard 33-bus feeder (Baran & Wu), a
//! representative day of hourly wind and irradiance means, and a published
//! reference allocation for that feeder.

use crate::grid::{Network, SystemBase};
use crate::optimizer::{Allocation, AllocationFile};
use crate::stochastic::{HourlyProfile, ProfileKind};

pub const IEEE33_BUSES_CSV: &str = include_str!("../data/ieee33_buses.csv");
pub const IEEE33_BRANCHES_CSV: &str = include_str!("../data/ieee33_branches.csv");
pub const WIND_PROFILE_CSV: &str = include_str!("../data/wind_profile.csv");
pub const SOLAR_PROFILE_CSV: &str = include_str!("../data/solar_profile.csv");
pub const REFERENCE_ALLOCATION_JSON: &str = include_str!("../data/reference_allocation.json");

/// The 33-bus feeder on its customary 1 MVA / 12.66 kV base.
pub fn ieee33() -> Network {
    ieee33_with_base(SystemBase::default())
}

pub fn ieee33_with_base(base: SystemBase) -> Network {
    Network::from_csv_str(IEEE33_BUSES_CSV, IEEE33_BRANCHES_CSV, base).expect("bundled 33-bus data is valid")
}

pub fn wind_profile() -> HourlyProfile {
    HourlyProfile::from_csv(WIND_PROFILE_CSV.as_bytes(), "wind_profile.csv", ProfileKind::WindSpeed)
        .expect("bundled wind profile is valid")
}

pub fn solar_profile() -> HourlyProfile {
    HourlyProfile::from_csv(SOLAR_PROFILE_CSV.as_bytes(), "solar_profile.csv", ProfileKind::Irradiance)
        .expect("bundled solar profile is valid")
}

/// Wind at buses 8, 9, 14, 18, 28, 30, 31; solar at 4, 7, 17, 23, 26; biomass
/// at twelve buses; 400 / 200 / 600 kW in total.
pub fn reference_allocation() -> Allocation {
    let file: AllocationFile =
        serde_json::from_str(REFERENCE_ALLOCATION_JSON).expect("bundled allocation is valid JSON");
    Allocation::new(file.allocation.units)
}
