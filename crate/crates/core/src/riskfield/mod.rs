//! Daily risk fields over base-station cells.
//!
//! Each confirmed case spreads its daily stay fractions over the cells it
//! visited, discounted by how far the day lies before diagnosis. Those base
//! fields are then blended over the last few days with outdoor decay weights
//! to give the daily risk map.

mod cases;
mod decay;
pub(crate) mod field;
mod fractions;
mod map;
mod region;

pub use cases::{apply_recovery, days_to_diagnosis, CaseSet, ResolvedCase};
pub use decay::{incubation_decay, outdoor_weight, viral_weight, DecayParams};
pub use field::{aggregate_field, base_field, compute_risk_series, RiskSeries};
pub use fractions::{stay_fractions, DayFractions, StayFractionTable, UserDayFractions};
pub use map::{
    parse_risk_map_file_name, read_risk_map, risk_map_file_name, risk_map_from_geojson, risk_map_to_geojson,
    write_risk_map, RiskMap, RISK_MAP_HEADER,
};
pub use region::{region_risk, LocationCategory};
