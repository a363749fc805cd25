//! Geodesic interpolation with density bounds.

mod bip;
mod dyadic;
mod midpoint;
mod optgeo;
mod pmgh;

pub use bip::{bip_profile_estimate, bip_verify, cos_product, BipReport, PairOutcome, PairStatus, ProfileFunction};
pub use dyadic::{
    dyadic_geodesic, k_minus, spread_factor, DyadicGeodesic, LevelRecord, DEFAULT_LEVELS, DENSITY_SLACK, EXCESS_TOL,
};
pub use midpoint::{
    intermediate_feasibility, midpoint_excess_min, min_midpoint_density, redistribute, IntermediateReport,
    MidpointResult, MEMBERSHIP_TOL,
};
pub use optgeo::{optgeo_plan, OptGeo, OptGeoPlan};
pub use pmgh::{
    pmgh_stability_check, pmgh_transfer, EmbeddedSpace, PairMargins, StabilityLevel, StabilityReport, TransferResult,
    TransferSummary,
};
