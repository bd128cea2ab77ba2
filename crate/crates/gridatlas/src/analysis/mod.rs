//! Analytical transformations over the population grid: potential
//! smoothing, isolines, glocal indices, demographic voids, link graphs,
//! coastal masks, block aggregation, and hexagonal binning.

mod blocks;
mod coast;
mod hex;
mod isolines;
mod links;
mod potential;

pub use blocks::aggregate_blocks;
pub use coast::coastal_mask;
pub use hex::{hex_bin, HexCell, HexLayer};
pub use isolines::{extract_isolines, Isoline, IsolineSet, LevelIsolines};
pub use links::{build_links, DistanceMetric, LinkSet};
pub use potential::{
    empty_quarters, local_relative_index, potential_at_points, stewart_potential, KernelKind,
    PotentialParams, PotentialSurface,
};

use crate::grid::EARTH_RADIUS_KM;

/// Longitude half-window (degrees) that certainly contains every point
/// within `dist_km` of a point at latitude <= `max_abs_lat_deg`.
/// Derived from the haversine identity, so it is a true superset bound:
/// d <= c implies |sin(dlam/2)| <= sin(c/2R)/cos(phi_max).
/// Returns `None` when the whole longitude range must be searched.
pub(crate) fn lon_halfwindow_deg(max_abs_lat_deg: f64, dist_km: f64) -> Option<f64> {
    if !dist_km.is_finite() {
        return None;
    }
    let half = dist_km / (2.0 * EARTH_RADIUS_KM);
    if half >= std::f64::consts::FRAC_PI_2 {
        return None;
    }
    let cos_phi = max_abs_lat_deg.min(90.0).to_radians().cos();
    if cos_phi <= 1e-12 {
        return None;
    }
    let s = half.sin() / cos_phi;
    if s >= 1.0 {
        None
    } else {
        Some(2.0 * s.asin().to_degrees())
    }
}
