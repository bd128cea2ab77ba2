//! Link graph of heavy places: every unordered pair of qualifying cells
//! closer than a distance threshold becomes an edge.

use crate::error::{Error, Result};
use crate::grid::{cell_centroid, haversine_km, LonLat, PopGrid, KM_PER_DEG};

/// Distance definition for the edge threshold. Great-circle is the default;
/// planar measures straight-line distance on the equirectangular map plane
/// (1 degree = 111.195 km), which stretches high-latitude thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMetric {
    GreatCircle,
    Planar,
}

impl DistanceMetric {
    pub fn distance_km(&self, a: LonLat, b: LonLat) -> f64 {
        match self {
            DistanceMetric::GreatCircle => haversine_km(a, b),
            DistanceMetric::Planar => {
                let dx = a.lon - b.lon;
                let dy = a.lat - b.lat;
                (dx * dx + dy * dy).sqrt() * KM_PER_DEG
            }
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            DistanceMetric::GreatCircle => "great-circle",
            DistanceMetric::Planar => "planar",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSet {
    /// (position, mass) of qualifying cells, in (row, col) order.
    pub nodes: Vec<(LonLat, f64)>,
    /// (i, j, distance_km) with i < j and distance < the threshold.
    pub edges: Vec<(usize, usize, f64)>,
}

pub fn build_links(
    grid: &PopGrid,
    min_mass: f64,
    max_dist_km: f64,
    metric: DistanceMetric,
) -> Result<LinkSet> {
    if !(min_mass > 0.0) {
        return Err(Error::invalid_params(format!(
            "min_mass must be > 0, got {min_mass}"
        )));
    }
    if !(max_dist_km > 0.0) {
        return Err(Error::invalid_params(format!(
            "max_dist must be > 0, got {max_dist_km}"
        )));
    }
    let mut nodes = Vec::new();
    for (r, c, v) in grid.iter_land() {
        if v >= min_mass {
            nodes.push((cell_centroid(&grid.header, r, c)?, v));
        }
    }
    let mut edges = Vec::new();
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            let d = metric.distance_km(nodes[i].0, nodes[j].0);
            if d < max_dist_km {
                edges.push((i, j, d));
            }
        }
    }
    Ok(LinkSet { nodes, edges })
}
