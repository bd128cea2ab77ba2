//! Coastal proximity mask: which land cells lie within a distance of a
//! coastline, and what share of the population they carry.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::analysis::lon_halfwindow_deg;
use crate::error::{Error, Result};
use crate::grid::{haversine_km, LonLat, PopGrid, ZoneLayer, KM_PER_DEG};

/// Mask cells whose centroid lies within `max_dist_km` of any coastline
/// segment. Point-to-segment distance is evaluated on the sphere by dense
/// subdivision: every segment is split so sub-segments are at most a
/// quarter cell long (in km at the equator). Returns the 0/1 mask grid
/// (nodata preserved) and the masked population share.
pub fn coastal_mask(
    grid: &PopGrid,
    coast: &ZoneLayer,
    max_dist_km: f64,
) -> Result<(PopGrid, f64)> {
    if !coast.all_polylines() {
        return Err(Error::WrongKind {
            expected: "polyline layer",
            got: "layer with polygon features",
        });
    }
    if !(max_dist_km > 0.0) {
        return Err(Error::invalid_params(format!(
            "max_dist must be > 0, got {max_dist_km}"
        )));
    }

    let samples = densify_coast(coast, grid.header.cellsize);
    if samples.is_empty() {
        return Err(Error::EmptyDomain {
            what: "coast layer has no segments".into(),
        });
    }

    // Spatial hash over sample points. Bucket size of one lat window keeps
    // the search to a handful of buckets away from the poles.
    let bucket_deg = (max_dist_km / KM_PER_DEG).max(grid.header.cellsize);
    let key = |p: &LonLat| {
        (
            (p.lat / bucket_deg).floor() as i32,
            (p.lon / bucket_deg).floor() as i32,
        )
    };
    let mut buckets: HashMap<(i32, i32), Vec<LonLat>> = HashMap::new();
    for p in &samples {
        buckets.entry(key(p)).or_default().push(*p);
    }

    let land: Vec<(usize, usize, f64)> = grid.iter_land().collect();
    let dphi = max_dist_km / KM_PER_DEG;
    let flags: Vec<bool> = land
        .par_iter()
        .map(|&(r, c, _)| {
            let p = grid.centroid(r, c).expect("land cell in range");
            let lat_lo = ((p.lat - dphi) / bucket_deg).floor() as i32;
            let lat_hi = ((p.lat + dphi) / bucket_deg).floor() as i32;
            let max_abs_lat = (p.lat.abs() + dphi).min(90.0);
            let within = |q: &LonLat| haversine_km(p, *q) <= max_dist_km;
            let scan = |lon_lo: f64, lon_hi: f64| {
                let lo = (lon_lo / bucket_deg).floor() as i32;
                let hi = (lon_hi / bucket_deg).floor() as i32;
                (lat_lo..=lat_hi).any(|bl| {
                    (lo..=hi).any(|bo| {
                        buckets
                            .get(&(bl, bo))
                            .is_some_and(|pts| pts.iter().any(within))
                    })
                })
            };
            match lon_halfwindow_deg(max_abs_lat, max_dist_km) {
                None => scan(-180.0, 180.0),
                Some(dl) => {
                    // Windows that spill over the antimeridian wrap around.
                    scan((p.lon - dl).max(-180.0), (p.lon + dl).min(180.0))
                        || (p.lon - dl < -180.0 && scan(p.lon - dl + 360.0, 180.0))
                        || (p.lon + dl > 180.0 && scan(-180.0, p.lon + dl - 360.0))
                }
            }
        })
        .collect();

    let mut values = vec![grid.header.nodata; grid.header.len()];
    let mut masked_pop = 0.0;
    for ((r, c, v), flag) in land.iter().zip(&flags) {
        values[r * grid.header.ncols + c] = if *flag { 1.0 } else { 0.0 };
        if *flag {
            masked_pop += v;
        }
    }
    let total = grid.population_total();
    let share = if total > 0.0 { masked_pop / total } else { 0.0 };
    Ok((
        PopGrid {
            header: grid.header.clone(),
            values,
        },
        share,
    ))
}

/// Sample every coast segment at sub-segment lengths <= cellsize/4
/// (km-equivalent at the equator), endpoints included.
pub(crate) fn densify_coast(coast: &ZoneLayer, cellsize_deg: f64) -> Vec<LonLat> {
    let step_km = cellsize_deg * KM_PER_DEG / 4.0;
    let mut out = Vec::new();
    for f in &coast.features {
        for path in &f.parts {
            for w in path.windows(2) {
                let (a, b) = (w[0], w[1]);
                let len = haversine_km(a, b);
                let n = (len / step_km).ceil().max(1.0) as usize;
                for k in 0..n {
                    let t = k as f64 / n as f64;
                    out.push(LonLat {
                        lon: a.lon + t * (b.lon - a.lon),
                        lat: a.lat + t * (b.lat - a.lat),
                    });
                }
            }
            if let Some(&last) = path.last() {
                out.push(last);
            }
        }
    }
    out
}
