//! Geometry advection through the deformation field and the area/population
//! proportionality diagnostics.

use std::collections::HashMap;

use crate::cartogram::{CartogramDiagnostics, DeformationField};
use crate::error::{Error, Result};
use crate::grid::{Feature, LonLat, ZoneLayer};
use crate::stats::ZoneStats;

/// Warped layer plus clamp counters.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpOutcome {
    pub layer: ZoneLayer,
    /// Vertices that fell outside the computation lattice (interpolation
    /// clamped to the lattice edge).
    pub clamped_lattice: u64,
    /// Displaced vertices clamped back into the lon/lat world box.
    pub clamped_world: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneAreaError {
    pub id: String,
    pub target_share: f64,
    pub achieved_area_share: f64,
    pub rel_error: f64,
}

/// Displace every vertex by the bilinearly interpolated field. Segments are
/// densified beforehand so no input edge spans more than one lattice cell,
/// which keeps long edges from cutting through folds.
pub fn warp_geometry(zones: &ZoneLayer, field: &DeformationField) -> WarpOutcome {
    let step = field.lattice.step;
    let mut clamped_lattice = 0u64;
    let mut clamped_world = 0u64;

    let features = zones
        .features
        .iter()
        .map(|f| {
            let parts = f
                .parts
                .iter()
                .map(|part| {
                    let dense = densify(part, step);
                    dense
                        .into_iter()
                        .map(|p| {
                            let (dx, dy, off_lattice) = field.displacement_at(p.lon, p.lat);
                            if off_lattice {
                                clamped_lattice += 1;
                            }
                            let lon = p.lon + dx;
                            let lat = p.lat + dy;
                            if !(-180.0..=180.0).contains(&lon) || !(-90.0..=90.0).contains(&lat)
                            {
                                clamped_world += 1;
                            }
                            LonLat {
                                lon: lon.clamp(-180.0, 180.0),
                                lat: lat.clamp(-90.0, 90.0),
                            }
                        })
                        .collect()
                })
                .collect();
            Feature {
                id: f.id.clone(),
                name: f.name.clone(),
                kind: f.kind,
                parts,
            }
        })
        .collect();

    WarpOutcome {
        layer: ZoneLayer { features },
        clamped_lattice,
        clamped_world,
    }
}

/// Insert vertices so consecutive points are at most one lattice cell apart.
fn densify(part: &[LonLat], step: f64) -> Vec<LonLat> {
    let mut out = Vec::with_capacity(part.len());
    for w in part.windows(2) {
        let (a, b) = (w[0], w[1]);
        let d = ((b.lon - a.lon).abs().max((b.lat - a.lat).abs())) / step;
        let n = d.ceil().max(1.0) as usize;
        for k in 0..n {
            let t = k as f64 / n as f64;
            out.push(LonLat {
                lon: a.lon + t * (b.lon - a.lon),
                lat: a.lat + t * (b.lat - a.lat),
            });
        }
    }
    if let Some(&last) = part.last() {
        out.push(last);
    }
    out
}

/// Signed shoelace area of a ring in plane (degree²) units.
fn ring_area(ring: &[LonLat]) -> f64 {
    let mut sum = 0.0;
    for w in ring.windows(2) {
        sum += w[0].lon * w[1].lat - w[1].lon * w[0].lat;
    }
    sum / 2.0
}

/// Plane area of a polygon feature. Rings are summed signed, so holes wound
/// opposite to their outer ring subtract.
pub(crate) fn feature_area(f: &Feature) -> f64 {
    f.parts.iter().map(|r| ring_area(r)).sum::<f64>().abs()
}

/// Compare achieved (shoelace) area shares against population target shares.
/// Zones present in `stats` must exist in the warped layer.
pub fn cartogram_diagnostics(
    warped: &ZoneLayer,
    stats: &ZoneStats,
) -> Result<CartogramDiagnostics> {
    let by_id: HashMap<&str, &Feature> = warped
        .features
        .iter()
        .map(|f| (f.id.as_str(), f))
        .collect();
    let missing: Vec<String> = stats
        .zones
        .iter()
        .filter(|z| !by_id.contains_key(z.id.as_str()))
        .map(|z| z.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::JoinMismatch { missing });
    }

    let pop_total: f64 = stats.zones.iter().map(|z| z.population).sum();
    if !(pop_total > 0.0) {
        return Err(Error::EmptyDomain {
            what: "diagnostics over zones with zero population".into(),
        });
    }
    let with_target: Vec<_> = stats.zones.iter().filter(|z| z.population > 0.0).collect();
    let area_total: f64 = with_target
        .iter()
        .map(|z| feature_area(by_id[z.id.as_str()]))
        .sum();

    let mut zones = Vec::with_capacity(with_target.len());
    let mut max_rel_error = 0.0f64;
    for z in with_target {
        let target_share = z.population / pop_total;
        let achieved_area_share = feature_area(by_id[z.id.as_str()]) / area_total;
        let rel_error = (achieved_area_share - target_share).abs() / target_share;
        max_rel_error = max_rel_error.max(rel_error);
        zones.push(ZoneAreaError {
            id: z.id.clone(),
            target_share,
            achieved_area_share,
            rel_error,
        });
    }

    Ok(CartogramDiagnostics {
        zones,
        max_rel_error,
        iterations: 0,
        converged: true,
        final_deviation: 0.0,
        deviation_history: Vec::new(),
        max_mass_rel_err: 0.0,
    })
}

impl CartogramDiagnostics {
    /// Merge solver outcome into zone diagnostics.
    pub fn with_solver(mut self, solver: &CartogramDiagnostics) -> Self {
        self.iterations = solver.iterations;
        self.converged = solver.converged;
        self.final_deviation = solver.final_deviation;
        self.deviation_history = solver.deviation_history.clone();
        self.max_mass_rel_err = solver.max_mass_rel_err;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartogram::{build_density, solve_cartogram, LatticeSpec, SolveOpts};
    use crate::grid::{FeatureKind, GridHeader, PopGrid};
    use crate::stats::{ZoneStat, ZoneStats};

    fn rect(id: &str, lon0: f64, lat0: f64, lon1: f64, lat1: f64) -> Feature {
        Feature {
            id: id.into(),
            name: id.into(),
            kind: FeatureKind::Polygons,
            parts: vec![vec![
                LonLat::new(lon0, lat0).unwrap(),
                LonLat::new(lon1, lat0).unwrap(),
                LonLat::new(lon1, lat1).unwrap(),
                LonLat::new(lon0, lat1).unwrap(),
                LonLat::new(lon0, lat0).unwrap(),
            ]],
        }
    }

    fn identity_field(nx: usize, ny: usize) -> DeformationField {
        let step = 360.0 / (nx - 8) as f64;
        DeformationField {
            lattice: crate::cartogram::Lattice {
                nx,
                ny,
                pad: 4,
                x0: -180.0 - 4.0 * step + step / 2.0,
                y0: -90.0 - 4.0 * step + step / 2.0,
                step,
            },
            dx: vec![0.0; nx * ny],
            dy: vec![0.0; nx * ny],
        }
    }

    #[test]
    fn identity_field_preserves_geometry() {
        let zones = ZoneLayer::new(vec![rect("a", -50.0, -20.0, 40.0, 30.0)]).unwrap();
        let field = identity_field(40, 24);
        let out = warp_geometry(&zones, &field);
        assert_eq!(out.clamped_lattice, 0);
        let part = &out.layer.features[0].parts[0];
        assert_eq!(part.first(), part.last()); // ring still closed
        assert!(part.len() > 5); // densified
        let orig_area = feature_area(&zones.features[0]);
        let new_area = feature_area(&out.layer.features[0]);
        assert!((orig_area - new_area).abs() < 1e-9);
        for p in part {
            assert!(p.lon >= -50.0 - 1e-12 && p.lon <= 40.0 + 1e-12);
            assert!(p.lat >= -20.0 - 1e-12 && p.lat <= 30.0 + 1e-12);
        }
    }

    #[test]
    fn uniform_translation_shifts_all_vertices() {
        let zones = ZoneLayer::new(vec![rect("a", -10.0, -10.0, 10.0, 10.0)]).unwrap();
        let mut field = identity_field(40, 24);
        for v in field.dx.iter_mut() {
            *v = 3.0;
        }
        for v in field.dy.iter_mut() {
            *v = -2.0;
        }
        let out = warp_geometry(&zones, &field);
        let orig = densify(&zones.features[0].parts[0], field.lattice.step);
        let new = &out.layer.features[0].parts[0];
        assert_eq!(new.first(), new.last());
        assert_eq!(orig.len(), new.len());
        for (p, q) in orig.iter().zip(new) {
            assert!((q.lon - (p.lon + 3.0)).abs() < 1e-12);
            assert!((q.lat - (p.lat - 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_cartogram_has_zero_error() {
        // Two rectangles whose areas already match their population shares.
        let zones = ZoneLayer::new(vec![
            rect("big", -180.0, 0.0, 180.0, 90.0),
            rect("small", -180.0, -45.0, 180.0, 0.0),
        ])
        .unwrap();
        let stats = ZoneStats {
            zones: vec![
                ZoneStat {
                    id: "big".into(),
                    name: "big".into(),
                    population: 200.0,
                    cell_count: 1,
                    area_km2: 0.0,
                },
                ZoneStat {
                    id: "small".into(),
                    name: "small".into(),
                    population: 100.0,
                    cell_count: 1,
                    area_km2: 0.0,
                },
            ],
            unassigned_population: 0.0,
            unassigned_cells: 0,
            grid_total: 300.0,
        };
        let d = cartogram_diagnostics(&zones, &stats).unwrap();
        assert!(d.max_rel_error < 1e-12);
    }

    #[test]
    fn untransformed_world_error_sign_matches_imbalance() {
        // Equal areas, unequal populations: the heavy zone is
        // under-represented (achieved < target), the light one over.
        let zones = ZoneLayer::new(vec![
            rect("heavy", -180.0, 0.0, 180.0, 60.0),
            rect("light", -180.0, -60.0, 180.0, 0.0),
        ])
        .unwrap();
        let stats = ZoneStats {
            zones: vec![
                ZoneStat {
                    id: "heavy".into(),
                    name: "heavy".into(),
                    population: 75.0,
                    cell_count: 1,
                    area_km2: 0.0,
                },
                ZoneStat {
                    id: "light".into(),
                    name: "light".into(),
                    population: 25.0,
                    cell_count: 1,
                    area_km2: 0.0,
                },
            ],
            unassigned_population: 0.0,
            unassigned_cells: 0,
            grid_total: 100.0,
        };
        let d = cartogram_diagnostics(&zones, &stats).unwrap();
        let heavy = d.zones.iter().find(|z| z.id == "heavy").unwrap();
        let light = d.zones.iter().find(|z| z.id == "light").unwrap();
        assert!(heavy.achieved_area_share < heavy.target_share);
        assert!(light.achieved_area_share > light.target_share);
    }

    #[test]
    fn join_mismatch_lists_missing_ids() {
        let zones = ZoneLayer::new(vec![rect("a", 0.0, 0.0, 10.0, 10.0)]).unwrap();
        let stats = ZoneStats {
            zones: vec![ZoneStat {
                id: "ghost".into(),
                name: "ghost".into(),
                population: 1.0,
                cell_count: 1,
                area_km2: 0.0,
            }],
            unassigned_population: 0.0,
            unassigned_cells: 0,
            grid_total: 1.0,
        };
        match cartogram_diagnostics(&zones, &stats) {
            Err(Error::JoinMismatch { missing }) => assert_eq!(missing, vec!["ghost".to_string()]),
            other => panic!("expected join error, got {other:?}"),
        }
    }

    /// Two-band world: band A (lat 0..60) holds 75% of the mass on 50% of
    /// the land area, band B (lat -60..0) the rest; polar caps are sea.
    /// After solving and warping, A's area share must be 0.75 ± 0.03.
    #[test]
    fn two_band_world_reaches_target_shares() {
        let h = GridHeader::global(2.0, -9999.0).unwrap(); // 180x90 cells
        let values: Vec<f64> = (0..h.len())
            .map(|k| {
                let row = k / h.ncols;
                let lat = 89.0 - 2.0 * row as f64; // centroid latitude
                if lat > 0.0 && lat < 60.0 {
                    90.0
                } else if lat > -60.0 && lat < 0.0 {
                    30.0
                } else {
                    -9999.0
                }
            })
            .collect();
        let g = PopGrid::new(h, values).unwrap();
        let d = build_density(
            &g,
            &LatticeSpec {
                width: 256,
                height: 128,
                pad: 24,
            },
        )
        .unwrap();
        let (field, sdiag) = solve_cartogram(&d, &SolveOpts::default()).unwrap();
        assert!(sdiag.converged, "solver did not converge");

        let zones = ZoneLayer::new(vec![
            rect("north", -180.0, 0.0, 180.0, 60.0),
            rect("south", -180.0, -60.0, 180.0, 0.0),
        ])
        .unwrap();
        let out = warp_geometry(&zones, &field);
        let stats = ZoneStats {
            zones: vec![
                ZoneStat {
                    id: "north".into(),
                    name: "north".into(),
                    population: 75.0,
                    cell_count: 1,
                    area_km2: 0.0,
                },
                ZoneStat {
                    id: "south".into(),
                    name: "south".into(),
                    population: 25.0,
                    cell_count: 1,
                    area_km2: 0.0,
                },
            ],
            unassigned_population: 0.0,
            unassigned_cells: 0,
            grid_total: 100.0,
        };
        let diag = cartogram_diagnostics(&out.layer, &stats)
            .unwrap()
            .with_solver(&sdiag);
        let north = diag.zones.iter().find(|z| z.id == "north").unwrap();
        assert!(
            (north.achieved_area_share - 0.75).abs() <= 0.03,
            "north share {}",
            north.achieved_area_share
        );
        assert!(diag.converged);
    }
}
