//! Hexagonal binning on the projected (lon/lat degree) plane.
//!
//! Flat-top hexagons on an axial lattice. Every land cell's mass goes to
//! the hexagon whose center is nearest its centroid (ties to the lower
//! (q, r) pair), so the layer total equals the grid total.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::grid::{LonLat, PopGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct HexCell {
    pub q: i32,
    pub r: i32,
    /// Center clamped into lon/lat range (centers of near-pole hexes can
    /// fall outside the world box).
    pub center: LonLat,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HexLayer {
    /// Corner-to-corner width of each hexagon, in plane degrees.
    pub width_deg: f64,
    /// Plane position of the (0, 0) hex center.
    pub origin: (f64, f64),
    /// Cells sorted by (q, r).
    pub cells: Vec<HexCell>,
}

impl HexLayer {
    pub fn size(&self) -> f64 {
        self.width_deg / 2.0
    }

    /// Plane coordinates of a hex center.
    pub fn center_plane(&self, q: i32, r: i32) -> (f64, f64) {
        let s = self.size();
        (
            self.origin.0 + 1.5 * s * q as f64,
            self.origin.1 + 3f64.sqrt() * s * (r as f64 + q as f64 / 2.0),
        )
    }

    /// The six corners of a hex in plane coordinates, flat-top orientation.
    pub fn corners_plane(&self, q: i32, r: i32) -> [(f64, f64); 6] {
        let (cx, cy) = self.center_plane(q, r);
        let s = self.size();
        std::array::from_fn(|k| {
            let ang = std::f64::consts::PI / 3.0 * k as f64;
            (cx + s * ang.cos(), cy + s * ang.sin())
        })
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().map(|c| c.value).sum()
    }
}

/// Nearest hex center to a plane point, ties to the lower (q, r).
fn assign(layer: &HexLayer, x: f64, y: f64) -> (i32, i32) {
    let s = layer.size();
    let px = x - layer.origin.0;
    let py = y - layer.origin.1;
    // fractional axial coordinates, then cube rounding
    let qf = 2.0 / 3.0 * px / s;
    let rf = (-1.0 / 3.0 * px + 3f64.sqrt() / 3.0 * py) / s;
    let (q0, r0) = cube_round(qf, rf);

    let mut best: Option<((i32, i32), f64)> = None;
    for (dq, dr) in [(0, 0), (1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)] {
        let cand = (q0 + dq, r0 + dr);
        let (cx, cy) = layer.center_plane(cand.0, cand.1);
        let d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        best = match best {
            None => Some((cand, d2)),
            Some((bc, bd)) => {
                if d2 < bd || (d2 == bd && cand < bc) {
                    Some((cand, d2))
                } else {
                    Some((bc, bd))
                }
            }
        };
    }
    best.unwrap().0
}

fn cube_round(qf: f64, rf: f64) -> (i32, i32) {
    let sf = -qf - rf;
    let mut q = qf.round();
    let mut r = rf.round();
    let s = sf.round();
    let dq = (q - qf).abs();
    let dr = (r - rf).abs();
    let ds = (s - sf).abs();
    if dq > dr && dq > ds {
        q = -r - s;
    } else if dr > ds {
        r = -q - s;
    }
    (q as i32, r as i32)
}

pub fn hex_bin(grid: &PopGrid, hex_width_deg: f64) -> Result<HexLayer> {
    if !(hex_width_deg > 0.0) {
        return Err(Error::invalid_params(format!(
            "hex width must be > 0, got {hex_width_deg}"
        )));
    }
    let mut layer = HexLayer {
        width_deg: hex_width_deg,
        origin: (0.0, 0.0),
        cells: Vec::new(),
    };
    let mut bins: BTreeMap<(i32, i32), f64> = BTreeMap::new();
    for (row, col, v) in grid.iter_land() {
        let p = grid.centroid(row, col)?;
        let key = assign(&layer, p.lon, p.lat);
        *bins.entry(key).or_insert(0.0) += v;
    }
    layer.cells = bins
        .into_iter()
        .map(|((q, r), value)| {
            let (cx, cy) = layer.center_plane(q, r);
            HexCell {
                q,
                r,
                center: LonLat {
                    lon: cx.clamp(-180.0, 180.0),
                    lat: cy.clamp(-90.0, 90.0),
                },
                value,
            }
        })
        .collect();
    Ok(layer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridHeader;
    use crate::rng::SplitMix64;

    fn random_grid(seed: u64) -> PopGrid {
        let h = GridHeader::new(24, 16, -12.0, -8.0, 1.0, -9999.0).unwrap();
        let mut rng = SplitMix64::new(seed);
        let values = (0..h.len())
            .map(|_| {
                if rng.next_f64() < 0.1 {
                    -9999.0
                } else {
                    (rng.next_f64() * 500.0).round()
                }
            })
            .collect();
        PopGrid::new(h, values).unwrap()
    }

    #[test]
    fn huge_hex_swallows_everything() {
        let g = random_grid(1);
        let layer = hex_bin(&g, 10_000.0).unwrap();
        assert_eq!(layer.cells.len(), 1);
        assert_eq!(layer.total(), g.population_total());
    }

    #[test]
    fn conservation_exact_for_integer_masses() {
        for seed in 0..5 {
            let g = random_grid(seed);
            let layer = hex_bin(&g, 3.0).unwrap();
            assert_eq!(layer.total(), g.population_total(), "seed {seed}");
        }
    }

    #[test]
    fn centroid_at_hex_center_assigned_there() {
        let layer = HexLayer {
            width_deg: 4.0,
            origin: (0.0, 0.0),
            cells: vec![],
        };
        let (cx, cy) = layer.center_plane(3, -2);
        assert_eq!(assign(&layer, cx, cy), (3, -2));
        assert_eq!(assign(&layer, 0.0, 0.0), (0, 0));
    }

    #[test]
    fn assignment_is_nearest_center() {
        let layer = HexLayer {
            width_deg: 2.0,
            origin: (0.0, 0.0),
            cells: vec![],
        };
        let mut rng = SplitMix64::new(9);
        for _ in 0..500 {
            let x = (rng.next_f64() - 0.5) * 20.0;
            let y = (rng.next_f64() - 0.5) * 20.0;
            let (q, r) = assign(&layer, x, y);
            let (cx, cy) = layer.center_plane(q, r);
            let chosen = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
            // No other center among a neighborhood may be strictly closer.
            for dq in -2..=2 {
                for dr in -2..=2 {
                    let (ox, oy) = layer.center_plane(q + dq, r + dr);
                    let other = ((x - ox).powi(2) + (y - oy).powi(2)).sqrt();
                    assert!(other >= chosen - 1e-9);
                }
            }
        }
    }

    #[test]
    fn cells_sorted_by_axial_coords() {
        let g = random_grid(4);
        let layer = hex_bin(&g, 3.0).unwrap();
        for w in layer.cells.windows(2) {
            assert!((w[0].q, w[0].r) < (w[1].q, w[1].r));
        }
    }
}
