//! Population-density field on the computation lattice.

use crate::cartogram::Lattice;
use crate::error::{Error, Result};
use crate::grid::PopGrid;

/// Interior lattice dimensions and padding. Width must be twice the height
/// so lattice cells are square over the world plane.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    pub width: usize,
    pub height: usize,
    pub pad: usize,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        LatticeSpec {
            width: 512,
            height: 256,
            pad: 32,
        }
    }
}

/// Strictly positive density per lattice node, persons per unit plane area.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub lattice: Lattice,
    pub rho: Vec<f64>,
    /// Neutral density used for sea and padding (the mean land density).
    pub rho_sea: f64,
}

/// Rasterize the population onto the lattice by area-weighted overlap:
/// each source cell's mass is split across the lattice cells its rectangle
/// covers, so any source/lattice resolution pairing conserves mass and
/// leaves no holes. Sea and padding carry the global mean land density
/// (neutral buoyancy); land nodes that received no population are floored
/// at mean/1000 so the velocity field -∇ρ/ρ stays finite.
pub fn build_density(grid: &PopGrid, spec: &LatticeSpec) -> Result<DensityGrid> {
    let total = grid.population_total();
    if !(total > 0.0) {
        return Err(Error::EmptyDomain {
            what: "density of a zero-population grid".into(),
        });
    }
    if spec.width < 4 || spec.height < 4 {
        return Err(Error::invalid_params("lattice must be at least 4x4"));
    }
    if spec.width != 2 * spec.height {
        return Err(Error::invalid_params(format!(
            "lattice width {} must be twice the height {} (square cells over the world)",
            spec.width, spec.height
        )));
    }

    let step = 360.0 / spec.width as f64;
    let lattice = Lattice {
        nx: spec.width + 2 * spec.pad,
        ny: spec.height + 2 * spec.pad,
        pad: spec.pad,
        x0: -180.0 - spec.pad as f64 * step + step / 2.0,
        y0: -90.0 - spec.pad as f64 * step + step / 2.0,
        step,
    };

    // Lattice cell i spans [edge(i), edge(i+1)) with edge(i) = x0 - step/2 + i*step.
    let x_edge0 = lattice.x0 - step / 2.0;
    let y_edge0 = lattice.y0 - step / 2.0;
    let h = &grid.header;
    let src_cs = h.cellsize;

    let mut pop = vec![0.0f64; lattice.len()];
    let mut is_land = vec![false; lattice.len()];
    for (r, c, v) in grid.iter_land() {
        let lon0 = h.xll + c as f64 * src_cs;
        let lat1 = h.top_lat() - r as f64 * src_cs;
        let lat0 = lat1 - src_cs;
        let i_lo = (((lon0 - x_edge0) / step).floor().max(0.0)) as usize;
        let i_hi = ((((lon0 + src_cs) - x_edge0) / step).ceil() as usize).min(lattice.nx);
        let j_lo = (((lat0 - y_edge0) / step).floor().max(0.0)) as usize;
        let j_hi = (((lat1 - y_edge0) / step).ceil() as usize).min(lattice.ny);
        let inv_area = 1.0 / (src_cs * src_cs);
        for j in j_lo..j_hi {
            let cy0 = y_edge0 + j as f64 * step;
            let oy = (lat1.min(cy0 + step) - lat0.max(cy0)).max(0.0);
            if oy == 0.0 {
                continue;
            }
            for i in i_lo..i_hi {
                let cx0 = x_edge0 + i as f64 * step;
                let ox = ((lon0 + src_cs).min(cx0 + step) - lon0.max(cx0)).max(0.0);
                if ox == 0.0 {
                    continue;
                }
                let idx = lattice.idx(i, j);
                pop[idx] += v * ox * oy * inv_area;
                is_land[idx] = true;
            }
        }
    }

    let cell_area = step * step;
    let n_land = is_land.iter().filter(|&&l| l).count();
    let mean = total / (n_land as f64 * cell_area);
    let floor = mean * 1e-3;

    let rho = pop
        .iter()
        .zip(&is_land)
        .map(|(&p, &land)| {
            if land {
                (p / cell_area).max(floor)
            } else {
                mean
            }
        })
        .collect();

    Ok(DensityGrid {
        lattice,
        rho,
        rho_sea: mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridHeader;

    fn spec(w: usize, h: usize, pad: usize) -> LatticeSpec {
        LatticeSpec {
            width: w,
            height: h,
            pad,
        }
    }

    #[test]
    fn uniform_land_gives_constant_rho() {
        let h = GridHeader::global(5.0, -9999.0).unwrap();
        let g = PopGrid::filled(h, 100.0);
        let d = build_density(&g, &spec(72, 36, 8)).unwrap();
        // Every interior node receives the same binned mass (72x36 lattice
        // of 5-degree source cells binned 1:1), sea ring gets the mean.
        let first = d.rho[0];
        assert!(d.rho.iter().all(|&r| (r - first).abs() < 1e-9 * first));
        assert!(first > 0.0);
    }

    #[test]
    fn bookkeeping_identity_holds() {
        // No zero-population land cells, so no floor adjustment applies:
        // sum(rho * cell_area) = total * (lattice_area / land_area).
        let h = GridHeader::new(40, 20, -100.0, -40.0, 2.0, -9999.0).unwrap();
        let mut values = vec![0.0; h.len()];
        for (i, v) in values.iter_mut().enumerate() {
            *v = 10.0 + (i % 7) as f64;
        }
        let g = PopGrid::new(h, values).unwrap();
        let d = build_density(&g, &spec(64, 32, 4)).unwrap();
        let cell_area = d.lattice.step * d.lattice.step;
        let sum: f64 = d.rho.iter().map(|r| r * cell_area).sum();
        // Independent land-node count: a lattice cell is land when any
        // source land-cell rectangle overlaps it.
        let step = d.lattice.step;
        let x_edge0 = d.lattice.x0 - step / 2.0;
        let y_edge0 = d.lattice.y0 - step / 2.0;
        let mut nodes = std::collections::HashSet::new();
        for (r, c, _) in g.iter_land() {
            let lon0 = g.header.xll + c as f64 * g.header.cellsize;
            let lat1 = g.header.top_lat() - r as f64 * g.header.cellsize;
            let lat0 = lat1 - g.header.cellsize;
            for j in 0..d.lattice.ny {
                let cy0 = y_edge0 + j as f64 * step;
                if lat1.min(cy0 + step) <= lat0.max(cy0) {
                    continue;
                }
                for i in 0..d.lattice.nx {
                    let cx0 = x_edge0 + i as f64 * step;
                    if (lon0 + g.header.cellsize).min(cx0 + step) > lon0.max(cx0) {
                        nodes.insert((i, j));
                    }
                }
            }
        }
        let n_land = nodes.len();
        let total = g.population_total();
        let expect = total / n_land as f64 * d.lattice.len() as f64;
        assert!(
            (sum - expect).abs() < 1e-6 * expect,
            "sum {sum} vs {expect}"
        );
    }

    #[test]
    fn single_populated_cell_peaks_there() {
        let h = GridHeader::global(5.0, -9999.0).unwrap();
        let mut values = vec![0.0; h.len()];
        values[h.ncols * 18 + 36] = 1e6;
        let g = PopGrid::new(h, values).unwrap();
        let d = build_density(&g, &spec(72, 36, 8)).unwrap();
        let max = d.rho.iter().cloned().fold(0.0, f64::max);
        assert!(max > d.rho_sea * 100.0);
        assert!(d.rho.iter().all(|&r| r > 0.0));
    }

    #[test]
    fn rejects_non_two_to_one_lattice() {
        let h = GridHeader::global(5.0, -9999.0).unwrap();
        let g = PopGrid::filled(h, 1.0);
        assert!(build_density(&g, &spec(100, 40, 8)).is_err());
    }
}
