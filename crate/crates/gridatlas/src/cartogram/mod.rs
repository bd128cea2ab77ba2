//! Density-equalizing map deformation: build a density field on a padded
//! plane lattice, diffuse it to uniformity, advect tracer nodes along the
//! mass-transport velocity, and verify area/population proportionality.

mod density;
mod solver;
mod warp;

pub use density::{build_density, DensityGrid, LatticeSpec};
pub use solver::{solve_cartogram, SolveOpts};
pub use warp::{cartogram_diagnostics, warp_geometry, WarpOutcome, ZoneAreaError};

use crate::grid::GridHeader;

/// Node-centered computation lattice on the projected plane. Node (i, j)
/// sits at (x0 + i·step, y0 + j·step); j increases northward. The interior
/// (excluding `pad` nodes on each side) covers the world box.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub nx: usize,
    pub ny: usize,
    pub pad: usize,
    pub x0: f64,
    pub y0: f64,
    pub step: f64,
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Continuous lattice coordinates of a plane point.
    #[inline]
    pub fn to_lattice(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.x0) / self.step, (y - self.y0) / self.step)
    }

    /// Nearest node to a plane point, clamped into the lattice.
    pub fn node_of(&self, x: f64, y: f64) -> (usize, usize) {
        let (fx, fy) = self.to_lattice(x, y);
        let i = fx.round().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = fy.round().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }
}

/// Cumulative node displacement from t = 0 to convergence, in plane units.
/// Boundary nodes are pinned (displacement exactly zero).
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationField {
    pub lattice: Lattice,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl DeformationField {
    /// Bilinear displacement at a plane point; coordinates off the lattice
    /// clamp to it (the caller counts those).
    pub fn displacement_at(&self, x: f64, y: f64) -> (f64, f64, bool) {
        let (fx, fy) = self.lattice.to_lattice(x, y);
        let clamped = fx < 0.0
            || fy < 0.0
            || fx > (self.lattice.nx - 1) as f64
            || fy > (self.lattice.ny - 1) as f64;
        let fx = fx.clamp(0.0, (self.lattice.nx - 1) as f64);
        let fy = fy.clamp(0.0, (self.lattice.ny - 1) as f64);
        let i0 = (fx.floor() as usize).min(self.lattice.nx - 2);
        let j0 = (fy.floor() as usize).min(self.lattice.ny - 2);
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let at = |v: &Vec<f64>| {
            let idx = |i: usize, j: usize| v[self.lattice.idx(i, j)];
            idx(i0, j0) * (1.0 - tx) * (1.0 - ty)
                + idx(i0 + 1, j0) * tx * (1.0 - ty)
                + idx(i0, j0 + 1) * (1.0 - tx) * ty
                + idx(i0 + 1, j0 + 1) * tx * ty
        };
        (at(&self.dx), at(&self.dy), clamped)
    }

    /// Serialize as a pair of ASCII grids (dx then dy). The header is a
    /// lattice descriptor (origin 0, cellsize 1, row 0 = northernmost node
    /// row); the plane mapping travels in the run's JSON sidecar.
    pub fn to_asc_pair(&self) -> (String, String) {
        let header = GridHeader {
            ncols: self.lattice.nx,
            nrows: self.lattice.ny,
            xll: 0.0,
            yll: 0.0,
            cellsize: 1.0,
            nodata: -9999.0,
        };
        let north_first = |v: &Vec<f64>| -> Vec<f64> {
            let mut out = Vec::with_capacity(v.len());
            for j in (0..self.lattice.ny).rev() {
                out.extend_from_slice(&v[j * self.lattice.nx..(j + 1) * self.lattice.nx]);
            }
            out
        };
        let dx = crate::grid::write_asc_raw(&crate::grid::RawGrid {
            header: header.clone(),
            values: north_first(&self.dx),
        });
        let dy = crate::grid::write_asc_raw(&crate::grid::RawGrid {
            header,
            values: north_first(&self.dy),
        });
        (dx, dy)
    }
}

/// Per-zone area/population proportionality plus solver outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct CartogramDiagnostics {
    pub zones: Vec<ZoneAreaError>,
    pub max_rel_error: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Max |rho − mean|/mean at the last accepted step.
    pub final_deviation: f64,
    /// Deviation after each accepted step (non-increasing).
    pub deviation_history: Vec<f64>,
    /// Worst per-step relative drift of the diffused total mass.
    pub max_mass_rel_err: f64,
}
