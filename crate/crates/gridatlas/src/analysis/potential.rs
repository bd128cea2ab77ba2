//! Stewart potential smoothing and its derivatives: the glocal relative
//! index and the demographic-voids mask.

use rayon::prelude::*;

use crate::analysis::lon_halfwindow_deg;
use crate::error::{Error, Result};
use crate::grid::{cell_centroid, haversine_km, GridHeader, LonLat, PopGrid, KM_PER_DEG};

/// Distance-decay kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Exponential,
    Pareto,
}

impl KernelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelKind::Exponential => "exponential",
            KernelKind::Pareto => "pareto",
        }
    }
}

/// Interaction parameters. `span_km` is the distance at which a mass's
/// weight halves; contributions beyond `cutoff_km` are dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams {
    pub function: KernelKind,
    pub span_km: f64,
    pub beta: f64,
    pub cutoff_km: f64,
}

impl PotentialParams {
    pub fn new(function: KernelKind, span_km: f64, beta: f64, cutoff_km: f64) -> Result<Self> {
        if !(span_km > 0.0) {
            return Err(Error::invalid_params(format!("span must be > 0, got {span_km}")));
        }
        if !(beta > 0.0) {
            return Err(Error::invalid_params(format!("beta must be > 0, got {beta}")));
        }
        if cutoff_km < span_km {
            return Err(Error::invalid_params(format!(
                "cutoff {cutoff_km} km is smaller than span {span_km} km"
            )));
        }
        Ok(PotentialParams {
            function,
            span_km,
            beta,
            cutoff_km,
        })
    }

    /// Default kernel: exponential, beta = 2, cutoff = 3×span.
    pub fn exponential(span_km: f64) -> Result<Self> {
        Self::new(KernelKind::Exponential, span_km, 2.0, 3.0 * span_km)
    }

    /// Interaction weight at distance `d_km`; f(0) = 1, f(span) = 1/2.
    #[inline]
    pub fn weight(&self, d_km: f64) -> f64 {
        match self.function {
            KernelKind::Exponential => {
                let alpha = std::f64::consts::LN_2 / self.span_km.powf(self.beta);
                (-alpha * d_km.powf(self.beta)).exp()
            }
            KernelKind::Pareto => {
                let alpha = (2f64.powf(1.0 / self.beta) - 1.0) / self.span_km;
                (1.0 + alpha * d_km).powf(-self.beta)
            }
        }
    }
}

/// Smoothed mass field on an evaluation lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSurface {
    pub header: GridHeader,
    pub values: Vec<f64>,
}

impl PotentialSurface {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// (potential, weight-sum) pairs at arbitrary evaluation points.
///
/// V(p) = Σ mᵢ·f(d(p, cᵢ)) and W(p) = Σ f(d(p, cᵢ)) over land cells within
/// the cutoff, accumulated in fixed (row, col) source order so results are
/// identical no matter how the points are distributed over threads.
pub fn potential_at_points(
    grid: &PopGrid,
    params: &PotentialParams,
    points: &[LonLat],
) -> Vec<(f64, f64)> {
    let h = &grid.header;
    let top = h.top_lat();
    let cutoff = params.cutoff_km;
    let global = h.ncols as f64 * h.cellsize >= 360.0 - 1e-9;

    // Per-row centroid latitudes and per-column longitudes.
    let row_lat: Vec<f64> = (0..h.nrows)
        .map(|r| top - (r as f64 + 0.5) * h.cellsize)
        .collect();
    let col_lon: Vec<f64> = (0..h.ncols)
        .map(|c| h.xll + (c as f64 + 0.5) * h.cellsize)
        .collect();

    points
        .par_iter()
        .map(|&p| {
            let mut v = 0.0;
            let mut w = 0.0;
            let (r_lo, r_hi) = if cutoff.is_finite() {
                let dphi = cutoff / KM_PER_DEG;
                let r_of = |lat: f64| (top - lat) / h.cellsize - 0.5;
                let lo = r_of(p.lat + dphi).floor() as isize - 1;
                let hi = r_of(p.lat - dphi).ceil() as isize + 1;
                if hi < 0 || lo >= h.nrows as isize {
                    return (0.0, 0.0); // window entirely off the grid
                }
                (lo.max(0) as usize, hi.min(h.nrows as isize - 1) as usize)
            } else {
                (0, h.nrows - 1)
            };
            for r in r_lo..=r_hi {
                let lat = row_lat[r];
                let span_cols = if cutoff.is_finite() {
                    let max_abs = p.lat.abs().max(lat.abs());
                    lon_halfwindow_deg(max_abs, cutoff)
                } else {
                    None
                };
                let (c_lo, c_hi) = match span_cols {
                    None => (0, h.ncols - 1),
                    Some(dl) => {
                        let c_of = |lon: f64| (lon - h.xll) / h.cellsize - 0.5;
                        let lo = c_of(p.lon - dl).floor() as isize - 1;
                        let hi = c_of(p.lon + dl).ceil() as isize + 1;
                        if global && (lo < 0 || hi >= h.ncols as isize) {
                            // window wraps the antimeridian: scan the row
                            (0, h.ncols - 1)
                        } else if hi < 0 || lo >= h.ncols as isize {
                            continue; // row window entirely off the grid
                        } else {
                            (lo.max(0) as usize, hi.min(h.ncols as isize - 1) as usize)
                        }
                    }
                };
                for c in c_lo..=c_hi {
                    let m = grid.values[r * h.ncols + c];
                    if m == h.nodata {
                        continue;
                    }
                    let d = haversine_km(
                        p,
                        LonLat {
                            lon: col_lon[c],
                            lat,
                        },
                    );
                    if d <= cutoff {
                        let f = params.weight(d);
                        v += m * f;
                        w += f;
                    }
                }
            }
            (v, w)
        })
        .collect()
}

/// Stewart potential evaluated at the centroids of `out_header`'s cells.
pub fn stewart_potential(
    grid: &PopGrid,
    params: &PotentialParams,
    out_header: &GridHeader,
) -> Result<PotentialSurface> {
    if !(grid.population_total() > 0.0) {
        return Err(Error::EmptyDomain {
            what: "potential of a zero-population grid".into(),
        });
    }
    let points: Vec<LonLat> = (0..out_header.nrows)
        .flat_map(|r| (0..out_header.ncols).map(move |c| (r, c)))
        .map(|(r, c)| cell_centroid(out_header, r, c))
        .collect::<Result<_>>()?;
    let values = potential_at_points(grid, params, &points)
        .into_iter()
        .map(|(v, _)| v)
        .collect();
    Ok(PotentialSurface {
        header: out_header.clone(),
        values,
    })
}

/// Glocal relative index: cell value over the distance-weighted mean of its
/// neighborhood, ratioᵢ = mᵢ·W(cᵢ)/V(cᵢ). Nodata cells stay nodata; a cell
/// whose neighborhood carries no mass (V = 0) gets ratio 0.
pub fn local_relative_index(grid: &PopGrid, params: &PotentialParams) -> Result<PopGrid> {
    if !(grid.population_total() > 0.0) {
        return Err(Error::EmptyDomain {
            what: "glocal index of a zero-population grid".into(),
        });
    }
    let land: Vec<(usize, usize, f64)> = grid.iter_land().collect();
    let points: Vec<LonLat> = land
        .iter()
        .map(|&(r, c, _)| cell_centroid(&grid.header, r, c))
        .collect::<Result<_>>()?;
    let sums = potential_at_points(grid, params, &points);

    let mut values = vec![grid.header.nodata; grid.header.len()];
    for ((r, c, m), (v, w)) in land.into_iter().zip(sums) {
        let i = r * grid.header.ncols + c;
        values[i] = if w == 0.0 {
            grid.header.nodata
        } else if v == 0.0 {
            0.0
        } else {
            m * w / v
        };
    }
    Ok(PopGrid {
        header: grid.header.clone(),
        values,
    })
}

/// Demographic-voids mask: 1 where the potential at a land cell is below
/// `threshold`, 0 elsewhere on land, nodata on ocean.
pub fn empty_quarters(
    grid: &PopGrid,
    params: &PotentialParams,
    threshold: f64,
) -> Result<PopGrid> {
    if !(threshold >= 0.0) {
        return Err(Error::invalid_params(format!(
            "threshold must be >= 0, got {threshold}"
        )));
    }
    let land: Vec<(usize, usize, f64)> = grid.iter_land().collect();
    let points: Vec<LonLat> = land
        .iter()
        .map(|&(r, c, _)| cell_centroid(&grid.header, r, c))
        .collect::<Result<_>>()?;
    let sums = potential_at_points(grid, params, &points);

    let mut values = vec![grid.header.nodata; grid.header.len()];
    for ((r, c, _), (v, _)) in land.into_iter().zip(sums) {
        values[r * grid.header.ncols + c] = if v < threshold { 1.0 } else { 0.0 };
    }
    Ok(PopGrid {
        header: grid.header.clone(),
        values,
    })
}
