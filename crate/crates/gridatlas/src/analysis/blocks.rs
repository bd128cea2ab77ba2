//! Block aggregation: sum factor×factor groups of cells into a coarser grid.

use crate::error::{Error, Result};
use crate::grid::{GridHeader, PopGrid};

/// Aggregate the grid into factor×factor blocks anchored at the north-west
/// corner. Nodata cells contribute nothing; a block that is entirely nodata
/// stays nodata. Grid dimensions that are not divisible by the factor leave
/// trailing partial blocks, aggregated as-is (the output header then extends
/// past the source extent by less than one block).
pub fn aggregate_blocks(grid: &PopGrid, factor: usize) -> Result<PopGrid> {
    if factor < 1 {
        return Err(Error::invalid_params("factor must be >= 1"));
    }
    if factor == 1 {
        return Ok(grid.clone());
    }
    let h = &grid.header;
    let ncols = h.ncols.div_ceil(factor);
    let nrows = h.nrows.div_ceil(factor);
    let cellsize = h.cellsize * factor as f64;
    let header = GridHeader {
        ncols,
        nrows,
        xll: h.xll,
        yll: h.top_lat() - nrows as f64 * cellsize,
        cellsize,
        nodata: h.nodata,
    };

    let mut values = vec![header.nodata; header.len()];
    for br in 0..nrows {
        for bc in 0..ncols {
            let mut sum = 0.0;
            let mut any_land = false;
            for r in (br * factor)..((br + 1) * factor).min(h.nrows) {
                for c in (bc * factor)..((bc + 1) * factor).min(h.ncols) {
                    let v = grid.values[r * h.ncols + c];
                    if v != h.nodata {
                        sum += v;
                        any_land = true;
                    }
                }
            }
            if any_land {
                values[br * ncols + bc] = sum;
            }
        }
    }
    Ok(PopGrid { header, values })
}
