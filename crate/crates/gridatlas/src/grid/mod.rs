//! Raster/vector data model: population grids, zone layers, spherical
//! geometry, file formats, and the synthetic-grid fixture generator.

mod asc;
mod geojson;
mod sphere;
mod synth;

pub use asc::{parse_asc_grid, parse_asc_raw, parse_csv_grid, write_asc_grid, write_asc_raw, RawGrid};
pub use geojson::{parse_geojson_layer, write_geojson_layer};
pub use sphere::{cell_area_km2, cell_centroid, haversine_km, EARTH_RADIUS_KM, KM_PER_DEG};
pub use synth::{synth_grid, Blob, SynthSpec};

use crate::error::{Error, Result};

/// Header of a regular lon/lat raster. Row 0 is the northernmost row;
/// (xll, yll) is the lower-left corner of the grid extent.
#[derive(Debug, Clone, PartialEq)]
pub struct GridHeader {
    pub ncols: usize,
    pub nrows: usize,
    pub xll: f64,
    pub yll: f64,
    pub cellsize: f64,
    pub nodata: f64,
}

impl GridHeader {
    /// Validated constructor for geographic grids: the extent must fit the
    /// lon/lat domain and the dimensions must be positive.
    pub fn new(
        ncols: usize,
        nrows: usize,
        xll: f64,
        yll: f64,
        cellsize: f64,
        nodata: f64,
    ) -> Result<Self> {
        if ncols < 1 || nrows < 1 {
            return Err(Error::structure(format!(
                "grid dimensions must be >= 1, got {ncols}x{nrows}"
            )));
        }
        if !(cellsize > 0.0) {
            return Err(Error::structure(format!(
                "cellsize must be positive, got {cellsize}"
            )));
        }
        const EPS: f64 = 1e-9;
        if xll < -180.0 - EPS || xll + ncols as f64 * cellsize > 180.0 + EPS {
            return Err(Error::structure(format!(
                "longitude extent [{}, {}] outside [-180, 180]",
                xll,
                xll + ncols as f64 * cellsize
            )));
        }
        if yll < -90.0 - EPS || yll + nrows as f64 * cellsize > 90.0 + EPS {
            return Err(Error::structure(format!(
                "latitude extent [{}, {}] outside [-90, 90]",
                yll,
                yll + nrows as f64 * cellsize
            )));
        }
        Ok(GridHeader {
            ncols,
            nrows,
            xll,
            yll,
            cellsize,
            nodata,
        })
    }

    /// Standard global grid at the given cell size (degrees).
    pub fn global(cellsize: f64, nodata: f64) -> Result<Self> {
        let ncols = (360.0 / cellsize).round() as usize;
        let nrows = (180.0 / cellsize).round() as usize;
        Self::new(ncols, nrows, -180.0, -90.0, cellsize, nodata)
    }

    pub fn len(&self) -> usize {
        self.ncols * self.nrows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Latitude of the top (north) edge.
    pub fn top_lat(&self) -> f64 {
        self.yll + self.nrows as f64 * self.cellsize
    }
}

/// Geographic coordinate in degrees, lon in [-180, 180], lat in [-90, 90].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LonLat {
    pub lon: f64,
    pub lat: f64,
}

impl LonLat {
    /// Range-checked constructor; out-of-range inputs within 1e-9 are clamped.
    pub fn new(lon: f64, lat: f64) -> Result<Self> {
        const EPS: f64 = 1e-9;
        if !lon.is_finite() || !lat.is_finite() {
            return Err(Error::Bounds {
                what: format!("non-finite coordinate ({lon}, {lat})"),
            });
        }
        if lon < -180.0 - EPS || lon > 180.0 + EPS || lat < -90.0 - EPS || lat > 90.0 + EPS {
            return Err(Error::Bounds {
                what: format!("coordinate ({lon}, {lat}) outside lon/lat range"),
            });
        }
        Ok(LonLat {
            lon: lon.clamp(-180.0, 180.0),
            lat: lat.clamp(-90.0, 90.0),
        })
    }
}

/// Regular lon/lat raster of population counts. `values` is row-major,
/// rows north to south, columns west to east. The header's nodata sentinel
/// encodes ocean/no-land; zero is a valid land value.
#[derive(Debug, Clone, PartialEq)]
pub struct PopGrid {
    pub header: GridHeader,
    pub values: Vec<f64>,
}

impl PopGrid {
    pub fn new(header: GridHeader, values: Vec<f64>) -> Result<Self> {
        if values.len() != header.len() {
            return Err(Error::structure(format!(
                "value count {} does not match {}x{} grid",
                values.len(),
                header.ncols,
                header.nrows
            )));
        }
        for &v in &values {
            if v != header.nodata && !(v >= 0.0) {
                return Err(Error::structure(format!(
                    "negative or non-finite population value {v}"
                )));
            }
        }
        Ok(PopGrid { header, values })
    }

    /// Constant-value grid (every cell is land).
    pub fn filled(header: GridHeader, value: f64) -> Self {
        let values = vec![value; header.len()];
        PopGrid { header, values }
    }

    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        row * self.header.ncols + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[self.idx(row, col)]
    }

    #[inline]
    pub fn is_nodata(&self, row: usize, col: usize) -> bool {
        self.get(row, col) == self.header.nodata
    }

    /// Count of non-nodata cells.
    pub fn land_cell_count(&self) -> usize {
        let nodata = self.header.nodata;
        self.values.iter().filter(|&&v| v != nodata).count()
    }

    /// Sum of land-cell populations.
    pub fn population_total(&self) -> f64 {
        let nodata = self.header.nodata;
        self.values
            .iter()
            .filter(|&&v| v != nodata)
            .copied()
            .sum()
    }

    /// Iterate land cells in (row, col) order.
    pub fn iter_land(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let ncols = self.header.ncols;
        let nodata = self.header.nodata;
        self.values.iter().enumerate().filter_map(move |(i, &v)| {
            (v != nodata).then_some((i / ncols, i % ncols, v))
        })
    }

    pub fn centroid(&self, row: usize, col: usize) -> Result<LonLat> {
        cell_centroid(&self.header, row, col)
    }

    /// Total land area in km² (sum of per-band cell areas over land cells).
    pub fn land_area_km2(&self) -> f64 {
        let mut per_row = vec![0usize; self.header.nrows];
        for (row, _, _) in self.iter_land() {
            per_row[row] += 1;
        }
        per_row
            .iter()
            .enumerate()
            .map(|(row, &n)| n as f64 * cell_area_km2(&self.header, row))
            .sum()
    }
}

/// Vector feature kind: closed polygon rings or open polyline paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Polygons,
    Polylines,
}

/// One named vector feature; `parts` holds rings (closed, >= 4 vertices)
/// for polygons or paths (>= 2 vertices) for polylines.
#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub id: String,
    pub name: String,
    pub kind: FeatureKind,
    pub parts: Vec<Vec<LonLat>>,
}

impl Feature {
    /// Planar bounding box (lon_min, lat_min, lon_max, lat_max).
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        let mut bb = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for part in &self.parts {
            for p in part {
                bb.0 = bb.0.min(p.lon);
                bb.1 = bb.1.min(p.lat);
                bb.2 = bb.2.max(p.lon);
                bb.3 = bb.3.max(p.lat);
            }
        }
        bb
    }

    /// Even-odd containment test over all rings of the feature.
    /// Only meaningful for polygon features.
    pub fn contains(&self, p: LonLat) -> bool {
        let mut inside = false;
        for ring in &self.parts {
            // Standard ray cast toward +x; the shared vertex rule
            // (strict < on one end) keeps boundary ties deterministic.
            let n = ring.len();
            for i in 0..n.saturating_sub(1) {
                let a = ring[i];
                let b = ring[i + 1];
                if (a.lat > p.lat) != (b.lat > p.lat) {
                    let t = (p.lat - a.lat) / (b.lat - a.lat);
                    let x = a.lon + t * (b.lon - a.lon);
                    if p.lon < x {
                        inside = !inside;
                    }
                }
            }
        }
        inside
    }
}

/// Ordered collection of vector features (countries, coastlines).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZoneLayer {
    pub features: Vec<Feature>,
}

impl ZoneLayer {
    pub fn new(features: Vec<Feature>) -> Result<Self> {
        for (i, f) in features.iter().enumerate() {
            for part in &f.parts {
                match f.kind {
                    FeatureKind::Polygons => {
                        if part.len() < 4 {
                            return Err(Error::Geometry {
                                index: i,
                                detail: format!("ring has {} vertices, need >= 4", part.len()),
                            });
                        }
                        if part.first() != part.last() {
                            return Err(Error::Geometry {
                                index: i,
                                detail: "ring is not closed".into(),
                            });
                        }
                    }
                    FeatureKind::Polylines => {
                        if part.len() < 2 {
                            return Err(Error::Geometry {
                                index: i,
                                detail: format!("path has {} vertices, need >= 2", part.len()),
                            });
                        }
                    }
                }
            }
        }
        Ok(ZoneLayer { features })
    }

    pub fn all_polygons(&self) -> bool {
        self.features.iter().all(|f| f.kind == FeatureKind::Polygons)
    }

    pub fn all_polylines(&self) -> bool {
        self.features.iter().all(|f| f.kind == FeatureKind::Polylines)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_rejects_out_of_range_extent() {
        assert!(GridHeader::new(720, 360, -180.0, -90.0, 0.5, -9999.0).is_ok());
        assert!(GridHeader::new(721, 360, -180.0, -90.0, 0.5, -9999.0).is_err());
        assert!(GridHeader::new(720, 361, -180.0, -90.0, 0.5, -9999.0).is_err());
        assert!(GridHeader::new(10, 10, -180.0, -90.0, 0.0, -9999.0).is_err());
        assert!(GridHeader::new(0, 10, -180.0, -90.0, 0.5, -9999.0).is_err());
    }

    #[test]
    fn lonlat_bounds() {
        assert!(LonLat::new(-180.0, 90.0).is_ok());
        assert!(LonLat::new(180.0000000001, 0.0).is_ok()); // within 1e-9 clamp
        assert!(LonLat::new(181.0, 0.0).is_err());
        assert!(LonLat::new(0.0, -91.0).is_err());
        assert!(LonLat::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn popgrid_counts_land_and_total() {
        let h = GridHeader::new(2, 2, 0.0, 0.0, 1.0, -9999.0).unwrap();
        let g = PopGrid::new(h, vec![1.0, 2.0, -9999.0, 4.0]).unwrap();
        assert_eq!(g.land_cell_count(), 3);
        assert_eq!(g.population_total(), 7.0);
        assert!(g.is_nodata(1, 0));
    }

    #[test]
    fn popgrid_rejects_negative_values() {
        let h = GridHeader::new(2, 1, 0.0, 0.0, 1.0, -9999.0).unwrap();
        assert!(PopGrid::new(h, vec![1.0, -3.0]).is_err());
    }

    #[test]
    fn zero_on_land_distinct_from_nodata() {
        let h = GridHeader::new(2, 1, 0.0, 0.0, 1.0, -9999.0).unwrap();
        let g = PopGrid::new(h, vec![0.0, -9999.0]).unwrap();
        assert_eq!(g.land_cell_count(), 1);
        assert_eq!(g.population_total(), 0.0);
    }

    #[test]
    fn layer_validates_ring_closure() {
        let sq = vec![
            LonLat::new(0.0, 0.0).unwrap(),
            LonLat::new(1.0, 0.0).unwrap(),
            LonLat::new(1.0, 1.0).unwrap(),
            LonLat::new(0.0, 0.0).unwrap(),
        ];
        let open = vec![
            LonLat::new(0.0, 0.0).unwrap(),
            LonLat::new(1.0, 0.0).unwrap(),
            LonLat::new(1.0, 1.0).unwrap(),
            LonLat::new(0.5, 1.0).unwrap(),
        ];
        let ok = Feature {
            id: "a".into(),
            name: "a".into(),
            kind: FeatureKind::Polygons,
            parts: vec![sq],
        };
        assert!(ZoneLayer::new(vec![ok.clone()]).is_ok());
        let bad = Feature {
            parts: vec![open],
            ..ok
        };
        assert!(ZoneLayer::new(vec![bad]).is_err());
    }

    #[test]
    fn even_odd_containment_with_hole() {
        let outer = vec![
            LonLat::new(0.0, 0.0).unwrap(),
            LonLat::new(10.0, 0.0).unwrap(),
            LonLat::new(10.0, 10.0).unwrap(),
            LonLat::new(0.0, 10.0).unwrap(),
            LonLat::new(0.0, 0.0).unwrap(),
        ];
        let hole = vec![
            LonLat::new(4.0, 4.0).unwrap(),
            LonLat::new(6.0, 4.0).unwrap(),
            LonLat::new(6.0, 6.0).unwrap(),
            LonLat::new(4.0, 6.0).unwrap(),
            LonLat::new(4.0, 4.0).unwrap(),
        ];
        let f = Feature {
            id: "h".into(),
            name: "h".into(),
            kind: FeatureKind::Polygons,
            parts: vec![outer, hole],
        };
        assert!(f.contains(LonLat::new(2.0, 2.0).unwrap()));
        assert!(!f.contains(LonLat::new(5.0, 5.0).unwrap())); // inside the hole
        assert!(!f.contains(LonLat::new(11.0, 5.0).unwrap()));
    }
}
