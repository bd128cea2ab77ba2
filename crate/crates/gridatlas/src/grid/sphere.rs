//! Spherical geometry on a mean-radius Earth sphere.

use crate::error::{Error, Result};
use crate::grid::{GridHeader, LonLat};

/// Mean Earth radius in km (IUGG R1).
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Great-circle length of one degree of arc, km.
pub const KM_PER_DEG: f64 = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;

/// Centroid of cell (row, col); row 0 is the northernmost row.
pub fn cell_centroid(header: &GridHeader, row: usize, col: usize) -> Result<LonLat> {
    if row >= header.nrows || col >= header.ncols {
        return Err(Error::Bounds {
            what: format!(
                "cell ({row}, {col}) outside {}x{} grid",
                header.nrows, header.ncols
            ),
        });
    }
    let lon = header.xll + (col as f64 + 0.5) * header.cellsize;
    let lat = header.yll + (header.nrows as f64 - 1.0 - row as f64 + 0.5) * header.cellsize;
    LonLat::new(lon, lat)
}

/// Spherical area of one cell in the given latitude band, km².
/// A = R² · Δλ · (sin φ₂ − sin φ₁); depends on the row only.
pub fn cell_area_km2(header: &GridHeader, row: usize) -> f64 {
    let lat_top = header.yll + (header.nrows - row) as f64 * header.cellsize;
    let lat_bot = lat_top - header.cellsize;
    let phi2 = lat_top.to_radians().clamp(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
    let phi1 = lat_bot.to_radians().clamp(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
    let dlambda = header.cellsize.to_radians();
    EARTH_RADIUS_KM * EARTH_RADIUS_KM * dlambda * (phi2.sin() - phi1.sin())
}

/// Great-circle distance between two points, km.
pub fn haversine_km(a: LonLat, b: LonLat) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let s = (dphi / 2.0).sin().powi(2)
        + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * s.sqrt().min(1.0).asin()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn global_half_degree() -> GridHeader {
        GridHeader::global(0.5, -9999.0).unwrap()
    }

    #[test]
    fn centroid_corners_of_global_grid() {
        let h = global_half_degree();
        let nw = cell_centroid(&h, 0, 0).unwrap();
        assert!((nw.lon - -179.75).abs() < 1e-12);
        assert!((nw.lat - 89.75).abs() < 1e-12);
        let se = cell_centroid(&h, h.nrows - 1, h.ncols - 1).unwrap();
        assert!((se.lon - 179.75).abs() < 1e-12);
        assert!((se.lat - -89.75).abs() < 1e-12);
    }

    #[test]
    fn centroid_equatorial_band() {
        let h = global_half_degree();
        // Row 179 covers lat [0, 0.5]; row 180 covers [-0.5, 0].
        assert!((cell_centroid(&h, 179, 0).unwrap().lat - 0.25).abs() < 1e-12);
        assert!((cell_centroid(&h, 180, 0).unwrap().lat - -0.25).abs() < 1e-12);
    }

    #[test]
    fn centroid_out_of_range_is_bounds_error() {
        let h = global_half_degree();
        assert!(cell_centroid(&h, 360, 0).is_err());
        assert!(cell_centroid(&h, 0, 720).is_err());
    }

    #[test]
    fn equatorial_cell_area_matches_formula() {
        let h = global_half_degree();
        // Band [0, 0.5] degrees is row 179.
        let a = cell_area_km2(&h, 179);
        let r2 = EARTH_RADIUS_KM * EARTH_RADIUS_KM;
        let expect = r2 * 0.5f64.to_radians() * (0.5f64.to_radians().sin() - 0.0);
        assert!((a - expect).abs() < 1e-9);
        assert!((a - 3.09e3).abs() / 3.09e3 < 0.01, "a = {a}");
        let side = a.sqrt();
        assert!((side - 55.6).abs() < 0.5, "side = {side}"); // ~55 km squares at the equator
    }

    #[test]
    fn area_at_60_degrees_is_cos_weighted() {
        let h = global_half_degree();
        // Row covering [60, 60.5] (north): lat_top = 90 - row*0.5 => row 59.
        let a60 = cell_area_km2(&h, 59);
        let a0 = cell_area_km2(&h, 179);
        // Independent evaluation: ratio of sin differences.
        let expect = (60.5f64.to_radians().sin() - 60f64.to_radians().sin())
            / (0.5f64.to_radians().sin() - 0.0);
        assert!((a60 / a0 - expect).abs() < 1e-12);
        // cos(60°) = 0.5: zonal width halves, so area is near half.
        assert!((a60 / a0 - 0.5).abs() < 0.01);
    }

    #[test]
    fn band_areas_sum_to_sphere() {
        let h = global_half_degree();
        let total: f64 = (0..h.nrows)
            .map(|r| cell_area_km2(&h, r) * h.ncols as f64)
            .sum();
        let sphere = 4.0 * std::f64::consts::PI * EARTH_RADIUS_KM * EARTH_RADIUS_KM;
        assert!((total - sphere).abs() / sphere < 1e-6);
    }

    #[test]
    fn haversine_identities() {
        let p = LonLat::new(12.5, -33.0).unwrap();
        assert_eq!(haversine_km(p, p), 0.0);
        let a = LonLat::new(0.0, 0.0).unwrap();
        let b = LonLat::new(180.0, 0.0).unwrap();
        let half = std::f64::consts::PI * EARTH_RADIUS_KM;
        assert!((haversine_km(a, b) - half).abs() < 1e-6);
        assert!((half - 20015.1).abs() < 0.1);
        let c = LonLat::new(1.0, 0.0).unwrap();
        assert!((haversine_km(a, c) - 111.195).abs() < 1e-3);
    }

    #[test]
    fn haversine_symmetric() {
        let a = LonLat::new(-120.0, 45.0).unwrap();
        let b = LonLat::new(33.0, -70.0).unwrap();
        assert_eq!(haversine_km(a, b), haversine_km(b, a));
    }
}
