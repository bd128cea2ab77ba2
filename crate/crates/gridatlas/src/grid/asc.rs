//! ESRI ASCII grid reader/writer plus the lon,lat,value CSV variant.
//!
//! Values are serialized with the shortest decimal representation that
//! round-trips exactly, so parse(write(g)) == g bit for bit.

use crate::error::{Error, Result};
use crate::grid::{GridHeader, PopGrid};

/// Header plus raw values with no data-model validation. Used for
/// non-population rasters (deformation components, masks read back).
#[derive(Debug, Clone, PartialEq)]
pub struct RawGrid {
    pub header: GridHeader,
    pub values: Vec<f64>,
}

fn parse_header_line(line_no: usize, line: &str, key: &str) -> Result<f64> {
    let mut it = line.split_whitespace();
    let k = it.next().unwrap_or("");
    let v = it.next();
    if !k.eq_ignore_ascii_case(key) || v.is_none() || it.next().is_some() {
        return Err(Error::HeaderParse {
            line_no,
            line: line.to_string(),
        });
    }
    v.unwrap().parse::<f64>().map_err(|_| Error::HeaderParse {
        line_no,
        line: line.to_string(),
    })
}

/// Parse the six-line ESRI header and the value block without any
/// geographic or sign validation.
fn parse_asc_inner(text: &str, check_geo: bool) -> Result<RawGrid> {
    let mut lines = text.lines().enumerate();
    let mut header_line = |key: &str| -> Result<(usize, f64)> {
        match lines.next() {
            Some((i, line)) => Ok((i + 1, parse_header_line(i + 1, line, key)?)),
            None => Err(Error::structure(format!("missing header line {key}"))),
        }
    };
    let (_, ncols) = header_line("ncols")?;
    let (_, nrows) = header_line("nrows")?;
    let (_, xll) = header_line("xllcorner")?;
    let (_, yll) = header_line("yllcorner")?;
    let (_, cellsize) = header_line("cellsize")?;
    let (_, nodata) = header_line("NODATA_value")?;

    if ncols.fract() != 0.0 || nrows.fract() != 0.0 || ncols < 1.0 || nrows < 1.0 {
        return Err(Error::structure(format!(
            "ncols/nrows must be positive integers, got {ncols}/{nrows}"
        )));
    }
    let header = if check_geo {
        GridHeader::new(ncols as usize, nrows as usize, xll, yll, cellsize, nodata)?
    } else {
        GridHeader {
            ncols: ncols as usize,
            nrows: nrows as usize,
            xll,
            yll,
            cellsize,
            nodata,
        }
    };

    let expected = header.len();
    let mut values = Vec::with_capacity(expected);
    for (i, line) in lines {
        for (t, token) in line.split_whitespace().enumerate() {
            let v: f64 = token.parse().map_err(|_| Error::Lexical {
                line_no: i + 1,
                token_no: t + 1,
                token: token.to_string(),
            })?;
            if values.len() == expected {
                return Err(Error::structure(format!(
                    "more than {expected} values (extra token at line {})",
                    i + 1
                )));
            }
            values.push(v);
        }
    }
    if values.len() != expected {
        return Err(Error::structure(format!(
            "expected {expected} values, got {}",
            values.len()
        )));
    }
    Ok(RawGrid { header, values })
}

/// Parse an ESRI ASCII population grid. Values run north-to-south by row,
/// west-to-east by column. Non-nodata values must be >= 0.
pub fn parse_asc_grid(text: &str) -> Result<PopGrid> {
    let raw = parse_asc_inner(text, true)?;
    for (i, &v) in raw.values.iter().enumerate() {
        if v != raw.header.nodata && !(v >= 0.0) {
            return Err(Error::InvalidValue {
                line_no: 7 + i / raw.header.ncols,
                value: v,
            });
        }
    }
    PopGrid::new(raw.header, raw.values)
}

/// Lenient variant for derived rasters: no lon/lat bounds, signed values allowed.
pub fn parse_asc_raw(text: &str) -> Result<RawGrid> {
    parse_asc_inner(text, false)
}

fn write_asc_inner(header: &GridHeader, values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 8 + 128);
    out.push_str(&format!("ncols {}\n", header.ncols));
    out.push_str(&format!("nrows {}\n", header.nrows));
    out.push_str(&format!("xllcorner {}\n", header.xll));
    out.push_str(&format!("yllcorner {}\n", header.yll));
    out.push_str(&format!("cellsize {}\n", header.cellsize));
    out.push_str(&format!("NODATA_value {}\n", header.nodata));
    for row in values.chunks(header.ncols) {
        let mut first = true;
        for &v in row {
            if !first {
                out.push(' ');
            }
            out.push_str(&format!("{v}"));
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Serialize a population grid; exact round-trip through [`parse_asc_grid`].
pub fn write_asc_grid(grid: &PopGrid) -> String {
    write_asc_inner(&grid.header, &grid.values)
}

/// Serialize a raw raster (derived surfaces, deformation components).
pub fn write_asc_raw(grid: &RawGrid) -> String {
    write_asc_inner(&grid.header, &grid.values)
}

/// Parse the `lon,lat,value` CSV variant (one row per land cell).
///
/// The lattice is inferred: cellsize is the smallest positive spacing among
/// the distinct sorted lon and lat values, so the file must contain at least
/// one pair of adjacent land cells. Cells absent from the file become nodata
/// (default sentinel -9999).
pub fn parse_csv_grid(text: &str) -> Result<PopGrid> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim().eq_ignore_ascii_case("lon,lat,value") => {}
        Some((_, h)) => {
            return Err(Error::HeaderParse {
                line_no: 1,
                line: h.to_string(),
            })
        }
        None => return Err(Error::structure("empty CSV")),
    }

    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let mut field = |t: usize| -> Result<f64> {
            let tok = parts.next().ok_or_else(|| Error::structure(format!(
                "line {}: expected 3 fields",
                i + 1
            )))?;
            tok.trim().parse::<f64>().map_err(|_| Error::Lexical {
                line_no: i + 1,
                token_no: t,
                token: tok.trim().to_string(),
            })
        };
        let lon = field(1)?;
        let lat = field(2)?;
        let v = field(3)?;
        if !(v >= 0.0) {
            return Err(Error::InvalidValue {
                line_no: i + 1,
                value: v,
            });
        }
        rows.push((lon, lat, v));
    }
    if rows.is_empty() {
        return Err(Error::structure("CSV contains no data rows"));
    }

    let min_spacing = |mut coords: Vec<f64>| -> Option<f64> {
        coords.sort_by(|a, b| a.partial_cmp(b).unwrap());
        coords.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        coords
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(None, |acc: Option<f64>, d| {
                Some(acc.map_or(d, |m: f64| m.min(d)))
            })
    };
    let cs_lon = min_spacing(rows.iter().map(|r| r.0).collect());
    let cs_lat = min_spacing(rows.iter().map(|r| r.1).collect());
    let cellsize = match (cs_lon, cs_lat) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => {
            return Err(Error::structure(
                "cannot infer cellsize from a single cell",
            ))
        }
    };

    let lon_min = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let lon_max = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let lat_min = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let lat_max = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);

    let ncols = ((lon_max - lon_min) / cellsize).round() as usize + 1;
    let nrows = ((lat_max - lat_min) / cellsize).round() as usize + 1;
    let nodata = -9999.0;
    let header = GridHeader::new(
        ncols,
        nrows,
        lon_min - cellsize / 2.0,
        lat_min - cellsize / 2.0,
        cellsize,
        nodata,
    )?;

    let mut values = vec![nodata; header.len()];
    for (i, (lon, lat, v)) in rows.iter().enumerate() {
        let fc = (lon - lon_min) / cellsize;
        let fr = (lat_max - lat) / cellsize;
        let col = fc.round();
        let row = fr.round();
        if (fc - col).abs() > 1e-6 || (fr - row).abs() > 1e-6 {
            return Err(Error::structure(format!(
                "CSV row {} does not snap to the inferred {cellsize}-degree lattice",
                i + 2
            )));
        }
        values[row as usize * ncols + col as usize] = *v;
    }
    PopGrid::new(header, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n1 2\n-9999 4\n";

    #[test]
    fn parse_small_grid() {
        let g = parse_asc_grid(SMALL).unwrap();
        assert_eq!(g.header.ncols, 2);
        assert_eq!(g.land_cell_count(), 3);
        assert_eq!(g.population_total(), 7.0);
        // north-to-south: row 0 = {1, 2}
        assert_eq!(g.get(0, 0), 1.0);
        assert_eq!(g.get(1, 1), 4.0);
    }

    #[test]
    fn parse_is_deterministic() {
        let a = parse_asc_grid(SMALL).unwrap();
        let b = parse_asc_grid(SMALL).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn header_keys_case_insensitive() {
        let txt = SMALL
            .replace("ncols", "NCOLS")
            .replace("NODATA_value", "nodata_VALUE");
        assert!(parse_asc_grid(&txt).is_ok());
    }

    #[test]
    fn malformed_header_names_line() {
        let txt = SMALL.replace("yllcorner 0", "yllcorner");
        match parse_asc_grid(&txt) {
            Err(Error::HeaderParse { line_no: 4, .. }) => {}
            other => panic!("expected header error on line 4, got {other:?}"),
        }
    }

    #[test]
    fn unknown_header_key_rejected() {
        let txt = SMALL.replace("xllcorner", "xllcenter");
        assert!(matches!(
            parse_asc_grid(&txt),
            Err(Error::HeaderParse { line_no: 3, .. })
        ));
    }

    #[test]
    fn value_count_mismatch_is_structural() {
        let txt = SMALL.replace("-9999 4", "-9999");
        assert!(matches!(parse_asc_grid(&txt), Err(Error::Structure { .. })));
        let txt = format!("{SMALL}9\n");
        assert!(matches!(parse_asc_grid(&txt), Err(Error::Structure { .. })));
    }

    #[test]
    fn non_numeric_token_has_position() {
        let txt = SMALL.replace("4", "four");
        match parse_asc_grid(&txt) {
            Err(Error::Lexical {
                line_no,
                token_no,
                token,
            }) => {
                assert_eq!((line_no, token_no), (8, 2));
                assert_eq!(token, "four");
            }
            other => panic!("expected lexical error, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_exact() {
        let g = parse_asc_grid(SMALL).unwrap();
        let text = write_asc_grid(&g);
        let g2 = parse_asc_grid(&text).unwrap();
        assert_eq!(g, g2);
    }

    #[test]
    fn round_trip_preserves_awkward_values() {
        let h = GridHeader::new(3, 1, -0.25, 0.0, 0.5, -9999.0).unwrap();
        let g = PopGrid::new(h, vec![23065668.0, 0.1 + 0.2, f64::MIN_POSITIVE]).unwrap();
        let g2 = parse_asc_grid(&write_asc_grid(&g)).unwrap();
        assert_eq!(g, g2);
        assert!(write_asc_grid(&g).contains("23065668"));
    }

    #[test]
    fn nodata_serialized_as_sentinel() {
        let g = parse_asc_grid(SMALL).unwrap();
        let text = write_asc_grid(&g);
        assert!(text.lines().nth(7).unwrap().starts_with("-9999"));
    }

    #[test]
    fn csv_round_trip_against_asc() {
        let g = parse_asc_grid(SMALL).unwrap();
        let mut csv = String::from("lon,lat,value\n");
        for (r, c, v) in g.iter_land() {
            let p = g.centroid(r, c).unwrap();
            csv.push_str(&format!("{},{},{}\n", p.lon, p.lat, v));
        }
        let g2 = parse_csv_grid(&csv).unwrap();
        assert_eq!(g2.land_cell_count(), 3);
        assert_eq!(g2.population_total(), 7.0);
        assert_eq!(g2.header.cellsize, 1.0);
    }

    #[test]
    fn csv_rejects_bad_header_and_tokens() {
        assert!(matches!(
            parse_csv_grid("lng,lat,value\n1,2,3\n"),
            Err(Error::HeaderParse { .. })
        ));
        assert!(matches!(
            parse_csv_grid("lon,lat,value\n1,2,x\n"),
            Err(Error::Lexical { .. })
        ));
    }

    #[test]
    fn raw_parser_accepts_signed_values_and_any_extent() {
        let txt = "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n-1.5 2.5\n";
        let raw = parse_asc_raw(txt).unwrap();
        assert_eq!(raw.values, vec![-1.5, 2.5]);
        assert!(parse_asc_grid(txt).is_err()); // negative population rejected
    }
}
