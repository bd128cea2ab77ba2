//! GeoJSON FeatureCollection reader/writer for the supported subset:
//! Polygon, MultiPolygon, LineString, MultiLineString in WGS84 lon/lat.
//! Other geometry kinds are rejected, not skipped.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grid::{Feature, FeatureKind, LonLat, ZoneLayer};

fn coord(index: usize, v: &Value) -> Result<LonLat> {
    let arr = v.as_array().ok_or_else(|| Error::Geometry {
        index,
        detail: "coordinate is not an array".into(),
    })?;
    if arr.len() < 2 {
        return Err(Error::Geometry {
            index,
            detail: "coordinate has fewer than 2 elements".into(),
        });
    }
    let lon = arr[0].as_f64().ok_or_else(|| Error::Geometry {
        index,
        detail: "non-numeric longitude".into(),
    })?;
    let lat = arr[1].as_f64().ok_or_else(|| Error::Geometry {
        index,
        detail: "non-numeric latitude".into(),
    })?;
    LonLat::new(lon, lat)
}

fn line(index: usize, v: &Value, min_len: usize, what: &str) -> Result<Vec<LonLat>> {
    let arr = v.as_array().ok_or_else(|| Error::Geometry {
        index,
        detail: format!("{what} is not an array"),
    })?;
    let pts: Vec<LonLat> = arr
        .iter()
        .map(|p| coord(index, p))
        .collect::<Result<_>>()?;
    if pts.len() < min_len {
        return Err(Error::Geometry {
            index,
            detail: format!("{what} has {} vertices, need >= {min_len}", pts.len()),
        });
    }
    Ok(pts)
}

fn ring(index: usize, v: &Value) -> Result<Vec<LonLat>> {
    let pts = line(index, v, 4, "ring")?;
    if pts.first() != pts.last() {
        return Err(Error::Geometry {
            index,
            detail: "unclosed ring (first vertex != last vertex)".into(),
        });
    }
    Ok(pts)
}

fn string_prop(props: &Value, keys: &[&str]) -> Option<String> {
    for k in keys {
        if let Some(s) = props.get(*k).and_then(Value::as_str) {
            if !s.is_empty() {
                return Some(s.to_string());
            }
        }
    }
    None
}

/// Parse a FeatureCollection into a [`ZoneLayer`].
///
/// Feature ids come from, in order: the GeoJSON `id` member, then the
/// `id`, `ADM0_A3`, `ISO_A3`, `name`, `NAME` properties. Duplicate ids are
/// disambiguated deterministically with a `__<n>` suffix in file order.
pub fn parse_geojson_layer(text: &str) -> Result<ZoneLayer> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| Error::structure(format!("invalid JSON: {e}")))?;
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::structure("not a GeoJSON FeatureCollection"));
    }
    let feats = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::structure("FeatureCollection without features array"))?;

    let mut features = Vec::with_capacity(feats.len());
    let mut seen_ids: std::collections::HashMap<String, usize> = std::collections::HashMap::new();

    for (index, f) in feats.iter().enumerate() {
        let geom = f
            .get("geometry")
            .filter(|g| !g.is_null())
            .ok_or_else(|| Error::Geometry {
                index,
                detail: "feature without geometry".into(),
            })?;
        let gtype = geom
            .get("type")
            .and_then(Value::as_str)
            .unwrap_or("<missing>");
        let coords = geom.get("coordinates").unwrap_or(&Value::Null);

        let (kind, parts): (FeatureKind, Vec<Vec<LonLat>>) = match gtype {
            "Polygon" => {
                let rings = coords
                    .as_array()
                    .ok_or_else(|| Error::Geometry {
                        index,
                        detail: "Polygon coordinates is not an array".into(),
                    })?
                    .iter()
                    .map(|r| ring(index, r))
                    .collect::<Result<Vec<_>>>()?;
                (FeatureKind::Polygons, rings)
            }
            "MultiPolygon" => {
                let mut rings = Vec::new();
                for poly in coords.as_array().ok_or_else(|| Error::Geometry {
                    index,
                    detail: "MultiPolygon coordinates is not an array".into(),
                })? {
                    for r in poly.as_array().ok_or_else(|| Error::Geometry {
                        index,
                        detail: "MultiPolygon member is not an array".into(),
                    })? {
                        rings.push(ring(index, r)?);
                    }
                }
                (FeatureKind::Polygons, rings)
            }
            "LineString" => (
                FeatureKind::Polylines,
                vec![line(index, coords, 2, "path")?],
            ),
            "MultiLineString" => {
                let paths = coords
                    .as_array()
                    .ok_or_else(|| Error::Geometry {
                        index,
                        detail: "MultiLineString coordinates is not an array".into(),
                    })?
                    .iter()
                    .map(|p| line(index, p, 2, "path"))
                    .collect::<Result<Vec<_>>>()?;
                (FeatureKind::Polylines, paths)
            }
            other => {
                return Err(Error::UnsupportedFeature {
                    index,
                    kind: other.to_string(),
                })
            }
        };

        let props = f.get("properties").cloned().unwrap_or(Value::Null);
        let top_id = f
            .get("id")
            .and_then(|v| v.as_str().map(str::to_string).or_else(|| v.as_i64().map(|n| n.to_string())));
        let mut id = top_id
            .or_else(|| string_prop(&props, &["id", "ADM0_A3", "ISO_A3", "name", "NAME"]))
            .unwrap_or_else(|| format!("feature_{index}"));
        let name = string_prop(&props, &["name", "NAME", "ADMIN", "admin"]).unwrap_or_else(|| id.clone());

        let n = seen_ids.entry(id.clone()).or_insert(0);
        *n += 1;
        if *n > 1 {
            id = format!("{id}__{n}");
        }

        features.push(Feature {
            id,
            name,
            kind,
            parts,
        });
    }

    ZoneLayer::new(features)
}

/// Serialize a layer back to GeoJSON. Polygon features are written as
/// MultiPolygon with one single-ring polygon per part (ring grouping is not
/// retained by the data model; downstream fills use the even-odd rule).
pub fn write_geojson_layer(layer: &ZoneLayer) -> String {
    let features: Vec<Value> = layer
        .features
        .iter()
        .map(|f| {
            let geometry = match f.kind {
                FeatureKind::Polygons => json!({
                    "type": "MultiPolygon",
                    "coordinates": f.parts.iter().map(|ring| {
                        vec![ring.iter().map(|p| vec![p.lon, p.lat]).collect::<Vec<_>>()]
                    }).collect::<Vec<_>>(),
                }),
                FeatureKind::Polylines => json!({
                    "type": "MultiLineString",
                    "coordinates": f.parts.iter().map(|path| {
                        path.iter().map(|p| vec![p.lon, p.lat]).collect::<Vec<_>>()
                    }).collect::<Vec<_>>(),
                }),
            };
            json!({
                "type": "Feature",
                "id": f.id,
                "properties": {"name": f.name},
                "geometry": geometry,
            })
        })
        .collect();
    serde_json::to_string(&json!({
        "type": "FeatureCollection",
        "features": features,
    }))
    .expect("geojson serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_feature() -> String {
        r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"name":"Box"},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[10,0],[10,10],[0,10],[0,0]]]}}
        ]}"#
        .to_string()
    }

    #[test]
    fn one_square_polygon() {
        let layer = parse_geojson_layer(&square_feature()).unwrap();
        assert_eq!(layer.features.len(), 1);
        let f = &layer.features[0];
        assert_eq!(f.kind, FeatureKind::Polygons);
        assert_eq!(f.parts.len(), 1);
        assert_eq!(f.parts[0].len(), 5);
        assert_eq!(f.name, "Box");
    }

    #[test]
    fn point_geometry_is_unsupported_with_index() {
        let txt = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}},
            {"type":"Feature","properties":{},
             "geometry":{"type":"Point","coordinates":[5,5]}}
        ]}"#;
        match parse_geojson_layer(txt) {
            Err(Error::UnsupportedFeature { index: 1, kind }) => assert_eq!(kind, "Point"),
            other => panic!("expected unsupported-feature error, got {other:?}"),
        }
    }

    #[test]
    fn unclosed_ring_is_geometry_error() {
        let txt = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1]]]}}
        ]}"#;
        assert!(matches!(
            parse_geojson_layer(txt),
            Err(Error::Geometry { index: 0, .. })
        ));
    }

    #[test]
    fn duplicate_ids_get_deterministic_suffix() {
        let txt = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"id":"X"},
             "geometry":{"type":"LineString","coordinates":[[0,0],[1,1]]}},
            {"type":"Feature","properties":{"id":"X"},
             "geometry":{"type":"LineString","coordinates":[[2,2],[3,3]]}}
        ]}"#;
        let layer = parse_geojson_layer(txt).unwrap();
        assert_eq!(layer.features[0].id, "X");
        assert_eq!(layer.features[1].id, "X__2");
    }

    #[test]
    fn multipolygon_flattens_rings() {
        let txt = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"name":"Two"},
             "geometry":{"type":"MultiPolygon","coordinates":[
                [[[0,0],[1,0],[1,1],[0,1],[0,0]]],
                [[[5,5],[6,5],[6,6],[5,6],[5,5]]]
             ]}}
        ]}"#;
        let layer = parse_geojson_layer(txt).unwrap();
        assert_eq!(layer.features[0].parts.len(), 2);
    }

    #[test]
    fn round_trip_through_writer() {
        let layer = parse_geojson_layer(&square_feature()).unwrap();
        let out = write_geojson_layer(&layer);
        let layer2 = parse_geojson_layer(&out).unwrap();
        assert_eq!(layer.features[0].parts, layer2.features[0].parts);
        assert_eq!(layer2.features[0].name, "Box");
    }
}
