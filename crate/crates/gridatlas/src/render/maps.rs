//! Scene constructors for the map representations.

use crate::analysis::{HexLayer, IsolineSet, LinkSet};
use crate::classify::{classify, ClassBreaks, RangeFlag};
use crate::error::{Error, Result};
use crate::grid::{LonLat, PopGrid, ZoneLayer};
use crate::render::svg::fmt3;
use crate::render::{
    Legend, LegendClass, MapFrame, Primitive, Scene, Style, SymbolScale, TextAnchor,
};
use crate::rng::SplitMix64;

pub const NO_POP_COLOR: &str = "#f0f0f0";
pub const MISSING_COLOR: &str = "#ffb3c6";

const PALETTES: &[(&str, [&str; 9])] = &[
    (
        "blues",
        [
            "#f7fbff", "#deebf7", "#c6dbef", "#9ecae1", "#6baed6", "#4292c6", "#2171b5",
            "#08519c", "#08306b",
        ],
    ),
    (
        "oranges",
        [
            "#fff5eb", "#fee6ce", "#fdd0a2", "#fdae6b", "#fd8d3c", "#f16913", "#d94801",
            "#a63603", "#7f2704",
        ],
    ),
    (
        "greens",
        [
            "#f7fcf5", "#e5f5e0", "#c7e9c0", "#a1d99b", "#74c476", "#41ab5d", "#238b45",
            "#006d2c", "#00441b",
        ],
    ),
    (
        "purples",
        [
            "#fcfbfd", "#efedf5", "#dadaeb", "#bcbddc", "#9e9ac8", "#807dba", "#6a51a3",
            "#54278f", "#3f007d",
        ],
    ),
];

/// k colors sampled evenly from a named 9-step ramp.
pub fn palette_colors(name: &str, k: usize) -> Result<Vec<String>> {
    let ramp = PALETTES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, ramp)| ramp)
        .ok_or_else(|| Error::invalid_params(format!("unknown palette {name:?}")))?;
    if k == 0 || k > ramp.len() {
        return Err(Error::invalid_params(format!(
            "palette supports 1..={} classes, got {k}",
            ramp.len()
        )));
    }
    Ok((0..k)
        .map(|i| {
            let idx = if k == 1 {
                ramp.len() - 1
            } else {
                (i * (ramp.len() - 1) + (k - 1) / 2) / (k - 1)
            };
            ramp[idx].to_string()
        })
        .collect())
}

/// Largest "nice" value (1, 2, 2.5 or 5 times a power of ten) <= x.
fn nice_below(x: f64) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    let k = x.log10().floor();
    for kk in [k, k - 1.0] {
        for m in [5.0, 2.5, 2.0, 1.0] {
            let v = m * 10f64.powf(kk);
            if v <= x * (1.0 + 1e-12) {
                return v;
            }
        }
    }
    x
}

/// Compact value label: "2.5 M", "250 k", "12".
fn humanize(v: f64) -> String {
    if v >= 1e9 {
        format!("{} G", trim(v / 1e9))
    } else if v >= 1e6 {
        format!("{} M", trim(v / 1e6))
    } else if v >= 1e3 {
        format!("{} k", trim(v / 1e3))
    } else {
        trim(v)
    }
}

fn trim(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Plane position (degrees relative to the projection center) of a point,
/// without longitude wrapping; used for geometry that is already continuous.
fn plane_to_px(frame: &MapFrame, x_deg: f64, lat: f64) -> (f64, f64) {
    (
        x_deg * frame.proj.scale + frame.map_width() / 2.0 + frame.margin,
        -lat * frame.proj.scale + frame.map_height() / 2.0 + frame.margin,
    )
}

fn wrap180(mut x: f64) -> f64 {
    while x > 180.0 {
        x -= 360.0;
    }
    while x < -180.0 {
        x += 360.0;
    }
    x
}

/// Split a lon/lat path at the projection's antimeridian seam. Output
/// pieces are (x, lat) pairs in centered plane degrees, each piece free of
/// wrap jumps.
fn split_at_seam(points: &[LonLat], center_lon: f64) -> Vec<Vec<(f64, f64)>> {
    if points.is_empty() {
        return Vec::new();
    }
    let mut pieces = Vec::new();
    let mut piece: Vec<(f64, f64)> = Vec::new();
    let mut xa = wrap180(points[0].lon - center_lon);
    piece.push((xa, points[0].lat));
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let dx = wrap180(b.lon - center_lon) - xa;
        let dx = if dx > 180.0 {
            dx - 360.0
        } else if dx < -180.0 {
            dx + 360.0
        } else {
            dx
        };
        let xb = xa + dx;
        if xb > 180.0 || xb < -180.0 {
            let seam = if xb > 180.0 { 180.0 } else { -180.0 };
            let t = (seam - xa) / (xb - xa);
            let lat_c = a.lat + t * (b.lat - a.lat);
            piece.push((seam, lat_c));
            pieces.push(std::mem::take(&mut piece));
            piece.push((-seam, lat_c));
            xa = xb - 360.0 * seam.signum();
        } else {
            xa = xb;
        }
        piece.push((xa, b.lat));
    }
    pieces.push(piece);
    pieces
}

/// Projected polyline pieces in viewport pixels.
fn path_px(frame: &MapFrame, points: &[LonLat]) -> Vec<Vec<(f64, f64)>> {
    split_at_seam(points, frame.proj.center_lon)
        .into_iter()
        .map(|piece| {
            piece
                .into_iter()
                .map(|(x, lat)| plane_to_px(frame, x, lat))
                .collect()
        })
        .filter(|p: &Vec<(f64, f64)>| p.len() >= 2)
        .collect()
}

/// Projected polygon ring pieces. A ring cut by the seam yields several
/// closed pieces; the final piece wraps around to rejoin the first.
fn ring_px(frame: &MapFrame, ring: &[LonLat]) -> Vec<Vec<(f64, f64)>> {
    let mut pieces = split_at_seam(ring, frame.proj.center_lon);
    if pieces.len() > 1 {
        // First and last pieces are halves of the same component.
        let last = pieces.pop().unwrap();
        let mut merged = last;
        merged.extend(pieces.remove(0));
        pieces.insert(0, merged);
    }
    pieces
        .into_iter()
        .map(|piece| {
            piece
                .into_iter()
                .map(|(x, lat)| plane_to_px(frame, x, lat))
                .collect()
        })
        .filter(|p: &Vec<(f64, f64)>| p.len() >= 3)
        .collect()
}

fn zone_polygon(frame: &MapFrame, parts: &[Vec<LonLat>], style: Style) -> Primitive {
    let rings = parts.iter().flat_map(|r| ring_px(frame, r)).collect();
    Primitive::Polygon {
        rings,
        style,
        meta: vec![],
    }
}

/// Graticule and basemap geometry, painted beneath thematic layers.
pub fn basemap_layers(
    frame: &MapFrame,
    zones: Option<&ZoneLayer>,
    graticule: bool,
) -> Vec<Primitive> {
    let mut out = Vec::new();
    if graticule {
        let style = Style::stroke("#dddddd", 0.5);
        for k in 0..=12 {
            let lon = -180.0 + 30.0 * k as f64;
            let pts = vec![
                frame.to_px(LonLat { lon, lat: -90.0 }),
                frame.to_px(LonLat { lon, lat: 90.0 }),
            ];
            out.push(Primitive::Polyline {
                points: pts,
                style: style.clone(),
                meta: vec![],
            });
        }
        for k in 0..=6 {
            let lat = -90.0 + 30.0 * k as f64;
            let pts = vec![
                frame.to_px(LonLat { lon: -180.0, lat }),
                frame.to_px(LonLat { lon: 180.0, lat }),
            ];
            out.push(Primitive::Polyline {
                points: pts,
                style: style.clone(),
                meta: vec![],
            });
        }
    }
    if let Some(layer) = zones {
        for f in &layer.features {
            match f.kind {
                crate::grid::FeatureKind::Polygons => {
                    out.push(zone_polygon(
                        frame,
                        &f.parts,
                        Style::fill("#f5f5f5").with_stroke("#bbbbbb", 0.5),
                    ));
                }
                crate::grid::FeatureKind::Polylines => {
                    for part in &f.parts {
                        for piece in path_px(frame, part) {
                            out.push(Primitive::Polyline {
                                points: piece,
                                style: Style::stroke("#8ab4d4", 0.7),
                                meta: vec![],
                            });
                        }
                    }
                }
            }
        }
    }
    // map frame border
    let (x0, y0) = (frame.margin, frame.margin);
    let (w, h) = (frame.map_width(), frame.map_height());
    out.push(Primitive::Polyline {
        points: vec![
            (x0, y0),
            (x0 + w, y0),
            (x0 + w, y0 + h),
            (x0, y0 + h),
            (x0, y0),
        ],
        style: Style::stroke("#777777", 0.8),
        meta: vec![],
    });
    out
}

/// One anchored value for proportional-symbol rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolItem {
    pub anchor: LonLat,
    pub value: f64,
    pub label: String,
}

/// Proportional circles, drawn large-first so small symbols stay visible;
/// zero values are omitted. Includes the nested-circle legend.
pub fn render_prop_circles(
    items: &[SymbolItem],
    scale: &SymbolScale,
    frame: &MapFrame,
) -> Scene {
    let mut scene = Scene::new(frame);
    let mut drawn: Vec<&SymbolItem> = items.iter().filter(|i| i.value > 0.0).collect();
    drawn.sort_by(|a, b| b.value.partial_cmp(&a.value).unwrap());
    let style = Style::fill("#e4572e")
        .with_opacity(0.55)
        .with_stroke("#7f2704", 0.8);
    for item in &drawn {
        let (cx, cy) = frame.to_px(item.anchor);
        scene.push(Primitive::Circle {
            cx,
            cy,
            r: scale.radius(item.value),
            style: style.clone(),
            meta: vec![("value".to_string(), format!("{}", item.value))],
        });
    }
    let vmax = drawn.first().map(|i| i.value).unwrap_or(0.0);
    scene.legend = Some(Legend::CirclesNested {
        title: "Population".to_string(),
        entries: legend_values(vmax)
            .into_iter()
            .map(|v| (v, humanize(v)))
            .collect(),
        scale: *scale,
    });
    scene
}

fn legend_values(vmax: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for divisor in [1.0, 4.0, 16.0] {
        let v = nice_below(vmax / divisor);
        if v > 0.0 && !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Input variants for choropleth rendering.
pub enum ChoroplethItems<'a> {
    /// Zone polygons with one value per feature.
    Zones {
        layer: &'a ZoneLayer,
        values: &'a [f64],
    },
    /// Grid cells, colored by a value raster sharing the grid's header.
    Cells {
        grid: &'a PopGrid,
        values: &'a PopGrid,
    },
}

/// Classed color fill. Zeros form the distinct "no population" class, NaN
/// values render in the flagged missing style; legend boxes carry the exact
/// break labels and per-class counts.
pub fn render_choropleth(
    items: ChoroplethItems,
    breaks: &ClassBreaks,
    palette: &str,
    frame: &MapFrame,
) -> Result<Scene> {
    let k = breaks.k();
    let colors = palette_colors(palette, k)?;
    let mut scene = Scene::new(frame);
    let mut counts = vec![0u64; k];
    let mut zeros = 0u64;
    let mut missing = 0u64;

    let mut color_of = |v: f64| -> String {
        if v.is_nan() {
            missing += 1;
            MISSING_COLOR.to_string()
        } else if v == 0.0 {
            zeros += 1;
            NO_POP_COLOR.to_string()
        } else {
            let c = classify(v, breaks);
            if c.flag == RangeFlag::InRange || c.flag == RangeFlag::AboveMax {
                counts[c.class] += 1;
            }
            colors[c.class].clone()
        }
    };

    match items {
        ChoroplethItems::Zones { layer, values } => {
            if layer.features.len() != values.len() {
                return Err(Error::invalid_params(format!(
                    "{} zones but {} values",
                    layer.features.len(),
                    values.len()
                )));
            }
            for (f, &v) in layer.features.iter().zip(values) {
                let style = Style::fill(&color_of(v)).with_stroke("#666666", 0.4);
                scene.push(zone_polygon(frame, &f.parts, style));
            }
        }
        ChoroplethItems::Cells { grid, values } => {
            if grid.header != values.header {
                return Err(Error::invalid_params(
                    "value raster header differs from the grid",
                ));
            }
            for (r, c, _) in grid.iter_land() {
                let v = values.get(r, c);
                let v = if v == values.header.nodata { f64::NAN } else { v };
                let rect = cell_rect_px(frame, &grid.header, r, c);
                scene.push(Primitive::Polygon {
                    rings: vec![rect],
                    style: Style::fill(&color_of(v)),
                    meta: vec![],
                });
            }
        }
    }

    let mut entries = Vec::with_capacity(k + 2);
    if zeros > 0 {
        entries.push(LegendClass {
            color: NO_POP_COLOR.to_string(),
            label: "no population".to_string(),
            count: Some(zeros),
        });
    }
    for i in 0..k {
        let closing = if i + 1 == k { "]" } else { ")" };
        entries.push(LegendClass {
            color: colors[i].clone(),
            label: format!("[{}, {}{closing}", trim(breaks.edges[i]), trim(breaks.edges[i + 1])),
            count: Some(counts[i]),
        });
    }
    if missing > 0 {
        entries.push(LegendClass {
            color: MISSING_COLOR.to_string(),
            label: "missing".to_string(),
            count: Some(missing),
        });
    }
    scene.legend = Some(Legend::ClassBoxes {
        title: "Classes".to_string(),
        entries,
    });
    Ok(scene)
}

fn cell_rect_px(
    frame: &MapFrame,
    header: &crate::grid::GridHeader,
    row: usize,
    col: usize,
) -> Vec<(f64, f64)> {
    run_rect_px(frame, header, row, col, col + 1)
}

/// Dot-density rendering: each land cell draws floor(pop/pop_per_dot) dots
/// plus one Bernoulli dot for the fraction, placed uniformly inside the
/// cell. Placement is keyed on (seed, row, col), so output is independent
/// of iteration order.
pub fn render_dots(
    grid: &PopGrid,
    pop_per_dot: f64,
    seed: u64,
    frame: &MapFrame,
) -> Result<Scene> {
    if !(pop_per_dot > 0.0) {
        return Err(Error::invalid_params(format!(
            "pop_per_dot must be > 0, got {pop_per_dot}"
        )));
    }
    let mut scene = Scene::new(frame);
    let style = Style::fill("#1a1a1a").with_opacity(0.85);
    let h = &grid.header;
    for (row, col, v) in grid.iter_land() {
        if v <= 0.0 {
            continue;
        }
        let mut rng = SplitMix64::for_cell(seed, row, col);
        let exact = v / pop_per_dot;
        let mut n = exact.floor() as u64;
        if rng.next_f64() < exact.fract() {
            n += 1;
        }
        for _ in 0..n {
            let u1 = rng.next_f64();
            let u2 = rng.next_f64();
            let lon = h.xll + (col as f64 + u1) * h.cellsize;
            let lat = h.top_lat() - (row as f64 + u2) * h.cellsize;
            let (cx, cy) = frame.to_px(LonLat { lon, lat });
            scene.push(Primitive::Circle {
                cx,
                cy,
                r: 0.8,
                style: style.clone(),
                meta: vec![],
            });
        }
    }
    scene.legend = Some(Legend::ClassBoxes {
        title: format!("One dot = {}", humanize(pop_per_dot)),
        entries: vec![LegendClass {
            color: "#1a1a1a".to_string(),
            label: humanize(pop_per_dot),
            count: None,
        }],
    });
    Ok(scene)
}

/// Dorling layout outcome, reported alongside the scene.
#[derive(Debug, Clone, PartialEq)]
pub struct DorlingStats {
    pub iterations: usize,
    pub converged: bool,
    pub max_overlap_px: f64,
}

/// Dorling circles: block values as proportional circles, iteratively
/// pushed apart until no pair overlaps by more than 0.1 px. Pairs are
/// processed in ascending (i, j) order with damping 0.5; sizes never change.
pub fn render_dorling(
    blocks: &PopGrid,
    scale: &SymbolScale,
    max_iter: usize,
    frame: &MapFrame,
) -> (Scene, DorlingStats) {
    let mut centers: Vec<(f64, f64)> = Vec::new();
    let mut radii: Vec<f64> = Vec::new();
    for (r, c, v) in blocks.iter_land() {
        if v > 0.0 {
            let p = blocks
                .centroid(r, c)
                .expect("land cell centroid in range");
            centers.push(frame.to_px(p));
            radii.push(scale.radius(v));
        }
    }

    let mut stats = DorlingStats {
        iterations: 0,
        converged: false,
        max_overlap_px: 0.0,
    };
    const TOL: f64 = 0.1;
    const DAMPING: f64 = 0.5;
    for iter in 0..=max_iter {
        let pairs = overlapping_pairs(&centers, &radii);
        let max_overlap = pairs
            .iter()
            .map(|&(i, j)| {
                let d = dist(centers[i], centers[j]);
                radii[i] + radii[j] - d
            })
            .fold(0.0, f64::max);
        stats.max_overlap_px = max_overlap;
        stats.iterations = iter;
        if max_overlap <= TOL {
            stats.converged = true;
            break;
        }
        if iter == max_iter {
            break;
        }
        for (i, j) in pairs {
            let d = dist(centers[i], centers[j]);
            let overlap = radii[i] + radii[j] - d;
            if overlap <= 0.0 {
                continue; // separated by an earlier move this sweep
            }
            let (ux, uy) = if d > 0.0 {
                (
                    (centers[j].0 - centers[i].0) / d,
                    (centers[j].1 - centers[i].1) / d,
                )
            } else {
                (1.0, 0.0) // coincident centers part along +x
            };
            let push = overlap / 2.0 * DAMPING;
            centers[i].0 -= ux * push;
            centers[i].1 -= uy * push;
            centers[j].0 += ux * push;
            centers[j].1 += uy * push;
        }
    }

    let mut scene = Scene::new(frame);
    let mut order: Vec<usize> = (0..centers.len()).collect();
    order.sort_by(|&a, &b| radii[b].partial_cmp(&radii[a]).unwrap().then(a.cmp(&b)));
    let style = Style::fill("#2a9d8f")
        .with_opacity(0.8)
        .with_stroke("#ffffff", 0.8);
    for i in order {
        scene.push(Primitive::Circle {
            cx: centers[i].0,
            cy: centers[i].1,
            r: radii[i],
            style: style.clone(),
            meta: vec![],
        });
    }
    let vmax = blocks
        .iter_land()
        .map(|(_, _, v)| v)
        .fold(0.0f64, f64::max);
    scene.legend = Some(Legend::CirclesNested {
        title: "Population per block".to_string(),
        entries: legend_values(vmax)
            .into_iter()
            .map(|v| (v, humanize(v)))
            .collect(),
        scale: *scale,
    });
    if !stats.converged {
        scene.push(Primitive::Text {
            x: scene.width - scene.margin - 4.0,
            y: scene.height - 6.0,
            content: format!(
                "layout not converged: max overlap {} px",
                fmt3(stats.max_overlap_px)
            ),
            size: 9.0,
            anchor: TextAnchor::End,
            style: Style::fill("#aa3333"),
        });
    }
    (scene, stats)
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Overlapping pairs via a spatial hash, returned sorted ascending (i, j).
fn overlapping_pairs(centers: &[(f64, f64)], radii: &[f64]) -> Vec<(usize, usize)> {
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    if rmax <= 0.0 || centers.len() < 2 {
        return Vec::new();
    }
    let cell = 2.0 * rmax;
    let mut buckets: std::collections::HashMap<(i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    for (i, &(x, y)) in centers.iter().enumerate() {
        buckets
            .entry(((x / cell).floor() as i64, (y / cell).floor() as i64))
            .or_default()
            .push(i);
    }
    let mut pairs = Vec::new();
    for (i, &(x, y)) in centers.iter().enumerate() {
        let bx = (x / cell).floor() as i64;
        let by = (y / cell).floor() as i64;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = buckets.get(&(bx + dx, by + dy)) {
                    for &j in list {
                        if j > i && dist(centers[i], centers[j]) < radii[i] + radii[j] {
                            pairs.push((i, j));
                        }
                    }
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// 2.5-D prism map: hexagons extruded to height_scale·value, painted
/// back-to-front (descending plane y of the hex center, ties by x).
pub fn render_hex_extrusion(
    hexes: &HexLayer,
    height_scale: f64,
    frame: &MapFrame,
) -> Result<Scene> {
    if !(height_scale > 0.0) {
        return Err(Error::invalid_params(format!(
            "height_scale must be > 0, got {height_scale}"
        )));
    }
    let mut scene = Scene::new(frame);
    let mut order: Vec<usize> = (0..hexes.cells.len()).collect();
    order.sort_by(|&a, &b| {
        let ca = hexes.center_plane(hexes.cells[a].q, hexes.cells[a].r);
        let cb = hexes.center_plane(hexes.cells[b].q, hexes.cells[b].r);
        cb.1.partial_cmp(&ca.1)
            .unwrap()
            .then(ca.0.partial_cmp(&cb.0).unwrap())
    });

    let top_style = Style::fill("#f4a259").with_stroke("#7a4419", 0.4);
    let side_style = Style::fill("#c87f3b").with_stroke("#7a4419", 0.3);
    let center = frame.proj.center_lon;
    for idx in order {
        let cell = &hexes.cells[idx];
        let h_px = height_scale * cell.value;
        let base: Vec<(f64, f64)> = hexes
            .corners_plane(cell.q, cell.r)
            .iter()
            .map(|&(x, y)| plane_to_px(frame, wrap180(x - center), y))
            .collect();
        let mut top: Vec<(f64, f64)> = base.iter().map(|&(x, y)| (x, y - h_px)).collect();
        let mut sides = Vec::new();
        if h_px > 0.0 {
            let cy = {
                let c = hexes.center_plane(cell.q, cell.r);
                plane_to_px(frame, wrap180(c.0 - center), c.1).1
            };
            for k in 0..6 {
                let a = base[k];
                let b = base[(k + 1) % 6];
                let mid_y = (a.1 + b.1) / 2.0;
                if mid_y > cy {
                    sides.push(vec![a, b, (b.0, b.1 - h_px), (a.0, a.1 - h_px), a]);
                }
            }
        }
        let first = top[0];
        top.push(first);
        scene.push(Primitive::Prism {
            top,
            sides,
            top_style: top_style.clone(),
            side_style: side_style.clone(),
        });
    }

    let vmax = hexes.cells.iter().map(|c| c.value).fold(0.0f64, f64::max);
    let v1 = nice_below(vmax);
    let mut entries = Vec::new();
    if v1 > 0.0 {
        entries.push((height_scale * v1, humanize(v1)));
        let v2 = nice_below(v1 / 4.0);
        if v2 > 0.0 {
            entries.push((height_scale * v2, humanize(v2)));
        }
    }
    scene.legend = Some(Legend::HeightBar {
        title: "Population".to_string(),
        entries,
    });
    Ok(scene)
}

/// Tobler-style ridgeline map: one line per grid row, the vertical offset
/// proportional to the cell value, rows painted north to south with opaque
/// fills so nearer ridges occlude farther ones.
pub fn render_linemap(grid: &PopGrid, amplitude: f64, frame: &MapFrame) -> Result<Scene> {
    if !(amplitude > 0.0) {
        return Err(Error::invalid_params(format!(
            "amplitude must be > 0, got {amplitude}"
        )));
    }
    let mut scene = Scene::new(frame);
    let h = &grid.header;
    let vmax = grid.iter_land().map(|(_, _, v)| v).fold(0.0f64, f64::max);
    let line_style = Style::stroke("#333333", 0.8);
    let fill_style = Style::fill(&scene.background.clone());

    for row in 0..h.nrows {
        let lat = h.top_lat() - (row as f64 + 0.5) * h.cellsize;
        // split this row into runs of land cells
        let mut col = 0;
        while col < h.ncols {
            if grid.is_nodata(row, col) {
                col += 1;
                continue;
            }
            let start = col;
            while col < h.ncols && !grid.is_nodata(row, col) {
                col += 1;
            }
            let run = start..col;
            let mut pts: Vec<(f64, f64)> = Vec::with_capacity(run.len().max(2));
            for c in run.clone() {
                let lon = h.xll + (c as f64 + 0.5) * h.cellsize;
                let (x, ybase) = frame.to_px(LonLat { lon, lat });
                let v = grid.get(row, c);
                let off = if vmax > 0.0 {
                    amplitude * v / vmax
                } else {
                    0.0
                };
                pts.push((x, ybase - off));
            }
            if pts.len() == 1 {
                // single-cell run: short tick across the cell
                let (x, y) = pts[0];
                let half = h.cellsize * frame.proj.scale / 2.0;
                pts = vec![(x - half, y), (x + half, y)];
            }
            let (_, ybase) = frame.to_px(LonLat {
                lon: h.xll + 0.5 * h.cellsize,
                lat,
            });
            let mut fill_ring = pts.clone();
            fill_ring.push((pts.last().unwrap().0, ybase));
            fill_ring.push((pts[0].0, ybase));
            fill_ring.push(pts[0]);
            scene.push(Primitive::Polygon {
                rings: vec![fill_ring],
                style: fill_style.clone(),
                meta: vec![],
            });
            scene.push(Primitive::Polyline {
                points: pts,
                style: line_style.clone(),
                meta: vec![],
            });
        }
    }
    scene.legend = Some(Legend::LineWeight {
        title: format!("Row profile, peak = {}", humanize(vmax)),
        entries: vec![(0.8, format!("max {}", humanize(vmax)))],
    });
    Ok(scene)
}

/// Extra layers composed above a base scene (below its legend).
pub enum OverlayLayer<'a> {
    Isolines(&'a IsolineSet),
    Links {
        links: &'a LinkSet,
        scale_width: bool,
    },
    /// Mask cells with value 1 (or 0 when inverted, for void styling).
    Mask {
        mask: &'a PopGrid,
        invert: bool,
    },
    Zones(&'a ZoneLayer),
}

/// Append overlay geometry to a scene built on the same projection.
pub fn render_overlay(
    mut base: Scene,
    extras: OverlayLayer,
    style: Style,
    frame: &MapFrame,
) -> Result<Scene> {
    if !base.matches_frame(frame) {
        return Err(Error::Composition {
            detail: "overlay projection differs from the base scene".into(),
        });
    }
    match extras {
        OverlayLayer::Isolines(set) => {
            for lvl in &set.levels {
                for line in &lvl.lines {
                    for piece in path_px(frame, &line.points) {
                        base.push(Primitive::Polyline {
                            points: piece,
                            style: style.clone(),
                            meta: vec![("level".to_string(), format!("{}", lvl.level))],
                        });
                    }
                }
            }
        }
        OverlayLayer::Links { links, scale_width } => {
            let max_min_mass = links
                .edges
                .iter()
                .map(|&(i, j, _)| links.nodes[i].1.min(links.nodes[j].1))
                .fold(0.0f64, f64::max);
            for &(i, j, d) in &links.edges {
                let a = frame.to_px(links.nodes[i].0);
                let b = frame.to_px(links.nodes[j].0);
                let mut s = style.clone();
                if scale_width && max_min_mass > 0.0 {
                    let m = links.nodes[i].1.min(links.nodes[j].1);
                    s.stroke_width = style.stroke_width * (m / max_min_mass).sqrt();
                }
                base.push(Primitive::Polyline {
                    points: vec![a, b],
                    style: s,
                    meta: vec![("distance_km".to_string(), fmt3(d))],
                });
            }
        }
        OverlayLayer::Mask { mask, invert } => {
            let want = if invert { 0.0 } else { 1.0 };
            let h = &mask.header;
            // merge runs of masked cells per row into single rectangles
            for row in 0..h.nrows {
                let mut col = 0;
                while col < h.ncols {
                    let hit = !mask.is_nodata(row, col) && mask.get(row, col) == want;
                    if !hit {
                        col += 1;
                        continue;
                    }
                    let start = col;
                    while col < h.ncols
                        && !mask.is_nodata(row, col)
                        && mask.get(row, col) == want
                    {
                        col += 1;
                    }
                    let rect = run_rect_px(frame, h, row, start, col);
                    base.push(Primitive::Polygon {
                        rings: vec![rect],
                        style: style.clone(),
                        meta: vec![],
                    });
                }
            }
        }
        OverlayLayer::Zones(layer) => {
            for f in &layer.features {
                match f.kind {
                    crate::grid::FeatureKind::Polygons => {
                        base.push(zone_polygon(frame, &f.parts, style.clone()));
                    }
                    crate::grid::FeatureKind::Polylines => {
                        for part in &f.parts {
                            for piece in path_px(frame, part) {
                                base.push(Primitive::Polyline {
                                    points: piece,
                                    style: style.clone(),
                                    meta: vec![],
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(base)
}

fn run_rect_px(
    frame: &MapFrame,
    header: &crate::grid::GridHeader,
    row: usize,
    col_start: usize,
    col_end: usize,
) -> Vec<(f64, f64)> {
    let lon0 = header.xll + col_start as f64 * header.cellsize;
    let width = (col_end - col_start) as f64 * header.cellsize;
    let lat1 = header.top_lat() - row as f64 * header.cellsize;
    let lat0 = lat1 - header.cellsize;
    let x0 = wrap180(lon0 - frame.proj.center_lon);
    vec![
        plane_to_px(frame, x0, lat1),
        plane_to_px(frame, x0 + width, lat1),
        plane_to_px(frame, x0 + width, lat0),
        plane_to_px(frame, x0, lat0),
        plane_to_px(frame, x0, lat1),
    ]
}
