//! Marching-squares isoline extraction from a potential surface.
//!
//! The lattice nodes are the surface's cell centroids. Crossing positions
//! are linearly interpolated on lattice edges and computed once per edge,
//! so adjacent cells share bit-identical vertices. Saddles are resolved by
//! the cell-center average rule. Chained polylines are either closed rings
//! or terminate on the lattice boundary.

use std::collections::HashMap;

use crate::analysis::PotentialSurface;
use crate::error::{Error, Result};
use crate::grid::LonLat;

#[derive(Debug, Clone, PartialEq)]
pub struct Isoline {
    pub points: Vec<LonLat>,
    /// Closed rings repeat the first point at the end.
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelIsolines {
    pub level: f64,
    pub lines: Vec<Isoline>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsolineSet {
    pub levels: Vec<LevelIsolines>,
    /// Levels skipped because they fall outside the data range.
    pub warnings: Vec<String>,
}

/// Lattice edge id: horizontal edges join (r,c)-(r,c+1), vertical edges
/// join (r,c)-(r+1,c). Ordering gives the deterministic chain start rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum EdgeId {
    H(usize, usize),
    V(usize, usize),
}

pub fn extract_isolines(surface: &PotentialSurface, levels: &[f64]) -> Result<IsolineSet> {
    if levels.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid_params("levels must be strictly ascending"));
    }
    let lo = surface.min();
    let hi = surface.max();

    let mut out = IsolineSet {
        levels: Vec::new(),
        warnings: Vec::new(),
    };
    for &level in levels {
        if !(level > lo && level < hi) {
            out.warnings.push(format!(
                "level {level} outside data range ({lo}, {hi}); skipped"
            ));
            continue;
        }
        out.levels.push(LevelIsolines {
            level,
            lines: march_level(surface, level),
        });
    }
    Ok(out)
}

/// Segment table for one cell: up to two unordered edge pairs.
/// Corner mask bits: 1 = top-left, 2 = top-right, 4 = bottom-right,
/// 8 = bottom-left. Saddles (5, 10) resolve by the center average.
fn cell_segments(
    mask: usize,
    center_inside: bool,
    top: EdgeId,
    right: EdgeId,
    bottom: EdgeId,
    left: EdgeId,
) -> ([(EdgeId, EdgeId); 2], usize) {
    let filler = (top, top);
    match mask {
        1 | 14 => ([(top, left), filler], 1),
        2 | 13 => ([(top, right), filler], 1),
        3 | 12 => ([(left, right), filler], 1),
        4 | 11 => ([(right, bottom), filler], 1),
        6 | 9 => ([(top, bottom), filler], 1),
        7 | 8 => ([(left, bottom), filler], 1),
        5 if center_inside => ([(top, right), (bottom, left)], 2),
        5 => ([(top, left), (right, bottom)], 2),
        10 if center_inside => ([(top, left), (right, bottom)], 2),
        10 => ([(top, right), (bottom, left)], 2),
        _ => ([filler, filler], 0),
    }
}

fn crossing_pos(values: &[f64], ncols: usize, level: f64, e: EdgeId) -> (f64, f64) {
    let val = |r: usize, c: usize| values[r * ncols + c];
    match e {
        EdgeId::H(r, c) => {
            let t = (level - val(r, c)) / (val(r, c + 1) - val(r, c));
            (c as f64 + t, r as f64)
        }
        EdgeId::V(r, c) => {
            let t = (level - val(r, c)) / (val(r + 1, c) - val(r, c));
            (c as f64, r as f64 + t)
        }
    }
}

fn march_level(surface: &PotentialSurface, level: f64) -> Vec<Isoline> {
    let h = &surface.header;
    let (nrows, ncols) = (h.nrows, h.ncols);
    let val = |r: usize, c: usize| surface.values[r * ncols + c];

    // Crossing position per lattice edge, shared by both adjacent cells;
    // segments as unordered edge pairs in (row, col) cell order.
    let mut crossings: HashMap<EdgeId, (f64, f64)> = HashMap::new();
    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    for r in 0..nrows.saturating_sub(1) {
        for c in 0..ncols.saturating_sub(1) {
            let tl = val(r, c);
            let tr = val(r, c + 1);
            let br = val(r + 1, c + 1);
            let bl = val(r + 1, c);
            let mask = usize::from(tl >= level)
                | (usize::from(tr >= level) << 1)
                | (usize::from(br >= level) << 2)
                | (usize::from(bl >= level) << 3);
            if mask == 0 || mask == 15 {
                continue;
            }
            let top = EdgeId::H(r, c);
            let bottom = EdgeId::H(r + 1, c);
            let left = EdgeId::V(r, c);
            let right = EdgeId::V(r, c + 1);
            let center_inside = (tl + tr + br + bl) / 4.0 >= level;
            let (buf, n) = cell_segments(mask, center_inside, top, right, bottom, left);
            for &(a, b) in &buf[..n] {
                crossings
                    .entry(a)
                    .or_insert_with(|| crossing_pos(&surface.values, ncols, level, a));
                crossings
                    .entry(b)
                    .or_insert_with(|| crossing_pos(&surface.values, ncols, level, b));
                segments.push((a, b));
            }
        }
    }

    // Adjacency: each crossed edge joins at most two segments.
    let mut adj: HashMap<EdgeId, Vec<(EdgeId, usize)>> = HashMap::new();
    for (i, &(a, b)) in segments.iter().enumerate() {
        adj.entry(a).or_default().push((b, i));
        adj.entry(b).or_default().push((a, i));
    }

    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();

    // Open chains first, started from degree-1 edges in ascending id order;
    // remaining segments belong to cycles.
    let mut starts: Vec<EdgeId> = adj
        .iter()
        .filter(|(_, v)| v.len() == 1)
        .map(|(&e, _)| e)
        .collect();
    starts.sort();
    let mut all: Vec<EdgeId> = adj.keys().copied().collect();
    all.sort();
    for start in starts.into_iter().chain(all) {
        if adj[&start].iter().all(|&(_, i)| used[i]) {
            continue;
        }
        lines.push(walk(start, &adj, &mut used, &crossings, h));
    }
    lines
}

fn walk(
    start: EdgeId,
    adj: &HashMap<EdgeId, Vec<(EdgeId, usize)>>,
    used: &mut [bool],
    crossings: &HashMap<EdgeId, (f64, f64)>,
    header: &crate::grid::GridHeader,
) -> Isoline {
    let mut edges = vec![start];
    let mut current = start;
    while let Some((nb, i)) = adj[&current].iter().find(|&&(_, i)| !used[i]).copied() {
        used[i] = true;
        edges.push(nb);
        current = nb;
    }
    // A walk that returns to its start traced a ring; the repeated first
    // edge already closes the point list.
    let closed = edges.len() > 2 && edges.first() == edges.last();
    let top = header.top_lat();
    let points: Vec<LonLat> = edges
        .iter()
        .map(|e| {
            let (x, y) = crossings[e];
            LonLat {
                lon: header.xll + (x + 0.5) * header.cellsize,
                lat: top - (y + 0.5) * header.cellsize,
            }
        })
        .collect();
    Isoline { points, closed }
}
