//! Grid statistics: frequency tables, summary measures, cumulative
//! concentration curves, minimal covering cell/zone sets, and grid-to-zone
//! aggregation.

use crate::error::{Error, Result};
use crate::grid::{cell_area_km2, PopGrid, ZoneLayer};

/// Counts of land cells per population interval.
///
/// With E input edges there are E+1 bins: an under-first bin (value < edge
/// 0), E−1 half-open bins [eᵢ, eᵢ₊₁), and a final bin closed at the
/// observed maximum. `freq_pct` holds unrounded percentages; report
/// formatting rounds to one decimal.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    pub breaks: Vec<f64>,
    pub counts: Vec<u64>,
    pub freq_pct: Vec<f64>,
    pub total: u64,
    pub observed_max: f64,
}

impl FrequencyTable {
    /// Human-readable label for bin `i`, mirroring the interval semantics.
    pub fn bin_label(&self, i: usize) -> String {
        let e = &self.breaks;
        if i == 0 {
            format!("< {}", e[0])
        } else if i < e.len() {
            format!("{} to {}", e[i - 1], e[i])
        } else {
            format!("{} to {}", e[e.len() - 1], self.observed_max)
        }
    }
}

/// Land-cell count, population total, mean and median.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSummary {
    pub land_cells: u64,
    pub population_total: f64,
    pub mean: f64,
    pub median: f64,
}

/// Smallest descending-population cell set reaching a population share.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageResult {
    pub share_target: f64,
    pub cells_used: u64,
    pub cell_pct: f64,
    pub area_km2: f64,
    pub area_pct_of_land: f64,
    pub pop_covered: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneStat {
    pub id: String,
    pub name: String,
    pub population: f64,
    pub cell_count: u64,
    /// Spherical land area of the assigned cells, km².
    pub area_km2: f64,
}

/// Per-zone aggregation result. Cells whose centroid falls in no zone are
/// accounted for in the unassigned bucket, so zone populations plus
/// unassigned always reproduce the grid total.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneStats {
    pub zones: Vec<ZoneStat>,
    pub unassigned_population: f64,
    pub unassigned_cells: u64,
    pub grid_total: f64,
}

/// Monotone step curve (cell_pct, pop_pct), cells sorted by population
/// descending with (row, col) tie-break; starts at (0, 0), ends at (100, 100).
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeCurve {
    pub points: Vec<(f64, f64)>,
}

impl CumulativeCurve {
    /// Population share (percent) carried by the top `cell_pct` percent of
    /// cells (step interpolation: whole cells only).
    pub fn pop_pct_at_cell_pct(&self, cell_pct: f64) -> f64 {
        let mut best = 0.0;
        for &(c, p) in &self.points {
            if c <= cell_pct + 1e-12 {
                best = p;
            } else {
                break;
            }
        }
        best
    }

    /// Population share (percent) carried by the bottom `cell_pct` percent.
    pub fn bottom_share_pct(&self, cell_pct: f64) -> f64 {
        100.0 - self.pop_pct_at_cell_pct(100.0 - cell_pct)
    }
}

/// Sorted land-cell list used by the concentration operations: population
/// descending, ties broken by ascending (row, col).
fn cells_sorted_desc(grid: &PopGrid) -> Vec<(usize, usize, f64)> {
    let mut cells: Vec<(usize, usize, f64)> = grid.iter_land().collect();
    cells.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap()
            .then_with(|| (a.0, a.1).cmp(&(b.0, b.1)))
    });
    cells
}

/// Classify every land cell into the intervals defined by `breaks`.
pub fn frequency_table(grid: &PopGrid, breaks: &[f64]) -> Result<FrequencyTable> {
    if breaks.is_empty() {
        return Err(Error::invalid_params("breaks must be non-empty"));
    }
    if breaks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid_params("breaks must be strictly ascending"));
    }
    let nbins = breaks.len() + 1;
    let mut counts = vec![0u64; nbins];
    let mut observed_max = f64::NEG_INFINITY;
    let mut total = 0u64;
    for (_, _, v) in grid.iter_land() {
        observed_max = observed_max.max(v);
        total += 1;
        // partition_point gives the count of edges <= v, which is the bin index
        let bin = breaks.partition_point(|&e| e <= v);
        counts[bin] += 1;
    }
    let freq_pct = counts
        .iter()
        .map(|&c| {
            if total == 0 {
                0.0
            } else {
                100.0 * c as f64 / total as f64
            }
        })
        .collect();
    Ok(FrequencyTable {
        breaks: breaks.to_vec(),
        counts,
        freq_pct,
        total,
        observed_max,
    })
}

/// Mean and median over land cells. Median uses the lower-middle order
/// statistic for even counts.
pub fn summary(grid: &PopGrid) -> Result<GridSummary> {
    let mut values: Vec<f64> = grid.iter_land().map(|(_, _, v)| v).collect();
    if values.is_empty() {
        return Err(Error::EmptyDomain {
            what: "summary over a grid with zero land cells".into(),
        });
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    let total: f64 = values.iter().sum();
    Ok(GridSummary {
        land_cells: n as u64,
        population_total: total,
        mean: total / n as f64,
        median: values[(n - 1) / 2],
    })
}

/// Concentration curve over cells sorted by population descending.
pub fn cumulative_share(grid: &PopGrid) -> Result<CumulativeCurve> {
    let total = grid.population_total();
    if !(total > 0.0) {
        return Err(Error::EmptyDomain {
            what: "cumulative share of a zero-population grid".into(),
        });
    }
    let cells = cells_sorted_desc(grid);
    let n = cells.len() as f64;
    let mut points = Vec::with_capacity(cells.len() + 1);
    points.push((0.0, 0.0));
    let mut acc = 0.0;
    for (i, (_, _, v)) in cells.iter().enumerate() {
        acc += v;
        points.push((100.0 * (i + 1) as f64 / n, 100.0 * acc / total));
    }
    if let Some(last) = points.last_mut() {
        // Guard against rounding drift at the endpoint.
        last.1 = 100.0;
    }
    Ok(CumulativeCurve { points })
}

/// Greedy minimal cell set covering `share` of the population.
/// Selecting cells by descending population is optimal for this objective.
pub fn min_cells_for_share(grid: &PopGrid, share: f64) -> Result<CoverageResult> {
    if !(share > 0.0 && share <= 1.0) {
        return Err(Error::invalid_params(format!(
            "share must be in (0, 1], got {share}"
        )));
    }
    let total = grid.population_total();
    if !(total > 0.0) {
        return Err(Error::EmptyDomain {
            what: "coverage of a zero-population grid".into(),
        });
    }
    let land_cells = grid.land_cell_count() as f64;
    let land_area = grid.land_area_km2();
    // Same arithmetic as cumulative_share, so the selected count always
    // equals the curve's first index reaching the share.
    let pct_target = 100.0 * share;
    let cells = cells_sorted_desc(grid);

    let mut pop = 0.0;
    let mut area = 0.0;
    let mut used = 0u64;
    for (row, _, v) in &cells {
        if 100.0 * pop / total >= pct_target {
            break;
        }
        pop += v;
        area += cell_area_km2(&grid.header, *row);
        used += 1;
    }
    Ok(CoverageResult {
        share_target: share,
        cells_used: used,
        cell_pct: 100.0 * used as f64 / land_cells,
        area_km2: area,
        area_pct_of_land: 100.0 * area / land_area,
        pop_covered: pop,
    })
}

/// Assign each land cell to the first zone (file order) containing its
/// centroid under the even-odd rule.
pub fn aggregate_to_zones(grid: &PopGrid, zones: &ZoneLayer) -> Result<ZoneStats> {
    if !zones.all_polygons() {
        return Err(Error::WrongKind {
            expected: "polygon layer",
            got: "layer with polyline features",
        });
    }
    let bboxes: Vec<(f64, f64, f64, f64)> = zones.features.iter().map(|f| f.bbox()).collect();
    let mut stats: Vec<ZoneStat> = zones
        .features
        .iter()
        .map(|f| ZoneStat {
            id: f.id.clone(),
            name: f.name.clone(),
            population: 0.0,
            cell_count: 0,
            area_km2: 0.0,
        })
        .collect();
    let mut unassigned_population = 0.0;
    let mut unassigned_cells = 0u64;

    for (row, col, v) in grid.iter_land() {
        let p = grid.centroid(row, col)?;
        let mut hit = None;
        for (zi, f) in zones.features.iter().enumerate() {
            let bb = bboxes[zi];
            if p.lon < bb.0 || p.lat < bb.1 || p.lon > bb.2 || p.lat > bb.3 {
                continue;
            }
            if f.contains(p) {
                hit = Some(zi);
                break;
            }
        }
        match hit {
            Some(zi) => {
                stats[zi].population += v;
                stats[zi].cell_count += 1;
                stats[zi].area_km2 += cell_area_km2(&grid.header, row);
            }
            None => {
                unassigned_population += v;
                unassigned_cells += 1;
            }
        }
    }
    Ok(ZoneStats {
        zones: stats,
        unassigned_population,
        unassigned_cells,
        grid_total: grid.population_total(),
    })
}

/// Shortest descending-population zone prefix reaching `share` of the grid
/// total. Returns the ordered prefix and the population percentage covered.
pub fn min_zones_for_share(stats: &ZoneStats, share: f64) -> Result<(Vec<ZoneStat>, f64)> {
    let assigned: f64 = stats.zones.iter().map(|z| z.population).sum();
    if !(assigned > 0.0) {
        return Err(Error::EmptyDomain {
            what: "zone share over zones with zero population".into(),
        });
    }
    let target = share * stats.grid_total;
    if target > assigned + 1e-9 {
        return Err(Error::UnreachableShare {
            requested: share,
            available: assigned / stats.grid_total,
        });
    }
    let mut sorted: Vec<ZoneStat> = stats.zones.clone();
    sorted.sort_by(|a, b| {
        b.population
            .partial_cmp(&a.population)
            .unwrap()
            .then_with(|| a.id.cmp(&b.id))
    });
    let mut acc = 0.0;
    let mut prefix = Vec::new();
    for z in sorted {
        if acc >= target {
            break;
        }
        acc += z.population;
        prefix.push(z);
    }
    Ok((prefix, 100.0 * acc / stats.grid_total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Feature, FeatureKind, GridHeader, LonLat};
    use crate::rng::SplitMix64;

    fn grid_from(values: Vec<f64>, ncols: usize) -> PopGrid {
        let nrows = values.len() / ncols;
        let h = GridHeader::new(ncols, nrows, 0.0, 0.0, 0.5, -9999.0).unwrap();
        PopGrid::new(h, values).unwrap()
    }

    fn decade_edges() -> Vec<f64> {
        vec![1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6]
    }

    #[test]
    fn all_zero_grid_lands_in_first_bin() {
        let g = grid_from(vec![0.0; 10], 5);
        let t = frequency_table(&g, &decade_edges()).unwrap();
        assert_eq!(t.counts[0], 10);
        assert!(t.counts[1..].iter().all(|&c| c == 0));
        assert_eq!(t.total, 10);
    }

    #[test]
    fn frequency_table_matches_scan_oracle() {
        let mut rng = SplitMix64::new(42);
        let values: Vec<f64> = (0..1000)
            .map(|_| (rng.next_f64() * 7.5).exp()) // spans several decades
            .collect();
        let g = grid_from(values.clone(), 50);
        let edges = decade_edges();
        let t = frequency_table(&g, &edges).unwrap();

        // Independent O(n*k) classification loop.
        let mut oracle = vec![0u64; edges.len() + 1];
        for v in &values {
            let mut bin = 0;
            for (i, e) in edges.iter().enumerate() {
                if v >= e {
                    bin = i + 1;
                }
            }
            oracle[bin] += 1;
        }
        assert_eq!(t.counts, oracle);
        assert_eq!(t.counts.iter().sum::<u64>(), t.total);
    }

    #[test]
    fn freq_pct_sums_to_100_after_rounding() {
        let mut rng = SplitMix64::new(5);
        let values: Vec<f64> = (0..777).map(|_| rng.next_f64() * 2e6).collect();
        let g = grid_from(values, 37);
        let t = frequency_table(&g, &decade_edges()).unwrap();
        let rounded: f64 = t.freq_pct.iter().map(|p| (p * 10.0).round() / 10.0).sum();
        assert!((rounded - 100.0).abs() <= 0.2, "rounded sum = {rounded}");
    }

    #[test]
    fn summary_small_cases() {
        let g = grid_from(vec![1.0, 2.0, 3.0, -9999.0], 2);
        let s = summary(&g).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.median, 2.0);
        assert_eq!(s.land_cells, 3);

        let g = grid_from(vec![0.0, 0.0, 10.0, -9999.0], 2);
        let s = summary(&g).unwrap();
        assert!((s.mean - 10.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.median, 0.0);
    }

    #[test]
    fn median_convention_lower_middle() {
        // Even count: lower-middle, not the upper-middle or the average.
        let g = grid_from(vec![1.0, 2.0, 3.0, 4.0], 2);
        let s = summary(&g).unwrap();
        assert_eq!(s.median, 2.0);
        assert_ne!(s.median, 3.0); // upper-middle convention would give 3
    }

    #[test]
    fn summary_empty_domain_errors() {
        let g = grid_from(vec![-9999.0, -9999.0], 2);
        assert!(matches!(summary(&g), Err(Error::EmptyDomain { .. })));
    }

    #[test]
    fn uniform_curve_passes_through_diagonal() {
        let g = grid_from(vec![5.0; 4], 2);
        let c = cumulative_share(&g).unwrap();
        assert!(c.points.contains(&(50.0, 50.0)));
        assert_eq!(*c.points.first().unwrap(), (0.0, 0.0));
        assert_eq!(*c.points.last().unwrap(), (100.0, 100.0));
    }

    #[test]
    fn curve_is_monotone_and_concave() {
        let mut rng = SplitMix64::new(17);
        let values: Vec<f64> = (0..200).map(|_| rng.next_f64() * 1000.0).collect();
        let g = grid_from(values, 20);
        let c = cumulative_share(&g).unwrap();
        let mut prev_gain = f64::INFINITY;
        for w in c.points.windows(2) {
            let gain = w[1].1 - w[0].1;
            assert!(gain >= -1e-9);
            assert!(gain <= prev_gain + 1e-9, "not concave");
            prev_gain = gain;
        }
    }

    #[test]
    fn min_cells_uniform_grid_takes_half() {
        let g = grid_from(vec![2.0; 9], 3);
        let r = min_cells_for_share(&g, 0.5).unwrap();
        assert_eq!(r.cells_used, 5); // ceil(9/2)
        assert!(r.pop_covered >= 0.5 * g.population_total());
    }

    #[test]
    fn min_cells_matches_brute_force_prefix() {
        let mut rng = SplitMix64::new(33);
        let values: Vec<f64> = (0..200).map(|_| (rng.next_f64() * 6.0).exp()).collect();
        let g = grid_from(values, 20);
        let r = min_cells_for_share(&g, 0.3).unwrap();

        // Exhaustive check over every prefix of the sorted order: the
        // selected count is the smallest prefix reaching 30%.
        let mut cells: Vec<f64> = g.iter_land().map(|(_, _, v)| v).collect();
        cells.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let total = g.population_total();
        let target = 0.3 * total;
        let mut smallest = None;
        let mut acc = 0.0;
        for (i, v) in cells.iter().enumerate() {
            acc += v;
            if acc >= target {
                smallest = Some(i + 1);
                break;
            }
        }
        let k = smallest.unwrap();
        assert_eq!(r.cells_used, k as u64);
        // Minimality: dropping the last selected cell breaks the bound.
        let shorter: f64 = cells[..k - 1].iter().sum();
        assert!(shorter < target);
        assert!(r.pop_covered >= target * (1.0 - 1e-12));
    }

    #[test]
    fn min_cells_monotone_in_share() {
        let mut rng = SplitMix64::new(77);
        let values: Vec<f64> = (0..100).map(|_| rng.next_f64() * 50.0).collect();
        let g = grid_from(values, 10);
        let mut prev = 0;
        for s in [0.1, 0.25, 0.5, 0.75, 0.9, 1.0] {
            let used = min_cells_for_share(&g, s).unwrap().cells_used;
            assert!(used >= prev);
            prev = used;
        }
    }

    #[test]
    fn coverage_consistent_with_curve() {
        let mut rng = SplitMix64::new(8);
        let values: Vec<f64> = (0..150).map(|_| rng.next_f64() * 100.0).collect();
        let g = grid_from(values, 15);
        let r = min_cells_for_share(&g, 0.5).unwrap();
        let c = cumulative_share(&g).unwrap();
        // Same sort and tie-break: cells_used equals the first curve index
        // whose pop_pct reaches 50.
        let first = c
            .points
            .iter()
            .position(|&(_, p)| p >= 50.0)
            .unwrap();
        assert_eq!(r.cells_used as usize, first);
    }

    fn rect_feature(id: &str, lon0: f64, lat0: f64, lon1: f64, lat1: f64) -> Feature {
        let ring = vec![
            LonLat::new(lon0, lat0).unwrap(),
            LonLat::new(lon1, lat0).unwrap(),
            LonLat::new(lon1, lat1).unwrap(),
            LonLat::new(lon0, lat1).unwrap(),
            LonLat::new(lon0, lat0).unwrap(),
        ];
        Feature {
            id: id.into(),
            name: id.into(),
            kind: FeatureKind::Polygons,
            parts: vec![ring],
        }
    }

    #[test]
    fn single_zone_covering_everything() {
        let g = grid_from(vec![1.0; 16], 4); // extent [0,2]x[0,2] at 0.5 deg
        let layer = ZoneLayer::new(vec![rect_feature("all", -1.0, -1.0, 3.0, 3.0)]).unwrap();
        let zs = aggregate_to_zones(&g, &layer).unwrap();
        assert_eq!(zs.zones[0].population, 16.0);
        assert_eq!(zs.unassigned_cells, 0);
    }

    #[test]
    fn half_plane_split_is_even() {
        let g = grid_from(vec![1.0; 16], 4);
        let west = rect_feature("west", -1.0, -1.0, 1.0, 3.0);
        let east = rect_feature("east", 1.0, -1.0, 3.0, 3.0);
        let layer = ZoneLayer::new(vec![west, east]).unwrap();
        let zs = aggregate_to_zones(&g, &layer).unwrap();
        // Direct centroid count: columns 0..2 have lon 0.25/0.75, cols 2..4
        // have 1.25/1.75.
        assert_eq!(zs.zones[0].population, 8.0);
        assert_eq!(zs.zones[1].population, 8.0);
        assert_eq!(zs.unassigned_cells, 0);
    }

    #[test]
    fn conservation_zones_plus_unassigned() {
        let mut rng = SplitMix64::new(3);
        let values: Vec<f64> = (0..64).map(|_| (rng.next_f64() * 100.0).round()).collect();
        let g = grid_from(values, 8);
        let layer = ZoneLayer::new(vec![rect_feature("mid", 0.5, 0.5, 2.5, 2.5)]).unwrap();
        let zs = aggregate_to_zones(&g, &layer).unwrap();
        let sum: f64 = zs.zones.iter().map(|z| z.population).sum::<f64>() + zs.unassigned_population;
        assert_eq!(sum, zs.grid_total); // integer-valued, exact
    }

    #[test]
    fn polyline_layer_is_wrong_kind() {
        let g = grid_from(vec![1.0; 4], 2);
        let f = Feature {
            id: "line".into(),
            name: "line".into(),
            kind: FeatureKind::Polylines,
            parts: vec![vec![
                LonLat::new(0.0, 0.0).unwrap(),
                LonLat::new(1.0, 1.0).unwrap(),
            ]],
        };
        let layer = ZoneLayer::new(vec![f]).unwrap();
        assert!(matches!(
            aggregate_to_zones(&g, &layer),
            Err(Error::WrongKind { .. })
        ));
    }

    fn zone_stats(pops: &[(&str, f64)], grid_total: f64) -> ZoneStats {
        ZoneStats {
            zones: pops
                .iter()
                .map(|(id, p)| ZoneStat {
                    id: id.to_string(),
                    name: id.to_string(),
                    population: *p,
                    cell_count: 1,
                    area_km2: 0.0,
                })
                .collect(),
            unassigned_population: grid_total - pops.iter().map(|p| p.1).sum::<f64>(),
            unassigned_cells: 0,
            grid_total,
        }
    }

    #[test]
    fn min_zones_synthetic_five() {
        let zs = zone_stats(
            &[("a", 40.0), ("b", 30.0), ("c", 15.0), ("d", 10.0), ("e", 5.0)],
            100.0,
        );
        let (prefix, pct) = min_zones_for_share(&zs, 0.5).unwrap();
        assert_eq!(prefix.len(), 2);
        assert_eq!(prefix[0].id, "a");
        assert_eq!(prefix[1].id, "b");
        assert!((pct - 70.0).abs() < 1e-9);
    }

    #[test]
    fn min_zones_single_zone() {
        let zs = zone_stats(&[("only", 100.0)], 100.0);
        let (prefix, _) = min_zones_for_share(&zs, 0.5).unwrap();
        assert_eq!(prefix.len(), 1);
    }

    #[test]
    fn min_zones_unreachable_share() {
        let zs = zone_stats(&[("a", 10.0)], 100.0); // 90% unassigned
        assert!(matches!(
            min_zones_for_share(&zs, 0.5),
            Err(Error::UnreachableShare { .. })
        ));
    }
}
