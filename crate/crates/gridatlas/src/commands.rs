//! Subcommand implementations shared by the CLI binary and the test suite:
//! statistics reports, the thirteen map pipelines, basemap fetching, and
//! synthetic fixtures. Every artifact carries a provenance record
//! sufficient to re-run the exact command.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::analysis::{
    aggregate_blocks, build_links, coastal_mask, empty_quarters, extract_isolines, hex_bin,
    local_relative_index, stewart_potential, DistanceMetric,
};
use crate::cartogram::{
    build_density, cartogram_diagnostics, solve_cartogram, warp_geometry, LatticeSpec, SolveOpts,
};
use crate::classify::breaks_quantile;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::grid::{
    parse_asc_grid, parse_csv_grid, parse_geojson_layer, synth_grid, write_asc_grid, Feature,
    GridHeader, LonLat, PopGrid, SynthSpec, ZoneLayer,
};
use crate::render::{
    basemap_layers, emit_svg, render_choropleth, render_dorling, render_dots,
    render_hex_extrusion, render_linemap, render_overlay, render_prop_circles, ChoroplethItems,
    MapFrame, OverlayLayer, Projection, Scene, Style, SymbolItem, SymbolScale,
};
use crate::stats::{
    aggregate_to_zones, cumulative_share, frequency_table, min_cells_for_share,
    min_zones_for_share, summary,
};

/// Execution context: resolved configuration, output directory, optional
/// data directory (GRIDATLAS_DATA), and the invoking command line.
#[derive(Debug, Clone)]
pub struct Ctx {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub data_dir: Option<PathBuf>,
    pub command_line: String,
}

impl Ctx {
    pub fn new(config: RunConfig) -> Self {
        let out_dir = config.output.dir.clone();
        Ctx {
            config,
            out_dir,
            data_dir: std::env::var_os("GRIDATLAS_DATA").map(PathBuf::from),
            command_line: std::env::args().collect::<Vec<_>>().join(" "),
        }
    }

    /// Relative data paths resolve against GRIDATLAS_DATA when it is set.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        match (&self.data_dir, p.is_relative()) {
            (Some(dir), true) => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    fn grid_path(&self) -> Result<PathBuf> {
        self.config
            .data
            .grid
            .as_deref()
            .map(|p| self.resolve(p))
            .ok_or_else(|| Error::MissingInput {
                name: "grid".into(),
            })
    }

    fn layer_path(&self, which: &str) -> Result<PathBuf> {
        let p = match which {
            "zones" => self.config.data.zones.as_deref(),
            "coast" => self.config.data.coast.as_deref(),
            _ => None,
        };
        p.map(|p| self.resolve(p)).ok_or_else(|| Error::MissingInput {
            name: which.into(),
        })
    }

    pub fn load_grid(&self) -> Result<(PopGrid, PathBuf, String)> {
        let path = self.grid_path()?;
        let text = read_file(&path)?;
        let grid = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            parse_csv_grid(&text)?
        } else {
            parse_asc_grid(&text)?
        };
        let hash = sha256_hex(text.as_bytes());
        Ok((grid, path, hash))
    }

    pub fn load_layer(&self, which: &str) -> Result<(ZoneLayer, PathBuf)> {
        let path = self.layer_path(which)?;
        let text = read_file(&path)?;
        Ok((parse_geojson_layer(&text)?, path))
    }

    fn frame(&self) -> Result<MapFrame> {
        let proj = Projection::new(
            self.config.projection.scale_px_per_deg,
            self.config.projection.center_lon,
        )?;
        let mut frame = MapFrame::new(proj);
        frame.margin = self.config.projection.margin_px;
        Ok(frame)
    }
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, content).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Provenance entries embedded in the SVG comment (no timestamp there).
fn provenance_entries(
    ctx: &Ctx,
    kind: &str,
    dataset: &Path,
    sha: &str,
    params: &serde_json::Value,
    seed: Option<u64>,
) -> Vec<(String, String)> {
    let mut out = vec![
        ("engine".to_string(), format!("gridatlas {}", crate::ENGINE_VERSION)),
        ("kind".to_string(), kind.to_string()),
        ("dataset".to_string(), dataset.display().to_string()),
        ("sha256".to_string(), sha.to_string()),
        ("command".to_string(), ctx.command_line.clone()),
        ("parameters".to_string(), params.to_string()),
    ];
    if let Some(s) = seed {
        out.push(("seed".to_string(), s.to_string()));
    }
    out
}

/// Sidecar JSON written next to each artifact (timestamp lives here only).
fn sidecar(
    ctx: &Ctx,
    kind: &str,
    dataset: &Path,
    sha: &str,
    params: serde_json::Value,
    seed: Option<u64>,
    outputs: &[PathBuf],
    diagnostics: serde_json::Value,
) -> serde_json::Value {
    json!({
        "engine_version": crate::ENGINE_VERSION,
        "kind": kind,
        "dataset": {"path": dataset.display().to_string(), "sha256": sha},
        "parameters": params,
        "seed": seed,
        "command": ctx.command_line,
        "timestamp_unix": unix_now(),
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "diagnostics": diagnostics,
    })
}

fn write_scene(ctx: &Ctx, name: &str, scene: &Scene) -> Result<PathBuf> {
    let path = ctx.out_dir.join(format!("{name}.svg"));
    write_file(&path, &emit_svg(scene))?;
    Ok(path)
}

fn write_sidecar(ctx: &Ctx, name: &str, value: &serde_json::Value) -> Result<PathBuf> {
    let path = ctx.out_dir.join(format!("{name}.json"));
    write_file(&path, &format!("{:#}\n", value))?;
    Ok(path)
}

// ── stats ────────────────────────────────────────────────────────────────

/// Write the statistics report: frequency table (text + CSV), summary,
/// cumulative-curve samples, the minimal half-population cell set, and the
/// zone section when a zones layer is configured.
pub fn cmd_stats(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let (grid, grid_path, sha) = ctx.load_grid()?;
    let edges = &ctx.config.stats.edges;
    let share = ctx.config.stats.share;

    let table = frequency_table(&grid, edges)?;
    let sum = summary(&grid)?;
    let curve = cumulative_share(&grid)?;
    let coverage = min_cells_for_share(&grid, share)?;

    let mut txt = String::new();
    let _ = writeln!(txt, "# gridatlas stats");
    let _ = writeln!(txt, "dataset: {} (sha256 {})", grid_path.display(), sha);
    let _ = writeln!(txt);
    let _ = writeln!(txt, "land cells:       {}", sum.land_cells);
    let _ = writeln!(txt, "population total: {}", sum.population_total);
    let _ = writeln!(txt, "mean:             {:.1}", sum.mean);
    let _ = writeln!(txt, "median:           {}", sum.median);
    let _ = writeln!(txt);
    let _ = writeln!(txt, "population per cell    count    freq %");
    for i in 0..table.counts.len() {
        let _ = writeln!(
            txt,
            "{:<22} {:>8} {:>8.1}",
            table.bin_label(i),
            table.counts[i],
            table.freq_pct[i]
        );
    }
    let _ = writeln!(txt, "{:<22} {:>8} {:>8}", "total", table.total, 100.0);
    let _ = writeln!(txt);
    let _ = writeln!(
        txt,
        "top {:.0}% of population: {} cells = {:.1}% of cells, {:.0} km² = {:.1}% of land",
        share * 100.0,
        coverage.cells_used,
        coverage.cell_pct,
        coverage.area_km2,
        coverage.area_pct_of_land
    );
    let _ = writeln!(
        txt,
        "bottom 50% of cells carry {:.2}% of the population",
        curve.bottom_share_pct(50.0)
    );

    let mut zone_json = json!(null);
    match ctx.load_layer("zones") {
        Ok((zones, _)) => {
            let zs = aggregate_to_zones(&grid, &zones)?;
            let (prefix, pct) = min_zones_for_share(&zs, share)?;
            let _ = writeln!(txt);
            let _ = writeln!(
                txt,
                "{:.0}% of the population lives in {} zones ({:.1}% covered):",
                share * 100.0,
                prefix.len(),
                pct
            );
            for z in &prefix {
                let _ = writeln!(txt, "  {:<24} {:>14.0}", z.name, z.population);
            }
            zone_json = json!({
                "zones_for_share": prefix.len(),
                "share_pct_covered": pct,
                "zones": prefix.iter().map(|z| json!({"id": z.id, "name": z.name, "population": z.population})).collect::<Vec<_>>(),
            });
        }
        Err(Error::MissingInput { .. }) => {
            let _ = writeln!(txt);
            let _ = writeln!(txt, "(no zones layer configured; country section omitted)");
        }
        Err(e) => return Err(e),
    }

    let mut csv = String::from("bin_lower,bin_upper,count,freq_pct\n");
    for i in 0..table.counts.len() {
        let lower = if i == 0 {
            String::new()
        } else {
            format!("{}", table.breaks[i - 1])
        };
        let upper = if i < table.breaks.len() {
            format!("{}", table.breaks[i])
        } else {
            format!("{}", table.observed_max)
        };
        let _ = writeln!(
            csv,
            "{lower},{upper},{},{:.1}",
            table.counts[i], table.freq_pct[i]
        );
    }

    let mut curve_csv = String::from("cell_pct,pop_pct\n");
    let step = (curve.points.len() / 1000).max(1);
    for (i, (c, p)) in curve.points.iter().enumerate() {
        if i % step == 0 || i + 1 == curve.points.len() {
            let _ = writeln!(curve_csv, "{c},{p}");
        }
    }

    let txt_path = ctx.out_dir.join("stats.txt");
    write_file(&txt_path, &txt)?;
    let csv_path = ctx.out_dir.join("stats_bins.csv");
    write_file(&csv_path, &csv)?;
    let curve_path = ctx.out_dir.join("stats_cumulative.csv");
    write_file(&curve_path, &curve_csv)?;

    let outputs = vec![txt_path, csv_path, curve_path];
    let params = json!({"edges": edges, "share": share});
    let diag = json!({
        "land_cells": sum.land_cells,
        "population_total": sum.population_total,
        "mean": sum.mean,
        "median": sum.median,
        "bin_counts": table.counts,
        "coverage": {
            "cells_used": coverage.cells_used,
            "cell_pct": coverage.cell_pct,
            "area_km2": coverage.area_km2,
            "area_pct_of_land": coverage.area_pct_of_land,
        },
        "bottom_half_pop_pct": curve.bottom_share_pct(50.0),
        "zones": zone_json,
    });
    let side = sidecar(ctx, "stats", &grid_path, &sha, params, None, &outputs, diag);
    let mut outputs = outputs;
    outputs.push(write_sidecar(ctx, "stats", &side)?);
    Ok(outputs)
}

// ── map pipelines ────────────────────────────────────────────────────────

pub const MAP_KINDS: &[&str] = &[
    "circles",
    "choropleth",
    "cartogram",
    "dots",
    "dorling",
    "potential",
    "links",
    "hex",
    "coastal",
    "glocal",
    "voids",
    "linemap",
    "halfmap",
];

/// Run the pipeline for one representation and write SVG plus sidecar.
pub fn cmd_map(kind: &str, ctx: &Ctx) -> Result<Vec<PathBuf>> {
    if !MAP_KINDS.contains(&kind) {
        return Err(Error::config(format!(
            "unknown map kind {kind:?}; expected one of {}",
            MAP_KINDS.join(", ")
        )));
    }
    let (grid, grid_path, sha) = ctx.load_grid()?;
    let frame = ctx.frame()?;
    let cfg = &ctx.config;

    // zones are optional context for most maps, required for a few
    let zones = match ctx.load_layer("zones") {
        Ok((layer, _)) => Some(layer),
        Err(Error::MissingInput { .. }) => None,
        Err(e) => return Err(e),
    };
    let needs_zones = ["circles", "choropleth", "cartogram", "halfmap"];
    if needs_zones.contains(&kind) && zones.is_none() {
        return Err(Error::MissingInput {
            name: "zones".into(),
        });
    }

    let mut outputs: Vec<PathBuf> = Vec::new();
    let params: serde_json::Value;
    let diagnostics: serde_json::Value;
    let mut seed: Option<u64> = None;

    match kind {
        "circles" => {
            let zones = zones.as_ref().unwrap();
            let zs = aggregate_to_zones(&grid, zones)?;
            let vmax = zs.zones.iter().map(|z| z.population).fold(0.0, f64::max);
            let scale = SymbolScale::new(
                cfg.circles.ref_value.unwrap_or(vmax).max(1.0),
                cfg.circles.ref_radius_px,
            )?;
            let items: Vec<SymbolItem> = zs
                .zones
                .iter()
                .zip(&zones.features)
                .map(|(z, f)| SymbolItem {
                    anchor: zone_anchor(f),
                    value: z.population,
                    label: z.name.clone(),
                })
                .collect();
            let mut scene = render_prop_circles(&items, &scale, &frame);
            scene.underlay(basemap_layers(&frame, Some(zones), true));
            params = json!({"ref_radius_px": cfg.circles.ref_radius_px, "ref_value": scale.ref_value});
            scene.provenance = provenance_entries(ctx, kind, &grid_path, &sha, &params, None);
            diagnostics = json!({
                "zones": zs.zones.len(),
                "unassigned_population": zs.unassigned_population,
            });
            outputs.push(write_scene(ctx, "circles", &scene)?);
        }
        "choropleth" => {
            let zones = zones.as_ref().unwrap();
            let zs = aggregate_to_zones(&grid, zones)?;
            let densities: Vec<f64> = zs
                .zones
                .iter()
                .map(|z| {
                    if z.area_km2 > 0.0 {
                        z.population / z.area_km2
                    } else {
                        f64::NAN
                    }
                })
                .collect();
            let breaks = cfg.choropleth.breaks_for(&densities)?;
            let mut scene = render_choropleth(
                ChoroplethItems::Zones {
                    layer: zones,
                    values: &densities,
                },
                &breaks,
                &cfg.choropleth.palette,
                &frame,
            )?;
            scene.underlay(basemap_layers(&frame, None, true));
            params = json!({
                "method": cfg.choropleth.method,
                "k": cfg.choropleth.k,
                "palette": cfg.choropleth.palette,
                "edges": breaks.edges,
            });
            scene.provenance = provenance_entries(ctx, kind, &grid_path, &sha, &params, None);
            diagnostics = json!({"zones": zs.zones.len()});
            outputs.push(write_scene(ctx, "choropleth", &scene)?);
        }
        "cartogram" => {
            let zones = zones.as_ref().unwrap();
            let spec = LatticeSpec {
                width: cfg.cartogram.lattice_width,
                height: cfg.cartogram.lattice_height,
                pad: cfg.cartogram.padding,
            };
            let density = build_density(&grid, &spec)?;
            let (field, sdiag) = solve_cartogram(
                &density,
                &SolveOpts {
                    max_steps: cfg.cartogram.max_steps,
                    rel_tol: cfg.cartogram.rel_tol,
                },
            )?;
            let warped = warp_geometry(zones, &field);
            let zs = aggregate_to_zones(&grid, zones)?;
            let diag = cartogram_diagnostics(&warped.layer, &zs)?.with_solver(&sdiag);

            let mut scene = Scene::new(&frame);
            scene.underlay(basemap_layers(&frame, None, true));
            let mut scene = render_overlay(
                scene,
                OverlayLayer::Zones(&warped.layer),
                Style::fill("#f4a259").with_stroke("#7a4419", 0.5),
                &frame,
            )?;
            params = json!({
                "lattice": [spec.width, spec.height],
                "padding": spec.pad,
                "rel_tol": cfg.cartogram.rel_tol,
                "max_steps": cfg.cartogram.max_steps,
            });
            scene.provenance = provenance_entries(ctx, kind, &grid_path, &sha, &params, None);
            outputs.push(write_scene(ctx, "cartogram", &scene)?);

            // deformation field export for reuse
            let (dx_text, dy_text) = field.to_asc_pair();
            let dx_path = ctx.out_dir.join("cartogram_dx.asc");
            let dy_path = ctx.out_dir.join("cartogram_dy.asc");
            write_file(&dx_path, &dx_text)?;
            write_file(&dy_path, &dy_text)?;
            outputs.push(dx_path);
            outputs.push(dy_path);
            let warped_path = ctx.out_dir.join("cartogram_zones.geojson");
            write_file(&warped_path, &crate::grid::write_geojson_layer(&warped.layer))?;
            outputs.push(warped_path);

            let mut worst: Vec<_> = diag.zones.clone();
            worst.sort_by(|a, b| b.rel_error.partial_cmp(&a.rel_error).unwrap());
            diagnostics = json!({
                "iterations": diag.iterations,
                "converged": diag.converged,
                "final_deviation": diag.final_deviation,
                "max_rel_error": diag.max_rel_error,
                "max_mass_rel_err": diag.max_mass_rel_err,
                "clamped_lattice_vertices": warped.clamped_lattice,
                "clamped_world_vertices": warped.clamped_world,
                "lattice_mapping": {
                    "nx": field.lattice.nx,
                    "ny": field.lattice.ny,
                    "pad": field.lattice.pad,
                    "x0": field.lattice.x0,
                    "y0": field.lattice.y0,
                    "step": field.lattice.step,
                },
                "worst_zones": worst.iter().take(10).map(|z| json!({
                    "id": z.id,
                    "target_share": z.target_share,
                    "achieved_area_share": z.achieved_area_share,
                    "rel_error": z.rel_error,
                })).collect::<Vec<_>>(),
            });
        }
        "dots" => {
            seed = Some(cfg.dots.seed);
            let mut scene = render_dots(&grid, cfg.dots.pop_per_dot, cfg.dots.seed, &frame)?;
            scene.underlay(basemap_layers(&frame, zones.as_ref(), true));
            params = json!({"pop_per_dot": cfg.dots.pop_per_dot});
            scene.provenance =
                provenance_entries(ctx, kind, &grid_path, &sha, &params, seed);
            let dots = scene
                .layers
                .iter()
                .filter(|p| matches!(p, crate::render::Primitive::Circle { .. }))
                .count();
            diagnostics = json!({"dots": dots});
            outputs.push(write_scene(ctx, "dots", &scene)?);
        }
        "dorling" => {
            let blocks = aggregate_blocks(&grid, cfg.dorling.block_factor)?;
            let vmax = blocks
                .iter_land()
                .map(|(_, _, v)| v)
                .fold(0.0f64, f64::max);
            if !(vmax > 0.0) {
                return Err(Error::EmptyDomain {
                    what: "dorling of a zero-population grid".into(),
                });
            }
            let scale = SymbolScale::new(
                cfg.dorling.ref_value.unwrap_or(vmax),
                cfg.dorling.ref_radius_px,
            )?;
            let (mut scene, stats) =
                render_dorling(&blocks, &scale, cfg.dorling.max_iter, &frame);
            scene.underlay(basemap_layers(&frame, None, true));
            params = json!({
                "block_factor": cfg.dorling.block_factor,
                "ref_radius_px": cfg.dorling.ref_radius_px,
                "ref_value": scale.ref_value,
                "max_iter": cfg.dorling.max_iter,
            });
            scene.provenance = provenance_entries(ctx, kind, &grid_path, &sha, &params, None);
            diagnostics = json!({
                "iterations": stats.iterations,
                "converged": stats.converged,
                "max_overlap_px": stats.max_overlap_px,
            });
            outputs.push(write_scene(ctx, "dorling", &scene)?);
        }
        "potential" => {
            let p = cfg.potential.params()?;
            let out_header = coarsen_header(&grid.header, cfg.potential.out_cellsize_deg)?;
            let surface = stewart_potential(&grid, &p, &out_header)?;
            let levels = if cfg.potential.isoline_levels.is_empty() {
                auto_levels(surface.max())
            } else {
                cfg.potential.isoline_levels.clone()
            };
            let iso = extract_isolines(&surface, &levels)?;

            let surf_grid = PopGrid {
                header: surface.header.clone(),
                values: surface.values.clone(),
            };
            let breaks = cfg.choropleth.breaks_for(&surface.values)?;
            let mut scene = render_choropleth(
                ChoroplethItems::Cells {
                    grid: &surf_grid,
                    values: &surf_grid,
                },
                &breaks,
                &cfg.choropleth.palette,
                &frame,
            )?;
            scene.underlay(basemap_layers(&frame, None, true));
            let mut scene = render_overlay(
                scene,
                OverlayLayer::Isolines(&iso),
                Style::stroke("#7f2704", 0.9),
                &frame,
            )?;
            params = json!({
                "function": cfg.potential.function,
                "span_km": p.span_km,
                "beta": p.beta,
                "cutoff_km": p.cutoff_km,
                "out_cellsize_deg": cfg.potential.out_cellsize_deg,
                "levels": levels,
            });
            scene.provenance = provenance_entries(ctx, kind, &grid_path, &sha, &params, None);
            diagnostics = json!({
                "surface_max": surface.max(),
                "skipped_levels": iso.warnings,
                "isolines": iso.levels.iter().map(|l| l.lines.len()).sum::<usize>(),
            });
            // cacheable surface export
            let surf_path = ctx.out_dir.join("potential.asc");
            write_file(&surf_path, &write_asc_grid(&surf_grid))?;
            let iso_path = ctx.out_dir.join("potential_isolines.geojson");
            write_file(&iso_path, &isolines_geojson(&iso))?;
            outputs.push(write_scene(ctx, "potential", &scene)?);
            outputs.push(surf_path);
            outputs.push(iso_path);
        }
        "links" => {
            let blocks = aggregate_blocks(&grid, cfg.links.block_factor)?;
            let metric = if cfg.links.planar {
                DistanceMetric::Planar
            } else {
                DistanceMetric::GreatCircle
            };
            let links = build_links(&blocks, cfg.links.min_mass, cfg.links.max_dist_km, metric)?;
            let mut scene = Scene::new(&frame);
            scene.underlay(basemap_layers(&frame, zones.as_ref(), true));
            let mut scene = render_overlay(
                scene,
                OverlayLayer::Links {
                    links: &links,
                    scale_width: true,
                },
                Style::stroke("#b03a2e", 1.6).with_opacity(0.8),
                &frame,
            )?;
            params = json!({
                "min_mass": cfg.links.min_mass,
                "max_dist_km": cfg.links.max_dist_km,
                "block_factor": cfg.links.block_factor,
                "metric": metric.as_str(),
            });
            scene.provenance = provenance_entries(ctx, kind, &grid_path, &sha, &params, None);
            diagnostics = json!({"nodes": links.nodes.len(), "edges": links.edges.len()});
            let gj_path = ctx.out_dir.join("links.geojson");
            write_file(&gj_path, &links_geojson(&links))?;
            outputs.push(write_scene(ctx, "links", &scene)?);
            outputs.push(gj_path);
        }
        "hex" => {
            let hexes = hex_bin(&grid, cfg.hex.width_deg)?;
            let vmax = hexes.cells.iter().map(|c| c.value).fold(0.0f64, f64::max);
            if !(vmax > 0.0) {
                return Err(Error::EmptyDomain {
                    what: "hex extrusion of a zero-population grid".into(),
                });
            }
            let height_scale = cfg.hex.max_height_px / vmax;
            let mut scene = render_hex_extrusion(&hexes, height_scale, &frame)?;
            scene.underlay(basemap_layers(&frame, None, true));
            params = json!({
                "width_deg": cfg.hex.width_deg,
                "max_height_px": cfg.hex.max_height_px,
                "height_scale_px_per_person": height_scale,
            });
            scene.provenance = provenance_entries(ctx, kind, &grid_path, &sha, &params, None);
            diagnostics = json!({"hexes": hexes.cells.len(), "max_value": vmax});
            outputs.push(write_scene(ctx, "hex", &scene)?);
        }
        "coastal" => {
            let (coast, _) = ctx.load_layer("coast")?;
            let (mask, share) = coastal_mask(&grid, &coast, cfg.coastal.max_dist_km)?;
            let mut scene = Scene::new(&frame);
            scene.underlay(basemap_layers(&frame, None, true));
            let scene = render_overlay(
                scene,
                OverlayLayer::Mask {
                    mask: &mask,
                    invert: false,
                },
                Style::fill("#2171b5").with_opacity(0.75),
                &frame,
            )?;
            let mut scene = render_overlay(
                scene,
                OverlayLayer::Zones(&coast),
                Style::stroke("#08306b", 0.7),
                &frame,
            )?;
            params = json!({"max_dist_km": cfg.coastal.max_dist_km});
            scene.provenance = provenance_entries(ctx, kind, &grid_path, &sha, &params, None);
            diagnostics = json!({
                "pop_share_within_distance": share,
                "masked_cells": mask.iter_land().filter(|&(_, _, v)| v == 1.0).count(),
            });
            outputs.push(write_scene(ctx, "coastal", &scene)?);
            let mask_path = ctx.out_dir.join("coastal_mask.asc");
            write_file(&mask_path, &write_asc_grid(&mask))?;
            outputs.push(mask_path);
        }
        "glocal" => {
            let p = cfg.potential.params()?;
            let idx = local_relative_index(&grid, &p)?;
            let positive: Vec<f64> = idx
                .iter_land()
                .map(|(_, _, v)| v)
                .filter(|v| *v > 0.0)
                .collect();
            let breaks = breaks_quantile(&positive, cfg.glocal.k)?;
            let mut scene = render_choropleth(
                ChoroplethItems::Cells {
                    grid: &grid,
                    values: &idx,
                },
                &breaks,
                "purples",
                &frame,
            )?;
            scene.underlay(basemap_layers(&frame, None, true));
            params = json!({
                "function": cfg.potential.function,
                "span_km": p.span_km,
                "beta": p.beta,
                "cutoff_km": p.cutoff_km,
                "k": cfg.glocal.k,
            });
            scene.provenance = provenance_entries(ctx, kind, &grid_path, &sha, &params, None);
            diagnostics = json!({"edges": breaks.edges});
            outputs.push(write_scene(ctx, "glocal", &scene)?);
            let idx_path = ctx.out_dir.join("glocal.asc");
            write_file(&idx_path, &write_asc_grid(&idx))?;
            outputs.push(idx_path);
        }
        "voids" => {
            let p = cfg.potential.params()?;
            let mask = empty_quarters(&grid, &p, cfg.voids.threshold)?;
            let mut scene = Scene::new(&frame);
            scene.underlay(basemap_layers(&frame, zones.as_ref(), true));
            let mut scene = render_overlay(
                scene,
                OverlayLayer::Mask {
                    mask: &mask,
                    invert: cfg.voids.inverted,
                },
                Style::fill("#4a3f35").with_opacity(0.85),
                &frame,
            )?;
            params = json!({
                "threshold": cfg.voids.threshold,
                "inverted": cfg.voids.inverted,
                "span_km": p.span_km,
                "cutoff_km": p.cutoff_km,
            });
            scene.provenance = provenance_entries(ctx, kind, &grid_path, &sha, &params, None);
            diagnostics = json!({
                "void_cells": mask.iter_land().filter(|&(_, _, v)| v == 1.0).count(),
                "land_cells": mask.land_cell_count(),
            });
            outputs.push(write_scene(ctx, "voids", &scene)?);
            let mask_path = ctx.out_dir.join("voids_mask.asc");
            write_file(&mask_path, &write_asc_grid(&mask))?;
            outputs.push(mask_path);
        }
        "linemap" => {
            let mut scene = render_linemap(&grid, cfg.linemap.amplitude_px, &frame)?;
            scene.underlay(basemap_layers(&frame, None, false));
            params = json!({"amplitude_px": cfg.linemap.amplitude_px});
            scene.provenance = provenance_entries(ctx, kind, &grid_path, &sha, &params, None);
            diagnostics = json!(null);
            outputs.push(write_scene(ctx, "linemap", &scene)?);
        }
        "halfmap" => {
            let zones = zones.as_ref().unwrap();
            let zs = aggregate_to_zones(&grid, zones)?;
            let (prefix, pct) = min_zones_for_share(&zs, 0.5)?;
            let top_ids: std::collections::HashSet<&str> =
                prefix.iter().map(|z| z.id.as_str()).collect();

            // zones sheet: the minimal half-population countries highlighted
            let mut scene = Scene::new(&frame);
            scene.underlay(basemap_layers(&frame, Some(zones), true));
            let highlighted = ZoneLayer {
                features: zones
                    .features
                    .iter()
                    .filter(|f| top_ids.contains(f.id.as_str()))
                    .cloned()
                    .collect(),
            };
            let mut scene = render_overlay(
                scene,
                OverlayLayer::Zones(&highlighted),
                Style::fill("#e4572e").with_stroke("#7f2704", 0.6),
                &frame,
            )?;
            scene.push(crate::render::Primitive::Text {
                x: scene.width / 2.0,
                y: scene.margin - 12.0,
                content: format!(
                    "half of the population lives in {} zones ({:.1}% covered)",
                    prefix.len(),
                    pct
                ),
                size: 14.0,
                anchor: crate::render::TextAnchor::Middle,
                style: Style::fill("#222222"),
            });
            params = json!({"share": 0.5});
            scene.provenance = provenance_entries(ctx, kind, &grid_path, &sha, &params, None);
            outputs.push(write_scene(ctx, "halfmap_zones", &scene)?);

            // cells sheet: minimal half-population cells with the area share
            let coverage = min_cells_for_share(&grid, 0.5)?;
            let cell_mask = top_cells_mask(&grid, coverage.cells_used);
            let mut cell_scene = Scene::new(&frame);
            cell_scene.underlay(basemap_layers(&frame, Some(zones), true));
            let mut cell_scene = render_overlay(
                cell_scene,
                OverlayLayer::Mask {
                    mask: &cell_mask,
                    invert: false,
                },
                Style::fill("#b03a2e").with_opacity(0.9),
                &frame,
            )?;
            cell_scene.push(crate::render::Primitive::Text {
                x: cell_scene.width / 2.0,
                y: cell_scene.margin - 12.0,
                content: format!(
                    "half of the population lives on {:.1}% of the land ({:.1}% of cells)",
                    coverage.area_pct_of_land, coverage.cell_pct
                ),
                size: 14.0,
                anchor: crate::render::TextAnchor::Middle,
                style: Style::fill("#222222"),
            });
            cell_scene.provenance =
                provenance_entries(ctx, kind, &grid_path, &sha, &params, None);
            outputs.push(write_scene(ctx, "halfmap_cells", &cell_scene)?);

            diagnostics = json!({
                "zones_for_half": prefix.len(),
                "zone_share_pct": pct,
                "cells_for_half": coverage.cells_used,
                "cell_pct": coverage.cell_pct,
                "area_pct_of_land": coverage.area_pct_of_land,
            });
        }
        _ => unreachable!(),
    }

    let side = sidecar(
        ctx, kind, &grid_path, &sha, params, seed, &outputs, diagnostics,
    );
    outputs.push(write_sidecar(ctx, kind, &side)?);
    Ok(outputs)
}

/// Mask grid marking the `n` most-populated cells (the same descending
/// order used by the coverage statistics).
fn top_cells_mask(grid: &PopGrid, n: u64) -> PopGrid {
    let mut cells: Vec<(usize, usize, f64)> = grid.iter_land().collect();
    cells.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap()
            .then_with(|| (a.0, a.1).cmp(&(b.0, b.1)))
    });
    let mut values = vec![grid.header.nodata; grid.header.len()];
    for (r, c, _) in grid.iter_land() {
        values[r * grid.header.ncols + c] = 0.0;
    }
    for (r, c, _) in cells.into_iter().take(n as usize) {
        values[r * grid.header.ncols + c] = 1.0;
    }
    PopGrid {
        header: grid.header.clone(),
        values,
    }
}

fn coarsen_header(h: &GridHeader, out_cellsize: f64) -> Result<GridHeader> {
    if !(out_cellsize > 0.0) {
        return Err(Error::invalid_params("out_cellsize must be > 0"));
    }
    let width = h.ncols as f64 * h.cellsize;
    let height = h.nrows as f64 * h.cellsize;
    let ncols = (width / out_cellsize).round().max(1.0) as usize;
    let nrows = (height / out_cellsize).round().max(1.0) as usize;
    GridHeader::new(ncols, nrows, h.xll, h.yll, out_cellsize, h.nodata)
}

/// Geometric ladder of 8 isoline levels below the surface maximum.
fn auto_levels(vmax: f64) -> Vec<f64> {
    if !(vmax > 0.0) {
        return Vec::new();
    }
    (1..=8)
        .map(|i| vmax / 2f64.powi(9 - i))
        .collect()
}

/// Anchor point for a zone symbol: centroid of the largest ring.
fn zone_anchor(f: &Feature) -> LonLat {
    let mut best: Option<(f64, LonLat)> = None;
    for ring in &f.parts {
        let mut a2 = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for w in ring.windows(2) {
            let cross = w[0].lon * w[1].lat - w[1].lon * w[0].lat;
            a2 += cross;
            cx += (w[0].lon + w[1].lon) * cross;
            cy += (w[0].lat + w[1].lat) * cross;
        }
        let area = a2 / 2.0;
        let centroid = if area.abs() > 1e-12 {
            LonLat {
                lon: (cx / (6.0 * area)).clamp(-180.0, 180.0),
                lat: (cy / (6.0 * area)).clamp(-90.0, 90.0),
            }
        } else {
            let n = (ring.len() - 1).max(1) as f64;
            LonLat {
                lon: ring.iter().take(ring.len() - 1).map(|p| p.lon).sum::<f64>() / n,
                lat: ring.iter().take(ring.len() - 1).map(|p| p.lat).sum::<f64>() / n,
            }
        };
        if best.is_none() || area.abs() > best.unwrap().0 {
            best = Some((area.abs(), centroid));
        }
    }
    best.map(|(_, c)| c).unwrap_or(LonLat { lon: 0.0, lat: 0.0 })
}

fn isolines_geojson(set: &crate::analysis::IsolineSet) -> String {
    let features: Vec<serde_json::Value> = set
        .levels
        .iter()
        .flat_map(|lvl| {
            lvl.lines.iter().map(move |line| {
                json!({
                    "type": "Feature",
                    "properties": {"level": lvl.level, "closed": line.closed},
                    "geometry": {
                        "type": "LineString",
                        "coordinates": line.points.iter().map(|p| vec![p.lon, p.lat]).collect::<Vec<_>>(),
                    },
                })
            })
        })
        .collect();
    format!(
        "{:#}\n",
        json!({"type": "FeatureCollection", "features": features})
    )
}

fn links_geojson(links: &crate::analysis::LinkSet) -> String {
    let features: Vec<serde_json::Value> = links
        .edges
        .iter()
        .map(|&(i, j, d)| {
            let a = links.nodes[i].0;
            let b = links.nodes[j].0;
            json!({
                "type": "Feature",
                "properties": {"distance_km": d, "mass_min": links.nodes[i].1.min(links.nodes[j].1)},
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[a.lon, a.lat], [b.lon, b.lat]],
                },
            })
        })
        .collect();
    format!(
        "{:#}\n",
        json!({"type": "FeatureCollection", "features": features})
    )
}

// ── synth ────────────────────────────────────────────────────────────────

/// Generate a synthetic grid file from a TOML spec.
pub fn cmd_synth(spec_path: &Path, seed: u64, out_file: &Path) -> Result<PathBuf> {
    let text = read_file(spec_path)?;
    let spec = SynthSpec::from_toml(&text)?;
    let grid = synth_grid(&spec, seed)?;
    write_file(out_file, &write_asc_grid(&grid))?;
    Ok(out_file.to_path_buf())
}

// ── fetch ────────────────────────────────────────────────────────────────

pub enum FetchOutcome {
    Saved(PathBuf),
    /// The population grid needs authenticated access; instructions printed.
    GridInstructions(String),
}

const NE_BASE: &str =
    "https://raw.githubusercontent.com/nvkelso/natural-earth-vector/master/geojson";

/// Download a public basemap layer into the data directory. Checksums, when
/// pinned, are verified before the file lands; mismatches are quarantined.
pub fn cmd_fetch(
    name: &str,
    url_override: Option<&str>,
    sha256_pin: Option<&str>,
    data_dir: &Path,
) -> Result<FetchOutcome> {
    let (url, file_name) = match name {
        "countries" => (
            format!("{NE_BASE}/ne_110m_admin_0_countries.geojson"),
            "countries.geojson",
        ),
        "coastline" => (
            format!("{NE_BASE}/ne_110m_coastline.geojson"),
            "coastline.geojson",
        ),
        "grid" => {
            return Ok(FetchOutcome::GridInstructions(
                "The population grid is not fetched automatically: the upstream \
                 provider requires an authenticated account.\n\
                 1. Create a free NASA Earthdata account.\n\
                 2. Download 'Population Count, v4.11 (2020), 30 minute' from the \
                    SEDAC GPW collection.\n\
                 3. Export/convert the GeoTIFF to ESRI ASCII (.asc), e.g.:\n\
                    gdal_translate -of AAIGrid gpw_v4_population_count_rev11_2020_30_min.tif gpw_2020_30min.asc\n\
                 4. Place gpw_2020_30min.asc in the data directory (GRIDATLAS_DATA)."
                    .to_string(),
            ));
        }
        other => {
            return Err(Error::config(format!(
                "unknown fetch target {other:?}; expected countries, coastline or grid"
            )))
        }
    };
    let url = url_override.map(str::to_string).unwrap_or(url);

    let body = http_get(&url)?;
    let path = data_dir.join(file_name);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    if let Some(pin) = sha256_pin {
        let actual = sha256_hex(&body);
        if !actual.eq_ignore_ascii_case(pin) {
            let quarantine = path.with_extension("quarantine");
            std::fs::write(&quarantine, &body).map_err(|e| Error::io(&quarantine, e))?;
            return Err(Error::Integrity {
                path: quarantine,
                expected: pin.to_string(),
                actual,
            });
        }
    }
    std::fs::write(&path, &body).map_err(|e| Error::io(&path, e))?;
    // stored as-is; a parse check is advisory only
    if let Ok(text) = std::str::from_utf8(&body) {
        if parse_geojson_layer(text).is_err() {
            eprintln!("warning: downloaded file does not parse as a supported GeoJSON layer");
        }
    }
    Ok(FetchOutcome::Saved(path))
}

fn http_get(url: &str) -> Result<Vec<u8>> {
    let response = ureq::get(url).call().map_err(|e| Error::Network {
        detail: format!("GET {url}: {e}"),
    })?;
    if response.status() != 200 {
        return Err(Error::Network {
            detail: format!("GET {url}: status {}", response.status()),
        });
    }
    let mut bytes = Vec::new();
    use std::io::Read;
    response
        .into_body()
        .into_reader()
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Network {
            detail: format!("GET {url}: read body: {e}"),
        })?;
    Ok(bytes)
}

// ── make-all ─────────────────────────────────────────────────────────────

/// Run the stats report and every map kind, then write an index page.
/// Individual failures do not stop the run; they are listed on the index.
pub fn cmd_make_all(ctx: &Ctx) -> Result<BTreeMap<String, std::result::Result<Vec<PathBuf>, String>>> {
    let mut results: BTreeMap<String, std::result::Result<Vec<PathBuf>, String>> = BTreeMap::new();
    results.insert(
        "stats".to_string(),
        cmd_stats(ctx).map_err(|e| e.to_string()),
    );
    for kind in MAP_KINDS {
        results.insert(
            kind.to_string(),
            cmd_map(kind, ctx).map_err(|e| e.to_string()),
        );
    }

    let mut html = String::new();
    html.push_str("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>gridatlas outputs</title></head><body>\n");
    html.push_str("<h1>gridatlas outputs</h1>\n<ul>\n");
    for (kind, result) in &results {
        match result {
            Ok(files) => {
                let links: Vec<String> = files
                    .iter()
                    .filter_map(|f| f.file_name().map(|n| n.to_string_lossy().to_string()))
                    .map(|n| format!("<a href=\"{n}\">{n}</a>"))
                    .collect();
                html.push_str(&format!("<li><b>{kind}</b>: {}</li>\n", links.join(", ")));
            }
            Err(msg) => {
                html.push_str(&format!("<li><b>{kind}</b>: failed — {msg}</li>\n"));
            }
        }
    }
    html.push_str("</ul>\n</body></html>\n");
    write_file(&ctx.out_dir.join("index.html"), &html)?;
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_levels_are_ascending_and_below_max() {
        let lv = auto_levels(1000.0);
        assert_eq!(lv.len(), 8);
        assert!(lv.windows(2).all(|w| w[0] < w[1]));
        assert!(lv.iter().all(|&l| l < 1000.0));
        assert_eq!(*lv.last().unwrap(), 500.0);
    }

    #[test]
    fn zone_anchor_of_square_is_center() {
        let f = Feature {
            id: "sq".into(),
            name: "sq".into(),
            kind: crate::grid::FeatureKind::Polygons,
            parts: vec![vec![
                LonLat::new(0.0, 0.0).unwrap(),
                LonLat::new(10.0, 0.0).unwrap(),
                LonLat::new(10.0, 10.0).unwrap(),
                LonLat::new(0.0, 10.0).unwrap(),
                LonLat::new(0.0, 0.0).unwrap(),
            ]],
        };
        let a = zone_anchor(&f);
        assert!((a.lon - 5.0).abs() < 1e-9);
        assert!((a.lat - 5.0).abs() < 1e-9);
    }

    #[test]
    fn top_cells_mask_marks_heaviest() {
        let h = GridHeader::new(3, 1, 0.0, 0.0, 1.0, -9999.0).unwrap();
        let g = PopGrid::new(h, vec![5.0, 100.0, 1.0]).unwrap();
        let mask = top_cells_mask(&g, 1);
        assert_eq!(mask.get(0, 1), 1.0);
        assert_eq!(mask.get(0, 0), 0.0);
        assert_eq!(mask.get(0, 2), 0.0);
    }

    #[test]
    fn coarsen_header_halves_resolution() {
        let h = GridHeader::new(40, 20, -10.0, -5.0, 0.5, -9999.0).unwrap();
        let out = coarsen_header(&h, 1.0).unwrap();
        assert_eq!(out.ncols, 20);
        assert_eq!(out.nrows, 10);
        assert_eq!(out.xll, h.xll);
    }
}
