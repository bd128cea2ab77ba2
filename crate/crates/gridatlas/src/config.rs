//! Declarative run configuration (TOML) and the provenance record carried
//! by every artifact. Defaults follow the reference parameter set: 200 km
//! potential span, 3 M inhabitants / 500 km link thresholds, 30-minute
//! source resolution; everything else is a flagged engineering default.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataCfg,
    pub projection: ProjectionCfg,
    pub stats: StatsCfg,
    pub potential: PotentialCfg,
    pub cartogram: CartogramCfg,
    pub dots: DotsCfg,
    pub dorling: DorlingCfg,
    pub links: LinksCfg,
    pub hex: HexCfg,
    pub coastal: CoastalCfg,
    pub voids: VoidsCfg,
    pub glocal: GlocalCfg,
    pub circles: CirclesCfg,
    pub choropleth: ChoroplethCfg,
    pub linemap: LinemapCfg,
    pub output: OutputCfg,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("config parse: {e}")))
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataCfg {
    pub grid: Option<PathBuf>,
    pub zones: Option<PathBuf>,
    pub coast: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionCfg {
    pub scale_px_per_deg: f64,
    pub center_lon: f64,
    pub margin_px: f64,
}

impl Default for ProjectionCfg {
    fn default() -> Self {
        ProjectionCfg {
            scale_px_per_deg: 4.0,
            center_lon: 0.0,
            margin_px: 60.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsCfg {
    /// Bin edges for the frequency table (decades by default).
    pub edges: Vec<f64>,
    /// Population share for the coverage report.
    pub share: f64,
}

impl Default for StatsCfg {
    fn default() -> Self {
        StatsCfg {
            edges: vec![1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6],
            share: 0.5,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialCfg {
    /// "exponential" or "pareto".
    pub function: String,
    pub span_km: f64,
    pub beta: f64,
    /// Neighborhood radius; 3×span keeps truncation below 1/8 of the
    /// half-weight for the default kernel.
    pub cutoff_km: f64,
    /// Evaluation lattice resolution for the potential surface, degrees.
    pub out_cellsize_deg: f64,
    /// Explicit isoline levels; empty means an automatic geometric ladder.
    pub isoline_levels: Vec<f64>,
}

impl Default for PotentialCfg {
    fn default() -> Self {
        PotentialCfg {
            function: "exponential".to_string(),
            span_km: 200.0,
            beta: 2.0,
            cutoff_km: 600.0,
            out_cellsize_deg: 1.0,
            isoline_levels: Vec::new(),
        }
    }
}

impl PotentialCfg {
    pub fn params(&self) -> Result<crate::analysis::PotentialParams> {
        let kind = match self.function.as_str() {
            "exponential" => crate::analysis::KernelKind::Exponential,
            "pareto" => crate::analysis::KernelKind::Pareto,
            other => {
                return Err(Error::config(format!(
                    "unknown potential function {other:?} (expected exponential or pareto)"
                )))
            }
        };
        crate::analysis::PotentialParams::new(kind, self.span_km, self.beta, self.cutoff_km)
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartogramCfg {
    pub lattice_width: usize,
    pub lattice_height: usize,
    pub padding: usize,
    pub rel_tol: f64,
    pub max_steps: usize,
}

impl Default for CartogramCfg {
    fn default() -> Self {
        CartogramCfg {
            lattice_width: 512,
            lattice_height: 256,
            padding: 32,
            rel_tol: 0.01,
            max_steps: 2000,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct DotsCfg {
    pub pop_per_dot: f64,
    pub seed: u64,
}

impl Default for DotsCfg {
    fn default() -> Self {
        DotsCfg {
            pop_per_dot: 1e6,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct DorlingCfg {
    pub block_factor: usize,
    pub ref_radius_px: f64,
    /// Reference value for the radius law; absent means the max block value.
    pub ref_value: Option<f64>,
    pub max_iter: usize,
}

impl Default for DorlingCfg {
    fn default() -> Self {
        DorlingCfg {
            block_factor: 4,
            ref_radius_px: 12.0,
            ref_value: None,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinksCfg {
    pub min_mass: f64,
    pub max_dist_km: f64,
    pub block_factor: usize,
    /// Straight-line distance on the map plane instead of great-circle.
    pub planar: bool,
}

impl Default for LinksCfg {
    fn default() -> Self {
        LinksCfg {
            min_mass: 3e6,
            max_dist_km: 500.0,
            block_factor: 4,
            planar: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct HexCfg {
    pub width_deg: f64,
    pub max_height_px: f64,
}

impl Default for HexCfg {
    fn default() -> Self {
        HexCfg {
            width_deg: 4.0,
            max_height_px: 60.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoastalCfg {
    pub max_dist_km: f64,
}

impl Default for CoastalCfg {
    fn default() -> Self {
        CoastalCfg { max_dist_km: 100.0 }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoidsCfg {
    /// Potential threshold below which a land cell counts as a void
    /// (engineering default; no published value exists).
    pub threshold: f64,
    /// Draw the complement instead (anticartogram-style styling).
    pub inverted: bool,
}

impl Default for VoidsCfg {
    fn default() -> Self {
        VoidsCfg {
            threshold: 1e5,
            inverted: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlocalCfg {
    pub k: usize,
}

impl Default for GlocalCfg {
    fn default() -> Self {
        GlocalCfg { k: 6 }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct CirclesCfg {
    pub ref_radius_px: f64,
    /// Reference value for the radius law; absent means the max zone value.
    pub ref_value: Option<f64>,
}

impl Default for CirclesCfg {
    fn default() -> Self {
        CirclesCfg {
            ref_radius_px: 24.0,
            ref_value: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChoroplethCfg {
    /// "geometric", "quantile", "equal", or "manual" (with `edges`).
    pub method: String,
    pub k: usize,
    pub edges: Vec<f64>,
    pub palette: String,
}

impl Default for ChoroplethCfg {
    fn default() -> Self {
        ChoroplethCfg {
            method: "geometric".to_string(),
            k: 6,
            edges: Vec::new(),
            palette: "blues".to_string(),
        }
    }
}

impl ChoroplethCfg {
    /// Build breaks for a set of values (zeros and NaN excluded upstream).
    pub fn breaks_for(&self, values: &[f64]) -> Result<crate::classify::ClassBreaks> {
        let positive: Vec<f64> = values
            .iter()
            .copied()
            .filter(|v| v.is_finite() && *v > 0.0)
            .collect();
        if positive.is_empty() {
            return Err(Error::EmptyDomain {
                what: "classification of an all-zero value set".into(),
            });
        }
        let min = positive.iter().copied().fold(f64::INFINITY, f64::min);
        let max = positive.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        match self.method.as_str() {
            "geometric" => crate::classify::breaks_geometric(min, max, self.k),
            "equal" => crate::classify::breaks_equal(min, max, self.k),
            "quantile" => crate::classify::breaks_quantile(&positive, self.k),
            "manual" => crate::classify::ClassBreaks::manual(self.edges.clone()),
            other => Err(Error::config(format!("unknown break method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinemapCfg {
    pub amplitude_px: f64,
}

impl Default for LinemapCfg {
    fn default() -> Self {
        LinemapCfg { amplitude_px: 20.0 }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputCfg {
    pub dir: PathBuf,
}

impl Default for OutputCfg {
    fn default() -> Self {
        OutputCfg {
            dir: PathBuf::from("out"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_reference_parameters() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.potential.span_km, 200.0);
        assert_eq!(cfg.links.min_mass, 3e6);
        assert_eq!(cfg.links.max_dist_km, 500.0);
        assert_eq!(cfg.potential.cutoff_km, 3.0 * cfg.potential.span_km);
        assert_eq!(cfg.stats.edges.len(), 7);
    }

    #[test]
    fn toml_overrides_and_unknown_keys() {
        let cfg = RunConfig::from_toml("[links]\nmax_dist_km = 750.0\n").unwrap();
        assert_eq!(cfg.links.max_dist_km, 750.0);
        assert_eq!(cfg.links.min_mass, 3e6); // untouched default
        assert!(RunConfig::from_toml("[links]\nmax_distance = 1.0\n").is_err());
    }

    #[test]
    fn potential_params_validated() {
        let mut cfg = PotentialCfg::default();
        assert!(cfg.params().is_ok());
        cfg.cutoff_km = 100.0; // below span
        assert!(cfg.params().is_err());
        cfg.cutoff_km = 600.0;
        cfg.function = "gravity".to_string();
        assert!(cfg.params().is_err());
    }
}
