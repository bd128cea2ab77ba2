//! Scene construction and deterministic SVG output for the map
//! representations: projection, styled primitives, programmatic legends,
//! and the provenance block carried by every artifact.

mod maps;
mod svg;

pub use maps::{
    basemap_layers, render_choropleth, render_dorling, render_dots, render_hex_extrusion,
    render_linemap, render_overlay, render_prop_circles, ChoroplethItems, OverlayLayer,
    SymbolItem,
};
pub use svg::emit_svg;

use crate::error::{Error, Result};
use crate::grid::LonLat;

/// Equirectangular (plate carrée) projection: linear lon/lat to pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Pixels per degree.
    pub scale: f64,
    pub center_lon: f64,
}

fn wrap_lon(mut lon: f64) -> f64 {
    while lon > 180.0 {
        lon -= 360.0;
    }
    while lon < -180.0 {
        lon += 360.0;
    }
    lon
}

impl Projection {
    pub fn new(scale: f64, center_lon: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::invalid_params(format!(
                "projection scale must be > 0, got {scale}"
            )));
        }
        Ok(Projection { scale, center_lon })
    }

    /// Centered map coordinates: x east, y south, (0,0) at
    /// (center_lon, equator).
    pub fn project(&self, p: LonLat) -> (f64, f64) {
        (
            wrap_lon(p.lon - self.center_lon) * self.scale,
            -p.lat * self.scale,
        )
    }

    pub fn unproject(&self, x: f64, y: f64) -> LonLat {
        LonLat {
            lon: wrap_lon(x / self.scale + self.center_lon),
            lat: -y / self.scale,
        }
    }
}

/// Projection plus canvas placement: world box mapped into a margin-padded
/// viewport.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapFrame {
    pub proj: Projection,
    pub margin: f64,
}

impl MapFrame {
    pub fn new(proj: Projection) -> Self {
        MapFrame { proj, margin: 60.0 }
    }

    pub fn map_width(&self) -> f64 {
        360.0 * self.proj.scale
    }

    pub fn map_height(&self) -> f64 {
        180.0 * self.proj.scale
    }

    pub fn canvas_width(&self) -> f64 {
        self.map_width() + 2.0 * self.margin
    }

    pub fn canvas_height(&self) -> f64 {
        self.map_height() + 2.0 * self.margin
    }

    /// Viewport pixel position of a geographic point.
    pub fn to_px(&self, p: LonLat) -> (f64, f64) {
        let (x, y) = self.proj.project(p);
        (
            x + self.map_width() / 2.0 + self.margin,
            y + self.map_height() / 2.0 + self.margin,
        )
    }

    fn key(&self) -> (u64, u64) {
        (
            self.proj.scale.to_bits(),
            self.proj.center_lon.to_bits(),
        )
    }
}

/// Area-true symbol sizing: radius(v) = ref_radius·sqrt(v/ref_value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolScale {
    pub ref_value: f64,
    pub ref_radius: f64,
}

impl SymbolScale {
    pub fn new(ref_value: f64, ref_radius: f64) -> Result<Self> {
        if !(ref_value > 0.0) || !(ref_radius > 0.0) {
            return Err(Error::invalid_params(
                "symbol scale reference value and radius must be > 0",
            ));
        }
        Ok(SymbolScale {
            ref_value,
            ref_radius,
        })
    }

    pub fn radius(&self, value: f64) -> f64 {
        self.ref_radius * (value / self.ref_value).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Style {
    pub fill: Option<String>,
    pub stroke: Option<String>,
    pub stroke_width: f64,
    pub opacity: f64,
}

impl Default for Style {
    fn default() -> Self {
        Style {
            fill: None,
            stroke: None,
            stroke_width: 1.0,
            opacity: 1.0,
        }
    }
}

impl Style {
    pub fn fill(color: &str) -> Self {
        Style {
            fill: Some(color.to_string()),
            ..Style::default()
        }
    }

    pub fn stroke(color: &str, width: f64) -> Self {
        Style {
            stroke: Some(color.to_string()),
            stroke_width: width,
            ..Style::default()
        }
    }

    pub fn with_opacity(mut self, opacity: f64) -> Self {
        self.opacity = opacity;
        self
    }

    pub fn with_fill(mut self, color: &str) -> Self {
        self.fill = Some(color.to_string());
        self
    }

    pub fn with_stroke(mut self, color: &str, width: f64) -> Self {
        self.stroke = Some(color.to_string());
        self.stroke_width = width;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextAnchor {
    Start,
    Middle,
    End,
}

/// One drawable element in viewport pixels. The scene's layer order is the
/// painter's order.
#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    Polygon {
        rings: Vec<Vec<(f64, f64)>>,
        style: Style,
        meta: Vec<(String, String)>,
    },
    Polyline {
        points: Vec<(f64, f64)>,
        style: Style,
        meta: Vec<(String, String)>,
    },
    Circle {
        cx: f64,
        cy: f64,
        r: f64,
        style: Style,
        meta: Vec<(String, String)>,
    },
    /// Extruded hexagon: side quads painted before the lifted top face.
    Prism {
        top: Vec<(f64, f64)>,
        sides: Vec<Vec<(f64, f64)>>,
        top_style: Style,
        side_style: Style,
    },
    Text {
        x: f64,
        y: f64,
        content: String,
        size: f64,
        anchor: TextAnchor,
        style: Style,
    },
}

impl Primitive {
    fn coords(&self) -> Vec<(f64, f64)> {
        match self {
            Primitive::Polygon { rings, .. } => rings.iter().flatten().copied().collect(),
            Primitive::Polyline { points, .. } => points.clone(),
            Primitive::Circle { cx, cy, .. } => vec![(*cx, *cy)],
            Primitive::Prism { top, sides, .. } => {
                top.iter().chain(sides.iter().flatten()).copied().collect()
            }
            Primitive::Text { x, y, .. } => vec![(*x, *y)],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegendClass {
    pub color: String,
    pub label: String,
    pub count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Legend {
    CirclesNested {
        title: String,
        /// (value, label) entries, descending by value.
        entries: Vec<(f64, String)>,
        scale: SymbolScale,
    },
    ClassBoxes {
        title: String,
        entries: Vec<LegendClass>,
    },
    LineWeight {
        title: String,
        entries: Vec<(f64, String)>,
    },
    HeightBar {
        title: String,
        entries: Vec<(f64, String)>,
    },
}

/// Ordered, styled primitives plus legend and provenance; serialized by
/// [`emit_svg`].
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    pub background: String,
    pub layers: Vec<Primitive>,
    pub legend: Option<Legend>,
    pub provenance: Vec<(String, String)>,
    proj_key: (u64, u64),
}

impl Scene {
    pub fn new(frame: &MapFrame) -> Self {
        Scene {
            width: frame.canvas_width(),
            height: frame.canvas_height(),
            margin: frame.margin,
            background: "#ffffff".to_string(),
            layers: Vec::new(),
            legend: None,
            provenance: Vec::new(),
            proj_key: frame.key(),
        }
    }

    pub fn push(&mut self, p: Primitive) {
        self.layers.push(p);
    }

    /// Insert layers beneath everything already drawn (basemap use).
    pub fn underlay(&mut self, layers: Vec<Primitive>) {
        let mut new = layers;
        new.append(&mut self.layers);
        self.layers = new;
    }

    pub fn with_provenance(mut self, entries: Vec<(String, String)>) -> Self {
        self.provenance = entries;
        self
    }

    pub fn matches_frame(&self, frame: &MapFrame) -> bool {
        self.proj_key == frame.key()
    }

    /// Every coordinate finite and within [−margin, size+margin].
    pub fn validate(&self) -> Result<()> {
        let m = self.margin;
        for prim in &self.layers {
            for (x, y) in prim.coords() {
                if !x.is_finite() || !y.is_finite() {
                    return Err(Error::structure("non-finite scene coordinate"));
                }
                if x < -m || x > self.width + m || y < -m || y > self.height + m {
                    return Err(Error::structure(format!(
                        "coordinate ({x}, {y}) outside scene bounds"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn projection_formulas() {
        let p = Projection::new(2.0, 0.0).unwrap();
        assert_eq!(p.project(LonLat { lon: 0.0, lat: 0.0 }), (0.0, 0.0));
        assert_eq!(
            p.project(LonLat {
                lon: 90.0,
                lat: -45.0
            }),
            (180.0, 90.0)
        );
    }

    #[test]
    fn projection_round_trip() {
        let p = Projection::new(3.7, 11.5).unwrap();
        let mut rng = SplitMix64::new(8);
        for _ in 0..1000 {
            let lon = rng.next_f64() * 340.0 - 170.0 + 11.5; // stays off the seam
            let lon = wrap_lon(lon);
            let lat = rng.next_f64() * 180.0 - 90.0;
            let q = p.unproject(p.project(LonLat { lon, lat }).0, p.project(LonLat { lon, lat }).1);
            assert!((q.lon - lon).abs() < 1e-9, "{} vs {lon}", q.lon);
            assert!((q.lat - lat).abs() < 1e-9);
        }
    }

    #[test]
    fn sqrt_law_ratio() {
        let s = SymbolScale::new(1e6, 10.0).unwrap();
        assert_eq!(s.radius(4e6), 20.0);
        assert_eq!(s.radius(1e6), 10.0);
        let mut rng = SplitMix64::new(2);
        for _ in 0..100 {
            let v1 = rng.next_f64() * 1e7 + 1.0;
            let v2 = rng.next_f64() * 1e7 + 1.0;
            let ratio = s.radius(v1) / s.radius(v2);
            assert!((ratio - (v1 / v2).sqrt()).abs() <= 1e-12 * ratio);
        }
    }

    #[test]
    fn scene_validation_catches_strays() {
        let frame = MapFrame::new(Projection::new(1.0, 0.0).unwrap());
        let mut scene = Scene::new(&frame);
        scene.push(Primitive::Circle {
            cx: 10.0,
            cy: 10.0,
            r: 3.0,
            style: Style::default(),
            meta: vec![],
        });
        assert!(scene.validate().is_ok());
        scene.push(Primitive::Circle {
            cx: -1000.0,
            cy: 10.0,
            r: 3.0,
            style: Style::default(),
            meta: vec![],
        });
        assert!(scene.validate().is_err());
    }

    #[test]
    fn underlay_goes_below() {
        let frame = MapFrame::new(Projection::new(1.0, 0.0).unwrap());
        let mut scene = Scene::new(&frame);
        scene.push(Primitive::Text {
            x: 5.0,
            y: 5.0,
            content: "top".into(),
            size: 10.0,
            anchor: TextAnchor::Start,
            style: Style::default(),
        });
        scene.underlay(vec![Primitive::Text {
            x: 5.0,
            y: 5.0,
            content: "base".into(),
            size: 10.0,
            anchor: TextAnchor::Start,
            style: Style::default(),
        }]);
        match &scene.layers[0] {
            Primitive::Text { content, .. } => assert_eq!(content, "base"),
            _ => panic!(),
        }
    }
}
