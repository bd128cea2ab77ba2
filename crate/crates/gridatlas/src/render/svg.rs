//! Deterministic SVG 1.1 serialization. Identical scenes produce identical
//! bytes: fixed 3-decimal coordinate formatting, no timestamps, provenance
//! as a leading XML comment.

use crate::render::{Legend, Primitive, Scene, Style, TextAnchor};

/// Fixed 3-decimal formatting; "-0.000" normalizes to "0.000".
pub(crate) fn fmt3(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn style_attrs(style: &Style) -> String {
    let mut out = String::new();
    match &style.fill {
        Some(f) => out.push_str(&format!(" fill=\"{}\"", xml_escape(f))),
        None => out.push_str(" fill=\"none\""),
    }
    if let Some(s) = &style.stroke {
        out.push_str(&format!(
            " stroke=\"{}\" stroke-width=\"{}\"",
            xml_escape(s),
            fmt3(style.stroke_width)
        ));
    }
    if style.opacity != 1.0 {
        out.push_str(&format!(" opacity=\"{}\"", fmt3(style.opacity)));
    }
    out
}

fn meta_attrs(meta: &[(String, String)]) -> String {
    meta.iter()
        .map(|(k, v)| format!(" data-{}=\"{}\"", k, xml_escape(v)))
        .collect()
}

fn path_data(rings: &[Vec<(f64, f64)>], close: bool) -> String {
    let mut d = String::new();
    for ring in rings {
        for (i, (x, y)) in ring.iter().enumerate() {
            d.push_str(if i == 0 { "M" } else { "L" });
            d.push_str(&fmt3(*x));
            d.push(',');
            d.push_str(&fmt3(*y));
        }
        if close {
            d.push('Z');
        }
    }
    d
}

fn emit_primitive(out: &mut String, prim: &Primitive) {
    match prim {
        Primitive::Polygon { rings, style, meta } => {
            out.push_str(&format!(
                "<path d=\"{}\" fill-rule=\"evenodd\"{}{}/>\n",
                path_data(rings, true),
                style_attrs(style),
                meta_attrs(meta)
            ));
        }
        Primitive::Polyline {
            points,
            style,
            meta,
        } => {
            out.push_str(&format!(
                "<path d=\"{}\"{}{}/>\n",
                path_data(std::slice::from_ref(points), false),
                style_attrs(style),
                meta_attrs(meta)
            ));
        }
        Primitive::Circle {
            cx,
            cy,
            r,
            style,
            meta,
        } => {
            out.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"{}\"{}{}/>\n",
                fmt3(*cx),
                fmt3(*cy),
                fmt3(*r),
                style_attrs(style),
                meta_attrs(meta)
            ));
        }
        Primitive::Prism {
            top,
            sides,
            top_style,
            side_style,
        } => {
            for quad in sides {
                out.push_str(&format!(
                    "<path d=\"{}\" fill-rule=\"evenodd\"{}/>\n",
                    path_data(std::slice::from_ref(quad), true),
                    style_attrs(side_style)
                ));
            }
            out.push_str(&format!(
                "<path d=\"{}\" fill-rule=\"evenodd\"{}/>\n",
                path_data(std::slice::from_ref(top), true),
                style_attrs(top_style)
            ));
        }
        Primitive::Text {
            x,
            y,
            content,
            size,
            anchor,
            style,
        } => {
            let anchor = match anchor {
                TextAnchor::Start => "start",
                TextAnchor::Middle => "middle",
                TextAnchor::End => "end",
            };
            let fill = style.fill.as_deref().unwrap_or("#000000");
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"{}\" text-anchor=\"{}\" fill=\"{}\">{}</text>\n",
                fmt3(*x),
                fmt3(*y),
                fmt3(*size),
                anchor,
                xml_escape(fill),
                xml_escape(content)
            ));
        }
    }
}

fn emit_legend(out: &mut String, legend: &Legend, scene: &Scene) {
    let x0 = scene.margin + 12.0;
    let y1 = scene.height - scene.margin - 14.0;
    let title_of = |t: &str| xml_escape(t);
    match legend {
        Legend::CirclesNested {
            title,
            entries,
            scale,
        } => {
            // Concentric circles sharing their bottom point, labels right.
            let rmax = entries
                .first()
                .map(|(v, _)| scale.radius(*v))
                .unwrap_or(0.0);
            let cx = x0 + rmax;
            let base = y1 - 4.0;
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"start\" fill=\"#222222\">{}</text>\n",
                fmt3(x0),
                fmt3(base - 2.0 * rmax - 8.0),
                title_of(title)
            ));
            for (value, label) in entries {
                let r = scale.radius(*value);
                let cy = base - r;
                out.push_str(&format!(
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
                    fmt3(cx),
                    fmt3(cy),
                    fmt3(r)
                ));
                out.push_str(&format!(
                    "<path d=\"M{},{}L{},{}\" fill=\"none\" stroke=\"#999999\" stroke-width=\"0.5\"/>\n",
                    fmt3(cx),
                    fmt3(base - 2.0 * r),
                    fmt3(cx + rmax + 6.0),
                    fmt3(base - 2.0 * r)
                ));
                out.push_str(&format!(
                    "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"start\" fill=\"#222222\">{}</text>\n",
                    fmt3(cx + rmax + 8.0),
                    fmt3(base - 2.0 * r + 3.0),
                    xml_escape(label)
                ));
            }
        }
        Legend::ClassBoxes { title, entries } => {
            let box_h = 12.0;
            let top = y1 - entries.len() as f64 * (box_h + 2.0) - 18.0;
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"start\" fill=\"#222222\">{}</text>\n",
                fmt3(x0),
                fmt3(top - 4.0),
                title_of(title)
            ));
            for (i, e) in entries.iter().enumerate() {
                let y = top + i as f64 * (box_h + 2.0);
                out.push_str(&format!(
                    "<rect x=\"{}\" y=\"{}\" width=\"18\" height=\"{}\" fill=\"{}\" stroke=\"#555555\" stroke-width=\"0.5\"/>\n",
                    fmt3(x0),
                    fmt3(y),
                    fmt3(box_h),
                    xml_escape(&e.color)
                ));
                let label = match e.count {
                    Some(n) => format!("{} ({n})", e.label),
                    None => e.label.clone(),
                };
                out.push_str(&format!(
                    "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"start\" fill=\"#222222\">{}</text>\n",
                    fmt3(x0 + 24.0),
                    fmt3(y + box_h - 3.0),
                    xml_escape(&label)
                ));
            }
        }
        Legend::LineWeight { title, entries } => {
            let top = y1 - entries.len() as f64 * 14.0 - 18.0;
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"start\" fill=\"#222222\">{}</text>\n",
                fmt3(x0),
                fmt3(top - 4.0),
                title_of(title)
            ));
            for (i, (w, label)) in entries.iter().enumerate() {
                let y = top + i as f64 * 14.0 + 7.0;
                out.push_str(&format!(
                    "<path d=\"M{},{}L{},{}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"{}\"/>\n",
                    fmt3(x0),
                    fmt3(y),
                    fmt3(x0 + 30.0),
                    fmt3(y),
                    fmt3(*w)
                ));
                out.push_str(&format!(
                    "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"start\" fill=\"#222222\">{}</text>\n",
                    fmt3(x0 + 36.0),
                    fmt3(y + 3.0),
                    xml_escape(label)
                ));
            }
        }
        Legend::HeightBar { title, entries } => {
            let top_label_y = y1
                - entries
                    .iter()
                    .map(|(h, _)| *h)
                    .fold(0.0, f64::max)
                - 20.0;
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"start\" fill=\"#222222\">{}</text>\n",
                fmt3(x0),
                fmt3(top_label_y),
                title_of(title)
            ));
            for (i, (h, label)) in entries.iter().enumerate() {
                let x = x0 + i as f64 * 26.0;
                out.push_str(&format!(
                    "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"{}\" fill=\"#c87f3b\" stroke=\"#555555\" stroke-width=\"0.5\"/>\n",
                    fmt3(x),
                    fmt3(y1 - 12.0 - h),
                    fmt3(*h)
                ));
                out.push_str(&format!(
                    "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"start\" fill=\"#222222\">{}</text>\n",
                    fmt3(x),
                    fmt3(y1 - 2.0),
                    xml_escape(label)
                ));
            }
        }
    }
}

/// Serialize the scene. Byte-identical output for identical scenes: fixed
/// number formatting, stable attribute order, and a provenance XML comment
/// (never a timestamp).
pub fn emit_svg(scene: &Scene) -> String {
    debug_assert!(scene.validate().is_ok());
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    if !scene.provenance.is_empty() {
        out.push_str("<!-- provenance\n");
        for (k, v) in &scene.provenance {
            // "--" is illegal inside XML comments
            let v = v.replace("--", "- -");
            let k = k.replace("--", "- -");
            out.push_str(&format!("{k}: {v}\n"));
        }
        out.push_str("-->\n");
    }
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        fmt3(scene.width),
        fmt3(scene.height),
        fmt3(scene.width),
        fmt3(scene.height)
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
        fmt3(scene.width),
        fmt3(scene.height),
        xml_escape(&scene.background)
    ));
    for prim in &scene.layers {
        emit_primitive(&mut out, prim);
    }
    if let Some(legend) = &scene.legend {
        emit_legend(&mut out, legend, scene);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{MapFrame, Projection};

    #[test]
    fn fmt3_is_fixed_width_and_signed_zero_free() {
        assert_eq!(fmt3(1.0), "1.000");
        assert_eq!(fmt3(-2.5), "-2.500");
        assert_eq!(fmt3(-1e-9), "0.000");
        assert_eq!(fmt3(0.0005001), "0.001");
    }

    #[test]
    fn fmt3_round_half_even() {
        // Exactly representable ties round to the even last digit.
        assert_eq!(fmt3(0.1875), "0.188"); // .1875 -> even 8
        assert_eq!(fmt3(0.3125), "0.312"); // .3125 -> even 2
    }

    #[test]
    fn empty_scene_is_valid_svg_with_provenance() {
        let frame = MapFrame::new(Projection::new(1.0, 0.0).unwrap());
        let scene = Scene::new(&frame).with_provenance(vec![
            ("dataset".into(), "synthetic".into()),
            ("seed".into(), "42".into()),
        ]);
        let svg = emit_svg(&scene);
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains("<!-- provenance"));
        assert!(svg.contains("seed: 42"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn identical_scenes_identical_bytes() {
        let frame = MapFrame::new(Projection::new(2.0, 0.0).unwrap());
        let build = || {
            let mut s = Scene::new(&frame);
            s.push(Primitive::Circle {
                cx: 100.0,
                cy: 50.0,
                r: 7.25,
                style: Style::fill("#ff0000").with_opacity(0.5),
                meta: vec![("mass".into(), "123".into())],
            });
            s
        };
        assert_eq!(emit_svg(&build()), emit_svg(&build()));
    }

    #[test]
    fn comment_never_contains_double_dash() {
        let frame = MapFrame::new(Projection::new(1.0, 0.0).unwrap());
        let scene = Scene::new(&frame)
            .with_provenance(vec![("cmd".into(), "gridatlas map dots --seed 7".into())]);
        let svg = emit_svg(&scene);
        let comment = svg.split("-->").next().unwrap();
        let inner = comment.split("<!--").nth(1).unwrap();
        assert!(!inner.contains("--"), "comment body: {inner}");
    }
}
