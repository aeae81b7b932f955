//! Layered SVG rendering: domain boundaries, triangulation edges colored by
//! degeneracy, geodesics, cut points and field heatmaps with a legend.

use std::fmt::Write;

use crate::extension::ExtensionField;
use crate::fields::ScalarField;
use crate::geometry::{Point, Polyline, PolygonalDomain};
use crate::triangulation::{CutPointSet, DegenerateCase, Triangulation};

pub enum Layer<'a> {
    Domain(&'a PolygonalDomain),
    Triangulation(&'a Triangulation),
    Geodesic(&'a Polyline, &'a str),
    CutPoints(&'a CutPointSet),
    Heatmap(&'a ScalarField),
    Extension(&'a ExtensionField),
}

fn path_d(poly: &Polyline, close: bool) -> String {
    let mut d = String::new();
    for (i, p) in poly.vertices().iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(d, "{cmd}{:.5} {:.5} ", p.x, -p.y);
    }
    if close {
        d.push('Z');
    }
    d
}

fn color_ramp(t: f64) -> String {
    // blue -> white -> red
    let t = t.clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let s = t * 2.0;
        ((255.0 * s) as u8, (255.0 * s) as u8, 255u8)
    } else {
        let s = (t - 0.5) * 2.0;
        (255u8, (255.0 * (1.0 - s)) as u8, (255.0 * (1.0 - s)) as u8)
    };
    format!("rgb({r},{g},{b})")
}

/// Renders the layers into one SVG document. An empty layer list yields a
/// valid empty document with a unit view box.
pub fn render_svg(layers: &[Layer]) -> String {
    // view box over all layer extents
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut grow = |p: Point| {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    };
    for layer in layers {
        match layer {
            Layer::Domain(d) => {
                let (a, b) = d.bbox();
                grow(a);
                grow(b);
            }
            Layer::Triangulation(t) => {
                for e in t.edges.values() {
                    for p in e.polyline.vertices() {
                        grow(*p);
                    }
                }
            }
            Layer::Geodesic(g, _) => {
                for p in g.vertices() {
                    grow(*p);
                }
            }
            Layer::CutPoints(c) => {
                for (p, _, _) in &c.points {
                    grow(*p);
                }
            }
            Layer::Heatmap(f) => {
                grow(Point::new(f.grid.x0, f.grid.y0));
                grow(Point::new(
                    f.grid.x0 + f.grid.h * (f.grid.nx - 1) as f64,
                    f.grid.y0 + f.grid.h * (f.grid.ny - 1) as f64,
                ));
            }
            Layer::Extension(e) => {
                grow(Point::new(e.field.grid.x0, e.field.grid.y0));
                grow(Point::new(
                    e.field.grid.x0 + e.field.grid.h * (e.field.grid.nx - 1) as f64,
                    e.field.grid.y0 + e.field.grid.h * (e.field.grid.ny - 1) as f64,
                ));
            }
        }
    }
    if !lo.x.is_finite() {
        lo = Point::new(0.0, 0.0);
        hi = Point::new(1.0, 1.0);
    }
    let pad = 0.05 * (hi.x - lo.x + hi.y - lo.y).max(1e-9);
    let w = hi.x - lo.x + 2.0 * pad;
    let hgt = hi.y - lo.y + 2.0 * pad;
    let mut out = String::new();
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.5} {:.5} {:.5} {:.5}\">",
        lo.x - pad,
        -(hi.y + pad),
        w,
        hgt
    );
    let stroke_w = 0.002 * w.max(hgt);
    for layer in layers {
        match layer {
            Layer::Heatmap(f) => heatmap(&mut out, f, None),
            Layer::Extension(e) => heatmap(&mut out, &e.field, Some(&e.tags)),
            _ => {}
        }
    }
    for layer in layers {
        match layer {
            Layer::Domain(d) => {
                let _ = write!(
                    out,
                    "<path d=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"{stroke_w}\"/>",
                    path_d(&d.outer, true)
                );
                for s in &d.slits {
                    let _ = write!(
                        out,
                        "<path d=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"{}\" stroke-dasharray=\"{} {}\"/>",
                        path_d(s, false),
                        stroke_w,
                        3.0 * stroke_w,
                        2.0 * stroke_w
                    );
                }
            }
            Layer::Triangulation(t) => {
                // color edges by the degeneracy of an incident triangle
                let mut degenerate_edges = std::collections::BTreeSet::new();
                for tri in &t.triangles {
                    if tri.degenerate != DegenerateCase::None {
                        for e in tri.edges {
                            degenerate_edges.insert(e);
                        }
                    }
                }
                for (id, e) in &t.edges {
                    let color = if degenerate_edges.contains(id) {
                        "#d62728"
                    } else {
                        "#1f77b4"
                    };
                    let _ = write!(
                        out,
                        "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{}\"/>",
                        path_d(&e.polyline, false),
                        0.7 * stroke_w
                    );
                }
                if let Some(ring) = &t.ring {
                    for e in &ring.ring_edges {
                        let _ = write!(
                            out,
                            "<path d=\"{}\" fill=\"none\" stroke=\"#2ca02c\" stroke-width=\"{}\"/>",
                            path_d(e, false),
                            0.7 * stroke_w
                        );
                    }
                }
            }
            Layer::Geodesic(g, color) => {
                let _ = write!(
                    out,
                    "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{}\"/>",
                    path_d(g, false),
                    1.2 * stroke_w
                );
            }
            Layer::CutPoints(c) => {
                for (p, _, _) in &c.points {
                    let _ = write!(
                        out,
                        "<circle cx=\"{:.5}\" cy=\"{:.5}\" r=\"{}\" fill=\"#d62728\"/>",
                        p.x,
                        -p.y,
                        1.5 * stroke_w
                    );
                }
            }
            _ => {}
        }
    }
    out.push_str("</svg>");
    out
}

fn heatmap(out: &mut String, f: &ScalarField, tags: Option<&[u8]>) {
    let g = &f.grid;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (id, v) in f.values.iter().enumerate() {
        if f.mask[id] {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if !lo.is_finite() || hi - lo < 1e-300 {
        hi = lo + 1.0;
    }
    // downsample to at most ~200x200 cells to keep documents small
    let stride = (g.nx.max(g.ny) / 200).max(1);
    let cell = g.h * stride as f64;
    let mut j = 0;
    while j < g.ny {
        let mut i = 0;
        while i < g.nx {
            let id = g.id(i, j);
            let visible = f.mask[id] && tags.map(|t| t[id] != 0).unwrap_or(true);
            if visible {
                let p = g.point(i, j);
                let t = (f.values[id] - lo) / (hi - lo);
                let _ = write!(
                    out,
                    "<rect x=\"{:.5}\" y=\"{:.5}\" width=\"{:.5}\" height=\"{:.5}\" fill=\"{}\"/>",
                    p.x - 0.5 * cell,
                    -p.y - 0.5 * cell,
                    cell,
                    cell,
                    color_ramp(t)
                );
            }
            i += stride;
        }
        j += stride;
    }
    // legend
    let x0 = g.x0;
    let y0 = -(g.y0 - 2.0 * cell);
    for k in 0..10 {
        let _ = write!(
            out,
            "<rect x=\"{:.5}\" y=\"{y0:.5}\" width=\"{cell:.5}\" height=\"{cell:.5}\" fill=\"{}\"/>",
            x0 + k as f64 * cell,
            color_ramp(k as f64 / 9.0)
        );
    }
    let _ = write!(
        out,
        "<text x=\"{:.5}\" y=\"{:.5}\" font-size=\"{:.5}\">[{lo:.3}, {hi:.3}]</text>",
        x0 + 11.0 * cell,
        y0 + cell,
        1.5 * cell
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::GridSpec;
    use crate::geometry::shapes;

    #[test]
    fn empty_layers_valid_svg() {
        let svg = render_svg(&[]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("viewBox"));
        assert!(svg.ends_with("</svg>"));
    }

    #[test]
    fn constant_heatmap_single_color() {
        let g = GridSpec::covering(Point::new(0.0, 0.0), Point::new(1.0, 1.0), 0.05);
        let f = ScalarField::constant(g, 3.0);
        let svg = render_svg(&[Layer::Heatmap(&f)]);
        // all cells share the midpoint ramp color
        let count = svg.matches("rgb(").count();
        let distinct: std::collections::BTreeSet<&str> = svg
            .split("fill=\"rgb")
            .skip(1)
            .map(|s| s.split('"').next().unwrap())
            .collect();
        assert!(count > 10);
        // legend adds its own ramp colors; the field cells dominate
        assert!(distinct.len() <= 12, "distinct colors {}", distinct.len());
    }

    #[test]
    fn triangulation_edge_count_matches_formula() {
        let d = shapes::disk(64, 0.01);
        let m = crate::conformal::build_disk_map(&d, 0.02).unwrap();
        let em = crate::conformal::build_exterior_map(&d, 0.02).unwrap();
        let dec = crate::triangulation::build_decomposition(&m, 1, 4, 0.8).unwrap();
        let opts = crate::triangulation::GeodesicOptions::for_domain(&d);
        let tri = crate::triangulation::build_triangles(
            &m,
            &dec,
            &crate::triangulation::GeodesicSource::Direct(&em),
            &opts,
        )
        .unwrap();
        let svg = render_svg(&[Layer::Triangulation(&tri)]);
        let expected_edges: usize = (1..=4u32)
            .map(|k| crate::triangulation::sector_count(k, 1))
            .sum::<usize>()
            + crate::triangulation::sector_count(1, 1); // ring edges
        let drawn = svg.matches("<path").count();
        assert_eq!(drawn, expected_edges, "svg edge tally");
    }
}
