//! SVG diagnostics: a `log₁₀ λ₂` backdrop with singularities, sections and
//! vortex boundaries drawn on top.

use std::collections::BTreeSet;
use std::fmt::Write;

use vortex_core::geometry::Bounds;
use vortex_core::{EigenField, Point, Singularity, SingularityType, WedgePair};

use crate::geojson::BoundaryFeature;
use crate::tables::SectionRow;

/// Backdrop resolution cap per axis.
pub const MAX_BACKDROP_CELLS: usize = 200;
const WIDTH: f64 = 800.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Layer {
    Backdrop,
    Singularities,
    Sections,
    Boundaries,
}

impl Layer {
    pub const ALL: [Layer; 4] = [Layer::Backdrop, Layer::Singularities, Layer::Sections, Layer::Boundaries];

    pub fn name(self) -> &'static str {
        match self {
            Layer::Backdrop => "backdrop",
            Layer::Singularities => "singularities",
            Layer::Sections => "sections",
            Layer::Boundaries => "boundaries",
        }
    }

    pub fn parse(s: &str) -> Option<Layer> {
        Layer::ALL.into_iter().find(|l| l.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error("layer '{}' was requested but its data is missing", .0.name())]
    MissingLayer(Layer),
    #[error("no layer fixes the plot extent")]
    NoExtent,
}

/// Data available for drawing. `None` marks a layer whose input is absent;
/// an empty list is a present layer with nothing in it.
#[derive(Debug, Clone, Copy, Default)]
pub struct Scene<'a> {
    pub eigen: Option<&'a EigenField>,
    /// Every located singularity, drawn as crosses.
    pub located: Option<&'a [Singularity]>,
    /// Isolated singularities with their types; indices used by `pairs`.
    pub classified: Option<&'a [Singularity]>,
    pub pairs: Option<&'a [WedgePair]>,
    pub sections: Option<&'a [SectionRow]>,
    pub boundaries: Option<&'a [BoundaryFeature]>,
    /// Plot extent when no backdrop is drawn.
    pub extent: Option<Bounds>,
}

struct View {
    b: Bounds,
    scale: f64,
    height: f64,
}

impl View {
    fn px(&self, p: Point) -> (f64, f64) {
        ((p.x - self.b.x_min) * self.scale, self.height - (p.y - self.b.y_min) * self.scale)
    }
}

/// Perceptually ordered dark-blue to yellow ramp, `t` in [0, 1].
pub fn colormap(t: f64) -> (u8, u8, u8) {
    const STOPS: [(f64, f64, f64); 5] =
        [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (STOPS.len() - 1) as f64;
    let k = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - k as f64;
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    let mix = |u: f64, v: f64| (u + f * (v - u)).round() as u8;
    (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

pub fn render_svg(scene: &Scene, layers: &[Layer]) -> Result<String, RenderError> {
    let layers: BTreeSet<Layer> = layers.iter().copied().collect();
    for &l in &layers {
        let present = match l {
            Layer::Backdrop => scene.eigen.is_some(),
            Layer::Singularities => scene.located.is_some() || scene.classified.is_some(),
            Layer::Sections => scene.sections.is_some(),
            Layer::Boundaries => scene.boundaries.is_some(),
        };
        if !present {
            return Err(RenderError::MissingLayer(l));
        }
    }
    let b = scene.eigen.map(|e| e.grid.bounds()).or(scene.extent).ok_or(RenderError::NoExtent)?;
    if !(b.width() > 0.0 && b.height() > 0.0) {
        return Err(RenderError::NoExtent);
    }
    let scale = WIDTH / b.width();
    let view = View { b, scale, height: b.height() * scale };
    let mut s = String::new();
    let legend_h = 24.0;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#,
        w = WIDTH,
        h = view.height + legend_h
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH:.0}" height="{:.1}" fill="white"/>"#, view.height);
    if layers.contains(&Layer::Backdrop) {
        backdrop(&mut s, &view, scene.eigen.expect("checked above"));
    }
    if layers.contains(&Layer::Sections) {
        sections(&mut s, &view, scene.sections.expect("checked above"));
    }
    if layers.contains(&Layer::Boundaries) {
        boundaries(&mut s, &view, scene.boundaries.expect("checked above"));
    }
    if layers.contains(&Layer::Singularities) {
        singularities(&mut s, &view, scene);
    }
    legend(&mut s, view.height);
    s.push_str("</svg>\n");
    Ok(s)
}

fn backdrop(s: &mut String, view: &View, ef: &EigenField) {
    let values = ef.log10_lambda2();
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let range = if hi > lo { hi - lo } else { 1.0 };
    let (nx, ny) = (ef.grid.nx(), ef.grid.ny());
    let (cx, cy) = (nx.min(MAX_BACKDROP_CELLS), ny.min(MAX_BACKDROP_CELLS));
    let (cw, ch) = (WIDTH / cx as f64, view.height / cy as f64);
    s.push_str("<g id=\"backdrop\" shape-rendering=\"crispEdges\">\n");
    for r in 0..cy {
        let j = ((r as f64 + 0.5) * ny as f64 / cy as f64) as usize;
        for c in 0..cx {
            let i = ((c as f64 + 0.5) * nx as f64 / cx as f64) as usize;
            let v = values[ef.grid.index(i.min(nx - 1), j.min(ny - 1))];
            let fill = if v.is_finite() {
                let (r8, g8, b8) = colormap((v - lo) / range);
                format!("#{r8:02x}{g8:02x}{b8:02x}")
            } else {
                "#bbbbbb".to_string()
            };
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                c as f64 * cw,
                view.height - (r + 1) as f64 * ch,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    if lo.is_finite() {
        let _ = writeln!(s, "<desc>log10 lambda2 from {lo:.4} to {hi:.4}</desc>");
    }
    s.push_str("</g>\n");
}

fn sections(s: &mut String, view: &View, rows: &[SectionRow]) {
    s.push_str("<g id=\"sections\" stroke=\"white\" stroke-width=\"1.5\" stroke-dasharray=\"4 3\">\n");
    for r in rows {
        let (x1, y1) = view.px(Point::new(r.anchor_x, r.anchor_y));
        let (x2, y2) = view.px(Point::new(r.end_x, r.end_y));
        let _ = writeln!(s, r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}"/>"#);
    }
    s.push_str("</g>\n");
}

fn boundaries(s: &mut String, view: &View, features: &[BoundaryFeature]) {
    s.push_str("<g id=\"boundaries\">\n");
    for f in features {
        let pts: Vec<String> = f
            .vertices
            .iter()
            .map(|&p| {
                let (x, y) = view.px(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(s, r#"<polygon points="{}" fill="none" stroke="black" stroke-width="2"/>"#, pts.join(" "));
        let top = f.vertices.iter().copied().max_by(|a, b| a.y.total_cmp(&b.y));
        if let Some(top) = top {
            let (x, y) = view.px(top);
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" font-size="13" font-family="sans-serif" text-anchor="middle">λ = {:.3}</text>"#,
                y - 5.0,
                f.lambda
            );
        }
    }
    s.push_str("</g>\n");
}

fn singularities(s: &mut String, view: &View, scene: &Scene) {
    s.push_str("<g id=\"singularities\">\n");
    for sg in scene.located.unwrap_or_default() {
        let (x, y) = view.px(sg.position);
        let _ = writeln!(
            s,
            r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="black" stroke-width="1"/>"#,
            x - 3.0,
            y - 3.0,
            x + 3.0,
            y + 3.0,
            x - 3.0,
            y + 3.0,
            x + 3.0,
            y - 3.0
        );
    }
    let classified = scene.classified.unwrap_or_default();
    let kept: BTreeSet<usize> = scene.pairs.unwrap_or_default().iter().flat_map(|p| [p.first, p.second]).collect();
    for (k, sg) in classified.iter().enumerate() {
        let (x, y) = view.px(sg.position);
        match sg.kind {
            SingularityType::Trisector => {
                let _ = writeln!(
                    s,
                    r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="red"/>"#,
                    x,
                    y - 6.0,
                    x - 5.2,
                    y + 3.0,
                    x + 5.2,
                    y + 3.0
                );
            }
            SingularityType::Wedge if kept.contains(&k) => {
                let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="6" fill="none" stroke="lime" stroke-width="2"/>"#);
            }
            SingularityType::Wedge => {
                let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="red"/>"#);
            }
            SingularityType::Unclassified => {}
        }
    }
    s.push_str("</g>\n");
}

fn legend(s: &mut String, top: f64) {
    let y = top + 16.0;
    let _ = writeln!(
        s,
        r#"<g id="legend" font-size="12" font-family="sans-serif"><text x="8" y="{y:.1}">× singularity   ▲ trisector (red)   ○ kept wedge (green)   • discarded wedge (red)   black outline: boundary labelled with λ</text></g>"#
    );
}
