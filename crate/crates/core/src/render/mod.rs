//! SVG output for a candidate, and a validator for rendered documents.
//!
//! Icons are defined once under `<defs>` and placed with `<use>`. Partial fills
//! draw the icon in the secondary color and again in the primary color clipped
//! to the filled fraction along the icon's fill direction. Every element is
//! tagged with `statviz:` attributes (region, box, font, fill) so documents can
//! be checked without re-running the layout.

use std::collections::BTreeSet;
use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

use crate::assets::{AssetManifest, Color, FillDirection, IconAsset, Palette};
use crate::layout::chart::{arc_point, ChartGeometry, ChartKind};
use crate::layout::fonts::{FontBook, FontId, LINE_HEIGHT};
use crate::layout::graphic::{Graphic, IconRef};
use crate::layout::pictograph::GRID_GAP;
use crate::layout::solve::{ElementKind, PlacedElement, Rect, TextRole};
use crate::layout::blueprint::Align;
use crate::synth::Candidate;

pub const NS: &str = "https://statviz.dev/ns";
const SVG_NS: &str = "http://www.w3.org/2000/svg";
const XLINK_NS: &str = "http://www.w3.org/1999/xlink";
/// Opacity of the background icon behind overlay text.
const BACKDROP_OPACITY: f64 = 0.25;
/// Slack allowed when checking text against its box.
const OVERFLOW_SLACK: f64 = 0.5;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("missing {kind} {id}")]
    MissingAsset { kind: &'static str, id: String },
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn font_attrs(font: FontId) -> &'static str {
    match font {
        FontId::Sans => r#"font-family="Helvetica, Arial, sans-serif""#,
        FontId::SansBold => r#"font-family="Helvetica, Arial, sans-serif" font-weight="bold""#,
        FontId::Serif => r#"font-family="Times, 'Times New Roman', serif""#,
        FontId::Condensed => r#"font-family="'Arial Narrow', 'Helvetica Condensed', sans-serif" font-stretch="condensed""#,
    }
}

/// Fill color and opacity for fact `i` of a multi-fact graphic.
fn fact_color(p: &Palette, fact: Option<usize>, facts: usize) -> (Color, f64) {
    match fact {
        None => (p.graphic_secondary, 1.0),
        Some(_) if facts <= 1 => (p.graphic_primary, 1.0),
        Some(i) => {
            let base = if i % 2 == 0 { p.graphic_primary } else { p.text_emphasis };
            (base, 1.0 - 0.3 * (i / 2) as f64)
        }
    }
}

fn fill_attr(c: Color, opacity: f64) -> String {
    if opacity < 1.0 {
        format!(r#"fill="{c}" fill-opacity="{}""#, num(opacity))
    } else {
        format!(r#"fill="{c}""#)
    }
}

struct Writer<'a> {
    out: String,
    defs: String,
    clips: usize,
    icons: BTreeSet<String>,
    manifest: &'a AssetManifest,
    palette: &'a Palette,
}

impl<'a> Writer<'a> {
    fn icon(&mut self, r: &IconRef) -> Result<&'a IconAsset, RenderError> {
        let icon = self
            .manifest
            .icon(&r.id)
            .ok_or_else(|| RenderError::MissingAsset { kind: "icon", id: r.id.clone() })?;
        if self.icons.insert(icon.id.clone()) {
            let _ = write!(self.defs, r#"<g id="icon-{}">"#, icon.id);
            for s in &icon.shapes {
                let rule = if s.evenodd { r#" fill-rule="evenodd""# } else { "" };
                let _ = write!(self.defs, r#"<path d="{}"{rule}/>"#, escape(&s.d));
            }
            self.defs.push_str("</g>");
        }
        Ok(icon)
    }

    /// Places an icon with its top-left at (x, y) and the given height.
    fn use_icon(&mut self, icon: &IconAsset, x: f64, y: f64, h: f64, fill: &str) {
        let s = h / icon.view_box.1;
        let _ = write!(
            self.out,
            r##"<use xlink:href="#icon-{}" transform="translate({} {}) scale({})" {fill}/>"##,
            icon.id,
            num(x),
            num(y),
            format!("{s:.6}")
        );
    }

    /// An icon filled to `fraction` along its fill direction.
    fn filled_icon(&mut self, icon: &IconAsset, x: f64, y: f64, h: f64, fraction: f64, fill_only: bool) {
        let w = icon.aspect * h;
        let p = self.palette;
        let fraction = fraction.clamp(0.0, 1.0);
        if fraction >= 1.0 {
            self.use_icon(icon, x, y, h, &fill_attr(p.graphic_primary, 1.0));
            return;
        }
        if !fill_only || fraction <= 0.0 {
            self.use_icon(icon, x, y, h, &fill_attr(p.graphic_secondary, 1.0));
        }
        if fraction <= 0.0 {
            return;
        }
        let clip = match icon.fill_direction {
            FillDirection::LeftToRight => Rect { x, y, w: w * fraction, h },
            FillDirection::BottomToTop => Rect { x, y: y + h * (1.0 - fraction), w, h: h * fraction },
        };
        self.clips += 1;
        let id = format!("clip-{}", self.clips);
        let _ = write!(
            self.defs,
            r#"<clipPath id="{id}"><rect x="{}" y="{}" width="{}" height="{}"/></clipPath>"#,
            num(clip.x),
            num(clip.y),
            num(clip.w),
            num(clip.h)
        );
        let _ = write!(self.out, r#"<g clip-path="url(#{id})" statviz:fraction="{}">"#, format!("{fraction:.6}"));
        self.use_icon(icon, x, y, h, &fill_attr(p.graphic_primary, 1.0));
        self.out.push_str("</g>");
    }

    fn text(&mut self, e: &PlacedElement, role: TextRole, font: FontId, size: f64, lines: &[String], widths: &[f64], fonts: &FontBook) {
        let p = self.palette;
        let color = match role {
            TextRole::Number => p.text_emphasis,
            _ => p.text_primary,
        };
        let (anchor, x) = match e.align {
            Align::Start => ("start", e.rect.x),
            Align::Center => ("middle", e.rect.x + e.rect.w / 2.0),
            Align::End => ("end", e.rect.x + e.rect.w),
        };
        let baseline = fonts.get(font).baseline_offset() * size;
        // textLength pins each line to its measured width, so viewers that
        // substitute a different face still respect the layout.
        for (i, line) in lines.iter().enumerate() {
            let y = e.rect.y + i as f64 * LINE_HEIGHT * size + baseline;
            let len = widths.get(i).copied().unwrap_or_default();
            let _ = write!(
                self.out,
                r#"<text x="{}" y="{}" {} font-size="{}" textLength="{}" lengthAdjust="spacingAndGlyphs" text-anchor="{anchor}" fill="{color}" statviz:font="{}">{}</text>"#,
                num(x),
                num(y),
                font_attrs(font),
                num(size),
                num(len),
                font.name(),
                escape(line)
            );
        }
    }

    fn chart(&mut self, r: &Rect, geo: &ChartGeometry<f64>, facts: &[usize]) {
        let p = self.palette;
        let n = facts.len();
        match geo.kind {
            ChartKind::Pie | ChartKind::Donut | ChartKind::Rings => {
                let radius = r.w.min(r.h) / 2.0;
                let (cx, cy) = (r.x + r.w / 2.0, r.y + r.h / 2.0);
                for s in &geo.sectors {
                    if s.sweep <= 0.0 {
                        continue;
                    }
                    let (c, o) = fact_color(p, s.fact, n);
                    let d = sector_path(cx, cy, radius * s.outer, radius * s.inner, s.start, s.sweep);
                    let tag = s.fact.map_or(String::new(), |i| format!(r#" statviz:fact="{}""#, facts[i]));
                    let _ = write!(self.out, r#"<path d="{d}" {}{tag}/>"#, fill_attr(c, o));
                }
            }
            ChartKind::Bar | ChartKind::StackedBar => {
                let rows = geo.rows as f64;
                let row_h = r.h / (rows + 0.5 * (rows - 1.0));
                for s in &geo.segments {
                    if s.length <= 0.0 {
                        continue;
                    }
                    let (c, o) = fact_color(p, s.fact, if geo.kind == ChartKind::Bar { 1 } else { n });
                    let y = r.y + s.row as f64 * row_h * 1.5;
                    let tag = s.fact.map_or(String::new(), |i| format!(r#" statviz:fact="{}""#, facts[i]));
                    let _ = write!(
                        self.out,
                        r#"<rect x="{}" y="{}" width="{}" height="{}" {}{tag}/>"#,
                        num(r.x + s.offset * r.w),
                        num(y),
                        num(s.length * r.w),
                        num(row_h),
                        fill_attr(c, o)
                    );
                }
            }
        }
    }

    fn graphic(&mut self, e: &PlacedElement, g: &Graphic) -> Result<(), RenderError> {
        let r = e.rect;
        let p = self.palette;
        match g {
            Graphic::Pictograph { icon, grid, .. } => {
                let icon = self.icon(icon)?;
                let u = r.h / (grid.rows as f64 + (grid.rows as f64 - 1.0) * GRID_GAP);
                for k in 0..grid.count() {
                    let (cx, cy) = grid.cell_origin(k, icon.aspect);
                    let fill = grid.fill_of(k);
                    let _ = write!(self.out, r#"<g statviz:cell="{k}" statviz:fill="{}">"#, format!("{fill:.6}"));
                    self.filled_icon(icon, r.x + cx * u, r.y + cy * u, u, fill, false);
                    self.out.push_str("</g>");
                }
            }
            Graphic::FilledIcon { icon, fraction, .. } => {
                let icon = self.icon(icon)?;
                self.filled_icon(icon, r.x, r.y, r.h, *fraction, false);
            }
            Graphic::ScaledIcon { icon, fraction, .. } => {
                let icon = self.icon(icon)?;
                self.use_icon(icon, r.x, r.y, r.h, &fill_attr(p.graphic_secondary, 1.0));
                let h = r.h * fraction.clamp(0.0, 1.0).sqrt();
                let w = icon.aspect * h;
                self.use_icon(icon, r.x + (r.w - w) / 2.0, r.y + r.h - h, h, &fill_attr(p.graphic_primary, 1.0));
            }
            Graphic::Adornment { icon } => {
                let icon = self.icon(icon)?;
                self.use_icon(icon, r.x, r.y, r.h, &fill_attr(p.graphic_primary, 1.0));
            }
            Graphic::Background { icon } => {
                let icon = self.icon(icon)?;
                self.use_icon(icon, r.x, r.y, r.h, &fill_attr(p.graphic_secondary, BACKDROP_OPACITY));
            }
            Graphic::Chart { geometry, facts } => self.chart(&r, geometry, facts),
        }
        Ok(())
    }
}

/// Closed path of an annular sector (a pie slice when `inner` is 0).
pub fn sector_path(cx: f64, cy: f64, outer: f64, inner: f64, start: f64, sweep: f64) -> String {
    let pt = |r: f64, a: f64| {
        let (x, y) = arc_point(cx, cy, r, a);
        format!("{} {}", num(x), num(y))
    };
    if sweep >= 360.0 - 1e-9 {
        // Two half arcs; a single arc cannot close on itself.
        let mut d = format!(
            "M {} A {o} {o} 0 1 1 {} A {o} {o} 0 1 1 {} Z",
            pt(outer, 0.0),
            pt(outer, 180.0),
            pt(outer, 360.0),
            o = num(outer)
        );
        if inner > 0.0 {
            let _ = write!(
                d,
                " M {} A {i} {i} 0 1 0 {} A {i} {i} 0 1 0 {} Z",
                pt(inner, 0.0),
                pt(inner, 180.0),
                pt(inner, 360.0),
                i = num(inner)
            );
        }
        return d;
    }
    let large = if sweep > 180.0 { 1 } else { 0 };
    let end = start + sweep;
    if inner > 0.0 {
        format!(
            "M {} A {o} {o} 0 {large} 1 {} L {} A {i} {i} 0 {large} 0 {} Z",
            pt(outer, start),
            pt(outer, end),
            pt(inner, end),
            pt(inner, start),
            o = num(outer),
            i = num(inner)
        )
    } else {
        format!(
            "M {} {} L {} A {o} {o} 0 {large} 1 {} Z",
            num(cx),
            num(cy),
            pt(outer, start),
            pt(outer, end),
            o = num(outer)
        )
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    candidate: &'a str,
    blueprint: &'a str,
    scores: &'a crate::synth::Scores,
    seed: u64,
}

/// Renders a candidate to a standalone SVG document.
pub fn render(candidate: &Candidate, manifest: &AssetManifest, fonts: &FontBook, seed: u64) -> Result<String, RenderError> {
    let palette = manifest
        .palette(&candidate.choice.palette)
        .ok_or_else(|| RenderError::MissingAsset { kind: "palette", id: candidate.choice.palette.clone() })?;
    let layout = &candidate.layout;
    let mut w = Writer { out: String::new(), defs: String::new(), clips: 0, icons: BTreeSet::new(), manifest, palette };

    let _ = write!(
        w.out,
        r#"<rect x="0" y="0" width="{}" height="{}" fill="{}"/>"#,
        num(layout.width),
        num(layout.height),
        palette.background
    );
    // Backdrops first so everything else sits on top.
    let mut order: Vec<&PlacedElement> = layout.elements.iter().collect();
    order.sort_by_key(|e| !matches!(&e.kind, ElementKind::Graphic { graphic: Graphic::Background { .. } }));
    for e in order {
        let _ = write!(
            w.out,
            r#"<g statviz:region="{}" statviz:slot="{}" statviz:box="{} {} {} {}">"#,
            escape(&e.region),
            escape(&e.slot.name()),
            num(e.rect.x),
            num(e.rect.y),
            num(e.rect.w),
            num(e.rect.h)
        );
        match &e.kind {
            ElementKind::Text { role, font, size, lines, line_widths } => {
                w.text(e, *role, *font, *size, lines, line_widths, fonts)
            }
            ElementKind::Graphic { graphic } => w.graphic(e, graphic)?,
        }
        w.out.push_str("</g>");
    }

    let meta = serde_json::to_string(&Metadata {
        candidate: &candidate.id,
        blueprint: &candidate.blueprint,
        scores: &candidate.scores,
        seed,
    })
    .expect("metadata serializes")
    .replace("--", "- -");
    let mut doc = String::new();
    let _ = write!(
        doc,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="{SVG_NS}" xmlns:xlink="{XLINK_NS}" xmlns:statviz="{NS}" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">
<!-- statviz {meta} -->
<defs>{}</defs>
{}
</svg>
"#,
        num(layout.width),
        num(layout.height),
        num(layout.width),
        num(layout.height),
        w.defs,
        w.out
    );
    Ok(doc)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub kind: &'static str,
    pub detail: String,
}

fn parse_nums(s: &str) -> Option<Vec<f64>> {
    s.split(|c: char| c.is_whitespace() || c == ',').filter(|p| !p.is_empty()).map(|p| p.parse().ok()).collect()
}

/// Checks a rendered document: well-formed XML, a viewBox agreeing with the
/// declared size, only local references, and no text line wider than its box.
pub fn validate(svg: &str, fonts: &FontBook) -> Vec<Finding> {
    let mut out = Vec::new();
    let doc = match roxmltree::Document::parse(svg) {
        Ok(d) => d,
        Err(e) => {
            out.push(Finding { kind: "xml", detail: e.to_string() });
            return out;
        }
    };
    let root = doc.root_element();
    if root.tag_name().name() != "svg" {
        out.push(Finding { kind: "xml", detail: format!("root is <{}>", root.tag_name().name()) });
        return out;
    }
    let vb = root.attribute("viewBox").and_then(parse_nums);
    let size = (
        root.attribute("width").and_then(|v| v.parse::<f64>().ok()),
        root.attribute("height").and_then(|v| v.parse::<f64>().ok()),
    );
    match (vb.as_deref(), size) {
        (Some([_, _, vw, vh]), (Some(w), Some(h))) if *vw > 0.0 && *vh > 0.0 && h > 0.0 => {
            if ((vw / vh) - (w / h)).abs() > 1e-6 {
                out.push(Finding { kind: "aspect", detail: format!("viewBox {vw}x{vh} against {w}x{h}") });
            }
        }
        _ => out.push(Finding { kind: "aspect", detail: "missing or malformed viewBox/size".into() }),
    }
    for node in doc.descendants().filter(|n| n.is_element()) {
        for a in node.attributes() {
            if a.name() == "href" && !a.value().starts_with('#') {
                out.push(Finding { kind: "reference", detail: a.value().to_string() });
            }
        }
        if node.tag_name().name() != "text" {
            continue;
        }
        let Some(bx) = node
            .ancestors()
            .find_map(|a| a.attribute((NS, "box")))
            .and_then(parse_nums)
            .filter(|v| v.len() == 4)
        else {
            out.push(Finding { kind: "overflow", detail: "text outside a region".into() });
            continue;
        };
        let font = node.attribute((NS, "font")).and_then(|f| FontId::ALL.iter().copied().find(|id| id.name() == f));
        let size = node.attribute("font-size").and_then(|v| v.parse::<f64>().ok());
        let (Some(font), Some(size)) = (font, size) else {
            out.push(Finding { kind: "overflow", detail: "text without font or size".into() });
            continue;
        };
        let text = node.text().unwrap_or("");
        let width = fonts.get(font).width(text, size);
        if width > bx[2] + OVERFLOW_SLACK {
            out.push(Finding { kind: "overflow", detail: format!("{text:?} is {width:.2} wide in a {:.2} box", bx[2]) });
        }
    }
    out
}
