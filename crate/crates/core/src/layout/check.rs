//! Post-hoc validation of a solved layout.
//!
//! Shares nothing with the solver beyond the input types: text is re-measured
//! from the font tables and every required relation is re-evaluated on the
//! placed geometry.

use std::collections::BTreeMap;

use serde::Serialize;

use super::blueprint::{Instance, Quantity, Slot};
use super::fonts::{FontBook, LINE_HEIGHT};
use super::simplex::{Cmp, Priority};
use super::solve::{ElementKind, Rect, SolveOptions, SolvedLayout};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub constraint: String,
    pub detail: String,
}

const TOL: f64 = 1e-6;

fn tol(scale: f64) -> f64 {
    TOL * (1.0 + scale.abs())
}

fn overlaps(a: &Rect, b: &Rect) -> bool {
    let t = tol(a.w.max(a.h));
    a.x + t < b.right() && b.x + t < a.right() && a.y + t < b.bottom() && b.y + t < a.bottom()
}

pub fn check_layout(layout: &SolvedLayout, instance: &Instance, fonts: &FontBook, opts: &SolveOptions) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut flag = |constraint: &str, detail: String| out.push(Violation { constraint: constraint.to_string(), detail });
    let canvas = Rect { x: 0.0, y: 0.0, w: layout.width, h: layout.height }.inset(instance.padding);

    let leaves = instance.root.leaves();
    for leaf in &leaves {
        if layout.element(&leaf.id).is_none() {
            flag("content", format!("{} was not placed", leaf.id));
        }
    }

    for e in &layout.elements {
        let t = tol(layout.width.max(layout.height));
        if !canvas.contains(&e.region_rect, t) {
            flag("canvas", format!("{} region leaves the canvas", e.region));
        }
        let padding = leaves.iter().find(|l| l.id == e.region).map_or(0.0, |l| l.padding);
        if !e.region_rect.inset(padding).contains(&e.rect, t) {
            flag("containment", format!("{} leaves its padded region", e.region));
        }
        match &e.kind {
            ElementKind::Text { font, size, lines, .. } => {
                if *size < opts.min_font - TOL {
                    flag("min_font", format!("{} at {size:.3}", e.region));
                }
                if lines.is_empty() || lines.iter().any(|l| l.trim().is_empty()) {
                    flag("text", format!("{} has an empty line", e.region));
                }
                let metrics = fonts.get(*font);
                let widest = lines.iter().map(|l| metrics.width(l, *size)).fold(0.0, f64::max);
                if widest > e.rect.w + t {
                    flag("text_width", format!("{} needs {widest:.3}, box is {:.3}", e.region, e.rect.w));
                }
                let height = lines.len() as f64 * LINE_HEIGHT * size;
                if height > e.rect.h + t {
                    flag("text_height", format!("{} needs {height:.3}, box is {:.3}", e.region, e.rect.h));
                }
            }
            ElementKind::Graphic { graphic } => {
                if e.scale < opts.min_graphic - TOL {
                    flag("min_graphic", format!("{} at {:.3}", e.region, e.scale));
                }
                if (e.rect.w - graphic.aspect() * e.rect.h).abs() > t {
                    flag("aspect", format!("{} is {:.3}×{:.3}", e.region, e.rect.w, e.rect.h));
                }
            }
        }
    }

    // Content must not collide, except the backdrop of an overlay.
    let fg: Vec<_> = layout.elements.iter().filter(|e| e.slot != Slot::Background).collect();
    for (i, a) in fg.iter().enumerate() {
        for b in &fg[i + 1..] {
            if overlaps(&a.rect, &b.rect) {
                flag("overlap", format!("{} and {}", a.region, b.region));
            }
        }
    }

    // Repeated instances of one template share a scale.
    let mut by_template: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for e in layout.elements.iter().filter(|e| e.fact.is_some()) {
        by_template.entry(&e.template).or_default().push(e.scale);
    }
    for (template, scales) in by_template {
        if scales.iter().any(|s| (s - scales[0]).abs() > tol(scales[0])) {
            flag("equal_scale", format!("{template}: {scales:?}"));
        }
    }

    for rel in instance.constraints.iter().filter(|r| r.priority == Priority::Required) {
        let mut lhs = rel.constant;
        let mut scale = rel.constant.abs();
        for term in &rel.terms {
            let q = match term.quantity {
                Quantity::Font | Quantity::Scale => layout.element(&term.id).map(|e| e.scale),
                Quantity::Width => layout.regions.get(&term.id).map(|r| r.w),
                Quantity::Height => layout.regions.get(&term.id).map(|r| r.h),
            };
            let Some(q) = q else {
                flag(&rel.source, format!("{} is missing", term.id));
                continue;
            };
            lhs += term.coef * q;
            scale = scale.max((term.coef * q).abs());
        }
        let t = tol(scale);
        let ok = match rel.cmp {
            Cmp::Le => lhs <= t,
            Cmp::Ge => lhs >= -t,
            Cmp::Eq => lhs.abs() <= t,
        };
        if !ok {
            flag(&rel.source, format!("residual {lhs:.6}"));
        }
    }

    out
}
