//! Sizing and placement of a blueprint instance.
//!
//! Discrete choices (text family, line counts, graphic variants) are
//! enumerated; each combination is a linear program over region sizes and
//! element scales. Sibling regions split their parent by weight as a strong
//! preference; within that, the LP maximizes Σ √(w·h)·s, a linear stand-in for
//! content area. Combinations are then compared by their true covered area.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::blueprint::{Align, Direction, Instance, Quantity, Region, RegionKind, Slot};
use super::fonts::{FontBook, FontId, LINE_HEIGHT};
use super::graphic::Graphic;
use super::linebreak::{break_lines, TextBlock};
use super::simplex::{Cmp, LinExpr, Priority, SolveError, Solver, Var};
use super::LayoutError;

/// Width reserved for text beyond its measured width, so renderers that
/// substitute a slightly wider face still fit.
pub const TEXT_RESERVE: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextRole {
    Number,
    Modifier,
    Description,
    Title,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Content {
    Text { text: String, role: TextRole },
    /// Alternatives for one graphic slot; the solver picks one.
    Graphic(Vec<Graphic>),
}

/// Content per leaf id of an instance.
pub type Contents = BTreeMap<String, Content>;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub min_font: f64,
    pub min_graphic: f64,
    pub max_lines: usize,
    /// Line counts tried per text region.
    pub line_options: usize,
    pub max_combinations: usize,
    pub families: Vec<FontId>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            min_font: 8.0,
            min_graphic: 32.0,
            max_lines: 10,
            line_options: 6,
            max_combinations: 1500,
            families: FontId::TEXT_FAMILIES.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn inset(&self, p: f64) -> Rect {
        Rect { x: self.x + p, y: self.y + p, w: self.w - 2.0 * p, h: self.h - 2.0 * p }
    }

    pub fn contains(&self, other: &Rect, tol: f64) -> bool {
        other.x >= self.x - tol
            && other.y >= self.y - tol
            && other.right() <= self.right() + tol
            && other.bottom() <= self.bottom() + tol
    }
}

/// Area covered by the union of rectangles.
pub fn union_area(rects: &[Rect]) -> f64 {
    let mut xs: Vec<f64> = rects.iter().flat_map(|r| [r.x, r.right()]).collect();
    let mut ys: Vec<f64> = rects.iter().flat_map(|r| [r.y, r.bottom()]).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    ys.dedup();
    let mut area = 0.0;
    for xw in xs.windows(2) {
        for yw in ys.windows(2) {
            let (cx, cy) = ((xw[0] + xw[1]) / 2.0, (yw[0] + yw[1]) / 2.0);
            if rects.iter().any(|r| cx > r.x && cx < r.right() && cy > r.y && cy < r.bottom()) {
                area += (xw[1] - xw[0]) * (yw[1] - yw[0]);
            }
        }
    }
    area
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElementKind {
    Text {
        role: TextRole,
        font: FontId,
        size: f64,
        lines: Vec<String>,
        /// Line widths at `size`.
        line_widths: Vec<f64>,
    },
    Graphic { graphic: Graphic },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedElement {
    pub region: String,
    pub template: String,
    pub slot: Slot,
    pub fact: Option<usize>,
    pub region_rect: Rect,
    /// The element's own box inside the padded region.
    pub rect: Rect,
    /// Font size for text, height for graphics.
    pub scale: f64,
    pub align: Align,
    pub kind: ElementKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvedLayout {
    pub blueprint: String,
    pub width: f64,
    pub height: f64,
    /// Rectangles of named regions, leaves and containers.
    pub regions: BTreeMap<String, Rect>,
    pub elements: Vec<PlacedElement>,
    /// Value of the linear objective.
    pub objective: f64,
    /// Area covered by all elements.
    pub content_area: f64,
}

impl SolvedLayout {
    pub fn canvas_area(&self) -> f64 {
        self.width * self.height
    }

    /// Covered area over canvas area.
    pub fn coverage(&self) -> f64 {
        self.content_area / self.canvas_area()
    }

    pub fn element(&self, region: &str) -> Option<&PlacedElement> {
        self.elements.iter().find(|e| e.region == region)
    }

    pub fn font_of(&self, region: &str) -> Option<f64> {
        self.element(region).map(|e| e.scale)
    }
}

/// One discrete choice for a leaf: its size per unit scale and what it shows.
#[derive(Debug, Clone)]
struct LeafOption {
    cw: f64,
    ch: f64,
    kind: OptionKind,
}

#[derive(Debug, Clone)]
enum OptionKind {
    Text { role: TextRole, font: FontId, block: TextBlock },
    Graphic(Graphic),
}

fn line_counts(words: usize, max_lines: usize, keep: usize) -> Vec<usize> {
    let top = words.min(max_lines).max(1);
    if top <= keep {
        return (1..=top).collect();
    }
    let mut out: Vec<usize> = (0..keep)
        .map(|i| 1 + ((i * (top - 1)) as f64 / (keep - 1) as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

/// Keeps `keep` evenly spaced entries, always including the first.
fn thin<T: Clone>(v: &[T], keep: usize) -> Vec<T> {
    if v.len() <= keep || keep == 0 {
        return v.to_vec();
    }
    if keep == 1 {
        return vec![v[0].clone()];
    }
    (0..keep).map(|i| v[(i * (v.len() - 1)) / (keep - 1)].clone()).collect()
}

struct Vars {
    w: Vec<Var>,
    h: Vec<Var>,
    /// Region index → scale variable, leaves only.
    s: HashMap<usize, Var>,
}

/// Regions in depth-first order with parent links.
fn flatten(root: &Region) -> Vec<(&Region, Option<usize>)> {
    let mut out = Vec::new();
    fn walk<'a>(r: &'a Region, parent: Option<usize>, out: &mut Vec<(&'a Region, Option<usize>)>) {
        let me = out.len();
        out.push((r, parent));
        for c in &r.children {
            walk(c, Some(me), out);
        }
    }
    walk(root, None, &mut out);
    out
}

pub fn solve(
    instance: &Instance,
    contents: &Contents,
    fonts: &FontBook,
    opts: &SolveOptions,
) -> Result<SolvedLayout, LayoutError> {
    let regions = flatten(&instance.root);
    let leaf_idx: Vec<usize> = regions
        .iter()
        .enumerate()
        .filter(|(_, (r, _))| matches!(r.kind, RegionKind::Leaf { .. }))
        .map(|(i, _)| i)
        .collect();
    for &i in &leaf_idx {
        if !contents.contains_key(&regions[i].0.id) {
            return Err(LayoutError::MissingContent(regions[i].0.id.clone()));
        }
    }

    let mut best: Option<SolvedLayout> = None;
    let mut blocks: HashMap<(String, FontId, usize), TextBlock> = HashMap::new();
    let families: Vec<FontId> = if leaf_idx.iter().any(|&i| {
        matches!(contents[&regions[i].0.id], Content::Text { role, .. } if role != TextRole::Number)
    }) {
        opts.families.clone()
    } else {
        vec![opts.families[0]]
    };

    for &family in &families {
        let mut options: Vec<Vec<LeafOption>> = Vec::new();
        for &i in &leaf_idx {
            let list = match &contents[&regions[i].0.id] {
                Content::Text { text, role } => {
                    let font = match role {
                        TextRole::Number | TextRole::Title => FontId::SansBold,
                        _ => family,
                    };
                    let words = text.split_whitespace().count();
                    if words == 0 {
                        return Err(LayoutError::MissingContent(regions[i].0.id.clone()));
                    }
                    let counts =
                        if *role == TextRole::Number { vec![1] } else { line_counts(words, opts.max_lines, opts.line_options) };
                    let mut list = Vec::new();
                    for l in counts {
                        let key = (text.clone(), font, l);
                        if !blocks.contains_key(&key) {
                            blocks.insert(key.clone(), break_lines(text, fonts.get(font), l)?);
                        }
                        let block = blocks[&key].clone();
                        list.push(LeafOption {
                            cw: block.width,
                            ch: block.height,
                            kind: OptionKind::Text { role: *role, font, block },
                        });
                    }
                    list
                }
                Content::Graphic(gs) => gs
                    .iter()
                    .map(|g| LeafOption { cw: g.aspect(), ch: 1.0, kind: OptionKind::Graphic(g.clone()) })
                    .collect(),
            };
            if list.is_empty() {
                return Err(LayoutError::MissingContent(regions[i].0.id.clone()));
            }
            options.push(list);
        }
        // Thin the longest option lists until the product is affordable.
        loop {
            let product: usize = options.iter().map(Vec::len).fold(1usize, |a, b| a.saturating_mul(b));
            if product <= opts.max_combinations {
                break;
            }
            let (k, len) = options.iter().enumerate().map(|(k, v)| (k, v.len())).max_by_key(|&(k, l)| (l, usize::MAX - k)).unwrap();
            if len <= 1 {
                break;
            }
            options[k] = thin(&options[k], len - 1);
        }

        let mut pick = vec![0usize; options.len()];
        'combos: loop {
            let chosen: Vec<&LeafOption> = pick.iter().zip(&options).map(|(&p, o)| &o[p]).collect();
            match solve_combination(instance, &regions, &leaf_idx, &chosen, opts) {
                Ok(layout) => {
                    if best.as_ref().map_or(true, |b| layout.content_area > b.content_area + 1e-9) {
                        best = Some(layout);
                    }
                }
                Err(LayoutError::Infeasible { .. }) => {}
                Err(e) => return Err(e),
            }
            for k in (0..pick.len()).rev() {
                pick[k] += 1;
                if pick[k] < options[k].len() {
                    continue 'combos;
                }
                pick[k] = 0;
            }
            break;
        }
    }
    best.ok_or_else(|| LayoutError::Infeasible { blueprint: instance.blueprint.clone() })
}

fn solve_combination(
    instance: &Instance,
    regions: &[(&Region, Option<usize>)],
    leaf_idx: &[usize],
    chosen: &[&LeafOption],
    opts: &SolveOptions,
) -> Result<SolvedLayout, LayoutError> {
    let infeasible = || LayoutError::Infeasible { blueprint: instance.blueprint.clone() };
    let mut solver = Solver::<f64>::new();
    let mut vars = Vars { w: Vec::new(), h: Vec::new(), s: HashMap::new() };
    for (i, (r, _)) in regions.iter().enumerate() {
        let name = if r.id.is_empty() { format!("_{i}") } else { r.id.clone() };
        vars.w.push(solver.add_var(format!("w({name})")));
        vars.h.push(solver.add_var(format!("h({name})")));
    }
    let option_of: HashMap<usize, &LeafOption> = leaf_idx.iter().copied().zip(chosen.iter().copied()).collect();
    for &i in leaf_idx {
        let name = regions[i].0.id.clone();
        vars.s.insert(i, solver.add_var(format!("s({name})")));
    }
    let req = Priority::Required;
    let c = |v: f64| LinExpr::constant(v);

    solver.add_constraint(LinExpr::var(vars.w[0]).plus(&c(-(instance.width - 2.0 * instance.padding))), Cmp::Eq, req);
    solver.add_constraint(LinExpr::var(vars.h[0]).plus(&c(-(instance.height - 2.0 * instance.padding))), Cmp::Eq, req);

    for (i, (r, _)) in regions.iter().enumerate() {
        let RegionKind::Container(dir) = r.kind else { continue };
        let kids: Vec<usize> = regions.iter().enumerate().filter(|(_, (_, p))| *p == Some(i)).map(|(k, _)| k).collect();
        let (main, cross) = match dir {
            Direction::Row => (&vars.w, &vars.h),
            Direction::Column => (&vars.h, &vars.w),
            Direction::Overlay => (&vars.w, &vars.h),
        };
        if dir == Direction::Overlay {
            for &k in &kids {
                solver.add_constraint(LinExpr::var(vars.w[k]).term(vars.w[i], -1.0), Cmp::Eq, req);
                solver.add_constraint(LinExpr::var(vars.h[k]).term(vars.h[i], -1.0), Cmp::Eq, req);
            }
            continue;
        }
        let mut sum = c(r.gap * (kids.len() as f64 - 1.0)).term(main[i], -1.0);
        for &k in &kids {
            sum = sum.term(main[k], 1.0);
            solver.add_constraint(LinExpr::var(cross[k]).term(cross[i], -1.0), Cmp::Eq, req);
        }
        solver.add_constraint(sum, Cmp::Eq, req);
        let w0 = regions[kids[0]].0.weight;
        for &k in kids.iter().skip(1) {
            let wk = regions[k].0.weight;
            solver.add_constraint(LinExpr::var(main[k]).scaled(w0).term(main[kids[0]], -wk), Cmp::Eq, Priority::Strong);
        }
    }

    let mut objective = LinExpr::zero();
    let mut by_template: BTreeMap<&str, Var> = BTreeMap::new();
    for &i in leaf_idx {
        let (r, _) = regions[i];
        let o = option_of[&i];
        let s = vars.s[&i];
        let p = 2.0 * r.padding;
        let reserve = if matches!(o.kind, OptionKind::Text { .. }) { TEXT_RESERVE } else { 1.0 };
        solver.add_constraint(LinExpr::var(s).scaled(o.cw * reserve).term(vars.w[i], -1.0).plus(&c(p)), Cmp::Le, req);
        solver.add_constraint(LinExpr::var(s).scaled(o.ch).term(vars.h[i], -1.0).plus(&c(p)), Cmp::Le, req);
        let floor = match o.kind {
            OptionKind::Text { .. } => opts.min_font,
            OptionKind::Graphic(_) => opts.min_graphic,
        };
        solver.add_constraint(LinExpr::var(s).plus(&c(-floor)), Cmp::Ge, req);
        objective = objective.term(s, (o.cw * o.ch).sqrt());
        if let RegionKind::Leaf { fact: Some(_), .. } = r.kind {
            match by_template.get(r.template.as_str()) {
                Some(&first) => {
                    solver.add_constraint(LinExpr::var(s).term(first, -1.0), Cmp::Eq, req);
                }
                None => {
                    by_template.insert(&r.template, s);
                }
            }
        }
    }
    solver.set_objective(objective);

    let index_of: HashMap<&str, usize> =
        regions.iter().enumerate().filter(|(_, (r, _))| !r.id.is_empty()).map(|(i, (r, _))| (r.id.as_str(), i)).collect();
    for rel in &instance.constraints {
        let mut e = c(rel.constant);
        for t in &rel.terms {
            let &i = index_of
                .get(t.id.as_str())
                .ok_or_else(|| LayoutError::Blueprint { id: instance.blueprint.clone(), message: format!("no region {}", t.id) })?;
            let v = match t.quantity {
                Quantity::Font | Quantity::Scale => *vars.s.get(&i).ok_or_else(|| LayoutError::Blueprint {
                    id: instance.blueprint.clone(),
                    message: format!("{} has no scale; it is not a content region", t.id),
                })?,
                Quantity::Width => vars.w[i],
                Quantity::Height => vars.h[i],
            };
            e = e.term(v, t.coef);
        }
        solver.add_constraint(e, rel.cmp, rel.priority);
    }

    let sol = match solver.solve() {
        Ok(s) => s,
        Err(SolveError::Infeasible) => return Err(infeasible()),
        Err(e) => {
            return Err(LayoutError::Solver { blueprint: instance.blueprint.clone(), message: e.to_string() })
        }
    };

    // Place top-down.
    let mut rects = vec![Rect { x: 0.0, y: 0.0, w: 0.0, h: 0.0 }; regions.len()];
    rects[0] = Rect {
        x: instance.padding,
        y: instance.padding,
        w: sol.value(vars.w[0]),
        h: sol.value(vars.h[0]),
    };
    for (i, (r, _)) in regions.iter().enumerate() {
        let RegionKind::Container(dir) = r.kind else { continue };
        let parent = rects[i];
        let mut cursor = 0.0;
        for k in (0..regions.len()).filter(|&k| regions[k].1 == Some(i)) {
            let (w, h) = (sol.value(vars.w[k]), sol.value(vars.h[k]));
            rects[k] = match dir {
                Direction::Row => Rect { x: parent.x + cursor, y: parent.y, w, h: parent.h },
                Direction::Column => Rect { x: parent.x, y: parent.y + cursor, w: parent.w, h },
                Direction::Overlay => parent,
            };
            cursor += match dir {
                Direction::Row => w + r.gap,
                Direction::Column => h + r.gap,
                Direction::Overlay => 0.0,
            };
        }
    }

    let mut elements = Vec::new();
    for &i in leaf_idx {
        let (r, _) = regions[i];
        let RegionKind::Leaf { slot, fact } = &r.kind else { unreachable!() };
        let o = option_of[&i];
        let s = sol.value(vars.s[&i]);
        let inner = rects[i].inset(r.padding);
        let (w, h) = (o.cw * s, o.ch * s);
        let x = match r.align {
            Align::Start => inner.x,
            Align::Center => inner.x + (inner.w - w) / 2.0,
            Align::End => inner.right() - w,
        };
        let y = inner.y + (inner.h - h) / 2.0;
        let kind = match &o.kind {
            OptionKind::Text { role, font, block } => ElementKind::Text {
                role: *role,
                font: *font,
                size: s,
                lines: block.lines.clone(),
                line_widths: block.line_widths.iter().map(|lw| lw * s).collect(),
            },
            OptionKind::Graphic(g) => ElementKind::Graphic { graphic: g.clone() },
        };
        elements.push(PlacedElement {
            region: r.id.clone(),
            template: r.template.clone(),
            slot: slot.clone(),
            fact: *fact,
            region_rect: rects[i],
            rect: Rect { x, y, w, h },
            scale: s,
            align: r.align,
            kind,
        });
    }
    let content_area = union_area(&elements.iter().map(|e| e.rect).collect::<Vec<_>>());
    let named = regions
        .iter()
        .enumerate()
        .filter(|(_, (r, _))| !r.id.is_empty())
        .map(|(i, (r, _))| (r.id.clone(), rects[i]))
        .collect();
    Ok(SolvedLayout {
        blueprint: instance.blueprint.clone(),
        width: instance.width,
        height: instance.height,
        regions: named,
        elements,
        objective: sol.objective,
        content_area,
    })
}

/// Height of a text block of `lines` lines at `size`.
pub fn text_height(lines: usize, size: f64) -> f64 {
    lines as f64 * LINE_HEIGHT * size
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_of_overlapping_rects() {
        let a = Rect { x: 0.0, y: 0.0, w: 2.0, h: 2.0 };
        let b = Rect { x: 1.0, y: 1.0, w: 2.0, h: 2.0 };
        assert_eq!(union_area(&[a, b]), 7.0);
        assert_eq!(union_area(&[a, a]), 4.0);
        assert_eq!(union_area(&[]), 0.0);
    }

    #[test]
    fn line_count_choices() {
        assert_eq!(line_counts(3, 10, 6), vec![1, 2, 3]);
        assert_eq!(line_counts(20, 10, 6), vec![1, 3, 5, 6, 8, 10]);
        assert_eq!(thin(&[1, 2, 3, 4, 5], 3), vec![1, 3, 5]);
    }
}
