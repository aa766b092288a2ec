//! Blueprints: canvas size, a tree of regions holding content slots, and
//! linear constraints between region sizes and element scales. Stored as JSON.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::graphic::GraphicType;
use super::simplex::{Cmp, Priority};
use super::LayoutError;
use crate::fact::DescriptionForm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Row,
    Column,
    Overlay,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Align {
    Start,
    #[default]
    Center,
    End,
}

/// What a leaf region displays.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "slot", rename_all = "snake_case")]
pub enum Slot {
    Graphic { graphics: Vec<GraphicType> },
    Number,
    Modifier,
    Description { form: DescriptionForm },
    /// The whole, set as a heading.
    Title,
    /// An icon drawn behind an overlay's other children.
    Background,
}

impl Slot {
    pub fn is_text(&self) -> bool {
        matches!(self, Slot::Number | Slot::Modifier | Slot::Description { .. } | Slot::Title)
    }

    pub fn name(&self) -> String {
        match self {
            Slot::Graphic { .. } => "graphic".into(),
            Slot::Number => "number".into(),
            Slot::Modifier => "modifier".into(),
            Slot::Description { form } => format!("description({})", form.name()),
            Slot::Title => "title".into(),
            Slot::Background => "background".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub id: String,
    #[serde(flatten)]
    pub slot: Slot,
    #[serde(default = "default_padding")]
    pub padding: f64,
    #[serde(default)]
    pub align: Align,
    #[serde(default = "one")]
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Container {
    #[serde(default)]
    pub id: Option<String>,
    pub direction: Direction,
    pub children: Vec<Node>,
    #[serde(default = "default_gap")]
    pub gap: f64,
    #[serde(default = "one")]
    pub weight: f64,
    /// Children are instantiated once per fact, in a container of this direction.
    #[serde(default)]
    pub repeat: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Leaf(Leaf),
    Container(Container),
}

fn default_padding() -> f64 {
    6.0
}
fn default_gap() -> f64 {
    8.0
}
fn one() -> f64 {
    1.0
}

/// Which fact groups a blueprint serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactArity {
    Single,
    /// Two or more facts, compared or accumulated.
    Multi,
    /// Two or more facts that sum within one whole.
    Accumulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Admission {
    Any,
    /// The statement starts with its number, or with the modifier right before it.
    NumberInitial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Element scale: font size for text, height for graphics.
    Font,
    Scale,
    Width,
    Height,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub quantity: Quantity,
    pub id: String,
}

/// `Σ terms + constant  cmp  0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRelation {
    pub terms: Vec<Term>,
    pub constant: f64,
    pub cmp: Cmp,
    pub priority: Priority,
    pub source: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum RawConstraint {
    Plain(String),
    Prioritized { expr: String, priority: Priority },
}

#[derive(Debug, Clone, Deserialize)]
struct RawBlueprint {
    id: String,
    #[serde(default)]
    description: String,
    size: [f64; 2],
    #[serde(default = "default_canvas_padding")]
    padding: f64,
    facts: FactArity,
    #[serde(default = "any_admission")]
    admission: Admission,
    root: Node,
    #[serde(default)]
    constraints: Vec<RawConstraint>,
}

fn default_canvas_padding() -> f64 {
    16.0
}
fn any_admission() -> Admission {
    Admission::Any
}

#[derive(Debug, Clone)]
pub struct Blueprint {
    pub id: String,
    pub description: String,
    pub width: f64,
    pub height: f64,
    pub padding: f64,
    pub facts: FactArity,
    pub admission: Admission,
    pub root: Node,
    pub constraints: Vec<LinearRelation>,
}

impl Blueprint {
    pub fn from_json(text: &str) -> Result<Self, LayoutError> {
        let raw: RawBlueprint = serde_json::from_str(text)
            .map_err(|e| LayoutError::Blueprint { id: String::new(), message: format!("line {}: {e}", e.line()) })?;
        let err = |m: String| LayoutError::Blueprint { id: raw.id.clone(), message: m };
        if !(raw.size[0] > 0.0 && raw.size[1] > 0.0) {
            return Err(err("size must be positive".into()));
        }
        let constraints = raw
            .constraints
            .iter()
            .map(|c| match c {
                RawConstraint::Plain(s) => parse_relation(s, Priority::Required),
                RawConstraint::Prioritized { expr, priority } => parse_relation(expr, *priority),
            })
            .collect::<Result<Vec<_>, String>>()
            .map_err(err)?;
        let bp = Blueprint {
            id: raw.id.clone(),
            description: raw.description,
            width: raw.size[0],
            height: raw.size[1],
            padding: raw.padding,
            facts: raw.facts,
            admission: raw.admission,
            root: raw.root,
            constraints,
        };
        bp.validate()?;
        Ok(bp)
    }

    pub fn aspect(&self) -> f64 {
        self.width / self.height
    }

    fn validate(&self) -> Result<(), LayoutError> {
        let err = |m: String| LayoutError::Blueprint { id: self.id.clone(), message: m };
        let mut ids = BTreeSet::new();
        let mut leaves = 0;
        let mut stack = vec![(&self.root, false)];
        while let Some((node, in_overlay)) = stack.pop() {
            match node {
                Node::Leaf(l) => {
                    leaves += 1;
                    if !ids.insert(l.id.clone()) {
                        return Err(err(format!("duplicate region id {}", l.id)));
                    }
                    if let Slot::Graphic { graphics } = &l.slot {
                        if graphics.is_empty() {
                            return Err(err(format!("graphic region {} allows no graphic type", l.id)));
                        }
                    }
                    if l.slot == Slot::Background && !in_overlay {
                        return Err(err(format!("background region {} must sit in an overlay", l.id)));
                    }
                }
                Node::Container(c) => {
                    if let Some(id) = &c.id {
                        if !ids.insert(id.clone()) {
                            return Err(err(format!("duplicate region id {id}")));
                        }
                    }
                    if c.children.is_empty() {
                        return Err(err("empty container".into()));
                    }
                    if c.repeat && self.facts == FactArity::Single {
                        return Err(err("repeated containers need a multi-fact blueprint".into()));
                    }
                    for ch in &c.children {
                        stack.push((ch, c.direction == Direction::Overlay));
                    }
                }
            }
        }
        if leaves == 0 {
            return Err(err("no content regions".into()));
        }
        for rel in &self.constraints {
            for t in &rel.terms {
                if !ids.contains(&t.id) {
                    return Err(err(format!("constraint {:?} names unknown region {}", rel.source, t.id)));
                }
            }
        }
        Ok(())
    }

    /// Leaves in document order.
    pub fn leaves(&self) -> Vec<&Leaf> {
        fn walk<'a>(n: &'a Node, out: &mut Vec<&'a Leaf>) {
            match n {
                Node::Leaf(l) => out.push(l),
                Node::Container(c) => c.children.iter().for_each(|ch| walk(ch, out)),
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    /// Expands repeated containers for `facts` facts.
    pub fn instantiate(&self, facts: usize) -> Instance {
        let mut repeated = BTreeSet::new();
        let root = expand(&self.root, None, facts.max(1), &mut repeated);
        let mut constraints = Vec::new();
        for rel in &self.constraints {
            let touches_repeat = rel.terms.iter().any(|t| repeated.contains(&t.id));
            let copies = if touches_repeat { facts.max(1) } else { 1 };
            for i in 0..copies {
                let mut r = rel.clone();
                for t in &mut r.terms {
                    if repeated.contains(&t.id) {
                        t.id = instance_id(&t.id, i);
                    }
                }
                constraints.push(r);
            }
        }
        Instance {
            blueprint: self.id.clone(),
            width: self.width,
            height: self.height,
            padding: self.padding,
            root,
            constraints,
        }
    }
}

pub fn instance_id(id: &str, fact: usize) -> String {
    format!("{id}#{fact}")
}

fn expand(node: &Node, fact: Option<usize>, facts: usize, repeated: &mut BTreeSet<String>) -> Region {
    match node {
        Node::Leaf(l) => {
            let id = match fact {
                Some(i) => {
                    repeated.insert(l.id.clone());
                    instance_id(&l.id, i)
                }
                None => l.id.clone(),
            };
            Region {
                id,
                template: l.id.clone(),
                kind: RegionKind::Leaf { slot: l.slot.clone(), fact },
                children: Vec::new(),
                gap: 0.0,
                padding: l.padding,
                weight: l.weight,
                align: l.align,
            }
        }
        Node::Container(c) => {
            let template = c.id.clone().unwrap_or_default();
            let id = match (fact, &c.id) {
                (Some(i), Some(id)) => {
                    repeated.insert(id.clone());
                    instance_id(id, i)
                }
                (_, Some(id)) => id.clone(),
                (_, None) => String::new(),
            };
            let children = if c.repeat {
                (0..facts)
                    .map(|i| Region {
                        id: String::new(),
                        template: String::new(),
                        kind: RegionKind::Container(Direction::Overlay),
                        children: c.children.iter().map(|ch| expand(ch, Some(i), facts, repeated)).collect(),
                        gap: 0.0,
                        padding: 0.0,
                        weight: 1.0,
                        align: Align::Center,
                    })
                    .map(|mut r| {
                        // a single repeated child needs no wrapper
                        if r.children.len() == 1 {
                            r.children.pop().unwrap()
                        } else {
                            r.kind = RegionKind::Container(if c.direction == Direction::Row {
                                Direction::Column
                            } else {
                                Direction::Row
                            });
                            r.gap = c.gap;
                            r
                        }
                    })
                    .collect()
            } else {
                c.children.iter().map(|ch| expand(ch, fact, facts, repeated)).collect()
            };
            Region {
                id,
                template,
                kind: RegionKind::Container(c.direction),
                children,
                gap: c.gap,
                padding: 0.0,
                weight: c.weight,
                align: Align::Center,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RegionKind {
    Container(Direction),
    Leaf { slot: Slot, fact: Option<usize> },
}

/// A region of an instantiated blueprint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    /// Unique within the instance; empty for anonymous containers.
    pub id: String,
    /// The blueprint id this region was expanded from.
    pub template: String,
    pub kind: RegionKind,
    pub children: Vec<Region>,
    pub gap: f64,
    pub padding: f64,
    pub weight: f64,
    pub align: Align,
}

impl Region {
    pub fn leaves(&self) -> Vec<&Region> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(r) = stack.pop() {
            if matches!(r.kind, RegionKind::Leaf { .. }) {
                out.push(r);
            }
            stack.extend(r.children.iter().rev());
        }
        out
    }
}

/// A blueprint expanded for a fact count.
#[derive(Debug, Clone)]
pub struct Instance {
    pub blueprint: String,
    pub width: f64,
    pub height: f64,
    pub padding: f64,
    pub root: Region,
    pub constraints: Vec<LinearRelation>,
}

/// Parses `lhs (>=|<=|==) rhs`, each side a sum of `[k *] quantity(id)` terms
/// and numbers.
pub fn parse_relation(src: &str, priority: Priority) -> Result<LinearRelation, String> {
    let (cmp, at, len) = [(">=", Cmp::Ge), ("<=", Cmp::Le), ("==", Cmp::Eq)]
        .iter()
        .find_map(|(op, c)| src.find(op).map(|i| (*c, i, op.len())))
        .ok_or_else(|| format!("{src:?}: no comparison operator"))?;
    let (lhs, rhs) = (&src[..at], &src[at + len..]);
    let (mut terms, mut constant) = parse_side(lhs).map_err(|e| format!("{src:?}: {e}"))?;
    let (rterms, rconst) = parse_side(rhs).map_err(|e| format!("{src:?}: {e}"))?;
    for mut t in rterms {
        t.coef = -t.coef;
        terms.push(t);
    }
    constant -= rconst;
    Ok(LinearRelation { terms, constant, cmp, priority, source: src.trim().to_string() })
}

fn parse_side(s: &str) -> Result<(Vec<Term>, f64), String> {
    let mut terms = Vec::new();
    let mut constant = 0.0;
    let cleaned = s.replace('-', " + -");
    for raw in cleaned.split('+') {
        let part = raw.trim();
        if part.is_empty() {
            continue;
        }
        let (sign, body) = match part.strip_prefix('-') {
            Some(rest) => (-1.0, rest.trim()),
            None => (1.0, part),
        };
        let factors: Vec<&str> = body.split('*').map(str::trim).collect();
        let mut coef = sign;
        let mut atom: Option<(Quantity, String)> = None;
        for f in factors {
            if let Ok(v) = f.parse::<f64>() {
                coef *= v;
            } else if atom.is_none() {
                atom = Some(parse_atom(f)?);
            } else {
                return Err(format!("nonlinear term {body:?}"));
            }
        }
        match atom {
            Some((quantity, id)) => terms.push(Term { coef, quantity, id }),
            None => constant += coef,
        }
    }
    Ok((terms, constant))
}

fn parse_atom(s: &str) -> Result<(Quantity, String), String> {
    let open = s.find('(').ok_or_else(|| format!("expected quantity(id), got {s:?}"))?;
    let id = s[open + 1..].strip_suffix(')').ok_or_else(|| format!("unclosed {s:?}"))?.trim();
    let q = match s[..open].trim() {
        "font" => Quantity::Font,
        "scale" => Quantity::Scale,
        "width" => Quantity::Width,
        "height" => Quantity::Height,
        other => return Err(format!("unknown quantity {other:?}")),
    };
    if id.is_empty() {
        return Err(format!("empty id in {s:?}"));
    }
    Ok((q, id.to_string()))
}

/// Loads every `*.json` blueprint in `dir`, sorted by id.
pub fn load_blueprints(dir: &Path) -> Result<Vec<Blueprint>, LayoutError> {
    let entries = std::fs::read_dir(dir).map_err(|e| LayoutError::Io { path: dir.display().to_string(), source: e })?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map_or(false, |x| x == "json"))
        .collect();
    paths.sort();
    let mut out: BTreeMap<String, Blueprint> = BTreeMap::new();
    for p in paths {
        let text = std::fs::read_to_string(&p).map_err(|e| LayoutError::Io { path: p.display().to_string(), source: e })?;
        let bp = Blueprint::from_json(&text).map_err(|e| match e {
            LayoutError::Blueprint { id, message } if id.is_empty() => {
                LayoutError::Blueprint { id: p.display().to_string(), message }
            }
            other => other,
        })?;
        if out.contains_key(&bp.id) {
            return Err(LayoutError::Blueprint { id: bp.id.clone(), message: "duplicate blueprint id".into() });
        }
        out.insert(bp.id.clone(), bp);
    }
    Ok(out.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ratio_constraint() {
        let r = parse_relation("font(number) >= 3 * font(description)", Priority::Required).unwrap();
        assert_eq!(r.cmp, Cmp::Ge);
        assert_eq!(r.terms.len(), 2);
        assert_eq!((r.terms[0].coef, r.terms[1].coef), (1.0, -3.0));
        assert_eq!(r.terms[1].id, "description");
        let r = parse_relation("width(a) - 2*width(b) + 10 == 0.5", Priority::Weak).unwrap();
        assert_eq!(r.terms[1].coef, -2.0);
        assert_eq!(r.constant, 9.5);
        assert!(parse_relation("font(a) * font(b) >= 1", Priority::Required).is_err());
        assert!(parse_relation("font(a)", Priority::Required).is_err());
        assert!(parse_relation("size(a) >= 1", Priority::Required).is_err());
    }

    const MULTI: &str = r#"{
        "id": "pair", "size": [800, 400], "facts": "multi",
        "root": {"direction": "row", "repeat": true, "children": [
            {"id": "g", "slot": "graphic", "graphics": ["pie"]},
            {"id": "n", "slot": "number"}
        ]},
        "constraints": ["font(n) >= 0.2 * scale(g)"]
    }"#;

    #[test]
    fn repeat_expands_per_fact() {
        let bp = Blueprint::from_json(MULTI).unwrap();
        let inst = bp.instantiate(3);
        let ids: Vec<&str> = inst.root.leaves().iter().map(|l| l.id.as_str()).collect();
        assert_eq!(ids, vec!["g#0", "n#0", "g#1", "n#1", "g#2", "n#2"]);
        assert_eq!(inst.constraints.len(), 3);
        assert_eq!(inst.constraints[2].terms[0].id, "n#2");
        assert_eq!(inst.root.children.len(), 3);
        assert_eq!(inst.root.children[0].kind, RegionKind::Container(Direction::Column));
    }

    #[test]
    fn rejects_bad_blueprints() {
        let dup = r#"{"id":"d","size":[1,1],"facts":"single","root":{"direction":"row","children":[
            {"id":"a","slot":"number"},{"id":"a","slot":"number"}]}}"#;
        assert!(Blueprint::from_json(dup).is_err());
        let unknown = r#"{"id":"u","size":[1,1],"facts":"single","root":{"id":"a","slot":"number"},
            "constraints":["font(b) >= 1"]}"#;
        assert!(Blueprint::from_json(unknown).is_err());
        let bg = r#"{"id":"b","size":[1,1],"facts":"single","root":{"id":"a","slot":"background"}}"#;
        assert!(Blueprint::from_json(bg).is_err());
    }
}
