//! Candidate synthesis: every admissible blueprint is filled with the best
//! matching icons, palettes and descriptions, solved, scored and ranked.

mod score;

pub use score::{informative_score, rank, semantic_score, top, total, visual_score, RankingWeights, Scores};

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assets::{load_manifest, query_words, AssetError, AssetLibrary, FlagViolation, IconAsset, IconUse, MatchResult};
use crate::fact::{extract_descriptions, DescriptionForm, DescriptionSet, FactGroup, Relation};
use crate::lexicon::Lexicon;
use crate::layout::blueprint::{Admission, FactArity, RegionKind, Slot};
use crate::layout::chart::{chart_geometry, DEFAULT_INNER_RATIO};
use crate::layout::graphic::IconRef;
use crate::layout::pictograph::pictograph_options;
use crate::layout::solve::SolvedLayout;
use crate::layout::{
    load_blueprints, solve, Blueprint, Content, Contents, FontBook, Graphic, GraphicType, LayoutError, SolveOptions,
    TextRole,
};
use crate::text::embedding::EmbeddingTable;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("no candidates; {}", summarize(.rule_outs))]
    NoCandidates { rule_outs: Vec<RuleOut> },
    #[error("blueprint {blueprint} ruled out: {reason}")]
    RuledOut { blueprint: String, reason: String },
    #[error("unknown {kind} {id}")]
    Unknown { kind: &'static str, id: String },
    #[error(transparent)]
    Flag(#[from] FlagViolation),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Assets(#[from] AssetError),
}

fn summarize(rule_outs: &[RuleOut]) -> String {
    if rule_outs.is_empty() {
        return "no blueprint serves this statement".into();
    }
    rule_outs.iter().map(|r| format!("{}: {}", r.blueprint, r.reason)).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleOut {
    pub blueprint: String,
    pub reason: String,
}

/// Everything that determines a candidate besides the statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    pub blueprint: String,
    pub relation: Relation,
    /// Icon per fact.
    pub icons: Vec<Option<String>>,
    pub palette: String,
    /// Description forms overriding the blueprint's, by region.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub forms: BTreeMap<String, DescriptionForm>,
    /// Graphic types fixed for a region, set when refining.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub pinned: BTreeMap<String, GraphicType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub statement: String,
    pub blueprint: String,
    pub relation: Relation,
    pub group: FactGroup,
    pub choice: Choice,
    /// Icons actually drawn, with the match that chose them.
    pub icons: Vec<MatchResult>,
    pub palette: MatchResult,
    /// Description form shown in each description region.
    pub descriptions: BTreeMap<String, DescriptionForm>,
    pub layout: SolvedLayout,
    pub scores: Scores,
}

/// A requested change to a candidate; unset fields keep the parent's choice.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Replacement {
    #[serde(default)]
    pub icon_slot: Option<String>,
    #[serde(default)]
    pub palette: Option<String>,
    #[serde(default)]
    pub description_form: Option<DescriptionForm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub icons: usize,
    pub palettes: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { icons: 3, palettes: 3 }
    }
}

#[derive(Debug, Clone)]
pub struct Generation {
    /// All candidates, best first.
    pub candidates: Vec<Candidate>,
    pub rule_outs: Vec<RuleOut>,
}

#[derive(Debug, Clone)]
pub struct Synthesizer {
    pub library: AssetLibrary,
    pub blueprints: Vec<Blueprint>,
    pub fonts: FontBook,
    pub solve_options: SolveOptions,
    pub limits: Limits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scope {
    Fact(usize),
    All,
}

fn relation_name(r: Relation) -> &'static str {
    match r {
        Relation::Single => "single",
        Relation::Comparison => "comparison",
        Relation::Accumulation => "accumulation",
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

fn icon_ref(icon: &IconAsset) -> IconRef {
    IconRef { id: icon.id.clone(), aspect: icon.aspect, fill_direction: icon.fill_direction }
}

fn admits(bp: &Blueprint, relation: Relation, facts: usize) -> Result<(), String> {
    match (bp.facts, relation) {
        (FactArity::Single, Relation::Single) if facts == 1 => Ok(()),
        (FactArity::Multi, Relation::Comparison) if facts >= 2 => Ok(()),
        (FactArity::Accumulation, Relation::Accumulation) if facts >= 2 => Ok(()),
        (arity, _) => Err(format!("serves {arity:?} facts, not a {} group", relation_name(relation)).to_lowercase()),
    }
}

fn number_initial(d: &DescriptionSet) -> bool {
    match (&d.before_number, &d.modifier) {
        (None, _) => true,
        (Some(before), Some(m)) => before.trim().eq_ignore_ascii_case(m.trim()),
        (Some(_), None) => false,
    }
}

impl Synthesizer {
    /// Loads icons, palettes, fonts and blueprints from an asset directory.
    pub fn load(dir: &Path, embeddings: Option<Arc<EmbeddingTable>>) -> Result<Self, SynthError> {
        let manifest = load_manifest(dir)?;
        Ok(Synthesizer {
            library: AssetLibrary::new(manifest, embeddings),
            blueprints: load_blueprints(&dir.join("blueprints"))?,
            fonts: FontBook::load(&dir.join("fonts"))?,
            solve_options: SolveOptions::default(),
            limits: Limits::default(),
        })
    }

    pub fn blueprint(&self, id: &str) -> Option<&Blueprint> {
        self.blueprints.iter().find(|b| b.id == id)
    }

    /// Icon query words for a fact: its whole and part, without verbs, which
    /// name no drawable thing ("like" would fetch a heart).
    fn fact_words(group: &FactGroup, i: usize) -> Vec<String> {
        let f = &group.facts[i];
        let lx = Lexicon::get();
        let words: Vec<String> =
            query_words(&format!("{} {}", f.whole_text().unwrap_or(""), f.part_text().unwrap_or("")))
                .into_iter()
                .filter(|w| !lx.is_verb(w))
                .collect();
        if words.is_empty() {
            query_words(&f.statement)
        } else {
            words
        }
    }

    /// The groups to synthesize for: the parsed one, plus its comparison reading.
    fn readings(group: &FactGroup) -> Vec<FactGroup> {
        let mut out = vec![group.clone()];
        out.extend(group.as_comparison());
        out
    }

    /// Enumerates, solves and scores every admissible combination, best first.
    pub fn generate(&self, statement: &str, group: &FactGroup, weights: &RankingWeights) -> Result<Generation, SynthError> {
        let n = group.facts.len();
        let icon_matches: Vec<Vec<MatchResult>> =
            (0..n).map(|i| self.library.match_icons(&Self::fact_words(group, i), self.limits.icons)).collect();
        let palettes = self.library.match_palettes(&query_words(statement), self.limits.palettes);
        let icon_choices = icon_matches.iter().map(Vec::len).max().unwrap_or(0).max(1);

        let readings = Self::readings(group);
        let mut rule_outs = Vec::new();
        let mut jobs: Vec<(&FactGroup, &Blueprint)> = Vec::new();
        for bp in &self.blueprints {
            let fits: Vec<&FactGroup> = readings.iter().filter(|g| admits(bp, g.relation, n).is_ok()).collect();
            if fits.is_empty() {
                let reason = admits(bp, group.relation, n).unwrap_err();
                rule_outs.push(RuleOut { blueprint: bp.id.clone(), reason });
            }
            jobs.extend(fits.into_iter().map(|g| (g, bp)));
        }
        let results: Vec<(Vec<Candidate>, Vec<RuleOut>)> = jobs
            .par_iter()
            .map(|&(g, bp)| {
                let mut cands = Vec::new();
                let mut outs = Vec::new();
                let rule = |reason: String| RuleOut { blueprint: bp.id.clone(), reason };
                let mut seen = BTreeSet::new();
                for k in 0..icon_choices {
                    let choice = Choice {
                        blueprint: bp.id.clone(),
                        relation: g.relation,
                        icons: icon_matches.iter().map(|m| m.get(k).or(m.last()).map(|r| r.asset_id.clone())).collect(),
                        palette: String::new(),
                        forms: BTreeMap::new(),
                        pinned: BTreeMap::new(),
                    };
                    let (layout, icons, descriptions) = match self.realize_layout(bp, g, &choice) {
                        Ok(r) => r,
                        Err(SynthError::RuledOut { reason, .. }) => {
                            outs.push(rule(reason));
                            continue;
                        }
                        Err(e) => {
                            outs.push(rule(e.to_string()));
                            continue;
                        }
                    };
                    // Icon choices that end up drawing the same thing collapse.
                    let shown: Vec<String> = icons.iter().map(|m| m.asset_id.clone()).collect();
                    if !seen.insert(shown.clone()) {
                        continue;
                    }
                    for p in &palettes {
                        let choice = Choice { palette: p.asset_id.clone(), ..choice.clone() };
                        let id = format!(
                            "{}.{}.{}.{}",
                            bp.id,
                            relation_name(g.relation),
                            if shown.is_empty() { "plain".to_string() } else { shown.join("+") },
                            p.asset_id
                        );
                        cands.push(self.assemble(id, statement, g, choice, layout.clone(), icons.clone(), p.clone(), descriptions.clone(), weights));
                    }
                }
                outs.sort_by(|a, b| a.reason.cmp(&b.reason));
                outs.dedup();
                (cands, outs)
            })
            .collect();

        let mut candidates = Vec::new();
        for (c, o) in results {
            candidates.extend(c);
            rule_outs.extend(o);
        }
        if candidates.is_empty() {
            return Err(SynthError::NoCandidates { rule_outs });
        }
        Ok(Generation { candidates: rank(candidates, weights), rule_outs })
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        &self,
        id: String,
        statement: &str,
        group: &FactGroup,
        choice: Choice,
        layout: SolvedLayout,
        icons: Vec<MatchResult>,
        palette: MatchResult,
        descriptions: BTreeMap<String, DescriptionForm>,
        weights: &RankingWeights,
    ) -> Candidate {
        let scores = Scores::new(
            semantic_score(&icons, &palette),
            visual_score(&layout),
            informative_score(statement, &layout, &icons),
            *weights,
        );
        Candidate {
            id,
            statement: statement.to_string(),
            blueprint: choice.blueprint.clone(),
            relation: group.relation,
            group: group.clone(),
            choice,
            icons,
            palette,
            descriptions,
            layout,
            scores,
        }
    }

    /// Builds a candidate for an explicit choice.
    pub fn realize(
        &self,
        id: String,
        statement: &str,
        group: &FactGroup,
        choice: Choice,
        weights: &RankingWeights,
    ) -> Result<Candidate, SynthError> {
        let bp = self
            .blueprint(&choice.blueprint)
            .ok_or_else(|| SynthError::Unknown { kind: "blueprint", id: choice.blueprint.clone() })?;
        let reading = if choice.relation == group.relation {
            group.clone()
        } else {
            Self::readings(group)
                .into_iter()
                .find(|g| g.relation == choice.relation)
                .ok_or_else(|| SynthError::RuledOut { blueprint: bp.id.clone(), reason: "relation not available".into() })?
        };
        let palette = self.palette_match(statement, &choice.palette)?;
        let (layout, icons, descriptions) = self.realize_layout(bp, &reading, &choice)?;
        Ok(self.assemble(id, statement, &reading, choice, layout, icons, palette, descriptions, weights))
    }

    /// Derives a new candidate from `parent`, keeping every choice the
    /// replacement leaves unset. Graphic regions keep their graphic type, so an
    /// icon that cannot serve it is refused rather than silently swapped.
    pub fn refine(
        &self,
        id: String,
        parent: &Candidate,
        replace: &Replacement,
        weights: &RankingWeights,
    ) -> Result<Candidate, SynthError> {
        let mut choice = parent.choice.clone();
        for e in &parent.layout.elements {
            if let crate::layout::solve::ElementKind::Graphic { graphic } = &e.kind {
                if let Some(t) = graphic.graphic_type() {
                    choice.pinned.insert(e.template.clone(), t);
                }
            }
        }
        if let Some(icon) = &replace.icon_slot {
            if self.library.manifest.icon(icon).is_none() {
                return Err(SynthError::Unknown { kind: "icon", id: icon.clone() });
            }
            choice.icons = vec![Some(icon.clone()); parent.group.facts.len()];
        }
        if let Some(p) = &replace.palette {
            choice.palette = p.clone();
        }
        if let Some(form) = replace.description_form {
            let region = parent
                .descriptions
                .keys()
                .find(|k| k.as_str() == "description")
                .or_else(|| parent.descriptions.keys().next())
                .cloned()
                .ok_or_else(|| SynthError::RuledOut {
                    blueprint: parent.blueprint.clone(),
                    reason: "no description region".into(),
                })?;
            choice.forms.insert(region, form);
        }
        self.realize(id, &parent.statement, &parent.group, choice, weights)
    }

    fn palette_match(&self, statement: &str, id: &str) -> Result<MatchResult, SynthError> {
        if self.library.manifest.palette(id).is_none() {
            return Err(SynthError::Unknown { kind: "palette", id: id.to_string() });
        }
        let all = self.library.match_palettes(&query_words(statement), usize::MAX);
        Ok(all.into_iter().find(|m| m.asset_id == id).unwrap_or(MatchResult {
            asset_id: id.to_string(),
            similarity: 0.0,
            query_word: String::new(),
            keyword: String::new(),
        }))
    }

    fn icon_match(&self, group: &FactGroup, fact: usize, id: &str) -> MatchResult {
        let all = self.library.match_icons(&Self::fact_words(group, fact), usize::MAX);
        all.into_iter().find(|m| m.asset_id == id).unwrap_or(MatchResult {
            asset_id: id.to_string(),
            similarity: 0.0,
            query_word: String::new(),
            keyword: String::new(),
        })
    }

    #[allow(clippy::type_complexity)]
    fn realize_layout(
        &self,
        bp: &Blueprint,
        group: &FactGroup,
        choice: &Choice,
    ) -> Result<(SolvedLayout, Vec<MatchResult>, BTreeMap<String, DescriptionForm>), SynthError> {
        let out = |reason: String| SynthError::RuledOut { blueprint: bp.id.clone(), reason };
        let n = group.facts.len();
        admits(bp, group.relation, n).map_err(out)?;
        let descs: Vec<DescriptionSet> = group.facts.iter().map(extract_descriptions).collect();
        if bp.admission == Admission::NumberInitial && !number_initial(&descs[0]) {
            return Err(out("admits only statements that open with their number".into()));
        }
        let icons: Vec<Option<&IconAsset>> = (0..n)
            .map(|i| {
                let id = choice.icons.get(i).cloned().flatten();
                match id {
                    Some(id) => self
                        .library
                        .manifest
                        .icon(&id)
                        .map(Some)
                        .ok_or(SynthError::Unknown { kind: "icon", id }),
                    None => Ok(None),
                }
            })
            .collect::<Result<_, _>>()?;

        let instance = bp.instantiate(if bp.facts == FactArity::Single { 1 } else { n });
        let mut contents = Contents::new();
        let mut forms = BTreeMap::new();
        for leaf in instance.root.leaves() {
            let RegionKind::Leaf { slot, fact } = &leaf.kind else { continue };
            let scope = match (fact, n) {
                (Some(i), _) => Scope::Fact(*i),
                (None, 1) => Scope::Fact(0),
                (None, _) => Scope::All,
            };
            let text_fact = match scope {
                Scope::Fact(i) => i,
                Scope::All => 0,
            };
            let d = &descs[text_fact];
            let content = match slot {
                Slot::Number => Content::Text { text: d.number.clone(), role: TextRole::Number },
                Slot::Modifier => Content::Text {
                    text: d.modifier.clone().ok_or_else(|| out("the statement has no modifier".into()))?,
                    role: TextRole::Modifier,
                },
                Slot::Description { form } => {
                    let form = choice.forms.get(&leaf.template).copied().unwrap_or(*form);
                    forms.insert(leaf.template.clone(), form);
                    let text = d
                        .get(form)
                        .ok_or_else(|| out(format!("no {} description", form.name())))?
                        .to_string();
                    Content::Text { text, role: TextRole::Description }
                }
                Slot::Title => Content::Text {
                    text: capitalize(group.facts[text_fact].whole_text().ok_or_else(|| out("the statement has no whole".into()))?),
                    role: TextRole::Title,
                },
                Slot::Background => {
                    let icon = icons[text_fact].ok_or_else(|| out("no icon for the background".into()))?;
                    icon.check_use(IconUse::Background).map_err(|v| {
                        if choice.pinned.is_empty() {
                            out(v.to_string())
                        } else {
                            SynthError::Flag(v)
                        }
                    })?;
                    Content::Graphic(vec![Graphic::Background { icon: icon_ref(icon) }])
                }
                Slot::Graphic { graphics } => {
                    let pinned = choice.pinned.get(&leaf.template).copied();
                    let types = pinned.map_or_else(|| graphics.clone(), |t| vec![t]);
                    let mut options = Vec::new();
                    let mut reasons = Vec::new();
                    for t in types {
                        match self.graphic_options(t, scope, group, &icons) {
                            Ok(o) => options.extend(o),
                            Err(GraphicMiss::Flag(v)) if pinned.is_some() => return Err(SynthError::Flag(v)),
                            Err(GraphicMiss::Flag(v)) => reasons.push(v.to_string()),
                            Err(GraphicMiss::Unavailable(r)) => reasons.push(r),
                        }
                    }
                    if options.is_empty() {
                        return Err(out(format!("region {} has no usable graphic ({})", leaf.template, reasons.join(", "))));
                    }
                    Content::Graphic(options)
                }
            };
            contents.insert(leaf.id.clone(), content);
        }

        let layout = solve(&instance, &contents, &self.fonts, &self.solve_options).map_err(|e| match e {
            LayoutError::Infeasible { .. } => out("no layout meets the required constraints".into()),
            e => SynthError::Layout(e),
        })?;
        let mut shown: Vec<MatchResult> = Vec::new();
        for e in &layout.elements {
            if let crate::layout::solve::ElementKind::Graphic { graphic } = &e.kind {
                if let Some(icon) = graphic.icon() {
                    if !shown.iter().any(|m| m.asset_id == icon.id) {
                        let fact = match graphic {
                            Graphic::Pictograph { fact, .. }
                            | Graphic::FilledIcon { fact, .. }
                            | Graphic::ScaledIcon { fact, .. } => *fact,
                            _ => e.fact.unwrap_or(0),
                        };
                        shown.push(self.icon_match(group, fact, &icon.id));
                    }
                }
            }
        }
        Ok((layout, shown, forms))
    }

    fn graphic_options(
        &self,
        t: GraphicType,
        scope: Scope,
        group: &FactGroup,
        icons: &[Option<&IconAsset>],
    ) -> Result<Vec<Graphic>, GraphicMiss> {
        let icon_of = |i: usize| icons.get(i).copied().flatten().ok_or_else(|| GraphicMiss::Unavailable("no matching icon".into()));
        let chart = |kind, facts: Vec<usize>| -> Result<Vec<Graphic>, GraphicMiss> {
            let values: Vec<f64> = facts.iter().map(|&i| group.facts[i].value).collect();
            let geometry = chart_geometry(kind, &values, DEFAULT_INNER_RATIO)
                .map_err(|e| GraphicMiss::Unavailable(e.to_string()))?;
            Ok(vec![Graphic::Chart { geometry, facts }])
        };
        let all: Vec<usize> = (0..group.facts.len()).collect();
        match (t, scope) {
            (GraphicType::Pictograph, Scope::Fact(i)) => {
                let icon = icon_of(i)?;
                icon.check_use(IconUse::Pictograph).map_err(GraphicMiss::Flag)?;
                let f = &group.facts[i];
                Ok(pictograph_options(f.value, f.numerator, f.denominator)
                    .into_iter()
                    .map(|grid| Graphic::Pictograph { icon: icon_ref(icon), grid, fact: i })
                    .collect())
            }
            (GraphicType::FilledIcon, Scope::Fact(i)) => {
                let icon = icon_of(i)?;
                icon.check_use(IconUse::Filled).map_err(GraphicMiss::Flag)?;
                Ok(vec![Graphic::FilledIcon { icon: icon_ref(icon), fraction: group.facts[i].value, fact: i }])
            }
            (GraphicType::ScaledIcon, Scope::Fact(i)) => {
                let icon = icon_of(i)?;
                icon.check_use(IconUse::Filled).map_err(GraphicMiss::Flag)?;
                Ok(vec![Graphic::ScaledIcon { icon: icon_ref(icon), fraction: group.facts[i].value, fact: i }])
            }
            (GraphicType::Adornment, scope) => {
                let i = if let Scope::Fact(i) = scope { i } else { 0 };
                let icon = icon_of(i)?;
                icon.check_use(IconUse::Adornment).map_err(GraphicMiss::Flag)?;
                Ok(vec![Graphic::Adornment { icon: icon_ref(icon) }])
            }
            (GraphicType::Pie | GraphicType::Donut | GraphicType::Bar | GraphicType::Rings, Scope::Fact(i)) => {
                chart(t.chart_kind().unwrap(), vec![i])
            }
            (GraphicType::Pie | GraphicType::Donut | GraphicType::StackedBar, Scope::All)
                if group.relation == Relation::Accumulation =>
            {
                chart(t.chart_kind().unwrap(), all)
            }
            (GraphicType::Rings, Scope::All) => chart(t.chart_kind().unwrap(), all),
            (t, _) => Err(GraphicMiss::Unavailable(format!("{t:?} cannot show this group").to_lowercase())),
        }
    }
}

enum GraphicMiss {
    Flag(FlagViolation),
    Unavailable(String),
}
