//! The three candidate scores and the ranking built on them.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::Candidate;
use crate::assets::{query_words, stem, MatchResult};
use crate::layout::solve::{ElementKind, SolvedLayout};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingWeights {
    pub semantic: f64,
    pub visual: f64,
    pub informative: f64,
}

impl Default for RankingWeights {
    fn default() -> Self {
        RankingWeights { semantic: 0.25, visual: 0.5, informative: 0.25 }
    }
}

impl RankingWeights {
    /// Parses `ws,wv,wi`: non-negative, not all zero.
    pub fn parse(s: &str) -> Option<Self> {
        let v: Vec<f64> = s.split(',').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
        match v[..] {
            [semantic, visual, informative] if v.iter().all(|w| w.is_finite() && *w >= 0.0) && v.iter().sum::<f64>() > 0.0 => {
                Some(RankingWeights { semantic, visual, informative })
            }
            _ => None,
        }
    }

    pub fn scaled(self, k: f64) -> Self {
        RankingWeights { semantic: self.semantic * k, visual: self.visual * k, informative: self.informative * k }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub semantic: f64,
    pub visual: f64,
    pub informative: f64,
    pub total: f64,
    pub weights: RankingWeights,
}

impl Scores {
    pub fn new(semantic: f64, visual: f64, informative: f64, weights: RankingWeights) -> Self {
        Scores { semantic, visual, informative, total: total(semantic, visual, informative, &weights), weights }
    }
}

pub fn total(semantic: f64, visual: f64, informative: f64, w: &RankingWeights) -> f64 {
    w.semantic * semantic + w.visual * visual + w.informative * informative
}

/// Mean of the clamped similarities of every displayed icon and the palette;
/// zero when nothing shown was matched by a word.
pub fn semantic_score(icons: &[MatchResult], palette: &MatchResult) -> f64 {
    if icons.is_empty() && palette.query_word.is_empty() {
        return 0.0;
    }
    let sum: f64 = icons.iter().chain([palette]).map(|m| m.similarity.clamp(0.0, 1.0)).sum();
    sum / (icons.len() + 1) as f64
}

/// Covered area over canvas area.
pub fn visual_score(layout: &SolvedLayout) -> f64 {
    layout.coverage().clamp(0.0, 1.0)
}

/// Share of the statement's non-stop words that appear in the result, as
/// displayed text or as the word an icon was matched for.
pub fn informative_score(statement: &str, layout: &SolvedLayout, icons: &[MatchResult]) -> f64 {
    let wanted = query_words(statement);
    if wanted.is_empty() {
        return 1.0;
    }
    let mut shown: BTreeSet<String> = BTreeSet::new();
    for e in &layout.elements {
        if let ElementKind::Text { lines, .. } = &e.kind {
            shown.extend(query_words(&lines.join(" ")));
        }
    }
    shown.extend(icons.iter().map(|m| m.query_word.to_lowercase()));
    let stems: BTreeSet<String> = shown.iter().map(|w| stem(w)).collect();
    let hits = wanted.iter().filter(|w| shown.contains(*w) || stems.contains(&stem(w))).count();
    hits as f64 / wanted.len() as f64
}

fn order(a: &Candidate, b: &Candidate) -> Ordering {
    let (sa, sb) = (&a.scores, &b.scores);
    sb.total
        .partial_cmp(&sa.total)
        .unwrap_or(Ordering::Equal)
        .then_with(|| sb.informative.partial_cmp(&sa.informative).unwrap_or(Ordering::Equal))
        .then_with(|| sb.semantic.partial_cmp(&sa.semantic).unwrap_or(Ordering::Equal))
        .then_with(|| a.blueprint.cmp(&b.blueprint))
        .then_with(|| a.id.cmp(&b.id))
}

/// Re-scores under `weights` and sorts best first. A permutation of the input.
pub fn rank(mut candidates: Vec<Candidate>, weights: &RankingWeights) -> Vec<Candidate> {
    for c in &mut candidates {
        c.scores = Scores::new(c.scores.semantic, c.scores.visual, c.scores.informative, *weights);
    }
    candidates.sort_by(order);
    candidates
}

/// The best `n` of a ranked list, keeping one candidate per (blueprint, relation).
pub fn top(ranked: &[Candidate], n: usize) -> Vec<Candidate> {
    let mut seen = BTreeSet::new();
    ranked.iter().filter(|c| seen.insert((c.blueprint.clone(), c.relation))).take(n).cloned().collect()
}
