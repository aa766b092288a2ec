use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::manifest::AssetManifest;
use crate::lexicon::Lexicon;
use crate::text::embedding::EmbeddingTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub asset_id: String,
    pub similarity: f64,
    /// Empty for a generic palette included at the baseline.
    pub query_word: String,
    pub keyword: String,
}

/// Crude English suffix stripper, enough to pair "students" with "student".
pub fn stem(word: &str) -> String {
    let w = word.to_lowercase();
    let n = w.len();
    if n > 4 && w.ends_with("ies") {
        return format!("{}y", &w[..n - 3]);
    }
    if n > 4 && ["ches", "shes", "sses", "xes"].iter().any(|s| w.ends_with(s)) {
        return w[..n - 2].to_string();
    }
    if n > 5 && w.ends_with("ing") {
        return w[..n - 3].to_string();
    }
    if n > 4 && w.ends_with("ed") {
        return w[..n - 2].to_string();
    }
    if n > 3 && w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") {
        return w[..n - 1].to_string();
    }
    w
}

/// Lowercased non-stop words of a phrase, in order, without repeats.
pub fn query_words(text: &str) -> Vec<String> {
    let lx = Lexicon::get();
    let mut out: Vec<String> = Vec::new();
    for raw in text.split(|c: char| c.is_whitespace() || (c.is_ascii_punctuation() && c != '\'' && c != '-')) {
        let w = raw.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
        if w.is_empty() || !w.chars().any(char::is_alphabetic) || lx.is_stopword(&w) {
            continue;
        }
        if !out.contains(&w) {
            out.push(w);
        }
    }
    out
}

/// The loaded assets plus what is needed to match words against them.
#[derive(Debug, Clone)]
pub struct AssetLibrary {
    pub manifest: Arc<AssetManifest>,
    pub embeddings: Option<Arc<EmbeddingTable>>,
    pub similarity_floor: f64,
    pub palette_baseline: f64,
}

impl AssetLibrary {
    pub fn new(manifest: AssetManifest, embeddings: Option<Arc<EmbeddingTable>>) -> Self {
        AssetLibrary { manifest: Arc::new(manifest), embeddings, similarity_floor: 0.3, palette_baseline: 0.0 }
    }

    /// Cosine of the two words' vectors; without vectors for both, 1.0 when
    /// they agree after stemming and nothing otherwise.
    pub fn word_similarity(&self, query: &str, keyword: &str) -> Option<f64> {
        let (q, k) = (query.to_lowercase(), keyword.to_lowercase());
        if let Some(sim) = self.embeddings.as_ref().and_then(|e| e.similarity(&q, &k)) {
            return Some(sim.clamp(-1.0, 1.0));
        }
        (q == k || stem(&q) == stem(&k)).then_some(1.0)
    }

    fn best_pair(&self, words: &[String], keywords: &[String]) -> Option<(f64, String, String)> {
        let mut best: Option<(f64, String, String)> = None;
        for w in words {
            for k in keywords {
                if let Some(s) = self.word_similarity(w, k) {
                    if best.as_ref().map_or(true, |b| s > b.0) {
                        best = Some((s, w.clone(), k.clone()));
                    }
                }
            }
        }
        best
    }

    fn rank(&self, mut results: Vec<MatchResult>, k: usize) -> Vec<MatchResult> {
        results.sort_by(|a, b| {
            b.similarity.partial_cmp(&a.similarity).unwrap_or(Ordering::Equal).then_with(|| a.asset_id.cmp(&b.asset_id))
        });
        results.truncate(k);
        results
    }

    /// Icons whose best (word, keyword) similarity reaches the floor, best first.
    pub fn match_icons(&self, words: &[String], k: usize) -> Vec<MatchResult> {
        let results = self
            .manifest
            .icons
            .iter()
            .filter_map(|icon| {
                let (similarity, query_word, keyword) = self.best_pair(words, &icon.keywords)?;
                (similarity >= self.similarity_floor).then(|| MatchResult {
                    asset_id: icon.id.clone(),
                    similarity,
                    query_word,
                    keyword,
                })
            })
            .collect();
        self.rank(results, k)
    }

    /// Like [`match_icons`](Self::match_icons), with generic palettes always
    /// present at the baseline similarity.
    pub fn match_palettes(&self, words: &[String], k: usize) -> Vec<MatchResult> {
        let results = self
            .manifest
            .palettes
            .iter()
            .filter_map(|p| {
                if p.is_generic() {
                    return Some(MatchResult {
                        asset_id: p.id.clone(),
                        similarity: self.palette_baseline,
                        query_word: String::new(),
                        keyword: String::new(),
                    });
                }
                let (similarity, query_word, keyword) = self.best_pair(words, &p.keywords)?;
                (similarity >= self.similarity_floor).then(|| MatchResult {
                    asset_id: p.id.clone(),
                    similarity,
                    query_word,
                    keyword,
                })
            })
            .collect();
        self.rank(results, k)
    }
}
