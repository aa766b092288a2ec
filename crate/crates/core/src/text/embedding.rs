//! Word embedding table: loading, lookup, cosine similarity, and the
//! deterministic synthesis used to build the bundled table from a concept list.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::TextError;

#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable { dim, vectors: HashMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, word: &str, vector: Vec<f64>) {
        assert_eq!(vector.len(), self.dim, "embedding width");
        self.vectors.insert(word.to_lowercase(), vector);
    }

    /// Case-insensitive lookup.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors
            .get(word)
            .or_else(|| self.vectors.get(&word.to_lowercase()))
            .map(Vec::as_slice)
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        let text = std::fs::read_to_string(path).map_err(|e| TextError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&text)
    }

    /// One word per line followed by `dim` space-separated floats.
    pub fn parse(text: &str) -> Result<Self, TextError> {
        let mut table: Option<EmbeddingTable> = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_ascii_whitespace();
            let word = parts.next().unwrap();
            let values: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
            let values = values.map_err(|e| TextError::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?;
            if values.iter().any(|v| !v.is_finite()) {
                return Err(TextError::Parse {
                    line: lineno + 1,
                    message: "non-finite embedding value".into(),
                });
            }
            let t = table.get_or_insert_with(|| EmbeddingTable::new(values.len()));
            if values.len() != t.dim || t.dim == 0 {
                return Err(TextError::Parse {
                    line: lineno + 1,
                    message: format!("expected {} values, found {}", t.dim, values.len()),
                });
            }
            t.vectors.insert(word.to_lowercase(), values);
        }
        table.ok_or(TextError::Parse { line: 0, message: "empty embedding table".into() })
    }

    /// Serializes with a fixed precision so the output is reproducible.
    pub fn to_text(&self) -> String {
        let mut words: Vec<&String> = self.vectors.keys().collect();
        words.sort();
        let mut out = String::new();
        for w in words {
            out.push_str(w);
            for v in &self.vectors[w] {
                write!(out, " {:.6}", v).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Cosine similarity of two words, if both are in the table.
    pub fn similarity(&self, a: &str, b: &str) -> Option<f64> {
        Some(cosine(self.get(a)?, self.get(b)?))
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Weights of the topic, concept and per-word components of a synthesized vector.
const TOPIC_WEIGHT: f64 = 0.8;
const CONCEPT_WEIGHT: f64 = 1.0;
const WORD_WEIGHT: f64 = 0.15;

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn gaussian(name: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(name) ^ seed);
    (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Builds a table from a concept list (`topic<TAB>concept<TAB>word word ...`).
///
/// Words of one concept (inflections, near-synonyms) end up nearly parallel;
/// concepts sharing a topic stay moderately similar; unrelated topics are close
/// to orthogonal. Every random component is seeded by its own name, so adding a
/// line never perturbs existing vectors.
pub fn synthesize(concepts: &str, dim: usize, seed: u64) -> Result<EmbeddingTable, TextError> {
    let mut table = EmbeddingTable::new(dim);
    for (lineno, line) in concepts.lines().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        let (topic, concept, words) = match (cols.next(), cols.next(), cols.next()) {
            (Some(t), Some(c), Some(w)) => (t.trim(), c.trim(), w),
            _ => {
                return Err(TextError::Parse {
                    line: lineno + 1,
                    message: "expected topic<TAB>concept<TAB>words".into(),
                })
            }
        };
        let topic_v = gaussian(&format!("topic:{topic}"), dim, seed);
        let concept_v = gaussian(&format!("concept:{topic}/{concept}"), dim, seed);
        for word in words.split_whitespace() {
            let word = word.to_lowercase();
            if table.vectors.contains_key(&word) {
                continue;
            }
            let word_v = gaussian(&format!("word:{word}"), dim, seed);
            let mut v: Vec<f64> = (0..dim)
                .map(|i| TOPIC_WEIGHT * topic_v[i] + CONCEPT_WEIGHT * concept_v[i] + WORD_WEIGHT * word_v[i])
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            table.vectors.insert(word, v);
        }
    }
    Ok(table)
}
