use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::embedding::EmbeddingTable;
use super::tokenize::{Token, TokenKind};
use super::TextError;
use crate::lexicon::{Lexicon, Pos};
use crate::scalar::Real;

/// Width of the syntactic block; see [`syntactic_row`] for the layout.
pub const SYNTACTIC_WIDTH: usize = 15 + 6 + 11;

/// Declared shape of the feature vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub embedding_dim: usize,
    /// Brown-cluster bit-string prefix lengths; empty disables the block.
    #[serde(default)]
    pub cluster_prefixes: Vec<usize>,
    /// Hash buckets per prefix length.
    #[serde(default = "default_buckets")]
    pub cluster_buckets: usize,
}

fn default_buckets() -> usize {
    16
}

impl FeatureConfig {
    pub fn new(embedding_dim: usize) -> Self {
        FeatureConfig { embedding_dim, cluster_prefixes: Vec::new(), cluster_buckets: default_buckets() }
    }

    pub fn with_clusters(mut self, prefixes: Vec<usize>, buckets: usize) -> Self {
        self.cluster_prefixes = prefixes;
        self.cluster_buckets = buckets;
        self
    }

    pub fn blocks(&self) -> Vec<FeatureBlock> {
        vec![
            FeatureBlock { name: BlockName::Embedding, width: self.embedding_dim },
            FeatureBlock { name: BlockName::Syntactic, width: SYNTACTIC_WIDTH },
            FeatureBlock {
                name: BlockName::Cluster,
                width: self.cluster_prefixes.len() * self.cluster_buckets,
            },
        ]
    }

    pub fn width(&self) -> usize {
        self.blocks().iter().map(|b| b.width).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockName {
    Embedding,
    Syntactic,
    Cluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureBlock {
    pub name: BlockName,
    pub width: usize,
}

/// Row-major token × feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<T>,
    pub blocks: Vec<FeatureBlock>,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Word → Brown-cluster bit string.
#[derive(Debug, Clone, Default)]
pub struct ClusterTable {
    paths: HashMap<String, String>,
}

impl ClusterTable {
    /// `word<TAB>bitstring` per line.
    pub fn parse(text: &str) -> Result<Self, TextError> {
        let mut paths = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, bits) = line.split_once('\t').ok_or(TextError::Parse {
                line: i + 1,
                message: "expected word<TAB>bitstring".into(),
            })?;
            let bits = bits.trim();
            if bits.is_empty() || !bits.chars().all(|c| c == '0' || c == '1') {
                return Err(TextError::Parse { line: i + 1, message: format!("bad bit string {bits:?}") });
            }
            paths.insert(word.trim().to_lowercase(), bits.to_string());
        }
        Ok(ClusterTable { paths })
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TextError::Io { path: path.display().to_string(), source: e })?;
        Self::parse(&text)
    }

    pub fn get(&self, word: &str) -> Option<&str> {
        self.paths.get(&word.to_lowercase()).map(String::as_str)
    }
}

/// Syntactic features of a single token.
///
/// Layout: `[oov, init_cap, all_caps, all_lower, has_digit, all_digit,
/// decimal, percent_word, fraction_word, number_word, modifier_word, stopword,
/// verb, hyphenated, plural_s, kind one-hot (6), pos one-hot (11)]`.
pub fn syntactic_row(token: &Token, in_vocab: bool) -> [f64; SYNTACTIC_WIDTH] {
    let lx = Lexicon::get();
    let text = token.text.as_str();
    let letters: Vec<char> = text.chars().filter(|c| c.is_alphabetic()).collect();
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let mut row = [0.0; SYNTACTIC_WIDTH];
    row[0] = flag(!in_vocab);
    row[1] = flag(text.chars().next().map_or(false, char::is_uppercase));
    row[2] = flag(letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()));
    row[3] = flag(!letters.is_empty() && letters.iter().all(|c| c.is_lowercase()));
    row[4] = flag(text.chars().any(|c| c.is_ascii_digit()));
    row[5] = flag(token.kind == TokenKind::Number);
    row[6] = flag(token.kind == TokenKind::Number && (text.contains('.') || text.contains(',')));
    row[7] = flag(token.kind == TokenKind::PercentSign || token.lower == "percent" || token.lower == "per");
    row[8] = flag(lx.is_fraction_word(&token.lower));
    row[9] = flag(lx.number_word(&token.lower).is_some());
    row[10] = flag(lx.is_modifier_word(&token.lower));
    row[11] = flag(lx.is_stopword(&token.lower));
    row[12] = flag(lx.is_verb(&token.lower));
    row[13] = flag(text.contains('-'));
    row[14] = flag(token.lower.len() > 3 && token.lower.ends_with('s') && !token.lower.ends_with("ss"));
    row[15 + token.kind.index()] = 1.0;
    let pos = if token.is_word_like() { lx.pos(text) } else { Pos::Punct };
    row[21 + pos.index()] = 1.0;
    row
}

fn bucket(prefix: &str, buckets: usize) -> usize {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in prefix.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    (h % buckets as u64) as usize
}

/// Builds the feature matrix for a token sequence.
///
/// Each row depends only on its own token. Out-of-vocabulary words get a zero
/// embedding and the `oov` indicator.
pub fn featurize<T: Real>(
    tokens: &[Token],
    config: &FeatureConfig,
    embeddings: &EmbeddingTable,
    clusters: Option<&ClusterTable>,
) -> Result<FeatureMatrix<T>, TextError> {
    if embeddings.dim() != config.embedding_dim {
        return Err(TextError::ConfigMismatch {
            block: "embedding",
            declared: config.embedding_dim,
            produced: embeddings.dim(),
        });
    }
    let cluster_width = config.cluster_prefixes.len() * config.cluster_buckets;
    if cluster_width > 0 && clusters.is_none() {
        return Err(TextError::ConfigMismatch { block: "cluster", declared: cluster_width, produced: 0 });
    }
    let cols = config.width();
    let mut values = Vec::with_capacity(tokens.len() * cols);
    for token in tokens {
        let start = values.len();
        let emb = embeddings.get(&token.lower);
        match emb {
            Some(v) => values.extend(v.iter().map(|x| T::of(*x))),
            None => values.extend(std::iter::repeat(T::zero()).take(config.embedding_dim)),
        }
        values.extend(syntactic_row(token, emb.is_some()).iter().map(|x| T::of(*x)));
        if cluster_width > 0 {
            let mut block = vec![T::zero(); cluster_width];
            if let Some(path) = clusters.and_then(|c| c.get(&token.lower)) {
                for (i, &len) in config.cluster_prefixes.iter().enumerate() {
                    let prefix = &path[..len.min(path.len())];
                    block[i * config.cluster_buckets + bucket(prefix, config.cluster_buckets)] = T::one();
                }
            }
            values.extend(block);
        }
        let produced = values.len() - start;
        if produced != cols {
            return Err(TextError::ConfigMismatch { block: "total", declared: cols, produced });
        }
    }
    Ok(FeatureMatrix { rows: tokens.len(), cols, values, blocks: config.blocks() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize::tokenize;

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(4);
        t.insert("students", vec![0.5, 0.5, 0.5, 0.5]);
        t
    }

    #[test]
    fn shape_contract() {
        let toks = tokenize("More than 40% of students like football.").unwrap();
        let cfg = FeatureConfig::new(4);
        let m: FeatureMatrix<f64> = featurize(&toks, &cfg, &table(), None).unwrap();
        assert_eq!((m.rows, m.cols), (9, 4 + SYNTACTIC_WIDTH));
        assert!(m.is_finite());
    }

    #[test]
    fn number_row_by_hand() {
        let toks = tokenize("40").unwrap();
        let cfg = FeatureConfig::new(4);
        let m: FeatureMatrix<f64> = featurize(&toks, &cfg, &table(), None).unwrap();
        let mut expected = vec![0.0; 4 + SYNTACTIC_WIDTH];
        let s = 4;
        expected[s] = 1.0; // oov
        expected[s + 4] = 1.0; // has_digit
        expected[s + 5] = 1.0; // all_digit number token
        expected[s + 15 + TokenKind::Number.index()] = 1.0;
        expected[s + 21 + Pos::Num.index()] = 1.0;
        assert_eq!(m.row(0), expected.as_slice());
    }

    #[test]
    fn in_vocab_word_has_embedding() {
        let toks = tokenize("students").unwrap();
        let m: FeatureMatrix<f32> = featurize(&toks, &FeatureConfig::new(4), &table(), None).unwrap();
        assert_eq!(&m.row(0)[..4], &[0.5f32; 4]);
        assert_eq!(m.row(0)[4], 0.0);
    }

    #[test]
    fn width_mismatch() {
        let toks = tokenize("x").unwrap();
        let err = featurize::<f64>(&toks, &FeatureConfig::new(3), &table(), None).unwrap_err();
        assert!(matches!(err, TextError::ConfigMismatch { .. }));
        let cfg = FeatureConfig::new(4).with_clusters(vec![2], 4);
        assert!(featurize::<f64>(&toks, &cfg, &table(), None).is_err());
    }

    #[test]
    fn cluster_block() {
        let clusters = ClusterTable::parse("students\t0110\n").unwrap();
        let cfg = FeatureConfig::new(4).with_clusters(vec![2, 4], 8);
        let toks = tokenize("students x").unwrap();
        let m: FeatureMatrix<f64> = featurize(&toks, &cfg, &table(), Some(&clusters)).unwrap();
        assert_eq!(m.cols, 4 + SYNTACTIC_WIDTH + 16);
        let c0: f64 = m.row(0)[4 + SYNTACTIC_WIDTH..].iter().sum();
        let c1: f64 = m.row(1)[4 + SYNTACTIC_WIDTH..].iter().sum();
        assert_eq!((c0, c1), (2.0, 0.0));
        assert!(ClusterTable::parse("a\t01x\n").is_err());
    }
}
