//! Text analyzer: tokenization, featurization and the conv+CRF entity tagger.

pub mod corpus;
pub mod crf;
pub mod embedding;
pub mod eval;
pub mod features;
pub mod labels;
pub mod tokenize;
pub mod train;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;
use corpus::{AnnotatedCorpus, Split};
use crf::{ConvCrf, TagSequence};
use embedding::EmbeddingTable;
use eval::EntityReport;
use features::{featurize, ClusterTable};
use labels::{entity_spans, EntitySpan, EntityType};
use tokenize::{tokenize, Token};
use train::{evaluate_model, train, TrainConfig};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("statement is empty")]
    EmptyInput,
    #[error("{block} block: declared width {declared}, produced {produced}")]
    ConfigMismatch { block: &'static str, declared: usize, produced: usize },
    #[error("feature width {found} does not match the model ({expected})")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("corpus has no training sentences")]
    CorpusEmpty,
    #[error("loss became non-finite at epoch {epoch}; lower the learning rate")]
    NonFiniteLoss { epoch: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("model file: {0}")]
    Model(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A statement with its tokens and decoded labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedStatement {
    pub statement: String,
    pub tokens: Vec<Token>,
    pub tags: TagSequence,
}

impl TaggedStatement {
    pub fn spans(&self) -> Vec<EntitySpan> {
        entity_spans(&self.tags.labels)
    }

    pub fn has_number(&self) -> bool {
        self.spans().iter().any(|s| s.entity == EntityType::Number)
    }

    /// Byte range in the statement covered by a token span.
    pub fn byte_range(&self, span: &EntitySpan) -> (usize, usize) {
        (self.tokens[span.start].start, self.tokens[span.end - 1].end)
    }

    pub fn span_text(&self, span: &EntitySpan) -> &str {
        let (a, b) = self.byte_range(span);
        &self.statement[a..b]
    }
}

/// Anything that can tag a statement; lets clause re-tagging run against a
/// trained model or a fixed annotation.
pub trait StatementTagger: Send + Sync {
    fn tag(&self, statement: &str) -> Result<TaggedStatement, TextError>;
}

/// A loaded model plus the tables its features need. Immutable and shareable.
#[derive(Clone)]
pub struct TextAnalyzer<T = f64> {
    pub model: Arc<ConvCrf<T>>,
    pub embeddings: Arc<EmbeddingTable>,
    pub clusters: Option<Arc<ClusterTable>>,
}

impl<T: Real> TextAnalyzer<T> {
    pub fn new(model: ConvCrf<T>, embeddings: Arc<EmbeddingTable>, clusters: Option<Arc<ClusterTable>>) -> Self {
        TextAnalyzer { model: Arc::new(model), embeddings, clusters }
    }

    pub fn load(model_path: &Path, embeddings: Arc<EmbeddingTable>, clusters: Option<Arc<ClusterTable>>) -> Result<Self, TextError> {
        let text = std::fs::read_to_string(model_path)
            .map_err(|e| TextError::Io { path: model_path.display().to_string(), source: e })?;
        Ok(Self::new(ConvCrf::from_json(&text)?, embeddings, clusters))
    }

    pub fn tag_tokens(&self, tokens: &[Token]) -> Result<TagSequence, TextError> {
        let x = featurize::<T>(tokens, &self.model.config.features, &self.embeddings, self.clusters.as_deref())?;
        self.model.decode_with_marginals(&x)
    }
}

impl<T: Real> StatementTagger for TextAnalyzer<T> {
    fn tag(&self, statement: &str) -> Result<TaggedStatement, TextError> {
        let tokens = tokenize(statement)?;
        let tags = self.tag_tokens(&tokens)?;
        Ok(TaggedStatement { statement: statement.to_string(), tokens, tags })
    }
}

/// Scores a model on one split of a corpus.
pub fn evaluate<T: Real>(
    model: &ConvCrf<T>,
    corpus: &AnnotatedCorpus,
    split: Split,
    embeddings: &EmbeddingTable,
    clusters: Option<&ClusterTable>,
) -> Result<EntityReport, TextError> {
    let xs = corpus
        .sentences
        .iter()
        .filter(|s| s.split == split)
        .map(|s| featurize::<T>(&s.tokens, &model.config.features, embeddings, clusters).map(|x| (x, s.labels.as_slice())))
        .collect::<Result<Vec<_>, _>>()?;
    let data: Vec<_> = xs.iter().map(|(x, g)| (x, *g)).collect();
    evaluate_model(model, &data)
}

/// k-fold cross-validation: one report per fold, each trained from scratch.
pub fn cross_validate<T: Real>(
    corpus: &AnnotatedCorpus,
    folds: usize,
    config: &TrainConfig,
    embeddings: &EmbeddingTable,
    clusters: Option<&ClusterTable>,
) -> Result<Vec<EntityReport>, TextError> {
    (0..folds)
        .map(|fold| {
            let c = corpus.with_fold(folds, fold);
            // early stopping watches a slice of the training part, never the test fold
            let inner = early_stopping_split(&c.split(Split::Train), 10);
            let (model, _) = train::<T>(&inner, config, embeddings, clusters, |_| {})?;
            evaluate(&model, &c, Split::Heldout, embeddings, clusters)
        })
        .collect()
}

/// Marks every `k`-th sentence held-out, for early stopping.
pub fn early_stopping_split(corpus: &AnnotatedCorpus, k: usize) -> AnnotatedCorpus {
    corpus.with_fold(k, k - 1)
}
