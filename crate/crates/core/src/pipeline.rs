//! Statement in, ranked and rendered candidates out.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::fact::{segment_facts, FactError, FactGroup};
use crate::render::{render, RenderError};
use crate::synth::{top, Candidate, Generation, RankingWeights, SynthError, Synthesizer};
use crate::text::embedding::EmbeddingTable;
use crate::text::{StatementTagger, TaggedStatement, TextAnalyzer, TextError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Fact(#[from] FactError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

impl PipelineError {
    /// Whether the statement itself could not be read, as opposed to no
    /// candidate surviving synthesis.
    pub fn is_parse_failure(&self) -> bool {
        matches!(self, PipelineError::Text(_) | PipelineError::Fact(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Paths {
    pub assets: PathBuf,
    pub model: PathBuf,
    pub embeddings: PathBuf,
}

impl Paths {
    /// Model and embeddings at their usual places inside an asset directory.
    pub fn in_assets(assets: &Path) -> Self {
        Paths {
            assets: assets.to_path_buf(),
            model: assets.join("model/tagger.json"),
            embeddings: assets.join("embeddings.txt"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub tagged: TaggedStatement,
    pub group: FactGroup,
}

#[derive(Clone)]
pub struct Engine {
    pub analyzer: TextAnalyzer<f64>,
    pub synth: Synthesizer,
}

impl Engine {
    pub fn load(paths: &Paths) -> Result<Self, PipelineError> {
        let embeddings = Arc::new(EmbeddingTable::load(&paths.embeddings)?);
        let analyzer = TextAnalyzer::load(&paths.model, embeddings.clone(), None)?;
        let synth = Synthesizer::load(&paths.assets, Some(embeddings))?;
        Ok(Engine { analyzer, synth })
    }

    pub fn analyze(&self, statement: &str) -> Result<Analysis, PipelineError> {
        let tagged = self.analyzer.tag(statement)?;
        let group = segment_facts(&tagged, &self.analyzer)?;
        Ok(Analysis { tagged, group })
    }

    pub fn generate(&self, statement: &str, weights: &RankingWeights) -> Result<(Analysis, Generation), PipelineError> {
        let analysis = self.analyze(statement)?;
        let generation = self.synth.generate(statement, &analysis.group, weights)?;
        Ok((analysis, generation))
    }

    pub fn render(&self, candidate: &Candidate, seed: u64) -> Result<String, PipelineError> {
        Ok(render(candidate, &self.synth.library.manifest, &self.synth.fonts, seed)?)
    }

    /// The best `n` candidates (one per blueprint and relation) with their SVGs.
    pub fn top_rendered(
        &self,
        generation: &Generation,
        n: usize,
        seed: u64,
    ) -> Result<Vec<(Candidate, String)>, PipelineError> {
        top(&generation.candidates, n)
            .into_iter()
            .map(|c| {
                let svg = self.render(&c, seed)?;
                Ok((c, svg))
            })
            .collect()
    }
}
