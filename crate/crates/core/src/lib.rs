//! Turns a natural-language proportion statement ("More than 40% of students
//! like football.") into a ranked list of SVG infographics.
//!
//! The numeric kernels ([`text::crf`], [`layout::simplex`], [`layout::linebreak`],
//! [`layout::chart`]) are generic over the scalar type; the aliases below fix
//! the concrete types the pipeline uses.

pub mod assets;
pub mod fact;
pub mod layout;
pub mod lexicon;
pub mod pipeline;
pub mod render;
pub mod scalar;
pub mod synth;
pub mod text;

pub use scalar::{Field, Real};

/// The tagger model used by the pipeline.
pub type TaggerModel = text::crf::ConvCrf<f64>;
pub type Analyzer = text::TextAnalyzer<f64>;

pub use pipeline::Engine;
