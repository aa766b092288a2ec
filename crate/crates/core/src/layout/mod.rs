//! Sizing and placing infographic elements on a canvas.

pub mod blueprint;
pub mod chart;
pub mod check;
pub mod fonts;
pub mod graphic;
pub mod linebreak;
pub mod pictograph;
pub mod simplex;
pub mod solve;

pub use blueprint::{load_blueprints, Blueprint, Instance};
pub use fonts::{FontBook, FontId};
pub use graphic::{Graphic, GraphicType};
pub use solve::{solve, Content, Contents, Rect, SolveOptions, SolvedLayout, TextRole};

#[derive(Debug, thiserror::Error)]
pub enum LayoutError {
    #[error("font metrics line {line}: {message}")]
    Font { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot break {words} words into {lines} lines")]
    TooManyLines { lines: usize, words: usize },
    #[error("accumulated proportions sum to {0}, above 1")]
    AccumulationOverflow(f64),
    #[error("blueprint {id}: {message}")]
    Blueprint { id: String, message: String },
    #[error("no content for region {0}")]
    MissingContent(String),
    #[error("blueprint {blueprint}: required constraints cannot be met")]
    Infeasible { blueprint: String },
    #[error("blueprint {blueprint}: {message}")]
    Solver { blueprint: String, message: String },
}
