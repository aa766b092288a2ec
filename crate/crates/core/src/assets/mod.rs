//! Icon and palette manifests, and keyword matching against them.

mod color;
mod manifest;
mod matching;

pub use color::{contrast_ratio, Color};
pub use manifest::{
    load_icon_manifest, load_manifest, load_palette_manifest, AssetManifest, FillDirection, FlagCounts, IconAsset,
    IconFlags, IconShape, Palette, PaletteRole, Represents,
};
pub use matching::{query_words, stem, AssetLibrary, MatchResult};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssetError {
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("asset {asset}: {message}")]
    InvariantViolation { asset: String, message: String },
    #[error("duplicate asset id {0}")]
    Duplicate(String),
    #[error("unknown asset {0}")]
    MissingAsset(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// How an icon is used in a graphic slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IconUse {
    Pictograph,
    Filled,
    Background,
    Adornment,
}

/// An icon that may not go where it was put. `rule` names the violated constraint.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("icon {icon} violates {rule}")]
pub struct FlagViolation {
    pub icon: String,
    pub rule: &'static str,
}

impl IconAsset {
    pub fn check_use(&self, usage: IconUse) -> Result<(), FlagViolation> {
        let fail = |rule| Err(FlagViolation { icon: self.id.clone(), rule });
        let f = &self.flags;
        match usage {
            IconUse::Pictograph if !f.pictograph_ok => fail("pictograph_ok"),
            IconUse::Pictograph if f.represents == Represents::Part => fail("part_icon_not_pictograph"),
            IconUse::Filled if f.hollow => fail("hollow_not_fillable"),
            IconUse::Filled if !f.fillable => fail("fillable"),
            IconUse::Background if !f.background_ok => fail("background_ok"),
            _ => Ok(()),
        }
    }
}
