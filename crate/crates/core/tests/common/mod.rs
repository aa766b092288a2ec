#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use statviz_core::layout::solve::ElementKind;
use statviz_core::layout::Graphic;
use statviz_core::pipeline::{Engine, Paths};
use statviz_core::synth::{Candidate, Generation, RankingWeights};

pub fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

pub fn engine() -> &'static Engine {
    static ENGINE: OnceLock<Engine> = OnceLock::new();
    ENGINE.get_or_init(|| Engine::load(&Paths::in_assets(&assets())).expect("bundled assets load"))
}

pub fn generate(statement: &str) -> Generation {
    engine().generate(statement, &RankingWeights::default()).expect("statement generates").1
}

pub fn graphics(c: &Candidate) -> impl Iterator<Item = &Graphic> {
    c.layout.elements.iter().filter_map(|e| match &e.kind {
        ElementKind::Graphic { graphic } => Some(graphic),
        _ => None,
    })
}
