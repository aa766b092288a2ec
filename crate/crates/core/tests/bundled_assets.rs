use std::path::{Path, PathBuf};
use std::sync::Arc;

use statviz_core::assets::{load_manifest, query_words, AssetLibrary, IconUse};
use statviz_core::text::embedding::EmbeddingTable;

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

fn library(with_embeddings: bool) -> AssetLibrary {
    let manifest = load_manifest(&assets()).unwrap();
    let emb = with_embeddings.then(|| Arc::new(EmbeddingTable::load(&assets().join("embeddings.txt")).unwrap()));
    AssetLibrary::new(manifest, emb)
}

#[test]
fn bundled_pack_sizes() {
    let c = library(false).manifest.counts();
    assert!(c.icons >= 40, "{c:?}");
    assert!(c.palettes >= 12, "{c:?}");
    assert!(c.hollow >= 1 && c.generic_palettes >= 1 && c.pictograph_ok >= 10 && c.fillable >= 10, "{c:?}");
}

#[test]
fn students_match_the_student_icon() {
    let lib = library(true);
    let m = lib.match_icons(&query_words("students"), 3);
    assert_eq!(m[0].asset_id, "student");
    assert!(m[0].similarity >= 0.9, "{m:?}");
}

#[test]
fn exact_keyword_under_fallback_scores_one() {
    let lib = library(false);
    let m = lib.match_icons(&["football".to_string()], 1);
    assert_eq!((m[0].asset_id.as_str(), m[0].similarity), ("football", 1.0));
}

#[test]
fn coffee_palette_first() {
    let lib = library(true);
    let m = lib.match_palettes(&query_words("65% of coffee are consumed in breakfast"), 3);
    assert_eq!(m[0].asset_id, "coffee");
}

#[test]
fn environment_prefers_green_or_blue() {
    let lib = library(true);
    let m = lib.match_palettes(&query_words("environment"), 3);
    assert!(["forest", "ocean"].contains(&m[0].asset_id.as_str()), "{m:?}");
}

#[test]
fn generic_palette_always_available() {
    for emb in [true, false] {
        let lib = library(emb);
        let m = lib.match_palettes(&query_words("zzzz qqqq"), 3);
        assert!(!m.is_empty());
        assert!(m.iter().all(|r| lib.manifest.palette(&r.asset_id).unwrap().is_generic()));
    }
}

#[test]
fn matches_are_sorted_and_deterministic() {
    let lib = library(true);
    for q in ["students like football", "US men know how to tie a bow tie", "participants come from Canada", "secretaries wear glasses"] {
        let words = query_words(q);
        let a = lib.match_icons(&words, 10);
        assert_eq!(a, lib.match_icons(&words, 10));
        assert!(a.windows(2).all(|w| w[0].similarity >= w[1].similarity), "{q}: {a:?}");
        assert!(a.iter().all(|r| r.similarity >= lib.similarity_floor));
        let p = lib.match_palettes(&words, 10);
        assert!(p.windows(2).all(|w| w[0].similarity >= w[1].similarity));
    }
}

#[test]
fn keywords_are_self_similar() {
    let lib = library(true);
    let emb = lib.embeddings.as_ref().unwrap();
    for icon in &lib.manifest.icons {
        for k in &icon.keywords {
            if emb.get(k).is_some() {
                assert!((lib.word_similarity(k, k).unwrap() - 1.0).abs() <= 1e-6, "{k}");
            }
        }
    }
}

#[test]
fn flag_rules() {
    let lib = library(false);
    let m = &lib.manifest;
    assert_eq!(m.icon("heart_outline").unwrap().check_use(IconUse::Filled).unwrap_err().rule, "hollow_not_fillable");
    assert_eq!(m.icon("football").unwrap().check_use(IconUse::Pictograph).unwrap_err().rule, "pictograph_ok");
    assert!(m.icon("person").unwrap().check_use(IconUse::Pictograph).is_ok());
    for icon in &m.icons {
        assert!(!(icon.flags.hollow && icon.flags.fillable), "{}", icon.id);
        if icon.check_use(IconUse::Pictograph).is_ok() {
            assert_ne!(icon.flags.represents, statviz_core::assets::Represents::Part);
        }
    }
}
