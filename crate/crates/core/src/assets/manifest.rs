use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::color::{contrast_ratio, Color};
use super::AssetError;

const MIN_TEXT_CONTRAST: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Represents {
    Part,
    Whole,
    Generic,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillDirection {
    #[default]
    LeftToRight,
    BottomToTop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IconFlags {
    pub pictograph_ok: bool,
    pub fillable: bool,
    pub hollow: bool,
    pub background_ok: bool,
    pub represents: Represents,
}

/// One `<path>` of an icon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IconShape {
    pub d: String,
    pub evenodd: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IconAsset {
    pub id: String,
    /// SVG file, relative to the manifest.
    pub svg: String,
    pub keywords: Vec<String>,
    pub flags: IconFlags,
    /// Width over height of the drawing.
    pub aspect: f64,
    #[serde(default)]
    pub fill_direction: FillDirection,
    #[serde(skip)]
    pub view_box: (f64, f64),
    #[serde(skip)]
    pub shapes: Vec<IconShape>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PaletteRole {
    Background,
    TextPrimary,
    TextEmphasis,
    GraphicPrimary,
    GraphicSecondary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    pub id: String,
    /// Empty for generic palettes.
    #[serde(default)]
    pub keywords: Vec<String>,
    pub background: Color,
    pub text_primary: Color,
    pub text_emphasis: Color,
    pub graphic_primary: Color,
    pub graphic_secondary: Color,
}

impl Palette {
    pub fn role(&self, role: PaletteRole) -> Color {
        match role {
            PaletteRole::Background => self.background,
            PaletteRole::TextPrimary => self.text_primary,
            PaletteRole::TextEmphasis => self.text_emphasis,
            PaletteRole::GraphicPrimary => self.graphic_primary,
            PaletteRole::GraphicSecondary => self.graphic_secondary,
        }
    }

    pub fn colors(&self) -> [Color; 5] {
        [self.background, self.text_primary, self.text_emphasis, self.graphic_primary, self.graphic_secondary]
    }

    pub fn is_generic(&self) -> bool {
        self.keywords.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FlagCounts {
    pub icons: usize,
    pub pictograph_ok: usize,
    pub fillable: usize,
    pub hollow: usize,
    pub background_ok: usize,
    pub palettes: usize,
    pub generic_palettes: usize,
}

#[derive(Debug, Clone, Default)]
pub struct AssetManifest {
    pub icons: Vec<IconAsset>,
    pub palettes: Vec<Palette>,
    icon_index: BTreeMap<String, usize>,
    palette_index: BTreeMap<String, usize>,
}

impl AssetManifest {
    pub fn new(icons: Vec<IconAsset>, palettes: Vec<Palette>) -> Result<Self, AssetError> {
        let mut icon_index = BTreeMap::new();
        for (i, icon) in icons.iter().enumerate() {
            validate_icon(icon)?;
            if icon_index.insert(icon.id.clone(), i).is_some() {
                return Err(AssetError::Duplicate(icon.id.clone()));
            }
        }
        let mut palette_index = BTreeMap::new();
        for (i, p) in palettes.iter().enumerate() {
            validate_palette(p)?;
            if palette_index.insert(p.id.clone(), i).is_some() {
                return Err(AssetError::Duplicate(p.id.clone()));
            }
        }
        Ok(AssetManifest { icons, palettes, icon_index, palette_index })
    }

    pub fn icon(&self, id: &str) -> Option<&IconAsset> {
        self.icon_index.get(id).map(|&i| &self.icons[i])
    }

    pub fn palette(&self, id: &str) -> Option<&Palette> {
        self.palette_index.get(id).map(|&i| &self.palettes[i])
    }

    pub fn counts(&self) -> FlagCounts {
        let n = |f: fn(&IconFlags) -> bool| self.icons.iter().filter(|i| f(&i.flags)).count();
        FlagCounts {
            icons: self.icons.len(),
            pictograph_ok: n(|f| f.pictograph_ok),
            fillable: n(|f| f.fillable),
            hollow: n(|f| f.hollow),
            background_ok: n(|f| f.background_ok),
            palettes: self.palettes.len(),
            generic_palettes: self.palettes.iter().filter(|p| p.is_generic()).count(),
        }
    }
}

fn violation(asset: &str, message: impl Into<String>) -> AssetError {
    AssetError::InvariantViolation { asset: asset.to_string(), message: message.into() }
}

fn validate_icon(icon: &IconAsset) -> Result<(), AssetError> {
    if icon.keywords.iter().all(|k| k.trim().is_empty()) {
        return Err(violation(&icon.id, "needs at least one keyword"));
    }
    if icon.flags.hollow && icon.flags.fillable {
        return Err(violation(&icon.id, "hollow icons cannot be fillable"));
    }
    if !(icon.aspect.is_finite() && icon.aspect > 0.0) {
        return Err(violation(&icon.id, "aspect ratio must be positive"));
    }
    Ok(())
}

fn validate_palette(p: &Palette) -> Result<(), AssetError> {
    let c = contrast_ratio(p.background, p.text_primary);
    if c < MIN_TEXT_CONTRAST {
        return Err(violation(&p.id, format!("background/text contrast {c:.2} is below {MIN_TEXT_CONTRAST}")));
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, AssetError> {
    std::fs::read_to_string(path).map_err(|e| AssetError::Io { path: path.display().to_string(), source: e })
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, AssetError> {
    serde_json::from_str(text).map_err(|e| AssetError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Reads the drawing of an icon: an `<svg>` with a `viewBox` whose only
/// element child is a `<g>` holding `<path>` elements.
fn parse_icon_svg(id: &str, text: &str) -> Result<((f64, f64), Vec<IconShape>), AssetError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| violation(id, format!("svg: {e}")))?;
    let root = doc.root_element();
    if root.tag_name().name() != "svg" {
        return Err(violation(id, "root element must be <svg>"));
    }
    let vb: Vec<f64> = root
        .attribute("viewBox")
        .ok_or_else(|| violation(id, "missing viewBox"))?
        .split([' ', ','])
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| violation(id, "bad viewBox")))
        .collect::<Result<_, _>>()?;
    if vb.len() != 4 || vb[2] <= 0.0 || vb[3] <= 0.0 || vb[0] != 0.0 || vb[1] != 0.0 {
        return Err(violation(id, "viewBox must be 0 0 w h with positive size"));
    }
    let groups: Vec<_> = root.children().filter(|n| n.is_element()).collect();
    if groups.len() != 1 || groups[0].tag_name().name() != "g" {
        return Err(violation(id, "svg must contain exactly one root <g>"));
    }
    let mut shapes = Vec::new();
    for node in groups[0].children().filter(|n| n.is_element()) {
        if node.tag_name().name() != "path" {
            return Err(violation(id, format!("unsupported element <{}>", node.tag_name().name())));
        }
        let d = node.attribute("d").ok_or_else(|| violation(id, "path without d"))?;
        shapes.push(IconShape { d: d.to_string(), evenodd: node.attribute("fill-rule") == Some("evenodd") });
    }
    if shapes.is_empty() {
        return Err(violation(id, "icon has no paths"));
    }
    Ok(((vb[2], vb[3]), shapes))
}

#[derive(Deserialize)]
struct IconFile {
    icons: Vec<IconAsset>,
}

#[derive(Deserialize)]
struct PaletteFile {
    palettes: Vec<Palette>,
}

/// Loads an icon manifest and the SVG files it names.
pub fn load_icon_manifest(path: &Path) -> Result<Vec<IconAsset>, AssetError> {
    let mut icons = parse_json::<IconFile>(path, &read(path)?)?.icons;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut seen = HashSet::new();
    for icon in &mut icons {
        if !seen.insert(icon.id.clone()) {
            return Err(AssetError::Duplicate(icon.id.clone()));
        }
        validate_icon(icon)?;
        let (view_box, shapes) = parse_icon_svg(&icon.id, &read(&dir.join(&icon.svg))?)?;
        let drawn = view_box.0 / view_box.1;
        if (drawn - icon.aspect).abs() > 1e-3 * drawn {
            return Err(violation(&icon.id, format!("aspect {} differs from the drawing's {drawn:.4}", icon.aspect)));
        }
        icon.view_box = view_box;
        icon.shapes = shapes;
    }
    Ok(icons)
}

pub fn load_palette_manifest(path: &Path) -> Result<Vec<Palette>, AssetError> {
    Ok(parse_json::<PaletteFile>(path, &read(path)?)?.palettes)
}

/// Loads `icons/icons.json` and `palettes.json` from an asset directory.
pub fn load_manifest(dir: &Path) -> Result<AssetManifest, AssetError> {
    let icons = load_icon_manifest(&dir.join("icons").join("icons.json"))?;
    let palettes = load_palette_manifest(&dir.join("palettes.json"))?;
    AssetManifest::new(icons, palettes)
}
