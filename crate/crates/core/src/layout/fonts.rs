//! Per-character advance tables, so text can be measured without system fonts.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LayoutError;

/// Line box height as a multiple of the font size.
pub const LINE_HEIGHT: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FontId {
    Sans,
    SansBold,
    Serif,
    Condensed,
}

impl FontId {
    pub const ALL: [FontId; 4] = [FontId::Sans, FontId::SansBold, FontId::Serif, FontId::Condensed];
    /// Families a description may be set in, from widest to most compact.
    pub const TEXT_FAMILIES: [FontId; 3] = [FontId::Serif, FontId::Sans, FontId::Condensed];

    pub fn name(self) -> &'static str {
        match self {
            FontId::Sans => "sans",
            FontId::SansBold => "sans-bold",
            FontId::Serif => "serif",
            FontId::Condensed => "condensed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FontMetrics {
    pub id: FontId,
    /// CSS font-family list written into SVG output.
    pub family: String,
    pub bold: bool,
    /// Units per 1000 of the font size.
    pub ascent: u32,
    pub descent: u32,
    pub default_advance: u32,
    advances: HashMap<char, u32>,
}

impl FontMetrics {
    pub fn advance(&self, c: char) -> u32 {
        self.advances.get(&c).copied().unwrap_or(self.default_advance)
    }

    /// Width in 1/1000 font-size units. Integer, so sums are exact.
    pub fn width_units(&self, text: &str) -> u64 {
        text.chars().map(|c| self.advance(c) as u64).sum()
    }

    pub fn space_units(&self) -> u64 {
        self.advance(' ') as u64
    }

    /// Width at font size `size`.
    pub fn width(&self, text: &str, size: f64) -> f64 {
        self.width_units(text) as f64 * size / 1000.0
    }

    /// Distance from the top of a line box to its baseline, per unit font size.
    pub fn baseline_offset(&self) -> f64 {
        let glyph = (self.ascent + self.descent) as f64 / 1000.0;
        (LINE_HEIGHT - glyph) / 2.0 + self.ascent as f64 / 1000.0
    }

    /// Parses a table: `key<TAB>value` header lines (`name`, `family`,
    /// `weight`, `ascent`, `descent`, `default`) then `codepoint<TAB>advance`.
    pub fn parse(text: &str) -> Result<Self, LayoutError> {
        let err = |line: usize, message: String| LayoutError::Font { line, message };
        let mut header = BTreeMap::new();
        let mut advances = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('\t').ok_or_else(|| err(i + 1, "expected key<TAB>value".into()))?;
            if let Ok(cp) = k.parse::<u32>() {
                let c = char::from_u32(cp).ok_or_else(|| err(i + 1, format!("bad codepoint {cp}")))?;
                let w = v.trim().parse::<u32>().map_err(|_| err(i + 1, format!("bad advance {v:?}")))?;
                advances.insert(c, w);
            } else {
                header.insert(k.to_string(), v.trim().to_string());
            }
        }
        let get = |k: &str| header.get(k).ok_or_else(|| err(0, format!("missing {k}")));
        let num = |k: &str| -> Result<u32, LayoutError> {
            get(k)?.parse().map_err(|_| err(0, format!("{k} is not an integer")))
        };
        let id = match get("name")?.as_str() {
            "sans" => FontId::Sans,
            "sans-bold" => FontId::SansBold,
            "serif" => FontId::Serif,
            "condensed" => FontId::Condensed,
            other => return Err(err(0, format!("unknown font {other}"))),
        };
        if !advances.contains_key(&' ') {
            return Err(err(0, "no advance for space".into()));
        }
        Ok(FontMetrics {
            id,
            family: get("family")?.clone(),
            bold: header.get("weight").map_or(false, |w| w == "bold"),
            ascent: num("ascent")?,
            descent: num("descent")?,
            default_advance: num("default")?,
            advances,
        })
    }
}

#[derive(Debug, Clone)]
pub struct FontBook {
    fonts: BTreeMap<FontId, FontMetrics>,
}

impl FontBook {
    /// Loads `<id>.txt` for every font id from `dir`.
    pub fn load(dir: &Path) -> Result<Self, LayoutError> {
        let mut fonts = BTreeMap::new();
        for id in FontId::ALL {
            let path = dir.join(format!("{}.txt", id.name()));
            let text = std::fs::read_to_string(&path)
                .map_err(|e| LayoutError::Io { path: path.display().to_string(), source: e })?;
            let m = FontMetrics::parse(&text)?;
            if m.id != id {
                return Err(LayoutError::Font { line: 0, message: format!("{} declares name {}", path.display(), m.id.name()) });
            }
            fonts.insert(id, m);
        }
        Ok(FontBook { fonts })
    }

    pub fn get(&self, id: FontId) -> &FontMetrics {
        &self.fonts[&id]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = "# test\nname\tsans\nfamily\tx\nascent\t700\ndescent\t200\ndefault\t500\n32\t250\n97\t600\n";

    #[test]
    fn measures_in_integer_units() {
        let m = FontMetrics::parse(TINY).unwrap();
        assert_eq!(m.width_units("a a"), 1450);
        assert_eq!(m.width_units("z"), 500);
        assert_eq!(m.width("aa", 10.0), 12.0);
        assert!((m.baseline_offset() - (0.15 + 0.7)).abs() < 1e-12);
    }

    #[test]
    fn rejects_malformed() {
        assert!(FontMetrics::parse("name\tsans\n").is_err());
        assert!(matches!(FontMetrics::parse("name sans\n"), Err(LayoutError::Font { line: 1, .. })));
    }
}
