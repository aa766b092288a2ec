mod common;

use std::collections::HashMap;

use common::{engine, generate, graphics};
use roxmltree::{Document, Node};
use statviz_core::assets::FillDirection;
use statviz_core::layout::Graphic;
use statviz_core::render::validate;
use statviz_core::synth::Candidate;

const NS: &str = "https://statviz.dev/ns";

fn pictograph_candidate(statement: &str, rows: usize, cols: usize) -> Candidate {
    generate(statement)
        .candidates
        .into_iter()
        .find(|c| graphics(c).any(|g| matches!(g, Graphic::Pictograph { grid, .. } if grid.rows == rows && grid.cols == cols)))
        .unwrap_or_else(|| panic!("no {rows}x{cols} pictograph for {statement:?}"))
}

fn transform(node: Node) -> (f64, f64, f64) {
    let t = node.attribute("transform").unwrap();
    let nums: Vec<f64> = t
        .split(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-'))
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().unwrap())
        .collect();
    (nums[0], nums[1], nums[2])
}

/// Fill of each pictograph cell measured from the drawing: 1 for a plain
/// primary icon, else the clip rectangle's share of the icon box.
fn measured_cells(svg: &str, c: &Candidate) -> Vec<f64> {
    let e = engine();
    let palette = e.synth.library.manifest.palette(&c.choice.palette).unwrap();
    let primary = palette.graphic_primary.to_string();
    let doc = Document::parse(svg).unwrap();
    let clips: HashMap<&str, Node> = doc
        .descendants()
        .filter(|n| n.has_tag_name("clipPath"))
        .map(|n| (n.attribute("id").unwrap(), n.first_element_child().unwrap()))
        .collect();
    let cells: Vec<Node> = doc.descendants().filter(|n| n.attribute((NS, "cell")).is_some()).collect();
    cells
        .iter()
        .map(|cell| {
            let uses: Vec<Node> = cell.children().filter(|n| n.has_tag_name("use")).collect();
            if uses.iter().any(|u| u.attribute("fill") == Some(primary.as_str())) {
                return 1.0;
            }
            let Some(group) = cell.children().find(|n| n.attribute("clip-path").is_some()) else { return 0.0 };
            let inner = group.first_element_child().unwrap();
            assert_eq!(inner.attribute("fill"), Some(primary.as_str()));
            let href = inner.attribute(("http://www.w3.org/1999/xlink", "href")).unwrap();
            let icon = e.synth.library.manifest.icon(href.trim_start_matches("#icon-")).unwrap();
            let (_, _, s) = transform(uses[0]);
            let (w, h) = (icon.aspect * icon.view_box.1 * s, icon.view_box.1 * s);
            let id = group.attribute("clip-path").unwrap().trim_start_matches("url(#").trim_end_matches(')');
            let rect = clips[id];
            let get = |a: &str| rect.attribute(a).unwrap().parse::<f64>().unwrap();
            match icon.fill_direction {
                FillDirection::LeftToRight => get("width") / w,
                FillDirection::BottomToTop => get("height") / h,
            }
        })
        .collect()
}

#[test]
fn two_in_five_fills_two_of_five() {
    let c = pictograph_candidate("2 in 5 employees work from home.", 1, 5);
    let svg = engine().render(&c, 1).unwrap();
    let cells = measured_cells(&svg, &c);
    assert_eq!(cells.len(), 5);
    assert_eq!(cells.iter().filter(|f| **f == 1.0).count(), 2);
    assert_eq!(cells.iter().filter(|f| **f == 0.0).count(), 3);
}

#[test]
fn sixty_five_percent_on_ten_has_a_half_icon() {
    let c = pictograph_candidate("65% of students like football.", 1, 10);
    let svg = engine().render(&c, 1).unwrap();
    let cells = measured_cells(&svg, &c);
    assert_eq!(cells.len(), 10);
    assert_eq!(&cells[..6], &[1.0; 6]);
    assert!((cells[6] - 0.5).abs() < 1e-4, "{cells:?}");
    assert!(cells[7..].iter().all(|f| *f == 0.0));
}

#[test]
fn drawn_fraction_tracks_value() {
    for (statement, value) in
        [("65% of students like football.", 0.65), ("2 in 5 employees work from home.", 0.4), ("33% of students like basketball.", 0.33)]
    {
        for c in generate(statement).candidates {
            let Some(n) = graphics(&c).find_map(|g| match g {
                Graphic::Pictograph { grid, .. } => Some(grid.count()),
                _ => None,
            }) else {
                continue;
            };
            let svg = engine().render(&c, 1).unwrap();
            let drawn: f64 = measured_cells(&svg, &c).iter().sum::<f64>() / n as f64;
            assert!((drawn - value).abs() <= 1.0 / (2.0 * n as f64), "{}: {drawn} vs {value}", c.id);
        }
    }
}

#[test]
fn cup_fills_from_the_bottom() {
    let c = generate("40% of coffee is consumed at breakfast.")
        .candidates
        .into_iter()
        .find(|c| graphics(c).any(|g| matches!(g, Graphic::FilledIcon { icon, .. } if icon.id == "coffee")))
        .expect("a filled coffee cup");
    let svg = engine().render(&c, 1).unwrap();
    let doc = Document::parse(&svg).unwrap();
    let group = doc.descendants().find(|n| n.attribute((NS, "fraction")).is_some()).unwrap();
    let (_, y, s) = transform(group.first_element_child().unwrap());
    let icon = engine().synth.library.manifest.icon("coffee").unwrap();
    let h = icon.view_box.1 * s;
    let rect = doc.descendants().find(|n| n.has_tag_name("clipPath")).unwrap().first_element_child().unwrap();
    let ry: f64 = rect.attribute("y").unwrap().parse().unwrap();
    let rh: f64 = rect.attribute("height").unwrap().parse().unwrap();
    assert!((rh / h - 0.4).abs() < 1e-3);
    assert!((ry + rh - (y + h)).abs() < 0.02, "clip must sit on the bottom edge");
}

#[test]
fn colors_come_from_the_palette() {
    for statement in ["More than 40% of students like football.", "60% of participants come from the US, while 40% come from Canada."] {
        for (c, svg) in engine().top_rendered(&generate(statement), 8, 3).unwrap() {
            let p = engine().synth.library.manifest.palette(&c.choice.palette).unwrap();
            let allowed: Vec<String> =
                [p.background, p.text_primary, p.text_emphasis, p.graphic_primary, p.graphic_secondary].iter().map(|c| c.to_string()).collect();
            let doc = Document::parse(&svg).unwrap();
            for n in doc.descendants() {
                if let Some(f) = n.attribute("fill") {
                    assert!(allowed.iter().any(|a| a == f), "{} uses {f}", c.id);
                }
            }
        }
    }
}

#[test]
fn rendered_documents_validate() {
    for statement in ["More than 40% of students like football.", "2 in 5 employees work from home.", "60% of participants come from the US, while 40% come from Canada."] {
        for (c, svg) in engine().top_rendered(&generate(statement), 20, 9).unwrap() {
            assert_eq!(validate(&svg, &engine().synth.fonts), vec![], "{}", c.id);
            assert!(svg.contains(&format!(r#""candidate":"{}""#, c.id)));
        }
    }
}

#[test]
fn validator_flags_broken_documents() {
    let fonts = &engine().synth.fonts;
    let kinds = |svg: &str| validate(svg, fonts).into_iter().map(|f| f.kind).collect::<Vec<_>>();
    assert_eq!(kinds("<svg"), ["xml"]);
    let head = r#"<svg xmlns="http://www.w3.org/2000/svg" xmlns:statviz="https://statviz.dev/ns" xmlns:xlink="http://www.w3.org/1999/xlink""#;
    assert_eq!(kinds(&format!(r#"{head} width="100" height="50" viewBox="0 0 100 100"/>"#)), ["aspect"]);
    assert_eq!(
        kinds(&format!(r#"{head} width="100" height="100" viewBox="0 0 100 100"><use xlink:href="http://x/y.svg"/></svg>"#)),
        ["reference"]
    );
    let text = |w: u32| {
        format!(
            r#"{head} width="100" height="100" viewBox="0 0 100 100"><g statviz:box="0 0 {w} 20"><text font-size="12" statviz:font="sans">football football</text></g></svg>"#
        )
    };
    assert_eq!(kinds(&text(20)), ["overflow"]);
    assert!(kinds(&text(100)).is_empty());
}

#[test]
fn same_seed_same_bytes() {
    let g = generate("More than 40% of students like football.");
    let a = engine().top_rendered(&g, 5, 42).unwrap();
    let b = engine().top_rendered(&generate("More than 40% of students like football."), 5, 42).unwrap();
    assert_eq!(a.iter().map(|x| &x.1).collect::<Vec<_>>(), b.iter().map(|x| &x.1).collect::<Vec<_>>());
}
