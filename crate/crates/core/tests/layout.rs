use std::path::{Path, PathBuf};

use statviz_core::layout::check::check_layout;
use statviz_core::layout::graphic::IconRef;
use statviz_core::layout::{load_blueprints, solve, Blueprint, Content, Contents, FontBook, Graphic, SolveOptions, TextRole};
use statviz_core::layout::LayoutError;

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

fn fonts() -> FontBook {
    FontBook::load(&assets().join("fonts")).unwrap()
}

fn icon(aspect: f64) -> IconRef {
    IconRef { id: "cup".into(), aspect, fill_direction: Default::default() }
}

fn text(t: &str, role: TextRole) -> Content {
    Content::Text { text: t.into(), role }
}

fn filled(aspect: f64) -> Content {
    Content::Graphic(vec![Graphic::FilledIcon { icon: icon(aspect), fraction: 0.4, fact: 0 }])
}

#[test]
fn bundled_blueprints_load() {
    let bps = load_blueprints(&assets().join("blueprints")).unwrap();
    assert!(bps.len() >= 12, "{}", bps.len());
    let ids: Vec<&str> = bps.iter().map(|b| b.id.as_str()).collect();
    for want in ["number_lead", "number_lead_modifier", "side_by_side", "sharing_axes", "sharing_center"] {
        assert!(ids.contains(&want), "{want} missing");
    }
}

#[test]
fn single_icon_fills_square_canvas() {
    let bp = Blueprint::from_json(
        r#"{"id":"solo","size":[400,400],"facts":"single",
            "root":{"id":"g","slot":"graphic","graphics":["filled_icon"],"padding":0}}"#,
    )
    .unwrap();
    let contents: Contents = [("g".to_string(), filled(1.0))].into();
    let layout = solve(&bp.instantiate(1), &contents, &fonts(), &SolveOptions::default()).unwrap();
    let side = 400.0 - 2.0 * 16.0;
    assert!((layout.objective - side).abs() < 1e-6, "{}", layout.objective);
    assert!((layout.content_area - side * side).abs() < 1e-6);
}

fn number_lead_contents(description: &str) -> Contents {
    [
        ("graphic".to_string(), filled(0.8)),
        ("number".to_string(), text("40%", TextRole::Number)),
        ("description".to_string(), text(description, TextRole::Description)),
    ]
    .into()
}

#[test]
fn number_lead_keeps_font_ratio() {
    let bp = Blueprint::from_json(&std::fs::read_to_string(assets().join("blueprints/number_lead.json")).unwrap()).unwrap();
    assert_eq!(bp.aspect(), 2.0);
    let inst = bp.instantiate(1);
    let fonts = fonts();
    let opts = SolveOptions::default();
    for d in ["of students like football", "of USA fresh water is used for agriculture in the western states every year"] {
        let layout = solve(&inst, &number_lead_contents(d), &fonts, &opts).unwrap();
        let ratio = layout.font_of("number").unwrap() / layout.font_of("description").unwrap();
        assert!((3.0 - 1e-6..=8.0 + 1e-6).contains(&ratio), "{d}: {ratio}");
        assert_eq!(check_layout(&layout, &inst, &fonts, &opts), vec![]);
    }
}

#[test]
fn impossible_ratio_is_infeasible() {
    let bp = Blueprint::from_json(
        r#"{"id":"tight","size":[200,100],"facts":"single",
            "root":{"direction":"row","children":[{"id":"number","slot":"number"},{"id":"description","slot":"description","form":"after_number"}]},
            "constraints":["font(number) >= 100 * font(description)"]}"#,
    )
    .unwrap();
    let err = solve(&bp.instantiate(1), &number_lead_contents("of students"), &fonts(), &SolveOptions::default()).unwrap_err();
    assert!(matches!(err, LayoutError::Infeasible { .. }), "{err}");
}

#[test]
fn larger_canvas_never_shrinks_content() {
    let fonts = fonts();
    let opts = SolveOptions::default();
    let mut last = 0.0;
    for w in [400.0, 600.0, 800.0, 1200.0] {
        let json = format!(
            r#"{{"id":"grow","size":[{w},{h}],"facts":"single",
                "root":{{"direction":"row","children":[
                    {{"id":"graphic","slot":"graphic","graphics":["filled_icon"]}},
                    {{"direction":"column","children":[{{"id":"number","slot":"number"}},
                        {{"id":"description","slot":"description","form":"after_number"}}]}}]}},
                "constraints":["font(number) >= 3 * font(description)"]}}"#,
            h = w / 2.0
        );
        let bp = Blueprint::from_json(&json).unwrap();
        let layout = solve(&bp.instantiate(1), &number_lead_contents("of students like football"), &fonts, &opts).unwrap();
        assert!(layout.objective >= last - 1e-9, "{w}: {} < {last}", layout.objective);
        last = layout.objective;
    }
}

#[test]
fn repeated_regions_share_scale() {
    let bps = load_blueprints(&assets().join("blueprints")).unwrap();
    let bp = bps.iter().find(|b| b.id == "side_by_side").unwrap();
    let inst = bp.instantiate(2);
    let mut contents = Contents::new();
    for (i, (n, d)) in [("60%", "of participants come from the US"), ("40%", "come from Canada")].iter().enumerate() {
        contents.insert(format!("graphic#{i}"), Content::Graphic(vec![Graphic::FilledIcon { icon: icon(1.0), fraction: 0.5, fact: i }]));
        contents.insert(format!("number#{i}"), text(n, TextRole::Number));
        contents.insert(format!("description#{i}"), text(d, TextRole::Description));
    }
    let fonts = fonts();
    let opts = SolveOptions::default();
    let layout = solve(&inst, &contents, &fonts, &opts).unwrap();
    assert_eq!(layout.font_of("description#0"), layout.font_of("description#1"));
    assert_eq!(check_layout(&layout, &inst, &fonts, &opts), vec![]);
}
