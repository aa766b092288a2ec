use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use reqwest::{Client, StatusCode};
use serde_json::{json, Value};
use statviz::api::{serve, AppState};
use statviz::store::TemplateStore;
use statviz_core::pipeline::{Engine, Paths};
use statviz_core::synth::RankingWeights;

struct Service {
    base: String,
    http: Client,
    _dir: tempfile::TempDir,
}

impl Service {
    async fn start() -> Self {
        let assets = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets");
        let engine = Arc::new(Engine::load(&Paths::in_assets(&assets)).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let store = TemplateStore::open(&dir.path().join("templates.jsonl")).unwrap();
        let state = Arc::new(AppState::new(engine, RankingWeights::default(), Duration::from_secs(3600), store));
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        tokio::spawn(serve(listener, state));
        Service { base, http: Client::new(), _dir: dir }
    }

    async fn post(&self, path: &str, body: Value) -> (StatusCode, Value) {
        let r = self.http.post(format!("{}{path}", self.base)).json(&body).send().await.unwrap();
        (r.status(), r.json().await.unwrap())
    }

    async fn get(&self, path: &str) -> (StatusCode, Value) {
        let r = self.http.get(format!("{}{path}", self.base)).send().await.unwrap();
        (r.status(), r.json().await.unwrap())
    }

    async fn get_text(&self, path: &str) -> (StatusCode, String, String) {
        let r = self.http.get(format!("{}{path}", self.base)).send().await.unwrap();
        let ctype = r.headers().get("content-type").map(|v| v.to_str().unwrap().to_string()).unwrap_or_default();
        (r.status(), ctype, r.text().await.unwrap())
    }
}

fn str_of<'a>(v: &'a Value, key: &str) -> &'a str {
    v[key].as_str().unwrap_or_else(|| panic!("{key} missing in {v}"))
}

#[tokio::test(flavor = "multi_thread")]
async fn session_refine_export_template_round_trip() {
    let s = Service::start().await;
    let (status, session) = s.post("/api/sessions", json!({"statement": "More than 40% of students like football.", "seed": 7})).await;
    assert_eq!(status, StatusCode::CREATED, "{session}");
    let sid = str_of(&session, "session_id").to_string();
    assert_eq!(session["facts"].as_array().unwrap().len(), 1);
    assert_eq!(session["facts"][0]["value"], json!(0.4));
    let cands = session["candidates"].as_array().unwrap();
    assert!(cands.len() >= 5);
    let totals: Vec<f64> = cands.iter().map(|c| c["scores"]["total"].as_f64().unwrap()).collect();
    assert!(totals.windows(2).all(|w| w[0] >= w[1]));
    assert!(cands.iter().all(|c| str_of(c, "svg").starts_with("<?xml")));

    let (status, listed) = s.get(&format!("/api/sessions/{sid}/candidates?top=3")).await;
    assert_eq!(status, StatusCode::OK);
    let listed = listed["candidates"].as_array().unwrap().clone();
    assert_eq!(listed.len(), 3);
    assert_eq!(listed[0]["id"], cands[0]["id"]);
    assert_eq!(listed[0]["svg"], cands[0]["svg"]);

    // refine: swap the palette of the best candidate
    let parent = &cands[0];
    let pid = str_of(parent, "id");
    let (_, palettes) = s.get("/api/assets/palettes?query=ocean").await;
    let palette = palettes.as_array().unwrap().iter().map(|p| str_of(p, "asset_id")).find(|p| *p != str_of(parent, "palette")).unwrap().to_string();
    let (status, child) =
        s.post(&format!("/api/sessions/{sid}/candidates/{pid}/refine"), json!({"replace": {"palette": palette}})).await;
    assert_eq!(status, StatusCode::CREATED, "{child}");
    let cid = str_of(&child, "id").to_string();
    assert_ne!(cid, pid);
    assert_eq!(str_of(&child, "parent"), pid);
    assert_eq!(str_of(&child, "palette"), palette);
    assert_eq!(child["blueprint"], parent["blueprint"]);
    assert_eq!(child["icons"], parent["icons"]);

    // read-your-writes: the parent is unchanged and the child is listed
    let (_, again) = s.get(&format!("/api/sessions/{sid}/candidates/{pid}")).await;
    assert_eq!(again["svg"], parent["svg"]);
    let (_, all) = s.get(&format!("/api/sessions/{sid}/candidates?svg=false")).await;
    assert!(all["candidates"].as_array().unwrap().iter().any(|c| c["id"] == json!(cid)));
    assert!(all["candidates"][0].get("svg").is_none());

    let (status, ctype, exported) = s.get_text(&format!("/api/export/{cid}.svg")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ctype, "image/svg+xml");
    assert_eq!(exported, str_of(&child, "svg"));

    let (status, saved) = s.post("/api/templates", json!({"candidate_id": cid, "label": "ocean football"})).await;
    assert_eq!(status, StatusCode::CREATED, "{saved}");
    let tid = str_of(&saved, "id").to_string();
    let (_, list) = s.get("/api/templates").await;
    assert!(list.as_array().unwrap().iter().any(|t| t["id"] == json!(tid) && t["label"] == json!("ocean football")));
    let (_, one) = s.get(&format!("/api/templates/{tid}")).await;
    assert_eq!(str_of(&one, "svg"), exported);

    let (status, reloaded) = s.post(&format!("/api/templates/{tid}/sessions"), json!({})).await;
    assert_eq!(status, StatusCode::CREATED, "{reloaded}");
    assert_ne!(reloaded["session_id"], json!(sid));
    let rc = &reloaded["candidates"][0];
    assert_eq!(str_of(rc, "svg"), exported, "reloaded template renders byte-identically");
    let (_, ctype, re_exported) = s.get_text(&format!("/api/export/{}.svg", str_of(rc, "id"))).await;
    assert_eq!(ctype, "image/svg+xml");
    assert_eq!(re_exported, exported);
}

#[tokio::test(flavor = "multi_thread")]
async fn hollow_icon_into_fill_slot_conflicts() {
    let s = Service::start().await;
    let (_, session) = s.post("/api/sessions", json!({"statement": "40% of coffee is consumed at breakfast.", "top": 20})).await;
    let sid = str_of(&session, "session_id");
    let (_, icons) = s.get("/api/assets/icons").await;
    let hollow = icons.as_array().unwrap().iter().find(|i| i["flags"]["hollow"] == json!(true)).expect("a hollow icon");
    let hollow = str_of(hollow, "asset_id");
    // a fill slot: a candidate whose SVG clips a partially filled icon
    let filled = session["candidates"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| str_of(c, "svg").contains("statviz:fraction") && !str_of(c, "svg").contains("statviz:cell"))
        .expect("a filled-icon candidate");
    let (status, body) = s
        .post(&format!("/api/sessions/{sid}/candidates/{}/refine", str_of(filled, "id")), json!({"replace": {"icon_slot": hollow}}))
        .await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");
    assert_eq!(body["constraint"], json!("hollow_not_fillable"));
}

#[tokio::test(flavor = "multi_thread")]
async fn errors_have_statuses() {
    let s = Service::start().await;
    let (status, body) = s.post("/api/sessions", json!({"statement": "hello world"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(str_of(&body, "message").contains("number"), "{body}");
    let (status, _) = s.post("/api/sessions", json!({"text": "oops"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = s.post("/api/sessions", json!({"statement": "40% of voters agree.", "weights": "1,2"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    for path in ["/api/sessions/nope/candidates", "/api/export/nope-0.svg", "/api/templates/nope", "/api/nothing"] {
        let (status, _) = s.get(path).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{path}");
    }
    let (_, session) = s.post("/api/sessions", json!({"statement": "40% of voters agree."})).await;
    let sid = str_of(&session, "session_id");
    let cid = str_of(&session["candidates"][0], "id");
    let (status, _) = s.post(&format!("/api/sessions/{sid}/candidates/{cid}/refine"), json!({"replace": {"palette": "no-such"}})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = s.post(&format!("/api/sessions/{sid}/candidates/{sid}-999/refine"), json!({"replace": {}})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = s.post("/api/templates", json!({"candidate_id": "nope-1", "label": "x"})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread")]
async fn asset_search_ranks_matches() {
    let s = Service::start().await;
    let (status, icons) = s.get("/api/assets/icons?query=coffee&limit=3").await;
    assert_eq!(status, StatusCode::OK);
    let icons = icons.as_array().unwrap();
    assert_eq!(icons.len(), 3);
    assert_eq!(icons[0]["asset_id"], json!("coffee"));
    assert_eq!(icons[0]["similarity"], json!(1.0));
    let (_, palettes) = s.get("/api/assets/palettes?query=football").await;
    let p = &palettes.as_array().unwrap()[0];
    assert_eq!(p["colors"].as_array().unwrap().len(), 5);
}
