//! JSON API over the pipeline.
//!
//! Candidate ids are `{session}-{n}`, unique across sessions, so export needs
//! no session. Refinement derives a new candidate; existing ones never change.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use statviz_core::assets::{query_words, IconFlags, MatchResult};
use statviz_core::fact::{DescriptionForm, FactGroup, ProportionFact, Relation};
use statviz_core::pipeline::{Engine, PipelineError};
use statviz_core::synth::{rank, top, Candidate, RankingWeights, Replacement, RuleOut, Scores, SynthError};

use crate::config::parse_weights;
use crate::store::{SavedTemplate, TemplateStore};

const DEFAULT_TOP: usize = 10;

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    constraint: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    rule_outs: Vec<RuleOut>,
}

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound(String),
    /// A refinement that breaks a named constraint.
    Conflict { constraint: String, message: String },
    NoCandidates(Vec<RuleOut>),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::BadRequest(m) => {
                (StatusCode::BAD_REQUEST, ErrorBody { error: "bad_request", message: m, constraint: None, rule_outs: vec![] })
            }
            ApiError::NotFound(m) => {
                (StatusCode::NOT_FOUND, ErrorBody { error: "not_found", message: m, constraint: None, rule_outs: vec![] })
            }
            ApiError::Conflict { constraint, message } => (
                StatusCode::CONFLICT,
                ErrorBody { error: "constraint_violation", message, constraint: Some(constraint), rule_outs: vec![] },
            ),
            ApiError::NoCandidates(rule_outs) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                ErrorBody {
                    error: "no_candidates",
                    message: "no blueprint admits this statement".into(),
                    constraint: None,
                    rule_outs,
                },
            ),
            ApiError::Internal(m) => (
                StatusCode::INTERNAL_SERVER_ERROR,
                ErrorBody { error: "internal", message: m, constraint: None, rule_outs: vec![] },
            ),
        };
        (status, Json(body)).into_response()
    }
}

impl From<SynthError> for ApiError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::NoCandidates { rule_outs } => ApiError::NoCandidates(rule_outs),
            SynthError::Flag(v) => ApiError::Conflict { constraint: v.rule.to_string(), message: v.to_string() },
            SynthError::RuledOut { .. } => ApiError::Conflict { constraint: "admission".into(), message: e.to_string() },
            SynthError::Layout(_) => ApiError::Conflict { constraint: "layout".into(), message: e.to_string() },
            SynthError::Unknown { .. } => ApiError::NotFound(e.to_string()),
            SynthError::Assets(_) => ApiError::Internal(e.to_string()),
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            e if e.is_parse_failure() => ApiError::BadRequest(e.to_string()),
            PipelineError::Synth(s) => s.into(),
            e => ApiError::Internal(e.to_string()),
        }
    }
}

fn bad_json(e: JsonRejection) -> ApiError {
    ApiError::BadRequest(e.body_text())
}

fn bad_query(e: QueryRejection) -> ApiError {
    ApiError::BadRequest(e.body_text())
}

struct Entry {
    candidate: Candidate,
    parent: Option<String>,
    svg: Option<Arc<String>>,
}

struct Session {
    statement: String,
    group: FactGroup,
    seed: u64,
    weights: RankingWeights,
    rule_outs: Vec<RuleOut>,
    entries: Vec<Entry>,
    last_used: Instant,
}

pub struct AppState {
    engine: Arc<Engine>,
    weights: RankingWeights,
    ttl: Duration,
    sessions: Mutex<HashMap<String, Session>>,
    templates: Mutex<TemplateStore>,
}

impl AppState {
    pub fn new(engine: Arc<Engine>, weights: RankingWeights, ttl: Duration, templates: TemplateStore) -> Self {
        AppState { engine, weights, ttl, sessions: Mutex::new(HashMap::new()), templates: Mutex::new(templates) }
    }

    /// The session map with idle sessions dropped.
    fn sessions(&self) -> MutexGuard<'_, HashMap<String, Session>> {
        let mut map = self.sessions.lock().unwrap_or_else(|p| p.into_inner());
        let ttl = self.ttl;
        map.retain(|_, s| s.last_used.elapsed() < ttl);
        map
    }

    fn templates(&self) -> MutexGuard<'_, TemplateStore> {
        self.templates.lock().unwrap_or_else(|p| p.into_inner())
    }
}

type Shared = Arc<AppState>;

fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()[..12].to_string()
}

fn split_id(id: &str) -> Option<(&str, usize)> {
    let (s, n) = id.rsplit_once('-')?;
    Some((s, n.parse().ok()?))
}

fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

#[derive(Debug, Serialize)]
pub struct CandidateView {
    pub id: String,
    /// Blueprint, relation, icons and palette of the candidate.
    pub key: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    pub blueprint: String,
    pub relation: Relation,
    pub icons: Vec<String>,
    pub palette: String,
    pub descriptions: BTreeMap<String, DescriptionForm>,
    pub scores: Scores,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg: Option<Arc<String>>,
}

#[derive(Debug, Serialize)]
pub struct SessionView {
    pub session_id: String,
    pub statement: String,
    pub seed: u64,
    pub relation: Relation,
    pub facts: Vec<ProportionFact>,
    pub candidates: Vec<CandidateView>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rule_outs: Vec<RuleOut>,
}

impl Session {
    fn view(&mut self, sid: &str, n: usize, engine: &Engine, with_svg: bool) -> Result<CandidateView, ApiError> {
        let seed = self.seed;
        let e = &mut self.entries[n];
        let svg = if with_svg {
            if e.svg.is_none() {
                let svg = engine.render(&e.candidate, seed).map_err(|err| ApiError::Internal(err.to_string()))?;
                e.svg = Some(Arc::new(svg));
            }
            e.svg.clone()
        } else {
            None
        };
        let c = &e.candidate;
        Ok(CandidateView {
            id: format!("{sid}-{n}"),
            key: c.id.clone(),
            parent: e.parent.clone(),
            blueprint: c.blueprint.clone(),
            relation: c.relation,
            icons: c.icons.iter().map(|m| m.asset_id.clone()).collect(),
            palette: c.choice.palette.clone(),
            descriptions: c.descriptions.clone(),
            scores: c.scores,
            svg,
        })
    }

    /// Entry indices, best first; with `top`, one per blueprint and relation.
    fn ranked(&self, top_n: Option<usize>) -> Vec<usize> {
        let index: HashMap<&str, usize> =
            self.entries.iter().enumerate().map(|(i, e)| (e.candidate.id.as_str(), i)).collect();
        let ranked = rank(self.entries.iter().map(|e| e.candidate.clone()).collect(), &self.weights);
        let picked = match top_n {
            Some(n) => top(&ranked, n),
            None => ranked,
        };
        picked.iter().map(|c| index[c.id.as_str()]).collect()
    }
}

#[derive(Debug, Deserialize)]
struct CreateSession {
    statement: String,
    #[serde(default)]
    seed: u64,
    top: Option<usize>,
    weights: Option<String>,
}

async fn create_session(State(app): State<Shared>, body: Result<Json<CreateSession>, JsonRejection>) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let Json(req) = body.map_err(bad_json)?;
    let weights = match &req.weights {
        Some(w) => parse_weights(w).map_err(|e| ApiError::BadRequest(e.to_string()))?,
        None => app.weights,
    };
    let engine = app.engine.clone();
    let statement = req.statement.clone();
    let (analysis, generation) = tokio::task::spawn_blocking(move || engine.generate(&statement, &weights))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    let session = Session {
        statement: req.statement,
        group: analysis.group,
        seed: req.seed,
        weights,
        rule_outs: generation.rule_outs,
        entries: generation.candidates.into_iter().map(|candidate| Entry { candidate, parent: None, svg: None }).collect(),
        last_used: Instant::now(),
    };
    let sid = new_id();
    let view = open_session(&app, sid, session, req.top.unwrap_or(DEFAULT_TOP)).await?;
    Ok((StatusCode::CREATED, Json(view)))
}

/// Stores a session and renders its top candidates.
async fn open_session(app: &Shared, sid: String, mut session: Session, top_n: usize) -> Result<SessionView, ApiError> {
    let engine = app.engine.clone();
    let (session, view) = {
        let sid = sid.clone();
        tokio::task::spawn_blocking(move || -> Result<_, ApiError> {
            let order = session.ranked(Some(top_n));
            let candidates = order.into_iter().map(|i| session.view(&sid, i, &engine, true)).collect::<Result<Vec<_>, _>>()?;
            let view = SessionView {
                session_id: sid.clone(),
                statement: session.statement.clone(),
                seed: session.seed,
                relation: session.group.relation,
                facts: session.group.facts.clone(),
                candidates,
                rule_outs: session.rule_outs.clone(),
            };
            Ok((session, view))
        })
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??
    };
    app.sessions().insert(sid, session);
    Ok(view)
}

#[derive(Debug, Deserialize)]
struct ListQuery {
    top: Option<usize>,
    svg: Option<bool>,
}

#[derive(Debug, Serialize)]
struct CandidateList {
    session_id: String,
    candidates: Vec<CandidateView>,
}

async fn list_candidates(
    State(app): State<Shared>,
    Path(sid): Path<String>,
    q: Result<Query<ListQuery>, QueryRejection>,
) -> Result<Json<CandidateList>, ApiError> {
    let Query(q) = q.map_err(bad_query)?;
    let engine = app.engine.clone();
    let mut sessions = app.sessions();
    let s = sessions.get_mut(&sid).ok_or_else(|| ApiError::NotFound(format!("session {sid}")))?;
    s.last_used = Instant::now();
    let order = s.ranked(q.top);
    let candidates =
        order.into_iter().map(|i| s.view(&sid, i, &engine, q.svg.unwrap_or(true))).collect::<Result<Vec<_>, _>>()?;
    Ok(Json(CandidateList { session_id: sid, candidates }))
}

/// Runs `f` on the session owning candidate `cid` and that candidate's index.
fn with_candidate<R>(app: &AppState, cid: &str, f: impl FnOnce(&str, &mut Session, usize) -> R) -> Result<R, ApiError> {
    let missing = || ApiError::NotFound(format!("candidate {cid}"));
    let (sid, n) = split_id(cid).ok_or_else(missing)?;
    let mut sessions = app.sessions();
    let s = sessions.get_mut(sid).ok_or_else(missing)?;
    if n >= s.entries.len() {
        return Err(missing());
    }
    s.last_used = Instant::now();
    Ok(f(sid, s, n))
}

async fn get_candidate(State(app): State<Shared>, Path((sid, cid)): Path<(String, String)>) -> Result<Json<CandidateView>, ApiError> {
    if split_id(&cid).map(|x| x.0) != Some(sid.as_str()) {
        return Err(ApiError::NotFound(format!("candidate {cid} in session {sid}")));
    }
    let engine = app.engine.clone();
    with_candidate(&app, &cid, |sid, s, n| s.view(sid, n, &engine, true))?.map(Json)
}

#[derive(Debug, Deserialize)]
struct RefineRequest {
    #[serde(default)]
    replace: Replacement,
}

async fn refine(
    State(app): State<Shared>,
    Path((sid, cid)): Path<(String, String)>,
    body: Result<Json<RefineRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<CandidateView>), ApiError> {
    let Json(req) = body.map_err(bad_json)?;
    if split_id(&cid).map(|x| x.0) != Some(sid.as_str()) {
        return Err(ApiError::NotFound(format!("candidate {cid} in session {sid}")));
    }
    let (parent, weights) = with_candidate(&app, &cid, |_, s, n| (s.entries[n].candidate.clone(), s.weights))?;
    let engine = app.engine.clone();
    let mut child = tokio::task::spawn_blocking(move || engine.synth.refine(String::new(), &parent, &req.replace, &weights))
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))??;
    let engine = app.engine.clone();
    let view = {
        let mut sessions = app.sessions();
        let s = sessions.get_mut(&sid).ok_or_else(|| ApiError::NotFound(format!("session {sid}")))?;
        // keyed at insertion so concurrent refinements stay distinct
        let n = s.entries.len();
        child.id = format!("{}.r{n}", s.entries[split_id(&cid).unwrap().1].candidate.id);
        s.entries.push(Entry { candidate: child, parent: Some(cid), svg: None });
        s.view(&sid, n, &engine, true)?
    };
    Ok((StatusCode::CREATED, Json(view)))
}

async fn export(State(app): State<Shared>, Path(file): Path<String>) -> Result<Response, ApiError> {
    let cid = file.strip_suffix(".svg").ok_or_else(|| ApiError::NotFound(file.clone()))?;
    let engine = app.engine.clone();
    let view = with_candidate(&app, cid, |sid, s, n| s.view(sid, n, &engine, true))??;
    let svg = view.svg.expect("rendered");
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg.as_str().to_owned()).into_response())
}

#[derive(Debug, Deserialize)]
struct AssetQuery {
    #[serde(default)]
    query: String,
    limit: Option<usize>,
}

#[derive(Debug, Serialize)]
struct IconMatch {
    #[serde(flatten)]
    result: MatchResult,
    flags: IconFlags,
}

#[derive(Debug, Serialize)]
struct PaletteMatch {
    #[serde(flatten)]
    result: MatchResult,
    colors: [String; 5],
}

fn unmatched(id: &str) -> MatchResult {
    MatchResult { asset_id: id.to_string(), similarity: 0.0, query_word: String::new(), keyword: String::new() }
}

async fn search_icons(State(app): State<Shared>, q: Result<Query<AssetQuery>, QueryRejection>) -> Result<Json<Vec<IconMatch>>, ApiError> {
    let Query(q) = q.map_err(bad_query)?;
    let lib = &app.engine.synth.library;
    let limit = q.limit.unwrap_or(usize::MAX);
    let words = query_words(&q.query);
    let results = if words.is_empty() {
        lib.manifest.icons.iter().take(limit).map(|i| unmatched(&i.id)).collect()
    } else {
        lib.match_icons(&words, limit)
    };
    Ok(Json(
        results
            .into_iter()
            .map(|r| {
                let flags = lib.manifest.icon(&r.asset_id).expect("matched icons exist").flags;
                IconMatch { result: r, flags }
            })
            .collect(),
    ))
}

async fn search_palettes(State(app): State<Shared>, q: Result<Query<AssetQuery>, QueryRejection>) -> Result<Json<Vec<PaletteMatch>>, ApiError> {
    let Query(q) = q.map_err(bad_query)?;
    let lib = &app.engine.synth.library;
    let limit = q.limit.unwrap_or(usize::MAX);
    let words = query_words(&q.query);
    let results = if words.is_empty() {
        lib.manifest.palettes.iter().take(limit).map(|p| unmatched(&p.id)).collect()
    } else {
        lib.match_palettes(&words, limit)
    };
    Ok(Json(
        results
            .into_iter()
            .map(|r| {
                let colors = lib.manifest.palette(&r.asset_id).expect("matched palettes exist").colors().map(|c| c.to_string());
                PaletteMatch { result: r, colors }
            })
            .collect(),
    ))
}

#[derive(Debug, Deserialize)]
struct SaveTemplate {
    candidate_id: String,
    #[serde(default)]
    label: String,
}

#[derive(Debug, Serialize)]
pub struct TemplateView {
    pub id: String,
    pub label: String,
    pub created: u64,
    pub seed: u64,
    pub blueprint: String,
    pub key: String,
    pub statement: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg: Option<String>,
}

impl TemplateView {
    fn of(t: &SavedTemplate, svg: Option<String>) -> Self {
        TemplateView {
            id: t.id.clone(),
            label: t.label.clone(),
            created: t.created,
            seed: t.seed,
            blueprint: t.candidate.blueprint.clone(),
            key: t.candidate.id.clone(),
            statement: t.candidate.statement.clone(),
            svg,
        }
    }
}

async fn save_template(State(app): State<Shared>, body: Result<Json<SaveTemplate>, JsonRejection>) -> Result<(StatusCode, Json<TemplateView>), ApiError> {
    let Json(req) = body.map_err(bad_json)?;
    let (candidate, seed) = with_candidate(&app, &req.candidate_id, |_, s, n| (s.entries[n].candidate.clone(), s.seed))?;
    let template = SavedTemplate { id: new_id(), label: req.label, created: now_secs(), seed, candidate };
    let mut store = app.templates();
    let saved = store.save(template).map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok((StatusCode::CREATED, Json(TemplateView::of(saved, None))))
}

async fn list_templates(State(app): State<Shared>) -> Json<Vec<TemplateView>> {
    Json(app.templates().list().iter().map(|t| TemplateView::of(t, None)).collect())
}

fn find_template(app: &AppState, tid: &str) -> Result<SavedTemplate, ApiError> {
    app.templates().get(tid).cloned().ok_or_else(|| ApiError::NotFound(format!("template {tid}")))
}

async fn get_template(State(app): State<Shared>, Path(tid): Path<String>) -> Result<Json<TemplateView>, ApiError> {
    let t = find_template(&app, &tid)?;
    let svg = app.engine.render(&t.candidate, t.seed)?;
    Ok(Json(TemplateView::of(&t, Some(svg))))
}

/// Opens a new session holding the template's candidate, ready to refine.
async fn reload_template(State(app): State<Shared>, Path(tid): Path<String>) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let t = find_template(&app, &tid)?;
    let session = Session {
        statement: t.candidate.statement.clone(),
        group: t.candidate.group.clone(),
        seed: t.seed,
        weights: t.candidate.scores.weights,
        rule_outs: Vec::new(),
        entries: vec![Entry { candidate: t.candidate, parent: None, svg: None }],
        last_used: Instant::now(),
    };
    let view = open_session(&app, new_id(), session, 1).await?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn not_found() -> ApiError {
    ApiError::NotFound("no such endpoint".into())
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{sid}/candidates", get(list_candidates))
        .route("/api/sessions/{sid}/candidates/{cid}", get(get_candidate))
        .route("/api/sessions/{sid}/candidates/{cid}/refine", post(refine))
        .route("/api/assets/icons", get(search_icons))
        .route("/api/assets/palettes", get(search_palettes))
        .route("/api/templates", post(save_template).get(list_templates))
        .route("/api/templates/{tid}", get(get_template))
        .route("/api/templates/{tid}/sessions", post(reload_template))
        .route("/api/export/{file}", get(export))
        .fallback(not_found)
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: Shared) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
