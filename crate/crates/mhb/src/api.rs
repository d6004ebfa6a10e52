//! HTTP API. JSON in, JSON out; errors carry the machine-readable code.
//!
//! Authentication is a bearer token from `POST /session`. Every mutating
//! endpoint turns its request into one [`Mutation`] and hands it to the
//! store, which makes the single access decision; generated catalogs,
//! timetables and lecture documents are readable without a session.
//! Responses built from store data carry the snapshot revision they were
//! read from in the `X-Snapshot` header (and in the body where the body is
//! an envelope).

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequestParts, Path, Query, State as AxState};
use axum::http::request::Parts;
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::Router;
use mhb_core::access::Rule;
use mhb_core::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::clock::Clock;
use crate::error::ServiceError;
use crate::identity::IdentityProvider;
use crate::report::{self, Format};
use crate::session::Sessions;
use crate::store::Store;

pub const SNAPSHOT_HEADER: &str = "x-snapshot";

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<dyn Store>,
    pub sessions: Arc<Sessions>,
    pub identity: Arc<dyn IdentityProvider>,
    pub clock: Arc<dyn Clock>,
}

pub struct ApiError(pub ServiceError);

impl<E: Into<ServiceError>> From<E> for ApiError {
    fn from(e: E) -> Self {
        ApiError(e.into())
    }
}

pub fn status_of(e: &ServiceError) -> StatusCode {
    match e.code() {
        "VALIDATION_FAILED" | "DANGLING_REFERENCE" | "KIND_MISMATCH" | "UNKNOWN_KIND" => StatusCode::BAD_REQUEST,
        "NOT_FOUND" => StatusCode::NOT_FOUND,
        "STALE_VERSION" | "REFERENCED" | "DUPLICATE" | "INVALID_STATE" | "STORE_NOT_EMPTY" => StatusCode::CONFLICT,
        "FORBIDDEN" | "FORBIDDEN_FROZEN" => StatusCode::FORBIDDEN,
        "AUTH_FAILED" | "UNAUTHENTICATED" => StatusCode::UNAUTHORIZED,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let e = self.0;
        let mut body = json!({ "code": e.code(), "message": e.to_string() });
        match e.domain() {
            Some(Error::Forbidden(r)) => body["reason"] = json!(r.as_str()),
            Some(Error::ForbiddenFrozen) => body["reason"] = json!(Rule::Frozen.as_str()),
            Some(Error::StaleVersion { expected, actual }) => {
                body["expected_version"] = json!(expected);
                body["actual_version"] = json!(actual);
            }
            _ => {}
        }
        if matches!(e, ServiceError::Unauthenticated) {
            body["reason"] = json!(Rule::Unauthenticated.as_str());
        }
        (status_of(&e), axum::Json(json!({ "error": body }))).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

/// The authenticated person behind a request.
pub struct Caller(pub PersonId);

impl FromRequestParts<AppState> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, app: &AppState) -> Result<Self, Self::Rejection> {
        let token = parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .ok_or(ServiceError::Unauthenticated)?;
        let person = app
            .sessions
            .resolve(token.trim(), app.clock.now())
            .ok_or(ServiceError::Unauthenticated)?;
        // A person deleted after login has no rights left.
        if app.store.snapshot().person(person).is_err() {
            return Err(ServiceError::Unauthenticated.into());
        }
        Ok(Caller(person))
    }
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let body = if body.iter().all(u8::is_ascii_whitespace) { b"{}".as_slice() } else { body };
    serde_json::from_slice(body).map_err(|e| ServiceError::validation(format!("request body: {e}")).into())
}

fn with_snapshot(revision: u64, mut r: Response) -> Response {
    r.headers_mut()
        .insert(SNAPSHOT_HEADER, HeaderValue::from_str(&revision.to_string()).expect("digits"));
    r
}

fn json_at(revision: u64, status: StatusCode, body: Value) -> Response {
    with_snapshot(revision, (status, axum::Json(body)).into_response())
}

fn text_at(revision: u64, content_type: &'static str, body: String) -> Response {
    with_snapshot(revision, ([(header::CONTENT_TYPE, content_type)], body).into_response())
}

async fn commit(app: &AppState, caller: PersonId, mutation: Mutation, created: bool) -> ApiResult {
    let store = app.store.clone();
    let now = app.clock.now();
    let applied = tokio::task::spawn_blocking(move || store.apply(Actor::Person(caller), mutation, now))
        .await
        .map_err(|e| ServiceError::Io(std::io::Error::other(e)))??;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok(json_at(applied.revision, status, serde_json::to_value(&applied).expect("serializes")))
}

fn query_term(q: &HashMap<String, String>) -> Result<TermId, ApiError> {
    let t = q
        .get("term")
        .ok_or_else(|| ServiceError::validation("query parameter `term` is required"))?;
    Ok(t.parse::<TermId>()?)
}

fn query_opt<T: std::str::FromStr<Err = Error>>(q: &HashMap<String, String>, key: &str) -> Result<Option<T>, ApiError> {
    match q.get(key).filter(|v| !v.is_empty()) {
        Some(v) => Ok(Some(v.parse()?)),
        None => Ok(None),
    }
}

fn path_id<T: std::str::FromStr<Err = Error>>(raw: &str) -> Result<T, ApiError> {
    raw.parse().map_err(|_| ServiceError::Domain(Error::NotFound(format!("id `{raw}`"))).into())
}

fn entity_value(s: &mhb_core::State, r: &EntityRef) -> Result<Value, Error> {
    let v = match r {
        EntityRef::Institution(id) => serde_json::to_value(s.institution(*id)?),
        EntityRef::Person(id) => serde_json::to_value(s.person(*id)?),
        EntityRef::Program(id) => serde_json::to_value(s.program(*id)?),
        EntityRef::Category(id) => serde_json::to_value(s.category(*id)?),
        EntityRef::Module(id) => serde_json::to_value(s.module(*id)?),
        EntityRef::Topic(id) => serde_json::to_value(s.topic(*id)?),
        EntityRef::Lecture(id) => serde_json::to_value(s.lecture(*id)?),
        EntityRef::Term(id) => serde_json::to_value(s.term(id)?),
        EntityRef::Inclusion(id) => serde_json::to_value(s.inclusion(*id)?),
        EntityRef::Grant(id) => serde_json::to_value(s.grant(*id)?),
    };
    Ok(v.expect("entities serialize"))
}

fn list_values(s: &mhb_core::State, kind: EntityKind) -> Vec<Value> {
    fn all<'a, T: Serialize + 'a>(it: impl Iterator<Item = &'a T>) -> Vec<Value> {
        it.map(|x| serde_json::to_value(x).expect("entities serialize")).collect()
    }
    match kind {
        EntityKind::Institution => all(s.institutions()),
        EntityKind::Person => all(s.persons()),
        EntityKind::Program => all(s.programs()),
        EntityKind::Category => all(s.categories()),
        EntityKind::Module => all(s.modules()),
        EntityKind::Topic => all(s.topics()),
        EntityKind::Lecture => all(s.lectures()),
        EntityKind::Term => all(s.terms()),
        EntityKind::Inclusion => all(s.inclusions()),
        EntityKind::Grant => all(s.grants()),
    }
}

// ---- session ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LoginRequest {
    login_name: String,
    credential: String,
}

async fn login(AxState(app): AxState<AppState>, body: Bytes) -> ApiResult {
    let req: LoginRequest = parse(&body)?;
    let snap = app.store.snapshot();
    let person = snap
        .person_by_login(&req.login_name)
        .filter(|_| app.identity.verify(&req.login_name, &req.credential))
        .ok_or(ServiceError::AuthFailed)?;
    let session = app.sessions.open(person.id, app.clock.now());
    Ok((StatusCode::CREATED, axum::Json(session)).into_response())
}

async fn logout(headers: HeaderMap, AxState(app): AxState<AppState>, _c: Caller) -> ApiResult {
    if let Some(t) = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
    {
        app.sessions.close(t.trim());
    }
    Ok(StatusCode::NO_CONTENT.into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CredentialRequest {
    credential: String,
}

/// Set a login's credential: administrators for anyone, persons for
/// themselves. Lives in the identity provider, not in the audited state.
async fn set_credential(
    AxState(app): AxState<AppState>,
    Caller(caller): Caller,
    Path(login_name): Path<String>,
    body: Bytes,
) -> ApiResult {
    let req: CredentialRequest = parse(&body)?;
    let snap = app.store.snapshot();
    let target = snap
        .person_by_login(&login_name)
        .ok_or_else(|| Error::NotFound(format!("login `{login_name}`")))?;
    if !snap.is_admin(caller) && target.id != caller {
        return Err(Error::Forbidden(Rule::AdminOnly).into());
    }
    if req.credential.is_empty() {
        return Err(ServiceError::validation("credential must not be empty").into());
    }
    app.identity.set_credential(&login_name, &req.credential)?;
    Ok(StatusCode::NO_CONTENT.into_response())
}

// ---- generic entity CRUD ----

async fn list(app: AppState, kind: EntityKind) -> ApiResult {
    let snap = app.store.snapshot();
    let items = list_values(&snap, kind);
    Ok(json_at(snap.revision(), StatusCode::OK, json!({ "snapshot": snap.revision(), "items": items })))
}

async fn read(app: AppState, caller: PersonId, kind: EntityKind, id: String) -> ApiResult {
    let snap = app.store.snapshot();
    let r = EntityRef::parse(kind, &id).map_err(|_| Error::NotFound(format!("{kind} `{id}`")))?;
    let item = entity_value(&snap, &r)?;
    let can_edit = snap.can_edit(caller, &r)?;
    Ok(json_at(
        snap.revision(),
        StatusCode::OK,
        json!({ "snapshot": snap.revision(), "item": item, "can_edit": can_edit }),
    ))
}

async fn create(app: AppState, caller: PersonId, kind: EntityKind, body: Bytes) -> ApiResult {
    let fields: Value = parse(&body)?;
    let entity: NewEntity = serde_json::from_value(json!({ "kind": kind.as_str(), "fields": fields }))
        .map_err(|e| ServiceError::validation(format!("{kind}: {e}")))?;
    commit(&app, caller, Mutation::Create { entity }, true).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UpdateRequest {
    expected_version: u64,
    fields: Value,
}

async fn update(app: AppState, caller: PersonId, kind: EntityKind, id: String, body: Bytes) -> ApiResult {
    let target = EntityRef::parse(kind, &id).map_err(|_| Error::NotFound(format!("{kind} `{id}`")))?;
    let req: UpdateRequest = parse(&body)?;
    let patch: EntityPatch = serde_json::from_value(json!({ "kind": kind.as_str(), "fields": req.fields }))
        .map_err(|e| ServiceError::validation(format!("{kind} patch: {e}")))?;
    commit(
        &app,
        caller,
        Mutation::Update {
            target,
            expected_version: req.expected_version,
            patch,
        },
        false,
    )
    .await
}

async fn delete(app: AppState, caller: PersonId, kind: EntityKind, id: String, q: HashMap<String, String>) -> ApiResult {
    let target = EntityRef::parse(kind, &id).map_err(|_| Error::NotFound(format!("{kind} `{id}`")))?;
    let expected_version = q
        .get("expected_version")
        .ok_or_else(|| ServiceError::validation("query parameter `expected_version` is required"))?
        .parse()
        .map_err(|_| ServiceError::validation("expected_version must be a number"))?;
    commit(&app, caller, Mutation::Delete { target, expected_version }, false).await
}

/// Entity kinds with plain CRUD collections.
pub const CRUD_KINDS: [EntityKind; 8] = [
    EntityKind::Institution,
    EntityKind::Person,
    EntityKind::Program,
    EntityKind::Category,
    EntityKind::Module,
    EntityKind::Topic,
    EntityKind::Lecture,
    EntityKind::Term,
];

fn crud_routes(mut r: Router<AppState>) -> Router<AppState> {
    for kind in CRUD_KINDS {
        let collection = format!("/{}", kind.plural());
        let item = format!("/{}/{{id}}", kind.plural());
        r = r
            .route(
                &collection,
                get(move |AxState(app): AxState<AppState>, _c: Caller| list(app, kind)).post(
                    move |AxState(app): AxState<AppState>, Caller(c): Caller, body: Bytes| create(app, c, kind, body),
                ),
            )
            .route(
                &item,
                get(move |AxState(app): AxState<AppState>, Caller(c): Caller, Path(id): Path<String>| {
                    read(app, c, kind, id)
                })
                .patch(
                    move |AxState(app): AxState<AppState>, Caller(c): Caller, Path(id): Path<String>, body: Bytes| {
                        update(app, c, kind, id, body)
                    },
                )
                .delete(
                    move |AxState(app): AxState<AppState>,
                          Caller(c): Caller,
                          Path(id): Path<String>,
                          Query(q): Query<HashMap<String, String>>| delete(app, c, kind, id, q),
                ),
            );
    }
    r
}

// ---- grants ----

#[derive(Deserialize)]
struct GrantRequest {
    grantee: PersonId,
    #[serde(flatten)]
    role: Role,
}

async fn list_grants(AxState(app): AxState<AppState>, _c: Caller) -> ApiResult {
    list(app, EntityKind::Grant).await
}

async fn grant(AxState(app): AxState<AppState>, Caller(c): Caller, body: Bytes) -> ApiResult {
    let req: GrantRequest = parse(&body)?;
    commit(&app, c, Mutation::GrantRole { grantee: req.grantee, role: req.role }, true).await
}

async fn revoke_grant(AxState(app): AxState<AppState>, Caller(c): Caller, Path(id): Path<String>) -> ApiResult {
    let grant = path_id(&id)?;
    commit(&app, c, Mutation::RevokeRole { grant }, false).await
}

// ---- inclusions ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProposeRequest {
    module: ModuleId,
    program: ProgramId,
    category: CategoryId,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct DecideRequest {
    #[serde(default)]
    expected_version: Option<u64>,
}

async fn list_inclusions(AxState(app): AxState<AppState>, _c: Caller) -> ApiResult {
    list(app, EntityKind::Inclusion).await
}

async fn read_inclusion(AxState(app): AxState<AppState>, Caller(c): Caller, Path(id): Path<String>) -> ApiResult {
    read(app, c, EntityKind::Inclusion, id).await
}

async fn propose(AxState(app): AxState<AppState>, Caller(c): Caller, body: Bytes) -> ApiResult {
    let req: ProposeRequest = parse(&body)?;
    let m = Mutation::ProposeInclusion {
        module: req.module,
        program: req.program,
        category: req.category,
    };
    commit(&app, c, m, true).await
}

async fn acknowledge(AxState(app): AxState<AppState>, Caller(c): Caller, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let record = path_id(&id)?;
    let req: DecideRequest = parse(&body)?;
    let m = Mutation::AcknowledgeInclusion {
        record,
        expected_version: req.expected_version,
    };
    commit(&app, c, m, false).await
}

async fn revoke_inclusion(
    AxState(app): AxState<AppState>,
    Caller(c): Caller,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult {
    let record = path_id(&id)?;
    let req: DecideRequest = parse(&body)?;
    let m = Mutation::RevokeInclusion {
        record,
        expected_version: req.expected_version,
    };
    commit(&app, c, m, false).await
}

async fn inbox(AxState(app): AxState<AppState>, Caller(c): Caller) -> ApiResult {
    let snap = app.store.snapshot();
    let items: Vec<&InclusionRecord> = snap
        .inclusion_inbox(c)?
        .into_iter()
        .map(|id| snap.inclusion(id))
        .collect::<Result<_, _>>()?;
    Ok(json_at(snap.revision(), StatusCode::OK, json!({ "snapshot": snap.revision(), "items": items })))
}

async fn effective_modules(
    AxState(app): AxState<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult {
    let snap = app.store.snapshot();
    let program: ProgramId = path_id(&id)?;
    let term: Option<TermId> = query_opt(&q, "term")?;
    if let Some(t) = &term {
        snap.term(t)?;
    }
    let mut categories = Vec::new();
    for (cat, modules) in snap.effective_modules(program)? {
        let mut list = Vec::new();
        for m in modules {
            let mut entry = json!({ "id": m, "title": snap.module(m)?.title });
            if let Some(t) = &term {
                entry["lectures"] = json!(snap.resolve_module_lectures(m, t)?);
            }
            list.push(entry);
        }
        categories.push(json!({ "category": cat, "title": snap.category(cat)?.title, "modules": list }));
    }
    Ok(json_at(
        snap.revision(),
        StatusCode::OK,
        json!({ "snapshot": snap.revision(), "program": program, "term": term, "categories": categories }),
    ))
}

// ---- schedule ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DatesRequest {
    expected_version: u64,
    dates: Vec<LectureDate>,
}

async fn set_dates(AxState(app): AxState<AppState>, Caller(c): Caller, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let lecture = path_id(&id)?;
    let req: DatesRequest = parse(&body)?;
    let m = Mutation::SetLectureDates {
        lecture,
        expected_version: req.expected_version,
        dates: req.dates,
    };
    commit(&app, c, m, false).await
}

async fn conflicts(AxState(app): AxState<AppState>, _c: Caller, Query(q): Query<HashMap<String, String>>) -> ApiResult {
    let snap = app.store.snapshot();
    let scope = ConflictScope {
        term: Some(query_term(&q)?),
        program: query_opt(&q, "program")?,
        room: q.get("room").filter(|r| !r.is_empty()).cloned(),
    };
    let body = report::canonical_json(&report::conflicts(&snap, scope)?);
    Ok(text_at(snap.revision(), "application/json", body))
}

async fn validate_report(AxState(app): AxState<AppState>, _c: Caller) -> ApiResult {
    let snap = app.store.snapshot();
    Ok(text_at(snap.revision(), "application/json", report::canonical_json(&report::validate(&snap))))
}

async fn audit(AxState(app): AxState<AppState>, Caller(c): Caller) -> ApiResult {
    let snap = app.store.snapshot();
    if !snap.is_admin(c) {
        return Err(Error::Forbidden(Rule::AdminOnly).into());
    }
    Ok(json_at(
        snap.revision(),
        StatusCode::OK,
        json!({ "snapshot": snap.revision(), "entries": snap.audit_log() }),
    ))
}

// ---- exports and documents ----

async fn export_csv(AxState(app): AxState<AppState>, _c: Caller, Query(q): Query<HashMap<String, String>>) -> ApiResult {
    let snap = app.store.snapshot();
    let kind = q
        .get("kind")
        .ok_or_else(|| ServiceError::validation("query parameter `kind` is required"))?;
    let body = report::csv(&snap, kind, query_opt(&q, "institution")?, query_opt(&q, "term")?)?;
    Ok(text_at(snap.revision(), "text/csv; charset=utf-8", body))
}

fn format_of(q: &HashMap<String, String>) -> Result<Format, ApiError> {
    Ok(query_opt(q, "format")?.unwrap_or(Format::Json))
}

fn document(revision: u64, format: Format, body: String) -> Response {
    let ct = match format {
        Format::Json => "application/json",
        Format::Html => "text/html; charset=utf-8",
    };
    text_at(revision, ct, body)
}

async fn program_catalog(
    AxState(app): AxState<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult {
    let snap = app.store.snapshot();
    let format = format_of(&q)?;
    let body = report::program_catalog(&snap, path_id(&id)?, &query_term(&q)?, format)?;
    Ok(document(snap.revision(), format, body))
}

async fn institution_catalog(
    AxState(app): AxState<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult {
    let snap = app.store.snapshot();
    let format = format_of(&q)?;
    let body = report::semester_catalog(&snap, path_id(&id)?, &query_term(&q)?, format)?;
    Ok(document(snap.revision(), format, body))
}

async fn person_timetable(
    AxState(app): AxState<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult {
    let snap = app.store.snapshot();
    let format = format_of(&q)?;
    let body = report::timetable(&snap, path_id(&id)?, &query_term(&q)?, format)?;
    Ok(document(snap.revision(), format, body))
}

async fn lecture_document(AxState(app): AxState<AppState>, Path(id): Path<String>) -> ApiResult {
    let snap = app.store.snapshot();
    let body = snap.render_annotated_lecture_document(path_id(&id)?)?;
    Ok(text_at(snap.revision(), "text/plain; charset=utf-8", body))
}

async fn health(AxState(app): AxState<AppState>) -> ApiResult {
    let snap = app.store.snapshot();
    Ok(json_at(snap.revision(), StatusCode::OK, json!({ "status": "ok", "snapshot": snap.revision() })))
}

/// How an endpoint is guarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    /// Readable without a session.
    Public,
    /// Read that needs a session.
    Session,
    /// Changes the store; needs a session and an allow decision.
    Mutating,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoint {
    pub method: &'static str,
    pub path: String,
    pub access: Access,
}

/// The complete API surface, as registered by [`router`].
pub fn endpoints() -> Vec<Endpoint> {
    let e = |method, path: &str, access| Endpoint {
        method,
        path: path.to_string(),
        access,
    };
    let mut out = vec![
        e("GET", "/health", Access::Public),
        e("POST", "/session", Access::Public),
        e("DELETE", "/session", Access::Session),
        e("PUT", "/credentials/{login}", Access::Session),
    ];
    for kind in CRUD_KINDS {
        let c = format!("/{}", kind.plural());
        let i = format!("/{}/{{id}}", kind.plural());
        out.push(e("GET", &c, Access::Session));
        out.push(e("POST", &c, Access::Mutating));
        out.push(e("GET", &i, Access::Session));
        out.push(e("PATCH", &i, Access::Mutating));
        out.push(e("DELETE", &i, Access::Mutating));
    }
    out.extend([
        e("GET", "/grants", Access::Session),
        e("POST", "/grants", Access::Mutating),
        e("DELETE", "/grants/{id}", Access::Mutating),
        e("GET", "/inclusions", Access::Session),
        e("POST", "/inclusions", Access::Mutating),
        e("GET", "/inclusions/{id}", Access::Session),
        e("POST", "/inclusions/{id}/ack", Access::Mutating),
        e("POST", "/inclusions/{id}/revoke", Access::Mutating),
        e("GET", "/inbox", Access::Session),
        e("GET", "/programs/{id}/effective-modules", Access::Public),
        e("PUT", "/lectures/{id}/dates", Access::Mutating),
        e("GET", "/conflicts", Access::Session),
        e("GET", "/reports/validate", Access::Session),
        e("GET", "/audit", Access::Session),
        e("GET", "/export/csv", Access::Session),
        e("GET", "/catalogs/program/{id}", Access::Public),
        e("GET", "/catalogs/institution/{id}", Access::Public),
        e("GET", "/timetables/person/{id}", Access::Public),
        e("GET", "/lectures/{id}/document", Access::Public),
    ]);
    out
}

pub fn router(app: AppState) -> Router {
    let r = Router::new()
        .route("/health", get(health))
        .route("/session", post(login).delete(logout))
        .route("/credentials/{login}", put(set_credential))
        .route("/grants", get(list_grants).post(grant))
        .route("/grants/{id}", axum::routing::delete(revoke_grant))
        .route("/inclusions", get(list_inclusions).post(propose))
        .route("/inclusions/{id}", get(read_inclusion))
        .route("/inclusions/{id}/ack", post(acknowledge))
        .route("/inclusions/{id}/revoke", post(revoke_inclusion))
        .route("/inbox", get(inbox))
        .route("/programs/{id}/effective-modules", get(effective_modules))
        .route("/lectures/{id}/dates", put(set_dates))
        .route("/lectures/{id}/document", get(lecture_document))
        .route("/conflicts", get(conflicts))
        .route("/reports/validate", get(validate_report))
        .route("/audit", get(audit))
        .route("/export/csv", get(export_csv))
        .route("/catalogs/program/{id}", get(program_catalog))
        .route("/catalogs/institution/{id}", get(institution_catalog))
        .route("/timetables/person/{id}", get(person_timetable));
    crud_routes(r).with_state(app)
}
