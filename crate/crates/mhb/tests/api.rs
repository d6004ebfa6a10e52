mod common;

use std::collections::BTreeSet;

use axum::http::{Method, StatusCode};
use common::*;
use mhb::api::{endpoints, Access};
use mhb::store::Store;
use mhb_core::*;
use serde_json::{json, Value};

fn api() -> (Api, Campus) {
    let (w, c) = campus();
    (Api::over(w.s, ts(2008, 1, 10)), c)
}

/// Fill `{id}` / `{login}` placeholders with entities that exist in the
/// campus fixture, so a request reaches the access decision.
fn concrete(path: &str, c: &Campus, grant: GrantId) -> String {
    let id = match path.split('/').nth(1).unwrap() {
        "institutions" => c.i1.to_string(),
        "persons" => c.editor.to_string(),
        "programs" => c.p1.to_string(),
        "categories" => c.c1.to_string(),
        "modules" => c.m1.to_string(),
        "topics" => "999".into(),
        "lectures" => c.l1.to_string(),
        "terms" => c.term.to_string(),
        "inclusions" => c.inc1.to_string(),
        "grants" => grant.to_string(),
        "catalogs" if path.contains("institution") => c.i1.to_string(),
        "catalogs" => c.p1.to_string(),
        "timetables" => c.editor.to_string(),
        _ => "1".into(),
    };
    path.replace("{id}", &id).replace("{login}", "editor")
}

/// A well-formed body for each mutating endpoint in the campus fixture.
fn mutation_body(method: &str, path: &str, c: &Campus, version: u64) -> Option<Value> {
    let body = match (method, path) {
        ("POST", "/institutions") => json!({"name": "New", "head": c.tt, "members": [c.tt]}),
        ("POST", "/persons") => json!({"display_name": "N", "login_name": "n"}),
        ("POST", "/programs") => json!({"title": "P", "kind": "TWO_CYCLE", "dean": c.tt}),
        ("POST", "/categories") => json!({"title": "C", "program": c.p1}),
        ("POST", "/modules") => json!({"title": "M", "institution": c.i1, "responsible": c.tt}),
        ("POST", "/topics") => json!({"title": "T"}),
        ("POST", "/lectures") => json!({"title": "L", "institution": c.i1, "term": "2008S"}),
        ("POST", "/terms") => json!({"id": "2009W", "schedule_freeze_date": "2009-11-01"}),
        ("PATCH", p) => {
            let fields = match p.split('/').nth(1).unwrap() {
                "institutions" => json!({"name": "Renamed"}),
                "persons" => json!({"display_name": "Renamed"}),
                "terms" => json!({"schedule_freeze_date": "2008-04-01"}),
                "categories" | "programs" | "modules" | "topics" | "lectures" => json!({"title": "Renamed"}),
                other => panic!("no patch for {other}"),
            };
            json!({"expected_version": version, "fields": fields})
        }
        ("POST", "/grants") => json!({"grantee": c.tt, "role": "INSTITUTION_EDITOR", "scope": c.i1}),
        ("POST", "/inclusions") => json!({"module": c.m1, "program": c.p1, "category": c.c2}),
        ("POST", _) => json!({}),
        ("PUT", "/lectures/{id}/dates") => json!({
            "expected_version": version,
            "dates": [{"on": "Wed", "start": "08:00", "end": "09:00", "room": "R9"}]
        }),
        _ => return None,
    };
    Some(body)
}

#[tokio::test]
async fn health_is_public_and_carries_snapshot() {
    let (api, _) = api();
    let r = api.get("/health", None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.snapshot, Some(api.store.snapshot().revision()));
    assert_eq!(r.json()["status"], "ok");
}

#[tokio::test]
async fn login_rejects_bad_credentials() {
    let (api, _) = api();
    api.login("editor").await;
    for (login, cred) in [("editor", "wrong"), ("nobody", "secret"), ("dean", "secret")] {
        let r = api
            .call(Method::POST, "/session", None, Some(json!({"login_name": login, "credential": cred})))
            .await;
        assert_eq!(r.status, StatusCode::UNAUTHORIZED, "{login}");
        assert_eq!(r.code(), "AUTH_FAILED");
    }
}

#[tokio::test]
async fn session_expiry_and_logout() {
    let (api, _) = api();
    let token = api.login("editor").await;
    assert_eq!(api.get("/modules", Some(&token)).await.status, StatusCode::OK);

    api.clock.advance(365 * 86_400);
    let r = api.get("/modules", Some(&token)).await;
    assert_eq!(r.status, StatusCode::UNAUTHORIZED);
    assert_eq!(r.code(), "UNAUTHENTICATED");

    let token = api.login("editor").await;
    let r = api.call(Method::DELETE, "/session", Some(&token), None).await;
    assert_eq!(r.status, StatusCode::NO_CONTENT);
    assert_eq!(api.get("/modules", Some(&token)).await.status, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn every_listed_route_is_served() {
    let (api, c) = api();
    let token = api.login("admin").await;
    let grant = api.store.snapshot().grants().next().unwrap().id;
    for e in endpoints() {
        let uri = concrete(&e.path, &c, grant);
        let uri = if uri.contains('?') { uri } else { format!("{uri}?term=2008S&kind=modules&expected_version=1") };
        let method: Method = e.method.parse().unwrap();
        let r = api.call(method, &uri, Some(&token), Some(json!({}))).await;
        // Unrouted paths come back as bare 404/405 without an error body.
        assert_ne!(r.status, StatusCode::METHOD_NOT_ALLOWED, "{} {}", e.method, e.path);
        assert!(
            r.status != StatusCode::NOT_FOUND || !r.body.is_empty(),
            "{} {} is not routed",
            e.method,
            e.path
        );
    }
}

#[tokio::test]
async fn protected_endpoints_need_a_session() {
    let (api, c) = api();
    let grant = api.store.snapshot().grants().next().unwrap().id;
    let before = api.store.snapshot().revision();
    for e in endpoints() {
        let uri = format!("{}?term=2008S&kind=modules&expected_version=1", concrete(&e.path, &c, grant));
        let method: Method = e.method.parse().unwrap();
        let body = mutation_body(e.method, &e.path, &c, 1);
        let r = api.call(method, &uri, None, body).await;
        match e.access {
            Access::Public => assert_ne!(r.status, StatusCode::UNAUTHORIZED, "{} {}", e.method, e.path),
            Access::Session | Access::Mutating => {
                assert_eq!(r.status, StatusCode::UNAUTHORIZED, "{} {}", e.method, e.path);
                assert_eq!(r.code(), "UNAUTHENTICATED");
            }
        }
    }
    assert_eq!(api.store.snapshot().revision(), before);
}

/// Every mutating endpoint reaches the access decision: a person with no
/// authority over anything in the request is refused with FORBIDDEN and
/// nothing is committed or audited.
#[tokio::test]
async fn mutating_endpoints_are_all_guarded() {
    let (api, c) = api();
    let s = api.store.snapshot();
    let grant = s.grants().find(|g| g.role == Role::InstitutionEditor(c.i1)).unwrap().id;
    // tt holds only TIMETABLE_PERSON(L1); use another lecture's schedule.
    let token = api.login("tt").await;
    // A record still waiting for the program side, so acknowledging it is a valid transition.
    let editor = api.login("editor").await;
    let pending = api
        .call(Method::POST, "/inclusions", Some(&editor), Some(json!({"module": c.m1, "program": c.p1, "category": c.c2})))
        .await
        .json()["entity"]["id"]
        .as_u64()
        .unwrap();
    let mutating: Vec<_> = endpoints().into_iter().filter(|e| e.access == Access::Mutating).collect();
    assert_eq!(mutating.len(), 30);
    for e in &mutating {
        let snap = api.store.snapshot();
        let mut uri = concrete(&e.path, &c, grant);
        if e.path == "/lectures/{id}/dates" {
            uri = e.path.replace("{id}", &c.l2.to_string());
        }
        if e.path == "/inclusions/{id}/ack" {
            uri = e.path.replace("{id}", &pending.to_string());
        }
        let target_version = |u: &str| -> u64 {
            let mut parts = u.trim_start_matches('/').split('/');
            let kind = EntityKind::from_plural(parts.next().unwrap()).unwrap();
            match parts.next() {
                Some(id) => EntityRef::parse(kind, id)
                    .ok()
                    .and_then(|r| snap.version_of(&r).ok().flatten())
                    .unwrap_or(1),
                None => 1,
            }
        };
        let version = target_version(&uri);
        if e.method == "DELETE" {
            uri = format!("{uri}?expected_version={version}");
        }
        let body = mutation_body(e.method, &e.path, &c, version);
        let r = api.call(e.method.parse().unwrap(), &uri, Some(&token), body).await;
        let topic = e.path.starts_with("/topics/");
        if topic {
            // No such topic exists; missing targets are reported before any decision.
            assert_eq!(r.status, StatusCode::NOT_FOUND, "{} {}: {}", e.method, e.path, r.text());
        } else {
            assert_eq!(r.status, StatusCode::FORBIDDEN, "{} {}: {}", e.method, e.path, r.text());
            assert_eq!(r.code(), "FORBIDDEN");
            assert!(r.json()["error"]["reason"].as_str().is_some_and(|s| !s.is_empty()));
        }
        let after = api.store.snapshot();
        assert_eq!(after.revision(), snap.revision(), "{} {}", e.method, e.path);
        assert_eq!(after.audit_log().len(), snap.audit_log().len());
    }
}

#[tokio::test]
async fn allowed_mutation_is_audited_once() {
    let (api, c) = api();
    let token = api.login("editor").await;
    let audit_before = api.store.snapshot().audit_log().len();
    let r = api
        .call(
            Method::PATCH,
            &format!("/modules/{}", c.m1),
            Some(&token),
            Some(json!({"expected_version": 1, "fields": {"title": "Foundations of CS"}})),
        )
        .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text());
    let body = r.json();
    assert_eq!(body["new_version"], 2);
    assert_eq!(body["decision"]["reason"], "institution-editor");
    let s = api.store.snapshot();
    assert_eq!(r.snapshot, Some(s.revision()));
    assert_eq!(s.audit_log().len(), audit_before + 1);
    let last = s.audit_log().last().unwrap();
    assert_eq!(last.actor, Actor::Person(c.editor));
    assert_eq!(last.operation, "update");
    assert_eq!((last.old_version, last.new_version), (Some(1), Some(2)));
}

#[tokio::test]
async fn wrong_institution_reason_surfaces() {
    let (api, c) = api();
    let token = api.login("editor").await;
    let r = api
        .call(
            Method::PATCH,
            &format!("/modules/{}", c.m2),
            Some(&token),
            Some(json!({"expected_version": 1, "fields": {"title": "x"}})),
        )
        .await;
    assert_eq!(r.status, StatusCode::FORBIDDEN);
    assert_eq!(r.json()["error"]["reason"], "wrong-institution");

    let r = api.get(&format!("/modules/{}", c.m2), Some(&token)).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["can_edit"]["allowed"], false);
    let r = api.get(&format!("/modules/{}", c.m1), Some(&token)).await;
    assert_eq!(r.json()["can_edit"]["allowed"], true);
    assert_eq!(r.json()["snapshot"].as_u64(), r.snapshot);
}

#[tokio::test]
async fn concurrent_updates_from_one_version() {
    let (api, c) = api();
    let token = api.login("editor").await;
    let uri = format!("/modules/{}", c.m1);
    let mk = |title: &str| json!({"expected_version": 1, "fields": {"title": title}});
    let (a, b) = tokio::join!(
        api.call(Method::PATCH, &uri, Some(&token), Some(mk("A"))),
        api.call(Method::PATCH, &uri, Some(&token), Some(mk("B")))
    );
    let mut statuses = [a.status, b.status];
    statuses.sort();
    assert_eq!(statuses, [StatusCode::OK, StatusCode::CONFLICT]);
    let loser = if a.status == StatusCode::CONFLICT { a } else { b };
    assert_eq!(loser.code(), "STALE_VERSION");
    assert_eq!(api.store.snapshot().module(c.m1).unwrap().version, 2);
}

#[tokio::test]
async fn create_validation_and_dangling_references() {
    let (api, c) = api();
    let token = api.login("admin").await;
    let r = api
        .call(Method::POST, "/institutions", Some(&token), Some(json!({"name": "", "head": c.tt, "members": [c.tt]})))
        .await;
    assert_eq!((r.status, r.code().as_str()), (StatusCode::BAD_REQUEST, "VALIDATION_FAILED"));
    let r = api
        .call(Method::POST, "/modules", Some(&token), Some(json!({"title": "M", "institution": 999, "responsible": c.tt})))
        .await;
    assert_eq!((r.status, r.code().as_str()), (StatusCode::BAD_REQUEST, "DANGLING_REFERENCE"));
    let r = api
        .call(Method::POST, "/institutions", Some(&token), Some(json!({"name": "Inst A", "head": c.tt, "members": [c.tt]})))
        .await;
    assert_eq!(r.status, StatusCode::CREATED);
    assert_eq!(r.json()["new_version"], 1);
}

#[tokio::test]
async fn referenced_entities_are_not_deleted() {
    let (api, c) = api();
    let token = api.login("admin").await;
    let r = api
        .call(Method::DELETE, &format!("/institutions/{}?expected_version=1", c.i1), Some(&token), None)
        .await;
    assert_eq!((r.status, r.code().as_str()), (StatusCode::CONFLICT, "REFERENCED"));
    let r = api.call(Method::DELETE, "/modules/999?expected_version=1", Some(&token), None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn inclusion_round_trip_through_the_api() {
    let (api, c) = api();
    let outsider = api.login("outsider").await;
    let dean = api.login("dean").await;
    let editor = api.login("editor").await;

    // The editor offers M1 as an elective as well.
    let r = api
        .call(Method::POST, "/inclusions", Some(&editor), Some(json!({"module": c.m1, "program": c.p1, "category": c.c2})))
        .await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
    let record = r.json()["entity"]["id"].as_u64().unwrap();
    let read = api.get(&format!("/inclusions/{record}"), Some(&editor)).await.json();
    assert_eq!(read["item"]["state"], "PENDING");
    assert_eq!(read["item"]["lecturer_ack"], true);
    assert_eq!(read["item"]["dean_ack"], false);

    let inbox = api.get("/inbox", Some(&dean)).await.json();
    let ids: Vec<u64> = inbox["items"].as_array().unwrap().iter().map(|r| r["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, vec![record]);
    assert!(api.get("/inbox", Some(&editor)).await.json()["items"].as_array().unwrap().is_empty());

    let uri = format!("/programs/{}/effective-modules", c.p1);
    let before = api.get(&uri, None).await.json();
    assert_eq!(before["categories"][1]["modules"], json!([]));

    // The editor cannot acknowledge the module side twice.
    let r = api.call(Method::POST, &format!("/inclusions/{record}/ack"), Some(&editor), None).await;
    assert_eq!(r.status, StatusCode::FORBIDDEN);
    assert_eq!(r.json()["error"]["reason"], "side-already-acknowledged");

    let r = api
        .call(Method::POST, &format!("/inclusions/{record}/ack"), Some(&outsider), Some(json!({"expected_version": 1})))
        .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text());
    let after = api.get(&uri, None).await.json();
    assert_eq!(after["categories"][1]["modules"][0]["id"], c.m1.0);

    let cat = api.get(&format!("/catalogs/program/{}?term=2008S&format=json", c.p1), None).await;
    assert_eq!(cat.status, StatusCode::OK);
    let doc = cat.json();
    assert_eq!(doc["body"]["categories"][1]["modules"][0]["title"], "Foundations");

    let r = api.call(Method::POST, &format!("/inclusions/{record}/revoke"), Some(&dean), None).await;
    assert_eq!(r.status, StatusCode::OK);
    let r = api.call(Method::POST, &format!("/inclusions/{record}/revoke"), Some(&dean), None).await;
    assert_eq!((r.status, r.code().as_str()), (StatusCode::CONFLICT, "INVALID_STATE"));
    assert_eq!(api.get(&uri, None).await.json()["categories"][1]["modules"], json!([]));
}

#[tokio::test]
async fn published_documents_are_public() {
    let (api, c) = api();
    let html = api.get(&format!("/catalogs/program/{}?term=2008S&format=html", c.p1), None).await;
    assert_eq!(html.status, StatusCode::OK);
    assert!(html.content_type.as_deref().unwrap().starts_with("text/html"));
    assert!(html.text().contains("Foundations"));

    let sem = api.get(&format!("/catalogs/institution/{}?term=2008S", c.i2), None).await;
    assert_eq!(sem.json()["body"]["lectures"][0]["title"], "Analysis");

    let tt = api.get(&format!("/timetables/person/{}?term=2008S", c.editor), None).await;
    assert_eq!(tt.json()["body"]["entries"][0]["lecture"], c.l1.0);

    let doc = api.get(&format!("/lectures/{}/document", c.l1), None).await;
    assert!(doc.text().starts_with("LECTURE: Algorithms\n"));

    let missing = api.get("/catalogs/program/999?term=2008S", None).await;
    assert_eq!((missing.status, missing.code().as_str()), (StatusCode::NOT_FOUND, "NOT_FOUND"));
    let bad = api.get(&format!("/catalogs/program/{}?term=2008S&format=pdf", c.p1), None).await;
    assert_eq!(bad.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn conflicts_and_csv_need_a_session() {
    let (api, c) = api();
    let token = api.login("tt").await;
    let r = api.get("/conflicts?term=2008S", Some(&token)).await;
    assert_eq!(r.status, StatusCode::OK);
    let report = r.json();
    let conflicts = report["conflicts"].as_array().unwrap();
    assert_eq!(conflicts.len(), 1, "{report}");
    assert_eq!(conflicts[0]["kind"], "ROOM_OVERLAP");
    assert_eq!(conflicts[0]["context"], json!({"type": "room", "id": "R1"}));
    assert_eq!(report["snapshot_version"].as_u64(), r.snapshot);

    let r = api.get("/conflicts?term=2008S&room=R2", Some(&token)).await;
    assert!(r.json()["conflicts"].as_array().unwrap().is_empty());

    let r = api.get("/export/csv?kind=persons", Some(&token)).await;
    assert!(r.content_type.as_deref().unwrap().starts_with("text/csv"));
    assert!(r.text().starts_with("id,display_name,login_name\n"));
    let r = api.get("/export/csv?kind=rooms", Some(&token)).await;
    assert_eq!((r.status, r.code().as_str()), (StatusCode::BAD_REQUEST, "UNKNOWN_KIND"));
    let r = api.get(&format!("/export/csv?kind=lectures&institution={}", c.i3), Some(&token)).await;
    assert_eq!(r.text().lines().count(), 2);
}

#[tokio::test]
async fn audit_and_validation_reports() {
    let (api, _) = api();
    let admin = api.login("admin").await;
    let editor = api.login("editor").await;
    let r = api.get("/audit", Some(&editor)).await;
    assert_eq!((r.status, r.json()["error"]["reason"].as_str()), (StatusCode::FORBIDDEN, Some("admin-only")));
    let r = api.get("/audit", Some(&admin)).await;
    assert_eq!(r.json()["entries"].as_array().unwrap().len(), api.store.snapshot().audit_log().len());

    let r = api.get("/reports/validate", Some(&editor)).await;
    assert_eq!(r.json()["findings"], json!([]));
}

#[tokio::test]
async fn credentials_are_set_by_admin_or_self() {
    let (api, _) = api();
    let editor = api.login("editor").await;
    let put = |login: &str, token: String| {
        let uri = format!("/credentials/{login}");
        let api = &api;
        async move { api.call(Method::PUT, &uri, Some(&token), Some(json!({"credential": "new"}))).await }
    };
    assert_eq!(put("editor", editor.clone()).await.status, StatusCode::NO_CONTENT);
    assert_eq!(put("dean", editor.clone()).await.status, StatusCode::FORBIDDEN);
    let admin = api.login("admin").await;
    assert_eq!(put("dean", admin).await.status, StatusCode::NO_CONTENT);
    let r = api
        .call(Method::POST, "/session", None, Some(json!({"login_name": "dean", "credential": "new"})))
        .await;
    assert_eq!(r.status, StatusCode::CREATED);
}

#[tokio::test]
async fn grants_via_api() {
    let (api, c) = api();
    let head = api.login("head").await;
    let editor = api.login("editor").await;
    let body = json!({"grantee": c.tt, "role": "INSTITUTION_EDITOR", "scope": c.i1});
    let r = api.call(Method::POST, "/grants", Some(&editor), Some(body.clone())).await;
    assert_eq!(r.json()["error"]["reason"], "not-head");
    let r = api.call(Method::POST, "/grants", Some(&head), Some(body)).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
    let id = r.json()["entity"]["id"].as_u64().unwrap();
    let listed: BTreeSet<u64> = api.get("/grants", Some(&editor)).await.json()["items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|g| g["id"].as_u64().unwrap())
        .collect();
    assert!(listed.contains(&id));
    let r = api.call(Method::DELETE, &format!("/grants/{id}"), Some(&head), None).await;
    assert_eq!(r.status, StatusCode::OK);
    let r = api.call(Method::DELETE, &format!("/grants/{id}"), Some(&head), None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}
