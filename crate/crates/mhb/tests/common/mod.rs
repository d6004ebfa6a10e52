//! Fixture helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use mhb::api::{self, AppState};
use mhb::clock::{Clock, ManualClock};
use mhb::identity::{IdentityProvider, LocalCredentials};
use mhb::session::Sessions;
use mhb::store::{LocalStore, Store};
use mhb_core::*;
use serde_json::Value;
use tower::ServiceExt;

pub fn ts(y: i32, m: u8, d: u8) -> Timestamp {
    Date::new(y, m, d).unwrap().start_timestamp()
}

pub fn date(y: i32, m: u8, d: u8) -> Date {
    Date::new(y, m, d).unwrap()
}

pub fn term(id: &str) -> TermId {
    TermId::new(id).unwrap()
}

pub fn slot(on: &str, start: &str, end: &str, room: &str) -> LectureDate {
    LectureDate {
        on: on.parse().unwrap(),
        start: start.parse().unwrap(),
        end: end.parse().unwrap(),
        room: room.into(),
    }
}

/// Builds states through the ordinary write path, as the operator.
pub struct World {
    pub s: State,
    pub now: Timestamp,
}

impl Default for World {
    fn default() -> Self {
        World {
            s: State::new(),
            now: ts(2008, 1, 10),
        }
    }
}

fn created(a: Applied) -> EntityRef {
    a.entity
}

impl World {
    pub fn sys(&mut self, m: Mutation) -> Applied {
        self.s.apply(Actor::System, m, self.now).unwrap()
    }

    pub fn create(&mut self, e: NewEntity) -> EntityRef {
        created(self.sys(Mutation::Create { entity: e }))
    }

    pub fn admin(&mut self, login: &str) -> PersonId {
        let a = self.sys(Mutation::BootstrapAdmin {
            login_name: login.into(),
            display_name: login.to_uppercase(),
        });
        match a.entity {
            EntityRef::Person(p) => p,
            _ => unreachable!(),
        }
    }

    pub fn person(&mut self, login: &str) -> PersonId {
        match self.create(NewEntity::Person(Person {
            id: PersonId(0),
            version: 0,
            display_name: format!("Dr. {login}"),
            login_name: login.into(),
        })) {
            EntityRef::Person(p) => p,
            _ => unreachable!(),
        }
    }

    pub fn institution(&mut self, name: &str, head: PersonId, members: &[PersonId]) -> InstitutionId {
        let mut m: BTreeSet<PersonId> = members.iter().copied().collect();
        m.insert(head);
        match self.create(NewEntity::Institution(Institution {
            id: InstitutionId(0),
            version: 0,
            name: name.into(),
            head,
            members: m,
        })) {
            EntityRef::Institution(i) => i,
            _ => unreachable!(),
        }
    }

    pub fn term(&mut self, id: &str, freeze: Date) -> TermId {
        self.create(NewEntity::Term(Term {
            id: term(id),
            version: 0,
            schedule_freeze_date: freeze,
        }));
        term(id)
    }

    pub fn program(&mut self, title: &str, kind: ProgramKind, dean: PersonId, lectures: &[LectureId]) -> ProgramId {
        match self.create(NewEntity::Program(StudyProgram {
            id: ProgramId(0),
            version: 0,
            title: title.into(),
            kind,
            dean,
            categories: vec![],
            lectures: lectures.iter().copied().collect(),
        })) {
            EntityRef::Program(p) => p,
            _ => unreachable!(),
        }
    }

    pub fn category(&mut self, program: ProgramId, title: &str) -> CategoryId {
        match self.create(NewEntity::Category(Category {
            id: CategoryId(0),
            version: 0,
            title: title.into(),
            program,
        })) {
            EntityRef::Category(c) => c,
            _ => unreachable!(),
        }
    }

    pub fn module(
        &mut self,
        title: &str,
        institution: InstitutionId,
        responsible: PersonId,
        lecturers: &[PersonId],
        lectures: &[LectureId],
    ) -> ModuleId {
        match self.create(NewEntity::Module(Module {
            id: ModuleId(0),
            version: 0,
            title: title.into(),
            description: format!("About {title}."),
            institution,
            responsible,
            lecturers: lecturers.iter().copied().collect(),
            lectures: lectures.iter().copied().collect(),
            topics: BTreeSet::new(),
            attributes: [("credits".to_string(), "5".to_string())].into(),
        })) {
            EntityRef::Module(m) => m,
            _ => unreachable!(),
        }
    }

    pub fn lecture(
        &mut self,
        title: &str,
        institution: InstitutionId,
        lecturers: &[PersonId],
        term: &TermId,
        dates: Vec<LectureDate>,
    ) -> LectureId {
        match self.create(NewEntity::Lecture(Lecture {
            id: LectureId(0),
            version: 0,
            title: title.into(),
            description: String::new(),
            institution,
            lecturers: lecturers.iter().copied().collect(),
            term: term.clone(),
            dates,
        })) {
            EntityRef::Lecture(l) => l,
            _ => unreachable!(),
        }
    }

    pub fn grant(&mut self, grantee: PersonId, role: Role) -> GrantId {
        match self.sys(Mutation::GrantRole { grantee, role }).entity {
            EntityRef::Grant(g) => g,
            _ => unreachable!(),
        }
    }

    pub fn act(&mut self, who: PersonId, m: Mutation) -> Result<Applied> {
        self.s.apply(Actor::Person(who), m, self.now)
    }

    pub fn include(&mut self, who: PersonId, module: ModuleId, program: ProgramId, category: CategoryId) -> InclusionId {
        match self
            .act(who, Mutation::ProposeInclusion { module, program, category })
            .unwrap()
            .entity
        {
            EntityRef::Inclusion(i) => i,
            _ => unreachable!(),
        }
    }

    pub fn ack(&mut self, who: PersonId, record: InclusionId) {
        self.act(
            who,
            Mutation::AcknowledgeInclusion {
                record,
                expected_version: None,
            },
        )
        .unwrap();
    }
}

/// An in-process API over an in-memory store with a hand-driven clock.
pub struct Api {
    pub app: AppState,
    pub clock: Arc<ManualClock>,
    pub store: Arc<LocalStore>,
    pub identity: Arc<LocalCredentials>,
}

pub struct Reply {
    pub status: StatusCode,
    pub snapshot: Option<u64>,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| {
            panic!("not json ({e}): {}", String::from_utf8_lossy(&self.body))
        })
    }

    pub fn text(&self) -> String {
        String::from_utf8(self.body.clone()).unwrap()
    }

    pub fn code(&self) -> String {
        self.json()["error"]["code"].as_str().unwrap_or_default().to_string()
    }
}

impl Api {
    pub fn over(state: State, now: Timestamp) -> Api {
        let store = Arc::new(LocalStore::in_memory());
        store.import(state).unwrap();
        Self::with_store(store, now)
    }

    pub fn with_store(store: Arc<LocalStore>, now: Timestamp) -> Api {
        let clock = Arc::new(ManualClock::new(now));
        let identity = Arc::new(LocalCredentials::in_memory());
        let app = AppState {
            store: store.clone(),
            sessions: Arc::new(Sessions::new(365 * 86_400)),
            identity: identity.clone(),
            clock: clock.clone() as Arc<dyn Clock>,
        };
        Api {
            app,
            clock,
            store,
            identity,
        }
    }

    pub async fn call(&self, method: Method, uri: &str, token: Option<&str>, body: Option<Value>) -> Reply {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let body = match body {
            Some(v) => {
                req = req.header("content-type", "application/json");
                Body::from(serde_json::to_vec(&v).unwrap())
            }
            None => Body::empty(),
        };
        let resp = api::router(self.app.clone()).oneshot(req.body(body).unwrap()).await.unwrap();
        let status = resp.status();
        let snapshot = resp
            .headers()
            .get(api::SNAPSHOT_HEADER)
            .map(|v| v.to_str().unwrap().parse().unwrap());
        let content_type = resp
            .headers()
            .get("content-type")
            .map(|v| v.to_str().unwrap().to_string());
        let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        Reply {
            status,
            snapshot,
            content_type,
            body,
        }
    }

    pub async fn get(&self, uri: &str, token: Option<&str>) -> Reply {
        self.call(Method::GET, uri, token, None).await
    }

    /// Give `login` a credential and open a session for it.
    pub async fn login(&self, login: &str) -> String {
        self.identity.set_credential(login, "secret").unwrap();
        let r = self
            .call(
                Method::POST,
                "/session",
                None,
                Some(serde_json::json!({ "login_name": login, "credential": "secret" })),
            )
            .await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
        r.json()["token"].as_str().unwrap().to_string()
    }
}

/// Three institutions, two programs, six persons.
///
/// | person   | facts                                                        |
/// |----------|--------------------------------------------------------------|
/// | admin    | administrator                                                |
/// | head     | head of I1, dean of P2 (single-cycle)                        |
/// | editor   | member of I1, INSTITUTION_EDITOR(I1), runs M1 and teaches L1 |
/// | dean     | head of I2, dean of P1 (two-cycle), runs M2, teaches L2      |
/// | tt       | member of I2, TIMETABLE_PERSON(L1)                           |
/// | outsider | head of I3, INSTITUTION_EDITOR(I3), PROGRAM_RESPONSIBLE(P1), runs M3 |
///
/// M1 is acknowledged in P1/C1; L1 and L2 share room R1 on Monday.
pub struct Campus {
    pub admin: PersonId,
    pub head: PersonId,
    pub editor: PersonId,
    pub dean: PersonId,
    pub tt: PersonId,
    pub outsider: PersonId,
    pub i1: InstitutionId,
    pub i2: InstitutionId,
    pub i3: InstitutionId,
    pub p1: ProgramId,
    pub p2: ProgramId,
    pub c1: CategoryId,
    pub c2: CategoryId,
    pub m1: ModuleId,
    pub m2: ModuleId,
    pub m3: ModuleId,
    pub l1: LectureId,
    pub l2: LectureId,
    pub l3: LectureId,
    pub inc1: InclusionId,
    pub term: TermId,
    pub freeze: Date,
}

impl Campus {
    pub fn persons(&self) -> [PersonId; 6] {
        [self.admin, self.head, self.editor, self.dean, self.tt, self.outsider]
    }
}

pub fn campus() -> (World, Campus) {
    let mut w = World::default();
    let admin = w.admin("admin");
    let head = w.person("head");
    let editor = w.person("editor");
    let dean = w.person("dean");
    let tt = w.person("tt");
    let outsider = w.person("outsider");
    let i1 = w.institution("Institute of Informatics", head, &[editor]);
    let i2 = w.institution("Institute of Mathematics", dean, &[tt]);
    let i3 = w.institution("Institute of Physics", outsider, &[]);
    let freeze = date(2008, 3, 1);
    let t = w.term("2008S", freeze);
    let l1 = w.lecture("Algorithms", i1, &[editor], &t, vec![slot("Mon", "10:00", "12:00", "R1")]);
    let l2 = w.lecture("Analysis", i2, &[dean], &t, vec![slot("Mon", "11:00", "13:00", "R1")]);
    let l3 = w.lecture("Optics", i3, &[outsider], &t, vec![slot("Tue", "10:00", "12:00", "R2")]);
    let p1 = w.program("Computer Science (B.Sc.)", ProgramKind::TwoCycle, dean, &[]);
    let p2 = w.program("Mathematics (Diplom)", ProgramKind::SingleCycle, head, &[l2]);
    let c1 = w.category(p1, "Core");
    let c2 = w.category(p1, "Elective");
    let m1 = w.module("Foundations", i1, editor, &[editor], &[l1]);
    let m2 = w.module("Calculus", i2, dean, &[dean], &[l2]);
    let m3 = w.module("Waves", i3, outsider, &[outsider], &[l3]);

    w.act(head, Mutation::GrantRole { grantee: editor, role: Role::InstitutionEditor(i1) }).unwrap();
    w.act(outsider, Mutation::GrantRole { grantee: outsider, role: Role::InstitutionEditor(i3) }).unwrap();
    w.act(dean, Mutation::GrantRole { grantee: outsider, role: Role::ProgramResponsible(p1) }).unwrap();
    let inc1 = w.include(editor, m1, p1, c1);
    w.ack(dean, inc1);
    w.act(dean, Mutation::GrantRole { grantee: tt, role: Role::TimetablePerson(l1) }).unwrap();

    let c = Campus {
        admin,
        head,
        editor,
        dean,
        tt,
        outsider,
        i1,
        i2,
        i3,
        p1,
        p2,
        c1,
        c2,
        m1,
        m2,
        m3,
        l1,
        l2,
        l3,
        inc1,
        term: t,
        freeze,
    };
    (w, c)
}
