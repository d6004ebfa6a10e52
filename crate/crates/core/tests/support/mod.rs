//! A small operator-side builder for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use mhb_core::*;

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

pub struct B {
    pub s: State,
    pub now: Timestamp,
}

impl Default for B {
    fn default() -> Self {
        B {
            s: State::new(),
            now: date(2008, 1, 10).start_timestamp(),
        }
    }
}

impl B {
    fn create(&mut self, e: NewEntity) -> EntityRef {
        self.s
            .apply(Actor::System, Mutation::Create { entity: e }, self.now)
            .unwrap()
            .entity
    }

    pub fn person(&mut self, name: &str) -> PersonId {
        match self.create(NewEntity::Person(Person {
            id: PersonId(0),
            version: 0,
            display_name: name.into(),
            login_name: name.to_lowercase().replace(' ', "."),
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

    pub fn topic(&mut self, title: &str, assignments: BTreeMap<TermId, BTreeSet<LectureId>>) -> TopicId {
        match self.create(NewEntity::Topic(Topic {
            id: TopicId(0),
            version: 0,
            title: title.into(),
            assignments,
        })) {
            EntityRef::Topic(t) => t,
            _ => unreachable!(),
        }
    }

    pub fn module(
        &mut self,
        title: &str,
        institution: InstitutionId,
        responsible: PersonId,
        lectures: &[LectureId],
        topics: &[TopicId],
    ) -> ModuleId {
        match self.create(NewEntity::Module(Module {
            id: ModuleId(0),
            version: 0,
            title: title.into(),
            description: String::new(),
            institution,
            responsible,
            lecturers: BTreeSet::new(),
            lectures: lectures.iter().copied().collect(),
            topics: topics.iter().copied().collect(),
            attributes: BTreeMap::new(),
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

    pub fn grant(&mut self, grantee: PersonId, role: Role) {
        self.s
            .apply(Actor::System, Mutation::GrantRole { grantee, role }, self.now)
            .unwrap();
    }

    pub fn act(&mut self, who: PersonId, m: Mutation) -> Result<Applied> {
        self.s.apply(Actor::Person(who), m, self.now)
    }

    /// Propose as `proposer`, then acknowledge as `acker` if given.
    pub fn include(
        &mut self,
        proposer: PersonId,
        acker: Option<PersonId>,
        module: ModuleId,
        program: ProgramId,
        category: CategoryId,
    ) -> InclusionId {
        let id = match self
            .act(proposer, Mutation::ProposeInclusion { module, program, category })
            .unwrap()
            .entity
        {
            EntityRef::Inclusion(i) => i,
            _ => unreachable!(),
        };
        if let Some(a) = acker {
            self.act(a, Mutation::AcknowledgeInclusion { record: id, expected_version: None })
                .unwrap();
        }
        id
    }
}
