//! The store-wide state value: every entity, grant, inclusion record and the
//! audit log, plus the CRUD rules that keep references intact.
//!
//! A `State` is a snapshot. Callers that need concurrency clone it (or share
//! it behind an `Arc`) and apply mutations to a private copy; see
//! [`crate::mutation`] for the single entry point that authorizes and
//! applies a change.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::access::RoleGrant;
use crate::error::{Error, Result};
use crate::ids::*;
use crate::inclusion::InclusionRecord;
use crate::model::*;
use crate::mutation::AuditEntry;
use crate::time::Timestamp;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct State {
    /// Snapshot token; incremented by every committed mutation.
    pub(crate) revision: u64,
    /// Commit time of the latest mutation. Generated documents are stamped
    /// with it so output depends on the snapshot alone.
    pub(crate) last_modified: Timestamp,
    pub(crate) next_id: u64,
    pub(crate) admins: BTreeSet<PersonId>,
    pub(crate) persons: BTreeMap<PersonId, Person>,
    pub(crate) institutions: BTreeMap<InstitutionId, Institution>,
    pub(crate) terms: BTreeMap<TermId, Term>,
    pub(crate) programs: BTreeMap<ProgramId, StudyProgram>,
    pub(crate) categories: BTreeMap<CategoryId, Category>,
    pub(crate) modules: BTreeMap<ModuleId, Module>,
    pub(crate) topics: BTreeMap<TopicId, Topic>,
    pub(crate) lectures: BTreeMap<LectureId, Lecture>,
    pub(crate) inclusions: BTreeMap<InclusionId, InclusionRecord>,
    pub(crate) grants: BTreeMap<GrantId, RoleGrant>,
    pub(crate) audit: Vec<AuditEntry>,
}

/// One broken structural rule of a study program.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub entity: EntityRef,
    pub rule: ProgramRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProgramRule {
    /// Single-cycle program lists a category, or two-cycle program lists a
    /// lecture directly.
    KindContentMismatch,
    /// Listed category records a different owning program.
    CategoryOwnership,
    /// Category claims the program but is not listed by it.
    UnlistedCategory,
    /// Category listed more than once.
    DuplicateCategory,
    /// Listed category or lecture does not exist.
    DanglingContent,
    DanglingDean,
}

impl ProgramRule {
    pub fn as_str(self) -> &'static str {
        match self {
            ProgramRule::KindContentMismatch => "kind-content-mismatch",
            ProgramRule::CategoryOwnership => "category-ownership",
            ProgramRule::UnlistedCategory => "unlisted-category",
            ProgramRule::DuplicateCategory => "duplicate-category",
            ProgramRule::DanglingContent => "dangling-content",
            ProgramRule::DanglingDean => "dangling-dean",
        }
    }
}

/// Structural check of one program against the categories that either are
/// listed by it or claim it as their owner. Lookups are closures so the
/// check can run on values that were never admitted to a [`State`].
pub fn validate_program_structure<'a>(
    program: &StudyProgram,
    categories: impl IntoIterator<Item = &'a Category>,
    lecture_exists: impl Fn(LectureId) -> bool,
    person_exists: impl Fn(PersonId) -> bool,
) -> Vec<Violation> {
    let by_id: BTreeMap<CategoryId, &Category> =
        categories.into_iter().map(|c| (c.id, c)).collect();
    let mut out = BTreeSet::new();
    let mut push = |entity: EntityRef, rule: ProgramRule| {
        out.insert(Violation { entity, rule });
    };

    if !person_exists(program.dean) {
        push(EntityRef::Program(program.id), ProgramRule::DanglingDean);
    }
    match program.kind {
        ProgramKind::SingleCycle => {
            for &c in &program.categories {
                push(EntityRef::Category(c), ProgramRule::KindContentMismatch);
            }
        }
        ProgramKind::TwoCycle => {
            for &l in &program.lectures {
                push(EntityRef::Lecture(l), ProgramRule::KindContentMismatch);
            }
        }
    }
    let mut seen = BTreeSet::new();
    for &c in &program.categories {
        if !seen.insert(c) {
            push(EntityRef::Category(c), ProgramRule::DuplicateCategory);
        }
        match by_id.get(&c) {
            None => push(EntityRef::Category(c), ProgramRule::DanglingContent),
            Some(cat) if cat.program != program.id => {
                push(EntityRef::Category(c), ProgramRule::CategoryOwnership)
            }
            Some(_) => {}
        }
    }
    for cat in by_id.values() {
        if cat.program == program.id && !seen.contains(&cat.id) {
            push(EntityRef::Category(cat.id), ProgramRule::UnlistedCategory);
        }
    }
    for &l in &program.lectures {
        if !lecture_exists(l) {
            push(EntityRef::Lecture(l), ProgramRule::DanglingContent);
        }
    }
    out.into_iter().collect()
}

macro_rules! getter {
    ($name:ident, $iter:ident, $field:ident, $id:ty, $ty:ty, $label:literal) => {
        pub fn $name(&self, id: $id) -> Result<&$ty> {
            self.$field
                .get(&id)
                .ok_or_else(|| Error::not_found(format!(concat!($label, " {}"), id)))
        }

        pub fn $iter(&self) -> impl Iterator<Item = &$ty> + '_ {
            self.$field.values()
        }
    };
}

impl State {
    pub fn new() -> State {
        State {
            next_id: 1,
            ..State::default()
        }
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn last_modified(&self) -> Timestamp {
        self.last_modified
    }

    pub fn audit_log(&self) -> &[AuditEntry] {
        &self.audit
    }

    pub fn admins(&self) -> &BTreeSet<PersonId> {
        &self.admins
    }

    pub fn is_admin(&self, person: PersonId) -> bool {
        self.admins.contains(&person)
    }

    /// True when no entities, grants or records are stored.
    pub fn is_empty(&self) -> bool {
        self.persons.is_empty()
            && self.institutions.is_empty()
            && self.terms.is_empty()
            && self.programs.is_empty()
            && self.categories.is_empty()
            && self.modules.is_empty()
            && self.topics.is_empty()
            && self.lectures.is_empty()
            && self.inclusions.is_empty()
            && self.grants.is_empty()
    }

    getter!(person, persons, persons, PersonId, Person, "person");
    getter!(institution, institutions, institutions, InstitutionId, Institution, "institution");
    getter!(program, programs, programs, ProgramId, StudyProgram, "program");
    getter!(category, categories, categories, CategoryId, Category, "category");
    getter!(module, modules, modules, ModuleId, Module, "module");
    getter!(topic, topics, topics, TopicId, Topic, "topic");
    getter!(lecture, lectures, lectures, LectureId, Lecture, "lecture");
    getter!(inclusion, inclusions, inclusions, InclusionId, InclusionRecord, "inclusion");
    getter!(grant, grants, grants, GrantId, RoleGrant, "grant");

    pub fn term(&self, id: &TermId) -> Result<&Term> {
        self.terms
            .get(id)
            .ok_or_else(|| Error::not_found(format!("term {id}")))
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> + '_ {
        self.terms.values()
    }

    pub fn person_by_login(&self, login: &str) -> Option<&Person> {
        self.persons.values().find(|p| p.login_name == login)
    }

    pub fn exists(&self, r: &EntityRef) -> bool {
        match r {
            EntityRef::Institution(id) => self.institutions.contains_key(id),
            EntityRef::Person(id) => self.persons.contains_key(id),
            EntityRef::Program(id) => self.programs.contains_key(id),
            EntityRef::Category(id) => self.categories.contains_key(id),
            EntityRef::Module(id) => self.modules.contains_key(id),
            EntityRef::Topic(id) => self.topics.contains_key(id),
            EntityRef::Lecture(id) => self.lectures.contains_key(id),
            EntityRef::Term(id) => self.terms.contains_key(id),
            EntityRef::Inclusion(id) => self.inclusions.contains_key(id),
            EntityRef::Grant(id) => self.grants.contains_key(id),
        }
    }

    pub fn require(&self, r: &EntityRef) -> Result<()> {
        if self.exists(r) {
            Ok(())
        } else {
            Err(Error::not_found(r.to_string()))
        }
    }

    /// Current version of a versioned entity. Grants carry no version.
    pub fn version_of(&self, r: &EntityRef) -> Result<Option<u64>> {
        self.require(r)?;
        Ok(match r {
            EntityRef::Institution(id) => Some(self.institutions[id].version),
            EntityRef::Person(id) => Some(self.persons[id].version),
            EntityRef::Program(id) => Some(self.programs[id].version),
            EntityRef::Category(id) => Some(self.categories[id].version),
            EntityRef::Module(id) => Some(self.modules[id].version),
            EntityRef::Topic(id) => Some(self.topics[id].version),
            EntityRef::Lecture(id) => Some(self.lectures[id].version),
            EntityRef::Term(id) => Some(self.terms[id].version),
            EntityRef::Inclusion(id) => Some(self.inclusions[id].version),
            EntityRef::Grant(_) => None,
        })
    }

    pub(crate) fn fresh_id(&mut self) -> u64 {
        let id = self.next_id.max(1);
        self.next_id = id + 1;
        id
    }

    /// Every outgoing reference of every stored entity, as (from, to).
    pub fn references(&self) -> Vec<(EntityRef, EntityRef)> {
        let mut out = Vec::new();
        for p in self.admins.iter() {
            out.push((EntityRef::Person(*p), EntityRef::Person(*p)));
        }
        for i in self.institutions.values() {
            let from = EntityRef::Institution(i.id);
            out.push((from.clone(), EntityRef::Person(i.head)));
            out.extend(i.members.iter().map(|m| (from.clone(), EntityRef::Person(*m))));
        }
        for p in self.programs.values() {
            let from = EntityRef::Program(p.id);
            out.push((from.clone(), EntityRef::Person(p.dean)));
            out.extend(p.categories.iter().map(|c| (from.clone(), EntityRef::Category(*c))));
            out.extend(p.lectures.iter().map(|l| (from.clone(), EntityRef::Lecture(*l))));
        }
        for c in self.categories.values() {
            out.push((EntityRef::Category(c.id), EntityRef::Program(c.program)));
        }
        for m in self.modules.values() {
            let from = EntityRef::Module(m.id);
            out.push((from.clone(), EntityRef::Institution(m.institution)));
            out.push((from.clone(), EntityRef::Person(m.responsible)));
            out.extend(m.lecturers.iter().map(|p| (from.clone(), EntityRef::Person(*p))));
            out.extend(m.lectures.iter().map(|l| (from.clone(), EntityRef::Lecture(*l))));
            out.extend(m.topics.iter().map(|t| (from.clone(), EntityRef::Topic(*t))));
        }
        for t in self.topics.values() {
            let from = EntityRef::Topic(t.id);
            for (term, lectures) in &t.assignments {
                out.push((from.clone(), EntityRef::Term(term.clone())));
                out.extend(lectures.iter().map(|l| (from.clone(), EntityRef::Lecture(*l))));
            }
        }
        for l in self.lectures.values() {
            let from = EntityRef::Lecture(l.id);
            out.push((from.clone(), EntityRef::Institution(l.institution)));
            out.push((from.clone(), EntityRef::Term(l.term.clone())));
            out.extend(l.lecturers.iter().map(|p| (from.clone(), EntityRef::Person(*p))));
        }
        for r in self.inclusions.values() {
            let from = EntityRef::Inclusion(r.id);
            out.push((from.clone(), EntityRef::Module(r.module)));
            out.push((from.clone(), EntityRef::Program(r.program)));
            out.push((from.clone(), EntityRef::Category(r.category)));
            for h in &r.history {
                if let Some(p) = h.actor.person() {
                    out.push((from.clone(), EntityRef::Person(p)));
                }
            }
        }
        for g in self.grants.values() {
            let from = EntityRef::Grant(g.id);
            out.push((from.clone(), EntityRef::Person(g.grantee)));
            if let Some(p) = g.granter.person() {
                out.push((from.clone(), EntityRef::Person(p)));
            }
            out.push((from.clone(), g.role.scope()));
        }
        out
    }

    /// References whose target does not exist. Empty for every state built
    /// through the public operations.
    pub fn dangling_references(&self) -> Vec<(EntityRef, EntityRef)> {
        self.references()
            .into_iter()
            .filter(|(_, to)| !self.exists(to))
            .collect()
    }

    fn referrers(&self, target: &EntityRef) -> Vec<EntityRef> {
        let owner = match target {
            EntityRef::Category(c) => self.categories.get(c).map(|c| EntityRef::Program(c.program)),
            _ => None,
        };
        let mut out: Vec<EntityRef> = self
            .references()
            .into_iter()
            .filter(|(from, to)| to == target && from != target && Some(from) != owner.as_ref())
            .map(|(from, _)| from)
            .collect();
        if let EntityRef::Person(p) = target {
            if self.admins.contains(p) {
                out.insert(0, target.clone());
            }
        }
        out.dedup();
        out
    }

    fn require_dangling(&self, r: EntityRef) -> Result<()> {
        if self.exists(&r) {
            Ok(())
        } else {
            Err(Error::dangling(r.to_string()))
        }
    }

    fn require_all<I: IntoIterator<Item = EntityRef>>(&self, refs: I) -> Result<()> {
        refs.into_iter().try_for_each(|r| self.require_dangling(r))
    }

    pub(crate) fn check_login_unique(&self, login: &str, except: Option<PersonId>) -> Result<()> {
        match self.person_by_login(login) {
            Some(p) if Some(p.id) != except => Err(Error::validation(format!(
                "login_name `{login}` is already in use"
            ))),
            _ => Ok(()),
        }
    }

    pub(crate) fn check_institution(&self, inst: &Institution) -> Result<()> {
        inst.validate()?;
        self.require_dangling(EntityRef::Person(inst.head))?;
        self.require_all(inst.members.iter().map(|p| EntityRef::Person(*p)))
    }

    pub(crate) fn check_program(&self, p: &StudyProgram) -> Result<()> {
        match p.kind {
            ProgramKind::SingleCycle if !p.categories.is_empty() => {
                return Err(Error::validation("a single-cycle program cannot hold categories"))
            }
            ProgramKind::TwoCycle if !p.lectures.is_empty() => {
                return Err(Error::validation(
                    "a two-cycle program cannot reference lectures directly",
                ))
            }
            _ => {}
        }
        self.require_dangling(EntityRef::Person(p.dean))?;
        self.require_all(p.lectures.iter().map(|l| EntityRef::Lecture(*l)))
    }

    pub(crate) fn check_module(&self, m: &Module) -> Result<()> {
        m.validate()?;
        self.require_dangling(EntityRef::Institution(m.institution))?;
        self.require_dangling(EntityRef::Person(m.responsible))?;
        self.require_all(m.lecturers.iter().map(|p| EntityRef::Person(*p)))?;
        self.require_all(m.lectures.iter().map(|l| EntityRef::Lecture(*l)))?;
        self.require_all(m.topics.iter().map(|t| EntityRef::Topic(*t)))
    }

    pub(crate) fn check_topic(&self, t: &Topic) -> Result<()> {
        for (term, lectures) in &t.assignments {
            self.require_dangling(EntityRef::Term(term.clone()))?;
            self.require_all(lectures.iter().map(|l| EntityRef::Lecture(*l)))?;
        }
        Ok(())
    }

    pub(crate) fn check_lecture(&self, l: &Lecture) -> Result<()> {
        l.validate()?;
        self.require_dangling(EntityRef::Institution(l.institution))?;
        self.require_dangling(EntityRef::Term(l.term.clone()))?;
        self.require_all(l.lecturers.iter().map(|p| EntityRef::Person(*p)))
    }

    /// Validate and store a new entity with a fresh id and version 1.
    pub(crate) fn create(&mut self, new: NewEntity) -> Result<EntityRef> {
        match new {
            NewEntity::Person(mut p) => {
                p.validate()?;
                self.check_login_unique(&p.login_name, None)?;
                p.id = PersonId(self.fresh_id());
                p.version = 1;
                let r = EntityRef::Person(p.id);
                self.persons.insert(p.id, p);
                Ok(r)
            }
            NewEntity::Institution(mut i) => {
                self.check_institution(&i)?;
                i.id = InstitutionId(self.fresh_id());
                i.version = 1;
                let r = EntityRef::Institution(i.id);
                self.institutions.insert(i.id, i);
                Ok(r)
            }
            NewEntity::Term(mut t) => {
                if self.terms.contains_key(&t.id) {
                    return Err(Error::Duplicate(format!("term {}", t.id)));
                }
                t.version = 1;
                let r = EntityRef::Term(t.id.clone());
                self.terms.insert(t.id.clone(), t);
                Ok(r)
            }
            NewEntity::Program(mut p) => {
                if !p.categories.is_empty() {
                    return Err(Error::validation(
                        "categories are created separately and cannot be given on program creation",
                    ));
                }
                self.check_program(&p)?;
                p.id = ProgramId(self.fresh_id());
                p.version = 1;
                let r = EntityRef::Program(p.id);
                self.programs.insert(p.id, p);
                Ok(r)
            }
            NewEntity::Category(mut c) => {
                self.require_dangling(EntityRef::Program(c.program))?;
                if self.programs[&c.program].kind != ProgramKind::TwoCycle {
                    return Err(Error::validation("categories belong to two-cycle programs only"));
                }
                c.id = CategoryId(self.fresh_id());
                c.version = 1;
                let r = EntityRef::Category(c.id);
                let program = self.programs.get_mut(&c.program).expect("checked above");
                program.categories.push(c.id);
                program.version += 1;
                self.categories.insert(c.id, c);
                Ok(r)
            }
            NewEntity::Module(mut m) => {
                self.check_module(&m)?;
                m.id = ModuleId(self.fresh_id());
                m.version = 1;
                let r = EntityRef::Module(m.id);
                self.modules.insert(m.id, m);
                Ok(r)
            }
            NewEntity::Topic(mut t) => {
                self.check_topic(&t)?;
                t.id = TopicId(self.fresh_id());
                t.version = 1;
                let r = EntityRef::Topic(t.id);
                self.topics.insert(t.id, t);
                Ok(r)
            }
            NewEntity::Lecture(mut l) => {
                self.check_lecture(&l)?;
                l.id = LectureId(self.fresh_id());
                l.version = 1;
                let r = EntityRef::Lecture(l.id);
                self.lectures.insert(l.id, l);
                Ok(r)
            }
        }
    }

    fn check_version(stored: u64, expected: u64) -> Result<()> {
        if stored == expected {
            Ok(())
        } else {
            Err(Error::StaleVersion { expected, actual: stored })
        }
    }

    /// Compare-and-set update: the patch is applied to a copy, validated, and
    /// only then written back with the version incremented.
    pub(crate) fn update(
        &mut self,
        target: &EntityRef,
        expected_version: u64,
        patch: EntityPatch,
    ) -> Result<u64> {
        if target.kind() != patch.kind() {
            return Err(Error::validation(format!(
                "patch for a {} cannot be applied to {target}",
                patch.kind()
            )));
        }
        self.require(target)?;
        match (target, patch) {
            (EntityRef::Person(id), EntityPatch::Person(p)) => {
                let mut e = self.persons[id].clone();
                Self::check_version(e.version, expected_version)?;
                if let Some(v) = p.display_name {
                    e.display_name = v;
                }
                if let Some(v) = p.login_name {
                    e.login_name = v;
                }
                e.validate()?;
                self.check_login_unique(&e.login_name, Some(e.id))?;
                e.version += 1;
                let v = e.version;
                self.persons.insert(*id, e);
                Ok(v)
            }
            (EntityRef::Institution(id), EntityPatch::Institution(p)) => {
                let mut e = self.institutions[id].clone();
                Self::check_version(e.version, expected_version)?;
                if let Some(v) = p.name {
                    e.name = v;
                }
                if let Some(v) = p.head {
                    e.head = v;
                }
                if let Some(v) = p.members {
                    e.members = v;
                }
                self.check_institution(&e)?;
                e.version += 1;
                let v = e.version;
                self.institutions.insert(*id, e);
                Ok(v)
            }
            (EntityRef::Term(id), EntityPatch::Term(p)) => {
                let mut e = self.terms[id].clone();
                Self::check_version(e.version, expected_version)?;
                if let Some(v) = p.schedule_freeze_date {
                    e.schedule_freeze_date = v;
                }
                e.version += 1;
                let v = e.version;
                self.terms.insert(id.clone(), e);
                Ok(v)
            }
            (EntityRef::Program(id), EntityPatch::Program(p)) => {
                let mut e = self.programs[id].clone();
                Self::check_version(e.version, expected_version)?;
                if let Some(v) = p.title {
                    e.title = v;
                }
                if let Some(v) = p.kind {
                    e.kind = v;
                }
                if let Some(v) = p.dean {
                    e.dean = v;
                }
                if let Some(order) = p.categories {
                    let mut a = order.clone();
                    let mut b = e.categories.clone();
                    a.sort();
                    b.sort();
                    if a != b {
                        return Err(Error::validation(
                            "category list may only be reordered, not changed",
                        ));
                    }
                    e.categories = order;
                }
                if let Some(v) = p.lectures {
                    e.lectures = v;
                }
                self.check_program(&e)?;
                e.version += 1;
                let v = e.version;
                self.programs.insert(*id, e);
                Ok(v)
            }
            (EntityRef::Category(id), EntityPatch::Category(p)) => {
                let mut e = self.categories[id].clone();
                Self::check_version(e.version, expected_version)?;
                if let Some(v) = p.title {
                    e.title = v;
                }
                e.version += 1;
                let v = e.version;
                self.categories.insert(*id, e);
                Ok(v)
            }
            (EntityRef::Module(id), EntityPatch::Module(p)) => {
                let mut e = self.modules[id].clone();
                Self::check_version(e.version, expected_version)?;
                if let Some(v) = p.title {
                    e.title = v;
                }
                if let Some(v) = p.description {
                    e.description = v;
                }
                if let Some(v) = p.institution {
                    e.institution = v;
                }
                if let Some(v) = p.responsible {
                    e.responsible = v;
                }
                if let Some(v) = p.lecturers {
                    e.lecturers = v;
                }
                if let Some(v) = p.lectures {
                    e.lectures = v;
                }
                if let Some(v) = p.topics {
                    e.topics = v;
                }
                if let Some(v) = p.attributes {
                    e.attributes = v;
                }
                self.check_module(&e)?;
                e.version += 1;
                let v = e.version;
                self.modules.insert(*id, e);
                Ok(v)
            }
            (EntityRef::Topic(id), EntityPatch::Topic(p)) => {
                let mut e = self.topics[id].clone();
                Self::check_version(e.version, expected_version)?;
                if let Some(v) = p.title {
                    e.title = v;
                }
                if let Some(v) = p.assignments {
                    e.assignments = v;
                }
                self.check_topic(&e)?;
                e.version += 1;
                let v = e.version;
                self.topics.insert(*id, e);
                Ok(v)
            }
            (EntityRef::Lecture(id), EntityPatch::Lecture(p)) => {
                let mut e = self.lectures[id].clone();
                Self::check_version(e.version, expected_version)?;
                if let Some(v) = p.title {
                    e.title = v;
                }
                if let Some(v) = p.description {
                    e.description = v;
                }
                if let Some(v) = p.institution {
                    e.institution = v;
                }
                if let Some(v) = p.lecturers {
                    e.lecturers = v;
                }
                if let Some(v) = p.term {
                    e.term = v;
                }
                self.check_lecture(&e)?;
                e.version += 1;
                let v = e.version;
                self.lectures.insert(*id, e);
                Ok(v)
            }
            _ => unreachable!("kind equality checked above"),
        }
    }

    /// Replace a lecture's dates under compare-and-set.
    pub(crate) fn replace_dates(
        &mut self,
        lecture: LectureId,
        expected_version: u64,
        dates: Vec<LectureDate>,
    ) -> Result<u64> {
        let stored = self.lecture(lecture)?.version;
        dates.iter().try_for_each(LectureDate::validate)?;
        Self::check_version(stored, expected_version)?;
        let l = self.lectures.get_mut(&lecture).expect("checked above");
        l.dates = dates;
        l.version += 1;
        Ok(l.version)
    }

    /// Delete an unreferenced entity. Referenced entities are never removed
    /// and nothing cascades.
    pub(crate) fn delete(&mut self, target: &EntityRef, expected_version: u64) -> Result<u64> {
        let stored = match self.version_of(target)? {
            Some(v) => v,
            None => {
                return Err(Error::validation(format!(
                    "{} records are withdrawn through revocation, not deleted",
                    target.kind()
                )))
            }
        };
        if matches!(target, EntityRef::Inclusion(_)) {
            return Err(Error::validation(
                "inclusion records are withdrawn through revocation, not deleted",
            ));
        }
        Self::check_version(stored, expected_version)?;
        let referrers = self.referrers(target);
        if let Some(first) = referrers.first() {
            let what = if first == target {
                "the administrator set".to_string()
            } else {
                first.to_string()
            };
            return Err(Error::Referenced(what));
        }
        match target {
            EntityRef::Institution(id) => {
                self.institutions.remove(id);
            }
            EntityRef::Person(id) => {
                self.persons.remove(id);
            }
            EntityRef::Program(id) => {
                self.programs.remove(id);
            }
            EntityRef::Category(id) => {
                let c = self.categories.remove(id).expect("exists");
                if let Some(p) = self.programs.get_mut(&c.program) {
                    p.categories.retain(|x| x != id);
                    p.version += 1;
                }
            }
            EntityRef::Module(id) => {
                self.modules.remove(id);
            }
            EntityRef::Topic(id) => {
                self.topics.remove(id);
            }
            EntityRef::Lecture(id) => {
                self.lectures.remove(id);
            }
            EntityRef::Term(id) => {
                self.terms.remove(id);
            }
            EntityRef::Inclusion(_) | EntityRef::Grant(_) => unreachable!(),
        }
        Ok(stored)
    }

    /// Lectures a module offers in `term`: its direct lectures plus whatever
    /// its topics assign for that term.
    pub fn resolve_module_lectures(&self, module: ModuleId, term: &TermId) -> Result<BTreeSet<LectureId>> {
        let m = self.module(module)?;
        self.term(term)?;
        let mut out = m.lectures.clone();
        for t in &m.topics {
            if let Some(assigned) = self.topics.get(t).and_then(|t| t.assignments.get(term)) {
                out.extend(assigned.iter().copied());
            }
        }
        Ok(out)
    }

    /// Structural violations of one stored program; empty when valid.
    pub fn validate_program(&self, program: ProgramId) -> Result<Vec<Violation>> {
        let p = self.program(program)?;
        let cats = self
            .categories
            .values()
            .filter(|c| c.program == program || p.categories.contains(&c.id));
        Ok(validate_program_structure(
            p,
            cats,
            |l| self.lectures.contains_key(&l),
            |d| self.persons.contains_key(&d),
        ))
    }

    /// Lectures scheduled without any date, which catalogs flag.
    pub fn unscheduled_lectures(&self) -> Vec<LectureId> {
        self.lectures
            .values()
            .filter(|l| l.dates.is_empty())
            .map(|l| l.id)
            .collect()
    }
}
