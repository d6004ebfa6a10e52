//! Whole-state loading for importers.
//!
//! [`Contents`] is everything a [`State`] stores apart from bookkeeping
//! (revision, id counter, audit log). [`State::assemble`] admits a complete
//! `Contents` in one step and checks every invariant the mutation path
//! would have enforced; nothing is admitted when any check fails.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::access::RoleGrant;
use crate::error::{Error, Result};
use crate::ids::*;
use crate::inclusion::{InclusionAction, InclusionRecord, InclusionState};
use crate::model::*;
use crate::state::State;
use crate::time::Timestamp;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contents {
    pub last_modified: Timestamp,
    pub admins: BTreeSet<PersonId>,
    pub persons: Vec<Person>,
    pub institutions: Vec<Institution>,
    pub terms: Vec<Term>,
    pub programs: Vec<StudyProgram>,
    pub categories: Vec<Category>,
    pub modules: Vec<Module>,
    pub topics: Vec<Topic>,
    pub lectures: Vec<Lecture>,
    pub inclusions: Vec<InclusionRecord>,
    pub grants: Vec<RoleGrant>,
}

fn at(entity: impl ToString, e: Error) -> Error {
    let detail = match e {
        Error::ValidationFailed(m) => m,
        Error::DanglingReference(m) => format!("dangling reference to {m}"),
        other => other.to_string(),
    };
    Error::ValidationFailed(format!("{}: {detail}", entity.to_string()))
}

fn insert_unique<K: Ord + Copy + Into<u64>, V>(
    map: &mut BTreeMap<K, V>,
    seen: &mut BTreeSet<u64>,
    id: K,
    version: u64,
    value: V,
    label: &str,
) -> Result<()> {
    let raw: u64 = id.into();
    if raw == 0 || !seen.insert(raw) {
        return Err(Error::ValidationFailed(format!("{label} {raw}: id is zero or reused")));
    }
    if version == 0 {
        return Err(Error::ValidationFailed(format!("{label} {raw}: version must be at least 1")));
    }
    map.insert(id, value);
    Ok(())
}

impl State {
    /// Everything needed to rebuild an equivalent state, in id order.
    pub fn contents(&self) -> Contents {
        Contents {
            last_modified: self.last_modified,
            admins: self.admins.clone(),
            persons: self.persons.values().cloned().collect(),
            institutions: self.institutions.values().cloned().collect(),
            terms: self.terms.values().cloned().collect(),
            programs: self.programs.values().cloned().collect(),
            categories: self.categories.values().cloned().collect(),
            modules: self.modules.values().cloned().collect(),
            topics: self.topics.values().cloned().collect(),
            lectures: self.lectures.values().cloned().collect(),
            inclusions: self.inclusions.values().cloned().collect(),
            grants: self.grants.values().cloned().collect(),
        }
    }

    /// Build a state from `c`, checking every entity and cross-entity rule.
    /// Errors are `VALIDATION_FAILED` and name the offending entity.
    pub fn assemble(c: Contents) -> Result<State> {
        let mut s = State::new();
        s.last_modified = c.last_modified;
        let mut seen = BTreeSet::new();

        // Admit everything first, then check references against the whole.
        for p in c.persons {
            insert_unique(&mut s.persons, &mut seen, p.id, p.version, p.clone(), "person")?;
        }
        for i in c.institutions {
            insert_unique(&mut s.institutions, &mut seen, i.id, i.version, i.clone(), "institution")?;
        }
        for t in c.terms {
            if t.version == 0 {
                return Err(Error::ValidationFailed(format!("term {}: version must be at least 1", t.id)));
            }
            if s.terms.insert(t.id.clone(), t.clone()).is_some() {
                return Err(Error::ValidationFailed(format!("term {}: listed twice", t.id)));
            }
        }
        for p in c.programs {
            insert_unique(&mut s.programs, &mut seen, p.id, p.version, p.clone(), "program")?;
        }
        for x in c.categories {
            insert_unique(&mut s.categories, &mut seen, x.id, x.version, x.clone(), "category")?;
        }
        for m in c.modules {
            insert_unique(&mut s.modules, &mut seen, m.id, m.version, m.clone(), "module")?;
        }
        for t in c.topics {
            insert_unique(&mut s.topics, &mut seen, t.id, t.version, t.clone(), "topic")?;
        }
        for l in c.lectures {
            insert_unique(&mut s.lectures, &mut seen, l.id, l.version, l.clone(), "lecture")?;
        }
        for r in c.inclusions {
            insert_unique(&mut s.inclusions, &mut seen, r.id, r.version, r.clone(), "inclusion")?;
        }
        for g in c.grants {
            let raw = g.id.0;
            if raw == 0 || !seen.insert(raw) {
                return Err(Error::ValidationFailed(format!("grant {raw}: id is zero or reused")));
            }
            s.grants.insert(g.id, g);
        }
        s.next_id = seen.iter().next_back().map_or(1, |m| m + 1);
        s.admins = c.admins;

        for a in &s.admins {
            if !s.persons.contains_key(a) {
                return Err(Error::ValidationFailed(format!("administrator {a}: no such person")));
            }
        }
        let mut logins = BTreeSet::new();
        for p in s.persons.values() {
            p.validate().map_err(|e| at(EntityRef::Person(p.id), e))?;
            if !logins.insert(p.login_name.as_str()) {
                return Err(at(
                    EntityRef::Person(p.id),
                    Error::validation(format!("login_name `{}` is already in use", p.login_name)),
                ));
            }
        }
        for i in s.institutions.values() {
            s.check_institution(i).map_err(|e| at(EntityRef::Institution(i.id), e))?;
        }
        for p in s.programs.values() {
            s.check_program(p).map_err(|e| at(EntityRef::Program(p.id), e))?;
            if let Some(v) = s.validate_program(p.id)?.first() {
                return Err(at(
                    EntityRef::Program(p.id),
                    Error::validation(format!("{} ({})", v.rule.as_str(), v.entity)),
                ));
            }
        }
        for x in s.categories.values() {
            match s.programs.get(&x.program) {
                Some(p) if p.kind == ProgramKind::TwoCycle => {}
                Some(_) => {
                    return Err(at(
                        EntityRef::Category(x.id),
                        Error::validation("categories belong to two-cycle programs only"),
                    ))
                }
                None => {
                    return Err(at(
                        EntityRef::Category(x.id),
                        Error::dangling(format!("program {}", x.program)),
                    ))
                }
            }
        }
        for m in s.modules.values() {
            s.check_module(m).map_err(|e| at(EntityRef::Module(m.id), e))?;
        }
        for t in s.topics.values() {
            s.check_topic(t).map_err(|e| at(EntityRef::Topic(t.id), e))?;
        }
        for l in s.lectures.values() {
            s.check_lecture(l).map_err(|e| at(EntityRef::Lecture(l.id), e))?;
        }
        let mut live = BTreeSet::new();
        for r in s.inclusions.values() {
            s.check_inclusion(r, &mut live)
                .map_err(|e| at(EntityRef::Inclusion(r.id), e))?;
        }
        if let Some(g) = s.unsound_grants().first() {
            return Err(Error::ValidationFailed(format!(
                "grant {g}: dangling reference, duplicate or unsupported issuer rule"
            )));
        }
        Ok(s)
    }

    fn check_inclusion(
        &self,
        r: &InclusionRecord,
        live: &mut BTreeSet<(ModuleId, ProgramId, CategoryId)>,
    ) -> Result<()> {
        self.require_ref(EntityRef::Module(r.module))?;
        self.require_ref(EntityRef::Program(r.program))?;
        self.require_ref(EntityRef::Category(r.category))?;
        let p = &self.programs[&r.program];
        if p.kind != ProgramKind::TwoCycle || !p.categories.contains(&r.category) {
            return Err(Error::validation(format!(
                "category {} is not a category of two-cycle program {}",
                r.category, r.program
            )));
        }
        match r.history.first().map(|h| &h.action) {
            Some(InclusionAction::Proposed { .. }) => {}
            _ => return Err(Error::validation("history must start with a proposal")),
        }
        if r.history[1..]
            .iter()
            .any(|h| matches!(h.action, InclusionAction::Proposed { .. }))
        {
            return Err(Error::validation("a record is proposed only once"));
        }
        if r.version != r.history.len() as u64 {
            return Err(Error::validation("version must equal the history length"));
        }
        if !r.is_consistent() {
            return Err(Error::validation("flags and state disagree with the history"));
        }
        for h in &r.history {
            if let Some(p) = h.actor.person() {
                self.require_ref(EntityRef::Person(p))?;
            }
        }
        if r.state != InclusionState::Revoked && !live.insert((r.module, r.program, r.category)) {
            return Err(Error::validation(String::from(
                "another live record covers the same module, program and category",
            )));
        }
        Ok(())
    }

    fn require_ref(&self, r: EntityRef) -> Result<()> {
        if self.exists(&r) {
            Ok(())
        } else {
            Err(Error::dangling(r.to_string()))
        }
    }
}
