//! Institution- and grant-based access decisions.
//!
//! Edit rights follow institution ownership: an `INSTITUTION_EDITOR` of an
//! institution edits the modules, lectures and member persons of that
//! institution. Program structure (programs, categories, inclusion records)
//! belongs to the program's dean and its `PROGRAM_RESPONSIBLE` grantees.
//! Lecture dates freeze on the term's freeze date, after which only the
//! lecture's `TIMETABLE_PERSON` may change them. Administrators are
//! configured at deployment and sit outside the grant chain.
//!
//! Every decision is a pure function of the state, the actor, the target
//! and (for schedules) the clock input. Anything matching no allow rule is
//! denied with a [`Rule`] naming why.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::*;
use crate::inclusion::InclusionState;
use crate::model::{EntityRef, ProgramKind};
use crate::mutation::Actor;
use crate::state::State;
use crate::time::Timestamp;

/// A grantable role together with the entity it is scoped to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "role", content = "scope", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Role {
    InstitutionEditor(InstitutionId),
    TimetablePerson(LectureId),
    ProgramResponsible(ProgramId),
}

impl Role {
    pub fn scope(&self) -> EntityRef {
        match *self {
            Role::InstitutionEditor(i) => EntityRef::Institution(i),
            Role::TimetablePerson(l) => EntityRef::Lecture(l),
            Role::ProgramResponsible(p) => EntityRef::Program(p),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Role::InstitutionEditor(_) => "INSTITUTION_EDITOR",
            Role::TimetablePerson(_) => "TIMETABLE_PERSON",
            Role::ProgramResponsible(_) => "PROGRAM_RESPONSIBLE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleGrant {
    pub id: GrantId,
    pub grantee: PersonId,
    #[serde(flatten)]
    pub role: Role,
    pub granter: Actor,
    pub granted_at: Timestamp,
    /// The issuer rule the granter satisfied when the grant was recorded.
    /// Grants outlive later changes of head or dean, so soundness is judged
    /// against this, not against the current holders.
    pub basis: Rule,
}

/// Machine-readable rule identifiers for allow and deny outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    // allow
    Admin,
    System,
    InstitutionEditor,
    InstitutionHead,
    Dean,
    ProgramAuthority,
    TimetablePerson,
    ModuleSide,
    ProgramSide,
    // deny
    WrongInstitution,
    NoEditorGrant,
    NotProgramResponsible,
    NotHead,
    NotDean,
    AdminOnly,
    Frozen,
    NotInvolved,
    SideAlreadyAcknowledged,
    Unauthenticated,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Admin => "admin",
            Rule::System => "system",
            Rule::InstitutionEditor => "institution-editor",
            Rule::InstitutionHead => "institution-head",
            Rule::Dean => "dean",
            Rule::ProgramAuthority => "program-authority",
            Rule::TimetablePerson => "timetable-person",
            Rule::ModuleSide => "module-side",
            Rule::ProgramSide => "program-side",
            Rule::WrongInstitution => "wrong-institution",
            Rule::NoEditorGrant => "no-editor-grant",
            Rule::NotProgramResponsible => "not-program-responsible",
            Rule::NotHead => "not-head",
            Rule::NotDean => "not-dean",
            Rule::AdminOnly => "admin-only",
            Rule::Frozen => "frozen",
            Rule::NotInvolved => "not-involved",
            Rule::SideAlreadyAcknowledged => "side-already-acknowledged",
            Rule::Unauthenticated => "unauthenticated",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Name kept for the error payload: a deny outcome is just a [`Rule`].
pub type DenyReason = Rule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessDecision {
    pub allowed: bool,
    pub reason: Rule,
}

impl AccessDecision {
    pub fn allow(reason: Rule) -> Self {
        AccessDecision { allowed: true, reason }
    }

    pub fn deny(reason: Rule) -> Self {
        AccessDecision { allowed: false, reason }
    }

    /// Turn a denial into the matching error; `frozen` maps to its own code.
    pub fn into_result(self) -> Result<Rule> {
        match (self.allowed, self.reason) {
            (true, r) => Ok(r),
            (false, Rule::Frozen) => Err(Error::ForbiddenFrozen),
            (false, r) => Err(Error::Forbidden(r)),
        }
    }
}

impl State {
    pub fn holds(&self, person: PersonId, role: &Role) -> bool {
        self.grants.values().any(|g| g.grantee == person && &g.role == role)
    }

    pub fn grants_of(&self, person: PersonId) -> impl Iterator<Item = &RoleGrant> + '_ {
        self.grants.values().filter(move |g| g.grantee == person)
    }

    fn holds_any_editor_grant(&self, person: PersonId) -> bool {
        self.grants_of(person)
            .any(|g| matches!(g.role, Role::InstitutionEditor(_)))
    }

    fn editor_of(&self, person: PersonId, inst: InstitutionId) -> bool {
        self.holds(person, &Role::InstitutionEditor(inst))
    }

    /// Dean of the program or holder of `PROGRAM_RESPONSIBLE` for it.
    pub fn has_program_authority(&self, person: PersonId, program: ProgramId) -> bool {
        self.programs.get(&program).is_some_and(|p| p.dean == person)
            || self.holds(person, &Role::ProgramResponsible(program))
    }

    pub fn timetable_person(&self, lecture: LectureId) -> Option<PersonId> {
        self.grants
            .values()
            .find(|g| g.role == Role::TimetablePerson(lecture))
            .map(|g| g.grantee)
    }

    /// Programs whose content reaches the lecture: single-cycle programs that
    /// list it, and two-cycle programs with a live (non-revoked) inclusion of
    /// a module offering it in the lecture's term.
    pub fn programs_containing(&self, lecture: LectureId) -> Result<BTreeSet<ProgramId>> {
        let term = self.lecture(lecture)?.term.clone();
        let mut out: BTreeSet<ProgramId> = self
            .programs
            .values()
            .filter(|p| p.kind == ProgramKind::SingleCycle && p.lectures.contains(&lecture))
            .map(|p| p.id)
            .collect();
        for r in self.inclusions.values() {
            if r.state == InclusionState::Revoked || out.contains(&r.program) {
                continue;
            }
            if self.resolve_module_lectures(r.module, &term)?.contains(&lecture) {
                out.insert(r.program);
            }
        }
        Ok(out)
    }

    fn institution_rule(&self, actor: PersonId, inst: InstitutionId) -> AccessDecision {
        if self.editor_of(actor, inst) {
            AccessDecision::allow(Rule::InstitutionEditor)
        } else if self.holds_any_editor_grant(actor) {
            AccessDecision::deny(Rule::WrongInstitution)
        } else {
            AccessDecision::deny(Rule::NoEditorGrant)
        }
    }

    fn program_rule(&self, actor: PersonId, program: ProgramId) -> AccessDecision {
        if self.has_program_authority(actor, program) {
            AccessDecision::allow(Rule::ProgramAuthority)
        } else {
            AccessDecision::deny(Rule::NotProgramResponsible)
        }
    }

    /// May `actor` edit `entity`?
    pub fn can_edit(&self, actor: PersonId, entity: &EntityRef) -> Result<AccessDecision> {
        self.person(actor)?;
        self.require(entity)?;
        if self.is_admin(actor) {
            return Ok(AccessDecision::allow(Rule::Admin));
        }
        Ok(match entity {
            EntityRef::Module(id) => self.institution_rule(actor, self.modules[id].institution),
            EntityRef::Lecture(id) => self.institution_rule(actor, self.lectures[id].institution),
            EntityRef::Person(id) => {
                let home = self
                    .institutions
                    .values()
                    .filter(|i| i.members.contains(id))
                    .find(|i| self.editor_of(actor, i.id));
                match home {
                    Some(_) => AccessDecision::allow(Rule::InstitutionEditor),
                    None if self.holds_any_editor_grant(actor) => {
                        AccessDecision::deny(Rule::WrongInstitution)
                    }
                    None => AccessDecision::deny(Rule::NoEditorGrant),
                }
            }
            EntityRef::Topic(id) => {
                let owners: Vec<InstitutionId> = self
                    .modules
                    .values()
                    .filter(|m| m.topics.contains(id))
                    .map(|m| m.institution)
                    .collect();
                if owners.is_empty() {
                    // Unattached topics are shared scratch space for editors.
                    if self.holds_any_editor_grant(actor) {
                        AccessDecision::allow(Rule::InstitutionEditor)
                    } else {
                        AccessDecision::deny(Rule::NoEditorGrant)
                    }
                } else if owners.iter().any(|i| self.editor_of(actor, *i)) {
                    AccessDecision::allow(Rule::InstitutionEditor)
                } else if self.holds_any_editor_grant(actor) {
                    AccessDecision::deny(Rule::WrongInstitution)
                } else {
                    AccessDecision::deny(Rule::NoEditorGrant)
                }
            }
            EntityRef::Program(id) => self.program_rule(actor, *id),
            EntityRef::Category(id) => self.program_rule(actor, self.categories[id].program),
            EntityRef::Inclusion(id) => self.program_rule(actor, self.inclusions[id].program),
            EntityRef::Institution(id) => {
                if self.institutions[id].head == actor {
                    AccessDecision::allow(Rule::InstitutionHead)
                } else {
                    AccessDecision::deny(Rule::NotHead)
                }
            }
            EntityRef::Term(_) => AccessDecision::deny(Rule::AdminOnly),
            EntityRef::Grant(id) => self.can_grant(actor, &self.grants[id].role)?,
        })
    }

    /// True on and after the freeze date of the lecture's term.
    pub fn is_schedule_frozen(&self, lecture: LectureId, now: Timestamp) -> Result<bool> {
        let term = self.term(&self.lecture(lecture)?.term)?;
        Ok(now.date() >= term.schedule_freeze_date)
    }

    /// May `actor` change the dates, times and rooms of `lecture` at `now`?
    ///
    /// The lecture's timetable person and administrators may always do so;
    /// other editors only before the term's freeze date.
    pub fn can_modify_schedule(
        &self,
        actor: PersonId,
        lecture: LectureId,
        now: Timestamp,
    ) -> Result<AccessDecision> {
        self.person(actor)?;
        let frozen = self.is_schedule_frozen(lecture, now)?;
        if self.is_admin(actor) {
            return Ok(AccessDecision::allow(Rule::Admin));
        }
        if self.holds(actor, &Role::TimetablePerson(lecture)) {
            return Ok(AccessDecision::allow(Rule::TimetablePerson));
        }
        let edit = self.can_edit(actor, &EntityRef::Lecture(lecture))?;
        Ok(if edit.allowed && frozen {
            AccessDecision::deny(Rule::Frozen)
        } else {
            edit
        })
    }

    /// May `granter` issue (or revoke) `role`?
    pub fn can_grant(&self, granter: PersonId, role: &Role) -> Result<AccessDecision> {
        self.person(granter)?;
        self.require(&role.scope())?;
        if self.is_admin(granter) {
            return Ok(AccessDecision::allow(Rule::Admin));
        }
        Ok(match *role {
            Role::InstitutionEditor(i) => {
                if self.institutions[&i].head == granter {
                    AccessDecision::allow(Rule::InstitutionHead)
                } else {
                    AccessDecision::deny(Rule::NotHead)
                }
            }
            Role::ProgramResponsible(p) => {
                if self.programs[&p].dean == granter {
                    AccessDecision::allow(Rule::Dean)
                } else {
                    AccessDecision::deny(Rule::NotDean)
                }
            }
            Role::TimetablePerson(l) => {
                let programs = self.programs_containing(l)?;
                if programs.iter().any(|p| self.has_program_authority(granter, *p)) {
                    AccessDecision::allow(Rule::ProgramAuthority)
                } else {
                    AccessDecision::deny(Rule::NotProgramResponsible)
                }
            }
        })
    }

    /// Record a grant whose issuer rule has already been checked. Identical
    /// (grantee, role) grants are not duplicated; a new timetable person
    /// replaces the previous one for that lecture.
    pub(crate) fn record_grant(
        &mut self,
        granter: Actor,
        grantee: PersonId,
        role: Role,
        now: Timestamp,
        basis: Rule,
    ) -> Result<GrantId> {
        self.person(grantee)?;
        self.require(&role.scope())?;
        if let Some(g) = self.grants.values().find(|g| g.grantee == grantee && g.role == role) {
            return Ok(g.id);
        }
        if let Role::TimetablePerson(_) = role {
            self.grants.retain(|_, g| g.role != role);
        }
        let id = GrantId(self.fresh_id());
        self.grants.insert(
            id,
            RoleGrant {
                id,
                grantee,
                role,
                granter,
                granted_at: now,
                basis,
            },
        );
        Ok(id)
    }

    pub(crate) fn remove_grant(&mut self, id: GrantId) -> Result<RoleGrant> {
        self.grants
            .remove(&id)
            .ok_or_else(|| Error::not_found(format!("grant {id}")))
    }

    /// Grants that break an issuer rule or the one-timetable-person-per-
    /// lecture rule. Empty for every state built through the public
    /// operations.
    pub fn unsound_grants(&self) -> Vec<GrantId> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut timetable = BTreeSet::new();
        for g in self.grants.values() {
            let basis_ok = match (&g.role, g.basis) {
                (_, Rule::Admin) => g.granter.person().is_some_and(|p| self.is_admin(p)),
                (_, Rule::System) => g.granter == Actor::System,
                (Role::InstitutionEditor(_), Rule::InstitutionHead) => true,
                (Role::ProgramResponsible(_), Rule::Dean) => true,
                (Role::TimetablePerson(_), Rule::ProgramAuthority) => true,
                _ => false,
            };
            let refs_ok = self.persons.contains_key(&g.grantee)
                && self.exists(&g.role.scope())
                && g.granter.person().is_none_or(|p| self.persons.contains_key(&p));
            let unique = seen.insert((g.grantee, g.role.clone()));
            let single_tt = match g.role {
                Role::TimetablePerson(l) => timetable.insert(l),
                _ => true,
            };
            if !(basis_ok && refs_ok && unique && single_tt) {
                out.push(g.id);
            }
        }
        out
    }
}
