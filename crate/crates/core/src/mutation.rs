//! The single write path. Every change to a [`State`] is a [`Mutation`]
//! applied by [`State::apply`], which makes exactly one access decision,
//! applies the change all-or-nothing, bumps the snapshot revision and
//! appends one audit entry.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::access::{AccessDecision, Role, Rule};
use crate::error::{Error, Result};
use crate::ids::*;
use crate::model::*;
use crate::state::State;
use crate::time::Timestamp;

/// Who performs a mutation. `System` is the operator path (bootstrap and
/// bundle import) and is never reachable from a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Actor {
    System,
    Person(PersonId),
}

impl Actor {
    pub fn person(self) -> Option<PersonId> {
        match self {
            Actor::System => None,
            Actor::Person(p) => Some(p),
        }
    }
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Actor::System => f.write_str("system"),
            Actor::Person(p) => write!(f, "person {p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Mutation {
    Create {
        entity: NewEntity,
    },
    Update {
        target: EntityRef,
        expected_version: u64,
        patch: EntityPatch,
    },
    Delete {
        target: EntityRef,
        expected_version: u64,
    },
    GrantRole {
        grantee: PersonId,
        #[serde(flatten)]
        role: Role,
    },
    RevokeRole {
        grant: GrantId,
    },
    ProposeInclusion {
        module: ModuleId,
        program: ProgramId,
        category: CategoryId,
    },
    AcknowledgeInclusion {
        record: InclusionId,
        #[serde(default)]
        expected_version: Option<u64>,
    },
    RevokeInclusion {
        record: InclusionId,
        #[serde(default)]
        expected_version: Option<u64>,
    },
    SetLectureDates {
        lecture: LectureId,
        expected_version: u64,
        dates: Vec<LectureDate>,
    },
    /// Create (if needed) and mark the deployment's administrator.
    BootstrapAdmin {
        login_name: String,
        display_name: String,
    },
}

impl Mutation {
    pub fn name(&self) -> &'static str {
        match self {
            Mutation::Create { .. } => "create",
            Mutation::Update { .. } => "update",
            Mutation::Delete { .. } => "delete",
            Mutation::GrantRole { .. } => "grant_role",
            Mutation::RevokeRole { .. } => "revoke_role",
            Mutation::ProposeInclusion { .. } => "propose_inclusion",
            Mutation::AcknowledgeInclusion { .. } => "acknowledge_inclusion",
            Mutation::RevokeInclusion { .. } => "revoke_inclusion",
            Mutation::SetLectureDates { .. } => "set_lecture_dates",
            Mutation::BootstrapAdmin { .. } => "bootstrap_admin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub seq: u64,
    pub actor: Actor,
    pub operation: String,
    pub entity: EntityRef,
    pub old_version: Option<u64>,
    pub new_version: Option<u64>,
    pub at: Timestamp,
}

/// Outcome of a committed mutation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Applied {
    pub entity: EntityRef,
    pub old_version: Option<u64>,
    pub new_version: Option<u64>,
    /// Snapshot revision that contains the change.
    pub revision: u64,
    pub decision: AccessDecision,
}

impl State {
    /// The one access decision for `mutation`. Missing targets surface as
    /// `NOT_FOUND` and terminal workflow states as `INVALID_STATE` before any
    /// decision is made.
    pub fn authorize(&self, actor: Actor, mutation: &Mutation, now: Timestamp) -> Result<AccessDecision> {
        let person = match actor {
            Actor::System => {
                return Ok(match mutation {
                    Mutation::ProposeInclusion { .. }
                    | Mutation::AcknowledgeInclusion { .. }
                    | Mutation::RevokeInclusion { .. } => AccessDecision::deny(Rule::NotInvolved),
                    _ => AccessDecision::allow(Rule::System),
                })
            }
            Actor::Person(p) => p,
        };
        self.person(person)?;
        let admin = self.is_admin(person);
        let admin_only = || {
            if admin {
                AccessDecision::allow(Rule::Admin)
            } else {
                AccessDecision::deny(Rule::AdminOnly)
            }
        };
        match mutation {
            Mutation::BootstrapAdmin { .. } => Ok(AccessDecision::deny(Rule::AdminOnly)),
            Mutation::Create { entity } => Ok(match entity {
                NewEntity::Person(_)
                | NewEntity::Institution(_)
                | NewEntity::Term(_)
                | NewEntity::Program(_) => admin_only(),
                NewEntity::Category(c) => {
                    if !self.exists(&EntityRef::Program(c.program)) {
                        return Err(Error::dangling(format!("program {}", c.program)));
                    }
                    self.can_edit(person, &EntityRef::Program(c.program))?
                }
                NewEntity::Module(m) => self.create_in_institution(person, m.institution)?,
                NewEntity::Lecture(l) => self.create_in_institution(person, l.institution)?,
                NewEntity::Topic(_) => {
                    if admin || self.grants_of(person).any(|g| matches!(g.role, Role::InstitutionEditor(_))) {
                        AccessDecision::allow(if admin { Rule::Admin } else { Rule::InstitutionEditor })
                    } else {
                        AccessDecision::deny(Rule::NoEditorGrant)
                    }
                }
            }),
            Mutation::Update { target, patch, .. } => {
                let base = self.can_edit(person, target)?;
                if !base.allowed || admin {
                    return Ok(base);
                }
                // Changes beyond plain content need more than edit rights.
                Ok(match patch {
                    EntityPatch::Program(p) if p.kind.is_some() || p.dean.is_some() => admin_only(),
                    EntityPatch::Institution(p) if p.head.is_some() => admin_only(),
                    EntityPatch::Module(p) => match p.institution {
                        Some(i) => self.create_in_institution(person, i)?,
                        None => base,
                    },
                    EntityPatch::Lecture(p) => match p.institution {
                        Some(i) => self.create_in_institution(person, i)?,
                        None => base,
                    },
                    _ => base,
                })
            }
            Mutation::Delete { target, .. } => match target {
                EntityRef::Person(_)
                | EntityRef::Institution(_)
                | EntityRef::Term(_)
                | EntityRef::Program(_) => {
                    self.require(target)?;
                    Ok(admin_only())
                }
                _ => self.can_edit(person, target),
            },
            Mutation::GrantRole { role, .. } => self.can_grant(person, role),
            Mutation::RevokeRole { grant } => {
                let g = self.grant(*grant)?;
                self.can_grant(person, &g.role)
            }
            Mutation::ProposeInclusion { module, program, category } => {
                self.authorize_propose(person, *module, *program, *category)
            }
            Mutation::AcknowledgeInclusion { record, .. } => self.authorize_acknowledge(person, *record),
            Mutation::RevokeInclusion { record, .. } => self.authorize_revoke(person, *record),
            Mutation::SetLectureDates { lecture, .. } => self.can_modify_schedule(person, *lecture, now),
        }
    }

    fn create_in_institution(&self, person: PersonId, inst: InstitutionId) -> Result<AccessDecision> {
        if !self.exists(&EntityRef::Institution(inst)) {
            return Err(Error::dangling(format!("institution {inst}")));
        }
        if self.is_admin(person) {
            return Ok(AccessDecision::allow(Rule::Admin));
        }
        Ok(if self.holds(person, &Role::InstitutionEditor(inst)) {
            AccessDecision::allow(Rule::InstitutionEditor)
        } else if self
            .grants_of(person)
            .any(|g| matches!(g.role, Role::InstitutionEditor(_)))
        {
            AccessDecision::deny(Rule::WrongInstitution)
        } else {
            AccessDecision::deny(Rule::NoEditorGrant)
        })
    }

    /// Authorize and apply `mutation` as `actor` at time `now`.
    ///
    /// On error the state is unchanged and nothing is audited.
    pub fn apply(&mut self, actor: Actor, mutation: Mutation, now: Timestamp) -> Result<Applied> {
        let decision = self.authorize(actor, &mutation, now)?;
        decision.into_result()?;
        let op = mutation.name();
        let (entity, old_version, new_version) = self.execute(actor, mutation, now, decision)?;
        self.revision += 1;
        self.last_modified = self.last_modified.max(now);
        let seq = self.audit.len() as u64 + 1;
        self.audit.push(AuditEntry {
            seq,
            actor,
            operation: op.into(),
            entity: entity.clone(),
            old_version,
            new_version,
            at: now,
        });
        Ok(Applied {
            entity,
            old_version,
            new_version,
            revision: self.revision,
            decision,
        })
    }

    fn execute(
        &mut self,
        actor: Actor,
        mutation: Mutation,
        now: Timestamp,
        decision: AccessDecision,
    ) -> Result<(EntityRef, Option<u64>, Option<u64>)> {
        let person = actor.person();
        match mutation {
            Mutation::Create { entity } => {
                let r = self.create(entity)?;
                Ok((r, None, Some(1)))
            }
            Mutation::Update {
                target,
                expected_version,
                patch,
            } => {
                let v = self.update(&target, expected_version, patch)?;
                Ok((target, Some(v - 1), Some(v)))
            }
            Mutation::Delete {
                target,
                expected_version,
            } => {
                let v = self.delete(&target, expected_version)?;
                Ok((target, Some(v), None))
            }
            Mutation::GrantRole { grantee, role } => {
                let id = self.record_grant(actor, grantee, role, now, decision.reason)?;
                Ok((EntityRef::Grant(id), None, None))
            }
            Mutation::RevokeRole { grant } => {
                self.remove_grant(grant)?;
                Ok((EntityRef::Grant(grant), None, None))
            }
            Mutation::ProposeInclusion { module, program, category } => {
                let p = person.ok_or(Error::Forbidden(Rule::NotInvolved))?;
                let id = self.propose_inclusion(p, module, program, category, now)?;
                Ok((EntityRef::Inclusion(id), None, Some(1)))
            }
            Mutation::AcknowledgeInclusion { record, expected_version } => {
                let p = person.ok_or(Error::Forbidden(Rule::NotInvolved))?;
                let v = self.acknowledge_inclusion(p, record, expected_version, now)?;
                Ok((EntityRef::Inclusion(record), Some(v - 1), Some(v)))
            }
            Mutation::RevokeInclusion { record, expected_version } => {
                let p = person.ok_or(Error::Forbidden(Rule::NotInvolved))?;
                let v = self.revoke_inclusion(p, record, expected_version, now)?;
                Ok((EntityRef::Inclusion(record), Some(v - 1), Some(v)))
            }
            Mutation::SetLectureDates {
                lecture,
                expected_version,
                dates,
            } => {
                let v = self.replace_dates(lecture, expected_version, dates)?;
                Ok((EntityRef::Lecture(lecture), Some(v - 1), Some(v)))
            }
            Mutation::BootstrapAdmin {
                login_name,
                display_name,
            } => {
                let id = match self.person_by_login(&login_name) {
                    Some(p) => p.id,
                    None => match self.create(NewEntity::Person(Person {
                        id: PersonId(0),
                        version: 0,
                        display_name,
                        login_name,
                    }))? {
                        EntityRef::Person(id) => id,
                        _ => unreachable!(),
                    },
                };
                self.admins.insert(id);
                Ok((EntityRef::Person(id), None, Some(self.persons[&id].version)))
            }
        }
    }
}
