//! Two-sided acknowledgment of a module's place in a study program.
//!
//! Either side may propose; the proposer's side counts as acknowledged.
//! The record becomes `ACKNOWLEDGED` once the module side (responsible or
//! lecturer holding edit rights) and the program side (dean or program
//! responsible) have both agreed. Until then the module is held under
//! reserve and no generated document lists it. Either side may revoke at
//! any time; `REVOKED` is terminal and a new proposal starts a fresh record.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::access::{AccessDecision, Rule};
use crate::error::{Error, Result};
use crate::ids::*;
use crate::model::{EntityRef, ProgramKind};
use crate::mutation::Actor;
use crate::state::State;
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InclusionState {
    Pending,
    Acknowledged,
    Revoked,
}

impl InclusionState {
    pub fn as_str(self) -> &'static str {
        match self {
            InclusionState::Pending => "PENDING",
            InclusionState::Acknowledged => "ACKNOWLEDGED",
            InclusionState::Revoked => "REVOKED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Module,
    Program,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum InclusionAction {
    Proposed { module_side: bool, program_side: bool },
    Acknowledged { sides: Vec<Side> },
    Revoked,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub actor: Actor,
    #[serde(flatten)]
    pub action: InclusionAction,
    pub at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InclusionRecord {
    pub id: InclusionId,
    pub version: u64,
    pub module: ModuleId,
    pub program: ProgramId,
    pub category: CategoryId,
    pub lecturer_ack: bool,
    pub dean_ack: bool,
    pub state: InclusionState,
    /// Append-only; the flags and state above are a fold over it.
    pub history: Vec<HistoryEntry>,
}

/// Flags and state obtained by folding a history from an empty record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Folded {
    pub lecturer_ack: bool,
    pub dean_ack: bool,
    pub state: InclusionState,
}

impl InclusionRecord {
    pub fn replay(history: &[HistoryEntry]) -> Folded {
        let mut f = Folded {
            lecturer_ack: false,
            dean_ack: false,
            state: InclusionState::Pending,
        };
        for h in history {
            if f.state == InclusionState::Revoked {
                break;
            }
            match &h.action {
                InclusionAction::Proposed { module_side, program_side } => {
                    f.lecturer_ack |= module_side;
                    f.dean_ack |= program_side;
                }
                InclusionAction::Acknowledged { sides } => {
                    for s in sides {
                        match s {
                            Side::Module => f.lecturer_ack = true,
                            Side::Program => f.dean_ack = true,
                        }
                    }
                }
                InclusionAction::Revoked => {
                    f.state = InclusionState::Revoked;
                    continue;
                }
            }
            if f.lecturer_ack && f.dean_ack {
                f.state = InclusionState::Acknowledged;
            }
        }
        f
    }

    /// True when the stored flags equal the fold over the history.
    pub fn is_consistent(&self) -> bool {
        let f = Self::replay(&self.history);
        f.lecturer_ack == self.lecturer_ack && f.dean_ack == self.dean_ack && f.state == self.state
    }

    pub fn has_ack(&self, side: Side) -> bool {
        match side {
            Side::Module => self.lecturer_ack,
            Side::Program => self.dean_ack,
        }
    }

    fn apply(&mut self, entry: HistoryEntry) {
        self.history.push(entry);
        let f = Self::replay(&self.history);
        self.lecturer_ack = f.lecturer_ack;
        self.dean_ack = f.dean_ack;
        self.state = f.state;
        self.version += 1;
    }
}

impl State {
    /// Module side: the module's responsible or one of its lecturers, holding
    /// edit rights on the module.
    pub fn on_module_side(&self, person: PersonId, module: ModuleId) -> Result<bool> {
        let m = self.module(module)?;
        if m.responsible != person && !m.lecturers.contains(&person) {
            return Ok(false);
        }
        Ok(self.can_edit(person, &EntityRef::Module(module))?.allowed)
    }

    /// Program side: the dean or a program responsible.
    pub fn on_program_side(&self, person: PersonId, program: ProgramId) -> Result<bool> {
        self.program(program)?;
        Ok(self.has_program_authority(person, program))
    }

    pub fn sides_of(&self, person: PersonId, module: ModuleId, program: ProgramId) -> Result<Vec<Side>> {
        let mut out = Vec::new();
        if self.on_module_side(person, module)? {
            out.push(Side::Module);
        }
        if self.on_program_side(person, program)? {
            out.push(Side::Program);
        }
        Ok(out)
    }

    pub fn authorize_propose(
        &self,
        actor: PersonId,
        module: ModuleId,
        program: ProgramId,
        category: CategoryId,
    ) -> Result<AccessDecision> {
        self.person(actor)?;
        self.category(category)?;
        let sides = self.sides_of(actor, module, program)?;
        Ok(match sides.first() {
            Some(Side::Module) => AccessDecision::allow(Rule::ModuleSide),
            Some(Side::Program) => AccessDecision::allow(Rule::ProgramSide),
            None => AccessDecision::deny(Rule::NotInvolved),
        })
    }

    /// Create a `PENDING` record with the proposer's side(s) acknowledged.
    /// Authorization is the caller's job (see [`State::authorize_propose`]).
    pub(crate) fn propose_inclusion(
        &mut self,
        actor: PersonId,
        module: ModuleId,
        program: ProgramId,
        category: CategoryId,
        now: Timestamp,
    ) -> Result<InclusionId> {
        let p = self.program(program)?;
        if p.kind != ProgramKind::TwoCycle {
            return Err(Error::KindMismatch(format!(
                "program {program} is single-cycle; modules are included in two-cycle programs only"
            )));
        }
        if !p.categories.contains(&category) || self.category(category)?.program != program {
            return Err(Error::validation(format!(
                "category {category} does not belong to program {program}"
            )));
        }
        let live = self.inclusions.values().find(|r| {
            r.module == module
                && r.program == program
                && r.category == category
                && r.state != InclusionState::Revoked
        });
        if let Some(r) = live {
            return Err(Error::Duplicate(format!(
                "inclusion {} already covers module {module} in program {program}, category {category}",
                r.id
            )));
        }
        let sides = self.sides_of(actor, module, program)?;
        if sides.is_empty() {
            return Err(Error::Forbidden(Rule::NotInvolved));
        }
        let id = InclusionId(self.fresh_id());
        let mut record = InclusionRecord {
            id,
            version: 0,
            module,
            program,
            category,
            lecturer_ack: false,
            dean_ack: false,
            state: InclusionState::Pending,
            history: Vec::new(),
        };
        record.apply(HistoryEntry {
            actor: Actor::Person(actor),
            action: InclusionAction::Proposed {
                module_side: sides.contains(&Side::Module),
                program_side: sides.contains(&Side::Program),
            },
            at: now,
        });
        self.inclusions.insert(id, record);
        Ok(id)
    }

    fn check_record_version(r: &InclusionRecord, expected: Option<u64>) -> Result<()> {
        match expected {
            Some(v) if v != r.version => Err(Error::StaleVersion {
                expected: v,
                actual: r.version,
            }),
            _ => Ok(()),
        }
    }

    pub fn authorize_acknowledge(&self, actor: PersonId, record: InclusionId) -> Result<AccessDecision> {
        self.person(actor)?;
        let r = self.inclusion(record)?;
        if r.state != InclusionState::Pending {
            return Err(Error::InvalidState(format!(
                "inclusion {record} is {}",
                r.state.as_str()
            )));
        }
        let sides = self.sides_of(actor, r.module, r.program)?;
        Ok(match sides.iter().find(|s| !r.has_ack(**s)) {
            Some(Side::Module) => AccessDecision::allow(Rule::ModuleSide),
            Some(Side::Program) => AccessDecision::allow(Rule::ProgramSide),
            None if sides.is_empty() => AccessDecision::deny(Rule::NotInvolved),
            None => AccessDecision::deny(Rule::SideAlreadyAcknowledged),
        })
    }

    pub(crate) fn acknowledge_inclusion(
        &mut self,
        actor: PersonId,
        record: InclusionId,
        expected_version: Option<u64>,
        now: Timestamp,
    ) -> Result<u64> {
        let r = self.inclusion(record)?;
        Self::check_record_version(r, expected_version)?;
        let sides: Vec<Side> = self
            .sides_of(actor, r.module, r.program)?
            .into_iter()
            .filter(|s| !r.has_ack(*s))
            .collect();
        if sides.is_empty() {
            return Err(Error::Forbidden(Rule::SideAlreadyAcknowledged));
        }
        let r = self.inclusions.get_mut(&record).expect("checked above");
        r.apply(HistoryEntry {
            actor: Actor::Person(actor),
            action: InclusionAction::Acknowledged { sides },
            at: now,
        });
        Ok(r.version)
    }

    pub fn authorize_revoke(&self, actor: PersonId, record: InclusionId) -> Result<AccessDecision> {
        self.person(actor)?;
        let r = self.inclusion(record)?;
        if r.state == InclusionState::Revoked {
            return Err(Error::InvalidState(format!("inclusion {record} is already REVOKED")));
        }
        Ok(match self.sides_of(actor, r.module, r.program)?.first() {
            Some(Side::Module) => AccessDecision::allow(Rule::ModuleSide),
            Some(Side::Program) => AccessDecision::allow(Rule::ProgramSide),
            None => AccessDecision::deny(Rule::NotInvolved),
        })
    }

    pub(crate) fn revoke_inclusion(
        &mut self,
        actor: PersonId,
        record: InclusionId,
        expected_version: Option<u64>,
        now: Timestamp,
    ) -> Result<u64> {
        let r = self.inclusion(record)?;
        if r.state == InclusionState::Revoked {
            return Err(Error::InvalidState(format!("inclusion {record} is already REVOKED")));
        }
        Self::check_record_version(r, expected_version)?;
        let r = self.inclusions.get_mut(&record).expect("checked above");
        r.apply(HistoryEntry {
            actor: Actor::Person(actor),
            action: InclusionAction::Revoked,
            at: now,
        });
        Ok(r.version)
    }

    /// Modules listed under each category of a two-cycle program: exactly
    /// those with an `ACKNOWLEDGED` record, in category order, then by module
    /// title and id.
    pub fn effective_modules(&self, program: ProgramId) -> Result<Vec<(CategoryId, Vec<ModuleId>)>> {
        let p = self.program(program)?;
        if p.kind != ProgramKind::TwoCycle {
            return Err(Error::KindMismatch(format!("program {program} is single-cycle")));
        }
        let mut by_category: BTreeMap<CategoryId, Vec<ModuleId>> =
            p.categories.iter().map(|c| (*c, Vec::new())).collect();
        for r in self.inclusions.values() {
            if r.program == program && r.state == InclusionState::Acknowledged {
                if let Some(list) = by_category.get_mut(&r.category) {
                    list.push(r.module);
                }
            }
        }
        Ok(p
            .categories
            .iter()
            .map(|c| {
                let mut list = by_category.remove(c).unwrap_or_default();
                list.sort_by(|a, b| {
                    let ta = self.modules.get(a).map(|m| m.title.as_str());
                    let tb = self.modules.get(b).map(|m| m.title.as_str());
                    ta.cmp(&tb).then(a.cmp(b))
                });
                list.dedup();
                (*c, list)
            })
            .collect())
    }

    /// Pending records waiting for `person`'s side, ordered by id.
    pub fn inclusion_inbox(&self, person: PersonId) -> Result<Vec<InclusionId>> {
        self.person(person)?;
        let mut out = Vec::new();
        for r in self.inclusions.values() {
            if r.state != InclusionState::Pending {
                continue;
            }
            let sides = self.sides_of(person, r.module, r.program)?;
            if sides.iter().any(|s| !r.has_ack(*s)) {
                out.push(r.id);
            }
        }
        Ok(out)
    }
}
