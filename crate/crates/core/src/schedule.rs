//! Timetable conflict detection.
//!
//! Two lecture dates conflict when they fall on a common day and their time
//! spans intersect with positive duration, and they either share a room or
//! belong to two lectures reachable from one study program. A weekly slot
//! falls on every calendar date with its weekday.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ids::*;
use crate::inclusion::InclusionState;
use crate::model::{LectureDate, ProgramKind};
use crate::state::State;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConflictKind {
    RoomOverlap,
    ProgramOverlap,
}

/// One lecture date, identified by its lecture and position in the
/// lecture's date list.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DateRef {
    pub lecture: LectureId,
    pub index: usize,
    pub date: LectureDate,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "id", rename_all = "lowercase")]
pub enum ConflictContext {
    Room(String),
    Program(ProgramId),
}

/// A pair of intersecting dates. `first` sorts before `second` by
/// (lecture, index), so each unordered pair has one representation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Conflict {
    pub kind: ConflictKind,
    pub first: DateRef,
    pub second: DateRef,
    pub context: ConflictContext,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConflictScope {
    pub term: Option<TermId>,
    pub program: Option<ProgramId>,
    pub room: Option<String>,
}

impl ConflictScope {
    pub fn term(term: TermId) -> Self {
        ConflictScope {
            term: Some(term),
            ..Default::default()
        }
    }
}

/// Input to the sweep: a date plus the programs its lecture is reachable
/// from.
#[derive(Debug, Clone)]
pub struct ScheduledDate {
    pub at: DateRef,
    pub programs: BTreeSet<ProgramId>,
}

/// Sweep-line conflict search. Dates are bucketed by weekday, sorted by
/// start, and each date is compared only with the still-open dates of its
/// bucket. Output is sorted and free of duplicates.
pub fn find_conflicts(dates: &[ScheduledDate]) -> Vec<Conflict> {
    let mut buckets: [Vec<&ScheduledDate>; 7] = Default::default();
    for d in dates {
        buckets[d.at.date.on.weekday().index() as usize].push(d);
    }
    let mut out = Vec::new();
    for bucket in buckets.iter_mut() {
        bucket.sort_by_key(|d| (d.at.date.start, d.at.date.end));
        let mut open: Vec<&ScheduledDate> = Vec::new();
        for &d in bucket.iter() {
            open.retain(|o| o.at.date.end > d.at.date.start);
            for &o in &open {
                if o.at.date.on.shares_day(d.at.date.on) {
                    emit_pair(o, d, &mut out);
                }
            }
            open.push(d);
        }
    }
    out.sort();
    out.dedup();
    out
}

fn emit_pair(a: &ScheduledDate, b: &ScheduledDate, out: &mut Vec<Conflict>) {
    let (a, b) = if (a.at.lecture, a.at.index) <= (b.at.lecture, b.at.index) {
        (a, b)
    } else {
        (b, a)
    };
    if a.at.date.room == b.at.date.room {
        out.push(Conflict {
            kind: ConflictKind::RoomOverlap,
            first: a.at.clone(),
            second: b.at.clone(),
            context: ConflictContext::Room(a.at.date.room.clone()),
        });
    }
    if a.at.lecture != b.at.lecture {
        for p in a.programs.intersection(&b.programs) {
            out.push(Conflict {
                kind: ConflictKind::ProgramOverlap,
                first: a.at.clone(),
                second: b.at.clone(),
                context: ConflictContext::Program(*p),
            });
        }
    }
}

impl State {
    /// Lectures of `term` reachable from `program`: listed lectures of a
    /// single-cycle program, or the lectures that acknowledged modules of a
    /// two-cycle program offer in that term.
    pub fn program_lectures(&self, program: ProgramId, term: &TermId) -> Result<BTreeSet<LectureId>> {
        let p = self.program(program)?;
        self.term(term)?;
        let mut out = BTreeSet::new();
        match p.kind {
            ProgramKind::SingleCycle => out.extend(p.lectures.iter().copied()),
            ProgramKind::TwoCycle => {
                for r in self.inclusions.values() {
                    if r.program == program && r.state == InclusionState::Acknowledged {
                        out.extend(self.resolve_module_lectures(r.module, term)?);
                    }
                }
            }
        }
        out.retain(|l| self.lectures.get(l).is_some_and(|l| &l.term == term));
        Ok(out)
    }

    /// All conflicts among the dates of `scope.term`'s lectures.
    ///
    /// With a program filter only that program's lectures are considered and
    /// only that program is used as overlap context. With a room filter a
    /// conflict is kept when either date uses the room.
    pub fn detect_conflicts(&self, scope: &ConflictScope) -> Result<Vec<Conflict>> {
        let term = match &scope.term {
            Some(t) => t,
            None => return Err(crate::Error::validation("conflict scope needs a term")),
        };
        self.term(term)?;
        let programs: Vec<ProgramId> = match scope.program {
            Some(p) => {
                self.program(p)?;
                alloc::vec![p]
            }
            None => self.programs.keys().copied().collect(),
        };
        let mut reach: BTreeMap<LectureId, BTreeSet<ProgramId>> = BTreeMap::new();
        for p in &programs {
            for l in self.program_lectures(*p, term)? {
                reach.entry(l).or_default().insert(*p);
            }
        }
        let mut dates = Vec::new();
        for l in self.lectures.values().filter(|l| &l.term == term) {
            if scope.program.is_some() && !reach.contains_key(&l.id) {
                continue;
            }
            let progs = reach.get(&l.id).cloned().unwrap_or_default();
            for (index, date) in l.dates.iter().enumerate() {
                dates.push(ScheduledDate {
                    at: DateRef {
                        lecture: l.id,
                        index,
                        date: date.clone(),
                    },
                    programs: progs.clone(),
                });
            }
        }
        let mut found = find_conflicts(&dates);
        if let Some(room) = &scope.room {
            found.retain(|c| &c.first.date.room == room || &c.second.date.room == room);
        }
        Ok(found)
    }
}
