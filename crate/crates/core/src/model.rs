//! Entities of the module handbook and their per-entity invariants.
//!
//! Cross-entity rules (referential integrity, login uniqueness, program
//! structure) are enforced by [`crate::State`]; the checks here only look at
//! a single value.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::*;
use crate::time::{Date, TimeOfDay, Weekday};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Person {
    #[serde(default)]
    pub id: PersonId,
    #[serde(default)]
    pub version: u64,
    pub display_name: String,
    pub login_name: String,
}

impl Person {
    pub fn validate(&self) -> Result<()> {
        if self.login_name.trim().is_empty() {
            return Err(Error::validation("person login_name must not be empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Institution {
    #[serde(default)]
    pub id: InstitutionId,
    #[serde(default)]
    pub version: u64,
    pub name: String,
    pub head: PersonId,
    #[serde(default)]
    pub members: BTreeSet<PersonId>,
}

impl Institution {
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::validation("institution name must not be empty"));
        }
        if !self.members.contains(&self.head) {
            return Err(Error::validation(format!(
                "institution head {} must also be a member",
                self.head
            )));
        }
        Ok(())
    }
}

/// A teaching term with its schedule freeze date. From the freeze date on,
/// only timetable persons may change lecture dates of the term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub id: TermId,
    #[serde(default)]
    pub version: u64,
    pub schedule_freeze_date: Date,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProgramKind {
    /// Lectures hang directly off the program.
    SingleCycle,
    /// Modules are grouped under categories.
    TwoCycle,
}

impl ProgramKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProgramKind::SingleCycle => "SINGLE_CYCLE",
            ProgramKind::TwoCycle => "TWO_CYCLE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyProgram {
    #[serde(default)]
    pub id: ProgramId,
    #[serde(default)]
    pub version: u64,
    pub title: String,
    pub kind: ProgramKind,
    pub dean: PersonId,
    /// Display order of the program's categories. Maintained by the store
    /// when categories are created or deleted; a patch may only reorder it.
    #[serde(default)]
    pub categories: Vec<CategoryId>,
    #[serde(default)]
    pub lectures: BTreeSet<LectureId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    #[serde(default)]
    pub id: CategoryId,
    #[serde(default)]
    pub version: u64,
    pub title: String,
    pub program: ProgramId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Module {
    #[serde(default)]
    pub id: ModuleId,
    #[serde(default)]
    pub version: u64,
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub institution: InstitutionId,
    pub responsible: PersonId,
    #[serde(default)]
    pub lecturers: BTreeSet<PersonId>,
    /// Lectures referenced directly, independent of the term.
    #[serde(default)]
    pub lectures: BTreeSet<LectureId>,
    #[serde(default)]
    pub topics: BTreeSet<TopicId>,
    /// Free-form descriptive fields (credits, exam form, workload, ...),
    /// passed through to catalogs verbatim.
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
}

impl Module {
    pub fn validate(&self) -> Result<()> {
        if self.attributes.keys().any(|k| k.trim().is_empty()) {
            return Err(Error::validation("module attribute keys must not be empty"));
        }
        Ok(())
    }
}

/// A stable container inside a module whose concrete lectures change from
/// term to term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    #[serde(default)]
    pub id: TopicId,
    #[serde(default)]
    pub version: u64,
    pub title: String,
    #[serde(default)]
    pub assignments: BTreeMap<TermId, BTreeSet<LectureId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lecture {
    #[serde(default)]
    pub id: LectureId,
    #[serde(default)]
    pub version: u64,
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub institution: InstitutionId,
    #[serde(default)]
    pub lecturers: BTreeSet<PersonId>,
    pub term: TermId,
    /// May be empty while the lecture is unscheduled; catalogs flag that.
    #[serde(default)]
    pub dates: Vec<LectureDate>,
}

impl Lecture {
    pub fn validate(&self) -> Result<()> {
        self.dates.iter().try_for_each(LectureDate::validate)
    }
}

/// Either a weekly slot recurring through the term or one calendar date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DateSpec {
    Weekly(Weekday),
    On(Date),
}

impl DateSpec {
    pub fn weekday(self) -> Weekday {
        match self {
            DateSpec::Weekly(d) => d,
            DateSpec::On(date) => date.weekday(),
        }
    }

    /// True when both specs can fall on the same day. A weekly slot meets
    /// every calendar date on its weekday.
    pub fn shares_day(self, other: DateSpec) -> bool {
        match (self, other) {
            (DateSpec::On(a), DateSpec::On(b)) => a == b,
            _ => self.weekday() == other.weekday(),
        }
    }
}

impl fmt::Display for DateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DateSpec::Weekly(d) => d.fmt(f),
            DateSpec::On(d) => d.fmt(f),
        }
    }
}

impl FromStr for DateSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.len() == 3 {
            s.parse().map(DateSpec::Weekly)
        } else {
            s.parse().map(DateSpec::On)
        }
    }
}

impl TryFrom<String> for DateSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DateSpec> for String {
    fn from(d: DateSpec) -> String {
        d.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LectureDate {
    pub on: DateSpec,
    pub start: TimeOfDay,
    pub end: TimeOfDay,
    pub room: String,
}

impl LectureDate {
    pub fn validate(&self) -> Result<()> {
        if self.start >= self.end {
            return Err(Error::validation(format!(
                "lecture date {} must start before it ends ({}-{})",
                self.on, self.start, self.end
            )));
        }
        Ok(())
    }

    /// Positive-measure intersection; spans that only touch do not overlap.
    pub fn overlaps(&self, other: &LectureDate) -> bool {
        self.on.shares_day(other.on) && self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for LectureDate {
    /// `<weekday|YYYY-MM-DD> HH:MM-HH:MM @<room>`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}-{} @{}", self.on, self.start, self.end, self.room)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Institution,
    Person,
    Program,
    Category,
    Module,
    Topic,
    Lecture,
    Term,
    Inclusion,
    Grant,
}

impl EntityKind {
    pub const ALL: [EntityKind; 10] = [
        EntityKind::Institution,
        EntityKind::Person,
        EntityKind::Program,
        EntityKind::Category,
        EntityKind::Module,
        EntityKind::Topic,
        EntityKind::Lecture,
        EntityKind::Term,
        EntityKind::Inclusion,
        EntityKind::Grant,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Institution => "institution",
            EntityKind::Person => "person",
            EntityKind::Program => "program",
            EntityKind::Category => "category",
            EntityKind::Module => "module",
            EntityKind::Topic => "topic",
            EntityKind::Lecture => "lecture",
            EntityKind::Term => "term",
            EntityKind::Inclusion => "inclusion",
            EntityKind::Grant => "grant",
        }
    }

    /// Collection segment used in HTTP paths.
    pub fn plural(self) -> &'static str {
        match self {
            EntityKind::Institution => "institutions",
            EntityKind::Person => "persons",
            EntityKind::Program => "programs",
            EntityKind::Category => "categories",
            EntityKind::Module => "modules",
            EntityKind::Topic => "topics",
            EntityKind::Lecture => "lectures",
            EntityKind::Term => "terms",
            EntityKind::Inclusion => "inclusions",
            EntityKind::Grant => "grants",
        }
    }

    pub fn from_plural(s: &str) -> Option<EntityKind> {
        EntityKind::ALL.into_iter().find(|k| k.plural() == s)
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A reference to any stored entity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum EntityRef {
    Institution(InstitutionId),
    Person(PersonId),
    Program(ProgramId),
    Category(CategoryId),
    Module(ModuleId),
    Topic(TopicId),
    Lecture(LectureId),
    Term(TermId),
    Inclusion(InclusionId),
    Grant(GrantId),
}

impl EntityRef {
    pub fn kind(&self) -> EntityKind {
        match self {
            EntityRef::Institution(_) => EntityKind::Institution,
            EntityRef::Person(_) => EntityKind::Person,
            EntityRef::Program(_) => EntityKind::Program,
            EntityRef::Category(_) => EntityKind::Category,
            EntityRef::Module(_) => EntityKind::Module,
            EntityRef::Topic(_) => EntityKind::Topic,
            EntityRef::Lecture(_) => EntityKind::Lecture,
            EntityRef::Term(_) => EntityKind::Term,
            EntityRef::Inclusion(_) => EntityKind::Inclusion,
            EntityRef::Grant(_) => EntityKind::Grant,
        }
    }

    /// Parse the `{id}` path segment for an entity of `kind`.
    pub fn parse(kind: EntityKind, id: &str) -> Result<EntityRef> {
        Ok(match kind {
            EntityKind::Institution => EntityRef::Institution(id.parse()?),
            EntityKind::Person => EntityRef::Person(id.parse()?),
            EntityKind::Program => EntityRef::Program(id.parse()?),
            EntityKind::Category => EntityRef::Category(id.parse()?),
            EntityKind::Module => EntityRef::Module(id.parse()?),
            EntityKind::Topic => EntityRef::Topic(id.parse()?),
            EntityKind::Lecture => EntityRef::Lecture(id.parse()?),
            EntityKind::Term => EntityRef::Term(id.parse()?),
            EntityKind::Inclusion => EntityRef::Inclusion(id.parse()?),
            EntityKind::Grant => EntityRef::Grant(id.parse()?),
        })
    }

    fn id_string(&self) -> String {
        match self {
            EntityRef::Institution(id) => id.to_string(),
            EntityRef::Person(id) => id.to_string(),
            EntityRef::Program(id) => id.to_string(),
            EntityRef::Category(id) => id.to_string(),
            EntityRef::Module(id) => id.to_string(),
            EntityRef::Topic(id) => id.to_string(),
            EntityRef::Lecture(id) => id.to_string(),
            EntityRef::Term(id) => id.to_string(),
            EntityRef::Inclusion(id) => id.to_string(),
            EntityRef::Grant(id) => id.to_string(),
        }
    }
}

impl fmt::Display for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind(), self.id_string())
    }
}

/// Payload of a create request. Ids and versions in the payload are ignored
/// and assigned by the store (terms keep their textual id).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "fields", rename_all = "lowercase")]
pub enum NewEntity {
    Institution(Institution),
    Person(Person),
    Program(StudyProgram),
    Category(Category),
    Module(Module),
    Topic(Topic),
    Lecture(Lecture),
    Term(Term),
}

impl NewEntity {
    pub fn kind(&self) -> EntityKind {
        match self {
            NewEntity::Institution(_) => EntityKind::Institution,
            NewEntity::Person(_) => EntityKind::Person,
            NewEntity::Program(_) => EntityKind::Program,
            NewEntity::Category(_) => EntityKind::Category,
            NewEntity::Module(_) => EntityKind::Module,
            NewEntity::Topic(_) => EntityKind::Topic,
            NewEntity::Lecture(_) => EntityKind::Lecture,
            NewEntity::Term(_) => EntityKind::Term,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstitutionPatch {
    pub name: Option<String>,
    pub head: Option<PersonId>,
    pub members: Option<BTreeSet<PersonId>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersonPatch {
    pub display_name: Option<String>,
    pub login_name: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermPatch {
    pub schedule_freeze_date: Option<Date>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramPatch {
    pub title: Option<String>,
    pub kind: Option<ProgramKind>,
    pub dean: Option<PersonId>,
    /// Reordering only; must be a permutation of the current list.
    pub categories: Option<Vec<CategoryId>>,
    pub lectures: Option<BTreeSet<LectureId>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryPatch {
    pub title: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulePatch {
    pub title: Option<String>,
    pub description: Option<String>,
    pub institution: Option<InstitutionId>,
    pub responsible: Option<PersonId>,
    pub lecturers: Option<BTreeSet<PersonId>>,
    pub lectures: Option<BTreeSet<LectureId>>,
    pub topics: Option<BTreeSet<TopicId>>,
    pub attributes: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicPatch {
    pub title: Option<String>,
    pub assignments: Option<BTreeMap<TermId, BTreeSet<LectureId>>>,
}

/// Lecture dates are not patchable here; they go through the schedule
/// operation so the freeze rule applies.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LecturePatch {
    pub title: Option<String>,
    pub description: Option<String>,
    pub institution: Option<InstitutionId>,
    pub lecturers: Option<BTreeSet<PersonId>>,
    pub term: Option<TermId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "fields", rename_all = "lowercase")]
pub enum EntityPatch {
    Institution(InstitutionPatch),
    Person(PersonPatch),
    Program(ProgramPatch),
    Category(CategoryPatch),
    Module(ModulePatch),
    Topic(TopicPatch),
    Lecture(LecturePatch),
    Term(TermPatch),
}

impl EntityPatch {
    pub fn kind(&self) -> EntityKind {
        match self {
            EntityPatch::Institution(_) => EntityKind::Institution,
            EntityPatch::Person(_) => EntityKind::Person,
            EntityPatch::Program(_) => EntityKind::Program,
            EntityPatch::Category(_) => EntityKind::Category,
            EntityPatch::Module(_) => EntityKind::Module,
            EntityPatch::Topic(_) => EntityKind::Topic,
            EntityPatch::Lecture(_) => EntityKind::Lecture,
            EntityPatch::Term(_) => EntityKind::Term,
        }
    }
}
