//! Fixture bundles: a whole store as one reviewable JSON document.
//!
//! Entities refer to each other through symbolic keys (any string unique
//! within its kind); numeric ids are assigned at import, in bundle order.
//! Export names entities `<kind>-<n>` by position and writes canonical JSON
//! (sorted keys, two-space indent, trailing newline), so export → import →
//! export reproduces the first bundle byte for byte. Terms keep their own
//! ids. The audit log is not part of a bundle.

use std::collections::{BTreeMap, HashMap};

use mhb_core::access::Rule;
use mhb_core::inclusion::{HistoryEntry, InclusionAction};
use mhb_core::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

pub const FORMAT: &str = "mhb-bundle/1";

fn one() -> u64 {
    1
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundlePerson {
    pub key: String,
    #[serde(default = "one")]
    pub version: u64,
    pub display_name: String,
    pub login_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleInstitution {
    pub key: String,
    #[serde(default = "one")]
    pub version: u64,
    pub name: String,
    pub head: String,
    #[serde(default)]
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleTerm {
    pub id: TermId,
    #[serde(default = "one")]
    pub version: u64,
    pub schedule_freeze_date: Date,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleProgram {
    pub key: String,
    #[serde(default = "one")]
    pub version: u64,
    pub title: String,
    pub kind: ProgramKind,
    pub dean: String,
    /// Category keys in display order.
    #[serde(default)]
    pub categories: Vec<String>,
    #[serde(default)]
    pub lectures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleCategory {
    pub key: String,
    #[serde(default = "one")]
    pub version: u64,
    pub title: String,
    pub program: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleModule {
    pub key: String,
    #[serde(default = "one")]
    pub version: u64,
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub institution: String,
    pub responsible: String,
    #[serde(default)]
    pub lecturers: Vec<String>,
    #[serde(default)]
    pub lectures: Vec<String>,
    #[serde(default)]
    pub topics: Vec<String>,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleTopic {
    pub key: String,
    #[serde(default = "one")]
    pub version: u64,
    pub title: String,
    #[serde(default)]
    pub assignments: BTreeMap<TermId, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleLecture {
    pub key: String,
    #[serde(default = "one")]
    pub version: u64,
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub institution: String,
    #[serde(default)]
    pub lecturers: Vec<String>,
    pub term: TermId,
    #[serde(default)]
    pub dates: Vec<LectureDate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleHistory {
    /// `system` or a person key.
    pub actor: String,
    #[serde(flatten)]
    pub action: InclusionAction,
    pub at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleInclusion {
    pub key: String,
    /// Defaults to the history length.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub version: u64,
    pub module: String,
    pub program: String,
    pub category: String,
    /// Informational; checked against the history when present.
    #[serde(default)]
    pub state: Option<InclusionState>,
    pub history: Vec<BundleHistory>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleGrant {
    pub key: String,
    pub grantee: String,
    /// `INSTITUTION_EDITOR`, `TIMETABLE_PERSON` or `PROGRAM_RESPONSIBLE`.
    pub role: String,
    /// Key of the institution, lecture or program the role is scoped to.
    pub scope: String,
    /// `system` or a person key.
    pub granter: String,
    #[serde(default)]
    pub granted_at: Timestamp,
    pub basis: Rule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bundle {
    pub format: String,
    #[serde(default)]
    pub last_modified: Timestamp,
    #[serde(default)]
    pub admins: Vec<String>,
    #[serde(default)]
    pub persons: Vec<BundlePerson>,
    #[serde(default)]
    pub institutions: Vec<BundleInstitution>,
    #[serde(default)]
    pub terms: Vec<BundleTerm>,
    #[serde(default)]
    pub programs: Vec<BundleProgram>,
    #[serde(default)]
    pub categories: Vec<BundleCategory>,
    #[serde(default)]
    pub modules: Vec<BundleModule>,
    #[serde(default)]
    pub topics: Vec<BundleTopic>,
    #[serde(default)]
    pub lectures: Vec<BundleLecture>,
    #[serde(default)]
    pub inclusions: Vec<BundleInclusion>,
    #[serde(default)]
    pub grants: Vec<BundleGrant>,
}

const SYSTEM: &str = "system";

fn key_of(kind: &str, ids: &HashMap<u64, String>, id: u64) -> String {
    ids.get(&id).cloned().unwrap_or_else(|| format!("{kind}-?{id}"))
}

impl Bundle {
    pub fn parse(text: &str) -> Result<Bundle> {
        let b: Bundle =
            serde_json::from_str(text).map_err(|e| ServiceError::validation(format!("bundle: {e}")))?;
        if b.format != FORMAT {
            return Err(ServiceError::validation(format!(
                "bundle: format `{}` is not supported (expected `{FORMAT}`)",
                b.format
            )));
        }
        Ok(b)
    }

    /// Canonical serialization: sorted keys, pretty-printed, LF-terminated.
    pub fn to_canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("bundle serializes");
        let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
        s.push('\n');
        s
    }

    pub fn from_state(s: &State) -> Bundle {
        fn keys<T>(kind: &str, items: impl Iterator<Item = T>, id: impl Fn(&T) -> u64) -> HashMap<u64, String> {
            items
                .enumerate()
                .map(|(n, x)| (id(&x), format!("{kind}-{}", n + 1)))
                .collect()
        }
        let pk = keys("person", s.persons(), |p| p.id.0);
        let ik = keys("institution", s.institutions(), |i| i.id.0);
        let prk = keys("program", s.programs(), |p| p.id.0);
        let ck = keys("category", s.categories(), |c| c.id.0);
        let mk = keys("module", s.modules(), |m| m.id.0);
        let tk = keys("topic", s.topics(), |t| t.id.0);
        let lk = keys("lecture", s.lectures(), |l| l.id.0);
        let p = |id: PersonId| key_of("person", &pk, id.0);
        let lec = |id: LectureId| key_of("lecture", &lk, id.0);
        let actor = |a: Actor| match a {
            Actor::System => SYSTEM.to_string(),
            Actor::Person(id) => p(id),
        };

        Bundle {
            format: FORMAT.to_string(),
            last_modified: s.last_modified(),
            admins: s.admins().iter().map(|a| p(*a)).collect(),
            persons: s
                .persons()
                .map(|x| BundlePerson {
                    key: p(x.id),
                    version: x.version,
                    display_name: x.display_name.clone(),
                    login_name: x.login_name.clone(),
                })
                .collect(),
            institutions: s
                .institutions()
                .map(|x| BundleInstitution {
                    key: key_of("institution", &ik, x.id.0),
                    version: x.version,
                    name: x.name.clone(),
                    head: p(x.head),
                    members: x.members.iter().map(|m| p(*m)).collect(),
                })
                .collect(),
            terms: s
                .terms()
                .map(|t| BundleTerm {
                    id: t.id.clone(),
                    version: t.version,
                    schedule_freeze_date: t.schedule_freeze_date,
                })
                .collect(),
            programs: s
                .programs()
                .map(|x| BundleProgram {
                    key: key_of("program", &prk, x.id.0),
                    version: x.version,
                    title: x.title.clone(),
                    kind: x.kind,
                    dean: p(x.dean),
                    categories: x.categories.iter().map(|c| key_of("category", &ck, c.0)).collect(),
                    lectures: x.lectures.iter().map(|l| lec(*l)).collect(),
                })
                .collect(),
            categories: s
                .categories()
                .map(|x| BundleCategory {
                    key: key_of("category", &ck, x.id.0),
                    version: x.version,
                    title: x.title.clone(),
                    program: key_of("program", &prk, x.program.0),
                })
                .collect(),
            modules: s
                .modules()
                .map(|x| BundleModule {
                    key: key_of("module", &mk, x.id.0),
                    version: x.version,
                    title: x.title.clone(),
                    description: x.description.clone(),
                    institution: key_of("institution", &ik, x.institution.0),
                    responsible: p(x.responsible),
                    lecturers: x.lecturers.iter().map(|l| p(*l)).collect(),
                    lectures: x.lectures.iter().map(|l| lec(*l)).collect(),
                    topics: x.topics.iter().map(|t| key_of("topic", &tk, t.0)).collect(),
                    attributes: x.attributes.clone(),
                })
                .collect(),
            topics: s
                .topics()
                .map(|x| BundleTopic {
                    key: key_of("topic", &tk, x.id.0),
                    version: x.version,
                    title: x.title.clone(),
                    assignments: x
                        .assignments
                        .iter()
                        .map(|(t, ls)| (t.clone(), ls.iter().map(|l| lec(*l)).collect()))
                        .collect(),
                })
                .collect(),
            lectures: s
                .lectures()
                .map(|x| BundleLecture {
                    key: lec(x.id),
                    version: x.version,
                    title: x.title.clone(),
                    description: x.description.clone(),
                    institution: key_of("institution", &ik, x.institution.0),
                    lecturers: x.lecturers.iter().map(|l| p(*l)).collect(),
                    term: x.term.clone(),
                    dates: x.dates.clone(),
                })
                .collect(),
            inclusions: s
                .inclusions()
                .enumerate()
                .map(|(n, r)| BundleInclusion {
                    key: format!("inclusion-{}", n + 1),
                    version: r.version,
                    module: key_of("module", &mk, r.module.0),
                    program: key_of("program", &prk, r.program.0),
                    category: key_of("category", &ck, r.category.0),
                    state: Some(r.state),
                    history: r
                        .history
                        .iter()
                        .map(|h| BundleHistory {
                            actor: actor(h.actor),
                            action: h.action.clone(),
                            at: h.at,
                        })
                        .collect(),
                })
                .collect(),
            grants: s
                .grants()
                .enumerate()
                .map(|(n, g)| BundleGrant {
                    key: format!("grant-{}", n + 1),
                    grantee: p(g.grantee),
                    role: g.role.name().to_string(),
                    scope: match g.role {
                        Role::InstitutionEditor(i) => key_of("institution", &ik, i.0),
                        Role::TimetablePerson(l) => lec(l),
                        Role::ProgramResponsible(x) => key_of("program", &prk, x.0),
                    },
                    granter: actor(g.granter),
                    granted_at: g.granted_at,
                    basis: g.basis,
                })
                .collect(),
        }
    }

    /// Resolve keys, assign ids and check every invariant. Nothing is
    /// returned unless the whole bundle is valid.
    pub fn to_state(&self) -> Result<State> {
        let mut next = 0u64;
        let mut fresh = || {
            next += 1;
            next
        };
        let persons = Table::build("persons", self.persons.iter().map(|x| x.key.as_str()), &mut fresh)?;
        let insts = Table::build("institutions", self.institutions.iter().map(|x| x.key.as_str()), &mut fresh)?;
        let programs = Table::build("programs", self.programs.iter().map(|x| x.key.as_str()), &mut fresh)?;
        let cats = Table::build("categories", self.categories.iter().map(|x| x.key.as_str()), &mut fresh)?;
        let modules = Table::build("modules", self.modules.iter().map(|x| x.key.as_str()), &mut fresh)?;
        let topics = Table::build("topics", self.topics.iter().map(|x| x.key.as_str()), &mut fresh)?;
        let lectures = Table::build("lectures", self.lectures.iter().map(|x| x.key.as_str()), &mut fresh)?;
        let incl = Table::build("inclusions", self.inclusions.iter().map(|x| x.key.as_str()), &mut fresh)?;
        let grants = Table::build("grants", self.grants.iter().map(|x| x.key.as_str()), &mut fresh)?;

        let actor = |at: &Path, field: &str, key: &str| -> Result<Actor> {
            if key == SYSTEM {
                Ok(Actor::System)
            } else {
                persons.get(at, field, key).map(|id| Actor::Person(PersonId(id)))
            }
        };

        let mut c = Contents {
            last_modified: self.last_modified,
            ..Contents::default()
        };
        for (n, a) in self.admins.iter().enumerate() {
            let at = Path::new("admins", n, a);
            c.admins.insert(PersonId(persons.get(&at, "person", a)?));
        }
        for (n, x) in self.persons.iter().enumerate() {
            c.persons.push(Person {
                id: PersonId(persons.id(n)),
                version: x.version,
                display_name: x.display_name.clone(),
                login_name: x.login_name.clone(),
            });
        }
        for (n, x) in self.institutions.iter().enumerate() {
            let at = Path::new("institutions", n, &x.key);
            c.institutions.push(Institution {
                id: InstitutionId(insts.id(n)),
                version: x.version,
                name: x.name.clone(),
                head: PersonId(persons.get(&at, "head", &x.head)?),
                members: persons.all(&at, "members", &x.members)?.map(PersonId).collect(),
            });
        }
        for x in &self.terms {
            c.terms.push(Term {
                id: x.id.clone(),
                version: x.version,
                schedule_freeze_date: x.schedule_freeze_date,
            });
        }
        for (n, x) in self.programs.iter().enumerate() {
            let at = Path::new("programs", n, &x.key);
            c.programs.push(StudyProgram {
                id: ProgramId(programs.id(n)),
                version: x.version,
                title: x.title.clone(),
                kind: x.kind,
                dean: PersonId(persons.get(&at, "dean", &x.dean)?),
                categories: cats.all(&at, "categories", &x.categories)?.map(CategoryId).collect(),
                lectures: lectures.all(&at, "lectures", &x.lectures)?.map(LectureId).collect(),
            });
        }
        for (n, x) in self.categories.iter().enumerate() {
            let at = Path::new("categories", n, &x.key);
            c.categories.push(Category {
                id: CategoryId(cats.id(n)),
                version: x.version,
                title: x.title.clone(),
                program: ProgramId(programs.get(&at, "program", &x.program)?),
            });
        }
        for (n, x) in self.modules.iter().enumerate() {
            let at = Path::new("modules", n, &x.key);
            c.modules.push(Module {
                id: ModuleId(modules.id(n)),
                version: x.version,
                title: x.title.clone(),
                description: x.description.clone(),
                institution: InstitutionId(insts.get(&at, "institution", &x.institution)?),
                responsible: PersonId(persons.get(&at, "responsible", &x.responsible)?),
                lecturers: persons.all(&at, "lecturers", &x.lecturers)?.map(PersonId).collect(),
                lectures: lectures.all(&at, "lectures", &x.lectures)?.map(LectureId).collect(),
                topics: topics.all(&at, "topics", &x.topics)?.map(TopicId).collect(),
                attributes: x.attributes.clone(),
            });
        }
        for (n, x) in self.topics.iter().enumerate() {
            let at = Path::new("topics", n, &x.key);
            let mut assignments = BTreeMap::new();
            for (term, keys) in &x.assignments {
                let ids = lectures.all(&at, "assignments", keys)?.map(LectureId).collect();
                assignments.insert(term.clone(), ids);
            }
            c.topics.push(Topic {
                id: TopicId(topics.id(n)),
                version: x.version,
                title: x.title.clone(),
                assignments,
            });
        }
        for (n, x) in self.lectures.iter().enumerate() {
            let at = Path::new("lectures", n, &x.key);
            c.lectures.push(Lecture {
                id: LectureId(lectures.id(n)),
                version: x.version,
                title: x.title.clone(),
                description: x.description.clone(),
                institution: InstitutionId(insts.get(&at, "institution", &x.institution)?),
                lecturers: persons.all(&at, "lecturers", &x.lecturers)?.map(PersonId).collect(),
                term: x.term.clone(),
                dates: x.dates.clone(),
            });
        }
        for (n, x) in self.inclusions.iter().enumerate() {
            let at = Path::new("inclusions", n, &x.key);
            let history: Vec<HistoryEntry> = x
                .history
                .iter()
                .map(|h| {
                    Ok(HistoryEntry {
                        actor: actor(&at, "history.actor", &h.actor)?,
                        action: h.action.clone(),
                        at: h.at,
                    })
                })
                .collect::<Result<_>>()?;
            let folded = InclusionRecord::replay(&history);
            if x.state.is_some_and(|s| s != folded.state) {
                return Err(at.fail(format!(
                    "state {} disagrees with its history ({})",
                    x.state.map_or("", |s| s.as_str()),
                    folded.state.as_str()
                )));
            }
            c.inclusions.push(InclusionRecord {
                id: InclusionId(incl.id(n)),
                version: if x.version == 0 { history.len() as u64 } else { x.version },
                module: ModuleId(modules.get(&at, "module", &x.module)?),
                program: ProgramId(programs.get(&at, "program", &x.program)?),
                category: CategoryId(cats.get(&at, "category", &x.category)?),
                lecturer_ack: folded.lecturer_ack,
                dean_ack: folded.dean_ack,
                state: folded.state,
                history,
            });
        }
        for (n, x) in self.grants.iter().enumerate() {
            let at = Path::new("grants", n, &x.key);
            let role = match x.role.as_str() {
                "INSTITUTION_EDITOR" => Role::InstitutionEditor(InstitutionId(insts.get(&at, "scope", &x.scope)?)),
                "TIMETABLE_PERSON" => Role::TimetablePerson(LectureId(lectures.get(&at, "scope", &x.scope)?)),
                "PROGRAM_RESPONSIBLE" => Role::ProgramResponsible(ProgramId(programs.get(&at, "scope", &x.scope)?)),
                other => return Err(at.fail(format!("unknown role `{other}`"))),
            };
            c.grants.push(RoleGrant {
                id: GrantId(grants.id(n)),
                grantee: PersonId(persons.get(&at, "grantee", &x.grantee)?),
                role,
                granter: actor(&at, "granter", &x.granter)?,
                granted_at: x.granted_at,
                basis: x.basis,
            });
        }
        Ok(State::assemble(c)?)
    }
}

/// Location of an entity inside the bundle, for diagnostics.
struct Path<'a> {
    list: &'a str,
    index: usize,
    key: &'a str,
}

impl<'a> Path<'a> {
    fn new(list: &'a str, index: usize, key: &'a str) -> Self {
        Path { list, index, key }
    }

    fn fail(&self, msg: String) -> ServiceError {
        ServiceError::validation(format!("{}[{}] `{}`: {msg}", self.list, self.index, self.key))
    }
}

/// Key → id for one kind.
struct Table {
    kind: &'static str,
    ids: Vec<u64>,
    by_key: HashMap<String, u64>,
}

impl Table {
    fn build<'k>(kind: &'static str, keys: impl Iterator<Item = &'k str>, fresh: &mut impl FnMut() -> u64) -> Result<Table> {
        let mut t = Table {
            kind,
            ids: Vec::new(),
            by_key: HashMap::new(),
        };
        for (n, k) in keys.enumerate() {
            if k.is_empty() || k == SYSTEM {
                return Err(Path::new(kind, n, k).fail("key must be non-empty and not `system`".into()));
            }
            let id = fresh();
            if t.by_key.insert(k.to_string(), id).is_some() {
                return Err(Path::new(kind, n, k).fail("key is used twice".into()));
            }
            t.ids.push(id);
        }
        Ok(t)
    }

    fn id(&self, index: usize) -> u64 {
        self.ids[index]
    }

    fn get(&self, at: &Path, field: &str, key: &str) -> Result<u64> {
        self.by_key
            .get(key)
            .copied()
            .ok_or_else(|| at.fail(format!("{field} refers to unknown {} key `{key}`", self.kind)))
    }

    fn all<'s>(&'s self, at: &Path, field: &str, keys: &[String]) -> Result<impl Iterator<Item = u64> + 's> {
        let ids = keys.iter().map(|k| self.get(at, field, k)).collect::<Result<Vec<_>>>()?;
        Ok(ids.into_iter())
    }
}
