//! Generated documents: program module catalogs, per-institution semester
//! catalogs, personal timetables and annotated single-lecture documents.
//!
//! A document is built from one [`State`] snapshot and carries that
//! snapshot's revision and commit time, so equal snapshots and parameters
//! give byte-identical output. Only modules with an acknowledged inclusion
//! are ever listed under a program.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ids::*;
use crate::model::{Lecture, LectureDate, ProgramKind};
use crate::state::State;
use crate::time::Timestamp;

pub const NO_DESCRIPTION: &str = "(no description)";
const NONE: &str = "(none)";
const NO_DATES: &str = "(no dates)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocumentKind {
    ProgramCatalog,
    SemesterCatalog,
    PersonalTimetable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonRef {
    pub id: PersonId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstitutionRef {
    pub id: InstitutionId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LectureNode {
    pub id: LectureId,
    pub title: String,
    pub description: String,
    pub term: TermId,
    pub institution: InstitutionRef,
    pub lecturers: Vec<PersonRef>,
    pub scheduled: bool,
    pub dates: Vec<LectureDate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleNode {
    pub id: ModuleId,
    pub title: String,
    pub description: String,
    pub institution: InstitutionRef,
    pub responsible: PersonRef,
    pub lecturers: Vec<PersonRef>,
    pub attributes: BTreeMap<String, String>,
    pub lectures: Vec<LectureNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryNode {
    pub id: CategoryId,
    pub title: String,
    pub modules: Vec<ModuleNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimetableEntry {
    pub lecture: LectureId,
    pub title: String,
    pub date: LectureDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Body {
    Program {
        program_kind: ProgramKind,
        categories: Vec<CategoryNode>,
        /// Flat listing; used by single-cycle programs only.
        lectures: Vec<LectureNode>,
    },
    Semester {
        lectures: Vec<LectureNode>,
    },
    Timetable {
        entries: Vec<TimetableEntry>,
    },
}

/// What the document is about: a program, an institution or a person.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subject {
    pub id: u64,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogDocument {
    pub kind: DocumentKind,
    pub generated_at: Timestamp,
    pub snapshot_version: u64,
    pub term: TermId,
    pub subject: Subject,
    pub body: Body,
    /// Degenerate content worth a reader's attention, e.g. lectures without
    /// any date.
    pub warnings: Vec<String>,
}

fn or_placeholder(s: &str) -> String {
    if s.trim().is_empty() {
        NO_DESCRIPTION.to_string()
    } else {
        s.to_string()
    }
}

impl State {
    fn person_ref(&self, id: PersonId) -> PersonRef {
        PersonRef {
            id,
            name: self
                .persons
                .get(&id)
                .map(|p| p.display_name.clone())
                .unwrap_or_default(),
        }
    }

    fn institution_ref(&self, id: InstitutionId) -> InstitutionRef {
        InstitutionRef {
            id,
            name: self
                .institutions
                .get(&id)
                .map(|i| i.name.clone())
                .unwrap_or_default(),
        }
    }

    fn lecture_node(&self, l: &Lecture, warnings: &mut Vec<String>) -> LectureNode {
        if l.dates.is_empty() {
            let w = format!("lecture {} \"{}\" has no dates", l.id, l.title);
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
        LectureNode {
            id: l.id,
            title: l.title.clone(),
            description: or_placeholder(&l.description),
            term: l.term.clone(),
            institution: self.institution_ref(l.institution),
            lecturers: l.lecturers.iter().map(|p| self.person_ref(*p)).collect(),
            scheduled: !l.dates.is_empty(),
            dates: l.dates.clone(),
        }
    }

    fn sorted_lectures<'a>(&'a self, ids: impl IntoIterator<Item = LectureId>) -> Vec<&'a Lecture> {
        let mut v: Vec<&Lecture> = ids.into_iter().filter_map(|l| self.lectures.get(&l)).collect();
        v.sort_by(|a, b| a.title.cmp(&b.title).then(a.id.cmp(&b.id)));
        v
    }

    /// Module catalog of a program for a term. Two-cycle programs list their
    /// acknowledged modules per category with the lectures each module
    /// offers in the term; single-cycle programs list their lectures of the
    /// term directly.
    pub fn generate_module_catalog(&self, program: ProgramId, term: &TermId) -> Result<CatalogDocument> {
        let p = self.program(program)?;
        self.term(term)?;
        let mut warnings = Vec::new();
        let body = match p.kind {
            ProgramKind::TwoCycle => {
                let mut categories = Vec::new();
                for (cat, modules) in self.effective_modules(program)? {
                    let c = self.category(cat)?;
                    let mut nodes = Vec::new();
                    for mid in modules {
                        let m = self.module(mid)?;
                        let lectures = self
                            .sorted_lectures(self.resolve_module_lectures(mid, term)?)
                            .into_iter()
                            .map(|l| self.lecture_node(l, &mut warnings))
                            .collect();
                        nodes.push(ModuleNode {
                            id: m.id,
                            title: m.title.clone(),
                            description: or_placeholder(&m.description),
                            institution: self.institution_ref(m.institution),
                            responsible: self.person_ref(m.responsible),
                            lecturers: m.lecturers.iter().map(|p| self.person_ref(*p)).collect(),
                            attributes: m.attributes.clone(),
                            lectures,
                        });
                    }
                    categories.push(CategoryNode {
                        id: c.id,
                        title: c.title.clone(),
                        modules: nodes,
                    });
                }
                Body::Program {
                    program_kind: p.kind,
                    categories,
                    lectures: Vec::new(),
                }
            }
            ProgramKind::SingleCycle => {
                let lectures = self
                    .sorted_lectures(self.program_lectures(program, term)?)
                    .into_iter()
                    .map(|l| self.lecture_node(l, &mut warnings))
                    .collect();
                Body::Program {
                    program_kind: p.kind,
                    categories: Vec::new(),
                    lectures,
                }
            }
        };
        Ok(CatalogDocument {
            kind: DocumentKind::ProgramCatalog,
            generated_at: self.last_modified,
            snapshot_version: self.revision,
            term: term.clone(),
            subject: Subject {
                id: program.0,
                title: p.title.clone(),
            },
            body,
            warnings,
        })
    }

    /// Every lecture an institution owns in a term, by title then id.
    pub fn generate_semester_catalog(&self, institution: InstitutionId, term: &TermId) -> Result<CatalogDocument> {
        let inst = self.institution(institution)?;
        self.term(term)?;
        let mut warnings = Vec::new();
        let ids = self
            .lectures
            .values()
            .filter(|l| l.institution == institution && &l.term == term)
            .map(|l| l.id);
        let lectures = self
            .sorted_lectures(ids)
            .into_iter()
            .map(|l| self.lecture_node(l, &mut warnings))
            .collect();
        Ok(CatalogDocument {
            kind: DocumentKind::SemesterCatalog,
            generated_at: self.last_modified,
            snapshot_version: self.revision,
            term: term.clone(),
            subject: Subject {
                id: institution.0,
                title: inst.name.clone(),
            },
            body: Body::Semester { lectures },
            warnings,
        })
    }

    /// All dates of the lectures `person` gives in `term`, in weekly order
    /// (weekday, start, end) followed by calendar dates in date order.
    pub fn generate_personal_timetable(&self, person: PersonId, term: &TermId) -> Result<CatalogDocument> {
        let p = self.person(person)?;
        self.term(term)?;
        let mut entries: Vec<TimetableEntry> = Vec::new();
        let mut warnings = Vec::new();
        for l in self
            .lectures
            .values()
            .filter(|l| &l.term == term && l.lecturers.contains(&person))
        {
            if l.dates.is_empty() {
                warnings.push(format!("lecture {} \"{}\" has no dates", l.id, l.title));
            }
            entries.extend(l.dates.iter().map(|d| TimetableEntry {
                lecture: l.id,
                title: l.title.clone(),
                date: d.clone(),
            }));
        }
        entries.sort_by(|a, b| {
            timetable_key(&a.date)
                .cmp(&timetable_key(&b.date))
                .then_with(|| a.title.cmp(&b.title))
                .then(a.lecture.cmp(&b.lecture))
                .then_with(|| a.date.room.cmp(&b.date.room))
        });
        Ok(CatalogDocument {
            kind: DocumentKind::PersonalTimetable,
            generated_at: self.last_modified,
            snapshot_version: self.revision,
            term: term.clone(),
            subject: Subject {
                id: person.0,
                title: p.display_name.clone(),
            },
            body: Body::Timetable { entries },
            warnings,
        })
    }

    /// Plain-text description of one lecture.
    pub fn render_annotated_lecture_document(&self, lecture: LectureId) -> Result<String> {
        let l = self.lecture(lecture)?;
        let inst = self.institution_ref(l.institution);
        let lecturers = join_or_none(l.lecturers.iter().map(|p| self.person_ref(*p).name));
        let timetable = self
            .timetable_person(lecture)
            .map(|p| self.person_ref(p).name)
            .unwrap_or_else(|| NONE.to_string());
        let mut out = String::new();
        let heading = format!("LECTURE: {}", l.title);
        let _ = writeln!(out, "{heading}");
        let _ = writeln!(out, "{}", "=".repeat(heading.chars().count()));
        let _ = writeln!(out, "Id:               {}", l.id);
        let _ = writeln!(out, "Term:             {}", l.term);
        let _ = writeln!(out, "Institution:      {}", inst.name);
        let _ = writeln!(out, "Lecturers:        {lecturers}");
        let _ = writeln!(out, "Timetable person: {timetable}");
        let _ = writeln!(out);
        let _ = writeln!(out, "Description");
        let _ = writeln!(out, "-----------");
        let _ = writeln!(out, "{}", or_placeholder(&l.description));
        let _ = writeln!(out);
        let _ = writeln!(out, "Dates");
        let _ = writeln!(out, "-----");
        if l.dates.is_empty() {
            let _ = writeln!(out, "{NO_DATES}");
        }
        for d in &l.dates {
            let _ = writeln!(out, "{d}");
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Snapshot {} at {}", self.revision, self.last_modified);
        Ok(out)
    }
}

fn timetable_key(d: &LectureDate) -> (u8, i64, u16, u16) {
    match d.on {
        crate::model::DateSpec::Weekly(w) => (0, i64::from(w.index()), d.start.minutes(), d.end.minutes()),
        crate::model::DateSpec::On(date) => (1, date.days_since_epoch(), d.start.minutes(), d.end.minutes()),
    }
}

fn join_or_none(names: impl Iterator<Item = String>) -> String {
    let v: Vec<String> = names.collect();
    if v.is_empty() {
        NONE.to_string()
    } else {
        v.join(", ")
    }
}

impl CatalogDocument {
    /// Module ids listed per category, in document order.
    pub fn modules_by_category(&self) -> Vec<(CategoryId, Vec<ModuleId>)> {
        match &self.body {
            Body::Program { categories, .. } => categories
                .iter()
                .map(|c| (c.id, c.modules.iter().map(|m| m.id).collect()))
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Canonical serialization: JSON with lexicographically ordered keys,
    /// two-space indentation, LF line endings and a trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("documents always serialize");
        let mut s = serde_json::to_string_pretty(&value).expect("values always serialize");
        s.push('\n');
        s
    }

    /// Deterministic standalone HTML rendering.
    pub fn to_html(&self) -> String {
        let mut h = String::new();
        let kind = match self.kind {
            DocumentKind::ProgramCatalog => "Module catalog",
            DocumentKind::SemesterCatalog => "Semester catalog",
            DocumentKind::PersonalTimetable => "Timetable",
        };
        let title = format!("{kind}: {} ({})", self.subject.title, self.term);
        h.push_str("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n");
        let _ = writeln!(h, "<title>{}</title>", esc(&title));
        h.push_str("</head>\n<body>\n");
        let _ = writeln!(h, "<h1>{}</h1>", esc(&title));
        let _ = writeln!(
            h,
            "<p class=\"meta\">snapshot {} generated at {}</p>",
            self.snapshot_version, self.generated_at
        );
        if !self.warnings.is_empty() {
            h.push_str("<ul class=\"warnings\">\n");
            for w in &self.warnings {
                let _ = writeln!(h, "<li>{}</li>", esc(w));
            }
            h.push_str("</ul>\n");
        }
        match &self.body {
            Body::Program {
                categories, lectures, ..
            } => {
                for c in categories {
                    let _ = writeln!(h, "<section class=\"category\" id=\"category-{}\">", c.id);
                    let _ = writeln!(h, "<h2>{}</h2>", esc(&c.title));
                    if c.modules.is_empty() {
                        let _ = writeln!(h, "<p>{}</p>", esc(NONE));
                    }
                    for m in &c.modules {
                        html_module(&mut h, m);
                    }
                    h.push_str("</section>\n");
                }
                if !lectures.is_empty() || categories.is_empty() {
                    html_lectures(&mut h, lectures);
                }
            }
            Body::Semester { lectures } => html_lectures(&mut h, lectures),
            Body::Timetable { entries } => {
                h.push_str("<table class=\"timetable\">\n<tr><th>When</th><th>Time</th><th>Room</th><th>Lecture</th></tr>\n");
                for e in entries {
                    let _ = writeln!(
                        h,
                        "<tr><td>{}</td><td>{}-{}</td><td>{}</td><td>{}</td></tr>",
                        e.date.on,
                        e.date.start,
                        e.date.end,
                        esc(&e.date.room),
                        esc(&e.title)
                    );
                }
                h.push_str("</table>\n");
                if entries.is_empty() {
                    let _ = writeln!(h, "<p>{}</p>", esc(NO_DATES));
                }
            }
        }
        h.push_str("</body>\n</html>\n");
        h
    }
}

fn html_module(h: &mut String, m: &ModuleNode) {
    let _ = writeln!(h, "<article class=\"module\" id=\"module-{}\">", m.id);
    let _ = writeln!(h, "<h3>{}</h3>", esc(&m.title));
    let _ = writeln!(h, "<p>{}</p>", esc(&m.description));
    h.push_str("<dl>\n");
    let _ = writeln!(h, "<dt>Institution</dt><dd>{}</dd>", esc(&m.institution.name));
    let _ = writeln!(h, "<dt>Responsible</dt><dd>{}</dd>", esc(&m.responsible.name));
    let lecturers = join_or_none(m.lecturers.iter().map(|p| p.name.clone()));
    let _ = writeln!(h, "<dt>Lecturers</dt><dd>{}</dd>", esc(&lecturers));
    for (k, v) in &m.attributes {
        let _ = writeln!(h, "<dt>{}</dt><dd>{}</dd>", esc(k), esc(v));
    }
    h.push_str("</dl>\n");
    html_lectures(h, &m.lectures);
    h.push_str("</article>\n");
}

fn html_lectures(h: &mut String, lectures: &[LectureNode]) {
    if lectures.is_empty() {
        let _ = writeln!(h, "<p class=\"lectures\">{}</p>", esc(NONE));
        return;
    }
    h.push_str("<ul class=\"lectures\">\n");
    for l in lectures {
        let lecturers = join_or_none(l.lecturers.iter().map(|p| p.name.clone()));
        let _ = writeln!(
            h,
            "<li id=\"lecture-{}\"><strong>{}</strong> ({}; {})",
            l.id,
            esc(&l.title),
            esc(&l.institution.name),
            esc(&lecturers)
        );
        h.push_str("<ul>\n");
        if l.dates.is_empty() {
            let _ = writeln!(h, "<li>{}</li>", esc(NO_DATES));
        }
        for d in &l.dates {
            let _ = writeln!(h, "<li>{}</li>", esc(&d.to_string()));
        }
        h.push_str("</ul>\n</li>\n");
    }
    h.push_str("</ul>\n");
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn html_escaping() {
        assert_eq!(esc("a<b>&\"c'"), "a&lt;b&gt;&amp;&quot;c&#39;");
    }

    #[test]
    fn placeholder_for_blank_text() {
        assert_eq!(or_placeholder(""), NO_DESCRIPTION);
        assert_eq!(or_placeholder("  "), NO_DESCRIPTION);
        assert_eq!(or_placeholder("x"), "x");
    }
}
