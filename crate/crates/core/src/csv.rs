//! CSV exports for spreadsheets and mail merge.
//!
//! UTF-8, LF line endings, a fixed header per kind, one row per entity in
//! id order. A field is quoted when it contains a comma, a double quote, CR
//! or LF; embedded quotes are doubled. Multi-valued fields are joined with
//! `;` inside one cell.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::*;
use crate::state::State;

pub const MODULES_HEADER: [&str; 6] = [
    "id",
    "title",
    "institution_id",
    "responsible_id",
    "lecturer_ids",
    "lecture_ids",
];
pub const LECTURES_HEADER: [&str; 6] = ["id", "title", "institution_id", "lecturer_ids", "term", "dates"];
pub const PERSONS_HEADER: [&str; 3] = ["id", "display_name", "login_name"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsvKind {
    Modules,
    Lectures,
    Persons,
}

impl CsvKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CsvKind::Modules => "modules",
            CsvKind::Lectures => "lectures",
            CsvKind::Persons => "persons",
        }
    }

    pub fn header(self) -> &'static [&'static str] {
        match self {
            CsvKind::Modules => &MODULES_HEADER,
            CsvKind::Lectures => &LECTURES_HEADER,
            CsvKind::Persons => &PERSONS_HEADER,
        }
    }
}

impl fmt::Display for CsvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CsvKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modules" => Ok(CsvKind::Modules),
            "lectures" => Ok(CsvKind::Lectures),
            "persons" => Ok(CsvKind::Persons),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

/// Entity kind plus optional filters. The institution filter matches the
/// owner of modules and lectures and the membership of persons; the term
/// filter applies to lectures only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSelection {
    pub kind: CsvKind,
    #[serde(default)]
    pub institution: Option<InstitutionId>,
    #[serde(default)]
    pub term: Option<TermId>,
}

impl CsvSelection {
    pub fn all(kind: CsvKind) -> Self {
        CsvSelection {
            kind,
            institution: None,
            term: None,
        }
    }
}

fn needs_quotes(field: &str) -> bool {
    field.bytes().any(|b| matches!(b, b',' | b'"' | b'\n' | b'\r'))
}

/// Append one encoded record, terminated by LF.
pub fn write_record<S: AsRef<str>>(out: &mut String, fields: &[S]) {
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let f = f.as_ref();
        if needs_quotes(f) {
            out.push('"');
            for c in f.chars() {
                if c == '"' {
                    out.push('"');
                }
                out.push(c);
            }
            out.push('"');
        } else {
            out.push_str(f);
        }
    }
    out.push('\n');
}

/// Encode a header and rows as one document.
pub fn encode<S: AsRef<str>>(header: &[&str], rows: &[Vec<S>]) -> String {
    let mut out = String::new();
    write_record(&mut out, header);
    for r in rows {
        write_record(&mut out, r);
    }
    out
}

fn join_ids<T: ToString>(ids: impl IntoIterator<Item = T>) -> String {
    ids.into_iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}

impl State {
    /// Rows (without header) for a selection, in id order.
    pub fn csv_rows(&self, sel: &CsvSelection) -> Result<Vec<Vec<String>>> {
        if let Some(i) = sel.institution {
            self.institution(i)?;
        }
        if let Some(t) = &sel.term {
            self.term(t)?;
        }
        Ok(match sel.kind {
            CsvKind::Modules => self
                .modules
                .values()
                .filter(|m| sel.institution.is_none_or(|i| m.institution == i))
                .map(|m| {
                    alloc::vec![
                        m.id.to_string(),
                        m.title.clone(),
                        m.institution.to_string(),
                        m.responsible.to_string(),
                        join_ids(&m.lecturers),
                        join_ids(&m.lectures),
                    ]
                })
                .collect(),
            CsvKind::Lectures => self
                .lectures
                .values()
                .filter(|l| sel.institution.is_none_or(|i| l.institution == i))
                .filter(|l| sel.term.as_ref().is_none_or(|t| &l.term == t))
                .map(|l| {
                    alloc::vec![
                        l.id.to_string(),
                        l.title.clone(),
                        l.institution.to_string(),
                        join_ids(&l.lecturers),
                        l.term.to_string(),
                        join_ids(&l.dates),
                    ]
                })
                .collect(),
            CsvKind::Persons => {
                let members: Option<&alloc::collections::BTreeSet<PersonId>> = match sel.institution {
                    Some(i) => Some(&self.institution(i)?.members),
                    None => None,
                };
                self.persons
                    .values()
                    .filter(|p| members.is_none_or(|m| m.contains(&p.id)))
                    .map(|p| alloc::vec![p.id.to_string(), p.display_name.clone(), p.login_name.clone()])
                    .collect()
            }
        })
    }

    pub fn export_csv(&self, sel: &CsvSelection) -> Result<String> {
        Ok(encode(sel.kind.header(), &self.csv_rows(sel)?))
    }
}
