//! Report bodies shared by the HTTP API and the CLI, so both produce the
//! same bytes for the same snapshot and parameters.

use mhb_core::csv::{CsvKind, CsvSelection};
use mhb_core::schedule::Conflict;
use mhb_core::state::Violation;
use mhb_core::*;
use serde::Serialize;

/// Sorted keys, two-space indent, trailing LF.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report serializes");
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "check", rename_all = "kebab-case")]
pub enum Finding {
    ProgramStructure { violation: Violation },
    DanglingReference { from: EntityRef, to: EntityRef },
    UnsoundGrant { grant: GrantId },
    InconsistentInclusion { record: InclusionId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub snapshot_version: u64,
    pub findings: Vec<Finding>,
}

/// Whole-store consistency check. Stores built only through the public
/// operations always come out clean.
pub fn validate(s: &State) -> ValidationReport {
    let mut findings = Vec::new();
    for p in s.programs() {
        if let Ok(vs) = s.validate_program(p.id) {
            findings.extend(vs.into_iter().map(|violation| Finding::ProgramStructure { violation }));
        }
    }
    findings.extend(
        s.dangling_references()
            .into_iter()
            .map(|(from, to)| Finding::DanglingReference { from, to }),
    );
    findings.extend(s.unsound_grants().into_iter().map(|grant| Finding::UnsoundGrant { grant }));
    findings.extend(
        s.inclusions()
            .filter(|r| !r.is_consistent())
            .map(|r| Finding::InconsistentInclusion { record: r.id }),
    );
    ValidationReport {
        snapshot_version: s.revision(),
        findings,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflictReport {
    pub snapshot_version: u64,
    pub scope: ConflictScope,
    pub conflicts: Vec<Conflict>,
}

pub fn conflicts(s: &State, scope: ConflictScope) -> Result<ConflictReport> {
    let conflicts = s.detect_conflicts(&scope)?;
    Ok(ConflictReport {
        snapshot_version: s.revision(),
        scope,
        conflicts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Html,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "html" => Ok(Format::Html),
            other => Err(Error::ValidationFailed(format!("format `{other}`: expected json or html"))),
        }
    }
}

pub fn render(doc: &CatalogDocument, format: Format) -> String {
    match format {
        Format::Json => doc.to_canonical_json(),
        Format::Html => doc.to_html(),
    }
}

pub fn program_catalog(s: &State, program: ProgramId, term: &TermId, format: Format) -> Result<String> {
    Ok(render(&s.generate_module_catalog(program, term)?, format))
}

pub fn semester_catalog(s: &State, inst: InstitutionId, term: &TermId, format: Format) -> Result<String> {
    Ok(render(&s.generate_semester_catalog(inst, term)?, format))
}

pub fn timetable(s: &State, person: PersonId, term: &TermId, format: Format) -> Result<String> {
    Ok(render(&s.generate_personal_timetable(person, term)?, format))
}

pub fn csv(s: &State, kind: &str, institution: Option<InstitutionId>, term: Option<TermId>) -> Result<String> {
    let kind: CsvKind = kind.parse()?;
    s.export_csv(&CsvSelection { kind, institution, term })
}
