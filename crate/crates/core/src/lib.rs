//! Domain core of the online module handbook.
//!
//! Everything in this crate is a pure function of a [`State`] value: the
//! curriculum model (institutions, programs, modules, lectures), the access
//! rules that gate every mutation, the two-sided inclusion workflow, lecture
//! scheduling with conflict detection, and the generators for catalogs,
//! timetables and CSV exports. Persistence, sessions and transport live in
//! the `mhb` companion crate.

#![no_std]

extern crate alloc;

pub mod access;
pub mod assemble;
pub mod catalog;
pub mod csv;
pub mod error;
pub mod ids;
pub mod inclusion;
pub mod model;
pub mod mutation;
pub mod schedule;
pub mod state;
pub mod time;

pub use access::{AccessDecision, DenyReason, Role, RoleGrant};
pub use assemble::Contents;
pub use catalog::CatalogDocument;
pub use error::{Error, Result};
pub use ids::*;
pub use inclusion::{InclusionRecord, InclusionState};
pub use model::*;
pub use mutation::{Actor, Applied, AuditEntry, Mutation};
pub use schedule::{Conflict, ConflictKind, ConflictScope};
pub use state::State;
pub use time::{Date, TimeOfDay, Timestamp, Weekday};
