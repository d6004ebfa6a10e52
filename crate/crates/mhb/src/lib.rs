//! Service side of the module handbook: the durable store, sessions and
//! credentials, the HTTP API, fixture bundles and the operator CLI.

pub mod api;
pub mod bundle;
pub mod cli;
pub mod clock;
pub mod config;
pub mod error;
pub mod identity;
pub mod report;
pub mod session;
pub mod store;
