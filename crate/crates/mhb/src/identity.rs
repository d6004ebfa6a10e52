//! Credential checks behind a pluggable interface.
//!
//! The built-in provider keeps salted SHA-256 hashes in a JSON file in the
//! data directory. Deployments with an external directory service implement
//! [`IdentityProvider`] instead.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub trait IdentityProvider: Send + Sync {
    /// True when `credential` is valid for `login`.
    fn verify(&self, login: &str, credential: &str) -> bool;

    /// Set or replace the credential for `login`.
    fn set_credential(&self, login: &str, credential: &str) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Hashed {
    salt: String,
    hash: String,
}

fn digest(salt: &[u8], credential: &str) -> String {
    let mut h = Sha256::new();
    h.update(salt);
    h.update(credential.as_bytes());
    hex::encode(h.finalize())
}

/// Constant-time comparison of equal-length hex digests.
fn same(a: &str, b: &str) -> bool {
    a.len() == b.len() && a.bytes().zip(b.bytes()).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

#[derive(Debug, Default)]
pub struct LocalCredentials {
    path: Option<PathBuf>,
    entries: RwLock<BTreeMap<String, Hashed>>,
}

impl LocalCredentials {
    pub const FILE: &'static str = "credentials.json";

    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Open (or start) the credential file in `dir`.
    pub fn open(dir: &Path) -> Result<Self> {
        let path = dir.join(Self::FILE);
        let entries = match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| {
                crate::error::ServiceError::Corrupt(format!("{}: {e}", path.display()))
            })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => return Err(e.into()),
        };
        Ok(LocalCredentials {
            path: Some(path),
            entries: RwLock::new(entries),
        })
    }

    fn persist(&self, entries: &BTreeMap<String, Hashed>) -> Result<()> {
        let Some(path) = &self.path else { return Ok(()) };
        let tmp = path.with_extension("json.tmp");
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&serde_json::to_vec_pretty(entries).expect("serializable"))?;
        f.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

impl IdentityProvider for LocalCredentials {
    fn verify(&self, login: &str, credential: &str) -> bool {
        let entries = self.entries.read().expect("credential lock");
        match entries.get(login) {
            Some(h) => match hex::decode(&h.salt) {
                Ok(salt) => same(&digest(&salt, credential), &h.hash),
                Err(_) => false,
            },
            None => false,
        }
    }

    fn set_credential(&self, login: &str, credential: &str) -> Result<()> {
        let mut salt = [0u8; 16];
        rand::thread_rng().fill_bytes(&mut salt);
        let mut entries = self.entries.write().expect("credential lock");
        let mut next = entries.clone();
        next.insert(
            login.to_string(),
            Hashed {
                salt: hex::encode(salt),
                hash: digest(&salt, credential),
            },
        );
        self.persist(&next)?;
        *entries = next;
        Ok(())
    }
}
