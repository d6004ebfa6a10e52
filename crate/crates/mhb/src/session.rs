use std::collections::HashMap;
use std::sync::Mutex;

use mhb_core::{PersonId, Timestamp};
use rand::RngCore;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub token: String,
    pub person: PersonId,
    pub expires_at: Timestamp,
}

/// In-memory sessions. They do not survive a restart; clients log in again.
#[derive(Debug)]
pub struct Sessions {
    ttl: i64,
    live: Mutex<HashMap<String, Session>>,
}

impl Sessions {
    pub fn new(ttl_secs: u64) -> Self {
        Sessions {
            ttl: ttl_secs as i64,
            live: Mutex::new(HashMap::new()),
        }
    }

    pub fn open(&self, person: PersonId, now: Timestamp) -> Session {
        let mut raw = [0u8; 32];
        rand::thread_rng().fill_bytes(&mut raw);
        let s = Session {
            token: hex::encode(raw),
            person,
            expires_at: Timestamp(now.0 + self.ttl),
        };
        let mut live = self.live.lock().expect("session lock");
        live.retain(|_, v| v.expires_at > now);
        live.insert(s.token.clone(), s.clone());
        s
    }

    /// The session's person, if the token is known and not expired.
    pub fn resolve(&self, token: &str, now: Timestamp) -> Option<PersonId> {
        let mut live = self.live.lock().expect("session lock");
        match live.get(token) {
            Some(s) if s.expires_at > now => Some(s.person),
            Some(_) => {
                live.remove(token);
                None
            }
            None => None,
        }
    }

    pub fn close(&self, token: &str) -> bool {
        self.live.lock().expect("session lock").remove(token).is_some()
    }
}
