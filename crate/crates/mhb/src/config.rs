//! Service configuration: one TOML file, then environment overrides.
//!
//! ```toml
//! listen = "127.0.0.1:8080"
//! data_dir = "/var/lib/mhb"
//! session_ttl = 28800          # seconds
//!
//! [admin]                      # optional bootstrap administrator
//! login = "admin"
//! password = "change me"
//! display_name = "Administrator"
//! ```
//!
//! Overrides: `MHB_LISTEN`, `MHB_DATA_DIR`, `MHB_SESSION_TTL`,
//! `MHB_ADMIN_LOGIN`, `MHB_ADMIN_PASSWORD`.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";
pub const DEFAULT_SESSION_TTL: u64 = 8 * 3600;

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl ConfigError {
    pub fn code(&self) -> &'static str {
        "CONFIG_INVALID"
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    listen: Option<String>,
    data_dir: Option<PathBuf>,
    session_ttl: Option<u64>,
    admin: Option<RawAdmin>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAdmin {
    login: Option<String>,
    password: Option<String>,
    display_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdminBootstrap {
    pub login: String,
    pub password: String,
    pub display_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    pub session_ttl: u64,
    pub admin: Option<AdminBootstrap>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, |k| std::env::var(k).ok())
    }

    /// Parse `text` and apply overrides looked up through `env`.
    pub fn parse(text: &str, env: impl Fn(&str) -> Option<String>) -> Result<Config, ConfigError> {
        let mut raw: RawConfig =
            toml::from_str(text).map_err(|e| ConfigError(format!("invalid config: {e}")))?;

        if let Some(v) = env("MHB_LISTEN") {
            raw.listen = Some(v);
        }
        if let Some(v) = env("MHB_DATA_DIR") {
            raw.data_dir = Some(v.into());
        }
        if let Some(v) = env("MHB_SESSION_TTL") {
            let ttl = v
                .parse()
                .map_err(|_| ConfigError(format!("MHB_SESSION_TTL: expected seconds, got `{v}`")))?;
            raw.session_ttl = Some(ttl);
        }
        let login = env("MHB_ADMIN_LOGIN");
        let password = env("MHB_ADMIN_PASSWORD");
        if login.is_some() || password.is_some() {
            let admin = raw.admin.get_or_insert_with(RawAdmin::default);
            if login.is_some() {
                admin.login = login;
            }
            if password.is_some() {
                admin.password = password;
            }
        }

        let listen_text = raw.listen.unwrap_or_else(|| DEFAULT_LISTEN.to_string());
        let listen = listen_text
            .parse()
            .map_err(|_| ConfigError(format!("listen: `{listen_text}` is not a socket address")))?;
        let data_dir = raw
            .data_dir
            .ok_or_else(|| ConfigError("data_dir: missing (set it in the file or MHB_DATA_DIR)".into()))?;
        let session_ttl = raw.session_ttl.unwrap_or(DEFAULT_SESSION_TTL);
        if session_ttl == 0 {
            return Err(ConfigError("session_ttl: must be positive".into()));
        }
        let admin = match raw.admin {
            None => None,
            Some(a) => {
                let login = a.login.filter(|s| !s.trim().is_empty());
                let password = a.password.filter(|s| !s.is_empty());
                match (login, password) {
                    (Some(login), Some(password)) => Some(AdminBootstrap {
                        display_name: a.display_name.unwrap_or_else(|| login.clone()),
                        login,
                        password,
                    }),
                    (None, _) => return Err(ConfigError("admin.login: missing".into())),
                    (_, None) => return Err(ConfigError("admin.password: missing".into())),
                }
            }
        };
        Ok(Config {
            listen,
            data_dir,
            session_ttl,
            admin,
        })
    }
}
