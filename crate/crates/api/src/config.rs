//! Service configuration: an optional TOML file, then environment overrides.
//!
//! ```toml
//! bind = "0.0.0.0:8080"
//! seed = "crates/core/seed/diets.toml"
//! store = "/var/lib/diethelper"
//! session_ttl_secs = 86400
//!
//! [admin]
//! name = "Administrator"
//! email = "admin@example.com"
//! password = "change-me-please"
//!
//! [ocr]
//! command = "/usr/local/bin/label-ocr"
//! args = ["--lang", "eng"]
//! ```

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct AdminBootstrap {
    #[serde(default = "default_admin_name")]
    pub name: String,
    pub email: String,
    pub password: String,
}

fn default_admin_name() -> String {
    "Administrator".to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Deserialize)]
pub struct OcrConfig {
    pub command: Option<PathBuf>,
    #[serde(default)]
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: SocketAddr,
    /// Seed file; the compiled-in catalog is used when absent.
    pub seed: Option<PathBuf>,
    /// Document store directory; in-memory when absent.
    pub store: Option<PathBuf>,
    #[serde(default = "default_ttl")]
    pub session_ttl_secs: u64,
    pub admin: Option<AdminBootstrap>,
    #[serde(default)]
    pub ocr: OcrConfig,
}

fn default_bind() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

fn default_ttl() -> u64 {
    60 * 60 * 24
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: default_bind(),
            seed: None,
            store: None,
            session_ttl_secs: default_ttl(),
            admin: None,
            ocr: OcrConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {0}: {1}")]
    Read(PathBuf, std::io::Error),
    #[error("invalid config file {0}: {1}")]
    Parse(PathBuf, String),
    #[error("invalid value for {0}: {1}")]
    Env(&'static str, String),
}

impl ServiceConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read(path.to_path_buf(), e))?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse(path.to_path_buf(), e.to_string()))
    }

    /// Applies `DIETHELPER_*` overrides from `vars`.
    pub fn apply_env<F>(mut self, vars: F) -> Result<Self, ConfigError>
    where
        F: Fn(&str) -> Option<String>,
    {
        if let Some(bind) = vars("DIETHELPER_BIND") {
            self.bind = bind
                .parse()
                .map_err(|e| ConfigError::Env("DIETHELPER_BIND", format!("{e}")))?;
        }
        if let Some(port) = vars("DIETHELPER_PORT") {
            let port: u16 = port
                .parse()
                .map_err(|e| ConfigError::Env("DIETHELPER_PORT", format!("{e}")))?;
            self.bind.set_port(port);
        }
        if let Some(seed) = vars("DIETHELPER_SEED") {
            self.seed = Some(seed.into());
        }
        if let Some(store) = vars("DIETHELPER_STORE") {
            self.store = Some(store.into());
        }
        if let Some(ttl) = vars("DIETHELPER_SESSION_TTL_SECS") {
            self.session_ttl_secs = ttl
                .parse()
                .map_err(|e| ConfigError::Env("DIETHELPER_SESSION_TTL_SECS", format!("{e}")))?;
        }
        if let (Some(email), Some(password)) = (vars("DIETHELPER_ADMIN_EMAIL"), vars("DIETHELPER_ADMIN_PASSWORD")) {
            self.admin = Some(AdminBootstrap {
                name: vars("DIETHELPER_ADMIN_NAME").unwrap_or_else(default_admin_name),
                email,
                password,
            });
        }
        if let Some(command) = vars(diethelper_core::capture::OCR_COMMAND_ENV) {
            self.ocr.command = Some(command.into());
        }
        if let Some(args) = vars(diethelper_core::capture::OCR_ARGS_ENV) {
            self.ocr.args = args.split_whitespace().map(str::to_string).collect();
        }
        Ok(self)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let base = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        base.apply_env(|k| std::env::var(k).ok().filter(|v| !v.is_empty()))
    }
}
