use std::path::Path;
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};
use std::time::Duration;

use anyhow::Context;
use diethelper_core::catalog::{read_seed, SHIPPED_SEED};
use diethelper_core::{
    catalog, Catalog, CommandAdapter, DirStore, DirectoryOptions, DocumentStore, MatcherCache, MemoryStore, OcrAdapter,
    PasswordHasher, UserDirectory,
};

use crate::config::ServiceConfig;

/// Everything a request handler needs. Cloned per request as an `Arc`.
pub struct AppState {
    catalog: RwLock<Catalog>,
    pub users: UserDirectory,
    pub matchers: MatcherCache,
    pub ocr: Option<Arc<dyn OcrAdapter>>,
}

impl AppState {
    pub fn new(catalog: Catalog, users: UserDirectory, ocr: Option<Arc<dyn OcrAdapter>>) -> Self {
        Self {
            catalog: RwLock::new(catalog),
            users,
            matchers: MatcherCache::default(),
            ocr,
        }
    }

    /// In-memory state with the shipped catalog; `fast_hashing` trades
    /// password-hash strength for speed and is meant for tests.
    pub fn in_memory(fast_hashing: bool, ocr: Option<Arc<dyn OcrAdapter>>) -> anyhow::Result<Self> {
        let store: Arc<dyn DocumentStore> = Arc::new(MemoryStore::default());
        let mut catalog = Catalog::open(store.clone())?;
        catalog.apply_seed(catalog::parse_seed(SHIPPED_SEED)?)?;
        let options = DirectoryOptions {
            hasher: if fast_hashing {
                PasswordHasher::insecure_fast()
            } else {
                PasswordHasher::default()
            },
            ..DirectoryOptions::default()
        };
        Ok(Self::new(catalog, UserDirectory::open(store, options)?, ocr))
    }

    /// Opens persistence, seeds an empty catalog and bootstraps the admin.
    pub fn from_config(config: &ServiceConfig) -> anyhow::Result<Self> {
        let store: Arc<dyn DocumentStore> = match &config.store {
            Some(dir) => Arc::new(DirStore::open(dir).with_context(|| format!("opening store at {}", dir.display()))?),
            None => Arc::new(MemoryStore::default()),
        };
        let mut catalog = Catalog::open(store.clone()).context("loading catalog")?;
        if catalog.is_empty() {
            let diets = match &config.seed {
                Some(path) => read_seed(path)?,
                None => catalog::parse_seed(SHIPPED_SEED)?,
            };
            catalog.apply_seed(diets).context("seeding catalog")?;
            tracing::info!(diets = catalog.len(), "catalog seeded");
        }

        let options = DirectoryOptions {
            session_ttl: Duration::from_secs(config.session_ttl_secs),
            ..DirectoryOptions::default()
        };
        let users = UserDirectory::open(store, options).context("loading users")?;
        if let Some(admin) = &config.admin {
            users
                .bootstrap_admin(&admin.name, &admin.email, &admin.password)
                .context("bootstrapping admin account")?;
        }

        let ocr = config
            .ocr
            .command
            .as_deref()
            .map(|cmd: &Path| Arc::new(CommandAdapter::new(cmd, config.ocr.args.clone())) as Arc<dyn OcrAdapter>);
        Ok(Self::new(catalog, users, ocr))
    }

    pub fn catalog(&self) -> RwLockReadGuard<'_, Catalog> {
        self.catalog.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn catalog_mut(&self) -> RwLockWriteGuard<'_, Catalog> {
        self.catalog.write().unwrap_or_else(|e| e.into_inner())
    }
}
