//! Keyed document persistence.
//!
//! Every diet and every user lives in its own JSON document, addressed by
//! `(collection, key)`. A whole document is read or written at once; there is
//! no partial projection.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corrupt document {collection}/{key}: {source}")]
    Corrupt {
        collection: String,
        key: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Backend for whole-document reads and writes.
pub trait DocumentStore: Send + Sync {
    fn get_raw(&self, collection: &str, key: &str) -> Result<Option<String>, StoreError>;
    fn put_raw(&self, collection: &str, key: &str, doc: &str) -> Result<(), StoreError>;
    /// Returns `true` when a document was removed.
    fn delete(&self, collection: &str, key: &str) -> Result<bool, StoreError>;
    /// All keys of a collection in ascending order.
    fn keys(&self, collection: &str) -> Result<Vec<String>, StoreError>;
}

pub fn get_doc<T: DeserializeOwned>(
    store: &dyn DocumentStore,
    collection: &str,
    key: &str,
) -> Result<Option<T>, StoreError> {
    match store.get_raw(collection, key)? {
        None => Ok(None),
        Some(raw) => serde_json::from_str(&raw)
            .map(Some)
            .map_err(|source| StoreError::Corrupt {
                collection: collection.to_string(),
                key: key.to_string(),
                source,
            }),
    }
}

pub fn put_doc<T: Serialize>(
    store: &dyn DocumentStore,
    collection: &str,
    key: &str,
    doc: &T,
) -> Result<(), StoreError> {
    let raw = serde_json::to_string_pretty(doc).map_err(|source| StoreError::Corrupt {
        collection: collection.to_string(),
        key: key.to_string(),
        source,
    })?;
    store.put_raw(collection, key, &raw)
}

/// Volatile store, mostly for tests and the CLI.
#[derive(Default)]
pub struct MemoryStore {
    collections: RwLock<HashMap<String, BTreeMap<String, String>>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl DocumentStore for MemoryStore {
    fn get_raw(&self, collection: &str, key: &str) -> Result<Option<String>, StoreError> {
        let guard = self.collections.read().expect("store lock poisoned");
        Ok(guard.get(collection).and_then(|c| c.get(key)).cloned())
    }

    fn put_raw(&self, collection: &str, key: &str, doc: &str) -> Result<(), StoreError> {
        let mut guard = self.collections.write().expect("store lock poisoned");
        guard
            .entry(collection.to_string())
            .or_default()
            .insert(key.to_string(), doc.to_string());
        Ok(())
    }

    fn delete(&self, collection: &str, key: &str) -> Result<bool, StoreError> {
        let mut guard = self.collections.write().expect("store lock poisoned");
        Ok(guard
            .get_mut(collection)
            .map(|c| c.remove(key).is_some())
            .unwrap_or(false))
    }

    fn keys(&self, collection: &str) -> Result<Vec<String>, StoreError> {
        let guard = self.collections.read().expect("store lock poisoned");
        Ok(guard
            .get(collection)
            .map(|c| c.keys().cloned().collect())
            .unwrap_or_default())
    }
}

/// One JSON file per document under `<root>/<collection>/<encoded key>.json`.
///
/// Writes go to a temporary file in the same directory and are renamed into
/// place, so readers see either the old or the new document.
pub struct DirStore {
    root: PathBuf,
}

impl DirStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|source| StoreError::Io {
            path: root.clone(),
            source,
        })?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn doc_path(&self, collection: &str, key: &str) -> PathBuf {
        self.root
            .join(encode_component(collection))
            .join(format!("{}.json", encode_component(key)))
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl DocumentStore for DirStore {
    fn get_raw(&self, collection: &str, key: &str) -> Result<Option<String>, StoreError> {
        let path = self.doc_path(collection, key);
        match fs::read_to_string(&path) {
            Ok(raw) => Ok(Some(raw)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    fn put_raw(&self, collection: &str, key: &str, doc: &str) -> Result<(), StoreError> {
        let path = self.doc_path(collection, key);
        let dir = path.parent().expect("document path has a parent");
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let tmp = dir.join(format!(".{}.tmp", path.file_name().unwrap().to_string_lossy()));
        {
            let mut file = fs::File::create(&tmp).map_err(io_err(&tmp))?;
            file.write_all(doc.as_bytes()).map_err(io_err(&tmp))?;
            file.sync_all().map_err(io_err(&tmp))?;
        }
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }

    fn delete(&self, collection: &str, key: &str) -> Result<bool, StoreError> {
        let path = self.doc_path(collection, key);
        match fs::remove_file(&path) {
            Ok(()) => Ok(true),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(false),
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    fn keys(&self, collection: &str) -> Result<Vec<String>, StoreError> {
        let dir = self.root.join(encode_component(collection));
        let entries = match fs::read_dir(&dir) {
            Ok(entries) => entries,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&dir)(e)),
        };
        let mut keys = Vec::new();
        for entry in entries {
            let entry = entry.map_err(io_err(&dir))?;
            let name = entry.file_name();
            let name = name.to_string_lossy();
            if let Some(stem) = name.strip_suffix(".json") {
                if !stem.starts_with('.') {
                    if let Some(key) = decode_component(stem) {
                        keys.push(key);
                    }
                }
            }
        }
        keys.sort();
        Ok(keys)
    }
}

/// Keeps `[a-z0-9_-]` readable and percent-encodes every other byte, so any
/// key maps to a safe, reversible file name.
fn encode_component(key: &str) -> String {
    let mut out = String::with_capacity(key.len());
    for byte in key.bytes() {
        match byte {
            b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' => out.push(byte as char),
            _ => out.push_str(&format!("%{byte:02X}")),
        }
    }
    out
}

fn decode_component(name: &str) -> Option<String> {
    let bytes = name.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = name.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}
