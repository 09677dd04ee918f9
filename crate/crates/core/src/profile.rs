//! Registered users: profile documents, password credentials and sessions.
//!
//! Each profile is one document keyed by uid and is always read and written
//! whole. Mutations for one user are serialized on that user's lock; different
//! users can be updated concurrently.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use base64::engine::general_purpose::STANDARD_NO_PAD as B64;
use base64::Engine as _;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use subtle::ConstantTimeEq;
use thiserror::Error;

use crate::catalog::Catalog;
use crate::store::{self, DocumentStore, StoreError};
use crate::transcript::normalize_ingredient;

const USERS: &str = "users";
const CREDENTIALS: &str = "credentials";

pub const MIN_PASSWORD_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Member,
    Admin,
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("email address is already registered")]
    EmailTaken,
    #[error("email address is not valid")]
    InvalidEmail,
    #[error("password must be at least {MIN_PASSWORD_LEN} characters")]
    WeakPassword,
    #[error("name must not be empty")]
    EmptyName,
    #[error("invalid email or password")]
    InvalidCredentials,
    #[error("missing or unknown session")]
    Unauthenticated,
    #[error("session has expired")]
    SessionExpired,
    #[error("not allowed for this account")]
    Unauthorized,
    #[error("user {0:?} not found")]
    UserNotFound(String),
    #[error("diet {0:?} not found")]
    DietNotFound(String),
    #[error("diet {0:?} is already chosen")]
    AlreadyChosen(String),
    #[error("diet {0:?} is not chosen")]
    NotChosen(String),
    #[error("ingredient must not be empty")]
    EmptyIngredient,
    #[error("ingredient must not contain a comma")]
    IngredientContainsComma,
    #[error("ingredient {0:?} is already in the list")]
    DuplicateIngredient(String),
    #[error("ingredient {0:?} is not in the list")]
    NotPresent(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// A user's profile document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub uid: String,
    pub name: String,
    pub email: String,
    pub chosen_diets: Vec<String>,
    pub custom_unwanted_ingredients: Vec<String>,
    /// Bumped on every mutation; used to key cached matchers.
    #[serde(default)]
    pub revision: u64,
}

impl UserProfile {
    /// A profile that is not backed by any account, for callers that just
    /// want to run a check with a given set of diets and ingredients.
    pub fn ephemeral<D, C>(chosen_diets: D, custom: C) -> Self
    where
        D: IntoIterator,
        D::Item: Into<String>,
        C: IntoIterator,
        C::Item: AsRef<str>,
    {
        let mut profile = Self {
            uid: String::new(),
            name: String::new(),
            email: String::new(),
            chosen_diets: Vec::new(),
            custom_unwanted_ingredients: Vec::new(),
            revision: 0,
        };
        for diet in chosen_diets {
            let diet = diet.into();
            if !profile.chosen_diets.contains(&diet) {
                profile.chosen_diets.push(diet);
            }
        }
        for item in custom {
            let item = normalize_ingredient(item.as_ref());
            if !item.is_empty() && !profile.custom_unwanted_ingredients.contains(&item) {
                profile.custom_unwanted_ingredients.push(item);
            }
        }
        profile
    }
}

/// Stored login data. The password is only ever kept as a scrypt hash.
#[derive(Clone, Serialize, Deserialize)]
pub struct Credential {
    pub email: String,
    pub uid: String,
    pub role: Role,
    pub password_hash: String,
}

impl fmt::Debug for Credential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Credential")
            .field("email", &self.email)
            .field("uid", &self.uid)
            .field("role", &self.role)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub token: String,
    pub uid: String,
    pub role: Role,
    /// Milliseconds since the Unix epoch.
    pub expires_at: u64,
}

impl Session {
    pub fn is_admin(&self) -> bool {
        self.role == Role::Admin
    }

    fn may_access(&self, uid: &str) -> bool {
        self.is_admin() || self.uid == uid
    }
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn random_hex(len: usize) -> String {
    let mut bytes = vec![0u8; len];
    rand::rng().fill_bytes(&mut bytes);
    hex::encode(bytes)
}

/// scrypt password hashing with a random 16-byte salt per hash.
///
/// Hashes are encoded as `$scrypt$ln=<log_n>,r=<r>,p=<p>$<salt>$<hash>` so
/// that verification uses the parameters the hash was made with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PasswordHasher {
    pub log_n: u8,
    pub r: u32,
    pub p: u32,
}

impl Default for PasswordHasher {
    fn default() -> Self {
        Self { log_n: 15, r: 8, p: 1 }
    }
}

impl PasswordHasher {
    /// Cheap parameters for tests. Never use for real accounts.
    pub fn insecure_fast() -> Self {
        Self { log_n: 4, r: 8, p: 1 }
    }

    pub fn hash(&self, password: &str) -> String {
        let mut salt = [0u8; 16];
        rand::rng().fill_bytes(&mut salt);
        let digest = derive(password, &salt, self.log_n, self.r, self.p).expect("hasher parameters are valid");
        format!(
            "$scrypt$ln={},r={},p={}${}${}",
            self.log_n,
            self.r,
            self.p,
            B64.encode(salt),
            B64.encode(digest)
        )
    }

    /// Constant-time comparison against an encoded hash. Malformed hashes
    /// never verify.
    pub fn verify(password: &str, encoded: &str) -> bool {
        let Some(h) = parse_hash(encoded) else {
            return false;
        };
        match derive(password, &h.salt, h.log_n, h.r, h.p) {
            Some(actual) => actual.ct_eq(&h.digest).into(),
            None => false,
        }
    }
}

fn derive(password: &str, salt: &[u8], log_n: u8, r: u32, p: u32) -> Option<[u8; 32]> {
    let params = scrypt::Params::new(log_n, r, p).ok()?;
    let mut out = [0u8; 32];
    scrypt::scrypt(password.as_bytes(), salt, &params, &mut out).ok()?;
    Some(out)
}

struct ParsedHash {
    log_n: u8,
    r: u32,
    p: u32,
    salt: Vec<u8>,
    digest: Vec<u8>,
}

fn parse_hash(encoded: &str) -> Option<ParsedHash> {
    let mut parts = encoded.strip_prefix("$scrypt$")?.split('$');
    let params = parts.next()?;
    let salt = B64.decode(parts.next()?).ok()?;
    let digest = B64.decode(parts.next()?).ok()?;
    if parts.next().is_some() {
        return None;
    }
    let (mut log_n, mut r, mut p) = (None, None, None);
    for kv in params.split(',') {
        let (k, v) = kv.split_once('=')?;
        match k {
            "ln" => log_n = v.parse().ok(),
            "r" => r = v.parse().ok(),
            "p" => p = v.parse().ok(),
            _ => return None,
        }
    }
    Some(ParsedHash {
        log_n: log_n?,
        r: r?,
        p: p?,
        salt,
        digest,
    })
}

fn normalize_email(email: &str) -> Result<String, ProfileError> {
    let email = email.trim().to_lowercase();
    match email.split_once('@') {
        Some((local, domain)) if !local.is_empty() && !domain.is_empty() && !email.contains(char::is_whitespace) => {
            Ok(email)
        }
        _ => Err(ProfileError::InvalidEmail),
    }
}

fn normalize_custom(text: &str) -> Result<String, ProfileError> {
    let item = normalize_ingredient(text);
    if item.is_empty() {
        return Err(ProfileError::EmptyIngredient);
    }
    if item.contains(',') {
        return Err(ProfileError::IngredientContainsComma);
    }
    Ok(item)
}

/// Configuration for a [`UserDirectory`].
#[derive(Debug, Clone)]
pub struct DirectoryOptions {
    pub hasher: PasswordHasher,
    pub session_ttl: Duration,
}

impl Default for DirectoryOptions {
    fn default() -> Self {
        Self {
            hasher: PasswordHasher::default(),
            session_ttl: Duration::from_secs(60 * 60 * 24),
        }
    }
}

type ProfileCell = Arc<RwLock<UserProfile>>;

/// Users, credentials and live sessions.
pub struct UserDirectory {
    store: Arc<dyn DocumentStore>,
    options: DirectoryOptions,
    profiles: RwLock<HashMap<String, ProfileCell>>,
    credentials: RwLock<HashMap<String, Credential>>,
    sessions: RwLock<HashMap<String, Session>>,
    /// Hash checked for unknown emails so both failure paths cost the same.
    decoy_hash: String,
}

impl UserDirectory {
    /// Loads every user and credential document from `store`.
    pub fn open(store: Arc<dyn DocumentStore>, options: DirectoryOptions) -> Result<Self, ProfileError> {
        let mut profiles = HashMap::new();
        for uid in store.keys(USERS)? {
            if let Some(profile) = store::get_doc::<UserProfile>(store.as_ref(), USERS, &uid)? {
                profiles.insert(profile.uid.clone(), Arc::new(RwLock::new(profile)));
            }
        }
        let mut credentials = HashMap::new();
        for email in store.keys(CREDENTIALS)? {
            if let Some(cred) = store::get_doc::<Credential>(store.as_ref(), CREDENTIALS, &email)? {
                credentials.insert(cred.email.clone(), cred);
            }
        }
        let decoy_hash = options.hasher.hash(&random_hex(16));
        Ok(Self {
            store,
            options,
            profiles: RwLock::new(profiles),
            credentials: RwLock::new(credentials),
            sessions: RwLock::new(HashMap::new()),
            decoy_hash,
        })
    }

    pub fn register(&self, name: &str, email: &str, password: &str) -> Result<UserProfile, ProfileError> {
        self.create_account(name, email, password, Role::Member)
    }

    /// Creates the configured administrator if the email is not registered
    /// yet; an existing account with that email is promoted to admin.
    pub fn bootstrap_admin(&self, name: &str, email: &str, password: &str) -> Result<UserProfile, ProfileError> {
        let email = normalize_email(email)?;
        let existing = {
            let mut creds = self.credentials.write().expect("lock poisoned");
            match creds.get_mut(&email) {
                Some(cred) => {
                    if cred.role != Role::Admin {
                        cred.role = Role::Admin;
                        store::put_doc(self.store.as_ref(), CREDENTIALS, &email, cred)?;
                    }
                    Some(cred.uid.clone())
                }
                None => None,
            }
        };
        match existing {
            Some(uid) => self.load(&uid),
            None => self.create_account(name, &email, password, Role::Admin),
        }
    }

    fn create_account(&self, name: &str, email: &str, password: &str, role: Role) -> Result<UserProfile, ProfileError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(ProfileError::EmptyName);
        }
        let email = normalize_email(email)?;
        if password.chars().count() < MIN_PASSWORD_LEN {
            return Err(ProfileError::WeakPassword);
        }
        // Hash outside the lock so registrations don't stall logins.
        let password_hash = self.options.hasher.hash(password);

        let mut creds = self.credentials.write().expect("lock poisoned");
        if creds.contains_key(&email) {
            return Err(ProfileError::EmailTaken);
        }
        let profile = UserProfile {
            uid: random_hex(14),
            name: name.to_string(),
            email: email.clone(),
            chosen_diets: Vec::new(),
            custom_unwanted_ingredients: Vec::new(),
            revision: 0,
        };
        let credential = Credential {
            email: email.clone(),
            uid: profile.uid.clone(),
            role,
            password_hash,
        };
        store::put_doc(self.store.as_ref(), USERS, &profile.uid, &profile)?;
        store::put_doc(self.store.as_ref(), CREDENTIALS, &email, &credential)?;
        self.profiles
            .write()
            .expect("lock poisoned")
            .insert(profile.uid.clone(), Arc::new(RwLock::new(profile.clone())));
        creds.insert(email, credential);
        tracing::info!(uid = %profile.uid, ?role, "account created");
        Ok(profile)
    }

    pub fn authenticate(&self, email: &str, password: &str) -> Result<Session, ProfileError> {
        let email = normalize_email(email).map_err(|_| ProfileError::InvalidCredentials)?;
        let credential = self.credentials.read().expect("lock poisoned").get(&email).cloned();
        let Some(credential) = credential else {
            PasswordHasher::verify(password, &self.decoy_hash);
            return Err(ProfileError::InvalidCredentials);
        };
        if !PasswordHasher::verify(password, &credential.password_hash) {
            return Err(ProfileError::InvalidCredentials);
        }
        let ttl = self.options.session_ttl.as_millis() as u64;
        let session = Session {
            token: random_hex(32),
            uid: credential.uid,
            role: credential.role,
            expires_at: now_millis().saturating_add(ttl),
        };
        self.sessions
            .write()
            .expect("lock poisoned")
            .insert(session.token.clone(), session.clone());
        Ok(session)
    }

    /// Resolves a bearer token to a live session.
    pub fn validate(&self, token: &str) -> Result<Session, ProfileError> {
        self.validate_at(token, now_millis())
    }

    pub fn validate_at(&self, token: &str, now_ms: u64) -> Result<Session, ProfileError> {
        let session = self
            .sessions
            .read()
            .expect("lock poisoned")
            .get(token)
            .cloned()
            .ok_or(ProfileError::Unauthenticated)?;
        if now_ms >= session.expires_at {
            self.sessions.write().expect("lock poisoned").remove(token);
            return Err(ProfileError::SessionExpired);
        }
        Ok(session)
    }

    pub fn logout(&self, token: &str) {
        self.sessions.write().expect("lock poisoned").remove(token);
    }

    fn cell(&self, uid: &str) -> Result<ProfileCell, ProfileError> {
        self.profiles
            .read()
            .expect("lock poisoned")
            .get(uid)
            .cloned()
            .ok_or_else(|| ProfileError::UserNotFound(uid.to_string()))
    }

    fn load(&self, uid: &str) -> Result<UserProfile, ProfileError> {
        Ok(self.cell(uid)?.read().expect("lock poisoned").clone())
    }

    pub fn get_profile(&self, caller: &Session, uid: &str) -> Result<UserProfile, ProfileError> {
        if !caller.may_access(uid) {
            return Err(ProfileError::Unauthorized);
        }
        self.load(uid)
    }

    /// Applies `change` to a copy of the profile, persists it, then swaps it
    /// in. Readers see either the old or the new document.
    fn update<F>(&self, caller: &Session, uid: &str, change: F) -> Result<UserProfile, ProfileError>
    where
        F: FnOnce(&mut UserProfile) -> Result<(), ProfileError>,
    {
        if !caller.may_access(uid) {
            return Err(ProfileError::Unauthorized);
        }
        let cell = self.cell(uid)?;
        let mut guard = cell.write().expect("lock poisoned");
        let mut next = guard.clone();
        change(&mut next)?;
        next.revision += 1;
        store::put_doc(self.store.as_ref(), USERS, uid, &next)?;
        *guard = next.clone();
        Ok(next)
    }

    pub fn rename(&self, caller: &Session, uid: &str, name: &str) -> Result<UserProfile, ProfileError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(ProfileError::EmptyName);
        }
        self.update(caller, uid, |p| {
            p.name = name.to_string();
            Ok(())
        })
    }

    pub fn choose_diet(
        &self,
        caller: &Session,
        uid: &str,
        diet_name: &str,
        catalog: &Catalog,
    ) -> Result<UserProfile, ProfileError> {
        if !catalog.contains(diet_name) {
            return Err(ProfileError::DietNotFound(diet_name.to_string()));
        }
        self.update(caller, uid, |p| {
            if p.chosen_diets.iter().any(|d| d == diet_name) {
                return Err(ProfileError::AlreadyChosen(diet_name.to_string()));
            }
            p.chosen_diets.push(diet_name.to_string());
            Ok(())
        })
    }

    pub fn remove_diet(&self, caller: &Session, uid: &str, diet_name: &str) -> Result<UserProfile, ProfileError> {
        self.update(caller, uid, |p| {
            let before = p.chosen_diets.len();
            p.chosen_diets.retain(|d| d != diet_name);
            if p.chosen_diets.len() == before {
                return Err(ProfileError::NotChosen(diet_name.to_string()));
            }
            Ok(())
        })
    }

    pub fn add_custom_ingredient(&self, caller: &Session, uid: &str, text: &str) -> Result<UserProfile, ProfileError> {
        let item = normalize_custom(text)?;
        self.update(caller, uid, |p| {
            if p.custom_unwanted_ingredients.contains(&item) {
                return Err(ProfileError::DuplicateIngredient(item));
            }
            p.custom_unwanted_ingredients.push(item);
            Ok(())
        })
    }

    pub fn remove_custom_ingredient(
        &self,
        caller: &Session,
        uid: &str,
        text: &str,
    ) -> Result<UserProfile, ProfileError> {
        let item = normalize_ingredient(text);
        self.update(caller, uid, |p| {
            let before = p.custom_unwanted_ingredients.len();
            p.custom_unwanted_ingredients.retain(|c| *c != item);
            if p.custom_unwanted_ingredients.len() == before {
                return Err(ProfileError::NotPresent(item));
            }
            Ok(())
        })
    }

    /// All profiles ordered by email. Admin only.
    pub fn list_users(&self, caller: &Session) -> Result<Vec<UserProfile>, ProfileError> {
        if !caller.is_admin() {
            return Err(ProfileError::Unauthorized);
        }
        let cells: Vec<ProfileCell> = self.profiles.read().expect("lock poisoned").values().cloned().collect();
        let mut users: Vec<UserProfile> = cells.iter().map(|c| c.read().expect("lock poisoned").clone()).collect();
        users.sort_by(|a, b| a.email.cmp(&b.email));
        Ok(users)
    }

    /// Removes the profile and credential and ends every session of `uid`.
    pub fn admin_delete_user(&self, caller: &Session, uid: &str) -> Result<(), ProfileError> {
        if !caller.is_admin() {
            return Err(ProfileError::Unauthorized);
        }
        let cell = self
            .profiles
            .write()
            .expect("lock poisoned")
            .remove(uid)
            .ok_or_else(|| ProfileError::UserNotFound(uid.to_string()))?;
        let email = cell.read().expect("lock poisoned").email.clone();
        self.store.delete(USERS, uid)?;
        {
            let mut creds = self.credentials.write().expect("lock poisoned");
            creds.retain(|_, c| c.uid != uid);
            self.store.delete(CREDENTIALS, &email)?;
        }
        self.sessions
            .write()
            .expect("lock poisoned")
            .retain(|_, s| s.uid != uid);
        tracing::info!(%uid, "account deleted");
        Ok(())
    }
}
