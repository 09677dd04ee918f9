use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::{collect_rules, Matcher};
use crate::catalog::Catalog;
use crate::profile::UserProfile;

/// Identifies the inputs a matcher was built from. Any catalog mutation or
/// profile edit changes the key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MatcherKey {
    pub catalog_version: u64,
    pub uid: String,
    pub profile_revision: u64,
}

/// Bounded cache of built matchers, shared between request handlers.
pub struct MatcherCache {
    capacity: usize,
    entries: Mutex<HashMap<MatcherKey, Arc<Matcher>>>,
}

impl MatcherCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            entries: Mutex::new(HashMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Returns the cached matcher for this profile and catalog, building it
    /// if needed. Profiles without a uid are never cached.
    pub fn matcher_for(&self, profile: &UserProfile, catalog: &Catalog) -> Arc<Matcher> {
        if profile.uid.is_empty() {
            return Arc::new(Matcher::new(&collect_rules(profile, catalog)));
        }
        let key = MatcherKey {
            catalog_version: catalog.version(),
            uid: profile.uid.clone(),
            profile_revision: profile.revision,
        };
        if let Some(found) = self.entries.lock().expect("cache lock poisoned").get(&key) {
            return found.clone();
        }
        let built = Arc::new(Matcher::new(&collect_rules(profile, catalog)));
        let mut entries = self.entries.lock().expect("cache lock poisoned");
        // Stale keys for this uid can never be hit again.
        entries.retain(|k, _| k.uid != key.uid);
        if entries.len() >= self.capacity {
            entries.clear();
        }
        entries.insert(key, built.clone());
        built
    }
}

impl Default for MatcherCache {
    fn default() -> Self {
        Self::new(1024)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Diet;
    use crate::profile::Role;

    fn profile(uid: &str, revision: u64) -> UserProfile {
        let mut p = UserProfile::ephemeral(["vegan"], ["soy"]);
        p.uid = uid.into();
        p.revision = revision;
        p
    }

    #[test]
    fn reuses_until_inputs_change() {
        let cache = MatcherCache::new(8);
        let mut catalog = Catalog::shipped();
        let a = cache.matcher_for(&profile("u1", 1), &catalog);
        let b = cache.matcher_for(&profile("u1", 1), &catalog);
        assert!(Arc::ptr_eq(&a, &b));

        let c = cache.matcher_for(&profile("u1", 2), &catalog);
        assert!(!Arc::ptr_eq(&a, &c));
        assert_eq!(cache.len(), 1);

        catalog
            .upsert_diet(Role::Admin, Diet::new("vegan", "", ["soy"]).unwrap())
            .unwrap();
        let d = cache.matcher_for(&profile("u1", 2), &catalog);
        assert!(!Arc::ptr_eq(&c, &d));
        assert_eq!(d.needle_count(), 1);
    }

    #[test]
    fn ephemeral_profiles_bypass_cache() {
        let cache = MatcherCache::new(8);
        cache.matcher_for(&profile("", 0), &Catalog::shipped());
        assert!(cache.is_empty());
    }

    #[test]
    fn capacity_bounds_entries() {
        let cache = MatcherCache::new(2);
        let catalog = Catalog::shipped();
        for i in 0..5 {
            cache.matcher_for(&profile(&format!("u{i}"), 0), &catalog);
            assert!(cache.len() <= 2);
        }
    }
}
