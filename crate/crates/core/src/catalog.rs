//! The diet catalog: named diets with a description and a forbidden-ingredient
//! list, seeded from a TOML file and editable by administrators.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::Role;
use crate::store::{self, DocumentStore, StoreError};
use crate::transcript::normalize_ingredient;

/// Name of the pseudo-diet that carries a user's own unwanted ingredients.
pub const CUSTOM_DIET: &str = "Custom";

/// The seed file compiled into the crate.
pub const SHIPPED_SEED: &str = include_str!("../seed/diets.toml");

const DIETS: &str = "diets";
const META: &str = "meta";
const CATALOG_META_KEY: &str = "catalog";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DietValidationError {
    #[error("diet name must not be empty")]
    EmptyName,
    #[error("diet name {0:?} is reserved")]
    ReservedName(String),
    #[error("diet {diet:?} has an empty forbidden ingredient")]
    EmptyIngredient { diet: String },
    #[error("diet {diet:?} lists {ingredient:?} more than once")]
    DuplicateIngredient { diet: String, ingredient: String },
    #[error("ingredient {ingredient:?} in diet {diet:?} contains a comma")]
    IngredientContainsComma { diet: String, ingredient: String },
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read seed file {path}: {source}")]
    SeedRead {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed seed file: {0}")]
    SeedParse(String),
    #[error("invalid seed entry: {0}")]
    SeedValidation(String),
    #[error(transparent)]
    Validation(#[from] DietValidationError),
    #[error("diet {0:?} not found")]
    DietNotFound(String),
    #[error("administrator role required")]
    Unauthorized,
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// A named rule set. Constructed through [`Diet::new`], which trims and
/// lowercases every ingredient and rejects invalid entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DietDoc")]
pub struct Diet {
    name: String,
    description: String,
    forbidden_ingredients: Vec<String>,
}

#[derive(Deserialize)]
struct DietDoc {
    name: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    forbidden_ingredients: Vec<String>,
}

impl TryFrom<DietDoc> for Diet {
    type Error = DietValidationError;

    fn try_from(doc: DietDoc) -> Result<Self, Self::Error> {
        Diet::new(doc.name, doc.description, doc.forbidden_ingredients)
    }
}

impl Diet {
    pub fn new<I, S>(
        name: impl Into<String>,
        description: impl Into<String>,
        forbidden_ingredients: I,
    ) -> Result<Self, DietValidationError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let name = name.into().trim().to_string();
        if name.is_empty() {
            return Err(DietValidationError::EmptyName);
        }
        if name.eq_ignore_ascii_case(CUSTOM_DIET) {
            return Err(DietValidationError::ReservedName(name));
        }

        let mut seen = HashSet::new();
        let mut ingredients = Vec::new();
        for raw in forbidden_ingredients {
            let ingredient = normalize_ingredient(raw.as_ref());
            if ingredient.is_empty() {
                return Err(DietValidationError::EmptyIngredient { diet: name });
            }
            if ingredient.contains(',') {
                return Err(DietValidationError::IngredientContainsComma { diet: name, ingredient });
            }
            if !seen.insert(ingredient.clone()) {
                return Err(DietValidationError::DuplicateIngredient { diet: name, ingredient });
            }
            ingredients.push(ingredient);
        }

        Ok(Self {
            name,
            description: description.into().trim().to_string(),
            forbidden_ingredients: ingredients,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn forbidden_ingredients(&self) -> &[String] {
        &self.forbidden_ingredients
    }
}

/// Listing row for browsing the catalog.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DietSummary {
    pub name: String,
    pub description: String,
    pub ingredient_count: usize,
}

#[derive(Deserialize)]
struct SeedFile {
    #[serde(default)]
    diets: Vec<toml::Value>,
}

/// Parses seed TOML into validated diets, rejecting duplicate names.
pub fn parse_seed(source: &str) -> Result<Vec<Diet>, CatalogError> {
    let file: SeedFile = toml::from_str(source).map_err(|e| CatalogError::SeedParse(e.to_string()))?;
    let mut names = HashSet::new();
    let mut diets = Vec::with_capacity(file.diets.len());
    for (position, entry) in file.diets.into_iter().enumerate() {
        let doc: DietDoc = entry
            .try_into()
            .map_err(|e: toml::de::Error| CatalogError::SeedParse(format!("diet #{}: {e}", position + 1)))?;
        let diet = Diet::try_from(doc).map_err(|e| CatalogError::SeedValidation(e.to_string()))?;
        if !names.insert(diet.name.clone()) {
            return Err(CatalogError::SeedValidation(format!(
                "duplicate diet name {:?}",
                diet.name
            )));
        }
        diets.push(diet);
    }
    Ok(diets)
}

pub fn read_seed(path: &Path) -> Result<Vec<Diet>, CatalogError> {
    let source = std::fs::read_to_string(path).map_err(|source| CatalogError::SeedRead {
        path: path.to_path_buf(),
        source,
    })?;
    parse_seed(&source)
}

/// Builds an in-memory catalog holding exactly the diets of a seed file.
pub fn load_seed(path: &Path) -> Result<Catalog, CatalogError> {
    Catalog::from_diets(read_seed(path)?)
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct CatalogMeta {
    version: u64,
}

/// All diets keyed by name, plus a revision counter bumped on every mutation.
///
/// With a backing [`DocumentStore`], each diet is written through as its own
/// document. Callers share a catalog behind a `RwLock`; the catalog itself
/// does no locking.
#[derive(Clone, Default)]
pub struct Catalog {
    diets: BTreeMap<String, Diet>,
    version: u64,
    store: Option<Arc<dyn DocumentStore>>,
}

impl fmt::Debug for Catalog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Catalog")
            .field("diets", &self.diets.keys().collect::<Vec<_>>())
            .field("version", &self.version)
            .field("persistent", &self.store.is_some())
            .finish()
    }
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_diets(diets: impl IntoIterator<Item = Diet>) -> Result<Self, CatalogError> {
        let mut catalog = Self::new();
        catalog.apply_seed(diets)?;
        Ok(catalog)
    }

    /// The catalog built from the seed file that ships with the crate.
    pub fn shipped() -> Self {
        Self::from_diets(parse_seed(SHIPPED_SEED).expect("shipped seed is valid"))
            .expect("in-memory catalog cannot fail")
    }

    /// Loads every diet document from `store`; later mutations write through.
    pub fn open(store: Arc<dyn DocumentStore>) -> Result<Self, CatalogError> {
        let mut diets = BTreeMap::new();
        for key in store.keys(DIETS)? {
            if let Some(diet) = store::get_doc::<Diet>(store.as_ref(), DIETS, &key)? {
                diets.insert(diet.name.clone(), diet);
            }
        }
        let meta: CatalogMeta = store::get_doc(store.as_ref(), META, CATALOG_META_KEY)?.unwrap_or_default();
        Ok(Self {
            diets,
            version: meta.version,
            store: Some(store),
        })
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.diets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diets.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.diets.contains_key(name)
    }

    pub fn get_diet(&self, name: &str) -> Result<&Diet, CatalogError> {
        self.diets
            .get(name)
            .ok_or_else(|| CatalogError::DietNotFound(name.to_string()))
    }

    pub fn find(&self, name: &str) -> Option<&Diet> {
        self.diets.get(name)
    }

    pub fn diets(&self) -> impl Iterator<Item = &Diet> {
        self.diets.values()
    }

    /// Sorted by name.
    pub fn list_diets(&self) -> Vec<DietSummary> {
        self.diets
            .values()
            .map(|d| DietSummary {
                name: d.name.clone(),
                description: d.description.clone(),
                ingredient_count: d.forbidden_ingredients.len(),
            })
            .collect()
    }

    /// Inserts or replaces every given diet. Diets not named in the seed are
    /// left alone, so re-seeding restores deleted seed diets.
    pub fn apply_seed(&mut self, diets: impl IntoIterator<Item = Diet>) -> Result<u64, CatalogError> {
        for diet in diets {
            self.write_diet(&diet)?;
            self.diets.insert(diet.name.clone(), diet);
        }
        self.bump()
    }

    pub fn upsert_diet(&mut self, role: Role, diet: Diet) -> Result<u64, CatalogError> {
        if role != Role::Admin {
            return Err(CatalogError::Unauthorized);
        }
        self.write_diet(&diet)?;
        self.diets.insert(diet.name.clone(), diet);
        self.bump()
    }

    pub fn delete_diet(&mut self, role: Role, name: &str) -> Result<u64, CatalogError> {
        if role != Role::Admin {
            return Err(CatalogError::Unauthorized);
        }
        if !self.diets.contains_key(name) {
            return Err(CatalogError::DietNotFound(name.to_string()));
        }
        if let Some(store) = &self.store {
            store.delete(DIETS, name)?;
        }
        self.diets.remove(name);
        self.bump()
    }

    fn write_diet(&self, diet: &Diet) -> Result<(), CatalogError> {
        if let Some(store) = &self.store {
            store::put_doc(store.as_ref(), DIETS, &diet.name, diet)?;
        }
        Ok(())
    }

    fn bump(&mut self) -> Result<u64, CatalogError> {
        self.version += 1;
        if let Some(store) = &self.store {
            store::put_doc(
                store.as_ref(),
                META,
                CATALOG_META_KEY,
                &CatalogMeta { version: self.version },
            )?;
        }
        Ok(self.version)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::MemoryStore;

    const SEVEN: [&str; 7] = [
        "vegan",
        "vegetarian",
        "pesco-vegetarian",
        "gluten-free",
        "sugar-free",
        "milk-free",
        "nut-free",
    ];

    #[test]
    fn shipped_seed_has_the_seven_diets() {
        let catalog = Catalog::shipped();
        assert_eq!(catalog.len(), 7);
        for name in SEVEN {
            let diet = catalog.get_diet(name).unwrap();
            assert!(!diet.forbidden_ingredients().is_empty(), "{name}");
        }
    }

    #[test]
    fn seed_normalizes_on_load() {
        let diets = parse_seed(
            r#"
            [[diets]]
            name = "Gluten-Free"
            description = "no gluten"
            forbidden_ingredients = [" Wheat ", "BARLEY"]
            "#,
        )
        .unwrap();
        assert_eq!(diets[0].name(), "Gluten-Free");
        assert_eq!(diets[0].forbidden_ingredients(), ["wheat", "barley"]);
    }

    #[test]
    fn seed_rejects_reserved_name() {
        let err = parse_seed("[[diets]]\nname = \"Custom\"\nforbidden_ingredients = [\"x\"]\n").unwrap_err();
        assert!(
            matches!(err, CatalogError::SeedValidation(ref m) if m.contains("reserved")),
            "{err}"
        );
    }

    #[test]
    fn seed_rejects_duplicate_names_and_empty_ingredients() {
        let dup = "[[diets]]\nname = \"a\"\n[[diets]]\nname = \"a\"\n";
        let err = parse_seed(dup).unwrap_err();
        assert!(err.to_string().contains("duplicate diet name \"a\""), "{err}");

        let empty = "[[diets]]\nname = \"a\"\nforbidden_ingredients = [\"  \"]\n";
        assert!(matches!(parse_seed(empty), Err(CatalogError::SeedValidation(_))));
    }

    #[test]
    fn seed_rejects_malformed_toml() {
        assert!(matches!(parse_seed("[[diets]\nname="), Err(CatalogError::SeedParse(_))));
        assert!(matches!(
            parse_seed("[[diets]]\ndescription = \"no name\"\n"),
            Err(CatalogError::SeedParse(_))
        ));
    }

    #[test]
    fn seed_is_idempotent() {
        let a = Catalog::from_diets(parse_seed(SHIPPED_SEED).unwrap()).unwrap();
        let mut b = a.clone();
        b.apply_seed(parse_seed(SHIPPED_SEED).unwrap()).unwrap();
        let diets_a: Vec<_> = a.diets().cloned().collect();
        let diets_b: Vec<_> = b.diets().cloned().collect();
        assert_eq!(diets_a, diets_b);
    }

    #[test]
    fn get_unknown_diet() {
        let catalog = Catalog::shipped();
        assert!(matches!(catalog.get_diet("keto"), Err(CatalogError::DietNotFound(n)) if n == "keto"));
    }

    #[test]
    fn upsert_requires_admin_and_bumps_version() {
        let mut catalog = Catalog::shipped();
        let egg = Diet::new("egg-free", "no eggs", ["egg", "albumin"]).unwrap();
        assert!(matches!(
            catalog.upsert_diet(Role::Member, egg.clone()),
            Err(CatalogError::Unauthorized)
        ));
        let before = catalog.version();
        let after = catalog.upsert_diet(Role::Admin, egg).unwrap();
        assert!(after > before);
        assert_eq!(catalog.list_diets().len(), 8);
        assert_eq!(
            catalog.get_diet("egg-free").unwrap().forbidden_ingredients(),
            ["egg", "albumin"]
        );
    }

    #[test]
    fn delete_twice_and_reseed() {
        let mut catalog = Catalog::shipped();
        catalog.delete_diet(Role::Admin, "sugar-free").unwrap();
        assert!(matches!(
            catalog.delete_diet(Role::Admin, "sugar-free"),
            Err(CatalogError::DietNotFound(_))
        ));
        assert!(matches!(
            catalog.delete_diet(Role::Member, "vegan"),
            Err(CatalogError::Unauthorized)
        ));
        catalog.apply_seed(parse_seed(SHIPPED_SEED).unwrap()).unwrap();
        assert!(catalog.contains("sugar-free"));
    }

    #[test]
    fn list_is_sorted_and_empty_catalog_lists_nothing() {
        assert!(Catalog::new().list_diets().is_empty());
        let names: Vec<_> = Catalog::shipped().list_diets().into_iter().map(|s| s.name).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }

    #[test]
    fn version_strictly_increases() {
        let mut catalog = Catalog::new();
        let mut last = catalog.version();
        for i in 0..5 {
            let diet = Diet::new(format!("d{i}"), "", ["x"]).unwrap();
            let v = catalog.upsert_diet(Role::Admin, diet).unwrap();
            assert!(v > last);
            last = v;
        }
        let v = catalog.delete_diet(Role::Admin, "d0").unwrap();
        assert!(v > last);
    }

    #[test]
    fn persistent_catalog_round_trips() {
        let store: Arc<dyn DocumentStore> = Arc::new(MemoryStore::new());
        let mut catalog = Catalog::open(store.clone()).unwrap();
        catalog.apply_seed(parse_seed(SHIPPED_SEED).unwrap()).unwrap();
        catalog.delete_diet(Role::Admin, "nut-free").unwrap();
        let reopened = Catalog::open(store).unwrap();
        assert_eq!(reopened.len(), 6);
        assert_eq!(reopened.version(), catalog.version());
        assert_eq!(reopened.get_diet("vegan").unwrap(), catalog.get_diet("vegan").unwrap());
    }

    #[test]
    fn diet_validation() {
        assert_eq!(
            Diet::new("  ", "", Vec::<String>::new()),
            Err(DietValidationError::EmptyName)
        );
        assert!(matches!(
            Diet::new("custom", "", ["x"]),
            Err(DietValidationError::ReservedName(_))
        ));
        assert!(matches!(
            Diet::new("a", "", ["Milk", "milk "]),
            Err(DietValidationError::DuplicateIngredient { .. })
        ));
        assert!(matches!(
            Diet::new("a", "", ["milk, cream"]),
            Err(DietValidationError::IngredientContainsComma { .. })
        ));
    }

    #[test]
    fn diet_deserialization_validates() {
        let ok: Diet =
            serde_json::from_str(r#"{"name":"x","description":"d","forbidden_ingredients":[" A "]}"#).unwrap();
        assert_eq!(ok.forbidden_ingredients(), ["a"]);
        assert!(serde_json::from_str::<Diet>(r#"{"name":"Custom"}"#).is_err());
    }
}
