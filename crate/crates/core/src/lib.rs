//! Ingredient-label checking against dietary restrictions.
//!
//! OCR text fragments are joined into a transcript, split into ingredient
//! tokens and matched against the forbidden ingredients of the diets a user
//! follows plus the user's own unwanted ingredients.
//!
//! ```
//! use diethelper_core::{check_label, Catalog, LabelInput, UserProfile};
//!
//! let catalog = Catalog::shipped();
//! let profile = UserProfile::ephemeral(["gluten-free"], ["aspartame"]);
//! let result = check_label(&LabelInput::Raw("Wheat flour, salt".into()), &profile, &catalog).unwrap();
//! assert_eq!(result.violated_diets, ["gluten-free"]);
//! ```

pub mod bench;
pub mod capture;
pub mod catalog;
pub mod filter;
pub mod profile;
pub mod store;
pub mod transcript;

pub use capture::{
    extract_fragments, CaptureError, CaptureOutcome, CaptureRequest, CommandAdapter, FixtureAdapter, OcrAdapter,
};
pub use catalog::{load_seed, Catalog, CatalogError, Diet, DietSummary, CUSTOM_DIET};
pub use filter::{
    build_matcher, check_capture, check_label, check_label_with, collect_rules, filter_tokens, filter_with, CheckError,
    DietRule, FilterResult, LabelInput, Matcher, MatcherCache, NeedleMatch, Verdict, Violation,
};
pub use profile::{DirectoryOptions, PasswordHasher, ProfileError, Role, Session, UserDirectory, UserProfile};
pub use store::{DirStore, DocumentStore, MemoryStore};
pub use transcript::{join_fragments, tokenize, IngredientToken, TextFragment, Transcript, TranscriptError};
