//! Turning OCR text fragments into a normalized transcript and a list of
//! ingredient tokens.
//!
//! The pipeline is deliberately small: fragments are joined with a trailing
//! comma after each one, the whole string is lowercased, and the result is
//! split on commas. Segments are trimmed and empty segments are dropped, so
//! token indices stay dense for display.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One snippet of text as returned by an OCR detector. Carried verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TextFragment {
    pub text: String,
}

impl TextFragment {
    pub fn new(text: impl Into<String>) -> Self {
        Self { text: text.into() }
    }

    pub fn is_blank(&self) -> bool {
        self.text.trim().is_empty()
    }
}

impl From<&str> for TextFragment {
    fn from(text: &str) -> Self {
        Self::new(text)
    }
}

impl From<String> for TextFragment {
    fn from(text: String) -> Self {
        Self { text }
    }
}

/// The comma-joined label text and its lowercased form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    raw: String,
    normalized: String,
}

impl Transcript {
    /// Wraps label text that was extracted elsewhere (no trailing comma is added).
    pub fn from_raw(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let normalized = raw.to_lowercase();
        Self { raw, normalized }
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn normalized(&self) -> &str {
        &self.normalized
    }
}

/// A single comma-delimited ingredient entry of a transcript.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IngredientToken {
    pub index: usize,
    pub text: String,
}

impl IngredientToken {
    pub fn new(index: usize, text: impl Into<String>) -> Self {
        Self {
            index,
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranscriptError {
    /// No ingredient survived splitting; the caller should ask for a new photo.
    #[error("the transcript contains no ingredients")]
    EmptyTranscript,
}

/// Appends a comma after every fragment and lowercases the result.
///
/// An empty slice produces an empty transcript; callers treat that as the
/// no-text case before getting here.
pub fn join_fragments(fragments: &[TextFragment]) -> Transcript {
    let capacity = fragments.iter().map(|f| f.text.len() + 1).sum();
    let raw = fragments
        .iter()
        .fold(String::with_capacity(capacity), |mut acc, fragment| {
            acc.push_str(&fragment.text);
            acc.push(',');
            acc
        });
    Transcript::from_raw(raw)
}

/// Splits the normalized transcript on commas into trimmed, non-empty tokens.
pub fn tokenize(transcript: &Transcript) -> Result<Vec<IngredientToken>, TranscriptError> {
    let tokens: Vec<IngredientToken> = transcript
        .normalized()
        .split(',')
        .map(str::trim)
        .filter(|segment| !segment.is_empty())
        .enumerate()
        .map(|(index, text)| IngredientToken::new(index, text))
        .collect();

    if tokens.is_empty() {
        return Err(TranscriptError::EmptyTranscript);
    }
    Ok(tokens)
}

/// Lowercases and trims a single ingredient string the same way label tokens
/// are normalized. Used for catalog entries and custom ingredients.
pub fn normalize_ingredient(text: &str) -> String {
    text.trim().to_lowercase()
}
