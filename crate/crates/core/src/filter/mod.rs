//! The ingredient filter: builds the active rule set for a profile and finds
//! every forbidden-ingredient occurrence in a label.
//!
//! A token violates a rule when one of the rule's needles is a contiguous
//! substring of the token text. All matching needles are reported, not just
//! the first. Matching is plain substring search, so `nut` also flags
//! `coconut`; the verdict is advice and the user makes the final call.

mod cache;
mod matcher;
pub mod naive;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capture::{self, CaptureError, CaptureRequest, OcrAdapter};
use crate::catalog::{Catalog, CUSTOM_DIET};
use crate::profile::UserProfile;
use crate::transcript::{self, normalize_ingredient, IngredientToken, TextFragment, Transcript, TranscriptError};

pub use cache::{MatcherCache, MatcherKey};
pub use matcher::{Matcher, TokenHits};

/// The forbidden needles contributed by one diet (or by the custom list).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DietRule {
    diet: String,
    needles: Vec<String>,
}

impl DietRule {
    /// Normalizes needles to trimmed lowercase and drops empty and repeated ones.
    pub fn new<I, S>(diet: impl Into<String>, needles: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let needles = needles
            .into_iter()
            .map(|n| normalize_ingredient(n.as_ref()))
            .filter(|n| !n.is_empty() && seen.insert(n.clone()))
            .collect();
        Self {
            diet: diet.into(),
            needles,
        }
    }

    pub fn diet(&self) -> &str {
        &self.diet
    }

    pub fn needles(&self) -> &[String] {
        &self.needles
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Compliant,
    ViolationsFound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeedleMatch {
    pub needle: String,
    pub diets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub token_index: usize,
    pub token_text: String,
    pub matches: Vec<NeedleMatch>,
}

impl Violation {
    /// Byte ranges of `token_text` covered by any matched needle, merged and
    /// sorted.
    pub fn highlight_spans(&self) -> Vec<(usize, usize)> {
        highlight_spans(&self.token_text, self.matches.iter().map(|m| m.needle.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterResult {
    pub verdict: Verdict,
    pub violations: Vec<Violation>,
    pub violated_diets: Vec<String>,
    pub tokens: Vec<IngredientToken>,
}

impl FilterResult {
    pub(crate) fn new(tokens: Vec<IngredientToken>, violations: Vec<Violation>, violated_diets: Vec<String>) -> Self {
        let verdict = if violations.is_empty() {
            Verdict::Compliant
        } else {
            Verdict::ViolationsFound
        };
        Self {
            verdict,
            violations,
            violated_diets,
            tokens,
        }
    }

    pub fn is_compliant(&self) -> bool {
        self.verdict == Verdict::Compliant
    }

    /// `(token_index, needle)` pairs, the unit a UI highlights.
    pub fn flagged_pairs(&self) -> Vec<(usize, &str)> {
        self.violations
            .iter()
            .flat_map(|v| v.matches.iter().map(move |m| (v.token_index, m.needle.as_str())))
            .collect()
    }

    pub fn violation_for(&self, token_index: usize) -> Option<&Violation> {
        self.violations.iter().find(|v| v.token_index == token_index)
    }
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error(transparent)]
    Capture(#[from] CaptureError),
    #[error("no ingredients could be read from the label; retake the photo")]
    EmptyTranscript,
}

impl From<TranscriptError> for CheckError {
    fn from(err: TranscriptError) -> Self {
        match err {
            TranscriptError::EmptyTranscript => CheckError::EmptyTranscript,
        }
    }
}

impl CheckError {
    /// True for the outcomes that should send the user back to the camera.
    pub fn is_retake(&self) -> bool {
        matches!(
            self,
            CheckError::EmptyTranscript | CheckError::Capture(CaptureError::NoTextFound)
        )
    }
}

/// One rule per chosen diet that still exists in the catalog (in the order
/// the user chose them), then the custom rule, which is always present.
pub fn collect_rules(profile: &UserProfile, catalog: &Catalog) -> Vec<DietRule> {
    let mut rules: Vec<DietRule> = profile
        .chosen_diets
        .iter()
        .filter_map(|name| catalog.find(name))
        .map(|diet| DietRule::new(diet.name(), diet.forbidden_ingredients()))
        .collect();
    rules.push(DietRule::new(CUSTOM_DIET, &profile.custom_unwanted_ingredients));
    rules
}

pub fn build_matcher(rules: &[DietRule]) -> Matcher {
    Matcher::new(rules)
}

pub fn filter_tokens(tokens: &[IngredientToken], rules: &[DietRule]) -> FilterResult {
    filter_with(tokens, &build_matcher(rules))
}

/// Runs a prebuilt matcher over the tokens.
pub fn filter_with(tokens: &[IngredientToken], matcher: &Matcher) -> FilterResult {
    let mut violations = Vec::new();
    let mut violated_diets: Vec<String> = Vec::new();
    for token in tokens {
        let hits = matcher.hits(&token.text);
        if hits.is_empty() {
            continue;
        }
        for diet in hits.diets() {
            if !violated_diets.iter().any(|d| d == diet) {
                violated_diets.push(diet.to_string());
            }
        }
        violations.push(Violation {
            token_index: token.index,
            token_text: token.text.clone(),
            matches: hits
                .matches()
                .map(|(needle, diets)| NeedleMatch {
                    needle: needle.to_string(),
                    diets: diets.to_vec(),
                })
                .collect(),
        });
    }
    FilterResult::new(tokens.to_vec(), violations, violated_diets)
}

/// Label text as it reaches the filter, with OCR already done.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelInput {
    Fragments(Vec<TextFragment>),
    Raw(String),
}

impl LabelInput {
    pub fn transcript(&self) -> Transcript {
        match self {
            LabelInput::Fragments(fragments) => transcript::join_fragments(fragments),
            LabelInput::Raw(raw) => Transcript::from_raw(raw.as_str()),
        }
    }

    pub fn tokens(&self) -> Result<Vec<IngredientToken>, CheckError> {
        Ok(transcript::tokenize(&self.transcript())?)
    }
}

/// Tokenize, collect the profile's rules and filter.
pub fn check_label(input: &LabelInput, profile: &UserProfile, catalog: &Catalog) -> Result<FilterResult, CheckError> {
    let tokens = input.tokens()?;
    Ok(filter_tokens(&tokens, &collect_rules(profile, catalog)))
}

/// Like [`check_label`] but reuses a matcher that was built for the same
/// profile and catalog.
pub fn check_label_with(input: &LabelInput, matcher: &Matcher) -> Result<FilterResult, CheckError> {
    let tokens = input.tokens()?;
    Ok(filter_with(&tokens, matcher))
}

/// Full path from a capture request: OCR (if an image was given), then
/// [`check_label`].
pub fn check_capture(
    request: CaptureRequest,
    adapter: Option<&dyn OcrAdapter>,
    profile: &UserProfile,
    catalog: &Catalog,
) -> Result<FilterResult, CheckError> {
    let outcome = capture::extract_fragments(request, adapter)?;
    check_label(&LabelInput::Fragments(outcome.fragments), profile, catalog)
}

/// Byte ranges in `text` covered by any occurrence of any needle, merged.
pub fn highlight_spans<'a>(text: &str, needles: impl IntoIterator<Item = &'a str>) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    for needle in needles {
        if needle.is_empty() {
            continue;
        }
        let mut from = 0;
        while let Some(pos) = text[from..].find(needle) {
            let start = from + pos;
            spans.push((start, start + needle.len()));
            let step = text[start..].chars().next().map_or(1, char::len_utf8);
            from = start + step;
            if from >= text.len() {
                break;
            }
        }
    }
    spans.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(spans.len());
    for (start, end) in spans {
        match merged.last_mut() {
            Some(last) if start <= last.1 => last.1 = last.1.max(end),
            _ => merged.push((start, end)),
        }
    }
    merged
}

/// Wraps each span of `text` in `open` / `close` markers.
pub fn mark_spans(text: &str, spans: &[(usize, usize)], open: &str, close: &str) -> String {
    let mut out = String::with_capacity(text.len() + spans.len() * (open.len() + close.len()));
    let mut cursor = 0;
    for &(start, end) in spans {
        out.push_str(&text[cursor..start]);
        out.push_str(open);
        out.push_str(&text[start..end]);
        out.push_str(close);
        cursor = end;
    }
    out.push_str(&text[cursor..]);
    out
}
