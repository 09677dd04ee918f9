//! Independent reference for the ingredient filter: a literal token × rule ×
//! needle loop over plain strings, extended to report every matching needle.
//! Shared by the property tests and the acceptance suite.

#![allow(dead_code)]

use diethelper_core::{FilterResult, Verdict};

/// `(token_index, token_text, [(needle, [diet])])`
pub type OracleViolation = (usize, String, Vec<(String, Vec<String>)>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub compliant: bool,
    pub violations: Vec<OracleViolation>,
    pub violated_diets: Vec<String>,
}

pub fn oracle_filter(tokens: &[(usize, String)], rules: &[(String, Vec<String>)]) -> OracleResult {
    let mut found_diets: Vec<String> = Vec::new();
    let mut violations = Vec::new();
    for (index, ingredient) in tokens {
        let mut forbidden: Vec<(String, Vec<String>)> = Vec::new();
        for (diet, forbidden_ingredients) in rules {
            for forbidden_ingredient in forbidden_ingredients {
                if ingredient.contains(forbidden_ingredient.as_str()) {
                    match forbidden.iter().position(|(n, _)| n == forbidden_ingredient) {
                        Some(i) => {
                            if !forbidden[i].1.contains(diet) {
                                forbidden[i].1.push(diet.clone());
                            }
                        }
                        None => forbidden.push((forbidden_ingredient.clone(), vec![diet.clone()])),
                    }
                    if !found_diets.contains(diet) {
                        found_diets.push(diet.clone());
                    }
                }
            }
        }
        if !forbidden.is_empty() {
            violations.push((*index, ingredient.clone(), forbidden));
        }
    }
    OracleResult {
        compliant: violations.is_empty(),
        violations,
        violated_diets: found_diets,
    }
}

/// Projects an engine result onto the oracle's shape.
pub fn project(result: &FilterResult) -> OracleResult {
    OracleResult {
        compliant: result.verdict == Verdict::Compliant,
        violations: result
            .violations
            .iter()
            .map(|v| {
                (
                    v.token_index,
                    v.token_text.clone(),
                    v.matches.iter().map(|m| (m.needle.clone(), m.diets.clone())).collect(),
                )
            })
            .collect(),
        violated_diets: result.violated_diets.clone(),
    }
}

/// Character-level transliteration of the fragment join: every fragment
/// followed by a comma, then lowercased.
pub fn oracle_join(fragments: &[String]) -> (String, String) {
    let mut raw = String::new();
    for fragment in fragments {
        for ch in fragment.chars() {
            raw.push(ch);
        }
        raw.push(',');
    }
    // String-level lowercasing, as JavaScript's toLowerCase (final sigma aware).
    let lower = raw.to_lowercase();
    (raw, lower)
}

/// Split on commas, trim, drop empties.
pub fn oracle_tokenize(normalized: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    for segment in normalized.split(',') {
        let t = segment.trim();
        if !t.is_empty() {
            out.push((out.len(), t.to_string()));
        }
    }
    out
}
