//! Reference backend: the plain token × rule × needle loop.
//!
//! Used by the benchmark as the baseline the automaton is compared against.
//! Quadratic in practice; fine for a label, slow for large rule sets.

use super::{DietRule, FilterResult, NeedleMatch, Violation};
use crate::transcript::IngredientToken;

pub fn filter_tokens_naive(tokens: &[IngredientToken], rules: &[DietRule]) -> FilterResult {
    let mut violations = Vec::new();
    let mut violated_diets: Vec<String> = Vec::new();

    for token in tokens {
        let mut matches: Vec<NeedleMatch> = Vec::new();
        for rule in rules {
            for needle in rule.needles() {
                if !token.text.contains(needle.as_str()) {
                    continue;
                }
                match matches.iter_mut().find(|m| m.needle == *needle) {
                    Some(existing) => {
                        if !existing.diets.iter().any(|d| d == rule.diet()) {
                            existing.diets.push(rule.diet().to_string());
                        }
                    }
                    None => matches.push(NeedleMatch {
                        needle: needle.clone(),
                        diets: vec![rule.diet().to_string()],
                    }),
                }
                if !violated_diets.iter().any(|d| d == rule.diet()) {
                    violated_diets.push(rule.diet().to_string());
                }
            }
        }
        if !matches.is_empty() {
            violations.push(Violation {
                token_index: token.index,
                token_text: token.text.clone(),
                matches,
            });
        }
    }

    FilterResult::new(tokens.to_vec(), violations, violated_diets)
}
