//! Multi-pattern substring matcher over the union of all rule needles.

use std::collections::HashMap;

use aho_corasick::{AhoCorasick, AhoCorasickBuilder, MatchKind};

use super::DietRule;

/// One distinct needle and every rule it appears in.
#[derive(Debug, Clone)]
struct NeedleEntry {
    needle: String,
    /// Indices into the rule list, ascending.
    rules: Vec<usize>,
    /// Diet names of `rules`, deduplicated in rule order.
    diets: Vec<String>,
}

/// Immutable automaton built from a rule set; cheap to share across threads.
///
/// Pattern ids follow the first `(rule, needle)` position at which each
/// distinct needle occurs, so sorting hits by id gives rule order then
/// needle order.
#[derive(Debug, Clone)]
pub struct Matcher {
    automaton: Option<AhoCorasick>,
    entries: Vec<NeedleEntry>,
    rule_diets: Vec<String>,
}

/// Needles found in one token.
#[derive(Debug, Clone)]
pub struct TokenHits<'m> {
    matcher: &'m Matcher,
    ids: Vec<usize>,
}

impl<'m> TokenHits<'m> {
    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    /// `(needle, diets containing it)` in rule order then needle order.
    pub fn matches(&self) -> impl Iterator<Item = (&'m str, &'m [String])> + '_ {
        self.ids.iter().map(|&id| {
            let entry = &self.matcher.entries[id];
            (entry.needle.as_str(), entry.diets.as_slice())
        })
    }

    /// Diets violated by this token, in rule order, deduplicated.
    pub fn diets(&self) -> Vec<&'m str> {
        let mut rules: Vec<usize> = self
            .ids
            .iter()
            .flat_map(|&id| self.matcher.entries[id].rules.iter().copied())
            .collect();
        rules.sort_unstable();
        rules.dedup();
        let mut diets: Vec<&str> = Vec::with_capacity(rules.len());
        for rule in rules {
            let diet = self.matcher.rule_diets[rule].as_str();
            if !diets.contains(&diet) {
                diets.push(diet);
            }
        }
        diets
    }
}

impl Matcher {
    pub fn new(rules: &[DietRule]) -> Self {
        let mut entries: Vec<NeedleEntry> = Vec::new();
        let mut by_needle: HashMap<&str, usize> = HashMap::new();
        for (rule_index, rule) in rules.iter().enumerate() {
            for needle in rule.needles() {
                let id = *by_needle.entry(needle.as_str()).or_insert_with(|| {
                    entries.push(NeedleEntry {
                        needle: needle.clone(),
                        rules: Vec::new(),
                        diets: Vec::new(),
                    });
                    entries.len() - 1
                });
                let entry = &mut entries[id];
                if entry.rules.last() != Some(&rule_index) {
                    entry.rules.push(rule_index);
                }
                if !entry.diets.iter().any(|d| d == rule.diet()) {
                    entry.diets.push(rule.diet().to_string());
                }
            }
        }

        let automaton = if entries.is_empty() {
            None
        } else {
            Some(
                AhoCorasickBuilder::new()
                    .match_kind(MatchKind::Standard)
                    .build(entries.iter().map(|e| e.needle.as_str()))
                    .expect("needle set within automaton limits"),
            )
        };

        Self {
            automaton,
            entries,
            rule_diets: rules.iter().map(|r| r.diet().to_string()).collect(),
        }
    }

    /// Number of distinct needles.
    pub fn needle_count(&self) -> usize {
        self.entries.len()
    }

    pub fn rule_count(&self) -> usize {
        self.rule_diets.len()
    }

    /// Every distinct needle that occurs as a substring of `token`.
    pub fn hits(&self, token: &str) -> TokenHits<'_> {
        let mut ids = Vec::new();
        if let Some(ac) = &self.automaton {
            ids.extend(ac.find_overlapping_iter(token).map(|m| m.pattern().as_usize()));
            ids.sort_unstable();
            ids.dedup();
        }
        TokenHits { matcher: self, ids }
    }

    /// Convenience: the matching needles only.
    pub fn matching_needles(&self, token: &str) -> Vec<&str> {
        self.hits(token).matches().map(|(needle, _)| needle).collect()
    }
}
