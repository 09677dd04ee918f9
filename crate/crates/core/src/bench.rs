//! Synthetic workload comparing the automaton matcher with the naive loop.

use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog::CUSTOM_DIET;
use crate::filter::{self, naive, DietRule, FilterResult};
use crate::transcript::IngredientToken;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchConfig {
    /// Total needles across all rules.
    pub needles: usize,
    pub tokens: usize,
    /// Named diets; the custom rule comes on top.
    pub diets: usize,
    pub seed: u64,
    pub iterations: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            needles: 10_000,
            tokens: 200,
            diets: 8,
            seed: 0x0d1e7,
            iterations: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub needles: usize,
    pub distinct_needles: usize,
    pub tokens: usize,
    pub rules: usize,
    pub violations: usize,
    /// Building the automaton once.
    pub build_ms: f64,
    /// Median time of one check against a prebuilt automaton.
    pub check_ms: f64,
    /// Slowest of the timed automaton checks.
    pub check_max_ms: f64,
    /// Build plus one check, as for a cold cache.
    pub cold_check_ms: f64,
    /// One run of the naive loop.
    pub naive_ms: f64,
    pub results_equal: bool,
}

const SYLLABLES: &[&str] = &[
    "al", "an", "ar", "ba", "ce", "co", "da", "de", "el", "en", "fa", "go", "in", "ka", "la", "le", "li", "ma", "me",
    "mi", "na", "ne", "no", "ol", "on", "or", "pa", "pe", "ra", "re", "ri", "ro", "sa", "se", "si", "ta", "te", "ti",
    "to", "ur", "va", "ze",
];

fn word(rng: &mut ChaCha8Rng, min_syllables: usize, max_syllables: usize) -> String {
    let n = rng.random_range(min_syllables..=max_syllables);
    (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

/// Deterministic tokens and rules for a given configuration. About one token
/// in five embeds a needle so the workload has real hits.
pub fn generate_corpus(config: &BenchConfig) -> (Vec<IngredientToken>, Vec<DietRule>) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let rule_count = config.diets + 1;
    let mut buckets: Vec<Vec<String>> = vec![Vec::new(); rule_count];
    let mut all = Vec::with_capacity(config.needles);
    for i in 0..config.needles {
        let needle = word(&mut rng, 3, 6);
        buckets[i % rule_count].push(needle.clone());
        all.push(needle);
    }
    let rules = buckets
        .into_iter()
        .enumerate()
        .map(|(i, needles)| {
            let name = if i == config.diets {
                CUSTOM_DIET.to_string()
            } else {
                format!("diet-{i:02}")
            };
            DietRule::new(name, needles)
        })
        .collect();

    let tokens = (0..config.tokens)
        .map(|index| {
            let words = rng.random_range(1..=4);
            let mut text: Vec<String> = (0..words).map(|_| word(&mut rng, 2, 5)).collect();
            if !all.is_empty() && rng.random_bool(0.2) {
                text.push(all.choose(&mut rng).unwrap().clone());
            }
            IngredientToken::new(index, text.join(" "))
        })
        .collect();
    (tokens, rules)
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn run(config: &BenchConfig) -> BenchReport {
    let (tokens, rules) = generate_corpus(config);

    let cold_start = Instant::now();
    let matcher = filter::build_matcher(&rules);
    let build = cold_start.elapsed();
    let first: FilterResult = filter::filter_with(&tokens, &matcher);
    let cold = cold_start.elapsed();

    let mut samples = Vec::with_capacity(config.iterations.max(1));
    for _ in 0..config.iterations.max(1) {
        let start = Instant::now();
        let result = filter::filter_with(&tokens, &matcher);
        samples.push(start.elapsed());
        debug_assert_eq!(result, first);
    }
    samples.sort_unstable();

    let naive_start = Instant::now();
    let reference = naive::filter_tokens_naive(&tokens, &rules);
    let naive_time = naive_start.elapsed();

    BenchReport {
        needles: config.needles,
        distinct_needles: matcher.needle_count(),
        tokens: tokens.len(),
        rules: rules.len(),
        violations: first.violations.len(),
        build_ms: ms(build),
        check_ms: ms(samples[samples.len() / 2]),
        check_max_ms: ms(*samples.last().unwrap()),
        cold_check_ms: ms(cold),
        naive_ms: ms(naive_time),
        results_equal: reference == first,
    }
}
