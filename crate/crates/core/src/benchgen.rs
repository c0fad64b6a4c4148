//! Deterministic synthetic corpora with planted class-indicative terms.
//!
//! Each document is a bag of uniformly drawn background words. For every
//! category the document is positive with the category's prevalence; a
//! positive document receives each planted term with probability `p_plant`,
//! a negative one with probability `leak`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::{Corpus, CorpusConfig, Record};
use crate::seed::rng;
use crate::selection::TruthTable;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CategorySpec {
    pub name: String,
    pub prevalence: f64,
    pub planted: Vec<String>,
    pub p_plant: f64,
}

impl CategorySpec {
    pub fn new(name: &str, prevalence: f64, planted: &[&str]) -> Self {
        CategorySpec {
            name: name.into(),
            prevalence,
            planted: planted.iter().map(|&t| t.into()).collect(),
            p_plant: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_docs: usize,
    pub categories: Vec<CategorySpec>,
    /// Per-term inclusion probability in documents negative for the category.
    pub leak: f64,
    pub background_vocab: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_docs: 5000,
            categories: default_categories(),
            leak: 0.02,
            background_vocab: 2000,
            min_len: 15,
            max_len: 60,
            seed: 42,
        }
    }
}

/// The three default categories with their prevalences and planted
/// keyword terms.
pub fn default_categories() -> Vec<CategorySpec> {
    alloc::vec![
        CategorySpec::new("alone", 0.18, &["alone", "myself"]),
        CategorySpec::new("friends", 0.375, &["friend"]),
        CategorySpec::new("health", 0.275, &["health", "weight", "gym", "exercise"]),
    ]
}

impl GeneratorConfig {
    pub fn category_names(&self) -> Vec<String> {
        self.categories.iter().map(|c| c.name.clone()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        for c in &self.categories {
            if c.name.is_empty() {
                return bad("category name is empty".into());
            }
            if !(c.prevalence > 0.0 && c.prevalence < 1.0) {
                return bad(format!("prevalence of {} must be in (0,1), got {}", c.name, c.prevalence));
            }
            if !(c.p_plant > 0.0 && c.p_plant <= 1.0) {
                return bad(format!("p_plant of {} must be in (0,1], got {}", c.name, c.p_plant));
            }
            if c.planted.is_empty() {
                return bad(format!("category {} has no planted terms", c.name));
            }
        }
        let mut names = self.category_names();
        names.sort();
        names.dedup();
        if names.len() != self.categories.len() {
            return bad("duplicate category names".into());
        }
        if !(0.0..1.0).contains(&self.leak) {
            return bad(format!("leak must be in [0,1), got {}", self.leak));
        }
        if self.min_len > self.max_len {
            return bad(format!("min_len {} exceeds max_len {}", self.min_len, self.max_len));
        }
        if self.background_vocab == 0 && self.max_len > 0 {
            return bad("background vocabulary is empty".into());
        }
        Ok(())
    }
}

const CONSONANTS: &[u8] = b"bcdfghjklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Pronounceable consonant-vowel word for `index`: the first base² indices
/// map to two-syllable words, the next base³ to three syllables, and so on.
fn syllable_word(mut index: usize) -> String {
    let base = CONSONANTS.len() * VOWELS.len();
    let mut syllables = 2;
    let mut count = base * base;
    while index >= count {
        index -= count;
        syllables += 1;
        count *= base;
    }
    let mut w = String::with_capacity(2 * syllables);
    for _ in 0..syllables {
        let s = index % base;
        w.push(CONSONANTS[s / VOWELS.len()] as char);
        w.push(VOWELS[s % VOWELS.len()] as char);
        index /= base;
    }
    w
}

/// Background words, skipping any that collide with a planted term.
pub fn background_words(n: usize, planted: &[&str]) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while out.len() < n {
        let w = syllable_word(i);
        i += 1;
        if !planted.contains(&w.as_str()) {
            out.push(w);
        }
    }
    out
}

pub fn generate_records(config: &GeneratorConfig) -> Result<Vec<Record>> {
    config.validate()?;
    let planted: Vec<&str> =
        config.categories.iter().flat_map(|c| c.planted.iter().map(String::as_str)).collect();
    let words = background_words(config.background_vocab, &planted);
    let width = format!("{}", config.n_docs.max(1) - 1).len().max(5);
    let mut rng = rng(config.seed);
    let mut records = Vec::with_capacity(config.n_docs);
    for n in 0..config.n_docs {
        let len = rng.gen_range(config.min_len..=config.max_len);
        let mut tokens: Vec<&str> = (0..len).map(|_| words[rng.gen_range(0..words.len())].as_str()).collect();
        let mut labels = BTreeMap::new();
        for cat in &config.categories {
            let positive = rng.gen_bool(cat.prevalence);
            let p = if positive { cat.p_plant } else { config.leak };
            for term in &cat.planted {
                if p > 0.0 && rng.gen_bool(p) {
                    tokens.push(term);
                }
            }
            labels.insert(cat.name.clone(), i64::from(positive));
        }
        tokens.shuffle(&mut rng);
        let mut text = tokens.join(" ");
        if let Some(first) = text.get(..1) {
            let upper = first.to_ascii_uppercase();
            text.replace_range(..1, &upper);
            text.push('.');
        }
        records.push(Record { id: format!("cue{n:0width$}"), text, labels });
    }
    Ok(records)
}

/// Generates a fully labeled corpus under the default tokenizer.
pub fn generate(config: &GeneratorConfig) -> Result<Corpus> {
    Corpus::from_records(generate_records(config)?, &config.category_names(), CorpusConfig::default())
}

/// Keeps labels on a seeded sample of `round(visible_fraction · N)` documents
/// and moves every other label into the returned oracle.
pub fn hold_out_truth(corpus: &Corpus, visible_fraction: f64, seed: u64) -> Result<(Corpus, TruthTable)> {
    if !(0.0..=1.0).contains(&visible_fraction) {
        return Err(Error::InvalidArgument(format!(
            "visible fraction {visible_fraction} outside [0, 1]"
        )));
    }
    let n = corpus.len();
    let n_visible = libm::round(visible_fraction * n as f64) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng(seed));
    let mut visible = alloc::vec![false; n];
    for &i in &order[..n_visible.min(n)] {
        visible[i] = true;
    }
    let mut oracle = TruthTable::default();
    let out = corpus.relabel(|i, d| {
        if visible[i] {
            d.labels.clone()
        } else {
            for (cat, &l) in &d.labels {
                oracle.insert(&d.id, cat, l);
            }
            BTreeMap::new()
        }
    });
    Ok((out, oracle))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syllable_words_are_unique() {
        let words = background_words(8000, &[]);
        let mut sorted = words.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), words.len());
        assert!(words.iter().all(|w| w.len() >= 4));
    }

    #[test]
    fn zero_docs() {
        let c = generate(&GeneratorConfig { n_docs: 0, ..GeneratorConfig::default() }).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn deterministic() {
        let cfg = GeneratorConfig { n_docs: 50, ..GeneratorConfig::default() };
        assert_eq!(generate_records(&cfg).unwrap(), generate_records(&cfg).unwrap());
        let other = GeneratorConfig { seed: 43, ..cfg.clone() };
        assert_ne!(generate_records(&cfg).unwrap(), generate_records(&other).unwrap());
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = GeneratorConfig::default();
        cfg.categories[0].prevalence = 1.0;
        assert!(cfg.validate().is_err());
        let cfg = GeneratorConfig { min_len: 9, max_len: 3, ..GeneratorConfig::default() };
        assert!(generate(&cfg).is_err());
        let mut cfg = GeneratorConfig::default();
        cfg.categories[1].p_plant = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hold_out_extremes() {
        let c = generate(&GeneratorConfig { n_docs: 40, ..GeneratorConfig::default() }).unwrap();
        let (all, oracle) = hold_out_truth(&c, 1.0, 1).unwrap();
        assert!(oracle.is_empty());
        assert_eq!(all.docs(), c.docs());
        let (none, oracle) = hold_out_truth(&c, 0.0, 1).unwrap();
        assert!(none.docs().iter().all(|d| d.labels.is_empty()));
        assert_eq!(oracle.len(), 40 * 3);
    }
}
