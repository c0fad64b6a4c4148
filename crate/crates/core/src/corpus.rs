//! Corpus ingestion, tokenization, vocabulary and TF-IDF features.
//!
//! A [`Corpus`] is built once from [`Record`]s and is immutable afterwards.
//! Every document's TF-IDF vector is computed at construction time because
//! the classifier, the attribution step and the corpus background mean all
//! consume it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::{DocIdx, Error, Result};

/// Small English stopword list, only used when stopword removal is enabled.
pub const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "from", "had", "has", "have",
    "he", "her", "his", "in", "into", "is", "it", "its", "of", "on", "or", "our", "she", "so",
    "that", "the", "their", "them", "then", "there", "these", "they", "this", "to", "was", "we",
    "were", "will", "with",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stemmer {
    #[default]
    None,
    /// Harman's "S" stemmer: strips plural endings only.
    Plural,
}

impl Stemmer {
    pub fn apply(self, term: String) -> String {
        match self {
            Stemmer::None => term,
            Stemmer::Plural => plural_stem(term),
        }
    }
}

/// "-ies" becomes "-y"; otherwise a final "s" is dropped unless the word ends
/// in "us" or "ss". Harman's separate "-es" rule is subsumed by the last case.
fn plural_stem(mut t: String) -> String {
    if t.chars().count() <= 3 {
        return t;
    }
    if t.ends_with("ies") && !t.ends_with("eies") && !t.ends_with("aies") {
        t.truncate(t.len() - 3);
        t.push('y');
    } else if t.ends_with('s') && !t.ends_with("us") && !t.ends_with("ss") {
        t.truncate(t.len() - 1);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TokenizerConfig {
    pub remove_stopwords: bool,
    pub stemmer: Stemmer,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Tokenizer {
    pub config: TokenizerConfig,
}

impl Tokenizer {
    pub fn new(config: TokenizerConfig) -> Self {
        Tokenizer { config }
    }

    /// Lowercased maximal runs of alphanumeric characters, in source order.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur = String::new();
        for c in text.chars() {
            if c.is_alphanumeric() {
                // Lowercasing can emit combining marks; keep the alphanumeric part
                // so that re-tokenizing the output is the identity.
                cur.extend(c.to_lowercase().filter(|l| l.is_alphanumeric()));
            } else if !cur.is_empty() {
                self.push_term(&mut out, core::mem::take(&mut cur));
            }
        }
        if !cur.is_empty() {
            self.push_term(&mut out, cur);
        }
        out
    }

    fn push_term(&self, out: &mut Vec<String>, term: String) {
        if self.config.remove_stopwords && STOPWORDS.contains(&term.as_str()) {
            return;
        }
        let term = self.config.stemmer.apply(term);
        if !term.is_empty() {
            out.push(term);
        }
    }
}

/// Tokenizes with the default configuration (no stopwords, no stemming).
pub fn tokenize(text: &str) -> Vec<String> {
    Tokenizer::default().tokenize(text)
}

/// A raw corpus record, before tokenization and validation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Record {
    pub id: String,
    pub text: String,
    pub labels: BTreeMap<String, i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub tokens: Vec<String>,
    pub labels: BTreeMap<String, u8>,
}

impl Document {
    pub fn label(&self, category: &str) -> Option<u8> {
        self.labels.get(category).copied()
    }
}

/// Term dictionary with dense ids assigned in lexicographic term order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vocabulary {
    terms: Vec<String>,
    ids: BTreeMap<String, u32>,
    df: Vec<u32>,
}

impl Vocabulary {
    fn build<'a>(docs: impl Iterator<Item = &'a [String]>, min_df: u32) -> Self {
        let mut counts: BTreeMap<&'a str, u32> = BTreeMap::new();
        for tokens in docs {
            let uniq: BTreeSet<&'a str> = tokens.iter().map(String::as_str).collect();
            for t in uniq {
                *counts.entry(t).or_insert(0) += 1;
            }
        }
        let mut vocab = Vocabulary::default();
        for (term, df) in counts {
            if df >= min_df.max(1) {
                let id = vocab.terms.len() as u32;
                vocab.terms.push(term.into());
                vocab.ids.insert(term.into(), id);
                vocab.df.push(df);
            }
        }
        vocab
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    pub fn document_frequency(&self, term: &str) -> Option<u32> {
        self.id(term).map(|i| self.df[i as usize])
    }

    pub fn df_by_id(&self, id: u32) -> u32 {
        self.df[id as usize]
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &str)> {
        self.terms.iter().enumerate().map(|(i, t)| (i as u32, t.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusStats {
    pub n_docs: usize,
    pub avgdl: f64,
    /// Per-term mean of the TF-IDF feature over the corpus.
    pub mean_feature: Vec<f64>,
}

/// Sparse vector with entries sorted by strictly increasing index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec {
    entries: Vec<(u32, f64)>,
}

impl SparseVec {
    /// Builds from unsorted entries; duplicate indices are summed and zeros dropped.
    pub fn from_entries(mut entries: Vec<(u32, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut out: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => out.push((i, v)),
            }
        }
        out.retain(|e| e.1 != 0.0);
        SparseVec { entries: out }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: u32) -> f64 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map(|p| self.entries[p].1)
            .unwrap_or(0.0)
    }

    pub fn max_index(&self) -> Option<u32> {
        self.entries.last().map(|e| e.0)
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i as usize]).sum()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.entries.iter().map(|e| e.1 * e.1).sum())
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut d = alloc::vec![0.0; dim];
        for &(i, v) in &self.entries {
            d[i as usize] = v;
        }
        d
    }
}

/// Smoothed inverse document frequency with a +1 floor.
pub fn smoothed_idf(n_docs: usize, df: u32) -> f64 {
    libm::log((n_docs as f64 + 1.0) / (f64::from(df) + 1.0)) + 1.0
}

/// L2-normalized raw-tf × smoothed-idf vector; out-of-vocabulary terms are dropped.
pub fn tfidf_vector(tokens: &[String], vocab: &Vocabulary, stats: &CorpusStats) -> SparseVec {
    let mut tf: BTreeMap<u32, u32> = BTreeMap::new();
    for t in tokens {
        if let Some(id) = vocab.id(t) {
            *tf.entry(id).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(u32, f64)> = tf
        .into_iter()
        .map(|(id, c)| (id, f64::from(c) * smoothed_idf(stats.n_docs, vocab.df_by_id(id))))
        .collect();
    let norm = libm::sqrt(entries.iter().map(|e| e.1 * e.1).sum::<f64>());
    if norm > 0.0 {
        for e in &mut entries {
            e.1 /= norm;
        }
    }
    SparseVec { entries }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusConfig {
    pub tokenizer: TokenizerConfig,
    pub min_df: u32,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig { tokenizer: TokenizerConfig::default(), min_df: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    docs: Vec<Document>,
    by_id: BTreeMap<String, DocIdx>,
    vocab: Vocabulary,
    stats: CorpusStats,
    features: Vec<SparseVec>,
    config: CorpusConfig,
}

impl Corpus {
    /// Validates and tokenizes `records` in order.
    ///
    /// Labels for categories outside `categories` are dropped; an empty
    /// `categories` slice keeps every label.
    pub fn from_records(
        records: Vec<Record>,
        categories: &[String],
        config: CorpusConfig,
    ) -> Result<Self> {
        let tokenizer = Tokenizer::new(config.tokenizer);
        let mut docs = Vec::with_capacity(records.len());
        let mut by_id = BTreeMap::new();
        for (n, rec) in records.into_iter().enumerate() {
            if rec.id.is_empty() {
                return Err(Error::EmptyId { record: n });
            }
            if by_id.insert(rec.id.clone(), n).is_some() {
                return Err(Error::DuplicateId { id: rec.id, record: n });
            }
            let mut labels = BTreeMap::new();
            for (cat, value) in rec.labels {
                if !categories.is_empty() && !categories.contains(&cat) {
                    continue;
                }
                let v = match value {
                    0 => 0u8,
                    1 => 1u8,
                    _ => return Err(Error::InvalidLabel { id: rec.id, category: cat, value }),
                };
                labels.insert(cat, v);
            }
            let tokens = tokenizer.tokenize(&rec.text);
            docs.push(Document { id: rec.id, text: rec.text, tokens, labels });
        }
        Ok(Self::assemble(docs, by_id, config))
    }

    fn assemble(docs: Vec<Document>, by_id: BTreeMap<String, DocIdx>, config: CorpusConfig) -> Self {
        let vocab = Vocabulary::build(docs.iter().map(|d| d.tokens.as_slice()), config.min_df);
        let n_docs = docs.len();
        let total_len: usize = docs.iter().map(|d| d.tokens.len()).sum();
        let avgdl = if n_docs > 0 { total_len as f64 / n_docs as f64 } else { 0.0 };
        let mut stats = CorpusStats { n_docs, avgdl, mean_feature: Vec::new() };
        let features: Vec<SparseVec> =
            docs.iter().map(|d| tfidf_vector(&d.tokens, &vocab, &stats)).collect();
        let mut mean = alloc::vec![0.0; vocab.len()];
        for f in &features {
            for &(i, v) in f.entries() {
                mean[i as usize] += v;
            }
        }
        if n_docs > 0 {
            for m in &mut mean {
                *m /= n_docs as f64;
            }
        }
        stats.mean_feature = mean;
        Corpus { docs, by_id, vocab, stats, features, config }
    }

    /// Copy of this corpus with labels rewritten by `f`; text, vocabulary and
    /// statistics are unchanged.
    pub fn relabel(
        &self,
        mut f: impl FnMut(DocIdx, &Document) -> BTreeMap<String, u8>,
    ) -> Corpus {
        let mut out = self.clone();
        for (i, d) in out.docs.iter_mut().enumerate() {
            d.labels = f(i, &self.docs[i]);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn doc(&self, idx: DocIdx) -> &Document {
        &self.docs[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<DocIdx> {
        self.by_id.get(id).copied()
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    pub fn config(&self) -> CorpusConfig {
        self.config
    }

    pub fn features(&self, idx: DocIdx) -> &SparseVec {
        &self.features[idx]
    }

    /// Features for arbitrary text under this corpus's tokenizer and vocabulary.
    pub fn featurize(&self, text: &str) -> SparseVec {
        let tokens = Tokenizer::new(self.config.tokenizer).tokenize(text);
        tfidf_vector(&tokens, &self.vocab, &self.stats)
    }

    /// Categories that appear in any document's labels, sorted.
    pub fn categories(&self) -> Vec<String> {
        let mut cats: Vec<String> =
            self.docs.iter().flat_map(|d| d.labels.keys().cloned()).collect();
        cats.sort();
        cats.dedup();
        cats
    }

    pub fn to_records(&self) -> Vec<Record> {
        self.docs
            .iter()
            .map(|d| Record {
                id: d.id.clone(),
                text: d.text.clone(),
                labels: d.labels.iter().map(|(k, &v)| (k.clone(), i64::from(v))).collect(),
            })
            .collect()
    }
}
