//! Inverted index with BM25 ranking.
//!
//! ```text
//! score(q, d) = Σ_{t ∈ q} IDF(t) · tf(t,d)·(k1 + 1) / (tf(t,d) + k1·(1 − b + b·|d|/avgdl))
//! IDF(t)      = ln(1 + (N − df(t) + 0.5) / (df(t) + 0.5))
//! ```
//!
//! Query terms are OR'd; repeated terms count once. Documents scoring zero
//! never appear in results, and equal scores are ordered by ascending
//! document id.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::corpus::Corpus;
use crate::{DocIdx, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: DocIdx,
    pub tf: u32,
}

/// A ranked search result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub doc: DocIdx,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct InvertedIndex {
    postings: BTreeMap<String, Vec<Posting>>,
    doc_ids: Vec<String>,
    doc_length: Vec<u32>,
    avgdl: f64,
    params: Bm25Params,
}

impl InvertedIndex {
    pub fn build(corpus: &Corpus, params: Bm25Params) -> Self {
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_length = Vec::with_capacity(corpus.len());
        for (idx, doc) in corpus.docs().iter().enumerate() {
            let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
            for t in &doc.tokens {
                *tf.entry(t.as_str()).or_insert(0) += 1;
            }
            for (term, count) in tf {
                postings.entry(term.into()).or_default().push(Posting { doc: idx, tf: count });
            }
            doc_length.push(doc.tokens.len() as u32);
        }
        let total: u64 = doc_length.iter().map(|&l| u64::from(l)).sum();
        let avgdl = if doc_length.is_empty() { 0.0 } else { total as f64 / doc_length.len() as f64 };
        InvertedIndex {
            postings,
            doc_ids: corpus.docs().iter().map(|d| d.id.clone()).collect(),
            doc_length,
            avgdl,
            params,
        }
    }

    pub fn n_docs(&self) -> usize {
        self.doc_length.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn n_terms(&self) -> usize {
        self.postings.len()
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn doc_length(&self, doc: DocIdx) -> u32 {
        self.doc_length[doc]
    }

    pub fn doc_id(&self, doc: DocIdx) -> &str {
        &self.doc_ids[doc]
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.n_docs() as f64;
        let df = self.document_frequency(term) as f64;
        libm::log(1.0 + (n - df + 0.5) / (df + 0.5))
    }

    /// Terms with their document frequency, most frequent first.
    pub fn top_terms(&self, n: usize) -> Vec<(&str, usize)> {
        let mut all: Vec<(&str, usize)> =
            self.postings.iter().map(|(t, p)| (t.as_str(), p.len())).collect();
        all.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        all.truncate(n);
        all
    }

    pub fn search<S: AsRef<str>>(&self, query: &[S], k: usize) -> Result<Vec<Hit>> {
        self.search_filtered(query, k, |_| true)
    }

    /// Like [`search`](Self::search) but only documents accepted by `filter`
    /// are ranked. Collection statistics still cover the whole index.
    pub fn search_filtered<S: AsRef<str>>(
        &self,
        query: &[S],
        k: usize,
        filter: impl Fn(DocIdx) -> bool,
    ) -> Result<Vec<Hit>> {
        if k < 1 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let Bm25Params { k1, b } = self.params;
        let mut terms: Vec<&str> = Vec::with_capacity(query.len());
        for q in query {
            let q = q.as_ref();
            if !terms.contains(&q) {
                terms.push(q);
            }
        }

        let mut acc = alloc::vec![0.0f64; self.n_docs()];
        let mut touched: Vec<DocIdx> = Vec::new();
        for term in terms {
            let postings = self.postings(term);
            if postings.is_empty() {
                continue;
            }
            let idf = self.idf(term);
            for p in postings {
                if !filter(p.doc) {
                    continue;
                }
                let tf = f64::from(p.tf);
                let dl = f64::from(self.doc_length[p.doc]);
                let norm = k1 * (1.0 - b + b * dl / self.avgdl);
                let contrib = idf * (tf * (k1 + 1.0)) / (tf + norm);
                if acc[p.doc] == 0.0 {
                    touched.push(p.doc);
                }
                acc[p.doc] += contrib;
            }
        }

        let mut hits: Vec<Hit> = touched
            .into_iter()
            .filter(|&d| acc[d] > 0.0)
            .map(|d| Hit { doc: d, score: acc[d] })
            .collect();
        hits.sort_by(|x, y| self.rank_order(x, y));
        hits.truncate(k);
        Ok(hits)
    }

    fn rank_order(&self, x: &Hit, y: &Hit) -> Ordering {
        y.score
            .total_cmp(&x.score)
            .then_with(|| self.doc_ids[x.doc].cmp(&self.doc_ids[y.doc]))
    }
}
