//! Dense unit-vector store with exact Euclidean k-NN search.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{Corpus, Tokenizer, TokenizerConfig};
use crate::seed::{fnv1a, splitmix};
use crate::{DocIdx, Error, Result};

pub const DEFAULT_DIM: usize = 768;

/// Stored vectors must have a norm within this distance of 1.
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// Imported vectors further than this from unit norm are re-normalized.
pub const RENORMALIZE_THRESHOLD: f64 = 1e-3;

/// Source of text embeddings. `embed` must be a pure function of the text and
/// the provider's configuration, and must return a unit vector of length `dim`.
pub trait EmbeddingProvider {
    fn dim(&self) -> usize;
    fn tag(&self) -> String;
    fn embed(&self, text: &str) -> Vec<f64>;

    /// Embeds an already-tokenized document. The default joins tokens with
    /// spaces and calls [`embed`](Self::embed).
    fn embed_tokens(&self, tokens: &[String]) -> Vec<f64> {
        self.embed(&tokens.join(" "))
    }
}

/// Signed feature hashing of the token multiset, L2-normalized.
#[derive(Debug, Clone, Copy)]
pub struct HashEmbedder {
    pub dim: usize,
    pub seed: u64,
    pub tokenizer: TokenizerConfig,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(format!("embedding dim must be >= 2, got {dim}")));
        }
        Ok(HashEmbedder { dim, seed, tokenizer: TokenizerConfig::default() })
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn tag(&self) -> String {
        format!("hash:dim={}:seed={}", self.dim, self.seed)
    }

    fn embed(&self, text: &str) -> Vec<f64> {
        hash_embed_tokens(&Tokenizer::new(self.tokenizer).tokenize(text), self.dim, self.seed)
    }

    fn embed_tokens(&self, tokens: &[String]) -> Vec<f64> {
        hash_embed_tokens(tokens, self.dim, self.seed)
    }
}

/// Hash embedding of `text` under the default tokenizer.
///
/// An empty accumulation (no tokens, or all contributions cancelled) maps to
/// the first basis vector.
pub fn hash_embed(text: &str, dim: usize, seed: u64) -> Vec<f64> {
    hash_embed_tokens(&crate::corpus::tokenize(text), dim, seed)
}

pub fn hash_embed_tokens<S: AsRef<str>>(tokens: &[S], dim: usize, seed: u64) -> Vec<f64> {
    assert!(dim >= 2, "embedding dim must be >= 2");
    let mut v = alloc::vec![0.0f64; dim];
    for t in tokens {
        let h = splitmix(fnv1a(t.as_ref().as_bytes()) ^ splitmix(seed));
        let slot = (h % dim as u64) as usize;
        let sign = if splitmix(h) >> 63 == 0 { 1.0 } else { -1.0 };
        v[slot] += sign;
    }
    if !normalize(&mut v) {
        v[0] = 1.0;
    }
    v
}

/// Normalizes in place; returns false (leaving `v` untouched) for a zero vector.
fn normalize(v: &mut [f64]) -> bool {
    let n = norm(v);
    if n == 0.0 || !n.is_finite() {
        return false;
    }
    for x in v.iter_mut() {
        *x /= n;
    }
    true
}

pub fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Squared Euclidean distance.
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Joins the terms with single spaces and embeds the result.
pub fn embed_query<P: EmbeddingProvider + ?Sized, S: AsRef<str>>(
    provider: &P,
    terms: &[S],
) -> Result<Vec<f64>> {
    if terms.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let joined: Vec<&str> = terms.iter().map(AsRef::as_ref).collect();
    Ok(provider.embed(&joined.join(" ")))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub doc: DocIdx,
    pub distance: f64,
}

/// Row-major matrix of unit vectors keyed by document id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f64>,
    by_id: BTreeMap<String, usize>,
    provider_tag: String,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(|c| c.is_whitespace() || c.is_control())
}

impl EmbeddingMatrix {
    pub fn new(dim: usize, provider_tag: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dim must be positive".into()));
        }
        Ok(EmbeddingMatrix {
            dim,
            ids: Vec::new(),
            data: Vec::new(),
            by_id: BTreeMap::new(),
            provider_tag: provider_tag.into(),
        })
    }

    /// Appends a row. Returns `true` when the vector had to be re-normalized
    /// (its norm was off by more than [`RENORMALIZE_THRESHOLD`]).
    pub fn push(&mut self, id: &str, mut vector: Vec<f64>) -> Result<bool> {
        let row = Some(self.ids.len());
        if !valid_id(id) {
            return Err(Error::InvalidId { id: id.into() });
        }
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: vector.len(), row });
        }
        if self.by_id.contains_key(id) {
            return Err(Error::DuplicateId { id: id.into(), record: self.ids.len() });
        }
        let n = norm(&vector);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroVector { id: id.into() });
        }
        let renormalized = (n - 1.0).abs() > RENORMALIZE_THRESHOLD;
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            normalize(&mut vector);
        }
        self.by_id.insert(id.into(), self.ids.len());
        self.ids.push(id.into());
        self.data.extend_from_slice(&vector);
        Ok(renormalized)
    }

    /// Embeds every document of `corpus` in corpus order.
    pub fn from_corpus<P: EmbeddingProvider + ?Sized>(corpus: &Corpus, provider: &P) -> Result<Self> {
        let mut m = EmbeddingMatrix::new(provider.dim(), provider.tag())?;
        for d in corpus.docs() {
            m.push(&d.id, provider.embed_tokens(&d.tokens))?;
        }
        Ok(m)
    }

    /// Reorders rows to match corpus order so that row index equals document
    /// index. Rows for ids outside the corpus are dropped.
    pub fn aligned_to(&self, corpus: &Corpus) -> Result<Self> {
        let mut m = EmbeddingMatrix::new(self.dim, self.provider_tag.clone())?;
        for d in corpus.docs() {
            let row = self.row_of(&d.id).ok_or_else(|| Error::MissingVector { id: d.id.clone() })?;
            m.by_id.insert(d.id.clone(), m.ids.len());
            m.ids.push(d.id.clone());
            m.data.extend_from_slice(self.row(row));
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn provider_tag(&self) -> &str {
        &self.provider_tag
    }

    pub fn id(&self, row: usize) -> &str {
        &self.ids[row]
    }

    pub fn row_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids.iter().map(String::as_str).zip(self.data.chunks_exact(self.dim))
    }

    pub fn knn_search(&self, query: &[f64], k: usize) -> Result<Vec<Neighbor>> {
        self.knn_search_filtered(query, k, |_| true)
    }

    /// Exact scan over rows accepted by `filter`, ascending distance, ties by
    /// ascending id. The query is normalized on entry.
    pub fn knn_search_filtered(
        &self,
        query: &[f64],
        k: usize,
        filter: impl Fn(usize) -> bool,
    ) -> Result<Vec<Neighbor>> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: query.len(), row: None });
        }
        if k < 1 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let mut q = query.to_vec();
        if !normalize(&mut q) {
            return Err(Error::ZeroVector { id: "<query>".into() });
        }
        let mut scored: Vec<(f64, usize)> = (0..self.len())
            .filter(|&r| filter(r))
            .map(|r| (sq_dist(self.row(r), &q), r))
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| self.ids[a.1].cmp(&self.ids[b.1])));
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .map(|(d2, r)| Neighbor { doc: r, distance: libm::sqrt(d2) })
            .collect())
    }
}
