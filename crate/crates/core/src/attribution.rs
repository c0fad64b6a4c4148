//! Exact Shapley attributions for the linear classifier, and query-term
//! suggestion from aggregated positive attributions.
//!
//! With the replace-by-background value function, the Shapley value of
//! feature `i` for a linear margin `w·x + b` is exactly
//!
//! ```text
//! φ_i = w_i · (x_i − μ_i),     base = w·μ + b,     Σ φ_i + base = w·x + b
//! ```

use alloc::string::String;
use alloc::vec::Vec;

use crate::classify::{predict_at, LinearModel};
use crate::corpus::{Corpus, SparseVec};
use crate::{DocIdx, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    /// One value per feature of the model.
    pub phi: Vec<f64>,
    /// Model margin at the background mean.
    pub base_value: f64,
}

impl Attribution {
    pub fn total(&self) -> f64 {
        self.phi.iter().sum::<f64>() + self.base_value
    }
}

pub fn shap_linear(model: &LinearModel, x: &SparseVec) -> Result<Attribution> {
    if model.background_mean.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: model.background_mean.len(),
            row: None,
        });
    }
    model.check_input(x)?;
    let mut phi: Vec<f64> =
        model.weights.iter().zip(&model.background_mean).map(|(w, mu)| -w * mu).collect();
    for &(i, xi) in x.entries() {
        let i = i as usize;
        phi[i] = model.weights[i] * (xi - model.background_mean[i]);
    }
    let base_value = model
        .weights
        .iter()
        .zip(&model.background_mean)
        .map(|(w, mu)| w * mu)
        .sum::<f64>()
        + model.bias;
    Ok(Attribution { phi, base_value })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuerySuggestion {
    pub category: String,
    /// Strictly descending by score, ties by term.
    pub ranked_terms: Vec<(String, f64)>,
    pub round: usize,
    pub model_fingerprint: u64,
}

impl QuerySuggestion {
    pub fn terms(&self) -> Vec<String> {
        self.ranked_terms.iter().map(|t| t.0.clone()).collect()
    }
}

/// Ranks vocabulary terms by their mean positive attribution over the
/// candidate positive documents: labeled documents whose label is 1 or whose
/// model prediction is 1. Negative attributions count as zero; only terms
/// with a positive aggregate are returned.
pub fn suggest_query_terms(
    model: &LinearModel,
    corpus: &Corpus,
    labeled: &[(DocIdx, u8)],
    top_m: usize,
    threshold: f64,
    round: usize,
) -> Result<QuerySuggestion> {
    let mut suggestion = QuerySuggestion {
        category: model.category.clone(),
        ranked_terms: Vec::new(),
        round,
        model_fingerprint: model.fingerprint,
    };
    if top_m == 0 {
        return Ok(suggestion);
    }
    if model.dim() != corpus.vocab().len() {
        return Err(Error::DimensionMismatch {
            expected: corpus.vocab().len(),
            found: model.dim(),
            row: None,
        });
    }
    let candidates: Vec<DocIdx> = labeled
        .iter()
        .filter(|&&(d, y)| y == 1 || predict_at(model, corpus.features(d), threshold).label == 1)
        .map(|&(d, _)| d)
        .collect();
    if candidates.is_empty() {
        return Err(Error::NoPositives { category: model.category.clone() });
    }

    let mut total = alloc::vec![0.0f64; model.dim()];
    for &d in &candidates {
        let a = shap_linear(model, corpus.features(d))?;
        for (t, p) in total.iter_mut().zip(&a.phi) {
            if *p > 0.0 {
                *t += p;
            }
        }
    }
    let n = candidates.len() as f64;
    let mut ranked: Vec<(u32, f64)> = total
        .into_iter()
        .enumerate()
        .filter(|e| e.1 > 0.0)
        .map(|(i, s)| (i as u32, s / n))
        .collect();
    let vocab = corpus.vocab();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| vocab.term(a.0).cmp(vocab.term(b.0))));
    ranked.truncate(top_m);
    suggestion.ranked_terms = ranked.into_iter().map(|(i, s)| (vocab.term(i).into(), s)).collect();
    Ok(suggestion)
}

/// Picks the binding query from a suggestion: at most `max_terms` leading
/// terms whose score is at least `min_ratio` of the best score.
pub fn pick_query_terms(suggestion: &QuerySuggestion, max_terms: usize, min_ratio: f64) -> Vec<String> {
    let Some(best) = suggestion.ranked_terms.first().map(|t| t.1) else {
        return Vec::new();
    };
    suggestion
        .ranked_terms
        .iter()
        .take(max_terms)
        .take_while(|t| t.1 >= min_ratio * best)
        .map(|t| t.0.clone())
        .collect()
}
