//! Fusion of the lexical and dense rankings, batch selection under a budget,
//! annotation, and the multi-round campaign with a random control arm.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::attribution::{pick_query_terms, suggest_query_terms, QuerySuggestion};
use crate::classify::{evaluate, train_linear, EvalReport, LinearModel, TrainConfig, DEFAULT_THRESHOLD};
use crate::corpus::Corpus;
use crate::lexindex::InvertedIndex;
use crate::seed::{fnv1a, mix_seed, rng};
use crate::vecindex::{embed_query, EmbeddingMatrix, EmbeddingProvider};
use crate::{DocIdx, Error, Result};

/// Source of ground-truth labels for annotation. Repeated lookups must agree.
pub trait AnnotationOracle {
    fn lookup(&self, id: &str, category: &str) -> Option<u8>;
}

/// In-memory `(id, category) → label` table.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TruthTable {
    labels: BTreeMap<String, BTreeMap<String, u8>>,
}

impl TruthTable {
    pub fn insert(&mut self, id: &str, category: &str, label: u8) {
        self.labels.entry(id.into()).or_default().insert(category.into(), label);
    }

    /// Number of `(id, category)` entries.
    pub fn len(&self) -> usize {
        self.labels.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels_of(&self, id: &str) -> Option<&BTreeMap<String, u8>> {
        self.labels.get(id)
    }

    /// Entries sorted by id, then category.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, u8)> {
        self.labels
            .iter()
            .flat_map(|(id, m)| m.iter().map(move |(c, &l)| (id.as_str(), c.as_str(), l)))
    }

    /// Labels carried by the corpus documents themselves.
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut t = TruthTable::default();
        for d in corpus.docs() {
            for (c, &l) in &d.labels {
                t.insert(&d.id, c, l);
            }
        }
        t
    }

    /// Union of two tables; entries of `other` win on conflict.
    pub fn merged(mut self, other: &TruthTable) -> Self {
        for (id, c, l) in other.iter() {
            self.insert(id, c, l);
        }
        self
    }
}

impl AnnotationOracle for TruthTable {
    fn lookup(&self, id: &str, category: &str) -> Option<u8> {
        self.labels.get(id).and_then(|m| m.get(category)).copied()
    }
}

/// Intersection of the two top-`k` prefixes; see [`fuse_prefixes`].
pub fn fuse_topk<T: Ord + Clone>(lex_ranked: &[T], vec_ranked: &[T], k: usize) -> Vec<T> {
    fuse_prefixes(&lex_ranked[..k.min(lex_ranked.len())], &vec_ranked[..k.min(vec_ranked.len())])
}

/// Ids present in both rankings, ordered by ascending rank sum, then by
/// lexical rank, then by id.
pub fn fuse_prefixes<T: Ord + Clone>(lex: &[T], vec: &[T]) -> Vec<T> {
    let vec_rank: BTreeMap<&T, usize> = vec.iter().enumerate().map(|(r, id)| (id, r)).collect();
    let mut both: Vec<(usize, usize, &T)> = lex
        .iter()
        .enumerate()
        .filter_map(|(rl, id)| vec_rank.get(id).map(|&rv| (rl + rv, rl, id)))
        .collect();
    both.sort();
    both.dedup_by(|a, b| a.2 == b.2);
    both.into_iter().map(|(_, _, id)| id.clone()).collect()
}

/// Maps a category's query terms to a dense query vector.
pub trait QueryEncoder {
    fn encode(&self, category: &str, terms: &[String]) -> Result<Vec<f64>>;
}

/// Encodes queries with an embedding provider.
pub struct ProviderEncoder<'a, P: ?Sized>(pub &'a P);

impl<P: EmbeddingProvider + ?Sized> QueryEncoder for ProviderEncoder<'_, P> {
    fn encode(&self, _category: &str, terms: &[String]) -> Result<Vec<f64>> {
        embed_query(self.0, terms)
    }
}

/// Precomputed query vectors keyed by category, for externally embedded corpora.
#[derive(Debug, Clone, Default)]
pub struct FixedQueryVectors(pub BTreeMap<String, Vec<f64>>);

impl QueryEncoder for FixedQueryVectors {
    fn encode(&self, category: &str, terms: &[String]) -> Result<Vec<f64>> {
        if terms.is_empty() {
            return Err(Error::EmptyQuery);
        }
        self.0
            .get(category)
            .cloned()
            .ok_or_else(|| Error::MissingVector { id: format!("query:{category}") })
    }
}

/// Everything the two retrieval legs need. `vectors` must be aligned to the
/// corpus (row `i` is document `i`).
pub struct Retrieval<'a> {
    pub corpus: &'a Corpus,
    pub index: &'a InvertedIndex,
    pub vectors: &'a EmbeddingMatrix,
    pub encoder: &'a dyn QueryEncoder,
}

impl Retrieval<'_> {
    fn check_aligned(&self) -> Result<()> {
        let ok = self.vectors.len() == self.corpus.len()
            && self.index.n_docs() == self.corpus.len()
            && (0..self.corpus.len()).all(|i| self.vectors.id(i) == self.corpus.doc(i).id);
        if ok {
            Ok(())
        } else {
            Err(Error::Invariant("index, vectors and corpus are not aligned".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionBatch {
    pub category: String,
    pub query: Vec<String>,
    pub k_lex: usize,
    pub k_vec: usize,
    pub lexical: Vec<DocIdx>,
    pub dense: Vec<DocIdx>,
    /// Fused ids in fused order, truncated to the cap.
    pub fused: Vec<DocIdx>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRound {
    pub round: usize,
    pub category: String,
    pub suggestion: Option<QuerySuggestion>,
    pub query: Vec<String>,
    pub k_lex: usize,
    pub k_vec: usize,
    pub lexical: Vec<DocIdx>,
    pub dense: Vec<DocIdx>,
    pub fused: Vec<DocIdx>,
    /// Labels received for this round's category.
    pub annotated: Vec<(DocIdx, u8)>,
    pub eval: Option<EvalReport>,
}

/// Labeled set, unlabeled pool and budget of one campaign arm.
///
/// Documents are either labeled, in the pool, or held out for evaluation;
/// held-out documents are never selected.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignState {
    categories: Vec<String>,
    labels: BTreeMap<DocIdx, BTreeMap<String, u8>>,
    pool: BTreeSet<DocIdx>,
    held_out: BTreeSet<DocIdx>,
    initial_budget: usize,
    budget_remaining: usize,
    rounds: Vec<SelectionRound>,
}

impl CampaignState {
    /// Documents carrying a label for any of `categories` start labeled; all
    /// others form the pool.
    pub fn new(corpus: &Corpus, categories: &[String], budget: usize) -> Self {
        let mut labels = BTreeMap::new();
        let mut pool = BTreeSet::new();
        for (i, d) in corpus.docs().iter().enumerate() {
            let l: BTreeMap<String, u8> = d
                .labels
                .iter()
                .filter(|(c, _)| categories.contains(c))
                .map(|(c, &v)| (c.clone(), v))
                .collect();
            if l.is_empty() {
                pool.insert(i);
            } else {
                labels.insert(i, l);
            }
        }
        CampaignState {
            categories: categories.to_vec(),
            labels,
            pool,
            held_out: BTreeSet::new(),
            initial_budget: budget,
            budget_remaining: budget,
            rounds: Vec::new(),
        }
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn pool(&self) -> &BTreeSet<DocIdx> {
        &self.pool
    }

    pub fn held_out(&self) -> &BTreeSet<DocIdx> {
        &self.held_out
    }

    pub fn in_pool(&self, doc: DocIdx) -> bool {
        self.pool.contains(&doc)
    }

    pub fn is_labeled(&self, doc: DocIdx) -> bool {
        self.labels.contains_key(&doc)
    }

    pub fn n_labeled(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &BTreeMap<DocIdx, BTreeMap<String, u8>> {
        &self.labels
    }

    /// Labeled documents carrying a label for `category`, ascending.
    pub fn labeled_for(&self, category: &str) -> Vec<(DocIdx, u8)> {
        self.labels.iter().filter_map(|(&d, m)| m.get(category).map(|&l| (d, l))).collect()
    }

    pub fn budget_remaining(&self) -> usize {
        self.budget_remaining
    }

    pub fn initial_budget(&self) -> usize {
        self.initial_budget
    }

    pub fn annotated_total(&self) -> usize {
        self.initial_budget - self.budget_remaining
    }

    pub fn rounds(&self) -> &[SelectionRound] {
        &self.rounds
    }

    /// Moves pool documents into the held-out evaluation set.
    pub fn hold_out(&mut self, docs: &[DocIdx]) -> Result<()> {
        for d in docs {
            if !self.pool.remove(d) {
                return Err(Error::InvalidArgument(format!("document {d} is not in the pool")));
            }
            self.held_out.insert(*d);
        }
        Ok(())
    }

    fn check_category(&self, category: &str) -> Result<()> {
        if self.categories.iter().any(|c| c == category) {
            Ok(())
        } else {
            Err(Error::UnknownCategory { category: category.into() })
        }
    }

    /// Verifies that labeled, pool and held-out sets partition `0..n_docs`
    /// and that the budget accounting balances.
    pub fn check_invariants(&self, n_docs: usize) -> Result<()> {
        let total = self.labels.len() + self.pool.len() + self.held_out.len();
        let disjoint = self.labels.keys().all(|d| !self.pool.contains(d) && !self.held_out.contains(d))
            && self.pool.is_disjoint(&self.held_out);
        if total != n_docs || !disjoint {
            return Err(Error::Invariant(format!(
                "labeled ({}) + pool ({}) + held out ({}) do not partition {n_docs} documents",
                self.labels.len(),
                self.pool.len(),
                self.held_out.len()
            )));
        }
        if self.budget_remaining > self.initial_budget {
            return Err(Error::Invariant("budget increased".into()));
        }
        Ok(())
    }

    fn commit(&mut self, additions: Vec<(DocIdx, BTreeMap<String, u8>)>) -> Result<()> {
        if additions.len() > self.budget_remaining {
            return Err(Error::BudgetExceeded { requested: additions.len(), remaining: self.budget_remaining });
        }
        for (d, _) in &additions {
            if !self.pool.contains(d) {
                return Err(Error::Invariant(format!("document {d} annotated twice or not in pool")));
            }
        }
        self.budget_remaining -= additions.len();
        for (d, l) in additions {
            self.pool.remove(&d);
            self.labels.insert(d, l);
        }
        Ok(())
    }
}

/// Runs both retrieval legs over the pool, fuses them and truncates to `cap`.
pub fn select_batch(
    state: &CampaignState,
    retrieval: &Retrieval<'_>,
    category: &str,
    query: &[String],
    k_lex: usize,
    k_vec: usize,
    cap: usize,
) -> Result<SelectionBatch> {
    state.check_category(category)?;
    if query.is_empty() {
        return Err(Error::EmptyQuery);
    }
    if state.budget_remaining == 0 {
        return Err(Error::ZeroBudget);
    }
    if cap > state.budget_remaining {
        return Err(Error::BudgetExceeded { requested: cap, remaining: state.budget_remaining });
    }
    let mut batch = SelectionBatch {
        category: category.into(),
        query: query.to_vec(),
        k_lex,
        k_vec,
        lexical: Vec::new(),
        dense: Vec::new(),
        fused: Vec::new(),
    };
    if cap == 0 {
        return Ok(batch);
    }
    retrieval.check_aligned()?;
    let in_pool = |d: DocIdx| state.pool.contains(&d);
    batch.lexical = retrieval.index.search_filtered(query, k_lex, in_pool)?.iter().map(|h| h.doc).collect();
    let qvec = retrieval.encoder.encode(category, query)?;
    batch.dense =
        retrieval.vectors.knn_search_filtered(&qvec, k_vec, in_pool)?.iter().map(|n| n.doc).collect();
    batch.fused = fuse_prefixes(&batch.lexical, &batch.dense);
    batch.fused.truncate(cap);
    Ok(batch)
}

/// Labels `docs` from the oracle and moves them from the pool to the labeled
/// set. Every document receives whatever labels the oracle has for the
/// state's categories; a missing label for `category` is an error.
pub fn annotate(
    state: &mut CampaignState,
    corpus: &Corpus,
    docs: &[DocIdx],
    category: &str,
    oracle: &dyn AnnotationOracle,
) -> Result<Vec<(DocIdx, u8)>> {
    state.check_category(category)?;
    let mut additions = Vec::with_capacity(docs.len());
    let mut received = Vec::with_capacity(docs.len());
    for &d in docs {
        let id = &corpus.doc(d).id;
        if !state.in_pool(d) {
            return Err(Error::InvalidArgument(format!("\"{id}\" is not in the unlabeled pool")));
        }
        let label = oracle
            .lookup(id, category)
            .ok_or_else(|| Error::OracleMiss { id: id.clone(), category: category.into() })?;
        let mut labels = BTreeMap::new();
        for c in &state.categories {
            if let Some(l) = oracle.lookup(id, c) {
                labels.insert(c.clone(), l);
            }
        }
        additions.push((d, labels));
        received.push((d, label));
    }
    state.commit(additions)?;
    Ok(received)
}

/// Documents sent out for annotation in file-exchange mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingBatch {
    pub category: String,
    pub ids: Vec<String>,
}

/// One returned annotation: `(id, category, label)`.
pub type ImportedLabel = (String, String, i64);

/// Applies returned annotations for a pending batch. Every imported id must be
/// pending; labels must be 0 or 1. Returns the newly labeled documents.
pub fn apply_import(
    state: &mut CampaignState,
    corpus: &Corpus,
    pending: &PendingBatch,
    imported: &[ImportedLabel],
) -> Result<Vec<DocIdx>> {
    let pending_ids: BTreeSet<&str> = pending.ids.iter().map(String::as_str).collect();
    let mut per_doc: BTreeMap<DocIdx, BTreeMap<String, u8>> = BTreeMap::new();
    for (id, category, value) in imported {
        if !pending_ids.contains(id.as_str()) {
            return Err(Error::NotPending { id: id.clone() });
        }
        state.check_category(category)?;
        let label = match value {
            0 => 0,
            1 => 1,
            _ => {
                return Err(Error::InvalidLabel { id: id.clone(), category: category.clone(), value: *value })
            }
        };
        let d = corpus.index_of(id).ok_or_else(|| Error::InvalidId { id: id.clone() })?;
        if !state.in_pool(d) {
            return Err(Error::InvalidArgument(format!("\"{id}\" is not in the unlabeled pool")));
        }
        per_doc.entry(d).or_default().insert(category.clone(), label);
    }
    let docs: Vec<DocIdx> = per_doc.keys().copied().collect();
    state.commit(per_doc.into_iter().collect())?;
    Ok(docs)
}

/// Uniform sample of `n` pool documents without replacement; the whole pool
/// (ascending) when `n` covers it.
pub fn random_baseline_batch(state: &CampaignState, n: usize, seed: u64) -> Vec<DocIdx> {
    let pool: Vec<DocIdx> = state.pool.iter().copied().collect();
    if n >= pool.len() {
        return pool;
    }
    rand::seq::index::sample(&mut rng(seed), pool.len(), n).into_iter().map(|i| pool[i]).collect()
}

/// A per-round value; rounds beyond the end reuse the last entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule(pub Vec<usize>);

impl Schedule {
    pub fn constant(v: usize) -> Self {
        Schedule(alloc::vec![v])
    }

    /// Value for 1-based `round`.
    pub fn at(&self, round: usize) -> usize {
        let i = round.saturating_sub(1).min(self.0.len().saturating_sub(1));
        self.0.get(i).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub rounds: usize,
    pub k_lex: Schedule,
    pub k_vec: Schedule,
    pub cap: Schedule,
    pub budget: usize,
    pub seed: u64,
    /// Fraction of the initially unlabeled documents frozen as the test split.
    pub test_fraction: f64,
    pub top_m: usize,
    pub query_max_terms: usize,
    pub query_min_ratio: f64,
    pub threshold: f64,
    pub train: TrainConfig,
    /// Reviewed queries; categories listed here skip automatic suggestion.
    pub fixed_queries: BTreeMap<String, Vec<String>>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            rounds: 2,
            k_lex: Schedule::constant(80),
            k_vec: Schedule::constant(80),
            cap: Schedule::constant(50),
            budget: 3000,
            seed: 1,
            test_fraction: 0.2,
            top_m: 10,
            query_max_terms: 4,
            query_min_ratio: 0.5,
            threshold: DEFAULT_THRESHOLD,
            train: TrainConfig::default(),
            fixed_queries: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Arm {
    Fused,
    Random,
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arm::Fused => "fused",
            Arm::Random => "random",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub round: usize,
    pub category: String,
    pub arm: Arm,
    /// Documents labeled for this category when the model was trained.
    pub n_labeled: usize,
    pub minority_f1: f64,
    pub macro_f1: f64,
    /// Fraction of this round's batch annotated positive; `None` for round 0
    /// and empty batches.
    pub precision_at_k: Option<f64>,
    pub batch_size: usize,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignReport {
    pub rows: Vec<ReportRow>,
    pub rounds: Vec<SelectionRound>,
    pub test_docs: Vec<DocIdx>,
    pub initial_budget: usize,
    pub budget_remaining: usize,
}

impl CampaignReport {
    pub fn row(&self, round: usize, category: &str, arm: Arm) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.round == round && r.category == category && r.arm == arm)
    }
}

struct Campaign<'a> {
    corpus: &'a Corpus,
    config: &'a CampaignConfig,
    test: Vec<(DocIdx, BTreeMap<String, u8>)>,
    train_cfg: TrainConfig,
}

impl Campaign<'_> {
    fn train(&self, state: &CampaignState, category: &str) -> Result<(LinearModel, Vec<(DocIdx, u8)>)> {
        let labeled = state.labeled_for(category);
        let examples: Vec<_> = labeled.iter().map(|&(d, y)| (self.corpus.features(d), y)).collect();
        let model = train_linear(
            &examples,
            self.corpus.vocab().len(),
            &self.corpus.stats().mean_feature,
            category,
            &self.train_cfg,
        )?;
        Ok((model, labeled))
    }

    fn evaluate(&self, model: &LinearModel, category: &str) -> Result<EvalReport> {
        let test: Vec<_> = self
            .test
            .iter()
            .map(|(d, labels)| (self.corpus.features(*d), labels[category]))
            .collect();
        evaluate(model, &test, self.config.threshold)
    }
}

/// Simulates the annotation campaign.
///
/// Before round 1 a stratified test split is frozen from the initially
/// unlabeled documents (labels from the oracle) and withdrawn from the pool.
/// Each round, per category: train on the labeled set, derive a query from
/// attributions (or use the configured one), search both legs over the pool,
/// fuse, cap, and annotate. A random arm receives batches of matching sizes.
/// Both arms are retrained and evaluated on the frozen split after every
/// round.
pub fn run_campaign(
    corpus: &Corpus,
    oracle: &dyn AnnotationOracle,
    categories: &[String],
    retrieval: &Retrieval<'_>,
    config: &CampaignConfig,
) -> Result<CampaignReport> {
    if categories.is_empty() {
        return Err(Error::InvalidArgument("campaign needs at least one category".into()));
    }
    let mut fused = CampaignState::new(corpus, categories, config.budget);
    for c in categories {
        if fused.labeled_for(c).is_empty() {
            return Err(Error::InvalidArgument(format!("no initial labels for category \"{c}\"")));
        }
    }

    // Freeze the test split, stratified by the joint label pattern.
    let mut eligible: Vec<(DocIdx, BTreeMap<String, u8>)> = Vec::new();
    for &d in fused.pool() {
        let id = &corpus.doc(d).id;
        let labels: Option<BTreeMap<String, u8>> =
            categories.iter().map(|c| oracle.lookup(id, c).map(|l| (c.clone(), l))).collect();
        if let Some(labels) = labels {
            eligible.push((d, labels));
        }
    }
    let strata: Vec<u32> = eligible
        .iter()
        .map(|(_, l)| l.values().enumerate().fold(0u32, |acc, (i, &v)| acc | (u32::from(v) << i)))
        .collect();
    let picked = crate::classify::stratified_sample(&strata, config.test_fraction, mix_seed(config.seed, 1))?;
    let test: Vec<(DocIdx, BTreeMap<String, u8>)> = picked.iter().map(|&i| eligible[i].clone()).collect();
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let test_docs: Vec<DocIdx> = test.iter().map(|t| t.0).collect();
    fused.hold_out(&test_docs)?;
    let mut random = fused.clone();

    let campaign = Campaign {
        corpus,
        config,
        test,
        train_cfg: TrainConfig { seed: mix_seed(config.seed, config.train.seed), ..config.train },
    };
    let mut rows = Vec::new();

    // Round 0: both arms share the initial labeled set.
    let mut models: BTreeMap<String, (LinearModel, Vec<(DocIdx, u8)>)> = BTreeMap::new();
    for c in categories {
        let (model, labeled) = campaign.train(&fused, c)?;
        let report = campaign.evaluate(&model, c)?;
        for arm in [Arm::Fused, Arm::Random] {
            rows.push(row(0, c, arm, labeled.len(), None, 0, report));
        }
        models.insert(c.clone(), (model, labeled));
    }

    for round in 1..=config.rounds {
        let mut batch_sizes: BTreeMap<&str, (usize, Option<f64>)> = BTreeMap::new();
        for c in categories {
            let mut record = SelectionRound {
                round,
                category: c.clone(),
                suggestion: None,
                query: Vec::new(),
                k_lex: config.k_lex.at(round),
                k_vec: config.k_vec.at(round),
                lexical: Vec::new(),
                dense: Vec::new(),
                fused: Vec::new(),
                annotated: Vec::new(),
                eval: None,
            };
            if fused.budget_remaining() > 0 {
                let (model, labeled) = match models.remove(c) {
                    Some(m) => m,
                    None => campaign.train(&fused, c)?,
                };
                record.query = match config.fixed_queries.get(c) {
                    Some(q) => q.clone(),
                    None => {
                        let s = suggest_query_terms(&model, corpus, &labeled, config.top_m, config.threshold, round)?;
                        let q = pick_query_terms(&s, config.query_max_terms, config.query_min_ratio);
                        record.suggestion = Some(s);
                        q
                    }
                };
                if !record.query.is_empty() {
                    let cap = config.cap.at(round).min(fused.budget_remaining());
                    let batch = select_batch(&fused, retrieval, c, &record.query, record.k_lex, record.k_vec, cap)?;
                    record.annotated = annotate(&mut fused, corpus, &batch.fused, c, oracle)?;
                    record.lexical = batch.lexical;
                    record.dense = batch.dense;
                    record.fused = batch.fused;
                }
            }
            batch_sizes.insert(c.as_str(), (record.annotated.len(), batch_precision(&record.annotated)));
            fused.rounds.push(record);
        }

        let mut random_batches = Vec::with_capacity(categories.len());
        for (ci, c) in categories.iter().enumerate() {
            let n = batch_sizes[c.as_str()].0.min(random.budget_remaining());
            let seed = mix_seed(config.seed, fnv1a(format!("random:{round}:{ci}").as_bytes()));
            let docs = random_baseline_batch(&random, n, seed);
            random_batches.push(annotate(&mut random, corpus, &docs, c, oracle)?);
        }
        for (c, got) in categories.iter().zip(&random_batches) {
            let (model, labeled) = campaign.train(&random, c)?;
            let report = campaign.evaluate(&model, c)?;
            rows.push(row(round, c, Arm::Random, labeled.len(), batch_precision(got), got.len(), report));
        }

        for c in categories {
            let (model, labeled) = campaign.train(&fused, c)?;
            let report = campaign.evaluate(&model, c)?;
            let (size, precision) = batch_sizes[c.as_str()];
            rows.push(row(round, c, Arm::Fused, labeled.len(), precision, size, report));
            if let Some(r) = fused.rounds.iter_mut().rev().find(|r| r.round == round && &r.category == c) {
                r.eval = Some(report);
            }
            models.insert(c.clone(), (model, labeled));
        }
        fused.check_invariants(corpus.len())?;
        random.check_invariants(corpus.len())?;
    }

    rows.sort_by(|a, b| (a.round, a.arm, &a.category).cmp(&(b.round, b.arm, &b.category)));
    Ok(CampaignReport {
        rows,
        rounds: fused.rounds,
        test_docs,
        initial_budget: fused.initial_budget,
        budget_remaining: fused.budget_remaining,
    })
}

fn batch_precision(annotated: &[(DocIdx, u8)]) -> Option<f64> {
    if annotated.is_empty() {
        None
    } else {
        Some(annotated.iter().filter(|a| a.1 == 1).count() as f64 / annotated.len() as f64)
    }
}

fn row(
    round: usize,
    category: &str,
    arm: Arm,
    n_labeled: usize,
    precision_at_k: Option<f64>,
    batch_size: usize,
    report: EvalReport,
) -> ReportRow {
    ReportRow {
        round,
        category: category.into(),
        arm,
        n_labeled,
        minority_f1: report.minority_f1,
        macro_f1: report.macro_f1,
        precision_at_k,
        batch_size,
        report,
    }
}
