//! Implementations of the CLI subcommands. Each writes human-readable output
//! to `out` and files under `paths.out_dir`.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use cueselect_core::attribution::pick_query_terms;
use cueselect_core::benchgen::generate_records;
use cueselect_core::classify::{split, EvalReport};
use cueselect_core::corpus::Tokenizer;
use cueselect_core::selection::{
    annotate, apply_import, fuse_prefixes, select_batch, FixedQueryVectors, ProviderEncoder,
    QueryEncoder, Retrieval,
};
use cueselect_core::{
    evaluate, hold_out_truth, precision_at_k, recall_at_k, run_campaign, suggest_query_terms,
    train_linear, AnnotationOracle, CampaignState, Corpus, DocIdx, EmbeddingMatrix, HashEmbedder,
    InvertedIndex, LinearModel, QuerySuggestion, Record, TruthTable,
};

use crate::config::{AnnotationMode, Config, Provider};
use crate::error::{CliError, Result};
use crate::formats::annotations::{
    imported_labels, read_labels, read_oracle, read_pending, write_oracle, write_pending,
};
use crate::formats::corpus_file::{load_corpus, write_records};
use crate::formats::embeddings::read_embeddings;
use crate::formats::model_file::{read_model, write_model};
use crate::formats::queries::{read_queries, write_queries, QueryFile};
use crate::formats::write_bytes;
use crate::report::{campaign_csv, summary_table};

fn io_err(e: std::io::Error) -> CliError {
    CliError::io(Path::new("<stdout>"), e)
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(io_err)?
    };
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| CliError::Usage(format!("{key} is not set")))
}

fn out_path(cfg: &Config, name: &str) -> PathBuf {
    cfg.paths.out_dir.join(name)
}

fn write_snapshot(cfg: &Config) -> Result<()> {
    write_bytes(&out_path(cfg, "config.txt"), cfg.to_text().as_bytes())
}

pub(crate) fn load_input_corpus(cfg: &Config) -> Result<Corpus> {
    load_corpus(required(&cfg.paths.corpus, "paths.corpus")?, &cfg.categories, cfg.corpus_config())
}

fn load_oracle(cfg: &Config) -> Result<Option<TruthTable>> {
    cfg.paths.oracle.as_deref().map(read_oracle).transpose()
}

/// Configured categories, or every category found in the corpus and oracle.
fn categories(cfg: &Config, corpus: &Corpus, oracle: Option<&TruthTable>) -> Vec<String> {
    if !cfg.categories.is_empty() {
        return cfg.categories.clone();
    }
    let mut cats: BTreeSet<String> = corpus.categories().into_iter().collect();
    if let Some(o) = oracle {
        cats.extend(o.iter().map(|(_, c, _)| c.to_string()));
    }
    cats.into_iter().collect()
}

fn check_category(category: &str, known: &[String]) -> Result<()> {
    if known.iter().any(|c| c == category) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("unknown category \"{category}\" (known: {})", known.join(", "))))
    }
}

/// Query encoder owned by the CLI: the hash provider or precomputed vectors.
enum Encoder {
    Hash(HashEmbedder),
    Fixed(FixedQueryVectors),
}

impl QueryEncoder for Encoder {
    fn encode(&self, category: &str, terms: &[String]) -> cueselect_core::Result<Vec<f64>> {
        match self {
            Encoder::Hash(h) => ProviderEncoder(h).encode(category, terms),
            Encoder::Fixed(f) => f.encode(category, terms),
        }
    }
}

struct Dense {
    vectors: EmbeddingMatrix,
    encoder: Encoder,
}

fn dense_leg(cfg: &Config, corpus: &Corpus, out: &mut dyn Write) -> Result<Dense> {
    match cfg.provider {
        Provider::Hash => {
            let h = cfg.embedder()?;
            Ok(Dense { vectors: EmbeddingMatrix::from_corpus(corpus, &h)?, encoder: Encoder::Hash(h) })
        }
        Provider::File => {
            let path = required(&cfg.paths.embeddings, "paths.embeddings")?;
            let docs = read_embeddings(path)?;
            let qpath = required(&cfg.paths.query_embeddings, "paths.query_embeddings")?;
            let queries = read_embeddings(qpath)?;
            if queries.matrix.dim() != docs.matrix.dim() {
                return Err(CliError::format(
                    qpath,
                    None,
                    format!("query dim {} differs from document dim {}", queries.matrix.dim(), docs.matrix.dim()),
                ));
            }
            let renorm = docs.renormalized + queries.renormalized;
            if renorm > 0 {
                say!(out, "warning: {renorm} imported vectors were re-normalized");
            }
            let vectors = docs.matrix.aligned_to(corpus).map_err(|e| CliError::format(path, None, e.to_string()))?;
            let fixed = queries.matrix.rows().map(|(id, v)| (id.to_string(), v.to_vec())).collect();
            Ok(Dense { vectors, encoder: Encoder::Fixed(FixedQueryVectors(fixed)) })
        }
    }
}

/// Query terms normalized with the corpus tokenizer.
fn normalize_terms(corpus: &Corpus, terms: &[String]) -> Vec<String> {
    Tokenizer::new(corpus.config().tokenizer).tokenize(&terms.join(" "))
}

fn labeled_for(corpus: &Corpus, category: &str) -> Vec<(DocIdx, u8)> {
    (0..corpus.len()).filter_map(|i| corpus.doc(i).label(category).map(|l| (i, l))).collect()
}

fn train_on(cfg: &Config, corpus: &Corpus, category: &str, docs: &[(DocIdx, u8)]) -> Result<LinearModel> {
    let examples: Vec<_> = docs.iter().map(|&(d, y)| (corpus.features(d), y)).collect();
    Ok(train_linear(&examples, corpus.vocab().len(), &corpus.stats().mean_feature, category, &cfg.train)?)
}

fn suggestion_for(cfg: &Config, corpus: &Corpus, category: &str) -> Result<QuerySuggestion> {
    let labeled = labeled_for(corpus, category);
    let model = train_on(cfg, corpus, category, &labeled)?;
    Ok(suggest_query_terms(&model, corpus, &labeled, cfg.campaign.top_m, cfg.threshold, 0)?)
}

fn print_eval(out: &mut dyn Write, title: &str, r: &EvalReport) -> Result<()> {
    say!(out, "{title}: n={} tp={} fp={} tn={} fn={}", r.n_test, r.tp, r.fp, r.tn, r.fn_);
    for (class, m) in r.classes.iter().enumerate() {
        let flag = if m.f1_undefined { " (undefined, reported as 0)" } else { "" };
        say!(
            out,
            "  class {class}: precision={:.4} recall={:.4} f1={:.4}{flag} support={}",
            m.precision,
            m.recall,
            m.f1,
            m.support
        );
    }
    say!(out, "  macro_f1={:.4} minority_class={} minority_f1={:.4}", r.macro_f1, r.minority_class, r.minority_f1);
    Ok(())
}

pub fn generate(cfg: &Config, out: &mut dyn Write) -> Result<()> {
    let gen = cfg.generator_config()?;
    let full = Corpus::from_records(generate_records(&gen)?, &gen.category_names(), cfg.corpus_config())?;
    let (visible, oracle) = hold_out_truth(&full, cfg.generator.visible_fraction, cfg.generator.holdout_seed)?;
    write_records(&out_path(cfg, "corpus.jsonl"), &visible.to_records())?;
    write_oracle(&out_path(cfg, "oracle.jsonl"), &oracle)?;
    write_snapshot(cfg)?;
    let n_visible = visible.docs().iter().filter(|d| !d.labels.is_empty()).count();
    say!(out, "documents: {} (labels visible on {n_visible})", full.len());
    for c in gen.category_names() {
        let pos = full.docs().iter().filter(|d| d.label(&c) == Some(1)).count();
        say!(out, "  {c}: {pos} positive ({:.3})", pos as f64 / full.len().max(1) as f64);
    }
    say!(out, "wrote {}", out_path(cfg, "corpus.jsonl").display());
    say!(out, "wrote {}", out_path(cfg, "oracle.jsonl").display());
    Ok(())
}

pub fn index(cfg: &Config, out: &mut dyn Write) -> Result<()> {
    let corpus = load_input_corpus(cfg)?;
    let idx = InvertedIndex::build(&corpus, cfg.bm25);
    let mut s = format!(
        "documents: {}\nterms: {}\navgdl: {:.4}\nk1: {}\nb: {}\ntop terms by document frequency:\n",
        idx.n_docs(),
        idx.n_terms(),
        idx.avgdl(),
        cfg.bm25.k1,
        cfg.bm25.b
    );
    for (t, df) in idx.top_terms(10) {
        s.push_str(&format!("  {t} {df}\n"));
    }
    write_bytes(&out_path(cfg, "index.txt"), s.as_bytes())?;
    write_snapshot(cfg)?;
    out.write_all(s.as_bytes()).map_err(io_err)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Leg {
    Lex,
    Vec,
    Both,
}

pub fn search(
    cfg: &Config,
    terms: &[String],
    category: Option<&str>,
    leg: Leg,
    show: usize,
    out: &mut dyn Write,
) -> Result<()> {
    let corpus = load_input_corpus(cfg)?;
    let query = normalize_terms(&corpus, terms);
    if query.is_empty() {
        return Err(CliError::Usage("query has no terms".into()));
    }
    let depth = cfg.search_depths.iter().copied().chain([cfg.search_k]).max().unwrap_or(1);
    say!(out, "query: {}", query.join(" "));

    let mut lex = None;
    if leg != Leg::Vec {
        let idx = InvertedIndex::build(&corpus, cfg.bm25);
        let hits = idx.search(&query, depth)?;
        say!(out, "lexical (bm25), {} hits", hits.len());
        for (r, h) in hits.iter().take(show).enumerate() {
            say!(out, "  {:>3} {} {:.6}", r + 1, corpus.doc(h.doc).id, h.score);
        }
        lex = Some(hits.iter().map(|h| h.doc).collect::<Vec<_>>());
    }
    let mut dense = None;
    if leg != Leg::Lex {
        let d = dense_leg(cfg, &corpus, out)?;
        let q = d.encoder.encode(category.unwrap_or_default(), &query)?;
        let hits = d.vectors.knn_search(&q, depth)?;
        say!(out, "dense (euclidean), {} hits", hits.len());
        for (r, h) in hits.iter().take(show).enumerate() {
            say!(out, "  {:>3} {} {:.6}", r + 1, corpus.doc(h.doc).id, h.distance);
        }
        dense = Some(hits.iter().map(|h| h.doc).collect::<Vec<_>>());
    }

    let Some(cat) = category else { return Ok(()) };
    let oracle = load_oracle(cfg)?;
    let truth = |d: &LabeledDoc| {
        let doc = corpus.doc(d.0);
        doc.label(cat).or_else(|| oracle.as_ref().and_then(|o| o.lookup(&doc.id, cat)))
    };
    let positives = (0..corpus.len()).filter(|&d| truth(&LabeledDoc(d)) == Some(1)).count();
    let ids = |v: &[DocIdx]| v.iter().map(|&d| LabeledDoc(d)).collect::<Vec<_>>();
    let prec = |ranked: Option<&[DocIdx]>, k: usize| match ranked.map(|r| precision_at_k(&ids(r), truth, k)) {
        None => "-".to_string(),
        Some(Ok(p)) => format!("{p:.3}"),
        Some(Err(_)) => "n/a".into(),
    };
    let rec = |ranked: Option<&[DocIdx]>, k: usize| match ranked.map(|r| recall_at_k(&ids(r), truth, k, positives)) {
        None => "-".to_string(),
        Some(Ok(p)) => format!("{p:.3}"),
        Some(Err(_)) => "n/a".into(),
    };
    say!(out, "precision@k for {cat} ({positives} positives in corpus)");
    say!(out, "  {:>4} {:>8} {:>8} {:>14} {:>10} {:>10}", "k", "lexical", "dense", "fused (n)", "recall_lex", "recall_vec");
    for &k in &cfg.search_depths {
        let fused_cell = match (&lex, &dense) {
            (Some(l), Some(v)) => {
                let fused = fuse_prefixes(&l[..k.min(l.len())], &v[..k.min(v.len())]);
                format!("{} ({})", prec(Some(&fused), k), fused.len())
            }
            _ => "-".into(),
        };
        say!(
            out,
            "  {:>4} {:>8} {:>8} {:>14} {:>10} {:>10}",
            k,
            prec(lex.as_deref(), k),
            prec(dense.as_deref(), k),
            fused_cell,
            rec(lex.as_deref(), k),
            rec(dense.as_deref(), k)
        );
    }
    Ok(())
}

struct LabeledDoc(DocIdx);

impl std::fmt::Display for LabeledDoc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "#{}", self.0)
    }
}

pub fn suggest(cfg: &Config, only: &[String], out: &mut dyn Write) -> Result<()> {
    let corpus = load_input_corpus(cfg)?;
    let cats = categories(cfg, &corpus, None);
    let chosen: Vec<String> = if only.is_empty() { cats.clone() } else { only.to_vec() };
    let mut suggestions = Vec::new();
    for c in &chosen {
        check_category(c, &cats)?;
        let s = suggestion_for(cfg, &corpus, c)?;
        say!(out, "[{c}]");
        for (t, score) in &s.ranked_terms {
            say!(out, "  {t} {score:.6}");
        }
        suggestions.push(s);
    }
    let path = out_path(cfg, "queries.txt");
    write_queries(&path, &QueryFile::from_suggestions(&suggestions))?;
    write_snapshot(cfg)?;
    say!(out, "wrote {}", path.display());
    Ok(())
}

/// Binding query for a category: the reviewed file when configured, otherwise
/// the automatic suggestion.
fn binding_query(cfg: &Config, corpus: &Corpus, category: &str) -> Result<Vec<String>> {
    match cfg.paths.queries.as_deref() {
        Some(p) => Ok(normalize_terms(corpus, read_queries(p)?.terms_for(category, p)?)),
        None => {
            let s = suggestion_for(cfg, corpus, category)?;
            Ok(pick_query_terms(&s, cfg.campaign.query_terms, cfg.campaign.query_min_ratio))
        }
    }
}

/// Corpus records with the state's labels merged in.
fn records_with_labels(corpus: &Corpus, state: &CampaignState) -> Vec<Record> {
    let mut recs = corpus.to_records();
    for (&d, labels) in state.labels() {
        for (c, &l) in labels {
            recs[d].labels.insert(c.clone(), i64::from(l));
        }
    }
    recs
}

pub fn select(cfg: &Config, category: &str, round: usize, out: &mut dyn Write) -> Result<()> {
    let corpus = load_input_corpus(cfg)?;
    let oracle = load_oracle(cfg)?;
    let cats = categories(cfg, &corpus, oracle.as_ref());
    check_category(category, &cats)?;
    let query = binding_query(cfg, &corpus, category)?;
    let idx = InvertedIndex::build(&corpus, cfg.bm25);
    let dense = dense_leg(cfg, &corpus, out)?;
    let retrieval = Retrieval { corpus: &corpus, index: &idx, vectors: &dense.vectors, encoder: &dense.encoder };
    let mut state = CampaignState::new(&corpus, &cats, cfg.campaign.budget);
    let camp = cfg.campaign_config();
    let cap = camp.cap.at(round).min(state.budget_remaining());
    let batch = select_batch(&state, &retrieval, category, &query, camp.k_lex.at(round), camp.k_vec.at(round), cap)?;
    say!(out, "query: {}", query.join(" "));
    say!(
        out,
        "lexical {} / dense {} / fused {} (cap {cap})",
        batch.lexical.len(),
        batch.dense.len(),
        batch.fused.len()
    );
    for (r, &d) in batch.fused.iter().enumerate() {
        say!(out, "  {:>3} {}", r + 1, corpus.doc(d).id);
    }
    write_snapshot(cfg)?;
    match cfg.campaign.annotation {
        AnnotationMode::File => {
            let path = out_path(cfg, "pending.jsonl");
            write_pending(&path, &corpus, category, &batch.fused)?;
            say!(out, "wrote {}", path.display());
        }
        AnnotationMode::Oracle => {
            let oracle = oracle.ok_or_else(|| CliError::Usage("paths.oracle is not set".into()))?;
            let got = annotate(&mut state, &corpus, &batch.fused, category, &oracle)?;
            let pos = got.iter().filter(|g| g.1 == 1).count();
            say!(out, "annotated {} ({pos} positive); budget left {}", got.len(), state.budget_remaining());
            let path = out_path(cfg, "corpus.jsonl");
            write_records(&path, &records_with_labels(&corpus, &state))?;
            say!(out, "wrote {}", path.display());
        }
    }
    Ok(())
}

pub fn import(cfg: &Config, pending: &Path, labels: &Path, out: &mut dyn Write) -> Result<()> {
    let corpus = load_input_corpus(cfg)?;
    let batch = read_pending(pending)?;
    let records = read_labels(labels)?;
    let mut cats = categories(cfg, &corpus, None);
    if cfg.categories.is_empty() {
        for (_, r) in &records {
            if !cats.contains(&r.category) {
                cats.push(r.category.clone());
            }
        }
    }
    let mut state = CampaignState::new(&corpus, &cats, cfg.campaign.budget);
    let line_of = |id: &str| records.iter().find(|r| r.1.id == id).map(|r| r.0);
    let added = apply_import(&mut state, &corpus, &batch, &imported_labels(&records)).map_err(|e| {
        let id = match &e {
            cueselect_core::Error::NotPending { id }
            | cueselect_core::Error::InvalidLabel { id, .. }
            | cueselect_core::Error::InvalidId { id } => Some(id.clone()),
            _ => None,
        };
        match id.and_then(|id| line_of(&id)) {
            Some(line) => CliError::format(labels, Some(line), e.to_string()),
            None => CliError::Core(e),
        }
    })?;
    let path = out_path(cfg, "corpus.jsonl");
    write_records(&path, &records_with_labels(&corpus, &state))?;
    write_snapshot(cfg)?;
    say!(out, "imported labels for {} documents", added.len());
    say!(out, "wrote {}", path.display());
    Ok(())
}

fn split_for(cfg: &Config, corpus: &Corpus, category: &str) -> Result<(Vec<(DocIdx, u8)>, cueselect_core::classify::Split)> {
    let labeled = labeled_for(corpus, category);
    if labeled.is_empty() {
        return Err(CliError::Usage(format!("no labeled documents for category \"{category}\"")));
    }
    let labels: Vec<u8> = labeled.iter().map(|l| l.1).collect();
    let parts = split(&labels, &cfg.split)?;
    Ok((labeled, parts))
}

fn pick(labeled: &[(DocIdx, u8)], idx: &[usize]) -> Vec<(DocIdx, u8)> {
    idx.iter().map(|&i| labeled[i]).collect()
}

fn eval_on(cfg: &Config, corpus: &Corpus, model: &LinearModel, docs: &[(DocIdx, u8)]) -> Result<EvalReport> {
    let test: Vec<_> = docs.iter().map(|&(d, y)| (corpus.features(d), y)).collect();
    Ok(evaluate(model, &test, cfg.threshold)?)
}

pub fn train(cfg: &Config, category: &str, out: &mut dyn Write) -> Result<()> {
    let corpus = load_input_corpus(cfg)?;
    let (labeled, parts) = split_for(cfg, &corpus, category)?;
    let model = train_on(cfg, &corpus, category, &pick(&labeled, &parts.train))?;
    say!(out, "trained {category} on {} documents ({} features)", parts.train.len(), model.dim());
    if !parts.val.is_empty() {
        print_eval(out, "validation", &eval_on(cfg, &corpus, &model, &pick(&labeled, &parts.val))?)?;
    }
    print_eval(out, "test", &eval_on(cfg, &corpus, &model, &pick(&labeled, &parts.test))?)?;
    let path = out_path(cfg, &format!("{category}.model"));
    write_model(&path, &model)?;
    write_snapshot(cfg)?;
    say!(out, "wrote {}", path.display());
    Ok(())
}

pub fn eval(cfg: &Config, category: &str, out: &mut dyn Write) -> Result<()> {
    let corpus = load_input_corpus(cfg)?;
    let path = cfg.paths.model.clone().unwrap_or_else(|| out_path(cfg, &format!("{category}.model")));
    let model = read_model(&path)?;
    if model.category != category {
        return Err(CliError::Usage(format!("{} holds a model for \"{}\"", path.display(), model.category)));
    }
    if model.dim() != corpus.vocab().len() {
        return Err(CliError::format(
            &path,
            None,
            format!("model has {} features but the corpus vocabulary has {}", model.dim(), corpus.vocab().len()),
        ));
    }
    let (labeled, parts) = split_for(cfg, &corpus, category)?;
    print_eval(out, "test", &eval_on(cfg, &corpus, &model, &pick(&labeled, &parts.test))?)?;
    Ok(())
}

pub fn campaign(cfg: &Config, out: &mut dyn Write) -> Result<()> {
    let corpus = load_input_corpus(cfg)?;
    let oracle = load_oracle(cfg)?.ok_or_else(|| CliError::Usage("paths.oracle is not set".into()))?;
    let cats = categories(cfg, &corpus, Some(&oracle));
    let mut camp = cfg.campaign_config();
    if let Some(p) = cfg.paths.queries.as_deref() {
        let file = read_queries(p)?;
        for c in &cats {
            if file.queries.contains_key(c) {
                camp.fixed_queries.insert(c.clone(), normalize_terms(&corpus, file.terms_for(c, p)?));
            }
        }
    }
    let idx = InvertedIndex::build(&corpus, cfg.bm25);
    let dense = dense_leg(cfg, &corpus, out)?;
    let retrieval = Retrieval { corpus: &corpus, index: &idx, vectors: &dense.vectors, encoder: &dense.encoder };
    let report = run_campaign(&corpus, &oracle, &cats, &retrieval, &camp)?;

    let csv = campaign_csv(&report)?;
    let summary = summary_table(&report);
    let mut log = String::new();
    for r in &report.rounds {
        log.push_str(&format!(
            "round {} {}: query [{}] lexical {} dense {} fused {} annotated {} positive {}\n",
            r.round,
            r.category,
            r.query.join(" "),
            r.lexical.len(),
            r.dense.len(),
            r.fused.len(),
            r.annotated.len(),
            r.annotated.iter().filter(|a| a.1 == 1).count()
        ));
    }
    write_bytes(&out_path(cfg, "campaign.csv"), &csv)?;
    write_bytes(&out_path(cfg, "summary.txt"), summary.as_bytes())?;
    write_bytes(&out_path(cfg, "rounds.txt"), log.as_bytes())?;
    write_snapshot(cfg)?;
    say!(out, "test split: {} documents; budget used {} of {}", report.test_docs.len(), report.initial_budget - report.budget_remaining, report.initial_budget);
    out.write_all(log.as_bytes()).map_err(io_err)?;
    out.write_all(summary.as_bytes()).map_err(io_err)?;
    say!(out, "wrote {}", out_path(cfg, "campaign.csv").display());
    Ok(())
}
