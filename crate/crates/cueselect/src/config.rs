//! Run configuration.
//!
//! The file format is an indented key-value text:
//!
//! ```text
//! # comment
//! campaign:
//!   rounds = 2
//!   cap = 50
//! ```
//!
//! Every key can also be overridden on the command line as
//! `--section.key value`. Unknown sections and keys are errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cueselect_core::classify::DEFAULT_THRESHOLD;
use cueselect_core::corpus::{CorpusConfig, Stemmer};
use cueselect_core::selection::Schedule;
use cueselect_core::vecindex::DEFAULT_DIM;
use cueselect_core::{
    Bm25Params, CampaignConfig, CategorySpec, GeneratorConfig, HashEmbedder, Loss, SplitSpec,
    TokenizerConfig, TrainConfig,
};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provider {
    Hash,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnotationMode {
    Oracle,
    File,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub oracle: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub query_embeddings: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSettings {
    pub rounds: usize,
    pub k_lex: Vec<usize>,
    pub k_vec: Vec<usize>,
    pub cap: Vec<usize>,
    pub budget: usize,
    pub seed: u64,
    pub test_fraction: f64,
    pub top_m: usize,
    pub query_terms: usize,
    pub query_min_ratio: f64,
    pub annotation: AnnotationMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSettings {
    pub n_docs: usize,
    pub seed: u64,
    pub background_vocab: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub leak: f64,
    pub p_plant: f64,
    pub categories: Vec<String>,
    pub prevalence: Vec<f64>,
    pub planted: Vec<Vec<String>>,
    pub visible_fraction: f64,
    pub holdout_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub paths: Paths,
    /// Categories to keep from corpus labels; empty keeps all.
    pub categories: Vec<String>,
    pub min_df: u32,
    pub tokenizer: TokenizerConfig,
    pub bm25: Bm25Params,
    pub provider: Provider,
    pub embedding_dim: usize,
    pub embedding_seed: u64,
    pub train: TrainConfig,
    pub threshold: f64,
    pub split: SplitSpec,
    pub search_k: usize,
    pub search_depths: Vec<usize>,
    pub campaign: CampaignSettings,
    pub generator: GeneratorSettings,
}

impl Default for Config {
    fn default() -> Self {
        let gen = GeneratorConfig::default();
        let camp = CampaignConfig::default();
        Config {
            paths: Paths { out_dir: PathBuf::from("out"), ..Paths::default() },
            categories: Vec::new(),
            min_df: 1,
            tokenizer: TokenizerConfig::default(),
            bm25: Bm25Params::default(),
            provider: Provider::Hash,
            embedding_dim: DEFAULT_DIM,
            embedding_seed: 7,
            train: TrainConfig::default(),
            threshold: DEFAULT_THRESHOLD,
            split: SplitSpec::default(),
            search_k: 80,
            search_depths: vec![20, 40, 60, 80],
            campaign: CampaignSettings {
                rounds: camp.rounds,
                k_lex: camp.k_lex.0,
                k_vec: camp.k_vec.0,
                cap: camp.cap.0,
                budget: camp.budget,
                seed: camp.seed,
                test_fraction: camp.test_fraction,
                top_m: camp.top_m,
                query_terms: camp.query_max_terms,
                query_min_ratio: camp.query_min_ratio,
                annotation: AnnotationMode::Oracle,
            },
            generator: GeneratorSettings {
                n_docs: gen.n_docs,
                seed: gen.seed,
                background_vocab: gen.background_vocab,
                min_len: gen.min_len,
                max_len: gen.max_len,
                leak: gen.leak,
                p_plant: gen.categories[0].p_plant,
                categories: gen.category_names(),
                prevalence: gen.categories.iter().map(|c| c.prevalence).collect(),
                planted: gen.categories.iter().map(|c| c.planted.clone()).collect(),
                visible_fraction: 0.32,
                holdout_seed: 5,
            },
        }
    }
}

const SECTIONS: [&str; 10] =
    ["paths", "corpus", "tokenizer", "bm25", "embedding", "classifier", "split", "search", "campaign", "generator"];

/// Every configuration key with a short description.
pub const KEYS: &[(&str, &str)] = &[
    ("paths.corpus", "corpus JSON Lines file"),
    ("paths.oracle", "ground-truth labels for simulated annotation (JSON Lines)"),
    ("paths.embeddings", "document embedding file (embedding.provider = file)"),
    ("paths.query_embeddings", "query embedding file keyed by category (embedding.provider = file)"),
    ("paths.queries", "reviewed query file; overrides automatic suggestions"),
    ("paths.model", "model file for eval (default <out_dir>/<category>.model)"),
    ("paths.out_dir", "directory for all outputs"),
    ("corpus.categories", "comma-separated categories to keep; empty keeps all"),
    ("corpus.min_df", "drop terms occurring in fewer documents"),
    ("tokenizer.remove_stopwords", "remove a small English stopword list"),
    ("tokenizer.stemmer", "none | plural"),
    ("bm25.k1", "term-frequency saturation"),
    ("bm25.b", "length normalization"),
    ("embedding.provider", "hash | file"),
    ("embedding.dim", "hash embedding dimension"),
    ("embedding.seed", "hash embedding seed"),
    ("classifier.loss", "logistic | hinge"),
    ("classifier.epochs", "SGD epochs"),
    ("classifier.learning_rate", "initial step size, decayed by 1/sqrt(epoch)"),
    ("classifier.l2", "L2 penalty"),
    ("classifier.seed", "shuffling seed"),
    ("classifier.threshold", "probability threshold for label 1"),
    ("split.train", "train ratio"),
    ("split.val", "validation ratio"),
    ("split.test", "test ratio"),
    ("split.seed", "split seed"),
    ("split.stratified", "stratify by label"),
    ("search.k", "result depth per leg"),
    ("search.depths", "comma-separated depths for precision@k"),
    ("campaign.rounds", "selection rounds"),
    ("campaign.k_lex", "lexical depth per round (comma list, last repeats)"),
    ("campaign.k_vec", "dense depth per round (comma list, last repeats)"),
    ("campaign.cap", "batch cap per round and category (comma list, last repeats)"),
    ("campaign.budget", "total annotation budget"),
    ("campaign.seed", "campaign seed"),
    ("campaign.test_fraction", "share of unlabeled documents frozen as the test split"),
    ("campaign.top_m", "suggested terms per category"),
    ("campaign.query_terms", "maximum suggested terms used as the query"),
    ("campaign.query_min_ratio", "keep suggested terms scoring at least this share of the best"),
    ("campaign.annotation", "select: oracle | file"),
    ("generator.n_docs", "documents"),
    ("generator.seed", "generator seed"),
    ("generator.background_vocab", "background vocabulary size"),
    ("generator.min_len", "minimum background tokens per document"),
    ("generator.max_len", "maximum background tokens per document"),
    ("generator.leak", "planted-term probability in negative documents"),
    ("generator.p_plant", "planted-term probability in positive documents"),
    ("generator.categories", "comma-separated category names"),
    ("generator.prevalence", "comma-separated prevalence per category"),
    ("generator.planted", "comma-separated planted terms per category (space-separated within)"),
    ("generator.visible_fraction", "share of documents whose labels stay visible"),
    ("generator.holdout_seed", "seed for choosing visible documents"),
];

fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("invalid value \"{v}\" for {key}"))
}

fn flag(key: &str, v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("invalid value \"{v}\" for {key} (expected true or false)")),
    }
}

fn list<T: FromStr>(key: &str, v: &str) -> std::result::Result<Vec<T>, String> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| num(key, s.trim())).collect()
}

fn path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn float(x: f64) -> String {
    format!("{x:?}")
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl Config {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let g = &mut self.generator;
        let c = &mut self.campaign;
        match key {
            "paths.corpus" => self.paths.corpus = path(v),
            "paths.oracle" => self.paths.oracle = path(v),
            "paths.embeddings" => self.paths.embeddings = path(v),
            "paths.query_embeddings" => self.paths.query_embeddings = path(v),
            "paths.queries" => self.paths.queries = path(v),
            "paths.model" => self.paths.model = path(v),
            "paths.out_dir" => self.paths.out_dir = path(v).ok_or("paths.out_dir cannot be empty")?,
            "corpus.categories" => self.categories = list(key, v)?,
            "corpus.min_df" => self.min_df = num(key, v)?,
            "tokenizer.remove_stopwords" => self.tokenizer.remove_stopwords = flag(key, v)?,
            "tokenizer.stemmer" => {
                self.tokenizer.stemmer = match v {
                    "none" => Stemmer::None,
                    "plural" => Stemmer::Plural,
                    _ => return Err(format!("invalid value \"{v}\" for {key} (expected none or plural)")),
                }
            }
            "bm25.k1" => self.bm25.k1 = num(key, v)?,
            "bm25.b" => self.bm25.b = num(key, v)?,
            "embedding.provider" => {
                self.provider = match v {
                    "hash" => Provider::Hash,
                    "file" => Provider::File,
                    _ => return Err(format!("invalid value \"{v}\" for {key} (expected hash or file)")),
                }
            }
            "embedding.dim" => self.embedding_dim = num(key, v)?,
            "embedding.seed" => self.embedding_seed = num(key, v)?,
            "classifier.loss" => {
                self.train.loss = match v {
                    "logistic" => Loss::Logistic,
                    "hinge" => Loss::Hinge,
                    _ => return Err(format!("invalid value \"{v}\" for {key} (expected logistic or hinge)")),
                }
            }
            "classifier.epochs" => self.train.epochs = num(key, v)?,
            "classifier.learning_rate" => self.train.learning_rate = num(key, v)?,
            "classifier.l2" => self.train.l2 = num(key, v)?,
            "classifier.seed" => self.train.seed = num(key, v)?,
            "classifier.threshold" => self.threshold = num(key, v)?,
            "split.train" => self.split.train = num(key, v)?,
            "split.val" => self.split.val = num(key, v)?,
            "split.test" => self.split.test = num(key, v)?,
            "split.seed" => self.split.seed = num(key, v)?,
            "split.stratified" => self.split.stratified = flag(key, v)?,
            "search.k" => self.search_k = num(key, v)?,
            "search.depths" => self.search_depths = list(key, v)?,
            "campaign.rounds" => c.rounds = num(key, v)?,
            "campaign.k_lex" => c.k_lex = list(key, v)?,
            "campaign.k_vec" => c.k_vec = list(key, v)?,
            "campaign.cap" => c.cap = list(key, v)?,
            "campaign.budget" => c.budget = num(key, v)?,
            "campaign.seed" => c.seed = num(key, v)?,
            "campaign.test_fraction" => c.test_fraction = num(key, v)?,
            "campaign.top_m" => c.top_m = num(key, v)?,
            "campaign.query_terms" => c.query_terms = num(key, v)?,
            "campaign.query_min_ratio" => c.query_min_ratio = num(key, v)?,
            "campaign.annotation" => {
                c.annotation = match v {
                    "oracle" => AnnotationMode::Oracle,
                    "file" => AnnotationMode::File,
                    _ => return Err(format!("invalid value \"{v}\" for {key} (expected oracle or file)")),
                }
            }
            "generator.n_docs" => g.n_docs = num(key, v)?,
            "generator.seed" => g.seed = num(key, v)?,
            "generator.background_vocab" => g.background_vocab = num(key, v)?,
            "generator.min_len" => g.min_len = num(key, v)?,
            "generator.max_len" => g.max_len = num(key, v)?,
            "generator.leak" => g.leak = num(key, v)?,
            "generator.p_plant" => g.p_plant = num(key, v)?,
            "generator.categories" => g.categories = list(key, v)?,
            "generator.prevalence" => g.prevalence = list(key, v)?,
            "generator.planted" => {
                g.planted = if v.is_empty() {
                    Vec::new()
                } else {
                    v.split(',').map(|s| s.split_whitespace().map(String::from).collect()).collect()
                }
            }
            "generator.visible_fraction" => g.visible_fraction = num(key, v)?,
            "generator.holdout_seed" => g.holdout_seed = num(key, v)?,
            _ => return Err(format!("unknown configuration key \"{key}\"")),
        }
        Ok(())
    }

    /// Textual value of a key in the form accepted by [`set`](Self::set).
    pub fn get(&self, key: &str) -> Option<String> {
        let g = &self.generator;
        let c = &self.campaign;
        let v = match key {
            "paths.corpus" => show_path(&self.paths.corpus),
            "paths.oracle" => show_path(&self.paths.oracle),
            "paths.embeddings" => show_path(&self.paths.embeddings),
            "paths.query_embeddings" => show_path(&self.paths.query_embeddings),
            "paths.queries" => show_path(&self.paths.queries),
            "paths.model" => show_path(&self.paths.model),
            "paths.out_dir" => self.paths.out_dir.display().to_string(),
            "corpus.categories" => self.categories.join(","),
            "corpus.min_df" => self.min_df.to_string(),
            "tokenizer.remove_stopwords" => self.tokenizer.remove_stopwords.to_string(),
            "tokenizer.stemmer" => match self.tokenizer.stemmer {
                Stemmer::None => "none".into(),
                Stemmer::Plural => "plural".into(),
            },
            "bm25.k1" => float(self.bm25.k1),
            "bm25.b" => float(self.bm25.b),
            "embedding.provider" => match self.provider {
                Provider::Hash => "hash".into(),
                Provider::File => "file".into(),
            },
            "embedding.dim" => self.embedding_dim.to_string(),
            "embedding.seed" => self.embedding_seed.to_string(),
            "classifier.loss" => match self.train.loss {
                Loss::Logistic => "logistic".into(),
                Loss::Hinge => "hinge".into(),
            },
            "classifier.epochs" => self.train.epochs.to_string(),
            "classifier.learning_rate" => float(self.train.learning_rate),
            "classifier.l2" => float(self.train.l2),
            "classifier.seed" => self.train.seed.to_string(),
            "classifier.threshold" => float(self.threshold),
            "split.train" => float(self.split.train),
            "split.val" => float(self.split.val),
            "split.test" => float(self.split.test),
            "split.seed" => self.split.seed.to_string(),
            "split.stratified" => self.split.stratified.to_string(),
            "search.k" => self.search_k.to_string(),
            "search.depths" => join(&self.search_depths),
            "campaign.rounds" => c.rounds.to_string(),
            "campaign.k_lex" => join(&c.k_lex),
            "campaign.k_vec" => join(&c.k_vec),
            "campaign.cap" => join(&c.cap),
            "campaign.budget" => c.budget.to_string(),
            "campaign.seed" => c.seed.to_string(),
            "campaign.test_fraction" => float(c.test_fraction),
            "campaign.top_m" => c.top_m.to_string(),
            "campaign.query_terms" => c.query_terms.to_string(),
            "campaign.query_min_ratio" => float(c.query_min_ratio),
            "campaign.annotation" => match c.annotation {
                AnnotationMode::Oracle => "oracle".into(),
                AnnotationMode::File => "file".into(),
            },
            "generator.n_docs" => g.n_docs.to_string(),
            "generator.seed" => g.seed.to_string(),
            "generator.background_vocab" => g.background_vocab.to_string(),
            "generator.min_len" => g.min_len.to_string(),
            "generator.max_len" => g.max_len.to_string(),
            "generator.leak" => float(g.leak),
            "generator.p_plant" => float(g.p_plant),
            "generator.categories" => g.categories.join(","),
            "generator.prevalence" => join(&g.prevalence.iter().map(|p| float(*p)).collect::<Vec<_>>()),
            "generator.planted" => g.planted.iter().map(|t| t.join(" ")).collect::<Vec<_>>().join(","),
            "generator.visible_fraction" => float(g.visible_fraction),
            "generator.holdout_seed" => g.holdout_seed.to_string(),
            _ => return None,
        };
        Some(v)
    }

    /// Applies the contents of a configuration file on top of `self`.
    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<()> {
        let err = |line: usize, m: String| CliError::Usage(format!("{}:{line}: {m}", path.display()));
        let mut section: Option<&str> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.split('#').next().unwrap_or_default();
            if s.trim().is_empty() {
                continue;
            }
            let indented = s.starts_with([' ', '\t']);
            let s = s.trim();
            if !indented {
                if let Some(name) = s.strip_suffix(':') {
                    let name = name.trim();
                    section = Some(
                        SECTIONS
                            .iter()
                            .find(|&&x| x == name)
                            .ok_or_else(|| err(line, format!("unknown section \"{name}\"")))?,
                    );
                    continue;
                }
            }
            let (k, v) = s.split_once('=').ok_or_else(|| err(line, format!("expected \"key = value\", got \"{s}\"")))?;
            let k = k.trim();
            let key = match (indented, section) {
                (true, Some(sec)) => format!("{sec}.{k}"),
                (false, _) if k.contains('.') => k.to_string(),
                _ => return Err(err(line, format!("key \"{k}\" outside a section"))),
            };
            self.set(&key, v.trim()).map_err(|m| err(line, m))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Config::default();
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    /// Complete configuration in file syntax; parsing it reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for sec in SECTIONS {
            let _ = writeln!(s, "{sec}:");
            for (key, _) in KEYS.iter().filter(|(k, _)| k.split('.').next() == Some(sec)) {
                let name = &key[sec.len() + 1..];
                let _ = writeln!(s, "  {name} = {}", self.get(key).expect("registered key"));
            }
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Usage(m));
        self.split.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.generator_config()?.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if self.embedding_dim < 2 {
            return bad(format!("embedding.dim must be at least 2, got {}", self.embedding_dim));
        }
        if self.search_k == 0 || self.search_depths.contains(&0) {
            return bad("search depths must be positive".into());
        }
        let c = &self.campaign;
        for (name, sched) in [("k_lex", &c.k_lex), ("k_vec", &c.k_vec), ("cap", &c.cap)] {
            if sched.is_empty() {
                return bad(format!("campaign.{name} needs at least one value"));
            }
        }
        if c.k_lex.contains(&0) || c.k_vec.contains(&0) {
            return bad("campaign.k_lex and campaign.k_vec must be positive".into());
        }
        if !(c.test_fraction > 0.0 && c.test_fraction < 1.0) {
            return bad(format!("campaign.test_fraction must be in (0,1), got {}", c.test_fraction));
        }
        if !(0.0..=1.0).contains(&c.query_min_ratio) {
            return bad(format!("campaign.query_min_ratio must be in [0,1], got {}", c.query_min_ratio));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad(format!("classifier.threshold must be in (0,1), got {}", self.threshold));
        }
        if !(0.0..=1.0).contains(&self.generator.visible_fraction) {
            return bad("generator.visible_fraction must be in [0,1]".into());
        }
        if !(self.bm25.k1 >= 0.0 && (0.0..=1.0).contains(&self.bm25.b)) {
            return bad("bm25.k1 must be >= 0 and bm25.b in [0,1]".into());
        }
        if !(self.train.learning_rate > 0.0 && self.train.l2 >= 0.0) {
            return bad("classifier.learning_rate must be positive and classifier.l2 non-negative".into());
        }
        Ok(())
    }

    pub fn corpus_config(&self) -> CorpusConfig {
        CorpusConfig { tokenizer: self.tokenizer, min_df: self.min_df }
    }

    pub fn generator_config(&self) -> Result<GeneratorConfig> {
        let g = &self.generator;
        if g.prevalence.len() != g.categories.len() || g.planted.len() != g.categories.len() {
            return Err(CliError::Usage(
                "generator.categories, generator.prevalence and generator.planted must have equal lengths".into(),
            ));
        }
        let categories = g
            .categories
            .iter()
            .zip(&g.prevalence)
            .zip(&g.planted)
            .map(|((name, &prevalence), planted)| CategorySpec {
                name: name.clone(),
                prevalence,
                planted: planted.clone(),
                p_plant: g.p_plant,
            })
            .collect();
        Ok(GeneratorConfig {
            n_docs: g.n_docs,
            categories,
            leak: g.leak,
            background_vocab: g.background_vocab,
            min_len: g.min_len,
            max_len: g.max_len,
            seed: g.seed,
        })
    }

    pub fn embedder(&self) -> Result<HashEmbedder> {
        let mut e = HashEmbedder::new(self.embedding_dim, self.embedding_seed)?;
        e.tokenizer = self.tokenizer;
        Ok(e)
    }

    pub fn campaign_config(&self) -> CampaignConfig {
        let c = &self.campaign;
        CampaignConfig {
            rounds: c.rounds,
            k_lex: Schedule(c.k_lex.clone()),
            k_vec: Schedule(c.k_vec.clone()),
            cap: Schedule(c.cap.clone()),
            budget: c.budget,
            seed: c.seed,
            test_fraction: c.test_fraction,
            top_m: c.top_m,
            query_max_terms: c.query_terms,
            query_min_ratio: c.query_min_ratio,
            threshold: self.threshold,
            train: self.train,
            fixed_queries: Default::default(),
        }
    }
}

/// Help text listing every key with its default value.
pub fn keys_help() -> String {
    let d = Config::default();
    let width = KEYS.iter().map(|(k, _)| k.len() + d.get(k).map_or(0, |v| v.len())).max().unwrap_or(0) + 4;
    let mut s = String::from("Configuration keys (file sections or --section.key VALUE overrides):\n");
    for (key, help) in KEYS {
        let kv = format!("{key} = {}", d.get(key).expect("registered key"));
        let _ = writeln!(s, "  {kv:<width$}{help}");
    }
    s
}

/// A `(key, value)` override taken from the command line.
pub type Override = (String, String);

/// Splits `--section.key value` (or `--section.key=value`) overrides from the
/// remaining arguments.
pub fn split_overrides(args: Vec<String>) -> Result<(Vec<String>, Vec<Override>)> {
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        match a.strip_prefix("--").filter(|name| name.split('=').next().is_some_and(|n| n.contains('.'))) {
            Some(name) => {
                let (key, value) = match name.split_once('=') {
                    Some((k, v)) => (k.to_string(), v.to_string()),
                    None => {
                        let v = it.next().ok_or_else(|| CliError::Usage(format!("--{name} needs a value")))?;
                        (name.to_string(), v)
                    }
                };
                overrides.push((key, value));
            }
            None => rest.push(a),
        }
    }
    Ok((rest, overrides))
}
