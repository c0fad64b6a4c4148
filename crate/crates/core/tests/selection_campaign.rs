use std::collections::{BTreeMap, BTreeSet};

use cueselect_core::selection::{
    annotate, apply_import, fuse_prefixes, random_baseline_batch, select_batch, Arm, PendingBatch,
    ProviderEncoder, Retrieval,
};
use cueselect_core::{
    fuse_topk, generate, hold_out_truth, run_campaign, Bm25Params, CampaignConfig, CampaignState, CategorySpec,
    Corpus, EmbeddingMatrix, Error, GeneratorConfig, HashEmbedder, InvertedIndex, TruthTable,
};
use proptest::prelude::*;

struct Fixture {
    corpus: Corpus,
    index: InvertedIndex,
    vectors: EmbeddingMatrix,
    embedder: HashEmbedder,
}

impl Fixture {
    fn new(corpus: Corpus) -> Self {
        let embedder = HashEmbedder::new(256, 7).unwrap();
        let index = InvertedIndex::build(&corpus, Bm25Params::default());
        let vectors = EmbeddingMatrix::from_corpus(&corpus, &embedder).unwrap();
        Fixture { corpus, index, vectors, embedder }
    }
}

fn with_retrieval<R>(f: &Fixture, run: impl FnOnce(&Retrieval<'_>) -> R) -> R {
    let encoder = ProviderEncoder(&f.embedder);
    run(&Retrieval { corpus: &f.corpus, index: &f.index, vectors: &f.vectors, encoder: &encoder })
}

fn cats(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn terms(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

#[test]
fn fusion_examples() {
    assert_eq!(fuse_topk(&["a", "b", "c"], &["c", "a", "d"], 3), vec!["a", "c"]);
    assert!(fuse_topk(&["a", "b"], &["c", "d"], 2).is_empty());
    assert_eq!(fuse_topk(&["x", "y", "z"], &["x", "y", "z"], 3), vec!["x", "y", "z"]);
    assert_eq!(fuse_topk(&["a", "b", "c"], &["c", "b", "a"], 2), vec!["b"]);
}

proptest! {
    #[test]
    fn fusion_is_subset_of_both_prefixes(
        lex in prop::sample::subsequence((0u8..40).collect::<Vec<_>>(), 0..40).prop_shuffle(),
        vec in prop::sample::subsequence((0u8..40).collect::<Vec<_>>(), 0..40).prop_shuffle(),
        k in 1usize..40,
    ) {
        let fused = fuse_topk(&lex, &vec, k);
        let lp: BTreeSet<_> = lex.iter().take(k).collect();
        let vp: BTreeSet<_> = vec.iter().take(k).collect();
        prop_assert!(fused.len() <= k.min(lex.len()).min(vec.len()));
        prop_assert_eq!(fused.iter().collect::<BTreeSet<_>>(), lp.intersection(&vp).cloned().collect());
        let sums: Vec<usize> = fused
            .iter()
            .map(|id| lex.iter().position(|x| x == id).unwrap() + vec.iter().position(|x| x == id).unwrap())
            .collect();
        prop_assert!(sums.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(fuse_prefixes(&lex[..k.min(lex.len())], &vec[..k.min(vec.len())]), fused);
    }
}

fn small_corpus() -> Corpus {
    generate(&GeneratorConfig { n_docs: 300, ..GeneratorConfig::default() }).unwrap()
}

/// Keeps labels everywhere except on `pool`.
fn open_pool(c: &Corpus, pool: &BTreeSet<usize>) -> Corpus {
    c.relabel(|i, d| if pool.contains(&i) { BTreeMap::new() } else { d.labels.clone() })
}

#[test]
fn exactly_seven_matching_docs_give_batch_of_seven() {
    let full = small_corpus();
    let with_gym: Vec<usize> = (0..full.len()).filter(|&d| full.doc(d).tokens.iter().any(|t| t == "gym")).collect();
    let without: Vec<usize> = (0..full.len()).filter(|d| !with_gym.contains(d)).collect();
    let pool: BTreeSet<usize> = with_gym[..7].iter().chain(&without[..30]).copied().collect();
    let f = Fixture::new(open_pool(&full, &pool));
    let state = CampaignState::new(&f.corpus, &cats(&["health"]), 100);
    assert_eq!(state.pool(), &pool);
    with_retrieval(&f, |r| {
        let q = terms("gym");
        let b = select_batch(&state, r, "health", &q, 80, 80, 50).unwrap();
        assert_eq!(b.lexical.len(), 7);
        assert_eq!(b.fused.iter().collect::<BTreeSet<_>>(), with_gym[..7].iter().collect());
        assert!(b.fused.iter().all(|d| state.in_pool(*d)));
        let capped = select_batch(&state, r, "health", &q, 80, 80, 5).unwrap();
        assert_eq!(capped.fused, b.fused[..5]);
        let none = select_batch(&state, r, "health", &terms("zzzz"), 80, 80, 5).unwrap();
        assert!(none.lexical.is_empty() && none.fused.is_empty());
        assert!(select_batch(&state, r, "health", &q, 80, 80, 0).unwrap().fused.is_empty());
        assert!(matches!(select_batch(&state, r, "health", &[], 80, 80, 5), Err(Error::EmptyQuery)));
        assert!(select_batch(&state, r, "nope", &q, 80, 80, 5).is_err());
        assert!(matches!(
            select_batch(&state, r, "health", &q, 80, 80, 101),
            Err(Error::BudgetExceeded { .. })
        ));
        let empty = CampaignState::new(&f.corpus, &cats(&["health"]), 0);
        assert!(matches!(select_batch(&empty, r, "health", &q, 80, 80, 0), Err(Error::ZeroBudget)));
    });
}

#[test]
fn selection_is_repeatable_without_annotation() {
    let full = small_corpus();
    let f = Fixture::new(open_pool(&full, &(100..300).collect()));
    let state = CampaignState::new(&f.corpus, &cats(&["health"]), 500);
    with_retrieval(&f, |r| {
        let q = terms("health weight gym exercise");
        let a = select_batch(&state, r, "health", &q, 80, 80, 50).unwrap();
        assert_eq!(a, select_batch(&state, r, "health", &q, 80, 80, 50).unwrap());
        assert!(!a.fused.is_empty());
    });
}

#[test]
fn annotation_bookkeeping() {
    let full = small_corpus();
    let truth = TruthTable::from_corpus(&full);
    let c = open_pool(&full, &(100..300).collect());
    let categories = cats(&["alone", "friends", "health"]);
    let mut state = CampaignState::new(&c, &categories, 60);
    assert_eq!((state.n_labeled(), state.pool().len()), (100, 200));

    assert!(annotate(&mut state, &c, &[], "health", &truth).unwrap().is_empty());
    assert_eq!(state.budget_remaining(), 60);

    let batch: Vec<usize> = (100..125).collect();
    let got = annotate(&mut state, &c, &batch, "health", &truth).unwrap();
    assert_eq!(got.len(), 25);
    assert_eq!((state.n_labeled(), state.pool().len(), state.budget_remaining()), (125, 175, 35));
    for &d in &batch {
        assert_eq!(state.labels()[&d].len(), 3, "every category is labeled");
    }
    state.check_invariants(c.len()).unwrap();

    assert!(annotate(&mut state, &c, &[100], "health", &truth).is_err(), "annotated twice");
    assert!(annotate(&mut state, &c, &(200..240).collect::<Vec<_>>(), "health", &truth).is_err());
    assert!(matches!(
        annotate(&mut state, &c, &[250], "health", &TruthTable::default()),
        Err(Error::OracleMiss { .. })
    ));
    assert_eq!(state.budget_remaining(), 35, "failed calls leave the state alone");
    assert_eq!(state.initial_budget() - state.annotated_total(), state.budget_remaining());
}

#[test]
fn import_rejects_ids_outside_the_pending_set() {
    let full = small_corpus();
    let c = open_pool(&full, &(100..300).collect());
    let mut state = CampaignState::new(&c, &cats(&["health"]), 50);
    let pending = PendingBatch { category: "health".into(), ids: vec![c.doc(150).id.clone()] };
    let stray = c.doc(151).id.clone();
    let err = apply_import(&mut state, &c, &pending, &[(stray.clone(), "health".into(), 1)]).unwrap_err();
    assert!(err.to_string().contains(&stray), "{err}");
    assert!(apply_import(&mut state, &c, &pending, &[(c.doc(150).id.clone(), "health".into(), 3)]).is_err());
    assert_eq!(state.budget_remaining(), 50);
    let ok = apply_import(&mut state, &c, &pending, &[(c.doc(150).id.clone(), "health".into(), 1)]).unwrap();
    assert_eq!(ok, vec![150]);
    assert_eq!(state.budget_remaining(), 49);
}

#[test]
fn random_batches() {
    let cfg = GeneratorConfig {
        categories: vec![CategorySpec::new("rare", 0.05, &["rare"])],
        ..GeneratorConfig::default()
    };
    let full = generate(&cfg).unwrap();
    let c = open_pool(&full, &(0..full.len()).collect());
    let state = CampaignState::new(&c, &cats(&["rare"]), 5000);
    let mut total = 0;
    for seed in 0..200 {
        let batch = random_baseline_batch(&state, 50, seed);
        assert_eq!(batch.len(), 50);
        assert_eq!(batch.iter().collect::<BTreeSet<_>>().len(), 50);
        total += batch.iter().filter(|&&d| full.doc(d).label("rare") == Some(1)).count();
    }
    let mean = total as f64 / 200.0;
    assert!((mean - 2.5).abs() <= 1.0, "mean positives {mean}");
    assert_eq!(random_baseline_batch(&state, 50, 9), random_baseline_batch(&state, 50, 9));
    assert_eq!(random_baseline_batch(&state, 9000, 9).len(), 5000);
}

fn campaign_fixture() -> (Fixture, TruthTable) {
    let full = generate(&GeneratorConfig { n_docs: 1500, ..GeneratorConfig::default() }).unwrap();
    let (visible, oracle) = hold_out_truth(&full, 0.2, 5).unwrap();
    (Fixture::new(visible), oracle)
}

#[test]
fn campaign_contract() {
    let (f, oracle) = campaign_fixture();
    let categories = cats(&["alone", "friends", "health"]);
    let config = CampaignConfig { rounds: 2, budget: 250, ..CampaignConfig::default() };
    let report = with_retrieval(&f, |r| run_campaign(&f.corpus, &oracle, &categories, r, &config)).unwrap();
    let again = with_retrieval(&f, |r| run_campaign(&f.corpus, &oracle, &categories, r, &config)).unwrap();
    assert_eq!(report, again);

    assert_eq!(report.rows.len(), 3 * 2 * 3);
    let test: BTreeSet<usize> = report.test_docs.iter().copied().collect();
    let mut seen = BTreeSet::new();
    let mut annotated = 0;
    for round in &report.rounds {
        assert!(round.fused.len() <= round.k_lex.min(round.k_vec));
        let lex: BTreeSet<_> = round.lexical.iter().collect();
        let dense: BTreeSet<_> = round.dense.iter().collect();
        for d in &round.fused {
            assert!(lex.contains(d) && dense.contains(d));
            assert!(!test.contains(d), "test split annexed");
            assert!(seen.insert(*d), "document {d} annotated twice");
            assert!(f.corpus.doc(*d).labels.is_empty(), "initially labeled doc reselected");
        }
        annotated += round.annotated.len();
    }
    assert_eq!(report.initial_budget - annotated, report.budget_remaining);
    for cat in &categories {
        let base = report.row(0, cat, Arm::Fused).unwrap();
        assert_eq!(base.report.n_test, test.len());
        assert_eq!(base.precision_at_k, None);
        for round in 1..=2 {
            let fused = report.row(round, cat, Arm::Fused).unwrap();
            let random = report.row(round, cat, Arm::Random).unwrap();
            assert_eq!(fused.report.n_test, test.len());
            assert_eq!(fused.batch_size, random.batch_size);
            assert_eq!(fused.n_labeled, random.n_labeled);
        }
    }
}

#[test]
fn campaign_with_zero_rounds_reports_baseline_only() {
    let (f, oracle) = campaign_fixture();
    let categories = cats(&["health"]);
    let config = CampaignConfig { rounds: 0, ..CampaignConfig::default() };
    let report = with_retrieval(&f, |r| run_campaign(&f.corpus, &oracle, &categories, r, &config)).unwrap();
    assert!(report.rows.iter().all(|r| r.round == 0));
    assert!(report.rounds.is_empty());
    assert_eq!(report.budget_remaining, report.initial_budget);
}

#[test]
fn campaign_needs_initial_labels() {
    let (f, oracle) = campaign_fixture();
    let config = CampaignConfig::default();
    let err = with_retrieval(&f, |r| run_campaign(&f.corpus, &oracle, &cats(&["unheard"]), r, &config));
    assert!(err.is_err());
    assert!(with_retrieval(&f, |r| run_campaign(&f.corpus, &oracle, &[], r, &config)).is_err());
}
