//! Linear text classifier, dataset splitting and evaluation metrics.
//!
//! The classifier is a hyperplane over TF-IDF features trained by SGD with
//! either logistic or hinge loss and L2 regularization. Weight decay uses a
//! global scale factor so each step only touches the example's non-zero
//! features.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Display;

use rand::seq::SliceRandom;

use crate::corpus::SparseVec;
use crate::seed::{fnv1a, mix_seed, rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Loss {
    #[default]
    Logistic,
    Hinge,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Initial step size; epoch `t` (1-based) uses `learning_rate / sqrt(t)`.
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    pub loss: Loss,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 10, learning_rate: 0.1, l2: 1e-4, seed: 13, loss: Loss::Logistic }
    }
}

impl TrainConfig {
    /// Hash of every field, used in model fingerprints.
    pub fn fingerprint(&self) -> u64 {
        let s = format!(
            "{}|{:?}|{:?}|{}|{:?}",
            self.epochs,
            self.learning_rate.to_bits(),
            self.l2.to_bits(),
            self.seed,
            self.loss
        );
        fnv1a(s.as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Background feature means used as the attribution baseline.
    pub background_mean: Vec<f64>,
    pub category: String,
    pub fingerprint: u64,
}

impl LinearModel {
    pub fn zeros(dim: usize, category: &str) -> Self {
        LinearModel {
            weights: alloc::vec![0.0; dim],
            bias: 0.0,
            background_mean: alloc::vec![0.0; dim],
            category: category.into(),
            fingerprint: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn check_input(&self, x: &SparseVec) -> Result<()> {
        match x.max_index() {
            Some(i) if i as usize >= self.dim() => Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: i as usize + 1,
                row: None,
            }),
            _ => Ok(()),
        }
    }

    /// `w·x + b`.
    pub fn margin(&self, x: &SparseVec) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub probability: f64,
    pub label: u8,
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

pub fn predict(model: &LinearModel, x: &SparseVec) -> Prediction {
    predict_at(model, x, DEFAULT_THRESHOLD)
}

pub fn predict_at(model: &LinearModel, x: &SparseVec, threshold: f64) -> Prediction {
    let probability = sigmoid(model.margin(x));
    Prediction { probability, label: u8::from(probability >= threshold) }
}

fn example_loss(loss: Loss, margin: f64, y: u8) -> f64 {
    let s = if y == 1 { 1.0 } else { -1.0 };
    match loss {
        // ln(1 + e^(−s·m)), computed without overflow.
        Loss::Logistic => {
            let z = -s * margin;
            if z > 0.0 {
                z + libm::log1p(libm::exp(-z))
            } else {
                libm::log1p(libm::exp(z))
            }
        }
        Loss::Hinge => (1.0 - s * margin).max(0.0),
    }
}

/// d(loss)/d(margin).
fn loss_gradient(loss: Loss, margin: f64, y: u8) -> f64 {
    match loss {
        Loss::Logistic => sigmoid(margin) - f64::from(y),
        Loss::Hinge => {
            let s = if y == 1 { 1.0 } else { -1.0 };
            if s * margin < 1.0 {
                -s
            } else {
                0.0
            }
        }
    }
}

/// Mean regularized training loss of `model` on `examples`.
pub fn training_loss(model: &LinearModel, examples: &[(&SparseVec, u8)], cfg: &TrainConfig) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    let data: f64 =
        examples.iter().map(|(x, y)| example_loss(cfg.loss, model.margin(x), *y)).sum::<f64>()
            / examples.len() as f64;
    let reg: f64 = 0.5 * cfg.l2 * model.weights.iter().map(|w| w * w).sum::<f64>();
    data + reg
}

pub fn train_linear(
    examples: &[(&SparseVec, u8)],
    dim: usize,
    background_mean: &[f64],
    category: &str,
    cfg: &TrainConfig,
) -> Result<LinearModel> {
    train_linear_traced(examples, dim, background_mean, category, cfg).map(|(m, _)| m)
}

/// Trains and also returns the mean training loss after each epoch.
pub fn train_linear_traced(
    examples: &[(&SparseVec, u8)],
    dim: usize,
    background_mean: &[f64],
    category: &str,
    cfg: &TrainConfig,
) -> Result<(LinearModel, Vec<f64>)> {
    if background_mean.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: background_mean.len(), row: None });
    }
    let positives = examples.iter().filter(|e| e.1 == 1).count();
    if positives == 0 || positives == examples.len() {
        return Err(Error::SingleClass { category: category.into() });
    }
    if let Some(&(_, y)) = examples.iter().find(|e| e.1 > 1) {
        return Err(Error::InvalidArgument(format!("label {y} is not 0 or 1")));
    }
    let mut model = LinearModel::zeros(dim, category);
    for (x, _) in examples {
        model.check_input(x)?;
    }
    model.background_mean = background_mean.to_vec();
    model.fingerprint = fnv1a(category.as_bytes()) ^ cfg.fingerprint();

    // w = scale · v
    let mut v = alloc::vec![0.0f64; dim];
    let mut scale = 1.0f64;
    let mut bias = 0.0f64;
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = rng(mix_seed(cfg.seed, fnv1a(category.as_bytes())));
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let lr = cfg.learning_rate / libm::sqrt(epoch as f64);
        order.shuffle(&mut rng);
        for &i in &order {
            let (x, y) = examples[i];
            let margin = scale * x.dot_dense(&v) + bias;
            let g = loss_gradient(cfg.loss, margin, y);
            let decay = 1.0 - lr * cfg.l2;
            if decay > 0.0 {
                scale *= decay;
            } else {
                v.iter_mut().for_each(|w| *w = 0.0);
                scale = 1.0;
            }
            if g != 0.0 {
                let step = lr * g / scale;
                for &(j, xj) in x.entries() {
                    v[j as usize] -= step * xj;
                }
                bias -= lr * g;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
        }
        model.weights = v.iter().map(|w| w * scale).collect();
        model.bias = bias;
        history.push(training_loss(&model, examples, cfg));
    }
    model.weights = v.iter().map(|w| w * scale).collect();
    model.bias = bias;
    Ok((model, history))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of test instances whose true label is this class.
    pub support: usize,
    /// Set when the class was neither predicted nor present; F1 is then 0.
    pub f1_undefined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalReport {
    /// Indexed by class label.
    pub classes: [ClassMetrics; 2],
    pub macro_f1: f64,
    pub minority_class: u8,
    pub minority_f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub n_test: usize,
}

fn class_metrics(tp: usize, predicted: usize, actual: usize) -> ClassMetrics {
    let precision = if predicted > 0 { tp as f64 / predicted as f64 } else { 0.0 };
    let recall = if actual > 0 { tp as f64 / actual as f64 } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    ClassMetrics { precision, recall, f1, support: actual, f1_undefined: predicted == 0 && actual == 0 }
}

impl EvalReport {
    /// Builds the report from class-1 confusion counts.
    pub fn from_confusion(tp: usize, fp: usize, tn: usize, fn_: usize) -> Result<Self> {
        let n_test = tp + fp + tn + fn_;
        if n_test == 0 {
            return Err(Error::EmptyTestSet);
        }
        let c1 = class_metrics(tp, tp + fp, tp + fn_);
        let c0 = class_metrics(tn, tn + fn_, tn + fp);
        let minority_class = if c0.support < c1.support { 0 } else { 1 };
        let minority_f1 = if minority_class == 0 { c0.f1 } else { c1.f1 };
        Ok(EvalReport {
            classes: [c0, c1],
            macro_f1: (c0.f1 + c1.f1) / 2.0,
            minority_class,
            minority_f1,
            tp,
            fp,
            tn,
            fn_,
            n_test,
        })
    }

    pub fn from_predictions(predicted: &[u8], truth: &[u8]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::DimensionMismatch { expected: truth.len(), found: predicted.len(), row: None });
        }
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p != 0, t != 0) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fn_ += 1,
            }
        }
        Self::from_confusion(tp, fp, tn, fn_)
    }
}

pub fn evaluate(model: &LinearModel, test: &[(&SparseVec, u8)], threshold: f64) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let predicted: Vec<u8> = test.iter().map(|(x, _)| predict_at(model, x, threshold).label).collect();
    let truth: Vec<u8> = test.iter().map(|e| e.1).collect();
    EvalReport::from_predictions(&predicted, &truth)
}

/// Fraction of the first `min(k, len)` ids whose truth label is 1.
pub fn precision_at_k<T: Display>(
    ranked: &[T],
    truth: impl Fn(&T) -> Option<u8>,
    k: usize,
) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let prefix = &ranked[..k.min(ranked.len())];
    if prefix.is_empty() {
        return Ok(0.0);
    }
    let hits = count_hits(prefix, &truth)?;
    Ok(hits as f64 / prefix.len() as f64)
}

/// Positives within the first `k` ids divided by `total_positives`.
pub fn recall_at_k<T: Display>(
    ranked: &[T],
    truth: impl Fn(&T) -> Option<u8>,
    k: usize,
    total_positives: usize,
) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let hits = count_hits(&ranked[..k.min(ranked.len())], &truth)?;
    Ok(if total_positives == 0 { 0.0 } else { hits as f64 / total_positives as f64 })
}

fn count_hits<T: Display>(prefix: &[T], truth: &impl Fn(&T) -> Option<u8>) -> Result<usize> {
    let mut hits = 0;
    for id in prefix {
        match truth(id) {
            Some(1) => hits += 1,
            Some(_) => {}
            None => return Err(Error::MissingTruth { id: id.to_string() }),
        }
    }
    Ok(hits)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train: 0.7, val: 0.1, test: 0.2, seed: 17, stratified: true }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.train > 0.0
            && self.val > 0.0
            && self.test > 0.0
            && (self.train + self.val + self.test - 1.0).abs() <= 1e-9;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "split ratios must be positive and sum to 1, got {}/{}/{}",
                self.train, self.val, self.test
            )))
        }
    }
}

/// Index partition produced by [`split`]; each part is sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

fn floor_share(n: usize, ratio: f64) -> usize {
    libm::floor(n as f64 * ratio + 1e-9) as usize
}

/// Splits items with binary `labels` into train/val/test. Within each stratum
/// the val and test counts are floored and the remainder goes to train.
pub fn split(labels: &[u8], spec: &SplitSpec) -> Result<Split> {
    if spec.stratified && !labels.is_empty() {
        for class in 0..=1u8 {
            if !labels.contains(&class) {
                return Err(Error::MissingClass { class: u32::from(class) });
            }
        }
    }
    let strata: Vec<u32> = labels.iter().map(|&l| u32::from(l)).collect();
    split_strata(&strata, spec)
}

/// Like [`split`] with arbitrary stratum keys.
pub fn split_strata(strata: &[u32], spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let mut rng = rng(spec.seed);
    let mut out = Split::default();
    for group in groups(strata, spec.stratified) {
        let mut group = group;
        group.shuffle(&mut rng);
        let n = group.len();
        let n_val = floor_share(n, spec.val);
        let n_test = floor_share(n, spec.test);
        let n_train = n - n_val - n_test;
        out.train.extend_from_slice(&group[..n_train]);
        out.val.extend_from_slice(&group[n_train..n_train + n_val]);
        out.test.extend_from_slice(&group[n_train + n_val..]);
    }
    out.train.sort_unstable();
    out.val.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}

/// Seeded sample of `floor(fraction · |stratum|)` items from every stratum.
pub fn stratified_sample(strata: &[u32], fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!("sample fraction {fraction} outside [0, 1]")));
    }
    let mut rng = rng(seed);
    let mut out = Vec::new();
    for mut group in groups(strata, true) {
        group.shuffle(&mut rng);
        let take = floor_share(group.len(), fraction);
        out.extend_from_slice(&group[..take]);
    }
    out.sort_unstable();
    Ok(out)
}

/// Item indices grouped by stratum key, keys ascending, items in input order.
fn groups(strata: &[u32], stratified: bool) -> Vec<Vec<usize>> {
    if !stratified {
        return alloc::vec![(0..strata.len()).collect()];
    }
    let mut map: alloc::collections::BTreeMap<u32, Vec<usize>> = Default::default();
    for (i, &s) in strata.iter().enumerate() {
        map.entry(s).or_default().push(i);
    }
    map.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sv(e: &[(u32, f64)]) -> SparseVec {
        SparseVec::from_entries(e.to_vec())
    }

    #[test]
    fn zero_model_predicts_boundary_positive() {
        let m = LinearModel::zeros(3, "c");
        let p = predict(&m, &sv(&[(0, 1.0)]));
        assert_eq!(p.probability, 0.5);
        assert_eq!(p.label, 1);
    }

    #[test]
    fn hand_built_model() {
        let mut m = LinearModel::zeros(2, "health");
        m.weights[0] = 2.0;
        m.bias = -1.0;
        let p = predict(&m, &sv(&[(0, 1.0)]));
        assert!((p.probability - 0.731_058_578_630_004_9).abs() < 1e-12);
        assert_eq!(p.label, 1);

        m.weights[0] = 500.0;
        assert!(predict(&m, &sv(&[(0, 1.0)])).probability > 1.0 - 1e-12);
    }

    #[test]
    fn separable_toy_set() {
        let gym = sv(&[(0, 1.0)]);
        let movie = sv(&[(1, 1.0)]);
        let data = [(&gym, 1u8), (&movie, 0u8)];
        let cfg = TrainConfig::default();
        let (m, losses) = train_linear_traced(&data, 2, &[0.5, 0.5], "health", &cfg).unwrap();
        assert_eq!(predict(&m, &gym).label, 1);
        assert_eq!(predict(&m, &movie).label, 0);
        for w in losses.windows(2) {
            assert!(w[1] <= w[0], "loss increased: {losses:?}");
        }
        let again = train_linear(&data, 2, &[0.5, 0.5], "health", &cfg).unwrap();
        assert_eq!(m, again);
        assert_eq!(m.background_mean, vec![0.5, 0.5]);

        let hinge = TrainConfig { loss: Loss::Hinge, ..cfg };
        let h = train_linear(&data, 2, &[0.5, 0.5], "health", &hinge).unwrap();
        assert!(h.margin(&gym) > 0.0 && h.margin(&movie) < 0.0);
    }

    #[test]
    fn single_class_rejected() {
        let x = sv(&[(0, 1.0)]);
        let err = train_linear(&[(&x, 1), (&x, 1)], 1, &[0.0], "alone", &TrainConfig::default());
        assert_eq!(err, Err(Error::SingleClass { category: "alone".into() }));
    }

    #[test]
    fn hand_confusion_case() {
        let r = EvalReport::from_confusion(3, 1, 14, 2).unwrap();
        let c1 = r.classes[1];
        assert_eq!(c1.precision, 0.75);
        assert!((c1.recall - 0.6).abs() < 1e-15);
        assert!((c1.f1 - 0.6667).abs() < 1e-4);
        assert_eq!(r.minority_class, 1);
        assert_eq!(r.n_test, 20);
        assert_eq!(r.macro_f1, (r.classes[0].f1 + c1.f1) / 2.0);
    }

    #[test]
    fn degenerate_predictors() {
        let truth = [1u8, 0, 0, 0, 1, 0];
        let perfect = EvalReport::from_predictions(&truth, &truth).unwrap();
        assert_eq!(perfect.macro_f1, 1.0);
        assert_eq!(perfect.minority_f1, 1.0);

        let negative = EvalReport::from_predictions(&[0; 6], &truth).unwrap();
        assert_eq!(negative.minority_f1, 0.0);
        assert!(!negative.classes[1].f1_undefined);

        let all_neg = EvalReport::from_predictions(&[0, 0], &[0, 0]).unwrap();
        assert!(all_neg.classes[1].f1_undefined);
        assert_eq!(all_neg.classes[1].f1, 0.0);

        assert_eq!(EvalReport::from_predictions(&[], &[]), Err(Error::EmptyTestSet));
    }

    #[test]
    fn minority_tie_goes_to_class_one() {
        let r = EvalReport::from_predictions(&[1, 1], &[1, 0]).unwrap();
        assert_eq!(r.minority_class, 1);
        let r = EvalReport::from_predictions(&[1, 1, 1], &[1, 1, 0]).unwrap();
        assert_eq!(r.minority_class, 0);
    }

    #[test]
    fn precision_examples() {
        let ids = ["a", "b", "c", "d"];
        let truth = |id: &&str| Some(u8::from(*id != "c"));
        assert_eq!(precision_at_k(&ids, truth, 4).unwrap(), 0.75);
        assert_eq!(precision_at_k(&ids, truth, 2).unwrap(), 1.0);
        assert_eq!(precision_at_k(&ids, truth, 10).unwrap(), 0.75);
        let err = precision_at_k(&ids, |id: &&str| (*id != "b").then_some(1), 3);
        assert_eq!(err, Err(Error::MissingTruth { id: "b".into() }));
        assert!(precision_at_k(&ids, truth, 0).is_err());
        assert_eq!(recall_at_k(&ids, truth, 2, 4).unwrap(), 0.5);
    }

    #[test]
    fn split_sizes() {
        let labels = [0u8, 1, 0, 0, 1, 0, 0, 0, 0, 0];
        let unstrat = SplitSpec { stratified: false, ..SplitSpec::default() };
        let s = split(&labels, &unstrat).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (7, 1, 2));
        assert_eq!(s, split(&labels, &unstrat).unwrap());

        let mut labels = vec![0u8; 100];
        for l in labels.iter_mut().take(10) {
            *l = 1;
        }
        let s = split(&labels, &SplitSpec::default()).unwrap();
        assert_eq!(s.test.iter().filter(|&&i| labels[i] == 1).count(), 2);
        assert_eq!(s.val.iter().filter(|&&i| labels[i] == 1).count(), 1);
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn split_errors() {
        assert_eq!(split(&[0, 0, 0], &SplitSpec::default()), Err(Error::MissingClass { class: 1 }));
        let bad = SplitSpec { train: 0.5, val: 0.1, test: 0.1, ..SplitSpec::default() };
        assert!(split(&[0, 1], &bad).is_err());
    }

    #[test]
    fn stratified_sample_per_stratum() {
        let strata: Vec<u32> = (0..50).map(|i| u32::from(i % 5 == 0)).collect();
        let s = stratified_sample(&strata, 0.2, 3).unwrap();
        assert_eq!(s.len(), 10);
        assert_eq!(s.iter().filter(|&&i| strata[i] == 1).count(), 2);
    }
}
