//! Maximum-entropy (L2-regularized multinomial logistic regression) token
//! classifier over sparse binary features.
//!
//! Tokens are classified independently; mentions come from decoding the
//! per-token argmax labels with the BIO repair rule.

mod labels;
mod lbfgs;
mod objective;
mod persist;

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{decode_bio, BioLabel, Mention, Sentence};
use crate::error::{Error, Result};
use crate::features::{Extractor, FeatureInterner, FeatureVector, FeatureView};

pub use labels::LabelSet;
pub use lbfgs::{minimize, LbfgsConfig, Trace};
pub use objective::{Problem, Support};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Variance of the Gaussian prior; the penalty is `|w|^2 / (2 * l2_sigma2)`.
    pub l2_sigma2: f64,
    pub max_iters: usize,
    /// Relative objective change below which training stops.
    pub tol: f64,
    /// Recorded for provenance. The optimizer is deterministic and draws
    /// nothing from it.
    pub seed: u64,
    #[serde(default)]
    pub support: Support,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_sigma2: 10.0,
            max_iters: 200,
            tol: 1e-6,
            seed: 0,
            support: Support::Observed,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2_sigma2 > 0.0 && self.l2_sigma2.is_finite()) {
            return Err(Error::Config(format!("l2_sigma2 must be positive, got {}", self.l2_sigma2)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// A trained classifier. Immutable; safe to share across threads.
#[derive(Debug, Clone)]
pub struct Model {
    /// Feature-major: label scores for feature `f` are
    /// `weights[f * n_labels .. (f + 1) * n_labels]`.
    weights: Vec<f64>,
    labels: Arc<LabelSet>,
    interner: Arc<FeatureInterner>,
    extractor: Extractor,
    config: TrainConfig,
    trace: Trace,
}

/// Per-token posteriors and the decoded mentions for one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub sentence_id: usize,
    pub label_ids: Vec<u32>,
    pub labels: Vec<BioLabel>,
    pub posteriors: Vec<Vec<f64>>,
    pub mentions: Vec<Mention>,
    pub confidence: f64,
}

/// Softmax with max-shift.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    p
}

/// Index of the largest entry; ties go to the lowest index.
fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Geometric mean over tokens of the winning label's posterior.
pub fn sentence_confidence(pred: &Prediction) -> f64 {
    confidence_of(&pred.posteriors, &pred.label_ids)
}

fn confidence_of(posteriors: &[Vec<f64>], label_ids: &[u32]) -> f64 {
    if posteriors.is_empty() {
        return 1.0;
    }
    let mean_log = posteriors
        .iter()
        .zip(label_ids)
        .map(|(p, &y)| p[y as usize].ln())
        .sum::<f64>()
        / posteriors.len() as f64;
    mean_log.exp().clamp(0.0, 1.0)
}

/// A sentence's features plus gold label ids, ready for training.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub features: &'a [FeatureVector],
    pub gold: &'a [u32],
}

/// Train on raw sentences. The label inventory covers the categories and
/// levels present in `sentences`; the feature space is grown from them.
pub fn train(sentences: &[Sentence], view: FeatureView, cfg: &TrainConfig) -> Result<Model> {
    let categories: BTreeSet<String> = sentences
        .iter()
        .flat_map(|s| s.mentions.iter().map(|m| m.category.clone()))
        .collect();
    let levels: BTreeSet<_> = sentences
        .iter()
        .flat_map(|s| s.mentions.iter().map(|m| m.level))
        .collect();
    let labels = LabelSet::new(
        &categories.into_iter().collect::<Vec<_>>(),
        &levels.into_iter().collect::<Vec<_>>(),
    );
    let extractor = Extractor::new(view);
    let interner = extractor.build_interner(sentences);
    train_with(sentences, Arc::new(labels), extractor, Arc::new(interner), cfg)
}

/// Train on raw sentences against a fixed label inventory and frozen
/// feature space.
pub fn train_with(
    sentences: &[Sentence],
    labels: Arc<LabelSet>,
    extractor: Extractor,
    interner: Arc<FeatureInterner>,
    cfg: &TrainConfig,
) -> Result<Model> {
    let feats: Vec<Vec<FeatureVector>> = extractor.sentences(sentences, &interner);
    let gold: Vec<Vec<u32>> = sentences.iter().map(|s| labels.encode_gold(s)).collect::<Result<_>>()?;
    let examples: Vec<Example> = feats
        .iter()
        .zip(&gold)
        .map(|(f, g)| Example { features: f, gold: g })
        .collect();
    train_examples(&examples, labels, extractor, interner, cfg)
}

/// Train on pre-extracted examples. Features absent from the examples keep
/// weight zero, which is also their exact optimum under the penalty; with
/// [`Support::Observed`] so do labels a feature never occurs with.
pub fn train_examples(
    examples: &[Example],
    labels: Arc<LabelSet>,
    extractor: Extractor,
    interner: Arc<FeatureInterner>,
    cfg: &TrainConfig,
) -> Result<Model> {
    cfg.validate()?;
    if !interner.is_frozen() {
        return Err(Error::Training("feature interner must be frozen before training".into()));
    }
    let tokens: usize = examples.iter().map(|e| e.features.len()).sum();
    if tokens == 0 {
        return Err(Error::Training("empty training set".into()));
    }
    let n_labels = labels.len();

    let mut used = vec![false; interner.len()];
    for e in examples {
        if e.features.len() != e.gold.len() {
            return Err(Error::Structural("features and gold labels differ in length".into()));
        }
        for fv in e.features {
            for &f in fv.ids() {
                used[f as usize] = true;
            }
        }
    }
    let mut local = vec![u32::MAX; interner.len()];
    let mut global = Vec::new();
    for (g, _) in used.iter().enumerate().filter(|(_, u)| **u) {
        local[g] = global.len() as u32;
        global.push(g);
    }
    let rows: Vec<(Vec<u32>, u32)> = examples
        .iter()
        .flat_map(|e| e.features.iter().zip(e.gold))
        .map(|(fv, &y)| (fv.ids().iter().map(|&f| local[f as usize]).collect(), y))
        .collect();
    let problem = Problem::new(
        rows.iter().map(|(f, y)| (f.as_slice(), *y)),
        global.len(),
        n_labels,
        cfg.l2_sigma2,
        cfg.support,
    );

    let mut w = vec![0.0; problem.dim()];
    let mut resid = Vec::new();
    let trace = minimize(
        &mut w,
        |x, g| problem.evaluate(x, g, &mut resid),
        &LbfgsConfig {
            max_iters: cfg.max_iters,
            tol: cfg.tol,
            ..LbfgsConfig::default()
        },
    )?;
    log::debug!(
        "trained {} model on {tokens} tokens, {} features: {} iterations, objective {:.6}",
        extractor.view,
        global.len(),
        trace.iterations,
        trace.objective.last().unwrap()
    );

    let mut weights = vec![0.0; interner.len() * n_labels];
    for ((f, l), x) in problem.pairs().zip(&w) {
        weights[global[f] * n_labels + l as usize] = *x;
    }
    Model::from_parts(weights, labels, interner, extractor, *cfg, trace)
}

impl Model {
    pub fn from_parts(
        weights: Vec<f64>,
        labels: Arc<LabelSet>,
        interner: Arc<FeatureInterner>,
        extractor: Extractor,
        config: TrainConfig,
        trace: Trace,
    ) -> Result<Self> {
        if weights.len() != labels.len() * interner.len() {
            return Err(Error::Model(format!(
                "weight count {} does not match {} labels x {} features",
                weights.len(),
                labels.len(),
                interner.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Numeric("model has non-finite weights".into()));
        }
        if !interner.is_frozen() {
            return Err(Error::Model("model interner must be frozen".into()));
        }
        Ok(Model {
            weights,
            labels,
            interner,
            extractor,
            config,
            trace,
        })
    }

    /// Model with every weight zero.
    pub fn zeros(labels: Arc<LabelSet>, interner: Arc<FeatureInterner>, extractor: Extractor) -> Self {
        let weights = vec![0.0; labels.len() * interner.len()];
        Self::from_parts(weights, labels, interner, extractor, TrainConfig::default(), Trace::default())
            .expect("zero model is well formed")
    }

    pub fn labels(&self) -> &Arc<LabelSet> {
        &self.labels
    }

    pub fn interner(&self) -> &Arc<FeatureInterner> {
        &self.interner
    }

    pub fn extractor(&self) -> Extractor {
        self.extractor
    }

    pub fn view(&self) -> FeatureView {
        self.extractor.view
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Objective values recorded by the optimizer.
    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, label: u32, feature: u32) -> f64 {
        self.weights[feature as usize * self.labels.len() + label as usize]
    }

    /// Raw label scores for one token.
    pub fn scores(&self, features: &FeatureVector) -> Vec<f64> {
        let l = self.labels.len();
        let mut s = vec![0.0; l];
        for &f in features.ids() {
            let wf = &self.weights[f as usize * l..(f as usize + 1) * l];
            s.iter_mut().zip(wf).for_each(|(a, b)| *a += b);
        }
        s
    }

    pub fn predict(&self, sentence: &Sentence) -> Prediction {
        let feats = self.extractor.sentence(sentence, &self.interner);
        self.predict_features(sentence.id, &feats)
    }

    /// Predict from features extracted against this model's interner.
    pub fn predict_features(&self, sentence_id: usize, features: &[FeatureVector]) -> Prediction {
        let posteriors: Vec<Vec<f64>> = features.iter().map(|fv| softmax(&self.scores(fv))).collect();
        let label_ids: Vec<u32> = posteriors.iter().map(|p| argmax(p) as u32).collect();
        let labels: Vec<BioLabel> = label_ids.iter().map(|&i| self.labels.label(i).clone()).collect();
        let mentions = decode_bio(&labels);
        let confidence = confidence_of(&posteriors, &label_ids);
        Prediction {
            sentence_id,
            label_ids,
            labels,
            posteriors,
            mentions,
            confidence,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::MentionLevel;

    fn sent(id: usize, words: &str, mentions: Vec<Mention>) -> Sentence {
        Sentence::new(id, 0, words.split_whitespace().map(String::from).collect(), mentions).unwrap()
    }

    fn toy() -> Vec<Sentence> {
        use MentionLevel::*;
        vec![
            sent(0, "yesterday Anna went to Berlin", vec![Mention::new(1, 2, "PER", Nam), Mention::new(4, 5, "LOC", Nam)]),
            sent(1, "the survivor met Anna", vec![Mention::new(1, 2, "PER", Nom), Mention::new(3, 4, "PER", Nam)]),
            sent(2, "we stayed in Berlin for a year", vec![Mention::new(3, 4, "LOC", Nam)]),
            sent(3, "nothing happened", vec![]),
        ]
    }

    #[test]
    fn single_o_token_prefers_o() {
        let s = vec![sent(0, "hello", vec![])];
        let labels = Arc::new(LabelSet::new(&["PER".into()], &[MentionLevel::Nam]));
        let ex = Extractor::new(FeatureView::Full);
        let interner = Arc::new(ex.build_interner(&s));
        let cfg = TrainConfig {
            l2_sigma2: 0.01,
            ..TrainConfig::default()
        };
        let m = train_with(&s, labels, ex, interner, &cfg).unwrap();
        let p = m.predict(&s[0]);
        let o = p.posteriors[0][0];
        assert!(p.posteriors[0][1..].iter().all(|&x| o > x));
    }

    #[test]
    fn fits_a_separable_toy_corpus() {
        let data = toy();
        let m = train(&data, FeatureView::Full, &TrainConfig::default()).unwrap();
        for s in &data {
            assert_eq!(m.predict(s).mentions, s.mentions, "sentence {}", s.id);
        }
        let t = &m.trace().objective;
        assert!(t.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn duplicated_data_keeps_decisions() {
        let data = toy();
        let mut doubled = Vec::new();
        for (i, s) in data.iter().chain(data.iter()).enumerate() {
            doubled.push(Sentence { id: i, ..s.clone() });
        }
        let a = train(&data, FeatureView::Full, &TrainConfig::default()).unwrap();
        let b = train(&doubled, FeatureView::Full, &TrainConfig::default()).unwrap();
        for s in &data {
            assert_eq!(a.predict(s).labels, b.predict(s).labels);
        }
    }

    #[test]
    fn training_is_bit_deterministic() {
        let data = toy();
        let a = train(&data, FeatureView::Inside, &TrainConfig::default()).unwrap();
        let b = train(&data, FeatureView::Inside, &TrainConfig::default()).unwrap();
        assert_eq!(a.weights(), b.weights());
    }

    #[test]
    fn zero_model_is_uniform() {
        let data = toy();
        let labels = Arc::new(LabelSet::new(&["LOC".into(), "PER".into()], &[MentionLevel::Nam, MentionLevel::Nom]));
        let ex = Extractor::new(FeatureView::Full);
        let m = Model::zeros(labels.clone(), Arc::new(ex.build_interner(&data)), ex);
        let p = m.predict(&data[0]);
        let u = 1.0 / labels.len() as f64;
        for post in &p.posteriors {
            assert!(post.iter().all(|&x| (x - u).abs() < 1e-15));
        }
        assert!(p.label_ids.iter().all(|&i| i == 0), "ties break to the lowest id");
        assert!((sentence_confidence(&p) - u).abs() < 1e-12);
    }

    #[test]
    fn empty_training_set() {
        assert!(matches!(train(&[], FeatureView::Full, &TrainConfig::default()), Err(Error::Training(_))));
    }

    #[test]
    fn bad_config() {
        let cfg = TrainConfig {
            l2_sigma2: 0.0,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&toy(), FeatureView::Full, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn confidence_examples() {
        let pred = |post: Vec<Vec<f64>>| {
            let ids: Vec<u32> = post.iter().map(|p| argmax(p) as u32).collect();
            Prediction {
                sentence_id: 0,
                labels: vec![BioLabel::O; ids.len()],
                label_ids: ids,
                posteriors: post,
                mentions: vec![],
                confidence: 0.0,
            }
        };
        assert_eq!(sentence_confidence(&pred(vec![vec![1.0, 0.0], vec![0.0, 1.0]])), 1.0);
        let c = sentence_confidence(&pred(vec![vec![0.9, 0.1], vec![0.4, 0.3, 0.3]]));
        assert!((c - 0.6).abs() < 1e-12, "{c}");
        for n in [1, 3, 10] {
            let c = sentence_confidence(&pred(vec![vec![0.25; 4]; n]));
            assert!((c - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_shift_invariance() {
        let s = [0.3, -1.2, 2.5, 0.0];
        let shifted: Vec<f64> = s.iter().map(|x| x + 17.25).collect();
        let (a, b) = (softmax(&s), softmax(&shifted));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
