//! The controlled selection experiment.
//!
//! Every step trains a two-member committee on the labeled data, scores the
//! remaining pool, takes a word-budgeted batch from the top of the ranking,
//! reveals its gold labels, and retrains the main classifier (full feature
//! view) on everything labeled so far. Dev-set performance of the main
//! classifier after each step forms the learning curve.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Mention, MentionLevel, Sentence};
use crate::error::{Error, Result};
use crate::eval::{evaluate, CurvePoint, LearningCurve};
use crate::features::{Extractor, FeatureInterner, FeatureVector, FeatureView};
use crate::maxent::{train_examples, Example, LabelSet, Model, Prediction, TrainConfig};
use crate::par;
use crate::rng;
use crate::scoring::{rank, score_pool, Metric, ScoringPolicy};

/// How the two committee members differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CommitteeSetting {
    /// Same (full) features, disjoint halves of the labeled data.
    DataDifferent,
    /// All labeled data, inside vs outside feature views.
    FeatureDifferent,
}

impl fmt::Display for CommitteeSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CommitteeSetting::DataDifferent => "dd",
            CommitteeSetting::FeatureDifferent => "fd",
        })
    }
}

impl FromStr for CommitteeSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dd" => Ok(CommitteeSetting::DataDifferent),
            "fd" => Ok(CommitteeSetting::FeatureDifferent),
            _ => Err(Error::Config(format!("unknown committee setting `{s}` (expected dd or fd)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepBudget {
    pub seed_words: usize,
    pub step_words: usize,
    pub num_steps: usize,
}

impl Default for StepBudget {
    fn default() -> Self {
        StepBudget {
            seed_words: 20000,
            step_words: 20000,
            num_steps: 8,
        }
    }
}

impl StepBudget {
    pub fn validate(&self) -> Result<()> {
        if self.seed_words == 0 || self.step_words == 0 {
            return Err(Error::Config("seed and step word budgets must be positive".into()));
        }
        Ok(())
    }
}

/// Which committee half a labeled sentence belongs to under DD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Half {
    A,
    B,
}

/// Labeled/unlabeled bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopState {
    /// Labeled sentence ids in the order they were added, with their half.
    pub labeled: Vec<(usize, Half)>,
    pub pool: BTreeSet<usize>,
    pub step: usize,
}

impl LoopState {
    pub fn new<I: IntoIterator<Item = usize>>(pool: I) -> Self {
        LoopState {
            labeled: Vec::new(),
            pool: pool.into_iter().collect(),
            step: 0,
        }
    }

    pub fn half_sizes(&self) -> (usize, usize) {
        let a = self.labeled.iter().filter(|(_, h)| *h == Half::A).count();
        (a, self.labeled.len() - a)
    }

    /// Ids of one half, ascending.
    pub fn half(&self, half: Half) -> Vec<usize> {
        let mut ids: Vec<usize> = self.labeled.iter().filter(|(_, h)| *h == half).map(|(id, _)| *id).collect();
        ids.sort_unstable();
        ids
    }

    /// All labeled ids, ascending.
    pub fn labeled_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.labeled.iter().map(|(id, _)| *id).collect();
        ids.sort_unstable();
        ids
    }
}

/// Add whole sentences in rank order until the word budget is met: stop
/// before the sentence that would cross the budget unless taking it lands at
/// least as close to the budget. At least one sentence is taken when
/// `ranked` is non-empty.
pub fn take_batch(ranked: &[usize], pool: &Corpus, budget_words: usize) -> Result<Vec<usize>> {
    let mut batch = Vec::new();
    let mut words = 0usize;
    for &id in ranked {
        if words >= budget_words {
            break;
        }
        let len = pool
            .get(id)
            .ok_or_else(|| Error::Structural(format!("ranked sentence {id} is not in the pool")))?
            .words();
        if words + len <= budget_words {
            batch.push(id);
            words += len;
            continue;
        }
        let over = words + len - budget_words;
        let under = budget_words - words;
        if over <= under || batch.is_empty() {
            batch.push(id);
        }
        break;
    }
    Ok(batch)
}

/// Random word-budgeted seed set.
pub fn select_seed(pool: &Corpus, budget: &StepBudget, seed: u64) -> Result<Vec<usize>> {
    if pool.word_count() < budget.seed_words {
        return Err(Error::Config(format!(
            "pool has {} words, fewer than the {}-word seed budget",
            pool.word_count(),
            budget.seed_words
        )));
    }
    let mut ids: Vec<usize> = pool.sentences().iter().map(|s| s.id).collect();
    ids.shuffle(&mut rng::stream(seed, &[rng::tag::SEED_SET]));
    take_batch(&ids, pool, budget.seed_words)
}

/// Move `batch` from the pool to the labeled set, assigning each id to the
/// currently smaller half (ties to A).
pub fn redistribute(batch: &[usize], mut state: LoopState) -> Result<LoopState> {
    let mut seen = BTreeSet::new();
    for &id in batch {
        if !state.pool.contains(&id) || !seen.insert(id) {
            return Err(Error::Structural(format!(
                "sentence {id} is already labeled or not in the pool"
            )));
        }
    }
    let (mut a, mut b) = state.half_sizes();
    for &id in batch {
        let half = if a <= b {
            a += 1;
            Half::A
        } else {
            b += 1;
            Half::B
        };
        state.pool.remove(&id);
        state.labeled.push((id, half));
    }
    Ok(state)
}

struct ViewData {
    extractor: Extractor,
    interner: Arc<FeatureInterner>,
    pool: Vec<Vec<FeatureVector>>,
    dev: Vec<Vec<FeatureVector>>,
}

impl ViewData {
    fn build(view: FeatureView, pool: &Corpus, dev: Option<&Corpus>) -> Self {
        let extractor = Extractor::new(view);
        let interner = extractor.build_interner(pool.sentences());
        let pool_feats = extractor.sentences(pool.sentences(), &interner);
        let dev_feats = dev.map_or_else(Vec::new, |d| extractor.sentences(d.sentences(), &interner));
        ViewData {
            extractor,
            interner: Arc::new(interner),
            pool: pool_feats,
            dev: dev_feats,
        }
    }
}

/// Pool and dev corpora with their features extracted once, shared by any
/// number of experiment runs (also across threads).
pub struct ExperimentData<'a> {
    pool: &'a Corpus,
    dev: &'a Corpus,
    labels: Arc<LabelSet>,
    gold: Vec<Vec<u32>>,
    full: OnceLock<ViewData>,
    inside: OnceLock<ViewData>,
    outside: OnceLock<ViewData>,
}

impl<'a> ExperimentData<'a> {
    /// The label inventory covers the pool's categories and every level
    /// present in either corpus.
    pub fn new(pool: &'a Corpus, dev: &'a Corpus) -> Result<Self> {
        if pool.is_empty() || dev.is_empty() {
            return Err(Error::Config("pool and dev corpora must be non-empty".into()));
        }
        let mut categories: BTreeSet<String> = pool.categories().iter().cloned().collect();
        categories.extend(dev.categories().iter().cloned());
        let mut levels: BTreeSet<MentionLevel> = pool.levels().into_iter().collect();
        levels.extend(dev.levels());
        let labels = LabelSet::new(
            &categories.into_iter().collect::<Vec<_>>(),
            &levels.into_iter().collect::<Vec<_>>(),
        );
        let gold = pool
            .sentences()
            .iter()
            .map(|s| labels.encode_gold(s))
            .collect::<Result<_>>()?;
        Ok(ExperimentData {
            pool,
            dev,
            labels: Arc::new(labels),
            gold,
            full: OnceLock::new(),
            inside: OnceLock::new(),
            outside: OnceLock::new(),
        })
    }

    pub fn pool(&self) -> &Corpus {
        self.pool
    }

    pub fn dev(&self) -> &Corpus {
        self.dev
    }

    pub fn labels(&self) -> &Arc<LabelSet> {
        &self.labels
    }

    fn view(&self, view: FeatureView) -> &ViewData {
        match view {
            FeatureView::Full => self.full.get_or_init(|| ViewData::build(view, self.pool, Some(self.dev))),
            FeatureView::Inside => self.inside.get_or_init(|| ViewData::build(view, self.pool, None)),
            FeatureView::Outside => self.outside.get_or_init(|| ViewData::build(view, self.pool, None)),
        }
    }

    /// The feature space a view trains over (grown from the pool text).
    pub fn interner(&self, view: FeatureView) -> Arc<FeatureInterner> {
        self.view(view).interner.clone()
    }

    /// Train on pool sentences `ids` (ascending order keeps results
    /// independent of selection order).
    pub fn train(&self, view: FeatureView, ids: &[usize], cfg: &TrainConfig) -> Result<Model> {
        let vd = self.view(view);
        let examples = ids
            .iter()
            .map(|&id| {
                let pos = self
                    .pool
                    .position(id)
                    .ok_or_else(|| Error::Structural(format!("sentence {id} is not in the pool")))?;
                Ok(Example {
                    features: &vd.pool[pos],
                    gold: &self.gold[pos],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        train_examples(&examples, self.labels.clone(), vd.extractor, vd.interner.clone(), cfg)
    }

    /// Predict pool sentences `ids` with a model trained on `view`.
    pub fn predict_pool(&self, model: &Model, ids: &[usize]) -> Vec<Prediction> {
        let vd = self.view(model.view());
        let positions: Vec<(usize, usize)> = ids
            .iter()
            .map(|&id| (id, self.pool.position(id).expect("id from pool")))
            .collect();
        par::map(&positions, |&(id, pos)| model.predict_features(id, &vd.pool[pos]))
    }

    /// Mentions predicted on every dev sentence by a full-view model.
    pub fn predict_dev(&self, model: &Model) -> Vec<Vec<Mention>> {
        let vd = self.view(FeatureView::Full);
        assert_eq!(model.view(), FeatureView::Full, "dev features are only kept for the full view");
        let sentences = self.dev.sentences();
        par::map_range(sentences.len(), |i| {
            model.predict_features(sentences[i].id, &vd.dev[i]).mentions
        })
    }

    fn words(&self, ids: &[usize]) -> usize {
        ids.iter().map(|&id| self.pool.get(id).map_or(0, Sentence::words)).sum()
    }
}

/// Everything that defines one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub setting: CommitteeSetting,
    pub policy: ScoringPolicy,
    pub budget: StepBudget,
    pub train: TrainConfig,
    pub seed: u64,
}

fn committee(
    data: &ExperimentData,
    setting: CommitteeSetting,
    state: &LoopState,
    cfg: &TrainConfig,
) -> Result<(Model, Model)> {
    let (a, b) = match setting {
        CommitteeSetting::DataDifferent => {
            let (ha, hb) = (state.half(Half::A), state.half(Half::B));
            par::join(
                || data.train(FeatureView::Full, &ha, cfg),
                || data.train(FeatureView::Full, &hb, cfg),
            )
        }
        CommitteeSetting::FeatureDifferent => {
            let ids = state.labeled_ids();
            par::join(
                || data.train(FeatureView::Inside, &ids, cfg),
                || data.train(FeatureView::Outside, &ids, cfg),
            )
        }
    };
    Ok((a?, b?))
}

fn evaluate_point(data: &ExperimentData, state: &LoopState, cfg: &TrainConfig, batch: &[usize]) -> Result<CurvePoint> {
    let ids = state.labeled_ids();
    let main = data.train(FeatureView::Full, &ids, cfg)?;
    let report = evaluate(&data.predict_dev(&main), data.dev, None)?;
    Ok(CurvePoint {
        step: state.step,
        words: data.words(&ids),
        batch_sentences: batch.len(),
        batch_words: data.words(batch),
        report,
    })
}

/// Run one experiment over pre-extracted data.
pub fn run_with(data: &ExperimentData, spec: &RunSpec) -> Result<LearningCurve> {
    spec.budget.validate()?;
    spec.train.validate()?;
    spec.policy.validate(data.pool.categories())?;

    let seed_ids = select_seed(data.pool, &spec.budget, spec.seed)?;
    let mut state = redistribute(&seed_ids, LoopState::new(data.pool.sentences().iter().map(|s| s.id)))?;
    let mut curve = LearningCurve {
        categories: data.pool.categories().to_vec(),
        points: vec![evaluate_point(data, &state, &spec.train, &seed_ids)?],
        warnings: Vec::new(),
    };
    log::info!(
        "seed: {} sentences, {} words, dev F {:.4}",
        seed_ids.len(),
        curve.points[0].words,
        curve.points[0].report.overall.f_measure
    );

    for step in 1..=spec.budget.num_steps {
        if state.pool.is_empty() {
            curve.warnings.push(format!("pool exhausted before step {step}"));
            break;
        }
        let remaining: Vec<usize> = state.pool.iter().copied().collect();
        let sentences: Vec<&Sentence> = remaining
            .iter()
            .map(|&id| data.pool.get(id).expect("pool id"))
            .collect();
        let step_seed = rng::derive(spec.seed, &[step as u64]);
        let scores = if spec.policy.metric == Metric::Random {
            score_pool(&sentences, &[], &[], &spec.policy, step_seed)?
        } else {
            let (a, b) = committee(data, spec.setting, &state, &spec.train)?;
            let (pa, pb) = par::join(|| data.predict_pool(&a, &remaining), || data.predict_pool(&b, &remaining));
            score_pool(&sentences, &pa, &pb, &spec.policy, step_seed)?
        };
        let ranked = rank(&scores, spec.policy.metric);
        let batch = take_batch(&ranked, data.pool, spec.budget.step_words)?;
        if batch.is_empty() {
            curve
                .warnings
                .push(format!("no eligible sentences left at step {step}"));
            break;
        }
        state = redistribute(&batch, state)?;
        state.step = step;
        let point = evaluate_point(data, &state, &spec.train, &batch)?;
        log::info!(
            "step {step}: +{} sentences / {} words -> {} words, dev F {:.4}",
            point.batch_sentences,
            point.batch_words,
            point.words,
            point.report.overall.f_measure
        );
        curve.points.push(point);
    }
    for w in &curve.warnings {
        log::warn!("{w}");
    }
    Ok(curve)
}

/// Run one experiment from scratch.
pub fn run_experiment(
    pool: &Corpus,
    dev: &Corpus,
    setting: CommitteeSetting,
    policy: &ScoringPolicy,
    budget: &StepBudget,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<LearningCurve> {
    let data = ExperimentData::new(pool, dev)?;
    run_with(
        &data,
        &RunSpec {
            setting,
            policy: policy.clone(),
            budget: *budget,
            train: *cfg,
            seed,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, split_pool_dev, SynthSpec};
    use proptest::prelude::*;

    fn lengths(lens: &[usize]) -> Corpus {
        let s = lens
            .iter()
            .enumerate()
            .map(|(i, &n)| Sentence::new(i + 1, 0, vec!["w".to_string(); n], vec![]).unwrap())
            .collect();
        Corpus::new(s).unwrap()
    }

    #[test]
    fn batch_stopping_rule() {
        let c = lengths(&[4, 4, 4]);
        assert_eq!(take_batch(&[1, 2, 3], &c, 10).unwrap(), vec![1, 2, 3]);
        let c = lengths(&[4, 4, 9]);
        assert_eq!(take_batch(&[1, 2, 3], &c, 10).unwrap(), vec![1, 2]);
        assert_eq!(take_batch(&[], &c, 10).unwrap(), Vec::<usize>::new());
        assert_eq!(take_batch(&[3], &c, 2).unwrap(), vec![3], "always makes progress");
        assert!(take_batch(&[9], &c, 2).is_err());
    }

    #[test]
    fn seed_selection() {
        let c = lengths(&[5, 5, 5, 5]);
        let budget = StepBudget { seed_words: 5, step_words: 5, num_steps: 1 };
        let s = select_seed(&c, &budget, 11).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s, select_seed(&c, &budget, 11).unwrap());
        let too_big = StepBudget { seed_words: 21, ..budget };
        assert!(matches!(select_seed(&c, &too_big, 0), Err(Error::Config(_))));
    }

    #[test]
    fn redistribute_balances() {
        let s = redistribute(&[1, 2, 3, 4], LoopState::new(1..=10)).unwrap();
        assert_eq!(s.half_sizes(), (2, 2));
        let mut s = LoopState::new(1..=20);
        s = redistribute(&[1, 2, 3, 4, 5, 6, 7, 8, 9], s).unwrap();
        assert_eq!(s.half_sizes(), (5, 4));
        s = redistribute(&[10, 11, 12], s).unwrap();
        assert_eq!(s.half_sizes(), (6, 6));
        assert_eq!(&s.labeled[9..], &[(10, Half::B), (11, Half::A), (12, Half::B)]);
        assert!(redistribute(&[12], s.clone()).is_err());
        assert!(redistribute(&[13, 13], s).is_err());
    }

    #[test]
    fn committee_setting_parse() {
        assert_eq!("FD".parse::<CommitteeSetting>().unwrap(), CommitteeSetting::FeatureDifferent);
        assert!("xx".parse::<CommitteeSetting>().is_err());
    }

    fn small() -> (Corpus, Corpus) {
        let spec = SynthSpec { sentences: 400, docs: 10, ..SynthSpec::default() };
        let c = generate_synthetic(&spec, 2).unwrap().retain_levels(&[MentionLevel::Nam, MentionLevel::Nom]);
        split_pool_dev(&c, 0.25, 1).unwrap()
    }

    #[test]
    fn zero_steps_gives_seed_point_only() {
        let (pool, dev) = small();
        let budget = StepBudget { seed_words: 500, step_words: 500, num_steps: 0 };
        let curve = run_experiment(&pool, &dev, CommitteeSetting::FeatureDifferent, &ScoringPolicy::new(Metric::ConfSum), &budget, &TrainConfig::default(), 3).unwrap();
        assert_eq!(curve.points.len(), 1);
        assert_eq!(curve.points[0].step, 0);
    }

    #[test]
    fn curve_bookkeeping() {
        let (pool, dev) = small();
        let budget = StepBudget { seed_words: 400, step_words: 300, num_steps: 3 };
        for (setting, metric) in [
            (CommitteeSetting::DataDifferent, Metric::FMeasure),
            (CommitteeSetting::FeatureDifferent, Metric::ConfDiff),
            (CommitteeSetting::DataDifferent, Metric::Random),
        ] {
            let policy = ScoringPolicy::new(metric);
            let curve = run_experiment(&pool, &dev, setting, &policy, &budget, &TrainConfig::default(), 5).unwrap();
            assert_eq!(curve.points.len(), 4);
            let mut expected = curve.points[0].words;
            for w in curve.points.windows(2) {
                expected += w[1].batch_words;
                assert_eq!(w[1].words, expected);
                assert!(w[1].words > w[0].words);
                assert!(w[1].batch_words.abs_diff(300) <= 20, "batch of {} words", w[1].batch_words);
            }
            let again = run_experiment(&pool, &dev, setting, &policy, &budget, &TrainConfig::default(), 5).unwrap();
            assert_eq!(curve, again);
        }
    }

    #[test]
    fn exhaustion_truncates_with_warning() {
        let (pool, dev) = small();
        let words = pool.word_count();
        let budget = StepBudget { seed_words: 200, step_words: words / 3, num_steps: 10 };
        let curve = run_experiment(&pool, &dev, CommitteeSetting::FeatureDifferent, &ScoringPolicy::new(Metric::Random), &budget, &TrainConfig::default(), 1).unwrap();
        assert!(curve.points.len() < 11);
        assert_eq!(curve.points.last().unwrap().words, words);
        assert!(!curve.warnings.is_empty());
    }

    proptest! {
        #[test]
        fn batch_within_one_sentence_of_budget(lens in prop::collection::vec(1usize..30, 1..40), budget in 1usize..200) {
            let c = lengths(&lens);
            let ranked: Vec<usize> = (1..=lens.len()).collect();
            let batch = take_batch(&ranked, &c, budget).unwrap();
            let words: usize = batch.iter().map(|&id| lens[id - 1]).sum();
            let total: usize = lens.iter().sum();
            let max = *lens.iter().max().unwrap();
            if total >= budget {
                prop_assert!(words.abs_diff(budget) <= max);
            } else {
                prop_assert_eq!(words, total);
            }
            prop_assert_eq!(&batch[..], &ranked[..batch.len()]);
        }

        #[test]
        fn halves_stay_balanced(batches in prop::collection::vec(1usize..7, 1..12)) {
            let total: usize = batches.iter().sum();
            let mut state = LoopState::new(0..total);
            let mut next = 0;
            for b in batches {
                let ids: Vec<usize> = (next..next + b).collect();
                next += b;
                state = redistribute(&ids, state).unwrap();
                let (a, bb) = state.half_sizes();
                prop_assert!(a.abs_diff(bb) <= 1);
                prop_assert_eq!(state.pool.len() + state.labeled.len(), total);
            }
        }
    }
}
