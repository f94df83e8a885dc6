//! Sentence selection scores computed from a pair of committee predictions.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Mention, MentionLevel, Sentence};
use crate::error::{Error, Result};
use crate::maxent::Prediction;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    Random,
    FMeasure,
    MacroF,
    ConfSum,
    ConfDiff,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Random,
        Metric::FMeasure,
        Metric::MacroF,
        Metric::ConfSum,
        Metric::ConfDiff,
    ];

    /// Whether larger scores are selected first.
    pub fn descending(self) -> bool {
        matches!(self, Metric::ConfDiff | Metric::Random)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Random => "random",
            Metric::FMeasure => "f_measure",
            Metric::MacroF => "macro_f",
            Metric::ConfSum => "conf_sum",
            Metric::ConfDiff => "conf_diff",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric `{s}`")))
    }
}

/// Metric choice plus the mention weighting and filtering parameters.
///
/// A mention's weight is `category weight * level weight`; mentions of
/// weight zero are invisible to every metric and to the min-mention count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringPolicy {
    pub metric: Metric,
    /// Categories not listed weigh 1.
    pub category_weights: BTreeMap<String, f64>,
    /// Levels not listed use NAM = 1, NOM = 1, PRO = 0.
    pub level_weights: BTreeMap<MentionLevel, f64>,
    pub min_mentions: usize,
}

impl ScoringPolicy {
    pub fn new(metric: Metric) -> Self {
        ScoringPolicy {
            metric,
            category_weights: BTreeMap::new(),
            level_weights: BTreeMap::new(),
            min_mentions: 0,
        }
    }

    pub fn category_weight(&self, category: &str) -> f64 {
        self.category_weights.get(category).copied().unwrap_or(1.0)
    }

    pub fn level_weight(&self, level: MentionLevel) -> f64 {
        self.level_weights.get(&level).copied().unwrap_or(match level {
            MentionLevel::Nam | MentionLevel::Nom => 1.0,
            MentionLevel::Pro => 0.0,
        })
    }

    pub fn weight(&self, m: &Mention) -> f64 {
        self.category_weight(&m.category) * self.level_weight(m.level)
    }

    pub fn visible(&self, m: &Mention) -> bool {
        self.weight(m) > 0.0
    }

    /// Number of mentions with positive weight.
    pub fn count(&self, mentions: &[Mention]) -> usize {
        mentions.iter().filter(|m| self.visible(m)).count()
    }

    pub fn validate(&self, categories: &[String]) -> Result<()> {
        for (k, w) in self
            .category_weights
            .iter()
            .map(|(k, w)| (k.clone(), *w))
            .chain(self.level_weights.iter().map(|(k, w)| (k.to_string(), *w)))
        {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("weight for `{k}` must be finite and non-negative, got {w}")));
            }
        }
        let any_positive = categories
            .iter()
            .any(|c| self.category_weight(c) > 0.0 && MentionLevel::ALL.iter().any(|&l| self.level_weight(l) > 0.0));
        if !any_positive {
            return Err(Error::Config(
                "scoring policy gives every (category, level) pair zero weight".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentenceScore {
    pub sentence_id: usize,
    pub score: f64,
    pub eligible: bool,
}

/// Weighted F-measure agreement between two mention sets. Identical
/// (span, category, level) mentions match. Two empty sets agree fully.
pub fn pair_f_measure(m1: &[Mention], m2: &[Mention], policy: &ScoringPolicy) -> f64 {
    let w1: f64 = m1.iter().map(|m| policy.weight(m)).sum();
    let w2: f64 = m2.iter().map(|m| policy.weight(m)).sum();
    if w1 + w2 == 0.0 {
        return 1.0;
    }
    let matched = m1
        .iter()
        .filter(|m| policy.visible(m) && m2.contains(m))
        .fold(0.0, |acc, m| acc + policy.weight(m));
    2.0 * matched / (w1 + w2)
}

/// Category-weighted mean of per-category F over categories that occur in
/// either set. Within a category every visible mention counts once.
pub fn macro_f_measure(m1: &[Mention], m2: &[Mention], policy: &ScoringPolicy) -> f64 {
    let mut per_cat: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
    for m in m1.iter().filter(|m| policy.visible(m)) {
        let e = per_cat.entry(&m.category).or_default();
        e.0 += 1;
        if m2.contains(m) {
            e.2 += 1;
        }
    }
    for m in m2.iter().filter(|m| policy.visible(m)) {
        per_cat.entry(&m.category).or_default().1 += 1;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (cat, (n1, n2, matched)) in per_cat {
        let cw = policy.category_weight(cat);
        num += cw * 2.0 * matched as f64 / (n1 + n2) as f64;
        den += cw;
    }
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

/// Mean of the two confidences. Low values are selected first.
pub fn conf_sum(c1: f64, c2: f64) -> f64 {
    (c1 + c2) / 2.0
}

/// Absolute confidence gap. High values are selected first.
pub fn conf_diff(c1: f64, c2: f64) -> f64 {
    (c1 - c2).abs()
}

/// Score every pool sentence. `pred_a` and `pred_b` must be aligned with
/// `pool`; for [`Metric::Random`] they are ignored and may be empty, every
/// sentence is eligible, and the score is a uniform draw keyed by
/// `(seed, sentence id)`.
pub fn score_pool(
    pool: &[&Sentence],
    pred_a: &[Prediction],
    pred_b: &[Prediction],
    policy: &ScoringPolicy,
    seed: u64,
) -> Result<Vec<SentenceScore>> {
    if policy.metric == Metric::Random {
        return Ok(pool
            .iter()
            .map(|s| SentenceScore {
                sentence_id: s.id,
                score: rng::unit_from(rng::derive(seed, &[rng::tag::RANDOM_RANK, s.id as u64])),
                eligible: true,
            })
            .collect());
    }
    if pred_a.len() != pool.len() || pred_b.len() != pool.len() {
        return Err(Error::Structural(format!(
            "prediction lists ({}, {}) do not match pool size {}",
            pred_a.len(),
            pred_b.len(),
            pool.len()
        )));
    }
    pool.iter()
        .zip(pred_a.iter().zip(pred_b))
        .map(|(s, (a, b))| {
            if a.sentence_id != s.id || b.sentence_id != s.id {
                return Err(Error::Structural(format!(
                    "predictions for sentences ({}, {}) aligned with pool sentence {}",
                    a.sentence_id, b.sentence_id, s.id
                )));
            }
            let count = policy.count(&a.mentions).max(policy.count(&b.mentions));
            let score = match policy.metric {
                Metric::FMeasure => pair_f_measure(&a.mentions, &b.mentions, policy),
                Metric::MacroF => macro_f_measure(&a.mentions, &b.mentions, policy),
                Metric::ConfSum => conf_sum(a.confidence, b.confidence),
                Metric::ConfDiff => conf_diff(a.confidence, b.confidence),
                Metric::Random => unreachable!(),
            };
            Ok(SentenceScore {
                sentence_id: s.id,
                score,
                eligible: count >= policy.min_mentions,
            })
        })
        .collect()
}

/// Eligible sentence ids, best first. Ties go to the lower sentence id.
pub fn rank(scores: &[SentenceScore], metric: Metric) -> Vec<usize> {
    let mut eligible: Vec<&SentenceScore> = scores.iter().filter(|s| s.eligible).collect();
    eligible.sort_by(|a, b| {
        let by_score = if metric.descending() {
            b.score.total_cmp(&a.score)
        } else {
            a.score.total_cmp(&b.score)
        };
        match by_score {
            Ordering::Equal => a.sentence_id.cmp(&b.sentence_id),
            o => o,
        }
    });
    eligible.into_iter().map(|s| s.sentence_id).collect()
}
