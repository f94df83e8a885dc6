//! Mention-level precision/recall/F, learning curves and their CSV form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Mention, MentionLevel};
use crate::error::{Error, Result};

/// Exact-match counts and the derived scores. An empty denominator gives a
/// vacuous precision or recall of 1.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Prf {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 { 1.0 } else { tp as f64 / (tp + fn_) as f64 };
        let f_measure = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f_measure,
            tp,
            fp,
            fn_,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub overall: Prf,
    pub per_category: BTreeMap<String, Prf>,
    pub per_level: BTreeMap<MentionLevel, Prf>,
}

fn count<F: Fn(&Mention) -> bool>(pred: &[Vec<Mention>], gold: &[Vec<Mention>], keep: F) -> Prf {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (p, g) in pred.iter().zip(gold) {
        let p: BTreeSet<&Mention> = p.iter().filter(|m| keep(m)).collect();
        let g: BTreeSet<&Mention> = g.iter().filter(|m| keep(m)).collect();
        let hit = p.intersection(&g).count();
        tp += hit;
        fp += p.len() - hit;
        fn_ += g.len() - hit;
    }
    Prf::from_counts(tp, fp, fn_)
}

/// Score predicted mention sets against gold ones, sentence by sentence.
/// `level_filter` restricts both sides before counting.
pub fn evaluate_sets(
    pred: &[Vec<Mention>],
    gold: &[Vec<Mention>],
    level_filter: Option<&[MentionLevel]>,
) -> Result<EvalReport> {
    if pred.len() != gold.len() {
        return Err(Error::Structural(format!(
            "{} predicted sentences for {} gold sentences",
            pred.len(),
            gold.len()
        )));
    }
    let level_ok = |m: &Mention| level_filter.is_none_or(|f| f.contains(&m.level));
    let overall = count(pred, gold, level_ok);
    let categories: BTreeSet<&str> = pred
        .iter()
        .chain(gold)
        .flatten()
        .filter(|m| level_ok(m))
        .map(|m| m.category.as_str())
        .collect();
    let per_category = categories
        .into_iter()
        .map(|c| (c.to_string(), count(pred, gold, |m| level_ok(m) && m.category == c)))
        .collect();
    let per_level = MentionLevel::ALL
        .into_iter()
        .filter(|l| level_filter.is_none_or(|f| f.contains(l)))
        .map(|l| (l, count(pred, gold, |m| m.level == l)))
        .collect();
    Ok(EvalReport {
        overall,
        per_category,
        per_level,
    })
}

/// Score predictions aligned with the sentences of `gold`.
pub fn evaluate(pred: &[Vec<Mention>], gold: &Corpus, level_filter: Option<&[MentionLevel]>) -> Result<EvalReport> {
    let gold_sets: Vec<Vec<Mention>> = gold.sentences().iter().map(|s| s.mentions.clone()).collect();
    let mut report = evaluate_sets(pred, &gold_sets, level_filter)?;
    for c in gold.categories() {
        report.per_category.entry(c.clone()).or_insert_with(|| Prf::from_counts(0, 0, 0));
    }
    Ok(report)
}

/// Smallest amount of data at which a curve reaches `target_f`, linearly
/// interpolating between the bracketing points. `points` are
/// `(words, f)` pairs in increasing word order.
pub fn words_to_reach(points: &[(f64, f64)], target_f: f64) -> Option<f64> {
    let i = points.iter().position(|&(_, f)| f >= target_f)?;
    if i == 0 {
        return Some(points[0].0);
    }
    let (w0, f0) = points[i - 1];
    let (w1, f1) = points[i];
    Some(w0 + (target_f - f0) / (f1 - f0) * (w1 - w0))
}

/// Ratio of words a strategy needs to reach `target_f` to what the baseline
/// needs. `None` if either curve never gets there.
pub fn data_savings(strategy: &[(f64, f64)], baseline: &[(f64, f64)], target_f: f64) -> Option<f64> {
    Some(words_to_reach(strategy, target_f)? / words_to_reach(baseline, target_f)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// 0 for the seed-only model.
    pub step: usize,
    pub words: usize,
    pub batch_sentences: usize,
    pub batch_words: usize,
    pub report: EvalReport,
}

/// Dev-set performance as labeled data accumulates.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LearningCurve {
    pub categories: Vec<String>,
    pub points: Vec<CurvePoint>,
    /// Non-fatal events, e.g. the pool running dry before the last step.
    pub warnings: Vec<String>,
}

impl LearningCurve {
    pub fn f_points(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .map(|p| (p.words as f64, p.report.overall.f_measure))
            .collect()
    }

    pub fn words_to_reach(&self, target_f: f64) -> Option<f64> {
        words_to_reach(&self.f_points(), target_f)
    }

    pub fn terminal_f(&self) -> Option<f64> {
        self.points.last().map(|p| p.report.overall.f_measure)
    }
}

/// One CSV row. Averaged tables carry fractional word counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub step: usize,
    pub words: f64,
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    pub named_f: f64,
    pub nominal_f: f64,
    pub category_f: Vec<f64>,
}

/// The exported form of a learning curve: a `#` comment block followed by
/// `step,words,precision,recall,f,named_f,nominal_f,cat_<NAME>_f...`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CurveTable {
    pub comments: Vec<String>,
    pub categories: Vec<String>,
    pub rows: Vec<CurveRow>,
}

const FIXED_COLUMNS: [&str; 7] = ["step", "words", "precision", "recall", "f", "named_f", "nominal_f"];

impl CurveTable {
    pub fn from_curve(curve: &LearningCurve, comments: Vec<String>) -> Self {
        let level_f = |p: &CurvePoint, l| p.report.per_level.get(&l).map_or(1.0, |x: &Prf| x.f_measure);
        let rows = curve
            .points
            .iter()
            .map(|p| CurveRow {
                step: p.step,
                words: p.words as f64,
                precision: p.report.overall.precision,
                recall: p.report.overall.recall,
                f: p.report.overall.f_measure,
                named_f: level_f(p, MentionLevel::Nam),
                nominal_f: level_f(p, MentionLevel::Nom),
                category_f: curve
                    .categories
                    .iter()
                    .map(|c| p.report.per_category.get(c).map_or(1.0, |x| x.f_measure))
                    .collect(),
            })
            .collect();
        CurveTable {
            comments,
            categories: curve.categories.clone(),
            rows,
        }
    }

    /// Pointwise mean by step index. Tables must share categories; the
    /// result is as long as the shortest table.
    pub fn average(tables: &[CurveTable], comments: Vec<String>) -> Result<CurveTable> {
        let first = tables
            .first()
            .ok_or_else(|| Error::Structural("no curves to average".into()))?;
        if tables.iter().any(|t| t.categories != first.categories) {
            return Err(Error::Structural("curves to average have different categories".into()));
        }
        let len = tables.iter().map(|t| t.rows.len()).min().unwrap_or(0);
        let n = tables.len() as f64;
        let mean = |get: &dyn Fn(&CurveRow) -> f64, i: usize| tables.iter().map(|t| get(&t.rows[i])).sum::<f64>() / n;
        let rows = (0..len)
            .map(|i| CurveRow {
                step: first.rows[i].step,
                words: mean(&|r| r.words, i),
                precision: mean(&|r| r.precision, i),
                recall: mean(&|r| r.recall, i),
                f: mean(&|r| r.f, i),
                named_f: mean(&|r| r.named_f, i),
                nominal_f: mean(&|r| r.nominal_f, i),
                category_f: (0..first.categories.len())
                    .map(|c| mean(&|r| r.category_f[c], i))
                    .collect(),
            })
            .collect();
        Ok(CurveTable {
            comments,
            categories: first.categories.clone(),
            rows,
        })
    }

    pub fn header(&self) -> Vec<String> {
        FIXED_COLUMNS
            .iter()
            .map(|s| s.to_string())
            .chain(self.categories.iter().map(|c| format!("cat_{c}_f")))
            .collect()
    }

    /// `(words, value)` pairs for a named column.
    pub fn column(&self, name: &str) -> Result<Vec<(f64, f64)>> {
        let idx = self
            .header()
            .iter()
            .position(|h| h == name)
            .filter(|&i| i >= 2)
            .ok_or_else(|| Error::Config(format!("no curve column `{name}`")))?;
        Ok(self
            .rows
            .iter()
            .map(|r| {
                let v = match idx {
                    2 => r.precision,
                    3 => r.recall,
                    4 => r.f,
                    5 => r.named_f,
                    6 => r.nominal_f,
                    i => r.category_f[i - FIXED_COLUMNS.len()],
                };
                (r.words, v)
            })
            .collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "{}", self.header().join(","));
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{}",
                r.step, r.words, r.precision, r.recall, r.f, r.named_f, r.nominal_f
            );
            for v in &r.category_f {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<CurveTable> {
        let err = |line: usize, message: String| Error::Parse {
            path: "<curve>".into(),
            line,
            message,
        };
        let mut comments = Vec::new();
        let mut header: Option<Vec<String>> = None;
        let mut categories = Vec::new();
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if let Some(c) = line.strip_prefix('#') {
                comments.push(c.strip_prefix(' ').unwrap_or(c).to_string());
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            match &header {
                None => {
                    if fields.len() < FIXED_COLUMNS.len() || fields[..FIXED_COLUMNS.len()] != FIXED_COLUMNS {
                        return Err(err(lineno, format!("unexpected curve header `{line}`")));
                    }
                    for f in &fields[FIXED_COLUMNS.len()..] {
                        let cat = f
                            .strip_prefix("cat_")
                            .and_then(|s| s.strip_suffix("_f"))
                            .ok_or_else(|| err(lineno, format!("unexpected column `{f}`")))?;
                        categories.push(cat.to_string());
                    }
                    header = Some(fields.iter().map(|s| s.to_string()).collect());
                }
                Some(h) => {
                    if fields.len() != h.len() {
                        return Err(err(lineno, format!("expected {} fields, got {}", h.len(), fields.len())));
                    }
                    let num = |k: usize| -> Result<f64> {
                        fields[k]
                            .parse::<f64>()
                            .map_err(|_| err(lineno, format!("bad number `{}`", fields[k])))
                    };
                    rows.push(CurveRow {
                        step: fields[0]
                            .parse()
                            .map_err(|_| err(lineno, format!("bad step `{}`", fields[0])))?,
                        words: num(1)?,
                        precision: num(2)?,
                        recall: num(3)?,
                        f: num(4)?,
                        named_f: num(5)?,
                        nominal_f: num(6)?,
                        category_f: (FIXED_COLUMNS.len()..h.len()).map(num).collect::<Result<_>>()?,
                    });
                }
            }
        }
        if header.is_none() {
            return Err(err(0, "curve file has no header".into()));
        }
        Ok(CurveTable {
            comments,
            categories,
            rows,
        })
    }
}
