//! Penalized negative log-likelihood of a multinomial logistic model over
//! sparse binary features.
//!
//! Parameters are (feature, label) pairs grouped by feature: the pairs of
//! feature `f` occupy `offsets[f]..offsets[f + 1]` and `pair_labels` names
//! the label of each. With [`Support::All`] every feature carries every
//! label; with [`Support::Observed`] only pairs seen in the training data
//! exist and all other weights are fixed at zero.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::par;

const TOKEN_CHUNK: usize = 256;
const FEATURE_CHUNK: usize = 1024;

/// Which (feature, label) pairs get a trainable weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Support {
    /// Pairs that co-occur at least once in the training data.
    #[default]
    Observed,
    /// The full feature x label product.
    All,
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Support::Observed => "observed",
            Support::All => "all",
        })
    }
}

impl FromStr for Support {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "observed" => Ok(Support::Observed),
            "all" => Ok(Support::All),
            _ => Err(Error::Config(format!("unknown feature support `{s}` (expected observed or all)"))),
        }
    }
}

/// A training set in compressed sparse row form, with its transpose kept
/// for the gradient pass.
#[derive(Debug, Clone)]
pub struct Problem {
    features: usize,
    labels: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    gold: Vec<u32>,
    col_ptr: Vec<usize>,
    col_rows: Vec<u32>,
    offsets: Vec<usize>,
    pair_labels: Vec<u32>,
    inv_sigma2: f64,
}

impl Problem {
    /// `rows` yields each token's active feature ids (all `< features`) and
    /// its gold label id.
    pub fn new<'a, I>(rows: I, features: usize, labels: usize, l2_sigma2: f64, support: Support) -> Self
    where
        I: IntoIterator<Item = (&'a [u32], u32)>,
    {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut gold = Vec::new();
        let mut col_count = vec![0usize; features];
        for (feats, y) in rows {
            assert!((y as usize) < labels, "gold label out of range");
            for &f in feats {
                col_count[f as usize] += 1;
            }
            cols.extend_from_slice(feats);
            row_ptr.push(cols.len());
            gold.push(y);
        }
        let mut col_ptr = Vec::with_capacity(features + 1);
        col_ptr.push(0);
        for c in &col_count {
            col_ptr.push(col_ptr.last().unwrap() + c);
        }
        let mut fill = col_ptr[..features].to_vec();
        let mut col_rows = vec![0u32; cols.len()];
        for t in 0..gold.len() {
            for &f in &cols[row_ptr[t]..row_ptr[t + 1]] {
                col_rows[fill[f as usize]] = t as u32;
                fill[f as usize] += 1;
            }
        }

        let mut offsets = Vec::with_capacity(features + 1);
        offsets.push(0);
        let mut pair_labels = Vec::new();
        let mut seen = vec![false; labels];
        for f in 0..features {
            match support {
                Support::All => pair_labels.extend(0..labels as u32),
                Support::Observed => {
                    for &t in &col_rows[col_ptr[f]..col_ptr[f + 1]] {
                        seen[gold[t as usize] as usize] = true;
                    }
                    for (l, s) in seen.iter_mut().enumerate() {
                        if *s {
                            pair_labels.push(l as u32);
                            *s = false;
                        }
                    }
                }
            }
            offsets.push(pair_labels.len());
        }

        Problem {
            features,
            labels,
            row_ptr,
            cols,
            gold,
            col_ptr,
            col_rows,
            offsets,
            pair_labels,
            inv_sigma2: 1.0 / l2_sigma2,
        }
    }

    /// Number of trainable weights.
    pub fn dim(&self) -> usize {
        self.pair_labels.len()
    }

    pub fn tokens(&self) -> usize {
        self.gold.len()
    }

    /// `(feature, label)` of every parameter, in parameter order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        (0..self.features).flat_map(move |f| {
            self.pair_labels[self.offsets[f]..self.offsets[f + 1]]
                .iter()
                .map(move |&l| (f, l))
        })
    }

    /// Objective value at `w`; fills `grad` and uses `resid` as scratch.
    pub fn evaluate(&self, w: &[f64], grad: &mut [f64], resid: &mut Vec<f64>) -> f64 {
        let l = self.labels;
        assert_eq!(w.len(), self.dim());
        assert_eq!(grad.len(), self.dim());
        resid.resize(self.tokens() * l, 0.0);

        let losses = par::map_chunks_mut(resid, TOKEN_CHUNK * l, |ci, chunk| {
            let mut loss = 0.0;
            for (k, r) in chunk.chunks_mut(l).enumerate() {
                let t = ci * TOKEN_CHUNK + k;
                r.fill(0.0);
                for &f in &self.cols[self.row_ptr[t]..self.row_ptr[t + 1]] {
                    let range = self.offsets[f as usize]..self.offsets[f as usize + 1];
                    if range.len() == l {
                        for (s, x) in r.iter_mut().zip(&w[range]) {
                            *s += x;
                        }
                    } else {
                        for (&lab, x) in self.pair_labels[range.clone()].iter().zip(&w[range]) {
                            r[lab as usize] += x;
                        }
                    }
                }
                let y = self.gold[t] as usize;
                let mut max = r[0];
                for &s in &r[1..] {
                    if s > max {
                        max = s;
                    }
                }
                let gold_score = r[y];
                let mut z = 0.0;
                for s in r.iter_mut() {
                    *s = (*s - max).exp();
                    z += *s;
                }
                loss += max + z.ln() - gold_score;
                let inv_z = 1.0 / z;
                for s in r.iter_mut() {
                    *s *= inv_z;
                }
                r[y] -= 1.0;
            }
            loss
        });
        let mut value: f64 = losses.iter().sum();

        let inv = self.inv_sigma2;
        let resid: &[f64] = resid;
        // Feature chunks map to contiguous parameter ranges; split the
        // gradient along those boundaries.
        let bounds: Vec<usize> = (0..self.features.div_ceil(FEATURE_CHUNK)).collect();
        let mut slices: Vec<&mut [f64]> = Vec::with_capacity(bounds.len());
        let mut rest = grad;
        for &c in &bounds {
            let lo = self.offsets[c * FEATURE_CHUNK];
            let hi = self.offsets[((c + 1) * FEATURE_CHUNK).min(self.features)];
            let (head, tail) = rest.split_at_mut(hi - lo);
            slices.push(head);
            rest = tail;
        }
        let penalties = par::map_chunks_mut(&mut slices, 1, |c, s| {
            let g = &mut *s[0];
            let base = self.offsets[c * FEATURE_CHUNK];
            let mut pen = 0.0;
            for f in c * FEATURE_CHUNK..((c + 1) * FEATURE_CHUNK).min(self.features) {
                let (lo, hi) = (self.offsets[f], self.offsets[f + 1]);
                let gf = &mut g[lo - base..hi - base];
                let wf = &w[lo..hi];
                let labs = &self.pair_labels[lo..hi];
                for (gi, wi) in gf.iter_mut().zip(wf) {
                    *gi = wi * inv;
                    pen += wi * wi;
                }
                let rows = &self.col_rows[self.col_ptr[f]..self.col_ptr[f + 1]];
                if labs.len() == l {
                    for &t in rows {
                        let rt = &resid[t as usize * l..(t as usize + 1) * l];
                        for (gi, ri) in gf.iter_mut().zip(rt) {
                            *gi += ri;
                        }
                    }
                } else {
                    for &t in rows {
                        let rt = &resid[t as usize * l..(t as usize + 1) * l];
                        for (gi, &lab) in gf.iter_mut().zip(labs) {
                            *gi += rt[lab as usize];
                        }
                    }
                }
            }
            pen
        });
        value += 0.5 * inv * penalties.iter().sum::<f64>();
        value
    }

    /// Objective value only (allocates scratch).
    pub fn value(&self, w: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim()];
        self.evaluate(w, &mut g, &mut Vec::new())
    }
}
