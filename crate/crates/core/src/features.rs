//! Sparse binary token features in three views.
//!
//! `Inside` looks only at the current token, `Outside` only at its
//! neighbours within the context window, and `Full` is their union. Names
//! carry an `in:` or `out:` prefix so the two halves never collide.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::par;

/// Bumped whenever the emitted feature names change. Saved models record it.
pub const FEATURE_INVENTORY_VERSION: &str = "mdal-features-1";

pub const DEFAULT_WINDOW: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureView {
    Inside,
    Outside,
    Full,
}

impl fmt::Display for FeatureView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureView::Inside => "inside",
            FeatureView::Outside => "outside",
            FeatureView::Full => "full",
        })
    }
}

impl FromStr for FeatureView {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "inside" => Ok(FeatureView::Inside),
            "outside" => Ok(FeatureView::Outside),
            "full" => Ok(FeatureView::Full),
            _ => Err(Error::Config(format!("unknown feature view `{s}`"))),
        }
    }
}

/// Sorted, duplicate-free list of active feature ids (all values are 1).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureVector(Vec<u32>);

impl FeatureVector {
    pub fn from_ids(mut ids: Vec<u32>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        FeatureVector(ids)
    }

    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Feature name <-> dense id map. Ids are handed out in first-seen order;
/// once frozen, unknown names are reported as absent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureInterner {
    names: Vec<String>,
    index: HashMap<String, u32>,
    frozen: bool,
}

impl FeatureInterner {
    pub fn new() -> Self {
        Self::default()
    }

    /// A frozen interner over `names` in the given order.
    pub fn from_names(names: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i as u32).is_some() {
                return Err(Error::Model(format!("duplicate feature name `{n}`")));
            }
        }
        Ok(FeatureInterner {
            names,
            index,
            frozen: true,
        })
    }

    pub fn intern(&mut self, name: &str) -> Option<u32> {
        if let Some(&id) = self.index.get(name) {
            return Some(id);
        }
        if self.frozen {
            return None;
        }
        let id = u32::try_from(self.names.len()).expect("feature space exceeds u32");
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        Some(id)
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

fn shape(tok: &str) -> &'static str {
    if tok.chars().any(|c| c.is_ascii_digit() || c.is_numeric()) {
        "HasDigit"
    } else if tok.chars().filter(|c| c.is_alphabetic()).count() >= 2
        && tok.chars().all(|c| !c.is_alphabetic() || c.is_uppercase())
    {
        "AllCaps"
    } else if tok.chars().next().is_some_and(char::is_uppercase) {
        "Capitalized"
    } else if tok.chars().all(char::is_lowercase) {
        "AllLower"
    } else {
        "Other"
    }
}

fn inside_names(tok: &str, out: &mut Vec<String>) {
    let lc = tok.to_lowercase();
    out.push(format!("in:w={tok}"));
    out.push(format!("in:lc={lc}"));
    let chars: Vec<char> = tok.chars().collect();
    for k in 1..=4.min(chars.len()) {
        let pre: String = chars[..k].iter().collect();
        let suf: String = chars[chars.len() - k..].iter().collect();
        out.push(format!("in:pre{k}={pre}"));
        out.push(format!("in:suf{k}={suf}"));
    }
    out.push(format!("in:shape={}", shape(tok)));
    out.push("in:bias".to_string());
}

fn outside_names(tokens: &[String], i: usize, window: usize, out: &mut Vec<String>) {
    let at = |off: isize| -> Option<&str> {
        let j = i as isize + off;
        (j >= 0 && (j as usize) < tokens.len()).then(|| tokens[j as usize].as_str())
    };
    let w = window as isize;
    for off in (-w..=w).filter(|&o| o != 0) {
        match at(off) {
            Some(t) => {
                out.push(format!("out:w{off:+}={t}"));
                out.push(format!("out:lc{off:+}={}", t.to_lowercase()));
            }
            None => {
                let sentinel = if off < 0 { "<S>" } else { "</S>" };
                out.push(format!("out:edge{off:+}={sentinel}"));
            }
        }
    }
    let left = at(-1).map_or_else(|| "<S>".to_string(), str::to_lowercase);
    let right = at(1).map_or_else(|| "</S>".to_string(), str::to_lowercase);
    out.push(format!("out:bigram={left}|{right}"));
    out.push("out:bias".to_string());
}

/// Feature names for token `i` of `sentence`.
pub fn feature_names(view: FeatureView, sentence: &Sentence, i: usize, window: usize) -> Result<Vec<String>> {
    if i >= sentence.len() {
        return Err(Error::Structural(format!(
            "token index {i} out of range for sentence {} of length {}",
            sentence.id,
            sentence.len()
        )));
    }
    let mut out = Vec::with_capacity(32);
    if view != FeatureView::Outside {
        inside_names(&sentence.tokens[i], &mut out);
    }
    if view != FeatureView::Inside {
        outside_names(&sentence.tokens, i, window, &mut out);
    }
    Ok(out)
}

/// Extract token `i`'s features, interning new names unless the interner is
/// frozen.
pub fn extract(view: FeatureView, sentence: &Sentence, i: usize, interner: &mut FeatureInterner) -> Result<FeatureVector> {
    let names = feature_names(view, sentence, i, DEFAULT_WINDOW)?;
    Ok(FeatureVector::from_ids(
        names.iter().filter_map(|n| interner.intern(n)).collect(),
    ))
}

/// Token extractor bound to a view and a context window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extractor {
    pub view: FeatureView,
    pub window: usize,
}

impl Extractor {
    pub fn new(view: FeatureView) -> Self {
        Extractor {
            view,
            window: DEFAULT_WINDOW,
        }
    }

    /// Grow a fresh interner over `sentences` and freeze it.
    pub fn build_interner<'a, I>(&self, sentences: I) -> FeatureInterner
    where
        I: IntoIterator<Item = &'a Sentence>,
    {
        let mut interner = FeatureInterner::new();
        for s in sentences {
            for i in 0..s.len() {
                for n in feature_names(self.view, s, i, self.window).expect("index in range") {
                    interner.intern(&n);
                }
            }
        }
        interner.freeze();
        interner
    }

    /// Features for every token of `sentence` against a frozen interner.
    pub fn sentence(&self, sentence: &Sentence, interner: &FeatureInterner) -> Vec<FeatureVector> {
        (0..sentence.len())
            .map(|i| {
                let names = feature_names(self.view, sentence, i, self.window).expect("index in range");
                FeatureVector::from_ids(names.iter().filter_map(|n| interner.get(n)).collect())
            })
            .collect()
    }

    /// [`Extractor::sentence`] over many sentences, in order.
    pub fn sentences(&self, sentences: &[Sentence], interner: &FeatureInterner) -> Vec<Vec<FeatureVector>> {
        par::map(sentences, |s| self.sentence(s, interner))
    }
}
