//! Tokenized sentences with gold mention annotations.

mod bio;
mod io;
mod split;
mod synth;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bio::{decode_bio, encode_bio, BioLabel, BioTag};
pub use io::{load_corpus, read_corpus, read_corpus_from, write_corpus, write_corpus_to, DOCSTART};
pub use split::split_pool_dev;
pub use synth::{generate_synthetic, SynthSpec};

/// Named, nominal or pronominal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MentionLevel {
    Nam,
    Nom,
    Pro,
}

impl MentionLevel {
    pub const ALL: [MentionLevel; 3] = [MentionLevel::Nam, MentionLevel::Nom, MentionLevel::Pro];

    pub fn as_str(self) -> &'static str {
        match self {
            MentionLevel::Nam => "NAM",
            MentionLevel::Nom => "NOM",
            MentionLevel::Pro => "PRO",
        }
    }
}

impl fmt::Display for MentionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MentionLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "NAM" => Ok(MentionLevel::Nam),
            "NOM" => Ok(MentionLevel::Nom),
            "PRO" => Ok(MentionLevel::Pro),
            other => Err(Error::Config(format!("unknown mention level `{other}`"))),
        }
    }
}

/// A token span `[start, end)` referring to an entity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mention {
    pub start: usize,
    pub end: usize,
    pub category: String,
    pub level: MentionLevel,
}

impl Mention {
    pub fn new(start: usize, end: usize, category: impl Into<String>, level: MentionLevel) -> Self {
        Mention {
            start,
            end,
            category: category.into(),
            level,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Category keys end up inside `B-CAT.LVL` tags, so they must survive that
/// syntax.
pub fn validate_category(cat: &str) -> Result<()> {
    if cat.is_empty()
        || cat.contains(|c: char| c == '.' || c == '-' || c.is_whitespace())
    {
        return Err(Error::Structural(format!(
            "invalid category name `{cat}` (must be non-empty without `.`, `-` or whitespace)"
        )));
    }
    Ok(())
}

/// Check that `mentions` are in range for `len` tokens and pairwise disjoint.
/// Returns the mentions sorted by start.
pub(crate) fn check_mentions(mentions: &[Mention], len: usize) -> Result<Vec<&Mention>> {
    let mut sorted: Vec<&Mention> = mentions.iter().collect();
    sorted.sort_by_key(|m| (m.start, m.end));
    let mut prev_end = 0usize;
    for (i, m) in sorted.iter().enumerate() {
        if m.start >= m.end || m.end > len {
            return Err(Error::Structural(format!(
                "mention [{}, {}) out of range for {len} tokens",
                m.start, m.end
            )));
        }
        if i > 0 && m.start < prev_end {
            return Err(Error::Structural(format!(
                "mention [{}, {}) overlaps a previous mention",
                m.start, m.end
            )));
        }
        validate_category(&m.category)?;
        prev_end = m.end;
    }
    Ok(sorted)
}

/// One sentence: the unit of selection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: usize,
    pub doc_id: usize,
    pub tokens: Vec<String>,
    /// Gold mentions, sorted by start.
    pub mentions: Vec<Mention>,
}

impl Sentence {
    pub fn new(id: usize, doc_id: usize, tokens: Vec<String>, mut mentions: Vec<Mention>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Structural(format!("sentence {id} has no tokens")));
        }
        check_mentions(&mentions, tokens.len())?;
        mentions.sort();
        Ok(Sentence {
            id,
            doc_id,
            tokens,
            mentions,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Word count used by every budget computation.
    pub fn words(&self) -> usize {
        self.tokens.len()
    }

    pub fn gold_labels(&self) -> Vec<BioLabel> {
        encode_bio(&self.mentions, self.len()).expect("sentence mentions are validated on construction")
    }
}

/// An ordered collection of sentences plus its category inventory.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Corpus {
    sentences: Vec<Sentence>,
    categories: Vec<String>,
}

impl Corpus {
    /// Build a corpus whose category list is the sorted set of categories
    /// that occur in `sentences`.
    pub fn new(sentences: Vec<Sentence>) -> Result<Self> {
        let categories: BTreeSet<String> = sentences
            .iter()
            .flat_map(|s| s.mentions.iter().map(|m| m.category.clone()))
            .collect();
        Self::with_categories(sentences, categories.into_iter().collect())
    }

    /// Build a corpus with an explicit category inventory, which must cover
    /// every mention.
    pub fn with_categories(sentences: Vec<Sentence>, mut categories: Vec<String>) -> Result<Self> {
        categories.sort();
        categories.dedup();
        for c in &categories {
            validate_category(c)?;
        }
        let mut prev: Option<&Sentence> = None;
        for s in &sentences {
            if let Some(p) = prev {
                if s.id <= p.id {
                    return Err(Error::Structural(format!(
                        "sentence ids must be strictly increasing ({} after {})",
                        s.id, p.id
                    )));
                }
                if s.doc_id < p.doc_id {
                    return Err(Error::Structural(format!(
                        "documents must be contiguous (doc {} after doc {})",
                        s.doc_id, p.doc_id
                    )));
                }
            }
            if s.tokens.is_empty() {
                return Err(Error::Structural(format!("sentence {} has no tokens", s.id)));
            }
            check_mentions(&s.mentions, s.len())?;
            for m in &s.mentions {
                if categories.binary_search(&m.category).is_err() {
                    return Err(Error::Structural(format!(
                        "category `{}` of sentence {} not in the category list",
                        m.category, s.id
                    )));
                }
            }
            prev = Some(s);
        }
        Ok(Corpus {
            sentences,
            categories,
        })
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn word_count(&self) -> usize {
        self.sentences.iter().map(Sentence::words).sum()
    }

    pub fn mention_count(&self) -> usize {
        self.sentences.iter().map(|s| s.mentions.len()).sum()
    }

    /// Position of the sentence with `id`.
    pub fn position(&self, id: usize) -> Option<usize> {
        self.sentences.binary_search_by_key(&id, |s| s.id).ok()
    }

    pub fn get(&self, id: usize) -> Option<&Sentence> {
        self.position(id).map(|i| &self.sentences[i])
    }

    /// Distinct levels occurring in the corpus, in `NAM, NOM, PRO` order.
    pub fn levels(&self) -> Vec<MentionLevel> {
        let seen: BTreeSet<MentionLevel> = self
            .sentences
            .iter()
            .flat_map(|s| s.mentions.iter().map(|m| m.level))
            .collect();
        seen.into_iter().collect()
    }

    /// Drop every mention whose level is not in `keep`. The category list is
    /// left untouched.
    pub fn retain_levels(&self, keep: &[MentionLevel]) -> Corpus {
        let sentences = self
            .sentences
            .iter()
            .map(|s| Sentence {
                mentions: s
                    .mentions
                    .iter()
                    .filter(|m| keep.contains(&m.level))
                    .cloned()
                    .collect(),
                ..s.clone()
            })
            .collect();
        Corpus {
            sentences,
            categories: self.categories.clone(),
        }
    }

    /// Sub-corpus of the sentences whose position satisfies `keep`, sharing
    /// this corpus's category list.
    pub(crate) fn filter_by<F: Fn(&Sentence) -> bool>(&self, keep: F) -> Corpus {
        Corpus {
            sentences: self.sentences.iter().filter(|s| keep(s)).cloned().collect(),
            categories: self.categories.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn sentence_rejects_overlap() {
        let m = vec![
            Mention::new(0, 2, "PER", MentionLevel::Nam),
            Mention::new(1, 3, "LOC", MentionLevel::Nam),
        ];
        assert!(Sentence::new(0, 0, toks("a b c"), m).is_err());
    }

    #[test]
    fn sentence_rejects_empty_and_out_of_range() {
        assert!(Sentence::new(0, 0, vec![], vec![]).is_err());
        let m = vec![Mention::new(2, 4, "PER", MentionLevel::Nam)];
        assert!(Sentence::new(0, 0, toks("a b c"), m).is_err());
        let m = vec![Mention::new(1, 1, "PER", MentionLevel::Nam)];
        assert!(Sentence::new(0, 0, toks("a b c"), m).is_err());
    }

    #[test]
    fn corpus_checks_ids_and_categories() {
        let a = Sentence::new(3, 0, toks("a"), vec![]).unwrap();
        let b = Sentence::new(3, 0, toks("b"), vec![]).unwrap();
        assert!(Corpus::new(vec![a.clone(), b]).is_err());

        let c = Sentence::new(4, 0, toks("x y"), vec![Mention::new(0, 1, "PER", MentionLevel::Nom)]).unwrap();
        assert!(Corpus::with_categories(vec![a.clone(), c.clone()], vec!["LOC".into()]).is_err());
        let corpus = Corpus::new(vec![a, c]).unwrap();
        assert_eq!(corpus.categories(), ["PER".to_string()]);
        assert_eq!(corpus.word_count(), 3);
        assert_eq!(corpus.get(4).unwrap().tokens[1], "y");
        assert!(corpus.get(5).is_none());
    }

    #[test]
    fn retain_levels_drops_pronouns() {
        let s = Sentence::new(
            0,
            0,
            toks("he met Anna"),
            vec![
                Mention::new(0, 1, "PER", MentionLevel::Pro),
                Mention::new(2, 3, "PER", MentionLevel::Nam),
            ],
        )
        .unwrap();
        let c = Corpus::new(vec![s]).unwrap();
        let f = c.retain_levels(&[MentionLevel::Nam, MentionLevel::Nom]);
        assert_eq!(f.mention_count(), 1);
        assert_eq!(f.levels(), vec![MentionLevel::Nam]);
        assert_eq!(f.categories(), c.categories());
    }

    #[test]
    fn category_syntax() {
        assert!(validate_category("PERSON").is_ok());
        assert!(validate_category("A.B").is_err());
        assert!(validate_category("A-B").is_err());
        assert!(validate_category("").is_err());
    }
}
