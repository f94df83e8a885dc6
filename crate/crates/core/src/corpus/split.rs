use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;

use super::Corpus;
use crate::error::{Error, Result};
use crate::rng;

/// Split whole documents off into a development set.
///
/// Documents are visited in a seeded shuffle and moved to the dev side until
/// the dev word share first reaches `dev_fraction`. At least one document
/// always stays in the pool.
pub fn split_pool_dev(corpus: &Corpus, dev_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(dev_fraction > 0.0 && dev_fraction < 1.0) {
        return Err(Error::Split(format!(
            "dev fraction must lie strictly between 0 and 1, got {dev_fraction}"
        )));
    }
    let mut doc_words: BTreeMap<usize, usize> = BTreeMap::new();
    for s in corpus.sentences() {
        *doc_words.entry(s.doc_id).or_default() += s.words();
    }
    if doc_words.len() < 2 {
        return Err(Error::Split(format!(
            "need at least two documents to split, found {}",
            doc_words.len()
        )));
    }
    let total = corpus.word_count() as f64;
    let mut docs: Vec<usize> = doc_words.keys().copied().collect();
    docs.shuffle(&mut rng::stream(seed, &[rng::tag::SPLIT]));

    let mut dev_docs = HashSet::new();
    let mut dev_words = 0usize;
    for &d in &docs[..docs.len() - 1] {
        dev_docs.insert(d);
        dev_words += doc_words[&d];
        if dev_words as f64 / total >= dev_fraction {
            break;
        }
    }
    let pool = corpus.filter_by(|s| !dev_docs.contains(&s.doc_id));
    let dev = corpus.filter_by(|s| dev_docs.contains(&s.doc_id));
    Ok((pool, dev))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, Sentence, SynthSpec};

    fn docs(lens: &[usize]) -> Corpus {
        let sentences = lens
            .iter()
            .enumerate()
            .map(|(i, &n)| Sentence::new(i, i, vec!["w".to_string(); n], vec![]).unwrap())
            .collect();
        Corpus::new(sentences).unwrap()
    }

    #[test]
    fn two_equal_docs_half_each() {
        let c = docs(&[10, 10]);
        let (pool, dev) = split_pool_dev(&c, 0.5, 1).unwrap();
        assert_eq!(pool.len(), 1);
        assert_eq!(dev.len(), 1);
        assert_ne!(pool.sentences()[0].doc_id, dev.sentences()[0].doc_id);
    }

    #[test]
    fn deterministic_and_disjoint() {
        let c = docs(&[3, 5, 7, 2, 9, 4]);
        let a = split_pool_dev(&c, 0.3, 42).unwrap();
        let b = split_pool_dev(&c, 0.3, 42).unwrap();
        assert_eq!(a, b);
        let (pool, dev) = a;
        assert_eq!(pool.len() + dev.len(), c.len());
        assert!(pool.sentences().iter().all(|s| dev.get(s.id).is_none()));
    }

    #[test]
    fn errors() {
        assert!(split_pool_dev(&docs(&[5]), 0.5, 0).is_err());
        assert!(split_pool_dev(&docs(&[5, 5]), 0.0, 0).is_err());
        assert!(split_pool_dev(&docs(&[5, 5]), 1.0, 0).is_err());
    }

    #[test]
    fn never_empties_the_pool() {
        let (pool, dev) = split_pool_dev(&docs(&[1, 100]), 0.99, 3).unwrap();
        assert!(!pool.is_empty() && !dev.is_empty());
    }

    #[test]
    fn synthetic_99_docs_share() {
        let spec = SynthSpec {
            sentences: 4000,
            docs: 99,
            ..SynthSpec::default()
        };
        let corpus = generate_synthetic(&spec, 5).unwrap();
        for seed in 0..5 {
            let (_, dev) = split_pool_dev(&corpus, 0.27, seed).unwrap();
            let share = dev.word_count() as f64 / corpus.word_count() as f64;
            assert!((0.2..=0.35).contains(&share), "share {share}");
        }
    }
}
