//! Deterministic synthetic mention corpora.
//!
//! Sentences are a mix of filler words and mentions. Named mentions draw
//! capitalized tokens from a Zipf-distributed per-category name list (some
//! names shared between categories), nominal mentions draw lowercase heads
//! from a smaller per-category list, and mentions are often preceded by a
//! category cue word. A fraction of sentences carries no mentions at all,
//! and stray cue words are sprinkled over filler positions.

use std::collections::{BTreeMap, HashSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{validate_category, Corpus, Mention, MentionLevel, Sentence};
use crate::error::{Error, Result};
use crate::rng;

const DEFAULT_CATEGORIES: [&str; 8] = [
    "PERSON",
    "LOCATION",
    "ORGANIZATION",
    "DATE",
    "EVENT",
    "FACILITY",
    "VEHICLE",
    "WEAPON",
];

const PRONOUNS: [&str; 7] = ["he", "she", "they", "him", "her", "them", "it"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub sentences: usize,
    pub docs: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub categories: Vec<String>,
    /// Generated cue words per category, unless overridden in `cues`.
    pub cue_words: usize,
    pub cues: BTreeMap<String, Vec<String>>,
    /// Probability that a mention is immediately preceded by a cue word.
    pub cue_rate: f64,
    /// Probability that a filler position holds a stray cue word instead.
    pub cue_noise: f64,
    /// Expected mentions per word over the whole corpus.
    pub density: f64,
    /// Fraction of sentences generated without any mention.
    pub quiet_fraction: f64,
    /// Relative weights of NAM, NOM, PRO mentions.
    pub level_mix: [f64; 3],
    pub name_vocab: usize,
    pub nominal_vocab: usize,
    pub filler_vocab: usize,
    pub zipf_exponent: f64,
    /// Fraction of each category's names drawn from a pool shared by all
    /// categories.
    pub ambiguity: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            sentences: 4200,
            docs: 99,
            min_len: 4,
            max_len: 20,
            categories: Self::category_names(5),
            cue_words: 4,
            cues: BTreeMap::new(),
            cue_rate: 0.6,
            cue_noise: 0.03,
            density: 0.06,
            quiet_fraction: 0.5,
            level_mix: [0.3, 0.6, 0.1],
            name_vocab: 300,
            nominal_vocab: 25,
            filler_vocab: 2000,
            zipf_exponent: 1.0,
            ambiguity: 0.1,
        }
    }
}

impl SynthSpec {
    /// The first `n` built-in category names, padded with `CAT<i>`.
    pub fn category_names(n: usize) -> Vec<String> {
        (0..n)
            .map(|i| {
                DEFAULT_CATEGORIES
                    .get(i)
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| format!("CAT{i}"))
            })
            .collect()
    }

    fn mention_rate(&self) -> f64 {
        if self.density == 0.0 {
            0.0
        } else {
            self.density / (1.0 - self.quiet_fraction)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.sentences == 0 {
            return bad("synthetic spec needs at least one sentence".into());
        }
        if self.docs == 0 || self.docs > self.sentences {
            return bad(format!("doc count {} must be in 1..={}", self.docs, self.sentences));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return bad(format!(
                "sentence length range {}..={} is degenerate",
                self.min_len, self.max_len
            ));
        }
        if self.categories.is_empty() {
            return bad("synthetic spec needs at least one category".into());
        }
        let mut seen = HashSet::new();
        for c in &self.categories {
            validate_category(c).map_err(|e| Error::Config(e.to_string()))?;
            if !seen.insert(c) {
                return bad(format!("duplicate category `{c}`"));
            }
        }
        for (c, words) in &self.cues {
            if !seen.contains(c) {
                return bad(format!("cue list for unknown category `{c}`"));
            }
            if words.is_empty() || words.iter().any(|w| w.is_empty() || w.contains(char::is_whitespace)) {
                return bad(format!("cue list for `{c}` must be non-empty single tokens"));
            }
        }
        for (name, p) in [
            ("cue_rate", self.cue_rate),
            ("cue_noise", self.cue_noise),
            ("ambiguity", self.ambiguity),
            ("quiet_fraction", self.quiet_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !(self.density >= 0.0) {
            return bad(format!("density must be non-negative, got {}", self.density));
        }
        if self.density > 0.0 && !(self.mention_rate() <= 1.0) {
            return bad(format!(
                "density {} too high for quiet fraction {}",
                self.density, self.quiet_fraction
            ));
        }
        if self.level_mix.iter().any(|w| !(*w >= 0.0)) || self.level_mix.iter().sum::<f64>() <= 0.0 {
            return bad("level mix needs non-negative weights with a positive sum".into());
        }
        if self.cue_words == 0 || self.name_vocab == 0 || self.nominal_vocab == 0 || self.filler_vocab == 0 {
            return bad("vocabulary sizes must be positive".into());
        }
        if !(self.zipf_exponent >= 0.0) {
            return bad("zipf exponent must be non-negative".into());
        }
        Ok(())
    }
}

struct WordForge {
    used: HashSet<String>,
}

impl WordForge {
    const ONSETS: &'static [&'static str] = &[
        "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z", "br",
        "st", "tr", "sh", "ch", "gr",
    ];
    const VOWELS: &'static [&'static str] = &["a", "e", "i", "o", "u", "ai", "ou"];

    fn fresh(&mut self, rng: &mut ChaCha8Rng, syllables: std::ops::RangeInclusive<usize>, capitalize: bool) -> String {
        loop {
            let n = rng.random_range(syllables.clone());
            let mut w = String::new();
            for _ in 0..n {
                w.push_str(Self::ONSETS.choose(rng).unwrap());
                w.push_str(Self::VOWELS.choose(rng).unwrap());
            }
            if rng.random_bool(0.3) {
                w.push_str(["n", "r", "s", "l", "k"].choose(rng).unwrap());
            }
            if capitalize {
                let mut c = w.chars();
                let first = c.next().unwrap().to_ascii_uppercase();
                w = std::iter::once(first).chain(c).collect();
            }
            if PRONOUNS.contains(&w.as_str()) {
                continue;
            }
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }

    fn reserve(&mut self, w: &str) {
        self.used.insert(w.to_string());
    }
}

struct Zipf {
    dist: WeightedIndex<f64>,
}

impl Zipf {
    fn new(n: usize, s: f64) -> Self {
        let weights: Vec<f64> = (1..=n).map(|r| (r as f64).powf(-s)).collect();
        Zipf {
            dist: WeightedIndex::new(weights).expect("positive weights"),
        }
    }

    fn pick<'a>(&self, rng: &mut ChaCha8Rng, words: &'a [String]) -> &'a str {
        &words[self.dist.sample(rng)]
    }
}

struct Vocab {
    names: Vec<Vec<String>>,
    nominals: Vec<Vec<String>>,
    cues: Vec<Vec<String>>,
    modifiers: Vec<String>,
    filler: Vec<String>,
    name_zipf: Zipf,
    nominal_zipf: Zipf,
    filler_zipf: Zipf,
}

impl Vocab {
    fn build(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Self {
        let mut forge = WordForge { used: HashSet::new() };
        for p in PRONOUNS {
            forge.reserve(p);
        }
        for words in spec.cues.values() {
            for w in words {
                forge.reserve(w);
            }
        }
        let shared: Vec<String> = (0..spec.name_vocab)
            .map(|_| forge.fresh(rng, 2..=3, true))
            .collect();
        let names = spec
            .categories
            .iter()
            .map(|_| {
                (0..spec.name_vocab)
                    .map(|_| {
                        if rng.random_bool(spec.ambiguity) {
                            shared.choose(rng).unwrap().clone()
                        } else {
                            forge.fresh(rng, 2..=3, true)
                        }
                    })
                    .collect()
            })
            .collect();
        let nominals = spec
            .categories
            .iter()
            .map(|_| (0..spec.nominal_vocab).map(|_| forge.fresh(rng, 2..=3, false)).collect())
            .collect();
        let cues = spec
            .categories
            .iter()
            .map(|c| match spec.cues.get(c) {
                Some(words) => words.clone(),
                None => (0..spec.cue_words).map(|_| forge.fresh(rng, 1..=2, false)).collect(),
            })
            .collect();
        let modifiers = (0..20).map(|_| forge.fresh(rng, 1..=2, false)).collect();
        let filler = (0..spec.filler_vocab)
            .map(|_| forge.fresh(rng, 1..=3, false))
            .collect();
        Vocab {
            names,
            nominals,
            cues,
            modifiers,
            filler,
            name_zipf: Zipf::new(spec.name_vocab, spec.zipf_exponent),
            nominal_zipf: Zipf::new(spec.nominal_vocab, spec.zipf_exponent),
            filler_zipf: Zipf::new(spec.filler_vocab, spec.zipf_exponent),
        }
    }
}

struct Planned {
    category: usize,
    level: MentionLevel,
    len: usize,
    cue: bool,
}

impl Planned {
    fn footprint(&self) -> usize {
        self.len + usize::from(self.cue)
    }
}

enum Block {
    Mention(Planned),
    Filler,
}

/// Generate a corpus; a pure function of `(spec, seed)`.
pub fn generate_synthetic(spec: &SynthSpec, seed: u64) -> Result<Corpus> {
    spec.validate()?;
    let vocab = Vocab::build(spec, &mut rng::stream(seed, &[rng::tag::SYNTH, 0]));
    let level_dist = WeightedIndex::new(spec.level_mix).expect("validated level mix");
    let rate = spec.mention_rate();

    let mut sentences = Vec::with_capacity(spec.sentences);
    for i in 0..spec.sentences {
        let rng = &mut rng::stream(seed, &[rng::tag::SYNTH, 1, i as u64]);
        let len = rng.random_range(spec.min_len..=spec.max_len);
        let quiet = spec.quiet_fraction > 0.0 && rng.random_bool(spec.quiet_fraction);
        let k = if quiet || rate == 0.0 {
            0
        } else {
            (0..len).filter(|_| rng.random_bool(rate)).count()
        };
        let mut plans: Vec<Planned> = (0..k)
            .map(|_| {
                let level = MentionLevel::ALL[level_dist.sample(rng)];
                let len = match level {
                    MentionLevel::Nam => *[1, 1, 1, 1, 1, 1, 2, 2, 2, 3].choose(rng).unwrap(),
                    MentionLevel::Nom => *[1, 1, 1, 1, 1, 1, 1, 2, 2, 2].choose(rng).unwrap(),
                    MentionLevel::Pro => 1,
                };
                Planned {
                    category: rng.random_range(0..spec.categories.len()),
                    level,
                    len,
                    cue: level != MentionLevel::Pro && rng.random_bool(spec.cue_rate),
                }
            })
            .collect();
        while plans.iter().map(Planned::footprint).sum::<usize>() > len {
            plans.pop();
        }
        let used: usize = plans.iter().map(Planned::footprint).sum();
        let mut blocks: Vec<Block> = plans.into_iter().map(Block::Mention).collect();
        blocks.extend((0..len - used).map(|_| Block::Filler));
        blocks.shuffle(rng);

        let mut tokens = Vec::with_capacity(len);
        let mut mentions = Vec::new();
        for block in blocks {
            match block {
                Block::Filler => {
                    if spec.cue_noise > 0.0 && rng.random_bool(spec.cue_noise) {
                        let c = rng.random_range(0..vocab.cues.len());
                        tokens.push(vocab.cues[c].choose(rng).unwrap().clone());
                    } else {
                        tokens.push(vocab.filler_zipf.pick(rng, &vocab.filler).to_string());
                    }
                }
                Block::Mention(p) => {
                    if p.cue {
                        tokens.push(vocab.cues[p.category].choose(rng).unwrap().clone());
                    }
                    let start = tokens.len();
                    for j in 0..p.len {
                        let w = match p.level {
                            MentionLevel::Nam => vocab.name_zipf.pick(rng, &vocab.names[p.category]),
                            MentionLevel::Nom if j + 1 < p.len => vocab.modifiers.choose(rng).unwrap(),
                            MentionLevel::Nom => vocab.nominal_zipf.pick(rng, &vocab.nominals[p.category]),
                            MentionLevel::Pro => PRONOUNS.choose(rng).unwrap(),
                        };
                        tokens.push(w.to_string());
                    }
                    mentions.push(Mention::new(
                        start,
                        start + p.len,
                        spec.categories[p.category].clone(),
                        p.level,
                    ));
                }
            }
        }
        debug_assert_eq!(tokens.len(), len);
        let doc = i * spec.docs / spec.sentences;
        sentences.push(Sentence::new(i, doc, tokens, mentions)?);
    }
    Corpus::new(sentences)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{read_corpus_from, write_corpus_to};
    use std::path::Path;

    #[test]
    fn zero_density_means_no_mentions() {
        let spec = SynthSpec {
            sentences: 200,
            density: 0.0,
            ..SynthSpec::default()
        };
        let c = generate_synthetic(&spec, 1).unwrap();
        assert_eq!(c.mention_count(), 0);
        assert!(c.categories().is_empty());
    }

    #[test]
    fn deterministic() {
        let spec = SynthSpec {
            sentences: 300,
            ..SynthSpec::default()
        };
        assert_eq!(generate_synthetic(&spec, 9).unwrap(), generate_synthetic(&spec, 9).unwrap());
        assert_ne!(generate_synthetic(&spec, 9).unwrap(), generate_synthetic(&spec, 10).unwrap());
    }

    #[test]
    fn default_spec_mention_count_tracks_density() {
        let spec = SynthSpec::default();
        for seed in [1, 2, 3] {
            let c = generate_synthetic(&spec, seed).unwrap();
            assert_eq!(c.len(), spec.sentences);
            assert_eq!(c.categories().len(), 5);
            let expected = spec.density * c.word_count() as f64;
            let got = c.mention_count() as f64;
            assert!((got - expected).abs() <= 0.1 * expected, "got {got}, expected {expected}");
            let docs: HashSet<usize> = c.sentences().iter().map(|s| s.doc_id).collect();
            assert_eq!(docs.len(), 99);
        }
    }

    #[test]
    fn named_mentions_are_a_minority() {
        let c = generate_synthetic(&SynthSpec::default(), 4).unwrap();
        let named = c
            .sentences()
            .iter()
            .flat_map(|s| &s.mentions)
            .filter(|m| m.level == MentionLevel::Nam)
            .count();
        assert!((named as f64) < 0.4 * c.mention_count() as f64);
    }

    #[test]
    fn write_read_round_trip() {
        let spec = SynthSpec {
            sentences: 500,
            docs: 7,
            ..SynthSpec::default()
        };
        let c = generate_synthetic(&spec, 77).unwrap();
        let mut buf = Vec::new();
        write_corpus_to(&c, &mut buf).unwrap();
        let back = read_corpus_from(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn cue_overrides_are_used() {
        let mut spec = SynthSpec {
            sentences: 300,
            cue_rate: 1.0,
            ..SynthSpec::default()
        };
        spec.cues.insert("PERSON".into(), vec!["mister".into()]);
        let c = generate_synthetic(&spec, 3).unwrap();
        let person_cued = c.sentences().iter().any(|s| {
            s.mentions
                .iter()
                .any(|m| m.category == "PERSON" && m.level != MentionLevel::Pro && m.start > 0 && s.tokens[m.start - 1] == "mister")
        });
        assert!(person_cued);
    }

    #[test]
    fn degenerate_specs_rejected() {
        let bad = [
            SynthSpec { categories: vec![], ..SynthSpec::default() },
            SynthSpec { min_len: 0, ..SynthSpec::default() },
            SynthSpec { min_len: 5, max_len: 4, ..SynthSpec::default() },
            SynthSpec { sentences: 0, ..SynthSpec::default() },
            SynthSpec { density: 0.9, ..SynthSpec::default() },
            SynthSpec { cue_rate: 1.5, ..SynthSpec::default() },
            SynthSpec { categories: vec!["A.B".into()], ..SynthSpec::default() },
        ];
        for spec in bad {
            assert!(matches!(generate_synthetic(&spec, 0), Err(Error::Config(_))), "{spec:?}");
        }
    }
}
