//! Line-oriented `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are dotted
//! paths. Every key may appear once and every key must be understood by the
//! consumer, so typos fail loudly instead of silently using a default.

use std::collections::BTreeMap;
use std::fmt::{Display, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::active_loop::{CommitteeSetting, StepBudget};
use crate::corpus::{validate_category, MentionLevel, SynthSpec};
use crate::error::{Error, Result};
use crate::maxent::TrainConfig;
use crate::scoring::{Metric, ScoringPolicy};

/// Parsed entries, consumed key by key.
#[derive(Debug, Clone)]
pub struct KeyValues {
    origin: PathBuf,
    entries: BTreeMap<String, (String, usize)>,
}

impl KeyValues {
    pub fn parse(text: &str, origin: impl Into<PathBuf>) -> Result<Self> {
        let origin = origin.into();
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: origin.clone(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || key.split('.').any(str::is_empty) || key.contains(char::is_whitespace) {
                return Err(err(format!("malformed key `{key}`")));
            }
            if let Some((_, first)) = entries.insert(key.to_string(), (value.to_string(), i + 1)) {
                return Err(err(format!("duplicate key `{key}` (first set on line {first})")));
            }
        }
        Ok(KeyValues { origin, entries })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn origin(&self) -> &Path {
        &self.origin
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn has_prefix(&self, prefix: &str) -> bool {
        self.entries.keys().any(|k| k.starts_with(prefix))
    }

    fn error(&self, line: usize, message: String) -> Error {
        Error::Parse {
            path: self.origin.clone(),
            line,
            message,
        }
    }

    pub fn take_str(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(v, _)| v)
    }

    pub fn take<T>(&mut self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|e| self.error(line, format!("bad value `{v}` for `{key}`: {e}"))),
        }
    }

    pub fn take_or<T>(&mut self, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.take(key)?.unwrap_or(default))
    }

    /// Comma-separated list; empty items are dropped.
    pub fn take_list<T>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|e| self.error(line, format!("bad item `{s}` in `{key}`: {e}")))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Remove every `prefix.<name>` key, returning `(name, value)` pairs.
    pub fn take_prefixed<T>(&mut self, prefix: &str) -> Result<Vec<(String, T)>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let dotted = format!("{prefix}.");
        let keys: Vec<String> = self.entries.keys().filter(|k| k.starts_with(&dotted)).cloned().collect();
        keys.into_iter()
            .map(|k| {
                let v = self.take(&k)?.expect("key present");
                Ok((k[dotted.len()..].to_string(), v))
            })
            .collect()
    }

    /// Fail on any key nobody consumed.
    pub fn finish(self) -> Result<()> {
        match self.entries.iter().min_by_key(|(_, (_, line))| *line) {
            None => Ok(()),
            Some((k, (_, line))) => Err(self.error(*line, format!("unknown key `{k}`"))),
        }
    }
}

fn bool_value(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{s}` is not a boolean")),
    }
}

/// A synthetic corpus request: generator parameters plus the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub spec: SynthSpec,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            spec: SynthSpec::default(),
            seed: 1,
        }
    }
}

impl SynthConfig {
    /// Consume `synth.*` keys.
    pub fn take_from(kv: &mut KeyValues) -> Result<Self> {
        let d = SynthSpec::default();
        let mut spec = SynthSpec {
            sentences: kv.take_or("synth.sentences", d.sentences)?,
            docs: kv.take_or("synth.docs", d.docs)?,
            min_len: kv.take_or("synth.min_len", d.min_len)?,
            max_len: kv.take_or("synth.max_len", d.max_len)?,
            cue_words: kv.take_or("synth.cue_words", d.cue_words)?,
            cue_rate: kv.take_or("synth.cue_rate", d.cue_rate)?,
            cue_noise: kv.take_or("synth.cue_noise", d.cue_noise)?,
            density: kv.take_or("synth.density", d.density)?,
            quiet_fraction: kv.take_or("synth.quiet_fraction", d.quiet_fraction)?,
            name_vocab: kv.take_or("synth.name_vocab", d.name_vocab)?,
            nominal_vocab: kv.take_or("synth.nominal_vocab", d.nominal_vocab)?,
            filler_vocab: kv.take_or("synth.filler_vocab", d.filler_vocab)?,
            zipf_exponent: kv.take_or("synth.zipf_exponent", d.zipf_exponent)?,
            ambiguity: kv.take_or("synth.ambiguity", d.ambiguity)?,
            ..d
        };
        let num: Option<usize> = kv.take("synth.num_categories")?;
        let names: Option<Vec<String>> = kv.take_list("synth.categories")?;
        spec.categories = match (names, num) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "set either synth.categories or synth.num_categories, not both".into(),
                ))
            }
            (Some(names), None) => names,
            (None, Some(n)) => SynthSpec::category_names(n),
            (None, None) => spec.categories,
        };
        if let Some(mix) = kv.take_list::<f64>("synth.level_mix")? {
            spec.level_mix = mix
                .try_into()
                .map_err(|m: Vec<f64>| Error::Config(format!("synth.level_mix needs 3 weights, got {}", m.len())))?;
        }
        let cues: Vec<(String, String)> = kv.take_prefixed("synth.cues")?;
        for (cat, list) in cues {
            let words = list.split(',').map(str::trim).filter(|w| !w.is_empty()).map(String::from).collect();
            spec.cues.insert(cat, words);
        }
        let seed = kv.take_or("synth.seed", 1)?;
        spec.validate()?;
        Ok(SynthConfig { spec, seed })
    }

    pub fn parse(text: &str, origin: impl Into<PathBuf>) -> Result<Self> {
        let mut kv = KeyValues::parse(text, origin)?;
        let cfg = Self::take_from(&mut kv)?;
        kv.finish()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut kv = KeyValues::read(path)?;
        let cfg = Self::take_from(&mut kv)?;
        kv.finish()?;
        Ok(cfg)
    }

    pub fn echo(&self) -> Vec<String> {
        let s = &self.spec;
        let mut out = vec![
            format!("synth.seed = {}", self.seed),
            format!("synth.sentences = {}", s.sentences),
            format!("synth.docs = {}", s.docs),
            format!("synth.min_len = {}", s.min_len),
            format!("synth.max_len = {}", s.max_len),
            format!("synth.categories = {}", s.categories.join(",")),
            format!("synth.cue_words = {}", s.cue_words),
            format!("synth.cue_rate = {}", s.cue_rate),
            format!("synth.cue_noise = {}", s.cue_noise),
            format!("synth.density = {}", s.density),
            format!("synth.quiet_fraction = {}", s.quiet_fraction),
            format!(
                "synth.level_mix = {},{},{}",
                s.level_mix[0], s.level_mix[1], s.level_mix[2]
            ),
            format!("synth.name_vocab = {}", s.name_vocab),
            format!("synth.nominal_vocab = {}", s.nominal_vocab),
            format!("synth.filler_vocab = {}", s.filler_vocab),
            format!("synth.zipf_exponent = {}", s.zipf_exponent),
            format!("synth.ambiguity = {}", s.ambiguity),
        ];
        for (cat, words) in &s.cues {
            out.push(format!("synth.cues.{cat} = {}", words.join(",")));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorpusSource {
    File(PathBuf),
    Synthetic(SynthConfig),
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: CorpusSource,
    pub include_pronouns: bool,
    pub dev_fraction: f64,
    pub split_seed: u64,
    pub setting: CommitteeSetting,
    pub policy: ScoringPolicy,
    pub budget: StepBudget,
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub name: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            source: CorpusSource::Synthetic(SynthConfig::default()),
            include_pronouns: false,
            dev_fraction: 0.27,
            split_seed: 0,
            setting: CommitteeSetting::FeatureDifferent,
            policy: ScoringPolicy::new(Metric::ConfSum),
            budget: StepBudget::default(),
            train: TrainConfig::default(),
            seeds: vec![1],
            output_dir: PathBuf::from("."),
            name: "curve".into(),
        }
    }
}

impl ExperimentConfig {
    /// Relative `corpus.path` and `output.dir` values resolve against
    /// `base_dir`.
    pub fn parse(text: &str, origin: impl Into<PathBuf>, base_dir: &Path) -> Result<Self> {
        let mut kv = KeyValues::parse(text, origin)?;
        let d = ExperimentConfig::default();

        let path: Option<PathBuf> = kv.take("corpus.path")?;
        let source = match path {
            Some(p) => {
                if kv.has_prefix("synth.") {
                    return Err(Error::Config("set either corpus.path or synth.*, not both".into()));
                }
                CorpusSource::File(base_dir.join(p))
            }
            None => CorpusSource::Synthetic(SynthConfig::take_from(&mut kv)?),
        };
        let include_pronouns = match kv.take_str("corpus.include_pronouns") {
            None => d.include_pronouns,
            Some(v) => bool_value(&v).map_err(Error::Config)?,
        };

        let mut policy = ScoringPolicy::new(kv.take_or("policy.metric", d.policy.metric)?);
        policy.min_mentions = kv.take_or("policy.min_mentions", 0)?;
        for (cat, w) in kv.take_prefixed::<f64>("weights.category")? {
            validate_category(&cat).map_err(|e| Error::Config(e.to_string()))?;
            policy.category_weights.insert(cat, w);
        }
        for (level, w) in kv.take_prefixed::<f64>("weights.level")? {
            let level: MentionLevel = level.parse()?;
            policy.level_weights.insert(level, w);
        }
        for level in MentionLevel::ALL {
            let w = policy.level_weight(level);
            policy.level_weights.insert(level, w);
        }

        let budget = StepBudget {
            seed_words: kv.take_or("budget.seed_words", d.budget.seed_words)?,
            step_words: kv.take_or("budget.step_words", d.budget.step_words)?,
            num_steps: kv.take_or("budget.steps", d.budget.num_steps)?,
        };
        let train = TrainConfig {
            l2_sigma2: kv.take_or("train.l2_sigma2", d.train.l2_sigma2)?,
            max_iters: kv.take_or("train.max_iters", d.train.max_iters)?,
            tol: kv.take_or("train.tol", d.train.tol)?,
            seed: kv.take_or("train.seed", d.train.seed)?,
            support: kv.take_or("train.support", d.train.support)?,
        };
        let cfg = ExperimentConfig {
            source,
            include_pronouns,
            dev_fraction: kv.take_or("split.dev_fraction", d.dev_fraction)?,
            split_seed: kv.take_or("split.seed", d.split_seed)?,
            setting: kv.take_or("committee", d.setting)?,
            policy,
            budget,
            train,
            seeds: kv.take_list("run.seeds")?.unwrap_or(d.seeds),
            output_dir: base_dir.join(kv.take_or("output.dir", d.output_dir)?),
            name: kv.take_or("output.name", d.name)?,
        };
        kv.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, path, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("run.seeds must list at least one seed".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::Config("run.seeds has duplicates".into()));
        }
        if !(self.dev_fraction > 0.0 && self.dev_fraction < 1.0) {
            return Err(Error::Config(format!(
                "split.dev_fraction must lie strictly between 0 and 1, got {}",
                self.dev_fraction
            )));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("output.name `{}` is not a plain file stem", self.name)));
        }
        self.budget.validate()?;
        self.train.validate()
    }

    /// Every setting as `key = value` lines; parsing them back yields this
    /// configuration.
    pub fn echo(&self) -> Vec<String> {
        let mut out = Vec::new();
        match &self.source {
            CorpusSource::File(p) => out.push(format!("corpus.path = {}", p.display())),
            CorpusSource::Synthetic(s) => out.extend(s.echo()),
        }
        out.push(format!("corpus.include_pronouns = {}", self.include_pronouns));
        out.push(format!("split.dev_fraction = {}", self.dev_fraction));
        out.push(format!("split.seed = {}", self.split_seed));
        out.push(format!("committee = {}", self.setting));
        out.push(format!("policy.metric = {}", self.policy.metric));
        out.push(format!("policy.min_mentions = {}", self.policy.min_mentions));
        for (c, w) in &self.policy.category_weights {
            out.push(format!("weights.category.{c} = {w}"));
        }
        for level in MentionLevel::ALL {
            out.push(format!("weights.level.{level} = {}", self.policy.level_weight(level)));
        }
        out.push(format!("budget.seed_words = {}", self.budget.seed_words));
        out.push(format!("budget.step_words = {}", self.budget.step_words));
        out.push(format!("budget.steps = {}", self.budget.num_steps));
        out.push(format!("train.l2_sigma2 = {}", self.train.l2_sigma2));
        out.push(format!("train.max_iters = {}", self.train.max_iters));
        out.push(format!("train.tol = {}", self.train.tol));
        out.push(format!("train.seed = {}", self.train.seed));
        out.push(format!("train.support = {}", self.train.support));
        let mut seeds = String::new();
        for (i, s) in self.seeds.iter().enumerate() {
            let _ = write!(seeds, "{}{s}", if i > 0 { "," } else { "" });
        }
        out.push(format!("run.seeds = {seeds}"));
        out.push(format!("output.dir = {}", self.output_dir.display()));
        out.push(format!("output.name = {}", self.name));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(text, "test.cfg", Path::new("/base"))
    }

    #[test]
    fn key_values_basics() {
        let kv = KeyValues::parse("# comment\n\n a.b = 1 \nc = x = y\n", "t").unwrap();
        assert_eq!(kv.entries["a.b"].0, "1");
        assert_eq!(kv.entries["c"].0, "x = y");
        assert!(KeyValues::parse("a = 1\na = 2\n", "t").is_err());
        assert!(KeyValues::parse("no equals\n", "t").is_err());
        assert!(KeyValues::parse("a..b = 1\n", "t").is_err());
        assert!(KeyValues::parse("a b = 1\n", "t").is_err());
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse("budget.steps = 3\nbudget.step_words = lots\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse("committee = fd\npolicy.metrik = f_measure\n") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("policy.metrik"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn full_config() {
        let cfg = parse(
            "corpus.path = data/train.tsv\ncommittee = dd\npolicy.metric = f_measure\n\
             policy.min_mentions = 1\nweights.category.PERSON = 2\nweights.level.NOM = 0\n\
             budget.seed_words = 100\nbudget.step_words = 50\nbudget.steps = 3\nrun.seeds = 3, 1,2\n\
             output.dir = out\noutput.name = dd_f\ntrain.l2_sigma2 = 4.5\n",
        )
        .unwrap();
        assert_eq!(cfg.source, CorpusSource::File("/base/data/train.tsv".into()));
        assert_eq!(cfg.setting, CommitteeSetting::DataDifferent);
        assert_eq!(cfg.policy.metric, Metric::FMeasure);
        assert_eq!(cfg.policy.category_weight("PERSON"), 2.0);
        assert_eq!(cfg.policy.level_weight(MentionLevel::Nom), 0.0);
        assert_eq!(cfg.seeds, vec![3, 1, 2]);
        assert_eq!(cfg.output_dir, PathBuf::from("/base/out"));
        assert_eq!(cfg.train.l2_sigma2, 4.5);
    }

    #[test]
    fn defaults_follow_named_plus_nominal_policy() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg.budget.seed_words, 20000);
        assert_eq!(cfg.budget.step_words, 20000);
        assert_eq!(cfg.policy.min_mentions, 0);
        assert_eq!(cfg.policy.level_weight(MentionLevel::Nam), 1.0);
        assert_eq!(cfg.policy.level_weight(MentionLevel::Nom), 1.0);
        assert_eq!(cfg.policy.level_weight(MentionLevel::Pro), 0.0);
        assert!(matches!(cfg.source, CorpusSource::Synthetic(_)));
    }

    #[test]
    fn invalid_configs() {
        assert!(parse("corpus.path = x\nsynth.density = 0.1\n").is_err());
        assert!(parse("run.seeds = \n").is_err());
        assert!(parse("run.seeds = 1,1\n").is_err());
        assert!(parse("weights.level.XXX = 1\n").is_err());
        assert!(parse("synth.categories = A,B\nsynth.num_categories = 2\n").is_err());
        assert!(parse("synth.level_mix = 1,2\n").is_err());
        assert!(parse("synth.sentences = 0\n").is_err());
        assert!(parse("split.dev_fraction = 1\n").is_err());
        assert!(parse("budget.step_words = 0\n").is_err());
        assert!(parse("corpus.include_pronouns = maybe\n").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let cfg = parse(
            "synth.num_categories = 3\nsynth.cues.PERSON = mr,dr\nsynth.density = 0.125\n\
             policy.metric = conf_diff\nweights.level.NAM = 1\nweights.level.NOM = 0\n\
             weights.category.LOCATION = 0.5\nrun.seeds = 4,5\ntrain.tol = 0.0001\n",
        )
        .unwrap();
        let text = cfg.echo().join("\n");
        let again = ExperimentConfig::parse(&text, "echo", Path::new("/elsewhere")).unwrap();
        assert_eq!(cfg, again);
        let file = parse("corpus.path = c.tsv\ncorpus.include_pronouns = true\n").unwrap();
        let again = ExperimentConfig::parse(&file.echo().join("\n"), "echo", Path::new("/x")).unwrap();
        assert_eq!(file, again);
    }

    #[test]
    fn synth_config_file() {
        let s = SynthConfig::parse("synth.seed = 9\nsynth.sentences = 50\nsynth.docs = 5\n", "s").unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.spec.sentences, 50);
        assert_eq!(SynthConfig::parse(&s.echo().join("\n"), "e").unwrap(), s);
        assert!(SynthConfig::parse("sentences = 50\n", "s").is_err());
    }
}
