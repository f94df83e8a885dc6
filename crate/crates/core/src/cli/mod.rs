//! The `generate`, `run` and `compare` commands.

mod config;

use std::fmt;
use std::path::{Path, PathBuf};

pub use config::{CorpusSource, ExperimentConfig, KeyValues, SynthConfig};

use crate::active_loop::{run_with, ExperimentData, RunSpec};
use crate::corpus::{generate_synthetic, load_corpus, split_pool_dev, write_corpus_to, Corpus, MentionLevel};
use crate::error::{Error, Result};
use crate::eval::{data_savings, words_to_reach, CurveTable, LearningCurve};
use crate::par;

/// Write through a sibling temporary file so readers never see a partial
/// file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Generate a synthetic corpus and write it to `out`.
pub fn cmd_generate(cfg: &SynthConfig, out: &Path) -> Result<Corpus> {
    let corpus = generate_synthetic(&cfg.spec, cfg.seed)?;
    let mut buf = Vec::new();
    write_corpus_to(&corpus, &mut buf)?;
    write_atomic(out, &buf)?;
    log::info!(
        "wrote {} sentences, {} words, {} mentions to {}",
        corpus.len(),
        corpus.word_count(),
        corpus.mention_count(),
        out.display()
    );
    Ok(corpus)
}

/// Load or generate the corpus and split it into pool and dev.
pub fn prepare_corpus(cfg: &ExperimentConfig) -> Result<(Corpus, Corpus)> {
    let corpus = match &cfg.source {
        CorpusSource::File(p) => load_corpus(p, cfg.include_pronouns)?,
        CorpusSource::Synthetic(s) => {
            let c = generate_synthetic(&s.spec, s.seed)?;
            if cfg.include_pronouns {
                c
            } else {
                c.retain_levels(&[MentionLevel::Nam, MentionLevel::Nom])
            }
        }
    };
    split_pool_dev(&corpus, cfg.dev_fraction, cfg.split_seed)
}

/// One curve per configured seed, in seed order.
pub fn run_curves(cfg: &ExperimentConfig, pool: &Corpus, dev: &Corpus) -> Result<Vec<LearningCurve>> {
    cfg.validate()?;
    let data = ExperimentData::new(pool, dev)?;
    par::map(&cfg.seeds, |&seed| {
        run_with(
            &data,
            &RunSpec {
                setting: cfg.setting,
                policy: cfg.policy.clone(),
                budget: cfg.budget,
                train: cfg.train,
                seed,
            },
        )
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub seed_files: Vec<PathBuf>,
    pub average_file: PathBuf,
    pub curves: Vec<LearningCurve>,
    pub average: CurveTable,
}

pub fn seed_file(cfg: &ExperimentConfig, seed: u64) -> PathBuf {
    cfg.output_dir.join(format!("{}_seed{seed}.csv", cfg.name))
}

pub fn average_file(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.join(format!("{}_avg.csv", cfg.name))
}

/// Run every seed, then write `<name>_seed<N>.csv` per seed and
/// `<name>_avg.csv`. Nothing is written unless all seeds succeed.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let (pool, dev) = prepare_corpus(cfg)?;
    log::info!(
        "pool: {} sentences / {} words, dev: {} sentences / {} words",
        pool.len(),
        pool.word_count(),
        dev.len(),
        dev.word_count()
    );
    let curves = run_curves(cfg, &pool, &dev)?;

    let mut tables = Vec::with_capacity(curves.len());
    let mut seed_files = Vec::with_capacity(curves.len());
    for (&seed, curve) in cfg.seeds.iter().zip(&curves) {
        let single = ExperimentConfig {
            seeds: vec![seed],
            ..cfg.clone()
        };
        let mut comments = single.echo();
        comments.extend(curve.warnings.iter().map(|w| format!("warning: {w}")));
        let table = CurveTable::from_curve(curve, comments);
        let path = seed_file(cfg, seed);
        write_atomic(&path, table.to_csv().as_bytes())?;
        seed_files.push(path);
        tables.push(table);
    }
    let mut comments = cfg.echo();
    comments.push(format!("mean of {} runs by step", tables.len()));
    let average = CurveTable::average(&tables, comments)?;
    let average_path = average_file(cfg);
    write_atomic(&average_path, average.to_csv().as_bytes())?;
    Ok(RunOutput {
        seed_files,
        average_file: average_path,
        curves,
        average,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub name: String,
    pub words: Option<f64>,
    /// Relative to the first (baseline) curve.
    pub savings: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub column: String,
    pub target_f: f64,
    pub rows: Vec<CompareRow>,
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "target {} = {:.4}", self.column, self.target_f)?;
        for (i, r) in self.rows.iter().enumerate() {
            let role = if i == 0 { " (baseline)" } else { "" };
            let words = r.words.map_or("unreached".to_string(), |w| format!("{w:.0}"));
            let savings = r.savings.map_or("n/a".to_string(), |s| format!("{s:.3}"));
            writeln!(f, "{}{role}: words {words}, savings {savings}", r.name)?;
        }
        Ok(())
    }
}

/// Compare curve files against the first one. The default target is 95% of
/// the baseline's final value in `column`.
pub fn compare_tables(names: &[String], tables: &[CurveTable], target_f: Option<f64>, column: &str) -> Result<CompareReport> {
    if tables.len() < 2 {
        return Err(Error::Config("compare needs a baseline and at least one other curve".into()));
    }
    let columns = tables.iter().map(|t| t.column(column)).collect::<Result<Vec<_>>>()?;
    let target_f = match target_f {
        Some(t) => t,
        None => {
            columns[0]
                .last()
                .ok_or_else(|| Error::Config(format!("baseline curve `{}` is empty", names[0])))?
                .1
                * 0.95
        }
    };
    let rows = names
        .iter()
        .zip(&columns)
        .map(|(name, points)| CompareRow {
            name: name.clone(),
            words: words_to_reach(points, target_f),
            savings: data_savings(points, &columns[0], target_f),
        })
        .collect();
    Ok(CompareReport {
        column: column.to_string(),
        target_f,
        rows,
    })
}

pub fn cmd_compare(paths: &[PathBuf], target_f: Option<f64>, column: &str) -> Result<CompareReport> {
    let tables = paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            CurveTable::parse(&text).map_err(|e| match e {
                Error::Parse { line, message, .. } => Error::Parse {
                    path: p.clone(),
                    line,
                    message,
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
    compare_tables(&names, &tables, target_f, column)
}
