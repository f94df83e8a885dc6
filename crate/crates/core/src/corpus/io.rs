//! Line-oriented corpus files: `surface<TAB>tag` per token, a blank line
//! after each sentence, `-DOCSTART-` after each document.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{decode_bio, BioLabel, Corpus, MentionLevel, Sentence};
use crate::error::{Error, Result};

pub const DOCSTART: &str = "-DOCSTART-";

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus_from(file, path)
}

/// Read a corpus file and drop pronominal mentions unless asked to keep
/// them.
pub fn load_corpus(path: impl AsRef<Path>, include_pronouns: bool) -> Result<Corpus> {
    let corpus = read_corpus(path)?;
    Ok(if include_pronouns {
        corpus
    } else {
        corpus.retain_levels(&[MentionLevel::Nam, MentionLevel::Nom])
    })
}

/// Parse corpus text from any reader; `origin` only labels error messages.
pub fn read_corpus_from<R: Read>(reader: R, origin: &Path) -> Result<Corpus> {
    let reader = BufReader::new(reader);
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };

    let mut sentences = Vec::new();
    let mut doc = 0usize;
    let mut tokens: Vec<String> = Vec::new();
    let mut labels: Vec<BioLabel> = Vec::new();
    let mut close = |tokens: &mut Vec<String>, labels: &mut Vec<BioLabel>, doc: usize| -> Result<()> {
        if tokens.is_empty() {
            return Ok(());
        }
        let mentions = decode_bio(labels);
        let id = sentences.len();
        sentences.push(Sentence::new(id, doc, std::mem::take(tokens), mentions)?);
        labels.clear();
        Ok(())
    };

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            close(&mut tokens, &mut labels, doc)?;
            continue;
        }
        if line == DOCSTART {
            if !tokens.is_empty() {
                return Err(parse_err(
                    lineno,
                    "dangling document marker inside a sentence (missing blank line)".into(),
                ));
            }
            doc += 1;
            continue;
        }
        let mut fields = line.split('\t');
        let (surface, tag) = match (fields.next(), fields.next(), fields.next()) {
            (Some(s), Some(t), None) if !s.is_empty() => (s, t),
            _ => {
                return Err(parse_err(
                    lineno,
                    format!("expected `surface<TAB>tag`, got `{line}`"),
                ))
            }
        };
        let label: BioLabel = tag
            .parse()
            .map_err(|_| parse_err(lineno, format!("unknown tag syntax `{tag}`")))?;
        tokens.push(surface.to_string());
        labels.push(label);
    }
    close(&mut tokens, &mut labels, doc)?;
    Corpus::new(sentences)
}

pub fn write_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_corpus_to(corpus, &mut w).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Serialize to any writer. Documents are closed with `-DOCSTART-`, with
/// extra markers emitted for skipped document ordinals so doc ids survive a
/// read back.
pub fn write_corpus_to<W: Write>(corpus: &Corpus, w: &mut W) -> Result<()> {
    let io = |e| Error::io("<writer>", e);
    let mut doc = 0usize;
    for s in corpus.sentences() {
        while doc < s.doc_id {
            writeln!(w, "{DOCSTART}").map_err(io)?;
            doc += 1;
        }
        for (tok, label) in s.tokens.iter().zip(s.gold_labels()) {
            if tok.is_empty() || tok.contains(['\t', '\n', '\r']) || tok.trim().is_empty() {
                return Err(Error::Structural(format!(
                    "token {tok:?} in sentence {} cannot be written",
                    s.id
                )));
            }
            writeln!(w, "{tok}\t{label}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    if !corpus.is_empty() {
        writeln!(w, "{DOCSTART}").map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Mention, MentionLevel};

    fn parse(text: &str) -> Result<Corpus> {
        read_corpus_from(text.as_bytes(), Path::new("test.tsv"))
    }

    #[test]
    fn single_token_sentence() {
        let c = parse("John\tB-PER.NAM\n\n").unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.sentences()[0].mentions, vec![Mention::new(0, 1, "PER", MentionLevel::Nam)]);
    }

    #[test]
    fn docstart_increments_doc_id() {
        let c = parse("a\tO\n\n-DOCSTART-\nb\tO\n\nc\tO\n\n-DOCSTART-\n").unwrap();
        let docs: Vec<_> = c.sentences().iter().map(|s| s.doc_id).collect();
        assert_eq!(docs, vec![0, 1, 1]);
    }

    #[test]
    fn missing_final_blank_line_is_accepted() {
        assert_eq!(parse("a\tO\nb\tO").unwrap().len(), 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse("a\tO\nb O\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse("a\tO\n\nb\tB-PER\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse("a\tO\n-DOCSTART-\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse("a\tO\tx\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn empty_corpus_writes_nothing() {
        let mut buf = Vec::new();
        write_corpus_to(&Corpus::default(), &mut buf).unwrap();
        assert!(buf.is_empty());
        assert!(parse("").unwrap().is_empty());
    }

    #[test]
    fn block_is_tokens_plus_blank() {
        let s = Sentence::new(0, 0, vec!["x".into(), "y".into()], vec![]).unwrap();
        let mut buf = Vec::new();
        write_corpus_to(&Corpus::new(vec![s]).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "x\tO\ny\tO\n\n-DOCSTART-\n");
    }

    #[test]
    fn pronouns_filtered_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.tsv");
        std::fs::write(&p, "he\tB-PER.PRO\nsaw\tO\nAnna\tB-PER.NAM\n\n").unwrap();
        assert_eq!(load_corpus(&p, false).unwrap().mention_count(), 1);
        assert_eq!(load_corpus(&p, true).unwrap().mention_count(), 2);
    }
}
