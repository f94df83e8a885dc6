use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_mentions, validate_category, Mention, MentionLevel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BioTag {
    B,
    I,
}

/// Per-token label: `O`, or `B-CAT.LVL` / `I-CAT.LVL`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BioLabel {
    O,
    Tag {
        tag: BioTag,
        category: String,
        level: MentionLevel,
    },
}

impl BioLabel {
    pub fn begin(category: impl Into<String>, level: MentionLevel) -> Self {
        BioLabel::Tag {
            tag: BioTag::B,
            category: category.into(),
            level,
        }
    }

    pub fn inside(category: impl Into<String>, level: MentionLevel) -> Self {
        BioLabel::Tag {
            tag: BioTag::I,
            category: category.into(),
            level,
        }
    }

    pub fn is_outside(&self) -> bool {
        matches!(self, BioLabel::O)
    }
}

impl fmt::Display for BioLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioLabel::O => f.write_str("O"),
            BioLabel::Tag {
                tag,
                category,
                level,
            } => {
                let t = match tag {
                    BioTag::B => 'B',
                    BioTag::I => 'I',
                };
                write!(f, "{t}-{category}.{level}")
            }
        }
    }
}

impl FromStr for BioLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "O" {
            return Ok(BioLabel::O);
        }
        let bad = || Error::Structural(format!("malformed tag `{s}`"));
        let (tag, rest) = s.split_once('-').ok_or_else(bad)?;
        let tag = match tag {
            "B" => BioTag::B,
            "I" => BioTag::I,
            _ => return Err(bad()),
        };
        let (category, level) = rest.rsplit_once('.').ok_or_else(bad)?;
        validate_category(category).map_err(|_| bad())?;
        let level = level.parse().map_err(|_| bad())?;
        Ok(BioLabel::Tag {
            tag,
            category: category.to_string(),
            level,
        })
    }
}

/// Encode a flat mention set over `length` tokens.
pub fn encode_bio(mentions: &[Mention], length: usize) -> Result<Vec<BioLabel>> {
    let sorted = check_mentions(mentions, length)?;
    let mut labels = vec![BioLabel::O; length];
    for m in sorted {
        labels[m.start] = BioLabel::begin(m.category.clone(), m.level);
        for l in &mut labels[m.start + 1..m.end] {
            *l = BioLabel::inside(m.category.clone(), m.level);
        }
    }
    Ok(labels)
}

/// Decode any label sequence into mentions. An `I` that cannot continue the
/// mention open at the previous token starts a new mention.
pub fn decode_bio(labels: &[BioLabel]) -> Vec<Mention> {
    let mut out = Vec::new();
    let mut open: Option<Mention> = None;
    for (i, label) in labels.iter().enumerate() {
        match label {
            BioLabel::O => {
                out.extend(open.take().map(|mut m| {
                    m.end = i;
                    m
                }));
            }
            BioLabel::Tag {
                tag,
                category,
                level,
            } => {
                let continues = *tag == BioTag::I
                    && open
                        .as_ref()
                        .is_some_and(|m| m.category == *category && m.level == *level);
                if !continues {
                    out.extend(open.take().map(|mut m| {
                        m.end = i;
                        m
                    }));
                    open = Some(Mention::new(i, i + 1, category.clone(), *level));
                }
            }
        }
    }
    out.extend(open.map(|mut m| {
        m.end = labels.len();
        m
    }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use MentionLevel::*;

    fn l(s: &str) -> BioLabel {
        s.parse().unwrap()
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_bio(&[], 3).unwrap(), vec![BioLabel::O; 3]);
        assert_eq!(
            encode_bio(&[Mention::new(0, 2, "PER", Nam)], 3).unwrap(),
            vec![l("B-PER.NAM"), l("I-PER.NAM"), l("O")]
        );
        let m = vec![Mention::new(0, 1, "LOC", Nom), Mention::new(2, 3, "PER", Nam)];
        let enc = encode_bio(&m, 3).unwrap();
        assert_eq!(enc, vec![l("B-LOC.NOM"), l("O"), l("B-PER.NAM")]);
        assert_eq!(decode_bio(&enc), m);
    }

    #[test]
    fn encode_rejects_bad_spans() {
        let overlap = vec![Mention::new(0, 2, "PER", Nam), Mention::new(1, 3, "PER", Nam)];
        assert!(encode_bio(&overlap, 3).is_err());
        assert!(encode_bio(&[Mention::new(2, 4, "PER", Nam)], 3).is_err());
    }

    #[test]
    fn decode_examples() {
        assert!(decode_bio(&[l("O"), l("O")]).is_empty());
        assert_eq!(
            decode_bio(&[l("B-PER.NAM"), l("I-PER.NAM"), l("O")]),
            vec![Mention::new(0, 2, "PER", Nam)]
        );
        assert_eq!(
            decode_bio(&[l("I-PER.NAM"), l("I-LOC.NOM")]),
            vec![Mention::new(0, 1, "PER", Nam), Mention::new(1, 2, "LOC", Nom)]
        );
    }

    #[test]
    fn decode_repairs_level_change_and_adjacent_begins() {
        let labels = [l("B-PER.NAM"), l("I-PER.NOM"), l("B-PER.NOM"), l("O"), l("I-LOC.NAM")];
        assert_eq!(
            decode_bio(&labels),
            vec![
                Mention::new(0, 1, "PER", Nam),
                Mention::new(1, 2, "PER", Nom),
                Mention::new(2, 3, "PER", Nom),
                Mention::new(4, 5, "LOC", Nam),
            ]
        );
    }

    #[test]
    fn tag_parsing() {
        assert_eq!(l("B-PER.NAM").to_string(), "B-PER.NAM");
        for bad in ["X-PER.NAM", "B-PER", "B-PER.XYZ", "B-.NAM", "BPER.NAM", ""] {
            assert!(bad.parse::<BioLabel>().is_err(), "{bad}");
        }
    }

    fn arb_label() -> impl Strategy<Value = BioLabel> {
        prop_oneof![
            Just(BioLabel::O),
            (any::<bool>(), 0..3usize, 0..3usize).prop_map(|(b, c, v)| BioLabel::Tag {
                tag: if b { BioTag::B } else { BioTag::I },
                category: ["A", "B", "C"][c].to_string(),
                level: MentionLevel::ALL[v],
            })
        ]
    }

    proptest! {
        #[test]
        fn decode_is_total_and_well_formed(labels in prop::collection::vec(arb_label(), 0..30)) {
            let ms = decode_bio(&labels);
            // Output is a valid flat mention set that re-encodes cleanly.
            prop_assert!(check_mentions(&ms, labels.len()).is_ok());
            prop_assert_eq!(decode_bio(&encode_bio(&ms, labels.len()).unwrap()), ms);
        }
    }
}
