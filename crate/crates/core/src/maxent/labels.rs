use std::collections::HashMap;

use crate::corpus::{BioLabel, MentionLevel, Sentence};
use crate::error::{Error, Result};

/// Output label inventory: `O` at id 0, then `B`/`I` for every
/// (category, level) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<BioLabel>,
    index: HashMap<BioLabel, u32>,
}

impl LabelSet {
    pub fn new(categories: &[String], levels: &[MentionLevel]) -> Self {
        let mut labels = vec![BioLabel::O];
        for c in categories {
            for &l in levels {
                labels.push(BioLabel::begin(c.clone(), l));
                labels.push(BioLabel::inside(c.clone(), l));
            }
        }
        Self::from_labels(labels).expect("generated labels are unique")
    }

    pub fn from_labels(labels: Vec<BioLabel>) -> Result<Self> {
        if labels.first() != Some(&BioLabel::O) {
            return Err(Error::Model("label inventory must start with O".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i as u32).is_some() {
                return Err(Error::Model(format!("duplicate label `{l}`")));
            }
        }
        Ok(LabelSet { labels, index })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn id(&self, label: &BioLabel) -> Option<u32> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: u32) -> &BioLabel {
        &self.labels[id as usize]
    }

    pub fn labels(&self) -> &[BioLabel] {
        &self.labels
    }

    /// Gold label ids for a sentence.
    pub fn encode_gold(&self, sentence: &Sentence) -> Result<Vec<u32>> {
        sentence
            .gold_labels()
            .iter()
            .map(|l| {
                self.id(l).ok_or_else(|| {
                    Error::Training(format!(
                        "gold label `{l}` in sentence {} is outside the label inventory",
                        sentence.id
                    ))
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inventory_shape() {
        let set = LabelSet::new(&["LOC".into(), "PER".into()], &[MentionLevel::Nam, MentionLevel::Nom]);
        assert_eq!(set.len(), 9);
        assert_eq!(set.id(&BioLabel::O), Some(0));
        assert_eq!(set.label(1).to_string(), "B-LOC.NAM");
        assert!(set.id(&BioLabel::begin("PER", MentionLevel::Pro)).is_none());
    }

    #[test]
    fn gold_outside_inventory_is_an_error() {
        let s = Sentence::new(
            0,
            0,
            vec!["he".into()],
            vec![crate::corpus::Mention::new(0, 1, "PER", MentionLevel::Pro)],
        )
        .unwrap();
        let set = LabelSet::new(&["PER".into()], &[MentionLevel::Nam]);
        assert!(matches!(set.encode_gold(&s), Err(Error::Training(_))));
    }
}
