use std::collections::HashMap;

use super::{OpenSet, TopologyError};

/// The finite index set of a dataset: ordered, unique, non-empty labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundSet {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl GroundSet {
    pub fn new<I, S>(labels: I) -> Result<Self, TopologyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(TopologyError::EmptyLabel { position: i });
            }
            if index.insert(label.clone(), i).is_some() {
                return Err(TopologyError::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self { labels, index })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn full(&self) -> OpenSet {
        OpenSet::full(self.len())
    }

    pub fn empty_set(&self) -> OpenSet {
        OpenSet::empty(self.len())
    }

    /// Resolves labels into a subset; `set_name` is only used for the error.
    pub fn subset<S: AsRef<str>>(
        &self,
        set_name: &str,
        labels: &[S],
    ) -> Result<OpenSet, TopologyError> {
        let mut set = self.empty_set();
        for l in labels {
            let l = l.as_ref();
            let i = self
                .index_of(l)
                .ok_or_else(|| TopologyError::SubbasisOutOfRange {
                    set: set_name.to_string(),
                    label: l.to_string(),
                })?;
            set.insert(i);
        }
        Ok(set)
    }

    /// Labels of the members, sorted lexicographically.
    pub fn sorted_labels(&self, set: &OpenSet) -> Vec<String> {
        let mut out: Vec<String> = set.iter().map(|i| self.labels[i].clone()).collect();
        out.sort();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_blank_labels() {
        assert!(matches!(
            GroundSet::new(["a", "b", "a"]),
            Err(TopologyError::DuplicateLabel(l)) if l == "a"
        ));
        assert!(matches!(
            GroundSet::new(["a", ""]),
            Err(TopologyError::EmptyLabel { position: 1 })
        ));
    }

    #[test]
    fn index_follows_position() {
        let g = GroundSet::new(["z", "y", "x"]).unwrap();
        assert_eq!(g.index_of("x"), Some(2));
        assert_eq!(g.label(0), "z");
        let s = g.subset("s", &["x", "z"]).unwrap();
        assert_eq!(g.sorted_labels(&s), vec!["x", "z"]);
        assert!(matches!(
            g.subset("s", &["q"]),
            Err(TopologyError::SubbasisOutOfRange { label, .. }) if label == "q"
        ));
    }
}
