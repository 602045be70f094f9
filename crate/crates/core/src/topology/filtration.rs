use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, VecDeque};

use super::{OpenId, Topology};

/// Breadth-first levels of the order ideal below a root open set.
///
/// `level(V)` is the minimum number of cover steps from the root down to `V`.
/// Every cover of a member of the ideal is itself in the ideal, so the search
/// runs over the topology's cover relation unchanged.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdealFiltration {
    root: OpenId,
    levels: BTreeMap<OpenId, usize>,
    max_level: usize,
}

impl IdealFiltration {
    pub fn of(topology: &Topology, root: OpenId) -> Self {
        let mut levels = BTreeMap::new();
        levels.insert(root, 0);
        let mut queue = VecDeque::from([root]);
        let mut max_level = 0;
        while let Some(v) = queue.pop_front() {
            let next = levels[&v] + 1;
            for &c in topology.covers(v) {
                if let Entry::Vacant(slot) = levels.entry(c) {
                    slot.insert(next);
                    max_level = max_level.max(next);
                    queue.push_back(c);
                }
            }
        }
        Self {
            root,
            levels,
            max_level,
        }
    }

    pub fn root(&self) -> OpenId {
        self.root
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn level(&self, id: OpenId) -> Option<usize> {
        self.levels.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `(open, level)` pairs in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (OpenId, usize)> + '_ {
        self.levels.iter().map(|(&id, &l)| (id, l))
    }

    /// Members with level at most `j`, canonical order.
    pub fn up_to(&self, j: usize) -> Vec<OpenId> {
        self.iter()
            .filter(|&(_, l)| l <= j)
            .map(|(id, _)| id)
            .collect()
    }

    /// Members with level exactly `j`, canonical order.
    pub fn at(&self, j: usize) -> Vec<OpenId> {
        self.iter()
            .filter(|&(_, l)| l == j)
            .map(|(id, _)| id)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use crate::topology::{GroundSet, Topology, DEFAULT_CAP};

    fn star() -> Topology {
        let g = GroundSet::new(["a", "b", "c", "d"]).unwrap();
        Topology::generate(
            g,
            &[
                ("ab".to_string(), vec!["a", "b"]),
                ("ac".to_string(), vec!["a", "c"]),
                ("ad".to_string(), vec!["a", "d"]),
            ],
            DEFAULT_CAP,
        )
        .unwrap()
    }

    fn named(t: &Topology, ids: &[super::OpenId]) -> Vec<String> {
        ids.iter()
            .map(|&id| t.ground().sorted_labels(t.open(id)).concat())
            .collect()
    }

    #[test]
    fn abd_levels() {
        let t = star();
        let abd = t.ground().subset("", &["a", "b", "d"]).unwrap();
        let f = t.filtration(&abd).unwrap();
        assert_eq!(f.max_level(), 3);
        assert_eq!(named(&t, &f.at(0)), vec!["abd"]);
        assert_eq!(named(&t, &f.at(1)), vec!["ab", "ad"]);
        assert_eq!(named(&t, &f.at(2)), vec!["a"]);
        assert_eq!(named(&t, &f.at(3)), vec![""]);
        assert_eq!(
            named(&t, &t.lambda_j(&abd, 2).unwrap()),
            vec!["a", "ab", "ad", "abd"]
        );
        assert_eq!(t.lambda_j(&abd, 99).unwrap(), t.order_ideal(&abd).unwrap());
    }

    #[test]
    fn empty_root_has_single_level() {
        let t = star();
        let f = t.filtration(&t.ground().empty_set()).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.max_level(), 0);
    }

    #[test]
    fn level_zero_is_root_only() {
        let t = star();
        for id in t.ids() {
            assert_eq!(t.lambda_j(t.open(id), 0).unwrap(), vec![id]);
        }
    }
}
