//! Finite topologies generated by a subbasis.
//!
//! Open sets are bitsets over the ground set. A [`Topology`] stores every open
//! set in canonical order (cardinality, then lexicographic membership), so an
//! [`OpenId`] is a stable ordinal that doubles as the tie-break order for
//! every argmax reported downstream.

mod filtration;
mod ground;
mod open_set;

use std::collections::{HashMap, HashSet};

use thiserror::Error;

pub use filtration::IdealFiltration;
pub use ground::GroundSet;
pub use open_set::{Members, OpenSet};

pub(crate) use open_set::mix64;

/// Default ceiling on the number of open sets a generation may produce.
pub const DEFAULT_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("topology exceeds cap of {cap} open sets (reached {reached})")]
    CapExceeded { cap: usize, reached: usize },
    #[error("subbasis element `{set}` references unknown label `{label}`")]
    SubbasisOutOfRange { set: String, label: String },
    #[error("duplicate subbasis name `{0}`")]
    DuplicateSubbasisName(String),
    #[error("duplicate ground label `{0}`")]
    DuplicateLabel(String),
    #[error("empty ground label at position {position}")]
    EmptyLabel { position: usize },
    #[error("cap must be at least 2, got {0}")]
    InvalidCap(usize),
    #[error("set {0:?} is not open in this topology")]
    NotOpen(OpenSet),
}

/// Ordinal of an open set in the canonical order of its topology.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpenId(pub usize);

#[derive(Clone, Debug)]
pub struct SubbasisElement {
    pub name: String,
    pub set: OpenSet,
}

#[derive(Clone, Debug)]
pub struct Topology {
    ground: GroundSet,
    opens: Vec<OpenSet>,
    subbasis: Vec<SubbasisElement>,
    covers: Vec<Vec<OpenId>>,
    ids: HashMap<OpenSet, OpenId>,
    disjoint_cover: bool,
}

impl Topology {
    /// Generates the topology from named label lists.
    pub fn generate<S: AsRef<str>>(
        ground: GroundSet,
        subbasis: &[(String, Vec<S>)],
        cap: usize,
    ) -> Result<Self, TopologyError> {
        let mut elements = Vec::with_capacity(subbasis.len());
        for (name, labels) in subbasis {
            elements.push(SubbasisElement {
                name: name.clone(),
                set: ground.subset(name, labels)?,
            });
        }
        Self::from_subbasis(ground, elements, cap)
    }

    /// Generates the topology from already-resolved subsets: first the closure
    /// of the subbasis plus `I` (the empty intersection) under intersection,
    /// then the closure of that family plus `∅` (the empty union) under union.
    pub fn from_subbasis(
        ground: GroundSet,
        subbasis: Vec<SubbasisElement>,
        cap: usize,
    ) -> Result<Self, TopologyError> {
        if cap < 2 {
            return Err(TopologyError::InvalidCap(cap));
        }
        let mut names = HashSet::new();
        for el in &subbasis {
            if !names.insert(el.name.as_str()) {
                return Err(TopologyError::DuplicateSubbasisName(el.name.clone()));
            }
            assert_eq!(el.set.universe(), ground.len(), "subbasis width mismatch");
        }

        let disjoint_cover = is_disjoint_cover(&ground, &subbasis);
        let (mut opens, fast_covers) = if disjoint_cover {
            let parts: Vec<&OpenSet> = subbasis.iter().map(|e| &e.set).collect();
            (disjoint_unions(&parts, cap)?, true)
        } else {
            (closure(&ground, &subbasis, cap)?, false)
        };
        opens.sort_by(|a, b| a.canonical_cmp(b));

        let ids: HashMap<OpenSet, OpenId> = opens
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), OpenId(i)))
            .collect();

        let covers = if fast_covers {
            opens
                .iter()
                .map(|u| {
                    let mut c: Vec<OpenId> = subbasis
                        .iter()
                        .filter(|p| p.set.is_subset(u))
                        .map(|p| ids[&u.difference(&p.set)])
                        .collect();
                    c.sort();
                    c
                })
                .collect()
        } else {
            compute_covers(&opens)
        };

        Ok(Self {
            ground,
            opens,
            subbasis,
            covers,
            ids,
            disjoint_cover,
        })
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn subbasis(&self) -> &[SubbasisElement] {
        &self.subbasis
    }

    pub fn len(&self) -> usize {
        self.opens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.opens.is_empty()
    }

    pub fn opens(&self) -> &[OpenSet] {
        &self.opens
    }

    pub fn ids(&self) -> impl DoubleEndedIterator<Item = OpenId> + ExactSizeIterator {
        (0..self.opens.len()).map(OpenId)
    }

    pub fn open(&self, id: OpenId) -> &OpenSet {
        &self.opens[id.0]
    }

    pub fn id_of(&self, set: &OpenSet) -> Option<OpenId> {
        self.ids.get(set).copied()
    }

    pub fn require(&self, set: &OpenSet) -> Result<OpenId, TopologyError> {
        self.id_of(set)
            .ok_or_else(|| TopologyError::NotOpen(set.clone()))
    }

    pub fn empty_id(&self) -> OpenId {
        OpenId(0)
    }

    pub fn full_id(&self) -> OpenId {
        OpenId(self.opens.len() - 1)
    }

    /// Maximal proper open subsets of `id`, in canonical order.
    pub fn covers(&self, id: OpenId) -> &[OpenId] {
        &self.covers[id.0]
    }

    pub fn cover_edge_count(&self) -> usize {
        self.covers.iter().map(Vec::len).sum()
    }

    /// True when the subbasis elements are non-empty, pairwise disjoint and
    /// together cover the ground set.
    pub fn is_disjoint_cover(&self) -> bool {
        self.disjoint_cover
    }

    pub fn meet(&self, u: &OpenSet, v: &OpenSet) -> Result<OpenSet, TopologyError> {
        self.require(u)?;
        self.require(v)?;
        Ok(u.intersection(v))
    }

    pub fn join(&self, u: &OpenSet, v: &OpenSet) -> Result<OpenSet, TopologyError> {
        self.require(u)?;
        self.require(v)?;
        Ok(u.union(v))
    }

    /// All open subsets of `u`, in canonical order.
    pub fn order_ideal(&self, u: &OpenSet) -> Result<Vec<OpenId>, TopologyError> {
        Ok(self.order_ideal_of(self.require(u)?))
    }

    pub fn order_ideal_of(&self, id: OpenId) -> Vec<OpenId> {
        let u = self.open(id);
        // Subsets never come later in canonical order.
        (0..=id.0)
            .map(OpenId)
            .filter(|&v| self.open(v).is_subset(u))
            .collect()
    }

    pub fn filtration(&self, u: &OpenSet) -> Result<IdealFiltration, TopologyError> {
        Ok(IdealFiltration::of(self, self.require(u)?))
    }

    /// Opens within `j` cover steps below `u`, in canonical order.
    pub fn lambda_j(&self, u: &OpenSet, j: usize) -> Result<Vec<OpenId>, TopologyError> {
        Ok(self.filtration(u)?.up_to(j))
    }

    /// Subbasis element indices whose union is exactly `id`, or `None` when the
    /// open set is not a union of subbasis elements (e.g. a bare intersection).
    pub fn parts_of(&self, id: OpenId) -> Option<Vec<usize>> {
        let u = self.open(id);
        let mut acc = self.ground.empty_set();
        let mut parts = Vec::new();
        for (i, el) in self.subbasis.iter().enumerate() {
            if !el.set.is_empty() && el.set.is_subset(u) {
                acc.union_with(&el.set);
                parts.push(i);
            }
        }
        (!parts.is_empty() && &acc == u).then_some(parts)
    }

    /// Number of cover steps in the longest chain from `I` down to `∅`.
    pub fn longest_chain(&self) -> usize {
        // Covers point to smaller ids, so a single ascending pass suffices.
        let mut depth = vec![0usize; self.len()];
        for id in self.ids() {
            depth[id.0] = self
                .covers(id)
                .iter()
                .map(|c| depth[c.0] + 1)
                .max()
                .unwrap_or(0);
        }
        depth[self.full_id().0]
    }
}

fn is_disjoint_cover(ground: &GroundSet, subbasis: &[SubbasisElement]) -> bool {
    if subbasis.is_empty() || subbasis.iter().any(|e| e.set.is_empty()) {
        return false;
    }
    let mut acc = ground.empty_set();
    for el in subbasis {
        if !acc.is_disjoint(&el.set) {
            return false;
        }
        acc.union_with(&el.set);
    }
    acc.is_full()
}

fn disjoint_unions(parts: &[&OpenSet], cap: usize) -> Result<Vec<OpenSet>, TopologyError> {
    let k = parts.len();
    let count = u32::try_from(k)
        .ok()
        .and_then(|k| 1usize.checked_shl(k))
        .filter(|&c| c <= cap)
        .ok_or(TopologyError::CapExceeded {
            cap,
            reached: if k < usize::BITS as usize {
                1usize << k
            } else {
                usize::MAX
            },
        })?;
    let universe = parts[0].universe();
    Ok((0..count)
        .map(|mask| {
            let mut s = OpenSet::empty(universe);
            for (i, p) in parts.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    s.union_with(p);
                }
            }
            s
        })
        .collect())
}

/// Worklist closure: every member of the intersection family is a finite
/// intersection of generators, so intersecting each new member with each
/// generator reaches the fixpoint. The same holds for unions of the basis.
fn closure(
    ground: &GroundSet,
    subbasis: &[SubbasisElement],
    cap: usize,
) -> Result<Vec<OpenSet>, TopologyError> {
    let generators: Vec<&OpenSet> = subbasis.iter().map(|e| &e.set).collect();

    let mut seen: HashSet<OpenSet> = HashSet::new();
    let mut basis: Vec<OpenSet> = Vec::new();
    let push = |s: OpenSet, seen: &mut HashSet<OpenSet>, out: &mut Vec<OpenSet>| {
        if seen.insert(s.clone()) {
            out.push(s);
            if seen.len() > cap {
                return Err(TopologyError::CapExceeded {
                    cap,
                    reached: seen.len(),
                });
            }
        }
        Ok(())
    };

    push(ground.full(), &mut seen, &mut basis)?;
    for g in &generators {
        push((*g).clone(), &mut seen, &mut basis)?;
    }
    let mut i = 0;
    while i < basis.len() {
        let current = basis[i].clone();
        for g in &generators {
            push(current.intersection(g), &mut seen, &mut basis)?;
        }
        i += 1;
    }

    let mut opens = basis.clone();
    push(ground.empty_set(), &mut seen, &mut opens)?;
    let mut i = 0;
    while i < opens.len() {
        let current = opens[i].clone();
        for b in &basis {
            push(current.union(b), &mut seen, &mut opens)?;
        }
        i += 1;
    }
    Ok(opens)
}

/// Covers of each open set, assuming `opens` is canonically sorted. A proper
/// subset is a cover iff no already-accepted (larger) cover contains it.
fn compute_covers(opens: &[OpenSet]) -> Vec<Vec<OpenId>> {
    opens
        .iter()
        .enumerate()
        .map(|(u_idx, u)| {
            let mut covers: Vec<OpenId> = Vec::new();
            for v_idx in (0..u_idx).rev() {
                let v = &opens[v_idx];
                if v.len() == u.len() || !v.is_subset(u) {
                    continue;
                }
                if covers.iter().all(|c| !v.is_subset(&opens[c.0])) {
                    covers.push(OpenId(v_idx));
                }
            }
            covers.sort();
            covers
        })
        .collect()
}
