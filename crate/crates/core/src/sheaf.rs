//! Sections of the data sheaf and assignments over a topology.
//!
//! The data sheaf assigns to an open set `U` every function `U -> R^r`, with
//! plain function restriction. Nothing beyond the value dimension needs to be
//! stored for the sheaf itself; a [`Section`] is one such function.

use thiserror::Error;

use crate::topology::{OpenId, OpenSet, Topology};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SheafError {
    #[error("restriction target is not a subset of the section domain")]
    NotSubset,
    #[error("section domain does not match: {0}")]
    DomainMismatch(String),
    #[error("value dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("value dimension must be at least 1")]
    ZeroDim,
    #[error("assignment has {got} sections but the topology has {expected} open sets")]
    SectionCount { expected: usize, got: usize },
}

/// A function from an open set to `R^dim`, stored row-major in ascending
/// element order.
#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    domain: OpenSet,
    dim: usize,
    members: Vec<usize>,
    data: Vec<f64>,
}

impl Section {
    /// `rows` must be ordered like the ascending members of `domain`.
    pub fn new(domain: OpenSet, dim: usize, rows: Vec<Vec<f64>>) -> Result<Self, SheafError> {
        if dim == 0 {
            return Err(SheafError::ZeroDim);
        }
        let members: Vec<usize> = domain.iter().collect();
        if rows.len() != members.len() {
            return Err(SheafError::DomainMismatch(format!(
                "{} rows for {} domain elements",
                rows.len(),
                members.len()
            )));
        }
        let mut data = Vec::with_capacity(members.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(SheafError::DimMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self {
            domain,
            dim,
            members,
            data,
        })
    }

    /// Builds a section by evaluating `f` at every member of `domain`.
    pub fn from_fn(
        domain: OpenSet,
        dim: usize,
        mut f: impl FnMut(usize) -> Vec<f64>,
    ) -> Result<Self, SheafError> {
        let rows = domain.iter().map(&mut f).collect();
        Self::new(domain, dim, rows)
    }

    pub fn scalar(domain: OpenSet, values: &[f64]) -> Result<Self, SheafError> {
        Self::new(domain, 1, values.iter().map(|&v| vec![v]).collect())
    }

    /// The unique section over the empty set.
    pub fn empty(universe: usize, dim: usize) -> Self {
        Self {
            domain: OpenSet::empty(universe),
            dim,
            members: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn domain(&self) -> &OpenSet {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn get(&self, element: usize) -> Option<&[f64]> {
        self.members
            .binary_search(&element)
            .ok()
            .map(|k| self.row(k))
    }

    fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    /// `(element, value)` pairs in ascending element order.
    pub fn iter(&self) -> impl ExactSizeIterator<Item = (usize, &[f64])> + '_ {
        self.members
            .iter()
            .zip(self.data.chunks_exact(self.dim))
            .map(|(&i, v)| (i, v))
    }

    pub fn values(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn restrict(&self, to: &OpenSet) -> Result<Section, SheafError> {
        if !to.is_subset(&self.domain) {
            return Err(SheafError::NotSubset);
        }
        let mut members = Vec::with_capacity(to.len());
        let mut data = Vec::with_capacity(to.len() * self.dim);
        for (i, v) in self.iter() {
            if to.contains(i) {
                members.push(i);
                data.extend_from_slice(v);
            }
        }
        Ok(Section {
            domain: to.clone(),
            dim: self.dim,
            members,
            data,
        })
    }

    /// Extends to the whole ground set, filling elements outside the domain
    /// with `fill`.
    pub fn extend_to_global(
        &self,
        topology: &Topology,
        fill: &[f64],
    ) -> Result<Section, SheafError> {
        if topology.id_of(&self.domain).is_none() {
            return Err(SheafError::DomainMismatch(
                "section domain is not an open set".into(),
            ));
        }
        if fill.len() != self.dim {
            return Err(SheafError::DimMismatch {
                expected: self.dim,
                got: fill.len(),
            });
        }
        Section::from_fn(topology.ground().full(), self.dim, |i| {
            self.get(i).unwrap_or(fill).to_vec()
        })
    }

    /// First element (ascending) where the two sections differ by more than
    /// `tol` in some coordinate. Both must share a domain.
    fn first_difference(&self, other: &Section, tol: f64) -> Option<usize> {
        debug_assert_eq!(self.members, other.members);
        self.iter()
            .zip(other.values())
            .find(|((_, a), b)| {
                a.iter()
                    .zip(b.iter())
                    .any(|(x, y)| (x - y).abs() > tol || x.is_nan() != y.is_nan())
            })
            .map(|((i, _), _)| i)
    }
}

/// One section per open set, indexed by [`OpenId`].
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    dim: usize,
    sections: Vec<Section>,
}

/// Where an assignment first fails to agree with restriction.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyWitness {
    pub superset: OpenId,
    pub subset: OpenId,
    pub element: usize,
    pub restricted: Vec<f64>,
    pub assigned: Vec<f64>,
}

impl Assignment {
    pub fn new(topology: &Topology, sections: Vec<Section>) -> Result<Self, SheafError> {
        if sections.len() != topology.len() {
            return Err(SheafError::SectionCount {
                expected: topology.len(),
                got: sections.len(),
            });
        }
        let dim = sections[0].dim;
        for (id, s) in topology.ids().zip(&sections) {
            if s.domain() != topology.open(id) {
                return Err(SheafError::DomainMismatch(format!(
                    "section {} has the wrong domain",
                    id.0
                )));
            }
            if s.dim != dim {
                return Err(SheafError::DimMismatch {
                    expected: dim,
                    got: s.dim,
                });
            }
        }
        Ok(Self { dim, sections })
    }

    /// The assignment induced by a global section: `a_U = g|U`.
    pub fn from_global(topology: &Topology, global: &Section) -> Result<Self, SheafError> {
        if global.domain() != &topology.ground().full() {
            return Err(SheafError::DomainMismatch(
                "global section must be defined on the whole ground set".into(),
            ));
        }
        let sections = topology
            .opens()
            .iter()
            .map(|u| global.restrict(u))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            dim: global.dim,
            sections,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn section(&self, id: OpenId) -> &Section {
        &self.sections[id.0]
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    /// Checks `a_V = a_U|V` on every cover pair, largest `U` first.
    ///
    /// Any inclusion of open sets factors through a chain of covers, so with
    /// `tol = 0` this is equivalent to checking every pair `V ⊆ U`.
    pub fn check_consistency(
        &self,
        topology: &Topology,
        tol: f64,
    ) -> Result<(), ConsistencyWitness> {
        for u in topology.ids().rev() {
            let a_u = self.section(u);
            for &v in topology.covers(u) {
                let a_v = self.section(v);
                let restricted = a_u.restrict(a_v.domain()).expect("cover is a subset");
                if let Some(element) = restricted.first_difference(a_v, tol) {
                    return Err(ConsistencyWitness {
                        superset: u,
                        subset: v,
                        element,
                        restricted: restricted.get(element).unwrap().to_vec(),
                        assigned: a_v.get(element).unwrap().to_vec(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn is_consistent(&self, topology: &Topology, tol: f64) -> bool {
        self.check_consistency(topology, tol).is_ok()
    }
}
