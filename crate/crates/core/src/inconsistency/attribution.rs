//! Remove-one-part attribution over a disjoint-cover subbasis.
//!
//! When the subbasis partitions the ground set, every open set is a union of
//! parts and its covers are exactly the unions with one part removed. For
//! each open made of at least two parts, the 1-filtered argmax cover `V`
//! names the part `U \ V` whose removal moves the model the most.

use super::{Evaluator, Gap, InconsistencyError};
use crate::model::ModelPresheaf;
use crate::sheaf::Assignment;
use crate::topology::{OpenId, Topology};

#[derive(Clone, Debug, PartialEq)]
pub struct AttributionTally {
    /// `(part name, count)` in subbasis order; every part is listed.
    pub counts: Vec<(String, usize)>,
    /// Opens that incremented a counter.
    pub contributing: usize,
    /// Opens whose remove-one candidates were all undefined.
    pub skipped: Vec<OpenId>,
}

impl AttributionTally {
    /// Counts sorted by descending count, ties in subbasis order.
    pub fn ranked(&self) -> Vec<(String, usize)> {
        let mut out = self.counts.clone();
        out.sort_by_key(|&(_, c)| std::cmp::Reverse(c));
        out
    }

    pub fn count(&self, name: &str) -> Option<usize> {
        self.counts.iter().find(|(n, _)| n == name).map(|&(_, c)| c)
    }
}

pub fn attribution_tally<M: ModelPresheaf + ?Sized>(
    topology: &Topology,
    model: &M,
    assignment: &Assignment,
) -> Result<AttributionTally, InconsistencyError> {
    let eval = Evaluator::new(topology, model, assignment)?;
    eval.prefetch()?;
    tally_with(&eval)
}

pub(super) fn tally_with<M: ModelPresheaf + ?Sized>(
    eval: &Evaluator<'_, M>,
) -> Result<AttributionTally, InconsistencyError> {
    let topology = eval.topology();
    if !topology.is_disjoint_cover() {
        return Err(InconsistencyError::NotDisjointCover);
    }
    let parts = topology.subbasis();
    let mut counts = vec![0usize; parts.len()];
    let mut contributing = 0;
    let mut skipped = Vec::new();

    for u in topology.ids() {
        let set_u = topology.open(u);
        // Covers of a union of parts are the remove-one unions.
        let candidates = topology.covers(u);
        if candidates.len() < 2 {
            continue;
        }
        let mut best: Option<(f64, OpenId)> = None;
        for &v in candidates {
            if let Gap::Value(g) = eval.gap(u, v)? {
                if best.is_none_or(|(b, _)| g > b) {
                    best = Some((g, v));
                }
            }
        }
        match best {
            Some((_, v)) => {
                let removed = set_u.difference(topology.open(v));
                let part = parts
                    .iter()
                    .position(|p| p.set == removed)
                    .expect("cover of a union of parts removes exactly one part");
                counts[part] += 1;
                contributing += 1;
            }
            None => skipped.push(u),
        }
    }

    Ok(AttributionTally {
        counts: parts
            .iter()
            .zip(counts)
            .map(|(p, c)| (p.name.clone(), c))
            .collect(),
        contributing,
        skipped,
    })
}
