//! Local, global and filtered inconsistency of an assignment with respect to
//! a model presheaf.
//!
//! For an open `U` and each `V ⊆ U` the engine compares the restricted model
//! `res_{U,V}(Φ_U(a_U))` with the model fitted directly on `V`, `Φ_V(a_V)`,
//! under the metric `d_V`. Local inconsistency is the maximum of these gaps
//! over the order ideal of `U`; the `j`-filtered variant only looks `j` cover
//! steps down. Argmax witnesses break ties by canonical open-set order.

mod attribution;
mod morphism;

use std::sync::OnceLock;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{ModelError, ModelPresheaf, ModelValue};
use crate::sheaf::{Assignment, SheafError};
use crate::topology::{IdealFiltration, OpenId, OpenSet, Topology, TopologyError};

pub use attribution::{attribution_tally, AttributionTally};
pub use morphism::{
    check_morphism, cover_pair_defect, exhaustive_equivalence, Counterexample, ExhaustiveOutcome,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InconsistencyError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sheaf(#[from] SheafError),
    #[error("subbasis is not a disjoint cover of the ground set")]
    NotDisjointCover,
}

/// A candidate `V` left out of a maximum because a model was undefined.
#[derive(Clone, Debug, PartialEq)]
pub struct Skipped {
    pub set: OpenId,
    pub reason: String,
}

/// Maximum gap over a candidate family with its canonically-first witness.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxGap {
    /// `0` when no candidate could be evaluated.
    pub value: f64,
    pub witness: Option<OpenId>,
    pub skipped: Vec<Skipped>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gap {
    Value(f64),
    Skipped(String),
}

/// Memoised model evaluation over one assignment. Each open set's model is
/// computed at most once, by whichever thread asks first.
pub struct Evaluator<'a, M: ModelPresheaf + ?Sized> {
    topology: &'a Topology,
    model: &'a M,
    assignment: &'a Assignment,
    cache: Vec<OnceLock<Result<ModelValue, ModelError>>>,
}

impl<'a, M: ModelPresheaf + ?Sized> Evaluator<'a, M> {
    pub fn new(
        topology: &'a Topology,
        model: &'a M,
        assignment: &'a Assignment,
    ) -> Result<Self, InconsistencyError> {
        if assignment.sections().len() != topology.len() {
            return Err(SheafError::SectionCount {
                expected: topology.len(),
                got: assignment.sections().len(),
            }
            .into());
        }
        Ok(Self {
            topology,
            model,
            assignment,
            cache: (0..topology.len()).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn topology(&self) -> &'a Topology {
        self.topology
    }

    /// `Φ_U(a_U)`.
    pub fn model_value(&self, id: OpenId) -> Result<&ModelValue, InconsistencyError> {
        self.cache[id.0]
            .get_or_init(|| self.model.fit(self.assignment.section(id)))
            .as_ref()
            .map_err(|e| e.clone().into())
    }

    /// Evaluates every model in parallel, in no particular order.
    pub fn prefetch(&self) -> Result<(), InconsistencyError> {
        self.topology
            .ids()
            .collect::<Vec<_>>()
            .par_iter()
            .try_for_each(|&id| self.model_value(id).map(|_| ()))
    }

    /// `d_V(res_{U,V}(Φ_U(a_U)), Φ_V(a_V))`.
    pub fn gap(&self, u: OpenId, v: OpenId) -> Result<Gap, InconsistencyError> {
        let model_u = self.model_value(u)?;
        if let ModelValue::Undefined(reason) = model_u {
            return Ok(Gap::Skipped(format!(
                "model undefined on the enclosing set: {reason}"
            )));
        }
        let model_v = self.model_value(v)?;
        if let ModelValue::Undefined(reason) = model_v {
            return Ok(Gap::Skipped(reason.clone()));
        }
        let (set_u, set_v) = (self.topology.open(u), self.topology.open(v));
        let restricted = self.model.restrict(set_u, set_v, model_u)?;
        Ok(Gap::Value(self.model.distance(
            set_v,
            &restricted,
            model_v,
        )?))
    }

    /// Max gap from `u` over `candidates` (assumed in canonical order).
    pub fn max_gap(&self, u: OpenId, candidates: &[OpenId]) -> Result<MaxGap, InconsistencyError> {
        let mut best = MaxGap {
            value: 0.0,
            witness: None,
            skipped: Vec::new(),
        };
        for &v in candidates {
            match self.gap(u, v)? {
                Gap::Value(g) => {
                    if best.witness.is_none() || g > best.value {
                        best.value = g;
                        best.witness = Some(v);
                    }
                }
                Gap::Skipped(reason) => best.skipped.push(Skipped { set: v, reason }),
            }
        }
        Ok(best)
    }

    /// Local inconsistency at `u`: max over the whole order ideal.
    pub fn local(&self, u: OpenId) -> Result<MaxGap, InconsistencyError> {
        self.max_gap(u, &self.topology.order_ideal_of(u))
    }

    /// `j`-filtered inconsistency at `u`.
    pub fn filtered(&self, u: OpenId, j: usize) -> Result<MaxGap, InconsistencyError> {
        let f = IdealFiltration::of(self.topology, u);
        self.max_gap(u, &f.up_to(j))
    }
}

pub fn local_inconsistency<M: ModelPresheaf + ?Sized>(
    topology: &Topology,
    model: &M,
    assignment: &Assignment,
    u: &OpenSet,
) -> Result<MaxGap, InconsistencyError> {
    let id = topology.require(u)?;
    Evaluator::new(topology, model, assignment)?.local(id)
}

pub fn filtered_inconsistency<M: ModelPresheaf + ?Sized>(
    topology: &Topology,
    model: &M,
    assignment: &Assignment,
    u: &OpenSet,
    j: usize,
) -> Result<MaxGap, InconsistencyError> {
    let id = topology.require(u)?;
    Evaluator::new(topology, model, assignment)?.filtered(id, j)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalInconsistency {
    pub value: f64,
    pub at: OpenId,
}

pub fn global_inconsistency<M: ModelPresheaf + ?Sized>(
    topology: &Topology,
    model: &M,
    assignment: &Assignment,
) -> Result<GlobalInconsistency, InconsistencyError> {
    let eval = Evaluator::new(topology, model, assignment)?;
    let locals = topology
        .ids()
        .map(|u| eval.local(u).map(|g| g.value))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(argmax_first(&locals))
}

fn argmax_first(values: &[f64]) -> GlobalInconsistency {
    let mut best = GlobalInconsistency {
        value: values[0],
        at: OpenId(0),
    };
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best.value {
            best = GlobalInconsistency {
                value: v,
                at: OpenId(i),
            };
        }
    }
    best
}

/// Everything computed for one open set.
#[derive(Clone, Debug, PartialEq)]
pub struct OpenReport {
    pub id: OpenId,
    pub model: ModelValue,
    pub local: MaxGap,
    /// `(j, result)` for each requested filtration depth, ascending `j`.
    pub filtered: Vec<(usize, MaxGap)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InconsistencyReport {
    pub opens: Vec<OpenReport>,
    pub global: GlobalInconsistency,
    pub attribution: Option<AttributionTally>,
}

/// Runs the full analysis. Per-open work runs on the current rayon pool; the
/// report is assembled in canonical order, so it does not depend on the
/// thread count.
pub fn analyze<M: ModelPresheaf + ?Sized>(
    topology: &Topology,
    model: &M,
    assignment: &Assignment,
    depths: &[usize],
) -> Result<InconsistencyReport, InconsistencyError> {
    let mut depths = depths.to_vec();
    depths.sort_unstable();
    depths.dedup();

    let eval = Evaluator::new(topology, model, assignment)?;
    eval.prefetch()?;

    let ids: Vec<OpenId> = topology.ids().collect();
    let opens = ids
        .par_iter()
        .map(|&u| {
            let filtration = IdealFiltration::of(topology, u);
            let ideal: Vec<OpenId> = filtration.iter().map(|(v, _)| v).collect();
            let local = eval.max_gap(u, &ideal)?;
            let filtered = depths
                .iter()
                .map(|&j| Ok((j, eval.max_gap(u, &filtration.up_to(j))?)))
                .collect::<Result<Vec<_>, InconsistencyError>>()?;
            Ok(OpenReport {
                id: u,
                model: eval.model_value(u)?.clone(),
                local,
                filtered,
            })
        })
        .collect::<Result<Vec<_>, InconsistencyError>>()?;

    let locals: Vec<f64> = opens.iter().map(|o| o.local.value).collect();
    let global = argmax_first(&locals);
    let attribution = if topology.is_disjoint_cover() {
        Some(attribution::tally_with(&eval)?)
    } else {
        None
    };
    Ok(InconsistencyReport {
        opens,
        global,
        attribution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DataIdentity, ModelSpec};
    use crate::sheaf::Section;
    use crate::topology::{GroundSet, DEFAULT_CAP};

    fn toy() -> Topology {
        let g = GroundSet::new(["a", "b", "c", "d", "e", "f"]).unwrap();
        Topology::generate(
            g,
            &[
                ("U1".to_string(), vec!["a", "b", "c", "d"]),
                ("U2".to_string(), vec!["c", "d", "e", "f"]),
            ],
            DEFAULT_CAP,
        )
        .unwrap()
    }

    fn pubs(t: &Topology) -> Assignment {
        let g = Section::scalar(t.ground().full(), &[5.0, 6.0, 8.0, 7.0, 4.0, 5.0]).unwrap();
        Assignment::from_global(t, &g).unwrap()
    }

    fn id(t: &Topology, labels: &[&str]) -> OpenId {
        t.require(&t.ground().subset("", labels).unwrap()).unwrap()
    }

    #[test]
    fn toy_locals_match_direct_evaluation() {
        let t = toy();
        let a = pubs(&t);
        let spec = ModelSpec::Average;
        let cd = id(&t, &["c", "d"]);
        let u1 = id(&t, &["a", "b", "c", "d"]);
        let u2 = id(&t, &["c", "d", "e", "f"]);

        let l1 = local_inconsistency(&t, &spec, &a, t.open(u1)).unwrap();
        assert!((l1.value - 1.0).abs() < 1e-12);
        assert_eq!(l1.witness, Some(cd));
        let l2 = local_inconsistency(&t, &spec, &a, t.open(u2)).unwrap();
        assert!((l2.value - 1.5).abs() < 1e-12);
        assert_eq!(l2.witness, Some(cd));
        let lcd = local_inconsistency(&t, &spec, &a, t.open(cd)).unwrap();
        assert_eq!(lcd.value, 0.0);

        let li = local_inconsistency(&t, &spec, &a, &t.ground().full()).unwrap();
        assert!((li.value - 5.0 / 3.0).abs() < 1e-12);
        assert_eq!(li.witness, Some(cd));

        let g = global_inconsistency(&t, &spec, &a).unwrap();
        assert_eq!(g.at, t.full_id());
        assert!((g.value - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn filtered_depths() {
        let t = toy();
        let a = pubs(&t);
        let spec = ModelSpec::Average;
        let full = t.ground().full();
        let f0 = filtered_inconsistency(&t, &spec, &a, &full, 0).unwrap();
        assert_eq!((f0.value, f0.witness), (0.0, Some(t.full_id())));
        let f1 = filtered_inconsistency(&t, &spec, &a, &full, 1).unwrap();
        assert!((f1.value - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(f1.witness, Some(id(&t, &["a", "b", "c", "d"])));
        let deep = filtered_inconsistency(&t, &spec, &a, &full, 10).unwrap();
        assert_eq!(deep, local_inconsistency(&t, &spec, &a, &full).unwrap());
    }

    #[test]
    fn constant_data_has_zero_inconsistency() {
        let t = toy();
        let g = Section::scalar(t.ground().full(), &[3.0; 6]).unwrap();
        let a = Assignment::from_global(&t, &g).unwrap();
        let report = analyze(&t, &ModelSpec::Average, &a, &[1]).unwrap();
        assert!(report.opens.iter().all(|o| o.local.value == 0.0));
        assert_eq!(report.global.value, 0.0);
        assert!(report.attribution.is_none());
    }

    #[test]
    fn identity_model_is_zero_everywhere() {
        let t = toy();
        let a = pubs(&t);
        let report = analyze(&t, &DataIdentity, &a, &[1, 2]).unwrap();
        assert!(report.opens.iter().all(|o| o.local.value == 0.0));
    }

    #[test]
    fn not_open_rejected() {
        let t = toy();
        let a = pubs(&t);
        let s = t.ground().subset("", &["a"]).unwrap();
        assert!(matches!(
            local_inconsistency(&t, &ModelSpec::Average, &a, &s),
            Err(InconsistencyError::Topology(TopologyError::NotOpen(_)))
        ));
    }

    #[test]
    fn undefined_models_are_skipped_not_zeroed() {
        // Graff with q = 2 on 3-dim data: opens of size 1 cannot be fitted.
        let g = GroundSet::new(["a", "b", "c", "d"]).unwrap();
        let t = Topology::generate(
            g,
            &[
                ("x".to_string(), vec!["a"]),
                ("y".to_string(), vec!["b", "c", "d"]),
            ],
            DEFAULT_CAP,
        )
        .unwrap();
        let rows = vec![
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.5],
        ];
        let s = Section::new(t.ground().full(), 3, rows).unwrap();
        let a = Assignment::from_global(&t, &s).unwrap();
        let report = analyze(&t, &ModelSpec::Graff { q: 2 }, &a, &[1]).unwrap();
        let full = &report.opens[t.full_id().0];
        let x = id(&t, &["a"]);
        assert_eq!(full.local.skipped.len(), 1);
        assert_eq!(full.local.skipped[0].set, x);
        let on_x = &report.opens[x.0];
        assert!(on_x.model.is_undefined());
        assert_eq!(on_x.local.witness, None);
        assert_eq!(on_x.local.value, 0.0);
    }
}
