//! Model presheaves: per-open-set model spaces, their restriction maps, a
//! metric on each space, and the modeling map that fits a model to a data
//! section.
//!
//! Every built-in family uses the same restriction rule: the identity between
//! non-empty opens and the zero map onto the one-point space over `∅`.

pub mod graff;
pub mod prototype;
pub mod stats;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sheaf::Section;
use crate::topology::OpenSet;

pub use graff::{graff_distance, model_graff_fit, principal_angles, AffineSubspace};
pub use prototype::{prototype_episodes, BinaryLabel, PrototypeParams, PrototypeStats};
pub use stats::{model_average, model_statistic, Statistic};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("model expects {expected}-dimensional values, data has {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("model values live in different spaces: {0}")]
    SpaceMismatch(String),
    #[error("metric applied to an undefined model value")]
    UndefinedOperand,
    #[error("restriction target is not a subset of the source")]
    NotSubset,
    #[error("subspace shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
}

/// An element of some model space `M(U)`.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelValue {
    Scalar(f64),
    /// A score in `[0, 1]`.
    UnitScore(f64),
    AffineSubspace(AffineSubspace),
    /// A data section used as its own model (the identity presheaf).
    Data(Section),
    /// The single element of `M(∅)`.
    Null,
    /// The modeling map could not be evaluated on this open set.
    Undefined(String),
}

impl ModelValue {
    pub fn is_undefined(&self) -> bool {
        matches!(self, ModelValue::Undefined(_))
    }
}

/// A model presheaf together with its modeling map and metrics.
pub trait ModelPresheaf: Sync {
    /// The modeling map `Φ_U`. Recoverable failures on a particular open set
    /// come back as [`ModelValue::Undefined`]; `Err` is reserved for
    /// configuration errors that invalidate the whole run.
    fn fit(&self, section: &Section) -> Result<ModelValue, ModelError>;

    /// `res_{from,to}` on model values.
    fn restrict(
        &self,
        from: &OpenSet,
        to: &OpenSet,
        model: &ModelValue,
    ) -> Result<ModelValue, ModelError> {
        restrict_model(from, to, model)
    }

    /// The metric `d_U`.
    fn distance(&self, _on: &OpenSet, a: &ModelValue, b: &ModelValue) -> Result<f64, ModelError> {
        metric(a, b)
    }
}

/// Identity on non-empty targets, `Null` on `∅`.
pub fn restrict_model(
    from: &OpenSet,
    to: &OpenSet,
    model: &ModelValue,
) -> Result<ModelValue, ModelError> {
    if !to.is_subset(from) {
        return Err(ModelError::NotSubset);
    }
    Ok(if to.is_empty() {
        ModelValue::Null
    } else {
        model.clone()
    })
}

/// `|x - y|` on scalars and scores, principal-angle distance on affine
/// subspaces, sup-norm on data sections, `0` between the two `Null`s.
pub fn metric(a: &ModelValue, b: &ModelValue) -> Result<f64, ModelError> {
    use ModelValue::*;
    match (a, b) {
        (Undefined(_), _) | (_, Undefined(_)) => Err(ModelError::UndefinedOperand),
        (Scalar(x), Scalar(y)) | (UnitScore(x), UnitScore(y)) => Ok((x - y).abs()),
        (AffineSubspace(x), AffineSubspace(y)) => graff_distance(x, y),
        (Data(x), Data(y)) => {
            if x.domain() != y.domain() || x.dim() != y.dim() {
                return Err(ModelError::SpaceMismatch(
                    "sections on different domains".into(),
                ));
            }
            Ok(x.values()
                .zip(y.values())
                .flat_map(|(u, v)| u.iter().zip(v).map(|(p, q)| (p - q).abs()))
                .fold(0.0, f64::max))
        }
        (Null, Null) => Ok(0.0),
        (x, y) => Err(ModelError::SpaceMismatch(format!(
            "{} vs {}",
            kind(x),
            kind(y)
        ))),
    }
}

fn kind(v: &ModelValue) -> &'static str {
    match v {
        ModelValue::Scalar(_) => "scalar",
        ModelValue::UnitScore(_) => "unit score",
        ModelValue::AffineSubspace(_) => "affine subspace",
        ModelValue::Data(_) => "data section",
        ModelValue::Null => "null",
        ModelValue::Undefined(_) => "undefined",
    }
}

/// The built-in model families.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    Average,
    Statistic(Statistic),
    Graff { q: usize },
    Prototype(PrototypeParams),
}

impl ModelSpec {
    /// Checks parameters against the value dimension before any fitting.
    pub fn validate(&self, dim: usize, ground_size: usize) -> Result<(), ModelError> {
        match self {
            ModelSpec::Average | ModelSpec::Statistic(_) if dim != 1 => {
                Err(ModelError::DimMismatch {
                    expected: 1,
                    got: dim,
                })
            }
            ModelSpec::Graff { q } if *q == 0 || *q >= dim => Err(ModelError::InvalidParams(
                format!("affine fit needs 1 <= q < r, got q={q}, r={dim}"),
            )),
            ModelSpec::Prototype(p) if p.shots == 0 || p.trials == 0 => Err(
                ModelError::InvalidParams("shots and trials must be at least 1".into()),
            ),
            ModelSpec::Prototype(p) if p.labels.len() != ground_size => {
                Err(ModelError::InvalidParams(format!(
                    "{} labels for {ground_size} ground elements",
                    p.labels.len()
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Average => "average",
            ModelSpec::Statistic(_) => "statistic",
            ModelSpec::Graff { .. } => "graff",
            ModelSpec::Prototype(_) => "prototype",
        }
    }
}

impl ModelPresheaf for ModelSpec {
    fn fit(&self, section: &Section) -> Result<ModelValue, ModelError> {
        if section.is_empty() {
            return Ok(ModelValue::Null);
        }
        match self {
            ModelSpec::Average => model_average(section),
            ModelSpec::Statistic(which) => model_statistic(section, *which),
            ModelSpec::Graff { q } => match model_graff_fit(section, *q) {
                Ok(a) => Ok(ModelValue::AffineSubspace(a)),
                Err(e @ ModelError::TooFewPoints { .. }) => {
                    Ok(ModelValue::Undefined(e.to_string()))
                }
                Err(e) => Err(e),
            },
            ModelSpec::Prototype(p) => Ok(model_prototype_accuracy(section, p)),
        }
    }
}

/// Mean prototype-episode accuracy as a [`ModelValue::UnitScore`], or
/// `Undefined` with the reason when the domain cannot support an episode.
pub fn model_prototype_accuracy(s: &Section, p: &PrototypeParams) -> ModelValue {
    match prototype_episodes(s, p) {
        Ok(stats) => ModelValue::UnitScore(stats.accuracy),
        Err(reason) => ModelValue::Undefined(reason),
    }
}

/// Data sections as their own models: `Φ` is the identity and restriction is
/// function restriction, so `Φ` is a presheaf morphism by construction.
#[derive(Clone, Copy, Debug, Default)]
pub struct DataIdentity;

impl ModelPresheaf for DataIdentity {
    fn fit(&self, section: &Section) -> Result<ModelValue, ModelError> {
        Ok(if section.is_empty() {
            ModelValue::Null
        } else {
            ModelValue::Data(section.clone())
        })
    }

    fn restrict(
        &self,
        from: &OpenSet,
        to: &OpenSet,
        model: &ModelValue,
    ) -> Result<ModelValue, ModelError> {
        if !to.is_subset(from) {
            return Err(ModelError::NotSubset);
        }
        if to.is_empty() {
            return Ok(ModelValue::Null);
        }
        match model {
            ModelValue::Data(s) => s
                .restrict(to)
                .map(ModelValue::Data)
                .map_err(|_| ModelError::NotSubset),
            other => Err(ModelError::SpaceMismatch(format!(
                "identity model cannot restrict a {}",
                kind(other)
            ))),
        }
    }
}

/// The model-selection file: `{"model": "average"}`, `{"model": "graff",
/// "q": 1}`, `{"model": "prototype", "shots": 3, "trials": 100, "seed": 1234}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelConfig {
    Average,
    Statistic {
        which: Statistic,
    },
    Graff {
        q: usize,
    },
    Prototype {
        #[serde(default = "default_shots")]
        shots: usize,
        #[serde(default = "default_trials")]
        trials: usize,
        #[serde(default)]
        seed: Option<u64>,
        /// Extra spellings accepted for the `s` class in the labels file.
        #[serde(default)]
        s_aliases: Vec<String>,
        /// Extra spellings accepted for the `ns` class in the labels file.
        #[serde(default)]
        ns_aliases: Vec<String>,
    },
}

fn default_shots() -> usize {
    prototype::DEFAULT_SHOTS
}

fn default_trials() -> usize {
    prototype::DEFAULT_TRIALS
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn example_metric_values() {
        assert_eq!(
            metric(&ModelValue::Scalar(6.5), &ModelValue::Scalar(7.5)).unwrap(),
            1.0
        );
        assert_eq!(metric(&ModelValue::Null, &ModelValue::Null).unwrap(), 0.0);
        assert_eq!(
            metric(&ModelValue::Undefined("x".into()), &ModelValue::Scalar(1.0)),
            Err(ModelError::UndefinedOperand)
        );
        assert!(matches!(
            metric(&ModelValue::Scalar(1.0), &ModelValue::UnitScore(1.0)),
            Err(ModelError::SpaceMismatch(_))
        ));
    }

    #[test]
    fn restriction_rule() {
        let i = OpenSet::full(6);
        let cd = OpenSet::from_indices(6, [2, 3]);
        let m = ModelValue::Scalar(35.0 / 6.0);
        assert_eq!(restrict_model(&i, &cd, &m).unwrap(), m);
        assert_eq!(
            restrict_model(&i, &OpenSet::empty(6), &m).unwrap(),
            ModelValue::Null
        );
        assert_eq!(restrict_model(&cd, &i, &m), Err(ModelError::NotSubset));
    }

    #[test]
    fn averaging_is_not_a_morphism_on_pubs() {
        let g = Section::scalar(OpenSet::full(6), &[5.0, 6.0, 8.0, 7.0, 4.0, 5.0]).unwrap();
        let u2 = OpenSet::from_indices(6, [2, 3, 4, 5]);
        let cd = OpenSet::from_indices(6, [2, 3]);
        let spec = ModelSpec::Average;
        let f_u2 = g.restrict(&u2).unwrap();
        let lhs = spec.restrict(&u2, &cd, &spec.fit(&f_u2).unwrap()).unwrap();
        let rhs = spec.fit(&f_u2.restrict(&cd).unwrap()).unwrap();
        assert_eq!(lhs, ModelValue::Scalar(6.0));
        assert_eq!(rhs, ModelValue::Scalar(7.5));
    }

    #[test]
    fn config_parses() {
        let c: ModelConfig = serde_json::from_str(r#"{"model":"average"}"#).unwrap();
        assert_eq!(c, ModelConfig::Average);
        let c: ModelConfig = serde_json::from_str(r#"{"model":"graff","q":1}"#).unwrap();
        assert_eq!(c, ModelConfig::Graff { q: 1 });
        let c: ModelConfig =
            serde_json::from_str(r#"{"model":"prototype","shots":3,"trials":100,"seed":1234}"#)
                .unwrap();
        assert!(matches!(
            c,
            ModelConfig::Prototype {
                shots: 3,
                trials: 100,
                seed: Some(1234),
                ..
            }
        ));
        let c: ModelConfig =
            serde_json::from_str(r#"{"model":"statistic","which":"median"}"#).unwrap();
        assert_eq!(
            c,
            ModelConfig::Statistic {
                which: Statistic::Median
            }
        );
        assert!(serde_json::from_str::<ModelConfig>(r#"{"model":"mode"}"#).is_err());
    }

    #[test]
    fn validate_catches_shape_errors() {
        assert!(ModelSpec::Average.validate(2, 5).is_err());
        assert!(ModelSpec::Graff { q: 3 }.validate(3, 5).is_err());
        assert!(ModelSpec::Graff { q: 1 }.validate(3, 5).is_ok());
    }

    #[test]
    fn graff_too_few_points_is_undefined() {
        let s = Section::new(OpenSet::full(1), 3, vec![vec![1.0, 2.0, 3.0]]).unwrap();
        let v = ModelSpec::Graff { q: 2 }.fit(&s).unwrap();
        assert!(v.is_undefined());
    }

    #[test]
    fn identity_model_commutes() {
        let g = Section::scalar(OpenSet::full(4), &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let v = OpenSet::from_indices(4, [1, 3]);
        let m = DataIdentity;
        let lhs = m.restrict(g.domain(), &v, &m.fit(&g).unwrap()).unwrap();
        let rhs = m.fit(&g.restrict(&v).unwrap()).unwrap();
        assert_eq!(metric(&lhs, &rhs).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn score_metric_axioms(a in 0f64..=1.0, b in 0f64..=1.0, c in 0f64..=1.0) {
            let (x, y, z) = (ModelValue::UnitScore(a), ModelValue::UnitScore(b), ModelValue::UnitScore(c));
            let dxy = metric(&x, &y).unwrap();
            prop_assert_eq!(dxy, metric(&y, &x).unwrap());
            prop_assert_eq!(dxy == 0.0, a == b);
            prop_assert!(dxy <= metric(&x, &z).unwrap() + metric(&z, &y).unwrap() + 1e-12);
        }

        #[test]
        fn identity_restriction_composes(bits in proptest::collection::vec(any::<bool>(), 8), x in -10f64..10.0) {
            // Chain U ⊇ V ⊇ W built by successively dropping elements.
            let u = OpenSet::full(8);
            let v = OpenSet::from_indices(8, (0..8).filter(|&i| bits[i]));
            let w = OpenSet::from_indices(8, v.iter().filter(|i| i % 2 == 0));
            let m = ModelValue::Scalar(x);
            let two_step = restrict_model(&v, &w, &restrict_model(&u, &v, &m).unwrap()).unwrap();
            prop_assert_eq!(two_step, restrict_model(&u, &w, &m).unwrap());
        }
    }
}
