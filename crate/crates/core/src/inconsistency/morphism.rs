//! Executable checks that a modeling map is (or is not) a presheaf morphism.
//!
//! A modeling map is a morphism exactly when every consistent assignment has
//! zero local inconsistency everywhere. The randomized check samples global
//! sections and tests commutativity on cover pairs, then also samples
//! sections of single opens, extends them to the whole ground set with a
//! random fill value, and evaluates local inconsistency on the extension.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Evaluator, Gap, InconsistencyError};
use crate::model::{ModelPresheaf, ModelValue};
use crate::sheaf::{Assignment, Section};
use crate::topology::{OpenId, Topology};

#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub superset: OpenId,
    pub subset: OpenId,
    pub gap: f64,
    /// Index of the sampled section that exposed the gap.
    pub sample: usize,
    /// True when found through an extended single-open section.
    pub extended: bool,
}

/// Largest commutativity gap over all cover pairs for the assignment induced
/// by `global`; ties go to the canonically first `(U, V)`. Pairs with an
/// undefined model are ignored.
pub fn cover_pair_defect<M: ModelPresheaf + ?Sized>(
    topology: &Topology,
    model: &M,
    global: &Section,
) -> Result<Option<(OpenId, OpenId, f64)>, InconsistencyError> {
    let assignment = Assignment::from_global(topology, global)?;
    let eval = Evaluator::new(topology, model, &assignment)?;
    let mut worst: Option<(OpenId, OpenId, f64)> = None;
    for u in topology.ids() {
        for &v in topology.covers(u) {
            if let Gap::Value(g) = eval.gap(u, v)? {
                if worst.is_none_or(|(_, _, w)| g > w) {
                    worst = Some((u, v, g));
                }
            }
        }
    }
    Ok(worst)
}

/// Samples `trials` global sections from `generate` and reports the first
/// one whose worst cover-pair gap exceeds `tol`. Each trial also extends a
/// random open's section with a random fill and checks its local
/// inconsistency. `Ok(None)` means no counterexample was found.
pub fn check_morphism<M, G>(
    topology: &Topology,
    model: &M,
    trials: usize,
    seed: u64,
    tol: f64,
    mut generate: G,
) -> Result<Option<Counterexample>, InconsistencyError>
where
    M: ModelPresheaf + ?Sized,
    G: FnMut(&mut ChaCha8Rng) -> Section,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for sample in 0..trials {
        let global = generate(&mut rng);
        if let Some((u, v, gap)) = cover_pair_defect(topology, model, &global)? {
            if gap > tol {
                return Ok(Some(Counterexample {
                    superset: u,
                    subset: v,
                    gap,
                    sample,
                    extended: false,
                }));
            }
        }

        let u = OpenId(rng.random_range(0..topology.len()));
        let local = generate(&mut rng).restrict(topology.open(u))?;
        let fill = generate(&mut rng);
        let fill = fill
            .values()
            .next()
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; global.dim()]);
        let extended = local.extend_to_global(topology, &fill)?;
        let assignment = Assignment::from_global(topology, &extended)?;
        let result = Evaluator::new(topology, model, &assignment)?.local(u)?;
        if result.value > tol {
            return Ok(Some(Counterexample {
                superset: u,
                subset: result.witness.expect("positive gap has a witness"),
                gap: result.value,
                sample,
                extended: true,
            }));
        }
    }
    Ok(None)
}

/// Result of checking both sides of the morphism criterion over every
/// section with values drawn from a finite grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExhaustiveOutcome {
    /// Every consistent grid assignment has zero local inconsistency at every
    /// open set.
    pub zero_inconsistency: bool,
    /// For every open `U`, every grid section on `U` and every cover `V` of
    /// `U`, restriction commutes with the modeling map.
    pub cover_commutative: bool,
    pub assignments_checked: usize,
    pub sections_checked: usize,
}

/// Enumerates scalar grid sections on small grounds. The two flags are
/// computed independently: one from global sections through the local
/// inconsistency engine, the other from sections built directly on each open.
pub fn exhaustive_equivalence<M: ModelPresheaf + ?Sized>(
    topology: &Topology,
    model: &M,
    grid: &[f64],
    tol: f64,
) -> Result<ExhaustiveOutcome, InconsistencyError> {
    let n = topology.ground().len();
    let full = topology.ground().full();

    let mut zero_inconsistency = true;
    let mut assignments_checked = 0;
    for values in grid_points(grid, n) {
        let global = Section::scalar(full.clone(), &values)?;
        let assignment = Assignment::from_global(topology, &global)?;
        let eval = Evaluator::new(topology, model, &assignment)?;
        assignments_checked += 1;
        for u in topology.ids() {
            if eval.local(u)?.value > tol {
                zero_inconsistency = false;
                break;
            }
        }
    }

    let mut cover_commutative = true;
    let mut sections_checked = 0;
    'opens: for u in topology.ids() {
        let set_u = topology.open(u);
        for values in grid_points(grid, set_u.len()) {
            let f_u = Section::scalar(set_u.clone(), &values)?;
            sections_checked += 1;
            let fitted_u = model.fit(&f_u)?;
            for &v in topology.covers(u) {
                let set_v = topology.open(v);
                let fitted_v = model.fit(&f_u.restrict(set_v)?)?;
                if fitted_u.is_undefined() || fitted_v.is_undefined() {
                    continue;
                }
                let restricted = model.restrict(set_u, set_v, &fitted_u)?;
                if model.distance(set_v, &restricted, &fitted_v)? > tol {
                    cover_commutative = false;
                    break 'opens;
                }
            }
        }
    }

    Ok(ExhaustiveOutcome {
        zero_inconsistency,
        cover_commutative,
        assignments_checked,
        sections_checked,
    })
}

/// All vectors of length `len` over `grid`, in odometer order.
fn grid_points(grid: &[f64], len: usize) -> impl Iterator<Item = Vec<f64>> + '_ {
    let total = grid.len().pow(len as u32);
    (0..total).map(move |mut code| {
        (0..len)
            .map(|_| {
                let v = grid[code % grid.len()];
                code /= grid.len();
                v
            })
            .collect()
    })
}

impl ModelValue {
    /// The scalar inside `Scalar` or `UnitScore`.
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            ModelValue::Scalar(x) | ModelValue::UnitScore(x) => Some(*x),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DataIdentity, ModelSpec};
    use crate::topology::{GroundSet, DEFAULT_CAP};
    use rand_distr::StandardNormal;

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

    fn gaussian(t: &Topology) -> impl FnMut(&mut ChaCha8Rng) -> Section + '_ {
        move |rng| {
            let vals: Vec<f64> = (0..t.ground().len())
                .map(|_| rng.sample(StandardNormal))
                .collect();
            Section::scalar(t.ground().full(), &vals).unwrap()
        }
    }

    #[test]
    fn averaging_counterexample_on_pubs() {
        let t = toy();
        let g = Section::scalar(t.ground().full(), &[5.0, 6.0, 8.0, 7.0, 4.0, 5.0]).unwrap();
        let (u, v, gap) = cover_pair_defect(&t, &ModelSpec::Average, &g)
            .unwrap()
            .unwrap();
        assert_eq!(
            t.ground().sorted_labels(t.open(u)),
            vec!["c", "d", "e", "f"]
        );
        assert_eq!(t.ground().sorted_labels(t.open(v)), vec!["c", "d"]);
        assert!((gap - 1.5).abs() < 1e-12);
    }

    #[test]
    fn identity_never_fails_and_average_does() {
        let t = toy();
        assert_eq!(
            check_morphism(&t, &DataIdentity, 50, 1, 0.0, gaussian(&t)).unwrap(),
            None
        );
        let cx = check_morphism(&t, &ModelSpec::Average, 50, 1, 1e-12, gaussian(&t)).unwrap();
        assert!(cx.is_some_and(|c| c.gap > 0.0 && c.sample == 0));
    }

    #[test]
    fn exhaustive_agrees_on_toy() {
        let t = toy();
        let grid = [0.0, 1.0, 2.0];
        let avg = exhaustive_equivalence(&t, &ModelSpec::Average, &grid, 0.0).unwrap();
        assert!(!avg.zero_inconsistency && !avg.cover_commutative);
        assert_eq!(avg.assignments_checked, 729);
        let id = exhaustive_equivalence(&t, &DataIdentity, &grid, 0.0).unwrap();
        assert!(id.zero_inconsistency && id.cover_commutative);
    }

    #[test]
    fn grid_enumeration() {
        let pts: Vec<_> = grid_points(&[0.0, 1.0], 2).collect();
        assert_eq!(
            pts,
            vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 1.0]
            ]
        );
        assert_eq!(grid_points(&[0.0, 1.0, 2.0], 0).count(), 1);
    }
}
