mod common;

use common::{chain_levels, family, mask_set, naive_closure, naive_covers, set_mask, topology};
use modelsheaf::inconsistency::{analyze, exhaustive_equivalence, local_inconsistency, Evaluator};
use modelsheaf::model::{DataIdentity, ModelSpec};
use modelsheaf::sheaf::{Assignment, Section};
use modelsheaf::topology::OpenId;
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = (usize, Vec<u64>)> {
    (1usize..=8).prop_flat_map(|n| (Just(n), prop::collection::vec(0u64..1 << n, 0..=4)))
}

fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn generation_matches_naive_closure((n, masks) in instance()) {
        let t = topology(n, &masks);
        prop_assert_eq!(family(&t), naive_closure(n, &masks));
    }

    #[test]
    fn canonical_order_and_closure((n, masks) in instance()) {
        let t = topology(n, &masks);
        prop_assert!(t.open(t.empty_id()).is_empty());
        prop_assert!(t.open(t.full_id()).is_full());
        for w in t.opens().windows(2) {
            prop_assert!(w[0].canonical_cmp(&w[1]).is_lt());
        }
        for a in t.opens() {
            for b in t.opens() {
                prop_assert!(t.id_of(&a.intersection(b)).is_some());
                prop_assert!(t.id_of(&a.union(b)).is_some());
            }
        }
    }

    #[test]
    fn regeneration_is_idempotent((n, masks) in instance()) {
        let t = topology(n, &masks);
        let all: Vec<u64> = family(&t).into_iter().collect();
        prop_assert_eq!(family(&topology(n, &all)), family(&t));
    }

    #[test]
    fn covers_are_sound_and_complete((n, masks) in instance()) {
        let t = topology(n, &masks);
        let fam = family(&t);
        for id in t.ids() {
            let got: Vec<u64> = t.covers(id).iter().map(|&c| set_mask(t.open(c))).collect();
            let mut want = naive_covers(&fam, set_mask(t.open(id)));
            want.sort_by(|&a, &b| mask_set(n, a).canonical_cmp(&mask_set(n, b)));
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn covers_stay_inside_ideals((n, masks) in instance()) {
        let t = topology(n, &masks);
        for u in t.ids() {
            let ideal = t.order_ideal_of(u);
            for &v in &ideal {
                for c in t.covers(v) {
                    prop_assert!(ideal.contains(c));
                }
            }
        }
    }

    #[test]
    fn filtration_nests_and_matches_chains((n, masks) in instance()) {
        let t = topology(n, &masks);
        let fam = family(&t);
        for u in t.ids() {
            let set = t.open(u);
            let f = t.filtration(set).unwrap();
            let mut prev = t.lambda_j(set, 0).unwrap();
            prop_assert_eq!(&prev, &vec![u]);
            for j in 1..=f.max_level() + 1 {
                let cur = t.lambda_j(set, j).unwrap();
                prop_assert!(prev.iter().all(|v| cur.contains(v)));
                prev = cur;
            }
            prop_assert_eq!(&prev, &t.order_ideal(set).unwrap());

            let oracle = chain_levels(&fam, set_mask(set));
            for (v, level) in f.iter() {
                prop_assert_eq!(oracle.get(&set_mask(t.open(v))), Some(&level));
            }
            prop_assert_eq!(oracle.len(), f.len());
        }
    }

    #[test]
    fn disjoint_subbasis_gives_power_set(assign in prop::collection::vec(0usize..4, 1..=10)) {
        let n = assign.len();
        let k = assign.iter().max().unwrap() + 1;
        let masks: Vec<u64> = (0..k)
            .map(|p| (0..n).filter(|&i| assign[i] == p).fold(0, |m, i| m | 1 << i))
            .collect();
        prop_assume!(masks.iter().all(|&m| m != 0));
        let t = topology(n, &masks);
        prop_assert!(t.is_disjoint_cover());
        prop_assert_eq!(t.len(), 1 << k);
        prop_assert_eq!(family(&t), naive_closure(n, &masks));
        for u in t.ids() {
            let r = t.parts_of(u).map_or(0, |p| p.len());
            prop_assert_eq!(t.lambda_j(t.open(u), 1).unwrap().len(), r + 1);
        }
    }

    #[test]
    fn cover_pair_consistency_equals_all_pairs(
        (n, masks) in instance(),
        vals in values(8),
        poke in (0usize..64, 0usize..8, -1.0f64..1.0),
    ) {
        let t = topology(n, &masks);
        let global = Section::scalar(t.ground().full(), &vals[..n]).unwrap();
        let mut sections: Vec<Section> = t.opens().iter().map(|u| global.restrict(u).unwrap()).collect();
        let (which, elem, delta) = poke;
        let id = which % t.len();
        if t.open(OpenId(id)).contains(elem % n) {
            let e = elem % n;
            let dom = t.open(OpenId(id)).clone();
            sections[id] = Section::from_fn(dom, 1, |i| {
                let v = global.get(i).unwrap()[0];
                vec![if i == e { v + delta } else { v }]
            }).unwrap();
        }
        let a = Assignment::new(&t, sections).unwrap();
        let mut all_pairs = true;
        for u in t.ids() {
            for v in t.order_ideal_of(u) {
                let s = a.section(u).restrict(t.open(v)).unwrap();
                if s != *a.section(v) {
                    all_pairs = false;
                }
            }
        }
        prop_assert_eq!(a.is_consistent(&t, 0.0), all_pairs);
    }

    #[test]
    fn identity_model_has_zero_inconsistency((n, masks) in instance(), vals in values(8)) {
        let t = topology(n, &masks);
        let global = Section::scalar(t.ground().full(), &vals[..n]).unwrap();
        let a = Assignment::from_global(&t, &global).unwrap();
        for u in t.ids() {
            prop_assert_eq!(local_inconsistency(&t, &DataIdentity, &a, t.open(u)).unwrap().value, 0.0);
        }
    }

    #[test]
    fn filtered_is_monotone_and_reaches_local((n, masks) in instance(), vals in values(8)) {
        let t = topology(n, &masks);
        let global = Section::scalar(t.ground().full(), &vals[..n]).unwrap();
        let a = Assignment::from_global(&t, &global).unwrap();
        let report = analyze(&t, &ModelSpec::Average, &a, &[0, 1, 2, 3, 8]).unwrap();
        for o in &report.opens {
            let f: Vec<f64> = o.filtered.iter().map(|(_, g)| g.value).collect();
            prop_assert_eq!(f[0], 0.0);
            prop_assert!(f.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(f[4], o.local.value);
            prop_assert!(o.local.value <= report.global.value);
        }
        let eval = Evaluator::new(&t, &ModelSpec::Average, &a).unwrap();
        prop_assert_eq!(eval.local(report.global.at).unwrap().value, report.global.value);
    }
}

#[test]
fn exhaustive_criteria_agree_on_small_grounds() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let n = 3;
        let masks = common::random_masks(&mut rng, n, 2);
        let t = topology(n, &masks);
        for model in [
            ModelSpec::Average,
            ModelSpec::Statistic(modelsheaf::model::Statistic::Max),
        ] {
            let o = exhaustive_equivalence(&t, &model, &[0.0, 1.0, 2.0], 1e-12).unwrap();
            assert_eq!(o.zero_inconsistency, o.cover_commutative, "{masks:?}");
        }
        let o = exhaustive_equivalence(&t, &DataIdentity, &[0.0, 1.0, 2.0], 0.0).unwrap();
        assert!(o.zero_inconsistency && o.cover_commutative);
    }
}
