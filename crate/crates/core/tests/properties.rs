mod common;

use cbls_core::domain::Domain;
use cbls_core::eval::scratch::evaluate;
use cbls_core::eval::Engine;
use cbls_core::lang::{instantiate, parse_params, parse_spec, Model};
use cbls_core::neighbourhood::{apply_structure, instantiate_structures};
use cbls_core::value::generate::generate_with_retry;
use cbls_core::value::{hash_value, Op, Plain, Value};
use common::mutate::{initial, random_edit, Kind, KINDS};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODELS: &[(&str, &str)] = &[
    (include_str!("../../../models/sonet.spec"), include_str!("../../../models/sonet.param")),
    (include_str!("../../../models/tsp.spec"), include_str!("../../../models/tsp.param")),
    (include_str!("../../../models/knapsack.spec"), include_str!("../../../models/knapsack.param")),
    (include_str!("../../../models/binpacking.spec"), include_str!("../../../models/binpacking.param")),
    (include_str!("../../../models/meb.spec"), include_str!("../../../models/meb.param")),
];

fn model(i: usize) -> Model {
    instantiate(&parse_spec(MODELS[i].0).unwrap(), &parse_params(MODELS[i].1).unwrap()).unwrap()
}

fn kind() -> impl Strategy<Value = Kind> {
    (0..KINDS.len()).prop_map(|i| KINDS[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cached_hash_tracks_edits_and_inverses(k in kind(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = initial(k, &mut rng);
        for _ in 0..200 {
            let before = v.hash();
            let (path, op) = random_edit(k, &v, &mut rng);
            match v.apply(&path, op) {
                Ok(applied) => {
                    prop_assert_eq!(v.hash(), hash_value(&v));
                    if rng.random_bool(0.3) {
                        v.apply(&path, applied.inverse).unwrap();
                        prop_assert_eq!(v.hash(), before);
                    }
                }
                Err(_) => prop_assert_eq!(v.hash(), before),
            }
            prop_assert_eq!(v.hash(), hash_value(&v));
        }
    }

    #[test]
    fn equal_structures_hash_equally(xs in proptest::collection::btree_set(-50i64..50, 0..12)) {
        let forward = Plain::Set(xs.iter().map(|&x| Plain::Int(x)).collect()).to_value(None);
        let mut rng = ChaCha8Rng::seed_from_u64(xs.len() as u64);
        let mut v = initial(Kind::Set, &mut rng);
        while !v.is_empty() {
            v.apply(&[], Op::Remove(0)).unwrap();
        }
        for &x in xs.iter().rev() {
            v.apply(&[], Op::Insert(Value::Int(x))).unwrap();
        }
        prop_assert_eq!(v.hash(), forward.hash());
    }

    #[test]
    fn generated_values_satisfy_their_domains(m in 0..MODELS.len(), seed in any::<u64>()) {
        let model = model(m);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for f in &model.finds {
            let v = generate_with_retry(&f.domain, &mut rng);
            prop_assert!(f.domain.check(&v.to_plain()).is_ok(), "{} {}", f.name, v.to_plain());
        }
    }

    #[test]
    fn incremental_matches_scratch_on_benchmarks(m in 0..MODELS.len(), seed in any::<u64>()) {
        let model = model(m);
        let structures = instantiate_structures(&model);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = model.finds.iter().map(|f| generate_with_retry(&f.domain, &mut rng)).collect();
        let mut e = Engine::new(&model, init);
        for _ in 0..100 {
            let ns = &structures[rng.random_range(0..structures.len())];
            if apply_structure(ns, &mut e, &mut rng).applied {
                if rng.random_bool(0.5) { e.commit() } else { e.revert() }
            }
            let plain: Vec<Plain> = e.assignment().iter().map(|v| v.to_plain()).collect();
            let s = evaluate(&model, &plain);
            prop_assert_eq!(e.violation(), s.violation);
            prop_assert_eq!(e.objective(), s.objective);
            prop_assert_eq!(e.constraint_violations(), s.constraint_violations);
        }
    }
}

#[test]
fn partition_move_updates_two_part_hashes() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut v = initial(Kind::Part, &mut rng);
    let Value::Part(p) = &v else { unreachable!() };
    let before = p.hp_updates();
    v.apply(&[], Op::Detach(0)).unwrap();
    v.apply(&[], Op::Attach(0, 2)).unwrap();
    let Value::Part(p) = &v else { unreachable!() };
    assert_eq!(p.hp_updates() - before, 2);
    assert_eq!(v.hash(), hash_value(&v));
}

#[test]
fn set_sizes_lean_small() {
    let d = Domain::set(cbls_core::domain::Card { min: 0, max: Some(50) }, Domain::int(1, 100));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let total: usize = (0..2000).map(|_| generate_with_retry(&d, &mut rng).len()).sum();
    assert!((total as f64 / 2000.0) < 26.0);
}
