use cbls_core::eval::scratch::evaluate;
use cbls_core::eval::Engine;
use cbls_core::lang::{instantiate, parse_params, parse_spec, Model};
use cbls_core::neighbourhood::{apply_structure, instantiate_structures};
use cbls_core::value::generate::generate_with_retry;
use cbls_core::value::Plain;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODELS: &[(&str, &str, &str)] = &[
    ("sonet", include_str!("../../../models/sonet.spec"), include_str!("../../../models/sonet.param")),
    ("tsp", include_str!("../../../models/tsp.spec"), include_str!("../../../models/tsp.param")),
    ("knapsack", include_str!("../../../models/knapsack.spec"), include_str!("../../../models/knapsack.param")),
    ("binpacking", include_str!("../../../models/binpacking.spec"), include_str!("../../../models/binpacking.param")),
    ("meb", include_str!("../../../models/meb.spec"), include_str!("../../../models/meb.param")),
];

fn model(spec: &str, params: &str) -> Model {
    instantiate(&parse_spec(spec).unwrap(), &parse_params(params).unwrap()).unwrap()
}

fn plain(e: &Engine) -> Vec<Plain> {
    e.assignment().iter().map(|v| v.to_plain()).collect()
}

#[test]
fn sonet_gets_eight_structures() {
    let m = model(MODELS[0].1, MODELS[0].2);
    let mut names: Vec<String> = instantiate_structures(&m).into_iter().map(|s| s.name).collect();
    names.sort();
    assert_eq!(
        names,
        [
            "SetAdd",
            "SetLiftMultiple_SetCrossover",
            "SetLiftMultiple_SetMove",
            "SetLiftSingle_SetAdd",
            "SetLiftSingle_SetLiftSingle_intAssignRandom",
            "SetLiftSingle_SetLiftSingle_intAssignRandomFromViolation",
            "SetLiftSingle_SetRemove",
            "SetRemove",
        ]
    );
}

#[test]
fn moves_keep_values_in_their_domains_and_match_scratch() {
    for (name, spec, params) in MODELS {
        let m = model(spec, params);
        let structures = instantiate_structures(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let init = m.finds.iter().map(|f| generate_with_retry(&f.domain, &mut rng)).collect();
        let mut e = Engine::new(&m, init);
        let mut applied = 0;
        for step in 0..2000 {
            let ns = &structures[rng.random_range(0..structures.len())];
            let before = plain(&e);
            let out = apply_structure(ns, &mut e, &mut rng);
            if !out.applied {
                assert_eq!(plain(&e), before, "{name}: failed move left edits behind");
                continue;
            }
            applied += 1;
            if rng.random_bool(0.5) {
                e.commit();
            } else {
                e.revert();
                assert_eq!(plain(&e), before, "{name}: revert at step {step}");
            }
            let a = plain(&e);
            for (f, v) in m.finds.iter().zip(&a) {
                f.domain.check(v).unwrap_or_else(|err| panic!("{name} {} after {}: {err}", f.name, ns.name));
            }
            let s = evaluate(&m, &a);
            assert_eq!(e.violation(), s.violation, "{name} step {step} after {}", ns.name);
            assert_eq!(e.objective(), s.objective, "{name} step {step} after {}", ns.name);
        }
        assert!(applied > 200, "{name}: only {applied} moves applied");
    }
}
