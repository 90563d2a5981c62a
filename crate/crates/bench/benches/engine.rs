use cbls_bench::{model, MODELS};
use cbls_core::eval::eliminate::eliminate;
use cbls_core::eval::scratch::evaluate;
use cbls_core::eval::Engine;
use cbls_core::neighbourhood::{apply_structure, instantiate_structures};
use cbls_core::search::{solve, Config, Limits};
use cbls_core::value::generate::generate_with_retry;
use cbls_core::value::{Plain, Value};
use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn moves(c: &mut Criterion) {
    let mut g = c.benchmark_group("move_and_revert");
    for (name, spec, params) in MODELS {
        let m = eliminate(&model(spec, params));
        let structures = instantiate_structures(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let init = m.finds.iter().map(|f| generate_with_retry(&f.domain, &mut rng)).collect();
        let mut e = Engine::new(&m, init);
        g.bench_function(*name, |b| {
            b.iter(|| {
                let ns = &structures[rng.random_range(0..structures.len())];
                if apply_structure(ns, &mut e, &mut rng).applied {
                    e.revert();
                }
            })
        });
    }
    g.finish();
}

fn scratch(c: &mut Criterion) {
    let mut g = c.benchmark_group("scratch_evaluation");
    for (name, spec, params) in MODELS {
        let m = eliminate(&model(spec, params));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let plain: Vec<Plain> = m.finds.iter().map(|f| generate_with_retry(&f.domain, &mut rng)).map(|v: Value| v.to_plain()).collect();
        g.bench_function(*name, |b| b.iter(|| evaluate(&m, &plain)));
    }
    g.finish();
}

fn search(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_10k_evaluations");
    g.sample_size(10);
    for (name, spec, params) in MODELS {
        let m = eliminate(&model(spec, params));
        let limits = Limits { evaluations: Some(10_000), ..Limits::default() };
        g.bench_function(*name, |b| b.iter(|| solve(&m, Config::default(), limits, 7)));
    }
    g.finish();
}

criterion_group!(benches, moves, scratch, search);
criterion_main!(benches);
