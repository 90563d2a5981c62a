//! One pass/fail line per acceptance criterion. Expected values come from
//! independent oracles written here (enumeration, closed forms), never from
//! the solver under test.

#[path = "../../core/tests/common/mutate.rs"]
mod mutate;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use cbls_core::domain::{Card, Domain};
use cbls_core::eval::scratch::evaluate;
use cbls_core::eval::{Engine, Label};
use cbls_core::harness::run;
use cbls_core::harness::score::{pair_score, score_runs, ScoreRecord};
use cbls_core::lang::ast::Direction;
use cbls_core::lang::{instantiate, parse_params, parse_spec, Model};
use cbls_core::neighbourhood::{apply_structure, instantiate_structures, Template};
use cbls_core::search::{solve, Climber, Config, Limits, Ucb};
use cbls_core::value::generate::{generate_random, generate_with_retry};
use cbls_core::value::{hash_value, Plain, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn read_model(name: &str) -> (String, String) {
    let dir = models_dir();
    let spec = std::fs::read_to_string(dir.join(format!("{name}.spec"))).unwrap();
    let params = std::fs::read_to_string(dir.join(format!("{name}.param"))).unwrap();
    (spec, params)
}

fn build(spec: &str, params: &str) -> Model {
    instantiate(&parse_spec(spec).unwrap(), &parse_params(params).unwrap()).unwrap()
}

fn model(name: &str) -> Model {
    let (s, p) = read_model(name);
    build(&s, &p)
}

const BENCHMARKS: [&str; 5] = ["sonet", "tsp", "knapsack", "binpacking", "meb"];

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn worked_violation_example() -> Outcome {
    let t = Instant::now();
    let (spec, _) = read_model("violation_example");
    let m = build(&spec, "letting n be 9\nletting y be 5");
    let (x, y) = (1i64, 5i64);
    let s = [1i64, 2, 3, 4, 6];
    let set = Plain::set(s.iter().map(|&v| Plain::Int(v))).to_value(None);
    let mut e = Engine::new(&m, vec![Value::Int(x), set]);
    let expected_c1 = (y - x).max(0) as u64;
    check(e.constraint_violations()[0] == expected_c1, format!("constraint 1 is {:?}", e.constraint_violations()))?;
    let vm = e.violations();
    check(vm.labels(0) == vec![Label::TooSmall], format!("x labels {:?}", vm.labels(0)))?;
    let evens = s.iter().filter(|v| *v % 2 == 0).count() as u64;
    check(vm.var(1) == evens, format!("s violation {}", vm.var(1)))?;
    let Value::Set(sv) = e.value(1) else { return Err("s is not a set".into()) };
    for (i, member) in sv.elems().iter().enumerate() {
        let want = (member.int() % 2 == 0) as u64;
        check(vm.at(1, &[i]) == want, format!("element {} has {}", member.int(), vm.at(1, &[i])))?;
    }
    let took = t.elapsed();
    check(took < Duration::from_secs(1), format!("took {took:?}"))?;
    Ok(format!("constraint 1 = {expected_c1} (x too small), s = {evens} split 1/1/1 over 2,4,6, {took:?}"))
}

/// All networks of at most `rings` rings, each a subset of 1..=nodes with
/// 2..=cap members; the smallest total size covering every demand pair.
fn sonet_oracle(nodes: i64, rings: usize, cap: usize, demand: &[(i64, i64)]) -> u64 {
    let all: Vec<BTreeSet<i64>> = (0u32..1 << nodes)
        .filter(|m| (2..=cap as u32).contains(&m.count_ones()))
        .map(|m| (1..=nodes).filter(|k| m & (1 << (k - 1)) != 0).collect())
        .collect();
    let covers = |net: &[&BTreeSet<i64>]| demand.iter().all(|(a, b)| net.iter().any(|r| r.contains(a) && r.contains(b)));
    let mut best = u64::MAX;
    let mut consider = |net: Vec<&BTreeSet<i64>>| {
        if covers(&net) {
            best = best.min(net.iter().map(|r| r.len() as u64).sum());
        }
    };
    consider(vec![]);
    for i in 0..all.len() {
        consider(vec![&all[i]]);
        if rings >= 2 {
            for j in i + 1..all.len() {
                consider(vec![&all[i], &all[j]]);
            }
        }
    }
    best
}

fn sonet_micro() -> Outcome {
    let m = model("sonet");
    let opt = sonet_oracle(8, 2, 3, &[(1, 3), (3, 4)]);
    let mut hits = 0;
    let mut slowest = Duration::ZERO;
    for seed in 0..100 {
        let t = Instant::now();
        let limits = Limits { time: Some(Duration::from_secs(5)), target: Some(opt as i64), ..Limits::default() };
        let r = run(&m, Config::default(), limits, seed);
        let took = t.elapsed();
        slowest = slowest.max(took);
        if r.report.feasible() && r.report.objective == Some(opt as i64) && took < Duration::from_secs(5) {
            hits += 1;
        }
    }
    check(hits >= 95, format!("{hits}/100 runs reached {opt}"))?;
    Ok(format!("{hits}/100 runs reached the enumerated optimum {opt}, slowest {slowest:?}"))
}

fn knapsack_params(gain: &[i64], weight: &[i64], cap: i64) -> String {
    let names: Vec<String> = (0..gain.len()).map(|i| format!("i{i}")).collect();
    let f = |xs: &[i64]| names.iter().zip(xs).map(|(n, x)| format!("{n} --> {x}")).collect::<Vec<_>>().join(", ");
    format!(
        "letting items be new type enum {{{}}}\nletting gain be function({})\nletting weight be function({})\nletting capacity be {cap}\n",
        names.join(", "),
        f(gain),
        f(weight)
    )
}

fn knapsack_oracle(gain: &[i64], weight: &[i64], cap: i64) -> i64 {
    let n = gain.len();
    (0u32..1 << n)
        .filter_map(|m| {
            let pick = |xs: &[i64]| (0..n).filter(|i| m & (1 << i) != 0).map(|i| xs[i]).sum::<i64>();
            (pick(weight) <= cap).then(|| pick(gain))
        })
        .max()
        .unwrap()
}

fn knapsack() -> Outcome {
    let (spec, _) = read_model("knapsack");
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut hits = 0;
    for inst in 0..20 {
        let n = rng.random_range(8..=20);
        let gain: Vec<i64> = (0..n).map(|_| rng.random_range(1..=100)).collect();
        let weight: Vec<i64> = (0..n).map(|_| rng.random_range(1..=100)).collect();
        let cap = weight.iter().sum::<i64>() / 2;
        let opt = knapsack_oracle(&gain, &weight, cap);
        let m = build(&spec, &knapsack_params(&gain, &weight, cap));
        let t = Instant::now();
        let limits = Limits { time: Some(Duration::from_secs(10)), target: Some(opt), ..Limits::default() };
        let r = run(&m, Config::default(), limits, inst);
        if r.report.feasible() && r.report.objective == Some(opt) && t.elapsed() < Duration::from_secs(10) {
            hits += 1;
        }
    }
    check(hits >= 18, format!("{hits}/20 small instances optimal"))?;
    let n = 5000;
    let gain: Vec<i64> = (0..n).map(|_| rng.random_range(1..=100)).collect();
    let weight: Vec<i64> = (0..n).map(|_| rng.random_range(1..=100)).collect();
    let cap = weight.iter().sum::<i64>() / 3;
    let t = Instant::now();
    let m = build(&spec, &knapsack_params(&gain, &weight, cap));
    let loaded = t.elapsed();
    let r = run(&m, Config::default(), Limits { time: Some(Duration::from_secs(1)), ..Limits::default() }, 1);
    let first = r.result.trajectory.iter().find(|rec| rec.violation == 0).map(|rec| rec.elapsed_ms);
    check(r.report.feasible(), "large instance infeasible")?;
    let first = Duration::from_millis(first.unwrap()) + loaded;
    check(first < Duration::from_secs(2), format!("first feasible after {first:?}"))?;
    Ok(format!("{hits}/20 small instances matched enumeration; n=5000 feasible after {first:?}"))
}

fn master_property() -> Outcome {
    let mut total = 0;
    for name in BENCHMARKS {
        let m = model(name);
        let structures = instantiate_structures(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let init = m.finds.iter().map(|f| generate_with_retry(&f.domain, &mut rng)).collect();
        let mut e = Engine::new(&m, init);
        let mut moves = 0;
        while moves < 10_000 {
            let ns = &structures[rng.random_range(0..structures.len())];
            if !apply_structure(ns, &mut e, &mut rng).applied {
                continue;
            }
            moves += 1;
            if rng.random_bool(0.5) {
                e.commit();
            } else {
                e.revert();
            }
            let plain: Vec<Plain> = e.assignment().iter().map(Value::to_plain).collect();
            let s = evaluate(&m, &plain);
            check(
                (e.violation(), e.objective()) == (s.violation, s.objective),
                format!("{name} move {moves} ({}): engine {:?} scratch {:?}", ns.name, (e.violation(), e.objective()), (s.violation, s.objective)),
            )?;
        }
        total += moves;
    }
    Ok(format!("{total} moves over 5 models, all equal to scratch evaluation"))
}

fn hashes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for kind in mutate::KINDS {
        let mut v = mutate::initial(kind, &mut rng);
        for step in 0..100_000 {
            let (path, op) = mutate::random_edit(kind, &v, &mut rng);
            let _ = v.apply(&path, op);
            check(v.hash() == hash_value(&v), format!("{kind:?} diverged at step {step}"))?;
        }
    }
    let m = model("binpacking");
    let mv: Vec<_> = instantiate_structures(&m).into_iter().filter(|s| s.template == Template::PartMoveParts).collect();
    let mut e = Engine::new(&m, vec![generate_with_retry(&m.finds[0].domain, &mut rng)]);
    let counter = |e: &Engine| match e.value(0) {
        Value::Part(p) => (p.hp_updates(), p.num_parts()),
        _ => unreachable!(),
    };
    let mut checked = 0;
    for _ in 0..2000 {
        let (before, parts) = counter(&e);
        let out = apply_structure(&mv[0], &mut e, &mut rng);
        if out.applied {
            let (after, parts_after) = counter(&e);
            if parts_after == parts && out.attempts == 1 {
                check(after - before == 2, format!("move touched {} part hashes", after - before))?;
                checked += 1;
            }
            e.revert();
        }
    }
    check(checked > 100, format!("only {checked} moves observed"))?;
    Ok(format!("7 kinds x 100000 edits hash-exact; {checked} partition moves touched exactly 2 part hashes"))
}

fn generation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut domains = 0;
    for name in BENCHMARKS {
        for f in &model(name).finds {
            for _ in 0..10_000 {
                let v = generate_with_retry(&f.domain, &mut rng);
                f.domain.check(&v.to_plain()).map_err(|e| format!("{name}.{}: {e}", f.name))?;
            }
            let g = generate_random(&f.domain, 0, &mut rng);
            check(g.value.is_none() && g.consumed == 0, format!("{name}.{}: zero allowance produced a value", f.name))?;
            domains += 1;
        }
    }
    let d = Domain::set(Card { min: 0, max: Some(50) }, Domain::int(1, 100));
    let mean = (0..10_000).map(|_| generate_with_retry(&d, &mut rng).len()).sum::<usize>() as f64 / 10_000.0;
    check(mean < 26.0, format!("mean cardinality {mean}"))?;
    Ok(format!("{domains} domains x 10000 samples valid; zero allowance fails at cost 0; mean size {mean:.2}"))
}

fn catalogue() -> Outcome {
    let names = |spec: &str| -> Vec<String> {
        let mut v: Vec<String> = instantiate_structures(&build(spec, "")).into_iter().map(|s| s.name).collect();
        v.sort();
        v
    };
    let sonet: Vec<String> = {
        let mut v: Vec<String> = instantiate_structures(&model("sonet")).into_iter().map(|s| s.name).collect();
        v.sort();
        v
    };
    let expected = [
        "SetAdd",
        "SetLiftMultiple_SetCrossover",
        "SetLiftMultiple_SetMove",
        "SetLiftSingle_SetAdd",
        "SetLiftSingle_SetLiftSingle_intAssignRandom",
        "SetLiftSingle_SetLiftSingle_intAssignRandomFromViolation",
        "SetLiftSingle_SetRemove",
        "SetRemove",
    ];
    check(sonet == expected, format!("sonet structures {sonet:?}"))?;
    let fixed = names("find s : set (size 3) of int(1..6)");
    check(fixed.iter().all(|n| !n.starts_with("SetAdd") && !n.starts_with("SetRemove")), format!("{fixed:?}"))?;
    check(fixed.len() == 2, format!("{fixed:?}"))?;
    let inj = names("find q : sequence (size 5, injective) of int(1..5)");
    check(
        inj.iter().all(|n| !n.contains("SeqAdd") && !n.contains("SeqRemove") && !n.contains("SeqReassignSub")),
        format!("{inj:?}"),
    )?;
    check(inj.iter().any(|n| n == "SeqPositionsSwap") && inj.iter().any(|n| n == "SeqReverseSub"), format!("{inj:?}"))?;
    let injf = names("find f : function (total, injective) int(1..4) --> int(1..9)");
    check(injf.iter().all(|n| !n.contains("Unify") && !n.contains("Split")), format!("{injf:?}"))?;
    Ok(format!("sonet gives the 8 expected structures; size and injective filters hold ({} and {} structures)", fixed.len(), inj.len()))
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

fn search_constants() -> Outcome {
    let m = model("sonet");
    let cfg = Config { trace: true, ..Config::default() };
    let r = solve(&m, cfg, Limits { evaluations: Some(600_000), ..Limits::default() }, 3);
    let nr = &r.trace.walk_lengths;
    check(nr.first() == Some(&10.0), "walk length does not start at 10")?;
    check(nr.windows(3).any(|w| w[0] == 10.0 && near(w[1], 13.0) && near(w[2], 16.9)), "no 10, 13, 16.9 run")?;
    for w in nr.windows(2) {
        let grown = near(w[1], w[0] * 1.3);
        let reset = w[1] == 10.0;
        check(grown || reset, format!("walk length {} followed by {}", w[0], w[1]))?;
        check(w[0] <= 500.0 || reset, format!("{} above 500 not reset", w[0]))?;
        check(!grown || w[0] <= 500.0, "grew past the limit")?;
    }
    let resets_at_limit = nr.windows(2).filter(|w| w[0] > 500.0 && w[1] == 10.0).count();
    check(resets_at_limit > 0, "walk length never reached its limit")?;
    let climbs = &r.trace.climbs;
    check(climbs.len() > 2, "too few climbs")?;
    check(climbs[..climbs.len() - 1].iter().all(|c| c.1 == 5000), "a climber used other than 5000 evaluations")?;
    check(climbs.iter().any(|c| c.0 == Climber::WithViolations), "violating climber never ran")?;
    let steps = |trace: &[f64]| -> Result<Vec<i32>, String> {
        trace
            .iter()
            .map(|&v| (0..=10).find(|&k| near(v, 20.0 * 1.2f64.powi(k))).ok_or(format!("n_vio {v} is not 20 x 1.2^k")))
            .collect()
    };
    let ks = steps(&r.trace.nvio)?;
    check(ks.first() == Some(&0), "n_vio does not start at 20")?;
    check(ks.windows(2).all(|w| w[1] == w[0] + 1 || w[1] == 0), "n_vio skipped a step")?;
    check(ks.windows(3).any(|w| w == [0, 1, 2]), "no 20, 24, 28.8 run")?;
    // With the default inner cap a call holds at most ten stalled rounds, so
    // the ceiling reset is exercised with a smaller cap.
    let small = Config { trace: true, inner_cap: 20, ..Config::default() };
    let r2 = solve(&m, small, Limits { evaluations: Some(100_000), ..Limits::default() }, 3);
    let ks2 = steps(&r2.trace.nvio)?;
    check(ks2.windows(2).all(|w| w[1] == w[0] + 1 || w[1] == 0), "n_vio skipped a step")?;
    check(ks2.windows(2).any(|w| w == [10, 0]), "ceiling 20 x 1.2^10 never reset")?;
    Ok(format!(
        "{} walk lengths (10, 13, 16.9, ... reset after 500 {resets_at_limit} times); {} climbs of 5000; n_vio 20 x 1.2^k with reset at k = 10",
        nr.len(),
        climbs.len()
    ))
}

fn bandit() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut u = Ucb::new(2, 1.0);
    let p = [0.9, 0.01];
    for _ in 0..10_000 {
        let a = u.select(&mut rng);
        u.update(a, rng.random_bool(p[a]) as u64 as f64, 0);
    }
    let share = u.pulls[0] as f64 / 10_000.0;
    check(share > 0.7, format!("better arm share {share}"))?;
    let mut audit = Ucb::new(3, 1.0);
    let mut expected = [0.0; 3];
    for _ in 0..1000 {
        let a = audit.select(&mut rng);
        let cost = rng.random_range(0..40);
        audit.update(a, 0.0, cost);
        expected[a] += cost as f64 + 1.0;
    }
    check(audit.mass.to_vec() == expected.to_vec(), "pull mass differs from sum of cost + 1")?;
    let cfg = Config { trace: true, ..Config::default() };
    let r = solve(&model("knapsack"), cfg, Limits { evaluations: Some(50_000), ..Limits::default() }, 2);
    check(near(r.bandit_mass, r.trace.charged), format!("search mass {} vs charged {}", r.bandit_mass, r.trace.charged))?;
    Ok(format!("better arm took {:.1}% of 10000 pulls; n_t grew by cost + 1 on every update", share * 100.0))
}

fn scorer() -> Outcome {
    let rec = |solver: &str, instance: usize, run: u64, quality: Option<i64>, time: f64| ScoreRecord {
        solver: solver.into(),
        instance: format!("i{instance}"),
        run,
        quality,
        time,
    };
    let (a, b) = (rec("s", 0, 0, Some(5), 10.0), rec("o", 0, 0, Some(5), 30.0));
    check(pair_score(&a, &b, Direction::Minimising) == 0.75, "tie share for s")?;
    check(pair_score(&b, &a, Direction::Minimising) == 0.25, "tie share for o")?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let solvers = ["a", "b", "c", "d"];
    for _ in 0..200 {
        let mut records = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                for s in solvers {
                    let q = rng.random_bool(0.8).then(|| rng.random_range(0..4));
                    records.push(rec(s, i, j, q, rng.random_range(0..5) as f64));
                }
            }
        }
        for x in &records {
            for y in records.iter().filter(|y| y.instance == x.instance && y.run == x.run && y.solver != x.solver) {
                let sum = pair_score(x, y, Direction::Maximising) + pair_score(y, x, Direction::Maximising);
                let both = x.quality.is_some() && y.quality.is_some();
                check(if both { near(sum, 1.0) } else { sum <= 1.0 }, format!("pair sums to {sum}"))?;
            }
        }
        let totals = score_runs(&records, Direction::Maximising).map_err(|e| e.to_string())?;
        check(totals.values().sum::<f64>() <= 9.0 * 12.0 + 1e-9, "totals exceed the pair count")?;
    }
    Ok("0.75 / 0.25 reproduced; pairwise scores sum to 1 over 200 random grids".into())
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_cbls");
    let mut logs = Vec::new();
    for name in ["sonet", "knapsack"] {
        for attempt in 0..2 {
            let out = std::env::temp_dir().join(format!("cbls-acceptance-{}-{name}-{attempt}", std::process::id()));
            let status = Command::new(bin)
                .arg("solve")
                .arg(models_dir().join(format!("{name}.spec")))
                .arg(models_dir().join(format!("{name}.param")))
                .args(["--seed", "7", "--eval-limit", "100000", "--time-limit", "600", "--out"])
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            check(status.status.success(), format!("{name}: exit {:?}", status.status.code()))?;
            let log = std::fs::read(out.join(format!("{name}-seed7.trajectory.jsonl"))).map_err(|e| e.to_string())?;
            let _ = std::fs::remove_dir_all(&out);
            logs.push(log);
        }
    }
    check(logs[0] == logs[1] && logs[2] == logs[3], "trajectory logs differ")?;
    check(!logs[0].is_empty() && !logs[2].is_empty(), "empty trajectory log")?;
    Ok(format!("byte-identical logs for two models ({} and {} bytes)", logs[0].len(), logs[2].len()))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("worked violation example", worked_violation_example),
        ("SONET micro-instance", sonet_micro),
        ("knapsack", knapsack),
        ("incremental master property", master_property),
        ("hash equivalence", hashes),
        ("random generation", generation),
        ("neighbourhood catalogue", catalogue),
        ("search constants", search_constants),
        ("bandit behaviour", bandit),
        ("scorer", scorer),
        ("determinism", determinism),
    ];
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if filter.as_ref().is_some_and(|p| !name.contains(p.as_str())) {
            continue;
        }
        let t = Instant::now();
        match f() {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail}) [{:.1?}]", i + 1, t.elapsed()),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({why}) [{:.1?}]", i + 1, t.elapsed());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
