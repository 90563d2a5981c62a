use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use cbls_core::eval::eliminate::eliminate;
use cbls_core::eval::Engine;
use cbls_core::harness::score::score_csv;
use cbls_core::harness::{run, solution_text, Run};
use cbls_core::lang::ast::Direction;
use cbls_core::lang::{instantiate, parse_params, parse_spec, Model};
use cbls_core::neighbourhood::instantiate_structures;
use cbls_core::search::{strictly_better, Config, Limits, TrajectoryRecord};
use cbls_core::value::generate::generate_with_retry;

const EXIT_FEASIBLE: u8 = 0;
const EXIT_INPUT: u8 = 1;
const EXIT_NO_SOLUTION: u8 = 20;

#[derive(Parser)]
#[command(name = "cbls", version, about = "Constraint-based local search over abstract specifications")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a solution of a specification instance.
    Solve(SolveArgs),
    /// Pairwise scores of trajectory logs, one CSV row per solver and time limit.
    Score(ScoreArgs),
}

#[derive(clap::Args)]
struct SolveArgs {
    spec: PathBuf,
    param: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 10.0)]
    time_limit: f64,
    /// Stop after this many evaluations; the logged clock becomes virtual.
    #[arg(long)]
    eval_limit: Option<u64>,
    /// Independent runs, seeded `seed`, `seed + 1`, ...
    #[arg(long, default_value_t = 1)]
    runs: u64,
    /// Directory for solution files and trajectory logs.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Print the neighbourhood structures of every variable and exit.
    #[arg(long)]
    list_neighbourhoods: bool,
    /// Print the evaluation tree of a random initial assignment as JSON and exit.
    #[arg(long)]
    dump_tree: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dir {
    Min,
    Max,
}

#[derive(clap::Args)]
struct ScoreArgs {
    /// Whether lower or higher objectives are better.
    #[arg(long, value_enum)]
    direction: Dir,
    /// Largest integer time limit to score at, in seconds.
    #[arg(long)]
    time_limit: u64,
    /// `solver=dir` pairs; each dir holds `<instance>-seed<run>.trajectory.jsonl` files.
    #[arg(required = true)]
    solvers: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Score(a) => score(a),
    };
    ExitCode::from(code.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_INPUT
    }))
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load(spec: &Path, param: &Path) -> Result<Model, String> {
    let s = parse_spec(&read(spec)?).map_err(|e| format!("{}: {e}", spec.display()))?;
    let p = parse_params(&read(param)?).map_err(|e| format!("{}: {e}", param.display()))?;
    instantiate(&s, &p).map_err(|e| format!("{}: {e}", spec.display()))
}

fn solve(a: SolveArgs) -> Result<u8, String> {
    let model = load(&a.spec, &a.param)?;
    if a.list_neighbourhoods {
        let reduced = eliminate(&model);
        for s in instantiate_structures(&reduced) {
            println!("{}\t{}", reduced.finds[s.var].name, s.name);
        }
        return Ok(EXIT_FEASIBLE);
    }
    if a.dump_tree {
        let reduced = eliminate(&model);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(a.seed);
        let init = reduced.finds.iter().map(|f| generate_with_retry(&f.domain, &mut rng)).collect();
        let e = Engine::new(&reduced, init);
        println!("{}", serde_json::to_string_pretty(&e.dump()).map_err(|e| e.to_string())?);
        return Ok(EXIT_FEASIBLE);
    }
    if a.time_limit.is_nan() || a.time_limit <= 0.0 || a.runs == 0 {
        return Err("time limit and run count must be positive".into());
    }
    let limits = Limits { time: Some(Duration::from_secs_f64(a.time_limit)), evaluations: a.eval_limit, target: None };
    let runs: Vec<Run> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..a.runs)
            .map(|j| {
                let model = &model;
                scope.spawn(move || run(model, Config::default(), limits, a.seed + j))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("search thread")).collect()
    });
    fs::create_dir_all(&a.out).map_err(|e| format!("{}: {e}", a.out.display()))?;
    let stem = a.spec.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    for r in &runs {
        let base = a.out.join(format!("{stem}-seed{}", r.result.seed));
        let text = solution_text(&model, &r.assignment);
        write(&base.with_extension("solution"), &text)?;
        let mut log = String::new();
        for rec in &r.result.trajectory {
            log.push_str(&serde_json::to_string(rec).map_err(|e| e.to_string())?);
            log.push('\n');
        }
        write(&base.with_extension("trajectory.jsonl"), &log)?;
    }
    let key = |r: &Run| {
        let feasible = r.report.feasible();
        (if feasible { 0 } else { r.report.violation.max(1) }, r.result.objective.map_or(i64::MAX, |o| internal(&model, o)))
    };
    let best = runs.iter().fold(&runs[0], |b, r| if strictly_better(key(r), key(b)) { r } else { b });
    print!("{}", solution_text(&model, &best.assignment));
    for line in &best.report.domain_errors {
        eprintln!("verification: {line}");
    }
    for (c, v) in &best.report.violated {
        eprintln!("verification: constraint {} violated by {v}", c + 1);
    }
    match best.result.objective {
        Some(o) => eprintln!("seed {}: violation {}, objective {o}", best.result.seed, best.report.violation),
        None => eprintln!("seed {}: violation {}", best.result.seed, best.report.violation),
    }
    Ok(if best.report.feasible() { EXIT_FEASIBLE } else { EXIT_NO_SOLUTION })
}

fn internal(model: &Model, objective: i64) -> i64 {
    match model.objective.as_ref().map(|o| o.direction) {
        Some(Direction::Maximising) => -objective,
        _ => objective,
    }
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn score(a: ScoreArgs) -> Result<u8, String> {
    let mut runs = Vec::new();
    for pair in &a.solvers {
        let (solver, dir) = pair.split_once('=').ok_or_else(|| format!("expected solver=dir, got '{pair}'"))?;
        let mut entries: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| format!("{dir}: {e}"))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".trajectory.jsonl"))
            .collect();
        entries.sort();
        for path in entries {
            let name = path.file_name().unwrap().to_string_lossy().trim_end_matches(".trajectory.jsonl").to_string();
            let (instance, seed) = name.rsplit_once("-seed").ok_or_else(|| format!("{}: unexpected name", path.display()))?;
            let run: u64 = seed.parse().map_err(|_| format!("{}: unexpected name", path.display()))?;
            let traj: Vec<TrajectoryRecord> = read(&path)?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| serde_json::from_str(l).map_err(|e| format!("{}: {e}", path.display())))
                .collect::<Result<_, _>>()?;
            runs.push((solver.to_string(), instance.to_string(), run, traj));
        }
    }
    let direction = match a.direction {
        Dir::Min => Direction::Minimising,
        Dir::Max => Direction::Maximising,
    };
    print!("{}", score_csv(&runs, direction, a.time_limit).map_err(|e| e.to_string())?);
    Ok(EXIT_FEASIBLE)
}
