//! Iterated local search: violation repair, two bandit-selected hill
//! climbers and a violation-capped random walk, with three neighbourhood
//! bandits rewarding different kinds of progress.

pub mod ucb;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eval::Engine;
use crate::lang::ast::Direction;
use crate::lang::Model;
use crate::neighbourhood::{apply_structure, instantiate_structures, Structure};
use crate::value::generate::generate_with_retry;
use crate::value::Value;
pub use ucb::Ucb;

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub walk_init: f64,
    pub walk_growth: f64,
    pub walk_limit: f64,
    /// Evaluations per hill-climber call.
    pub budget: u64,
    pub inner_cap: u64,
    /// Non-improving repair iterations before a random restart.
    pub restart_patience: u64,
    pub nvio_init: f64,
    pub nvio_growth: f64,
    /// The violation allowance resets after this many growth steps.
    pub nvio_steps: u32,
    pub ucb_c: f64,
    /// Consecutive rejections after which a random walk gives up.
    pub walk_valve: u64,
    /// Record the instrumentation in `RunResult::trace`.
    pub trace: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            walk_init: 10.0,
            walk_growth: 1.3,
            walk_limit: 500.0,
            budget: 5000,
            inner_cap: 500,
            restart_patience: 5000,
            nvio_init: 20.0,
            nvio_growth: 1.2,
            nvio_steps: 10,
            ucb_c: 1.0,
            walk_valve: 1_000_000,
            trace: false,
        }
    }
}

/// When to stop. With an evaluation limit the reported clock is virtual
/// (one millisecond per thousand evaluations) so logs are reproducible.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Limits {
    pub time: Option<Duration>,
    pub evaluations: Option<u64>,
    /// Stop once a feasible solution with this objective (user sign) or
    /// better is found.
    pub target: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub elapsed_ms: u64,
    pub evaluations: u64,
    pub violation: u64,
    pub objective: Option<i64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Climber {
    Standard,
    WithViolations,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    /// Every value taken by the random-walk length, in order.
    pub walk_lengths: Vec<f64>,
    /// Per random walk: its length and the number of accepted moves.
    pub walks: Vec<(f64, u64)>,
    /// Per hill-climber call: the climber and the evaluations it used.
    pub climbs: Vec<(Climber, u64)>,
    /// Violation allowance at the start of each round of the violating climber.
    pub nvio: Vec<f64>,
    pub restarts: u64,
    /// Sum of `cost + 1` over every neighbourhood-bandit update.
    pub charged: f64,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub assignment: Vec<Value>,
    pub violation: u64,
    pub objective: Option<i64>,
    pub trajectory: Vec<TrajectoryRecord>,
    pub evaluations: u64,
    pub seed: u64,
    pub wall: Duration,
    pub trace: Trace,
    /// Selections of each structure, summed over the three bandits.
    pub pulls: Vec<(String, u64)>,
    /// Pull mass accumulated by the three neighbourhood bandits.
    pub bandit_mass: f64,
}

/// Lower violation wins; between feasible states the lower internal
/// (minimising) objective wins.
pub fn strictly_better(a: (u64, i64), b: (u64, i64)) -> bool {
    a.0 < b.0 || (a.0 == 0 && b.0 == 0 && a.1 < b.1)
}

const REPAIR: usize = 0;
const IMPROVE: usize = 1;
const IMPROVE_FEASIBLY: usize = 2;

struct Move {
    ctrl: Option<usize>,
    arm: usize,
    applied: bool,
    charge: i64,
    violation: u64,
    cost: i64,
}

pub struct Search<'m> {
    model: &'m Model,
    cfg: Config,
    limits: Limits,
    seed: u64,
    rng: ChaCha8Rng,
    structures: Vec<Structure>,
    engine: Engine,
    ctrls: [Ucb; 3],
    climbers: Ucb,
    evaluations: u64,
    start: Instant,
    best: (Vec<Value>, u64, i64, Option<i64>),
    trajectory: Vec<TrajectoryRecord>,
    trace: Trace,
}

pub fn solve(model: &Model, cfg: Config, limits: Limits, seed: u64) -> RunResult {
    Search::new(model, cfg, limits, seed).run()
}

impl<'m> Search<'m> {
    pub fn new(model: &'m Model, cfg: Config, limits: Limits, seed: u64) -> Self {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let structures = instantiate_structures(model);
        let init = model.finds.iter().map(|f| generate_with_retry(&f.domain, &mut rng)).collect();
        let engine = Engine::new(model, init);
        let arms = structures.len().max(1);
        let ctrls = std::array::from_fn(|_| Ucb::new(arms, cfg.ucb_c));
        let climbers = Ucb::new(2, cfg.ucb_c);
        let best = (engine.assignment().to_vec(), engine.violation(), engine.cost(), engine.objective());
        let mut s = Search {
            model,
            cfg,
            limits,
            seed,
            rng,
            structures,
            engine,
            ctrls,
            climbers,
            evaluations: 0,
            start,
            best,
            trajectory: Vec::new(),
            trace: Trace::default(),
        };
        s.log_best();
        s
    }

    fn key(&self) -> (u64, i64) {
        (self.engine.violation(), self.engine.cost())
    }

    fn elapsed_ms(&self) -> u64 {
        match self.limits.evaluations {
            Some(_) => self.evaluations / 1000,
            None => self.start.elapsed().as_millis() as u64,
        }
    }

    fn stopped(&self) -> bool {
        let reached = |t: i64| self.best.1 == 0 && self.best.3.is_some_and(|o| self.internal(o) <= self.internal(t));
        self.limits.target.is_some_and(reached)
            || self.limits.evaluations.is_some_and(|n| self.evaluations >= n)
            || self.limits.time.is_some_and(|t| self.start.elapsed() >= t)
    }

    fn internal(&self, objective: i64) -> i64 {
        if self.model.objective.as_ref().is_some_and(|o| o.direction == Direction::Maximising) {
            -objective
        } else {
            objective
        }
    }

    fn log_best(&mut self) {
        self.trajectory.push(TrajectoryRecord {
            elapsed_ms: self.elapsed_ms(),
            evaluations: self.evaluations,
            violation: self.best.1,
            objective: self.best.3,
        });
    }

    fn note_best(&mut self) {
        if strictly_better(self.key(), (self.best.1, self.best.2)) {
            let e = &self.engine;
            self.best = (e.assignment().to_vec(), e.violation(), e.cost(), e.objective());
            self.log_best();
        }
    }

    fn trace_walk_length(&mut self, nr: f64) {
        if self.cfg.trace {
            self.trace.walk_lengths.push(nr);
        }
    }

    /// Applies one structure, chosen by controller `ctrl` or uniformly, and
    /// leaves the result pending.
    fn propose(&mut self, ctrl: Option<usize>) -> Move {
        let arm = match ctrl {
            Some(c) => self.ctrls[c].select(&mut self.rng),
            None => self.rng.random_range(0..self.structures.len()),
        };
        let out = apply_structure(&self.structures[arm], &mut self.engine, &mut self.rng);
        self.evaluations += 1;
        Move { ctrl, arm, applied: out.applied, charge: out.cost, violation: self.engine.violation(), cost: self.engine.cost() }
    }

    /// Commits or reverts a proposal. Only accepted moves earn reward: a
    /// rejected move leaves the current state, and so its violation and
    /// objective, unchanged.
    fn settle(&mut self, m: &Move, accept: bool, reward: bool) {
        if m.applied {
            if accept {
                self.engine.commit();
                self.note_best();
            } else {
                self.engine.revert();
            }
        }
        if let Some(c) = m.ctrl {
            if self.cfg.trace {
                self.trace.charged += m.charge as f64 + 1.0;
            }
            self.ctrls[c].update(m.arm, if m.applied && accept && reward { 1.0 } else { 0.0 }, m.charge);
        }
    }

    fn randomise(&mut self) {
        let init = self.model.finds.iter().map(|f| generate_with_retry(&f.domain, &mut self.rng)).collect();
        self.engine = Engine::new(self.model, init);
        self.trace.restarts += 1;
        self.note_best();
    }

    pub fn run(mut self) -> RunResult {
        let mut local = self.key();
        let mut nr = self.cfg.walk_init;
        self.trace_walk_length(nr);
        while !self.structures.is_empty() && !self.stopped() {
            if self.engine.violation() > 0 {
                self.climb_to_zero();
                if self.stopped() {
                    break;
                }
            }
            if !self.engine.has_objective() {
                break;
            }
            self.hill_climb();
            if strictly_better(self.key(), local) {
                local = self.key();
                nr = self.cfg.walk_init;
                self.trace_walk_length(nr);
            } else {
                nr *= self.cfg.walk_growth;
                self.trace_walk_length(nr);
                self.random_walk(nr);
                if nr > self.cfg.walk_limit {
                    nr = self.cfg.walk_init;
                    self.trace_walk_length(nr);
                    local = self.key();
                }
            }
        }
        self.finish()
    }

    fn finish(self) -> RunResult {
        let mut pulls: Vec<(String, u64)> = self.structures.iter().map(|s| (s.name.clone(), 0)).collect();
        for c in &self.ctrls {
            for (p, n) in pulls.iter_mut().zip(&c.pulls) {
                p.1 += n;
            }
        }
        let bandit_mass = self.ctrls.iter().flat_map(|c| &c.mass).sum();
        let (assignment, violation, _, objective) = self.best;
        RunResult {
            assignment,
            violation,
            objective,
            trajectory: self.trajectory,
            evaluations: self.evaluations,
            seed: self.seed,
            wall: self.start.elapsed(),
            trace: self.trace,
            pulls,
            bandit_mass,
        }
    }

    /// Accepts strict violation decreases only; restarts from a random
    /// assignment after `restart_patience` stalls.
    pub fn climb_to_zero(&mut self) {
        let mut stall = 0;
        while self.engine.violation() > 0 && !self.stopped() {
            let before = self.engine.violation();
            let m = self.propose(Some(REPAIR));
            let better = m.applied && m.violation < before;
            self.settle(&m, better, better);
            stall = if better { 0 } else { stall + 1 };
            if stall == self.cfg.restart_patience {
                self.randomise();
                stall = 0;
            }
        }
    }

    fn hill_climb(&mut self) {
        let arm = self.climbers.select(&mut self.rng);
        let (climber, (improvements, used)) = match arm {
            0 => (Climber::Standard, self.climb_standard()),
            _ => (Climber::WithViolations, self.climb_with_violations()),
        };
        self.climbers.update(arm, improvements as f64, 0);
        if self.cfg.trace {
            self.trace.climbs.push((climber, used));
        }
    }

    /// Returns (feasible improvements, evaluations used).
    fn climb_standard(&mut self) -> (u64, u64) {
        let (mut improvements, mut used) = (0, 0);
        while used < self.cfg.budget && !self.stopped() {
            let before = self.engine.cost();
            let m = self.propose(Some(IMPROVE_FEASIBLY));
            used += 1;
            let better = m.applied && m.violation == 0 && m.cost < before;
            self.settle(&m, better, better);
            improvements += better as u64;
        }
        (improvements, used)
    }

    fn climb_with_violations(&mut self) -> (u64, u64) {
        let b = self.cfg.budget;
        let (mut improvements, mut i) = (0, 0);
        let mut steps = 0;
        let mut o = self.engine.cost();
        while i < b && !self.stopped() {
            let nvio = self.cfg.nvio_init * self.cfg.nvio_growth.powi(steps as i32);
            if self.cfg.trace {
                self.trace.nvio.push(nvio);
            }
            let mut k1 = 0;
            while self.engine.cost() >= o && k1 < (b - i).min(self.cfg.inner_cap) && !self.stopped() {
                let before = self.engine.cost();
                let m = self.propose(Some(IMPROVE));
                k1 += 1;
                let ok = m.applied && m.violation as f64 <= nvio && m.cost <= o;
                self.settle(&m, ok, m.cost < before);
            }
            i += k1;
            let mut k2 = 0;
            while self.engine.violation() > 0 && k2 < (b - i).min(self.cfg.inner_cap) && !self.stopped() {
                let before = self.engine.violation();
                let m = self.propose(Some(REPAIR));
                k2 += 1;
                let ok = m.applied && m.violation <= before && m.cost < o;
                self.settle(&m, ok, m.violation < before);
            }
            i += k2;
            let improved = self.engine.violation() == 0 && self.engine.cost() < o;
            if improved || steps >= self.cfg.nvio_steps {
                improvements += improved as u64;
                steps = 0;
                o = self.engine.cost();
            } else {
                steps += 1;
            }
            if k1 + k2 == 0 {
                break;
            }
        }
        (improvements, i)
    }

    /// Makes `floor(nr)` uniformly random moves, each keeping the violation
    /// within `nr` of where the walk started.
    fn random_walk(&mut self, nr: f64) {
        let cap = self.engine.violation() as f64 + nr;
        let target = nr.floor() as u64;
        let (mut accepted, mut rejected) = (0, 0);
        while accepted < target && !self.stopped() {
            let m = self.propose(None);
            let ok = m.applied && m.violation as f64 <= cap;
            self.settle(&m, ok, false);
            if ok {
                accepted += 1;
                rejected = 0;
            } else {
                rejected += 1;
                if rejected >= self.cfg.walk_valve {
                    break;
                }
            }
        }
        if self.cfg.trace {
            self.trace.walks.push((nr, accepted));
        }
    }

    pub fn violation(&self) -> u64 {
        self.engine.violation()
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{instantiate, parse_params, parse_spec};

    fn model(spec: &str, params: &str) -> Model {
        instantiate(&parse_spec(spec).unwrap(), &parse_params(params).unwrap()).unwrap()
    }

    #[test]
    fn strictly_better_cases() {
        assert!(strictly_better((3, 0), (4, 0)));
        assert!(!strictly_better((0, 5), (0, 5)));
        assert!(strictly_better((0, 9), (2, 1)));
        assert!(!strictly_better((1, 0), (1, 9)));
    }

    #[test]
    fn repair_reaches_the_only_solution() {
        let m = model("find x : int(1..10)\nsuch that x = 7", "");
        let limits = Limits { evaluations: Some(100_000), ..Limits::default() };
        let r = solve(&m, Config::default(), limits, 3);
        assert_eq!(r.violation, 0);
        assert_eq!(r.assignment[0].int(), 7);
    }

    #[test]
    fn concave_objective_reaches_its_peak() {
        let m = model("find x : int(0..20)\nmaximising 100 - (x - 13) * (x - 13)", "");
        let limits = Limits { evaluations: Some(20_000), ..Limits::default() };
        let r = solve(&m, Config::default(), limits, 5);
        assert_eq!(r.objective, Some(100));
    }

    #[test]
    fn unconstrained_walks_accept_every_move() {
        let m = model("find s : set (maxSize 4) of int(1..9)\nminimising |s|", "");
        let cfg = Config { trace: true, ..Config::default() };
        let r = solve(&m, cfg, Limits { evaluations: Some(60_000), ..Limits::default() }, 1);
        assert!(r.trace.walks.len() > 1);
        // the last walk may be cut short by the evaluation limit
        for &(nr, accepted) in &r.trace.walks[..r.trace.walks.len() - 1] {
            assert_eq!(accepted, nr.floor() as u64);
        }
    }
}
