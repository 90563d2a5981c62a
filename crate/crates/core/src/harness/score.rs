//! Pairwise incomplete scoring of anytime solver runs.
//!
//! On each instance and run, every ordered pair of solvers exchanges points:
//! the better quality takes 1, equal qualities split by time to best (the
//! faster solver gets the larger share), and a solver without a solution
//! gets 0 whatever its opponent did.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use thiserror::Error;

use crate::lang::ast::Direction;
use crate::search::TrajectoryRecord;

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreRecord {
    pub solver: String,
    pub instance: String,
    pub run: u64,
    /// Best objective found, in the user's sign; `None` without a solution.
    pub quality: Option<i64>,
    /// Seconds until that best was found.
    pub time: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("solver {solver} has no record for instance {instance} run {run}")]
    MissingCell { solver: String, instance: String, run: u64 },
    #[error("solver {solver} has two records for instance {instance} run {run}")]
    DuplicateCell { solver: String, instance: String, run: u64 },
}

/// Points `a` earns against `b`.
pub fn pair_score(a: &ScoreRecord, b: &ScoreRecord, direction: Direction) -> f64 {
    let (Some(qa), Some(qb)) = (a.quality, b.quality) else {
        return if a.quality.is_some() { 1.0 } else { 0.0 };
    };
    let better = match direction {
        Direction::Minimising => qa < qb,
        Direction::Maximising => qa > qb,
    };
    if better {
        1.0
    } else if qa != qb {
        0.0
    } else if a.time + b.time == 0.0 {
        0.5
    } else {
        b.time / (a.time + b.time)
    }
}

/// Total points per solver over every opponent, instance and run. Every
/// solver must have exactly one record per (instance, run) cell in use.
pub fn score_runs(records: &[ScoreRecord], direction: Direction) -> Result<BTreeMap<String, f64>, ScoreError> {
    let solvers: BTreeSet<&str> = records.iter().map(|r| r.solver.as_str()).collect();
    let cells: BTreeSet<(&str, u64)> = records.iter().map(|r| (r.instance.as_str(), r.run)).collect();
    let mut grid: BTreeMap<(&str, &str, u64), &ScoreRecord> = BTreeMap::new();
    for r in records {
        if grid.insert((&r.solver, &r.instance, r.run), r).is_some() {
            return Err(ScoreError::DuplicateCell { solver: r.solver.clone(), instance: r.instance.clone(), run: r.run });
        }
    }
    for &s in &solvers {
        for &(i, j) in &cells {
            if !grid.contains_key(&(s, i, j)) {
                return Err(ScoreError::MissingCell { solver: s.into(), instance: i.into(), run: j });
            }
        }
    }
    let mut totals: BTreeMap<String, f64> = solvers.iter().map(|s| (s.to_string(), 0.0)).collect();
    for &(i, j) in &cells {
        for &s in &solvers {
            for &o in &solvers {
                if s != o {
                    *totals.get_mut(s).unwrap() += pair_score(grid[&(s, i, j)], grid[&(o, i, j)], direction);
                }
            }
        }
    }
    Ok(totals)
}

/// The record a run would have produced had it stopped after `limit_ms`:
/// the last feasible incumbent logged by then.
pub fn record_at(
    solver: &str,
    instance: &str,
    run: u64,
    trajectory: &[TrajectoryRecord],
    limit_ms: u64,
) -> ScoreRecord {
    let best = trajectory.iter().rev().find(|r| r.elapsed_ms <= limit_ms && r.violation == 0);
    ScoreRecord {
        solver: solver.into(),
        instance: instance.into(),
        run,
        quality: best.map(|r| r.objective.unwrap_or(0)),
        time: best.map_or(0.0, |r| r.elapsed_ms as f64 / 1000.0),
    }
}

/// `solver,time_limit,score` rows for every integer limit 1..=`max_secs`.
#[allow(clippy::type_complexity)]
pub fn score_csv(
    runs: &[(String, String, u64, Vec<TrajectoryRecord>)],
    direction: Direction,
    max_secs: u64,
) -> Result<String, ScoreError> {
    let mut out = String::from("solver,time_limit,score\n");
    for t in 1..=max_secs {
        let records: Vec<ScoreRecord> =
            runs.iter().map(|(s, i, j, traj)| record_at(s, i, *j, traj, t * 1000)).collect();
        for (solver, score) in score_runs(&records, direction)? {
            writeln!(out, "{solver},{t},{score}").unwrap();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(solver: &str, quality: Option<i64>, time: f64) -> ScoreRecord {
        ScoreRecord { solver: solver.into(), instance: "i".into(), run: 0, quality, time }
    }

    #[test]
    fn equal_quality_splits_by_time() {
        let s = rec("s", Some(5), 10.0);
        let o = rec("o", Some(5), 30.0);
        assert_eq!(pair_score(&s, &o, Direction::Minimising), 0.75);
        assert_eq!(pair_score(&o, &s, Direction::Minimising), 0.25);
    }

    #[test]
    fn missing_solution_scores_nothing() {
        let s = rec("s", None, 0.0);
        let o = rec("o", Some(9), 3.0);
        assert_eq!(pair_score(&s, &o, Direction::Maximising), 0.0);
        assert_eq!(pair_score(&o, &s, Direction::Maximising), 1.0);
        assert_eq!(pair_score(&s, &s, Direction::Maximising), 0.0);
    }

    #[test]
    fn lone_solver_scores_zero() {
        let t = score_runs(&[rec("s", Some(1), 1.0)], Direction::Minimising).unwrap();
        assert_eq!(t["s"], 0.0);
    }

    #[test]
    fn incomplete_grid_is_rejected() {
        let mut other = rec("o", Some(1), 1.0);
        other.run = 1;
        let err = score_runs(&[rec("s", Some(1), 1.0), other], Direction::Minimising).unwrap_err();
        assert!(matches!(err, ScoreError::MissingCell { .. }));
    }

    #[test]
    fn record_at_takes_last_feasible_incumbent() {
        let traj = [(0, 3, None), (500, 0, Some(9)), (1500, 0, Some(7)), (4000, 0, Some(2))]
            .map(|(ms, v, o)| TrajectoryRecord { elapsed_ms: ms, evaluations: 0, violation: v, objective: o });
        let r = record_at("s", "i", 0, &traj, 2000);
        assert_eq!(r.quality, Some(7));
        assert_eq!(r.time, 1.5);
        assert_eq!(record_at("s", "i", 0, &traj, 100).quality, None);
    }
}
