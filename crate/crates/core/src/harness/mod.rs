//! Running a model end to end: variable elimination, search, reconstruction
//! of eliminated variables, hash-free verification and solution files.

pub mod score;

use std::fmt::Write;

use crate::domain::Domain;
use crate::eval::eliminate::eliminate;
use crate::eval::scratch::{evaluate, Scratch};
use crate::lang::ast::{Stmt, Specification};
use crate::lang::{instantiate, LangError, Model, RawParams};
use crate::search::{solve, Config, Limits, RunResult};
use crate::value::plain::structural_duplicates;
use crate::value::{Plain, Value};

/// Outcome of checking an assignment without hashes or incremental state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub violation: u64,
    pub objective: Option<i64>,
    /// Indices (into the model's constraints) and violations of every
    /// violated constraint.
    pub violated: Vec<(usize, u64)>,
    /// Attribute and structure problems, per find.
    pub domain_errors: Vec<String>,
}

impl Report {
    pub fn feasible(&self) -> bool {
        self.violated.is_empty() && self.domain_errors.is_empty()
    }
}

/// Checks every find against its domain by structural equality and
/// evaluates every constraint from scratch.
pub fn verify_solution(model: &Model, assignment: &[Value]) -> Report {
    let mut report = Report::default();
    for (f, v) in model.finds.iter().zip(assignment) {
        for dup in structural_duplicates(v) {
            report.domain_errors.push(format!("{}: {dup}", f.name));
        }
        if let Err(m) = f.domain.check(&v.to_plain()) {
            report.domain_errors.push(format!("{}: {m}", f.name));
        }
    }
    let plain: Vec<Plain> = assignment.iter().map(Value::to_plain).collect();
    let ev = evaluate(model, &plain);
    report.violation = ev.violation;
    report.objective = ev.objective;
    report.violated = ev.constraint_violations.iter().copied().enumerate().filter(|&(_, v)| v > 0).collect();
    report
}

/// Values of the original model's finds, in its declaration order, from an
/// assignment to the reduced model.
pub fn reconstruct(original: &Model, reduced: &Model, assignment: &[Value]) -> Vec<Value> {
    let plain: Vec<Plain> = assignment.iter().map(Value::to_plain).collect();
    original
        .finds
        .iter()
        .map(|f| match reduced.find_index(&f.name) {
            Some(i) => assignment[i].clone(),
            None => {
                let (_, _, term) = reduced.eliminated.iter().find(|(n, _, _)| *n == f.name).expect("eliminated find");
                let p = Scratch::new(&plain, reduced.num_binders).eval(term).val.unwrap_or(Plain::Int(0));
                p.to_value(Some(&f.domain))
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Run {
    pub result: RunResult,
    /// Best assignment to the original model's finds.
    pub assignment: Vec<Value>,
    pub report: Report,
}

/// Eliminates defined integers, searches, and verifies the best assignment
/// against the original model.
pub fn run(model: &Model, cfg: Config, limits: Limits, seed: u64) -> Run {
    let reduced = eliminate(model);
    let result = solve(&reduced, cfg, limits, seed);
    let assignment = reconstruct(model, &reduced, &result.assignment);
    let report = verify_solution(model, &assignment);
    Run { result, assignment, report }
}

/// Value literal with enumerated values written by name.
pub fn literal(p: &Plain, d: &Domain) -> String {
    let join = |items: Vec<String>| items.join(", ");
    match (p, d) {
        (Plain::Int(i), Domain::Enum { names, .. }) => names.get(*i as usize).cloned().unwrap_or_else(|| i.to_string()),
        (Plain::Tuple(ms), Domain::Tuple(ds)) if ms.len() == 1 => format!("tuple({})", literal(&ms[0], &ds[0])),
        (Plain::Tuple(ms), Domain::Tuple(ds)) => {
            format!("({})", join(ms.iter().zip(ds).map(|(m, d)| literal(m, d)).collect()))
        }
        (Plain::Set(s), Domain::Set { inner, .. }) => format!("{{{}}}", join(s.iter().map(|m| literal(m, inner)).collect())),
        (Plain::MSet(_), Domain::MSet { inner, .. }) => {
            format!("mset({})", join(p.members().iter().map(|m| literal(m, inner)).collect()))
        }
        (Plain::Seq(s), Domain::Seq { inner, .. }) => {
            format!("sequence({})", join(s.iter().map(|m| literal(m, inner)).collect()))
        }
        (Plain::Func(f), Domain::Func { from, to, .. }) => format!(
            "function({})",
            join(f.iter().map(|(a, b)| format!("{} --> {}", literal(a, from), literal(b, to))).collect())
        ),
        (Plain::Part(ps), Domain::Part { inner, .. }) => format!(
            "partition({})",
            join(ps.iter().map(|s| format!("{{{}}}", join(s.iter().map(|m| literal(m, inner)).collect()))).collect())
        ),
        _ => p.to_string(),
    }
}

/// `letting <name> be <literal>` for every find.
pub fn solution_text(model: &Model, assignment: &[Value]) -> String {
    let mut out = String::new();
    for (f, v) in model.finds.iter().zip(assignment) {
        writeln!(out, "letting {} be {}", f.name, literal(&v.to_plain(), &f.domain)).unwrap();
    }
    out
}

/// Reads a solution file back: every find of `spec` is treated as a given
/// bound by `solution`, so values are grounded and attribute-checked by the
/// instantiator itself.
pub fn read_solution(spec: &Specification, params: &RawParams, solution: &RawParams) -> Result<Vec<Plain>, LangError> {
    let mut as_givens = spec.clone();
    for s in &mut as_givens.stmts {
        if let Stmt::Find { names, domain } = s {
            *s = Stmt::Given { names: names.clone(), domain: domain.clone() };
        }
    }
    let mut all = params.clone();
    all.bindings.extend(solution.bindings.iter().cloned());
    let m = instantiate(&as_givens, &all)?;
    spec.finds()
        .map(|(n, _)| n)
        .map(|n| m.param(&n.text).cloned().ok_or_else(|| LangError::MissingGiven(n.text.clone())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_params, parse_spec};
    use crate::value::SetVal;

    #[test]
    fn maxsize_breach_is_named() {
        let spec = parse_spec("find s : set (maxSize 2) of int(1..5)").unwrap();
        let m = instantiate(&spec, &parse_params("").unwrap()).unwrap();
        let v = Plain::ints(&[1, 2, 3]).to_value(None);
        let r = verify_solution(&m, &[v]);
        assert!(!r.feasible());
        assert!(r.domain_errors[0].contains("maxSize"), "{:?}", r.domain_errors);
    }

    #[test]
    fn duplicate_members_are_rejected() {
        let spec = parse_spec("find s : set of int(1..5)").unwrap();
        let m = instantiate(&spec, &parse_params("").unwrap()).unwrap();
        let v = Value::Set(SetVal::from_vec_unchecked(vec![Value::Int(4), Value::Int(4)]));
        let r = verify_solution(&m, &[v]);
        assert!(!r.feasible());
    }

    #[test]
    fn enum_values_print_by_name_and_read_back() {
        let spec = parse_spec("given items new type enum\nfind f : function (total) items --> items").unwrap();
        let params = parse_params("letting items be new type enum {a, b, c}").unwrap();
        let m = instantiate(&spec, &params).unwrap();
        let p = Plain::Func((0..3).map(|i| (Plain::Int(i), Plain::Int(2 - i))).collect());
        let text = solution_text(&m, &[p.to_value(Some(&m.finds[0].domain))]);
        assert_eq!(text, "letting f be function(a --> c, b --> b, c --> a)\n");
        let back = read_solution(&spec, &params, &parse_params(&text).unwrap()).unwrap();
        assert_eq!(back, vec![p]);
    }
}
