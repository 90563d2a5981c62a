//! Removal of integer decision variables fixed by a top-level equation.
//!
//! A constraint `a = e` (or `e = a`), where `a` is an integer find not
//! occurring in `e`, lets `a` be replaced by `e` everywhere. The equation
//! turns into a membership test of `e` in the domain of `a`, which is dropped
//! when interval reasoning shows it always holds.

use crate::domain::Domain;
use crate::lang::ast::BinOp;
use crate::lang::model::{AggKind, Coll, Model, Term, TermKind, Type};
use crate::value::Plain;

/// Returns the reduced model. Eliminated variables are listed in
/// `Model::eliminated` with the term computing them from the remaining finds.
pub fn eliminate(model: &Model) -> Model {
    let mut m = model.clone();
    while let Some((ci, var, e)) = candidate(&m) {
        let Domain::Int(dom) = m.finds[var].domain.clone() else { unreachable!() };
        let implied = match (bounds(&e, &m), dom.intervals().as_slice()) {
            (Some((lo, hi)), [(dl, dh)]) => lo >= *dl as i128 && hi <= *dh as i128,
            _ => false,
        };
        let check = match dom.intervals().as_slice() {
            [(lo, hi)] => Term::binary(
                BinOp::And,
                Term::binary(BinOp::Le, Term::int(*lo), e.clone(), Type::Bool),
                Term::binary(BinOp::Le, e.clone(), Term::int(*hi), Type::Bool),
                Type::Bool,
            ),
            ivs => {
                let members = ivs.iter().flat_map(|&(lo, hi)| lo..=hi).map(Plain::Int);
                let set = Term::constant(Plain::set(members), Type::Set(Box::new(Type::Int)));
                Term::binary(BinOp::In, e.clone(), set, Type::Bool)
            }
        };
        if implied {
            m.constraints.remove(ci);
        } else {
            m.constraints[ci] = check;
        }
        let substitute = |t: &mut Term| replace_var(t, var, &e);
        m.constraints.iter_mut().for_each(substitute);
        if let Some(o) = &mut m.objective {
            replace_var(&mut o.term, var, &e);
        }
        for (_, _, t) in &mut m.eliminated {
            replace_var(t, var, &e);
        }
        let find = m.finds.remove(var);
        m.eliminated.push((find.name, find.domain, e));
        let shift = |t: &mut Term| shift_vars(t, var);
        m.constraints.iter_mut().for_each(shift);
        if let Some(o) = &mut m.objective {
            shift_vars(&mut o.term, var);
        }
        for (_, _, t) in &mut m.eliminated {
            shift_vars(t, var);
        }
    }
    m
}

fn candidate(m: &Model) -> Option<(usize, usize, Term)> {
    for (ci, c) in m.constraints.iter().enumerate() {
        let TermKind::Binary(BinOp::Eq, a, b) = &c.kind else { continue };
        for (x, e) in [(a, b), (b, a)] {
            let TermKind::Var(v) = x.kind else { continue };
            let Domain::Int(d) = &m.finds[v].domain else { continue };
            if d.is_finite() && !e.vars().contains(&v) && e.binders().is_empty() {
                return Some((ci, v, (**e).clone()));
            }
        }
    }
    None
}

fn replace_var(t: &mut Term, var: usize, e: &Term) {
    if t.kind == TermKind::Var(var) {
        *t = e.clone();
        return;
    }
    for c in t.children_mut() {
        replace_var(c, var, e);
    }
}

fn shift_vars(t: &mut Term, removed: usize) {
    if let TermKind::Var(v) = &mut t.kind {
        if *v > removed {
            *v -= 1;
        }
    }
    for c in t.children_mut() {
        shift_vars(c, removed);
    }
}

/// Interval enclosing every value of an integer term.
fn bounds(t: &Term, m: &Model) -> Option<(i128, i128)> {
    let corners = |a: (i128, i128), b: (i128, i128)| {
        let ps = [a.0 * b.0, a.0 * b.1, a.1 * b.0, a.1 * b.1];
        (*ps.iter().min().unwrap(), *ps.iter().max().unwrap())
    };
    match &t.kind {
        TermKind::Const(Plain::Int(i)) => Some((*i as i128, *i as i128)),
        TermKind::Var(v) => match &m.finds[*v].domain {
            Domain::Int(d) => d.bounds().map(|(lo, hi)| (lo as i128, hi as i128)),
            Domain::Enum { names, .. } => Some((0, names.len() as i128 - 1)),
            _ => None,
        },
        TermKind::ToInt(_) => Some((0, 1)),
        TermKind::Unary(crate::lang::ast::UnOp::Neg, a) => bounds(a, m).map(|(lo, hi)| (-hi, -lo)),
        TermKind::Abs(a) => bounds(a, m).map(|(lo, hi)| {
            let top = lo.abs().max(hi.abs());
            if lo <= 0 && hi >= 0 {
                (0, top)
            } else {
                (lo.abs().min(hi.abs()), top)
            }
        }),
        TermKind::Binary(op, a, b) => {
            let (x, y) = (bounds(a, m)?, bounds(b, m)?);
            match op {
                BinOp::Add => Some((x.0 + y.0, x.1 + y.1)),
                BinOp::Sub => Some((x.0 - y.1, x.1 - y.0)),
                BinOp::Mul => Some(corners(x, y)),
                _ => None,
            }
        }
        TermKind::Agg(AggKind::Sum, Coll::Items(xs)) => xs.iter().try_fold((0, 0), |acc, x| {
            let (lo, hi) = bounds(x, m)?;
            Some((acc.0 + lo, acc.1 + hi))
        }),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_params, parse_spec};
    use crate::lang::model::instantiate;

    #[test]
    fn equation_removes_the_variable() {
        let spec = parse_spec(
            "find a : int(0..100)\nfind b, c : int(0..5)\nsuch that a = b + c, a >= 3\nminimising a",
        )
        .unwrap();
        let m = instantiate(&spec, &parse_params("").unwrap()).unwrap();
        let r = eliminate(&m);
        assert_eq!(r.finds.len(), 2);
        assert_eq!(r.eliminated.len(), 1);
        assert_eq!(r.eliminated[0].0, "a");
        // b + c always lies in 0..100, so the equation disappears
        assert_eq!(r.constraints.len(), 1);
        assert!(r.constraints[0].vars().iter().all(|&v| v < 2));
    }

    #[test]
    fn membership_kept_when_not_implied() {
        let spec = parse_spec("find a : int(0..3)\nfind b : int(0..5)\nsuch that a = b").unwrap();
        let m = instantiate(&spec, &parse_params("").unwrap()).unwrap();
        let r = eliminate(&m);
        assert_eq!(r.finds.len(), 1);
        assert_eq!(r.constraints.len(), 1);
        assert_eq!(r.finds[0].name, "b");
    }
}
