//! From-scratch structural evaluator over `Plain` values. It shares no
//! evaluation logic with the incremental engine and serves as its oracle and
//! as the solution verifier.

use std::collections::{BTreeMap, BTreeSet};

use super::{Evaluation, UNDEFINED_VIOLATION};
use crate::lang::ast::{BinOp, UnOp};
use crate::lang::model::{AggKind, Coll, Model, Term, TermKind, Type};
use crate::value::Plain;

/// Value (`None` when undefined) and violation of one term.
#[derive(Clone, Debug, PartialEq)]
pub struct Ev {
    pub val: Option<Plain>,
    pub viol: u64,
}

fn sat(x: i128) -> u64 {
    x.clamp(0, UNDEFINED_VIOLATION as i128) as u64
}

fn truth(b: bool, viol: u64) -> Ev {
    Ev { val: Some(Plain::Bool(b)), viol }
}

fn undefined_bool() -> Ev {
    truth(false, UNDEFINED_VIOLATION)
}

fn value(p: Option<Plain>) -> Ev {
    Ev { val: p, viol: 0 }
}

/// Floor division; `None` on a zero divisor.
pub fn floor_div(x: i64, y: i64) -> Option<i64> {
    if y == 0 {
        return None;
    }
    let q = x.checked_div(y).expect("integer overflow in division");
    Some(if (x % y != 0) && ((x < 0) != (y < 0)) { q - 1 } else { q })
}

/// Modulo with the sign of the divisor; `None` on a zero divisor.
pub fn floor_mod(x: i64, y: i64) -> Option<i64> {
    let q = floor_div(x, y)?;
    Some(x - q * y)
}

pub struct Scratch<'a> {
    vars: &'a [Plain],
    binds: Vec<Option<Plain>>,
}

/// Evaluates a variable-free term.
pub fn eval_ground(t: &Term, num_binders: usize) -> Option<Plain> {
    Scratch::new(&[], num_binders).eval(t).val
}

/// Violation of every constraint and the objective value (user sign) of a
/// complete assignment.
pub fn evaluate(model: &Model, assignment: &[Plain]) -> Evaluation {
    let mut s = Scratch::new(assignment, model.num_binders);
    let constraint_violations: Vec<u64> = model.constraints.iter().map(|c| s.eval(c).viol).collect();
    let total = constraint_violations.iter().fold(0u64, |a, v| a.saturating_add(*v));
    Evaluation {
        violation: total.min(UNDEFINED_VIOLATION),
        objective: model.objective.as_ref().and_then(|o| s.eval(&o.term).val.map(|p| p.int())),
        constraint_violations,
    }
}

impl<'a> Scratch<'a> {
    pub fn new(vars: &'a [Plain], num_binders: usize) -> Self {
        Scratch { vars, binds: vec![None; num_binders] }
    }

    fn bool_leaf(&self, t: &Term, p: Option<Plain>) -> Ev {
        if t.ty != Type::Bool {
            return value(p);
        }
        match p {
            Some(Plain::Bool(b)) => truth(b, (!b) as u64),
            _ => undefined_bool(),
        }
    }

    /// Borrowed value of a constant or variable, sparing a copy of large
    /// containers that are only looked into.
    fn leaf<'s>(&'s self, t: &'s Term) -> Option<Option<&'s Plain>> {
        match &t.kind {
            TermKind::Const(p) => Some(Some(p)),
            TermKind::Var(v) => Some(Some(&self.vars[*v])),
            TermKind::Bind(b) => Some(self.binds[*b].as_ref()),
            _ => None,
        }
    }

    pub fn eval(&mut self, t: &Term) -> Ev {
        match &t.kind {
            TermKind::Const(p) => self.bool_leaf(t, Some(p.clone())),
            TermKind::Var(v) => self.bool_leaf(t, Some(self.vars[*v].clone())),
            TermKind::Bind(b) => self.bool_leaf(t, self.binds[*b].clone()),
            TermKind::Unary(UnOp::Neg, a) => {
                value(self.eval(a).val.map(|p| Plain::Int(p.int().checked_neg().expect("integer overflow"))))
            }
            TermKind::Unary(UnOp::Not, a) => {
                let b = self.eval(a).val.is_some_and(|p| p == Plain::Bool(true));
                truth(!b, b as u64)
            }
            TermKind::Binary(op, a, b) => self.binary(*op, a, b),
            TermKind::Abs(a) => value(self.eval(a).val.map(|p| Plain::Int(p.int().checked_abs().expect("integer overflow")))),
            TermKind::Card(a) => value(self.eval(a).val.map(|p| Plain::Int(p.card() as i64))),
            TermKind::ToInt(a) => {
                let b = self.eval(a).val == Some(Plain::Bool(true));
                value(Some(Plain::Int(b as i64)))
            }
            TermKind::Apply(f, x) => {
                let x = self.eval(x).val;
                let r = match self.leaf(f) {
                    Some(leaf) => match (leaf, x) {
                        (Some(Plain::Func(m)), Some(x)) => m.get(&x).cloned(),
                        _ => None,
                    },
                    None => match (self.eval(f).val, x) {
                        (Some(Plain::Func(m)), Some(x)) => m.get(&x).cloned(),
                        _ => None,
                    },
                };
                self.bool_leaf(t, r)
            }
            TermKind::Index(s, i) => {
                let (s, i) = (self.eval(s).val, self.eval(i).val);
                let r = match (s, i) {
                    (Some(Plain::Seq(xs)), Some(Plain::Int(i))) if i >= 1 && (i as usize) <= xs.len() => {
                        Some(xs[i as usize - 1].clone())
                    }
                    _ => None,
                };
                self.bool_leaf(t, r)
            }
            TermKind::Tuple(xs) => {
                let ms: Option<Vec<Plain>> = xs.iter().map(|x| self.eval(x).val).collect();
                value(ms.map(Plain::Tuple))
            }
            TermKind::Field(a, k) => {
                let r = match self.eval(a).val {
                    Some(Plain::Tuple(ms)) => ms.get(*k).cloned(),
                    _ => None,
                };
                self.bool_leaf(t, r)
            }
            TermKind::Parts(a) => value(self.eval(a).val.map(|p| match p {
                Plain::Part(ps) => Plain::Set(ps.into_iter().map(Plain::Set).collect()),
                other => panic!("parts of {other}"),
            })),
            TermKind::Agg(kind, coll) => self.aggregate(*kind, coll),
        }
    }

    fn binary(&mut self, op: BinOp, a: &Term, b: &Term) -> Ev {
        let x = self.eval(a);
        let y = self.eval(b);
        match op {
            BinOp::And => {
                let v = x.viol.saturating_add(y.viol).min(UNDEFINED_VIOLATION);
                truth(v == 0, v)
            }
            BinOp::Or => {
                let v = x.viol.min(y.viol);
                truth(v == 0, v)
            }
            BinOp::Imply => {
                let p = x.val == Some(Plain::Bool(true));
                let q = y.val == Some(Plain::Bool(true));
                truth(!p || q, (p as u64).min(y.viol))
            }
            _ => {
                let (Some(x), Some(y)) = (x.val, y.val) else {
                    return if matches!(
                        op,
                        BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod | BinOp::Union | BinOp::Intersect
                    ) {
                        value(None)
                    } else {
                        undefined_bool()
                    };
                };
                self.defined_binary(op, x, y)
            }
        }
    }

    fn defined_binary(&mut self, op: BinOp, x: Plain, y: Plain) -> Ev {
        let ints = || (x.int() as i128, y.int() as i128);
        let arith = |r: Option<i64>| value(r.map(Plain::Int));
        match op {
            BinOp::Add => arith(Some(x.int().checked_add(y.int()).expect("integer overflow"))),
            BinOp::Sub => arith(Some(x.int().checked_sub(y.int()).expect("integer overflow"))),
            BinOp::Mul => arith(Some(x.int().checked_mul(y.int()).expect("integer overflow"))),
            BinOp::Div => arith(floor_div(x.int(), y.int())),
            BinOp::Mod => arith(floor_mod(x.int(), y.int())),
            BinOp::Eq => match (&x, &y) {
                (Plain::Int(_), Plain::Int(_)) => {
                    let (a, b) = ints();
                    truth(a == b, sat((a - b).abs()))
                }
                _ => truth(x == y, (x != y) as u64),
            },
            BinOp::Neq => truth(x != y, (x == y) as u64),
            BinOp::Lt => {
                let (a, b) = ints();
                truth(a < b, sat(a - b + 1))
            }
            BinOp::Le => {
                let (a, b) = ints();
                truth(a <= b, sat(a - b))
            }
            BinOp::Gt => {
                let (a, b) = ints();
                truth(a > b, sat(b - a + 1))
            }
            BinOp::Ge => {
                let (a, b) = ints();
                truth(a >= b, sat(b - a))
            }
            BinOp::In => {
                let inside = match &y {
                    Plain::Set(s) => s.contains(&x),
                    Plain::MSet(m) => m.contains_key(&x),
                    Plain::Seq(s) => s.contains(&x),
                    other => panic!("membership in {other}"),
                };
                truth(inside, (!inside) as u64)
            }
            BinOp::SubsetEq => {
                let missing = match (&x, &y) {
                    (Plain::Set(a), Plain::Set(b)) => a.iter().filter(|m| !b.contains(*m)).count() as u64,
                    (Plain::MSet(a), Plain::MSet(b)) => a
                        .iter()
                        .map(|(k, &c)| c.saturating_sub(b.get(k).copied().unwrap_or(0)) as u64)
                        .sum(),
                    _ => panic!("subsetEq on {x} and {y}"),
                };
                truth(missing == 0, missing.min(UNDEFINED_VIOLATION))
            }
            BinOp::Union | BinOp::Intersect => value(Some(match (x, y) {
                (Plain::Set(a), Plain::Set(b)) => Plain::Set(if op == BinOp::Union {
                    a.union(&b).cloned().collect()
                } else {
                    a.intersection(&b).cloned().collect()
                }),
                (Plain::MSet(a), Plain::MSet(b)) => {
                    let keys: BTreeSet<&Plain> = a.keys().chain(b.keys()).collect();
                    let mut out = BTreeMap::new();
                    for k in keys {
                        let (ca, cb) = (a.get(k).copied().unwrap_or(0), b.get(k).copied().unwrap_or(0));
                        let c = if op == BinOp::Union { ca.max(cb) } else { ca.min(cb) };
                        if c > 0 {
                            out.insert(k.clone(), c);
                        }
                    }
                    Plain::MSet(out)
                }
                (x, y) => panic!("set operation on {x} and {y}"),
            })),
            BinOp::And | BinOp::Or | BinOp::Imply => unreachable!(),
        }
    }

    /// Member results of an aggregate; `None` when the source is undefined.
    fn members(&mut self, coll: &Coll) -> Option<Vec<Ev>> {
        match coll {
            Coll::Items(xs) => Some(xs.iter().map(|x| self.eval(x)).collect()),
            Coll::Comp(c) => {
                let src = self.eval(&c.src).val?;
                let saved = self.binds[c.binder].take();
                let mut out = Vec::new();
                for m in src.members() {
                    self.binds[c.binder] = Some(m);
                    if let Some(g) = &c.guard {
                        if self.eval(g).val != Some(Plain::Bool(true)) {
                            continue;
                        }
                    }
                    out.push(self.eval(&c.body));
                }
                self.binds[c.binder] = saved;
                Some(out)
            }
        }
    }

    fn aggregate(&mut self, kind: AggKind, coll: &Coll) -> Ev {
        let Some(ms) = self.members(coll) else {
            return match kind {
                AggKind::Sum | AggKind::Min | AggKind::Max => value(None),
                _ => undefined_bool(),
            };
        };
        match kind {
            AggKind::And => {
                let v = ms.iter().fold(0u64, |a, m| a.saturating_add(m.viol)).min(UNDEFINED_VIOLATION);
                truth(v == 0, v)
            }
            AggKind::Or => {
                let v = ms.iter().map(|m| m.viol).min().unwrap_or(1);
                truth(v == 0, v)
            }
            AggKind::Sum => {
                let ints: Option<Vec<i64>> = ms.iter().map(|m| m.val.as_ref().map(Plain::int)).collect();
                value(ints.map(|xs| {
                    Plain::Int(xs.into_iter().try_fold(0i64, |a, x| a.checked_add(x)).expect("integer overflow"))
                }))
            }
            AggKind::Min | AggKind::Max => {
                let ints: Option<Vec<i64>> = ms.iter().map(|m| m.val.as_ref().map(Plain::int)).collect();
                let r = ints.and_then(|xs| {
                    if kind == AggKind::Min {
                        xs.into_iter().min()
                    } else {
                        xs.into_iter().max()
                    }
                });
                value(r.map(Plain::Int))
            }
            AggKind::AllDiff => {
                let vals: Option<Vec<Plain>> = ms.into_iter().map(|m| m.val).collect();
                let Some(vals) = vals else { return undefined_bool() };
                let distinct: BTreeSet<&Plain> = vals.iter().collect();
                let v = (vals.len() - distinct.len()) as u64;
                truth(v == 0, v)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_semantics() {
        assert_eq!(floor_div(7, 2), Some(3));
        assert_eq!(floor_div(-7, 2), Some(-4));
        assert_eq!(floor_div(7, -2), Some(-4));
        assert_eq!(floor_mod(-7, 2), Some(1));
        assert_eq!(floor_mod(7, -2), Some(-1));
        assert_eq!(floor_div(1, 0), None);
        assert_eq!(floor_mod(1, 0), None);
    }
}
