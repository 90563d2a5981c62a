//! Canonical, hash-free structural values.
//!
//! `Plain` orders and compares by structure only. It backs the from-scratch
//! evaluator, the solution verifier and literal printing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{FuncVal, MSetVal, PartVal, SeqVal, SetVal, Value};
use crate::domain::Domain;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Plain {
    Bool(bool),
    Int(i64),
    Tuple(Vec<Plain>),
    Set(BTreeSet<Plain>),
    MSet(BTreeMap<Plain, usize>),
    Seq(Vec<Plain>),
    Func(BTreeMap<Plain, Plain>),
    Part(BTreeSet<BTreeSet<Plain>>),
}

impl Plain {
    pub fn int(&self) -> i64 {
        match self {
            Plain::Int(i) => *i,
            Plain::Bool(b) => *b as i64,
            other => panic!("expected int, found {other}"),
        }
    }

    pub fn set(items: impl IntoIterator<Item = Plain>) -> Plain {
        Plain::Set(items.into_iter().collect())
    }

    pub fn ints(xs: &[i64]) -> Plain {
        Plain::set(xs.iter().map(|&x| Plain::Int(x)))
    }

    /// Members as a comprehension iterates them: elements, multiset
    /// occurrences, sequence members, function pairs, partition parts.
    pub fn members(&self) -> Vec<Plain> {
        match self {
            Plain::Set(s) => s.iter().cloned().collect(),
            Plain::MSet(m) => m
                .iter()
                .flat_map(|(k, &c)| std::iter::repeat_n(k.clone(), c))
                .collect(),
            Plain::Seq(s) => s.clone(),
            Plain::Func(f) => f.iter().map(|(a, b)| Plain::Tuple(vec![a.clone(), b.clone()])).collect(),
            Plain::Part(p) => p.iter().map(|s| Plain::Set(s.clone())).collect(),
            Plain::Tuple(t) => t.clone(),
            _ => Vec::new(),
        }
    }

    pub fn card(&self) -> usize {
        match self {
            Plain::Set(s) => s.len(),
            Plain::MSet(m) => m.values().sum(),
            Plain::Seq(s) => s.len(),
            Plain::Func(f) => f.len(),
            Plain::Part(p) => p.len(),
            Plain::Tuple(t) => t.len(),
            _ => 0,
        }
    }

    /// Runtime representation; `dom` selects computed indexing for total
    /// functions over integer ranges.
    pub fn to_value(&self, dom: Option<&Domain>) -> Value {
        match self {
            Plain::Bool(b) => Value::Bool(*b),
            Plain::Int(i) => Value::Int(*i),
            Plain::Tuple(t) => {
                let inner = |k: usize| match dom {
                    Some(Domain::Tuple(ds)) => ds.get(k),
                    _ => None,
                };
                Value::tuple(t.iter().enumerate().map(|(k, m)| m.to_value(inner(k))).collect())
            }
            Plain::Set(s) => {
                let d = dom.and_then(Domain::inner);
                Value::Set(SetVal::from_values(s.iter().map(|m| m.to_value(d))))
            }
            Plain::MSet(_) => {
                let d = dom.and_then(Domain::inner);
                Value::MSet(MSetVal::from_values(self.members().iter().map(|m| m.to_value(d))))
            }
            Plain::Seq(s) => {
                let d = dom.and_then(Domain::inner);
                Value::Seq(SeqVal::from_values(s.iter().map(|m| m.to_value(d))))
            }
            Plain::Func(f) => {
                let (from, to) = match dom {
                    Some(Domain::Func { from, to, .. }) => (Some(&**from), Some(&**to)),
                    _ => (None, None),
                };
                if let Some((dims, tuple)) = dom.and_then(Domain::direct_dims) {
                    let size: i64 = dims.iter().map(|(lo, hi)| hi - lo + 1).product();
                    if size as usize == f.len() {
                        let images = f.values().map(|m| m.to_value(to)).collect();
                        return Value::Func(FuncVal::direct(dims, tuple, images));
                    }
                }
                Value::Func(FuncVal::explicit(f.iter().map(|(a, b)| (a.to_value(from), b.to_value(to)))))
            }
            Plain::Part(p) => {
                let d = dom.and_then(Domain::inner);
                let parts = p.iter().map(|s| s.iter().map(|m| m.to_value(d)).collect()).collect();
                Value::Part(PartVal::from_parts(parts))
            }
        }
    }
}

pub(crate) fn from_value(v: &Value) -> Plain {
    match v {
        Value::Bool(b) => Plain::Bool(*b),
        Value::Int(i) => Plain::Int(*i),
        Value::Tuple(t) => Plain::Tuple(t.members.iter().map(from_value).collect()),
        Value::Set(s) => Plain::Set(s.elems().iter().map(from_value).collect()),
        Value::MSet(m) => {
            let mut out = BTreeMap::new();
            for e in m.elems() {
                *out.entry(from_value(e)).or_insert(0) += 1;
            }
            Plain::MSet(out)
        }
        Value::Seq(s) => Plain::Seq(s.elems().iter().map(from_value).collect()),
        Value::Func(f) => Plain::Func(
            (0..f.len())
                .map(|k| (from_value(&f.preimage(k)), from_value(&f.images()[k])))
                .collect(),
        ),
        Value::Part(p) => Plain::Part(
            p.parts()
                .iter()
                .map(|s| s.elems().iter().map(from_value).collect())
                .collect(),
        ),
    }
}

/// Structural duplicates hidden behind distinct hashes cannot occur, but
/// equal structures stored twice (a hash collision, or a hand-built value)
/// collapse in `Plain`; this reports them.
pub fn structural_duplicates(v: &Value) -> Vec<String> {
    let mut out = Vec::new();
    collect_duplicates(v, &mut out);
    out
}

fn collect_duplicates(v: &Value, out: &mut Vec<String>) {
    let check = |elems: &[Value], what: &str, out: &mut Vec<String>| {
        let mut seen = BTreeSet::new();
        for e in elems {
            let p = from_value(e);
            if !seen.insert(p.clone()) {
                out.push(format!("{what} holds {p} more than once"));
            }
        }
    };
    match v {
        Value::Set(s) => {
            check(s.elems(), "set", out);
            s.elems().iter().for_each(|e| collect_duplicates(e, out));
        }
        Value::MSet(m) => m.elems().iter().for_each(|e| collect_duplicates(e, out)),
        Value::Seq(s) => s.elems().iter().for_each(|e| collect_duplicates(e, out)),
        Value::Tuple(t) => t.members.iter().for_each(|e| collect_duplicates(e, out)),
        Value::Func(f) => {
            let pre: Vec<Value> = (0..f.len()).map(|k| f.preimage(k)).collect();
            check(&pre, "function preimage", out);
            f.images().iter().for_each(|e| collect_duplicates(e, out));
        }
        Value::Part(p) => {
            check(p.elems(), "partition", out);
            for part in p.parts() {
                check(part.elems(), "partition part", out);
            }
        }
        Value::Bool(_) | Value::Int(_) => {}
    }
}

fn join<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: impl IntoIterator<Item = T>) -> fmt::Result {
    for (i, item) in items.into_iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

impl fmt::Display for Plain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Plain::Bool(b) => write!(f, "{b}"),
            Plain::Int(i) => write!(f, "{i}"),
            Plain::Tuple(t) if t.len() == 1 => write!(f, "tuple({})", t[0]),
            Plain::Tuple(t) => {
                write!(f, "(")?;
                join(f, t)?;
                write!(f, ")")
            }
            Plain::Set(s) => {
                write!(f, "{{")?;
                join(f, s)?;
                write!(f, "}}")
            }
            Plain::MSet(_) => {
                write!(f, "mset(")?;
                join(f, self.members())?;
                write!(f, ")")
            }
            Plain::Seq(s) => {
                write!(f, "sequence(")?;
                join(f, s)?;
                write!(f, ")")
            }
            Plain::Func(m) => {
                write!(f, "function(")?;
                join(f, m.iter().map(|(a, b)| format!("{a} --> {b}")))?;
                write!(f, ")")
            }
            Plain::Part(p) => {
                write!(f, "partition(")?;
                join(f, p.iter().map(|s| Plain::Set(s.clone())))?;
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_value() {
        let p = Plain::set([Plain::ints(&[1, 3]), Plain::ints(&[2, 3, 8])]);
        assert_eq!(p.to_value(None).to_plain(), p);
    }

    #[test]
    fn display_uses_literal_syntax() {
        let f = Plain::Func([(Plain::Int(1), Plain::Bool(true))].into_iter().collect());
        assert_eq!(f.to_string(), "function(1 --> true)");
        assert_eq!(Plain::Tuple(vec![Plain::Int(1), Plain::Int(2)]).to_string(), "(1, 2)");
        assert_eq!(Plain::ints(&[]).to_string(), "{}");
    }

    #[test]
    fn hand_built_duplicates_are_reported() {
        let v = Value::Set(SetVal::from_vec_unchecked(vec![Value::Int(1), Value::Int(1)]));
        assert_eq!(structural_duplicates(&v).len(), 1);
    }
}
