//! Attribution of constraint violation to variables and their members.
//!
//! Violation flows top-down from each violated constraint. Comparisons label
//! their sides as too small or too large, arithmetic passes or flips the
//! label, and `toInt` drops shares its operand cannot reduce. Leaves that
//! read a decision variable, or a comprehension member drawn from one, record
//! the amount against the variable and the path to the member.

use std::collections::BTreeMap;
use std::rc::Rc;

use rustc_hash::FxHashMap;

use super::engine::{Engine, TKind, NONE};
use crate::lang::ast::BinOp;
use crate::lang::model::AggKind;
use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    TooSmall,
    TooLarge,
}

impl Label {
    fn flip(l: Option<Label>) -> Option<Label> {
        l.map(|l| match l {
            Label::TooSmall => Label::TooLarge,
            Label::TooLarge => Label::TooSmall,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attribution {
    pub var: usize,
    pub path: Vec<usize>,
    pub amount: u64,
    pub label: Option<Label>,
}

#[derive(Clone, Debug, Default)]
pub struct ViolationMap {
    pub attributions: Vec<Attribution>,
    /// Amount recorded at or below every prefix of every attributed path.
    totals: FxHashMap<(usize, Vec<usize>), u64>,
    /// Per prefix, the amount recorded below each child index.
    kids: FxHashMap<(usize, Vec<usize>), BTreeMap<usize, u64>>,
}

impl ViolationMap {
    fn add(&mut self, var: usize, path: Vec<usize>, amount: u64, label: Option<Label>) {
        for l in 0..=path.len() {
            *self.totals.entry((var, path[..l].to_vec())).or_insert(0) += amount;
            if l < path.len() {
                *self.kids.entry((var, path[..l].to_vec())).or_default().entry(path[l]).or_insert(0) += amount;
            }
        }
        self.attributions.push(Attribution { var, path, amount, label });
    }

    /// Violation attributed to `var` as a whole.
    pub fn var(&self, var: usize) -> u64 {
        self.at(var, &[])
    }

    /// Violation attributed to the member of `var` at `path` or below it.
    pub fn at(&self, var: usize, path: &[usize]) -> u64 {
        self.totals.get(&(var, path.to_vec())).copied().unwrap_or(0)
    }

    /// Violation below each child of the member at `path`, for children
    /// with any.
    pub fn children(&self, var: usize, path: &[usize]) -> Option<&BTreeMap<usize, u64>> {
        self.kids.get(&(var, path.to_vec()))
    }

    /// Labels recorded against `var` itself.
    pub fn labels(&self, var: usize) -> Vec<Label> {
        self.attributions.iter().filter(|a| a.var == var).filter_map(|a| a.label).collect()
    }
}

impl Engine {
    /// Violation attribution for the current state, computed on demand and
    /// cached until the next edit.
    pub fn violations(&mut self) -> Rc<ViolationMap> {
        if self.vmap.as_ref().is_none_or(|(v, _)| *v != self.version) {
            let mut out = ViolationMap::default();
            for &c in &self.nodes[self.root as usize].children {
                let v = self.viol(c);
                self.distribute(c, v, None, &mut out);
            }
            self.vmap = Some((self.version, Rc::new(out)));
        }
        self.vmap.as_ref().unwrap().1.clone()
    }

    /// Variable and path a binder slot's value was drawn from, when the
    /// comprehension iterates a variable (or a member of one) directly.
    fn origin(&self, slot: u32) -> Option<(usize, Vec<usize>)> {
        let s = &self.slots[slot as usize];
        let src = self.nodes[s.comp as usize].children[0];
        let (var, mut path) = self.leaf_origin(src)?;
        if matches!(self.vars[var].get(&path), Value::Part(_)) {
            return Some((var, path));
        }
        path.push(s.pos as usize);
        Some((var, path))
    }

    fn leaf_origin(&self, id: u32) -> Option<(usize, Vec<usize>)> {
        match *self.kind(id) {
            TKind::Var(v) => Some((v, Vec::new())),
            TKind::Bind(_) => self.origin(self.nodes[id as usize].slot),
            _ => None,
        }
    }

    fn distribute(&self, id: u32, amount: u64, label: Option<Label>, out: &mut ViolationMap) {
        if amount == 0 {
            return;
        }
        let n = &self.nodes[id as usize];
        let c = &n.children;
        match self.kind(id) {
            TKind::Const(_) => {}
            TKind::Var(v) => out.add(*v, Vec::new(), amount, label),
            TKind::Bind(_) => match self.origin(n.slot) {
                Some((v, p)) => out.add(v, p, amount, label),
                None => {
                    let comp = self.slots[n.slot as usize].comp;
                    self.distribute(self.nodes[comp as usize].children[0], amount, None, out);
                }
            },
            TKind::Not | TKind::Parts => self.distribute(c[0], amount, None, out),
            TKind::Neg => self.distribute(c[0], amount, Label::flip(label), out),
            TKind::Abs | TKind::Card | TKind::Field(_) => self.distribute(c[0], amount, label, out),
            TKind::ToInt => {
                let b = self.truth(c[0]);
                let useless = matches!((label, b), (Some(Label::TooLarge), false) | (Some(Label::TooSmall), true));
                if !useless {
                    self.distribute(c[0], 1, None, out);
                }
            }
            TKind::Apply | TKind::Index => {
                let target = self.leaf_origin(c[0]).and_then(|(v, mut p)| {
                    let arg = self.val(c[1])?;
                    let k = match (self.vars[v].get(&p), arg) {
                        (Value::Func(f), x) => f.slot_of(x)?,
                        (Value::Seq(s), Value::Int(i)) if *i >= 1 && (*i as usize) <= s.len() => *i as usize - 1,
                        _ => return None,
                    };
                    p.push(k);
                    Some((v, p))
                });
                match target {
                    Some((v, p)) => out.add(v, p, amount, label),
                    None => self.distribute(c[0], amount, label, out),
                }
                self.distribute(c[1], amount, None, out);
            }
            TKind::Tuple => {
                for &x in c {
                    self.distribute(x, amount, label, out);
                }
            }
            TKind::Binary(op) => self.distribute_binary(id, *op, amount, label, out),
            TKind::Items(kind) | TKind::Comp { kind, .. } => self.distribute_agg(id, *kind, amount, label, out),
        }
    }

    fn distribute_binary(&self, id: u32, op: BinOp, amount: u64, label: Option<Label>, out: &mut ViolationMap) {
        let c = &self.nodes[id as usize].children;
        let (a, b) = (c[0], c[1]);
        let both = |la: Option<Label>, lb: Option<Label>, out: &mut ViolationMap| {
            self.distribute(a, amount, la, out);
            self.distribute(b, amount, lb, out);
        };
        use Label::*;
        match op {
            BinOp::And | BinOp::Or => {
                for x in [a, b] {
                    self.distribute(x, self.viol(x), None, out);
                }
            }
            BinOp::Imply => {
                if !self.truth(id) {
                    self.distribute(b, self.viol(b), None, out);
                    self.distribute(a, 1, None, out);
                }
            }
            BinOp::Eq => match (self.val(a), self.val(b)) {
                (Some(Value::Int(x)), Some(Value::Int(y))) if x < y => both(Some(TooSmall), Some(TooLarge), out),
                (Some(Value::Int(x)), Some(Value::Int(y))) if x > y => both(Some(TooLarge), Some(TooSmall), out),
                _ => both(None, None, out),
            },
            BinOp::Lt | BinOp::Le => both(Some(TooLarge), Some(TooSmall), out),
            BinOp::Gt | BinOp::Ge => both(Some(TooSmall), Some(TooLarge), out),
            BinOp::Add | BinOp::Mul => both(label, label, out),
            BinOp::Sub => both(label, Label::flip(label), out),
            BinOp::Div | BinOp::Mod => both(label, None, out),
            BinOp::Neq | BinOp::In | BinOp::SubsetEq | BinOp::Union | BinOp::Intersect => both(None, None, out),
        }
    }

    fn distribute_agg(&self, id: u32, kind: AggKind, amount: u64, label: Option<Label>, out: &mut ViolationMap) {
        let n = &self.nodes[id as usize];
        let agg = n.agg.as_ref().expect("aggregate");
        let members: Vec<u32> = if agg.entries.is_empty() && matches!(self.kind(id), TKind::Items(_)) {
            n.children.clone()
        } else {
            agg.entries
                .iter()
                .filter(|e| e.guard == NONE || self.truth(e.guard))
                .map(|e| e.body)
                .collect()
        };
        match kind {
            AggKind::And | AggKind::Or => {
                for m in members {
                    self.distribute(m, self.viol(m), None, out);
                }
            }
            AggKind::Sum | AggKind::Min | AggKind::Max => {
                for m in members {
                    self.distribute(m, amount, label, out);
                }
            }
            AggKind::AllDiff => {
                let mut counts: FxHashMap<u64, u32> = FxHashMap::default();
                for &m in &members {
                    if let Some(v) = self.val(m) {
                        *counts.entry(v.hash()).or_insert(0) += 1;
                    }
                }
                for m in members {
                    if self.val(m).is_some_and(|v| counts[&v.hash()] > 1) {
                        self.distribute(m, 1, None, out);
                    }
                }
            }
        }
    }
}
