//! Incremental evaluation over an arena of expression nodes.
//!
//! Each model term is compiled once into a template. Instances of templates
//! form one tree per model; comprehensions keep one entry per member of their
//! source, in the source's storage order, with the member bound to a slot.
//! Edits to decision variables notify the leaves reading them, and changed
//! nodes are recomputed deepest first from their children's cached results.
//! Aggregates maintain their result from per-child contributions so that a
//! change to one entry costs O(log n) at most.

use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use rustc_hash::{FxHashMap, FxHashSet};
use serde_json::json;

use super::UNDEFINED_VIOLATION;
use crate::domain::{Domain, IntDomain};
use crate::lang::ast::{BinOp, Direction, UnOp};
use crate::lang::model::{AggKind, Coll, Model, Term, TermKind, Type};
use crate::value::{EditError, Event, MSetVal, Op, SetVal, Value};

pub(super) const NONE: u32 = u32::MAX;

pub(super) enum TKind {
    Const(Value),
    Var(usize),
    Bind(usize),
    Neg,
    Not,
    Binary(BinOp),
    Abs,
    Card,
    ToInt,
    Apply,
    Index,
    Tuple,
    Field(usize),
    Parts,
    Items(AggKind),
    /// Children are `[src, guard?, body]`.
    Comp { kind: AggKind, binder: usize, guard: bool },
}

pub(super) struct Tmpl {
    pub(super) kind: TKind,
    pub(super) is_bool: bool,
    pub(super) children: Vec<u32>,
    /// For `=` nodes acting as one-way links: which side is the target.
    pub(super) link: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(super) enum Role {
    Root,
    Child(u32),
    Src,
    Guard(u32),
    Body(u32),
}

pub(super) struct Node {
    pub(super) tmpl: u32,
    pub(super) parent: u32,
    pub(super) role: Role,
    depth: u32,
    pub(super) alive: bool,
    dirty: bool,
    pub(super) children: Vec<u32>,
    val: Option<Value>,
    viol: u64,
    pub(super) slot: u32,
    pub(super) agg: Option<Box<Agg>>,
}

pub(super) struct Entry {
    pub(super) slot: u32,
    pub(super) guard: u32,
    pub(super) body: u32,
    hash: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(super) enum Contrib {
    Absent,
    Int(Option<i64>),
    Viol(u64),
    Hash(Option<u64>),
}

pub(super) enum Acc {
    Sum { total: i128, undef: u32 },
    And { total: u64 },
    Or { counts: BTreeMap<u64, u32> },
    Ext { counts: BTreeMap<i64, u32>, undef: u32 },
    AllDiff { counts: FxHashMap<u64, u32>, n: u32, distinct: u32, undef: u32 },
}

pub(super) struct Agg {
    pub(super) kind: AggKind,
    pub(super) contribs: Vec<Contrib>,
    pub(super) entries: Vec<Entry>,
    env: Vec<(usize, u32)>,
    src_defined: bool,
    pub(super) acc: Acc,
}

pub(super) struct Slot {
    pub(super) value: Value,
    subs: Vec<u32>,
    pub(super) comp: u32,
    pub(super) pos: u32,
    alive: bool,
}

enum Undo {
    Edit { var: usize, path: Vec<usize>, inverse: Op },
    Set { var: usize, old: Value },
}

impl Acc {
    fn new(kind: AggKind) -> Acc {
        match kind {
            AggKind::Sum => Acc::Sum { total: 0, undef: 0 },
            AggKind::And => Acc::And { total: 0 },
            AggKind::Or => Acc::Or { counts: BTreeMap::new() },
            AggKind::Min | AggKind::Max => Acc::Ext { counts: BTreeMap::new(), undef: 0 },
            AggKind::AllDiff => Acc::AllDiff { counts: FxHashMap::default(), n: 0, distinct: 0, undef: 0 },
        }
    }

    fn add(&mut self, c: Contrib) {
        match (self, c) {
            (_, Contrib::Absent) => {}
            (Acc::Sum { total, .. }, Contrib::Int(Some(x))) => *total += x as i128,
            (Acc::Sum { undef, .. }, Contrib::Int(None)) => *undef += 1,
            (Acc::And { total }, Contrib::Viol(v)) => *total += v,
            (Acc::Or { counts }, Contrib::Viol(v)) => *counts.entry(v).or_insert(0) += 1,
            (Acc::Ext { counts, .. }, Contrib::Int(Some(x))) => *counts.entry(x).or_insert(0) += 1,
            (Acc::Ext { undef, .. }, Contrib::Int(None)) => *undef += 1,
            (Acc::AllDiff { counts, n, distinct, .. }, Contrib::Hash(Some(h))) => {
                *n += 1;
                let c = counts.entry(h).or_insert(0);
                *c += 1;
                if *c == 1 {
                    *distinct += 1;
                }
            }
            (Acc::AllDiff { undef, .. }, Contrib::Hash(None)) => *undef += 1,
            (_, c) => panic!("contribution {c:?} does not fit the aggregate"),
        }
    }

    fn remove(&mut self, c: Contrib) {
        match (self, c) {
            (_, Contrib::Absent) => {}
            (Acc::Sum { total, .. }, Contrib::Int(Some(x))) => *total -= x as i128,
            (Acc::Sum { undef, .. }, Contrib::Int(None)) => *undef -= 1,
            (Acc::And { total }, Contrib::Viol(v)) => *total -= v,
            (Acc::Or { counts }, Contrib::Viol(v)) => dec(counts, v),
            (Acc::Ext { counts, .. }, Contrib::Int(Some(x))) => dec(counts, x),
            (Acc::Ext { undef, .. }, Contrib::Int(None)) => *undef -= 1,
            (Acc::AllDiff { counts, n, distinct, .. }, Contrib::Hash(Some(h))) => {
                *n -= 1;
                let c = counts.get_mut(&h).expect("counted hash");
                *c -= 1;
                if *c == 0 {
                    counts.remove(&h);
                    *distinct -= 1;
                }
            }
            (Acc::AllDiff { undef, .. }, Contrib::Hash(None)) => *undef -= 1,
            (_, c) => panic!("contribution {c:?} does not fit the aggregate"),
        }
    }

    fn result(&self, kind: AggKind) -> (Option<Value>, u64) {
        match self {
            Acc::Sum { total, undef } => {
                if *undef > 0 {
                    return (None, 0);
                }
                let t = i64::try_from(*total).expect("integer overflow in sum");
                (Some(Value::Int(t)), 0)
            }
            Acc::And { total } => truth_viol((*total).min(UNDEFINED_VIOLATION)),
            Acc::Or { counts } => truth_viol(counts.keys().next().copied().unwrap_or(1)),
            Acc::Ext { counts, undef } => {
                if *undef > 0 {
                    return (None, 0);
                }
                let k = if kind == AggKind::Min { counts.keys().next() } else { counts.keys().next_back() };
                (k.map(|&x| Value::Int(x)), 0)
            }
            Acc::AllDiff { n, distinct, undef, .. } => {
                if *undef > 0 {
                    return (Some(Value::Bool(false)), UNDEFINED_VIOLATION);
                }
                truth_viol((n - distinct) as u64)
            }
        }
    }
}

fn dec<K: Ord>(m: &mut BTreeMap<K, u32>, k: K) {
    let c = m.get_mut(&k).expect("counted key");
    *c -= 1;
    if *c == 0 {
        m.remove(&k);
    }
}

fn truth_viol(v: u64) -> (Option<Value>, u64) {
    (Some(Value::Bool(v == 0)), v)
}

fn undefined_bool() -> (Option<Value>, u64) {
    (Some(Value::Bool(false)), UNDEFINED_VIOLATION)
}

fn sat(x: i128) -> u64 {
    x.clamp(0, UNDEFINED_VIOLATION as i128) as u64
}

fn floor_div(x: i64, y: i64) -> Option<i64> {
    super::scratch::floor_div(x, y)
}

fn floor_mod(x: i64, y: i64) -> Option<i64> {
    super::scratch::floor_mod(x, y)
}

/// Integer domain a one-way link may write into variable `d`, if any.
fn link_domain(d: &Domain) -> Option<IntDomain> {
    match d {
        Domain::Func { injective: false, to, .. } | Domain::Seq { injective: false, inner: to, .. } => match &**to {
            Domain::Int(i) => Some(i.clone()),
            _ => None,
        },
        _ => None,
    }
}

pub struct Engine {
    pub(super) tmpls: Vec<Tmpl>,
    pub(super) nodes: Vec<Node>,
    free_nodes: Vec<u32>,
    pub(super) slots: Vec<Slot>,
    free_slots: Vec<u32>,
    pub(super) vars: Vec<Value>,
    var_leaves: Vec<Vec<u32>>,
    pub(super) root: u32,
    objective: Option<u32>,
    maximise: bool,
    heap: BinaryHeap<(u32, u32)>,
    undo: Vec<Undo>,
    recording: bool,
    links: FxHashMap<u32, Option<Option<u64>>>,
    link_doms: Vec<Option<IntDomain>>,
    links_enabled: bool,
    fresh: Vec<u32>,
    fired: FxHashSet<(usize, usize)>,
    pending: VecDeque<(usize, usize, i64)>,
    pub(super) version: u64,
    pub(super) vmap: Option<(u64, std::rc::Rc<super::violation::ViolationMap>)>,
    link_edits: u64,
}

impl Engine {
    /// Builds the node tree over `assignment` (one value per find) and fires
    /// every one-way link once.
    pub fn new(model: &Model, assignment: Vec<Value>) -> Engine {
        assert_eq!(assignment.len(), model.finds.len(), "one value per find");
        let mut e = Engine {
            tmpls: Vec::new(),
            nodes: Vec::new(),
            free_nodes: Vec::new(),
            slots: Vec::new(),
            free_slots: Vec::new(),
            vars: assignment,
            var_leaves: vec![Vec::new(); model.finds.len()],
            root: NONE,
            objective: None,
            maximise: false,
            heap: BinaryHeap::new(),
            undo: Vec::new(),
            recording: false,
            links: FxHashMap::default(),
            link_doms: model.finds.iter().map(|f| link_domain(&f.domain)).collect(),
            links_enabled: true,
            fresh: Vec::new(),
            fired: FxHashSet::default(),
            pending: VecDeque::new(),
            version: 0,
            vmap: None,
            link_edits: 0,
        };
        let cs: Vec<u32> = model.constraints.iter().map(|c| e.compile(c)).collect();
        for &c in &cs {
            e.mark_links(c);
        }
        let root_t = e.tmpls.len() as u32;
        e.tmpls.push(Tmpl { kind: TKind::Items(AggKind::And), is_bool: true, children: cs, link: None });
        e.root = e.build(root_t, NONE, Role::Root, 0, &[]);
        if let Some(o) = &model.objective {
            let t = e.compile(&o.term);
            e.maximise = o.direction == Direction::Maximising;
            e.objective = Some(e.build(t, NONE, Role::Root, 0, &[]));
        }
        e.propagate();
        e.fired.clear();
        e
    }

    fn compile(&mut self, t: &Term) -> u32 {
        let is_bool = t.ty == Type::Bool;
        let (kind, children): (TKind, Vec<u32>) = match &t.kind {
            TermKind::Const(p) => (TKind::Const(p.to_value(None)), vec![]),
            TermKind::Var(v) => (TKind::Var(*v), vec![]),
            TermKind::Bind(b) => (TKind::Bind(*b), vec![]),
            TermKind::Unary(op, a) => {
                let k = if *op == UnOp::Neg { TKind::Neg } else { TKind::Not };
                (k, vec![self.compile(a)])
            }
            TermKind::Binary(op, a, b) => (TKind::Binary(*op), vec![self.compile(a), self.compile(b)]),
            TermKind::Abs(a) => (TKind::Abs, vec![self.compile(a)]),
            TermKind::Card(a) => (TKind::Card, vec![self.compile(a)]),
            TermKind::ToInt(a) => (TKind::ToInt, vec![self.compile(a)]),
            TermKind::Apply(f, x) => (TKind::Apply, vec![self.compile(f), self.compile(x)]),
            TermKind::Index(s, i) => (TKind::Index, vec![self.compile(s), self.compile(i)]),
            TermKind::Tuple(xs) => (TKind::Tuple, xs.iter().map(|x| self.compile(x)).collect()),
            TermKind::Field(a, k) => (TKind::Field(*k), vec![self.compile(a)]),
            TermKind::Parts(a) => (TKind::Parts, vec![self.compile(a)]),
            TermKind::Agg(kind, Coll::Items(xs)) => (TKind::Items(*kind), xs.iter().map(|x| self.compile(x)).collect()),
            TermKind::Agg(kind, Coll::Comp(c)) => {
                let mut ch = vec![self.compile(&c.src)];
                if let Some(g) = &c.guard {
                    ch.push(self.compile(g));
                }
                ch.push(self.compile(&c.body));
                (TKind::Comp { kind: *kind, binder: c.binder, guard: c.guard.is_some() }, ch)
            }
        };
        self.tmpls.push(Tmpl { kind, is_bool, children, link: None });
        self.tmpls.len() as u32 - 1
    }

    /// Marks `=` templates in positive context whose one side is an
    /// application or index of a non-injective integer function or sequence.
    fn mark_links(&mut self, t: u32) {
        let ch = self.tmpls[t as usize].children.clone();
        match self.tmpls[t as usize].kind {
            TKind::Binary(BinOp::And) | TKind::Items(AggKind::And) => {
                for c in ch {
                    self.mark_links(c);
                }
            }
            TKind::Binary(BinOp::Imply) => self.mark_links(ch[1]),
            TKind::Comp { kind: AggKind::And, .. } => self.mark_links(*ch.last().unwrap()),
            TKind::Binary(BinOp::Eq) => {
                let side = (0..2).find(|&s| self.link_target(ch[s]).is_some());
                self.tmpls[t as usize].link = side;
            }
            _ => {}
        }
    }

    fn link_target(&self, t: u32) -> Option<usize> {
        let tm = &self.tmpls[t as usize];
        if !matches!(tm.kind, TKind::Apply | TKind::Index) {
            return None;
        }
        match self.tmpls[tm.children[0] as usize].kind {
            TKind::Var(v) if self.link_doms[v].is_some() => Some(v),
            _ => None,
        }
    }

    // ---- node access

    pub(super) fn kind(&self, id: u32) -> &TKind {
        &self.tmpls[self.nodes[id as usize].tmpl as usize].kind
    }

    pub(super) fn val(&self, id: u32) -> Option<&Value> {
        let n = &self.nodes[id as usize];
        match &self.tmpls[n.tmpl as usize].kind {
            TKind::Const(v) => Some(v),
            TKind::Var(v) => Some(&self.vars[*v]),
            TKind::Bind(_) => Some(&self.slots[n.slot as usize].value),
            _ => n.val.as_ref(),
        }
    }

    pub(super) fn viol(&self, id: u32) -> u64 {
        let n = &self.nodes[id as usize];
        let t = &self.tmpls[n.tmpl as usize];
        match t.kind {
            TKind::Const(_) | TKind::Var(_) | TKind::Bind(_) if t.is_bool => {
                !matches!(self.val(id), Some(Value::Bool(true))) as u64
            }
            _ => n.viol,
        }
    }

    pub(super) fn truth(&self, id: u32) -> bool {
        matches!(self.val(id), Some(Value::Bool(true)))
    }

    // ---- construction and teardown

    fn alloc(&mut self, tmpl: u32, parent: u32, role: Role, depth: u32) -> u32 {
        let node = Node {
            tmpl,
            parent,
            role,
            depth,
            alive: true,
            dirty: false,
            children: Vec::new(),
            val: None,
            viol: 0,
            slot: NONE,
            agg: None,
        };
        match self.free_nodes.pop() {
            Some(id) => {
                self.nodes[id as usize] = node;
                id
            }
            None => {
                self.nodes.push(node);
                self.nodes.len() as u32 - 1
            }
        }
    }

    fn alloc_slot(&mut self, value: Value, comp: u32, pos: u32) -> u32 {
        let slot = Slot { value, subs: Vec::new(), comp, pos, alive: true };
        match self.free_slots.pop() {
            Some(id) => {
                self.slots[id as usize] = slot;
                id
            }
            None => {
                self.slots.push(slot);
                self.slots.len() as u32 - 1
            }
        }
    }

    fn build(&mut self, tmpl: u32, parent: u32, role: Role, depth: u32, env: &[(usize, u32)]) -> u32 {
        let id = self.alloc(tmpl, parent, role, depth);
        let kids = self.tmpls[tmpl as usize].children.clone();
        match self.tmpls[tmpl as usize].kind {
            TKind::Const(_) => {}
            TKind::Var(v) => self.var_leaves[v].push(id),
            TKind::Bind(b) => {
                let slot = env.iter().rev().find(|e| e.0 == b).expect("binder in scope").1;
                self.nodes[id as usize].slot = slot;
                self.slots[slot as usize].subs.push(id);
            }
            TKind::Items(kind) => {
                let mut acc = Acc::new(kind);
                let mut contribs = Vec::with_capacity(kids.len());
                let mut children = Vec::with_capacity(kids.len());
                for (i, &k) in kids.iter().enumerate() {
                    let c = self.build(k, id, Role::Child(i as u32), depth + 1, env);
                    let con = self.contrib_of(kind, c);
                    acc.add(con);
                    contribs.push(con);
                    children.push(c);
                }
                let (val, viol) = acc.result(kind);
                let n = &mut self.nodes[id as usize];
                n.children = children;
                n.val = val;
                n.viol = viol;
                n.agg = Some(Box::new(Agg {
                    kind,
                    contribs,
                    entries: Vec::new(),
                    env: Vec::new(),
                    src_defined: true,
                    acc,
                }));
            }
            TKind::Comp { kind, .. } => {
                let src = self.build(kids[0], id, Role::Src, depth + 1, env);
                let n = &mut self.nodes[id as usize];
                n.children = vec![src];
                n.agg = Some(Box::new(Agg {
                    kind,
                    contribs: Vec::new(),
                    entries: Vec::new(),
                    env: env.to_vec(),
                    src_defined: true,
                    acc: Acc::new(kind),
                }));
                self.resync(id, None);
                let (val, viol) = self.recompute(id);
                let n = &mut self.nodes[id as usize];
                n.val = val;
                n.viol = viol;
            }
            _ => {
                let children: Vec<u32> = kids
                    .iter()
                    .enumerate()
                    .map(|(i, &k)| self.build(k, id, Role::Child(i as u32), depth + 1, env))
                    .collect();
                self.nodes[id as usize].children = children;
                let (val, viol) = self.compute(id);
                let n = &mut self.nodes[id as usize];
                n.val = val;
                n.viol = viol;
            }
        }
        if self.tmpls[tmpl as usize].link.is_some() {
            self.links.insert(id, None);
            self.fresh.push(id);
        }
        id
    }

    fn free(&mut self, id: u32) {
        let children = std::mem::take(&mut self.nodes[id as usize].children);
        let agg = self.nodes[id as usize].agg.take();
        for c in children {
            self.free(c);
        }
        if let Some(agg) = agg {
            for e in agg.entries {
                self.free_slot(e.slot);
                if e.guard != NONE {
                    self.free(e.guard);
                }
                self.free(e.body);
            }
        }
        match *self.kind(id) {
            TKind::Var(v) => self.var_leaves[v].retain(|&x| x != id),
            TKind::Bind(_) => {
                let s = self.nodes[id as usize].slot as usize;
                if self.slots[s].alive {
                    self.slots[s].subs.retain(|&x| x != id);
                }
            }
            _ => {}
        }
        if self.tmpls[self.nodes[id as usize].tmpl as usize].link.is_some() {
            self.links.remove(&id);
        }
        let n = &mut self.nodes[id as usize];
        n.alive = false;
        n.val = None;
        self.free_nodes.push(id);
    }

    fn free_slot(&mut self, s: u32) {
        let slot = &mut self.slots[s as usize];
        slot.alive = false;
        slot.subs = Vec::new();
        slot.value = Value::Bool(false);
        self.free_slots.push(s);
    }

    // ---- local recomputation

    fn contrib_of(&self, kind: AggKind, c: u32) -> Contrib {
        match kind {
            AggKind::Sum | AggKind::Min | AggKind::Max => Contrib::Int(self.val(c).map(Value::int)),
            AggKind::And | AggKind::Or => Contrib::Viol(self.viol(c)),
            AggKind::AllDiff => Contrib::Hash(self.val(c).map(Value::hash)),
        }
    }

    fn entry_contrib(&self, agg: &Agg, i: usize) -> Contrib {
        let e = &agg.entries[i];
        if e.guard != NONE && !self.truth(e.guard) {
            return Contrib::Absent;
        }
        self.contrib_of(agg.kind, e.body)
    }

    fn update_entry(&mut self, comp: u32, i: usize) {
        let agg = self.nodes[comp as usize].agg.as_ref().expect("aggregate");
        let new = self.entry_contrib(agg, i);
        let agg = self.nodes[comp as usize].agg.as_mut().expect("aggregate");
        let old = agg.contribs[i];
        if old != new {
            agg.acc.remove(old);
            agg.acc.add(new);
            agg.contribs[i] = new;
        }
    }

    fn update_item(&mut self, id: u32, i: usize) {
        let c = self.nodes[id as usize].children[i];
        let kind = self.nodes[id as usize].agg.as_ref().expect("aggregate").kind;
        let new = self.contrib_of(kind, c);
        let agg = self.nodes[id as usize].agg.as_mut().expect("aggregate");
        let old = agg.contribs[i];
        if old != new {
            agg.acc.remove(old);
            agg.acc.add(new);
            agg.contribs[i] = new;
        }
    }

    fn recompute(&self, id: u32) -> (Option<Value>, u64) {
        match &self.nodes[id as usize].agg {
            Some(agg) => {
                if !agg.src_defined {
                    return match agg.kind {
                        AggKind::Sum | AggKind::Min | AggKind::Max => (None, 0),
                        _ => undefined_bool(),
                    };
                }
                agg.acc.result(agg.kind)
            }
            None => self.compute(id),
        }
    }

    fn compute(&self, id: u32) -> (Option<Value>, u64) {
        let n = &self.nodes[id as usize];
        let t = &self.tmpls[n.tmpl as usize];
        let c = &n.children;
        let leaf = |r: Option<Value>| -> (Option<Value>, u64) {
            if !t.is_bool {
                return (r, 0);
            }
            match r {
                Some(Value::Bool(b)) => (Some(Value::Bool(b)), !b as u64),
                _ => undefined_bool(),
            }
        };
        match &t.kind {
            TKind::Neg => (self.val(c[0]).map(|v| Value::Int(v.int().checked_neg().expect("integer overflow"))), 0),
            TKind::Not => {
                let b = self.truth(c[0]);
                (Some(Value::Bool(!b)), b as u64)
            }
            TKind::Abs => (self.val(c[0]).map(|v| Value::Int(v.int().checked_abs().expect("integer overflow"))), 0),
            TKind::Card => (self.val(c[0]).map(|v| Value::Int(v.len() as i64)), 0),
            TKind::ToInt => (Some(Value::Int(self.truth(c[0]) as i64)), 0),
            TKind::Apply => leaf(match (self.val(c[0]), self.val(c[1])) {
                (Some(Value::Func(f)), Some(x)) => f.apply_to(x).cloned(),
                _ => None,
            }),
            TKind::Index => leaf(match (self.val(c[0]), self.val(c[1])) {
                (Some(Value::Seq(s)), Some(Value::Int(i))) if *i >= 1 && (*i as usize) <= s.len() => {
                    Some(s.elems()[*i as usize - 1].clone())
                }
                _ => None,
            }),
            TKind::Tuple => {
                let ms: Option<Vec<Value>> = c.iter().map(|&x| self.val(x).cloned()).collect();
                (ms.map(Value::tuple), 0)
            }
            TKind::Field(k) => leaf(match self.val(c[0]) {
                Some(Value::Tuple(tv)) => tv.members.get(*k).cloned(),
                _ => None,
            }),
            TKind::Parts => (
                self.val(c[0]).map(|v| match v {
                    Value::Part(p) => Value::Set(SetVal::from_values(p.parts().iter().cloned().map(Value::Set))),
                    other => panic!("parts of {other:?}"),
                }),
                0,
            ),
            TKind::Binary(op) => self.binary(*op, c[0], c[1]),
            TKind::Const(_) | TKind::Var(_) | TKind::Bind(_) | TKind::Items(_) | TKind::Comp { .. } => {
                unreachable!("not an operator node")
            }
        }
    }

    fn binary(&self, op: BinOp, a: u32, b: u32) -> (Option<Value>, u64) {
        match op {
            BinOp::And => return truth_viol(self.viol(a).saturating_add(self.viol(b)).min(UNDEFINED_VIOLATION)),
            BinOp::Or => return truth_viol(self.viol(a).min(self.viol(b))),
            BinOp::Imply => {
                let (p, q) = (self.truth(a), self.truth(b));
                return (Some(Value::Bool(!p || q)), (p as u64).min(self.viol(b)));
            }
            _ => {}
        }
        let (Some(x), Some(y)) = (self.val(a), self.val(b)) else {
            return match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod | BinOp::Union | BinOp::Intersect => {
                    (None, 0)
                }
                _ => undefined_bool(),
            };
        };
        let ints = || (x.int() as i128, y.int() as i128);
        let tv = |b: bool, v: u64| (Some(Value::Bool(b)), v);
        let arith = |r: Option<i64>| (r.map(Value::Int), 0);
        match op {
            BinOp::Add => arith(Some(x.int().checked_add(y.int()).expect("integer overflow"))),
            BinOp::Sub => arith(Some(x.int().checked_sub(y.int()).expect("integer overflow"))),
            BinOp::Mul => arith(Some(x.int().checked_mul(y.int()).expect("integer overflow"))),
            BinOp::Div => arith(floor_div(x.int(), y.int())),
            BinOp::Mod => arith(floor_mod(x.int(), y.int())),
            BinOp::Eq => match (x, y) {
                (Value::Int(p), Value::Int(q)) => tv(p == q, sat((*p as i128 - *q as i128).abs())),
                _ => {
                    let eq = x.hash() == y.hash();
                    tv(eq, !eq as u64)
                }
            },
            BinOp::Neq => {
                let eq = x.hash() == y.hash();
                tv(!eq, eq as u64)
            }
            BinOp::Lt => {
                let (p, q) = ints();
                tv(p < q, sat(p - q + 1))
            }
            BinOp::Le => {
                let (p, q) = ints();
                tv(p <= q, sat(p - q))
            }
            BinOp::Gt => {
                let (p, q) = ints();
                tv(p > q, sat(q - p + 1))
            }
            BinOp::Ge => {
                let (p, q) = ints();
                tv(p >= q, sat(q - p))
            }
            BinOp::In => {
                let inside = y.contains_hash(x.hash());
                tv(inside, !inside as u64)
            }
            BinOp::SubsetEq => {
                let missing = subset_missing(x, y);
                tv(missing == 0, missing.min(UNDEFINED_VIOLATION))
            }
            BinOp::Union | BinOp::Intersect => (Some(set_op(op == BinOp::Union, x, y)), 0),
            BinOp::And | BinOp::Or | BinOp::Imply => unreachable!(),
        }
    }

    // ---- propagation

    fn mark(&mut self, id: u32) {
        let n = &mut self.nodes[id as usize];
        if !n.dirty {
            n.dirty = true;
            self.heap.push((n.depth, id));
        }
    }

    /// `id` has a new value; tell its parent.
    fn changed(&mut self, id: u32, ev: Option<&Event>) {
        let n = &self.nodes[id as usize];
        let (parent, role) = (n.parent, n.role);
        if parent == NONE {
            return;
        }
        match role {
            Role::Root => {}
            Role::Src => {
                self.resync(parent, ev);
                self.mark(parent);
            }
            Role::Guard(i) | Role::Body(i) => {
                self.update_entry(parent, i as usize);
                self.mark(parent);
            }
            Role::Child(i) => {
                if matches!(self.kind(parent), TKind::Items(_)) {
                    self.update_item(parent, i as usize);
                }
                self.mark(parent);
            }
        }
    }

    /// Bring the entries of comprehension `comp` in line with its source.
    /// Entry `i` always mirrors member `i` of the source; `ev`, when the
    /// source is a leaf, narrows which positions need a hash comparison.
    fn resync(&mut self, comp: u32, ev: Option<&Event>) {
        let src = self.nodes[comp as usize].children[0];
        let leaf_src = matches!(self.kind(src), TKind::Var(_) | TKind::Bind(_));
        let (defined, len, shifts, is_func) = match self.val(src) {
            Some(v) => (true, v.len(), matches!(v, Value::Seq(_)), matches!(v, Value::Func(_))),
            None => (false, 0, false, false),
        };
        let old = self.nodes[comp as usize].agg.as_ref().unwrap().entries.len();
        let common = old.min(len);
        let mut inner: Option<(usize, &Event)> = None;
        let positions: Vec<usize> = match ev.filter(|_| leaf_src) {
            Some(Event::MemberChanged { index, inner: e, .. }) => {
                if !is_func {
                    inner = Some((*index, &**e));
                }
                vec![*index]
            }
            Some(Event::ValueAdded(i)) | Some(Event::ValueRemoved(i, _)) => {
                if shifts {
                    (*i..common).collect()
                } else {
                    vec![*i]
                }
            }
            Some(Event::PositionsSwapped(a, b)) => vec![*a, *b],
            Some(Event::SubsequenceChanged(s, e)) => (*s..*e).collect(),
            _ => (0..common).collect(),
        };
        for i in positions {
            if i >= common {
                continue;
            }
            let h = self.val(src).unwrap().member_hash(i);
            if h != self.nodes[comp as usize].agg.as_ref().unwrap().entries[i].hash {
                let e = inner.filter(|x| x.0 == i).map(|x| x.1);
                self.rebind(comp, i, e);
            }
        }
        while self.nodes[comp as usize].agg.as_ref().unwrap().entries.len() > len {
            self.destroy_entry(comp);
        }
        for i in old..len {
            self.create_entry(comp, i);
        }
        self.nodes[comp as usize].agg.as_mut().unwrap().src_defined = defined;
    }

    fn rebind(&mut self, comp: u32, i: usize, ev: Option<&Event>) {
        let src = self.nodes[comp as usize].children[0];
        let v = self.val(src).unwrap();
        let (m, h) = (v.member(i), v.member_hash(i));
        let e = &mut self.nodes[comp as usize].agg.as_mut().unwrap().entries[i];
        e.hash = h;
        let slot = e.slot;
        self.slots[slot as usize].value = m;
        let subs = self.slots[slot as usize].subs.clone();
        for s in subs {
            let n = &self.nodes[s as usize];
            if n.alive && n.slot == slot && matches!(self.kind(s), TKind::Bind(_)) {
                self.changed(s, ev);
            }
        }
    }

    fn create_entry(&mut self, comp: u32, i: usize) {
        let n = &self.nodes[comp as usize];
        let depth = n.depth + 1;
        let t = &self.tmpls[n.tmpl as usize];
        let TKind::Comp { binder, guard, .. } = t.kind else { unreachable!() };
        let (gt, bt) = (if guard { t.children[1] } else { NONE }, *t.children.last().unwrap());
        let src = n.children[0];
        let v = self.val(src).unwrap();
        let (m, h) = (v.member(i), v.member_hash(i));
        let slot = self.alloc_slot(m, comp, i as u32);
        let mut env = self.nodes[comp as usize].agg.as_ref().unwrap().env.clone();
        env.push((binder, slot));
        let g = if gt != NONE { self.build(gt, comp, Role::Guard(i as u32), depth, &env) } else { NONE };
        let body = self.build(bt, comp, Role::Body(i as u32), depth, &env);
        let agg = self.nodes[comp as usize].agg.as_mut().unwrap();
        agg.entries.push(Entry { slot, guard: g, body, hash: h });
        agg.contribs.push(Contrib::Absent);
        self.update_entry(comp, i);
    }

    fn destroy_entry(&mut self, comp: u32) {
        let agg = self.nodes[comp as usize].agg.as_mut().unwrap();
        let e = agg.entries.pop().unwrap();
        let c = agg.contribs.pop().unwrap();
        agg.acc.remove(c);
        self.free_slot(e.slot);
        if e.guard != NONE {
            self.free(e.guard);
        }
        self.free(e.body);
    }

    fn propagate(&mut self) {
        loop {
            while let Some((_, id)) = self.heap.pop() {
                let n = &mut self.nodes[id as usize];
                if !n.alive || !n.dirty {
                    continue;
                }
                n.dirty = false;
                let (val, viol) = self.recompute(id);
                let n = &mut self.nodes[id as usize];
                let same = n.viol == viol
                    && match (&n.val, &val) {
                        (None, None) => true,
                        (Some(a), Some(b)) => a.hash() == b.hash(),
                        _ => false,
                    };
                if !same {
                    n.val = val;
                    n.viol = viol;
                }
                if self.links.contains_key(&id) {
                    self.check_link(id);
                }
                if !same {
                    self.changed(id, None);
                }
            }
            for id in std::mem::take(&mut self.fresh) {
                if self.nodes[id as usize].alive && self.links.contains_key(&id) {
                    self.check_link(id);
                }
            }
            if !self.heap.is_empty() {
                continue;
            }
            if !self.links_enabled {
                self.pending.clear();
                return;
            }
            let Some((var, k, v)) = self.pending.pop_front() else { return };
            let current = match &self.vars[var] {
                Value::Func(f) => f.images().get(k).map(Value::int),
                Value::Seq(s) => s.elems().get(k).map(Value::int),
                _ => None,
            };
            if current.is_some_and(|c| c != v) {
                self.link_edits += 1;
                self.apply_logged(var, &[], Op::Replace(k, Value::Int(v))).expect("link target in range");
            }
        }
    }

    /// Fires the one-way link at `=` node `id` if its source side changed
    /// since last seen.
    fn check_link(&mut self, id: u32) {
        let n = &self.nodes[id as usize];
        let side = self.tmpls[n.tmpl as usize].link.expect("link node");
        let (tgt, src) = (n.children[side], n.children[1 - side]);
        let h = self.val(src).map(Value::hash);
        if self.links.insert(id, Some(h)) == Some(Some(h)) || !self.links_enabled {
            return;
        }
        if n.role == Role::Child(1) && n.parent != NONE {
            let p = n.parent;
            if matches!(self.kind(p), TKind::Binary(BinOp::Imply)) && !self.truth(self.nodes[p as usize].children[0]) {
                return;
            }
        }
        let Some(Value::Int(v)) = self.val(src) else { return };
        let v = *v;
        let tc = &self.nodes[tgt as usize].children;
        let TKind::Var(var) = *self.kind(tc[0]) else { return };
        if !self.link_doms[var].as_ref().is_some_and(|d| d.contains(v)) {
            return;
        }
        let Some(arg) = self.val(tc[1]) else { return };
        let k = match (&self.vars[var], arg) {
            (Value::Func(f), x) => f.slot_of(x),
            (Value::Seq(s), Value::Int(i)) if *i >= 1 && (*i as usize) <= s.len() => Some(*i as usize - 1),
            _ => None,
        };
        let Some(k) = k else { return };
        if self.fired.insert((var, k)) {
            self.pending.push_back((var, k, v));
        }
    }

    // ---- edits

    fn notify(&mut self, var: usize, ev: &Event) {
        self.version += 1;
        let leaves = self.var_leaves[var].clone();
        for l in leaves {
            if self.nodes[l as usize].alive && matches!(self.kind(l), TKind::Var(v) if *v == var) {
                self.changed(l, Some(ev));
            }
        }
    }

    fn apply_logged(&mut self, var: usize, path: &[usize], op: Op) -> Result<(), EditError> {
        let applied = self.vars[var].apply(path, op)?;
        if self.recording {
            self.undo.push(Undo::Edit { var, path: path.to_vec(), inverse: applied.inverse });
        }
        self.notify(var, &applied.event);
        self.propagate();
        Ok(())
    }

    /// Starts a move: later edits can be undone together with `revert`.
    pub fn begin(&mut self) {
        self.undo.clear();
        self.fired.clear();
        self.recording = true;
    }

    /// Applies one primitive edit to variable `var` and propagates it,
    /// including any one-way link it triggers.
    pub fn edit(&mut self, var: usize, path: &[usize], op: Op) -> Result<(), EditError> {
        self.apply_logged(var, path, op)
    }

    /// Replaces the whole value of `var`.
    pub fn set(&mut self, var: usize, value: Value) {
        let old = std::mem::replace(&mut self.vars[var], value);
        if self.recording {
            self.undo.push(Undo::Set { var, old });
        }
        self.notify(var, &Event::ValueChanged);
        self.propagate();
    }

    pub fn commit(&mut self) {
        self.undo.clear();
        self.recording = false;
    }

    /// Undoes every edit since `begin`, newest first.
    pub fn revert(&mut self) {
        self.links_enabled = false;
        while let Some(u) = self.undo.pop() {
            match u {
                Undo::Edit { var, path, inverse } => {
                    let applied = self.vars[var].apply(&path, inverse).expect("inverse edit applies");
                    self.notify(var, &applied.event);
                }
                Undo::Set { var, old } => {
                    self.vars[var] = old;
                    self.notify(var, &Event::ValueChanged);
                }
            }
            self.propagate();
        }
        self.links_enabled = true;
        self.recording = false;
    }

    // ---- queries

    pub fn assignment(&self) -> &[Value] {
        &self.vars
    }

    pub fn value(&self, var: usize) -> &Value {
        &self.vars[var]
    }

    /// Total violation, saturated at `UNDEFINED_VIOLATION`.
    pub fn violation(&self) -> u64 {
        self.viol(self.root)
    }

    pub fn constraint_violations(&self) -> Vec<u64> {
        self.nodes[self.root as usize].children.iter().map(|&c| self.viol(c)).collect()
    }

    /// Objective in the user's sign; `None` when absent or undefined.
    pub fn objective(&self) -> Option<i64> {
        self.objective.and_then(|o| self.val(o).map(Value::int))
    }

    /// Objective as a quantity to minimise; `i64::MAX` when undefined and 0
    /// without an objective.
    pub fn cost(&self) -> i64 {
        match self.objective {
            None => 0,
            Some(o) => match self.val(o) {
                None => i64::MAX,
                Some(v) if self.maximise => v.int().checked_neg().unwrap_or(i64::MAX),
                Some(v) => v.int(),
            },
        }
    }

    pub fn has_objective(&self) -> bool {
        self.objective.is_some()
    }

    pub fn live_nodes(&self) -> usize {
        self.nodes.len() - self.free_nodes.len()
    }

    /// Edits made by one-way links since construction.
    pub fn link_edits(&self) -> u64 {
        self.link_edits
    }

    /// The node tree as JSON, comprehension entries listed under their
    /// aggregate.
    pub fn dump(&self) -> serde_json::Value {
        let mut out = vec![self.dump_node(self.root)];
        if let Some(o) = self.objective {
            out.push(self.dump_node(o));
        }
        serde_json::Value::Array(out)
    }

    fn dump_node(&self, id: u32) -> serde_json::Value {
        let n = &self.nodes[id as usize];
        let op = match self.kind(id) {
            TKind::Const(_) => "const".to_string(),
            TKind::Var(v) => format!("var {v}"),
            TKind::Bind(b) => format!("bind {b}"),
            TKind::Neg => "-".into(),
            TKind::Not => "!".into(),
            TKind::Binary(op) => op.text().into(),
            TKind::Abs => "abs".into(),
            TKind::Card => "card".into(),
            TKind::ToInt => "toInt".into(),
            TKind::Apply => "apply".into(),
            TKind::Index => "index".into(),
            TKind::Tuple => "tuple".into(),
            TKind::Field(k) => format!("field {k}"),
            TKind::Parts => "parts".into(),
            TKind::Items(k) => format!("{k:?}"),
            TKind::Comp { kind, binder, .. } => format!("{kind:?} over binder {binder}"),
        };
        let mut children: Vec<serde_json::Value> = n.children.iter().map(|&c| self.dump_node(c)).collect();
        if let Some(agg) = &n.agg {
            for e in &agg.entries {
                let mut entry = serde_json::Map::new();
                if e.guard != NONE {
                    entry.insert("guard".into(), self.dump_node(e.guard));
                }
                entry.insert("body".into(), self.dump_node(e.body));
                children.push(serde_json::Value::Object(entry));
            }
        }
        json!({
            "op": op,
            "value": self.val(id).map(|v| v.to_plain().to_string()),
            "violation": self.viol(id),
            "children": children,
        })
    }
}

fn subset_missing(x: &Value, y: &Value) -> u64 {
    match (x, y) {
        (Value::Set(a), _) => a.elems().iter().filter(|e| !y.contains_hash(e.hash())).count() as u64,
        (Value::MSet(a), Value::MSet(b)) => {
            let mut seen = FxHashSet::default();
            let mut missing = 0u64;
            for e in a.elems() {
                let h = e.hash();
                if seen.insert(h) {
                    missing += a.count(h).saturating_sub(b.count(h)) as u64;
                }
            }
            missing
        }
        _ => panic!("subsetEq on {x:?} and {y:?}"),
    }
}

fn set_op(union: bool, x: &Value, y: &Value) -> Value {
    match (x, y) {
        (Value::Set(a), Value::Set(b)) => {
            if union {
                let mut s = a.clone();
                for e in b.elems() {
                    let _ = s.insert(e.clone());
                }
                Value::Set(s)
            } else {
                Value::Set(SetVal::from_values(a.elems().iter().filter(|e| b.contains(e)).cloned()))
            }
        }
        (Value::MSet(a), Value::MSet(b)) => {
            let mut seen = FxHashSet::default();
            let mut out = Vec::new();
            for e in a.elems().iter().chain(b.elems()) {
                let h = e.hash();
                if !seen.insert(h) {
                    continue;
                }
                let (ca, cb) = (a.count(h), b.count(h));
                let c = if union { ca.max(cb) } else { ca.min(cb) };
                out.extend(std::iter::repeat_n(e.clone(), c as usize));
            }
            Value::MSet(MSetVal::from_values(out))
        }
        _ => panic!("set operation on {x:?} and {y:?}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::scratch;
    use crate::eval::violation::Label;
    use crate::lang::{instantiate, parse_params, parse_spec};
    use crate::value::Plain;

    fn model(spec: &str, params: &str) -> Model {
        instantiate(&parse_spec(spec).unwrap(), &parse_params(params).unwrap()).unwrap()
    }

    fn check(e: &Engine, m: &Model) {
        let plain: Vec<Plain> = e.assignment().iter().map(Value::to_plain).collect();
        let s = scratch::evaluate(m, &plain);
        assert_eq!(e.constraint_violations(), s.constraint_violations);
        assert_eq!(e.violation(), s.violation);
        assert_eq!(e.objective(), s.objective);
    }

    #[test]
    fn worked_violation_example() {
        let m = model(
            include_str!("../../../../models/violation_example.spec"),
            include_str!("../../../../models/violation_example.param"),
        );
        let s = Plain::ints(&[1, 2, 3, 4, 6]).to_value(None);
        let mut e = Engine::new(&m, vec![Value::Int(1), s]);
        check(&e, &m);
        assert_eq!(e.constraint_violations(), vec![4, 2]);
        let vm = e.violations();
        assert_eq!(vm.var(0), 4);
        assert_eq!(vm.labels(0), vec![Label::TooSmall]);
        assert_eq!(vm.var(1), 3);
        let Value::Set(set) = e.value(1) else { panic!() };
        for (i, x) in set.elems().iter().enumerate() {
            assert_eq!(vm.at(1, &[i]), (x.int() % 2 == 0) as u64, "element {x:?}");
        }
    }

    #[test]
    fn edits_and_revert_track_scratch() {
        let m = model(
            "find s : set (maxSize 4) of int(1..6)\nfind f : function (total) int(1..3) --> int(0..4)\n\
             such that (sum i in s . f(((i - 1) % 3) + 1)) <= 5, allDiff([f(1), f(2)]),\n\
             forAll i in s . exists j : int(1..3) . f(j) = i\nminimising |s| - max([f(1), f(2), f(3)])",
            "",
        );
        let f = Plain::Func([(Plain::Int(1), Plain::Int(0)), (Plain::Int(2), Plain::Int(0)), (Plain::Int(3), Plain::Int(4))]
            .into_iter()
            .collect())
        .to_value(Some(&m.finds[1].domain));
        let mut e = Engine::new(&m, vec![Plain::ints(&[]).to_value(None), f]);
        check(&e, &m);
        e.begin();
        for x in [1, 5, 3] {
            e.edit(0, &[], Op::Insert(Value::Int(x))).unwrap();
            check(&e, &m);
        }
        e.edit(1, &[], Op::Replace(1, Value::Int(3))).unwrap();
        check(&e, &m);
        e.edit(0, &[], Op::Remove(0)).unwrap();
        check(&e, &m);
        e.revert();
        check(&e, &m);
        assert_eq!(e.value(0).len(), 0);
    }
}
