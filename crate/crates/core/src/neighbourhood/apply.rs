//! Applying a structure to the engine state: up to fifty attempts, each
//! built from primitive edits and rolled back if a type invariant breaks.

use std::rc::Rc;

use rand::Rng;

use super::{Structure, Template};
use crate::domain::{Domain, IntDomain};
use crate::eval::{Engine, ViolationMap};
use crate::value::generate::generate_with_retry_counted;
use crate::value::{Op, Value};

pub const MAX_ATTEMPTS: usize = 50;

/// Result of applying a structure. On `applied` the edits are pending in the
/// engine (between `begin` and `commit`/`revert`); otherwise the state is
/// unchanged. `cost` charges every attempt its generation resource, or 1
/// when it generated nothing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub applied: bool,
    pub attempts: usize,
    pub cost: i64,
}

struct Ctx<'a, R: Rng + ?Sized> {
    engine: &'a mut Engine,
    rng: &'a mut R,
    var: usize,
    vm: Option<Rc<ViolationMap>>,
    cost: i64,
    /// Paths whose attributes must be rechecked, with their level.
    touched: Vec<Vec<usize>>,
}

/// Tries up to `MAX_ATTEMPTS` times to make a type-valid move.
pub fn apply_structure<R: Rng + ?Sized>(ns: &Structure, engine: &mut Engine, rng: &mut R) -> Outcome {
    let vm = (ns.uses_violation() && engine.violation() > 0).then(|| engine.violations());
    let mut ctx = Ctx { engine, rng, var: ns.var, vm, cost: 0, touched: Vec::new() };
    let mut cost = 0;
    for attempt in 1..=MAX_ATTEMPTS {
        ctx.engine.begin();
        ctx.touched.clear();
        ctx.cost = 0;
        let ok = attempt_once(ns, &mut ctx).is_some() && ctx.valid(ns);
        cost += ctx.cost.max(1);
        if ok {
            return Outcome { applied: true, attempts: attempt, cost };
        }
        ctx.engine.revert();
    }
    Outcome { applied: false, attempts: MAX_ATTEMPTS, cost }
}

impl<R: Rng + ?Sized> Ctx<'_, R> {
    fn value(&self, path: &[usize]) -> &Value {
        self.engine.value(self.var).get(path)
    }

    fn edit(&mut self, path: &[usize], op: Op) -> Option<()> {
        self.engine.edit(self.var, path, op).ok()
    }

    /// Replaces the member at `path`, or the whole variable at the root.
    fn replace(&mut self, path: &[usize], v: Value) -> Option<()> {
        match path.split_last() {
            None => {
                self.engine.set(self.var, v);
                Some(())
            }
            Some((&i, parent)) => self.edit(parent, Op::Replace(i, v)),
        }
    }

    fn generate(&mut self, d: &Domain) -> Value {
        let (v, used, _) = generate_with_retry_counted(d, self.rng);
        self.cost += used;
        v
    }

    /// Member index of the container at `path`, weighted by one plus the
    /// violation attributed below each member.
    fn pick_biased(&mut self, path: &[usize], n: usize) -> usize {
        let kids = self.vm.as_ref().and_then(|m| m.children(self.var, path));
        let extra: u64 = kids.map_or(0, |k| k.range(..n).map(|(_, v)| *v).sum());
        if extra == 0 {
            return self.rng.random_range(0..n);
        }
        let r = self.rng.random_range(0..n as u64 + extra);
        if r < n as u64 {
            return r as usize;
        }
        let mut r = r - n as u64;
        for (&i, &v) in kids.unwrap().range(..n) {
            if r < v {
                return i;
            }
            r -= v;
        }
        unreachable!()
    }

    fn pick_other(&mut self, n: usize, i: usize) -> usize {
        let j = self.rng.random_range(0..n - 1);
        if j >= i {
            j + 1
        } else {
            j
        }
    }

    fn valid(&self, ns: &Structure) -> bool {
        self.touched.iter().all(|p| {
            (0..=p.len()).all(|l| l >= ns.domains.len() || domain_local_ok(self.value(&p[..l]), &ns.domains[l]))
        })
    }
}

/// Checks the attributes of `v` against `d` without descending into
/// members, which moves leave untouched unless reached by a path.
pub fn domain_local_ok(v: &Value, d: &Domain) -> bool {
    match (v, d) {
        (Value::Bool(_), Domain::Bool) => true,
        (Value::Int(i), Domain::Int(dom)) => dom.contains(*i),
        (Value::Int(i), Domain::Enum { names, .. }) => (0..names.len() as i64).contains(i),
        (Value::Tuple(_), Domain::Tuple(_)) => true,
        (Value::Set(_) | Value::MSet(_), Domain::Set { .. } | Domain::MSet { .. }) => {
            v.len() as u64 >= d.min_card() && d.max_card().is_none_or(|m| v.len() as u64 <= m)
        }
        (Value::Seq(s), Domain::Seq { card, injective, .. }) => {
            card.admits(s.len() as u64) && (!injective || s.repeats() == 0)
        }
        (Value::Func(f), Domain::Func { card, injective, total, .. }) => {
            let size_ok = if *total { f.len() as u64 == d.min_card() } else { card.admits(f.len() as u64) };
            size_ok && (!injective || f.repeats() == 0)
        }
        (Value::Part(p), Domain::Part { parts, part_size, regular, .. }) => {
            let sizes: Vec<usize> = p.parts().iter().map(|s| s.len()).collect();
            p.is_complete()
                && parts.admits(sizes.len() as u64)
                && sizes.iter().all(|&s| part_size.admits(s as u64))
                && (!regular || sizes.windows(2).all(|w| w[0] == w[1]))
        }
        _ => false,
    }
}

fn attempt_once<R: Rng + ?Sized>(ns: &Structure, c: &mut Ctx<'_, R>) -> Option<()> {
    let mut path = Vec::new();
    for (level, lift) in ns.lifts.iter().enumerate() {
        let n = c.value(&path).len();
        if n == 0 {
            return None;
        }
        let i = c.pick_biased(&path, n);
        if *lift == Template::LiftMultiple {
            if n < 2 {
                return None;
            }
            let j = c.pick_other(n, i);
            let (mut a, mut b) = (path.clone(), path.clone());
            a.push(i);
            b.push(j);
            c.touched.push(a.clone());
            c.touched.push(b.clone());
            return synchronised(ns.template, &ns.domains[level + 1], a, b, c);
        }
        path.push(i);
    }
    c.touched.push(path.clone());
    let d = ns.domains.last().unwrap();
    match ns.template {
        Template::BoolReassign => {
            let b = c.value(&path).boolean();
            c.replace(&path, Value::Bool(!b))
        }
        Template::EnumAssignRandom => {
            let Domain::Enum { names, .. } = d else { return None };
            let cur = c.value(&path).int();
            let k = c.rng.random_range(0..names.len() as i64 - 1);
            c.replace(&path, Value::Int(if k >= cur { k + 1 } else { k }))
        }
        Template::IntAssignRandom => {
            let Domain::Int(dom) = d else { return None };
            let v = other_int(dom, c.value(&path).int(), c.rng)?;
            c.replace(&path, Value::Int(v))
        }
        Template::IntAssignRandomFromViolation => {
            let Domain::Int(dom) = d else { return None };
            let v = c.vm.as_ref().map_or(0, |m| m.at(c.var, &path)).min(1 << 40) as i64;
            if v == 0 {
                return None;
            }
            let cur = c.value(&path).int();
            let k = c.rng.random_range(0..2 * v);
            let x = if k < v { cur - v + k } else { cur + k - v + 1 };
            if !dom.contains(x) {
                return None;
            }
            c.replace(&path, Value::Int(x))
        }
        Template::SetAdd | Template::MSetAdd => {
            if d.max_card().is_some_and(|m| c.value(&path).len() as u64 >= m) {
                return None;
            }
            let v = c.generate(d.inner()?);
            c.edit(&path, Op::Insert(v))
        }
        Template::SetRemove | Template::MSetRemove | Template::SeqRemove | Template::FuncRemove => {
            let n = c.value(&path).len();
            if n as u64 <= d.min_card() || n == 0 {
                return None;
            }
            let i = c.rng.random_range(0..n);
            c.edit(&path, Op::Remove(i))
        }
        Template::SeqAdd => {
            let n = c.value(&path).len();
            if d.max_card().is_some_and(|m| n as u64 >= m) {
                return None;
            }
            let v = c.generate(d.inner()?);
            let pos = c.rng.random_range(0..=n);
            c.edit(&path, Op::InsertAt(pos, v))
        }
        Template::SeqReverseSub => {
            let (s, e) = sub_range(c.value(&path).len(), c.rng)?;
            c.edit(&path, Op::Reverse(s, e))
        }
        Template::SeqPositionsSwap | Template::FuncSwap => {
            let n = c.value(&path).len();
            if n < 2 {
                return None;
            }
            let i = c.rng.random_range(0..n);
            let j = c.pick_other(n, i);
            c.edit(&path, Op::Swap(i, j))
        }
        Template::SeqReassignSub => {
            let (s, e) = sub_range(c.value(&path).len(), c.rng)?;
            let inner = d.inner()?.clone();
            for k in s..e {
                let v = c.generate(&inner);
                c.edit(&path, Op::Replace(k, v))?;
            }
            Some(())
        }
        Template::FuncAdd => {
            let Domain::Func { from, to, .. } = d else { return None };
            if d.max_card().is_some_and(|m| c.value(&path).len() as u64 >= m) {
                return None;
            }
            let p = c.generate(from);
            let img = c.generate(to);
            c.edit(&path, Op::FuncAdd(p, img))
        }
        Template::FuncUnifyImages => {
            let Value::Func(f) = c.value(&path) else { return None };
            let n = f.len();
            if n < 2 {
                return None;
            }
            let k = c.rng.random_range(0..n);
            let l = c.pick_other(n, k);
            let Value::Func(f) = c.value(&path) else { return None };
            if f.images()[k].hash() == f.images()[l].hash() {
                return None;
            }
            let img = f.images()[k].clone();
            c.edit(&path, Op::Replace(l, img))
        }
        Template::FuncSplitImages => {
            let Value::Func(f) = c.value(&path) else { return None };
            let n = f.len();
            if n < 2 || f.repeats() == 0 {
                return None;
            }
            let k = c.rng.random_range(0..n);
            let Value::Func(f) = c.value(&path) else { return None };
            let h = f.images()[k].hash();
            let same: Vec<usize> = (0..n).filter(|&l| l != k && f.images()[l].hash() == h).collect();
            if same.is_empty() {
                return None;
            }
            let l = same[c.rng.random_range(0..same.len())];
            let Domain::Func { to, .. } = d else { return None };
            let img = c.generate(to);
            if img.hash() == h {
                return None;
            }
            c.edit(&path, Op::Replace(l, img))
        }
        Template::FuncSwapAlongAxis => {
            let Domain::Func { from, .. } = d else { return None };
            let Domain::Tuple(axes) = &**from else { return None };
            let Value::Func(f) = c.value(&path) else { return None };
            let n = f.len();
            if n < 2 {
                return None;
            }
            let k = c.rng.random_range(0..n);
            let Value::Func(f) = c.value(&path) else { return None };
            let Value::Tuple(t) = f.preimage(k) else { return None };
            let axis = c.rng.random_range(0..axes.len());
            let mut members = t.members.clone();
            let cur = members[axis].clone();
            members[axis] = match &axes[axis] {
                Domain::Bool => Value::Bool(!cur.boolean()),
                Domain::Int(dom) => Value::Int(other_int(dom, cur.int(), c.rng)?),
                Domain::Enum { names, .. } if names.len() > 1 => {
                    let j = c.rng.random_range(0..names.len() as i64 - 1);
                    Value::Int(if j >= cur.int() { j + 1 } else { j })
                }
                _ => return None,
            };
            let Value::Func(f) = c.value(&path) else { return None };
            let l = f.slot_of(&Value::tuple(members))?;
            c.edit(&path, Op::Swap(k, l))
        }
        Template::PartMoveParts | Template::PartSwapParts | Template::PartMergeParts | Template::PartSplitPart => {
            partition_move(ns.template, &path, c)
        }
        Template::LiftSingle
        | Template::LiftMultiple
        | Template::SetMove
        | Template::SetCrossover
        | Template::SeqMove
        | Template::SeqCrossover
        | Template::FuncCrossover => unreachable!("not a leaf template"),
    }
}

/// A different value of `dom`, uniformly.
fn other_int<R: Rng + ?Sized>(dom: &IntDomain, cur: i64, rng: &mut R) -> Option<i64> {
    let n = dom.count();
    if n < 2 {
        return None;
    }
    let mut rank = 0u128;
    let mut found = false;
    for (lo, hi) in dom.intervals() {
        if cur >= lo && cur <= hi {
            rank += (cur - lo) as u128;
            found = true;
            break;
        }
        rank += (hi - lo) as u128 + 1;
    }
    if !found {
        return Some(dom.nth(rng.random_range(0..n)));
    }
    let k = rng.random_range(0..n - 1);
    Some(dom.nth(if k >= rank { k + 1 } else { k }))
}

/// Random contiguous range `s..e` of length 1 to `min(n, 8)`.
fn sub_range<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Option<(usize, usize)> {
    if n == 0 {
        return None;
    }
    let len = rng.random_range(1..=n.min(8));
    let s = rng.random_range(0..=n - len);
    Some((s, s + len))
}

fn synchronised<R: Rng + ?Sized>(t: Template, d: &Domain, a: Vec<usize>, b: Vec<usize>, c: &mut Ctx<'_, R>) -> Option<()> {
    let (na, nb) = (c.value(&a).len(), c.value(&b).len());
    match t {
        Template::SetMove | Template::SeqMove => {
            if na == 0 || (na as u64) <= d.min_card() || d.max_card().is_some_and(|m| nb as u64 >= m) {
                return None;
            }
            let i = c.rng.random_range(0..na);
            let v = c.value(&a).member(i);
            if t == Template::SetMove {
                if c.value(&b).contains_hash(v.hash()) {
                    return None;
                }
                c.edit(&a, Op::Remove(i))?;
                c.edit(&b, Op::Insert(v))
            } else {
                let pos = c.rng.random_range(0..=nb);
                c.edit(&a, Op::Remove(i))?;
                c.edit(&b, Op::InsertAt(pos, v))
            }
        }
        Template::SetCrossover => {
            if na == 0 || nb == 0 {
                return None;
            }
            let (i, j) = (c.rng.random_range(0..na), c.rng.random_range(0..nb));
            let (x, y) = (c.value(&a).member(i), c.value(&b).member(j));
            if c.value(&a).contains_hash(y.hash()) || c.value(&b).contains_hash(x.hash()) {
                return None;
            }
            c.edit(&a, Op::Replace(i, y))?;
            c.edit(&b, Op::Replace(j, x))
        }
        Template::SeqCrossover => {
            let n = na.min(nb);
            if n == 0 {
                return None;
            }
            let k = c.rng.random_range(0..n);
            let (x, y) = (c.value(&a).member(k), c.value(&b).member(k));
            if x.hash() == y.hash() {
                return None;
            }
            c.edit(&a, Op::Replace(k, y))?;
            c.edit(&b, Op::Replace(k, x))
        }
        Template::FuncCrossover => {
            if na == 0 {
                return None;
            }
            let k = c.rng.random_range(0..na);
            let (Value::Func(fa), Value::Func(fb)) = (c.value(&a), c.value(&b)) else { return None };
            let l = fb.slot_of(&fa.preimage(k))?;
            let (x, y) = (fa.images()[k].clone(), fb.images()[l].clone());
            if x.hash() == y.hash() {
                return None;
            }
            c.edit(&a, Op::Replace(k, y))?;
            c.edit(&b, Op::Replace(l, x))
        }
        _ => unreachable!("not a synchronised template"),
    }
}

fn partition_move<R: Rng + ?Sized>(t: Template, path: &[usize], c: &mut Ctx<'_, R>) -> Option<()> {
    let Value::Part(p) = c.value(path) else { return None };
    let np = p.num_parts();
    // element index (into the partition's element array) of member `pos` of part `q`
    let elem = |c: &Ctx<'_, R>, q: usize, pos: usize| -> usize {
        let Value::Part(p) = c.value(path) else { unreachable!() };
        p.elem_of(&p.parts()[q].elems()[pos]).expect("partition element")
    };
    let size = |c: &Ctx<'_, R>, q: usize| -> usize {
        let Value::Part(p) = c.value(path) else { unreachable!() };
        p.parts()[q].len()
    };
    match t {
        Template::PartMoveParts | Template::PartSwapParts | Template::PartMergeParts => {
            if np < 2 {
                return None;
            }
            let p1 = c.rng.random_range(0..np);
            let p2 = c.pick_other(np, p1);
            match t {
                Template::PartMoveParts => {
                    let k = c.rng.random_range(0..size(c, p1));
                    let e = elem(c, p1, k);
                    c.edit(path, Op::Detach(e))?;
                    c.edit(path, Op::Attach(e, p2))?;
                    if size(c, p1) == 0 {
                        c.edit(path, Op::DropEmpty(p1))?;
                    }
                    Some(())
                }
                Template::PartSwapParts => {
                    let (k1, k2) = (c.rng.random_range(0..size(c, p1)), c.rng.random_range(0..size(c, p2)));
                    let (e1, e2) = (elem(c, p1, k1), elem(c, p2, k2));
                    c.edit(path, Op::Detach(e1))?;
                    c.edit(path, Op::Detach(e2))?;
                    c.edit(path, Op::Attach(e1, p2))?;
                    c.edit(path, Op::Attach(e2, p1))
                }
                _ => {
                    while size(c, p2) > 0 {
                        let e = elem(c, p2, 0);
                        c.edit(path, Op::Detach(e))?;
                        c.edit(path, Op::Attach(e, p1))?;
                    }
                    c.edit(path, Op::DropEmpty(p2))
                }
            }
        }
        Template::PartSplitPart => {
            let p1 = c.rng.random_range(0..np);
            let n = size(c, p1);
            if n < 2 {
                return None;
            }
            let members: Vec<usize> = (0..n).map(|pos| elem(c, p1, pos)).collect();
            let moving: Vec<usize> = members.into_iter().filter(|_| c.rng.random_bool(0.5)).collect();
            if moving.is_empty() || moving.len() == n {
                return None;
            }
            c.edit(path, Op::Detach(moving[0]))?;
            c.edit(path, Op::NewPart(moving[0]))?;
            let Value::Part(p) = c.value(path) else { unreachable!() };
            let new = p.num_parts() - 1;
            for &e in &moving[1..] {
                c.edit(path, Op::Detach(e))?;
                c.edit(path, Op::Attach(e, new))?;
            }
            Some(())
        }
        _ => unreachable!(),
    }
}
