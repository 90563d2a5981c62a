//! Runtime values with size-proportional storage and cached incremental hashes.

pub mod generate;
pub mod hash;
pub mod plain;

use rustc_hash::FxHashMap;
use thiserror::Error;

use hash::{bool_hash, int_hash, mix, pair_hash, seq_term, tuple_hash};
pub use plain::Plain;

/// Label used for partition elements that are transiently outside every part.
pub const UNASSIGNED: usize = usize::MAX;

#[derive(Clone, Debug)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Tuple(TupleVal),
    Set(SetVal),
    MSet(MSetVal),
    Seq(SeqVal),
    Func(FuncVal),
    Part(PartVal),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EditError {
    #[error("element already present")]
    Duplicate,
    #[error("index {0} out of bounds")]
    OutOfBounds(usize),
    #[error("operation does not apply to this value")]
    Mismatch,
}

/// Fine-grained change notification produced by every primitive edit.
///
/// Set-like containers (sets, multisets, explicit functions, partition parts)
/// use swap semantics: `ValueRemoved(i)` moves the last element into `i`, and
/// `ValueAdded(i)` appends the new element then swaps it into `i`. Sequences
/// shift instead.
#[derive(Clone, Debug)]
pub enum Event {
    ValueChanged,
    BecameUndefined,
    BecameDefined,
    ValueAdded(usize),
    ValueRemoved(usize, Value),
    MemberChanged {
        index: usize,
        old_hash: u64,
        inner: Box<Event>,
    },
    /// Positions `start..end` of a sequence were rewritten.
    SubsequenceChanged(usize, usize),
    PositionsSwapped(usize, usize),
    MemberBecameDefined(usize),
    MemberBecameUndefined(usize),
}

/// A primitive edit applied to the container at the end of a path.
#[derive(Clone, Debug)]
pub enum Op {
    /// Append to a set or multiset.
    Insert(Value),
    /// Sequence: insert shifting later members. Set-like: append then swap into place.
    InsertAt(usize, Value),
    /// Sequence: remove shifting. Set-like: swap-remove.
    Remove(usize),
    /// Replace member `i` (set, multiset, sequence, function image, tuple member).
    Replace(usize, Value),
    /// Swap sequence positions or function images.
    Swap(usize, usize),
    /// Reverse sequence positions `start..end`.
    Reverse(usize, usize),
    FuncAdd(Value, Value),
    FuncRestore(usize, Value, Value),
    /// Take partition element `x` out of its part.
    Detach(usize),
    /// Append unassigned element `x` to part `p`.
    Attach(usize, usize),
    /// Put unassigned element `x` back at position `pos` of part `p`.
    AttachAt(usize, usize, usize),
    /// Open a new part holding the unassigned element `x`.
    NewPart(usize),
    /// Close the last part, leaving its members unassigned.
    PopPart,
    DropEmpty(usize),
    RestoreEmpty(usize),
}

pub struct Applied {
    pub event: Event,
    pub inverse: Op,
}

impl Value {
    pub fn hash(&self) -> u64 {
        match self {
            Value::Bool(b) => bool_hash(*b),
            Value::Int(i) => int_hash(*i),
            Value::Tuple(t) => t.hash,
            Value::Set(s) => s.hash,
            Value::MSet(m) => m.hash,
            Value::Seq(s) => s.hash,
            Value::Func(f) => f.hash,
            Value::Part(p) => p.hash,
        }
    }

    pub fn int(&self) -> i64 {
        match self {
            Value::Int(i) => *i,
            Value::Bool(b) => *b as i64,
            other => panic!("expected int, found {other:?}"),
        }
    }

    pub fn boolean(&self) -> bool {
        match self {
            Value::Bool(b) => *b,
            other => panic!("expected bool, found {other:?}"),
        }
    }

    pub fn tuple(members: Vec<Value>) -> Value {
        Value::Tuple(TupleVal::new(members))
    }

    /// Number of members for collections, parts for partitions.
    pub fn len(&self) -> usize {
        match self {
            Value::Tuple(t) => t.members.len(),
            Value::Set(s) => s.elems.len(),
            Value::MSet(m) => m.elems.len(),
            Value::Seq(s) => s.elems.len(),
            Value::Func(f) => f.images.len(),
            Value::Part(p) => p.parts.len(),
            _ => 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Member `i` as iterated by a comprehension: elements of sets,
    /// multisets and sequences, `(preimage, image)` pairs of functions and
    /// parts of partitions.
    pub fn member(&self, i: usize) -> Value {
        match self {
            Value::Set(s) => s.elems[i].clone(),
            Value::MSet(m) => m.elems[i].clone(),
            Value::Seq(s) => s.elems[i].clone(),
            Value::Func(f) => Value::tuple(vec![f.preimage(i), f.images[i].clone()]),
            Value::Part(p) => Value::Set(p.parts[i].clone()),
            Value::Tuple(t) => t.members[i].clone(),
            other => panic!("{other:?} has no members"),
        }
    }

    pub fn member_hash(&self, i: usize) -> u64 {
        match self {
            Value::Set(s) => s.elems[i].hash(),
            Value::MSet(m) => m.elems[i].hash(),
            Value::Seq(s) => s.elems[i].hash(),
            Value::Func(f) => pair_hash(f.preimage_hash(i), f.images[i].hash()),
            Value::Part(p) => p.parts[i].hash,
            Value::Tuple(t) => t.members[i].hash(),
            other => panic!("{other:?} has no members"),
        }
    }

    /// Membership test by hash for sets and multisets.
    pub fn contains_hash(&self, h: u64) -> bool {
        match self {
            Value::Set(s) => s.index.contains_key(&h),
            Value::MSet(m) => m.counts.contains_key(&h),
            Value::Seq(s) => s.counts.contains_key(&h),
            _ => false,
        }
    }

    pub fn to_plain(&self) -> Plain {
        plain::from_value(self)
    }

    pub fn get(&self, path: &[usize]) -> &Value {
        match path.split_first() {
            None => self,
            Some((&i, rest)) => self.child(i).get(rest),
        }
    }

    fn child(&self, i: usize) -> &Value {
        match self {
            Value::Tuple(t) => &t.members[i],
            Value::Set(s) => &s.elems[i],
            Value::MSet(m) => &m.elems[i],
            Value::Seq(s) => &s.elems[i],
            Value::Func(f) => &f.images[i],
            other => panic!("cannot descend into {other:?}"),
        }
    }

    /// Apply `op` to the container reached by `path`, keeping every cached
    /// hash and index on the way up consistent. A failed edit leaves the
    /// value untouched.
    pub fn apply(&mut self, path: &[usize], op: Op) -> Result<Applied, EditError> {
        match path.split_first() {
            None => self.apply_here(op),
            Some((&i, rest)) => {
                if i >= self.len() {
                    return Err(EditError::OutOfBounds(i));
                }
                let old = self.child(i).hash();
                let applied = self.child_mut(i).apply(rest, op)?;
                if let Err(e) = self.member_rehashed(i, old) {
                    self.child_mut(i).apply(rest, applied.inverse).expect("inverse edit");
                    return Err(e);
                }
                Ok(Applied {
                    event: Event::MemberChanged {
                        index: i,
                        old_hash: old,
                        inner: Box::new(applied.event),
                    },
                    inverse: applied.inverse,
                })
            }
        }
    }

    fn child_mut(&mut self, i: usize) -> &mut Value {
        match self {
            Value::Tuple(t) => &mut t.members[i],
            Value::Set(s) => &mut s.elems[i],
            Value::MSet(m) => &mut m.elems[i],
            Value::Seq(s) => &mut s.elems[i],
            Value::Func(f) => &mut f.images[i],
            other => panic!("cannot descend into {other:?}"),
        }
    }

    /// Member `i` changed its hash from `old`; refresh indexes and hashes.
    fn member_rehashed(&mut self, i: usize, old: u64) -> Result<(), EditError> {
        match self {
            Value::Tuple(t) => {
                t.rehash();
                Ok(())
            }
            Value::Set(s) => s.rehash_member(i, old),
            Value::MSet(m) => {
                m.rehash_member(i, old);
                Ok(())
            }
            Value::Seq(s) => {
                s.rehash_member(i, old);
                Ok(())
            }
            Value::Func(f) => {
                f.rehash_image(i, old);
                Ok(())
            }
            _ => Err(EditError::Mismatch),
        }
    }

    fn apply_here(&mut self, op: Op) -> Result<Applied, EditError> {
        match (self, op) {
            (Value::Tuple(t), Op::Replace(i, v)) => {
                let old = std::mem::replace(t.members.get_mut(i).ok_or(EditError::OutOfBounds(i))?, v);
                let old_hash = old.hash();
                t.rehash();
                Ok(member_replaced(i, old_hash, old))
            }
            (Value::Set(s), op) => s.apply(op),
            (Value::MSet(m), op) => m.apply(op),
            (Value::Seq(s), op) => s.apply(op),
            (Value::Func(f), op) => f.apply(op),
            (Value::Part(p), op) => p.apply(op),
            _ => Err(EditError::Mismatch),
        }
    }
}

fn member_replaced(i: usize, old_hash: u64, old: Value) -> Applied {
    Applied {
        event: Event::MemberChanged {
            index: i,
            old_hash,
            inner: Box::new(Event::ValueChanged),
        },
        inverse: Op::Replace(i, old),
    }
}

/// Hash of a value recomputed from scratch, ignoring every cache.
pub fn hash_value(v: &Value) -> u64 {
    match v {
        Value::Bool(b) => bool_hash(*b),
        Value::Int(i) => int_hash(*i),
        Value::Tuple(t) => tuple_hash(&t.members.iter().map(hash_value).collect::<Vec<_>>()),
        Value::Set(s) => s.elems.iter().fold(0u64, |a, e| a.wrapping_add(mix(hash_value(e)))),
        Value::MSet(m) => m.elems.iter().fold(0u64, |a, e| a.wrapping_add(mix(hash_value(e)))),
        Value::Seq(s) => s
            .elems
            .iter()
            .enumerate()
            .fold(0u64, |a, (i, e)| a.wrapping_add(seq_term(i + 1, hash_value(e)))),
        Value::Func(f) => (0..f.images.len()).fold(0u64, |a, k| {
            let pre = hash_value(&f.preimage(k));
            a.wrapping_add(mix(pair_hash(pre, hash_value(&f.images[k]))))
        }),
        Value::Part(p) => p.parts.iter().fold(0u64, |a, part| {
            let hp = part.elems.iter().fold(0u64, |x, e| x.wrapping_add(mix(hash_value(e))));
            a.wrapping_add(mix(hp))
        }),
    }
}

#[derive(Clone, Debug)]
pub struct TupleVal {
    pub members: Vec<Value>,
    hash: u64,
}

impl TupleVal {
    pub fn new(members: Vec<Value>) -> Self {
        let mut t = TupleVal { members, hash: 0 };
        t.rehash();
        t
    }

    fn rehash(&mut self) {
        self.hash = tuple_hash(&self.members.iter().map(Value::hash).collect::<Vec<_>>());
    }
}

fn add_count(counts: &mut FxHashMap<u64, u32>, h: u64) -> u32 {
    let c = counts.entry(h).or_insert(0);
    *c += 1;
    *c
}

fn sub_count(counts: &mut FxHashMap<u64, u32>, h: u64) -> u32 {
    let c = counts.get_mut(&h).expect("counted member");
    *c -= 1;
    let left = *c;
    if left == 0 {
        counts.remove(&h);
    }
    left
}

/// Set with insertion-ordered storage and a hash → position index.
#[derive(Clone, Debug, Default)]
pub struct SetVal {
    elems: Vec<Value>,
    index: FxHashMap<u64, usize>,
    hash: u64,
}

impl SetVal {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set, silently dropping members whose hash is already present.
    pub fn from_values(values: impl IntoIterator<Item = Value>) -> Self {
        let mut s = SetVal::new();
        for v in values {
            let _ = s.insert(v);
        }
        s
    }

    /// Builds a set without duplicate detection; only for exercising the
    /// structural verifier.
    pub fn from_vec_unchecked(elems: Vec<Value>) -> Self {
        let mut s = SetVal::new();
        for v in elems {
            let h = v.hash();
            s.index.insert(h, s.elems.len());
            s.hash = s.hash.wrapping_add(mix(h));
            s.elems.push(v);
        }
        s
    }

    pub fn elems(&self) -> &[Value] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn hash(&self) -> u64 {
        self.hash
    }

    pub fn position(&self, h: u64) -> Option<usize> {
        self.index.get(&h).copied()
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.index.contains_key(&v.hash())
    }

    pub fn insert(&mut self, v: Value) -> Result<usize, EditError> {
        let h = v.hash();
        if self.index.contains_key(&h) {
            return Err(EditError::Duplicate);
        }
        let i = self.elems.len();
        self.index.insert(h, i);
        self.hash = self.hash.wrapping_add(mix(h));
        self.elems.push(v);
        Ok(i)
    }

    pub fn swap_remove(&mut self, i: usize) -> Value {
        let v = self.elems.swap_remove(i);
        let h = v.hash();
        self.index.remove(&h);
        self.hash = self.hash.wrapping_sub(mix(h));
        if i < self.elems.len() {
            self.index.insert(self.elems[i].hash(), i);
        }
        v
    }

    fn insert_at(&mut self, i: usize, v: Value) -> Result<(), EditError> {
        if i > self.elems.len() {
            return Err(EditError::OutOfBounds(i));
        }
        let last = self.insert(v)?;
        self.elems.swap(i, last);
        self.index.insert(self.elems[i].hash(), i);
        self.index.insert(self.elems[last].hash(), last);
        Ok(())
    }

    fn rehash_member(&mut self, i: usize, old: u64) -> Result<(), EditError> {
        let new = self.elems[i].hash();
        if new == old {
            return Ok(());
        }
        if self.index.contains_key(&new) {
            return Err(EditError::Duplicate);
        }
        self.index.remove(&old);
        self.index.insert(new, i);
        self.hash = self.hash.wrapping_sub(mix(old)).wrapping_add(mix(new));
        Ok(())
    }

    fn apply(&mut self, op: Op) -> Result<Applied, EditError> {
        match op {
            Op::Insert(v) => {
                let i = self.insert(v)?;
                Ok(Applied { event: Event::ValueAdded(i), inverse: Op::Remove(i) })
            }
            Op::InsertAt(i, v) => {
                self.insert_at(i, v)?;
                Ok(Applied { event: Event::ValueAdded(i), inverse: Op::Remove(i) })
            }
            Op::Remove(i) => {
                if i >= self.elems.len() {
                    return Err(EditError::OutOfBounds(i));
                }
                let v = self.swap_remove(i);
                Ok(Applied { event: Event::ValueRemoved(i, v.clone()), inverse: Op::InsertAt(i, v) })
            }
            Op::Replace(i, v) => {
                if i >= self.elems.len() {
                    return Err(EditError::OutOfBounds(i));
                }
                let old_hash = self.elems[i].hash();
                let old = std::mem::replace(&mut self.elems[i], v);
                if let Err(e) = self.rehash_member(i, old_hash) {
                    self.elems[i] = old;
                    return Err(e);
                }
                Ok(member_replaced(i, old_hash, old))
            }
            _ => Err(EditError::Mismatch),
        }
    }
}

/// Multiset storing each occurrence separately plus per-hash counts.
#[derive(Clone, Debug, Default)]
pub struct MSetVal {
    elems: Vec<Value>,
    counts: FxHashMap<u64, u32>,
    hash: u64,
}

impl MSetVal {
    pub fn from_values(values: impl IntoIterator<Item = Value>) -> Self {
        let mut m = MSetVal::default();
        for v in values {
            m.push(v);
        }
        m
    }

    pub fn elems(&self) -> &[Value] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn count(&self, h: u64) -> u32 {
        self.counts.get(&h).copied().unwrap_or(0)
    }

    fn push(&mut self, v: Value) -> usize {
        let h = v.hash();
        add_count(&mut self.counts, h);
        self.hash = self.hash.wrapping_add(mix(h));
        self.elems.push(v);
        self.elems.len() - 1
    }

    fn rehash_member(&mut self, i: usize, old: u64) {
        let new = self.elems[i].hash();
        sub_count(&mut self.counts, old);
        add_count(&mut self.counts, new);
        self.hash = self.hash.wrapping_sub(mix(old)).wrapping_add(mix(new));
    }

    fn apply(&mut self, op: Op) -> Result<Applied, EditError> {
        match op {
            Op::Insert(v) => {
                let i = self.push(v);
                Ok(Applied { event: Event::ValueAdded(i), inverse: Op::Remove(i) })
            }
            Op::InsertAt(i, v) => {
                if i > self.elems.len() {
                    return Err(EditError::OutOfBounds(i));
                }
                let last = self.push(v);
                self.elems.swap(i, last);
                Ok(Applied { event: Event::ValueAdded(i), inverse: Op::Remove(i) })
            }
            Op::Remove(i) => {
                if i >= self.elems.len() {
                    return Err(EditError::OutOfBounds(i));
                }
                let v = self.elems.swap_remove(i);
                let h = v.hash();
                sub_count(&mut self.counts, h);
                self.hash = self.hash.wrapping_sub(mix(h));
                Ok(Applied { event: Event::ValueRemoved(i, v.clone()), inverse: Op::InsertAt(i, v) })
            }
            Op::Replace(i, v) => {
                if i >= self.elems.len() {
                    return Err(EditError::OutOfBounds(i));
                }
                let old_hash = self.elems[i].hash();
                let old = std::mem::replace(&mut self.elems[i], v);
                self.rehash_member(i, old_hash);
                Ok(member_replaced(i, old_hash, old))
            }
            _ => Err(EditError::Mismatch),
        }
    }
}

/// Sequence with per-hash counts so injectivity is checkable in O(1).
#[derive(Clone, Debug, Default)]
pub struct SeqVal {
    elems: Vec<Value>,
    counts: FxHashMap<u64, u32>,
    repeats: usize,
    hash: u64,
}

impl SeqVal {
    pub fn from_values(values: impl IntoIterator<Item = Value>) -> Self {
        let mut s = SeqVal::default();
        for v in values {
            let h = v.hash();
            if add_count(&mut s.counts, h) > 1 {
                s.repeats += 1;
            }
            s.hash = s.hash.wrapping_add(seq_term(s.elems.len() + 1, h));
            s.elems.push(v);
        }
        s
    }

    pub fn elems(&self) -> &[Value] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// Number of members that repeat an earlier value; 0 iff injective.
    pub fn repeats(&self) -> usize {
        self.repeats
    }

    fn count_in(&mut self, h: u64) {
        if add_count(&mut self.counts, h) > 1 {
            self.repeats += 1;
        }
    }

    fn count_out(&mut self, h: u64) {
        if sub_count(&mut self.counts, h) > 0 {
            self.repeats -= 1;
        }
    }

    fn terms(&self, from: usize, to: usize) -> u64 {
        (from..to).fold(0u64, |a, i| a.wrapping_add(seq_term(i + 1, self.elems[i].hash())))
    }

    fn rehash_member(&mut self, i: usize, old: u64) {
        let new = self.elems[i].hash();
        self.count_out(old);
        self.count_in(new);
        self.hash = self
            .hash
            .wrapping_sub(seq_term(i + 1, old))
            .wrapping_add(seq_term(i + 1, new));
    }

    fn apply(&mut self, op: Op) -> Result<Applied, EditError> {
        let n = self.elems.len();
        match op {
            Op::InsertAt(i, v) => {
                if i > n {
                    return Err(EditError::OutOfBounds(i));
                }
                let before = self.terms(i, n);
                self.count_in(v.hash());
                self.elems.insert(i, v);
                let after = self.terms(i, n + 1);
                self.hash = self.hash.wrapping_sub(before).wrapping_add(after);
                Ok(Applied { event: Event::ValueAdded(i), inverse: Op::Remove(i) })
            }
            Op::Insert(v) => self.apply(Op::InsertAt(n, v)),
            Op::Remove(i) => {
                if i >= n {
                    return Err(EditError::OutOfBounds(i));
                }
                let before = self.terms(i, n);
                let v = self.elems.remove(i);
                self.count_out(v.hash());
                let after = self.terms(i, n - 1);
                self.hash = self.hash.wrapping_sub(before).wrapping_add(after);
                Ok(Applied { event: Event::ValueRemoved(i, v.clone()), inverse: Op::InsertAt(i, v) })
            }
            Op::Replace(i, v) => {
                if i >= n {
                    return Err(EditError::OutOfBounds(i));
                }
                let old_hash = self.elems[i].hash();
                let old = std::mem::replace(&mut self.elems[i], v);
                self.rehash_member(i, old_hash);
                Ok(member_replaced(i, old_hash, old))
            }
            Op::Swap(i, j) => {
                if i >= n || j >= n {
                    return Err(EditError::OutOfBounds(i.max(j)));
                }
                let (hi, hj) = (self.elems[i].hash(), self.elems[j].hash());
                self.elems.swap(i, j);
                self.hash = self
                    .hash
                    .wrapping_sub(seq_term(i + 1, hi))
                    .wrapping_sub(seq_term(j + 1, hj))
                    .wrapping_add(seq_term(i + 1, hj))
                    .wrapping_add(seq_term(j + 1, hi));
                Ok(Applied { event: Event::PositionsSwapped(i, j), inverse: Op::Swap(i, j) })
            }
            Op::Reverse(s, e) => {
                if s > e || e > n {
                    return Err(EditError::OutOfBounds(e));
                }
                let before = self.terms(s, e);
                self.elems[s..e].reverse();
                let after = self.terms(s, e);
                self.hash = self.hash.wrapping_sub(before).wrapping_add(after);
                Ok(Applied { event: Event::SubsequenceChanged(s, e), inverse: Op::Reverse(s, e) })
            }
            _ => Err(EditError::Mismatch),
        }
    }
}

/// Preimage storage: computed indexing over contiguous integer (or tuple of
/// integer) ranges, or an explicit array with a hash index.
#[derive(Clone, Debug)]
pub enum Preimages {
    /// Each dimension is an inclusive range; a single dimension means an
    /// integer preimage, several mean a tuple preimage (first dimension most
    /// significant).
    Direct { dims: Vec<(i64, i64)>, tuple: bool },
    Explicit { pre: Vec<Value>, index: FxHashMap<u64, usize> },
}

#[derive(Clone, Debug)]
pub struct FuncVal {
    pre: Preimages,
    images: Vec<Value>,
    image_counts: FxHashMap<u64, u32>,
    repeats: usize,
    hash: u64,
}

impl FuncVal {
    /// Total function over the given ranges with images listed in preimage order.
    pub fn direct(dims: Vec<(i64, i64)>, tuple: bool, images: Vec<Value>) -> Self {
        let mut f = FuncVal {
            pre: Preimages::Direct { dims, tuple },
            images: Vec::new(),
            image_counts: FxHashMap::default(),
            repeats: 0,
            hash: 0,
        };
        for img in images {
            let k = f.images.len();
            f.count_in(img.hash());
            f.images.push(img);
            f.hash = f.hash.wrapping_add(f.term(k));
        }
        f
    }

    /// Function stored as explicit (preimage, image) pairs; later duplicates
    /// of a preimage are dropped.
    pub fn explicit(pairs: impl IntoIterator<Item = (Value, Value)>) -> Self {
        let mut f = FuncVal {
            pre: Preimages::Explicit { pre: Vec::new(), index: FxHashMap::default() },
            images: Vec::new(),
            image_counts: FxHashMap::default(),
            repeats: 0,
            hash: 0,
        };
        for (p, i) in pairs {
            let _ = f.add(p, i);
        }
        f
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.pre, Preimages::Direct { .. })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[Value] {
        &self.images
    }

    pub fn repeats(&self) -> usize {
        self.repeats
    }

    pub fn preimage(&self, k: usize) -> Value {
        match &self.pre {
            Preimages::Explicit { pre, .. } => pre[k].clone(),
            Preimages::Direct { dims, tuple } => {
                if !tuple {
                    return Value::Int(dims[0].0 + k as i64);
                }
                let mut rest = k as i64;
                let mut coords = vec![0i64; dims.len()];
                for (d, &(lo, hi)) in dims.iter().enumerate().rev() {
                    let w = hi - lo + 1;
                    coords[d] = lo + rest % w;
                    rest /= w;
                }
                Value::tuple(coords.into_iter().map(Value::Int).collect())
            }
        }
    }

    pub fn preimage_hash(&self, k: usize) -> u64 {
        match &self.pre {
            Preimages::Explicit { pre, .. } => pre[k].hash(),
            Preimages::Direct { tuple: false, dims } => int_hash(dims[0].0 + k as i64),
            Preimages::Direct { .. } => self.preimage(k).hash(),
        }
    }

    /// Storage slot of preimage `x`, if defined.
    pub fn slot_of(&self, x: &Value) -> Option<usize> {
        match &self.pre {
            Preimages::Explicit { index, .. } => index.get(&x.hash()).copied(),
            Preimages::Direct { dims, tuple } => {
                let coords: Vec<i64> = if *tuple {
                    match x {
                        Value::Tuple(t) if t.members.len() == dims.len() => {
                            t.members.iter().map(|m| m.int()).collect()
                        }
                        _ => return None,
                    }
                } else {
                    vec![x.int()]
                };
                let mut k: i64 = 0;
                for (c, &(lo, hi)) in coords.iter().zip(dims) {
                    if *c < lo || *c > hi {
                        return None;
                    }
                    k = k * (hi - lo + 1) + (c - lo);
                }
                Some(k as usize)
            }
        }
    }

    pub fn apply_to(&self, x: &Value) -> Option<&Value> {
        self.slot_of(x).map(|k| &self.images[k])
    }

    fn term(&self, k: usize) -> u64 {
        mix(pair_hash(self.preimage_hash(k), self.images[k].hash()))
    }

    fn count_in(&mut self, h: u64) {
        if add_count(&mut self.image_counts, h) > 1 {
            self.repeats += 1;
        }
    }

    fn count_out(&mut self, h: u64) {
        if sub_count(&mut self.image_counts, h) > 0 {
            self.repeats -= 1;
        }
    }

    fn rehash_image(&mut self, k: usize, old: u64) {
        let new = self.images[k].hash();
        self.count_out(old);
        self.count_in(new);
        let pre = self.preimage_hash(k);
        self.hash = self
            .hash
            .wrapping_sub(mix(pair_hash(pre, old)))
            .wrapping_add(mix(pair_hash(pre, new)));
    }

    fn add(&mut self, p: Value, img: Value) -> Result<usize, EditError> {
        let Preimages::Explicit { pre, index } = &mut self.pre else {
            return Err(EditError::Mismatch);
        };
        let h = p.hash();
        if index.contains_key(&h) {
            return Err(EditError::Duplicate);
        }
        let k = pre.len();
        index.insert(h, k);
        pre.push(p);
        self.count_in(img.hash());
        self.images.push(img);
        self.hash = self.hash.wrapping_add(self.term(k));
        Ok(k)
    }

    fn apply(&mut self, op: Op) -> Result<Applied, EditError> {
        let n = self.images.len();
        match op {
            Op::Replace(k, v) => {
                if k >= n {
                    return Err(EditError::OutOfBounds(k));
                }
                let old_hash = self.images[k].hash();
                let old = std::mem::replace(&mut self.images[k], v);
                self.rehash_image(k, old_hash);
                Ok(member_replaced(k, old_hash, old))
            }
            Op::Swap(k, l) => {
                if k >= n || l >= n {
                    return Err(EditError::OutOfBounds(k.max(l)));
                }
                let before = self.term(k).wrapping_add(if k == l { 0 } else { self.term(l) });
                self.images.swap(k, l);
                let after = self.term(k).wrapping_add(if k == l { 0 } else { self.term(l) });
                self.hash = self.hash.wrapping_sub(before).wrapping_add(after);
                Ok(Applied { event: Event::PositionsSwapped(k, l), inverse: Op::Swap(k, l) })
            }
            Op::FuncAdd(p, img) => {
                let k = self.add(p, img)?;
                Ok(Applied { event: Event::ValueAdded(k), inverse: Op::Remove(k) })
            }
            Op::FuncRestore(k, p, img) => {
                if k > n {
                    return Err(EditError::OutOfBounds(k));
                }
                let last = self.add(p, img)?;
                self.swap_slots(k, last);
                Ok(Applied { event: Event::ValueAdded(k), inverse: Op::Remove(k) })
            }
            Op::Remove(k) => {
                if k >= n {
                    return Err(EditError::OutOfBounds(k));
                }
                let term = self.term(k);
                let Preimages::Explicit { pre, index } = &mut self.pre else {
                    return Err(EditError::Mismatch);
                };
                let p = pre.swap_remove(k);
                index.remove(&p.hash());
                if k < pre.len() {
                    index.insert(pre[k].hash(), k);
                }
                let img = self.images.swap_remove(k);
                self.count_out(img.hash());
                self.hash = self.hash.wrapping_sub(term);
                let removed = Value::tuple(vec![p.clone(), img.clone()]);
                Ok(Applied { event: Event::ValueRemoved(k, removed), inverse: Op::FuncRestore(k, p, img) })
            }
            _ => Err(EditError::Mismatch),
        }
    }

    fn swap_slots(&mut self, k: usize, l: usize) {
        if let Preimages::Explicit { pre, index } = &mut self.pre {
            pre.swap(k, l);
            index.insert(pre[k].hash(), k);
            index.insert(pre[l].hash(), l);
        }
        self.images.swap(k, l);
    }
}

/// Partition over a fixed element array `e`, with a part label per element
/// and one hashed set per part; `h_p[i]` is the hash of part `i`.
#[derive(Clone, Debug)]
pub struct PartVal {
    elems: Vec<Value>,
    labels: Vec<usize>,
    parts: Vec<SetVal>,
    elem_index: FxHashMap<u64, usize>,
    hash: u64,
    hp_updates: u64,
}

impl PartVal {
    /// Builds a partition from parts given as lists of element values.
    pub fn from_parts(parts: Vec<Vec<Value>>) -> Self {
        let mut p = PartVal {
            elems: Vec::new(),
            labels: Vec::new(),
            parts: Vec::new(),
            elem_index: FxHashMap::default(),
            hash: 0,
            hp_updates: 0,
        };
        for members in parts {
            let label = p.parts.len();
            let mut set = SetVal::new();
            for v in members {
                if p.elem_index.contains_key(&v.hash()) {
                    continue;
                }
                p.elem_index.insert(v.hash(), p.elems.len());
                p.labels.push(label);
                p.elems.push(v.clone());
                set.insert(v).expect("fresh element");
            }
            p.hash = p.hash.wrapping_add(mix(set.hash));
            p.parts.push(set);
        }
        p
    }

    pub fn elems(&self) -> &[Value] {
        &self.elems
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn parts(&self) -> &[SetVal] {
        &self.parts
    }

    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    /// The per-part hash array `h_p`.
    pub fn part_hashes(&self) -> Vec<u64> {
        self.parts.iter().map(|s| s.hash).collect()
    }

    /// How many times any `h_p` entry has been updated incrementally.
    pub fn hp_updates(&self) -> u64 {
        self.hp_updates
    }

    pub fn elem_of(&self, v: &Value) -> Option<usize> {
        self.elem_index.get(&v.hash()).copied()
    }

    /// Element index and its position inside its part.
    pub fn locate(&self, x: usize) -> Option<(usize, usize)> {
        let label = self.labels[x];
        if label == UNASSIGNED {
            return None;
        }
        let pos = self.parts[label].position(self.elems[x].hash()).expect("indexed member");
        Some((label, pos))
    }

    fn part_changed(&mut self, p: usize, old: u64) {
        self.hp_updates += 1;
        self.hash = self.hash.wrapping_sub(mix(old)).wrapping_add(mix(self.parts[p].hash));
    }

    fn detach(&mut self, x: usize) -> Result<Applied, EditError> {
        let (label, pos) = self.locate(x).ok_or(EditError::Mismatch)?;
        let old = self.parts[label].hash;
        let v = self.parts[label].swap_remove(pos);
        self.part_changed(label, old);
        self.labels[x] = UNASSIGNED;
        Ok(Applied {
            event: Event::MemberChanged {
                index: label,
                old_hash: old,
                inner: Box::new(Event::ValueRemoved(pos, v)),
            },
            inverse: Op::AttachAt(x, label, pos),
        })
    }

    fn attach(&mut self, x: usize, label: usize, pos: Option<usize>) -> Result<Applied, EditError> {
        if x >= self.elems.len() || self.labels[x] != UNASSIGNED {
            return Err(EditError::Mismatch);
        }
        if label >= self.parts.len() {
            return Err(EditError::OutOfBounds(label));
        }
        let old = self.parts[label].hash;
        let v = self.elems[x].clone();
        let at = match pos {
            Some(p) => {
                self.parts[label].insert_at(p, v)?;
                p
            }
            None => self.parts[label].insert(v)?,
        };
        self.part_changed(label, old);
        self.labels[x] = label;
        Ok(Applied {
            event: Event::MemberChanged {
                index: label,
                old_hash: old,
                inner: Box::new(Event::ValueAdded(at)),
            },
            inverse: Op::Detach(x),
        })
    }

    /// Swap-remove part `p`, relabelling the part moved into its slot.
    fn remove_part(&mut self, p: usize) -> SetVal {
        let set = self.parts.swap_remove(p);
        self.hash = self.hash.wrapping_sub(mix(set.hash));
        if p < self.parts.len() {
            for v in self.parts[p].elems.iter() {
                let x = self.elem_index[&v.hash()];
                self.labels[x] = p;
            }
        }
        set
    }

    fn push_part(&mut self, set: SetVal) -> usize {
        self.hash = self.hash.wrapping_add(mix(set.hash));
        self.parts.push(set);
        self.parts.len() - 1
    }

    fn apply(&mut self, op: Op) -> Result<Applied, EditError> {
        match op {
            Op::Detach(x) => {
                if x >= self.elems.len() {
                    return Err(EditError::OutOfBounds(x));
                }
                self.detach(x)
            }
            Op::Attach(x, p) => self.attach(x, p, None),
            Op::AttachAt(x, p, pos) => self.attach(x, p, Some(pos)),
            Op::NewPart(x) => {
                if x >= self.elems.len() || self.labels[x] != UNASSIGNED {
                    return Err(EditError::Mismatch);
                }
                let mut set = SetVal::new();
                set.insert(self.elems[x].clone()).expect("fresh part");
                let p = self.push_part(set);
                self.labels[x] = p;
                Ok(Applied { event: Event::ValueAdded(p), inverse: Op::PopPart })
            }
            Op::PopPart => {
                let p = self.parts.len().checked_sub(1).ok_or(EditError::OutOfBounds(0))?;
                if self.parts[p].len() != 1 {
                    return Err(EditError::Mismatch);
                }
                let set = self.remove_part(p);
                let x = self.elem_index[&set.elems[0].hash()];
                self.labels[x] = UNASSIGNED;
                Ok(Applied { event: Event::ValueRemoved(p, Value::Set(set)), inverse: Op::NewPart(x) })
            }
            Op::DropEmpty(p) => {
                if p >= self.parts.len() || !self.parts[p].is_empty() {
                    return Err(EditError::Mismatch);
                }
                let set = self.remove_part(p);
                Ok(Applied { event: Event::ValueRemoved(p, Value::Set(set)), inverse: Op::RestoreEmpty(p) })
            }
            Op::RestoreEmpty(p) => {
                if p > self.parts.len() {
                    return Err(EditError::OutOfBounds(p));
                }
                let last = self.push_part(SetVal::new());
                self.parts.swap(p, last);
                for q in [p, last] {
                    for v in self.parts[q].elems.iter() {
                        let x = self.elem_index[&v.hash()];
                        self.labels[x] = q;
                    }
                }
                Ok(Applied { event: Event::ValueAdded(p), inverse: Op::DropEmpty(p) })
            }
            _ => Err(EditError::Mismatch),
        }
    }

    /// True when every element sits in a part and no part is empty.
    pub fn is_complete(&self) -> bool {
        self.labels.iter().all(|&l| l != UNASSIGNED) && self.parts.iter().all(|p| !p.is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(xs: &[i64]) -> Vec<Value> {
        xs.iter().map(|&x| Value::Int(x)).collect()
    }

    #[test]
    fn empty_set_hashes_to_zero() {
        assert_eq!(Value::Set(SetVal::new()).hash(), 0);
    }

    #[test]
    fn insert_into_empty_set_is_single_term() {
        let mut v = Value::Set(SetVal::new());
        v.apply(&[], Op::Insert(Value::Int(7))).unwrap();
        assert_eq!(v.hash(), mix(7));
    }

    #[test]
    fn insert_then_remove_restores_hash() {
        let mut v = Value::Set(SetVal::from_values(ints(&[1, 2, 3])));
        let h = v.hash();
        let a = v.apply(&[], Op::Insert(Value::Int(9))).unwrap();
        assert_ne!(v.hash(), h);
        v.apply(&[], a.inverse).unwrap();
        assert_eq!(v.hash(), h);
    }

    #[test]
    fn set_rejects_duplicates() {
        let mut v = Value::Set(SetVal::from_values(ints(&[1, 2])));
        assert_eq!(v.apply(&[], Op::Insert(Value::Int(2))).err(), Some(EditError::Duplicate));
        assert_eq!(v.apply(&[], Op::Replace(0, Value::Int(2))).err(), Some(EditError::Duplicate));
        assert_eq!(v.hash(), hash_value(&v));
    }

    #[test]
    fn remove_inverse_restores_storage_order() {
        let mut v = Value::Set(SetVal::from_values(ints(&[4, 5, 6, 7])));
        let a = v.apply(&[], Op::Remove(1)).unwrap();
        assert_eq!(v.to_plain(), Value::Set(SetVal::from_values(ints(&[4, 6, 7]))).to_plain());
        v.apply(&[], a.inverse).unwrap();
        let Value::Set(s) = &v else { unreachable!() };
        assert_eq!(s.elems().iter().map(Value::int).collect::<Vec<_>>(), vec![4, 5, 6, 7]);
    }

    #[test]
    fn nested_edit_rejects_collision_and_rolls_back() {
        let inner = |xs: &[i64]| Value::Set(SetVal::from_values(ints(xs)));
        let mut v = Value::Set(SetVal::from_values(vec![inner(&[1, 2]), inner(&[1])]));
        let before = v.to_plain();
        let err = v.apply(&[1], Op::Insert(Value::Int(2))).err();
        assert_eq!(err, Some(EditError::Duplicate));
        assert_eq!(v.to_plain(), before);
        assert_eq!(v.hash(), hash_value(&v));
    }

    #[test]
    fn sequence_edits_track_hash_and_repeats() {
        let mut v = Value::Seq(SeqVal::from_values(ints(&[1, 2, 3, 4])));
        v.apply(&[], Op::Reverse(1, 4)).unwrap();
        v.apply(&[], Op::Swap(0, 2)).unwrap();
        v.apply(&[], Op::Replace(1, Value::Int(3))).unwrap();
        assert_eq!(v.hash(), hash_value(&v));
        let Value::Seq(s) = &v else { unreachable!() };
        assert_eq!(s.repeats(), 1);
    }

    #[test]
    fn direct_function_indexing() {
        let f = FuncVal::direct(vec![(1, 2), (1, 3)], true, ints(&[10, 11, 12, 20, 21, 22]));
        let x = Value::tuple(ints(&[2, 2]));
        assert_eq!(f.apply_to(&x).unwrap().int(), 21);
        assert_eq!(f.preimage(4).hash(), x.hash());
        assert!(f.apply_to(&Value::tuple(ints(&[3, 1]))).is_none());
        assert_eq!(f.hash, hash_value(&Value::Func(f.clone())));
    }

    #[test]
    fn partition_move_touches_two_part_hashes() {
        let mut v = Value::Part(PartVal::from_parts(vec![ints(&[1, 2, 3]), ints(&[4, 5])]));
        let Value::Part(p) = &v else { unreachable!() };
        let before = p.part_hashes();
        let x = p.elem_of(&Value::Int(2)).unwrap();
        v.apply(&[], Op::Detach(x)).unwrap();
        v.apply(&[], Op::Attach(x, 1)).unwrap();
        let Value::Part(p) = &v else { unreachable!() };
        assert_eq!(p.hp_updates(), 2);
        let after = p.part_hashes();
        assert!(before[0] != after[0] && before[1] != after[1]);
        assert_eq!(v.hash(), hash_value(&v));
    }

    #[test]
    fn partition_part_lifecycle_round_trips() {
        let mut v = Value::Part(PartVal::from_parts(vec![ints(&[1]), ints(&[2, 3]), ints(&[4])]));
        let h = v.hash();
        let Value::Part(p) = &v else { unreachable!() };
        let x = p.elem_of(&Value::Int(1)).unwrap();
        let undo = vec![
            v.apply(&[], Op::Detach(x)).unwrap().inverse,
            v.apply(&[], Op::Attach(x, 1)).unwrap().inverse,
            v.apply(&[], Op::DropEmpty(0)).unwrap().inverse,
        ];
        let Value::Part(p) = &v else { unreachable!() };
        assert!(p.is_complete());
        assert_eq!(p.num_parts(), 2);
        assert_eq!(v.hash(), hash_value(&v));
        for op in undo.into_iter().rev() {
            v.apply(&[], op).unwrap();
        }
        assert_eq!(v.hash(), h);
        assert_eq!(v.hash(), hash_value(&v));
    }
}
