//! Random primitive edits for every container kind, shared by the property
//! tests and the acceptance run.

#![allow(dead_code)]

use cbls_core::value::{FuncVal, MSetVal, Op, PartVal, SeqVal, SetVal, Value};
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Set,
    MSet,
    Seq,
    Func,
    DirectFunc,
    Part,
    SetOfSet,
}

pub const KINDS: [Kind; 7] = [Kind::Set, Kind::MSet, Kind::Seq, Kind::Func, Kind::DirectFunc, Kind::Part, Kind::SetOfSet];

fn int<R: Rng>(rng: &mut R) -> Value {
    Value::Int(rng.random_range(1..=40))
}

pub fn initial<R: Rng>(kind: Kind, rng: &mut R) -> Value {
    let ints = |rng: &mut R, n: usize| (0..n).map(|_| int(rng)).collect::<Vec<_>>();
    match kind {
        Kind::Set => Value::Set(SetVal::from_values(ints(rng, 10))),
        Kind::MSet => Value::MSet(MSetVal::from_values(ints(rng, 10))),
        Kind::Seq => Value::Seq(SeqVal::from_values(ints(rng, 10))),
        Kind::Func => Value::Func(FuncVal::explicit((1..=8).map(|k| (Value::Int(k * 3), int(rng))))),
        Kind::DirectFunc => Value::Func(FuncVal::direct(vec![(1, 12)], false, ints(rng, 12))),
        Kind::Part => {
            let parts = (0..4).map(|p| (1..=5).map(|k| Value::Int(p * 5 + k)).collect()).collect();
            Value::Part(PartVal::from_parts(parts))
        }
        Kind::SetOfSet => {
            Value::Set(SetVal::from_values((0..4).map(|_| Value::Set(SetVal::from_values(ints(rng, 4))))))
        }
    }
}

/// One random edit at a random applicable path. Failed edits (duplicates,
/// bad indices) are part of the exercise; they must leave the value intact.
pub fn random_edit<R: Rng>(kind: Kind, v: &Value, rng: &mut R) -> (Vec<usize>, Op) {
    let n = v.len();
    let idx = |rng: &mut R| rng.random_range(0..n.max(1) + 1);
    match kind {
        Kind::Set | Kind::MSet => match rng.random_range(0..4) {
            0 => (vec![], Op::Insert(int(rng))),
            1 => (vec![], Op::InsertAt(idx(rng), int(rng))),
            2 => (vec![], Op::Remove(idx(rng))),
            _ => (vec![], Op::Replace(idx(rng), int(rng))),
        },
        Kind::Seq => match rng.random_range(0..5) {
            0 => (vec![], Op::InsertAt(idx(rng), int(rng))),
            1 => (vec![], Op::Remove(idx(rng))),
            2 => (vec![], Op::Replace(idx(rng), int(rng))),
            3 => (vec![], Op::Swap(idx(rng), idx(rng))),
            _ => {
                let (a, b) = (idx(rng), idx(rng));
                (vec![], Op::Reverse(a.min(b), a.max(b)))
            }
        },
        Kind::Func => match rng.random_range(0..4) {
            0 => (vec![], Op::FuncAdd(int(rng), int(rng))),
            1 => (vec![], Op::Remove(idx(rng))),
            2 => (vec![], Op::Replace(idx(rng), int(rng))),
            _ => (vec![], Op::Swap(idx(rng), idx(rng))),
        },
        Kind::DirectFunc => match rng.random_range(0..2) {
            0 => (vec![], Op::Replace(idx(rng), int(rng))),
            _ => (vec![], Op::Swap(idx(rng), idx(rng))),
        },
        Kind::Part => {
            let Value::Part(p) = v else { unreachable!() };
            let x = rng.random_range(0..p.elems().len());
            match rng.random_range(0..5) {
                0 => (vec![], Op::Detach(x)),
                1 => (vec![], Op::Attach(x, rng.random_range(0..p.num_parts().max(1)))),
                2 => (vec![], Op::NewPart(x)),
                3 => (vec![], Op::DropEmpty(rng.random_range(0..p.num_parts().max(1)))),
                _ => (vec![], Op::PopPart),
            }
        }
        Kind::SetOfSet => {
            if n > 0 && rng.random_bool(0.7) {
                let i = rng.random_range(0..n);
                let (_, op) = random_edit(Kind::Set, &v.member(i), rng);
                (vec![i], op)
            } else {
                match rng.random_range(0..2) {
                    0 => (vec![], Op::Insert(Value::Set(SetVal::from_values([int(rng), int(rng)])))),
                    _ => (vec![], Op::Remove(idx(rng))),
                }
            }
        }
    }
}
