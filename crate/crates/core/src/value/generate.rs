//! Resource-limited random value generation.
//!
//! Every generated atom costs one unit and collections add one unit for the
//! container, so a fixed allowance biases sampling toward small values.

use rand::Rng;

use super::{FuncVal, MSetVal, PartVal, SeqVal, SetVal, Value};
use crate::domain::Domain;

/// Outcome of one generation attempt. `consumed` counts every attempt,
/// including failed ones, and may exceed the allowance by the cost of the
/// final failed attempt.
#[derive(Clone, Debug)]
pub struct Generated {
    pub value: Option<Value>,
    pub consumed: i64,
}

impl Generated {
    fn fail(consumed: i64) -> Self {
        Generated { value: None, consumed }
    }

    fn ok(v: Value, consumed: i64) -> Self {
        Generated { value: Some(v), consumed }
    }
}

/// Least resource any value of `d` needs.
pub fn calc_min_resource(d: &Domain) -> i64 {
    match d {
        Domain::Bool | Domain::Int(_) | Domain::Enum { .. } => 1,
        Domain::Tuple(ds) => ds.iter().map(calc_min_resource).sum(),
        Domain::Set { inner, .. } | Domain::MSet { inner, .. } | Domain::Seq { inner, .. } => {
            1 + d.min_card() as i64 * calc_min_resource(inner)
        }
        Domain::Func { from, to, total, .. } => {
            if *total && d.direct_dims().is_some() {
                d.min_card() as i64 * calc_min_resource(to)
            } else {
                d.min_card() as i64 * (calc_min_resource(from) + calc_min_resource(to))
            }
        }
        Domain::Part { inner, .. } => {
            let n = inner.count();
            match n {
                crate::domain::Count::Finite(n) => n as i64 * calc_min_resource(inner),
                crate::domain::Count::Huge => i64::MAX / 4,
            }
        }
    }
}

/// One attempt at a random member of `d` within allowance `r_in`.
pub fn generate_random<R: Rng + ?Sized>(d: &Domain, r_in: i64, rng: &mut R) -> Generated {
    if r_in <= 0 {
        return Generated::fail(0);
    }
    match d {
        Domain::Bool => Generated::ok(Value::Bool(rng.random_bool(0.5)), 1),
        Domain::Int(i) => {
            let n = i.count();
            assert!(n > 0, "empty integer domain");
            Generated::ok(Value::Int(i.nth(rng.random_range(0..n))), 1)
        }
        Domain::Enum { names, .. } => Generated::ok(Value::Int(rng.random_range(0..names.len() as i64)), 1),
        Domain::Tuple(ds) => gen_tuple(ds, r_in, rng),
        Domain::Set { inner, .. } => gen_collection(d, inner, r_in, rng, Kind::Set),
        Domain::MSet { inner, .. } => gen_collection(d, inner, r_in, rng, Kind::MSet),
        Domain::Seq { inner, injective, .. } => {
            gen_collection(d, inner, r_in, rng, if *injective { Kind::InjSeq } else { Kind::Seq })
        }
        Domain::Func { .. } => gen_function(d, r_in, rng),
        Domain::Part { .. } => gen_partition(d, r_in, rng),
    }
}

/// Retries with a growing allowance until generation succeeds.
pub fn generate_with_retry<R: Rng + ?Sized>(d: &Domain, rng: &mut R) -> Value {
    generate_with_retry_counted(d, rng).0
}

/// As `generate_with_retry`, also returning total resource consumed and the
/// number of attempts made.
pub fn generate_with_retry_counted<R: Rng + ?Sized>(d: &Domain, rng: &mut R) -> (Value, i64, usize) {
    let mut r_in = 1.1 * calc_min_resource(d) as f64 + 500.0;
    let mut total = 0i64;
    let mut attempts = 0;
    loop {
        attempts += 1;
        let g = generate_random(d, r_in as i64, rng);
        total = total.saturating_add(g.consumed);
        if let Some(v) = g.value {
            return (v, total, attempts);
        }
        r_in *= 1.1;
        assert!(r_in < 4e18, "domain {d} appears to have no values");
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Set,
    MSet,
    Seq,
    InjSeq,
}

fn pick_size<R: Rng + ?Sized>(d: &Domain, rng: &mut R) -> u64 {
    let lo = d.min_card();
    let hi = d.max_card().expect("finite collection domain");
    if hi <= lo {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn gen_collection<R: Rng + ?Sized>(d: &Domain, inner: &Domain, r_in: i64, rng: &mut R, kind: Kind) -> Generated {
    let mut r: i64 = 1;
    let n_min = d.min_card() as i64;
    let n = pick_size(d, rng) as i64;
    let inner_min = calc_min_resource(inner);
    let mut elems: Vec<Value> = Vec::new();
    let mut seen = rustc_hash::FxHashSet::default();
    while (elems.len() as i64) < n {
        let r_res = (n_min - elems.len() as i64 - 1).max(0) * inner_min;
        let g = generate_random(inner, r_in - r_res - r, rng);
        r += g.consumed;
        let Some(e) = g.value else {
            if (elems.len() as i64) < n_min {
                return Generated::fail(r);
            }
            break;
        };
        if matches!(kind, Kind::Set | Kind::InjSeq) && !seen.insert(e.hash()) {
            continue;
        }
        elems.push(e);
    }
    let v = match kind {
        Kind::Set => Value::Set(SetVal::from_values(elems)),
        Kind::MSet => Value::MSet(MSetVal::from_values(elems)),
        Kind::Seq | Kind::InjSeq => Value::Seq(SeqVal::from_values(elems)),
    };
    Generated::ok(v, r)
}

fn gen_tuple<R: Rng + ?Sized>(ds: &[Domain], r_in: i64, rng: &mut R) -> Generated {
    let mins: Vec<i64> = ds.iter().map(calc_min_resource).collect();
    let mut r = 0;
    let mut members = Vec::with_capacity(ds.len());
    for (k, d) in ds.iter().enumerate() {
        let r_res: i64 = mins[k + 1..].iter().sum();
        let g = generate_random(d, r_in - r_res - r, rng);
        r += g.consumed;
        match g.value {
            Some(v) => members.push(v),
            None => return Generated::fail(r),
        }
    }
    Generated::ok(Value::tuple(members), r)
}

fn gen_function<R: Rng + ?Sized>(d: &Domain, r_in: i64, rng: &mut R) -> Generated {
    let Domain::Func { from, to, injective, .. } = d else { unreachable!() };
    let to_min = calc_min_resource(to);
    let mut r = 0;
    if let Some((dims, tuple)) = d.direct_dims() {
        let n: i64 = dims.iter().map(|(lo, hi)| hi - lo + 1).product();
        let mut images = Vec::with_capacity(n as usize);
        let mut seen = rustc_hash::FxHashSet::default();
        while (images.len() as i64) < n {
            let r_res = (n - images.len() as i64 - 1) * to_min;
            let g = generate_random(to, r_in - r_res - r, rng);
            r += g.consumed;
            let Some(img) = g.value else { return Generated::fail(r) };
            if *injective && !seen.insert(img.hash()) {
                continue;
            }
            images.push(img);
        }
        return Generated::ok(Value::Func(FuncVal::direct(dims, tuple, images)), r);
    }
    let n_min = d.min_card() as i64;
    let n = pick_size(d, rng) as i64;
    let pair_min = calc_min_resource(from) + to_min;
    let mut pairs: Vec<(Value, Value)> = Vec::new();
    let mut pre_seen = rustc_hash::FxHashSet::default();
    let mut img_seen = rustc_hash::FxHashSet::default();
    'outer: while (pairs.len() as i64) < n {
        let r_res = (n_min - pairs.len() as i64 - 1).max(0) * pair_min;
        let pre = loop {
            let g = generate_random(from, r_in - r_res - r - to_min, rng);
            r += g.consumed;
            match g.value {
                Some(p) if pre_seen.contains(&p.hash()) => continue,
                Some(p) => break p,
                None => break 'outer,
            }
        };
        let img = loop {
            let g = generate_random(to, r_in - r_res - r, rng);
            r += g.consumed;
            match g.value {
                Some(v) if *injective && img_seen.contains(&v.hash()) => continue,
                Some(v) => break v,
                None => break 'outer,
            }
        };
        pre_seen.insert(pre.hash());
        img_seen.insert(img.hash());
        pairs.push((pre, img));
    }
    if (pairs.len() as i64) < n_min {
        return Generated::fail(r);
    }
    Generated::ok(Value::Func(FuncVal::explicit(pairs)), r)
}

fn gen_partition<R: Rng + ?Sized>(d: &Domain, r_in: i64, rng: &mut R) -> Generated {
    let Domain::Part { parts, part_size, regular, inner } = d else { unreachable!() };
    let all = inner.enumerate().expect("partition over an enumerable domain");
    let n = all.len();
    // Pass 1: a random ordering of the elements, built like an injective sequence.
    let inner_min = calc_min_resource(inner);
    let mut r = 0;
    let mut order: Vec<Value> = Vec::with_capacity(n);
    let mut seen = rustc_hash::FxHashSet::default();
    while order.len() < n {
        let r_res = (n - order.len() - 1) as i64 * inner_min;
        let g = generate_random(inner, r_in - r_res - r, rng);
        r += g.consumed;
        let Some(e) = g.value else { return Generated::fail(r) };
        if seen.insert(e.hash()) {
            order.push(e);
        }
    }
    // Pass 2: cut the ordering into cells.
    let min_size = part_size.min.max(1) as usize;
    let max_size = part_size.max.map_or(n, |m| m as usize);
    let max_parts = parts.max.map_or(n, |m| m as usize);
    let cells: Vec<Vec<Value>> = if n == 0 {
        Vec::new()
    } else if *regular {
        let options: Vec<usize> = (1..=n)
            .filter(|&k| n % k == 0 && parts.admits(k as u64) && part_size.admits((n / k) as u64))
            .collect();
        if options.is_empty() {
            return Generated::fail(r);
        }
        let k = options[rng.random_range(0..options.len())];
        order.chunks(n / k).map(|c| c.to_vec()).collect()
    } else {
        let k_min = (parts.min as usize).max(1);
        if k_min * min_size > n {
            return Generated::fail(r);
        }
        let mut cells: Vec<Vec<Value>> = Vec::new();
        let mut it = order.into_iter().peekable();
        for _ in 0..k_min {
            cells.push(it.by_ref().take(min_size).collect());
        }
        let mut rest: Vec<Value> = it.collect();
        rest.reverse();
        while let Some(x) = rest.pop() {
            let mut options: Vec<Option<usize>> =
                (0..cells.len()).filter(|&c| cells[c].len() < max_size).map(Some).collect();
            if cells.len() < max_parts && rest.len() + 1 >= min_size {
                options.push(None);
            }
            if options.is_empty() {
                return Generated::fail(r);
            }
            match options[rng.random_range(0..options.len())] {
                Some(c) => cells[c].push(x),
                None => {
                    let mut cell = vec![x];
                    for _ in 1..min_size {
                        cell.push(rest.pop().expect("enough elements reserved"));
                    }
                    cells.push(cell);
                }
            }
        }
        cells
    };
    Generated::ok(Value::Part(PartVal::from_parts(cells)), r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Card;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn min_resource_rules() {
        assert_eq!(calc_min_resource(&Domain::int(1, 9)), 1);
        assert_eq!(calc_min_resource(&Domain::set(Card { min: 2, max: None }, Domain::int(1, 9))), 3);
        assert_eq!(calc_min_resource(&Domain::Tuple(vec![Domain::int(0, 1), Domain::int(0, 1)])), 2);
    }

    #[test]
    fn zero_allowance_fails_without_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = generate_random(&Domain::int(1, 3), 0, &mut rng);
        assert!(g.value.is_none());
        assert_eq!(g.consumed, 0);
    }

    #[test]
    fn fixed_size_mset_costs_container_plus_atoms() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = Domain::MSet { card: Card::exact(2), inner: Box::new(Domain::int(1, 3)) };
        let g = generate_random(&d, 3, &mut rng);
        assert_eq!(g.value.unwrap().len(), 2);
        assert_eq!(g.consumed, 3);
    }

    #[test]
    fn empty_fixed_set_first_attempt() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = Domain::set(Card::exact(0), Domain::Int(crate::domain::IntDomain::unbounded()));
        let (v, _, attempts) = generate_with_retry_counted(&d, &mut rng);
        assert!(v.is_empty());
        assert_eq!(attempts, 1);
    }

    #[test]
    fn deep_nesting_needs_retries() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // Distinct members drawn from a barely larger domain cost far more
        // than the minimum, so the first allowance runs out.
        let inner = Domain::set(Card::exact(30), Domain::int(1, 31));
        let d = Domain::set(Card::exact(30), inner);
        let (v, _, attempts) = generate_with_retry_counted(&d, &mut rng);
        assert!(attempts > 1);
        assert_eq!(v.len(), 30);
    }
}
