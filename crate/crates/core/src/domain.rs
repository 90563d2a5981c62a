//! Instantiated domains: the shape from which values, neighbourhoods and
//! generation costs are derived.

use std::fmt;

use crate::value::{Plain, Value};

/// Cardinality bounds; `max = None` means unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Card {
    pub min: u64,
    pub max: Option<u64>,
}

impl Card {
    pub fn any() -> Self {
        Card { min: 0, max: None }
    }

    pub fn exact(n: u64) -> Self {
        Card { min: n, max: Some(n) }
    }

    pub fn is_fixed(&self) -> bool {
        self.max == Some(self.min)
    }

    pub fn admits(&self, n: u64) -> bool {
        n >= self.min && self.max.is_none_or(|m| n <= m)
    }
}

/// Union of inclusive integer intervals, either end possibly open.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntDomain {
    pub ranges: Vec<(Option<i64>, Option<i64>)>,
}

impl IntDomain {
    pub fn range(lo: i64, hi: i64) -> Self {
        IntDomain { ranges: vec![(Some(lo), Some(hi))] }
    }

    pub fn unbounded() -> Self {
        IntDomain { ranges: vec![(None, None)] }
    }

    pub fn is_finite(&self) -> bool {
        self.ranges.iter().all(|(lo, hi)| lo.is_some() && hi.is_some())
    }

    /// Closed intervals, sorted and merged; only meaningful when finite.
    pub fn intervals(&self) -> Vec<(i64, i64)> {
        let mut rs: Vec<(i64, i64)> = self
            .ranges
            .iter()
            .filter_map(|&(lo, hi)| Some((lo?, hi?)))
            .filter(|(lo, hi)| lo <= hi)
            .collect();
        rs.sort();
        let mut out: Vec<(i64, i64)> = Vec::new();
        for (lo, hi) in rs {
            match out.last_mut() {
                Some(last) if lo <= last.1.saturating_add(1) => last.1 = last.1.max(hi),
                _ => out.push((lo, hi)),
            }
        }
        out
    }

    pub fn count(&self) -> u128 {
        self.intervals().iter().map(|(lo, hi)| (hi - lo) as u128 + 1).sum()
    }

    pub fn contains(&self, x: i64) -> bool {
        self.ranges
            .iter()
            .any(|&(lo, hi)| lo.is_none_or(|l| x >= l) && hi.is_none_or(|h| x <= h))
    }

    /// The `k`-th value in ascending order.
    pub fn nth(&self, mut k: u128) -> i64 {
        for (lo, hi) in self.intervals() {
            let w = (hi - lo) as u128 + 1;
            if k < w {
                return lo + k as i64;
            }
            k -= w;
        }
        panic!("index beyond integer domain")
    }

    pub fn bounds(&self) -> Option<(i64, i64)> {
        let iv = self.intervals();
        if !self.is_finite() || iv.is_empty() {
            return None;
        }
        Some((iv[0].0, iv[iv.len() - 1].1))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Domain {
    Bool,
    Int(IntDomain),
    /// Enumerated type; values are `0..names.len()`.
    Enum { name: String, names: Vec<String> },
    Tuple(Vec<Domain>),
    Set { card: Card, inner: Box<Domain> },
    MSet { card: Card, inner: Box<Domain> },
    Seq { card: Card, injective: bool, inner: Box<Domain> },
    Func { card: Card, total: bool, injective: bool, from: Box<Domain>, to: Box<Domain> },
    Part { parts: Card, part_size: Card, regular: bool, inner: Box<Domain> },
}

/// Size of a value space, saturating into an explicit marker.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Count {
    Finite(u128),
    Huge,
}

impl Count {
    fn mul(self, o: Count) -> Count {
        match (self, o) {
            (Count::Finite(0), _) | (_, Count::Finite(0)) => Count::Finite(0),
            (Count::Finite(a), Count::Finite(b)) => a.checked_mul(b).map_or(Count::Huge, Count::Finite),
            _ => Count::Huge,
        }
    }

    fn add(self, o: Count) -> Count {
        match (self, o) {
            (Count::Finite(a), Count::Finite(b)) => a.checked_add(b).map_or(Count::Huge, Count::Finite),
            _ => Count::Huge,
        }
    }

    fn small(self) -> Option<u128> {
        match self {
            Count::Finite(n) => Some(n),
            Count::Huge => None,
        }
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Count::Finite(n) => write!(f, "{n}"),
            Count::Huge => write!(f, "huge"),
        }
    }
}

fn binom(n: u128, k: u128) -> Count {
    if k > n {
        return Count::Finite(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        match acc.checked_mul(n - i) {
            Some(x) => acc = x / (i + 1),
            None => return Count::Huge,
        }
    }
    Count::Finite(acc)
}

impl Domain {
    pub fn int(lo: i64, hi: i64) -> Domain {
        Domain::Int(IntDomain::range(lo, hi))
    }

    pub fn set(card: Card, inner: Domain) -> Domain {
        Domain::Set { card, inner: Box::new(inner) }
    }

    pub fn inner(&self) -> Option<&Domain> {
        match self {
            Domain::Set { inner, .. }
            | Domain::MSet { inner, .. }
            | Domain::Seq { inner, .. }
            | Domain::Part { inner, .. } => Some(inner),
            Domain::Func { to, .. } => Some(to),
            _ => None,
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Domain::Bool | Domain::Int(_) | Domain::Enum { .. })
    }

    /// Every value of a finite atomic or tuple domain, in ascending order.
    pub fn enumerate(&self) -> Option<Vec<Value>> {
        match self {
            Domain::Bool => Some(vec![Value::Bool(false), Value::Bool(true)]),
            Domain::Int(d) => {
                if !d.is_finite() || d.count() > 50_000_000 {
                    return None;
                }
                Some(
                    d.intervals()
                        .into_iter()
                        .flat_map(|(lo, hi)| (lo..=hi).map(Value::Int))
                        .collect(),
                )
            }
            Domain::Enum { names, .. } => Some((0..names.len() as i64).map(Value::Int).collect()),
            Domain::Tuple(ds) => {
                let mut acc: Vec<Vec<Value>> = vec![Vec::new()];
                for d in ds {
                    let vals = d.enumerate()?;
                    let mut next = Vec::with_capacity(acc.len() * vals.len());
                    for prefix in &acc {
                        for v in &vals {
                            let mut p = prefix.clone();
                            p.push(v.clone());
                            next.push(p);
                        }
                    }
                    acc = next;
                }
                Some(acc.into_iter().map(Value::tuple).collect())
            }
            _ => None,
        }
    }

    /// Contiguous integer ranges of a preimage domain that admits computed
    /// indexing, with a flag telling whether preimages are tuples.
    pub fn direct_dims(&self) -> Option<(Vec<(i64, i64)>, bool)> {
        let Domain::Func { total: true, from, .. } = self else {
            return None;
        };
        let dim = |d: &Domain| match d {
            Domain::Int(i) => {
                let iv = i.intervals();
                (i.is_finite() && iv.len() == 1).then(|| iv[0])
            }
            Domain::Enum { names, .. } if !names.is_empty() => Some((0, names.len() as i64 - 1)),
            _ => None,
        };
        match &**from {
            Domain::Tuple(ds) => Some((ds.iter().map(dim).collect::<Option<Vec<_>>>()?, true)),
            d => Some((vec![dim(d)?], false)),
        }
    }

    /// Upper bound on the number of members, resolving implicit bounds.
    pub fn max_card(&self) -> Option<u64> {
        let inner_count = || self.inner().map(|d| d.count()).and_then(Count::small);
        match self {
            Domain::Set { card, .. } => {
                let by_inner = inner_count().map(|n| n.min(u64::MAX as u128) as u64);
                match (card.max, by_inner) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                }
            }
            Domain::MSet { card, .. } | Domain::Seq { card, .. } => card.max,
            Domain::Func { card, from, .. } => {
                let by_from = from.count().small().map(|n| n.min(u64::MAX as u128) as u64);
                match (card.max, by_from) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                }
            }
            _ => None,
        }
    }

    pub fn min_card(&self) -> u64 {
        match self {
            Domain::Set { card, .. } | Domain::MSet { card, .. } | Domain::Seq { card, .. } => card.min,
            Domain::Func { card, total, from, .. } => {
                if *total {
                    from.count().small().map_or(card.min, |n| n as u64)
                } else {
                    card.min
                }
            }
            _ => 0,
        }
    }

    /// True when the number of members can never change.
    pub fn fixed_size(&self) -> bool {
        match self {
            Domain::Set { .. } | Domain::MSet { .. } | Domain::Seq { .. } | Domain::Func { .. } => {
                self.max_card() == Some(self.min_card())
            }
            _ => false,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Domain::Bool | Domain::Enum { .. } => true,
            Domain::Int(d) => d.is_finite(),
            Domain::Tuple(ds) => ds.iter().all(Domain::is_finite),
            Domain::Set { inner, .. } => inner.is_finite(),
            Domain::MSet { card, inner } | Domain::Seq { card, inner, .. } => {
                card.max.is_some() && inner.is_finite()
            }
            Domain::Func { from, to, .. } => from.is_finite() && to.is_finite(),
            Domain::Part { inner, .. } => inner.is_finite(),
        }
    }

    /// Number of values, saturating to `Huge`; attribute-derived counts for
    /// functions and partitions are upper bounds.
    pub fn count(&self) -> Count {
        match self {
            Domain::Bool => Count::Finite(2),
            Domain::Int(d) if d.is_finite() => Count::Finite(d.count()),
            Domain::Int(_) => Count::Huge,
            Domain::Enum { names, .. } => Count::Finite(names.len() as u128),
            Domain::Tuple(ds) => ds.iter().fold(Count::Finite(1), |a, d| a.mul(d.count())),
            Domain::Set { card, inner } => {
                let Some(n) = inner.count().small() else { return Count::Huge };
                let hi = card.max.map_or(n, |m| (m as u128).min(n));
                if hi.saturating_sub(card.min as u128) > 10_000 {
                    return Count::Huge;
                }
                (card.min as u128..=hi).fold(Count::Finite(0), |a, k| a.add(binom(n, k)))
            }
            Domain::MSet { card, inner } => {
                let (Some(n), Some(hi)) = (inner.count().small(), card.max) else { return Count::Huge };
                if n == 0 {
                    return Count::Finite((card.min == 0) as u128);
                }
                (card.min as u128..=hi as u128).fold(Count::Finite(0), |a, k| a.add(binom(n + k - 1, k)))
            }
            Domain::Seq { card, injective, inner } => {
                let (Some(n), Some(hi)) = (inner.count().small(), card.max) else { return Count::Huge };
                let mut total = Count::Finite(0);
                for k in card.min..=hi {
                    let mut c = Count::Finite(1);
                    for j in 0..k as u128 {
                        let f = if *injective { n.saturating_sub(j) } else { n };
                        c = c.mul(Count::Finite(f));
                        if c == Count::Huge {
                            return Count::Huge;
                        }
                    }
                    total = total.add(c);
                }
                total
            }
            Domain::Func { total, from, to, .. } => {
                let (Some(a), Some(b)) = (from.count().small(), to.count().small()) else { return Count::Huge };
                let base = if *total { b } else { b + 1 };
                let mut c = Count::Finite(1);
                for _ in 0..a {
                    c = c.mul(Count::Finite(base));
                    if c == Count::Huge {
                        break;
                    }
                }
                c
            }
            Domain::Part { inner, .. } => {
                let Some(n) = inner.count().small() else { return Count::Huge };
                if n > 100 {
                    return Count::Huge;
                }
                // Bell number by the triangle recurrence.
                let mut row: Vec<Count> = vec![Count::Finite(1)];
                for _ in 0..n {
                    let mut next = vec![*row.last().unwrap()];
                    for x in &row {
                        next.push(next.last().unwrap().add(*x));
                    }
                    row = next;
                }
                row[0]
            }
        }
    }

    /// Checks `v` against the type and every attribute, naming the first
    /// violated attribute.
    pub fn check(&self, v: &Plain) -> Result<(), String> {
        let card = |what: &str, c: &Card, n: usize| -> Result<(), String> {
            if (n as u64) < c.min {
                return Err(format!("{what} has {n} members, below minSize {}", c.min));
            }
            if let Some(m) = c.max {
                if n as u64 > m {
                    return Err(format!("{what} has {n} members, above maxSize {m}"));
                }
            }
            Ok(())
        };
        match (self, v) {
            (Domain::Bool, Plain::Bool(_)) => Ok(()),
            (Domain::Int(d), Plain::Int(i)) => {
                if d.contains(*i) {
                    Ok(())
                } else {
                    Err(format!("{i} outside {self}"))
                }
            }
            (Domain::Enum { name, names }, Plain::Int(i)) => {
                if *i >= 0 && (*i as usize) < names.len() {
                    Ok(())
                } else {
                    Err(format!("{i} is not a value of {name}"))
                }
            }
            (Domain::Tuple(ds), Plain::Tuple(ms)) if ds.len() == ms.len() => {
                ds.iter().zip(ms).try_for_each(|(d, m)| d.check(m))
            }
            (Domain::Set { card: c, inner }, Plain::Set(s)) => {
                card("set", c, s.len())?;
                s.iter().try_for_each(|m| inner.check(m))
            }
            (Domain::MSet { card: c, inner }, Plain::MSet(m)) => {
                card("mset", c, v.card())?;
                m.keys().try_for_each(|k| inner.check(k))
            }
            (Domain::Seq { card: c, injective, inner }, Plain::Seq(s)) => {
                card("sequence", c, s.len())?;
                if *injective {
                    let distinct: std::collections::BTreeSet<_> = s.iter().collect();
                    if distinct.len() != s.len() {
                        return Err("sequence violates injective".into());
                    }
                }
                s.iter().try_for_each(|m| inner.check(m))
            }
            (Domain::Func { card: c, total, injective, from, to }, Plain::Func(f)) => {
                card("function", c, f.len())?;
                f.keys().try_for_each(|k| from.check(k))?;
                f.values().try_for_each(|k| to.check(k))?;
                if *total {
                    let n = from.count().small();
                    if n != Some(f.len() as u128) {
                        return Err("function violates total".into());
                    }
                }
                if *injective {
                    let distinct: std::collections::BTreeSet<_> = f.values().collect();
                    if distinct.len() != f.len() {
                        return Err("function violates injective".into());
                    }
                }
                Ok(())
            }
            (Domain::Part { parts, part_size, regular, inner }, Plain::Part(p)) => {
                let mut seen = std::collections::BTreeSet::new();
                for part in p {
                    if part.is_empty() {
                        return Err("partition has an empty part".into());
                    }
                    if !part_size.admits(part.len() as u64) {
                        return Err(format!("partition part of size {} violates partSize bounds", part.len()));
                    }
                    for m in part {
                        inner.check(m)?;
                        if !seen.insert(m) {
                            return Err(format!("partition places {m} in two parts"));
                        }
                    }
                }
                if !parts.admits(p.len() as u64) {
                    return Err(format!("partition has {} parts, violating numParts bounds", p.len()));
                }
                if *regular && p.iter().map(|s| s.len()).collect::<std::collections::BTreeSet<_>>().len() > 1 {
                    return Err("partition violates regular".into());
                }
                if let Some(all) = inner.enumerate() {
                    if all.len() != seen.len() {
                        return Err("partition does not cover every element".into());
                    }
                }
                Ok(())
            }
            _ => Err(format!("{v} is not a value of {self}")),
        }
    }
}

fn card_attrs(c: &Card, size_word: &str, min_word: &str, max_word: &str) -> Vec<String> {
    if c.is_fixed() {
        return vec![format!("{size_word} {}", c.min)];
    }
    let mut out = Vec::new();
    if c.min > 0 {
        out.push(format!("{min_word} {}", c.min));
    }
    if let Some(m) = c.max {
        out.push(format!("{max_word} {m}"));
    }
    out
}

fn attr_list(f: &mut fmt::Formatter<'_>, attrs: Vec<String>) -> fmt::Result {
    if attrs.is_empty() {
        Ok(())
    } else {
        write!(f, " ({})", attrs.join(", "))
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Bool => write!(f, "bool"),
            Domain::Int(d) => {
                if d.ranges == vec![(None, None)] {
                    return write!(f, "int");
                }
                let rs: Vec<String> = d
                    .ranges
                    .iter()
                    .map(|(lo, hi)| match (lo, hi) {
                        (Some(a), Some(b)) if a == b => format!("{a}"),
                        _ => format!(
                            "{}..{}",
                            lo.map(|x| x.to_string()).unwrap_or_default(),
                            hi.map(|x| x.to_string()).unwrap_or_default()
                        ),
                    })
                    .collect();
                write!(f, "int({})", rs.join(", "))
            }
            Domain::Enum { name, .. } => write!(f, "{name}"),
            Domain::Tuple(ds) => {
                write!(f, "tuple (")?;
                for (i, d) in ds.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{d}")?;
                }
                write!(f, ")")
            }
            Domain::Set { card, inner } => {
                write!(f, "set")?;
                attr_list(f, card_attrs(card, "size", "minSize", "maxSize"))?;
                write!(f, " of {inner}")
            }
            Domain::MSet { card, inner } => {
                write!(f, "mset")?;
                attr_list(f, card_attrs(card, "size", "minSize", "maxSize"))?;
                write!(f, " of {inner}")
            }
            Domain::Seq { card, injective, inner } => {
                write!(f, "sequence")?;
                let mut a = card_attrs(card, "size", "minSize", "maxSize");
                if *injective {
                    a.push("injective".into());
                }
                attr_list(f, a)?;
                write!(f, " of {inner}")
            }
            Domain::Func { card, total, injective, from, to } => {
                write!(f, "function")?;
                let mut a = card_attrs(card, "size", "minSize", "maxSize");
                if *total {
                    a.push("total".into());
                }
                if *injective {
                    a.push("injective".into());
                }
                attr_list(f, a)?;
                write!(f, " {from} --> {to}")
            }
            Domain::Part { parts, part_size, regular, inner } => {
                write!(f, "partition")?;
                let mut a = card_attrs(parts, "numParts", "minNumParts", "maxNumParts");
                a.extend(card_attrs(part_size, "partSize", "minPartSize", "maxPartSize"));
                if *regular {
                    a.push("regular".into());
                }
                attr_list(f, a)?;
                write!(f, " from {inner}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_counts() {
        let d = Domain::set(Card { min: 2, max: Some(3) }, Domain::int(1, 8));
        assert_eq!(d.count(), Count::Finite(28 + 56));
        assert_eq!(Domain::set(Card::any(), Domain::int(1, 200)).count(), Count::Huge);
    }

    #[test]
    fn partition_count_is_bell_number() {
        let d = Domain::Part { parts: Card::any(), part_size: Card::any(), regular: false, inner: Box::new(Domain::int(1, 4)) };
        assert_eq!(d.count(), Count::Finite(15));
    }

    #[test]
    fn check_names_violated_attribute() {
        let d = Domain::set(Card { min: 0, max: Some(2) }, Domain::int(1, 5));
        let err = d.check(&Plain::ints(&[1, 2, 3])).unwrap_err();
        assert!(err.contains("maxSize"), "{err}");
        assert!(d.check(&Plain::ints(&[1, 9])).is_err());
        assert!(d.check(&Plain::ints(&[1, 5])).is_ok());
    }

    #[test]
    fn direct_dims_of_tuple_preimage() {
        let d = Domain::Func {
            card: Card::any(),
            total: true,
            injective: false,
            from: Box::new(Domain::Tuple(vec![Domain::int(1, 3), Domain::int(1, 3)])),
            to: Box::new(Domain::int(0, 9)),
        };
        assert_eq!(d.direct_dims(), Some((vec![(1, 3), (1, 3)], true)));
        assert_eq!(d.min_card(), 9);
        assert!(d.fixed_size());
    }

    #[test]
    fn display_round_trips_attributes() {
        let d = Domain::Seq { card: Card::exact(4), injective: true, inner: Box::new(Domain::int(1, 4)) };
        assert_eq!(d.to_string(), "sequence (size 4, injective) of int(1..4)");
    }
}
