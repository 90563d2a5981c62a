//! Pretty printer whose output re-parses to an equal tree. Compound
//! expressions are fully parenthesised.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;

fn join<T: Display>(f: &mut Formatter<'_>, items: &[T], sep: &str) -> fmt::Result {
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

fn is_plain_ident(s: &str) -> bool {
    let mut cs = s.chars();
    let ok_start = cs.next().is_some_and(|c| c.is_alphabetic());
    ok_start && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

impl Display for Name {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let reserved = matches!(
            self.text.as_str(),
            "given" | "find" | "letting" | "be" | "domain" | "such" | "that" | "new" | "type" | "enum" | "of" | "from"
                | "in" | "true" | "false" | "int" | "bool" | "set" | "mset" | "sequence" | "function"
                | "partition" | "relation" | "tuple"
        );
        if is_plain_ident(&self.text) && !reserved {
            f.write_str(&self.text)
        } else {
            write!(f, "\"{}\"", self.text)
        }
    }
}

impl Display for Specification {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for s in &self.stmts {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

impl Display for Stmt {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::Given { names, domain } => {
                f.write_str("given ")?;
                join(f, names, ", ")?;
                write!(f, " : {domain}")
            }
            Stmt::GivenEnum { name } => write!(f, "given {name} new type enum"),
            Stmt::Letting { name, value } => match value {
                LettingValue::Expr(e) => write!(f, "letting {name} be {e}"),
                LettingValue::Domain(d) => write!(f, "letting {name} be domain {d}"),
                LettingValue::Enum(names) => {
                    write!(f, "letting {name} be new type enum {{")?;
                    join(f, names, ", ")?;
                    f.write_str("}")
                }
            },
            Stmt::Find { names, domain } => {
                f.write_str("find ")?;
                join(f, names, ", ")?;
                write!(f, " : {domain}")
            }
            Stmt::SuchThat(cs) => {
                f.write_str("such that\n    ")?;
                join(f, cs, ",\n    ")
            }
            Stmt::Objective { direction, expr } => match direction {
                Direction::Minimising => write!(f, "minimising {expr}"),
                Direction::Maximising => write!(f, "maximising {expr}"),
            },
        }
    }
}

impl Display for Attr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(self.name.text())?;
        if let Some(v) = &self.value {
            write!(f, " {v}")?;
        }
        Ok(())
    }
}

fn attrs(f: &mut Formatter<'_>, a: &[Attr]) -> fmt::Result {
    if a.is_empty() {
        return Ok(());
    }
    f.write_str(" (")?;
    join(f, a, ", ")?;
    f.write_str(")")
}

impl Display for RangeExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            RangeExpr::Single(e) => write!(f, "{e}"),
            RangeExpr::Between(lo, hi) => {
                if let Some(lo) = lo {
                    write!(f, "{lo}")?;
                }
                f.write_str("..")?;
                if let Some(hi) = hi {
                    write!(f, "{hi}")?;
                }
                Ok(())
            }
        }
    }
}

impl Display for DomainExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            DomainExpr::Bool => f.write_str("bool"),
            DomainExpr::Int(rs) if rs.is_empty() => f.write_str("int"),
            DomainExpr::Int(rs) => {
                f.write_str("int(")?;
                join(f, rs, ", ")?;
                f.write_str(")")
            }
            DomainExpr::Named(n) => write!(f, "{n}"),
            DomainExpr::Tuple(ds) => {
                f.write_str("tuple(")?;
                join(f, ds, ", ")?;
                f.write_str(")")
            }
            DomainExpr::Set(a, d) => {
                f.write_str("set")?;
                attrs(f, a)?;
                write!(f, " of {d}")
            }
            DomainExpr::MSet(a, d) => {
                f.write_str("mset")?;
                attrs(f, a)?;
                write!(f, " of {d}")
            }
            DomainExpr::Seq(a, d) => {
                f.write_str("sequence")?;
                attrs(f, a)?;
                write!(f, " of {d}")
            }
            DomainExpr::Func(a, from, to) => {
                f.write_str("function")?;
                attrs(f, a)?;
                write!(f, " {from} --> {to}")
            }
            DomainExpr::Part(a, d) => {
                f.write_str("partition")?;
                attrs(f, a)?;
                write!(f, " from {d}")
            }
            DomainExpr::Relation(a, ds) => {
                f.write_str("relation")?;
                attrs(f, a)?;
                f.write_str(" of (")?;
                join(f, ds, " * ")?;
                f.write_str(")")
            }
        }
    }
}

impl Display for Pattern {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Name(n) => write!(f, "{n}"),
            Pattern::Wild => f.write_str("_"),
            Pattern::Tuple(ps) => {
                f.write_str("(")?;
                join(f, ps, ", ")?;
                f.write_str(")")
            }
        }
    }
}

struct Items<'a>(&'a [CompItem], &'static str);

impl Display for Items<'_> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for (i, it) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match it {
                CompItem::Gen(g) => match &g.source {
                    GenSource::In(e) => write!(f, "{} {} {e}", g.pattern, self.1)?,
                    GenSource::Domain(d) => write!(f, "{} : {d}", g.pattern)?,
                },
                CompItem::Cond(e) => write!(f, "{e}")?,
            }
        }
        Ok(())
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(n) if *n < 0 => write!(f, "(-{})", n.unsigned_abs()),
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Ident(n) => write!(f, "{n}"),
            Expr::Unary(UnOp::Neg, e) => write!(f, "(-{e})"),
            Expr::Unary(UnOp::Not, e) => write!(f, "(!{e})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.text()),
            Expr::Bars(e) => write!(f, "|{e}|"),
            Expr::Call(b, args) => {
                write!(f, "{}(", b.text())?;
                join(f, args, ", ")?;
                f.write_str(")")
            }
            Expr::Apply(g, x) => {
                match **g {
                    Expr::Ident(_) | Expr::Apply(..) => write!(f, "{g}")?,
                    _ => write!(f, "({g})")?,
                }
                match &**x {
                    Expr::Tuple(xs) if xs.len() >= 2 => {
                        f.write_char('(')?;
                        join(f, xs, ", ")?;
                        f.write_char(')')
                    }
                    _ => write!(f, "({x})"),
                }
            }
            Expr::Tuple(xs) if xs.len() >= 2 => {
                f.write_char('(')?;
                join(f, xs, ", ")?;
                f.write_char(')')
            }
            Expr::Tuple(xs) => {
                f.write_str("tuple(")?;
                join(f, xs, ", ")?;
                f.write_char(')')
            }
            Expr::Set(xs) => {
                f.write_char('{')?;
                join(f, xs, ", ")?;
                f.write_char('}')
            }
            Expr::MSet(xs) => {
                f.write_str("mset(")?;
                join(f, xs, ", ")?;
                f.write_char(')')
            }
            Expr::Seq(xs) => {
                f.write_str("sequence(")?;
                join(f, xs, ", ")?;
                f.write_char(')')
            }
            Expr::Func(pairs) => {
                f.write_str("function(")?;
                for (i, (a, b)) in pairs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a} --> {b}")?;
                }
                f.write_char(')')
            }
            Expr::Part(parts) => {
                f.write_str("partition(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_char('{')?;
                    join(f, p, ", ")?;
                    f.write_char('}')?;
                }
                f.write_char(')')
            }
            Expr::List(xs) => {
                f.write_char('[')?;
                join(f, xs, ", ")?;
                f.write_char(']')
            }
            Expr::ListComp(body, items) => write!(f, "[{body} | {}]", Items(items, "<-")),
            Expr::Quant(q, items, body) => write!(f, "({} {} . {body})", q.text(), Items(items, "in")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::{parse_expr, parse_spec};

    fn round_trip(src: &str) {
        let a = parse_spec(src).unwrap();
        let printed = a.to_string();
        let b = parse_spec(&printed).unwrap_or_else(|e| panic!("{e}\n{printed}"));
        assert_eq!(a, b, "{printed}");
    }

    #[test]
    fn expressions_round_trip() {
        for src in [
            "a - (b - c) * -d % 3",
            "f(a, b)(c) + |s| - |x - y|",
            "forAll (a, _) in f, a > 1 . exists j : int(1..n) . a = j",
            "[x | x <- s, x in t]",
            "sum(tuple(1)) + min([1, 2]) + toInt(!p -> q \\/ r)",
            "function(1 --> {2}, 3 --> {}) = partition({1, 2}, {3})",
            "mset(1, 1) subsetEq mset(1) /\\ sequence() != sequence(1)",
            "(s union t) intersect {1}",
        ] {
            let e = parse_expr(src).unwrap();
            assert_eq!(parse_expr(&e.to_string()).unwrap(), e, "{e}");
        }
    }

    #[test]
    fn domains_round_trip() {
        round_trip(
            "given n : int(1..)\ngiven E new type enum\nletting D be domain int(..5, 7, 9..n)\n\
             letting F be new type enum {a, \"b c\"}\n\
             find f : function (total, injective) (int(1..2), D) --> set (maxSize 2) of bool\n\
             find p : partition (regular, numParts 2) from E\n\
             find r : relation (size 1) of (int(1..2) * tuple(bool))\n\
             find q : sequence (maxSize n, injective) of mset (size 2) of D\n\
             such that true, false\nmaximising 1",
        );
    }
}
