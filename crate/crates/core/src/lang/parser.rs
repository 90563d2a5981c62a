//! Recursive-descent parser for specifications and parameter files.

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::{LangError, Pos};

const KEYWORDS: &[&str] = &[
    "given", "find", "letting", "be", "domain", "such", "that", "minimising", "maximising", "minimizing",
    "maximizing", "new", "type", "enum", "of", "from", "in", "subsetEq", "union", "intersect", "true", "false",
    "forAll", "exists", "int", "bool", "set", "mset", "sequence", "function", "partition", "relation", "tuple",
];

/// Name → literal bindings read from a parameter file, in file order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct RawParams {
    pub bindings: Vec<(Name, LettingValue)>,
}

impl RawParams {
    pub fn get(&self, name: &str) -> Option<&LettingValue> {
        self.bindings.iter().find(|(n, _)| n.text == name).map(|(_, v)| v)
    }
}

pub fn parse_spec(text: &str) -> Result<Specification, LangError> {
    let mut p = Parser::new(text)?;
    let mut stmts = Vec::new();
    while !p.at_eof() {
        stmts.push(p.stmt()?);
    }
    if stmts.is_empty() {
        return Err(LangError::Empty);
    }
    Ok(Specification { stmts })
}

pub fn parse_params(text: &str) -> Result<RawParams, LangError> {
    let mut p = Parser::new(text)?;
    let mut out = RawParams::default();
    while !p.at_eof() {
        let pos = p.pos();
        match p.stmt()? {
            Stmt::Letting { name, value } => {
                if out.get(&name.text).is_some() {
                    return Err(LangError::Duplicate { pos: name.pos, name: name.text });
                }
                out.bindings.push((name, value));
            }
            _ => return Err(LangError::syntax(pos, "parameter files may only contain letting statements")),
        }
    }
    Ok(out)
}

/// Parses a single expression, for tests and tools.
pub fn parse_expr(text: &str) -> Result<Expr, LangError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    if !p.at_eof() {
        return Err(p.unexpected("end of input"));
    }
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, LangError> {
        Ok(Parser { toks: lex(text)?, i: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, wanted: &str) -> LangError {
        let found = match self.peek() {
            Tok::Int(n) => n.to_string(),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Quoted(s) => format!("\"{s}\""),
            Tok::Sym(s) => format!("'{s}'"),
            Tok::Eof => "end of input".to_string(),
        };
        LangError::syntax(self.pos(), format!("expected {wanted}, found {found}"))
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), LangError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{s}'")))
        }
    }

    fn expect_kw(&mut self, s: &str) -> Result<(), LangError> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{s}'")))
        }
    }

    fn name(&mut self) -> Result<Name, LangError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(Name { text: s, pos })
            }
            Tok::Quoted(s) => {
                self.bump();
                Ok(Name { text: s, pos })
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn names(&mut self) -> Result<Vec<Name>, LangError> {
        let mut out = vec![self.name()?];
        while self.eat_sym(",") {
            out.push(self.name()?);
        }
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Stmt, LangError> {
        if self.eat_kw("given") {
            let names = self.names()?;
            if self.eat_kw("new") {
                self.expect_kw("type")?;
                self.expect_kw("enum")?;
                if names.len() != 1 {
                    return Err(LangError::syntax(names[1].pos, "one enumerated type per declaration"));
                }
                return Ok(Stmt::GivenEnum { name: names.into_iter().next().unwrap() });
            }
            self.expect_sym(":")?;
            let domain = self.domain()?;
            return Ok(Stmt::Given { names, domain });
        }
        if self.eat_kw("letting") {
            let name = self.name()?;
            self.expect_kw("be")?;
            let value = if self.eat_kw("domain") {
                LettingValue::Domain(self.domain()?)
            } else if self.eat_kw("new") {
                self.expect_kw("type")?;
                self.expect_kw("enum")?;
                self.expect_sym("{")?;
                let mut names = Vec::new();
                if !self.is_sym("}") {
                    names = self.names()?;
                }
                self.expect_sym("}")?;
                LettingValue::Enum(names)
            } else {
                LettingValue::Expr(self.expr()?)
            };
            return Ok(Stmt::Letting { name, value });
        }
        if self.eat_kw("find") {
            let names = self.names()?;
            self.expect_sym(":")?;
            let domain = self.domain()?;
            return Ok(Stmt::Find { names, domain });
        }
        if self.eat_kw("such") {
            self.expect_kw("that")?;
            let mut cs = vec![self.expr()?];
            while self.eat_sym(",") {
                cs.push(self.expr()?);
            }
            return Ok(Stmt::SuchThat(cs));
        }
        for (kw, direction) in [
            ("minimising", Direction::Minimising),
            ("minimizing", Direction::Minimising),
            ("maximising", Direction::Maximising),
            ("maximizing", Direction::Maximising),
        ] {
            if self.eat_kw(kw) {
                return Ok(Stmt::Objective { direction, expr: self.expr()? });
            }
        }
        Err(self.unexpected("a statement (given, letting, find, such that, minimising, maximising)"))
    }

    // ---- domains ----

    fn attrs(&mut self) -> Result<Vec<Attr>, LangError> {
        if !self.is_sym("(") {
            return Ok(Vec::new());
        }
        let is_attr = matches!(self.peek_at(1), Tok::Ident(s) if AttrName::parse(s).is_some());
        if !is_attr {
            // A parenthesised group after a constructor is an attribute list
            // unless it is a tuple domain heading a function arrow.
            if self.followed_by_domain_after_parens() {
                return Ok(Vec::new());
            }
            let pos = self.toks[self.i + 1].pos;
            return match self.peek_at(1).clone() {
                Tok::Ident(name) => Err(LangError::UnknownAttr { pos, name }),
                _ => Err(LangError::syntax(pos, "expected attribute")),
            };
        }
        self.expect_sym("(")?;
        let mut out = Vec::new();
        loop {
            let pos = self.pos();
            let text = match self.peek().clone() {
                Tok::Ident(s) => s,
                _ => return Err(self.unexpected("attribute")),
            };
            let name = AttrName::parse(&text).ok_or(LangError::UnknownAttr { pos, name: text })?;
            self.bump();
            let value = if name.takes_value() { Some(self.expr()?) } else { None };
            out.push(Attr { name, value });
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(")")?;
        Ok(out)
    }

    /// Looks past a balanced parenthesis group and reports whether a domain
    /// keyword (`of`, `from`, `-->`) or another domain follows.
    fn followed_by_domain_after_parens(&self) -> bool {
        let mut depth = 0i32;
        let mut k = self.i;
        loop {
            match &self.toks[k].tok {
                Tok::Sym("(") => depth += 1,
                Tok::Sym(")") => {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                Tok::Eof => return false,
                _ => {}
            }
            k += 1;
        }
        matches!(&self.toks[(k + 1).min(self.toks.len() - 1)].tok, Tok::Sym("-->"))
    }

    fn domain(&mut self) -> Result<DomainExpr, LangError> {
        if self.eat_kw("bool") {
            return Ok(DomainExpr::Bool);
        }
        if self.eat_kw("int") {
            if !self.eat_sym("(") {
                return Ok(DomainExpr::Int(Vec::new()));
            }
            let mut ranges = Vec::new();
            loop {
                ranges.push(self.range()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(")")?;
            return Ok(DomainExpr::Int(ranges));
        }
        if self.eat_kw("tuple") {
            self.expect_sym("(")?;
            let ds = self.domain_list(")")?;
            return Ok(DomainExpr::Tuple(ds));
        }
        if self.is_sym("(") {
            self.bump();
            let mut ds = self.domain_list(")")?;
            return Ok(if ds.len() == 1 { ds.pop().unwrap() } else { DomainExpr::Tuple(ds) });
        }
        for (kw, make) in [
            ("set", DomainExpr::Set as fn(Vec<Attr>, Box<DomainExpr>) -> DomainExpr),
            ("mset", DomainExpr::MSet),
            ("sequence", DomainExpr::Seq),
        ] {
            if self.eat_kw(kw) {
                let attrs = self.attrs()?;
                self.expect_kw("of")?;
                let inner = self.domain()?;
                return Ok(make(attrs, Box::new(inner)));
            }
        }
        if self.eat_kw("function") {
            let attrs = self.attrs()?;
            let from = self.domain()?;
            self.expect_sym("-->")?;
            let to = self.domain()?;
            return Ok(DomainExpr::Func(attrs, Box::new(from), Box::new(to)));
        }
        if self.eat_kw("partition") {
            let attrs = self.attrs()?;
            self.expect_kw("from")?;
            let inner = self.domain()?;
            return Ok(DomainExpr::Part(attrs, Box::new(inner)));
        }
        if self.eat_kw("relation") {
            let attrs = self.attrs()?;
            self.expect_kw("of")?;
            self.expect_sym("(")?;
            let mut ds = vec![self.domain()?];
            while self.eat_sym("*") {
                ds.push(self.domain()?);
            }
            self.expect_sym(")")?;
            return Ok(DomainExpr::Relation(attrs, ds));
        }
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => Ok(DomainExpr::Named(self.name()?)),
            _ => Err(self.unexpected("domain")),
        }
    }

    fn domain_list(&mut self, close: &str) -> Result<Vec<DomainExpr>, LangError> {
        let mut ds = vec![self.domain()?];
        while self.eat_sym(",") {
            ds.push(self.domain()?);
        }
        self.expect_sym(close)?;
        Ok(ds)
    }

    fn range(&mut self) -> Result<RangeExpr, LangError> {
        if self.eat_sym("..") {
            return Ok(RangeExpr::Between(None, Some(self.expr()?)));
        }
        let lo = self.expr()?;
        if !self.eat_sym("..") {
            return Ok(RangeExpr::Single(lo));
        }
        if self.is_sym(",") || self.is_sym(")") {
            return Ok(RangeExpr::Between(Some(lo), None));
        }
        Ok(RangeExpr::Between(Some(lo), Some(self.expr()?)))
    }

    // ---- expressions ----

    pub fn expr(&mut self) -> Result<Expr, LangError> {
        let l = self.or_expr()?;
        if self.eat_sym("->") {
            let r = self.expr()?;
            return Ok(Expr::Binary(BinOp::Imply, Box::new(l), Box::new(r)));
        }
        Ok(l)
    }

    fn or_expr(&mut self) -> Result<Expr, LangError> {
        let mut l = self.and_expr()?;
        while self.eat_sym("\\/") {
            let r = self.and_expr()?;
            l = Expr::Binary(BinOp::Or, Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn and_expr(&mut self) -> Result<Expr, LangError> {
        let mut l = self.cmp_expr()?;
        while self.eat_sym("/\\") {
            let r = self.cmp_expr()?;
            l = Expr::Binary(BinOp::And, Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn cmp_op(&self) -> Option<BinOp> {
        match self.peek() {
            Tok::Sym("=") => Some(BinOp::Eq),
            Tok::Sym("!=") => Some(BinOp::Neq),
            Tok::Sym("<") => Some(BinOp::Lt),
            Tok::Sym("<=") => Some(BinOp::Le),
            Tok::Sym(">") => Some(BinOp::Gt),
            Tok::Sym(">=") => Some(BinOp::Ge),
            Tok::Ident(s) if s == "in" => Some(BinOp::In),
            Tok::Ident(s) if s == "subsetEq" => Some(BinOp::SubsetEq),
            _ => None,
        }
    }

    fn cmp_expr(&mut self) -> Result<Expr, LangError> {
        let l = self.setop_expr()?;
        if let Some(op) = self.cmp_op() {
            self.bump();
            let r = self.setop_expr()?;
            return Ok(Expr::Binary(op, Box::new(l), Box::new(r)));
        }
        Ok(l)
    }

    fn setop_expr(&mut self) -> Result<Expr, LangError> {
        let mut l = self.add_expr()?;
        loop {
            let op = if self.eat_kw("union") {
                BinOp::Union
            } else if self.eat_kw("intersect") {
                BinOp::Intersect
            } else {
                return Ok(l);
            };
            let r = self.add_expr()?;
            l = Expr::Binary(op, Box::new(l), Box::new(r));
        }
    }

    fn add_expr(&mut self) -> Result<Expr, LangError> {
        let mut l = self.mul_expr()?;
        loop {
            let op = if self.eat_sym("+") {
                BinOp::Add
            } else if self.eat_sym("-") {
                BinOp::Sub
            } else {
                return Ok(l);
            };
            let r = self.mul_expr()?;
            l = Expr::Binary(op, Box::new(l), Box::new(r));
        }
    }

    fn mul_expr(&mut self) -> Result<Expr, LangError> {
        let mut l = self.unary()?;
        loop {
            let op = if self.eat_sym("*") {
                BinOp::Mul
            } else if self.eat_sym("/") {
                BinOp::Div
            } else if self.eat_sym("%") {
                BinOp::Mod
            } else {
                return Ok(l);
            };
            let r = self.unary()?;
            l = Expr::Binary(op, Box::new(l), Box::new(r));
        }
    }

    fn unary(&mut self) -> Result<Expr, LangError> {
        if self.eat_sym("-") {
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        if self.eat_sym("!") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, LangError> {
        let mut e = self.primary()?;
        while self.is_sym("(") {
            self.bump();
            let mut args = vec![self.expr()?];
            while self.eat_sym(",") {
                args.push(self.expr()?);
            }
            self.expect_sym(")")?;
            let arg = if args.len() == 1 { args.pop().unwrap() } else { Expr::Tuple(args) };
            e = Expr::Apply(Box::new(e), Box::new(arg));
        }
        Ok(e)
    }

    fn expr_list(&mut self, close: &str) -> Result<Vec<Expr>, LangError> {
        let mut out = Vec::new();
        if self.eat_sym(close) {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(close)?;
        Ok(out)
    }

    fn primary(&mut self) -> Result<Expr, LangError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Quoted(_) => Ok(Expr::Ident(self.name()?)),
            Tok::Sym("|") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym("|")?;
                Ok(Expr::Bars(Box::new(e)))
            }
            Tok::Sym("(") => {
                self.bump();
                let mut es = self.expr_list(")")?;
                match es.len() {
                    0 => Err(LangError::syntax(pos, "empty parentheses")),
                    1 => Ok(es.pop().unwrap()),
                    _ => Ok(Expr::Tuple(es)),
                }
            }
            Tok::Sym("{") => {
                self.bump();
                Ok(Expr::Set(self.expr_list("}")?))
            }
            Tok::Sym("[") => {
                self.bump();
                if self.eat_sym("]") {
                    return Ok(Expr::List(Vec::new()));
                }
                let first = self.expr()?;
                if self.eat_sym("|") {
                    let items = self.comp_items(false, "]")?;
                    self.expect_sym("]")?;
                    return Ok(Expr::ListComp(Box::new(first), items));
                }
                let mut es = vec![first];
                while self.eat_sym(",") {
                    es.push(self.expr()?);
                }
                self.expect_sym("]")?;
                Ok(Expr::List(es))
            }
            Tok::Ident(s) => self.keyword_primary(&s, pos),
            _ => Err(self.unexpected("expression")),
        }
    }

    fn keyword_primary(&mut self, s: &str, pos: Pos) -> Result<Expr, LangError> {
        match s {
            "true" | "false" => {
                self.bump();
                Ok(Expr::Bool(s == "true"))
            }
            "tuple" => {
                self.bump();
                self.expect_sym("(")?;
                Ok(Expr::Tuple(self.expr_list(")")?))
            }
            "mset" => {
                self.bump();
                self.expect_sym("(")?;
                Ok(Expr::MSet(self.expr_list(")")?))
            }
            "sequence" => {
                self.bump();
                self.expect_sym("(")?;
                Ok(Expr::Seq(self.expr_list(")")?))
            }
            "function" => {
                self.bump();
                self.expect_sym("(")?;
                let mut pairs = Vec::new();
                if !self.eat_sym(")") {
                    loop {
                        let a = self.expr()?;
                        self.expect_sym("-->")?;
                        let b = self.expr()?;
                        pairs.push((a, b));
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.expect_sym(")")?;
                }
                Ok(Expr::Func(pairs))
            }
            "partition" => {
                self.bump();
                self.expect_sym("(")?;
                let mut parts = Vec::new();
                if !self.eat_sym(")") {
                    loop {
                        self.expect_sym("{")?;
                        parts.push(self.expr_list("}")?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.expect_sym(")")?;
                }
                Ok(Expr::Part(parts))
            }
            "forAll" | "exists" => {
                self.bump();
                let q = if s == "forAll" { Quantifier::ForAll } else { Quantifier::Exists };
                self.quantifier(q)
            }
            "sum" | "min" | "max" if !matches!(self.peek_at(1), Tok::Sym("(")) => {
                self.bump();
                let q = match s {
                    "sum" => Quantifier::Sum,
                    "min" => Quantifier::Min,
                    _ => Quantifier::Max,
                };
                self.quantifier(q)
            }
            _ => {
                if let Some(b) = Builtin::parse(s) {
                    if matches!(self.peek_at(1), Tok::Sym("(")) {
                        self.bump();
                        self.bump();
                        return Ok(Expr::Call(b, self.expr_list(")")?));
                    }
                }
                if KEYWORDS.contains(&s) {
                    return Err(LangError::syntax(pos, format!("unexpected keyword '{s}'")));
                }
                Ok(Expr::Ident(self.name()?))
            }
        }
    }

    fn quantifier(&mut self, q: Quantifier) -> Result<Expr, LangError> {
        let items = self.comp_items(true, ".")?;
        if !items.iter().any(|i| matches!(i, CompItem::Gen(_))) {
            return Err(self.unexpected("generator"));
        }
        self.expect_sym(".")?;
        let body = self.expr()?;
        Ok(Expr::Quant(q, items, Box::new(body)))
    }

    fn pattern(&mut self) -> Result<Pattern, LangError> {
        if self.eat_sym("_") {
            return Ok(Pattern::Wild);
        }
        if self.eat_sym("(") {
            let mut ps = vec![self.pattern()?];
            while self.eat_sym(",") {
                ps.push(self.pattern()?);
            }
            self.expect_sym(")")?;
            return Ok(Pattern::Tuple(ps));
        }
        Ok(Pattern::Name(self.name()?))
    }

    /// Tries `pat (, pat)* (in | <- | :) source`, restoring the position on failure.
    fn generators(&mut self, allow_in: bool) -> Option<Result<Vec<Generator>, LangError>> {
        let save = self.i;
        let mut pats = Vec::new();
        loop {
            match self.pattern() {
                Ok(p) => pats.push(p),
                Err(_) => {
                    self.i = save;
                    return None;
                }
            }
            if !self.eat_sym(",") {
                break;
            }
        }
        let source = if self.eat_sym(":") {
            self.domain().map(GenSource::Domain)
        } else if self.eat_sym("<-") || (allow_in && self.eat_kw("in")) {
            self.setop_expr().map(GenSource::In)
        } else {
            self.i = save;
            return None;
        };
        Some(source.map(|src| {
            pats.into_iter()
                .map(|pattern| Generator { pattern, source: src.clone() })
                .collect()
        }))
    }

    fn comp_items(&mut self, allow_in: bool, close: &str) -> Result<Vec<CompItem>, LangError> {
        let mut items = Vec::new();
        loop {
            match self.generators(allow_in) {
                Some(gens) => items.extend(gens?.into_iter().map(CompItem::Gen)),
                None => items.push(CompItem::Cond(self.expr()?)),
            }
            if self.is_sym(close) || !self.eat_sym(",") {
                break;
            }
        }
        Ok(items)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantifier_body_extends_right() {
        let e = parse_expr("binSize >= sum i in p . weights(i)").unwrap();
        let Expr::Binary(BinOp::Ge, _, r) = e else { panic!() };
        assert!(matches!(*r, Expr::Quant(Quantifier::Sum, _, _)));
    }

    #[test]
    fn multiple_generators_share_source() {
        let e = parse_expr("forAll i, j in s . i != j").unwrap();
        let Expr::Quant(_, items, _) = e else { panic!() };
        assert_eq!(items.len(), 2);
    }

    #[test]
    fn guards_and_list_comprehensions() {
        let e = parse_expr("[x | (a, x) <- f, a > 1]").unwrap();
        let Expr::ListComp(_, items) = e else { panic!() };
        assert!(matches!(items[1], CompItem::Cond(_)));
        let e = parse_expr("forAll i in s, i > 2 . i < 9").unwrap();
        let Expr::Quant(_, items, _) = e else { panic!() };
        assert!(matches!(items[1], CompItem::Cond(_)));
    }

    #[test]
    fn application_with_tuple_argument() {
        assert_eq!(parse_expr("f(a, b)").unwrap(), parse_expr("f((a, b))").unwrap());
    }

    #[test]
    fn cardinality_bars() {
        let e = parse_expr("|parts(p)| + 1").unwrap();
        assert!(matches!(e, Expr::Binary(BinOp::Add, _, _)));
    }

    #[test]
    fn empty_spec_is_an_error() {
        assert_eq!(parse_spec("  $ nothing\n"), Err(LangError::Empty));
    }

    #[test]
    fn duplicate_param_binding() {
        let err = parse_params("letting a be 1\nletting a be 2").unwrap_err();
        assert!(matches!(err, LangError::Duplicate { .. }));
    }

    #[test]
    fn unknown_attribute() {
        let err = parse_spec("find s : set (bigness 3) of int(1..3)").unwrap_err();
        assert!(matches!(err, LangError::UnknownAttr { .. }), "{err}");
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_spec("find x : int(1..3)\nsuch that x >").unwrap_err();
        let LangError::Syntax { pos, .. } = err else { panic!("{err}") };
        assert_eq!(pos.line, 2);
    }

    #[test]
    fn function_domain_with_tuple_preimage() {
        let s = parse_spec("given c : function (total) (int(1..2), int(1..2)) --> int(0..)").unwrap();
        let Stmt::Given { domain: DomainExpr::Func(attrs, from, _), .. } = &s.stmts[0] else { panic!() };
        assert_eq!(attrs.len(), 1);
        assert!(matches!(**from, DomainExpr::Tuple(_)));
    }
}
