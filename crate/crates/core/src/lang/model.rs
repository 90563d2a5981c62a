//! Type checking and instantiation of a parsed specification against
//! parameter values, producing a ground model over typed terms.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::ast::{self, AttrName, BinOp, Builtin, CompItem, Direction, DomainExpr, GenSource, LettingValue, Pattern,
                 Quantifier, RangeExpr, Stmt, UnOp};
use super::parser::RawParams;
use super::{LangError, Pos};
use crate::domain::{Card, Domain, IntDomain};
use crate::eval::scratch;
use crate::value::Plain;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Type {
    Bool,
    Int,
    Tuple(Vec<Type>),
    Set(Box<Type>),
    MSet(Box<Type>),
    Seq(Box<Type>),
    Func(Box<Type>, Box<Type>),
    Part(Box<Type>),
    List(Box<Type>),
    /// Member type of an empty literal; unifies with anything.
    Any,
}

impl Type {
    pub fn of(d: &Domain) -> Type {
        match d {
            Domain::Bool => Type::Bool,
            Domain::Int(_) | Domain::Enum { .. } => Type::Int,
            Domain::Tuple(ds) => Type::Tuple(ds.iter().map(Type::of).collect()),
            Domain::Set { inner, .. } => Type::Set(Box::new(Type::of(inner))),
            Domain::MSet { inner, .. } => Type::MSet(Box::new(Type::of(inner))),
            Domain::Seq { inner, .. } => Type::Seq(Box::new(Type::of(inner))),
            Domain::Func { from, to, .. } => Type::Func(Box::new(Type::of(from)), Box::new(Type::of(to))),
            Domain::Part { inner, .. } => Type::Part(Box::new(Type::of(inner))),
        }
    }

    pub fn unify(&self, other: &Type) -> Option<Type> {
        use Type::*;
        let b = |t: Type| Box::new(t);
        Some(match (self, other) {
            (Any, t) | (t, Any) => t.clone(),
            (Bool, Bool) => Bool,
            (Int, Int) => Int,
            (Tuple(a), Tuple(c)) if a.len() == c.len() => {
                Tuple(a.iter().zip(c).map(|(x, y)| x.unify(y)).collect::<Option<_>>()?)
            }
            (Set(a), Set(c)) => Set(b(a.unify(c)?)),
            (MSet(a), MSet(c)) => MSet(b(a.unify(c)?)),
            (Seq(a), Seq(c)) => Seq(b(a.unify(c)?)),
            (List(a), List(c)) => List(b(a.unify(c)?)),
            (Part(a), Part(c)) => Part(b(a.unify(c)?)),
            (Func(a, x), Func(c, y)) => Func(b(a.unify(c)?), b(x.unify(y)?)),
            _ => return None,
        })
    }

    /// Type of the members a comprehension draws from a collection.
    pub fn member(&self) -> Option<Type> {
        match self {
            Type::Set(t) | Type::MSet(t) | Type::Seq(t) | Type::List(t) => Some((**t).clone()),
            Type::Func(a, b) => Some(Type::Tuple(vec![(**a).clone(), (**b).clone()])),
            Type::Part(t) => Some(Type::Set(t.clone())),
            _ => None,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Bool => write!(f, "bool"),
            Type::Int => write!(f, "int"),
            Type::Tuple(ts) => {
                write!(f, "tuple(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            Type::Set(t) => write!(f, "set of {t}"),
            Type::MSet(t) => write!(f, "mset of {t}"),
            Type::Seq(t) => write!(f, "sequence of {t}"),
            Type::Func(a, b) => write!(f, "function {a} --> {b}"),
            Type::Part(t) => write!(f, "partition from {t}"),
            Type::List(t) => write!(f, "list of {t}"),
            Type::Any => write!(f, "?"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AggKind {
    And,
    Or,
    Sum,
    Min,
    Max,
    AllDiff,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub kind: TermKind,
    pub ty: Type,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TermKind {
    Const(Plain),
    /// Decision variable by index into `Model::finds`.
    Var(usize),
    /// Comprehension binder by model-wide id.
    Bind(usize),
    Unary(UnOp, Box<Term>),
    Binary(BinOp, Box<Term>, Box<Term>),
    Abs(Box<Term>),
    Card(Box<Term>),
    ToInt(Box<Term>),
    /// Function application.
    Apply(Box<Term>, Box<Term>),
    /// 1-based sequence indexing.
    Index(Box<Term>, Box<Term>),
    Tuple(Vec<Term>),
    /// Tuple member, 0-based.
    Field(Box<Term>, usize),
    Parts(Box<Term>),
    Agg(AggKind, Coll),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Coll {
    Items(Vec<Term>),
    Comp(Box<Comp>),
}

/// One generator: `body` is instantiated once per member of `src` that
/// satisfies `guard`, with the member bound to `binder`.
#[derive(Clone, Debug, PartialEq)]
pub struct Comp {
    pub binder: usize,
    pub src: Term,
    pub guard: Option<Term>,
    pub body: Term,
}

impl Term {
    pub fn constant(p: Plain, ty: Type) -> Term {
        Term { kind: TermKind::Const(p), ty }
    }

    pub fn boolean(b: bool) -> Term {
        Term::constant(Plain::Bool(b), Type::Bool)
    }

    pub fn int(i: i64) -> Term {
        Term::constant(Plain::Int(i), Type::Int)
    }

    pub fn binary(op: BinOp, a: Term, b: Term, ty: Type) -> Term {
        Term { kind: TermKind::Binary(op, Box::new(a), Box::new(b)), ty }
    }

    pub fn as_const(&self) -> Option<&Plain> {
        match &self.kind {
            TermKind::Const(p) => Some(p),
            _ => None,
        }
    }

    /// Direct subterms, comprehension parts included.
    pub fn children(&self) -> Vec<&Term> {
        match &self.kind {
            TermKind::Const(_) | TermKind::Var(_) | TermKind::Bind(_) => Vec::new(),
            TermKind::Unary(_, a)
            | TermKind::Abs(a)
            | TermKind::Card(a)
            | TermKind::ToInt(a)
            | TermKind::Field(a, _)
            | TermKind::Parts(a) => vec![a],
            TermKind::Binary(_, a, b) | TermKind::Apply(a, b) | TermKind::Index(a, b) => vec![a, b],
            TermKind::Tuple(xs) => xs.iter().collect(),
            TermKind::Agg(_, Coll::Items(xs)) => xs.iter().collect(),
            TermKind::Agg(_, Coll::Comp(c)) => {
                let mut v = vec![&c.src];
                v.extend(c.guard.as_ref());
                v.push(&c.body);
                v
            }
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Term> {
        match &mut self.kind {
            TermKind::Const(_) | TermKind::Var(_) | TermKind::Bind(_) => Vec::new(),
            TermKind::Unary(_, a)
            | TermKind::Abs(a)
            | TermKind::Card(a)
            | TermKind::ToInt(a)
            | TermKind::Field(a, _)
            | TermKind::Parts(a) => vec![a],
            TermKind::Binary(_, a, b) | TermKind::Apply(a, b) | TermKind::Index(a, b) => vec![a, b],
            TermKind::Tuple(xs) => xs.iter_mut().collect(),
            TermKind::Agg(_, Coll::Items(xs)) => xs.iter_mut().collect(),
            TermKind::Agg(_, Coll::Comp(c)) => {
                let c = &mut **c;
                let mut v = vec![&mut c.src];
                v.extend(c.guard.as_mut());
                v.push(&mut c.body);
                v
            }
        }
    }

    /// Decision variables this term reads.
    pub fn vars(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.walk(&mut |t| {
            if let TermKind::Var(v) = t.kind {
                out.insert(v);
            }
        });
        out
    }

    pub fn binders(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.walk(&mut |t| {
            if let TermKind::Bind(b) = t.kind {
                out.insert(b);
            }
        });
        out
    }

    pub fn walk(&self, f: &mut impl FnMut(&Term)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Number of nodes, counting each comprehension template once.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Find {
    pub name: String,
    pub domain: Domain,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Objective {
    pub direction: Direction,
    pub term: Term,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub finds: Vec<Find>,
    pub constraints: Vec<Term>,
    pub objective: Option<Objective>,
    /// Ground values of givens and expression lettings, in declaration order.
    pub params: Vec<(String, Plain)>,
    pub num_binders: usize,
    /// Integer finds replaced by defining expressions before search.
    pub eliminated: Vec<(String, Domain, Term)>,
}

impl Model {
    pub fn find_index(&self, name: &str) -> Option<usize> {
        self.finds.iter().position(|f| f.name == name)
    }

    pub fn param(&self, name: &str) -> Option<&Plain> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }
}

#[derive(Clone, Debug)]
enum Entry {
    Const(Plain, Type),
    Var(usize, Type),
    Domain(Domain),
    EnumValue(i64),
}

struct Checker<'a> {
    params: &'a RawParams,
    scope: HashMap<String, Entry>,
    binders: Vec<(String, Term)>,
    num_binders: usize,
    model: Model,
}

pub fn instantiate(spec: &ast::Specification, params: &RawParams) -> Result<Model, LangError> {
    let mut c = Checker {
        params,
        scope: HashMap::new(),
        binders: Vec::new(),
        num_binders: 0,
        model: Model {
            finds: Vec::new(),
            constraints: Vec::new(),
            objective: None,
            params: Vec::new(),
            num_binders: 0,
            eliminated: Vec::new(),
        },
    };
    let declared: BTreeSet<&str> = spec.givens().map(|(n, _)| n.text.as_str()).collect();
    if let Some((n, _)) = params.bindings.iter().find(|(n, _)| !declared.contains(n.text.as_str())) {
        return Err(LangError::UnknownIdent { pos: n.pos, name: n.text.clone() });
    }
    for s in &spec.stmts {
        c.stmt(s)?;
    }
    c.model.num_binders = c.num_binders;
    Ok(c.model)
}

fn ty_err(msg: impl Into<String>) -> LangError {
    LangError::ty(Pos::default(), msg)
}

impl Checker<'_> {
    fn declare(&mut self, name: &ast::Name, e: Entry) -> Result<(), LangError> {
        if self.scope.contains_key(&name.text) {
            return Err(LangError::Duplicate { pos: name.pos, name: name.text.clone() });
        }
        self.scope.insert(name.text.clone(), e);
        Ok(())
    }

    fn declare_enum(&mut self, name: &ast::Name, names: &[ast::Name]) -> Result<(), LangError> {
        let d = Domain::Enum { name: name.text.clone(), names: names.iter().map(|n| n.text.clone()).collect() };
        self.declare(name, Entry::Domain(d))?;
        for (i, n) in names.iter().enumerate() {
            self.declare(n, Entry::EnumValue(i as i64))?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), LangError> {
        match s {
            Stmt::Given { names, domain } => {
                let d = self.domain(domain)?;
                for n in names {
                    let raw = self.params.get(&n.text).ok_or_else(|| LangError::MissingGiven(n.text.clone()))?;
                    let LettingValue::Expr(e) = raw else {
                        return Err(LangError::invalid(n.pos, format!("parameter '{}' must be a value", n.text)));
                    };
                    let p = self.ground(e)?;
                    d.check(&p).map_err(|m| LangError::invalid(n.pos, format!("parameter '{}': {m}", n.text)))?;
                    self.model.params.push((n.text.clone(), p.clone()));
                    self.declare(n, Entry::Const(p, Type::of(&d)))?;
                }
            }
            Stmt::GivenEnum { name } => match self.params.get(&name.text) {
                Some(LettingValue::Enum(names)) => {
                    let names = names.clone();
                    self.declare_enum(name, &names)?;
                }
                Some(_) => {
                    return Err(LangError::invalid(name.pos, format!("'{}' must be bound to a new enum type", name.text)))
                }
                None => return Err(LangError::MissingGiven(name.text.clone())),
            },
            Stmt::Letting { name, value } => match value {
                LettingValue::Expr(e) => {
                    let t = self.expr(e)?;
                    let p = self.eval_const(&t)?;
                    self.model.params.push((name.text.clone(), p.clone()));
                    self.declare(name, Entry::Const(p, t.ty))?;
                }
                LettingValue::Domain(d) => {
                    let d = self.domain(d)?;
                    self.declare(name, Entry::Domain(d))?;
                }
                LettingValue::Enum(names) => self.declare_enum(name, names)?,
            },
            Stmt::Find { names, domain } => {
                let d = self.domain(domain)?;
                if !d.is_finite() {
                    return Err(LangError::Unbounded {
                        pos: names[0].pos,
                        msg: format!("find '{}' has an infinite domain {d}", names[0].text),
                    });
                }
                for n in names {
                    let idx = self.model.finds.len();
                    self.model.finds.push(Find { name: n.text.clone(), domain: d.clone() });
                    self.declare(n, Entry::Var(idx, Type::of(&d)))?;
                }
            }
            Stmt::SuchThat(cs) => {
                for e in cs {
                    let t = self.expr(e)?;
                    if t.ty != Type::Bool {
                        return Err(ty_err(format!("constraint {e} has type {}, expected bool", t.ty)));
                    }
                    self.model.constraints.push(t);
                }
            }
            Stmt::Objective { direction, expr } => {
                if self.model.objective.is_some() {
                    return Err(LangError::invalid(Pos::default(), "more than one objective"));
                }
                let t = self.expr(expr)?;
                if t.ty != Type::Int {
                    return Err(ty_err(format!("objective {expr} has type {}, expected int", t.ty)));
                }
                self.model.objective = Some(Objective { direction: *direction, term: t });
            }
        }
        Ok(())
    }

    fn ground(&mut self, e: &ast::Expr) -> Result<Plain, LangError> {
        let t = self.expr(e)?;
        self.eval_const(&t)
    }

    fn eval_const(&self, t: &Term) -> Result<Plain, LangError> {
        if !t.vars().is_empty() {
            return Err(LangError::invalid(Pos::default(), "expression depends on a decision variable"));
        }
        scratch::eval_ground(t, self.num_binders)
            .ok_or_else(|| LangError::invalid(Pos::default(), "constant expression is undefined"))
    }

    fn ground_int(&mut self, e: &ast::Expr) -> Result<i64, LangError> {
        match self.ground(e)? {
            Plain::Int(i) => Ok(i),
            other => Err(ty_err(format!("{e} evaluates to {other}, expected int"))),
        }
    }

    fn ground_nat(&mut self, e: &ast::Expr) -> Result<u64, LangError> {
        let i = self.ground_int(e)?;
        u64::try_from(i).map_err(|_| LangError::invalid(Pos::default(), format!("{e} is negative")))
    }

    // ---- domains ----

    fn domain(&mut self, d: &DomainExpr) -> Result<Domain, LangError> {
        Ok(match d {
            DomainExpr::Bool => Domain::Bool,
            DomainExpr::Int(rs) if rs.is_empty() => Domain::Int(IntDomain::unbounded()),
            DomainExpr::Int(rs) => {
                let mut ranges = Vec::new();
                for r in rs {
                    ranges.push(match r {
                        RangeExpr::Single(e) => {
                            let v = self.ground_int(e)?;
                            (Some(v), Some(v))
                        }
                        RangeExpr::Between(lo, hi) => {
                            let lo = lo.as_ref().map(|e| self.ground_int(e)).transpose()?;
                            let hi = hi.as_ref().map(|e| self.ground_int(e)).transpose()?;
                            (lo, hi)
                        }
                    });
                }
                Domain::Int(IntDomain { ranges })
            }
            DomainExpr::Named(n) => match self.scope.get(&n.text) {
                Some(Entry::Domain(d)) => d.clone(),
                Some(_) => return Err(ty_err(format!("'{}' is not a domain", n.text))),
                None => return Err(LangError::UnknownIdent { pos: n.pos, name: n.text.clone() }),
            },
            DomainExpr::Tuple(ds) => Domain::Tuple(ds.iter().map(|d| self.domain(d)).collect::<Result<_, _>>()?),
            DomainExpr::Set(attrs, inner) => {
                let a = self.attrs(attrs, &[AttrName::Size, AttrName::MinSize, AttrName::MaxSize], "set")?;
                Domain::Set { card: a.card()?, inner: Box::new(self.domain(inner)?) }
            }
            DomainExpr::MSet(attrs, inner) => {
                let a = self.attrs(attrs, &[AttrName::Size, AttrName::MinSize, AttrName::MaxSize], "mset")?;
                Domain::MSet { card: a.card()?, inner: Box::new(self.domain(inner)?) }
            }
            DomainExpr::Seq(attrs, inner) => {
                let allowed = [AttrName::Size, AttrName::MinSize, AttrName::MaxSize, AttrName::Injective];
                let a = self.attrs(attrs, &allowed, "sequence")?;
                Domain::Seq { card: a.card()?, injective: a.has(AttrName::Injective), inner: Box::new(self.domain(inner)?) }
            }
            DomainExpr::Func(attrs, from, to) => {
                let allowed =
                    [AttrName::Size, AttrName::MinSize, AttrName::MaxSize, AttrName::Injective, AttrName::Total];
                let a = self.attrs(attrs, &allowed, "function")?;
                Domain::Func {
                    card: a.card()?,
                    total: a.has(AttrName::Total),
                    injective: a.has(AttrName::Injective),
                    from: Box::new(self.domain(from)?),
                    to: Box::new(self.domain(to)?),
                }
            }
            DomainExpr::Part(attrs, inner) => {
                let allowed = [
                    AttrName::Regular,
                    AttrName::NumParts,
                    AttrName::MinNumParts,
                    AttrName::MaxNumParts,
                    AttrName::PartSize,
                    AttrName::MinPartSize,
                    AttrName::MaxPartSize,
                ];
                let a = self.attrs(attrs, &allowed, "partition")?;
                let parts = a.card_of(AttrName::NumParts, AttrName::MinNumParts, AttrName::MaxNumParts)?;
                let part_size = a.card_of(AttrName::PartSize, AttrName::MinPartSize, AttrName::MaxPartSize)?;
                let part_size = Card { min: part_size.min.max(1), ..part_size };
                Domain::Part { parts, part_size, regular: a.has(AttrName::Regular), inner: Box::new(self.domain(inner)?) }
            }
            DomainExpr::Relation(attrs, ds) => {
                let a = self.attrs(attrs, &[AttrName::Size, AttrName::MinSize, AttrName::MaxSize], "relation")?;
                let inner = Domain::Tuple(ds.iter().map(|d| self.domain(d)).collect::<Result<_, _>>()?);
                Domain::Set { card: a.card()?, inner: Box::new(inner) }
            }
        })
    }

    fn attrs(&mut self, attrs: &[ast::Attr], allowed: &[AttrName], what: &str) -> Result<AttrVals, LangError> {
        let mut out = AttrVals::default();
        for a in attrs {
            if !allowed.contains(&a.name) {
                return Err(LangError::invalid(
                    Pos::default(),
                    format!("attribute '{}' does not apply to {what}", a.name.text()),
                ));
            }
            if out.0.contains_key(&a.name) {
                return Err(LangError::invalid(Pos::default(), format!("attribute '{}' given twice", a.name.text())));
            }
            let v = a.value.as_ref().map(|e| self.ground_nat(e)).transpose()?;
            out.0.insert(a.name, v);
        }
        Ok(out)
    }

    // ---- expressions ----

    fn lookup(&self, n: &ast::Name) -> Result<Term, LangError> {
        if let Some((_, t)) = self.binders.iter().rev().find(|(b, _)| *b == n.text) {
            return Ok(t.clone());
        }
        match self.scope.get(&n.text) {
            Some(Entry::Const(p, ty)) => Ok(Term::constant(p.clone(), ty.clone())),
            Some(Entry::Var(i, ty)) => Ok(Term { kind: TermKind::Var(*i), ty: ty.clone() }),
            Some(Entry::EnumValue(i)) => Ok(Term::int(*i)),
            Some(Entry::Domain(_)) => Err(ty_err(format!("domain '{}' used as a value", n.text))),
            None => Err(LangError::UnknownIdent { pos: n.pos, name: n.text.clone() }),
        }
    }

    /// Replaces a variable-free, binder-free non-Boolean term by its value.
    fn fold(&self, t: Term) -> Term {
        if t.ty == Type::Bool || matches!(t.kind, TermKind::Const(_) | TermKind::Var(_) | TermKind::Bind(_)) {
            return t;
        }
        let open = t.children().iter().any(|c| c.as_const().is_none());
        if open || matches!(t.kind, TermKind::Agg(..)) {
            return t;
        }
        match scratch::eval_ground(&t, self.num_binders) {
            Some(p) => Term::constant(p, t.ty),
            None => t,
        }
    }

    fn expect(&self, t: &Term, ty: &Type, ctx: &ast::Expr) -> Result<(), LangError> {
        if t.ty.unify(ty).is_none() {
            return Err(ty_err(format!("in {ctx}: expected {ty}, found {}", t.ty)));
        }
        Ok(())
    }

    fn expr(&mut self, e: &ast::Expr) -> Result<Term, LangError> {
        use ast::Expr as E;
        let t = match e {
            E::Int(n) => Term::int(*n),
            E::Bool(b) => Term::boolean(*b),
            E::Ident(n) => self.lookup(n)?,
            E::Unary(op, a) => {
                let a = self.expr(a)?;
                let ty = if *op == UnOp::Neg { Type::Int } else { Type::Bool };
                self.expect(&a, &ty, e)?;
                Term { kind: TermKind::Unary(*op, Box::new(a)), ty }
            }
            E::Binary(op, a, b) => self.binary(*op, a, b, e)?,
            E::Bars(a) => {
                let a = self.expr(a)?;
                match a.ty {
                    Type::Int => Term { kind: TermKind::Abs(Box::new(a)), ty: Type::Int },
                    Type::Set(_) | Type::MSet(_) | Type::Seq(_) | Type::Func(..) | Type::Part(_) => {
                        Term { kind: TermKind::Card(Box::new(a)), ty: Type::Int }
                    }
                    _ => return Err(ty_err(format!("in {e}: |.| needs an int or a collection, found {}", a.ty))),
                }
            }
            E::Call(b, args) => self.call(*b, args, e)?,
            E::Apply(f, x) => {
                let f = self.expr(f)?;
                let x = self.expr(x)?;
                match f.ty.clone() {
                    Type::Func(a, b) => {
                        self.expect(&x, &a, e)?;
                        Term { kind: TermKind::Apply(Box::new(f), Box::new(x)), ty: *b }
                    }
                    Type::Seq(t) => {
                        self.expect(&x, &Type::Int, e)?;
                        Term { kind: TermKind::Index(Box::new(f), Box::new(x)), ty: *t }
                    }
                    other => return Err(ty_err(format!("in {e}: cannot apply a value of type {other}"))),
                }
            }
            E::Tuple(xs) => {
                let ts = xs.iter().map(|x| self.expr(x)).collect::<Result<Vec<_>, _>>()?;
                let ty = Type::Tuple(ts.iter().map(|t| t.ty.clone()).collect());
                Term { kind: TermKind::Tuple(ts), ty }
            }
            E::Set(xs) => {
                let (ps, ty) = self.literal_members(xs, e)?;
                Term::constant(Plain::Set(ps.into_iter().collect()), Type::Set(Box::new(ty)))
            }
            E::MSet(xs) => {
                let (ps, ty) = self.literal_members(xs, e)?;
                let mut m = BTreeMap::new();
                for p in ps {
                    *m.entry(p).or_insert(0) += 1;
                }
                Term::constant(Plain::MSet(m), Type::MSet(Box::new(ty)))
            }
            E::Seq(xs) => {
                let (ps, ty) = self.literal_members(xs, e)?;
                Term::constant(Plain::Seq(ps), Type::Seq(Box::new(ty)))
            }
            E::Func(pairs) => {
                let (pre, a) = self.literal_members(&pairs.iter().map(|p| p.0.clone()).collect::<Vec<_>>(), e)?;
                let (img, b) = self.literal_members(&pairs.iter().map(|p| p.1.clone()).collect::<Vec<_>>(), e)?;
                let mut f = BTreeMap::new();
                for (p, i) in pre.into_iter().zip(img) {
                    if f.insert(p.clone(), i).is_some() {
                        return Err(LangError::invalid(Pos::default(), format!("in {e}: {p} mapped twice")));
                    }
                }
                Term::constant(Plain::Func(f), Type::Func(Box::new(a), Box::new(b)))
            }
            E::Part(parts) => {
                let mut out = BTreeSet::new();
                let mut ty = Type::Any;
                let mut seen = BTreeSet::new();
                for p in parts {
                    let (ps, t) = self.literal_members(p, e)?;
                    ty = ty.unify(&t).ok_or_else(|| ty_err(format!("in {e}: mixed member types")))?;
                    for x in &ps {
                        if !seen.insert(x.clone()) {
                            return Err(LangError::invalid(Pos::default(), format!("in {e}: {x} in two parts")));
                        }
                    }
                    out.insert(ps.into_iter().collect());
                }
                Term::constant(Plain::Part(out), Type::Part(Box::new(ty)))
            }
            E::List(_) | E::ListComp(..) => {
                return Err(ty_err(format!("list {e} may only appear as an argument of sum, min, max, and, or, allDiff")))
            }
            E::Quant(q, items, body) => {
                let kind = match q {
                    Quantifier::ForAll => AggKind::And,
                    Quantifier::Exists => AggKind::Or,
                    Quantifier::Sum => AggKind::Sum,
                    Quantifier::Min => AggKind::Min,
                    Quantifier::Max => AggKind::Max,
                };
                self.comprehension(kind, items, body, e)?
            }
        };
        Ok(self.fold(t))
    }

    fn literal_members(&mut self, xs: &[ast::Expr], ctx: &ast::Expr) -> Result<(Vec<Plain>, Type), LangError> {
        let mut ty = Type::Any;
        let mut out = Vec::new();
        for x in xs {
            let t = self.expr(x)?;
            ty = ty.unify(&t.ty).ok_or_else(|| ty_err(format!("in {ctx}: members of different types")))?;
            match t.kind {
                TermKind::Const(p) => out.push(p),
                _ => {
                    if !t.vars().is_empty() || !t.binders().is_empty() {
                        return Err(ty_err(format!("in {ctx}: collection literals must be constant")));
                    }
                    out.push(self.eval_const(&t)?);
                }
            }
        }
        Ok((out, ty))
    }

    fn binary(&mut self, op: BinOp, a: &ast::Expr, b: &ast::Expr, e: &ast::Expr) -> Result<Term, LangError> {
        let x = self.expr(a)?;
        let y = self.expr(b)?;
        let ty = match op {
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod => {
                self.expect(&x, &Type::Int, e)?;
                self.expect(&y, &Type::Int, e)?;
                Type::Int
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                self.expect(&x, &Type::Int, e)?;
                self.expect(&y, &Type::Int, e)?;
                Type::Bool
            }
            BinOp::Eq | BinOp::Neq => {
                if x.ty.unify(&y.ty).is_none() {
                    return Err(ty_err(format!("in {e}: cannot compare {} with {}", x.ty, y.ty)));
                }
                Type::Bool
            }
            BinOp::And | BinOp::Or | BinOp::Imply => {
                self.expect(&x, &Type::Bool, e)?;
                self.expect(&y, &Type::Bool, e)?;
                Type::Bool
            }
            BinOp::In => {
                let member = match &y.ty {
                    Type::Set(t) | Type::MSet(t) | Type::Seq(t) => (**t).clone(),
                    other => return Err(ty_err(format!("in {e}: 'in' needs a set, mset or sequence, found {other}"))),
                };
                self.expect(&x, &member, e)?;
                Type::Bool
            }
            BinOp::SubsetEq | BinOp::Union | BinOp::Intersect => {
                let ok = matches!((&x.ty, &y.ty), (Type::Set(_), Type::Set(_)) | (Type::MSet(_), Type::MSet(_)));
                let joined = x.ty.unify(&y.ty).filter(|_| ok);
                let Some(joined) = joined else {
                    return Err(ty_err(format!("in {e}: operands must be two sets or two msets")));
                };
                if op == BinOp::SubsetEq { Type::Bool } else { joined }
            }
        };
        Ok(Term::binary(op, x, y, ty))
    }

    fn call(&mut self, b: Builtin, args: &[ast::Expr], e: &ast::Expr) -> Result<Term, LangError> {
        let one = |args: &[ast::Expr]| -> Result<(), LangError> {
            if args.len() != 1 {
                return Err(ty_err(format!("{} takes one argument", b.text())));
            }
            Ok(())
        };
        match b {
            Builtin::ToInt => {
                one(args)?;
                let a = self.expr(&args[0])?;
                self.expect(&a, &Type::Bool, e)?;
                Ok(Term { kind: TermKind::ToInt(Box::new(a)), ty: Type::Int })
            }
            Builtin::Parts => {
                one(args)?;
                let a = self.expr(&args[0])?;
                let Type::Part(t) = a.ty.clone() else {
                    return Err(ty_err(format!("in {e}: parts needs a partition, found {}", a.ty)));
                };
                Ok(Term { kind: TermKind::Parts(Box::new(a)), ty: Type::Set(Box::new(Type::Set(t))) })
            }
            Builtin::Sum | Builtin::Min | Builtin::Max | Builtin::And | Builtin::Or | Builtin::AllDiff => {
                let (kind, member) = match b {
                    Builtin::Sum => (AggKind::Sum, Type::Int),
                    Builtin::Min => (AggKind::Min, Type::Int),
                    Builtin::Max => (AggKind::Max, Type::Int),
                    Builtin::And => (AggKind::And, Type::Bool),
                    Builtin::Or => (AggKind::Or, Type::Bool),
                    _ => (AggKind::AllDiff, Type::Any),
                };
                let coll = if args.len() >= 2 && matches!(kind, AggKind::Sum | AggKind::Min | AggKind::Max) {
                    Coll::Items(args.iter().map(|a| self.expr(a)).collect::<Result<_, _>>()?)
                } else {
                    one(args)?;
                    self.collection(kind, &args[0])?
                };
                let members: Vec<&Term> = match &coll {
                    Coll::Items(xs) => xs.iter().collect(),
                    Coll::Comp(c) => vec![&c.body],
                };
                let mut mt = Type::Any;
                for m in members {
                    mt = mt
                        .unify(&m.ty)
                        .filter(|t| t.unify(&member).is_some())
                        .ok_or_else(|| ty_err(format!("in {e}: members must be {member}, found {}", m.ty)))?;
                }
                let ty = match kind {
                    AggKind::Sum | AggKind::Min | AggKind::Max => Type::Int,
                    _ => Type::Bool,
                };
                Ok(Term { kind: TermKind::Agg(kind, coll), ty })
            }
        }
    }

    /// The argument of an aggregate: a list literal, a list comprehension or
    /// a collection whose members are aggregated.
    fn collection(&mut self, kind: AggKind, a: &ast::Expr) -> Result<Coll, LangError> {
        match a {
            ast::Expr::List(xs) => Ok(Coll::Items(xs.iter().map(|x| self.expr(x)).collect::<Result<_, _>>()?)),
            ast::Expr::ListComp(body, items) => match self.comprehension(kind, items, body, a)?.kind {
                TermKind::Agg(_, c) => Ok(c),
                _ => unreachable!(),
            },
            _ => {
                let src = self.expr(a)?;
                let ty = match &src.ty {
                    Type::Set(t) | Type::MSet(t) | Type::Seq(t) => (**t).clone(),
                    other => return Err(ty_err(format!("cannot aggregate over {other}"))),
                };
                let binder = self.fresh_binder();
                let body = Term { kind: TermKind::Bind(binder), ty };
                Ok(Coll::Comp(Box::new(Comp { binder, src, guard: None, body })))
            }
        }
    }

    fn fresh_binder(&mut self) -> usize {
        self.num_binders += 1;
        self.num_binders - 1
    }

    fn bind_pattern(&mut self, p: &Pattern, t: Term) -> Result<usize, LangError> {
        match p {
            Pattern::Name(n) => {
                self.binders.push((n.text.clone(), t));
                Ok(1)
            }
            Pattern::Wild => Ok(0),
            Pattern::Tuple(ps) => {
                let Type::Tuple(ts) = t.ty.clone() else {
                    return Err(ty_err(format!("tuple pattern {p} cannot match {}", t.ty)));
                };
                if ts.len() != ps.len() {
                    return Err(ty_err(format!("tuple pattern {p} cannot match {}", t.ty)));
                }
                let mut n = 0;
                for (k, (q, ty)) in ps.iter().zip(ts).enumerate() {
                    let field = Term { kind: TermKind::Field(Box::new(t.clone()), k), ty };
                    n += self.bind_pattern(q, field)?;
                }
                Ok(n)
            }
        }
    }

    fn comprehension(
        &mut self,
        kind: AggKind,
        items: &[CompItem],
        body: &ast::Expr,
        e: &ast::Expr,
    ) -> Result<Term, LangError> {
        let mut groups: Vec<(&ast::Generator, Vec<&ast::Expr>)> = Vec::new();
        for it in items {
            match it {
                CompItem::Gen(g) => groups.push((g, Vec::new())),
                CompItem::Cond(c) => match groups.last_mut() {
                    Some(last) => last.1.push(c),
                    None => return Err(ty_err(format!("in {e}: a condition must follow a generator"))),
                },
            }
        }
        if groups.len() > 1 && !matches!(kind, AggKind::And | AggKind::Or | AggKind::Sum) {
            return Err(ty_err(format!("in {e}: {kind:?} over a comprehension takes a single generator")));
        }
        let ty = match kind {
            AggKind::Sum | AggKind::Min | AggKind::Max => Type::Int,
            _ => Type::Bool,
        };
        self.nest(kind, &groups, body, e, ty)
    }

    fn nest(
        &mut self,
        kind: AggKind,
        groups: &[(&ast::Generator, Vec<&ast::Expr>)],
        body: &ast::Expr,
        e: &ast::Expr,
        ty: Type,
    ) -> Result<Term, LangError> {
        let (g, conds) = &groups[0];
        let src = match &g.source {
            GenSource::In(s) => self.expr(s)?,
            GenSource::Domain(d) => {
                let d = self.domain(d)?;
                let vals = d
                    .enumerate()
                    .ok_or_else(|| LangError::Unbounded { pos: Pos::default(), msg: format!("cannot iterate over {d}") })?;
                Term::constant(Plain::Set(vals.iter().map(|v| v.to_plain()).collect()), Type::Set(Box::new(Type::of(&d))))
            }
        };
        let member = src
            .ty
            .member()
            .ok_or_else(|| ty_err(format!("in {e}: cannot iterate over {}", src.ty)))?;
        let binder = self.fresh_binder();
        let pushed = self.bind_pattern(&g.pattern, Term { kind: TermKind::Bind(binder), ty: member })?;
        let result = (|| {
            let mut guard: Option<Term> = None;
            for c in conds {
                let t = self.expr(c)?;
                self.expect(&t, &Type::Bool, e)?;
                guard = Some(match guard {
                    None => t,
                    Some(g) => Term::binary(BinOp::And, g, t, Type::Bool),
                });
            }
            let inner = if groups.len() > 1 {
                self.nest(kind, &groups[1..], body, e, ty.clone())?
            } else {
                let b = self.expr(body)?;
                let want = if matches!(kind, AggKind::AllDiff) { b.ty.clone() } else { ty.clone() };
                self.expect(&b, &want, e)?;
                b
            };
            Ok(Term { kind: TermKind::Agg(kind, Coll::Comp(Box::new(Comp { binder, src, guard, body: inner }))), ty: ty.clone() })
        })();
        self.binders.truncate(self.binders.len() - pushed);
        result
    }
}

#[derive(Default)]
struct AttrVals(BTreeMap<AttrName, Option<u64>>);

impl AttrVals {
    fn has(&self, a: AttrName) -> bool {
        self.0.contains_key(&a)
    }

    fn get(&self, a: AttrName) -> Option<u64> {
        self.0.get(&a).copied().flatten()
    }

    fn card(&self) -> Result<Card, LangError> {
        self.card_of(AttrName::Size, AttrName::MinSize, AttrName::MaxSize)
    }

    fn card_of(&self, exact: AttrName, min: AttrName, max: AttrName) -> Result<Card, LangError> {
        if let Some(n) = self.get(exact) {
            if self.has(min) || self.has(max) {
                return Err(LangError::invalid(
                    Pos::default(),
                    format!("'{}' excludes '{}' and '{}'", exact.text(), min.text(), max.text()),
                ));
            }
            return Ok(Card::exact(n));
        }
        let c = Card { min: self.get(min).unwrap_or(0), max: self.get(max) };
        if c.max.is_some_and(|m| m < c.min) {
            return Err(LangError::invalid(Pos::default(), format!("'{}' exceeds '{}'", min.text(), max.text())));
        }
        Ok(c)
    }
}
