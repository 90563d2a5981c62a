//! Surface syntax tree of specifications and parameter files.

use super::Pos;

/// An identifier occurrence. Equality ignores the source position.
#[derive(Clone, Debug)]
pub struct Name {
    pub text: String,
    pub pos: Pos,
}

impl PartialEq for Name {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl Name {
    pub fn new(text: impl Into<String>) -> Self {
        Name { text: text.into(), pos: Pos::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Minimising,
    Maximising,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LettingValue {
    Expr(Expr),
    Domain(DomainExpr),
    Enum(Vec<Name>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Given { names: Vec<Name>, domain: DomainExpr },
    GivenEnum { name: Name },
    Letting { name: Name, value: LettingValue },
    Find { names: Vec<Name>, domain: DomainExpr },
    SuchThat(Vec<Expr>),
    Objective { direction: Direction, expr: Expr },
}

/// A parsed specification; statements keep their source order because later
/// declarations may refer to earlier ones.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Specification {
    pub stmts: Vec<Stmt>,
}

impl Specification {
    pub fn givens(&self) -> impl Iterator<Item = (&Name, Option<&DomainExpr>)> {
        self.stmts.iter().flat_map(|s| -> Vec<(&Name, Option<&DomainExpr>)> {
            match s {
                Stmt::Given { names, domain } => names.iter().map(|n| (n, Some(domain))).collect(),
                Stmt::GivenEnum { name } => vec![(name, None)],
                _ => Vec::new(),
            }
        })
    }

    pub fn lettings(&self) -> impl Iterator<Item = (&Name, &LettingValue)> {
        self.stmts.iter().filter_map(|s| match s {
            Stmt::Letting { name, value } => Some((name, value)),
            _ => None,
        })
    }

    pub fn finds(&self) -> impl Iterator<Item = (&Name, &DomainExpr)> {
        self.stmts.iter().flat_map(|s| -> Vec<(&Name, &DomainExpr)> {
            match s {
                Stmt::Find { names, domain } => names.iter().map(|n| (n, domain)).collect(),
                _ => Vec::new(),
            }
        })
    }

    pub fn constraints(&self) -> impl Iterator<Item = &Expr> {
        self.stmts.iter().flat_map(|s| match s {
            Stmt::SuchThat(cs) => cs.iter().collect::<Vec<_>>(),
            _ => Vec::new(),
        })
    }

    pub fn objective(&self) -> Option<(Direction, &Expr)> {
        self.stmts.iter().find_map(|s| match s {
            Stmt::Objective { direction, expr } => Some((*direction, expr)),
            _ => None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttrName {
    Size,
    MinSize,
    MaxSize,
    Injective,
    Total,
    Regular,
    NumParts,
    MinNumParts,
    MaxNumParts,
    PartSize,
    MinPartSize,
    MaxPartSize,
}

impl AttrName {
    pub const ALL: [(AttrName, &'static str, bool); 12] = [
        (AttrName::Size, "size", true),
        (AttrName::MinSize, "minSize", true),
        (AttrName::MaxSize, "maxSize", true),
        (AttrName::Injective, "injective", false),
        (AttrName::Total, "total", false),
        (AttrName::Regular, "regular", false),
        (AttrName::NumParts, "numParts", true),
        (AttrName::MinNumParts, "minNumParts", true),
        (AttrName::MaxNumParts, "maxNumParts", true),
        (AttrName::PartSize, "partSize", true),
        (AttrName::MinPartSize, "minPartSize", true),
        (AttrName::MaxPartSize, "maxPartSize", true),
    ];

    pub fn text(self) -> &'static str {
        Self::ALL.iter().find(|(a, _, _)| *a == self).unwrap().1
    }

    pub fn takes_value(self) -> bool {
        Self::ALL.iter().find(|(a, _, _)| *a == self).unwrap().2
    }

    pub fn parse(s: &str) -> Option<AttrName> {
        Self::ALL.iter().find(|(_, t, _)| *t == s).map(|(a, _, _)| *a)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Attr {
    pub name: AttrName,
    pub value: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RangeExpr {
    Single(Expr),
    Between(Option<Expr>, Option<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum DomainExpr {
    Bool,
    /// Empty range list means unbounded `int`.
    Int(Vec<RangeExpr>),
    Named(Name),
    Tuple(Vec<DomainExpr>),
    Set(Vec<Attr>, Box<DomainExpr>),
    MSet(Vec<Attr>, Box<DomainExpr>),
    Seq(Vec<Attr>, Box<DomainExpr>),
    Func(Vec<Attr>, Box<DomainExpr>, Box<DomainExpr>),
    Part(Vec<Attr>, Box<DomainExpr>),
    Relation(Vec<Attr>, Vec<DomainExpr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Imply,
    In,
    SubsetEq,
    Union,
    Intersect,
}

impl BinOp {
    pub fn text(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "=",
            BinOp::Neq => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "/\\",
            BinOp::Or => "\\/",
            BinOp::Imply => "->",
            BinOp::In => "in",
            BinOp::SubsetEq => "subsetEq",
            BinOp::Union => "union",
            BinOp::Intersect => "intersect",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    ToInt,
    AllDiff,
    Sum,
    Min,
    Max,
    And,
    Or,
    Parts,
}

impl Builtin {
    pub const ALL: [(Builtin, &'static str); 8] = [
        (Builtin::ToInt, "toInt"),
        (Builtin::AllDiff, "allDiff"),
        (Builtin::Sum, "sum"),
        (Builtin::Min, "min"),
        (Builtin::Max, "max"),
        (Builtin::And, "and"),
        (Builtin::Or, "or"),
        (Builtin::Parts, "parts"),
    ];

    pub fn text(self) -> &'static str {
        Self::ALL.iter().find(|(b, _)| *b == self).unwrap().1
    }

    pub fn parse(s: &str) -> Option<Builtin> {
        Self::ALL.iter().find(|(_, t)| *t == s).map(|(b, _)| *b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantifier {
    ForAll,
    Exists,
    Sum,
    Min,
    Max,
}

impl Quantifier {
    pub fn text(self) -> &'static str {
        match self {
            Quantifier::ForAll => "forAll",
            Quantifier::Exists => "exists",
            Quantifier::Sum => "sum",
            Quantifier::Min => "min",
            Quantifier::Max => "max",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Pattern {
    Name(Name),
    Wild,
    Tuple(Vec<Pattern>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum GenSource {
    In(Expr),
    Domain(DomainExpr),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub pattern: Pattern,
    pub source: GenSource,
}

/// Either a generator or a guard condition inside a comprehension.
#[derive(Clone, Debug, PartialEq)]
pub enum CompItem {
    Gen(Generator),
    Cond(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Ident(Name),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `|e|`: absolute value or cardinality.
    Bars(Box<Expr>),
    Call(Builtin, Vec<Expr>),
    /// Function application or sequence indexing, `f(x)`.
    Apply(Box<Expr>, Box<Expr>),
    Tuple(Vec<Expr>),
    Set(Vec<Expr>),
    MSet(Vec<Expr>),
    Seq(Vec<Expr>),
    Func(Vec<(Expr, Expr)>),
    Part(Vec<Vec<Expr>>),
    List(Vec<Expr>),
    ListComp(Box<Expr>, Vec<CompItem>),
    Quant(Quantifier, Vec<CompItem>, Box<Expr>),
}
