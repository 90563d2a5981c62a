//! Specification language: lexing, parsing, printing and instantiation.

pub mod ast;
pub mod lexer;
pub mod model;
pub mod parser;
pub mod printer;

use std::fmt;

use thiserror::Error;

pub use ast::Specification;
pub use model::{instantiate, Find, Model, Objective};
pub use parser::{parse_params, parse_spec, RawParams};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LangError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("empty specification")]
    Empty,
    #[error("{pos}: unknown identifier '{name}'")]
    UnknownIdent { pos: Pos, name: String },
    #[error("{pos}: unknown attribute '{name}'")]
    UnknownAttr { pos: Pos, name: String },
    #[error("{pos}: duplicate binding for '{name}'")]
    Duplicate { pos: Pos, name: String },
    #[error("missing value for given '{0}'")]
    MissingGiven(String),
    #[error("{pos}: type error: {msg}")]
    Type { pos: Pos, msg: String },
    #[error("{pos}: unbounded domain: {msg}")]
    Unbounded { pos: Pos, msg: String },
    #[error("{pos}: {msg}")]
    Invalid { pos: Pos, msg: String },
}

impl LangError {
    pub fn syntax(pos: Pos, msg: impl Into<String>) -> Self {
        LangError::Syntax { pos, msg: msg.into() }
    }

    pub fn ty(pos: Pos, msg: impl Into<String>) -> Self {
        LangError::Type { pos, msg: msg.into() }
    }

    pub fn invalid(pos: Pos, msg: impl Into<String>) -> Self {
        LangError::Invalid { pos, msg: msg.into() }
    }
}
