//! A small expression language for metric definitions.
//!
//! The grammar is documented in `docs/expression-grammar.md`. Expressions
//! evaluate over anything implementing [`Scalar`], so the same AST yields
//! plain values and jets.

mod eval;
mod lexer;
mod parser;

#[cfg(test)]
mod tests;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::jet::JetError;

pub use eval::{eval, Env};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("unrecognized character {found:?} at byte {position}")]
    Lex { position: usize, found: char },
    #[error("{message} at byte {position} (expected one of: {})", expected.join(", "))]
    Parse {
        message: String,
        position: usize,
        expected: Vec<String>,
    },
    #[error("{func} takes {expected} argument(s), found {found} at byte {position}")]
    Arity {
        func: String,
        expected: usize,
        found: usize,
        position: usize,
    },
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("vector arguments of {func} have lengths {left} and {right}")]
    LengthMismatch {
        func: String,
        left: usize,
        right: usize,
    },
    #[error(transparent)]
    Domain(#[from] JetError),
}

impl ExprError {
    /// Byte offset of the error in the source, when known.
    pub fn position(&self) -> Option<usize> {
        match self {
            ExprError::Lex { position, .. }
            | ExprError::Parse { position, .. }
            | ExprError::Arity { position, .. } => Some(*position),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Abs2,
    Dot,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs2" => Func::Abs2,
            "dot" => Func::Dot,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs2 => "abs2",
            Func::Dot => "dot",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Dot => 2,
            _ => 1,
        }
    }

    /// Whether the arguments are vector names rather than scalar expressions.
    pub fn takes_vectors(self) -> bool {
        matches!(self, Func::Abs2 | Func::Dot)
    }
}

/// A vector-valued name: the position `x`, the direction `y`, or a parameter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum VecRef {
    X,
    Y,
    Param(String),
}

impl fmt::Display for VecRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VecRef::X => f.write_str("x"),
            VecRef::Y => f.write_str("y"),
            VecRef::Param(p) => f.write_str(p),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Expr {
    Num(f64),
    /// `x<i>` with a 1-based index.
    X(usize),
    /// `y<i>` with a 1-based index.
    Y(usize),
    /// A named parameter, either a scalar or a component `name<i>` of a vector.
    Param { name: String, index: Option<usize> },
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    /// Power with an exponent free of `x` and `y`.
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    VecCall(Func, Vec<VecRef>),
}

impl Expr {
    /// True when the subtree does not mention `x` or `y`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Param { .. } => true,
            Expr::X(_) | Expr::Y(_) => false,
            Expr::Neg(a) => a.is_constant(),
            Expr::Bin(_, a, b) | Expr::Pow(a, b) => a.is_constant() && b.is_constant(),
            Expr::Call(_, args) => args.iter().all(Expr::is_constant),
            Expr::VecCall(_, args) => args.iter().all(|v| matches!(v, VecRef::Param(_))),
        }
    }

    /// True when the subtree does not mention `y`.
    pub fn is_y_free(&self) -> bool {
        match self {
            Expr::Y(_) => false,
            Expr::Num(_) | Expr::X(_) | Expr::Param { .. } => true,
            Expr::Neg(a) => a.is_y_free(),
            Expr::Bin(_, a, b) | Expr::Pow(a, b) => a.is_y_free() && b.is_y_free(),
            Expr::Call(_, args) => args.iter().all(Expr::is_y_free),
            Expr::VecCall(_, args) => !args.contains(&VecRef::Y),
        }
    }

    /// Largest `x`/`y` component index used, 0 if none.
    pub fn max_index(&self) -> usize {
        match self {
            Expr::X(i) | Expr::Y(i) => *i,
            Expr::Num(_) | Expr::Param { .. } | Expr::VecCall(..) => 0,
            Expr::Neg(a) => a.max_index(),
            Expr::Bin(_, a, b) | Expr::Pow(a, b) => a.max_index().max(b.max_index()),
            Expr::Call(_, args) => args.iter().map(Expr::max_index).max().unwrap_or(0),
        }
    }

    /// Parameter names referenced, each with whether it is used as a vector
    /// (component access or vector argument).
    pub fn params(&self) -> BTreeMap<String, bool> {
        let mut out = BTreeMap::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeMap<String, bool>) {
        match self {
            Expr::Param { name, index } => {
                *out.entry(name.clone()).or_insert(false) |= index.is_some();
            }
            Expr::Neg(a) => a.collect_params(out),
            Expr::Bin(_, a, b) | Expr::Pow(a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_params(out)),
            Expr::VecCall(_, args) => {
                for v in args {
                    if let VecRef::Param(p) = v {
                        out.insert(p.clone(), true);
                    }
                }
            }
            _ => {}
        }
    }
}

/// Fully parenthesized rendering that reparses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::X(i) => write!(f, "x{i}"),
            Expr::Y(i) => write!(f, "y{i}"),
            Expr::Param { name, index: None } => f.write_str(name),
            Expr::Param {
                name,
                index: Some(i),
            } => write!(f, "{name}{i}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Pow(a, b) => write!(f, "({a}^{b})"),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Expr::VecCall(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Tokenizes and parses in one step.
pub fn parse_str(src: &str) -> Result<Expr, ExprError> {
    parse(&tokenize(src)?)
}
