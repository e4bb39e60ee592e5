//! Reward programs: a small, loop-free expression language for scoring a
//! candidate action against named scene quantities.
//!
//! ```text
//! program  = expr ;
//! expr     = term { ("+" | "-") term } ;
//! term     = unary { ("*" | "/") unary } ;
//! unary    = "-" unary | postfix ;
//! postfix  = primary { "[" integer "]" } ;
//! primary  = number | ident | ident "(" [ expr { "," expr } ] ")" | "(" expr ")" ;
//! number   = digit { digit } [ "." { digit } ] [ ("e" | "E") [ "+" | "-" ] digit { digit } ] ;
//! ident    = (letter | "_") { letter | digit | "_" } ;
//! ```
//!
//! Callable names: `neg(x)`, `vec(x, ...)`, `dist(u, v)`, `dot(u, v)`,
//! `norm(v)`, `min(x, ...)`, `max(x, ...)`, `abs(x)`, `exp(x)`,
//! `clamp(x, lo, hi)` and `gate(c, then, else)` (picks `then` when `c > 0`).
//! Values are scalars or vectors; `+`/`-` need matching kinds, `*` allows a
//! scalar on either side and `/` a scalar divisor. A program must evaluate
//! to a finite scalar, higher meaning better aligned.

mod ast;
mod eval;
mod gen;
mod parse;
mod print;

pub use ast::{BinOp, Expr, Func};
pub use eval::{EvalScope, Type, Value, ACTION};
pub use gen::random_expr;
pub use parse::parse;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DslError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function {name:?} at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("{name} expects {expected} argument(s), got {got} (offset {offset})")]
    Arity {
        name: String,
        expected: String,
        got: usize,
        offset: usize,
    },
    #[error("unbound identifier {0:?}")]
    Unbound(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("type error: {0}")]
    Type(String),
    #[error("program produced a non-finite value")]
    NonFinite,
    #[error("invalid scope: {0}")]
    Scope(String),
}

pub type Result<T, E = DslError> = std::result::Result<T, E>;

/// A parsed reward program and its canonical source text.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardProgram {
    source: String,
    ast: Expr,
}

impl RewardProgram {
    pub fn parse(source: &str) -> Result<Self> {
        let ast = parse(source)?;
        Ok(Self {
            source: source.to_string(),
            ast,
        })
    }

    pub fn from_ast(ast: Expr) -> Self {
        Self {
            source: ast.to_string(),
            ast,
        }
    }

    /// Text as originally supplied.
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    /// Canonical rendering; `parse(print(p))` reproduces `p.ast()`.
    pub fn print(&self) -> String {
        self.ast.to_string()
    }

    /// Check that every identifier is bound in `scope` and that the program
    /// is well typed and scalar-valued there.
    pub fn validate(&self, scope: &EvalScope) -> Result<()> {
        match self.ast.infer(scope)? {
            Type::Scalar => Ok(()),
            Type::Vector(n) => Err(DslError::Type(format!(
                "program yields a vector of length {n}, expected a scalar"
            ))),
        }
    }

    pub fn evaluate(&self, scope: &EvalScope) -> Result<f64> {
        eval::evaluate(&self.ast, scope)
    }

    /// Score `action` against the other bindings in `scope`.
    pub fn evaluate_action(&self, scope: &EvalScope, action: &[f64]) -> Result<f64> {
        eval::evaluate_action(&self.ast, scope, action)
    }

    pub fn identifiers(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.ast.collect_idents(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl std::fmt::Display for RewardProgram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.ast)
    }
}
