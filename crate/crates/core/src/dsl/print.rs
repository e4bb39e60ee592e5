use std::fmt;

use super::ast::Expr;

impl Expr {
    fn needs_parens_as_operand(&self) -> bool {
        matches!(self, Expr::Binary(..))
    }

    fn needs_parens_as_index_base(&self) -> bool {
        match self {
            Expr::Binary(..) => true,
            Expr::Num(v) => v.is_sign_negative(),
            _ => false,
        }
    }
}

fn list(f: &mut fmt::Formatter<'_>, xs: &[Expr]) -> fmt::Result {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

/// Canonical form: nested binary operations are always parenthesized,
/// negation is written `neg(..)`, numbers use the shortest exact decimal.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Ident(n) => f.write_str(n),
            Expr::Vector(xs) => {
                f.write_str("vec(")?;
                list(f, xs)?;
                f.write_str(")")
            }
            Expr::Neg(e) => write!(f, "neg({e})"),
            Expr::Binary(op, l, r) => {
                for (i, side) in [l, r].into_iter().enumerate() {
                    if i == 1 {
                        write!(f, " {} ", op.symbol())?;
                    }
                    if side.needs_parens_as_operand() {
                        write!(f, "({side})")?;
                    } else {
                        write!(f, "{side}")?;
                    }
                }
                Ok(())
            }
            Expr::Call(func, xs) => {
                write!(f, "{}(", func.name())?;
                list(f, xs)?;
                f.write_str(")")
            }
            Expr::Index(e, i) => {
                if e.needs_parens_as_index_base() {
                    write!(f, "({e})[{i}]")
                } else {
                    write!(f, "{e}[{i}]")
                }
            }
        }
    }
}
