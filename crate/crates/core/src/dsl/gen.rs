use rand::Rng;

use super::ast::{BinOp, Expr, Func};

const IDENTS: [&str; 5] = ["action", "goal", "g1", "g2", "w"];

fn leaf<R: Rng + ?Sized>(rng: &mut R) -> Expr {
    if rng.random_bool(0.5) {
        // mix of integers, fractions, signs and magnitudes
        let v = match rng.random_range(0..4) {
            0 => rng.random_range(-20i32..=20) as f64,
            1 => rng.random_range(-1.0..1.0),
            2 => rng.random_range(-1e6..1e6),
            _ => rng.random_range(-1e-3..1e-3),
        };
        Expr::Num(v)
    } else {
        Expr::ident(IDENTS[rng.random_range(0..IDENTS.len())])
    }
}

/// Random expression of depth at most `max_depth`, without regard to typing.
/// Used to exercise the printer and parser.
pub fn random_expr<R: Rng + ?Sized>(rng: &mut R, max_depth: usize) -> Expr {
    if max_depth <= 1 || rng.random_bool(0.2) {
        return leaf(rng);
    }
    let d = max_depth - 1;
    match rng.random_range(0..5) {
        0 => {
            let n = rng.random_range(1..=3);
            Expr::Vector((0..n).map(|_| random_expr(rng, d)).collect())
        }
        1 => Expr::neg(random_expr(rng, d)),
        2 => {
            let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][rng.random_range(0..4)];
            Expr::binary(op, random_expr(rng, d), random_expr(rng, d))
        }
        3 => {
            let f = Func::ALL[rng.random_range(0..Func::ALL.len())];
            let super::ast::Arity(lo, hi) = f.arity();
            let n = rng.random_range(lo..=hi.unwrap_or(lo + 2));
            Expr::call(f, (0..n).map(|_| random_expr(rng, d)).collect())
        }
        _ => Expr::Index(Box::new(random_expr(rng, d)), rng.random_range(0..3)),
    }
}
