#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Dist,
    Dot,
    Norm,
    Min,
    Max,
    Abs,
    Exp,
    Clamp,
    Gate,
}

/// Argument count bounds: `(min, max)`, `None` meaning unbounded.
pub(crate) struct Arity(pub usize, pub Option<usize>);

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Dist => "dist",
            Func::Dot => "dot",
            Func::Norm => "norm",
            Func::Min => "min",
            Func::Max => "max",
            Func::Abs => "abs",
            Func::Exp => "exp",
            Func::Clamp => "clamp",
            Func::Gate => "gate",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "dist" => Func::Dist,
            "dot" => Func::Dot,
            "norm" => Func::Norm,
            "min" => Func::Min,
            "max" => Func::Max,
            "abs" => Func::Abs,
            "exp" => Func::Exp,
            "clamp" => Func::Clamp,
            "gate" => Func::Gate,
            _ => return None,
        })
    }

    pub(crate) fn arity(self) -> Arity {
        match self {
            Func::Dist | Func::Dot => Arity(2, Some(2)),
            Func::Norm | Func::Abs | Func::Exp => Arity(1, Some(1)),
            Func::Min | Func::Max => Arity(1, None),
            Func::Clamp | Func::Gate => Arity(3, Some(3)),
        }
    }

    pub const ALL: [Func; 9] = [
        Func::Dist,
        Func::Dot,
        Func::Norm,
        Func::Min,
        Func::Max,
        Func::Abs,
        Func::Exp,
        Func::Clamp,
        Func::Gate,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Ident(String),
    /// `vec(a, b, ...)`
    Vector(Vec<Expr>),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    Index(Box<Expr>, usize),
}

impl Expr {
    pub fn ident(name: &str) -> Self {
        Expr::Ident(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: Expr) -> Self {
        Expr::Neg(Box::new(e))
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Self {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn call(f: Func, args: Vec<Expr>) -> Self {
        Expr::Call(f, args)
    }

    pub fn depth(&self) -> usize {
        1 + match self {
            Expr::Num(_) | Expr::Ident(_) => 0,
            Expr::Neg(e) | Expr::Index(e, _) => e.depth(),
            Expr::Binary(_, l, r) => l.depth().max(r.depth()),
            Expr::Vector(xs) | Expr::Call(_, xs) => xs.iter().map(Expr::depth).max().unwrap_or(0),
        }
    }

    pub(crate) fn collect_idents<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Num(_) => {}
            Expr::Ident(n) => out.push(n),
            Expr::Neg(e) | Expr::Index(e, _) => e.collect_idents(out),
            Expr::Binary(_, l, r) => {
                l.collect_idents(out);
                r.collect_idents(out);
            }
            Expr::Vector(xs) | Expr::Call(_, xs) => xs.iter().for_each(|x| x.collect_idents(out)),
        }
    }
}
