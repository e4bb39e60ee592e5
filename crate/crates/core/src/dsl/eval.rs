use std::collections::BTreeMap;

use super::ast::{BinOp, Expr, Func};
use super::{DslError, Result};

/// Name under which the candidate action is bound.
pub const ACTION: &str = "action";

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Type {
    Scalar,
    Vector(usize),
}

impl std::fmt::Display for Type {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Type::Scalar => f.write_str("scalar"),
            Type::Vector(n) => write!(f, "vector[{n}]"),
        }
    }
}

impl Value {
    pub fn ty(&self) -> Type {
        match self {
            Value::Scalar(_) => Type::Scalar,
            Value::Vector(v) => Type::Vector(v.len()),
        }
    }
}

/// Bindings a program is evaluated against. Every name is bound once and
/// every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalScope {
    action: Vec<f64>,
    vectors: BTreeMap<String, Vec<f64>>,
    scalars: BTreeMap<String, f64>,
}

fn check_name(name: &str) -> Result<()> {
    let mut chars = name.chars();
    let ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !ok {
        return Err(DslError::Scope(format!("{name:?} is not a valid identifier")));
    }
    if Func::from_name(name).is_some() || name == "neg" || name == "vec" {
        return Err(DslError::Scope(format!("{name:?} is a function name")));
    }
    Ok(())
}

impl EvalScope {
    pub fn new(action: &[f64]) -> Result<Self> {
        if action.is_empty() {
            return Err(DslError::Scope("action is empty".into()));
        }
        if !action.iter().all(|x| x.is_finite()) {
            return Err(DslError::Scope("action has a non-finite component".into()));
        }
        Ok(Self {
            action: action.to_vec(),
            vectors: BTreeMap::new(),
            scalars: BTreeMap::new(),
        })
    }

    fn check_fresh(&self, name: &str) -> Result<()> {
        check_name(name)?;
        if name == ACTION || self.vectors.contains_key(name) || self.scalars.contains_key(name) {
            return Err(DslError::Scope(format!("{name:?} bound twice")));
        }
        Ok(())
    }

    pub fn with_vector(mut self, name: &str, value: &[f64]) -> Result<Self> {
        self.check_fresh(name)?;
        if value.is_empty() {
            return Err(DslError::Scope(format!("{name:?} is empty")));
        }
        if !value.iter().all(|x| x.is_finite()) {
            return Err(DslError::Scope(format!("{name:?} has a non-finite component")));
        }
        self.vectors.insert(name.to_string(), value.to_vec());
        Ok(self)
    }

    pub fn with_scalar(mut self, name: &str, value: f64) -> Result<Self> {
        self.check_fresh(name)?;
        if !value.is_finite() {
            return Err(DslError::Scope(format!("{name:?} is not finite")));
        }
        self.scalars.insert(name.to_string(), value);
        Ok(self)
    }

    /// Same bindings with a different action of the same length.
    pub fn with_action(&self, action: &[f64]) -> Result<Self> {
        if action.len() != self.action.len() {
            return Err(DslError::Scope(format!(
                "action length {} does not match {}",
                action.len(),
                self.action.len()
            )));
        }
        let mut s = Self::new(action)?;
        s.vectors = self.vectors.clone();
        s.scalars = self.scalars.clone();
        Ok(s)
    }

    pub fn action(&self) -> &[f64] {
        &self.action
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(ACTION)
            .chain(self.vectors.keys().map(String::as_str))
            .chain(self.scalars.keys().map(String::as_str))
    }

    fn lookup_with<'a>(&'a self, action: &'a [f64], name: &str) -> Option<Lookup<'a>> {
        if name == ACTION {
            return Some(Lookup::Vector(action));
        }
        if let Some(v) = self.vectors.get(name) {
            return Some(Lookup::Vector(v));
        }
        self.scalars.get(name).map(|&s| Lookup::Scalar(s))
    }

    fn type_of(&self, name: &str) -> Option<Type> {
        self.lookup_with(&self.action, name).map(|l| match l {
            Lookup::Scalar(_) => Type::Scalar,
            Lookup::Vector(v) => Type::Vector(v.len()),
        })
    }
}

enum Lookup<'a> {
    Scalar(f64),
    Vector(&'a [f64]),
}

fn mismatch(what: &str, got: &[Type]) -> DslError {
    let got: Vec<String> = got.iter().map(Type::to_string).collect();
    DslError::Type(format!("{what} not defined for ({})", got.join(", ")))
}

fn binary_type(op: BinOp, l: Type, r: Type) -> Result<Type> {
    use Type::*;
    match (op, l, r) {
        (_, Scalar, Scalar) => Ok(Scalar),
        (BinOp::Add | BinOp::Sub, Vector(a), Vector(b)) if a == b => Ok(Vector(a)),
        (BinOp::Mul, Scalar, Vector(n)) | (BinOp::Mul | BinOp::Div, Vector(n), Scalar) => Ok(Vector(n)),
        _ => Err(mismatch(&format!("'{}'", op.symbol()), &[l, r])),
    }
}

fn call_type(f: Func, args: &[Type]) -> Result<Type> {
    use Type::*;
    let all_scalar = args.iter().all(|t| *t == Scalar);
    let ok = match f {
        Func::Dist | Func::Dot => match (args[0], args[1]) {
            (Vector(a), Vector(b)) if a == b => Some(Scalar),
            _ => None,
        },
        Func::Norm => matches!(args[0], Vector(_)).then_some(Scalar),
        Func::Min | Func::Max | Func::Abs | Func::Exp | Func::Clamp => all_scalar.then_some(Scalar),
        Func::Gate => (args[0] == Scalar && args[1] == args[2]).then_some(args[1]),
    };
    ok.ok_or_else(|| mismatch(f.name(), args))
}

impl Expr {
    /// Static type of the expression under `scope`.
    pub fn infer(&self, scope: &EvalScope) -> Result<Type> {
        match self {
            Expr::Num(v) => {
                if v.is_finite() {
                    Ok(Type::Scalar)
                } else {
                    Err(DslError::NonFinite)
                }
            }
            Expr::Ident(n) => scope.type_of(n).ok_or_else(|| DslError::Unbound(n.clone())),
            Expr::Vector(xs) => {
                for x in xs {
                    let t = x.infer(scope)?;
                    if t != Type::Scalar {
                        return Err(DslError::Type(format!("vec component is a {t}")));
                    }
                }
                Ok(Type::Vector(xs.len()))
            }
            Expr::Neg(e) => e.infer(scope),
            Expr::Binary(op, l, r) => binary_type(*op, l.infer(scope)?, r.infer(scope)?),
            Expr::Call(f, xs) => {
                let ts = xs.iter().map(|x| x.infer(scope)).collect::<Result<Vec<_>>>()?;
                call_type(*f, &ts)
            }
            Expr::Index(e, i) => match e.infer(scope)? {
                Type::Vector(n) if *i < n => Ok(Type::Scalar),
                Type::Vector(n) => Err(DslError::Type(format!("index {i} out of range for vector[{n}]"))),
                Type::Scalar => Err(DslError::Type("indexing a scalar".into())),
            },
        }
    }
}

fn finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(DslError::NonFinite)
    }
}

fn finite_vec(v: Vec<f64>) -> Result<Value> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(Value::Vector(v))
    } else {
        Err(DslError::NonFinite)
    }
}

fn scalar(v: Value, what: &str) -> Result<f64> {
    match v {
        Value::Scalar(s) => Ok(s),
        Value::Vector(v) => Err(DslError::Type(format!(
            "{what} expects a scalar, got vector[{}]",
            v.len()
        ))),
    }
}

fn vector(v: Value, what: &str) -> Result<Vec<f64>> {
    match v {
        Value::Vector(v) => Ok(v),
        Value::Scalar(_) => Err(DslError::Type(format!("{what} expects a vector, got scalar"))),
    }
}

fn pair(a: Value, b: Value, what: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let (a, b) = (vector(a, what)?, vector(b, what)?);
    if a.len() != b.len() {
        return Err(DslError::Type(format!(
            "{what} on vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok((a, b))
}

struct Evaluator<'a> {
    scope: &'a EvalScope,
    action: &'a [f64],
}

impl Evaluator<'_> {
    fn eval(&self, e: &Expr) -> Result<Value> {
        match e {
            Expr::Num(v) => finite(*v).map(Value::Scalar),
            Expr::Ident(n) => match self.scope.lookup_with(self.action, n) {
                Some(Lookup::Scalar(s)) => Ok(Value::Scalar(s)),
                Some(Lookup::Vector(v)) => Ok(Value::Vector(v.to_vec())),
                None => Err(DslError::Unbound(n.clone())),
            },
            Expr::Vector(xs) => {
                let v = xs
                    .iter()
                    .map(|x| scalar(self.eval(x)?, "vec"))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Value::Vector(v))
            }
            Expr::Neg(e) => Ok(match self.eval(e)? {
                Value::Scalar(s) => Value::Scalar(-s),
                Value::Vector(v) => Value::Vector(v.into_iter().map(|x| -x).collect()),
            }),
            Expr::Binary(op, l, r) => self.binary(*op, self.eval(l)?, self.eval(r)?),
            Expr::Call(Func::Gate, xs) => {
                let c = scalar(self.eval(&xs[0])?, "gate condition")?;
                self.eval(if c > 0.0 { &xs[1] } else { &xs[2] })
            }
            Expr::Call(f, xs) => {
                let args = xs.iter().map(|x| self.eval(x)).collect::<Result<Vec<_>>>()?;
                call(*f, args)
            }
            Expr::Index(e, i) => {
                let v = vector(self.eval(e)?, "indexing")?;
                v.get(*i)
                    .copied()
                    .map(Value::Scalar)
                    .ok_or_else(|| DslError::Type(format!("index {i} out of range for vector[{}]", v.len())))
            }
        }
    }

    fn binary(&self, op: BinOp, l: Value, r: Value) -> Result<Value> {
        if op == BinOp::Div {
            if let Value::Scalar(d) = r {
                if d == 0.0 {
                    return Err(DslError::DivisionByZero);
                }
            }
        }
        let f = |a: f64, b: f64| match op {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
        };
        match (l, r) {
            (Value::Scalar(a), Value::Scalar(b)) => finite(f(a, b)).map(Value::Scalar),
            (Value::Vector(a), Value::Vector(b))
                if matches!(op, BinOp::Add | BinOp::Sub) && a.len() == b.len() =>
            {
                finite_vec(a.iter().zip(&b).map(|(x, y)| f(*x, *y)).collect())
            }
            (Value::Scalar(s), Value::Vector(v)) if op == BinOp::Mul => {
                finite_vec(v.iter().map(|x| s * x).collect())
            }
            (Value::Vector(v), Value::Scalar(s)) if matches!(op, BinOp::Mul | BinOp::Div) => {
                finite_vec(v.iter().map(|x| f(*x, s)).collect())
            }
            (l, r) => Err(mismatch(&format!("'{}'", op.symbol()), &[l.ty(), r.ty()])),
        }
    }
}

fn call(f: Func, args: Vec<Value>) -> Result<Value> {
    let name = f.name();
    let mut it = args.into_iter();
    let mut next = || it.next().expect("arity checked at parse time");
    let out = match f {
        Func::Dist => {
            let (a, b) = pair(next(), next(), name)?;
            a.iter()
                .zip(&b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        }
        Func::Dot => {
            let (a, b) = pair(next(), next(), name)?;
            a.iter().zip(&b).map(|(x, y)| x * y).sum()
        }
        Func::Norm => vector(next(), name)?.iter().map(|x| x * x).sum::<f64>().sqrt(),
        Func::Min | Func::Max => {
            let xs = std::iter::from_fn(|| it.next())
                .map(|v| scalar(v, name))
                .collect::<Result<Vec<_>>>()?;
            let pick = if f == Func::Min { f64::min } else { f64::max };
            xs.into_iter().reduce(pick).expect("arity checked at parse time")
        }
        Func::Abs => scalar(next(), name)?.abs(),
        Func::Exp => scalar(next(), name)?.exp(),
        Func::Clamp => {
            let x = scalar(next(), name)?;
            let lo = scalar(next(), name)?;
            let hi = scalar(next(), name)?;
            if lo > hi {
                return Err(DslError::Type(format!("clamp bounds {lo} > {hi}")));
            }
            x.clamp(lo, hi)
        }
        Func::Gate => unreachable!("gate is evaluated lazily"),
    };
    finite(out).map(Value::Scalar)
}

pub(crate) fn evaluate(e: &Expr, scope: &EvalScope) -> Result<f64> {
    evaluate_action(e, scope, &scope.action)
}

/// Evaluate with `action` substituted for the scope's own action, avoiding
/// a scope rebuild per candidate.
pub(crate) fn evaluate_action(e: &Expr, scope: &EvalScope, action: &[f64]) -> Result<f64> {
    if action.len() != scope.action.len() {
        return Err(DslError::Scope(format!(
            "action length {} does not match {}",
            action.len(),
            scope.action.len()
        )));
    }
    if !action.iter().all(|x| x.is_finite()) {
        return Err(DslError::Scope("action has a non-finite component".into()));
    }
    let ev = Evaluator { scope, action };
    scalar(ev.eval(e)?, "a reward program")
}
