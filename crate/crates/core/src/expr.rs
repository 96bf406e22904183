//! Closed expression language for analytic coefficient functions.
//!
//! A [`CoeffExpr`] is a finite tree over one real variable. It can be
//! evaluated pointwise, differentiated symbolically and expanded into a
//! truncated Taylor series (see [`crate::taylor::expand`]).
//!
//! JSON encoding uses tagged nodes:
//!
//! ```json
//! {"op":"add","args":[{"op":"const","value":3.0},
//!                     {"op":"mul","args":[{"op":"var"},{"op":"var"}]}]}
//! ```
//!
//! `add` and `mul` are n-ary, `sub` and `div` take exactly two arguments,
//! `sin`, `cos`, `exp` and `sqrt` take one, and `pow` takes one argument plus
//! an integer `"exponent"`.

use std::fmt;
use std::ops;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum CoeffExpr {
    Const(f64),
    Var,
    Add(Vec<CoeffExpr>),
    Sub(Box<CoeffExpr>, Box<CoeffExpr>),
    Mul(Vec<CoeffExpr>),
    Div(Box<CoeffExpr>, Box<CoeffExpr>),
    Sin(Box<CoeffExpr>),
    Cos(Box<CoeffExpr>),
    Exp(Box<CoeffExpr>),
    Sqrt(Box<CoeffExpr>),
    Pow(Box<CoeffExpr>, i32),
}

impl CoeffExpr {
    pub fn constant(value: f64) -> Self {
        CoeffExpr::Const(value)
    }

    pub fn var() -> Self {
        CoeffExpr::Var
    }

    pub fn one() -> Self {
        CoeffExpr::Const(1.0)
    }

    pub fn zero() -> Self {
        CoeffExpr::Const(0.0)
    }

    pub fn sin(self) -> Self {
        CoeffExpr::Sin(Box::new(self))
    }

    pub fn cos(self) -> Self {
        CoeffExpr::Cos(Box::new(self))
    }

    pub fn exp(self) -> Self {
        CoeffExpr::Exp(Box::new(self))
    }

    pub fn sqrt(self) -> Self {
        CoeffExpr::Sqrt(Box::new(self))
    }

    pub fn powi(self, n: i32) -> Self {
        CoeffExpr::Pow(Box::new(self), n)
    }

    /// Returns the value when the tree does not reference the variable.
    pub fn as_constant(&self) -> Option<f64> {
        if self.has_var() {
            None
        } else {
            Some(self.eval(0.0))
        }
    }

    pub fn has_var(&self) -> bool {
        match self {
            CoeffExpr::Const(_) => false,
            CoeffExpr::Var => true,
            CoeffExpr::Add(args) | CoeffExpr::Mul(args) => args.iter().any(|a| a.has_var()),
            CoeffExpr::Sub(a, b) | CoeffExpr::Div(a, b) => a.has_var() || b.has_var(),
            CoeffExpr::Sin(a)
            | CoeffExpr::Cos(a)
            | CoeffExpr::Exp(a)
            | CoeffExpr::Sqrt(a)
            | CoeffExpr::Pow(a, _) => a.has_var(),
        }
    }

    /// Pointwise evaluation. Inadmissible operations yield NaN or infinities
    /// following IEEE semantics.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CoeffExpr::Const(c) => *c,
            CoeffExpr::Var => x,
            CoeffExpr::Add(args) => args.iter().map(|a| a.eval(x)).sum(),
            CoeffExpr::Sub(a, b) => a.eval(x) - b.eval(x),
            CoeffExpr::Mul(args) => args.iter().map(|a| a.eval(x)).product(),
            CoeffExpr::Div(a, b) => a.eval(x) / b.eval(x),
            CoeffExpr::Sin(a) => a.eval(x).sin(),
            CoeffExpr::Cos(a) => a.eval(x).cos(),
            CoeffExpr::Exp(a) => a.eval(x).exp(),
            CoeffExpr::Sqrt(a) => a.eval(x).sqrt(),
            CoeffExpr::Pow(a, n) => a.eval(x).powi(*n),
        }
    }

    /// Symbolic derivative with respect to the variable.
    pub fn derivative(&self) -> CoeffExpr {
        use CoeffExpr::*;
        match self {
            Const(_) => zero(),
            Var => Const(1.0),
            Add(args) => args
                .iter()
                .map(|a| a.derivative())
                .fold(zero(), sum),
            Sub(a, b) => difference(a.derivative(), b.derivative()),
            Mul(args) => {
                let mut total = zero();
                for k in 0..args.len() {
                    let mut term = args[k].derivative();
                    for (m, other) in args.iter().enumerate() {
                        if m != k {
                            term = product(term, other.clone());
                        }
                    }
                    total = sum(total, term);
                }
                total
            }
            Div(a, b) => {
                // (a'b - ab') / b^2
                let num = difference(
                    product(a.derivative(), (**b).clone()),
                    product((**a).clone(), b.derivative()),
                );
                if is_zero(&num) {
                    zero()
                } else {
                    Div(Box::new(num), Box::new((**b).clone().powi(2)))
                }
            }
            Sin(a) => product(a.derivative(), (**a).clone().cos()),
            Cos(a) => product(
                Const(-1.0),
                product(a.derivative(), (**a).clone().sin()),
            ),
            Exp(a) => product(a.derivative(), self.clone()),
            Sqrt(a) => {
                let da = a.derivative();
                if is_zero(&da) {
                    zero()
                } else {
                    Div(Box::new(da), Box::new(product(Const(2.0), self.clone())))
                }
            }
            Pow(a, n) => match *n {
                0 => zero(),
                1 => a.derivative(),
                n => product(
                    Const(n as f64),
                    product(a.derivative(), (**a).clone().powi(n - 1)),
                ),
            },
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CoeffExpr::Const(c) => json!({"op": "const", "value": c}),
            CoeffExpr::Var => json!({"op": "var"}),
            CoeffExpr::Add(args) => nary("add", args),
            CoeffExpr::Mul(args) => nary("mul", args),
            CoeffExpr::Sub(a, b) => json!({"op": "sub", "args": [a.to_json(), b.to_json()]}),
            CoeffExpr::Div(a, b) => json!({"op": "div", "args": [a.to_json(), b.to_json()]}),
            CoeffExpr::Sin(a) => json!({"op": "sin", "args": [a.to_json()]}),
            CoeffExpr::Cos(a) => json!({"op": "cos", "args": [a.to_json()]}),
            CoeffExpr::Exp(a) => json!({"op": "exp", "args": [a.to_json()]}),
            CoeffExpr::Sqrt(a) => json!({"op": "sqrt", "args": [a.to_json()]}),
            CoeffExpr::Pow(a, n) => {
                json!({"op": "pow", "args": [a.to_json()], "exponent": n})
            }
        }
    }

    /// Parses a JSON node; `path` is the JSON path of `v`, used in errors.
    pub fn from_json(v: &Value, path: &str) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::schema(path, "expected an expression object"))?;
        let op = obj
            .get("op")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::schema(format!("{path}.op"), "missing or non-string \"op\""))?;
        let args = |expected: Option<usize>| -> Result<Vec<CoeffExpr>> {
            let arr = obj
                .get("args")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::schema(format!("{path}.args"), "missing \"args\" array"))?;
            if let Some(n) = expected {
                if arr.len() != n {
                    return Err(Error::schema(
                        format!("{path}.args"),
                        format!("\"{op}\" takes {n} argument(s), got {}", arr.len()),
                    ));
                }
            } else if arr.is_empty() {
                return Err(Error::schema(
                    format!("{path}.args"),
                    format!("\"{op}\" needs at least one argument"),
                ));
            }
            arr.iter()
                .enumerate()
                .map(|(k, a)| CoeffExpr::from_json(a, &format!("{path}.args[{k}]")))
                .collect()
        };
        let unary = |f: fn(Box<CoeffExpr>) -> CoeffExpr| -> Result<CoeffExpr> {
            let mut a = args(Some(1))?;
            Ok(f(Box::new(a.remove(0))))
        };
        Ok(match op {
            "const" => {
                let value = obj.get("value").and_then(Value::as_f64).ok_or_else(|| {
                    Error::schema(format!("{path}.value"), "missing numeric \"value\"")
                })?;
                CoeffExpr::Const(value)
            }
            "var" => CoeffExpr::Var,
            "add" => CoeffExpr::Add(args(None)?),
            "mul" => CoeffExpr::Mul(args(None)?),
            "sub" => {
                let mut a = args(Some(2))?;
                let b = a.pop().unwrap();
                CoeffExpr::Sub(Box::new(a.pop().unwrap()), Box::new(b))
            }
            "div" => {
                let mut a = args(Some(2))?;
                let b = a.pop().unwrap();
                CoeffExpr::Div(Box::new(a.pop().unwrap()), Box::new(b))
            }
            "sin" => unary(CoeffExpr::Sin)?,
            "cos" => unary(CoeffExpr::Cos)?,
            "exp" => unary(CoeffExpr::Exp)?,
            "sqrt" => unary(CoeffExpr::Sqrt)?,
            "pow" => {
                let n = obj
                    .get("exponent")
                    .and_then(Value::as_i64)
                    .and_then(|n| i32::try_from(n).ok())
                    .ok_or_else(|| {
                        Error::schema(format!("{path}.exponent"), "missing integer \"exponent\"")
                    })?;
                let mut a = args(Some(1))?;
                CoeffExpr::Pow(Box::new(a.remove(0)), n)
            }
            other => {
                return Err(Error::schema(
                    format!("{path}.op"),
                    format!("unknown operation \"{other}\""),
                ))
            }
        })
    }
}

fn nary(op: &str, args: &[CoeffExpr]) -> Value {
    let mut m = Map::new();
    m.insert("op".into(), Value::from(op));
    m.insert(
        "args".into(),
        Value::Array(args.iter().map(CoeffExpr::to_json).collect()),
    );
    Value::Object(m)
}

fn zero() -> CoeffExpr {
    CoeffExpr::Const(0.0)
}

fn is_zero(e: &CoeffExpr) -> bool {
    matches!(e, CoeffExpr::Const(c) if *c == 0.0)
}

fn is_one(e: &CoeffExpr) -> bool {
    matches!(e, CoeffExpr::Const(c) if *c == 1.0)
}

fn sum(a: CoeffExpr, b: CoeffExpr) -> CoeffExpr {
    if is_zero(&a) {
        return b;
    }
    if is_zero(&b) {
        return a;
    }
    match a {
        CoeffExpr::Add(mut args) => {
            args.push(b);
            CoeffExpr::Add(args)
        }
        a => CoeffExpr::Add(vec![a, b]),
    }
}

fn difference(a: CoeffExpr, b: CoeffExpr) -> CoeffExpr {
    if is_zero(&b) {
        a
    } else if is_zero(&a) {
        product(CoeffExpr::Const(-1.0), b)
    } else {
        CoeffExpr::Sub(Box::new(a), Box::new(b))
    }
}

fn product(a: CoeffExpr, b: CoeffExpr) -> CoeffExpr {
    if is_zero(&a) || is_zero(&b) {
        return zero();
    }
    if is_one(&a) {
        return b;
    }
    if is_one(&b) {
        return a;
    }
    match a {
        CoeffExpr::Mul(mut args) => {
            args.push(b);
            CoeffExpr::Mul(args)
        }
        a => CoeffExpr::Mul(vec![a, b]),
    }
}

impl Serialize for CoeffExpr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoeffExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        CoeffExpr::from_json(&v, "$").map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for CoeffExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, args: &[CoeffExpr], sep: &str| -> fmt::Result {
            write!(f, "(")?;
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    write!(f, " {sep} ")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")
        };
        match self {
            CoeffExpr::Const(c) => write!(f, "{c}"),
            CoeffExpr::Var => write!(f, "x"),
            CoeffExpr::Add(args) => join(f, args, "+"),
            CoeffExpr::Mul(args) => join(f, args, "*"),
            CoeffExpr::Sub(a, b) => write!(f, "({a} - {b})"),
            CoeffExpr::Div(a, b) => write!(f, "({a} / {b})"),
            CoeffExpr::Sin(a) => write!(f, "sin({a})"),
            CoeffExpr::Cos(a) => write!(f, "cos({a})"),
            CoeffExpr::Exp(a) => write!(f, "exp({a})"),
            CoeffExpr::Sqrt(a) => write!(f, "sqrt({a})"),
            CoeffExpr::Pow(a, n) => write!(f, "{a}^{n}"),
        }
    }
}

impl From<f64> for CoeffExpr {
    fn from(c: f64) -> Self {
        CoeffExpr::Const(c)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $build:expr) => {
        impl<R: Into<CoeffExpr>> ops::$tr<R> for CoeffExpr {
            type Output = CoeffExpr;
            fn $method(self, rhs: R) -> CoeffExpr {
                $build(self, rhs.into())
            }
        }
        impl ops::$tr<CoeffExpr> for f64 {
            type Output = CoeffExpr;
            fn $method(self, rhs: CoeffExpr) -> CoeffExpr {
                $build(CoeffExpr::Const(self), rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| CoeffExpr::Add(vec![a, b]));
binop!(Sub, sub, |a, b| CoeffExpr::Sub(Box::new(a), Box::new(b)));
binop!(Mul, mul, |a, b| CoeffExpr::Mul(vec![a, b]));
binop!(Div, div, |a, b| CoeffExpr::Div(Box::new(a), Box::new(b)));

impl ops::Neg for CoeffExpr {
    type Output = CoeffExpr;
    fn neg(self) -> CoeffExpr {
        CoeffExpr::Mul(vec![CoeffExpr::Const(-1.0), self])
    }
}
