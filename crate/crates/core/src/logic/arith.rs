//! Arithmetic evaluation for `is/2` and the numeric comparisons.

use std::cmp::Ordering;

use super::solve::SolveError;
use super::subst::Bindings;
use super::term::Term;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Num {
    Int(i64),
    Float(f64),
}

impl Num {
    pub fn to_term(self) -> Term {
        match self {
            Num::Int(i) => Term::Int(i),
            Num::Float(f) => Term::Float(f),
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Num::Int(i) => i as f64,
            Num::Float(f) => f,
        }
    }

    /// Numeric comparison; ints and floats compare by value.
    pub fn compare(self, other: Num) -> Ordering {
        match (self, other) {
            (Num::Int(a), Num::Int(b)) => a.cmp(&b),
            (a, b) => a.as_f64().total_cmp(&b.as_f64()),
        }
    }
}

fn eval_err(reason: &str) -> SolveError {
    SolveError::Evaluation {
        context: "is/2".into(),
        reason: reason.into(),
    }
}

fn type_err(expected: &str, culprit: &Term) -> SolveError {
    SolveError::Type {
        context: "is/2".into(),
        expected: expected.into(),
        culprit: culprit.to_string(),
    }
}

fn int_arg(n: Num, name: &str) -> Result<i64, SolveError> {
    match n {
        Num::Int(i) => Ok(i),
        Num::Float(f) => Err(type_err("integer", &Term::Float(f)).with_context(name)),
    }
}

impl SolveError {
    fn with_context(self, name: &str) -> SolveError {
        match self {
            SolveError::Type { expected, culprit, .. } => SolveError::Type {
                context: format!("{name}/2"),
                expected,
                culprit,
            },
            other => other,
        }
    }
}

fn checked(v: Option<i64>) -> Result<Num, SolveError> {
    v.map(Num::Int).ok_or_else(|| eval_err("integer overflow"))
}

fn float_result(f: f64) -> Result<Num, SolveError> {
    if f.is_nan() {
        Err(eval_err("undefined"))
    } else if f.is_infinite() {
        Err(eval_err("float overflow"))
    } else {
        Ok(Num::Float(f))
    }
}

fn to_int(f: f64) -> Result<Num, SolveError> {
    if f.is_finite() && f.abs() < 9.2e18 {
        Ok(Num::Int(f as i64))
    } else {
        Err(eval_err("integer overflow"))
    }
}

/// Evaluates an arithmetic expression under the given bindings.
pub fn eval<B: Bindings>(b: &B, t: &Term) -> Result<Num, SolveError> {
    match b.deref(t) {
        Term::Int(i) => Ok(Num::Int(*i)),
        Term::Float(f) => Ok(Num::Float(*f)),
        Term::Var(_) => Err(SolveError::Instantiation { context: "is/2".into() }),
        Term::Atom(a) => match &**a {
            "pi" => Ok(Num::Float(std::f64::consts::PI)),
            "e" => Ok(Num::Float(std::f64::consts::E)),
            "inf" | "infinite" => Ok(Num::Float(f64::INFINITY)),
            "nan" => Ok(Num::Float(f64::NAN)),
            "max_tagged_integer" => Ok(Num::Int((1 << 60) - 1)),
            "[]" => Err(type_err("evaluable", &Term::atom("[]"))),
            _ => Err(type_err("evaluable", &Term::atom(&format!("{a}/0")))),
        },
        Term::Str(s) if s.chars().count() == 1 => Ok(Num::Int(s.chars().next().unwrap() as i64)),
        t @ Term::Str(_) => Err(type_err("evaluable", t)),
        t @ Term::Compound(c) => {
            if let Some((h, tail)) = t.as_cons() {
                if b.deref(tail).is_nil() {
                    return eval(b, h);
                }
            }
            let name = &*c.functor;
            match c.args.len() {
                1 => unary(name, eval(b, &c.args[0])?, t),
                2 => binary(name, eval(b, &c.args[0])?, eval(b, &c.args[1])?, t),
                _ => Err(type_err("evaluable", &Term::atom(&format!("{name}/{}", c.args.len())))),
            }
        }
    }
}

fn unary(name: &str, x: Num, t: &Term) -> Result<Num, SolveError> {
    use Num::*;
    match (name, x) {
        ("-", Int(i)) => checked(i.checked_neg()),
        ("-", Float(f)) => Ok(Float(-f)),
        ("+", x) => Ok(x),
        ("abs", Int(i)) => checked(i.checked_abs()),
        ("abs", Float(f)) => Ok(Float(f.abs())),
        ("sign", Int(i)) => Ok(Int(i.signum())),
        ("sign", Float(f)) => Ok(Float(if f == 0.0 { 0.0 } else { f.signum() })),
        ("min" | "max", _) => Err(type_err("evaluable", t)),
        ("sqrt", x) => float_result(x.as_f64().sqrt()),
        ("exp", x) => float_result(x.as_f64().exp()),
        ("log", x) => {
            if x.as_f64() <= 0.0 {
                Err(eval_err("undefined"))
            } else {
                float_result(x.as_f64().ln())
            }
        }
        ("log2", x) => float_result(x.as_f64().log2()),
        ("sin", x) => float_result(x.as_f64().sin()),
        ("cos", x) => float_result(x.as_f64().cos()),
        ("tan", x) => float_result(x.as_f64().tan()),
        ("atan", x) => float_result(x.as_f64().atan()),
        ("float", x) => Ok(Float(x.as_f64())),
        ("integer", Int(i)) => Ok(Int(i)),
        ("integer", Float(f)) => to_int(f.round()),
        ("float_integer_part", x) => Ok(Float(x.as_f64().trunc())),
        ("float_fractional_part", x) => Ok(Float(x.as_f64().fract())),
        ("round", Int(i)) | ("truncate", Int(i)) | ("floor", Int(i)) | ("ceiling", Int(i)) => Ok(Int(i)),
        ("round", Float(f)) => to_int(f.round()),
        ("truncate", Float(f)) => to_int(f.trunc()),
        ("floor", Float(f)) => to_int(f.floor()),
        ("ceiling", Float(f)) => to_int(f.ceil()),
        ("\\", Int(i)) => Ok(Int(!i)),
        ("msb", Int(i)) if i > 0 => Ok(Int(63 - i.leading_zeros() as i64)),
        _ => Err(type_err("evaluable", &Term::atom(&format!("{name}/1")))),
    }
}

fn binary(name: &str, x: Num, y: Num, _t: &Term) -> Result<Num, SolveError> {
    use Num::*;
    match name {
        "+" => match (x, y) {
            (Int(a), Int(b)) => checked(a.checked_add(b)),
            _ => float_result(x.as_f64() + y.as_f64()),
        },
        "-" => match (x, y) {
            (Int(a), Int(b)) => checked(a.checked_sub(b)),
            _ => float_result(x.as_f64() - y.as_f64()),
        },
        "*" => match (x, y) {
            (Int(a), Int(b)) => checked(a.checked_mul(b)),
            _ => float_result(x.as_f64() * y.as_f64()),
        },
        "/" => match (x, y) {
            (_, Int(0)) => Err(eval_err("zero_divisor")),
            (Int(a), Int(b)) if a % b == 0 => checked(a.checked_div(b)),
            _ => {
                if y.as_f64() == 0.0 {
                    Err(eval_err("zero_divisor"))
                } else {
                    float_result(x.as_f64() / y.as_f64())
                }
            }
        },
        "//" => {
            let (a, b) = (int_arg(x, "//")?, int_arg(y, "//")?);
            if b == 0 {
                return Err(eval_err("zero_divisor"));
            }
            checked(a.checked_div(b))
        }
        "mod" => {
            let (a, b) = (int_arg(x, "mod")?, int_arg(y, "mod")?);
            if b == 0 {
                return Err(eval_err("zero_divisor"));
            }
            checked(a.checked_rem_euclid(b).map(|r| if b < 0 && r != 0 { r + b } else { r }))
        }
        "rem" => {
            let (a, b) = (int_arg(x, "rem")?, int_arg(y, "rem")?);
            if b == 0 {
                return Err(eval_err("zero_divisor"));
            }
            checked(a.checked_rem(b))
        }
        "min" => Ok(if y.compare(x) == Ordering::Less { y } else { x }),
        "max" => Ok(if y.compare(x) == Ordering::Greater { y } else { x }),
        "**" => match (x, y) {
            (Int(a), Int(b)) if b >= 0 => checked(u32::try_from(b).ok().and_then(|b| a.checked_pow(b))),
            _ => float_result(x.as_f64().powf(y.as_f64())),
        },
        "^" => match (x, y) {
            (Int(a), Int(b)) => {
                if b < 0 {
                    if a == 1 || a == -1 {
                        Ok(Int(if b % 2 == 0 { 1 } else { a }))
                    } else {
                        Err(eval_err("undefined"))
                    }
                } else {
                    checked(u32::try_from(b).ok().and_then(|b| a.checked_pow(b)))
                }
            }
            _ => float_result(x.as_f64().powf(y.as_f64())),
        },
        "atan2" | "atan" => float_result(x.as_f64().atan2(y.as_f64())),
        "copysign" => float_result(x.as_f64().copysign(y.as_f64())),
        "log" => float_result(y.as_f64().ln() / x.as_f64().ln()),
        ">>" => Ok(Int(int_arg(x, ">>")? >> int_arg(y, ">>")?.clamp(0, 63))),
        "<<" => checked(int_arg(x, "<<")?.checked_shl(int_arg(y, "<<")?.clamp(0, 63) as u32)),
        "/\\" => Ok(Int(int_arg(x, "/\\")? & int_arg(y, "/\\")?)),
        "\\/" => Ok(Int(int_arg(x, "\\/")? | int_arg(y, "\\/")?)),
        "xor" => Ok(Int(int_arg(x, "xor")? ^ int_arg(y, "xor")?)),
        "truncate" => Err(type_err("evaluable", &Term::atom("truncate/2"))),
        _ => Err(type_err("evaluable", &Term::atom(&format!("{name}/2")))),
    }
}
