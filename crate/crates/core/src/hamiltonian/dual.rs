//! Forward-mode evaluation. One pass with a vector-valued tangent yields
//! all `8n` partial derivatives.

use super::expr::{Expr, Func};
use crate::error::{Error, Result};

/// A value together with its gradient with respect to every coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct DualScalar {
    pub value: f64,
    pub derivs: Vec<f64>,
}

impl DualScalar {
    pub fn constant(value: f64, dim: usize) -> Self {
        DualScalar {
            value,
            derivs: vec![0.0; dim],
        }
    }

    /// Seeds `x_a` (1-based) with unit tangent.
    pub fn variable(value: f64, flat: usize, dim: usize) -> Self {
        let mut d = Self::constant(value, dim);
        d.derivs[flat - 1] = 1.0;
        d
    }

    /// `value = f(self.value)`, tangent scaled by `f'(self.value)`.
    fn chain(mut self, value: f64, slope: f64) -> Self {
        self.value = value;
        for d in &mut self.derivs {
            *d *= slope;
        }
        self
    }

    fn zip(mut self, other: &DualScalar, value: f64, ka: f64, kb: f64) -> Self {
        self.value = value;
        for (d, o) in self.derivs.iter_mut().zip(&other.derivs) {
            *d = ka * *d + kb * o;
        }
        self
    }

    fn has_tangent(&self) -> bool {
        self.derivs.iter().any(|d| *d != 0.0)
    }
}

/// Arithmetic shared by the plain and the dual evaluator; domain checks are
/// made on values in [`evaluate`], so both paths fail identically.
pub(crate) trait Evaluand: Sized {
    fn constant(c: f64, dim: usize) -> Self;
    fn variable(x: &[f64], flat: usize) -> Self;
    fn value(&self) -> f64;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn div(self, o: Self) -> Self;
    fn neg(self) -> Self;
    fn powi(self, k: i32) -> Self;
    fn powf(self, e: f64) -> Self;
    fn pow_general(self, e: Self) -> Self;
    fn call(self, f: Func) -> Result<Self>;
}

impl Evaluand for f64 {
    fn constant(c: f64, _: usize) -> Self {
        c
    }
    fn variable(x: &[f64], flat: usize) -> Self {
        x[flat - 1]
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn div(self, o: Self) -> Self {
        self / o
    }
    fn neg(self) -> Self {
        -self
    }
    fn powi(self, k: i32) -> Self {
        self.powi(k)
    }
    fn powf(self, e: f64) -> Self {
        self.powf(e)
    }
    fn pow_general(self, e: Self) -> Self {
        self.powf(e)
    }
    fn call(self, f: Func) -> Result<Self> {
        Ok(match f {
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Tan => self.tan(),
            Func::Exp => self.exp(),
            Func::Log => self.ln(),
            Func::Sqrt => self.sqrt(),
            Func::Abs => self.abs(),
        })
    }
}

impl Evaluand for DualScalar {
    fn constant(c: f64, dim: usize) -> Self {
        DualScalar::constant(c, dim)
    }
    fn variable(x: &[f64], flat: usize) -> Self {
        DualScalar::variable(x[flat - 1], flat, x.len())
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn add(self, o: Self) -> Self {
        let v = self.value + o.value;
        self.zip(&o, v, 1.0, 1.0)
    }
    fn sub(self, o: Self) -> Self {
        let v = self.value - o.value;
        self.zip(&o, v, 1.0, -1.0)
    }
    fn mul(self, o: Self) -> Self {
        let (a, b) = (self.value, o.value);
        self.zip(&o, a * b, b, a)
    }
    fn div(self, o: Self) -> Self {
        let (a, b) = (self.value, o.value);
        self.zip(&o, a / b, 1.0 / b, -a / (b * b))
    }
    fn neg(self) -> Self {
        let v = -self.value;
        self.chain(v, -1.0)
    }
    fn powi(self, k: i32) -> Self {
        let x = self.value;
        let slope = if k == 0 { 0.0 } else { f64::from(k) * x.powi(k - 1) };
        self.chain(x.powi(k), slope)
    }
    fn powf(self, e: f64) -> Self {
        let x = self.value;
        self.chain(x.powf(e), e * x.powf(e - 1.0))
    }
    fn pow_general(self, e: Self) -> Self {
        // x^y = exp(y ln x), base > 0 checked by the caller
        let (x, y) = (self.value, e.value);
        let v = x.powf(y);
        self.zip(&e, v, y * x.powf(y - 1.0), v * x.ln())
    }
    fn call(self, f: Func) -> Result<Self> {
        let x = self.value;
        Ok(match f {
            Func::Sin => self.chain(x.sin(), x.cos()),
            Func::Cos => self.chain(x.cos(), -x.sin()),
            Func::Tan => {
                let t = x.tan();
                self.chain(t, 1.0 + t * t)
            }
            Func::Exp => {
                let v = x.exp();
                self.chain(v, v)
            }
            Func::Log => self.chain(x.ln(), 1.0 / x),
            Func::Sqrt => {
                let s = x.sqrt();
                if s == 0.0 && self.has_tangent() {
                    return Err(Error::Domain("sqrt is not differentiable at 0".into()));
                }
                self.chain(s, if s == 0.0 { 0.0 } else { 0.5 / s })
            }
            // derivative taken as sign(x), 0 at the kink
            Func::Abs => self.chain(x.abs(), if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 }),
        })
    }
}

fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

fn check_finite<S: Evaluand>(s: S, what: &str) -> Result<S> {
    if s.value().is_finite() {
        Ok(s)
    } else {
        Err(domain(format!("{what} produced a non-finite value")))
    }
}

/// Integer exponent of a variable-free exponent subtree, if it has one.
fn integer_exponent(e: &Expr) -> Result<Option<i32>> {
    if !e.is_constant() {
        return Ok(None);
    }
    let v: f64 = evaluate(e, &[])?;
    if v.fract() == 0.0 && v.abs() <= f64::from(i32::MAX) {
        Ok(Some(v as i32))
    } else {
        Ok(None)
    }
}

pub(crate) fn evaluate<S: Evaluand>(e: &Expr, x: &[f64]) -> Result<S> {
    let dim = x.len();
    let out = match e {
        Expr::Const(c) => S::constant(*c, dim),
        Expr::Var(a) => S::variable(x, *a),
        Expr::Add(a, b) => evaluate::<S>(a, x)?.add(evaluate(b, x)?),
        Expr::Sub(a, b) => evaluate::<S>(a, x)?.sub(evaluate(b, x)?),
        Expr::Mul(a, b) => evaluate::<S>(a, x)?.mul(evaluate(b, x)?),
        Expr::Div(a, b) => {
            let num = evaluate::<S>(a, x)?;
            let den = evaluate::<S>(b, x)?;
            if den.value() == 0.0 {
                return Err(domain("division by zero"));
            }
            num.div(den)
        }
        Expr::Neg(a) => evaluate::<S>(a, x)?.neg(),
        Expr::Pow(base, exp) => {
            let b = evaluate::<S>(base, x)?;
            match integer_exponent(exp)? {
                Some(k) => {
                    if k < 0 && b.value() == 0.0 {
                        return Err(domain("zero raised to a negative power"));
                    }
                    b.powi(k)
                }
                None => {
                    if b.value() <= 0.0 {
                        return Err(domain(format!(
                            "non-integer power of non-positive base {}",
                            b.value()
                        )));
                    }
                    if exp.is_constant() {
                        let ev: f64 = evaluate(exp, &[])?;
                        b.powf(ev)
                    } else {
                        b.pow_general(evaluate(exp, x)?)
                    }
                }
            }
        }
        Expr::Call(f, a) => {
            let arg = evaluate::<S>(a, x)?;
            let v = arg.value();
            match f {
                Func::Log if v <= 0.0 => return Err(domain(format!("log of non-positive {v}"))),
                Func::Sqrt if v < 0.0 => return Err(domain(format!("sqrt of negative {v}"))),
                _ => {}
            }
            arg.call(*f)?
        }
    };
    check_finite(out, "expression")
}
