use std::collections::BTreeMap;

use super::{BinOp, Expr, ExprError, Func, VecRef};
use crate::scalar::{lit, Real, Scalar};

/// Bindings for evaluation: coordinate vectors of scalars or jets and named
/// real parameters (a scalar parameter is a vector of length one).
pub struct Env<'a, T: Real, S: Scalar<T>> {
    pub x: &'a [S],
    pub y: &'a [S],
    pub params: &'a BTreeMap<String, Vec<T>>,
}

impl<'a, T: Real, S: Scalar<T>> Env<'a, T, S> {
    fn proto(&self) -> Result<&S, ExprError> {
        self.y
            .first()
            .or_else(|| self.x.first())
            .ok_or_else(|| ExprError::UnboundVariable("y1".into()))
    }

    fn constant(&self, v: T) -> Result<S, ExprError> {
        Ok(self.proto()?.constant_like(v))
    }

    fn vector(&self, v: &VecRef) -> Result<Vec<S>, ExprError> {
        match v {
            VecRef::X => Ok(self.x.to_vec()),
            VecRef::Y => Ok(self.y.to_vec()),
            VecRef::Param(name) => {
                let vals = self
                    .params
                    .get(name)
                    .ok_or_else(|| ExprError::UnboundVariable(name.clone()))?;
                vals.iter().map(|&c| self.constant(c)).collect()
            }
        }
    }
}

fn component<S: Clone>(v: &[S], i: usize, name: &str) -> Result<S, ExprError> {
    v.get(i.wrapping_sub(1))
        .cloned()
        .ok_or_else(|| ExprError::UnboundVariable(format!("{name}{i}")))
}

fn dot<T: Real, S: Scalar<T>>(a: &[S], b: &[S], zero: S) -> S {
    a.iter().zip(b).fold(zero, |acc, (u, v)| acc.add(&u.mul(v)))
}

/// Evaluates `e` over the bindings in `env`.
pub fn eval<T: Real, S: Scalar<T>>(e: &Expr, env: &Env<'_, T, S>) -> Result<S, ExprError> {
    Ok(match e {
        Expr::Num(v) => env.constant(lit(*v))?,
        Expr::X(i) => component(env.x, *i, "x")?,
        Expr::Y(i) => component(env.y, *i, "y")?,
        Expr::Param { name, index } => {
            let vals = env
                .params
                .get(name)
                .ok_or_else(|| ExprError::UnboundVariable(name.clone()))?;
            let v = match index {
                None if vals.len() == 1 => vals[0],
                None => return Err(ExprError::UnboundVariable(format!("{name} (vector used as scalar)"))),
                Some(i) => component(vals, *i, name)?,
            };
            env.constant(v)?
        }
        Expr::Neg(a) => eval(a, env)?.neg(),
        Expr::Bin(op, a, b) => {
            let a = eval(a, env)?;
            let b = eval(b, env)?;
            match op {
                BinOp::Add => a.add(&b),
                BinOp::Sub => a.sub(&b),
                BinOp::Mul => a.mul(&b),
                BinOp::Div => a.div(&b)?,
            }
        }
        Expr::Pow(a, b) => {
            let p = eval(b, env)?.value();
            let base = eval(a, env)?;
            if p == lit(2.0) {
                base.mul(&base)
            } else {
                base.powf(p)?
            }
        }
        Expr::Call(func, args) => {
            let a = eval(&args[0], env)?;
            match func {
                Func::Sqrt => a.sqrt()?,
                Func::Exp => a.exp(),
                Func::Log => a.ln()?,
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Abs2 | Func::Dot => unreachable!("vector functions parse to VecCall"),
            }
        }
        Expr::VecCall(func, args) => {
            let zero = env.constant(T::zero())?;
            match func {
                Func::Abs2 => {
                    let v = env.vector(&args[0])?;
                    dot(&v, &v, zero)
                }
                Func::Dot => {
                    let u = env.vector(&args[0])?;
                    let v = env.vector(&args[1])?;
                    if u.len() != v.len() {
                        return Err(ExprError::LengthMismatch {
                            func: "dot".into(),
                            left: u.len(),
                            right: v.len(),
                        });
                    }
                    dot(&u, &v, zero)
                }
                _ => unreachable!("scalar functions parse to Call"),
            }
        }
    })
}
