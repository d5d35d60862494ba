//! Truncated second-order Taylor arithmetic (2-jets).
//!
//! A `Jet2` carries a value together with its exact gradient and Hessian
//! with respect to the chart coordinates, propagated through every
//! operation by the chain rule. No finite differencing is involved; the
//! test suite uses finite differences only as an independent oracle.

use nalgebra::{DMatrix, DVector};

use super::{Expr, ExprError, Func};

/// Value, gradient and Hessian of a scalar quantity at a point of an
/// `m`-dimensional chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    /// Length `m`.
    pub gradient: DVector<f64>,
    /// `m x m`, symmetric for every jet this module produces.
    pub hessian: DMatrix<f64>,
}

impl Jet2 {
    pub fn constant(value: f64, vars: usize) -> Self {
        Jet2 {
            value,
            gradient: DVector::zeros(vars),
            hessian: DMatrix::zeros(vars, vars),
        }
    }

    /// Seed jet for coordinate `index`: unit gradient, zero curvature.
    pub fn variable(value: f64, index: usize, vars: usize) -> Self {
        let mut gradient = DVector::zeros(vars);
        gradient[index] = 1.0;
        Jet2 {
            value,
            gradient,
            hessian: DMatrix::zeros(vars, vars),
        }
    }

    pub fn vars(&self) -> usize {
        self.gradient.len()
    }

    fn add(&self, rhs: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value + rhs.value,
            gradient: &self.gradient + &rhs.gradient,
            hessian: &self.hessian + &rhs.hessian,
        }
    }

    fn sub(&self, rhs: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value - rhs.value,
            gradient: &self.gradient - &rhs.gradient,
            hessian: &self.hessian - &rhs.hessian,
        }
    }

    fn neg(&self) -> Jet2 {
        Jet2 {
            value: -self.value,
            gradient: -&self.gradient,
            hessian: -&self.hessian,
        }
    }

    fn mul(&self, rhs: &Jet2) -> Jet2 {
        // (fg)'' = f''g + f'g'^T + g'f'^T + fg''
        let cross = &self.gradient * rhs.gradient.transpose();
        Jet2 {
            value: self.value * rhs.value,
            gradient: &self.gradient * rhs.value + &rhs.gradient * self.value,
            hessian: &self.hessian * rhs.value
                + &rhs.hessian * self.value
                + &cross
                + cross.transpose(),
        }
    }

    fn div(&self, rhs: &Jet2) -> Option<Jet2> {
        if rhs.value == 0.0 {
            return None;
        }
        let value = self.value / rhs.value;
        // From f = q*g: q' = (f' - q g') / g, q'' = (f'' - q g'' - q'g'^T - g'q'^T) / g.
        let gradient = (&self.gradient - &rhs.gradient * value) / rhs.value;
        let cross = &gradient * rhs.gradient.transpose();
        let hessian =
            (&self.hessian - &rhs.hessian * value - &cross - cross.transpose()) / rhs.value;
        Some(Jet2 {
            value,
            gradient,
            hessian,
        })
    }

    /// Univariate chain rule: h = f(u) gives h' = f'(u) u' and
    /// h'' = f'(u) u'' + f''(u) u'u'^T.
    fn chain(&self, value: f64, d1: f64, d2: f64) -> Jet2 {
        Jet2 {
            value,
            gradient: &self.gradient * d1,
            hessian: &self.hessian * d1 + (&self.gradient * self.gradient.transpose()) * d2,
        }
    }

    fn powi(&self, k: i32) -> Option<Jet2> {
        if self.value == 0.0 && k < 0 {
            return None;
        }
        let kf = f64::from(k);
        // Low exponents get literal zero coefficients; the generic formula
        // would evaluate 0 * 0^(k-1) = NaN at a zero base.
        let d1 = if k == 0 { 0.0 } else { kf * self.value.powi(k - 1) };
        let d2 = if k == 0 || k == 1 {
            0.0
        } else {
            kf * (kf - 1.0) * self.value.powi(k - 2)
        };
        Some(self.chain(self.value.powi(k), d1, d2))
    }
}

/// Evaluates `expr` as a 2-jet at `point`.
pub fn eval_jet2(expr: &Expr, point: &[f64]) -> Result<Jet2, ExprError> {
    let vars = point.len();
    let domain_err = |e: &Expr, message: &str| ExprError::DomainError {
        expr: e.to_string(),
        message: message.to_string(),
    };
    match expr {
        Expr::Const(v) => Ok(Jet2::constant(*v, vars)),
        Expr::Var(i) => Ok(Jet2::variable(point[*i], *i, vars)),
        Expr::Add(a, b) => Ok(eval_jet2(a, point)?.add(&eval_jet2(b, point)?)),
        Expr::Sub(a, b) => Ok(eval_jet2(a, point)?.sub(&eval_jet2(b, point)?)),
        Expr::Mul(a, b) => Ok(eval_jet2(a, point)?.mul(&eval_jet2(b, point)?)),
        Expr::Div(a, b) => eval_jet2(a, point)?
            .div(&eval_jet2(b, point)?)
            .ok_or_else(|| domain_err(expr, "division by zero")),
        Expr::Pow(a, k) => eval_jet2(a, point)?
            .powi(*k)
            .ok_or_else(|| domain_err(expr, "zero raised to a negative power")),
        Expr::Neg(a) => Ok(eval_jet2(a, point)?.neg()),
        Expr::Call(func, a) => {
            let u = eval_jet2(a, point)?;
            let v = u.value;
            match func {
                Func::Sin => Ok(u.chain(v.sin(), v.cos(), -v.sin())),
                Func::Cos => Ok(u.chain(v.cos(), -v.sin(), -v.cos())),
                Func::Exp => Ok(u.chain(v.exp(), v.exp(), v.exp())),
                Func::Sqrt => {
                    if v < 0.0 {
                        Err(domain_err(expr, "square root of a negative number"))
                    } else if v == 0.0 {
                        Err(domain_err(expr, "square root derivative undefined at zero"))
                    } else {
                        let r = v.sqrt();
                        Ok(u.chain(r, 0.5 / r, -0.25 / (v * r)))
                    }
                }
            }
        }
    }
}
