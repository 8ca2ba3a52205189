//! Expression trees over one variable with exact rational constants.

use std::fmt;

use crate::real::{Real, RealError};

/// Arithmetic expression in a single variable. Constants are exact
/// rationals; powers take integer exponents only.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Real),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

impl Expr {
    pub fn constant(v: Real) -> Self {
        Expr::Const(v)
    }

    /// Evaluate at `x`. Exact inputs stay exact; division by zero and
    /// 0^negative are runtime errors.
    pub fn eval(&self, x: &Real) -> Result<Real, RealError> {
        Ok(match self {
            Expr::Const(c) => c.clone(),
            Expr::Var => x.clone(),
            Expr::Neg(e) => -e.eval(x)?,
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => a.eval(x)?.checked_div(&b.eval(x)?)?,
            Expr::Pow(e, k) => e.eval(x)?.powi(*k)?,
        })
    }

    /// Decompose as `a*x + b` when the expression is affine; the exact path
    /// for preimages and range endpoints.
    pub fn as_affine(&self) -> Option<(Real, Real)> {
        match self {
            Expr::Const(c) => Some((Real::zero(), c.clone())),
            Expr::Var => Some((Real::one(), Real::zero())),
            Expr::Neg(e) => {
                let (a, b) = e.as_affine()?;
                Some((-a, -b))
            }
            Expr::Add(l, r) => {
                let (a1, b1) = l.as_affine()?;
                let (a2, b2) = r.as_affine()?;
                Some((a1 + a2, b1 + b2))
            }
            Expr::Sub(l, r) => {
                let (a1, b1) = l.as_affine()?;
                let (a2, b2) = r.as_affine()?;
                Some((a1 - a2, b1 - b2))
            }
            Expr::Mul(l, r) => {
                let (a1, b1) = l.as_affine()?;
                let (a2, b2) = r.as_affine()?;
                if a1.is_zero() {
                    Some((b1.clone() * a2, b1 * b2))
                } else if a2.is_zero() {
                    Some((a1 * b2.clone(), b1 * b2))
                } else {
                    None
                }
            }
            Expr::Div(l, r) => {
                let (a1, b1) = l.as_affine()?;
                let (a2, b2) = r.as_affine()?;
                if a2.is_zero() && !b2.is_zero() {
                    Some((a1.checked_div(&b2).ok()?, b1.checked_div(&b2).ok()?))
                } else {
                    None
                }
            }
            Expr::Pow(e, k) => {
                let (a, b) = e.as_affine()?;
                match k {
                    0 => Some((Real::zero(), Real::one())),
                    1 => Some((a, b)),
                    _ if a.is_zero() => Some((Real::zero(), b.powi(*k).ok()?)),
                    _ => None,
                }
            }
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Const(_) | Expr::Var => 4,
            Expr::Pow(..) => 3,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Add(..) | Expr::Sub(..) | Expr::Neg(_) => 1,
        }
    }

    /// Printable form using `var` as the variable name. Output reparses to a
    /// structurally equal tree.
    pub fn display<'a>(&'a self, var: &'a str) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, var }
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    var: &'a str,
}

fn fmt_expr(e: &Expr, var: &str, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let child = |f: &mut fmt::Formatter<'_>, c: &Expr, min_prec: u8| -> fmt::Result {
        if c.prec() < min_prec {
            write!(f, "(")?;
            fmt_expr(c, var, f)?;
            write!(f, ")")
        } else {
            fmt_expr(c, var, f)
        }
    };
    match e {
        Expr::Const(c) => write!(f, "{c}"),
        Expr::Var => f.write_str(var),
        Expr::Neg(e) => {
            write!(f, "-")?;
            child(f, e, 4)
        }
        Expr::Add(l, r) => {
            child(f, l, 1)?;
            write!(f, " + ")?;
            child(f, r, 2)
        }
        Expr::Sub(l, r) => {
            child(f, l, 1)?;
            write!(f, " - ")?;
            child(f, r, 2)
        }
        Expr::Mul(l, r) => {
            child(f, l, 2)?;
            write!(f, "*")?;
            child(f, r, 3)
        }
        Expr::Div(l, r) => {
            child(f, l, 2)?;
            write!(f, "/")?;
            child(f, r, 3)
        }
        Expr::Pow(e, k) => {
            child(f, e, 4)?;
            write!(f, "^{k}")
        }
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_expr(self.expr, self.var, f)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_expr(self, "x", f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Real {
        Real::from_ratio(n, d)
    }

    #[test]
    fn eval_is_exact_on_rationals() {
        // 1 - (1/2)*x at x = 2/3 is exactly 2/3
        let e = Expr::Sub(
            Box::new(Expr::Const(r(1, 1))),
            Box::new(Expr::Mul(Box::new(Expr::Const(r(1, 2))), Box::new(Expr::Var))),
        );
        let v = e.eval(&r(2, 3)).unwrap();
        assert_eq!(v, r(2, 3));
        assert!(v.is_exact());
    }

    #[test]
    fn rational_function_eval() {
        // t^2/(1+t) at 1/3 -> (1/9)/(4/3) = 1/12
        let e = Expr::Div(
            Box::new(Expr::Pow(Box::new(Expr::Var), 2)),
            Box::new(Expr::Add(Box::new(Expr::Const(r(1, 1))), Box::new(Expr::Var))),
        );
        assert_eq!(e.eval(&r(1, 3)).unwrap(), r(1, 12));
    }

    #[test]
    fn affine_decomposition() {
        let e = Expr::Sub(
            Box::new(Expr::Const(r(4, 3))),
            Box::new(Expr::Var),
        );
        assert_eq!(e.as_affine(), Some((r(-1, 1), r(4, 3))));

        let non_affine = Expr::Div(
            Box::new(Expr::Var),
            Box::new(Expr::Add(Box::new(Expr::Const(r(1, 1))), Box::new(Expr::Var))),
        );
        assert_eq!(non_affine.as_affine(), None);
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let e = Expr::Div(Box::new(Expr::Const(r(1, 1))), Box::new(Expr::Var));
        assert!(matches!(e.eval(&Real::zero()), Err(RealError::DivisionByZero)));
    }
}
