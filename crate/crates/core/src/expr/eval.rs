use alloc::string::String;

use thiserror::Error;

use super::{BinaryOp, Expr, Func, Var};
use crate::dual::Dual;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain error: {op} at {at}")]
    Domain { op: &'static str, at: f64 },
    #[error("not differentiable: {op} at {at}")]
    NotDifferentiable { op: &'static str, at: f64 },
    #[error("non-finite result in {op}")]
    NonFinite { op: &'static str },
}

/// Values for the five bindable variables.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bindings {
    slots: [Option<f64>; 5],
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: Var, value: f64) -> Self {
        self.set(&var, value);
        self
    }

    /// Bindings for `c` and `k`, the common case.
    pub fn ck(c: f64, k: f64) -> Self {
        Self {
            slots: [Some(c), Some(k), None, None, None],
        }
    }

    pub fn set(&mut self, var: &Var, value: f64) {
        if let Some(i) = var.slot() {
            self.slots[i] = Some(value);
        }
    }

    pub fn get(&self, var: &Var) -> Option<f64> {
        var.slot().and_then(|i| self.slots[i])
    }
}

impl Expr {
    pub fn eval(&self, bindings: &Bindings) -> Result<f64, EvalError> {
        eval_node(self, bindings, None).map(|d| d.value)
    }

    /// Value and partial derivative with respect to `wrt`.
    pub fn eval_dual(&self, bindings: &Bindings, wrt: &Var) -> Result<Dual, EvalError> {
        if bindings.get(wrt).is_none() {
            return Err(EvalError::Unbound(wrt.name().into()));
        }
        eval_node(self, bindings, Some(wrt))
    }
}

fn finite(d: Dual, op: &'static str) -> Result<Dual, EvalError> {
    if d.value.is_finite() && d.deriv.is_finite() {
        Ok(d)
    } else {
        Err(EvalError::NonFinite { op })
    }
}

fn eval_node(e: &Expr, b: &Bindings, wrt: Option<&Var>) -> Result<Dual, EvalError> {
    match e {
        Expr::Num(v) => Ok(Dual::constant(*v)),
        Expr::Var(v) => {
            let x = b.get(v).ok_or_else(|| EvalError::Unbound(v.name().into()))?;
            Ok(if wrt == Some(v) {
                Dual::variable(x)
            } else {
                Dual::constant(x)
            })
        }
        Expr::Neg(inner) => Ok(-eval_node(inner, b, wrt)?),
        Expr::Binary { op, lhs, rhs } => {
            let l = eval_node(lhs, b, wrt)?;
            let r = eval_node(rhs, b, wrt)?;
            match op {
                BinaryOp::Add => finite(l + r, "+"),
                BinaryOp::Sub => finite(l - r, "-"),
                BinaryOp::Mul => finite(l * r, "*"),
                BinaryOp::Div => {
                    if r.value == 0.0 {
                        return Err(EvalError::Domain {
                            op: "division by zero",
                            at: l.value,
                        });
                    }
                    finite(l / r, "/")
                }
                BinaryOp::Pow => power(l, r, "^"),
            }
        }
        Expr::Call { func, args } => {
            let x = eval_node(&args[0], b, wrt)?;
            match func {
                Func::Sqrt => {
                    if x.value < 0.0 {
                        return Err(EvalError::Domain {
                            op: "sqrt",
                            at: x.value,
                        });
                    }
                    if x.value == 0.0 {
                        if x.deriv != 0.0 {
                            return Err(EvalError::NotDifferentiable { op: "sqrt", at: 0.0 });
                        }
                        return Ok(Dual::constant(0.0));
                    }
                    finite(x.sqrt(), "sqrt")
                }
                Func::Log => {
                    if x.value <= 0.0 {
                        return Err(EvalError::Domain { op: "log", at: x.value });
                    }
                    finite(x.ln(), "log")
                }
                Func::Exp => finite(x.exp(), "exp"),
                Func::Abs => {
                    if x.value == 0.0 && x.deriv != 0.0 {
                        return Err(EvalError::NotDifferentiable { op: "abs", at: 0.0 });
                    }
                    Ok(x.abs())
                }
                Func::Sin => finite(x.sin(), "sin"),
                Func::Cos => finite(x.cos(), "cos"),
                Func::Pow => {
                    let y = eval_node(&args[1], b, wrt)?;
                    power(x, y, "pow")
                }
            }
        }
    }
}

fn power(base: Dual, exponent: Dual, op: &'static str) -> Result<Dual, EvalError> {
    let a = base.value;
    let n = exponent.value;
    if exponent.deriv == 0.0 {
        if a == 0.0 {
            if n < 0.0 {
                return Err(EvalError::Domain {
                    op: "0^negative",
                    at: n,
                });
            }
            if n > 0.0 && n < 1.0 && base.deriv != 0.0 {
                return Err(EvalError::NotDifferentiable { op, at: 0.0 });
            }
        }
        if a < 0.0 && libm::trunc(n) != n {
            return Err(EvalError::Domain {
                op: "negative base with fractional exponent",
                at: a,
            });
        }
        return finite(base.powf(n), op);
    }
    if a <= 0.0 {
        return Err(EvalError::Domain {
            op: "non-positive base with varying exponent",
            at: a,
        });
    }
    finite(base.pow(exponent), op)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn plain_evaluation() {
        assert_eq!(p("c").eval(&Bindings::new().with(Var::C, 3.0)), Ok(3.0));
        assert_eq!(p("-(1+u^2)^0.5").eval(&Bindings::new().with(Var::U, 0.0)), Ok(-1.0));
        assert_eq!(p("2*sqrt(c)").eval(&Bindings::new().with(Var::C, 4.0)), Ok(4.0));
    }

    #[test]
    fn dual_evaluation() {
        let b = Bindings::new().with(Var::C, 3.0);
        assert_eq!(p("c^2").eval_dual(&b, &Var::C), Ok(Dual::new(9.0, 6.0)));
        let b = Bindings::new().with(Var::U, 0.0);
        assert_eq!(p("-(1+u^2)^0.5").eval_dual(&b, &Var::U), Ok(Dual::new(-1.0, 0.0)));
        let b = Bindings::new().with(Var::C, 1.0);
        assert_eq!(p("2*sqrt(c)").eval_dual(&b, &Var::C), Ok(Dual::new(2.0, 1.0)));
    }

    #[test]
    fn arc_length_derivative_matches_central_difference() {
        let e = p("-(1+u^2)^0.5");
        let h = 1e-6;
        for &u in &[0.0, 0.3, -1.7, 4.0] {
            let d = e.eval_dual(&Bindings::new().with(Var::U, u), &Var::U).unwrap();
            let f = |x: f64| e.eval(&Bindings::new().with(Var::U, x)).unwrap();
            let fd = (f(u + h) - f(u - h)) / (2.0 * h);
            assert!((d.deriv - fd).abs() <= 1e-6 * (1.0 + d.deriv.abs()), "u={u}");
        }
    }

    #[test]
    fn unbound_variables() {
        let e = p("r*k");
        assert_eq!(e.eval(&Bindings::ck(1.0, 1.0)), Err(EvalError::Unbound("r".into())));
        assert_eq!(
            p("c").eval_dual(&Bindings::ck(1.0, 1.0), &Var::T),
            Err(EvalError::Unbound("t".into()))
        );
    }

    #[test]
    fn domain_errors() {
        let b = Bindings::ck(-1.0, 0.0);
        assert!(matches!(p("log(c)").eval(&b), Err(EvalError::Domain { .. })));
        assert!(matches!(p("log(k)").eval(&b), Err(EvalError::Domain { .. })));
        assert!(matches!(p("sqrt(c)").eval(&b), Err(EvalError::Domain { .. })));
        assert!(matches!(p("k^-1").eval(&b), Err(EvalError::Domain { .. })));
        assert!(matches!(p("c^0.5").eval(&b), Err(EvalError::Domain { .. })));
        assert!(matches!(p("c/k").eval(&b), Err(EvalError::Domain { .. })));
        assert!(matches!(
            p("exp(1000*k + 1000)").eval(&b),
            Err(EvalError::NonFinite { .. })
        ));
        // integer powers of negatives are fine
        assert_eq!(p("c^3").eval(&b), Ok(-1.0));
    }

    #[test]
    fn kinks_are_errors_only_when_differentiating() {
        let b = Bindings::ck(0.0, 2.0);
        assert_eq!(p("abs(c)").eval(&b), Ok(0.0));
        assert!(matches!(
            p("abs(c)").eval_dual(&b, &Var::C),
            Err(EvalError::NotDifferentiable { op: "abs", .. })
        ));
        // c does not vary along k
        assert_eq!(p("abs(c)").eval_dual(&b, &Var::K), Ok(Dual::new(0.0, 0.0)));
        assert!(matches!(
            p("sqrt(c)").eval_dual(&b, &Var::C),
            Err(EvalError::NotDifferentiable { .. })
        ));
        assert_eq!(p("sqrt(c)").eval(&b), Ok(0.0));
    }

    #[test]
    fn evaluation_is_bitwise_deterministic() {
        let e = p("2*sqrt(c) + log(k)*sin(c)^2 - exp(-c/k)");
        let b = Bindings::ck(0.731, 2.9);
        let a = e.eval_dual(&b, &Var::C).unwrap();
        let again = e.eval_dual(&b, &Var::C).unwrap();
        assert_eq!(a.value.to_bits(), again.value.to_bits());
        assert_eq!(a.deriv.to_bits(), again.deriv.to_bits());
    }
}
