//! Arithmetic expressions for utility and dynamics functions.
//!
//! Grammar, loosest to tightest binding:
//!
//! | level | operators            | associativity |
//! |-------|----------------------|---------------|
//! | 1     | `+` `-`              | left          |
//! | 2     | `*` `/`              | left          |
//! | 3     | unary `-`            | prefix        |
//! | 4     | `^`                  | right         |
//! | 5     | literals, variables, calls, `( )` | |
//!
//! So `-u^2` is `-(u^2)` and `2^3^2` is `2^(3^2)`. The exponent of `^` may
//! itself carry a unary minus (`2^-1`).
//!
//! Functions: `sqrt`, `log` (natural), `exp`, `pow(a, b)`, `abs`, `sin`,
//! `cos`. Variables are `c`, `k`, `u`, `y`, `t`; any other identifier parses
//! but fails to bind at evaluation time.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

mod eval;
mod parse;

pub use eval::{Bindings, EvalError};
pub use parse::{ParseError, ParseErrorKind};

/// Variable names an expression may reference.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    C,
    K,
    U,
    Y,
    T,
    /// Parsed but never bindable.
    Other(String),
}

impl Var {
    pub fn from_name(name: &str) -> Self {
        match name {
            "c" => Var::C,
            "k" => Var::K,
            "u" => Var::U,
            "y" => Var::Y,
            "t" => Var::T,
            other => Var::Other(other.into()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Var::C => "c",
            Var::K => "k",
            Var::U => "u",
            Var::Y => "y",
            Var::T => "t",
            Var::Other(s) => s,
        }
    }

    pub(crate) fn slot(&self) -> Option<usize> {
        match self {
            Var::C => Some(0),
            Var::K => Some(1),
            Var::U => Some(2),
            Var::Y => Some(3),
            Var::T => Some(4),
            Var::Other(_) => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
            BinaryOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Log,
    Exp,
    Pow,
    Abs,
    Sin,
    Cos,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "log" => Func::Log,
            "exp" => Func::Exp,
            "pow" => Func::Pow,
            "abs" => Func::Abs,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Log => "log",
            Func::Exp => "exp",
            Func::Pow => "pow",
            Func::Abs => "abs",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }
}

/// Expression tree. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        func: Func,
        args: Vec<Expr>,
    },
}

const PREC_NEG: u8 = 3;
const PREC_ATOM: u8 = 5;

impl Expr {
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        parse::parse(source)
    }

    pub fn num(v: f64) -> Self {
        Expr::Num(v)
    }

    pub fn var(v: Var) -> Self {
        Expr::Var(v)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: Expr) -> Self {
        Expr::Neg(Box::new(e))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn call(func: Func, args: Vec<Expr>) -> Self {
        Expr::Call { func, args }
    }

    /// Distinct variables in first-appearance order.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Expr::Neg(e) => e.collect_vars(out),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
            Expr::Call { args, .. } => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Variables outside `allowed`, if any.
    pub fn undeclared(&self, allowed: &[Var]) -> Vec<Var> {
        self.variables().into_iter().filter(|v| !allowed.contains(v)).collect()
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(v) if v.is_sign_negative() => PREC_NEG,
            Expr::Num(_) | Expr::Var(_) | Expr::Call { .. } => PREC_ATOM,
            Expr::Neg(_) => PREC_NEG,
            Expr::Binary { op, .. } => op.precedence(),
        }
    }

    fn write_child(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.write_child(f, PREC_NEG)
            }
            Expr::Binary { op, lhs, rhs } => {
                let p = op.precedence();
                let (lmin, rmin) = match op {
                    // base must be an atom; exponent is parsed at unary level
                    BinaryOp::Pow => (PREC_ATOM, PREC_NEG),
                    _ => (p, p + 1),
                };
                lhs.write_child(f, lmin)?;
                write!(f, "{}", op.symbol())?;
                rhs.write_child(f, rmin)
            }
            Expr::Call { func, args } => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
