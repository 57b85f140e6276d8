use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use super::{BinaryOp, Expr, Func, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedChar(char),
    UnexpectedEnd,
    Expected(&'static str),
    BadNumber,
    UnknownFunction(String),
    Arity {
        func: &'static str,
        expected: usize,
        found: usize,
    },
    TrailingInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{} at byte {offset}", describe(.kind))]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

fn describe(kind: &ParseErrorKind) -> String {
    use alloc::format;
    match kind {
        ParseErrorKind::Empty => "empty expression".into(),
        ParseErrorKind::UnexpectedChar(c) => format!("unexpected character {c:?}"),
        ParseErrorKind::UnexpectedEnd => "unexpected end of input".into(),
        ParseErrorKind::Expected(what) => format!("expected {what}"),
        ParseErrorKind::BadNumber => "malformed number".into(),
        ParseErrorKind::UnknownFunction(name) => format!("unknown function `{name}`"),
        ParseErrorKind::Arity { func, expected, found } => {
            format!("`{func}` takes {expected} argument(s), got {found}")
        }
        ParseErrorKind::TrailingInput => "unexpected trailing input".into(),
    }
}

pub(super) fn parse(source: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: source.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    if p.at_end() {
        return Err(p.error(ParseErrorKind::Empty));
    }
    let e = p.sum()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error(ParseErrorKind::TrailingInput));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError { kind, offset: self.pos }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, b: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.eat(b'+') {
                BinaryOp::Add
            } else if self.eat(b'-') {
                BinaryOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.product()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(b'*') {
                BinaryOp::Mul
            } else if self.eat(b'/') {
                BinaryOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            Ok(Expr::neg(self.unary()?))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            // right-associative, exponent may be negated
            let exponent = self.unary()?;
            Ok(Expr::binary(BinaryOp::Pow, base, exponent))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.error(ParseErrorKind::UnexpectedEnd)),
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(b')') {
                    return Err(self.error(ParseErrorKind::Expected("`)`")));
                }
                Ok(e)
            }
            Some(b) if b.is_ascii_digit() || b == b'.' => self.number(),
            Some(b) if b.is_ascii_alphabetic() || b == b'_' => self.identifier(),
            Some(_) => {
                let ch = core::str::from_utf8(&self.src[self.pos..])
                    .ok()
                    .and_then(|s| s.chars().next())
                    .unwrap_or('\u{fffd}');
                Err(self.error(ParseErrorKind::UnexpectedChar(ch)))
            }
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while matches!(p.peek(), Some(b) if b.is_ascii_digit()) {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut mantissa = digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            mantissa += digits(self);
        }
        if mantissa == 0 {
            return Err(ParseError {
                kind: ParseErrorKind::BadNumber,
                offset: start,
            });
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                return Err(ParseError {
                    kind: ParseErrorKind::BadNumber,
                    offset: start,
                });
            }
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        text.parse::<f64>().map(Expr::Num).map_err(|_| ParseError {
            kind: ParseErrorKind::BadNumber,
            offset: start,
        })
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_alphanumeric() || b == b'_') {
            self.pos += 1;
        }
        let name = core::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        self.skip_ws();
        if self.peek() != Some(b'(') {
            return Ok(Expr::Var(Var::from_name(name)));
        }
        let func = Func::from_name(name).ok_or(ParseError {
            kind: ParseErrorKind::UnknownFunction(name.into()),
            offset: start,
        })?;
        self.pos += 1;
        let mut args = Vec::new();
        if !self.eat(b')') {
            loop {
                args.push(self.sum()?);
                if self.eat(b',') {
                    continue;
                }
                if self.eat(b')') {
                    break;
                }
                return Err(self.error(ParseErrorKind::Expected("`,` or `)`")));
            }
        }
        if args.len() != func.arity() {
            return Err(ParseError {
                kind: ParseErrorKind::Arity {
                    func: func.name(),
                    expected: func.arity(),
                    found: args.len(),
                },
                offset: start,
            });
        }
        Ok(Expr::call(func, args))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::boxed::Box;
    use alloc::vec;

    fn v(name: &str) -> Expr {
        Expr::Var(Var::from_name(name))
    }

    #[test]
    fn single_variable() {
        assert_eq!(parse("c").unwrap(), v("c"));
    }

    #[test]
    fn product_with_call() {
        let e = parse("2*sqrt(c)").unwrap();
        assert_eq!(
            e,
            Expr::binary(BinaryOp::Mul, Expr::Num(2.0), Expr::call(Func::Sqrt, vec![v("c")]))
        );
    }

    #[test]
    fn arc_length_integrand() {
        let e = parse("-(1+u^2)^0.5").unwrap();
        let inner = Expr::binary(
            BinaryOp::Add,
            Expr::Num(1.0),
            Expr::binary(BinaryOp::Pow, v("u"), Expr::Num(2.0)),
        );
        let expected = Expr::Neg(Box::new(Expr::binary(BinaryOp::Pow, inner, Expr::Num(0.5))));
        assert_eq!(e, expected);
    }

    #[test]
    fn precedence_and_associativity() {
        // unary minus binds looser than ^
        assert_eq!(
            parse("-u^2").unwrap(),
            Expr::neg(Expr::binary(BinaryOp::Pow, v("u"), Expr::Num(2.0)))
        );
        assert_eq!(
            parse("2^3^2").unwrap(),
            Expr::binary(
                BinaryOp::Pow,
                Expr::Num(2.0),
                Expr::binary(BinaryOp::Pow, Expr::Num(3.0), Expr::Num(2.0))
            )
        );
        assert_eq!(
            parse("a-b-c").unwrap(),
            Expr::binary(BinaryOp::Sub, Expr::binary(BinaryOp::Sub, v("a"), v("b")), v("c"))
        );
        assert_eq!(
            parse("1+2*3").unwrap(),
            Expr::binary(
                BinaryOp::Add,
                Expr::Num(1.0),
                Expr::binary(BinaryOp::Mul, Expr::Num(2.0), Expr::Num(3.0))
            )
        );
        assert_eq!(
            parse("2^-1").unwrap(),
            Expr::binary(BinaryOp::Pow, Expr::Num(2.0), Expr::neg(Expr::Num(1.0)))
        );
    }

    #[test]
    fn numbers() {
        assert_eq!(parse("1.5e-3").unwrap(), Expr::Num(1.5e-3));
        assert_eq!(parse(".25").unwrap(), Expr::Num(0.25));
        assert_eq!(parse("3.").unwrap(), Expr::Num(3.0));
        assert_eq!(parse("1e").unwrap_err().kind, ParseErrorKind::BadNumber);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let err = parse("c + * k").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedChar('*'));
        assert_eq!(err.offset, 4);

        let err = parse("(c + k").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Expected("`)`"));
        assert_eq!(err.offset, 6);

        assert_eq!(parse("   ").unwrap_err().kind, ParseErrorKind::Empty);
        assert_eq!(parse("c k").unwrap_err().kind, ParseErrorKind::TrailingInput);
        assert_eq!(parse("c +").unwrap_err().kind, ParseErrorKind::UnexpectedEnd);
    }

    #[test]
    fn unknown_function_is_a_parse_error() {
        let err = parse("2*tanh(c)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownFunction("tanh".into()));
        assert_eq!(err.offset, 2);
    }

    #[test]
    fn unknown_variable_is_deferred() {
        let e = parse("r*k").unwrap();
        assert_eq!(e.variables()[0], Var::Other("r".into()));
    }

    #[test]
    fn arity_checked() {
        let err = parse("pow(c)").unwrap_err();
        assert!(matches!(
            err.kind,
            ParseErrorKind::Arity {
                expected: 2,
                found: 1,
                ..
            }
        ));
        assert!(parse("pow(c, 2)").is_ok());
    }
}
