//! Weight expressions in one real variable `x`.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' ['-'] integer)?
//! primary := number | 'x' | func '(' expr ')' | '(' expr ')'
//! func    := 'sin' | 'cos' | 'exp'
//! ```
//!
//! `-x^2` therefore parses as `-(x^2)`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum WeightExpr {
    Num(f64),
    X,
    Neg(Box<WeightExpr>),
    Add(Box<WeightExpr>, Box<WeightExpr>),
    Sub(Box<WeightExpr>, Box<WeightExpr>),
    Mul(Box<WeightExpr>, Box<WeightExpr>),
    Div(Box<WeightExpr>, Box<WeightExpr>),
    Pow(Box<WeightExpr>, i32),
    Sin(Box<WeightExpr>),
    Cos(Box<WeightExpr>),
    Exp(Box<WeightExpr>),
}

impl WeightExpr {
    pub fn parse(text: &str) -> Result<Self> {
        parse_weight(text)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let v = self.eval_raw(x)?;
        if !v.is_finite() {
            return Err(Error::Eval(format!("non-finite value at x = {x}")));
        }
        Ok(v)
    }

    fn eval_raw(&self, x: f64) -> Result<f64> {
        use WeightExpr::*;
        let v = match self {
            Num(v) => *v,
            X => x,
            Neg(a) => -a.eval_raw(x)?,
            Add(a, b) => a.eval_raw(x)? + b.eval_raw(x)?,
            Sub(a, b) => a.eval_raw(x)? - b.eval_raw(x)?,
            Mul(a, b) => a.eval_raw(x)? * b.eval_raw(x)?,
            Div(a, b) => {
                let d = b.eval_raw(x)?;
                if d == 0.0 {
                    return Err(Error::Eval(format!("division by zero at x = {x}")));
                }
                a.eval_raw(x)? / d
            }
            Pow(a, k) => {
                let base = a.eval_raw(x)?;
                if base == 0.0 && *k < 0 {
                    return Err(Error::Eval(format!("division by zero at x = {x}")));
                }
                base.powi(*k)
            }
            Sin(a) => a.eval_raw(x)?.sin(),
            Cos(a) => a.eval_raw(x)?.cos(),
            Exp(a) => a.eval_raw(x)?.exp(),
        };
        if !v.is_finite() {
            return Err(Error::Eval(format!("overflow to non-finite value at x = {x}")));
        }
        Ok(v)
    }
}

/// Prints with every compound subexpression parenthesized, so printing and
/// reparsing reproduces the tree.
impl fmt::Display for WeightExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use WeightExpr::*;
        match self {
            Num(v) => write!(f, "{v:?}"),
            X => write!(f, "x"),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, b) => write!(f, "({a}+{b})"),
            Sub(a, b) => write!(f, "({a}-{b})"),
            Mul(a, b) => write!(f, "({a}*{b})"),
            Div(a, b) => write!(f, "({a}/{b})"),
            Pow(a, k) => write!(f, "({a}^{k})"),
            Sin(a) => write!(f, "sin({a})"),
            Cos(a) => write!(f, "cos({a})"),
            Exp(a) => write!(f, "exp({a})"),
        }
    }
}

pub fn parse_weight(text: &str) -> Result<WeightExpr> {
    let mut p = Parser { src: text, pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

pub fn eval_weight(expr: &WeightExpr, x: f64) -> Result<f64> {
    expr.eval(x)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn error(&self, message: &str) -> Error {
        let found = match self.src[self.pos..].chars().next() {
            Some(c) => format!("`{c}`"),
            None => "end of input".to_string(),
        };
        Error::Syntax {
            offset: self.pos,
            message: format!("{message}, found {found}"),
        }
    }

    fn eat(&mut self, byte: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, byte: u8) -> Result<()> {
        if self.eat(byte) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", byte as char)))
        }
    }

    fn expr(&mut self) -> Result<WeightExpr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = WeightExpr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = WeightExpr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<WeightExpr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = WeightExpr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = WeightExpr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<WeightExpr> {
        if self.eat(b'-') {
            return Ok(WeightExpr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<WeightExpr> {
        let base = self.primary()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        self.skip_ws();
        let start = self.pos;
        let negative = self.eat(b'-');
        self.skip_ws();
        let digits_start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(self.error("expected integer exponent"));
        }
        let magnitude: i32 = self.src[digits_start..self.pos].parse().map_err(|_| Error::Syntax {
            offset: start,
            message: "exponent out of range".into(),
        })?;
        let k = if negative { -magnitude } else { magnitude };
        Ok(WeightExpr::Pow(Box::new(base), k))
    }

    fn primary(&mut self) -> Result<WeightExpr> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b'0'..=b'9' | b'.') => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                let func: fn(Box<WeightExpr>) -> WeightExpr = match name {
                    "x" => return Ok(WeightExpr::X),
                    "sin" => WeightExpr::Sin,
                    "cos" => WeightExpr::Cos,
                    "exp" => WeightExpr::Exp,
                    _ => {
                        return Err(Error::UnknownIdentifier {
                            name: name.to_string(),
                            offset: start,
                        })
                    }
                };
                self.expect(b'(')?;
                let arg = self.expr()?;
                self.expect(b')')?;
                Ok(func(Box::new(arg)))
            }
            _ => Err(self.error("expected a number, `x`, a function or `(`")),
        }
    }

    fn number(&mut self) -> Result<WeightExpr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while matches!(p.peek(), Some(b'0'..=b'9')) {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        let v: f64 = text.parse().map_err(|_| Error::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        if !v.is_finite() {
            return Err(Error::Syntax {
                offset: start,
                message: format!("number `{text}` is not finite"),
            });
        }
        Ok(WeightExpr::Num(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use WeightExpr::*;

    fn b(e: WeightExpr) -> Box<WeightExpr> {
        Box::new(e)
    }

    #[test]
    fn grammar_examples() {
        assert_eq!(parse_weight("2+sin(x)").unwrap(), Add(b(Num(2.0)), b(Sin(b(X)))));
        assert_eq!(parse_weight("1+x^2").unwrap(), Add(b(Num(1.0)), b(Pow(b(X), 2))));
        match parse_weight("2+*x") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(parse_weight("-x^2").unwrap(), Neg(b(Pow(b(X), 2))));
        assert_eq!(
            parse_weight("1-2-3").unwrap(),
            Sub(b(Sub(b(Num(1.0)), b(Num(2.0)))), b(Num(3.0)))
        );
        assert_eq!(
            parse_weight("8/4/2").unwrap(),
            Div(b(Div(b(Num(8.0)), b(Num(4.0)))), b(Num(2.0)))
        );
        assert_eq!(
            parse_weight("1+2*x").unwrap(),
            Add(b(Num(1.0)), b(Mul(b(Num(2.0)), b(X))))
        );
        assert_eq!(parse_weight(" ( x ) ^ -1 ").unwrap(), Pow(b(X), -1));
        assert_eq!(parse_weight("1.5e2").unwrap(), Num(150.0));
    }

    #[test]
    fn errors_carry_positions() {
        match parse_weight("sin(") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        match parse_weight("1 + tan(x)") {
            Err(Error::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "tan");
                assert_eq!(offset, 4);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_weight("x x"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse_weight("x^y"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_weight(""), Err(Error::Syntax { offset: 0, .. })));
        assert!(matches!(parse_weight("1e999"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn evaluation() {
        assert_eq!(eval_weight(&parse_weight("2+sin(x)").unwrap(), 0.0).unwrap(), 2.0);
        assert_eq!(eval_weight(&parse_weight("1+x^2").unwrap(), 3.0).unwrap(), 10.0);
        assert!(matches!(
            eval_weight(&parse_weight("1/x").unwrap(), 0.0),
            Err(Error::Eval(_))
        ));
        assert!(eval_weight(&parse_weight("x^-2").unwrap(), 0.0).is_err());
        assert!(eval_weight(&parse_weight("exp(x)").unwrap(), 1000.0).is_err());
        let e = parse_weight("exp(-x^2)*cos(x)").unwrap();
        let x: f64 = 0.3;
        assert!((e.eval(x).unwrap() - (-x * x).exp() * x.cos()).abs() < 1e-15);
    }

    fn arb_expr() -> impl Strategy<Value = WeightExpr> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Num),
            Just(X),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Neg(b(a))),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Add(b(l), b(r))),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Sub(b(l), b(r))),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Mul(b(l), b(r))),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Div(b(l), b(r))),
                (inner.clone(), -4i32..5).prop_map(|(a, k)| Pow(b(a), k)),
                inner.clone().prop_map(|a| Sin(b(a))),
                inner.clone().prop_map(|a| Cos(b(a))),
                inner.prop_map(|a| Exp(b(a))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_is_identity(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = parse_weight(&printed).unwrap();
            prop_assert_eq!(reparsed, e);
        }

        #[test]
        fn evaluation_is_deterministic(e in arb_expr(), x in -5.0f64..5.0) {
            let a = e.eval(x).ok();
            let b = e.eval(x).ok();
            prop_assert_eq!(a, b);
        }
    }
}
