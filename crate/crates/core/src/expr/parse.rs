//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := atom ('^' exponent)?
//! exponent := INT | '-' INT | '(' '-'? INT ('/' INT)? ')'
//! atom     := NUMBER | IDENT | 'sqrt' '(' expr ')' | '(' expr ')'
//! ```

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Pow, Zero};

use super::{Expr, ExprError};

pub fn parse_expression(text: &str) -> Result<Expr, ExprError> {
    if let Some(offset) = text.bytes().position(|b| !b.is_ascii()) {
        return Err(syntax(offset, "non-ASCII input"));
    }
    let mut parser = Parser { src: text.as_bytes(), pos: 0 };
    parser.skip_ws();
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos < parser.src.len() {
        return Err(syntax(parser.pos, "unexpected trailing input"));
    }
    Ok(expr)
}

fn syntax(offset: usize, message: &str) -> ExprError {
    ExprError::Syntax { offset, message: message.to_string() }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(syntax(self.pos, &format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(self.term()?.neg());
            } else {
                return Ok(Expr::sum(terms));
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.unary()?;
                acc = acc.mul(&rhs);
            } else if self.eat(b'/') {
                let rhs = self.unary()?;
                acc = acc.div(&rhs);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            Ok(self.unary()?.neg())
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exponent = self.exponent()?;
            Ok(base.pow(exponent))
        } else {
            Ok(base)
        }
    }

    fn exponent(&mut self) -> Result<BigRational, ExprError> {
        self.skip_ws();
        if self.eat(b'(') {
            let negative = self.eat(b'-');
            let numer = self.integer()?;
            let denom = if self.eat(b'/') {
                let at = self.pos;
                let d = self.integer()?;
                if d.is_zero() {
                    return Err(syntax(at, "zero denominator in exponent"));
                }
                d
            } else {
                BigInt::from(1)
            };
            self.expect(b')')?;
            let value = BigRational::new(numer, denom);
            Ok(if negative { -value } else { value })
        } else {
            let negative = self.eat(b'-');
            let value = BigRational::from_integer(self.integer()?);
            Ok(if negative { -value } else { value })
        }
    }

    fn integer(&mut self) -> Result<BigInt, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            let message = if self.pos == self.src.len() {
                "unexpected end of input, expected an integer exponent"
            } else {
                "exponent must be an integer or a parenthesized rational"
            };
            return Err(syntax(self.pos, message));
        }
        Ok(digits(&self.src[start..self.pos]))
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(syntax(start, "unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                while self
                    .peek()
                    .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                self.skip_ws();
                if self.peek() == Some(b'(') {
                    if name != "sqrt" {
                        return Err(ExprError::UnknownFunction {
                            name: name.to_string(),
                            offset: start,
                        });
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(b')')?;
                    Ok(arg.sqrt())
                } else {
                    Ok(Expr::sym(name))
                }
            }
            Some(c) => Err(syntax(start, &format!("unexpected character `{}`", c as char))),
        }
    }

    /// Decimal literal converted exactly: `1.25e-3` becomes `1/800`.
    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let mut mantissa = Vec::new();
        let mut frac_digits = 0u32;
        let mut seen_point = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                mantissa.push(c);
                if seen_point {
                    frac_digits += 1;
                }
            } else if c == b'.' && !seen_point {
                seen_point = true;
            } else {
                break;
            }
            self.pos += 1;
        }
        if mantissa.is_empty() {
            return Err(syntax(start, "malformed number"));
        }
        let mut exp10: i64 = -(frac_digits as i64);
        if matches!(self.peek(), Some(b'e' | b'E')) {
            self.pos += 1;
            let negative = match self.peek() {
                Some(b'-') => {
                    self.pos += 1;
                    true
                }
                Some(b'+') => {
                    self.pos += 1;
                    false
                }
                _ => false,
            };
            let exp_start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if exp_start == self.pos {
                return Err(syntax(self.pos, "malformed exponent in number"));
            }
            let e: i64 = std::str::from_utf8(&self.src[exp_start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| syntax(exp_start, "exponent out of range"))?;
            exp10 += if negative { -e } else { e };
        }
        let value = BigRational::from_integer(digits(&mantissa));
        let scale = BigRational::from_integer(BigInt::from(10)).pow(exp10 as i32);
        Ok(Expr::num(value * scale))
    }
}

fn digits(bytes: &[u8]) -> BigInt {
    std::str::from_utf8(bytes).unwrap().parse().unwrap()
}
