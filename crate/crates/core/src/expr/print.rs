use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed};

use super::{Expr, Node};

// Binding strength, loosest first. Children that bind looser than their
// context are parenthesized.
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn strength(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(_) => SUM,
        Node::Mul(_) | Node::Div(..) => PRODUCT,
        Node::Num(v) if v.is_negative() => UNARY,
        Node::Num(v) if !v.is_integer() => PRODUCT,
        Node::Neg(_) => UNARY,
        Node::Pow(..) => POWER,
        Node::Num(_) | Node::Sym(_) | Node::Sqrt(_) => ATOM,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if strength(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

fn write_rational(f: &mut fmt::Formatter<'_>, v: &BigRational) -> fmt::Result {
    if v.is_integer() {
        write!(f, "{}", v.numer())
    } else {
        write!(f, "{}/{}", v.numer(), v.denom())
    }
}

fn leading_negative(factors: &[Expr]) -> bool {
    matches!(factors.first().map(|e| e.node()), Some(Node::Num(v)) if v.is_negative())
}

/// Writes a product, optionally with the sign of a leading constant
/// flipped (the caller has already written the minus).
fn write_product(f: &mut fmt::Formatter<'_>, factors: &[Expr], negate_first: bool) -> fmt::Result {
    let mut first = true;
    for (i, factor) in factors.iter().enumerate() {
        if i == 0 && negate_first {
            if let Node::Num(v) = factor.node() {
                let v = -v;
                if !v.is_one() {
                    write_rational(f, &v)?;
                    first = false;
                }
                continue;
            }
        }
        if !first {
            f.write_str("*")?;
        }
        // Rational constants print as `p/q`, which must not absorb the
        // following factor.
        let min = if first { PRODUCT } else { POWER };
        write_child(f, factor, min)?;
        first = false;
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Num(v) => write_rational(f, v),
            Node::Sym(name) => f.write_str(name),
            Node::Neg(inner) => {
                f.write_str("-")?;
                write_child(f, inner, POWER)
            }
            Node::Add(terms) => {
                for (i, term) in terms.iter().enumerate() {
                    match (i, term.node()) {
                        (0, _) => write_child(f, term, SUM)?,
                        (_, Node::Neg(inner)) => {
                            f.write_str(" - ")?;
                            write_child(f, inner, PRODUCT)?;
                        }
                        (_, Node::Num(v)) if v.is_negative() => {
                            f.write_str(" - ")?;
                            write_rational(f, &-v)?;
                        }
                        (_, Node::Mul(factors)) if leading_negative(factors) => {
                            f.write_str(" - ")?;
                            write_product(f, factors, true)?;
                        }
                        _ => {
                            f.write_str(" + ")?;
                            write_child(f, term, PRODUCT)?;
                        }
                    }
                }
                Ok(())
            }
            Node::Mul(factors) => write_product(f, factors, false),
            Node::Div(numer, denom) => {
                write_child(f, numer, PRODUCT)?;
                f.write_str("/")?;
                write_child(f, denom, POWER)
            }
            Node::Pow(base, exponent) => {
                write_child(f, base, ATOM)?;
                if exponent.is_integer() && !exponent.is_negative() {
                    write!(f, "^{}", exponent.numer())
                } else if exponent.denom().is_one() {
                    write!(f, "^({})", exponent.numer())
                } else {
                    write!(f, "^({}/{})", exponent.numer(), exponent.denom())
                }
            }
            Node::Sqrt(arg) => write!(f, "sqrt({arg})"),
        }
    }
}
