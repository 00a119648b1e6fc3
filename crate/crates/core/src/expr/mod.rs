//! Symbolic scalar expressions.
//!
//! Expressions are immutable trees over named symbols with exact rational
//! constants. They are the coefficients of every differential form and
//! multivector field in the crate. Simplification is limited to constant
//! folding and elimination of `0` and `1` identities; equality of two
//! expressions is decided numerically by [`probabilistic_equal`].

mod diff;
mod equal;
mod eval;
mod parse;
mod poly;
mod print;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use equal::{probabilistic_equal, SAMPLE_BOX};
pub use eval::{evaluate, EvalContext, Tape};
pub use parse::parse_expression;
pub use poly::Polynomial;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite value bound to `{0}`")]
    NonFiniteBinding(String),
    #[error("no defined sample found after {attempts} attempts")]
    ResamplingExhausted { attempts: usize },
}

/// One node of an expression tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Num(BigRational),
    Sym(Arc<str>),
    Neg(Expr),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Div(Expr, Expr),
    /// Power with an exact rational exponent.
    Pow(Expr, BigRational),
    Sqrt(Expr),
}

/// Shared, immutable expression handle. Cloning is a reference-count bump.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Expr(Arc<Node>);

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn ptr(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    fn wrap(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn num(value: BigRational) -> Expr {
        Expr::wrap(Node::Num(value))
    }

    pub fn int(value: i64) -> Expr {
        Expr::num(rat(value))
    }

    pub fn ratio(numer: i64, denom: i64) -> Expr {
        Expr::num(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn sym(name: &str) -> Expr {
        Expr::wrap(Node::Sym(Arc::from(name)))
    }

    pub fn as_num(&self) -> Option<&BigRational> {
        match self.node() {
            Node::Num(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num().is_some_and(Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.as_num().is_some_and(One::is_one)
    }

    pub fn neg(&self) -> Expr {
        match self.node() {
            Node::Num(v) => Expr::num(-v),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::wrap(Node::Neg(self.clone())),
        }
    }

    pub fn add(&self, other: &Expr) -> Expr {
        Expr::sum([self.clone(), other.clone()])
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        Expr::sum([self.clone(), other.neg()])
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        Expr::product([self.clone(), other.clone()])
    }

    /// Sum with nested sums flattened, constants folded and zeros dropped.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut constant = rat(0);
        let mut rest = Vec::new();
        for term in terms {
            match term.node() {
                Node::Num(v) => constant += v,
                Node::Add(inner) => {
                    for t in inner {
                        match t.node() {
                            Node::Num(v) => constant += v,
                            _ => rest.push(t.clone()),
                        }
                    }
                }
                _ => rest.push(term),
            }
        }
        if !constant.is_zero() {
            rest.push(Expr::num(constant));
        }
        match rest.len() {
            0 => Expr::zero(),
            1 => rest.pop().unwrap(),
            _ => Expr::wrap(Node::Add(rest)),
        }
    }

    /// Product with nested products flattened, constants folded, ones dropped
    /// and any zero factor collapsing the product.
    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let mut constant = rat(1);
        let mut rest = Vec::new();
        for factor in factors {
            let mut absorb = |f: &Expr, rest: &mut Vec<Expr>| match f.node() {
                Node::Num(v) => constant *= v,
                Node::Neg(inner) => {
                    constant = -constant.clone();
                    rest.push(inner.clone());
                }
                _ => rest.push(f.clone()),
            };
            match factor.node() {
                Node::Mul(inner) => {
                    for f in inner {
                        absorb(f, &mut rest);
                    }
                }
                _ => absorb(&factor, &mut rest),
            }
        }
        if constant.is_zero() {
            return Expr::zero();
        }
        if rest.is_empty() {
            return Expr::num(constant);
        }
        let negate = (-constant.clone()).is_one();
        if !constant.is_one() && !negate {
            rest.insert(0, Expr::num(constant));
        }
        let body = if rest.len() == 1 {
            rest.pop().unwrap()
        } else {
            Expr::wrap(Node::Mul(rest))
        };
        if negate {
            body.neg()
        } else {
            body
        }
    }

    pub fn div(&self, denom: &Expr) -> Expr {
        if self.is_zero() {
            return Expr::zero();
        }
        if denom.is_one() {
            return self.clone();
        }
        match (self.node(), denom.node()) {
            (Node::Num(a), Node::Num(b)) if !b.is_zero() => Expr::num(a / b),
            (_, Node::Num(b)) if !b.is_zero() => {
                Expr::product([Expr::num(b.recip()), self.clone()])
            }
            _ => Expr::wrap(Node::Div(self.clone(), denom.clone())),
        }
    }

    pub fn pow(&self, exponent: BigRational) -> Expr {
        if exponent.is_zero() {
            return Expr::one();
        }
        if exponent.is_one() {
            return self.clone();
        }
        if let Node::Num(base) = self.node() {
            if exponent.is_integer() {
                if let Some(e) = exponent.to_integer().to_i32() {
                    if !(base.is_zero() && e < 0) {
                        return Expr::num(pow_rational(base, e));
                    }
                }
            }
        }
        if self.is_one() {
            return Expr::one();
        }
        Expr::wrap(Node::Pow(self.clone(), exponent))
    }

    pub fn powi(&self, exponent: i64) -> Expr {
        self.pow(rat(exponent))
    }

    pub fn sqrt(&self) -> Expr {
        if let Node::Num(v) = self.node() {
            if let Some(root) = exact_sqrt(v) {
                return Expr::num(root);
            }
        }
        Expr::wrap(Node::Sqrt(self.clone()))
    }

    /// Names of all symbols appearing in the expression.
    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Num(_) => {}
            Node::Sym(name) => {
                out.insert(name.to_string());
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Sqrt(a) => a.collect_symbols(out),
            Node::Div(a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
            Node::Add(items) | Node::Mul(items) => {
                for item in items {
                    item.collect_symbols(out);
                }
            }
        }
    }

    /// True when the expression is a polynomial in its symbols: no
    /// quotients by non-constants, no square roots, only non-negative
    /// integer powers.
    pub fn is_polynomial(&self) -> bool {
        match self.node() {
            Node::Num(_) | Node::Sym(_) => true,
            Node::Neg(a) => a.is_polynomial(),
            Node::Add(items) | Node::Mul(items) => items.iter().all(Expr::is_polynomial),
            Node::Div(a, b) => b.as_num().is_some() && a.is_polynomial(),
            Node::Pow(a, e) => e.is_integer() && !e.is_negative() && a.is_polynomial(),
            Node::Sqrt(_) => false,
        }
    }

    /// Number of nodes counted as a tree (shared subtrees counted once per use).
    pub fn size(&self) -> usize {
        1 + match self.node() {
            Node::Num(_) | Node::Sym(_) => 0,
            Node::Neg(a) | Node::Pow(a, _) | Node::Sqrt(a) => a.size(),
            Node::Div(a, b) => a.size() + b.size(),
            Node::Add(items) | Node::Mul(items) => items.iter().map(Expr::size).sum(),
        }
    }
}

fn pow_rational(base: &BigRational, e: i32) -> BigRational {
    let mut acc = rat(1);
    for _ in 0..e.unsigned_abs() {
        acc *= base;
    }
    if e < 0 {
        acc.recip()
    } else {
        acc
    }
}

fn exact_sqrt(v: &BigRational) -> Option<BigRational> {
    if v.is_negative() {
        return None;
    }
    let n = v.numer().sqrt();
    let d = v.denom().sqrt();
    (&n * &n == *v.numer() && &d * &d == *v.denom()).then(|| BigRational::new(n, d))
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expression(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_folding() {
        assert_eq!(Expr::sum([Expr::int(2), Expr::int(3)]), Expr::int(5));
        assert!(Expr::product([Expr::sym("x"), Expr::zero()]).is_zero());
        assert_eq!(Expr::product([Expr::one(), Expr::sym("x")]), Expr::sym("x"));
        assert_eq!(Expr::sym("x").neg().neg(), Expr::sym("x"));
        assert_eq!(Expr::int(4).sqrt(), Expr::int(2));
        assert_eq!(Expr::ratio(1, 2).powi(-2), Expr::int(4));
    }

    #[test]
    fn polynomial_detection() {
        let p: Expr = "x^2*y + 3*x - y/2".parse().unwrap();
        assert!(p.is_polynomial());
        let q: Expr = "x/y".parse().unwrap();
        assert!(!q.is_polynomial());
        let r: Expr = "sqrt(x)".parse().unwrap();
        assert!(!r.is_polynomial());
    }
}
