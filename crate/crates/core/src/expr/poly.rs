use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Expr, Node};

/// Expanded multivariate polynomial with exact rational coefficients.
///
/// Monomials are keyed by a sorted map from symbol name to exponent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    terms: BTreeMap<BTreeMap<String, u32>, BigRational>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = Polynomial::zero();
        p.push(BTreeMap::new(), c);
        p
    }

    pub fn variable(name: &str) -> Self {
        let mut p = Polynomial::zero();
        p.push(BTreeMap::from([(name.to_string(), 1)]), BigRational::one());
        p
    }

    fn push(&mut self, monomial: BTreeMap<String, u32>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(monomial).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    /// Expands a polynomial expression. Returns `None` for anything
    /// outside the polynomial fragment (see [`Expr::is_polynomial`]).
    pub fn expand(e: &Expr) -> Option<Polynomial> {
        match e.node() {
            Node::Num(c) => Some(Polynomial::constant(c.clone())),
            Node::Sym(s) => Some(Polynomial::variable(s)),
            Node::Neg(a) => Some(Polynomial::expand(a)?.scale(&-BigRational::one())),
            Node::Add(items) => {
                let mut acc = Polynomial::zero();
                for item in items {
                    acc = acc.add(&Polynomial::expand(item)?);
                }
                Some(acc)
            }
            Node::Mul(items) => {
                let mut acc = Polynomial::constant(BigRational::one());
                for item in items {
                    acc = acc.mul(&Polynomial::expand(item)?);
                }
                Some(acc)
            }
            Node::Div(a, b) => {
                let c = b.as_num()?;
                if c.is_zero() {
                    return None;
                }
                Some(Polynomial::expand(a)?.scale(&c.recip()))
            }
            Node::Pow(a, exponent) => {
                if !exponent.is_integer() || exponent.is_negative() {
                    return None;
                }
                let k = exponent.to_integer().to_u32()?;
                let base = Polynomial::expand(a)?;
                let mut acc = Polynomial::constant(BigRational::one());
                for _ in 0..k {
                    acc = acc.mul(&base);
                }
                Some(acc)
            }
            Node::Sqrt(_) => None,
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.push(m.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, factor: &BigRational) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            out.push(m.clone(), c * factor);
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut m = ma.clone();
                for (v, e) in mb {
                    *m.entry(v.clone()).or_insert(0) += e;
                }
                out.push(m, ca * cb);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Monomials with their coefficients, in a deterministic order.
    pub fn terms(&self) -> impl Iterator<Item = (&BTreeMap<String, u32>, &BigRational)> {
        self.terms.iter()
    }

    pub fn to_expr(&self) -> Expr {
        Expr::sum(self.terms.iter().map(|(m, c)| {
            let factors = m.iter().map(|(v, &e)| Expr::sym(v).powi(i64::from(e)));
            Expr::num(c.clone()).mul(&Expr::product(factors))
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    #[test]
    fn expands_products_and_powers() {
        let p = Polynomial::expand(&parse_expression("(x+y)^2 - 2*x*y").unwrap()).unwrap();
        let expected = Polynomial::expand(&parse_expression("x^2 + y^2").unwrap()).unwrap();
        assert_eq!(p, expected);
        assert!(Polynomial::expand(&parse_expression("x - x").unwrap()).unwrap().is_zero());
        assert!(Polynomial::expand(&parse_expression("1/x").unwrap()).is_none());
        assert!(Polynomial::expand(&parse_expression("sqrt(x)").unwrap()).is_none());
    }

    #[test]
    fn round_trips_through_expr() {
        let p = Polynomial::expand(&parse_expression("(p/2 + q)^3").unwrap()).unwrap();
        assert_eq!(Polynomial::expand(&p.to_expr()).unwrap(), p);
    }
}
