use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use super::{Expr, Node};

impl Expr {
    /// Exact partial derivative with respect to the symbol `coord`. Every
    /// other symbol, coordinate or parameter, is held constant.
    pub fn differentiate(&self, coord: &str) -> Expr {
        if !self.mentions(coord) {
            return Expr::zero();
        }
        match self.node() {
            Node::Num(_) => Expr::zero(),
            Node::Sym(name) => {
                if &**name == coord {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Neg(a) => a.differentiate(coord).neg(),
            Node::Add(terms) => Expr::sum(terms.iter().map(|t| t.differentiate(coord))),
            Node::Mul(factors) => {
                let mut terms = Vec::with_capacity(factors.len());
                for (i, factor) in factors.iter().enumerate() {
                    let d = factor.differentiate(coord);
                    if d.is_zero() {
                        continue;
                    }
                    let mut parts = factors.clone();
                    parts[i] = d;
                    terms.push(Expr::product(parts));
                }
                Expr::sum(terms)
            }
            Node::Div(numer, denom) => {
                let dn = numer.differentiate(coord);
                let dd = denom.differentiate(coord);
                if dd.is_zero() {
                    return dn.div(denom);
                }
                let top = dn.mul(denom).sub(&numer.mul(&dd));
                top.div(&denom.powi(2))
            }
            Node::Pow(base, exponent) => {
                let lowered = exponent - BigRational::one();
                Expr::product([
                    Expr::num(exponent.clone()),
                    base.pow(lowered),
                    base.differentiate(coord),
                ])
            }
            Node::Sqrt(arg) => {
                let half = BigRational::new(BigInt::from(1), BigInt::from(2));
                Expr::product([
                    Expr::num(half.clone()),
                    arg.pow(-half),
                    arg.differentiate(coord),
                ])
            }
        }
    }

    fn mentions(&self, name: &str) -> bool {
        match self.node() {
            Node::Num(_) => false,
            Node::Sym(s) => &**s == name,
            Node::Neg(a) | Node::Pow(a, _) | Node::Sqrt(a) => a.mentions(name),
            Node::Div(a, b) => a.mentions(name) || b.mentions(name),
            Node::Add(items) | Node::Mul(items) => items.iter().any(|i| i.mentions(name)),
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::expr::{parse_expression, probabilistic_equal};

    fn same(a: &str, b: &str, coord: &str) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let lhs = parse_expression(a).unwrap().differentiate(coord);
        let rhs = parse_expression(b).unwrap();
        probabilistic_equal(&lhs, &rhs, 20, 1e-12, &mut rng).unwrap()
    }

    #[test]
    fn chain_rule_through_sqrt() {
        assert!(same("sqrt(p^2+1)", "p*(p^2+1)^(-1/2)", "p"));
        assert!(same("(p^2+m^2)^(1/2)", "p/sqrt(p^2+m^2)", "p"));
    }

    #[test]
    fn product_and_constant_rules() {
        assert!(same("x*y", "y", "x"));
        assert_eq!(parse_expression("m").unwrap().differentiate("q").to_string(), "0");
        assert!(same("x/y", "-x/y^2", "y"));
        assert!(same("(x^3 - 2*x)/(1 + x^2)", "((3*x^2 - 2)*(1 + x^2) - (x^3 - 2*x)*2*x)/(1+x^2)^2", "x"));
    }
}
