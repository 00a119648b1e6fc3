#![allow(dead_code)]

use std::sync::Arc;

use nonnoether::exterior::{Alternating, Chart};
use nonnoether::mechanics::{PhaseSpaceSystem, Structure};
use nonnoether::{parse_expression, Expr};
use proptest::prelude::*;
use rand::Rng;

pub const CANONICAL4: [&str; 4] = ["p1", "q1", "p2", "q2"];

pub fn expr(text: &str) -> Expr {
    parse_expression(text).unwrap_or_else(|e| panic!("{text}: {e}"))
}

pub fn chart(names: &[&str]) -> Arc<Chart> {
    Chart::new(names.iter().copied())
}

/// Builds a field from `(names, expression)` pairs.
pub fn field<V>(chart: &Arc<Chart>, degree: usize, terms: &[(&[&str], &str)]) -> Alternating<V> {
    Alternating::from_named(chart, degree, terms.iter().map(|(n, t)| (*n, expr(t)))).unwrap()
}

pub fn canonical_form(chart: &Arc<Chart>, pairs: usize) -> nonnoether::DifferentialForm {
    let names: Vec<[String; 2]> = (1..=pairs).map(|i| [format!("p{i}"), format!("q{i}")]).collect();
    let terms: Vec<(Vec<usize>, Expr)> = names
        .iter()
        .map(|[p, q]| (vec![chart.index_of(p).unwrap(), chart.index_of(q).unwrap()], Expr::one()))
        .collect();
    Alternating::from_terms(chart, 2, terms).unwrap()
}

pub fn canonical_system(hamiltonian: &str) -> PhaseSpaceSystem {
    let c = chart(&CANONICAL4);
    let omega = canonical_form(&c, 2);
    PhaseSpaceSystem::new(c, vec![], Structure::Symplectic(omega), expr(hamiltonian), vec![]).unwrap()
}

/// Random point in the sampling box.
pub fn point<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-2.0..=2.0)).collect()
}

/// Largest component of a field over random points.
pub fn residual<V, R: Rng + ?Sized>(f: &Alternating<V>, points: usize, rng: &mut R) -> f64 {
    let names = f.chart().names().to_vec();
    let compiled = f.compile(&names).unwrap();
    (0..points)
        .map(|_| compiled.eval(&point(names.len(), rng)).unwrap().max_abs())
        .fold(0.0, f64::max)
}

/// Relative residual `max |a − b| / (1 + max |a|)` of two fields.
pub fn relative_gap<V, R: Rng + ?Sized>(a: &Alternating<V>, b: &Alternating<V>, points: usize, rng: &mut R) -> f64 {
    let names = a.chart().names().to_vec();
    let ca = a.compile(&names).unwrap();
    let cd = a.sub(b).unwrap().compile(&names).unwrap();
    (0..points)
        .map(|_| {
            let x = point(names.len(), rng);
            cd.eval(&x).unwrap().max_abs() / (1.0 + ca.eval(&x).unwrap().max_abs())
        })
        .fold(0.0, f64::max)
}

/// Polynomial text in the given variables: up to four monomials with small
/// integer coefficients and exponents up to 2.
pub fn polynomial(vars: &'static [&'static str]) -> impl Strategy<Value = String> {
    let monomial = (-3i32..=3, proptest::collection::vec(0u32..=2, vars.len())).prop_map(move |(c, exps)| {
        let mut text = c.to_string();
        for (v, e) in vars.iter().zip(exps) {
            if e > 0 {
                text.push_str(&format!("*{v}^{e}"));
            }
        }
        text
    });
    proptest::collection::vec(monomial, 1..=4).prop_map(|ms| ms.join(" + "))
}

/// Degree-1 field with polynomial components.
pub fn vector_field(vars: &'static [&'static str]) -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec(polynomial(vars), vars.len())
}

pub fn build_vector<V>(chart: &Arc<Chart>, comps: &[String]) -> Alternating<V> {
    Alternating::from_terms(chart, 1, comps.iter().enumerate().map(|(i, t)| (vec![i], expr(t)))).unwrap()
}

/// Degree-2 field with polynomial components on every index pair.
pub fn bivector(vars: &'static [&'static str]) -> impl Strategy<Value = Vec<String>> {
    let n = vars.len();
    proptest::collection::vec(polynomial(vars), n * (n - 1) / 2)
}

pub fn build_bivector<V>(chart: &Arc<Chart>, comps: &[String]) -> Alternating<V> {
    let n = chart.dim();
    let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| vec![i, j]));
    Alternating::from_terms(chart, 2, pairs.zip(comps).map(|(t, c)| (t, expr(c)))).unwrap()
}
