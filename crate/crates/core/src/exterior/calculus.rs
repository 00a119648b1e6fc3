use std::sync::Arc;

use crate::expr::Expr;

use super::algebra::interior_product;
use super::combinatorics::{shuffle_sign, sort_with_sign, subsets};
use super::{Chart, DifferentialForm, ExteriorError, MultiVectorField};

impl DifferentialForm {
    /// `df` of a scalar function.
    pub fn differential(chart: &Arc<Chart>, f: &Expr) -> DifferentialForm {
        let mut out = DifferentialForm::zero(chart, 1);
        for (i, name) in chart.names().iter().enumerate() {
            out.accumulate(vec![i], f.differentiate(name));
        }
        out
    }
}

/// Exterior derivative by the coordinate formula
/// `d(f dz_I) = Σ_m ∂_m f dz_m ∧ dz_I`.
pub fn exterior_derivative(a: &DifferentialForm) -> DifferentialForm {
    let chart = a.chart.clone();
    let mut out = DifferentialForm::zero(&chart, a.degree + 1);
    if out.degree > chart.dim() {
        return out;
    }
    for (tuple, c) in &a.terms {
        for m in 0..chart.dim() {
            if let Some((sorted, sign)) = shuffle_sign(&[m], tuple) {
                let d = c.differentiate(chart.name(m));
                out.accumulate(sorted, if sign < 0 { d.neg() } else { d });
            }
        }
    }
    out
}

/// Directional derivative `X(f)` of a scalar along a vector field.
pub fn apply_vector(x: &MultiVectorField, f: &Expr) -> Result<Expr, ExteriorError> {
    if x.degree != 1 {
        return Err(ExteriorError::DegreeMismatch { expected: 1, found: x.degree });
    }
    let chart = x.chart.clone();
    Ok(Expr::sum(
        x.terms
            .iter()
            .map(|(t, c)| c.mul(&f.differentiate(chart.name(t[0])))),
    ))
}

/// Lie derivative of a form along a vector field, by Cartan's formula
/// `L_X = i_X ∘ d + d ∘ i_X`.
pub fn lie_derivative_form(
    x: &MultiVectorField,
    a: &DifferentialForm,
) -> Result<DifferentialForm, ExteriorError> {
    if x.degree != 1 {
        return Err(ExteriorError::DegreeMismatch { expected: 1, found: x.degree });
    }
    x.same_chart(&a.chart)?;
    let da = exterior_derivative(a);
    let first = if da.degree <= a.dim() {
        interior_product(x, &da)?
    } else {
        DifferentialForm::zero(&a.chart, a.degree)
    };
    if a.degree == 0 {
        return Ok(first);
    }
    let second = exterior_derivative(&interior_product(x, a)?);
    first.add(&second)
}

/// Schouten bracket for the supported degree pairs.
///
/// * `(1, k)`: Lie transport,
///   `[X,W]^{i1..ik} = X^m ∂_m W^{i1..ik} − Σ_a W^{i1..m..ik} ∂_m X^{ia}`.
/// * `(2, 2)`: the trivector
///   `[P,Q]^{ijk} = Σ_cyclic (P^{mi} ∂_m Q^{jk} + Q^{mi} ∂_m P^{jk})`,
///   so that `[W,W] = 0` is the Jacobi identity of `{f,g} = i_W df∧dg`.
pub fn schouten_bracket(
    a: &MultiVectorField,
    b: &MultiVectorField,
) -> Result<MultiVectorField, ExteriorError> {
    a.same_chart(&b.chart)?;
    match (a.degree, b.degree) {
        (1, _) => Ok(lie_transport(a, b)),
        (2, 2) => Ok(bivector_bracket(a, b)),
        (p, q) => Err(ExteriorError::UnsupportedBracket(p, q)),
    }
}

/// Commutator `[X, Y]` of two vector fields.
pub fn lie_bracket(
    x: &MultiVectorField,
    y: &MultiVectorField,
) -> Result<MultiVectorField, ExteriorError> {
    if y.degree != 1 {
        return Err(ExteriorError::DegreeMismatch { expected: 1, found: y.degree });
    }
    schouten_bracket(x, y)
}

fn lie_transport(x: &MultiVectorField, w: &MultiVectorField) -> MultiVectorField {
    let chart = x.chart.clone();
    let mut out = MultiVectorField::zero(&chart, w.degree);
    let names = chart.names();
    for (tuple, coeff) in &w.terms {
        // X^m ∂_m W^I
        let transported = Expr::sum(
            x.terms
                .iter()
                .map(|(xm, xc)| xc.mul(&coeff.differentiate(&names[xm[0]]))),
        );
        out.accumulate(tuple.clone(), transported);
        // − W^I ∂_{i_a} X^j placed at the tuple with i_a replaced by j
        for slot in 0..tuple.len() {
            let along = &names[tuple[slot]];
            for (xj, xc) in &x.terms {
                let d = xc.differentiate(along);
                if d.is_zero() {
                    continue;
                }
                let mut replaced = tuple.clone();
                replaced[slot] = xj[0];
                if let Some((sorted, sign)) = sort_with_sign(&replaced) {
                    let c = coeff.mul(&d);
                    out.accumulate(sorted, if sign < 0 { c } else { c.neg() });
                }
            }
        }
    }
    out
}

fn bivector_bracket(p: &MultiVectorField, q: &MultiVectorField) -> MultiVectorField {
    let chart = p.chart.clone();
    let n = chart.dim();
    let mut out = MultiVectorField::zero(&chart, 3);
    if n < 3 {
        return out;
    }
    let names = chart.names();
    let term = |left: &MultiVectorField, right: &MultiVectorField, i: usize, j: usize, k: usize| {
        Expr::sum((0..n).filter_map(|m| {
            let lm = left.component(&[m, i]);
            if lm.is_zero() {
                return None;
            }
            let d = right.component(&[j, k]).differentiate(&names[m]);
            (!d.is_zero()).then(|| lm.mul(&d))
        }))
    };
    for t in subsets(n, 3) {
        let (i, j, k) = (t[0], t[1], t[2]);
        let mut parts = Vec::new();
        for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
            parts.push(term(p, q, a, b, c));
            parts.push(term(q, p, a, b, c));
        }
        out.accumulate(t, Expr::sum(parts));
    }
    out
}
