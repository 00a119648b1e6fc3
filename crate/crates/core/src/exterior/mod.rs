//! Exterior algebra in a single coordinate chart.
//!
//! Differential forms and multivector fields share one sparse
//! representation: a map from strictly increasing index tuples to symbolic
//! coefficients. No factorial normalizations are applied anywhere, so
//! `dp ∧ dq` has coefficient 1 on `(p, q)` and evaluates on a pair of
//! vectors as the 2×2 determinant.
//!
//! Contraction follows `i_{V∧U} = i_U ∘ i_V`: the first vector of a wedge
//! is contracted first, always into the first slot of the form.

mod algebra;
mod calculus;
pub mod combinatorics;
mod point;

use std::collections::BTreeMap;
use std::fmt;
use std::marker::PhantomData;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{Expr, ExprError, Tape};
use crate::scalar::Real;
pub use point::PointTensor;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExteriorError {
    #[error("objects live on different charts")]
    ChartMismatch,
    #[error("cannot contract a degree-{vector} multivector into a degree-{form} form")]
    DegreeUnderflow { vector: usize, form: usize },
    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("Schouten bracket of degrees ({0}, {1}) is not supported")]
    UnsupportedBracket(usize, usize),
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Ordered coordinate names of the single global chart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chart {
    coordinates: Vec<String>,
}

impl Chart {
    pub fn new<S: Into<String>>(coordinates: impl IntoIterator<Item = S>) -> Arc<Chart> {
        Arc::new(Chart { coordinates: coordinates.into_iter().map(Into::into).collect() })
    }

    pub fn dim(&self) -> usize {
        self.coordinates.len()
    }

    pub fn names(&self) -> &[String] {
        &self.coordinates
    }

    pub fn name(&self, index: usize) -> &str {
        &self.coordinates[index]
    }

    pub fn index_of(&self, name: &str) -> Result<usize, ExteriorError> {
        self.coordinates
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| ExteriorError::UnknownCoordinate(name.to_string()))
    }
}

/// Marker for covariant (form) indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lower;
/// Marker for contravariant (multivector) indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Upper;

/// Degree-k antisymmetric field stored by strictly increasing index tuples.
///
/// A product whose degree exceeds the chart dimension is represented by the
/// zero object of that degree.
pub struct Alternating<V> {
    chart: Arc<Chart>,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
    _variance: PhantomData<V>,
}

impl<V> Clone for Alternating<V> {
    fn clone(&self) -> Self {
        Alternating {
            chart: self.chart.clone(),
            degree: self.degree,
            terms: self.terms.clone(),
            _variance: PhantomData,
        }
    }
}

impl<V> PartialEq for Alternating<V> {
    fn eq(&self, other: &Self) -> bool {
        *self.chart == *other.chart && self.degree == other.degree && self.terms == other.terms
    }
}

pub type DifferentialForm = Alternating<Lower>;
pub type MultiVectorField = Alternating<Upper>;

impl<V> Alternating<V> {
    pub fn zero(chart: &Arc<Chart>, degree: usize) -> Self {
        Alternating {
            chart: chart.clone(),
            degree,
            terms: BTreeMap::new(),
            _variance: PhantomData,
        }
    }

    pub fn scalar(chart: &Arc<Chart>, value: Expr) -> Self {
        let mut out = Self::zero(chart, 0);
        out.accumulate(Vec::new(), value);
        out
    }

    /// Builds a field from terms with arbitrary (unsorted) index lists.
    /// Terms with a repeated index vanish; duplicates accumulate.
    pub fn from_terms<I>(chart: &Arc<Chart>, degree: usize, terms: I) -> Result<Self, ExteriorError>
    where
        I: IntoIterator<Item = (Vec<usize>, Expr)>,
    {
        let mut out = Self::zero(chart, degree);
        for (indices, coeff) in terms {
            if indices.len() != degree {
                return Err(ExteriorError::DegreeMismatch { expected: degree, found: indices.len() });
            }
            if let Some(&bad) = indices.iter().find(|&&i| i >= chart.dim()) {
                return Err(ExteriorError::UnknownCoordinate(format!("#{bad}")));
            }
            if let Some((sorted, sign)) = combinatorics::sort_with_sign(&indices) {
                let c = if sign < 0 { coeff.neg() } else { coeff };
                out.accumulate(sorted, c);
            }
        }
        Ok(out)
    }

    /// Same as [`from_terms`](Self::from_terms) with coordinates given by name.
    pub fn from_named<'a, I>(chart: &Arc<Chart>, degree: usize, terms: I) -> Result<Self, ExteriorError>
    where
        I: IntoIterator<Item = (&'a [&'a str], Expr)>,
    {
        let mut indexed = Vec::new();
        for (names, coeff) in terms {
            let idx = names
                .iter()
                .map(|n| chart.index_of(n))
                .collect::<Result<Vec<_>, _>>()?;
            indexed.push((idx, coeff));
        }
        Self::from_terms(chart, degree, indexed)
    }

    /// Basis element `∂_{i1} ∧ ... ∧ ∂_{ik}` (or `dz_{i1} ∧ ...`).
    pub fn basis(chart: &Arc<Chart>, indices: &[usize]) -> Result<Self, ExteriorError> {
        Self::from_terms(chart, indices.len(), [(indices.to_vec(), Expr::one())])
    }

    pub(crate) fn accumulate(&mut self, tuple: Vec<usize>, coeff: Expr) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.remove(&tuple) {
            Some(existing) => {
                let total = existing.add(&coeff);
                if !total.is_zero() {
                    self.terms.insert(tuple, total);
                }
            }
            None => {
                self.terms.insert(tuple, coeff);
            }
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// Nonzero terms in lexicographic tuple order.
    pub fn terms(&self) -> impl Iterator<Item = (&[usize], &Expr)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient on a strictly increasing tuple.
    pub fn coefficient(&self, tuple: &[usize]) -> Expr {
        self.terms.get(tuple).cloned().unwrap_or_else(Expr::zero)
    }

    /// Fully antisymmetric component for an arbitrary index list.
    pub fn component(&self, indices: &[usize]) -> Expr {
        match combinatorics::sort_with_sign(indices) {
            Some((sorted, sign)) => {
                let c = self.coefficient(&sorted);
                if sign < 0 {
                    c.neg()
                } else {
                    c
                }
            }
            None => Expr::zero(),
        }
    }

    /// The coefficient of a degree-0 object.
    pub fn as_scalar(&self) -> Expr {
        self.coefficient(&[])
    }

    pub(crate) fn same_chart(&self, other_chart: &Arc<Chart>) -> Result<(), ExteriorError> {
        if Arc::ptr_eq(&self.chart, other_chart) || *self.chart == **other_chart {
            Ok(())
        } else {
            Err(ExteriorError::ChartMismatch)
        }
    }

    pub fn map_coefficients(&self, mut f: impl FnMut(&Expr) -> Expr) -> Self {
        let mut out = Self::zero(&self.chart, self.degree);
        for (tuple, c) in &self.terms {
            out.accumulate(tuple.clone(), f(c));
        }
        out
    }

    pub fn scale(&self, factor: &Expr) -> Self {
        self.map_coefficients(|c| factor.mul(c))
    }

    pub fn neg(&self) -> Self {
        self.map_coefficients(Expr::neg)
    }

    pub fn add(&self, other: &Self) -> Result<Self, ExteriorError> {
        self.same_chart(&other.chart)?;
        if self.degree != other.degree {
            return Err(ExteriorError::DegreeMismatch { expected: self.degree, found: other.degree });
        }
        let mut out = self.clone();
        for (tuple, c) in &other.terms {
            out.accumulate(tuple.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, ExteriorError> {
        self.add(&other.neg())
    }

    /// Compiles every coefficient into one tape for pointwise evaluation.
    /// `inputs` names the tape slots (coordinates first, then parameters).
    pub fn compile<S: AsRef<str>>(&self, inputs: &[S]) -> Result<CompiledField, ExteriorError> {
        let ranks = self
            .terms
            .keys()
            .map(|t| combinatorics::rank(t, self.dim()))
            .collect();
        let exprs: Vec<Expr> = self.terms.values().cloned().collect();
        Ok(CompiledField {
            tape: Tape::compile(&exprs, inputs)?,
            dim: self.dim(),
            degree: self.degree,
            ranks,
        })
    }
}

/// Tape-backed evaluator producing a dense [`PointTensor`] at a point.
#[derive(Debug, Clone)]
pub struct CompiledField {
    tape: Tape,
    dim: usize,
    degree: usize,
    ranks: Vec<usize>,
}

impl CompiledField {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn eval<S: Real>(&self, inputs: &[S]) -> Result<PointTensor<S>, ExprError> {
        let values = self.tape.eval(inputs)?;
        let mut out = PointTensor::zeros(self.dim, self.degree);
        for (&r, v) in self.ranks.iter().zip(values) {
            out.comps_mut()[r] = v;
        }
        Ok(out)
    }
}

fn basis_symbol<V: 'static>() -> (&'static str, &'static str) {
    if std::any::TypeId::of::<V>() == std::any::TypeId::of::<Upper>() {
        ("∂", "∧")
    } else {
        ("d", "∧")
    }
}

impl<V: 'static> fmt::Display for Alternating<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let (prefix, wedge) = basis_symbol::<V>();
        for (n, (tuple, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({c})")?;
            for (i, &idx) in tuple.iter().enumerate() {
                let sep = if i == 0 { " " } else { wedge };
                write!(f, "{sep}{prefix}{}", self.chart.name(idx))?;
            }
        }
        Ok(())
    }
}

impl<V: 'static> fmt::Debug for Alternating<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Alternating[deg {}]({self})", self.degree)
    }
}

pub use algebra::{full_pairing, interior_product};
pub use calculus::{
    apply_vector, exterior_derivative, lie_bracket, lie_derivative_form, schouten_bracket,
};
