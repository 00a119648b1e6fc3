use crate::expr::Expr;

use super::combinatorics::{remove_slot, shuffle_sign};
use super::{Alternating, DifferentialForm, ExteriorError, MultiVectorField};

impl<V> Alternating<V> {
    /// Wedge product. The coefficient of a sorted tuple is the signed sum
    /// over its shuffles, without factorial weights.
    pub fn wedge(&self, other: &Self) -> Result<Self, ExteriorError> {
        self.same_chart(&other.chart)?;
        let mut out = Self::zero(&self.chart, self.degree + other.degree);
        if out.degree > self.dim() {
            return Ok(out);
        }
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if let Some((tuple, sign)) = shuffle_sign(a, b) {
                    let c = ca.mul(cb);
                    out.accumulate(tuple, if sign < 0 { c.neg() } else { c });
                }
            }
        }
        Ok(out)
    }

    /// `k`-fold wedge power; `k = 0` gives the constant 1.
    pub fn power(&self, k: usize) -> Result<Self, ExteriorError> {
        let mut acc = Self::scalar(&self.chart, Expr::one());
        for _ in 0..k {
            acc = acc.wedge(self)?;
            if acc.is_structurally_zero() {
                return Ok(Self::zero(&self.chart, self.degree * k));
            }
        }
        Ok(acc)
    }
}

impl MultiVectorField {
    /// Outer power `W^k` of a bivector.
    pub fn multivector_power(&self, k: usize) -> Result<Self, ExteriorError> {
        if self.degree != 2 {
            return Err(ExteriorError::DegreeMismatch { expected: 2, found: self.degree });
        }
        self.power(k)
    }
}

/// Contraction `i_V a`. For `V = ∂_{i1} ∧ ... ∧ ∂_{ik}` the vectors are
/// contracted in order `i1, i2, ...`, each into the first slot.
pub fn interior_product(
    v: &MultiVectorField,
    a: &DifferentialForm,
) -> Result<DifferentialForm, ExteriorError> {
    v.same_chart(&a.chart)?;
    if v.degree > a.degree {
        return Err(ExteriorError::DegreeUnderflow { vector: v.degree, form: a.degree });
    }
    let mut out = DifferentialForm::zero(&a.chart, a.degree - v.degree);
    for (vi, cv) in &v.terms {
        for (fj, cf) in &a.terms {
            let mut rest = fj.clone();
            let mut sign = 1;
            let mut alive = true;
            for &idx in vi {
                match remove_slot(&rest, idx) {
                    Some((r, s)) => {
                        rest = r;
                        sign *= s;
                    }
                    None => {
                        alive = false;
                        break;
                    }
                }
            }
            if alive {
                let c = cv.mul(cf);
                out.accumulate(rest, if sign < 0 { c.neg() } else { c });
            }
        }
    }
    Ok(out)
}

/// Complete contraction of a degree-2k multivector with a degree-2k form.
pub fn full_pairing(v: &MultiVectorField, a: &DifferentialForm) -> Result<Expr, ExteriorError> {
    v.same_chart(&a.chart)?;
    if v.degree != a.degree {
        return Err(ExteriorError::DegreeMismatch { expected: v.degree, found: a.degree });
    }
    let terms = v
        .terms
        .iter()
        .filter_map(|(t, cv)| a.terms.get(t).map(|cf| cv.mul(cf)));
    Ok(Expr::sum(terms))
}
