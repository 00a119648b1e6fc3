//! Dense numeric helpers and small symbolic matrix routines.

use nalgebra::{DMatrix, DVector};

use crate::expr::Expr;
use crate::scalar::Real;

/// Singular values at or below `rel_tol * σ_max` count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Result of a rank-revealing decomposition of a square matrix.
#[derive(Debug, Clone)]
pub struct PseudoInverse<S: Real> {
    pub inverse: DMatrix<S>,
    pub rank: usize,
    /// Orthonormal basis of the right null space.
    pub kernel: Vec<DVector<S>>,
}

/// Moore–Penrose pseudo-inverse with numerical rank and null space.
pub fn pseudo_inverse<S: Real>(m: &DMatrix<S>, rel_tol: S) -> PseudoInverse<S> {
    let n = m.ncols();
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().fold(S::zero(), |a, &b| a.max(b));
    let cutoff = rel_tol * sigma_max;
    let mut inverse = DMatrix::zeros(n, m.nrows());
    let mut rank = 0;
    let mut kernel = Vec::new();
    for (i, &s) in sigma.iter().enumerate() {
        if sigma_max > S::zero() && s > cutoff {
            rank += 1;
            let vi = v_t.row(i).transpose();
            let ui = u.column(i);
            inverse += (vi * ui.transpose()) / s;
        } else {
            kernel.push(v_t.row(i).transpose());
        }
    }
    // Rectangular inputs leave part of the domain outside V^T's rows.
    debug_assert!(v_t.nrows() == n || m.nrows() >= n);
    PseudoInverse { inverse, rank, kernel }
}

/// Characteristic polynomial `det(λI − M) = λ^n + c_1 λ^{n−1} + ... + c_n`
/// by the Faddeev–LeVerrier recursion. Returns `[1, c_1, ..., c_n]`.
pub fn characteristic_polynomial<S: Real>(m: &DMatrix<S>) -> Vec<S> {
    let n = m.nrows();
    let mut coeffs = vec![S::one()];
    let mut aux = DMatrix::<S>::zeros(n, n);
    let identity = DMatrix::<S>::identity(n, n);
    for k in 1..=n {
        aux = m * &aux + &identity * coeffs[k - 1];
        let trace = (m * &aux).trace();
        coeffs.push(-trace / S::from_usize(k).unwrap());
    }
    coeffs
}

/// Monic square root of a monic polynomial of even degree, coefficients in
/// descending powers. Valid when the input is a perfect square; the caller
/// checks the residual.
pub fn polynomial_sqrt<S: Real>(coeffs: &[S]) -> Vec<S> {
    assert!(!coeffs.is_empty() && (coeffs.len() - 1).is_multiple_of(2), "even degree");
    let r = (coeffs.len() - 1) / 2;
    let two = S::one() + S::one();
    let mut root = vec![S::one()];
    for k in 1..=r {
        let mut acc = coeffs[k];
        for i in 1..k {
            acc -= root[i] * root[k - i];
        }
        root.push(acc / two);
    }
    root
}

pub fn polynomial_square<S: Real>(root: &[S]) -> Vec<S> {
    let mut out = vec![S::zero(); 2 * root.len() - 1];
    for (i, a) in root.iter().enumerate() {
        for (j, b) in root.iter().enumerate() {
            out[i + j] += *a * *b;
        }
    }
    out
}

/// Square matrix of symbolic entries, row-major.
#[derive(Debug, Clone)]
pub struct SymbolicMatrix {
    n: usize,
    entries: Vec<Expr>,
}

impl SymbolicMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Expr) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        SymbolicMatrix { n, entries }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.n + j]
    }

    /// Determinant by Laplace expansion along the first row, skipping
    /// structurally zero entries.
    pub fn determinant(&self) -> Expr {
        let rows: Vec<usize> = (0..self.n).collect();
        let cols = rows.clone();
        self.minor_det(&rows, &cols)
    }

    fn minor_det(&self, rows: &[usize], cols: &[usize]) -> Expr {
        match rows.len() {
            0 => Expr::one(),
            1 => self.get(rows[0], cols[0]).clone(),
            _ => {
                let r = rows[0];
                let sub_rows = &rows[1..];
                let mut terms = Vec::new();
                for (k, &c) in cols.iter().enumerate() {
                    let entry = self.get(r, c);
                    if entry.is_zero() {
                        continue;
                    }
                    let sub_cols: Vec<usize> =
                        cols.iter().copied().filter(|&x| x != c).collect();
                    let minor = self.minor_det(sub_rows, &sub_cols);
                    if minor.is_zero() {
                        continue;
                    }
                    let t = entry.mul(&minor);
                    terms.push(if k % 2 == 0 { t } else { t.neg() });
                }
                Expr::sum(terms)
            }
        }
    }

    /// Adjugate (transposed cofactor matrix).
    pub fn adjugate(&self) -> SymbolicMatrix {
        let n = self.n;
        SymbolicMatrix::from_fn(n, |i, j| {
            let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
            let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
            let minor = self.minor_det(&rows, &cols);
            if (i + j) % 2 == 0 {
                minor
            } else {
                minor.neg()
            }
        })
    }
}
