use nalgebra::{DMatrix, DVector};

use super::combinatorics::{binomial, rank, shuffle_sign, subsets};
use crate::scalar::Real;

/// Dense antisymmetric tensor at one evaluation point. Only strictly
/// increasing index tuples are stored, in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTensor<S> {
    dim: usize,
    degree: usize,
    comps: Vec<S>,
}

impl<S: Real> PointTensor<S> {
    pub fn zeros(dim: usize, degree: usize) -> Self {
        PointTensor { dim, degree, comps: vec![S::zero(); binomial(dim, degree)] }
    }

    pub fn scalar(dim: usize, value: S) -> Self {
        PointTensor { dim, degree: 0, comps: vec![value] }
    }

    pub fn from_vector(v: &DVector<S>) -> Self {
        PointTensor { dim: v.len(), degree: 1, comps: v.iter().copied().collect() }
    }

    /// Upper triangle of an antisymmetric matrix. The lower triangle is
    /// ignored.
    pub fn from_matrix(m: &DMatrix<S>) -> Self {
        let n = m.nrows();
        let mut out = Self::zeros(n, 2);
        for (r, t) in subsets(n, 2).into_iter().enumerate() {
            out.comps[r] = m[(t[0], t[1])];
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn comps(&self) -> &[S] {
        &self.comps
    }

    pub fn comps_mut(&mut self) -> &mut [S] {
        &mut self.comps
    }

    pub fn get(&self, tuple: &[usize]) -> S {
        if tuple.len() > self.dim {
            return S::zero();
        }
        self.comps[rank(tuple, self.dim)]
    }

    pub fn to_vector(&self) -> DVector<S> {
        assert_eq!(self.degree, 1);
        DVector::from_column_slice(&self.comps)
    }

    /// Full antisymmetric matrix of a degree-2 tensor.
    pub fn to_matrix(&self) -> DMatrix<S> {
        assert_eq!(self.degree, 2);
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, t) in subsets(self.dim, 2).into_iter().enumerate() {
            m[(t[0], t[1])] = self.comps[r];
            m[(t[1], t[0])] = -self.comps[r];
        }
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.dim, self.degree), (other.dim, other.degree));
        let comps = self.comps.iter().zip(&other.comps).map(|(a, b)| *a + *b).collect();
        PointTensor { dim: self.dim, degree: self.degree, comps }
    }

    pub fn scale(&self, factor: S) -> Self {
        let comps = self.comps.iter().map(|a| *a * factor).collect();
        PointTensor { dim: self.dim, degree: self.degree, comps }
    }

    pub fn max_abs(&self) -> S {
        self.comps.iter().fold(S::zero(), |m, c| m.max(c.abs()))
    }

    /// Index tuple and value of the largest-magnitude component.
    pub fn pivot(&self) -> Option<(Vec<usize>, S)> {
        let all = subsets(self.dim, self.degree);
        self.comps
            .iter()
            .zip(all)
            .max_by(|a, b| a.0.abs().partial_cmp(&b.0.abs()).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(v, t)| (t, *v))
    }

    pub fn wedge(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let degree = self.degree + other.degree;
        let mut out = Self::zeros(self.dim, degree);
        if degree > self.dim {
            return out;
        }
        let left = subsets(self.dim, self.degree);
        let right = subsets(self.dim, other.degree);
        for (a, ca) in left.iter().zip(&self.comps) {
            if *ca == S::zero() {
                continue;
            }
            for (b, cb) in right.iter().zip(&other.comps) {
                if *cb == S::zero() {
                    continue;
                }
                if let Some((t, sign)) = shuffle_sign(a, b) {
                    let r = rank(&t, self.dim);
                    let v = *ca * *cb;
                    out.comps[r] += if sign < 0 { -v } else { v };
                }
            }
        }
        out
    }

    pub fn power(&self, k: usize) -> Self {
        let mut acc = Self::scalar(self.dim, S::one());
        for _ in 0..k {
            acc = acc.wedge(self);
        }
        acc
    }

    /// Complete contraction with a tensor of equal degree, matching
    /// `full_pairing` on symbolic fields.
    pub fn full_pairing(&self, other: &Self) -> S {
        assert_eq!((self.dim, self.degree), (other.dim, other.degree));
        self.comps
            .iter()
            .zip(&other.comps)
            .fold(S::zero(), |acc, (a, b)| acc + *a * *b)
    }
}
