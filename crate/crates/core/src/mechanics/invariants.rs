use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::expr::{Expr, Polynomial};
use crate::exterior::{full_pairing, lie_derivative_form, schouten_bracket, CompiledField, MultiVectorField, PointTensor};
use crate::linalg::{characteristic_polynomial, polynomial_sqrt, pseudo_inverse, DEFAULT_RANK_TOL};

use super::brackets::validate_poisson;
use super::structure::{invert_symplectic_form, point_structure};
use super::{sample_points, BoundTape, MechanicsError, PhaseSpaceSystem, Structure, SymmetryGenerator, FD_STEP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvariantPath {
    Regular,
    Presymplectic,
    Poisson,
}

impl fmt::Display for InvariantPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InvariantPath::Regular => "regular",
            InvariantPath::Presymplectic => "presymplectic",
            InvariantPath::Poisson => "poisson",
        })
    }
}

#[derive(Debug, Clone)]
pub struct InvariantEntry {
    pub k: usize,
    /// Closed form, when the path produces one.
    pub expr: Option<Expr>,
    /// Identically 1 by construction.
    pub trivial: bool,
}

#[derive(Debug, Clone)]
enum Backend {
    Symbolic {
        values: BoundTape,
        gradients: BoundTape,
    },
    Presymplectic {
        omega: CompiledField,
        omega_e: CompiledField,
        params: Vec<f64>,
    },
    Poisson {
        numerators: Vec<CompiledField>,
        top: CompiledField,
        params: Vec<f64>,
    },
}

/// Conserved quantities generated by one symmetry, with an evaluator.
#[derive(Debug, Clone)]
pub struct InvariantSet {
    pub path: InvariantPath,
    pub half_rank: usize,
    pub normalization: String,
    pub entries: Vec<InvariantEntry>,
    dim: usize,
    backend: Backend,
}

/// Expanded form for polynomial results, unchanged otherwise.
fn canonical(e: Expr) -> Expr {
    Polynomial::expand(&e).map(|p| p.to_expr()).unwrap_or(e)
}

fn bind(x: &[f64], params: &[f64]) -> Vec<f64> {
    x.iter().chain(params).copied().collect()
}

impl InvariantSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Values of all entries at a coordinate point, in entry order.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>, MechanicsError> {
        match &self.backend {
            Backend::Symbolic { values, .. } => values.eval(x),
            Backend::Presymplectic { omega, params, .. } => {
                let input = bind(x, params);
                let structure = point_structure(&omega.eval(&input)?.to_matrix(), DEFAULT_RANK_TOL)?;
                if structure.rank != 2 * self.half_rank {
                    return Err(MechanicsError::RankMismatch { expected: 2 * self.half_rank, found: structure.rank });
                }
                self.evaluate_with_bivector(x, &structure.w)
            }
            Backend::Poisson { numerators, top, params } => {
                let input = bind(x, params);
                let top = top.eval(&input)?;
                let (pivot, denom) = top.pivot().ok_or_else(|| MechanicsError::SingularPoint("empty top power".into()))?;
                if denom == 0.0 {
                    return Err(MechanicsError::SingularPoint("top power vanishes".into()));
                }
                numerators
                    .iter()
                    .map(|n| Ok(n.eval(&input)?.get(&pivot) / denom))
                    .collect()
            }
        }
    }

    /// Presymplectic entries evaluated with an explicit bivector
    /// representative in place of the pseudo-inverse.
    pub fn evaluate_with_bivector(&self, x: &[f64], w: &PointTensor<f64>) -> Result<Vec<f64>, MechanicsError> {
        let Backend::Presymplectic { omega_e, params, .. } = &self.backend else {
            return Err(MechanicsError::WrongStructure { expected: "presymplectic" });
        };
        let oe = omega_e.eval(&bind(x, params))?;
        let mut wk = PointTensor::scalar(self.dim, 1.0);
        let mut ok = PointTensor::scalar(self.dim, 1.0);
        let mut out = Vec::with_capacity(self.half_rank);
        for _ in 1..=self.half_rank {
            wk = wk.wedge(w);
            ok = ok.wedge(&oe);
            out.push(wk.full_pairing(&ok));
        }
        Ok(out)
    }

    /// Rows are entry gradients. Symbolic sets differentiate exactly; the
    /// pointwise paths use central differences.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>, MechanicsError> {
        let n = self.len();
        if let Backend::Symbolic { gradients, .. } = &self.backend {
            return Ok(DMatrix::from_row_slice(n, self.dim, &gradients.eval(x)?));
        }
        let mut jac = DMatrix::zeros(n, self.dim);
        let mut shifted = x.to_vec();
        for m in 0..self.dim {
            shifted[m] = x[m] + FD_STEP;
            let plus = self.evaluate(&shifted)?;
            shifted[m] = x[m] - FD_STEP;
            let minus = self.evaluate(&shifted)?;
            shifted[m] = x[m];
            for i in 0..n {
                jac[(i, m)] = (plus[i] - minus[i]) / (2.0 * FD_STEP);
            }
        }
        Ok(jac)
    }

    fn symbolic(
        sys: &PhaseSpaceSystem,
        path: InvariantPath,
        half_rank: usize,
        normalization: String,
        entries: Vec<InvariantEntry>,
    ) -> Result<Self, MechanicsError> {
        let exprs: Vec<Expr> = entries.iter().map(|e| e.expr.clone().expect("closed form")).collect();
        let grads: Vec<Expr> = exprs
            .iter()
            .flat_map(|e| sys.chart().names().iter().map(move |n| e.differentiate(n)))
            .collect();
        Ok(InvariantSet {
            path,
            half_rank,
            normalization,
            entries,
            dim: sys.dim(),
            backend: Backend::Symbolic { values: sys.compile(&exprs)?, gradients: sys.compile(&grads)? },
        })
    }
}

/// `I^(k) = i_{W^k} (L_E ω)^k`: symbolic for `k = 1..n` on a symplectic
/// form, pointwise for `k = 1..r` on a presymplectic one.
pub fn lutzky_invariants<R: Rng + ?Sized>(
    sys: &PhaseSpaceSystem,
    gen: &SymmetryGenerator,
    rng: &mut R,
) -> Result<InvariantSet, MechanicsError> {
    match sys.structure() {
        Structure::Symplectic(omega) => {
            let omega_e = lie_derivative_form(&gen.field, omega)?;
            let w = invert_symplectic_form(sys)?;
            let n = sys.dim() / 2;
            let mut entries = Vec::with_capacity(n);
            let mut wk = MultiVectorField::scalar(sys.chart(), Expr::one());
            let mut ok = crate::exterior::DifferentialForm::scalar(sys.chart(), Expr::one());
            for k in 1..=n {
                wk = wk.wedge(&w)?;
                ok = ok.wedge(&omega_e)?;
                entries.push(InvariantEntry { k, expr: Some(canonical(full_pairing(&wk, &ok)?)), trivial: false });
            }
            InvariantSet::symbolic(sys, InvariantPath::Regular, n, normalization_note(InvariantPath::Regular), entries)
        }
        Structure::Presymplectic(omega) => {
            let omega_e = lie_derivative_form(&gen.field, omega)?;
            let ranks = sample_points(sys.dim(), 20, rng, |x| {
                Ok(point_structure(&sys.form_matrix_at(x)?, DEFAULT_RANK_TOL)?.rank)
            })?;
            let rank = ranks[0].1;
            if let Some((_, other)) = ranks.iter().find(|(_, r)| *r != rank) {
                return Err(MechanicsError::RankMismatch { expected: rank, found: *other });
            }
            let r = rank / 2;
            let names = sys.input_names();
            Ok(InvariantSet {
                path: InvariantPath::Presymplectic,
                half_rank: r,
                normalization: normalization_note(InvariantPath::Presymplectic),
                entries: (1..=r).map(|k| InvariantEntry { k, expr: None, trivial: false }).collect(),
                dim: sys.dim(),
                backend: Backend::Presymplectic {
                    omega: omega.compile(&names)?,
                    omega_e: omega_e.compile(&names)?,
                    params: sys.parameters().iter().map(|p| p.1).collect(),
                },
            })
        }
        Structure::Poisson(_) => Err(MechanicsError::WrongStructure { expected: "2-form" }),
    }
}

fn normalization_note(path: InvariantPath) -> String {
    match path {
        InvariantPath::Regular | InvariantPath::Presymplectic => {
            "I^(k) = i_{W^k} (L_E ω)^k with unnormalized wedge powers and W = -Ω^+; \
             equals (k!)^2 times the k-th coefficient of the monic square root of det(λ - W·Ω_E)"
                .into()
        }
        InvariantPath::Poisson => {
            "I^(k) = ([E,W]^(r-k) ∧ W^k) / W^r, k = 0..r; I^(r) = 1 identically".into()
        }
    }
}

/// Ratios `[E, W]^{r−k} ∧ W^k / W^r` for `k = 0..r`, after checking the
/// numerators are proportional to `W^r` at sampled points.
pub fn poisson_invariants<R: Rng + ?Sized>(
    sys: &PhaseSpaceSystem,
    gen: &SymmetryGenerator,
    tol: f64,
    points: usize,
    rng: &mut R,
) -> Result<InvariantSet, MechanicsError> {
    let w = match sys.structure() {
        Structure::Poisson(w) => w.clone(),
        Structure::Symplectic(_) => invert_symplectic_form(sys)?,
        Structure::Presymplectic(_) => return Err(MechanicsError::WrongStructure { expected: "Poisson or symplectic" }),
    };
    let validation = validate_poisson(sys, &w, points, rng)?;
    if !validation.valid {
        return Err(MechanicsError::NotPoisson { residual: validation.residual });
    }
    let names = sys.input_names();
    let w_tape = w.compile(&names)?;
    let ranks = sample_points(sys.dim(), points, rng, |x| {
        let m = w_tape.eval(&sys.bind(x))?.to_matrix();
        Ok(pseudo_inverse(&m, DEFAULT_RANK_TOL).rank)
    })?;
    let rank = ranks[0].1;
    if rank % 2 == 1 {
        return Err(MechanicsError::OddRank(rank));
    }
    if let Some((_, other)) = ranks.iter().find(|(_, r)| *r != rank) {
        return Err(MechanicsError::RankDrift { expected: rank, found: *other });
    }
    let r = rank / 2;
    let b = schouten_bracket(&gen.field, &w)?;
    let top = w.multivector_power(r)?;
    let numerators: Vec<MultiVectorField> = (0..=r)
        .map(|k| b.multivector_power(r - k)?.wedge(&w.multivector_power(k)?))
        .collect::<Result<_, _>>()?;

    let num_tapes = numerators.iter().map(|n| n.compile(&names)).collect::<Result<Vec<_>, _>>()?;
    let top_tape = top.compile(&names)?;
    let checks = sample_points(sys.dim(), points, rng, |x| {
        let input = sys.bind(x);
        let t = top_tape.eval(&input)?;
        let (pivot, denom) = t.pivot().ok_or_else(|| MechanicsError::SingularPoint("empty top power".into()))?;
        if denom.abs() < 1e-12 {
            return Err(MechanicsError::SingularPoint("top power vanishes".into()));
        }
        let mut worst = 0.0f64;
        for nt in &num_tapes {
            let n = nt.eval(&input)?;
            let ratio = n.get(&pivot) / denom;
            let diff = n.add(&t.scale(-ratio)).max_abs();
            worst = worst.max(diff / (1.0 + n.max_abs()));
        }
        Ok((pivot, worst))
    })?;
    let residual = checks.iter().map(|c| c.1 .1).fold(0.0, f64::max);
    if residual > tol {
        return Err(MechanicsError::NotProportional { residual });
    }
    let pivot = &checks[0].1 .0;
    let denom = top.coefficient(pivot);
    let entries = numerators
        .iter()
        .enumerate()
        .map(|(k, n)| InvariantEntry {
            k,
            expr: Some(if k == r { Expr::one() } else { canonical(n.coefficient(pivot).div(&denom)) }),
            trivial: k == r,
        })
        .collect();
    Ok(InvariantSet {
        path: InvariantPath::Poisson,
        half_rank: r,
        normalization: normalization_note(InvariantPath::Poisson),
        entries,
        dim: sys.dim(),
        backend: Backend::Poisson {
            numerators: num_tapes,
            top: top_tape,
            params: sys.parameters().iter().map(|p| p.1).collect(),
        },
    })
}

/// Coefficients `[1, c_1, ..., c_d]` of `det(λ − W·Ω_E)` at one point, with
/// `W` the numeric bivector of the structure and `Ω_E` the matrix of `L_E ω`.
pub fn charpoly_oracle(
    sys: &PhaseSpaceSystem,
    gen: &SymmetryGenerator,
    x: &[f64],
) -> Result<Vec<f64>, MechanicsError> {
    let omega = sys.structure().form().ok_or(MechanicsError::WrongStructure { expected: "2-form" })?;
    let omega_e = lie_derivative_form(&gen.field, omega)?.compile(&sys.input_names())?;
    let w = sys.bivector_at(x)?;
    let oe = omega_e.eval(&sys.bind(x))?.to_matrix();
    Ok(characteristic_polynomial(&(w * oe)))
}

/// Least-squares constants `κ_k` with `I^(k) ≈ κ_k s_k`, where `s_k` are
/// the coefficients of the monic square root of the leading `2r + 1`
/// characteristic coefficients.
#[derive(Debug, Clone, Serialize)]
pub struct OracleFit {
    pub constants: Vec<f64>,
    /// `max |I − κ s| / max |I|` over the sample, per entry.
    pub spread: Vec<f64>,
    /// Largest coefficient beyond degree `2r`, which must vanish.
    pub tail: f64,
}

impl OracleFit {
    pub fn fit<R: Rng + ?Sized>(
        inv: &InvariantSet,
        sys: &PhaseSpaceSystem,
        gen: &SymmetryGenerator,
        points: usize,
        rng: &mut R,
    ) -> Result<OracleFit, MechanicsError> {
        let r = inv.half_rank;
        let samples = sample_points(sys.dim(), points, rng, |x| {
            let c = charpoly_oracle(sys, gen, x)?;
            let tail = c[2 * r + 1..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let s = polynomial_sqrt(&c[..=2 * r]);
            Ok((inv.evaluate(x)?, s, tail))
        })?;
        let mut constants = Vec::with_capacity(r);
        let mut spread = Vec::with_capacity(r);
        for k in 1..=r {
            let (mut num, mut den, mut scale) = (0.0, 0.0, 0.0f64);
            for (_, (i, s, _)) in &samples {
                num += i[k - 1] * s[k];
                den += s[k] * s[k];
                scale = scale.max(i[k - 1].abs());
            }
            let kappa = if den > 0.0 { num / den } else { 0.0 };
            let worst = samples
                .iter()
                .map(|(_, (i, s, _))| (i[k - 1] - kappa * s[k]).abs())
                .fold(0.0, f64::max);
            constants.push(kappa);
            spread.push(if scale > 0.0 { worst / scale } else { worst });
        }
        let tail = samples.iter().map(|(_, v)| v.2).fold(0.0, f64::max);
        Ok(OracleFit { constants, spread, tail })
    }
}

/// Constant relating one invariant to a reference function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Normalization {
    /// `I / reference` at the sample point where `|reference|` is largest.
    pub constant: f64,
    /// `max |I − constant · reference| / max |I|` over the sample.
    pub spread: f64,
}

/// Fits `I^(k) ≈ κ_k · reference_k` for the non-trivial entries, in order.
pub fn normalization_constants<R: Rng + ?Sized>(
    inv: &InvariantSet,
    sys: &PhaseSpaceSystem,
    reference: &[Expr],
    points: usize,
    rng: &mut R,
) -> Result<Vec<Normalization>, MechanicsError> {
    let slots: Vec<usize> = (0..inv.len()).filter(|&i| !inv.entries[i].trivial).take(reference.len()).collect();
    let tape = sys.compile(&reference[..slots.len()])?;
    let samples = sample_points(sys.dim(), points, rng, |x| Ok((inv.evaluate(x)?, tape.eval(x)?)))?;
    Ok(slots
        .iter()
        .enumerate()
        .map(|(j, &slot)| {
            let (_, (vals, refs)) = samples
                .iter()
                .max_by(|a, b| a.1 .1[j].abs().total_cmp(&b.1 .1[j].abs()))
                .expect("at least one sample");
            let constant = vals[slot] / refs[j];
            let scale = samples.iter().map(|s| s.1 .0[slot].abs()).fold(0.0, f64::max);
            let worst = samples
                .iter()
                .map(|s| (s.1 .0[slot] - constant * s.1 .1[j]).abs())
                .fold(0.0, f64::max);
            Normalization { constant, spread: if scale > 0.0 { worst / scale } else { worst } }
        })
        .collect())
}
