use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use crate::expr::Expr;
use crate::exterior::{full_pairing, schouten_bracket, CompiledField, DifferentialForm, MultiVectorField};
use crate::flow::{conservation_drift_of, integrate_flow, IntegratorConfig};

use super::invariants::InvariantSet;
use super::structure::invert_symplectic_form;
use super::{sample_points, BoundTape, MechanicsError, PhaseSpaceSystem, Structure, SymmetryGenerator, IDENTITY_TOL};

/// `{f, g}` as a closed form, or as a pointwise evaluator on degenerate
/// 2-forms.
#[derive(Debug, Clone)]
pub enum BracketValue {
    Symbolic(Expr),
    Pointwise(Box<PointwiseBracket>),
}

#[derive(Debug, Clone)]
pub struct PointwiseBracket {
    omega: CompiledField,
    df: BoundTape,
    dg: BoundTape,
    params: Vec<f64>,
}

impl PointwiseBracket {
    pub fn eval(&self, x: &[f64]) -> Result<f64, MechanicsError> {
        let input: Vec<f64> = x.iter().chain(&self.params).copied().collect();
        let omega = self.omega.eval(&input)?.to_matrix();
        let w = -crate::linalg::pseudo_inverse(&omega, crate::linalg::DEFAULT_RANK_TOL).inverse;
        let a = DVector::from_vec(self.df.eval(x)?);
        let b = DVector::from_vec(self.dg.eval(x)?);
        Ok(a.dot(&(w * b)))
    }
}

impl BracketValue {
    pub fn eval(&self, sys: &PhaseSpaceSystem, x: &[f64]) -> Result<f64, MechanicsError> {
        match self {
            BracketValue::Symbolic(e) => Ok(sys.compile(std::slice::from_ref(e))?.eval(x)?[0]),
            BracketValue::Pointwise(p) => p.eval(x),
        }
    }
}

/// Symbolic bivector of a system, when one exists.
pub(crate) fn symbolic_bivector(sys: &PhaseSpaceSystem) -> Result<MultiVectorField, MechanicsError> {
    match sys.structure() {
        Structure::Poisson(w) => Ok(w.clone()),
        Structure::Symplectic(_) => invert_symplectic_form(sys),
        Structure::Presymplectic(_) => Err(MechanicsError::WrongStructure { expected: "symplectic or Poisson" }),
    }
}

/// `{f, g} = i_W (df ∧ dg)`.
pub fn poisson_bracket(f: &Expr, g: &Expr, sys: &PhaseSpaceSystem) -> Result<BracketValue, MechanicsError> {
    let chart = sys.chart();
    match sys.structure() {
        Structure::Presymplectic(omega) => {
            let grad = |e: &Expr| -> Vec<Expr> { chart.names().iter().map(|n| e.differentiate(n)).collect() };
            Ok(BracketValue::Pointwise(Box::new(PointwiseBracket {
                omega: omega.compile(&sys.input_names())?,
                df: sys.compile(&grad(f))?,
                dg: sys.compile(&grad(g))?,
                params: sys.parameters().iter().map(|p| p.1).collect(),
            })))
        }
        _ => {
            let w = symbolic_bivector(sys)?;
            let dfg = DifferentialForm::differential(chart, f).wedge(&DifferentialForm::differential(chart, g))?;
            Ok(BracketValue::Symbolic(full_pairing(&w, &dfg)?))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoissonValidation {
    pub valid: bool,
    /// Largest component of `[W, W]` over the sample.
    pub residual: f64,
}

/// Tests the Jacobi condition `[W, W] = 0` at random points.
pub fn validate_poisson<R: Rng + ?Sized>(
    sys: &PhaseSpaceSystem,
    w: &MultiVectorField,
    points: usize,
    rng: &mut R,
) -> Result<PoissonValidation, MechanicsError> {
    let ww = schouten_bracket(w, w)?;
    let residual = sys.max_abs_residual(&ww, points, rng)?;
    Ok(PoissonValidation { valid: residual <= IDENTITY_TOL, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YangBaxterReport {
    pub holds: bool,
    pub residual: f64,
}

/// Evaluates `[[E, [E, W]], W]` at random points.
pub fn yang_baxter_check<R: Rng + ?Sized>(
    sys: &PhaseSpaceSystem,
    gen: &SymmetryGenerator,
    points: usize,
    rng: &mut R,
) -> Result<YangBaxterReport, MechanicsError> {
    let w = symbolic_bivector(sys)?;
    let b = schouten_bracket(&gen.field, &w)?;
    let eb = schouten_bracket(&gen.field, &b)?;
    let t = schouten_bracket(&eb, &w)?;
    let residual = sys.max_abs_residual(&t, points, rng)?;
    Ok(YangBaxterReport { holds: residual <= IDENTITY_TOL, residual })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvolutionReport {
    /// `max |{I^(l), I^(k)}|` over the sample, indexed by entry position.
    pub residuals: Vec<Vec<f64>>,
    pub in_involution: bool,
}

/// Pairwise brackets of an invariant set at random points, using the
/// numeric bivector of the structure.
pub fn involution_check<R: Rng + ?Sized>(
    inv: &InvariantSet,
    sys: &PhaseSpaceSystem,
    tol: f64,
    points: usize,
    rng: &mut R,
) -> Result<InvolutionReport, MechanicsError> {
    let n = inv.len();
    let samples = sample_points(sys.dim(), points, rng, |x| {
        let j = inv.jacobian(x)?;
        let w = sys.bivector_at(x)?;
        Ok(&j * w * j.transpose())
    })?;
    let mut residuals = vec![vec![0.0; n]; n];
    for (_, b) in &samples {
        for (l, row) in residuals.iter_mut().enumerate() {
            for (k, r) in row.iter_mut().enumerate() {
                *r = f64::max(*r, b[(l, k)].abs());
            }
        }
    }
    let in_involution = residuals.iter().flatten().all(|r| *r <= tol);
    Ok(InvolutionReport { residuals, in_involution })
}

#[derive(Debug, Clone)]
pub struct DescentEntry {
    pub k: usize,
    /// `{I^(k), f}` when the invariants are symbolic.
    pub expr: Option<Expr>,
    /// Drift of `{I^(k), f}` along the verification trajectory.
    pub drift: f64,
}

/// Brackets `{I^(k), f}` of each invariant with a conserved `f`. The
/// conservation of `f` and of every bracket is measured along one
/// trajectory from `x0`.
pub fn bracket_descent(
    inv: &InvariantSet,
    f: &Expr,
    sys: &PhaseSpaceSystem,
    x0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<DescentEntry>, MechanicsError> {
    let traj = integrate_flow(sys, x0, cfg)?;
    let f_tape = sys.compile(std::slice::from_ref(f))?;
    let f_drift = conservation_drift_of(&traj, &f_tape)?[0];
    if f_drift > 1e-6 {
        return Err(MechanicsError::FNotConserved { drift: f_drift });
    }
    let names = sys.chart().names();
    let symbolic: Option<Vec<Expr>> = inv.entries.iter().map(|e| e.expr.clone()).collect();
    match (symbolic, sys.structure()) {
        (Some(exprs), Structure::Symplectic(_) | Structure::Poisson(_)) => {
            let mut out = Vec::new();
            for (entry, e) in inv.entries.iter().zip(exprs) {
                let BracketValue::Symbolic(b) = poisson_bracket(&e, f, sys)? else { unreachable!() };
                let drift = conservation_drift_of(&traj, &sys.compile(std::slice::from_ref(&b))?)?[0];
                out.push(DescentEntry { k: entry.k, expr: Some(b), drift });
            }
            Ok(out)
        }
        _ => {
            let grad: Vec<Expr> = names.iter().map(|n| f.differentiate(n)).collect();
            let df = sys.compile(&grad)?;
            let brackets = |x: &[f64]| -> Result<Vec<f64>, MechanicsError> {
                let j = inv.jacobian(x)?;
                let w = sys.bivector_at(x)?;
                let g = DVector::from_vec(df.eval(x)?);
                Ok((j * (w * g)).iter().copied().collect())
            };
            let drifts = conservation_drift_of(&traj, &brackets)?;
            Ok(inv
                .entries
                .iter()
                .zip(drifts)
                .map(|(e, drift)| DescentEntry { k: e.k, expr: None, drift })
                .collect())
        }
    }
}
