use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::expr::Expr;
use crate::exterior::{CompiledField, MultiVectorField, PointTensor};
use crate::linalg::{pseudo_inverse, SymbolicMatrix};

use super::{sample_points, BoundTape, MechanicsError, PhaseSpaceSystem, Structure, DEFAULT_POINTS};

/// Largest dimension handled by symbolic adjugate inversion.
pub const MAX_SYMBOLIC_DIM: usize = 6;

/// Symbolic bivector `W = −Ω⁻¹` of a non-degenerate 2-form.
pub fn invert_symplectic_form(sys: &PhaseSpaceSystem) -> Result<MultiVectorField, MechanicsError> {
    let omega = sys
        .structure()
        .form()
        .ok_or(MechanicsError::WrongStructure { expected: "2-form" })?;
    let d = sys.dim();
    if d % 2 == 1 {
        return Err(MechanicsError::DegenerateForm);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let ranks = sample_points(d, 20, &mut rng, |x| {
        let m = sys.form_matrix_at(x)?;
        Ok(pseudo_inverse(&m, 1e-10).rank)
    })?;
    if ranks.iter().any(|(_, r)| *r < d) {
        return Err(MechanicsError::DegenerateForm);
    }
    if d > MAX_SYMBOLIC_DIM {
        return Err(MechanicsError::DimensionTooLarge(d));
    }
    let matrix = SymbolicMatrix::from_fn(d, |i, j| omega.component(&[i, j]));
    let det = matrix.determinant();
    let adj = matrix.adjugate();
    let mut terms = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let entry = adj.get(i, j);
            if !entry.is_zero() {
                terms.push((vec![i, j], entry.div(&det).neg()));
            }
        }
    }
    Ok(MultiVectorField::from_terms(sys.chart(), 2, terms)?)
}

/// `X_f^b = Σ_a W^{ab} ∂_a f`, the vector field of `f` under a bivector.
pub fn vector_field_of(w: &MultiVectorField, f: &Expr) -> MultiVectorField {
    let chart = w.chart().clone();
    let names = chart.names();
    let grad: Vec<Expr> = names.iter().map(|n| f.differentiate(n)).collect();
    let terms = (0..chart.dim()).map(|b| {
        let c = Expr::sum(
            (0..chart.dim())
                .filter(|&a| !grad[a].is_zero())
                .map(|a| w.component(&[a, b]).mul(&grad[a])),
        );
        (vec![b], c)
    });
    MultiVectorField::from_terms(&chart, 1, terms).expect("indices in range")
}

/// Kernel, oriented pseudo-inverse bivector and rank of the 2-form at one
/// point.
#[derive(Debug, Clone)]
pub struct PointStructure {
    /// Orthonormal basis of the null space of the component matrix.
    pub kernel: Vec<PointTensor<f64>>,
    /// `−Ω⁺`: the Moore–Penrose pseudo-inverse with this crate's orientation.
    pub w: PointTensor<f64>,
    pub rank: usize,
}

impl PointStructure {
    /// The raw Moore–Penrose pseudo-inverse `Ω⁺ = −W`.
    pub fn moore_penrose(&self) -> PointTensor<f64> {
        self.w.scale(-1.0)
    }
}

pub fn kernel_and_pseudoinverse_at(
    sys: &PhaseSpaceSystem,
    x: &[f64],
    tol: f64,
) -> Result<PointStructure, MechanicsError> {
    let omega = sys.form_matrix_at(x)?;
    point_structure(&omega, tol)
}

pub(crate) fn point_structure(omega: &DMatrix<f64>, tol: f64) -> Result<PointStructure, MechanicsError> {
    let pi = pseudo_inverse(omega, tol);
    if pi.rank % 2 == 1 {
        return Err(MechanicsError::OddRank(pi.rank));
    }
    let w = PointTensor::from_matrix(&(-&pi.inverse));
    let kernel = pi.kernel.iter().map(PointTensor::from_vector).collect();
    Ok(PointStructure { kernel, w, rank: pi.rank })
}

/// Hamiltonian vector field: symbolic on regular and Poisson structures,
/// pointwise minimum-norm representative on presymplectic ones.
#[derive(Debug, Clone)]
pub enum HamiltonianField {
    Symbolic(MultiVectorField),
    Pointwise(PointwiseHamiltonian),
}

impl HamiltonianField {
    pub fn as_symbolic(&self) -> Option<&MultiVectorField> {
        match self {
            HamiltonianField::Symbolic(x) => Some(x),
            HamiltonianField::Pointwise(_) => None,
        }
    }

    pub fn evaluator(&self, sys: &PhaseSpaceSystem) -> Result<VectorEvaluator, MechanicsError> {
        Ok(match self {
            HamiltonianField::Symbolic(x) => VectorEvaluator::Symbolic(vector_tape(sys, x)?),
            HamiltonianField::Pointwise(p) => VectorEvaluator::Pointwise(p.clone()),
        })
    }
}

/// `X = Ω⁺ dh` evaluated pointwise.
#[derive(Debug, Clone)]
pub struct PointwiseHamiltonian {
    omega: CompiledField,
    gradient: BoundTape,
    params: Vec<f64>,
    rank_tol: f64,
}

impl PointwiseHamiltonian {
    fn new(sys: &PhaseSpaceSystem) -> Result<Self, MechanicsError> {
        let omega = sys.structure().form().expect("presymplectic structure");
        let grad: Vec<Expr> = sys.chart().names().iter().map(|n| sys.hamiltonian().differentiate(n)).collect();
        Ok(PointwiseHamiltonian {
            omega: omega.compile(&sys.input_names())?,
            gradient: sys.compile(&grad)?,
            params: sys.parameters().iter().map(|p| p.1).collect(),
            rank_tol: crate::linalg::DEFAULT_RANK_TOL,
        })
    }

    fn omega_at(&self, x: &[f64]) -> Result<DMatrix<f64>, MechanicsError> {
        let input: Vec<f64> = x.iter().chain(&self.params).copied().collect();
        Ok(self.omega.eval(&input)?.to_matrix())
    }

    /// Representative and the residual `|Ω X − dh| / (1 + |dh|)`.
    pub fn eval_with_residual(&self, x: &[f64]) -> Result<(DVector<f64>, f64), MechanicsError> {
        let omega = self.omega_at(x)?;
        let g = DVector::from_vec(self.gradient.eval(x)?);
        let pi = pseudo_inverse(&omega, self.rank_tol);
        let v = &pi.inverse * &g;
        let residual = (&omega * &v - &g).amax() / (1.0 + g.amax());
        Ok((v, residual))
    }
}

/// Compiled vector field evaluator.
#[derive(Debug, Clone)]
pub enum VectorEvaluator {
    Symbolic(BoundTape),
    Pointwise(PointwiseHamiltonian),
}

impl VectorEvaluator {
    pub fn eval(&self, x: &[f64]) -> Result<DVector<f64>, MechanicsError> {
        match self {
            VectorEvaluator::Symbolic(t) => Ok(DVector::from_vec(t.eval(x)?)),
            VectorEvaluator::Pointwise(p) => Ok(p.eval_with_residual(x)?.0),
        }
    }
}

/// Tape whose outputs are the `dim` components of a vector field.
pub(crate) fn vector_tape(sys: &PhaseSpaceSystem, v: &MultiVectorField) -> Result<BoundTape, MechanicsError> {
    let comps: Vec<Expr> = (0..sys.dim()).map(|i| v.component(&[i])).collect();
    sys.compile(&comps)
}

pub fn hamiltonian_vector_field(sys: &PhaseSpaceSystem) -> Result<HamiltonianField, MechanicsError> {
    match sys.structure() {
        Structure::Symplectic(_) => {
            let w = invert_symplectic_form(sys)?;
            Ok(HamiltonianField::Symbolic(vector_field_of(&w, sys.hamiltonian())))
        }
        Structure::Poisson(w) => Ok(HamiltonianField::Symbolic(vector_field_of(w, sys.hamiltonian()))),
        Structure::Presymplectic(_) => {
            let field = PointwiseHamiltonian::new(sys)?;
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let residuals = sample_points(sys.dim(), DEFAULT_POINTS, &mut rng, |x| {
                Ok(field.eval_with_residual(x)?.1)
            })?;
            let worst = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
            if worst > 1e-8 {
                return Err(MechanicsError::NoDynamics { residual: worst });
            }
            Ok(HamiltonianField::Pointwise(field))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;
    use crate::exterior::{Chart, DifferentialForm};
    use crate::mechanics::field;

    fn free_particle(scale: &str) -> PhaseSpaceSystem {
        let c = Chart::new(["p", "q"]);
        let omega: DifferentialForm = field(&c, 2, &[(&["p", "q"], scale)]);
        PhaseSpaceSystem::new(c, vec![], Structure::Symplectic(omega), parse_expression("p^2/2").unwrap(), vec![])
            .unwrap()
    }

    #[test]
    fn canonical_inverse_and_orientation() {
        let sys = free_particle("1");
        let w = invert_symplectic_form(&sys).unwrap();
        assert_eq!(w.coefficient(&[0, 1]), Expr::one());
        let x = hamiltonian_vector_field(&sys).unwrap();
        assert_eq!(x.as_symbolic().unwrap().coefficient(&[1]), Expr::sym("p"));
        assert!(x.as_symbolic().unwrap().coefficient(&[0]).is_zero());
        let scaled = invert_symplectic_form(&free_particle("2")).unwrap();
        assert_eq!(scaled.coefficient(&[0, 1]), Expr::ratio(1, 2));
    }

    #[test]
    fn zero_form_point_structure() {
        let p = point_structure(&DMatrix::zeros(4, 4), 1e-10).unwrap();
        assert_eq!(p.rank, 0);
        assert_eq!(p.kernel.len(), 4);
        assert_eq!(p.w.max_abs(), 0.0);
    }

    #[test]
    fn degenerate_form_is_rejected() {
        let c = Chart::new(["a", "b", "s", "t"]);
        let omega: DifferentialForm = field(&c, 2, &[(&["a", "b"], "1")]);
        let sys = PhaseSpaceSystem::new(c, vec![], Structure::Symplectic(omega), Expr::zero(), vec![]).unwrap();
        assert_eq!(invert_symplectic_form(&sys).unwrap_err(), MechanicsError::DegenerateForm);
    }

    #[test]
    fn presymplectic_requires_consistent_hamiltonian() {
        let c = Chart::new(["p", "q", "s"]);
        let omega: DifferentialForm = field(&c, 2, &[(&["p", "q"], "1")]);
        let ok = PhaseSpaceSystem::new(
            c.clone(),
            vec![],
            Structure::Presymplectic(omega.clone()),
            parse_expression("p^2/2").unwrap(),
            vec![],
        )
        .unwrap();
        let x = hamiltonian_vector_field(&ok).unwrap();
        let HamiltonianField::Pointwise(pw) = x else { panic!("pointwise expected") };
        let (v, r) = pw.eval_with_residual(&[1.5, 0.0, 0.3]).unwrap();
        assert!(r < 1e-14);
        assert!((v[1] - 1.5).abs() < 1e-14 && v[0].abs() < 1e-14 && v[2].abs() < 1e-14);
        let bad = PhaseSpaceSystem::new(c, vec![], Structure::Presymplectic(omega), Expr::sym("s"), vec![]).unwrap();
        assert!(matches!(hamiltonian_vector_field(&bad), Err(MechanicsError::NoDynamics { .. })));
    }
}
