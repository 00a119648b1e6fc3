//! Phase-space systems, symmetry checks and the conserved quantities
//! generated by a non-Noether symmetry.
//!
//! Orientation: the bivector of a symplectic form is `W = −Ω⁻¹`
//! (component matrices), fixed by requiring `{f, g} = X_f g` with
//! `i_{X_f} ω + df = 0` and `{f, g} = i_W (df ∧ dg)`.

mod brackets;
mod invariants;
mod structure;
mod symmetry;

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{Expr, ExprError, Tape, SAMPLE_BOX};
use crate::exterior::{
    exterior_derivative, interior_product, Chart, DifferentialForm, ExteriorError, MultiVectorField,
};
use crate::linalg::{pseudo_inverse, DEFAULT_RANK_TOL};

pub use brackets::{
    bracket_descent, involution_check, poisson_bracket, validate_poisson, yang_baxter_check,
    BracketValue, DescentEntry, InvolutionReport, PoissonValidation, YangBaxterReport,
};
pub use invariants::{
    charpoly_oracle, lutzky_invariants, normalization_constants, poisson_invariants, InvariantEntry,
    InvariantPath, InvariantSet, Normalization, OracleFit,
};
pub use structure::{
    hamiltonian_vector_field, invert_symplectic_form, kernel_and_pseudoinverse_at,
    HamiltonianField, PointStructure,
};
pub use symmetry::{check_symmetry, classify_field, FieldClass, SymmetryClass, SymmetryVerdict};

/// Default residual tolerance for symmetry and bracket checks.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Number of random points used by sampled checks.
pub const DEFAULT_POINTS: usize = 50;
/// Tolerance for identities that hold exactly up to rounding.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Central finite-difference step for pointwise derivatives.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MechanicsError {
    #[error("invalid system: {0}")]
    Validation(String),
    #[error("the 2-form is degenerate; use the presymplectic path")]
    DegenerateForm,
    #[error("symbolic inversion supports dimension up to 6, got {0}")]
    DimensionTooLarge(usize),
    #[error("operation requires a {expected} structure")]
    WrongStructure { expected: &'static str },
    #[error("numerical rank {0} is odd; rank tolerance unsuitable")]
    OddRank(usize),
    #[error("singular point: {0}")]
    SingularPoint(String),
    #[error("dh is not in the range of the 2-form (residual {residual:.3e})")]
    NoDynamics { residual: f64 },
    #[error("no 1-form corresponds to the vector field (residual {residual:.3e})")]
    NoCorrespondingForm { residual: f64 },
    #[error("rank changed across sample points: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },
    #[error("bivector rank drifted across sample points: expected {expected}, found {found}")]
    RankDrift { expected: usize, found: usize },
    #[error("numerator not proportional to the top power (residual {residual:.3e})")]
    NotProportional { residual: f64 },
    #[error("bivector violates the Jacobi identity (residual {residual:.3e})")]
    NotPoisson { residual: f64 },
    #[error("function is not conserved (drift {drift:.3e})")]
    FNotConserved { drift: f64 },
    #[error("no regular sample point found after {attempts} attempts")]
    ResamplingExhausted { attempts: usize },
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error("flow: {0}")]
    Flow(String),
}

impl From<ExprError> for MechanicsError {
    fn from(e: ExprError) -> Self {
        match e {
            ExprError::Domain(msg) => MechanicsError::SingularPoint(msg),
            other => MechanicsError::Exterior(ExteriorError::Expr(other)),
        }
    }
}

impl MechanicsError {
    /// Errors that justify drawing a different sample point.
    pub(crate) fn is_pointwise(&self) -> bool {
        matches!(self, MechanicsError::SingularPoint(_))
    }
}

/// Geometric structure carried by a phase space.
#[derive(Debug, Clone, PartialEq)]
pub enum Structure {
    Symplectic(DifferentialForm),
    Presymplectic(DifferentialForm),
    Poisson(MultiVectorField),
}

impl Structure {
    pub fn kind(&self) -> &'static str {
        match self {
            Structure::Symplectic(_) => "symplectic-form",
            Structure::Presymplectic(_) => "presymplectic-form",
            Structure::Poisson(_) => "poisson-bivector",
        }
    }

    pub fn form(&self) -> Option<&DifferentialForm> {
        match self {
            Structure::Symplectic(f) | Structure::Presymplectic(f) => Some(f),
            Structure::Poisson(_) => None,
        }
    }
}

/// A declared dynamical system on a single chart.
#[derive(Debug, Clone)]
pub struct PhaseSpaceSystem {
    chart: Arc<Chart>,
    parameters: Vec<(String, f64)>,
    structure: Structure,
    hamiltonian: Expr,
    kernel: Vec<MultiVectorField>,
}

/// Vector field generating a candidate symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryGenerator {
    pub field: MultiVectorField,
}

impl SymmetryGenerator {
    pub fn new(field: MultiVectorField) -> Result<Self, MechanicsError> {
        if field.degree() != 1 {
            return Err(MechanicsError::Validation(format!(
                "generator must be a vector field, got degree {}",
                field.degree()
            )));
        }
        Ok(SymmetryGenerator { field })
    }
}

impl PhaseSpaceSystem {
    /// Builds and validates a system. Declared kernel vectors are checked
    /// against the 2-form at random points.
    pub fn new(
        chart: Arc<Chart>,
        parameters: Vec<(String, f64)>,
        structure: Structure,
        hamiltonian: Expr,
        kernel: Vec<MultiVectorField>,
    ) -> Result<Self, MechanicsError> {
        let sys = PhaseSpaceSystem { chart, parameters, structure, hamiltonian, kernel };
        sys.validate()?;
        Ok(sys)
    }

    fn validate(&self) -> Result<(), MechanicsError> {
        let invalid = |m: String| Err(MechanicsError::Validation(m));
        if self.dim() < 2 {
            return invalid(format!("dimension {} is below 2", self.dim()));
        }
        let mut seen = BTreeSet::new();
        for name in self.chart.names().iter().chain(self.parameters.iter().map(|p| &p.0)) {
            if !seen.insert(name.as_str()) {
                return invalid(format!("name `{name}` declared twice"));
            }
        }
        if let Some((name, _)) = self.parameters.iter().find(|(_, v)| !v.is_finite()) {
            return invalid(format!("parameter `{name}` is not finite"));
        }
        let (degree, exprs): (usize, Vec<&Expr>) = match &self.structure {
            Structure::Symplectic(f) | Structure::Presymplectic(f) => {
                (f.degree(), f.terms().map(|t| t.1).collect())
            }
            Structure::Poisson(w) => (w.degree(), w.terms().map(|t| t.1).collect()),
        };
        if degree != 2 {
            return invalid(format!("structure has degree {degree}, expected 2"));
        }
        self.check_names("hamiltonian", &self.hamiltonian)?;
        for e in exprs {
            self.check_names("structure", e)?;
        }
        for (i, u) in self.kernel.iter().enumerate() {
            if u.degree() != 1 {
                return invalid(format!("kernel element {i} is not a vector field"));
            }
            for (_, c) in u.terms() {
                self.check_names("kernel", c)?;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        if let Some(omega) = self.structure.form() {
            let closure = exterior_derivative(omega);
            let r = self.max_abs_residual(&closure, 20, &mut rng)?;
            if r > IDENTITY_TOL {
                return invalid(format!("structure form is not closed (|dω| = {r:.3e})"));
            }
            for (i, u) in self.kernel.iter().enumerate() {
                let contracted = interior_product(u, omega)?;
                let r = self.max_abs_residual(&contracted, 20, &mut rng)?;
                if r > IDENTITY_TOL {
                    return invalid(format!("kernel element {i} fails i_u ω = 0 (residual {r:.3e})"));
                }
            }
        } else if !self.kernel.is_empty() {
            return invalid("kernel vectors require a 2-form structure".into());
        }
        Ok(())
    }

    fn check_names(&self, what: &str, e: &Expr) -> Result<(), MechanicsError> {
        let names = self.input_names();
        match e.free_symbols().into_iter().find(|s| !names.contains(s)) {
            Some(s) => Err(MechanicsError::Validation(format!("{what} references undeclared `{s}`"))),
            None => Ok(()),
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn parameters(&self) -> &[(String, f64)] {
        &self.parameters
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn hamiltonian(&self) -> &Expr {
        &self.hamiltonian
    }

    pub fn kernel(&self) -> &[MultiVectorField] {
        &self.kernel
    }

    /// Tape input names: coordinates, then parameters.
    pub fn input_names(&self) -> Vec<String> {
        self.chart
            .names()
            .iter()
            .cloned()
            .chain(self.parameters.iter().map(|p| p.0.clone()))
            .collect()
    }

    /// Appends parameter values to a coordinate point.
    pub fn bind(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim(), "point dimension");
        x.iter().copied().chain(self.parameters.iter().map(|p| p.1)).collect()
    }

    /// Compiles scalar expressions against this system's inputs.
    pub fn compile(&self, exprs: &[Expr]) -> Result<BoundTape, MechanicsError> {
        Ok(BoundTape { tape: Tape::compile(exprs, &self.input_names())?, params: self.param_values() })
    }

    fn param_values(&self) -> Vec<f64> {
        self.parameters.iter().map(|p| p.1).collect()
    }

    /// Component matrix of the 2-form at a point.
    pub fn form_matrix_at(&self, x: &[f64]) -> Result<DMatrix<f64>, MechanicsError> {
        let omega = self.structure.form().ok_or(MechanicsError::WrongStructure { expected: "2-form" })?;
        let compiled = omega.compile(&self.input_names())?;
        Ok(compiled.eval(&self.bind(x))?.to_matrix())
    }

    /// Numeric Poisson bivector matrix at a point: `−Ω⁻¹` (pseudo-inverse in
    /// the degenerate case) or the declared bivector.
    pub fn bivector_at(&self, x: &[f64]) -> Result<DMatrix<f64>, MechanicsError> {
        match &self.structure {
            Structure::Poisson(w) => {
                let compiled = w.compile(&self.input_names())?;
                Ok(compiled.eval(&self.bind(x))?.to_matrix())
            }
            _ => {
                let omega = self.form_matrix_at(x)?;
                Ok(-pseudo_inverse(&omega, DEFAULT_RANK_TOL).inverse)
            }
        }
    }

    /// Largest absolute coefficient of a field over random sample points.
    pub(crate) fn max_abs_residual<V, R: Rng + ?Sized>(
        &self,
        field: &crate::exterior::Alternating<V>,
        points: usize,
        rng: &mut R,
    ) -> Result<f64, MechanicsError> {
        if field.is_structurally_zero() {
            return Ok(0.0);
        }
        let compiled = field.compile(&self.input_names())?;
        let values = sample_points(self.dim(), points, rng, |x| {
            Ok(compiled.eval(&self.bind(x))?.max_abs())
        })?;
        Ok(values.into_iter().map(|(_, v)| v).fold(0.0, f64::max))
    }
}

/// A tape with the system parameters appended to every evaluation.
#[derive(Debug, Clone)]
pub struct BoundTape {
    tape: Tape,
    params: Vec<f64>,
}

impl BoundTape {
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, MechanicsError> {
        let mut input = Vec::with_capacity(x.len() + self.params.len());
        input.extend_from_slice(x);
        input.extend_from_slice(&self.params);
        Ok(self.tape.eval(&input)?)
    }
}

/// Draws `count` points uniformly from `[−2, 2]^dim` at which `f`
/// succeeds. Points where `f` reports a singularity are redrawn, at most
/// `10 × count` times.
pub fn sample_points<R, T, F>(
    dim: usize,
    count: usize,
    rng: &mut R,
    mut f: F,
) -> Result<Vec<(Vec<f64>, T)>, MechanicsError>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> Result<T, MechanicsError>,
{
    let mut out = Vec::with_capacity(count);
    let mut redraws = 0;
    while out.len() < count {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-SAMPLE_BOX..=SAMPLE_BOX)).collect();
        match f(&x) {
            Ok(v) => out.push((x, v)),
            Err(e) if e.is_pointwise() => {
                redraws += 1;
                if redraws > 10 * count {
                    return Err(MechanicsError::ResamplingExhausted { attempts: redraws });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Builds a form or multivector from named tuples and expression strings.
#[cfg(test)]
pub(crate) fn field<V>(chart: &Arc<Chart>, degree: usize, terms: &[(&[&str], &str)]) -> crate::exterior::Alternating<V> {
    let parsed: Vec<(&[&str], Expr)> = terms
        .iter()
        .map(|(names, text)| (*names, crate::expr::parse_expression(text).unwrap()))
        .collect();
    crate::exterior::Alternating::from_named(chart, degree, parsed).unwrap()
}
