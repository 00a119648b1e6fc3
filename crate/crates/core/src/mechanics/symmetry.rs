use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use rand::Rng;
use serde::Serialize;

use crate::expr::{Expr, Polynomial};
use crate::exterior::{exterior_derivative, interior_product, lie_bracket, DifferentialForm, MultiVectorField};
use crate::linalg::{pseudo_inverse, SymbolicMatrix, DEFAULT_RANK_TOL};

use super::structure::{hamiltonian_vector_field, point_structure, HamiltonianField, VectorEvaluator, MAX_SYMBOLIC_DIM};
use super::{sample_points, MechanicsError, PhaseSpaceSystem, Structure, SymmetryGenerator, FD_STEP};

/// Outcome of testing whether `α = −i_K ω` is exact.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldClass {
    /// `α = df` with the recorded potential `f`.
    Hamiltonian { potential: Expr },
    /// `dα = 0` but no global potential was constructed.
    LocallyHamiltonian,
    Neither { residual: f64 },
}

impl FieldClass {
    pub fn is_hamiltonian(&self) -> bool {
        !matches!(self, FieldClass::Neither { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetryClass {
    StrictSymmetry,
    SymmetryUpToHamiltonian,
    SymmetryUpToKernel,
    NotASymmetry,
}

impl SymmetryClass {
    pub fn name(self) -> &'static str {
        match self {
            SymmetryClass::StrictSymmetry => "strict-symmetry",
            SymmetryClass::SymmetryUpToHamiltonian => "symmetry-up-to-hamiltonian",
            SymmetryClass::SymmetryUpToKernel => "symmetry-up-to-kernel",
            SymmetryClass::NotASymmetry => "not-a-symmetry",
        }
    }

    pub fn is_symmetry(self) -> bool {
        self != SymmetryClass::NotASymmetry
    }
}

impl fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct SymmetryVerdict {
    pub class: SymmetryClass,
    /// `K = [E, X_h]` when it is available symbolically.
    pub witness: Option<MultiVectorField>,
    /// Potential `f` with `K = X_f`, when one was found.
    pub potential: Option<Expr>,
    /// Largest component of `K` over the sample points (after removing the
    /// kernel part on presymplectic systems).
    pub residual: f64,
    /// Largest component of `K` before kernel projection.
    pub raw_residual: f64,
    /// Largest part of `[E, u]` outside the kernel, over declared kernel
    /// vectors `u`.
    pub kernel_closure_residual: Option<f64>,
}

/// Symbolic 2-form attached to the structure: `ω` itself, or `−W⁻¹` for
/// a non-degenerate bivector.
fn structure_form(sys: &PhaseSpaceSystem, k: &MultiVectorField, tol: f64, rng: &mut (impl Rng + ?Sized)) -> Result<DifferentialForm, MechanicsError> {
    match sys.structure() {
        Structure::Symplectic(f) | Structure::Presymplectic(f) => Ok(f.clone()),
        Structure::Poisson(w) => {
            let d = sys.dim();
            let kt = super::structure::vector_tape(sys, k)?;
            let checks = sample_points(d, 20, rng, |x| {
                let wm = sys.bivector_at(x)?;
                let pi = pseudo_inverse(&wm, DEFAULT_RANK_TOL);
                let kv = DVector::from_vec(kt.eval(x)?);
                let residual = (&wm * &pi.inverse * &kv - &kv).amax() / (1.0 + kv.amax());
                Ok((pi.rank, residual))
            })?;
            let worst = checks.iter().map(|c| c.1 .1).fold(0.0, f64::max);
            if worst > tol {
                return Err(MechanicsError::NoCorrespondingForm { residual: worst });
            }
            if checks.iter().any(|c| c.1 .0 < d) {
                return Err(MechanicsError::DegenerateForm);
            }
            if d > MAX_SYMBOLIC_DIM {
                return Err(MechanicsError::DimensionTooLarge(d));
            }
            let m = SymbolicMatrix::from_fn(d, |i, j| w.component(&[i, j]));
            let det = m.determinant();
            let adj = m.adjugate();
            let mut terms = Vec::new();
            for i in 0..d {
                for j in (i + 1)..d {
                    if !adj.get(i, j).is_zero() {
                        terms.push((vec![i, j], adj.get(i, j).div(&det).neg()));
                    }
                }
            }
            Ok(DifferentialForm::from_terms(sys.chart(), 2, terms)?)
        }
    }
}

/// Decides whether `K` is Hamiltonian by testing `α = −i_K ω` for
/// closedness and, for polynomial `α`, constructing a potential.
pub fn classify_field<R: Rng + ?Sized>(
    sys: &PhaseSpaceSystem,
    k: &MultiVectorField,
    tol: f64,
    points: usize,
    rng: &mut R,
) -> Result<FieldClass, MechanicsError> {
    let omega = structure_form(sys, k, tol, rng)?;
    let alpha = interior_product(k, &omega)?.neg();
    let residual = sys.max_abs_residual(&exterior_derivative(&alpha), points, rng)?;
    if residual > tol {
        return Ok(FieldClass::Neither { residual });
    }
    if let Some(potential) = polynomial_potential(sys, &alpha) {
        let check = DifferentialForm::differential(sys.chart(), &potential).sub(&alpha)?;
        if sys.max_abs_residual(&check, points, rng)? <= tol {
            return Ok(FieldClass::Hamiltonian { potential });
        }
    }
    Ok(FieldClass::LocallyHamiltonian)
}

/// Radial homotopy antiderivative `f(x) = ∫₀¹ Σ_i α_i(t x) x_i dt` of a
/// 1-form with polynomial coefficients.
fn polynomial_potential(sys: &PhaseSpaceSystem, alpha: &DifferentialForm) -> Option<Expr> {
    let coords = sys.chart().names();
    let mut terms = Vec::new();
    for (tuple, c) in alpha.terms() {
        let poly = Polynomial::expand(c)?;
        let xi = Expr::sym(&coords[tuple[0]]);
        for (monomial, coeff) in poly.terms() {
            let degree: u32 = monomial
                .iter()
                .filter(|(v, _)| coords.contains(v))
                .map(|(_, e)| *e)
                .sum();
            let factors = monomial.iter().map(|(v, &e)| Expr::sym(v).powi(i64::from(e)));
            let weight = coeff / BigRational::from_integer((degree + 1).into());
            terms.push(Expr::num(weight).mul(&Expr::product(factors)).mul(&xi));
        }
    }
    Polynomial::expand(&Expr::sum(terms)).map(|p| p.to_expr())
}

/// Classifies a candidate generator by the commutator `K = [E, X_h]`.
pub fn check_symmetry<R: Rng + ?Sized>(
    sys: &PhaseSpaceSystem,
    gen: &SymmetryGenerator,
    tol: f64,
    points: usize,
    rng: &mut R,
) -> Result<SymmetryVerdict, MechanicsError> {
    match hamiltonian_vector_field(sys)? {
        HamiltonianField::Symbolic(x) => {
            let k = lie_bracket(&gen.field, &x)?;
            let residual = sys.max_abs_residual(&k, points, rng)?;
            let mut verdict = SymmetryVerdict {
                class: SymmetryClass::StrictSymmetry,
                witness: Some(k.clone()),
                potential: None,
                residual,
                raw_residual: residual,
                kernel_closure_residual: None,
            };
            if residual > tol {
                verdict.class = match classify_field(sys, &k, tol, points, rng)? {
                    FieldClass::Hamiltonian { potential } => {
                        verdict.potential = Some(potential);
                        SymmetryClass::SymmetryUpToHamiltonian
                    }
                    FieldClass::LocallyHamiltonian => SymmetryClass::SymmetryUpToHamiltonian,
                    FieldClass::Neither { .. } => SymmetryClass::NotASymmetry,
                };
            }
            Ok(verdict)
        }
        HamiltonianField::Pointwise(_) => {
            let field = hamiltonian_vector_field(sys)?.evaluator(sys)?;
            pointwise_verdict(sys, gen, &field, tol, points, rng)
        }
    }
}

fn pointwise_verdict<R: Rng + ?Sized>(
    sys: &PhaseSpaceSystem,
    gen: &SymmetryGenerator,
    x_h: &VectorEvaluator,
    tol: f64,
    points: usize,
    rng: &mut R,
) -> Result<SymmetryVerdict, MechanicsError> {
    let d = sys.dim();
    let names = sys.chart().names();
    let e_comps: Vec<Expr> = (0..d).map(|i| gen.field.component(&[i])).collect();
    let e_jac: Vec<Expr> = e_comps
        .iter()
        .flat_map(|c| names.iter().map(move |n| c.differentiate(n)))
        .collect();
    let e_tape = sys.compile(&e_comps)?;
    let jac_tape = sys.compile(&e_jac)?;
    let closures: Vec<MultiVectorField> = sys
        .kernel()
        .iter()
        .map(|u| lie_bracket(&gen.field, u))
        .collect::<Result<_, _>>()?;
    let closure_tapes = closures
        .iter()
        .map(|c| super::structure::vector_tape(sys, c))
        .collect::<Result<Vec<_>, _>>()?;

    let samples = sample_points(d, points, rng, |x| {
        let xv = x_h.eval(x)?;
        let e = DVector::from_vec(e_tape.eval(x)?);
        let je = DMatrix::from_row_slice(d, d, &jac_tape.eval(x)?);
        let mut jx = DMatrix::zeros(d, d);
        let mut shifted = x.to_vec();
        for m in 0..d {
            shifted[m] = x[m] + FD_STEP;
            let plus = x_h.eval(&shifted)?;
            shifted[m] = x[m] - FD_STEP;
            let minus = x_h.eval(&shifted)?;
            shifted[m] = x[m];
            jx.set_column(m, &((plus - minus) / (2.0 * FD_STEP)));
        }
        let k = &jx * &e - &je * &xv;
        let structure = point_structure(&sys.form_matrix_at(x)?, DEFAULT_RANK_TOL)?;
        let project = |v: &DVector<f64>| {
            let mut out = v.clone();
            for b in &structure.kernel {
                let b = b.to_vector();
                out -= &b * b.dot(v);
            }
            out
        };
        let mut closure = 0.0f64;
        for t in &closure_tapes {
            let c = DVector::from_vec(t.eval(x)?);
            closure = closure.max(project(&c).amax());
        }
        Ok((k.amax(), project(&k).amax(), structure.kernel.len(), closure))
    })?;

    let raw = samples.iter().map(|s| s.1 .0).fold(0.0, f64::max);
    let projected = samples.iter().map(|s| s.1 .1).fold(0.0, f64::max);
    let has_kernel = samples.iter().any(|s| s.1 .2 > 0);
    let closure = samples.iter().map(|s| s.1 .3).fold(0.0, f64::max);
    let class = if has_kernel && projected <= tol {
        SymmetryClass::SymmetryUpToKernel
    } else if raw <= tol {
        SymmetryClass::StrictSymmetry
    } else {
        SymmetryClass::NotASymmetry
    };
    Ok(SymmetryVerdict {
        class,
        witness: None,
        potential: None,
        residual: if has_kernel { projected } else { raw },
        raw_residual: raw,
        kernel_closure_residual: (!sys.kernel().is_empty()).then_some(closure),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::expr::{parse_expression, probabilistic_equal};
    use crate::exterior::Chart;
    use crate::mechanics::field;

    fn canonical(chart: &Arc<Chart>, h: &str) -> PhaseSpaceSystem {
        let n = chart.dim() / 2;
        let terms = (0..n).map(|i| (vec![2 * i, 2 * i + 1], Expr::one()));
        let omega = DifferentialForm::from_terms(chart, 2, terms).unwrap();
        PhaseSpaceSystem::new(chart.clone(), vec![], Structure::Symplectic(omega), parse_expression(h).unwrap(), vec![])
            .unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn classify_examples() {
        let c = Chart::new(["p", "q"]);
        let sys = canonical(&c, "p^2/2");
        let k: MultiVectorField = field(&c, 1, &[(&["q"], "p")]);
        match classify_field(&sys, &k, 1e-8, 50, &mut rng()).unwrap() {
            FieldClass::Hamiltonian { potential } => {
                let expected = parse_expression("p^2/2").unwrap();
                assert!(probabilistic_equal(&potential, &expected, 20, 1e-12, &mut rng()).unwrap());
            }
            other => panic!("{other:?}"),
        }
        let dilation: MultiVectorField = field(&c, 1, &[(&["q"], "q")]);
        assert!(!classify_field(&sys, &dilation, 1e-8, 50, &mut rng()).unwrap().is_hamiltonian());
        let k2: MultiVectorField = field(&c, 1, &[(&["q"], "p*q"), (&["p"], "-p^2")]);
        assert!(!classify_field(&sys, &k2, 1e-8, 50, &mut rng()).unwrap().is_hamiltonian());
    }

    #[test]
    fn symmetry_examples() {
        let c = Chart::new(["p", "q"]);
        let sys = canonical(&c, "p^2/2");
        let euler = SymmetryGenerator::new(field(&c, 1, &[(&["q"], "q"), (&["p"], "p")])).unwrap();
        let v = check_symmetry(&sys, &euler, 1e-8, 50, &mut rng()).unwrap();
        assert_eq!(v.class, SymmetryClass::StrictSymmetry);
        let bad = SymmetryGenerator::new(field(&c, 1, &[(&["p"], "p*q")])).unwrap();
        let v = check_symmetry(&sys, &bad, 1e-8, 50, &mut rng()).unwrap();
        assert_eq!(v.class, SymmetryClass::NotASymmetry);

        let c4 = Chart::new(["p1", "q1", "p2", "q2"]);
        let sys = canonical(&c4, "(p1^2 + p2^2)/2");
        let gen = SymmetryGenerator::new(field(&c4, 1, &[(&["q1"], "p1*q1"), (&["q2"], "p2*q2")])).unwrap();
        let v = check_symmetry(&sys, &gen, 1e-8, 50, &mut rng()).unwrap();
        assert_eq!(v.class, SymmetryClass::SymmetryUpToHamiltonian);
        let expected = parse_expression("-(p1^3 + p2^3)/3").unwrap();
        let f = v.potential.unwrap();
        let sum = f.add(&expected);
        let diff = f.sub(&expected);
        let same = probabilistic_equal(&diff, &Expr::zero(), 20, 1e-12, &mut rng()).unwrap()
            || probabilistic_equal(&sum, &Expr::zero(), 20, 1e-12, &mut rng()).unwrap();
        assert!(same, "potential {f}");
    }

    #[test]
    fn presymplectic_gauge_direction() {
        let c = Chart::new(["p", "q", "s"]);
        let omega: DifferentialForm = field(&c, 2, &[(&["p", "q"], "1")]);
        let u: MultiVectorField = field(&c, 1, &[(&["s"], "1")]);
        let sys = PhaseSpaceSystem::new(
            c.clone(),
            vec![],
            Structure::Presymplectic(omega),
            parse_expression("p^2/2").unwrap(),
            vec![u],
        )
        .unwrap();
        let gen = SymmetryGenerator::new(field(&c, 1, &[(&["q"], "q"), (&["p"], "p"), (&["s"], "s")])).unwrap();
        let v = check_symmetry(&sys, &gen, 1e-8, 20, &mut rng()).unwrap();
        assert_eq!(v.class, SymmetryClass::SymmetryUpToKernel);
        assert!(v.kernel_closure_residual.unwrap() < 1e-12);
        let bad = SymmetryGenerator::new(field(&c, 1, &[(&["p"], "p*q")])).unwrap();
        let v = check_symmetry(&sys, &bad, 1e-8, 20, &mut rng()).unwrap();
        assert_eq!(v.class, SymmetryClass::NotASymmetry);
    }
}
