mod common;

use common::*;
use nonnoether::exterior::{
    exterior_derivative, full_pairing, interior_product, lie_derivative_form, schouten_bracket, DifferentialForm,
    MultiVectorField,
};
use nonnoether::mechanics::invert_symplectic_form;
use nonnoether::Expr;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const XYZ: &[&str] = &["x", "y", "z"];
const C4: &[&str] = &["p1", "q1", "p2", "q2"];

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(11)
}

/// Componentwise Lie transport of a 2-form,
/// `(L_X a)_ij = X^m ∂_m a_ij + a_mj ∂_i X^m + a_im ∂_j X^m`.
fn transport(x: &MultiVectorField, a: &DifferentialForm) -> DifferentialForm {
    let c = a.chart().clone();
    let n = c.dim();
    let mut terms = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut acc = Expr::zero();
            for m in 0..n {
                let xm = x.component(&[m]);
                acc = acc.add(&xm.mul(&a.component(&[i, j]).differentiate(c.name(m))));
                acc = acc.add(&a.component(&[m, j]).mul(&xm.differentiate(c.name(i))));
                acc = acc.add(&a.component(&[i, m]).mul(&xm.differentiate(c.name(j))));
            }
            terms.push((vec![i, j], acc));
        }
    }
    DifferentialForm::from_terms(&c, 2, terms).unwrap()
}

#[test]
fn frozen_examples() {
    let c = chart(&["p", "q"]);
    let form: DifferentialForm = field(&c, 1, &[(&["q"], "p")]);
    let canonical: DifferentialForm = field(&c, 2, &[(&["p", "q"], "1")]);
    assert_eq!(exterior_derivative(&form), canonical);
    let pair: MultiVectorField = field(&c, 2, &[(&["p", "q"], "1")]);
    assert!(interior_product(&pair, &canonical).unwrap().as_scalar().is_one());
    let dq: MultiVectorField = field(&c, 1, &[(&["q"], "1")]);
    let minus_dp: DifferentialForm = field(&c, 1, &[(&["p"], "-1")]);
    assert_eq!(interior_product(&dq, &canonical).unwrap(), minus_dp);
    let euler: MultiVectorField = field(&c, 1, &[(&["p"], "p"), (&["q"], "q")]);
    assert_eq!(lie_derivative_form(&euler, &canonical).unwrap(), canonical.scale(&Expr::int(2)));
    assert_eq!(schouten_bracket(&euler, &pair).unwrap(), pair.scale(&Expr::int(-2)));

    let c4 = chart(C4);
    let w: MultiVectorField = field(&c4, 2, &[(&["p1", "q1"], "1"), (&["p2", "q2"], "1")]);
    let top: MultiVectorField = field(&c4, 4, &[(&["p1", "q1", "p2", "q2"], "2")]);
    assert_eq!(w.multivector_power(2).unwrap(), top);
    assert!(w.multivector_power(3).unwrap().is_structurally_zero());
    let omega = canonical_form(&c4, 2);
    assert_eq!(full_pairing(&w, &omega).unwrap().as_num().unwrap().to_string(), "2");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn d_squared_vanishes(one in vector_field(XYZ), two in bivector(XYZ)) {
        let c = chart(XYZ);
        let a: DifferentialForm = build_vector(&c, &one);
        let b: DifferentialForm = build_bivector(&c, &two);
        let mut r = rng();
        prop_assert!(residual(&exterior_derivative(&exterior_derivative(&a)), 10, &mut r) <= 1e-9);
        prop_assert!(residual(&exterior_derivative(&exterior_derivative(&b)), 10, &mut r) <= 1e-9);
    }

    #[test]
    fn cartan_matches_transport(x in vector_field(XYZ), two in bivector(XYZ)) {
        let c = chart(XYZ);
        let x: MultiVectorField = build_vector(&c, &x);
        let a: DifferentialForm = build_bivector(&c, &two);
        let cartan = lie_derivative_form(&x, &a).unwrap();
        prop_assert!(relative_gap(&cartan, &transport(&x, &a), 10, &mut rng()) <= 1e-9);
    }

    #[test]
    fn wedge_is_graded_commutative(one in vector_field(XYZ), other in vector_field(XYZ), two in bivector(XYZ)) {
        let c = chart(XYZ);
        let a: DifferentialForm = build_vector(&c, &one);
        let b: DifferentialForm = build_vector(&c, &other);
        let w: DifferentialForm = build_bivector(&c, &two);
        let mut r = rng();
        prop_assert!(relative_gap(&a.wedge(&b).unwrap(), &b.wedge(&a).unwrap().neg(), 10, &mut r) <= 1e-9);
        prop_assert!(relative_gap(&a.wedge(&w).unwrap(), &w.wedge(&a).unwrap(), 10, &mut r) <= 1e-9);
    }

    #[test]
    fn transport_is_a_derivation(x in vector_field(XYZ), u in vector_field(XYZ), v in bivector(XYZ)) {
        let c = chart(XYZ);
        let x: MultiVectorField = build_vector(&c, &x);
        let u: MultiVectorField = build_vector(&c, &u);
        let v: MultiVectorField = build_bivector(&c, &v);
        let lhs = schouten_bracket(&x, &u.wedge(&v).unwrap()).unwrap();
        let rhs = schouten_bracket(&x, &u).unwrap().wedge(&v).unwrap()
            .add(&u.wedge(&schouten_bracket(&x, &v).unwrap()).unwrap()).unwrap();
        prop_assert!(relative_gap(&lhs, &rhs, 10, &mut rng()) <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// `L_X i_W ω = i_{[X,W]} ω + i_W L_X ω` for an arbitrary bivector.
    #[test]
    fn lie_derivative_of_a_contraction(x in vector_field(C4), w in bivector(C4), o in bivector(C4)) {
        let c = chart(C4);
        let x: MultiVectorField = build_vector(&c, &x);
        let w: MultiVectorField = build_bivector(&c, &w);
        let omega: DifferentialForm = build_bivector(&c, &o);
        let lhs = lie_derivative_form(&x, &interior_product(&w, &omega).unwrap()).unwrap();
        let rhs = interior_product(&schouten_bracket(&x, &w).unwrap(), &omega).unwrap()
            .add(&interior_product(&w, &lie_derivative_form(&x, &omega).unwrap()).unwrap()).unwrap();
        prop_assert!(relative_gap(&lhs, &rhs, 20, &mut rng()) <= 1e-9);
    }

    /// With `W₄` the bivector satisfying `i_X i_Y ω = i_{W₄} (i_X ω ∧ i_Y ω)`,
    /// the transported identity reads `i_X i_Y L_Z ω = −i_{[Z,W₄]} (i_X ω ∧ i_Y ω)`,
    /// i.e. it holds as written for `W = −W₄`, the bivector used throughout.
    #[test]
    fn contraction_of_the_lie_derivative(x in vector_field(C4), y in vector_field(C4), z in vector_field(C4)) {
        let sys = canonical_system("0");
        let c = sys.chart().clone();
        let omega = sys.structure().form().unwrap().clone();
        let w = invert_symplectic_form(&sys).unwrap();
        let w4 = w.neg();
        let (x, y, z): (MultiVectorField, MultiVectorField, MultiVectorField) =
            (build_vector(&c, &x), build_vector(&c, &y), build_vector(&c, &z));
        let ix = interior_product(&x, &omega).unwrap();
        let iy = interior_product(&y, &omega).unwrap();
        let pair = ix.wedge(&iy).unwrap();
        let defining = interior_product(&x, &interior_product(&y, &omega).unwrap()).unwrap()
            .sub(&interior_product(&w4, &pair).unwrap()).unwrap();
        let mut r = rng();
        prop_assert!(residual(&defining, 20, &mut r) <= 1e-9);
        let lhs = interior_product(&x, &interior_product(&y, &lie_derivative_form(&z, &omega).unwrap()).unwrap()).unwrap();
        let rhs = interior_product(&schouten_bracket(&z, &w).unwrap(), &pair).unwrap();
        prop_assert!(relative_gap(&lhs, &rhs, 20, &mut r) <= 1e-9);
    }
}
