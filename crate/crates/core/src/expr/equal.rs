use rand::Rng;

use super::{Expr, ExprError, Tape};

/// Half-width of the sampling box used for every randomized identity test.
pub const SAMPLE_BOX: f64 = 2.0;

/// Decides `a == b` by evaluation at `trials` random points drawn uniformly
/// from `[-2, 2]` in every free symbol of either side.
///
/// A point where either side is undefined is redrawn; at most `10 * trials`
/// redraws are made in total. The comparison at each point is
/// `|a - b| <= tol * (1 + max(|a|, |b|))`.
pub fn probabilistic_equal<R: Rng + ?Sized>(
    a: &Expr,
    b: &Expr,
    trials: usize,
    tol: f64,
    rng: &mut R,
) -> Result<bool, ExprError> {
    assert!(trials >= 1, "at least one trial");
    assert!(tol > 0.0, "positive tolerance");
    let mut names = a.free_symbols();
    names.extend(b.free_symbols());
    let names: Vec<String> = names.into_iter().collect();
    let tape = Tape::compile(&[a.clone(), b.clone()], &names)?;

    let budget = 10 * trials;
    let mut redraws = 0;
    let mut done = 0;
    let mut point = vec![0.0; names.len()];
    while done < trials {
        for x in point.iter_mut() {
            *x = rng.gen_range(-SAMPLE_BOX..=SAMPLE_BOX);
        }
        match tape.eval::<f64>(&point) {
            Ok(v) => {
                let (x, y) = (v[0], v[1]);
                if (x - y).abs() > tol * (1.0 + x.abs().max(y.abs())) {
                    return Ok(false);
                }
                done += 1;
            }
            Err(ExprError::Domain(_)) => {
                redraws += 1;
                if redraws > budget {
                    return Err(ExprError::ResamplingExhausted { attempts: redraws });
                }
            }
            Err(other) => return Err(other),
        }
    }
    Ok(true)
}
