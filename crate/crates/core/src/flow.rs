//! Fixed-step RK4 integration of Hamiltonian flows and conservation
//! measurements.

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::mechanics::{hamiltonian_vector_field, BoundTape, InvariantSet, MechanicsError, PhaseSpaceSystem};
use crate::scalar::Real;

/// Drifts below this are indistinguishable from rounding.
pub const DRIFT_FLOOR: f64 = 1e-13;
/// Upper bound on the number of steps of one integration.
pub const MAX_STEPS: f64 = 1e7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("non-finite state at t = {time}")]
    BlowUp { time: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("drift {drift:.3e} is at the rounding floor; order not measurable")]
    DriftAtFloor { drift: f64 },
    #[error(transparent)]
    Mechanics(#[from] MechanicsError),
}

impl From<FlowError> for MechanicsError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::Mechanics(inner) => inner,
            other => MechanicsError::Flow(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub step: f64,
    pub time: f64,
    /// Coefficients of the declared kernel vectors added to the
    /// Hamiltonian field (presymplectic gauge choice).
    pub admixture: Vec<f64>,
    /// Integrate the negated field.
    pub reverse: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { step: 1e-3, time: 10.0, admixture: Vec::new(), reverse: false }
    }
}

impl IntegratorConfig {
    pub fn steps(&self) -> Result<usize, FlowError> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(FlowError::InvalidConfig(format!("step {} must be positive", self.step)));
        }
        if !(self.time > 0.0 && self.time.is_finite()) {
            return Err(FlowError::InvalidConfig(format!("time {} must be positive", self.time)));
        }
        let n = self.time / self.step;
        if n > MAX_STEPS {
            return Err(FlowError::InvalidConfig(format!("{n:.0} steps exceed the limit of {MAX_STEPS:.0}")));
        }
        let steps = n.round();
        if (steps * self.step - self.time).abs() > 1e-9 * self.time {
            return Err(FlowError::InvalidConfig(format!(
                "time {} is not a multiple of step {}",
                self.time, self.step
            )));
        }
        Ok(steps as usize)
    }
}

/// One classical Runge–Kutta step.
pub fn rk4_step<S, E, F>(f: &mut F, x: &[S], h: S) -> Result<Vec<S>, E>
where
    S: Real,
    F: FnMut(&[S]) -> Result<Vec<S>, E>,
{
    let two = S::one() + S::one();
    let six = two + two + two;
    let shift = |k: &[S], c: S| -> Vec<S> { x.iter().zip(k).map(|(a, b)| *a + c * *b).collect() };
    let k1 = f(x)?;
    let k2 = f(&shift(&k1, h / two))?;
    let k3 = f(&shift(&k2, h / two))?;
    let k4 = f(&shift(&k3, h))?;
    Ok((0..x.len())
        .map(|i| x[i] + h / six * (k1[i] + two * k2[i] + two * k3[i] + k4[i]))
        .collect())
}

/// Time samples and states of one integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory has the initial state")
    }
}

/// Integrates `X_h + Σ c_k u_k` from `x0` with fixed-step RK4.
pub fn integrate_flow(sys: &PhaseSpaceSystem, x0: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory, FlowError> {
    let steps = cfg.steps()?;
    if x0.len() != sys.dim() {
        return Err(FlowError::InvalidConfig(format!("initial point has {} entries, expected {}", x0.len(), sys.dim())));
    }
    if !cfg.admixture.is_empty() && cfg.admixture.len() != sys.kernel().len() {
        return Err(FlowError::InvalidConfig(format!(
            "{} admixture coefficients for {} declared kernel vectors",
            cfg.admixture.len(),
            sys.kernel().len()
        )));
    }
    let field = hamiltonian_vector_field(sys)?.evaluator(sys)?;
    let kernel: Vec<(f64, BoundTape)> = cfg
        .admixture
        .iter()
        .zip(sys.kernel())
        .filter(|(c, _)| **c != 0.0)
        .map(|(c, u)| {
            let comps: Vec<_> = (0..sys.dim()).map(|i| u.component(&[i])).collect();
            Ok((*c, sys.compile(&comps)?))
        })
        .collect::<Result<_, MechanicsError>>()?;
    let sign = if cfg.reverse { -1.0 } else { 1.0 };
    let mut rhs = |x: &[f64]| -> Result<Vec<f64>, MechanicsError> {
        let mut v = field.eval(x)?;
        for (c, tape) in &kernel {
            v += DVector::from_vec(tape.eval(x)?) * *c;
        }
        Ok(v.iter().map(|c| sign * c).collect())
    };
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x0.to_vec());
    let mut x = x0.to_vec();
    for n in 1..=steps {
        let t = n as f64 * cfg.step;
        x = match rk4_step(&mut rhs, &x, cfg.step) {
            Ok(next) => next,
            Err(MechanicsError::SingularPoint(_)) => return Err(FlowError::BlowUp { time: t }),
            Err(e) => return Err(e.into()),
        };
        if x.iter().any(|c| !c.is_finite()) {
            return Err(FlowError::BlowUp { time: t });
        }
        times.push(t);
        states.push(x.clone());
    }
    Ok(Trajectory { times, states })
}

/// Vector-valued function of a phase-space point.
pub trait Observable {
    fn observe(&self, x: &[f64]) -> Result<Vec<f64>, MechanicsError>;
}

impl Observable for InvariantSet {
    fn observe(&self, x: &[f64]) -> Result<Vec<f64>, MechanicsError> {
        self.evaluate(x)
    }
}

impl Observable for BoundTape {
    fn observe(&self, x: &[f64]) -> Result<Vec<f64>, MechanicsError> {
        self.eval(x)
    }
}

impl<F: Fn(&[f64]) -> Result<Vec<f64>, MechanicsError>> Observable for F {
    fn observe(&self, x: &[f64]) -> Result<Vec<f64>, MechanicsError> {
        self(x)
    }
}

/// Per-observable series along a trajectory and their relative drift
/// `max |I(t) − I(0)| / (1 + |I(0)|)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftSummary {
    pub series: Vec<Vec<f64>>,
    pub drift: Vec<f64>,
}

pub fn conservation_drift<O: Observable + ?Sized>(traj: &Trajectory, obs: &O) -> Result<DriftSummary, MechanicsError> {
    let mut series: Vec<Vec<f64>> = Vec::new();
    for x in &traj.states {
        let v = obs.observe(x)?;
        if series.is_empty() {
            series = vec![Vec::with_capacity(traj.states.len()); v.len()];
        }
        for (s, value) in series.iter_mut().zip(v) {
            s.push(value);
        }
    }
    let drift = series
        .iter()
        .map(|s| {
            let first = s[0];
            s.iter().map(|v| (v - first).abs()).fold(0.0, f64::max) / (1.0 + first.abs())
        })
        .collect();
    Ok(DriftSummary { series, drift })
}

/// Drifts only.
pub fn conservation_drift_of<O: Observable + ?Sized>(traj: &Trajectory, obs: &O) -> Result<Vec<f64>, MechanicsError> {
    Ok(conservation_drift(traj, obs)?.drift)
}

/// Error measure used for order estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceMetric {
    /// Largest drift over the observables.
    InvariantDrift,
    /// Max-norm distance of the final state from a run at one eighth of
    /// the smallest step.
    EndpointError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceEstimate {
    pub order: f64,
    /// `(step, error)` pairs used in the fit.
    pub errors: Vec<(f64, f64)>,
}

/// Least-squares slope of `log(error)` against `log(step)`.
pub fn convergence_order<O: Observable + ?Sized>(
    sys: &PhaseSpaceSystem,
    x0: &[f64],
    obs: &O,
    steps: &[f64],
    time: f64,
    metric: ConvergenceMetric,
) -> Result<ConvergenceEstimate, FlowError> {
    if steps.len() < 3 {
        return Err(FlowError::InvalidConfig("at least three step sizes are required".into()));
    }
    let ratio = steps[1] / steps[0];
    if steps.windows(2).any(|w| ((w[1] / w[0]) / ratio - 1.0).abs() > 1e-9) {
        return Err(FlowError::InvalidConfig("step sizes must form a geometric progression".into()));
    }
    let run = |h: f64| integrate_flow(sys, x0, &IntegratorConfig { step: h, time, ..Default::default() });
    let reference = match metric {
        ConvergenceMetric::EndpointError => {
            let h_min = steps.iter().copied().fold(f64::INFINITY, f64::min);
            Some(run(h_min / 8.0)?.last().to_vec())
        }
        ConvergenceMetric::InvariantDrift => None,
    };
    let mut errors = Vec::with_capacity(steps.len());
    for &h in steps {
        let traj = run(h)?;
        let err = match &reference {
            Some(r) => traj.last().iter().zip(r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            None => conservation_drift_of(&traj, obs)?.into_iter().fold(0.0, f64::max),
        };
        errors.push((h, err));
    }
    let usable: Vec<(f64, f64)> = errors.iter().copied().filter(|e| e.1 >= DRIFT_FLOOR).collect();
    if usable.len() < 2 {
        let drift = errors.iter().map(|e| e.1).fold(0.0, f64::max);
        return Err(FlowError::DriftAtFloor { drift });
    }
    Ok(ConvergenceEstimate { order: log_log_slope(&usable), errors })
}

fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;
    use crate::exterior::Chart;
    use crate::mechanics::{field, Structure};

    fn system(h: &str) -> PhaseSpaceSystem {
        let c = Chart::new(["p", "q"]);
        PhaseSpaceSystem::new(
            c.clone(),
            vec![],
            Structure::Symplectic(field(&c, 2, &[(&["p", "q"], "1")])),
            parse_expression(h).unwrap(),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn free_particle_is_exact() {
        let traj = integrate_flow(&system("p^2/2"), &[1.0, 0.0], &IntegratorConfig::default()).unwrap();
        assert!((traj.last()[1] - 10.0).abs() < 1e-10);
        assert_eq!(traj.times.len(), 10_001);
    }

    #[test]
    fn oscillator_returns_after_one_period() {
        let cfg = IntegratorConfig { step: std::f64::consts::TAU / 6000.0, time: std::f64::consts::TAU, ..Default::default() };
        let traj = integrate_flow(&system("(p^2 + q^2)/2"), &[0.0, 1.0], &cfg).unwrap();
        assert!(traj.last()[0].abs() < 1e-9 && (traj.last()[1] - 1.0).abs() < 1e-9, "{:?}", traj.last());
    }

    #[test]
    fn rk4_is_generic_over_precision() {
        let mut f = |x: &[f32]| -> Result<Vec<f32>, ()> { Ok(vec![-x[1], x[0]]) };
        let mut x = vec![1.0f32, 0.0];
        for _ in 0..100 {
            x = rk4_step(&mut f, &x, 0.01).unwrap();
        }
        assert!((x[0] - 1.0f32.cos()).abs() < 1e-5 && (x[1] - 1.0f32.sin()).abs() < 1e-5);
    }

    #[test]
    fn config_validation() {
        let bad = IntegratorConfig { step: 0.0, ..Default::default() };
        assert!(matches!(bad.steps(), Err(FlowError::InvalidConfig(_))));
        let huge = IntegratorConfig { step: 1e-9, time: 100.0, ..Default::default() };
        assert!(matches!(huge.steps(), Err(FlowError::InvalidConfig(_))));
    }

    #[test]
    fn blow_up_is_reported() {
        let traj = integrate_flow(&system("p^2/2 - q^4"), &[0.0, 2.0], &IntegratorConfig { step: 1e-2, time: 10.0, ..Default::default() });
        assert!(matches!(traj, Err(FlowError::BlowUp { .. })), "{traj:?}");
    }
}
