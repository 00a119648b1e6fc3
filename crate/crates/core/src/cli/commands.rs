use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::config::LoadedSystem;
use super::report::{Report, Section};
use super::{Cli, Command};
use crate::flow::{conservation_drift, integrate_flow, FlowError, IntegratorConfig};
use crate::mechanics::{
    check_symmetry, involution_check, lutzky_invariants, normalization_constants, poisson_invariants,
    validate_poisson, yang_baxter_check, InvariantPath, InvariantSet, MechanicsError, OracleFit, Structure,
    DEFAULT_POINTS,
};

/// Agreement required between the invariants and the characteristic
/// polynomial oracle, and between the invariants and `[expected]`.
pub const ORACLE_TOL: f64 = 1e-8;
/// Bracket tolerance when invariant gradients come from finite differences.
pub const FD_BRACKET_TOL: f64 = 1e-6;
/// Rows of the pointwise value table for presymplectic invariants.
const TABLE_ROWS: usize = 5;

const STREAM_CHECK: u64 = 1;
const STREAM_INVARIANTS: u64 = 2;
const STREAM_VERIFY: u64 = 3;
const STREAM_INVOLUTION: u64 = 4;

/// Resolved run parameters: config values with command-line overrides.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    pub tol: f64,
    /// Sample size of the pointwise checks.
    pub points: usize,
    /// Random initial points for `verify`.
    pub trajectories: usize,
    pub integrator: IntegratorConfig,
    pub drift_tol: f64,
}

impl Settings {
    pub fn from_cli(cli: &Cli, loaded: &LoadedSystem) -> Result<Settings, String> {
        if !(cli.tol > 0.0 && cli.tol.is_finite()) {
            return Err(format!("--tol {} must be positive", cli.tol));
        }
        let mut integrator = loaded.integrator.clone();
        if let Some(step) = cli.steps {
            integrator.step = step;
        }
        if let Some(time) = cli.time {
            integrator.time = time;
        }
        integrator.steps().map_err(|e| e.to_string())?;
        Ok(Settings {
            seed: cli.seed.unwrap_or(loaded.seed),
            tol: cli.tol,
            points: DEFAULT_POINTS,
            trajectories: cli.points.unwrap_or(loaded.verify.trajectories),
            integrator,
            drift_tol: loaded.verify.drift_tol,
        })
    }

    /// Defaults taken from the config alone.
    pub fn from_config(loaded: &LoadedSystem) -> Settings {
        Settings {
            seed: loaded.seed,
            tol: crate::mechanics::DEFAULT_TOL,
            points: DEFAULT_POINTS,
            trajectories: loaded.verify.trajectories,
            integrator: loaded.integrator.clone(),
            drift_tol: loaded.verify.drift_tol,
        }
    }

    /// Independent deterministic stream per section, so that running one
    /// command alone reproduces its part of a full report.
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Runs one command and collects its sections.
pub fn execute(command: Command, loaded: &LoadedSystem, settings: &Settings) -> Report {
    let sections = match command {
        Command::Check => vec![check_section(loaded, settings)],
        Command::Invariants => vec![invariants_section(loaded, settings)],
        Command::Verify => vec![verify_section(loaded, settings)],
        Command::Involution => vec![involution_section(loaded, settings)],
        Command::Report => vec![
            check_section(loaded, settings),
            invariants_section(loaded, settings),
            verify_section(loaded, settings),
            involution_section(loaded, settings),
        ],
    };
    let command = format!("{command:?}").to_lowercase();
    Report { system: loaded.name.clone(), seed: settings.seed, command, sections }
}

fn structure_w(loaded: &LoadedSystem) -> Option<&crate::exterior::MultiVectorField> {
    match loaded.system.structure() {
        Structure::Poisson(w) => Some(w),
        _ => None,
    }
}

fn check_section(loaded: &LoadedSystem, settings: &Settings) -> Section {
    let mut s = Section::new("check");
    let mut rng = settings.rng(STREAM_CHECK);
    let sys = &loaded.system;
    s.set("structure", sys.structure().kind());
    s.set("tolerance", settings.tol);
    if let Some(w) = structure_w(loaded) {
        match validate_poisson(sys, w, settings.points, &mut rng) {
            Ok(v) => {
                s.line(format!("jacobi residual: {:.3e}", v.residual));
                s.set("jacobi_residual", v.residual);
                if !v.valid {
                    s.fail(format!("bivector is not Poisson (residual {:.3e})", v.residual));
                }
            }
            Err(e) => s.fail(e.to_string()),
        }
    }
    match check_symmetry(sys, &loaded.generator, settings.tol, settings.points, &mut rng) {
        Ok(v) => {
            s.line(format!("verdict: {}", v.class));
            s.line(format!("residual: {:.3e}", v.residual));
            s.set("verdict", v.class.name());
            s.set("residual", v.residual);
            s.set("raw_residual", v.raw_residual);
            if v.raw_residual != v.residual {
                s.line(format!("raw residual: {:.3e}", v.raw_residual));
            }
            if let Some(p) = &v.potential {
                s.line(format!("hamiltonian of [E, X_h]: {p}"));
                s.set("potential", p.to_string());
            }
            if let Some(c) = v.kernel_closure_residual {
                s.line(format!("kernel closure residual |[E, u] mod ker|: {c:.3e}"));
                s.set("kernel_closure_residual", c);
            }
            if !v.class.is_symmetry() {
                s.fail(format!("generator is not a symmetry (residual {:.3e})", v.residual));
            }
        }
        Err(e) => {
            s.set("verdict", Value::Null);
            s.fail(e.to_string());
        }
    }
    s
}

/// Invariants of the configured system, built from the invariants stream.
pub fn build_invariants(loaded: &LoadedSystem, settings: &Settings) -> Result<InvariantSet, MechanicsError> {
    let mut rng = settings.rng(STREAM_INVARIANTS);
    match loaded.system.structure() {
        Structure::Poisson(_) => {
            poisson_invariants(&loaded.system, &loaded.generator, settings.tol, settings.points, &mut rng)
        }
        _ => lutzky_invariants(&loaded.system, &loaded.generator, &mut rng),
    }
}

fn entry_label(inv: &InvariantSet, i: usize) -> String {
    format!("I^({})", inv.entries[i].k)
}

fn invariants_section(loaded: &LoadedSystem, settings: &Settings) -> Section {
    let mut s = Section::new("invariants");
    let sys = &loaded.system;
    let inv = match build_invariants(loaded, settings) {
        Ok(inv) => inv,
        Err(e) => {
            s.fail(e.to_string());
            return s;
        }
    };
    let mut rng = settings.rng(STREAM_INVARIANTS);
    s.line(format!("path: {} (half rank {})", inv.path, inv.half_rank));
    s.line(format!("normalization: {}", inv.normalization));
    s.set("path", inv.path.to_string());
    s.set("half_rank", inv.half_rank);
    s.set("normalization", inv.normalization.clone());
    let mut listed = Vec::new();
    for (i, e) in inv.entries.iter().enumerate() {
        let text = e.expr.as_ref().map(|x| x.to_string());
        match &text {
            Some(t) if e.trivial => s.line(format!("{} = {t} (trivial)", entry_label(&inv, i))),
            Some(t) => s.line(format!("{} = {t}", entry_label(&inv, i))),
            None => s.line(format!("{} evaluated pointwise", entry_label(&inv, i))),
        }
        listed.push(json!({ "k": e.k, "expr": text, "trivial": e.trivial }));
    }
    s.set("invariants", listed);

    if inv.path == InvariantPath::Presymplectic {
        match crate::mechanics::sample_points(sys.dim(), TABLE_ROWS, &mut rng, |x| inv.evaluate(x)) {
            Ok(rows) => {
                let mut table = Vec::new();
                for (x, vals) in rows {
                    s.line(format!("  at {} -> {}", fmt_vec(&x), fmt_vec(&vals)));
                    table.push(json!({ "point": x, "values": vals }));
                }
                s.set("table", table);
            }
            Err(e) => s.fail(e.to_string()),
        }
    }

    if sys.structure().form().is_some() {
        match OracleFit::fit(&inv, sys, &loaded.generator, settings.points, &mut rng) {
            Ok(fit) => {
                s.line(format!(
                    "characteristic polynomial oracle: constants {} spread {} tail {:.3e}",
                    fmt_vec(&fit.constants),
                    fmt_vec(&fit.spread),
                    fit.tail
                ));
                s.set("oracle", serde_json::to_value(&fit).expect("serializable"));
                if fit.spread.iter().any(|v| *v > ORACLE_TOL) || fit.tail > ORACLE_TOL {
                    s.fail("invariants disagree with the characteristic polynomial");
                }
            }
            Err(e) => s.fail(format!("oracle: {e}")),
        }
    }

    if !loaded.expected.is_empty() {
        let nontrivial = inv.entries.iter().filter(|e| !e.trivial).count();
        if loaded.expected.len() != nontrivial {
            s.fail(format!(
                "[expected] lists {} invariants, the construction gives {nontrivial}",
                loaded.expected.len()
            ));
        } else {
            match normalization_constants(&inv, sys, &loaded.expected, settings.points, &mut rng) {
                Ok(norms) => {
                    let mut out = Vec::new();
                    for (n, e) in norms.iter().zip(&loaded.expected) {
                        s.line(format!("expected {e}: constant {:.12} spread {:.3e}", n.constant, n.spread));
                        out.push(json!({ "expected": e.to_string(), "constant": n.constant, "spread": n.spread }));
                        if n.spread > ORACLE_TOL {
                            s.fail(format!("invariant is not proportional to {e} (spread {:.3e})", n.spread));
                        }
                    }
                    s.set("normalization_constants", out);
                }
                Err(e) => s.fail(format!("expected: {e}")),
            }
        }
    }
    s
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn verify_section(loaded: &LoadedSystem, settings: &Settings) -> Section {
    let mut s = Section::new("verify");
    let sys = &loaded.system;
    let inv = match build_invariants(loaded, settings) {
        Ok(inv) => inv,
        Err(e) => {
            s.fail(e.to_string());
            return s;
        }
    };
    let cfg = &settings.integrator;
    s.set("step", cfg.step);
    s.set("time", cfg.time);
    s.set("drift_tol", settings.drift_tol);
    s.line(format!("rk4 step {} over time {}, drift tolerance {:.1e}", cfg.step, cfg.time, settings.drift_tol));
    let mut rng = settings.rng(STREAM_VERIFY);
    let run = |x: &[f64]| -> Result<Vec<f64>, MechanicsError> {
        inv.evaluate(x)?;
        let traj = integrate_flow(sys, x, cfg).map_err(|e| match e {
            FlowError::BlowUp { time } => MechanicsError::SingularPoint(format!("flow blew up at t = {time}")),
            other => other.into(),
        })?;
        Ok(conservation_drift(&traj, &inv)?.drift)
    };
    let mut runs = Vec::new();
    for x in &loaded.verify.initial {
        runs.push((x.clone(), run(x)));
    }
    match crate::mechanics::sample_points(sys.dim(), settings.trajectories, &mut rng, |x| run(x)) {
        Ok(found) => runs.extend(found.into_iter().map(|(x, d)| (x, Ok(d)))),
        Err(e) => s.fail(format!("random initial points: {e}")),
    }
    let mut out = Vec::new();
    for (x, result) in runs {
        match result {
            Ok(drift) => {
                let shown: Vec<f64> =
                    drift.iter().zip(&inv.entries).filter(|(_, e)| !e.trivial).map(|(d, _)| *d).collect();
                s.line(format!("from {} drift {}", fmt_vec(&x), fmt_vec(&shown)));
                let worst = shown.iter().copied().fold(0.0, f64::max);
                if worst > settings.drift_tol {
                    s.fail(format!("drift {worst:.3e} from {} exceeds {:.1e}", fmt_vec(&x), settings.drift_tol));
                }
                out.push(json!({ "initial": x, "drift": drift }));
            }
            Err(e) => {
                s.fail(format!("from {}: {e}", fmt_vec(&x)));
                out.push(json!({ "initial": x, "error": e.to_string() }));
            }
        }
    }
    s.set("trajectories", out);
    s
}

fn involution_section(loaded: &LoadedSystem, settings: &Settings) -> Section {
    let mut s = Section::new("involution");
    let sys = &loaded.system;
    let mut rng = settings.rng(STREAM_INVOLUTION);
    let yb = match yang_baxter_check(sys, &loaded.generator, settings.points, &mut rng) {
        Ok(r) => {
            s.line(format!("yang-baxter residual: {:.3e} ({})", r.residual, if r.holds { "holds" } else { "fails" }));
            s.set("yang_baxter", serde_json::to_value(r).expect("serializable"));
            Some(r.holds)
        }
        Err(e) => {
            s.line(format!("yang-baxter check unavailable: {e}"));
            s.set("yang_baxter", Value::Null);
            None
        }
    };
    let inv = match build_invariants(loaded, settings) {
        Ok(inv) => inv,
        Err(e) => {
            s.fail(e.to_string());
            return s;
        }
    };
    let tol = if inv.entries.iter().all(|e| e.expr.is_some()) { settings.tol } else { FD_BRACKET_TOL };
    match involution_check(&inv, sys, tol, settings.points, &mut rng) {
        Ok(r) => {
            let worst = r.residuals.iter().flatten().copied().fold(0.0, f64::max);
            s.line(format!("max |{{I^(l), I^(k)}}|: {worst:.3e} (tolerance {tol:.1e})"));
            s.set("bracket_tol", tol);
            s.set("involution", serde_json::to_value(&r).expect("serializable"));
            if !r.in_involution {
                if yb == Some(false) {
                    s.line("not in involution; expected since the Yang-Baxter condition fails");
                } else {
                    s.fail(format!("invariants are not in involution ({worst:.3e})"));
                }
            }
        }
        Err(e) => s.fail(e.to_string()),
    }
    s
}
