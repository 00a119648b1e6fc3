//! TOML system declarations.
//!
//! ```toml
//! name = "free_dilation"
//! coordinates = ["p", "q"]
//! hamiltonian = "p^2/2"
//! seed = 0
//!
//! [parameters]
//! m = 1.0
//!
//! [structure]
//! kind = "symplectic-form"      # or presymplectic-form, poisson-bivector
//! terms = [{ indices = ["p", "q"], expr = "1" }]
//!
//! [generator]                   # component per coordinate
//! q = "q"
//! p = "p"
//!
//! [[kernel]]                    # optional, 2-form structures only
//! s = "1"
//!
//! [integrator]
//! step = 1e-3
//! time = 10.0
//! admixture = [1.0]             # one coefficient per kernel vector
//!
//! [verify]
//! trajectories = 3              # random initial points
//! initial = [[1.0, 0.5]]        # explicit initial points (optional)
//! drift_tol = 1e-8
//!
//! [expected]                    # optional reference polynomials, one per k
//! invariants = ["p1 + p2", "p1*p2"]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::expr::{parse_expression, Expr, ExprError};
use crate::exterior::{Alternating, Chart, ExteriorError};
use crate::flow::IntegratorConfig;
use crate::mechanics::{MechanicsError, PhaseSpaceSystem, Structure, SymmetryGenerator};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("expression in {location}: {source}")]
    Expr { location: String, source: ExprError },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error(transparent)]
    Mechanics(#[from] MechanicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StructureKind {
    SymplecticForm,
    PresymplecticForm,
    PoissonBivector,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub indices: Vec<String>,
    pub expr: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConfig {
    pub kind: StructureKind,
    pub terms: Vec<TermConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_time")]
    pub time: f64,
    #[serde(default)]
    pub admixture: Vec<f64>,
}

fn default_step() -> f64 {
    1e-3
}

fn default_time() -> f64 {
    10.0
}

impl Default for IntegratorSection {
    fn default() -> Self {
        IntegratorSection { step: default_step(), time: default_time(), admixture: Vec::new() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default)]
    pub initial: Vec<Vec<f64>>,
    #[serde(default = "default_drift_tol")]
    pub drift_tol: f64,
}

fn default_trajectories() -> usize {
    3
}

fn default_drift_tol() -> f64 {
    1e-8
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection { trajectories: default_trajectories(), initial: Vec::new(), drift_tol: default_drift_tol() }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedSection {
    #[serde(default)]
    pub invariants: Vec<String>,
}

/// Raw file contents.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: String,
    pub coordinates: Vec<String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    pub structure: StructureConfig,
    pub hamiltonian: String,
    #[serde(default)]
    pub generator: BTreeMap<String, String>,
    #[serde(default)]
    pub kernel: Vec<BTreeMap<String, String>>,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub expected: ExpectedSection,
    #[serde(default)]
    pub seed: u64,
}

/// Validated objects built from a config.
#[derive(Debug, Clone)]
pub struct LoadedSystem {
    pub name: String,
    pub system: PhaseSpaceSystem,
    pub generator: SymmetryGenerator,
    pub integrator: IntegratorConfig,
    pub verify: VerifySection,
    pub expected: Vec<Expr>,
    pub seed: u64,
}

fn expr_at(location: impl Into<String>, text: &str) -> Result<Expr, ConfigError> {
    parse_expression(text).map_err(|source| ConfigError::Expr { location: location.into(), source })
}

fn vector_field<V>(
    chart: &std::sync::Arc<Chart>,
    what: &str,
    comps: &BTreeMap<String, String>,
) -> Result<Alternating<V>, ConfigError> {
    let mut terms = Vec::new();
    for (coord, text) in comps {
        let i = chart
            .index_of(coord)
            .map_err(|_| ConfigError::Invalid(format!("{what} component `{coord}` is not a coordinate")))?;
        terms.push((vec![i], expr_at(format!("{what}.{coord}"), text)?));
    }
    Ok(Alternating::from_terms(chart, 1, terms)?)
}

impl SystemConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn build(&self) -> Result<LoadedSystem, ConfigError> {
        let chart = Chart::new(self.coordinates.iter().cloned());
        let mut terms = Vec::new();
        for (n, t) in self.structure.terms.iter().enumerate() {
            if t.indices.len() != 2 {
                return Err(ConfigError::Invalid(format!("structure term {n} needs two indices")));
            }
            let idx = t
                .indices
                .iter()
                .map(|c| {
                    chart
                        .index_of(c)
                        .map_err(|_| ConfigError::Invalid(format!("structure term {n} uses unknown coordinate `{c}`")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            terms.push((idx, expr_at(format!("structure.terms[{n}]"), &t.expr)?));
        }
        let structure = match self.structure.kind {
            StructureKind::SymplecticForm => Structure::Symplectic(Alternating::from_terms(&chart, 2, terms)?),
            StructureKind::PresymplecticForm => Structure::Presymplectic(Alternating::from_terms(&chart, 2, terms)?),
            StructureKind::PoissonBivector => Structure::Poisson(Alternating::from_terms(&chart, 2, terms)?),
        };
        let hamiltonian = expr_at("hamiltonian", &self.hamiltonian)?;
        let kernel = self
            .kernel
            .iter()
            .enumerate()
            .map(|(i, k)| vector_field(&chart, &format!("kernel[{i}]"), k))
            .collect::<Result<Vec<_>, _>>()?;
        let parameters = self.parameters.iter().map(|(k, v)| (k.clone(), *v)).collect();
        let system = PhaseSpaceSystem::new(chart.clone(), parameters, structure, hamiltonian, kernel)?;
        let generator = SymmetryGenerator::new(vector_field(&chart, "generator", &self.generator)?)?;
        let integrator = IntegratorConfig {
            step: self.integrator.step,
            time: self.integrator.time,
            admixture: self.integrator.admixture.clone(),
            reverse: false,
        };
        integrator.steps().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !integrator.admixture.is_empty() && integrator.admixture.len() != system.kernel().len() {
            return Err(ConfigError::Invalid(format!(
                "integrator.admixture has {} entries for {} kernel vectors",
                integrator.admixture.len(),
                system.kernel().len()
            )));
        }
        if let Some(bad) = self.verify.initial.iter().find(|p| p.len() != system.dim()) {
            return Err(ConfigError::Invalid(format!(
                "verify.initial point has {} entries, expected {}",
                bad.len(),
                system.dim()
            )));
        }
        let expected = self
            .expected
            .invariants
            .iter()
            .enumerate()
            .map(|(i, t)| expr_at(format!("expected.invariants[{i}]"), t))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LoadedSystem {
            name: self.name.clone(),
            system,
            generator,
            integrator,
            verify: self.verify.clone(),
            expected,
            seed: self.seed,
        })
    }
}

/// Reads, parses and validates a config file.
pub fn load_system(path: impl AsRef<Path>) -> Result<LoadedSystem, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    SystemConfig::parse(&text)?.build()
}
