//! Run configuration: a single JSON document naming the experiment, its
//! seed, the output directory, and an experiment-specific parameter block.
//! Unknown keys are rejected everywhere so a typo cannot silently revert a
//! parameter to its default.

use std::path::{Path, PathBuf};

use flowlab_core::logic::{Sort, Structure};
use flowlab_core::space::StateVector;
use serde::Deserialize;

use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FLOWLAB_OUT";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: String,
    pub seed: u64,
    /// Defaults to $FLOWLAB_OUT, then ./flowlab-out.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Experiment-specific block; each experiment parses it strictly.
    #[serde(default)]
    pub params: serde_json::Value,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Config {
            reason: format!("{}: {e}", path.display()),
        })
    }

    pub fn resolve_out_dir(&self) -> PathBuf {
        if let Some(dir) = &self.out_dir {
            return dir.clone();
        }
        if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
            return PathBuf::from(dir);
        }
        PathBuf::from("flowlab-out")
    }
}

/// Parses an experiment parameter block. A missing or null block means
/// all defaults.
pub fn parse_params<T>(value: &serde_json::Value) -> Result<T, CliError>
where
    T: serde::de::DeserializeOwned + Default,
{
    if value.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(value.clone()).map_err(|e| CliError::Config {
        reason: format!("params: {e}"),
    })
}

/// Declarative predicate over scalar states, for structures loaded from
/// files.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PredicateSpec {
    GreaterThan { threshold: f64 },
    LessThan { threshold: f64 },
    AbsWithin { center: f64, radius: f64 },
}

/// JSON description of a finite two-sorted structure with scalar states:
/// explicit time grid, state domain, trajectory samples (one per time),
/// the match tolerance, and named predicates.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub trajectory: Vec<f64>,
    pub match_tol: f64,
    #[serde(default)]
    pub predicates: std::collections::BTreeMap<String, PredicateSpec>,
}

impl StructureSpec {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Config {
            reason: format!("{}: {e}", path.display()),
        })
    }

    pub fn build(&self) -> Result<Structure, CliError> {
        if self.trajectory.len() != self.times.len() {
            return Err(CliError::Config {
                reason: format!(
                    "structure needs one trajectory sample per time ({} times, {} samples)",
                    self.times.len(),
                    self.trajectory.len()
                ),
            });
        }
        let samples = self.trajectory.clone();
        let times = self.times.clone();
        let states: Vec<StateVector> = self.states.iter().map(|&s| StateVector::scalar(s)).collect();
        let mut structure = Structure::new(
            times.clone(),
            states,
            move |t| {
                let i = times
                    .iter()
                    .position(|&u| u == t)
                    .expect("trajectory sampled on the time grid");
                StateVector::scalar(samples[i])
            },
            self.match_tol,
        )?;
        for (name, spec) in &self.predicates {
            let f: Box<dyn Fn(&StateVector) -> bool + Send + Sync> = match *spec {
                PredicateSpec::GreaterThan { threshold } => {
                    Box::new(move |s: &StateVector| s.get(0) > threshold)
                }
                PredicateSpec::LessThan { threshold } => {
                    Box::new(move |s: &StateVector| s.get(0) < threshold)
                }
                PredicateSpec::AbsWithin { center, radius } => {
                    Box::new(move |s: &StateVector| (s.get(0) - center).abs() < radius)
                }
            };
            structure.add_predicate(name.clone(), f);
        }
        Ok(structure)
    }
}

/// The example structure serialized the way `logic eval` loads it:
/// trajectory sin t sampled on 0, 0.01, .., 6.28 with the sign predicate.
pub fn sin_structure_spec() -> StructureSpec {
    let times: Vec<f64> = (0..=628).map(|i| i as f64 * 0.01).collect();
    StructureSpec {
        trajectory: times.iter().map(|t| t.sin()).collect(),
        times,
        states: (0..=2000).map(|i| (i as f64 - 1000.0) * 1e-3).collect(),
        match_tol: 5e-4,
        predicates: [(
            "P".to_string(),
            PredicateSpec::GreaterThan { threshold: 0.0 },
        )]
        .into(),
    }
}

/// Free variables are not allowed on the command line; names the first one.
pub fn require_closed(formula: &flowlab_core::logic::Formula) -> Result<(), CliError> {
    if let Some((name, sort)) = formula.free_variables().first() {
        let sort = match sort {
            Sort::Time => "Time",
            Sort::State => "State",
        };
        return Err(CliError::Config {
            reason: format!("formula has a free variable {name}: {sort}; bind it with a quantifier"),
        });
    }
    Ok(())
}
