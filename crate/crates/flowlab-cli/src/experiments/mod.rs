//! The experiment registry. Each experiment is a strategy behind a common
//! trait: it parses its own parameter block, runs at the configured scale,
//! writes artifacts through the context (which records the manifest), and
//! returns its checks. The binary dispatches on the experiment name.

use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use crate::config::{parse_params, RunConfig};
use crate::report::{format_float, Check, RunReport};
use crate::CliError;

pub(crate) mod catmap;
pub(crate) mod gl;
pub(crate) mod infogeo;
pub(crate) mod logic;
pub(crate) mod logistic;
pub(crate) mod picard;
pub(crate) mod recurrence;
pub(crate) mod rotation;
pub(crate) mod spread;

pub trait Experiment {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn run(&self, params: &serde_json::Value, ctx: &mut RunContext)
        -> Result<Vec<Check>, CliError>;
}

/// Output sink for one run: everything an experiment emits goes through
/// here, so the artifact manifest is complete by construction.
pub struct RunContext {
    pub seed: u64,
    out_dir: PathBuf,
    artifacts: Vec<String>,
}

impl RunContext {
    pub fn new(seed: u64, out_dir: PathBuf) -> Result<Self, CliError> {
        std::fs::create_dir_all(&out_dir).map_err(|e| CliError::Io {
            path: out_dir.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(Self {
            seed,
            out_dir,
            artifacts: Vec::new(),
        })
    }

    pub fn out_dir(&self) -> &std::path::Path {
        &self.out_dir
    }

    fn write_file(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    /// Numeric CSV with every cell printed to 17 significant digits, so
    /// identical data gives identical bytes and values parse back exactly.
    pub fn write_csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<f64>],
    ) -> Result<(), CliError> {
        let mut text = String::new();
        text.push_str(&header.join(","));
        text.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            let cells: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        self.write_file(name, text.as_bytes())
    }

    pub fn write_svg(&mut self, name: &str, svg: &str) -> Result<(), CliError> {
        self.write_file(name, svg.as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config {
            reason: format!("serializing {name}: {e}"),
        })?;
        text.push('\n');
        self.write_file(name, text.as_bytes())
    }
}

/// All registered experiments, in the order `list` prints them.
pub fn registry() -> Vec<Box<dyn Experiment>> {
    vec![
        Box::new(picard::Picard),
        Box::new(rotation::Rotation),
        Box::new(logistic::Logistic),
        Box::new(catmap::CatMap),
        Box::new(infogeo::InfoGeo),
        Box::new(spread::Spread),
        Box::new(logic::Logic),
        Box::new(gl::Gl),
        Box::new(recurrence::Recurrence),
    ]
}

pub fn find(name: &str) -> Result<Box<dyn Experiment>, CliError> {
    registry()
        .into_iter()
        .find(|e| e.name() == name)
        .ok_or_else(|| CliError::UnknownExperiment {
            name: name.to_string(),
        })
}

/// Runs the configured experiment and writes `report.json` (which lists
/// itself in the artifact manifest) into the output directory.
pub fn run_experiment(config: &RunConfig) -> Result<RunReport, CliError> {
    let experiment = find(&config.experiment)?;
    let out_dir = config.resolve_out_dir();
    let mut ctx = RunContext::new(config.seed, out_dir.clone())?;
    let started = Instant::now();
    let checks = experiment.run(&config.params, &mut ctx)?;
    let duration_seconds = started.elapsed().as_secs_f64();

    let mut artifacts = ctx.artifacts;
    artifacts.push("report.json".to_string());
    let passed = checks.iter().all(|c| c.pass);
    let report = RunReport {
        experiment: experiment.name().to_string(),
        seed: config.seed,
        params: config.params.clone(),
        checks,
        passed,
        duration_seconds,
        artifacts,
    };
    let report_path = out_dir.join("report.json");
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Config {
        reason: format!("serializing report: {e}"),
    })?;
    text.push('\n');
    std::fs::write(&report_path, text).map_err(|e| CliError::Io {
        path: report_path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(report)
}

/// Strictly parses an experiment's parameter block, tagging errors with
/// the experiment name.
pub(crate) fn params_for<T>(name: &str, value: &serde_json::Value) -> Result<T, CliError>
where
    T: serde::de::DeserializeOwned + Default,
{
    parse_params::<T>(value).map_err(|e| match e {
        CliError::Config { reason } => CliError::Config {
            reason: format!("{name} {reason}"),
        },
        other => other,
    })
}
