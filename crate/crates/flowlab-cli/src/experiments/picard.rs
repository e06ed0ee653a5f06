//! Integral-equation solves of x' = F(x) for a few named fields, checking
//! the defect, the per-window contraction of iterate gaps, and (where a
//! closed form exists) the solution error.

use flowlab_core::picard::{solve_ivp_picard, PicardConfig, VectorField, WarmStart};
use flowlab_core::space::StateVector;
use serde::Deserialize;

use super::{Experiment, RunContext};
use crate::report::Check;
use crate::svg::{line_plot, Series};
use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// One of "decay" (x' = -x), "pendulum" (x' = sin x),
    /// "rotation2d" ((x, y)' = (-y, x)).
    pub field: String,
    pub horizon: f64,
    pub tol: f64,
    pub grid_step: f64,
    /// Initial state; defaults to the field's canonical start.
    pub s0: Option<Vec<f64>>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            field: "decay".to_string(),
            horizon: 5.0,
            tol: 1e-10,
            grid_step: 1e-3,
            s0: None,
        }
    }
}

struct Field {
    field: VectorField,
    default_s0: Vec<f64>,
    exact: Option<Box<dyn Fn(f64) -> Vec<f64>>>,
}

fn named_field(name: &str) -> Result<Field, CliError> {
    match name {
        "decay" => Ok(Field {
            field: VectorField::new(1.0, |s: &StateVector| StateVector::scalar(-s.get(0)))?,
            default_s0: vec![1.0],
            exact: Some(Box::new(|t| vec![(-t).exp()])),
        }),
        "pendulum" => Ok(Field {
            field: VectorField::new(1.0, |s: &StateVector| StateVector::scalar(s.get(0).sin()))?,
            default_s0: vec![1.0],
            exact: None,
        }),
        "rotation2d" => Ok(Field {
            field: VectorField::new(1.0, |s: &StateVector| {
                StateVector::pair(-s.get(1), s.get(0))
            })?,
            default_s0: vec![1.0, 0.0],
            exact: Some(Box::new(|t| vec![t.cos(), t.sin()])),
        }),
        other => Err(CliError::Config {
            reason: format!("unknown field '{other}'; use decay, pendulum, or rotation2d"),
        }),
    }
}

/// Worst ratio of successive iterate gaps across all windows. Ratios based
/// on a gap already below the stopping tolerance are skipped; such a gap
/// measures roundoff, not the operator.
pub(crate) fn worst_contraction_ratio(
    windows: &[flowlab_core::picard::WindowTrace],
    tol: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for w in windows {
        for pair in w.gaps.windows(2) {
            if pair[0] > tol {
                worst = worst.max(pair[1] / pair[0]);
            }
        }
    }
    worst
}

pub struct Picard;

impl Experiment for Picard {
    fn name(&self) -> &'static str {
        "picard"
    }

    fn summary(&self) -> &'static str {
        "solve x' = F(x) by window-chained fixed-point iteration"
    }

    fn run(
        &self,
        params: &serde_json::Value,
        ctx: &mut RunContext,
    ) -> Result<Vec<Check>, CliError> {
        let p: Params = super::params_for(self.name(), params)?;
        let named = named_field(&p.field)?;
        let s0 = StateVector::new(p.s0.clone().unwrap_or(named.default_s0))?;
        let cfg = PicardConfig {
            grid_step: p.grid_step,
            fixed_point_tol: p.tol,
            max_iterations: 200,
            window_factor: 0.5,
            warm_start: WarmStart::Constant,
        };
        let solution = solve_ivp_picard(&named.field, &s0, p.horizon, &cfg)?;

        let dim = s0.dim();
        let mut header: Vec<String> = vec!["t".to_string()];
        for i in 0..dim {
            header.push(format!("x{i}"));
        }
        if named.exact.is_some() {
            for i in 0..dim {
                header.push(format!("exact{i}"));
            }
            header.push("error".to_string());
        }
        let mut max_error: f64 = 0.0;
        let rows: Vec<Vec<f64>> = solution
            .trajectory
            .iter()
            .map(|(t, s)| {
                let mut row = vec![t];
                row.extend_from_slice(s.coords());
                if let Some(exact) = &named.exact {
                    let e = exact(t);
                    let err = s
                        .coords()
                        .iter()
                        .zip(&e)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0f64, f64::max);
                    max_error = max_error.max(err);
                    row.extend_from_slice(&e);
                    row.push(err);
                }
                row
            })
            .collect();
        let header_refs: Vec<&str> = header.iter().map(|h| h.as_str()).collect();
        ctx.write_csv("solution.csv", &header_refs, &rows)?;

        let gap_rows: Vec<Vec<f64>> = solution
            .windows
            .iter()
            .enumerate()
            .flat_map(|(w, trace)| {
                trace
                    .gaps
                    .iter()
                    .enumerate()
                    .map(move |(n, &g)| vec![w as f64, n as f64, g])
            })
            .collect();
        ctx.write_csv("gaps.csv", &["window", "iteration", "gap"], &gap_rows)?;

        let series: Vec<Series> = (0..dim)
            .map(|i| {
                Series::line(
                    format!("x{i}"),
                    solution.trajectory.iter().map(|(t, s)| (t, s.get(i))).collect(),
                )
            })
            .collect();
        ctx.write_svg(
            "solution.svg",
            &line_plot(&format!("x' = F(x), field {}", p.field), "t", "x", &series),
        )?;

        let mut checks = vec![
            Check::at_most("integral_defect", solution.residual, 1e-8),
            Check::at_most(
                "worst_gap_contraction_ratio",
                worst_contraction_ratio(&solution.windows, p.tol),
                cfg.window_factor + 1e-9,
            ),
        ];
        if named.exact.is_some() {
            checks.push(Check::at_most("max_solution_error", max_error, 1e-6));
        }
        Ok(checks)
    }
}
