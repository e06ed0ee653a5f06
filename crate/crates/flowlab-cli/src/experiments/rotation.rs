//! Circle rotation diagnostics: continued-fraction convergents against the
//! orbit's closest approaches, and the isometry property under a
//! microscopic perturbation.

use flowlab_core::maps::{
    convergents, golden_theta, sensitivity_probe, CircleState, RotationSystem, SystemSpec,
};
use flowlab_core::space::{circle_distance, StateVector};
use serde::Deserialize;

use super::{Experiment, RunContext};
use crate::report::Check;
use crate::svg::{line_plot, Series};
use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// Rotation number; defaults to the golden ratio conjugate.
    pub theta: Option<f64>,
    pub n_convergents: usize,
    pub orbit_points: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            theta: None,
            n_convergents: 20,
            orbit_points: 256,
        }
    }
}

pub struct Rotation;

impl Experiment for Rotation {
    fn name(&self) -> &'static str {
        "rotation"
    }

    fn summary(&self) -> &'static str {
        "convergent denominators as near-return times of the circle rotation"
    }

    fn run(
        &self,
        params: &serde_json::Value,
        ctx: &mut RunContext,
    ) -> Result<Vec<Check>, CliError> {
        let p: Params = super::params_for(self.name(), params)?;
        let theta = p.theta.unwrap_or_else(golden_theta);
        let sys = RotationSystem::new(theta)?;
        let start = CircleState::new(0.0)?;
        let cf = convergents(theta, p.n_convergents)?;

        // |theta q - p| < 1/q for every convergent, and the orbit at time q
        // comes back within 1/q of the start.
        let mut worst_quality: f64 = 0.0;
        let mut worst_return_excess: f64 = 0.0;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for c in &cf {
            let q = c.q as f64;
            let quality = (theta * q - c.p as f64).abs() * q;
            let angle = sys
                .orbit_angles(start)
                .nth(c.q as usize)
                .expect("orbit iterator is infinite");
            let return_dist = circle_distance(angle, start.angle());
            worst_quality = worst_quality.max(quality);
            worst_return_excess = worst_return_excess.max(return_dist * q);
            rows.push(vec![c.p as f64, q, quality, return_dist]);
        }
        ctx.write_csv(
            "convergents.csv",
            &["p", "q", "quality_q_times_error", "orbit_distance_at_q"],
            &rows,
        )?;

        let orbit: Vec<Vec<f64>> = sys
            .orbit_angles(start)
            .take(p.orbit_points)
            .enumerate()
            .map(|(n, a)| vec![n as f64, a])
            .collect();
        ctx.write_csv("orbit.csv", &["n", "angle"], &orbit)?;
        ctx.write_svg(
            "returns.svg",
            &line_plot(
                "closest approach at convergent denominators",
                "q",
                "q * distance(x_q, x_0)",
                &[Series::points(
                    "q * return distance",
                    rows.iter().map(|r| (r[1], r[1] * r[3])).collect(),
                )],
            ),
        )?;

        // The rotation is an isometry: a small offset never grows or decays.
        let system = flowlab_core::maps::build_system(&SystemSpec::Rotation { theta })?;
        let probe = sensitivity_probe(
            system.as_ref(),
            &StateVector::scalar(0.25),
            &[1e-6],
            128,
            0.5,
        )?;
        let drift = probe
            .separations
            .iter()
            .map(|&d| (d - probe.separations[0]).abs())
            .fold(0.0f64, f64::max);

        Ok(vec![
            Check::at_most("worst_convergent_quality", worst_quality, 1.0),
            Check::at_most("worst_return_distance_times_q", worst_return_excess, 1.0),
            Check::at_most("isometry_separation_drift", drift, 1e-15),
        ])
    }
}
