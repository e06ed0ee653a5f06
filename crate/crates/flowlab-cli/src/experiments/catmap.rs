//! The hyperbolic torus automorphism: eigenstructure, the exact Lyapunov
//! exponent, and correlation decay of smooth observables estimated over a
//! rank-1 lattice ensemble.

use flowlab_core::ergodic::{
    correlation_decay, lattice_avoids_frequencies, MuSampler, DEFAULT_LATTICE_GENERATOR,
};
use flowlab_core::maps::{build_system, cat_eigen, cat_lyapunov, cat_unstable_direction, SystemSpec};
use flowlab_core::space::{Observable, StateVector};
use serde::Deserialize;

use super::{Experiment, RunContext};
use crate::report::Check;
use crate::svg::{line_plot, Series};
use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub n_max: usize,
    pub ensemble: usize,
    pub lattice_generator: u64,
    /// Lags whose correlations must sit at the noise floor.
    pub quiet_from: usize,
    pub quiet_bound: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            n_max: 40,
            ensemble: 100_000,
            lattice_generator: DEFAULT_LATTICE_GENERATOR,
            quiet_from: 20,
            quiet_bound: 1e-3,
        }
    }
}

/// Integer frequency of cos(2 pi x) composed with n steps of the map,
/// which the lattice must not alias for the estimates to be trusted.
pub(crate) fn pushed_frequencies(n_max: usize) -> Vec<(i64, i64)> {
    // One step maps the frequency row (a, b) of cos(2 pi (a x + b y))
    // to (a + 2b, a + b).
    let mut out = Vec::with_capacity(n_max + 1);
    let (mut a, mut b) = (1i64, 0i64);
    for _ in 0..=n_max {
        out.push((a, b));
        (a, b) = (a + 2 * b, a + b);
    }
    out
}

pub struct CatMap;

impl Experiment for CatMap {
    fn name(&self) -> &'static str {
        "catmap"
    }

    fn summary(&self) -> &'static str {
        "eigenstructure and correlation decay of the torus automorphism"
    }

    fn run(
        &self,
        params: &serde_json::Value,
        ctx: &mut RunContext,
    ) -> Result<Vec<Check>, CliError> {
        let p: Params = super::params_for(self.name(), params)?;
        let (lambda_plus, lambda_minus) = cat_eigen();
        let sqrt2 = 2.0f64.sqrt();
        let eigen_err = (lambda_plus - (1.0 + sqrt2))
            .abs()
            .max((lambda_minus - (1.0 - sqrt2)).abs());
        let direction = cat_unstable_direction();
        ctx.write_csv(
            "eigen.csv",
            &["lambda_plus", "lambda_minus", "unstable_x", "unstable_y"],
            &[vec![lambda_plus, lambda_minus, direction.0, direction.1]],
        )?;

        // Certify the lattice integrates every frequency the observables
        // visit before trusting its averages.
        let frequencies = pushed_frequencies(p.n_max);
        let mut watched = frequencies.clone();
        watched.push((0, 1));
        let lattice_ok =
            lattice_avoidance_ok(p.lattice_generator, p.ensemble, &watched);

        let system = build_system(&SystemSpec::Cat)?;
        let phi = Observable::new("sin_2pi_x", |s: &StateVector| {
            (2.0 * std::f64::consts::PI * s.get(0)).sin()
        });
        let psi = Observable::new("sin_2pi_y", |s: &StateVector| {
            (2.0 * std::f64::consts::PI * s.get(1)).sin()
        });
        let sampler = MuSampler::TorusLattice {
            generator: p.lattice_generator,
        };
        let series = correlation_decay(
            system.as_ref(),
            &phi,
            &psi,
            &sampler,
            p.n_max,
            p.ensemble,
            ctx.seed,
        )?;

        let rows: Vec<Vec<f64>> = series
            .values
            .iter()
            .zip(&series.std_errors)
            .enumerate()
            .map(|(n, (&c, &se))| vec![n as f64, c, se])
            .collect();
        ctx.write_csv("correlations.csv", &["n", "c_n", "std_error"], &rows)?;
        ctx.write_svg(
            "correlations.svg",
            &line_plot(
                "correlation of sin(2 pi x) with sin(2 pi y)",
                "n",
                "|C_n|",
                &[Series::line(
                    "|C_n|",
                    rows.iter().map(|r| (r[0], r[1].abs())).collect(),
                )],
            ),
        )?;

        let quiet_worst = series.values[p.quiet_from.min(series.values.len() - 1)..]
            .iter()
            .fold(0.0f64, |acc, &c| acc.max(c.abs()));

        Ok(vec![
            Check::at_most("eigenvalue_error", eigen_err, 1e-12),
            Check::exactly("lyapunov_is_log_eigenvalue", cat_lyapunov(), lambda_plus.ln()),
            Check::holds("lattice_avoids_observable_frequencies", lattice_ok),
            Check::at_most("late_correlation_magnitude", quiet_worst, p.quiet_bound),
        ])
    }
}

fn lattice_avoidance_ok(generator: u64, ensemble: usize, watched: &[(i64, i64)]) -> bool {
    // Differences of watched frequencies also appear in the estimator
    // through the product phi(x_n) psi(x_0).
    let mut all = watched.to_vec();
    for &(a, b) in watched {
        all.push((a, b + 1));
        all.push((a, b - 1));
    }
    all.retain(|&f| f != (0, 0));
    lattice_avoids_frequencies(generator, ensemble, &all)
}
