//! The full quadratic map: transfer-operator fixed point, Ulam densities
//! against the closed-form invariant law, Birkhoff averages, the Lyapunov
//! exponent, and sensitivity to initial conditions.

use flowlab_core::ergodic::{
    arcsine_bin_masses, arcsine_density, birkhoff_average, transfer_apply, ulam_invariant_density,
    UlamPartition,
};
use flowlab_core::maps::{build_system, logistic_lyapunov, sensitivity_probe, SystemSpec};
use flowlab_core::space::{Observable, StateVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::{Experiment, RunContext};
use crate::report::Check;
use crate::svg::{line_plot, Series};
use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub n_bins: usize,
    pub samples_per_bin: usize,
    pub birkhoff_n: usize,
    pub birkhoff_starts: usize,
    pub lyapunov_n: usize,
    pub transfer_points: usize,
    pub sensitivity_starts: usize,
    pub sensitivity_offset: f64,
    pub sensitivity_steps: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            n_bins: 512,
            samples_per_bin: 200,
            birkhoff_n: 1_000_000,
            birkhoff_starts: 3,
            lyapunov_n: 1_000_000,
            transfer_points: 200,
            sensitivity_starts: 50,
            sensitivity_offset: 1e-9,
            sensitivity_steps: 60,
        }
    }
}

/// Fraction of random starts whose orbit separates past 0.5 from a
/// microscopically offset twin within `steps` steps.
pub(crate) fn separation_fraction(
    starts: usize,
    offset: f64,
    steps: usize,
    seed: u64,
) -> Result<f64, CliError> {
    let system = build_system(&SystemSpec::Logistic)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut separated = 0usize;
    for _ in 0..starts {
        // Keep the offset twin inside [0, 1] and away from the fixed
        // endpoints.
        let x0 = 0.05 + 0.9 * rng.gen::<f64>();
        let probe = sensitivity_probe(
            system.as_ref(),
            &StateVector::scalar(x0),
            &[offset],
            steps,
            0.5,
        )?;
        if probe.first_exceed.is_some() {
            separated += 1;
        }
    }
    Ok(separated as f64 / starts as f64)
}

pub struct Logistic;

impl Experiment for Logistic {
    fn name(&self) -> &'static str {
        "logistic"
    }

    fn summary(&self) -> &'static str {
        "invariant density, time averages, and chaos diagnostics of 4x(1-x)"
    }

    fn run(
        &self,
        params: &serde_json::Value,
        ctx: &mut RunContext,
    ) -> Result<Vec<Check>, CliError> {
        let p: Params = super::params_for(self.name(), params)?;
        let system = build_system(&SystemSpec::Logistic)?;
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);

        // The closed-form invariant density is a fixed point of the
        // transfer operator pointwise.
        let mut worst_transfer: f64 = 0.0;
        let mut transfer_rows: Vec<Vec<f64>> = Vec::new();
        for _ in 0..p.transfer_points {
            let x = 0.01 + 0.98 * rng.gen::<f64>();
            let image = transfer_apply(|u| arcsine_density(u).expect("interior point"), x)?;
            let direct = arcsine_density(x)?;
            let gap = (image - direct).abs();
            worst_transfer = worst_transfer.max(gap);
            transfer_rows.push(vec![x, image, direct, gap]);
        }
        ctx.write_csv(
            "transfer.csv",
            &["x", "operator_image", "density", "gap"],
            &transfer_rows,
        )?;

        // Ulam discretization versus the exact bin masses.
        let partition = UlamPartition::new(p.n_bins)?;
        let ulam = ulam_invariant_density(partition, p.samples_per_bin, ctx.seed)?;
        let exact_masses = arcsine_bin_masses(&partition);
        let l1 = ulam.density.l1_distance(&exact_masses);
        let density_rows: Vec<Vec<f64>> = (0..p.n_bins)
            .map(|i| {
                let (lo, hi) = partition.edges(i);
                vec![
                    (lo + hi) / 2.0,
                    ulam.density.masses()[i],
                    exact_masses[i],
                    ulam.density.density(i),
                ]
            })
            .collect();
        ctx.write_csv(
            "density.csv",
            &["bin_center", "ulam_mass", "exact_mass", "ulam_density"],
            &density_rows,
        )?;
        ctx.write_svg(
            "density.svg",
            &line_plot(
                &format!("Ulam invariant density, {} bins", p.n_bins),
                "x",
                "density",
                &[
                    Series::line(
                        "ulam",
                        density_rows.iter().map(|r| (r[0], r[3])).collect(),
                    ),
                    Series::line(
                        "exact",
                        density_rows
                            .iter()
                            .map(|r| (r[0], r[2] * p.n_bins as f64))
                            .collect(),
                    ),
                ],
            ),
        )?;

        // Birkhoff averages of phi(x) = x from random starts.
        let phi = Observable::new("x", |s: &StateVector| s.get(0));
        let mut worst_birkhoff: f64 = 0.0;
        let mut birkhoff_rows: Vec<Vec<f64>> = Vec::new();
        for _ in 0..p.birkhoff_starts {
            let x0 = rng.gen::<f64>();
            let avg = birkhoff_average(system.as_ref(), &phi, &StateVector::scalar(x0), p.birkhoff_n)?;
            worst_birkhoff = worst_birkhoff.max((avg - 0.5).abs());
            birkhoff_rows.push(vec![x0, avg, (avg - 0.5).abs()]);
        }
        ctx.write_csv(
            "birkhoff.csv",
            &["x0", "average", "deviation_from_half"],
            &birkhoff_rows,
        )?;

        // Lyapunov exponent against ln 2.
        let lyap = logistic_lyapunov(rng.gen::<f64>(), p.lyapunov_n)?;
        let lyap_err = (lyap.value - std::f64::consts::LN_2).abs();

        // Exponential separation of nearby orbits.
        let fraction = separation_fraction(
            p.sensitivity_starts,
            p.sensitivity_offset,
            p.sensitivity_steps,
            ctx.seed ^ 0x5eed,
        )?;

        Ok(vec![
            Check::at_most("transfer_fixed_point_gap", worst_transfer, 1e-9),
            Check::at_most("ulam_l1_distance", l1, 0.1),
            Check::at_most("birkhoff_deviation", worst_birkhoff, 5e-3),
            Check::at_most("lyapunov_error", lyap_err, 0.01),
            Check::at_least("separation_fraction", fraction, 0.95),
        ])
    }
}
