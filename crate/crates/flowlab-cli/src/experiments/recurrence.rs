//! Recurrence statistics: almost-every-point returns for the measure-
//! preserving rotation, the identity map's immediate returns, and a mean
//! return time compared against the reciprocal measure of the target set.

use flowlab_core::ergodic::{first_return, mean_return_time, recurrence_statistics, MuSampler};
use flowlab_core::maps::{build_system, golden_theta, SystemSpec};
use serde::Deserialize;

use super::{Experiment, RunContext};
use crate::report::Check;
use crate::svg::{line_plot, Series};
use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub theta: Option<f64>,
    pub epsilon: f64,
    pub n_max: usize,
    pub samples: usize,
    /// Arc [0, set_length) used for the mean-return comparison.
    pub set_length: f64,
    pub set_samples: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            theta: None,
            epsilon: 0.01,
            n_max: 100_000,
            samples: 100,
            set_length: 0.25,
            set_samples: 200,
        }
    }
}

pub struct Recurrence;

impl Experiment for Recurrence {
    fn name(&self) -> &'static str {
        "recurrence"
    }

    fn summary(&self) -> &'static str {
        "return-time statistics of the rotation and the identity map"
    }

    fn run(
        &self,
        params: &serde_json::Value,
        ctx: &mut RunContext,
    ) -> Result<Vec<Check>, CliError> {
        let p: Params = super::params_for(self.name(), params)?;
        let theta = p.theta.unwrap_or_else(golden_theta);
        let rotation = build_system(&SystemSpec::Rotation { theta })?;
        let sampler = MuSampler::UniformIid { dim: 1 };

        let report =
            recurrence_statistics(rotation.as_ref(), &sampler, p.epsilon, p.n_max, p.samples, ctx.seed)?;
        ctx.write_json("recurrence.json", &report)?;

        let starts = sampler.samples(p.samples, ctx.seed)?;
        let rows: Vec<Vec<f64>> = starts
            .iter()
            .enumerate()
            .map(|(i, start)| {
                let ret = first_return(rotation.as_ref(), start, p.epsilon, p.n_max)
                    .map(|n| n as f64)
                    .unwrap_or(-1.0);
                vec![i as f64, start.get(0), ret]
            })
            .collect();
        ctx.write_csv("first_returns.csv", &["sample", "start", "first_return"], &rows)?;
        ctx.write_svg(
            "first_returns.svg",
            &line_plot(
                "first return to the epsilon-ball around the start",
                "start angle",
                "first return time",
                &[Series::points(
                    "first return",
                    rows.iter().map(|r| (r[1], r[2])).collect(),
                )],
            ),
        )?;

        // The identity map returns at the first step from everywhere, so
        // the conditioned mean is exactly one.
        let identity = build_system(&SystemSpec::Identity { dim: 1 })?;
        let identity_mean = mean_return_time(
            identity.as_ref(),
            &sampler,
            &|_| true,
            16,
            p.samples,
            ctx.seed,
        )?;

        // Mean return to an arc: the reciprocal of its measure.
        let set_length = p.set_length;
        let kac = mean_return_time(
            rotation.as_ref(),
            &sampler,
            &move |s| s.get(0) < set_length,
            p.n_max,
            p.set_samples,
            ctx.seed,
        )?;
        ctx.write_json("mean_returns.json", &(&identity_mean, &kac))?;

        Ok(vec![
            Check::exactly("rotation_fraction_recurrent", report.fraction_recurrent, 1.0),
            Check::exactly("identity_mean_return", identity_mean.mean, 1.0),
            Check::at_most(
                "arc_mean_return_vs_reciprocal_measure",
                (kac.mean - 1.0 / p.set_length).abs(),
                0.5,
            ),
        ])
    }
}
