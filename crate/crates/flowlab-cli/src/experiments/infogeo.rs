//! Fisher geometry of the simplex: gradient tangency, the closed-form
//! metric gradient against a finite-difference raise, and natural-gradient
//! descent of the divergence.

use flowlab_core::infogeo::{
    finite_difference_metric_gradient, fisher_gradient_kl, gradient_flow, kl_ambient, SimplexPoint,
};
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
    pub dims: Vec<usize>,
    pub random_pairs: usize,
    pub fd_step: f64,
    pub flow_instances: usize,
    pub flow_step: f64,
    pub flow_max_steps: usize,
    pub flow_tol: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            dims: vec![2, 3, 5],
            random_pairs: 100,
            fd_step: 1e-5,
            flow_instances: 20,
            flow_step: 0.5,
            flow_max_steps: 10_000,
            flow_tol: 1e-8,
        }
    }
}

pub(crate) fn random_interior_point(rng: &mut ChaCha8Rng, dim: usize) -> SimplexPoint {
    // Bounded away from the boundary so finite differences stay inside.
    let weights: Vec<f64> = (0..dim).map(|_| 0.1 + rng.gen::<f64>()).collect();
    SimplexPoint::normalized(weights).expect("positive weights normalize")
}

pub struct InfoGeo;

impl Experiment for InfoGeo {
    fn name(&self) -> &'static str {
        "infogeo"
    }

    fn summary(&self) -> &'static str {
        "Fisher metric gradients and natural-gradient descent on the simplex"
    }

    fn run(
        &self,
        params: &serde_json::Value,
        ctx: &mut RunContext,
    ) -> Result<Vec<Check>, CliError> {
        let p: Params = super::params_for(self.name(), params)?;
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);

        let mut worst_tangency: f64 = 0.0;
        let mut worst_fd_gap: f64 = 0.0;
        let mut worst_at_target: f64 = 0.0;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for &dim in &p.dims {
            for pair in 0..p.random_pairs {
                let point = random_interior_point(&mut rng, dim);
                let target = random_interior_point(&mut rng, dim);
                let grad = fisher_gradient_kl(&point, &target)?;
                let tangency = grad.components().iter().sum::<f64>().abs();
                let fd = finite_difference_metric_gradient(
                    &|a, b| kl_ambient(a, b),
                    &point,
                    &target,
                    p.fd_step,
                )?;
                let fd_gap = grad
                    .components()
                    .iter()
                    .zip(fd.components())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                worst_tangency = worst_tangency.max(tangency);
                worst_fd_gap = worst_fd_gap.max(fd_gap);
                rows.push(vec![dim as f64, pair as f64, tangency, fd_gap]);

                let at_target = fisher_gradient_kl(&target, &target)?;
                worst_at_target = worst_at_target.max(at_target.max_abs());
            }
        }
        ctx.write_csv(
            "gradients.csv",
            &["dim", "pair", "tangency", "fd_gap"],
            &rows,
        )?;

        // Natural-gradient descent must drive the divergence to zero
        // monotonically.
        let mut flows_converged = 0usize;
        let mut all_monotone = true;
        let mut first_flow: Option<Vec<(f64, f64)>> = None;
        for _ in 0..p.flow_instances {
            let dim = p.dims[rng.gen_range(0..p.dims.len())];
            let start = random_interior_point(&mut rng, dim);
            let target = random_interior_point(&mut rng, dim);
            let flow = gradient_flow(&start, &target, p.flow_step, p.flow_max_steps, p.flow_tol)?;
            if flow.final_divergence() < p.flow_tol {
                flows_converged += 1;
            }
            all_monotone &= flow.divergences.windows(2).all(|w| w[1] < w[0]);
            if first_flow.is_none() {
                first_flow = Some(
                    flow.divergences
                        .iter()
                        .enumerate()
                        .map(|(i, &d)| (i as f64, d.max(1e-300).ln()))
                        .collect(),
                );
            }
        }
        if let Some(points) = first_flow {
            let rows: Vec<Vec<f64>> = points.iter().map(|&(s, d)| vec![s, d]).collect();
            ctx.write_csv("flow.csv", &["step", "ln_divergence"], &rows)?;
            ctx.write_svg(
                "flow.svg",
                &line_plot(
                    "natural-gradient descent of D(p || q)",
                    "step",
                    "ln D",
                    &[Series::line("ln D", points)],
                ),
            )?;
        }

        Ok(vec![
            Check::at_most("gradient_tangency", worst_tangency, 1e-10),
            Check::at_most("formula_vs_finite_difference", worst_fd_gap, 1e-6),
            Check::exactly("gradient_at_target", worst_at_target, 0.0),
            Check::holds(
                "all_flows_converged",
                flows_converged == p.flow_instances,
            ),
            Check::holds("divergence_strictly_decreasing", all_monotone),
        ])
    }
}
