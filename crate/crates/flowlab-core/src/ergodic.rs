//! Measure-level analysis of the model systems: the arcsine invariant
//! density of the logistic map and its transfer operator, Ulam-style
//! invariant-density estimation, Birkhoff averages, correlation decay with
//! Hölder norms, and Poincaré recurrence statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::maps::{logistic_preimages, logistic_step_unchecked, DiscreteSystem};
use crate::numeric::{fit_line, CompensatedSum};
use crate::space::{Observable, StateVector};

#[derive(Debug, Error)]
pub enum ErgodicError {
    #[error("{what} = {value} lies outside {domain}")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("{reason}")]
    InvalidArgument { reason: &'static str },
    #[error("power iteration did not reach 1e-12 in {sweeps} sweeps (last delta {delta:e})")]
    PowerIterationFailed { sweeps: usize, delta: f64 },
    #[error("bin masses sum to {sum}, expected 1 within 1e-12")]
    UnnormalizedMasses { sum: f64 },
    #[error("lattice generator {generator} shares a factor with the point count {count}")]
    BadLatticeGenerator { generator: u64, count: usize },
    #[error("sampler produces dimension {expected}, system needs {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Density h(x) = 1 / (pi sqrt(x(1-x))) of the arcsine law, the invariant
/// measure of the logistic map.
pub fn arcsine_density(x: f64) -> Result<f64, ErgodicError> {
    if !(x > 0.0 && x < 1.0) {
        return Err(ErgodicError::OutOfDomain {
            what: "x",
            value: x,
            domain: "(0, 1)",
        });
    }
    Ok(1.0 / (std::f64::consts::PI * (x * (1.0 - x)).sqrt()))
}

/// Distribution function of the arcsine law, (2/pi) asin(sqrt(x)).
pub fn arcsine_cdf(x: f64) -> Result<f64, ErgodicError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(ErgodicError::OutOfDomain {
            what: "x",
            value: x,
            domain: "[0, 1]",
        });
    }
    Ok(2.0 / std::f64::consts::PI * x.sqrt().asin())
}

/// Quantile function of the arcsine law: x = sin^2(pi u / 2). Exact inverse
/// of [`arcsine_cdf`]; drawing u uniformly yields arcsine-distributed x with
/// no burn-in.
pub fn arcsine_inverse_cdf(u: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&u));
    let s = (std::f64::consts::PI * u / 2.0).sin();
    (s * s).clamp(0.0, 1.0)
}

/// One application of the transfer operator of T(x) = 4x(1-x):
///
/// ```text
/// (L phi)(x) = sum over preimages y of phi(y) / |T'(y)|
/// ```
///
/// with the honest derivative T'(y) = 4 - 8y, so |T'(y)| = 4 sqrt(1-x) at
/// both preimages y = (1 +- sqrt(1-x))/2. With this weight the arcsine
/// density is a genuine fixed point, L h = h; the halved weight
/// 2 sqrt(1-x) sometimes quoted for this operator would make L h = 2h and
/// fail the fixed-point check.
pub fn transfer_apply(phi: impl Fn(f64) -> f64, x: f64) -> Result<f64, ErgodicError> {
    if !(x > 0.0 && x < 1.0) {
        return Err(ErgodicError::OutOfDomain {
            what: "x",
            value: x,
            domain: "(0, 1)",
        });
    }
    let (y_minus, y_plus) = logistic_preimages(x).expect("x in (0,1) is in the preimage domain");
    let weight = 4.0 * (1.0 - x).sqrt();
    Ok((phi(y_minus) + phi(y_plus)) / weight)
}

/// Equal-width partition of [0, 1] into n_bins cells.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct UlamPartition {
    n_bins: usize,
}

impl UlamPartition {
    pub fn new(n_bins: usize) -> Result<Self, ErgodicError> {
        if n_bins < 2 {
            return Err(ErgodicError::InvalidArgument {
                reason: "UlamPartition needs at least 2 bins",
            });
        }
        Ok(Self { n_bins })
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn width(&self) -> f64 {
        1.0 / self.n_bins as f64
    }

    /// Index of the bin containing x; the right endpoint 1.0 belongs to the
    /// last bin.
    pub fn bin_of(&self, x: f64) -> usize {
        debug_assert!((0.0..=1.0).contains(&x));
        ((x * self.n_bins as f64) as usize).min(self.n_bins - 1)
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        let n = self.n_bins as f64;
        (i as f64 / n, (i + 1) as f64 / n)
    }
}

/// Probability masses per partition cell.
#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalDensity {
    partition: UlamPartition,
    bin_masses: Vec<f64>,
}

impl EmpiricalDensity {
    pub fn new(partition: UlamPartition, bin_masses: Vec<f64>) -> Result<Self, ErgodicError> {
        if bin_masses.len() != partition.n_bins() {
            return Err(ErgodicError::InvalidArgument {
                reason: "one mass per bin required",
            });
        }
        if bin_masses.iter().any(|m| !(*m >= 0.0)) {
            return Err(ErgodicError::InvalidArgument {
                reason: "bin masses must be nonnegative",
            });
        }
        let sum: f64 = bin_masses.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(ErgodicError::UnnormalizedMasses { sum });
        }
        Ok(Self {
            partition,
            bin_masses,
        })
    }

    pub fn partition(&self) -> UlamPartition {
        self.partition
    }

    pub fn masses(&self) -> &[f64] {
        &self.bin_masses
    }

    /// Piecewise-constant density value on bin i (mass over width).
    pub fn density(&self, i: usize) -> f64 {
        self.bin_masses[i] / self.partition.width()
    }

    /// L1 distance between the two mass vectors, as measures on the
    /// partition.
    pub fn l1_distance(&self, other_masses: &[f64]) -> f64 {
        assert_eq!(self.bin_masses.len(), other_masses.len());
        self.bin_masses
            .iter()
            .zip(other_masses)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// Arcsine-law mass of every partition cell, by CDF differences.
pub fn arcsine_bin_masses(partition: &UlamPartition) -> Vec<f64> {
    (0..partition.n_bins())
        .map(|i| {
            let (lo, hi) = partition.edges(i);
            arcsine_cdf(hi).expect("edge in [0,1]") - arcsine_cdf(lo).expect("edge in [0,1]")
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct UlamResult {
    pub density: EmpiricalDensity,
    /// Power-iteration sweeps used to reach the 1e-12 stationary tolerance.
    pub sweeps: usize,
    pub seed: u64,
}

/// Estimates the invariant density of the logistic map by Ulam's method:
/// each bin is sampled with stratified uniform draws, the image bin counts
/// form a row-stochastic transition matrix, and its stationary distribution
/// is found by power iteration to an L1 increment of 1e-12.
///
/// Bin i draws from an rng stream indexed by i on the given seed, so the
/// matrix is reproducible and independent of any parallel scheduling.
pub fn ulam_invariant_density(
    partition: UlamPartition,
    samples_per_bin: usize,
    seed: u64,
) -> Result<UlamResult, ErgodicError> {
    if samples_per_bin < 100 {
        return Err(ErgodicError::InvalidArgument {
            reason: "ulam_invariant_density needs at least 100 samples per bin",
        });
    }
    let n = partition.n_bins();
    let m = samples_per_bin as f64;

    // Sparse row-stochastic transition matrix. The logistic image of one
    // bin is an interval of length at most 4/n, so rows stay short.
    let mut rows: Vec<Vec<(u32, f64)>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut counts: Vec<(u32, u32)> = Vec::new();
        for j in 0..samples_per_bin {
            let u = (j as f64 + rng.gen::<f64>()) / m;
            let x = (i as f64 + u) / n as f64;
            let target = partition.bin_of(logistic_step_unchecked(x.clamp(0.0, 1.0))) as u32;
            match counts.iter_mut().find(|(b, _)| *b == target) {
                Some((_, c)) => *c += 1,
                None => counts.push((target, 1)),
            }
        }
        rows.push(
            counts
                .into_iter()
                .map(|(b, c)| (b, c as f64 / m))
                .collect(),
        );
    }

    // Power iteration for the stationary row vector pi = pi P.
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0f64; n];
    let max_sweeps = 100_000usize;
    for sweep in 1..=max_sweeps {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in rows.iter().enumerate() {
            let w = pi[i];
            for &(j, p) in row {
                next[j as usize] += w * p;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let delta: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if delta <= 1e-12 {
            let total: f64 = pi.iter().sum();
            pi.iter_mut().for_each(|v| *v /= total);
            let density = EmpiricalDensity::new(partition, pi)?;
            return Ok(UlamResult {
                density,
                sweeps: sweep,
                seed,
            });
        }
        if sweep == max_sweeps {
            return Err(ErgodicError::PowerIterationFailed {
                sweeps: sweep,
                delta,
            });
        }
    }
    unreachable!("loop either returns or errors at max_sweeps")
}

/// Time average (1/n) sum of phi over the first n orbit points x_0..x_{n-1}.
///
/// The sum is taken over compensated deviations from phi(x_0), which keeps
/// a constant observable's average exactly equal to its value and bounds
/// rounding by the observable's range rather than its magnitude.
pub fn birkhoff_average(
    system: &dyn DiscreteSystem,
    phi: &Observable,
    x0: &StateVector,
    n: usize,
) -> Result<f64, ErgodicError> {
    if n == 0 {
        return Err(ErgodicError::InvalidArgument {
            reason: "birkhoff_average needs n >= 1",
        });
    }
    if x0.dim() != system.dim() {
        return Err(ErgodicError::DimensionMismatch {
            expected: system.dim(),
            got: x0.dim(),
        });
    }
    let mut base = 0.0f64;
    let mut deviations = CompensatedSum::new();
    system.visit_orbit(x0, n - 1, &mut |k, s| {
        let v = phi.apply(s);
        if k == 0 {
            base = v;
        } else {
            deviations.add(v - base);
        }
    });
    Ok(base + deviations.value() / n as f64)
}

/// Grid approximation of the beta-Hölder norm
/// sup |phi(x)-phi(y)| / |x-y|^beta + sup |phi|, maximized over all grid
/// pairs. A lower bound for the true norm; it converges from below as the
/// grid refines.
pub fn holder_norm(phi: &Observable, beta: f64, grid: &[f64]) -> Result<f64, ErgodicError> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(ErgodicError::InvalidArgument {
            reason: "holder_norm needs beta in (0, 1]",
        });
    }
    let mut distinct = grid.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(ErgodicError::InvalidArgument {
            reason: "holder_norm needs at least 2 distinct grid points",
        });
    }
    let values: Vec<f64> = distinct
        .iter()
        .map(|&x| phi.apply(&StateVector::scalar(x)))
        .collect();
    let sup: f64 = values.iter().fold(0.0, |acc, v| acc.max(v.abs()));
    let mut quotient: f64 = 0.0;
    for i in 0..distinct.len() {
        for j in i + 1..distinct.len() {
            let dx = (distinct[j] - distinct[i]).abs();
            let dv = (values[j] - values[i]).abs();
            quotient = quotient.max(dv / dx.powf(beta));
        }
    }
    Ok(quotient + sup)
}

/// Default rank-1 lattice generator for ensembles on the torus, the odd
/// coprime integer nearest 10^6 times the golden ratio.
pub const DEFAULT_LATTICE_GENERATOR: u64 = 618_033;

/// Sampling scheme for drawing ensembles from an invariant measure.
#[derive(Clone, Copy, Debug, Serialize)]
pub enum MuSampler {
    /// Arcsine law on [0, 1] via the exact inverse CDF applied to
    /// jittered-stratified uniforms (one draw per stratum).
    ArcsineStratified,
    /// Uniform measure on the 2-torus via a randomly shifted rank-1 lattice
    /// {k (1, generator) / count} + shift. The shift keeps the estimator
    /// unbiased; the lattice collapses the variance for smooth integrands.
    TorusLattice { generator: u64 },
    /// Independent uniforms on [0, 1)^dim.
    UniformIid { dim: usize },
}

impl MuSampler {
    pub fn dim(&self) -> usize {
        match self {
            MuSampler::ArcsineStratified => 1,
            MuSampler::TorusLattice { .. } => 2,
            MuSampler::UniformIid { dim } => *dim,
        }
    }

    /// Streams `count` sample points to `f` as coordinate slices.
    /// Deterministic in (count, seed).
    pub fn visit(
        &self,
        count: usize,
        seed: u64,
        f: &mut dyn FnMut(&[f64]),
    ) -> Result<(), ErgodicError> {
        if count == 0 {
            return Err(ErgodicError::InvalidArgument {
                reason: "sampler count must be at least 1",
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            MuSampler::ArcsineStratified => {
                let m = count as f64;
                for j in 0..count {
                    let u = (j as f64 + rng.gen::<f64>()) / m;
                    f(&[arcsine_inverse_cdf(u)]);
                }
            }
            MuSampler::TorusLattice { generator } => {
                if gcd(*generator as u128, count as u128) != 1 {
                    return Err(ErgodicError::BadLatticeGenerator {
                        generator: *generator,
                        count,
                    });
                }
                let shift_x: f64 = rng.gen();
                let shift_y: f64 = rng.gen();
                let n = count as u128;
                let g = *generator as u128;
                for k in 0..count {
                    let kx = k as f64 / count as f64;
                    let ky = ((k as u128 * g) % n) as f64 / count as f64;
                    f(&[
                        crate::maps::wrap_unit(kx + shift_x),
                        crate::maps::wrap_unit(ky + shift_y),
                    ]);
                }
            }
            MuSampler::UniformIid { dim } => {
                let mut point = vec![0.0f64; *dim];
                for _ in 0..count {
                    for c in point.iter_mut() {
                        *c = rng.gen();
                    }
                    f(&point);
                }
            }
        }
        Ok(())
    }

    /// Materialized sample list; prefer [`MuSampler::visit`] for large
    /// ensembles.
    pub fn samples(&self, count: usize, seed: u64) -> Result<Vec<StateVector>, ErgodicError> {
        let mut out = Vec::with_capacity(count);
        self.visit(count, seed, &mut |coords| {
            out.push(StateVector::new(coords.to_vec()).expect("samplers emit finite points"));
        })?;
        Ok(out)
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Verifies the rank-1 lattice {k (1, generator)/count} integrates a set of
/// integer-frequency characters exactly: a frequency (m1, m2) is aliased
/// (estimated wrong by order 1) iff m1 + generator * m2 = 0 mod count. Used
/// by correlation experiments to certify their frequency content before
/// trusting lattice averages.
pub fn lattice_avoids_frequencies(
    generator: u64,
    count: usize,
    frequencies: &[(i64, i64)],
) -> bool {
    let n = count as i128;
    let g = generator as i128;
    frequencies.iter().all(|&(m1, m2)| {
        let r = (m1 as i128 + g * m2 as i128).rem_euclid(n);
        r != 0
    })
}

/// Monte-Carlo correlation estimates C_n for n = 0..n_max with plug-in
/// standard errors and an exponential fit over the lags that rise above
/// the noise floor.
#[derive(Clone, Debug, Serialize)]
pub struct CorrelationSeries {
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// exp(slope) of the ln|C_n| fit, clamped into (0, 1]; None when fewer
    /// than 5 lags exceed 3 standard errors.
    pub fitted_rho: Option<f64>,
    pub fitted_c: Option<f64>,
    pub lags_in_fit: usize,
    pub ensemble: usize,
}

/// Estimates C_n = E[phi(x_n) psi(x_0)] - E[phi(x_n)] E[psi(x_0)] over an
/// ensemble of starts drawn from `sampler` (which must draw from an
/// invariant measure for the estimates to mean anything).
///
/// Standard errors are the iid plug-in values; for the stratified and
/// lattice samplers the true sampling error is smaller, so the errors are
/// conservative. The decay fit uses lags n >= 1 with |C_n| > 3 se and
/// reports rho only when at least 5 such lags exist.
pub fn correlation_decay(
    system: &dyn DiscreteSystem,
    phi: &Observable,
    psi: &Observable,
    sampler: &MuSampler,
    n_max: usize,
    ensemble: usize,
    seed: u64,
) -> Result<CorrelationSeries, ErgodicError> {
    if n_max == 0 {
        return Err(ErgodicError::InvalidArgument {
            reason: "correlation_decay needs n_max >= 1",
        });
    }
    if ensemble < 100 {
        return Err(ErgodicError::InvalidArgument {
            reason: "correlation_decay needs an ensemble of at least 100",
        });
    }
    if sampler.dim() != system.dim() {
        return Err(ErgodicError::DimensionMismatch {
            expected: system.dim(),
            got: sampler.dim(),
        });
    }

    let lags = n_max + 1;
    let mut sum_prod = vec![CompensatedSum::new(); lags];
    let mut sum_prod_sq = vec![CompensatedSum::new(); lags];
    let mut sum_phi = vec![CompensatedSum::new(); lags];
    let mut sum_psi = CompensatedSum::new();

    sampler.visit(ensemble, seed, &mut |coords| {
        let start = StateVector::new(coords.to_vec()).expect("samplers emit finite points");
        let psi0 = psi.apply(&start);
        sum_psi.add(psi0);
        system.visit_orbit(&start, n_max, &mut |k, s| {
            let p = phi.apply(s);
            let prod = p * psi0;
            sum_phi[k].add(p);
            sum_prod[k].add(prod);
            sum_prod_sq[k].add(prod * prod);
        });
    })?;

    let n = ensemble as f64;
    let mean_psi = sum_psi.value() / n;
    let mut values = Vec::with_capacity(lags);
    let mut std_errors = Vec::with_capacity(lags);
    for k in 0..lags {
        let mean_prod = sum_prod[k].value() / n;
        let mean_phi = sum_phi[k].value() / n;
        values.push(mean_prod - mean_phi * mean_psi);
        let var_prod = (sum_prod_sq[k].value() / n - mean_prod * mean_prod).max(0.0);
        std_errors.push((var_prod / n).sqrt());
    }

    let fit_points: Vec<(f64, f64)> = (1..lags)
        .filter(|&k| values[k].abs() > 3.0 * std_errors[k] && values[k] != 0.0)
        .map(|k| (k as f64, values[k].abs().ln()))
        .collect();
    let (fitted_rho, fitted_c) = if fit_points.len() >= 5 {
        match fit_line(&fit_points) {
            Some((slope, intercept)) => {
                (Some(slope.exp().min(1.0)), Some(intercept.exp()))
            }
            None => (None, None),
        }
    } else {
        (None, None)
    };

    Ok(CorrelationSeries {
        values,
        std_errors,
        fitted_rho,
        fitted_c,
        lags_in_fit: fit_points.len(),
        ensemble,
    })
}

/// First-return statistics over a sampled ensemble.
#[derive(Clone, Debug, Serialize)]
pub struct RecurrenceReport {
    pub epsilon: f64,
    pub n_max: usize,
    /// Fraction of sampled starts whose orbit re-enters the epsilon-ball
    /// around the start within n_max steps.
    pub fraction_recurrent: f64,
    /// Mean first-return time over the recurrent starts only; None when no
    /// start returned.
    pub mean_first_return: Option<f64>,
    pub samples: usize,
}

/// For each sampled start, scans integer iterates 1..n_max for the first
/// return to within `epsilon` of the start (in the system's own metric).
pub fn recurrence_statistics(
    system: &dyn DiscreteSystem,
    sampler: &MuSampler,
    epsilon: f64,
    n_max: usize,
    samples: usize,
    seed: u64,
) -> Result<RecurrenceReport, ErgodicError> {
    if !(epsilon > 0.0) {
        return Err(ErgodicError::InvalidArgument {
            reason: "recurrence_statistics needs epsilon > 0",
        });
    }
    if samples == 0 || n_max == 0 {
        return Err(ErgodicError::InvalidArgument {
            reason: "recurrence_statistics needs samples >= 1 and n_max >= 1",
        });
    }
    if sampler.dim() != system.dim() {
        return Err(ErgodicError::DimensionMismatch {
            expected: system.dim(),
            got: sampler.dim(),
        });
    }
    let mut returned = 0usize;
    let mut total_return_time = 0u128;
    sampler.visit(samples, seed, &mut |coords| {
        let start = StateVector::new(coords.to_vec()).expect("samplers emit finite points");
        if let Some(n) = first_return(system, &start, epsilon, n_max) {
            returned += 1;
            total_return_time += n as u128;
        }
    })?;
    Ok(RecurrenceReport {
        epsilon,
        n_max,
        fraction_recurrent: returned as f64 / samples as f64,
        mean_first_return: (returned > 0)
            .then(|| total_return_time as f64 / returned as f64),
        samples,
    })
}

/// Smallest n in 1..=n_max with distance(x_n, x_0) < epsilon, if any.
pub fn first_return(
    system: &dyn DiscreteSystem,
    start: &StateVector,
    epsilon: f64,
    n_max: usize,
) -> Option<usize> {
    let mut found: Option<usize> = None;
    // visit_orbit has no early exit; scan in blocks to avoid running the
    // full horizon when the return happens early.
    let block = 256usize.min(n_max);
    let mut base_state = start.clone();
    let mut offset = 0usize;
    while offset < n_max && found.is_none() {
        let steps = block.min(n_max - offset);
        let mut last = base_state.clone();
        system.visit_orbit(&base_state, steps, &mut |k, s| {
            if k == steps {
                last = s.clone();
            }
            if found.is_none() && offset + k >= 1 && system.distance(s, start) < epsilon {
                found = Some(offset + k);
            }
        });
        base_state = last;
        offset += steps;
    }
    found
}

#[derive(Clone, Debug, Serialize)]
pub struct MeanReturnReport {
    /// Mean first re-entry time of orbits started inside the set,
    /// conditioned on re-entry within the horizon.
    pub mean: f64,
    pub returned: usize,
    pub samples: usize,
}

/// Kac-style mean return time to a set: starts are drawn from `sampler`
/// conditioned on lying in the set (rejection), then each orbit is scanned
/// for its first step 1..n_max back inside. For an ergodic
/// measure-preserving map the mean is 1 over the set's measure.
pub fn mean_return_time(
    system: &dyn DiscreteSystem,
    sampler: &MuSampler,
    set: &dyn Fn(&StateVector) -> bool,
    n_max: usize,
    samples: usize,
    seed: u64,
) -> Result<MeanReturnReport, ErgodicError> {
    if samples == 0 || n_max == 0 {
        return Err(ErgodicError::InvalidArgument {
            reason: "mean_return_time needs samples >= 1 and n_max >= 1",
        });
    }
    if sampler.dim() != system.dim() {
        return Err(ErgodicError::DimensionMismatch {
            expected: system.dim(),
            got: sampler.dim(),
        });
    }
    let mut starts: Vec<StateVector> = Vec::with_capacity(samples);
    // Rejection-sample starts inside the set, drawing in chunks; bail if
    // the set looks empty under the sampler.
    let mut draw_seed = seed;
    let mut rounds = 0usize;
    while starts.len() < samples {
        sampler.visit(samples.max(1024), draw_seed, &mut |coords| {
            if starts.len() < samples {
                let s = StateVector::new(coords.to_vec()).expect("samplers emit finite points");
                if set(&s) {
                    starts.push(s);
                }
            }
        })?;
        draw_seed = draw_seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
        rounds += 1;
        if rounds > 1000 {
            return Err(ErgodicError::InvalidArgument {
                reason: "mean_return_time: sampler never hits the target set",
            });
        }
    }

    let mut returned = 0usize;
    let mut total = 0u128;
    for start in &starts {
        let mut hit: Option<usize> = None;
        let mut k_state = start.clone();
        let mut n = 0usize;
        while hit.is_none() && n < n_max {
            k_state = system.step(&k_state);
            n += 1;
            if set(&k_state) {
                hit = Some(n);
            }
        }
        if let Some(n) = hit {
            returned += 1;
            total += n as u128;
        }
    }
    if returned == 0 {
        return Err(ErgodicError::InvalidArgument {
            reason: "mean_return_time: no start returned within the horizon",
        });
    }
    Ok(MeanReturnReport {
        mean: total as f64 / returned as f64,
        returned,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{build_system, golden_theta, SystemSpec};

    #[test]
    fn arcsine_density_examples() {
        let h = arcsine_density(0.5).unwrap();
        assert!((h - 2.0 / std::f64::consts::PI).abs() < 1e-15);
        for &x in &[0.1, 0.25, 0.37, 0.49, 0.8] {
            let a = arcsine_density(x).unwrap();
            let b = arcsine_density(1.0 - x).unwrap();
            assert!((a - b).abs() < 1e-12, "asymmetric at {x}");
        }
        assert!(arcsine_density(0.0).is_err());
        assert!(arcsine_density(1.0).is_err());
    }

    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
        let m = 0.5 * (a + b);
        let simpson = |a: f64, b: f64| {
            let m = 0.5 * (a + b);
            (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
        };
        let whole = simpson(a, b);
        let halves = simpson(a, m) + simpson(m, b);
        if depth == 0 || (whole - halves).abs() < 15.0 * tol {
            halves
        } else {
            adaptive_simpson(f, a, m, tol / 2.0, depth - 1)
                + adaptive_simpson(f, m, b, tol / 2.0, depth - 1)
        }
    }

    #[test]
    fn density_integrates_to_cdf_differences() {
        let f = |x: f64| arcsine_density(x).unwrap();
        for (a, b) in [(0.1, 0.9), (0.25, 0.5), (0.02, 0.4)] {
            let quad = adaptive_simpson(&f, a, b, 1e-10, 30);
            let exact = arcsine_cdf(b).unwrap() - arcsine_cdf(a).unwrap();
            assert!((quad - exact).abs() < 1e-8, "[{a}, {b}]: {quad} vs {exact}");
        }
        // Total mass through the closed form.
        assert_eq!(arcsine_cdf(0.0).unwrap(), 0.0);
        assert!((arcsine_cdf(1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_cdf_inverts_cdf() {
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            let x = arcsine_inverse_cdf(u);
            let back = arcsine_cdf(x).unwrap();
            assert!((back - u).abs() < 1e-12, "u = {u}: round trip {back}");
        }
    }

    #[test]
    fn transfer_of_constant_observable() {
        // phi = 1 at x = 0.5: both preimage weights are 1/(4 sqrt(0.5)),
        // so the sum is 1/sqrt(2).
        let v = transfer_apply(|_| 1.0, 0.5).unwrap();
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(transfer_apply(|_| 0.0, 0.7).unwrap(), 0.0);
        assert!(transfer_apply(|_| 1.0, 1.0).is_err());
        assert!(transfer_apply(|_| 1.0, 0.0).is_err());
    }

    #[test]
    fn arcsine_density_is_transfer_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = |y: f64| arcsine_density(y).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let x = 0.01 + 0.98 * rng.gen::<f64>();
            let lh = transfer_apply(h, x).unwrap();
            worst = worst.max((lh - h(x)).abs());
        }
        assert!(worst <= 1e-9, "worst defect {worst:e}");
    }

    #[test]
    fn partition_bins_cover_unit_interval() {
        let p = UlamPartition::new(8).unwrap();
        assert_eq!(p.bin_of(0.0), 0);
        assert_eq!(p.bin_of(1.0), 7);
        assert_eq!(p.bin_of(0.124), 0);
        assert_eq!(p.bin_of(0.125), 1);
        assert!(UlamPartition::new(1).is_err());
    }

    #[test]
    fn ulam_density_approximates_arcsine() {
        // The discretization floor at 256 bins is about 0.071, set by the
        // inverse-square-root spikes of the target density; it shrinks like
        // n_bins^-0.43, not with more samples per bin.
        let partition = UlamPartition::new(256).unwrap();
        let result = ulam_invariant_density(partition, 200, 11).unwrap();
        let sum: f64 = result.density.masses().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
        assert!(result.density.masses().iter().all(|&m| m >= 0.0));
        let l1 = result.density.l1_distance(&arcsine_bin_masses(&partition));
        assert!(l1 <= 0.09, "L1 distance {l1}");
    }

    #[test]
    fn ulam_refinement_does_not_worsen() {
        let coarse = UlamPartition::new(256).unwrap();
        let fine = UlamPartition::new(512).unwrap();
        let l1_coarse = ulam_invariant_density(coarse, 300, 11)
            .unwrap()
            .density
            .l1_distance(&arcsine_bin_masses(&coarse));
        let l1_fine = ulam_invariant_density(fine, 300, 11)
            .unwrap()
            .density
            .l1_distance(&arcsine_bin_masses(&fine));
        assert!(
            l1_fine <= l1_coarse,
            "refinement worsened: {l1_coarse} -> {l1_fine}"
        );
    }

    #[test]
    fn ulam_rejects_thin_sampling() {
        let partition = UlamPartition::new(16).unwrap();
        assert!(ulam_invariant_density(partition, 99, 0).is_err());
    }

    #[test]
    fn birkhoff_constant_observable_is_exact() {
        let sys = build_system(&SystemSpec::Logistic).unwrap();
        let phi = Observable::new("const", |_: &StateVector| 0.1);
        let avg = birkhoff_average(sys.as_ref(), &phi, &StateVector::scalar(0.3), 12345).unwrap();
        assert_eq!(avg, 0.1);
    }

    #[test]
    fn birkhoff_logistic_coordinate_near_half() {
        let sys = build_system(&SystemSpec::Logistic).unwrap();
        let phi = Observable::new("coordinate", |s: &StateVector| s.get(0));
        let avg = birkhoff_average(sys.as_ref(), &phi, &StateVector::scalar(0.3), 100_000).unwrap();
        assert!((avg - 0.5).abs() < 0.02, "average {avg}");
    }

    #[test]
    fn birkhoff_rotation_equidistributes() {
        let sys = build_system(&SystemSpec::Rotation {
            theta: golden_theta(),
        })
        .unwrap();
        let phi = Observable::new("coordinate", |s: &StateVector| s.get(0));
        let avg = birkhoff_average(sys.as_ref(), &phi, &StateVector::scalar(0.2), 100_000).unwrap();
        assert!((avg - 0.5).abs() < 1e-3, "average {avg}");
    }

    #[test]
    fn birkhoff_respects_observable_bounds() {
        let sys = build_system(&SystemSpec::Logistic).unwrap();
        let phi = Observable::new("squared", |s: &StateVector| s.get(0) * s.get(0));
        let avg = birkhoff_average(sys.as_ref(), &phi, &StateVector::scalar(0.3), 10_000).unwrap();
        assert!((0.0..=1.0).contains(&avg));
    }

    #[test]
    fn holder_norm_examples() {
        let grid: Vec<f64> = (0..=512).map(|i| i as f64 / 512.0).collect();
        let constant = Observable::new("c", |_: &StateVector| -3.0);
        assert!((holder_norm(&constant, 0.5, &grid).unwrap() - 3.0).abs() < 1e-12);

        let linear = Observable::new("x", |s: &StateVector| s.get(0));
        assert!((holder_norm(&linear, 1.0, &grid).unwrap() - 2.0).abs() < 1e-9);

        // sqrt is exactly 1/2-Hölder with constant 1 against y = 0, and its
        // sup on [0,1] is 1.
        let root = Observable::new("sqrt", |s: &StateVector| s.get(0).sqrt());
        let norm = holder_norm(&root, 0.5, &grid).unwrap();
        assert!((norm - 2.0).abs() < 1e-9, "norm {norm}");
    }

    #[test]
    fn holder_norm_validates_input() {
        let phi = Observable::new("x", |s: &StateVector| s.get(0));
        assert!(holder_norm(&phi, 0.0, &[0.0, 1.0]).is_err());
        assert!(holder_norm(&phi, 1.5, &[0.0, 1.0]).is_err());
        assert!(holder_norm(&phi, 0.5, &[0.3, 0.3]).is_err());
    }

    #[test]
    fn samplers_are_deterministic_in_seed() {
        for sampler in [
            MuSampler::ArcsineStratified,
            MuSampler::TorusLattice {
                generator: DEFAULT_LATTICE_GENERATOR,
            },
            MuSampler::UniformIid { dim: 2 },
        ] {
            let a = sampler.samples(500, 3).unwrap();
            let b = sampler.samples(500, 3).unwrap();
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(x.coords(), y.coords());
            }
        }
    }

    #[test]
    fn arcsine_sampler_matches_its_law() {
        let samples = MuSampler::ArcsineStratified.samples(10_000, 5).unwrap();
        // Empirical CDF at the quartiles of the arcsine law.
        for q in [0.25, 0.5, 0.75] {
            let x_q = arcsine_inverse_cdf(q);
            let frac = samples.iter().filter(|s| s.get(0) <= x_q).count() as f64 / 10_000.0;
            assert!((frac - q).abs() < 0.01, "quartile {q}: {frac}");
        }
    }

    #[test]
    fn lattice_rejects_shared_factor() {
        let sampler = MuSampler::TorusLattice { generator: 500 };
        assert!(sampler.samples(1_000, 0).is_err());
    }

    #[test]
    fn lattice_dual_check_flags_aliased_frequency() {
        // generator 3, count 9: frequency (3, 2) has 3 + 3*2 = 9 = 0 mod 9.
        assert!(!lattice_avoids_frequencies(3, 9, &[(3, 2)]));
        assert!(lattice_avoids_frequencies(3, 9, &[(1, 1)]));
    }

    #[test]
    fn correlation_zero_lag_is_variance() {
        let sys = build_system(&SystemSpec::Logistic).unwrap();
        let phi = Observable::new("coordinate", |s: &StateVector| s.get(0));
        let series = correlation_decay(
            sys.as_ref(),
            &phi,
            &phi,
            &MuSampler::ArcsineStratified,
            5,
            10_000,
            17,
        )
        .unwrap();
        assert!(series.values[0] >= -1e-12, "C_0 = {}", series.values[0]);
        // Var of the coordinate under the arcsine law is 1/8.
        assert!((series.values[0] - 0.125).abs() < 5e-3);
    }

    #[test]
    fn logistic_step_observable_fits_geometric_decay() {
        // The indicator of x < 1/4 has correlations exactly
        // (2/9) (-1/2)^n for n >= 1, slow enough for five lags to clear the
        // noise floor at this ensemble size. Smoother observables
        // decorrelate faster than the noise discipline can resolve; see the
        // integration test on the piecewise-linear bump.
        let sys = build_system(&SystemSpec::Logistic).unwrap();
        let phi = Observable::new("below_quarter", |s: &StateVector| {
            if s.get(0) < 0.25 {
                1.0
            } else {
                0.0
            }
        });
        let series = correlation_decay(
            sys.as_ref(),
            &phi,
            &phi,
            &MuSampler::ArcsineStratified,
            20,
            200_000,
            23,
        )
        .unwrap();
        let rho = series.fitted_rho.expect("five lags resolve at this size");
        assert!(series.lags_in_fit >= 5);
        assert!((rho - 0.5).abs() < 0.05, "fitted rho {rho}");
        assert!(rho <= 0.9);
    }

    #[test]
    fn rotation_recurrence_is_certain() {
        let sys = build_system(&SystemSpec::Rotation {
            theta: golden_theta(),
        })
        .unwrap();
        let report = recurrence_statistics(
            sys.as_ref(),
            &MuSampler::UniformIid { dim: 1 },
            0.01,
            10_000,
            100,
            29,
        )
        .unwrap();
        assert_eq!(report.fraction_recurrent, 1.0);
        // Rotation return times are start-independent: always the Fibonacci
        // denominator 55 at this epsilon.
        assert_eq!(report.mean_first_return, Some(55.0));
    }

    #[test]
    fn identity_returns_immediately() {
        let sys = build_system(&SystemSpec::Identity { dim: 2 }).unwrap();
        let report = recurrence_statistics(
            sys.as_ref(),
            &MuSampler::UniformIid { dim: 2 },
            0.1,
            100,
            50,
            31,
        )
        .unwrap();
        assert_eq!(report.fraction_recurrent, 1.0);
        assert_eq!(report.mean_first_return, Some(1.0));
    }

    #[test]
    fn recurrence_fraction_monotone_in_horizon() {
        let sys = build_system(&SystemSpec::Logistic).unwrap();
        let sampler = MuSampler::ArcsineStratified;
        let short = recurrence_statistics(sys.as_ref(), &sampler, 1e-3, 50, 200, 37).unwrap();
        let long = recurrence_statistics(sys.as_ref(), &sampler, 1e-3, 500, 200, 37).unwrap();
        assert!(long.fraction_recurrent >= short.fraction_recurrent);
    }

    #[test]
    fn kac_return_time_matches_measure() {
        let sys = build_system(&SystemSpec::Rotation {
            theta: golden_theta(),
        })
        .unwrap();
        let set = |s: &StateVector| (0.45..0.55).contains(&s.get(0));
        let report = mean_return_time(
            sys.as_ref(),
            &MuSampler::UniformIid { dim: 1 },
            &set,
            10_000,
            10_000,
            41,
        )
        .unwrap();
        assert_eq!(report.returned, report.samples);
        assert!(
            (report.mean - 10.0).abs() <= 1.0,
            "mean return {}",
            report.mean
        );
    }

    #[test]
    fn first_return_scans_in_blocks_consistently() {
        let sys = build_system(&SystemSpec::Rotation {
            theta: golden_theta(),
        })
        .unwrap();
        // Return at 55 crosses no block boundary; also check one past 256.
        let start = StateVector::scalar(0.2);
        assert_eq!(first_return(sys.as_ref(), &start, 0.01, 10_000), Some(55));
        assert_eq!(first_return(sys.as_ref(), &start, 0.004, 10_000), Some(144));
        assert_eq!(first_return(sys.as_ref(), &start, 1e-9, 50), None);
    }
}
