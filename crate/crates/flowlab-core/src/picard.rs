//! Fixed-point construction of initial-value-problem solutions.
//!
//! For `x' = F(x), x(0) = s0` with `F` Lipschitz of constant `L`, the
//! integral operator
//!
//! ```text
//! (Phi x)(t) = s0 + integral from 0 to t of F(x(tau)) dtau
//! ```
//!
//! contracts the sup norm on a window of length `T` with factor `q = L*T`.
//! With the default `window_factor = 0.5`, `T = 0.5/L` gives `q = 0.5`, so
//! iterating `Phi` from any starting curve converges geometrically; windows
//! are chained end-to-end, the endpoint state of one becoming the initial
//! condition of the next. Integrals use composite trapezoid on the configured
//! grid step; `L = 0` (constant field) is solved exactly as `s0 + t*F(s0)`.
//!
//! The same contraction machinery backs [`iterate_to_fixed_point`] for
//! discrete self-maps, and the equilibrium tooling: [`find_equilibrium`]
//! (damped Newton on `F = 0`) and [`classify_stability`] (eigenvalues of the
//! finite-difference Jacobian).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::space::{euclidean_distance, SampledTrajectory, StateVector};

/// Real-part threshold separating stable/unstable eigenvalues from marginal.
pub const STABILITY_TOL: f64 = 1e-8;

/// Base step for finite-difference Jacobians, scaled per coordinate by
/// max(1, |x_i|).
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum PicardError {
    #[error("invalid config: {reason}")]
    InvalidConfig { reason: &'static str },
    #[error("horizon must be positive and finite, got {horizon}")]
    InvalidHorizon { horizon: f64 },
    #[error("lipschitz bound must be finite and non-negative, got {bound}")]
    InvalidLipschitzBound { bound: f64 },
    #[error("field output dimension {got} does not match state dimension {expected}")]
    FieldDimensionMismatch { expected: usize, got: usize },
    #[error(
        "window starting at t = {window_start}: no convergence in {iterations} iterations (last gap {residual:e})"
    )]
    NonConvergence {
        window_start: f64,
        iterations: usize,
        residual: f64,
    },
    #[error(
        "window starting at t = {window_start}: iterate gaps expanded ({prev:e} -> {next:e}); declared Lipschitz bound appears violated"
    )]
    ContractionFailure {
        window_start: f64,
        prev: f64,
        next: f64,
    },
    #[error("fixed-point iteration diverged after {iterations} iterations; gap trace {gaps:?}")]
    FixedPointDiverged { iterations: usize, gaps: Vec<f64> },
    #[error("fixed-point iteration exhausted {iterations} iterations (last gap {last_gap:e}); gap trace available")]
    FixedPointExhausted { iterations: usize, last_gap: f64 },
    #[error("Newton stagnation at residual {residual:e}: no damped step reduces |F|")]
    NewtonStagnation { residual: f64 },
    #[error("Newton did not reach tolerance in {iterations} iterations (residual {residual:e})")]
    NewtonExhausted { iterations: usize, residual: f64 },
    #[error("Jacobian is singular to working precision")]
    SingularJacobian,
    #[error("point is not an equilibrium: |F| = {residual:e} > 1e-6")]
    NotAnEquilibrium { residual: f64 },
    #[error("eigenvalue computation failed to converge on the Jacobian")]
    EigenvalueFailure,
}

/// Vector field with a declared Lipschitz constant.
pub struct VectorField {
    lipschitz: f64,
    f: Box<dyn Fn(&StateVector) -> StateVector + Send + Sync>,
}

impl VectorField {
    pub fn new(
        lipschitz: f64,
        f: impl Fn(&StateVector) -> StateVector + Send + Sync + 'static,
    ) -> Result<Self, PicardError> {
        if !lipschitz.is_finite() || lipschitz < 0.0 {
            return Err(PicardError::InvalidLipschitzBound { bound: lipschitz });
        }
        Ok(Self {
            lipschitz,
            f: Box::new(f),
        })
    }

    pub fn eval(&self, s: &StateVector) -> StateVector {
        (self.f)(s)
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }

    /// Spot-check of |f(u) - f(v)| <= L |u - v| over sample pairs; returns
    /// the worst observed ratio.
    pub fn lipschitz_spot_check(&self, samples: &[StateVector]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, u) in samples.iter().enumerate() {
            for v in &samples[i + 1..] {
                let du = euclidean_distance(u, v);
                if du == 0.0 {
                    continue;
                }
                let df = euclidean_distance(&self.eval(u), &self.eval(v));
                worst = worst.max(df / du);
            }
        }
        worst
    }
}

/// Starting curve for the window iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WarmStart {
    /// Constant curve at the window's initial state.
    Constant,
    /// Single fourth-order Runge-Kutta sweep over the window grid.
    RungeKutta,
}

#[derive(Clone, Debug)]
pub struct PicardConfig {
    /// Upper bound on the node spacing of each window grid.
    pub grid_step: f64,
    /// Sup-norm gap at which the iteration stops.
    pub fixed_point_tol: f64,
    /// Per-window iteration budget.
    pub max_iterations: usize,
    /// Window length as a fraction of 1/L; must keep q = L*T < 1.
    pub window_factor: f64,
    pub warm_start: WarmStart,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            grid_step: 1e-3,
            fixed_point_tol: 1e-10,
            max_iterations: 200,
            window_factor: 0.5,
            warm_start: WarmStart::Constant,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<(), PicardError> {
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return Err(PicardError::InvalidConfig {
                reason: "grid_step must be positive and finite",
            });
        }
        if !(self.fixed_point_tol > 0.0 && self.fixed_point_tol.is_finite()) {
            return Err(PicardError::InvalidConfig {
                reason: "fixed_point_tol must be positive and finite",
            });
        }
        if self.max_iterations == 0 {
            return Err(PicardError::InvalidConfig {
                reason: "max_iterations must be at least 1",
            });
        }
        if !(self.window_factor > 0.0 && self.window_factor < 1.0) {
            return Err(PicardError::InvalidConfig {
                reason: "window_factor must lie in (0, 1)",
            });
        }
        Ok(())
    }
}

/// Per-window iteration record: `gaps[n]` is the sup-norm distance between
/// iterates n and n+1.
#[derive(Clone, Debug, Serialize)]
pub struct WindowTrace {
    pub t_start: f64,
    pub t_end: f64,
    pub iterations: usize,
    pub gaps: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct SolutionCurve {
    pub trajectory: SampledTrajectory,
    /// Max over all grid nodes of the integral-equation defect
    /// |x(t) - s0' - integral of F|.
    pub residual: f64,
    /// Total operator applications across all windows.
    pub iterations_used: usize,
    pub windows: Vec<WindowTrace>,
}

/// Solves x' = F(x), x(0) = s0 on [0, horizon] by window-chained fixed-point
/// iteration of the integral operator.
pub fn solve_ivp_picard(
    field: &VectorField,
    s0: &StateVector,
    horizon: f64,
    cfg: &PicardConfig,
) -> Result<SolutionCurve, PicardError> {
    cfg.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(PicardError::InvalidHorizon { horizon });
    }
    let probe = field.eval(s0);
    if probe.dim() != s0.dim() {
        return Err(PicardError::FieldDimensionMismatch {
            expected: s0.dim(),
            got: probe.dim(),
        });
    }

    let l = field.lipschitz_bound();
    if l == 0.0 {
        return solve_constant_field(field, s0, horizon, cfg);
    }

    let window = cfg.window_factor / l;
    let n_windows = (horizon / window).ceil().max(1.0) as usize;

    let mut times: Vec<f64> = vec![0.0];
    let mut states: Vec<StateVector> = vec![s0.clone()];
    let mut windows: Vec<WindowTrace> = Vec::with_capacity(n_windows);
    let mut current = s0.clone();
    let mut residual: f64 = 0.0;
    let mut iterations_used = 0usize;

    for k in 0..n_windows {
        let t0 = k as f64 * window;
        let t1 = ((k + 1) as f64 * window).min(horizon);
        if !(t1 > t0) {
            break;
        }
        let solved = solve_window(field, &current, t0, t1, cfg)?;
        iterations_used += solved.trace.iterations;
        residual = residual.max(solved.defect);
        // Skip the first node: it duplicates the previous window's endpoint.
        times.extend_from_slice(&solved.times[1..]);
        states.extend(solved.states.into_iter().skip(1));
        current = states.last().expect("window produced states").clone();
        windows.push(solved.trace);
    }

    let trajectory = SampledTrajectory::new(times, states).expect("window grids are increasing");
    Ok(SolutionCurve {
        trajectory,
        residual,
        iterations_used,
        windows,
    })
}

/// L = 0 means F is constant, so the solution is exactly s0 + t*F(s0).
fn solve_constant_field(
    field: &VectorField,
    s0: &StateVector,
    horizon: f64,
    cfg: &PicardConfig,
) -> Result<SolutionCurve, PicardError> {
    let f0 = field.eval(s0);
    let n_steps = (horizon / cfg.grid_step).ceil().max(1.0) as usize;
    let h = horizon / n_steps as f64;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    for i in 0..=n_steps {
        let t = if i == n_steps { horizon } else { i as f64 * h };
        let coords = s0
            .coords()
            .iter()
            .zip(f0.coords())
            .map(|(s, f)| s + t * f)
            .collect();
        times.push(t);
        states.push(StateVector::new(coords).expect("finite linear combination"));
    }
    let trajectory = SampledTrajectory::new(times, states).expect("uniform grid is increasing");
    Ok(SolutionCurve {
        trajectory,
        residual: 0.0,
        iterations_used: 0,
        windows: vec![WindowTrace {
            t_start: 0.0,
            t_end: horizon,
            iterations: 0,
            gaps: vec![],
        }],
    })
}

struct SolvedWindow {
    times: Vec<f64>,
    states: Vec<StateVector>,
    defect: f64,
    trace: WindowTrace,
}

fn solve_window(
    field: &VectorField,
    s0: &StateVector,
    t0: f64,
    t1: f64,
    cfg: &PicardConfig,
) -> Result<SolvedWindow, PicardError> {
    let span = t1 - t0;
    let n_steps = (span / cfg.grid_step).ceil().max(1.0) as usize;
    let h = span / n_steps as f64;
    let times: Vec<f64> = (0..=n_steps)
        .map(|i| if i == n_steps { t1 } else { t0 + i as f64 * h })
        .collect();

    let mut x: Vec<StateVector> = match cfg.warm_start {
        WarmStart::Constant => vec![s0.clone(); n_steps + 1],
        WarmStart::RungeKutta => rk4_sweep(field, s0, n_steps, h),
    };

    let mut gaps: Vec<f64> = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iterations {
        let next = apply_integral_operator(field, s0, &x, h);
        let gap = sup_distance(&next, &x);
        x = next;
        if let Some(&prev) = gaps.last() {
            // Expansion well above the noise floor means the declared
            // contraction factor cannot hold.
            if gap > prev * (1.0 + 1e-9) && prev > cfg.fixed_point_tol * 100.0 {
                return Err(PicardError::ContractionFailure {
                    window_start: t0,
                    prev,
                    next: gap,
                });
            }
        }
        gaps.push(gap);
        if gap <= cfg.fixed_point_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(PicardError::NonConvergence {
            window_start: t0,
            iterations: gaps.len(),
            residual: gaps.last().copied().unwrap_or(f64::INFINITY),
        });
    }

    // Defect of the accepted curve under one more operator application.
    let check = apply_integral_operator(field, s0, &x, h);
    let defect = sup_distance(&check, &x);

    Ok(SolvedWindow {
        defect,
        trace: WindowTrace {
            t_start: t0,
            t_end: t1,
            iterations: gaps.len(),
            gaps,
        },
        times,
        states: x,
    })
}

/// One application of (Phi x)(t_i) = s0 + cumulative trapezoid of F(x) up to
/// node i.
fn apply_integral_operator(
    field: &VectorField,
    s0: &StateVector,
    x: &[StateVector],
    h: f64,
) -> Vec<StateVector> {
    let dim = s0.dim();
    let f_values: Vec<StateVector> = x.iter().map(|s| field.eval(s)).collect();
    let mut out = Vec::with_capacity(x.len());
    let mut integral = vec![0.0f64; dim];
    out.push(s0.clone());
    for i in 1..x.len() {
        for d in 0..dim {
            integral[d] += 0.5 * h * (f_values[i - 1].get(d) + f_values[i].get(d));
        }
        let coords = s0.coords().iter().zip(&integral).map(|(s, acc)| s + acc).collect();
        out.push(StateVector::new(coords).expect("finite quadrature"));
    }
    out
}

fn rk4_sweep(field: &VectorField, s0: &StateVector, n_steps: usize, h: f64) -> Vec<StateVector> {
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut y = s0.clone();
    out.push(y.clone());
    for _ in 0..n_steps {
        y = rk4_step(field, &y, h);
        out.push(y.clone());
    }
    out
}

fn rk4_step(field: &VectorField, y: &StateVector, h: f64) -> StateVector {
    let add_scaled = |base: &StateVector, dir: &StateVector, c: f64| {
        StateVector::new(
            base.coords()
                .iter()
                .zip(dir.coords())
                .map(|(b, d)| b + c * d)
                .collect(),
        )
        .expect("finite rk4 stage")
    };
    let k1 = field.eval(y);
    let k2 = field.eval(&add_scaled(y, &k1, 0.5 * h));
    let k3 = field.eval(&add_scaled(y, &k2, 0.5 * h));
    let k4 = field.eval(&add_scaled(y, &k3, h));
    StateVector::new(
        y.coords()
            .iter()
            .enumerate()
            .map(|(d, c)| c + h / 6.0 * (k1.get(d) + 2.0 * k2.get(d) + 2.0 * k3.get(d) + k4.get(d)))
            .collect(),
    )
    .expect("finite rk4 step")
}

fn sup_distance(a: &[StateVector], b: &[StateVector]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| euclidean_distance(x, y))
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPointTrace {
    pub point: StateVector,
    pub iterations: usize,
    /// gaps[n] = |T(x_n) - x_n|; decreasing for a genuine contraction.
    pub gaps: Vec<f64>,
}

/// Iterates a self-map to a fixed point: stops once |T(x) - x| <= tol and
/// returns that x (so the identity map returns x0 after 0 iterations).
/// Divergence is flagged when the gap grows over a trailing window.
pub fn iterate_to_fixed_point(
    map: impl Fn(&StateVector) -> StateVector,
    x0: &StateVector,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointTrace, PicardError> {
    assert!(tol > 0.0, "iterate_to_fixed_point: tol must be positive");
    const DIVERGENCE_WINDOW: usize = 8;
    let mut x = x0.clone();
    let mut gaps: Vec<f64> = Vec::new();
    for n in 0..=max_iter {
        let y = map(&x);
        let gap = euclidean_distance(&y, &x);
        gaps.push(gap);
        if gap <= tol {
            return Ok(FixedPointTrace {
                point: x,
                iterations: n,
                gaps,
            });
        }
        if gaps.len() > DIVERGENCE_WINDOW
            && gaps
                .windows(2)
                .rev()
                .take(DIVERGENCE_WINDOW)
                .all(|w| w[1] > w[0])
        {
            return Err(PicardError::FixedPointDiverged {
                iterations: n,
                gaps,
            });
        }
        x = y;
    }
    let last_gap = *gaps.last().expect("at least one gap recorded");
    Err(PicardError::FixedPointExhausted {
        iterations: gaps.len(),
        last_gap,
    })
}

/// Damped Newton iteration on F = 0 with a central finite-difference
/// Jacobian. Backtracks the step until |F| strictly decreases.
pub fn find_equilibrium(
    field: &VectorField,
    guess: &StateVector,
    tol: f64,
) -> Result<StateVector, PicardError> {
    assert!(tol > 0.0, "find_equilibrium: tol must be positive");
    const MAX_NEWTON: usize = 100;
    const MAX_BACKTRACK: u32 = 40;

    let mut x = guess.clone();
    for _ in 0..MAX_NEWTON {
        let r = field.eval(&x);
        let r_norm = norm(&r);
        if r_norm <= tol {
            return Ok(x);
        }
        let j = jacobian_fd(field, &x, FD_STEP);
        let rhs = DVector::from_iterator(r.dim(), r.coords().iter().map(|c| -c));
        let delta = j
            .lu()
            .solve(&rhs)
            .ok_or(PicardError::SingularJacobian)?;
        let mut alpha = 1.0f64;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACK {
            let candidate = StateVector::new(
                x.coords()
                    .iter()
                    .enumerate()
                    .map(|(d, c)| c + alpha * delta[d])
                    .collect(),
            )
            .expect("finite newton step");
            if norm(&field.eval(&candidate)) < r_norm {
                x = candidate;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(PicardError::NewtonStagnation { residual: r_norm });
        }
    }
    let residual = norm(&field.eval(&x));
    if residual <= tol {
        Ok(x)
    } else {
        Err(PicardError::NewtonExhausted {
            iterations: MAX_NEWTON,
            residual,
        })
    }
}

fn norm(s: &StateVector) -> f64 {
    s.coords().iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Central-difference Jacobian with per-coordinate step
/// base_step * max(1, |x_d|).
fn jacobian_fd(field: &VectorField, x: &StateVector, base_step: f64) -> DMatrix<f64> {
    let n = x.dim();
    let mut j = DMatrix::zeros(n, n);
    for col in 0..n {
        let h = base_step * x.get(col).abs().max(1.0);
        let mut fwd = x.coords().to_vec();
        let mut bwd = x.coords().to_vec();
        fwd[col] += h;
        bwd[col] -= h;
        let f_fwd = field.eval(&StateVector::new(fwd).expect("finite forward probe"));
        let f_bwd = field.eval(&StateVector::new(bwd).expect("finite backward probe"));
        for row in 0..n {
            j[(row, col)] = (f_fwd.get(row) - f_bwd.get(row)) / (2.0 * h);
        }
    }
    j
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StabilityClass {
    AsymptoticallyStable,
    Unstable,
    Marginal,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub class: StabilityClass,
    pub eigenvalues: Vec<Eigenvalue>,
}

/// Classifies an equilibrium by the eigenvalues of the finite-difference
/// Jacobian: all real parts below -1e-8 is asymptotically stable, any above
/// +1e-8 is unstable, otherwise marginal.
pub fn classify_stability(
    field: &VectorField,
    equilibrium: &StateVector,
    fd_step: f64,
) -> Result<StabilityReport, PicardError> {
    assert!(fd_step > 0.0, "classify_stability: fd_step must be positive");
    let residual = norm(&field.eval(equilibrium));
    if residual > 1e-6 {
        return Err(PicardError::NotAnEquilibrium { residual });
    }
    let j = jacobian_fd(field, equilibrium, fd_step);
    let schur = nalgebra::linalg::Schur::try_new(j, 1e-14, 10_000)
        .ok_or(PicardError::EigenvalueFailure)?;
    let eigen = schur.complex_eigenvalues();
    let eigenvalues: Vec<Eigenvalue> = eigen.iter().map(|c| Eigenvalue { re: c.re, im: c.im }).collect();
    let max_re = eigenvalues.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    let class = if eigenvalues.iter().all(|e| e.re < -STABILITY_TOL) {
        StabilityClass::AsymptoticallyStable
    } else if max_re > STABILITY_TOL {
        StabilityClass::Unstable
    } else {
        StabilityClass::Marginal
    };
    Ok(StabilityReport { class, eigenvalues })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay_field() -> VectorField {
        VectorField::new(1.0, |s: &StateVector| {
            StateVector::new(s.coords().iter().map(|c| -c).collect()).unwrap()
        })
        .unwrap()
    }

    fn oscillator_field() -> VectorField {
        // (x2, -x1) rotates; exact Lipschitz constant 1.
        VectorField::new(1.0, |s: &StateVector| StateVector::pair(s.get(1), -s.get(0))).unwrap()
    }

    fn pendulum_field() -> VectorField {
        VectorField::new(1.0, |s: &StateVector| {
            StateVector::pair(s.get(1), -s.get(0).sin())
        })
        .unwrap()
    }

    #[test]
    fn constant_field_is_exact() {
        let field = VectorField::new(0.0, |_: &StateVector| StateVector::scalar(2.0)).unwrap();
        let sol = solve_ivp_picard(&field, &StateVector::scalar(1.0), 1.0, &PicardConfig::default())
            .unwrap();
        assert_eq!(sol.iterations_used, 0);
        assert_eq!(sol.residual, 0.0);
        let last = sol.trajectory.last_state();
        assert!((last.get(0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_field_returns_constant_curve() {
        let field = VectorField::new(0.0, |s: &StateVector| {
            StateVector::new(s.coords().iter().map(|_| 0.0).collect()).unwrap()
        })
        .unwrap();
        let sol = solve_ivp_picard(&field, &StateVector::scalar(1.0), 1.0, &PicardConfig::default())
            .unwrap();
        for (_, s) in sol.trajectory.iter() {
            assert_eq!(s.get(0), 1.0);
        }
        assert_eq!(sol.residual, 0.0);
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let field = decay_field();
        let sol = solve_ivp_picard(&field, &StateVector::scalar(1.0), 5.0, &PicardConfig::default())
            .unwrap();
        let max_dev = sol
            .trajectory
            .iter()
            .map(|(t, s)| (s.get(0) - (-t).exp()).abs())
            .fold(0.0, f64::max);
        assert!(max_dev <= 1e-6, "max deviation {max_dev:e}");
        assert!(sol.residual <= 1e-10);
    }

    #[test]
    fn iterate_gaps_contract_within_declared_ratio() {
        let field = decay_field();
        let cfg = PicardConfig::default();
        let sol = solve_ivp_picard(&field, &StateVector::scalar(1.0), 5.0, &cfg).unwrap();
        // T = window_factor / L makes the contraction factor q = L*T exactly
        // the window factor.
        let q = cfg.window_factor;
        for w in &sol.windows {
            for pair in w.gaps.windows(2) {
                assert!(
                    pair[1] <= q * pair[0] + 1e-9,
                    "gap ratio {} exceeds q = {q}",
                    pair[1] / pair[0]
                );
            }
        }
    }

    #[test]
    fn harmonic_oscillator_returns_home() {
        let field = oscillator_field();
        let horizon = 2.0 * std::f64::consts::PI;
        let sol =
            solve_ivp_picard(&field, &StateVector::pair(1.0, 0.0), horizon, &PicardConfig::default())
                .unwrap();
        let last = sol.trajectory.last_state();
        let err = euclidean_distance(last, &StateVector::pair(1.0, 0.0));
        assert!(err <= 1e-5, "return error {err:e}");
    }

    #[test]
    fn warm_start_and_constant_start_agree() {
        let field = oscillator_field();
        let cfg_const = PicardConfig::default();
        let cfg_rk = PicardConfig {
            warm_start: WarmStart::RungeKutta,
            ..PicardConfig::default()
        };
        let a = solve_ivp_picard(&field, &StateVector::pair(1.0, 0.0), 1.0, &cfg_const).unwrap();
        let b = solve_ivp_picard(&field, &StateVector::pair(1.0, 0.0), 1.0, &cfg_rk).unwrap();
        assert_eq!(a.trajectory.len(), b.trajectory.len());
        let max_gap = a
            .trajectory
            .states()
            .iter()
            .zip(b.trajectory.states())
            .map(|(x, y)| euclidean_distance(x, y))
            .fold(0.0, f64::max);
        assert!(max_gap <= 2.0 * cfg_const.fixed_point_tol, "gap {max_gap:e}");
    }

    #[test]
    fn defect_holds_at_every_node() {
        let field = decay_field();
        let cfg = PicardConfig::default();
        let sol = solve_ivp_picard(&field, &StateVector::scalar(1.0), 2.0, &cfg).unwrap();
        assert!(sol.residual <= cfg.fixed_point_tol);
    }

    #[test]
    fn lied_lipschitz_bound_is_detected() {
        // Claimed L = 0.1 gives a 5-second window, far too long for the true
        // constant 10: the operator expands and must be reported.
        let field = VectorField::new(0.1, |s: &StateVector| StateVector::scalar(-10.0 * s.get(0)))
            .unwrap();
        let err = solve_ivp_picard(&field, &StateVector::scalar(1.0), 5.0, &PicardConfig::default())
            .unwrap_err();
        assert!(matches!(err, PicardError::ContractionFailure { .. }), "{err}");
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let bad = PicardConfig {
            grid_step: 0.0,
            ..PicardConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = PicardConfig {
            window_factor: 1.0,
            ..PicardConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = PicardConfig {
            max_iterations: 0,
            ..PicardConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn fixed_point_affine_map() {
        let trace = iterate_to_fixed_point(
            |s: &StateVector| StateVector::scalar(s.get(0) / 2.0 + 1.0),
            &StateVector::scalar(0.0),
            1e-12,
            200,
        )
        .unwrap();
        assert!((trace.point.get(0) - 2.0).abs() <= 1e-11);
        // Genuine contraction: gaps strictly decrease until convergence.
        for pair in trace.gaps.windows(2) {
            assert!(pair[1] < pair[0]);
        }
    }

    #[test]
    fn fixed_point_identity_returns_immediately() {
        let trace = iterate_to_fixed_point(
            |s: &StateVector| s.clone(),
            &StateVector::scalar(3.0),
            1e-12,
            10,
        )
        .unwrap();
        assert_eq!(trace.iterations, 0);
        assert_eq!(trace.point.get(0), 3.0);
    }

    #[test]
    fn fixed_point_divergence_reports_trace() {
        let err = iterate_to_fixed_point(
            |s: &StateVector| StateVector::scalar(2.0 * s.get(0)),
            &StateVector::scalar(1.0),
            1e-12,
            100,
        )
        .unwrap_err();
        match err {
            PicardError::FixedPointDiverged { gaps, .. } => {
                assert!(gaps.len() >= 8);
                assert!(gaps.last().unwrap() > &gaps[0]);
            }
            other => panic!("expected divergence, got {other}"),
        }
    }

    #[test]
    fn equilibrium_of_linear_decay() {
        let field = decay_field();
        let eq = find_equilibrium(&field, &StateVector::scalar(5.0), 1e-10).unwrap();
        assert!(eq.get(0).abs() <= 1e-10);
    }

    #[test]
    fn equilibrium_of_logistic_growth() {
        let field = VectorField::new(1.0, |s: &StateVector| {
            let x = s.get(0);
            StateVector::scalar(x * (1.0 - x))
        })
        .unwrap();
        let eq = find_equilibrium(&field, &StateVector::scalar(0.9), 1e-10).unwrap();
        assert!((eq.get(0) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn pendulum_equilibrium_and_saddle_classification() {
        let field = pendulum_field();
        let eq = find_equilibrium(&field, &StateVector::pair(3.0, 0.1), 1e-10).unwrap();
        assert!((eq.get(0) - std::f64::consts::PI).abs() <= 1e-8);
        assert!(eq.get(1).abs() <= 1e-8);
        let report = classify_stability(&field, &eq, FD_STEP).unwrap();
        assert_eq!(report.class, StabilityClass::Unstable);
        // Jacobian [[0,1],[1,0]] has eigenvalues -1 and +1.
        let mut res: Vec<f64> = report.eigenvalues.iter().map(|e| e.re).collect();
        res.sort_by(f64::total_cmp);
        assert!((res[0] + 1.0).abs() <= 1e-5);
        assert!((res[1] - 1.0).abs() <= 1e-5);
    }

    #[test]
    fn stability_of_linear_fields() {
        let stable = decay_field();
        let origin = StateVector::scalar(0.0);
        let report = classify_stability(&stable, &origin, FD_STEP).unwrap();
        assert_eq!(report.class, StabilityClass::AsymptoticallyStable);
        assert!((report.eigenvalues[0].re + 1.0).abs() <= 1e-8);

        let unstable = VectorField::new(1.0, |s: &StateVector| s.clone()).unwrap();
        let report = classify_stability(&unstable, &origin, FD_STEP).unwrap();
        assert_eq!(report.class, StabilityClass::Unstable);
        assert!((report.eigenvalues[0].re - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn marginal_center_is_reported() {
        let field = oscillator_field();
        let report = classify_stability(&field, &StateVector::pair(0.0, 0.0), FD_STEP).unwrap();
        assert_eq!(report.class, StabilityClass::Marginal);
    }

    #[test]
    fn classify_rejects_non_equilibrium() {
        let field = decay_field();
        let err = classify_stability(&field, &StateVector::scalar(1.0), FD_STEP).unwrap_err();
        assert!(matches!(err, PicardError::NotAnEquilibrium { .. }));
    }

    #[test]
    fn damped_oscillator_is_asymptotically_stable() {
        let field = VectorField::new(2.0, |s: &StateVector| {
            StateVector::pair(s.get(1), -s.get(0) - s.get(1))
        })
        .unwrap();
        let report = classify_stability(&field, &StateVector::pair(0.0, 0.0), FD_STEP).unwrap();
        assert_eq!(report.class, StabilityClass::AsymptoticallyStable);
    }

    #[test]
    fn lipschitz_spot_check_flags_liars() {
        let honest = decay_field();
        let samples: Vec<StateVector> = (0..10).map(|i| StateVector::scalar(i as f64)).collect();
        assert!(honest.lipschitz_spot_check(&samples) <= honest.lipschitz_bound() + 1e-12);

        let liar = VectorField::new(0.5, |s: &StateVector| StateVector::scalar(-3.0 * s.get(0)))
            .unwrap();
        assert!(liar.lipschitz_spot_check(&samples) > liar.lipschitz_bound());
    }
}
