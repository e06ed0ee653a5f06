//! States, sampled trajectories, flows, and observables.
//!
//! A state is a point of a finite-dimensional metric space; a flow is a
//! time-indexed family of maps `evolve(t, ·)` with `evolve(0, s) = s` and the
//! composition law
//!
//! ```text
//! evolve(t + u, s) = evolve(t, evolve(u, s))
//! ```
//!
//! Neither law can be proven for a black-box map, so [`check_semigroup`] and
//! [`max_identity_violation`] probe them on caller-supplied samples and report
//! the worst violation. Periodic spaces (circle, torus) override the default
//! Euclidean metric with the wrap-around distance.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("state vector must have at least one coordinate")]
    EmptyState,
    #[error("coordinate {index} is not finite")]
    NonFiniteCoordinate { index: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("time grid must be strictly increasing (violated at index {index})")]
    NonIncreasingGrid { index: usize },
    #[error("trajectory needs one state per time: {times} times vs {states} states")]
    LengthMismatch { times: usize, states: usize },
    #[error("trajectory must contain at least one sample")]
    EmptyTrajectory,
}

/// Point of a finite-dimensional real state space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateVector {
    coords: Vec<f64>,
}

impl StateVector {
    /// Coordinates must be non-empty and finite.
    pub fn new(coords: Vec<f64>) -> Result<Self, SpaceError> {
        if coords.is_empty() {
            return Err(SpaceError::EmptyState);
        }
        for (index, c) in coords.iter().enumerate() {
            if !c.is_finite() {
                return Err(SpaceError::NonFiniteCoordinate { index });
            }
        }
        Ok(Self { coords })
    }

    /// One-dimensional state. Panics on a non-finite coordinate.
    pub fn scalar(x: f64) -> Self {
        Self::new(vec![x]).expect("scalar state must be finite")
    }

    /// Two-dimensional state. Panics on non-finite coordinates.
    pub fn pair(x: f64, y: f64) -> Self {
        Self::new(vec![x, y]).expect("pair state must be finite")
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Coordinate accessor; panics out of range like slice indexing.
    pub fn get(&self, i: usize) -> f64 {
        self.coords[i]
    }
}

/// Euclidean distance. Panics if dimensions differ.
pub fn euclidean_distance(a: &StateVector, b: &StateVector) -> f64 {
    assert_eq!(a.dim(), b.dim(), "euclidean_distance: dimension mismatch");
    a.coords
        .iter()
        .zip(&b.coords)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Distance between two circle points given in turns, i.e. the quotient
/// metric min(|a - b|, 1 - |a - b|) after reduction mod 1.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Torus distance: per-coordinate wrap-around differences combined
/// Euclidean-style. Panics if lengths differ.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "torus_distance: dimension mismatch");
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = circle_distance(*x, *y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Trajectory sampled on an explicit, strictly increasing time grid.
#[derive(Clone, Debug, Serialize)]
pub struct SampledTrajectory {
    times: Vec<f64>,
    states: Vec<StateVector>,
}

impl SampledTrajectory {
    pub fn new(times: Vec<f64>, states: Vec<StateVector>) -> Result<Self, SpaceError> {
        if times.is_empty() {
            return Err(SpaceError::EmptyTrajectory);
        }
        if times.len() != states.len() {
            return Err(SpaceError::LengthMismatch {
                times: times.len(),
                states: states.len(),
            });
        }
        check_strictly_increasing(&times)?;
        let dim = states[0].dim();
        for s in &states[1..] {
            if s.dim() != dim {
                return Err(SpaceError::DimensionMismatch {
                    expected: dim,
                    got: s.dim(),
                });
            }
        }
        Ok(Self { times, states })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the constructor rejects empty trajectories
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn last_state(&self) -> &StateVector {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &StateVector)> {
        self.times.iter().copied().zip(self.states.iter())
    }
}

fn check_strictly_increasing(grid: &[f64]) -> Result<(), SpaceError> {
    for (i, w) in grid.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(SpaceError::NonIncreasingGrid { index: i + 1 });
        }
    }
    Ok(())
}

/// Time-indexed evolution map on a state space.
pub trait Flow {
    fn dim(&self) -> usize;

    fn evolve(&self, t: f64, s: &StateVector) -> StateVector;

    /// Metric used when comparing states of this flow. Euclidean by default;
    /// periodic spaces override with the wrap-around metric.
    fn distance(&self, a: &StateVector, b: &StateVector) -> f64 {
        euclidean_distance(a, b)
    }
}

/// Flow built from a closure.
pub struct FnFlow<F: Fn(f64, &StateVector) -> StateVector> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64, &StateVector) -> StateVector> FnFlow<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(f64, &StateVector) -> StateVector> Flow for FnFlow<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evolve(&self, t: f64, s: &StateVector) -> StateVector {
        (self.f)(t, s)
    }
}

/// Named real-valued function of states.
pub struct Observable {
    name: String,
    f: Box<dyn Fn(&StateVector) -> f64 + Send + Sync>,
}

impl Observable {
    pub fn new(name: impl Into<String>, f: impl Fn(&StateVector) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Box::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn apply(&self, s: &StateVector) -> f64 {
        (self.f)(s)
    }
}

/// Evaluates the flow from `s0` at every grid time.
pub fn sample_flow(
    flow: &dyn Flow,
    s0: &StateVector,
    grid: &[f64],
) -> Result<SampledTrajectory, SpaceError> {
    if s0.dim() != flow.dim() {
        return Err(SpaceError::DimensionMismatch {
            expected: flow.dim(),
            got: s0.dim(),
        });
    }
    check_strictly_increasing(grid)?;
    if grid.is_empty() {
        return Err(SpaceError::EmptyTrajectory);
    }
    let states = grid.iter().map(|&t| flow.evolve(t, s0)).collect();
    SampledTrajectory::new(grid.to_vec(), states)
}

#[derive(Clone, Debug, Serialize)]
pub struct SemigroupReport {
    pub max_violation: f64,
    pub pass: bool,
    pub tol: f64,
}

/// Probes the composition law: for every sample x and pair (t, u) measures
/// distance(evolve(t + u, x), evolve(t, evolve(u, x))) in the flow's metric.
pub fn check_semigroup(
    flow: &dyn Flow,
    s_samples: &[StateVector],
    t_pairs: &[(f64, f64)],
    tol: f64,
) -> Result<SemigroupReport, SpaceError> {
    assert!(tol > 0.0, "check_semigroup: tol must be positive");
    let mut max_violation: f64 = 0.0;
    for s in s_samples {
        if s.dim() != flow.dim() {
            return Err(SpaceError::DimensionMismatch {
                expected: flow.dim(),
                got: s.dim(),
            });
        }
        for &(t, u) in t_pairs {
            let direct = flow.evolve(t + u, s);
            let composed = flow.evolve(t, &flow.evolve(u, s));
            max_violation = max_violation.max(flow.distance(&direct, &composed));
        }
    }
    Ok(SemigroupReport {
        max_violation,
        pass: max_violation <= tol,
        tol,
    })
}

/// Max distance between `evolve(0, s)` and `s` over the samples.
pub fn max_identity_violation(flow: &dyn Flow, s_samples: &[StateVector]) -> f64 {
    s_samples
        .iter()
        .map(|s| flow.distance(&flow.evolve(0.0, s), s))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_flow() -> impl Flow {
        FnFlow::new(1, |_, s: &StateVector| s.clone())
    }

    /// Circle rotation as a flow on the angle coordinate, with the quotient
    /// metric.
    struct RotationFlow {
        theta: f64,
    }

    impl Flow for RotationFlow {
        fn dim(&self) -> usize {
            1
        }

        fn evolve(&self, t: f64, s: &StateVector) -> StateVector {
            StateVector::scalar((s.get(0) + self.theta * t).rem_euclid(1.0))
        }

        fn distance(&self, a: &StateVector, b: &StateVector) -> f64 {
            circle_distance(a.get(0), b.get(0))
        }
    }

    #[test]
    fn state_vector_rejects_bad_input() {
        assert!(matches!(StateVector::new(vec![]), Err(SpaceError::EmptyState)));
        assert!(matches!(
            StateVector::new(vec![1.0, f64::NAN]),
            Err(SpaceError::NonFiniteCoordinate { index: 1 })
        ));
        assert!(matches!(
            StateVector::new(vec![f64::INFINITY]),
            Err(SpaceError::NonFiniteCoordinate { index: 0 })
        ));
    }

    #[test]
    fn circle_distance_wraps() {
        assert!((circle_distance(0.1, 0.9) - 0.2).abs() < 1e-15);
        assert!((circle_distance(0.0, 0.5) - 0.5).abs() < 1e-15);
        assert_eq!(circle_distance(0.25, 0.25), 0.0);
        // Distance never exceeds half a turn.
        assert!(circle_distance(0.0, 0.999) <= 0.5);
    }

    #[test]
    fn trajectory_constructor_validates() {
        let s = StateVector::scalar(1.0);
        assert!(matches!(
            SampledTrajectory::new(vec![], vec![]),
            Err(SpaceError::EmptyTrajectory)
        ));
        assert!(matches!(
            SampledTrajectory::new(vec![0.0, 0.0], vec![s.clone(), s.clone()]),
            Err(SpaceError::NonIncreasingGrid { index: 1 })
        ));
        assert!(matches!(
            SampledTrajectory::new(vec![0.0, 1.0], vec![s.clone()]),
            Err(SpaceError::LengthMismatch { .. })
        ));
        assert!(matches!(
            SampledTrajectory::new(vec![0.0, 1.0], vec![s.clone(), StateVector::pair(0.0, 1.0)]),
            Err(SpaceError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sample_flow_constant_case() {
        let flow = constant_flow();
        let traj = sample_flow(&flow, &StateVector::scalar(1.0), &[0.0, 1.0, 2.0]).unwrap();
        for (_, s) in traj.iter() {
            assert_eq!(s, &StateVector::scalar(1.0));
        }
    }

    #[test]
    fn sample_flow_single_point_grid_returns_s0() {
        let flow = RotationFlow { theta: 0.37 };
        let s0 = StateVector::scalar(0.2);
        let traj = sample_flow(&flow, &s0, &[0.0]).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.states()[0], s0);
    }

    #[test]
    fn sample_flow_rotation_half_turn() {
        let flow = RotationFlow { theta: 0.5 };
        let traj = sample_flow(&flow, &StateVector::scalar(0.0), &[0.0, 1.0]).unwrap();
        assert_eq!(traj.states()[0].get(0), 0.0);
        assert_eq!(traj.states()[1].get(0), 0.5);
    }

    #[test]
    fn sample_flow_rejects_bad_grid() {
        let flow = constant_flow();
        let s0 = StateVector::scalar(0.0);
        assert!(matches!(
            sample_flow(&flow, &s0, &[0.0, 1.0, 1.0]),
            Err(SpaceError::NonIncreasingGrid { index: 2 })
        ));
        assert!(matches!(
            sample_flow(&flow, &StateVector::pair(0.0, 0.0), &[0.0]),
            Err(SpaceError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn semigroup_exact_for_rotation() {
        let flow = RotationFlow {
            theta: (5.0f64.sqrt() - 1.0) / 2.0,
        };
        let samples: Vec<StateVector> = (0..5).map(|i| StateVector::scalar(i as f64 / 5.0)).collect();
        let pairs = [(0.5, 0.25), (1.0, 2.0), (3.0, 4.5)];
        let report = check_semigroup(&flow, &samples, &pairs, 1e-12).unwrap();
        assert!(report.pass, "violation {}", report.max_violation);
    }

    #[test]
    fn semigroup_holds_for_exponential_contraction() {
        let flow = FnFlow::new(1, |t: f64, s: &StateVector| {
            StateVector::scalar((-t).exp() * s.get(0))
        });
        let samples = [StateVector::scalar(1.0), StateVector::scalar(-2.5)];
        let pairs = [(0.1, 0.2), (1.0, 1.5), (2.0, 0.7)];
        let report = check_semigroup(&flow, &samples, &pairs, 1e-12).unwrap();
        assert!(report.pass, "violation {}", report.max_violation);
    }

    #[test]
    fn semigroup_detects_broken_flow() {
        // s + t^2 is not a group action: (t+u)^2 != t^2 + u^2.
        let flow = FnFlow::new(1, |t: f64, s: &StateVector| StateVector::scalar(s.get(0) + t * t));
        let samples = [StateVector::scalar(0.0)];
        let pairs = [(1.0, 1.0)];
        let report = check_semigroup(&flow, &samples, &pairs, 1e-12).unwrap();
        assert!(!report.pass);
        assert!(report.max_violation > 0.1);
    }

    #[test]
    fn identity_at_time_zero() {
        let flow = RotationFlow { theta: 0.31 };
        let samples: Vec<StateVector> = (0..7).map(|i| StateVector::scalar(i as f64 / 7.0)).collect();
        assert_eq!(max_identity_violation(&flow, &samples), 0.0);
    }

    #[test]
    fn observable_applies_and_names() {
        let obs = Observable::new("first_coordinate", |s: &StateVector| s.get(0));
        assert_eq!(obs.name(), "first_coordinate");
        assert_eq!(obs.apply(&StateVector::pair(3.0, 4.0)), 3.0);
    }
}
