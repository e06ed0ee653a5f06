//! The three model systems: irrational circle rotation, the logistic map
//! T(x) = 4x(1-x), and the cat map on the torus; plus continued-fraction
//! return-time analysis and sensitivity probes.
//!
//! Conventions: circle angles are measured in turns, so one full revolution
//! is 1.0 and the wrap-around metric is [`circle_distance`]. Long rotation
//! orbits are accumulated with a two-word compensated representation of the
//! angle; naive repeated addition drifts by about n ulps and a single
//! multiplication n*theta loses the low bits of the fractional part once
//! n*theta is large, either of which is fatal to isometry checks at the
//! 1e-15 scale.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{two_sum, CompensatedSum};
use crate::space::{circle_distance, euclidean_distance, torus_distance, StateVector};

#[derive(Debug, Error)]
pub enum MapsError {
    #[error("{what} must be finite, got {value}")]
    NonFinite { what: &'static str, value: f64 },
    #[error("{what} = {value} lies outside {domain}")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("epsilon must lie in (0, 0.5), got {value}")]
    InvalidEpsilon { value: f64 },
    #[error("{reason}")]
    InvalidArgument { reason: &'static str },
    #[error("|theta| = {theta} is too small for exact rational analysis (needs |theta| >= 2^-126 after mantissa reduction)")]
    ThetaBelowExactRange { theta: f64 },
    #[error("system dimension {expected} does not match state dimension {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// The default irrational rotation number, the golden mean (sqrt(5)-1)/2.
/// Its continued fraction is all ones, the worst-approximable case, which
/// makes convergent denominators the Fibonacci numbers.
pub fn golden_theta() -> f64 {
    (5.0f64.sqrt() - 1.0) / 2.0
}

/// Reduces x mod 1 into [0, 1). `rem_euclid(1.0)` alone can round to exactly
/// 1.0 for tiny negative inputs, so that case is folded back to 0.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Point of the circle, as a fraction of a turn in [0, 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleState {
    angle: f64,
}

impl CircleState {
    /// Angle must already lie in [0, 1).
    pub fn new(angle: f64) -> Result<Self, MapsError> {
        if !angle.is_finite() {
            return Err(MapsError::NonFinite {
                what: "angle",
                value: angle,
            });
        }
        if !(0.0..1.0).contains(&angle) {
            return Err(MapsError::OutOfDomain {
                what: "angle",
                value: angle,
                domain: "[0, 1)",
            });
        }
        Ok(Self { angle })
    }

    /// Wraps an arbitrary finite angle into [0, 1).
    pub fn wrapping(angle: f64) -> Result<Self, MapsError> {
        if !angle.is_finite() {
            return Err(MapsError::NonFinite {
                what: "angle",
                value: angle,
            });
        }
        Ok(Self {
            angle: wrap_unit(angle),
        })
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }
}

/// Rigid rotation of the circle by `theta` turns per unit time.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RotationSystem {
    theta: f64,
}

impl RotationSystem {
    /// `theta` is the rotation number per unit time. Irrationality cannot be
    /// checked on floats; every f64 is rational, and "irrational" rotations
    /// are approximated by that rational to within half an ulp.
    pub fn new(theta: f64) -> Result<Self, MapsError> {
        if !theta.is_finite() {
            return Err(MapsError::NonFinite {
                what: "theta",
                value: theta,
            });
        }
        Ok(Self { theta })
    }

    pub fn golden() -> Self {
        Self {
            theta: golden_theta(),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Infinite orbit iterator starting at `start`, one sample per integer
    /// time, beginning with time 0.
    pub fn orbit_angles(&self, start: CircleState) -> RotationOrbit {
        RotationOrbit {
            hi: start.angle(),
            lo: 0.0,
            step: wrap_unit(self.theta),
        }
    }
}

/// Compensated rotation orbit: the angle is carried as an unevaluated sum
/// hi + lo so that each step adds theta with no rounding beyond the
/// correction term, and the mod-1 wrap subtracts 1.0 from hi while hi is in
/// [1, 2), which is exact. Total drift after n steps is O(n * 2^-105).
#[derive(Clone, Debug)]
pub struct RotationOrbit {
    hi: f64,
    lo: f64,
    step: f64,
}

impl Iterator for RotationOrbit {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let sample = wrap_unit(self.hi + self.lo);
        let (mut s, e) = two_sum(self.hi, self.step);
        self.lo += e;
        if s >= 1.0 {
            s -= 1.0;
        }
        let (hi, lo) = two_sum(s, self.lo);
        self.hi = hi;
        self.lo = lo;
        Some(sample)
    }
}

/// One rotation by time `t`: angle' = (angle + theta*t) mod 1.
pub fn rotate(sys: RotationSystem, s: CircleState, t: f64) -> CircleState {
    CircleState {
        angle: wrap_unit(s.angle() + sys.theta() * t),
    }
}

/// Continued-fraction convergent p/q in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Convergent {
    pub p: i64,
    pub q: u64,
}

/// Continued-fraction convergents of `theta`, computed by exact integer
/// arithmetic on the rational value the f64 represents, so every returned
/// pair genuinely satisfies |theta*q - p| < 1/q.
///
/// The zeroth convergent 0/1 is omitted when floor(theta) = 0; for the
/// golden mean this makes the denominators exactly the Fibonacci numbers
/// 1, 2, 3, 5, 8, ... A rational theta with a shorter expansion yields the
/// finite list; the list is also cut short if a convergent would overflow
/// the i64/u64 result type.
pub fn convergents(theta: f64, count: usize) -> Result<Vec<Convergent>, MapsError> {
    if !theta.is_finite() {
        return Err(MapsError::NonFinite {
            what: "theta",
            value: theta,
        });
    }
    if count == 0 {
        return Err(MapsError::InvalidArgument {
            reason: "convergents: count must be at least 1",
        });
    }

    // Exact rational decomposition theta = num / den with den a power of two.
    let (mut num, mut den) = exact_fraction(theta)?;

    let mut out: Vec<Convergent> = Vec::new();
    // p_{-1}/q_{-1} = 1/0, p_0/q_0 = a_0/1 seeds for the recurrence
    // p_k = a_k p_{k-1} + p_{k-2}.
    let mut p_prev: i128 = 1;
    let mut q_prev: i128 = 0;
    let mut p_cur: i128;
    let mut q_cur: i128;

    // a_0 = floor(theta); Euclidean division keeps the remainder nonnegative.
    let a0 = num.div_euclid(den);
    let mut r = num.rem_euclid(den);
    p_cur = a0;
    q_cur = 1;
    if a0 != 0 {
        push_convergent(&mut out, p_cur, q_cur)?;
    }
    num = den;
    den = r;

    while out.len() < count && den != 0 {
        let a = num / den;
        r = num % den;
        let p_next = match a.checked_mul(p_cur).and_then(|v| v.checked_add(p_prev)) {
            Some(v) => v,
            None => break,
        };
        let q_next = match a.checked_mul(q_cur).and_then(|v| v.checked_add(q_prev)) {
            Some(v) => v,
            None => break,
        };
        if p_next.unsigned_abs() > i64::MAX as u128 || q_next.unsigned_abs() > u64::MAX as u128 {
            break;
        }
        p_prev = p_cur;
        q_prev = q_cur;
        p_cur = p_next;
        q_cur = q_next;
        push_convergent(&mut out, p_cur, q_cur)?;
        num = den;
        den = r;
    }
    Ok(out)
}

fn push_convergent(out: &mut Vec<Convergent>, p: i128, q: i128) -> Result<(), MapsError> {
    debug_assert_eq!(gcd(p.unsigned_abs(), q.unsigned_abs()), 1);
    out.push(Convergent {
        p: p as i64,
        q: q as u64,
    });
    Ok(())
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Writes a finite f64 as num/den exactly, with den = 2^k for some k >= 0.
fn exact_fraction(x: f64) -> Result<(i128, i128), MapsError> {
    if x == 0.0 {
        return Ok((0, 1));
    }
    let bits = x.abs().to_bits();
    let raw_exp = (bits >> 52) & 0x7ff;
    let raw_mant = bits & ((1u64 << 52) - 1);
    let (mut mant, mut exp) = if raw_exp == 0 {
        (raw_mant, -1074i64)
    } else {
        (raw_mant | (1u64 << 52), raw_exp as i64 - 1075)
    };
    while mant % 2 == 0 && exp < 0 {
        mant /= 2;
        exp += 1;
    }
    let signed_mant = if x < 0.0 { -(mant as i128) } else { mant as i128 };
    if exp >= 0 {
        // Integer-valued theta; den = 1, num = mant * 2^exp if it fits.
        if exp > 62 {
            return Err(MapsError::ThetaBelowExactRange { theta: x });
        }
        return Ok((signed_mant << exp, 1));
    }
    if -exp > 126 {
        return Err(MapsError::ThetaBelowExactRange { theta: x });
    }
    Ok((signed_mant, 1i128 << (-exp)))
}

/// Integer times n in [1, n_max] whose rotation iterate lies strictly within
/// `epsilon` (circle distance) of the starting point, in increasing order.
pub fn return_times(
    sys: RotationSystem,
    start: CircleState,
    epsilon: f64,
    n_max: usize,
) -> Result<Vec<usize>, MapsError> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(MapsError::InvalidEpsilon { value: epsilon });
    }
    if n_max == 0 {
        return Err(MapsError::InvalidArgument {
            reason: "return_times: n_max must be at least 1",
        });
    }
    let a0 = start.angle();
    let mut out = Vec::new();
    for (n, angle) in sys.orbit_angles(start).enumerate().take(n_max + 1).skip(1) {
        if circle_distance(angle, a0) < epsilon {
            out.push(n);
        }
    }
    Ok(out)
}

/// One application of T(x) = 4x(1-x). The product is clamped back into
/// [0, 1]: for x just below 0.5 the rounded product can exceed 1 by one ulp,
/// and an orbit stepping past 1 escapes to -infinity.
pub fn logistic_step(x: f64) -> Result<f64, MapsError> {
    check_unit_interval("x", x)?;
    Ok(logistic_step_unchecked(x))
}

#[inline]
pub(crate) fn logistic_step_unchecked(x: f64) -> f64 {
    (4.0 * x * (1.0 - x)).clamp(0.0, 1.0)
}

/// Orbit x_0, T(x_0), ..., T^n(x_0) of length n + 1.
pub fn logistic_orbit(x0: f64, n: usize) -> Result<Vec<f64>, MapsError> {
    check_unit_interval("x0", x0)?;
    let mut out = Vec::with_capacity(n + 1);
    let mut x = x0;
    out.push(x);
    for _ in 0..n {
        x = logistic_step_unchecked(x);
        out.push(x);
    }
    Ok(out)
}

fn check_unit_interval(what: &'static str, x: f64) -> Result<(), MapsError> {
    if !x.is_finite() {
        return Err(MapsError::NonFinite { what, value: x });
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(MapsError::OutOfDomain {
            what,
            value: x,
            domain: "[0, 1]",
        });
    }
    Ok(())
}

/// The two preimages y_-(x) <= 1/2 <= y_+(x) of x under T, namely
/// (1 -+ sqrt(1-x)) / 2.
pub fn logistic_preimages(x: f64) -> Result<(f64, f64), MapsError> {
    check_unit_interval("x", x)?;
    let root = (1.0 - x).sqrt();
    Ok(((1.0 - root) / 2.0, (1.0 + root) / 2.0))
}

/// Point of the two-torus with both coordinates in [0, 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusState {
    x: f64,
    y: f64,
}

impl TorusState {
    pub fn new(x: f64, y: f64) -> Result<Self, MapsError> {
        for (what, v) in [("x", x), ("y", y)] {
            if !v.is_finite() {
                return Err(MapsError::NonFinite { what, value: v });
            }
            if !(0.0..1.0).contains(&v) {
                return Err(MapsError::OutOfDomain {
                    what,
                    value: v,
                    domain: "[0, 1)",
                });
            }
        }
        Ok(Self { x, y })
    }

    /// Wraps arbitrary finite coordinates into [0, 1) x [0, 1).
    pub fn wrapping(x: f64, y: f64) -> Result<Self, MapsError> {
        for (what, v) in [("x", x), ("y", y)] {
            if !v.is_finite() {
                return Err(MapsError::NonFinite { what, value: v });
            }
        }
        Ok(Self {
            x: wrap_unit(x),
            y: wrap_unit(y),
        })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }
}

/// The hyperbolic toral automorphism (x, y) -> (x + y, 2x + y) mod 1.
pub fn cat_step(s: TorusState) -> TorusState {
    TorusState {
        x: wrap_unit(s.x + s.y),
        y: wrap_unit(2.0 * s.x + s.y),
    }
}

/// Eigenvalues of the cat matrix [[1, 1], [2, 1]], computed from its trace
/// and determinant: lambda^2 - 2 lambda - 1 = 0, so lambda = 1 +- sqrt(2).
pub fn cat_eigen() -> (f64, f64) {
    let trace = 2.0f64;
    let det = -1.0f64;
    let disc = (trace * trace - 4.0 * det).sqrt();
    ((trace + disc) / 2.0, (trace - disc) / 2.0)
}

/// Unit eigenvector for the expanding eigenvalue: (lambda_+ - 1) = sqrt(2)
/// solves (1 - lambda) v.x + v.y = 0, giving direction (1, sqrt(2)).
pub fn cat_unstable_direction() -> (f64, f64) {
    let (lambda_plus, _) = cat_eigen();
    let vy = lambda_plus - 1.0;
    let norm = (1.0 + vy * vy).sqrt();
    (1.0 / norm, vy / norm)
}

/// Expansion rate of the cat map, taken from the eigenvalue: ln(1 + sqrt(2)).
pub fn cat_lyapunov() -> f64 {
    cat_eigen().0.ln()
}

/// Time average of ln|T'| along a logistic orbit, with T'(x) = 4 - 8x.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LyapunovEstimate {
    pub value: f64,
    /// Terms dropped because the orbit hit the critical point exactly
    /// (derivative 0, logarithm undefined).
    pub skipped_terms: usize,
    pub terms_used: usize,
}

/// Estimates the logistic Lyapunov exponent as the average of ln|4 - 8x_k|
/// over n orbit points. Terms where the orbit hits x = 0.5 exactly are
/// skipped and counted; the average is over the remaining terms.
pub fn logistic_lyapunov(x0: f64, n: usize) -> Result<LyapunovEstimate, MapsError> {
    check_unit_interval("x0", x0)?;
    if n < 10_000 {
        return Err(MapsError::InvalidArgument {
            reason: "logistic_lyapunov: n must be at least 10^4",
        });
    }
    let mut sum = CompensatedSum::new();
    let mut skipped = 0usize;
    let mut x = x0;
    for _ in 0..n {
        let deriv = 4.0 - 8.0 * x;
        if deriv == 0.0 {
            skipped += 1;
        } else {
            sum.add(deriv.abs().ln());
        }
        x = logistic_step_unchecked(x);
    }
    let used = n - skipped;
    if used == 0 {
        return Err(MapsError::InvalidArgument {
            reason: "logistic_lyapunov: every orbit term hit the critical point",
        });
    }
    Ok(LyapunovEstimate {
        value: sum.value() / used as f64,
        skipped_terms: skipped,
        terms_used: used,
    })
}

/// A discrete-time system on a finite-dimensional state space, the common
/// interface behind the experiment registry. States are positions in the
/// system's own coordinates; `distance` is the metric natural to the space
/// (wrap-around for circle and torus).
pub trait DiscreteSystem: Send + Sync {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    fn step(&self, s: &StateVector) -> StateVector;

    fn distance(&self, a: &StateVector, b: &StateVector) -> f64 {
        euclidean_distance(a, b)
    }

    /// Folds an arbitrary point into the system's domain.
    fn wrap(&self, s: &StateVector) -> StateVector {
        s.clone()
    }

    /// Streams the orbit points x_0 .. x_n to `visitor` without storing
    /// them. The default applies `step` repeatedly; systems with a better
    /// accumulation scheme override this.
    fn visit_orbit(&self, s0: &StateVector, n: usize, visitor: &mut dyn FnMut(usize, &StateVector)) {
        let mut x = s0.clone();
        visitor(0, &x);
        for k in 1..=n {
            x = self.step(&x);
            visitor(k, &x);
        }
    }

    /// Orbit of length n + 1 starting at s0, materialized.
    fn orbit(&self, s0: &StateVector, n: usize) -> Vec<StateVector> {
        let mut out = Vec::with_capacity(n + 1);
        self.visit_orbit(s0, n, &mut |_, s| out.push(s.clone()));
        out
    }
}

impl DiscreteSystem for RotationSystem {
    fn name(&self) -> &'static str {
        "rotation"
    }

    fn dim(&self) -> usize {
        1
    }

    fn step(&self, s: &StateVector) -> StateVector {
        StateVector::scalar(wrap_unit(s.get(0) + self.theta))
    }

    fn distance(&self, a: &StateVector, b: &StateVector) -> f64 {
        circle_distance(a.get(0), b.get(0))
    }

    fn wrap(&self, s: &StateVector) -> StateVector {
        StateVector::scalar(wrap_unit(s.get(0)))
    }

    fn visit_orbit(&self, s0: &StateVector, n: usize, visitor: &mut dyn FnMut(usize, &StateVector)) {
        let start = CircleState {
            angle: wrap_unit(s0.get(0)),
        };
        for (k, angle) in self.orbit_angles(start).take(n + 1).enumerate() {
            visitor(k, &StateVector::scalar(angle));
        }
    }
}

/// The fixed quadratic map T(x) = 4x(1-x) on [0, 1].
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct LogisticSystem;

impl DiscreteSystem for LogisticSystem {
    fn name(&self) -> &'static str {
        "logistic"
    }

    fn dim(&self) -> usize {
        1
    }

    fn step(&self, s: &StateVector) -> StateVector {
        StateVector::scalar(logistic_step_unchecked(s.get(0).clamp(0.0, 1.0)))
    }

    fn wrap(&self, s: &StateVector) -> StateVector {
        StateVector::scalar(s.get(0).clamp(0.0, 1.0))
    }
}

/// The cat map as a registry system.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct CatMap;

impl DiscreteSystem for CatMap {
    fn name(&self) -> &'static str {
        "cat"
    }

    fn dim(&self) -> usize {
        2
    }

    fn step(&self, s: &StateVector) -> StateVector {
        let x = s.get(0);
        let y = s.get(1);
        StateVector::pair(wrap_unit(x + y), wrap_unit(2.0 * x + y))
    }

    fn distance(&self, a: &StateVector, b: &StateVector) -> f64 {
        torus_distance(a.coords(), b.coords())
    }

    fn wrap(&self, s: &StateVector) -> StateVector {
        StateVector::pair(wrap_unit(s.get(0)), wrap_unit(s.get(1)))
    }
}

/// The identity map; its every orbit is constant, so every return time is 1.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IdentitySystem {
    pub dim: usize,
}

impl DiscreteSystem for IdentitySystem {
    fn name(&self) -> &'static str {
        "identity"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn step(&self, s: &StateVector) -> StateVector {
        s.clone()
    }
}

/// Serializable system selector for configs and the CLI.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Rotation { theta: f64 },
    Logistic,
    Cat,
    Identity { dim: usize },
}

/// Builds the named system as a trait object.
pub fn build_system(spec: &SystemSpec) -> Result<Box<dyn DiscreteSystem>, MapsError> {
    match spec {
        SystemSpec::Rotation { theta } => Ok(Box::new(RotationSystem::new(*theta)?)),
        SystemSpec::Logistic => Ok(Box::new(LogisticSystem)),
        SystemSpec::Cat => Ok(Box::new(CatMap)),
        SystemSpec::Identity { dim } => {
            if *dim == 0 {
                return Err(MapsError::InvalidArgument {
                    reason: "identity system needs dim >= 1",
                });
            }
            Ok(Box::new(IdentitySystem { dim: *dim }))
        }
    }
}

/// Distances between two orbits started `offset` apart, and the first step
/// at which they exceed `threshold`.
#[derive(Clone, Debug, Serialize)]
pub struct SeparationTrace {
    pub separations: Vec<f64>,
    pub first_exceed: Option<usize>,
    pub threshold: f64,
}

/// Runs the two orbits from x0 and x0 + offset (folded into the domain) for
/// n steps and records their distance at every step. For the expanding maps
/// a microscopic offset blows up to order one; rotations are isometries and
/// the separation never changes.
pub fn sensitivity_probe(
    system: &dyn DiscreteSystem,
    x0: &StateVector,
    offset: &[f64],
    n: usize,
    threshold: f64,
) -> Result<SeparationTrace, MapsError> {
    if x0.dim() != system.dim() {
        return Err(MapsError::DimensionMismatch {
            expected: system.dim(),
            got: x0.dim(),
        });
    }
    if offset.len() != system.dim() {
        return Err(MapsError::DimensionMismatch {
            expected: system.dim(),
            got: offset.len(),
        });
    }
    if !(threshold > 0.0) {
        return Err(MapsError::InvalidArgument {
            reason: "sensitivity_probe: threshold must be positive",
        });
    }
    let shifted = StateVector::new(
        x0.coords()
            .iter()
            .zip(offset)
            .map(|(a, d)| a + d)
            .collect(),
    )
    .map_err(|_| MapsError::InvalidArgument {
        reason: "sensitivity_probe: offset produced a non-finite state",
    })?;
    let a = system.orbit(&system.wrap(x0), n);
    let b = system.orbit(&system.wrap(&shifted), n);
    let separations: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(u, v)| system.distance(u, v))
        .collect();
    let first_exceed = separations.iter().position(|&d| d > threshold);
    Ok(SeparationTrace {
        separations,
        first_exceed,
        threshold,
    })
}

/// Draws a uniform point of the unit square as a torus state.
pub fn uniform_torus_point(rng: &mut impl Rng) -> TorusState {
    TorusState {
        x: rng.gen::<f64>(),
        y: rng.gen::<f64>(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rotate_quarter_turns() {
        let sys = RotationSystem::new(0.25).unwrap();
        let s = CircleState::new(0.0).unwrap();
        assert_eq!(rotate(sys, s, 2.0).angle(), 0.5);
    }

    #[test]
    fn rotate_time_zero_is_identity() {
        let sys = RotationSystem::golden();
        for angle in [0.0, 0.123, 0.7, 0.999] {
            let s = CircleState::new(angle).unwrap();
            assert_eq!(rotate(sys, s, 0.0).angle(), angle);
        }
    }

    /// Fixed-point mod-1 oracle: theta as an exact 64-bit binary fraction,
    /// n * theta reduced mod 1 in integer arithmetic.
    fn fixed_point_angle(theta: f64, n: u64) -> f64 {
        let frac = (theta * (2.0f64).powi(64)) as u128;
        let prod = frac * n as u128;
        let low = prod & ((1u128 << 64) - 1);
        (low as f64) / (2.0f64).powi(64)
    }

    #[test]
    fn rotate_matches_fixed_point_oracle() {
        let theta = golden_theta();
        let sys = RotationSystem::new(theta).unwrap();
        let s = CircleState::new(0.0).unwrap();
        for t in 1..=5u64 {
            let got = rotate(sys, s, t as f64).angle();
            let want = fixed_point_angle(theta, t);
            assert!(
                circle_distance(got, want) < 1e-12,
                "t = {t}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn orbit_iterator_matches_fixed_point_oracle_at_long_times() {
        let theta = golden_theta();
        let sys = RotationSystem::new(theta).unwrap();
        let start = CircleState::new(0.0).unwrap();
        let mut orbit = sys.orbit_angles(start);
        let mut worst: f64 = 0.0;
        for n in 0..=100_000u64 {
            let angle = orbit.next().unwrap();
            let want = fixed_point_angle(theta, n);
            worst = worst.max(circle_distance(angle, want));
        }
        assert!(worst < 1e-15, "worst drift {worst:e}");
    }

    #[test]
    fn orbit_stays_in_unit_interval() {
        let sys = RotationSystem::new(0.9999).unwrap();
        for angle in sys.orbit_angles(CircleState::new(0.5).unwrap()).take(10_000) {
            assert!((0.0..1.0).contains(&angle), "angle {angle} escaped [0,1)");
        }
    }

    #[test]
    fn rotation_is_an_isometry() {
        let sys = RotationSystem::golden();
        let a0 = 0.3;
        let delta = 1e-6;
        let orbit_a: Vec<f64> = sys
            .orbit_angles(CircleState::new(a0).unwrap())
            .take(1000)
            .collect();
        let orbit_b: Vec<f64> = sys
            .orbit_angles(CircleState::new(a0 + delta).unwrap())
            .take(1000)
            .collect();
        for (a, b) in orbit_a.iter().zip(&orbit_b) {
            assert!((circle_distance(*a, *b) - delta).abs() < 1e-15);
        }
    }

    #[test]
    fn golden_convergents_are_fibonacci() {
        let list = convergents(golden_theta(), 10).unwrap();
        let denominators: Vec<u64> = list.iter().map(|c| c.q).collect();
        assert_eq!(denominators, vec![1, 2, 3, 5, 8, 13, 21, 34, 55, 89]);
        // Numerators are the shifted Fibonacci sequence.
        let numerators: Vec<i64> = list.iter().map(|c| c.p).collect();
        assert_eq!(numerators, vec![1, 1, 2, 3, 5, 8, 13, 21, 34, 55]);
    }

    #[test]
    fn rational_theta_gives_finite_list() {
        let list = convergents(0.5, 10).unwrap();
        assert_eq!(list, vec![Convergent { p: 1, q: 2 }]);

        let list = convergents(0.25, 10).unwrap();
        assert_eq!(list, vec![Convergent { p: 1, q: 4 }]);
    }

    #[test]
    fn convergents_of_theta_above_one_include_integer_part() {
        let list = convergents(2.5, 10).unwrap();
        assert_eq!(
            list,
            vec![Convergent { p: 2, q: 1 }, Convergent { p: 5, q: 2 }]
        );
    }

    #[test]
    fn convergents_satisfy_dirichlet_bound() {
        for theta in [golden_theta(), std::f64::consts::PI, 2.0f64.sqrt(), 0.3] {
            for c in convergents(theta, 20).unwrap() {
                let defect = (theta * c.q as f64 - c.p as f64).abs();
                assert!(
                    defect < 1.0 / c.q as f64,
                    "theta {theta}: {}/{} defect {defect}",
                    c.p,
                    c.q
                );
            }
        }
    }

    #[test]
    fn period_two_rotation_returns_every_even_step() {
        let sys = RotationSystem::new(0.5).unwrap();
        let start = CircleState::new(0.0).unwrap();
        let times = return_times(sys, start, 0.01, 20).unwrap();
        assert_eq!(times, vec![2, 4, 6, 8, 10, 12, 14, 16, 18, 20]);
    }

    #[test]
    fn golden_return_times_include_fibonacci_denominator() {
        let sys = RotationSystem::golden();
        let start = CircleState::new(0.0).unwrap();
        let times = return_times(sys, start, 0.01, 400).unwrap();
        assert!(times.contains(&144), "times {times:?}");
        // The first return is the Fibonacci denominator 55, whose actual
        // defect |55*theta - 34| is about 0.0081, already inside epsilon.
        assert_eq!(times.first(), Some(&55));
    }

    #[test]
    fn convergent_denominators_return_within_one_over_q() {
        let sys = RotationSystem::golden();
        let start = CircleState::new(0.0).unwrap();
        let orbit: Vec<f64> = sys.orbit_angles(start).take(10_947).collect();
        for c in convergents(golden_theta(), 20).unwrap() {
            let q = c.q as usize;
            let d = circle_distance(orbit[q], start.angle());
            assert!(d <= 1.0 / c.q as f64, "q = {q}: distance {d}");
        }
    }

    #[test]
    fn return_times_rejects_bad_epsilon() {
        let sys = RotationSystem::golden();
        let start = CircleState::new(0.0).unwrap();
        assert!(return_times(sys, start, 0.5, 10).is_err());
        assert!(return_times(sys, start, 0.0, 10).is_err());
        assert!(return_times(sys, start, -0.1, 10).is_err());
    }

    #[test]
    fn logistic_fixed_points_and_vertex() {
        assert_eq!(logistic_step(0.5).unwrap(), 1.0);
        assert_eq!(logistic_step(0.0).unwrap(), 0.0);
        assert_eq!(logistic_step(0.75).unwrap(), 0.75);
        assert_eq!(logistic_step(1.0).unwrap(), 0.0);
        assert!(logistic_step(1.5).is_err());
        assert!(logistic_step(-0.1).is_err());
    }

    #[test]
    fn logistic_orbit_has_requested_length() {
        let orbit = logistic_orbit(0.3, 10).unwrap();
        assert_eq!(orbit.len(), 11);
        assert_eq!(orbit[0], 0.3);
        for w in orbit.windows(2) {
            assert_eq!(w[1], logistic_step(w[0]).unwrap());
        }
    }

    #[test]
    fn logistic_orbit_never_escapes() {
        // x just below 0.5 would step to 1 + ulp without the clamp.
        let near_half = 0.5 - f64::EPSILON / 4.0;
        let orbit = logistic_orbit(near_half, 100).unwrap();
        for x in orbit {
            assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn preimage_examples() {
        assert_eq!(logistic_preimages(1.0).unwrap(), (0.5, 0.5));
        assert_eq!(logistic_preimages(0.0).unwrap(), (0.0, 1.0));
        let (lo, hi) = logistic_preimages(0.64).unwrap();
        assert!((lo - 0.2).abs() < 1e-15);
        assert!((hi - 0.8).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn preimages_invert_the_map(x in 0.0f64..=1.0) {
            let (lo, hi) = logistic_preimages(x).unwrap();
            prop_assert!(lo <= 0.5 && 0.5 <= hi);
            prop_assert!((lo + hi - 1.0).abs() < 1e-15);
            prop_assert!((logistic_step(lo).unwrap() - x).abs() < 1e-12);
            prop_assert!((logistic_step(hi).unwrap() - x).abs() < 1e-12);
        }
    }

    /// Exact rational cat orbit: coordinates p/den with den fixed, the map
    /// acting on numerators mod den.
    fn rational_cat_orbit(px: i128, py: i128, den: i128, n: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(n + 1);
        let (mut x, mut y) = (px.rem_euclid(den), py.rem_euclid(den));
        out.push((x as f64 / den as f64, y as f64 / den as f64));
        for _ in 0..n {
            let nx = (x + y).rem_euclid(den);
            let ny = (2 * x + y).rem_euclid(den);
            x = nx;
            y = ny;
            out.push((x as f64 / den as f64, y as f64 / den as f64));
        }
        out
    }

    #[test]
    fn cat_step_hand_cases() {
        let fixed = cat_step(TorusState::new(0.0, 0.0).unwrap());
        assert_eq!((fixed.x(), fixed.y()), (0.0, 0.0));
        let s = cat_step(TorusState::new(0.5, 0.5).unwrap());
        assert_eq!((s.x(), s.y()), (0.0, 0.5));
    }

    #[test]
    fn cat_orbit_matches_rational_oracle() {
        let oracle = rational_cat_orbit(1, 2, 10, 6);
        let mut s = TorusState::new(0.1, 0.2).unwrap();
        for (i, (ox, oy)) in oracle.iter().enumerate() {
            assert!(
                torus_distance(&[s.x(), s.y()], &[*ox, *oy]) < 1e-12,
                "step {i}: got ({}, {}), want ({ox}, {oy})",
                s.x(),
                s.y()
            );
            s = cat_step(s);
        }
    }

    #[test]
    fn cat_eigenvalues_from_characteristic_polynomial() {
        let (plus, minus) = cat_eigen();
        assert!((plus - (1.0 + 2.0f64.sqrt())).abs() < 1e-12);
        assert!((minus - (1.0 - 2.0f64.sqrt())).abs() < 1e-12);
        assert!((plus * minus + 1.0).abs() < 1e-12);
        assert!((plus + minus - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unstable_direction_is_eigenvector() {
        let (vx, vy) = cat_unstable_direction();
        let (lambda, _) = cat_eigen();
        // Apply the integer matrix and compare against lambda * v.
        let (wx, wy) = (vx + vy, 2.0 * vx + vy);
        assert!((wx - lambda * vx).abs() < 1e-12);
        assert!((wy - lambda * vy).abs() < 1e-12);
        assert!(((vx * vx + vy * vy) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cat_preserves_box_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 1_000_000usize;
        let in_box = |s: &TorusState| s.x() >= 0.2 && s.x() < 0.5 && s.y() >= 0.3 && s.y() < 0.7;
        let mut before = 0usize;
        let mut after = 0usize;
        for _ in 0..n {
            let s = uniform_torus_point(&mut rng);
            if in_box(&s) {
                before += 1;
            }
            if in_box(&cat_step(s)) {
                after += 1;
            }
        }
        let p = 0.3 * 0.4;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let diff = (before as f64 - after as f64).abs() / n as f64;
        assert!(
            diff <= 3.0 * std::f64::consts::SQRT_2 * se,
            "mass difference {diff} vs se {se}"
        );
    }

    #[test]
    fn logistic_lyapunov_at_zero_is_log_four() {
        let est = logistic_lyapunov(0.0, 10_000).unwrap();
        assert!((est.value - 4.0f64.ln()).abs() < 1e-12);
        assert_eq!(est.skipped_terms, 0);
    }

    #[test]
    fn logistic_lyapunov_near_log_two() {
        let est = logistic_lyapunov(0.3, 1_000_000).unwrap();
        assert!(
            (est.value - 2.0f64.ln()).abs() < 0.01,
            "estimate {} vs ln 2 {}",
            est.value,
            2.0f64.ln()
        );
    }

    #[test]
    fn lyapunov_skips_critical_hit() {
        // 0.5 -> 1.0 -> 0.0 -> 0.0 ...; first term has derivative 0.
        let est = logistic_lyapunov(0.5, 10_000).unwrap();
        assert_eq!(est.skipped_terms, 1);
        assert_eq!(est.terms_used, 9_999);
        assert!((est.value - 4.0f64.ln()).abs() < 1e-3);
    }

    #[test]
    fn lyapunov_rejects_short_runs() {
        assert!(logistic_lyapunov(0.3, 100).is_err());
    }

    #[test]
    fn cat_lyapunov_is_log_of_expanding_eigenvalue() {
        assert_eq!(cat_lyapunov(), (1.0 + 2.0f64.sqrt()).ln());
    }

    #[test]
    fn registry_builds_each_system() {
        let specs = [
            SystemSpec::Rotation {
                theta: golden_theta(),
            },
            SystemSpec::Logistic,
            SystemSpec::Cat,
            SystemSpec::Identity { dim: 3 },
        ];
        let names: Vec<&str> = specs
            .iter()
            .map(|s| build_system(s).unwrap().name())
            .collect();
        assert_eq!(names, vec!["rotation", "logistic", "cat", "identity"]);
        assert!(build_system(&SystemSpec::Identity { dim: 0 }).is_err());
        assert!(build_system(&SystemSpec::Rotation { theta: f64::NAN }).is_err());
    }

    #[test]
    fn trait_orbit_agrees_with_concrete_steps() {
        let sys = build_system(&SystemSpec::Cat).unwrap();
        let orbit = sys.orbit(&StateVector::pair(0.1, 0.2), 6);
        let oracle = rational_cat_orbit(1, 2, 10, 6);
        for (s, (ox, oy)) in orbit.iter().zip(&oracle) {
            assert!(torus_distance(s.coords(), &[*ox, *oy]) < 1e-12);
        }
    }

    #[test]
    fn sensitivity_rotation_is_flat() {
        let sys = build_system(&SystemSpec::Rotation {
            theta: golden_theta(),
        })
        .unwrap();
        let trace =
            sensitivity_probe(sys.as_ref(), &StateVector::scalar(0.2), &[1e-6], 200, 0.5).unwrap();
        assert_eq!(trace.first_exceed, None);
        for d in &trace.separations {
            assert!((d - 1e-6).abs() < 1e-15);
        }
    }

    #[test]
    fn sensitivity_logistic_escapes() {
        let sys = build_system(&SystemSpec::Logistic).unwrap();
        let trace =
            sensitivity_probe(sys.as_ref(), &StateVector::scalar(0.3), &[1e-9], 60, 0.5).unwrap();
        let escape = trace.first_exceed.expect("microscopic offset must escape");
        assert!(escape <= 60, "escape step {escape}");
        // Step-0 separation is the offset up to the rounding of 0.3 + 1e-9.
        assert!((trace.separations[0] - 1e-9).abs() < 1e-12);
    }

    #[test]
    fn sensitivity_cat_escapes_along_unstable_direction() {
        let sys = build_system(&SystemSpec::Cat).unwrap();
        let (vx, vy) = cat_unstable_direction();
        let trace = sensitivity_probe(
            sys.as_ref(),
            &StateVector::pair(0.1, 0.2),
            &[1e-9 * vx, 1e-9 * vy],
            30,
            0.5,
        )
        .unwrap();
        let escape = trace.first_exceed.expect("unstable offset must escape");
        // Growth (1+sqrt(2))^n from 1e-9 crosses 0.5 near n = 23.
        assert!(escape <= 30, "escape step {escape}");
        assert!(escape >= 15, "escape step {escape} implausibly early");
    }

    #[test]
    fn sensitivity_rejects_mismatched_dimensions() {
        let sys = build_system(&SystemSpec::Cat).unwrap();
        assert!(sensitivity_probe(sys.as_ref(), &StateVector::scalar(0.1), &[1e-9], 10, 0.5).is_err());
        assert!(sensitivity_probe(
            sys.as_ref(),
            &StateVector::pair(0.1, 0.2),
            &[1e-9],
            10,
            0.5
        )
        .is_err());
    }

    #[test]
    fn circle_state_validation() {
        assert!(CircleState::new(1.0).is_err());
        assert!(CircleState::new(-0.1).is_err());
        assert!(CircleState::new(f64::NAN).is_err());
        assert_eq!(CircleState::wrapping(1.25).unwrap().angle(), 0.25);
        assert_eq!(CircleState::wrapping(-0.25).unwrap().angle(), 0.75);
    }

    #[test]
    fn wrap_unit_never_returns_one() {
        assert_eq!(wrap_unit(-1e-18), 0.0);
        assert_eq!(wrap_unit(1.0), 0.0);
        assert_eq!(wrap_unit(2.5), 0.5);
        assert!(wrap_unit(0.999999) < 1.0);
    }
}
