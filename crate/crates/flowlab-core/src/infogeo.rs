//! Fisher geometry on the interior of the probability simplex: the diagonal
//! metric and its inverse, KL and Bregman divergences, the closed-form
//! metric gradient with a finite-difference oracle, and explicit-Euler
//! gradient flow.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InfogeoError {
    #[error("{reason}")]
    InvalidArgument { reason: &'static str },
    #[error("coordinate {index} = {value} is within 1e-9 of the simplex boundary")]
    BoundaryViolation { index: usize, value: f64 },
    #[error("coordinates sum to {sum}, expected 1 within 1e-12")]
    NotNormalized { sum: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("components sum to {sum}, not tangent within 1e-10")]
    NotTangent { sum: f64 },
    #[error("finite-difference step {step} pushes coordinate {index} = {value} nonpositive")]
    FdStepTooLarge {
        step: f64,
        index: usize,
        value: f64,
    },
    #[error("step halving stalled at divergence {divergence}")]
    FlowStalled { divergence: f64 },
    #[error("flow did not reach tol within {steps} steps (divergence {divergence})")]
    FlowExhausted { steps: usize, divergence: f64 },
}

/// Strictly interior point of the simplex: positive coordinates summing
/// to 1. Points within 1e-9 of the boundary are rejected, not clamped; the
/// metric entries 1/p_i make boundary points meaningless.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimplexPoint {
    probs: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(probs: Vec<f64>) -> Result<Self, InfogeoError> {
        if probs.len() < 2 {
            return Err(InfogeoError::InvalidArgument {
                reason: "a simplex point needs at least 2 coordinates",
            });
        }
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(InfogeoError::InvalidArgument {
                reason: "coordinates must be finite",
            });
        }
        for (index, &value) in probs.iter().enumerate() {
            if value <= 1e-9 {
                return Err(InfogeoError::BoundaryViolation { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(InfogeoError::NotNormalized { sum });
        }
        Ok(Self { probs })
    }

    /// Rescales arbitrary positive weights to sum 1, then validates.
    pub fn normalized(weights: Vec<f64>) -> Result<Self, InfogeoError> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(InfogeoError::InvalidArgument {
                reason: "weights must have a positive finite sum",
            });
        }
        Self::new(weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn uniform(n: usize) -> Result<Self, InfogeoError> {
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }
}

/// Vector tangent to the simplex at some base point: components sum to 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TangentVector {
    components: Vec<f64>,
}

impl TangentVector {
    pub fn new(components: Vec<f64>) -> Result<Self, InfogeoError> {
        let sum: f64 = components.iter().sum();
        if sum.abs() > 1e-10 {
            return Err(InfogeoError::NotTangent { sum });
        }
        Ok(Self { components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |acc, c| acc.max(c.abs()))
    }
}

/// Diagonal of the metric at p: g_ii = 1/p_i (off-diagonal entries are 0).
pub fn fisher_metric(p: &SimplexPoint) -> Vec<f64> {
    p.probs().iter().map(|&pi| 1.0 / pi).collect()
}

/// Full inverse metric g^ij = p_i delta_ij - p_i p_j. Symmetric; every row
/// sums to 0, so it annihilates constant covectors (the normal direction).
pub fn inverse_fisher(p: &SimplexPoint) -> Vec<Vec<f64>> {
    let probs = p.probs();
    (0..p.dim())
        .map(|i| {
            (0..p.dim())
                .map(|j| {
                    let kron = if i == j { probs[i] } else { 0.0 };
                    kron - probs[i] * probs[j]
                })
                .collect()
        })
        .collect()
}

/// Applies the inverse metric to a covector without materializing the
/// matrix: (g^-1 eta)_i = p_i (eta_i - mean), where mean is the p-weighted
/// average of eta normalized by the stored coordinate sum. The
/// normalization makes a constant covector map to exactly zero.
pub fn raise_index(p: &SimplexPoint, covector: &[f64]) -> Result<TangentVector, InfogeoError> {
    if covector.len() != p.dim() {
        return Err(InfogeoError::DimensionMismatch {
            left: p.dim(),
            right: covector.len(),
        });
    }
    let probs = p.probs();
    let weight: f64 = probs.iter().sum();
    let mean: f64 = probs
        .iter()
        .zip(covector)
        .map(|(&pi, &c)| pi * c)
        .sum::<f64>()
        / weight;
    TangentVector::new(
        probs
            .iter()
            .zip(covector)
            .map(|(&pi, &c)| pi * (c - mean))
            .collect(),
    )
}

/// Kullback-Leibler divergence D(p || q) = sum p_i ln(p_i / q_i).
pub fn kl_divergence(p: &SimplexPoint, q: &SimplexPoint) -> Result<f64, InfogeoError> {
    if p.dim() != q.dim() {
        return Err(InfogeoError::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    Ok(kl_ambient(p.probs(), q.probs()))
}

/// KL formula on raw positive coordinate slices. Defined off the simplex
/// too, which is what the finite-difference oracle perturbs.
pub fn kl_ambient(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(&pi, &qi)| pi * (pi / qi).ln()).sum()
}

/// Metric gradient of D(. || q) at p, in coordinates:
/// grad_i = p_i (l_i - mean_p l) with l_i = 1 + ln(p_i / q_i).
///
/// This is the Euclidean gradient of the KL formula with its index raised
/// by the inverse metric; the raise subtracts the weighted mean, which
/// lands the result in the tangent space and kills the constant +1.
pub fn fisher_gradient_kl(
    p: &SimplexPoint,
    q: &SimplexPoint,
) -> Result<TangentVector, InfogeoError> {
    if p.dim() != q.dim() {
        return Err(InfogeoError::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    let covector: Vec<f64> = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(&pi, &qi)| 1.0 + (pi / qi).ln())
        .collect();
    raise_index(p, &covector)
}

/// Strictly convex potential given by ambient-coordinate formulas for its
/// value and Euclidean gradient, defining a Bregman divergence
/// D(p || q) = phi(p) - phi(q) - <grad phi(q), p - q>.
pub struct BregmanPotential {
    name: &'static str,
    phi: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    grad_phi: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl BregmanPotential {
    pub fn new(
        name: &'static str,
        phi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad_phi: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name,
            phi: Box::new(phi),
            grad_phi: Box::new(grad_phi),
        }
    }

    /// phi(p) = sum p_i ln p_i, with d phi / d p_i = 1 + ln p_i. Its Bregman
    /// divergence is the KL divergence on the simplex.
    pub fn negative_entropy() -> Self {
        Self::new(
            "negative_entropy",
            |p| p.iter().map(|&pi| pi * pi.ln()).sum(),
            |p| p.iter().map(|&pi| 1.0 + pi.ln()).collect(),
        )
    }

    /// phi(p) = (1/2) sum p_i^2, with d phi / d p_i = p_i.
    pub fn half_square_norm() -> Self {
        Self::new(
            "half_square_norm",
            |p| 0.5 * p.iter().map(|&pi| pi * pi).sum::<f64>(),
            |p| p.to_vec(),
        )
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn phi(&self, p: &SimplexPoint) -> f64 {
        (self.phi)(p.probs())
    }

    pub fn grad_phi(&self, p: &SimplexPoint) -> Vec<f64> {
        (self.grad_phi)(p.probs())
    }

    /// Bregman divergence of this potential on ambient slices.
    pub fn divergence_ambient(&self, p: &[f64], q: &[f64]) -> f64 {
        let grad_q = (self.grad_phi)(q);
        let linear: f64 = grad_q
            .iter()
            .zip(p.iter().zip(q))
            .map(|(&g, (&pi, &qi))| g * (pi - qi))
            .sum();
        (self.phi)(p) - (self.phi)(q) - linear
    }

    pub fn divergence(&self, p: &SimplexPoint, q: &SimplexPoint) -> Result<f64, InfogeoError> {
        if p.dim() != q.dim() {
            return Err(InfogeoError::DimensionMismatch {
                left: p.dim(),
                right: q.dim(),
            });
        }
        Ok(self.divergence_ambient(p.probs(), q.probs()))
    }

    /// Convexity margin (phi(a) + phi(b))/2 - phi(midpoint); strictly
    /// positive for a strictly convex potential and distinct endpoints.
    pub fn convexity_defect(&self, a: &SimplexPoint, b: &SimplexPoint) -> Result<f64, InfogeoError> {
        if a.dim() != b.dim() {
            return Err(InfogeoError::DimensionMismatch {
                left: a.dim(),
                right: b.dim(),
            });
        }
        let mid: Vec<f64> = a
            .probs()
            .iter()
            .zip(b.probs())
            .map(|(&x, &y)| 0.5 * (x + y))
            .collect();
        Ok(0.5 * (self.phi(a) + self.phi(b)) - (self.phi)(&mid))
    }
}

/// Metric gradient of the Bregman divergence D_phi(. || q) at p:
/// grad_i = p_i (d_i - mean_p d) with d_i = dphi/dp_i (p) - dphi/dp_i (q).
///
/// With the negative-entropy potential this reduces to
/// [`fisher_gradient_kl`]; the constant offset between their covectors is
/// removed exactly by the weighted-mean subtraction.
pub fn bregman_gradient(
    potential: &BregmanPotential,
    p: &SimplexPoint,
    q: &SimplexPoint,
) -> Result<TangentVector, InfogeoError> {
    if p.dim() != q.dim() {
        return Err(InfogeoError::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    let grad_p = potential.grad_phi(p);
    let grad_q = potential.grad_phi(q);
    let covector: Vec<f64> = grad_p.iter().zip(&grad_q).map(|(&a, &b)| a - b).collect();
    raise_index(p, &covector)
}

/// Independent oracle for the closed-form gradients: central finite
/// differences of the ambient divergence formula, index-raised by the
/// inverse metric. The raise is insensitive to how the divergence is
/// extended off the simplex, because any two extensions differ along the
/// constant covector the inverse metric annihilates.
pub fn finite_difference_metric_gradient(
    divergence: &dyn Fn(&[f64], &[f64]) -> f64,
    p: &SimplexPoint,
    q: &SimplexPoint,
    fd_step: f64,
) -> Result<TangentVector, InfogeoError> {
    if p.dim() != q.dim() {
        return Err(InfogeoError::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    if !(fd_step > 0.0) {
        return Err(InfogeoError::InvalidArgument {
            reason: "fd_step must be positive",
        });
    }
    for (index, &value) in p.probs().iter().enumerate() {
        if value - fd_step <= 0.0 {
            return Err(InfogeoError::FdStepTooLarge {
                step: fd_step,
                index,
                value,
            });
        }
    }
    let mut covector = Vec::with_capacity(p.dim());
    let mut shifted = p.probs().to_vec();
    for i in 0..p.dim() {
        let original = shifted[i];
        shifted[i] = original + fd_step;
        let plus = divergence(&shifted, q.probs());
        shifted[i] = original - fd_step;
        let minus = divergence(&shifted, q.probs());
        shifted[i] = original;
        covector.push((plus - minus) / (2.0 * fd_step));
    }
    raise_index(p, &covector)
}

/// Accepted steps of a gradient-descent run, with the divergence value at
/// every point of the path.
#[derive(Clone, Debug, Serialize)]
pub struct GradientFlowResult {
    pub path: Vec<SimplexPoint>,
    pub divergences: Vec<f64>,
}

impl GradientFlowResult {
    pub fn steps(&self) -> usize {
        self.path.len() - 1
    }

    pub fn final_point(&self) -> &SimplexPoint {
        self.path.last().expect("path holds at least the start")
    }

    pub fn final_divergence(&self) -> f64 {
        *self
            .divergences
            .last()
            .expect("divergences parallel the path")
    }
}

/// Explicit-Euler descent of D(. || q) along the metric gradient:
/// p <- normalized(p - h grad), with h halved until the step both stays
/// strictly inside the simplex and strictly decreases the divergence.
/// Terminates when D(p || q) <= tol.
pub fn gradient_flow(
    p0: &SimplexPoint,
    q: &SimplexPoint,
    step_size: f64,
    max_steps: usize,
    tol: f64,
) -> Result<GradientFlowResult, InfogeoError> {
    if p0.dim() != q.dim() {
        return Err(InfogeoError::DimensionMismatch {
            left: p0.dim(),
            right: q.dim(),
        });
    }
    if !(step_size > 0.0) || !(tol > 0.0) {
        return Err(InfogeoError::InvalidArgument {
            reason: "gradient_flow needs step_size > 0 and tol > 0",
        });
    }
    let mut path = vec![p0.clone()];
    let mut divergences = vec![kl_divergence(p0, q)?];
    let mut current = p0.clone();
    while *divergences.last().expect("nonempty") > tol {
        if path.len() > max_steps {
            return Err(InfogeoError::FlowExhausted {
                steps: max_steps,
                divergence: *divergences.last().expect("nonempty"),
            });
        }
        let grad = fisher_gradient_kl(&current, q)?;
        let d_current = *divergences.last().expect("nonempty");
        let mut h = step_size;
        loop {
            if h < 1e-18 {
                return Err(InfogeoError::FlowStalled {
                    divergence: d_current,
                });
            }
            let candidate: Vec<f64> = current
                .probs()
                .iter()
                .zip(grad.components())
                .map(|(&pi, &gi)| pi - h * gi)
                .collect();
            if candidate.iter().any(|&c| c <= 1e-9) {
                h *= 0.5;
                continue;
            }
            let next = SimplexPoint::normalized(candidate)?;
            let d_next = kl_divergence(&next, q)?;
            if d_next < d_current {
                current = next;
                path.push(current.clone());
                divergences.push(d_next);
                break;
            }
            h *= 0.5;
        }
    }
    Ok(GradientFlowResult { path, divergences })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng, n: usize) -> SimplexPoint {
        let weights: Vec<f64> = (0..n).map(|_| 0.1 + rng.gen::<f64>()).collect();
        SimplexPoint::normalized(weights).unwrap()
    }

    #[test]
    fn simplex_point_validation() {
        assert!(SimplexPoint::new(vec![0.5, 0.5]).is_ok());
        assert!(SimplexPoint::new(vec![1.0]).is_err());
        assert!(SimplexPoint::new(vec![0.6, 0.5]).is_err());
        assert!(SimplexPoint::new(vec![1.0 - 1e-10, 1e-10]).is_err());
        assert!(SimplexPoint::new(vec![0.5, 0.5, f64::NAN]).is_err());
        let p = SimplexPoint::normalized(vec![2.0, 6.0]).unwrap();
        assert!((p.get(0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn metric_diagonal_examples() {
        let g = fisher_metric(&SimplexPoint::new(vec![0.5, 0.5]).unwrap());
        assert_eq!(g, vec![2.0, 2.0]);
        let g = fisher_metric(&SimplexPoint::new(vec![0.25, 0.75]).unwrap());
        assert!((g[0] - 4.0).abs() < 1e-15);
        assert!((g[1] - 4.0 / 3.0).abs() < 1e-15);
        let g = fisher_metric(&SimplexPoint::uniform(4).unwrap());
        assert!(g.iter().all(|&v| (v - 4.0).abs() < 1e-12));
    }

    #[test]
    fn inverse_metric_examples() {
        let inv = inverse_fisher(&SimplexPoint::new(vec![0.5, 0.5]).unwrap());
        assert!((inv[0][0] - 0.25).abs() < 1e-15);
        assert!((inv[0][1] + 0.25).abs() < 1e-15);
        assert!((inv[1][0] + 0.25).abs() < 1e-15);
        assert!((inv[1][1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn inverse_metric_rows_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let n = 2 + (rng.gen::<u64>() % 5) as usize;
            let p = random_point(&mut rng, n);
            let inv = inverse_fisher(&p);
            for (i, row) in inv.iter().enumerate() {
                let sum: f64 = row.iter().sum();
                assert!(sum.abs() <= 1e-15, "row {i} sums to {sum}");
                for (j, &v) in row.iter().enumerate() {
                    assert!((v - inv[j][i]).abs() <= 1e-15, "asymmetry at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn constant_covector_is_annihilated() {
        // The weighted mean of the constant rounds at the last bit, so the
        // result is zero to rounding rather than bitwise (the exact-zero
        // case is covered by gradient_vanishes_exactly_at_target, whose
        // covector is exactly 1.0).
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = random_point(&mut rng, 4);
            let raised = raise_index(&p, &[7.3; 4]).unwrap();
            assert!(raised.max_abs() <= 1e-14, "residual {}", raised.max_abs());
        }
    }

    #[test]
    fn kl_hand_value() {
        let p = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        let q = SimplexPoint::new(vec![0.25, 0.75]).unwrap();
        let d = kl_divergence(&p, &q).unwrap();
        let exact = 0.5 * 2.0f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((d - exact).abs() < 1e-15);
        assert!((d - 0.14384103622589045).abs() < 1e-15);
    }

    #[test]
    fn kl_zero_iff_equal() {
        let p = SimplexPoint::new(vec![0.3, 0.2, 0.5]).unwrap();
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let q = SimplexPoint::new(vec![0.3, 0.21, 0.49]).unwrap();
        assert!(kl_divergence(&p, &q).unwrap() > 0.0);
        let r = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        assert!(kl_divergence(&p, &r).is_err());
    }

    #[test]
    fn kl_nonnegative_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let n = 2 + (rng.gen::<u64>() % 4) as usize;
            let p = random_point(&mut rng, n);
            let q = random_point(&mut rng, n);
            assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
        }
    }

    #[test]
    fn gradient_hand_value() {
        let p = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        let q = SimplexPoint::new(vec![0.25, 0.75]).unwrap();
        let g = fisher_gradient_kl(&p, &q).unwrap();
        let exact = 0.25 * 3.0f64.ln();
        assert!((g.components()[0] - exact).abs() < 1e-15);
        assert!((g.components()[1] + exact).abs() < 1e-15);
        assert!((g.components()[0] - 0.27465307216702745).abs() < 1e-15);
    }

    #[test]
    fn gradient_vanishes_exactly_at_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let p = random_point(&mut rng, 3);
            let g = fisher_gradient_kl(&p, &p).unwrap();
            assert_eq!(g.components(), &[0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn gradients_are_tangent_over_many_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let n = 2 + (rng.gen::<u64>() % 4) as usize;
            let p = random_point(&mut rng, n);
            let q = random_point(&mut rng, n);
            let g = fisher_gradient_kl(&p, &q).unwrap();
            let sum: f64 = g.components().iter().sum();
            assert!(sum.abs() <= 1e-10, "tangency defect {sum:e}");
        }
    }

    #[test]
    fn metric_times_inverse_is_identity_on_tangents() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let n = 2 + (rng.gen::<u64>() % 4) as usize;
            let p = random_point(&mut rng, n);
            let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
            let mean = v.iter().sum::<f64>() / n as f64;
            v.iter_mut().for_each(|c| *c -= mean);
            // Lower the index with g, raise it back with g^-1.
            let covector: Vec<f64> = v
                .iter()
                .zip(fisher_metric(&p))
                .map(|(&vi, gii)| vi * gii)
                .collect();
            let back = raise_index(&p, &covector).unwrap();
            for (a, b) in back.components().iter().zip(&v) {
                assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn negative_entropy_bregman_matches_kl() {
        let potential = BregmanPotential::negative_entropy();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let n = 2 + (rng.gen::<u64>() % 4) as usize;
            let p = random_point(&mut rng, n);
            let q = random_point(&mut rng, n);
            let grad_b = bregman_gradient(&potential, &p, &q).unwrap();
            let grad_f = fisher_gradient_kl(&p, &q).unwrap();
            for (a, b) in grad_b.components().iter().zip(grad_f.components()) {
                assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
            let d_b = potential.divergence(&p, &q).unwrap();
            let d_f = kl_divergence(&p, &q).unwrap();
            assert!((d_b - d_f).abs() <= 1e-10);
        }
    }

    #[test]
    fn quadratic_potential_hand_value() {
        // d = p - q = (1/4, -1/4) and the p-weighted mean of d is 0, so the
        // components are p_i d_i exactly.
        let potential = BregmanPotential::half_square_norm();
        let p = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        let q = SimplexPoint::new(vec![0.25, 0.75]).unwrap();
        let g = bregman_gradient(&potential, &p, &q).unwrap();
        assert!((g.components()[0] - 0.125).abs() < 1e-15);
        assert!((g.components()[1] + 0.125).abs() < 1e-15);
    }

    #[test]
    fn bregman_gradient_zero_at_target_for_any_potential() {
        let lumpy = BregmanPotential::new(
            "cosh_mix",
            |p| p.iter().map(|&pi| pi.cosh() + pi * pi).sum(),
            |p| p.iter().map(|&pi| pi.sinh() + 2.0 * pi).collect(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for potential in [
            BregmanPotential::negative_entropy(),
            BregmanPotential::half_square_norm(),
            lumpy,
        ] {
            let p = random_point(&mut rng, 4);
            let g = bregman_gradient(&potential, &p, &p).unwrap();
            assert_eq!(g.components(), &[0.0, 0.0, 0.0, 0.0], "{}", potential.name());
        }
    }

    #[test]
    fn potentials_are_strictly_convex_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for potential in [
            BregmanPotential::negative_entropy(),
            BregmanPotential::half_square_norm(),
        ] {
            for _ in 0..100 {
                let a = random_point(&mut rng, 3);
                let b = random_point(&mut rng, 3);
                if a.probs()
                    .iter()
                    .zip(b.probs())
                    .all(|(x, y)| (x - y).abs() < 1e-12)
                {
                    continue;
                }
                let defect = potential.convexity_defect(&a, &b).unwrap();
                assert!(defect > 0.0, "{} not convex: {defect}", potential.name());
            }
        }
    }

    #[test]
    fn finite_difference_oracle_agrees_with_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for n in [2usize, 3, 5] {
            for _ in 0..100 {
                let p = random_point(&mut rng, n);
                let q = random_point(&mut rng, n);
                let fd =
                    finite_difference_metric_gradient(&kl_ambient, &p, &q, 1e-5).unwrap();
                let formula = fisher_gradient_kl(&p, &q).unwrap();
                for (a, b) in fd.components().iter().zip(formula.components()) {
                    assert!((a - b).abs() <= 1e-6, "n={n}: {a} vs {b}");
                }
                let sum: f64 = fd.components().iter().sum();
                assert!(sum.abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn finite_difference_oracle_agrees_for_quadratic_potential() {
        let potential = BregmanPotential::half_square_norm();
        let div = move |p: &[f64], q: &[f64]| potential.divergence_ambient(p, q);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let p = random_point(&mut rng, 3);
            let q = random_point(&mut rng, 3);
            let fd = finite_difference_metric_gradient(&div, &p, &q, 1e-5).unwrap();
            let formula =
                bregman_gradient(&BregmanPotential::half_square_norm(), &p, &q).unwrap();
            for (a, b) in fd.components().iter().zip(formula.components()) {
                assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn finite_difference_near_target_is_small() {
        let p = SimplexPoint::new(vec![0.3, 0.3, 0.4]).unwrap();
        let fd = finite_difference_metric_gradient(&kl_ambient, &p, &p, 1e-5).unwrap();
        assert!(fd.max_abs() <= 1e-8, "residual {}", fd.max_abs());
    }

    #[test]
    fn finite_difference_rejects_oversized_step() {
        let p = SimplexPoint::normalized(vec![0.005, 1.0, 1.0]).unwrap();
        let q = SimplexPoint::uniform(3).unwrap();
        let err = finite_difference_metric_gradient(&kl_ambient, &p, &q, 0.01).unwrap_err();
        assert!(matches!(err, InfogeoError::FdStepTooLarge { index: 0, .. }));
    }

    #[test]
    fn flow_from_target_takes_no_steps() {
        let q = SimplexPoint::new(vec![0.2, 0.3, 0.5]).unwrap();
        let flow = gradient_flow(&q, &q, 0.1, 100, 1e-10).unwrap();
        assert_eq!(flow.steps(), 0);
        assert_eq!(flow.final_divergence(), 0.0);
    }

    #[test]
    fn flow_converges_with_strict_descent() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let q = SimplexPoint::uniform(3).unwrap();
        for _ in 0..5 {
            let p0 = random_point(&mut rng, 3);
            let flow = gradient_flow(&p0, &q, 0.1, 10_000, 1e-8).unwrap();
            assert!(flow.final_divergence() < 1e-8);
            for w in flow.divergences.windows(2) {
                assert!(w[1] < w[0], "descent broken: {} -> {}", w[0], w[1]);
            }
            let last = flow.final_point();
            for (a, b) in last.probs().iter().zip(q.probs()) {
                assert!((a - b).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn flow_errors_when_step_budget_is_too_small() {
        let p0 = SimplexPoint::new(vec![0.8, 0.1, 0.1]).unwrap();
        let q = SimplexPoint::uniform(3).unwrap();
        let err = gradient_flow(&p0, &q, 0.01, 3, 1e-12).unwrap_err();
        assert!(matches!(err, InfogeoError::FlowExhausted { steps: 3, .. }));
    }
}
