//! Finite-depth spread engine: trees of admissible finite sequences over a
//! state grid under a successive-difference bound delta(k), with the
//! sequence metric, oscillation of tip observables, a uniform-bar search
//! yielding a modulus of continuity, and branching/nonatomicity checks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{Observable, StateVector};

#[derive(Debug, Error)]
pub enum SpreadError {
    #[error("{reason}")]
    InvalidArgument { reason: &'static str },
    #[error("value {value} at position {index} is not a grid point")]
    OffGrid { index: usize, value: f64 },
    #[error("step {index} -> {} moves {gap} > delta({index}) = {bound}", index + 1)]
    StepTooLarge { index: usize, gap: f64, bound: f64 },
    #[error("depth {depth} exceeds the tree depth bound {max_depth}")]
    DepthExhausted { depth: usize, max_depth: usize },
    #[error(
        "no uniform bar with oscillation below {epsilon} within depth {max_depth} \
         (worst oscillation at the deepest level {worst})"
    )]
    TreeTooShallow {
        epsilon: f64,
        max_depth: usize,
        worst: f64,
    },
    #[error("node counts overflow u128 at level {level}")]
    CountOverflow { level: usize },
}

/// Successive-difference bound delta(k) for the step from entry k to
/// entry k+1. Both rules are non-increasing in k, which the oscillation
/// certification relies on: once one more step stops enlarging the
/// reachable set, no deeper step can enlarge it either.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum DeltaRule {
    Constant { value: f64 },
    /// delta(k) = 2^-(k+2).
    DyadicDecay,
}

impl DeltaRule {
    pub fn bound(&self, k: usize) -> f64 {
        match self {
            DeltaRule::Constant { value } => *value,
            DeltaRule::DyadicDecay => 0.5f64.powi(k as i32 + 2),
        }
    }
}

/// A spread over a finite state grid: admissible sequences take grid values
/// and move at most delta(k) at step k. max_depth bounds stored sequences.
#[derive(Clone, Debug, Serialize)]
pub struct SpreadSpec {
    state_grid: Vec<f64>,
    delta: DeltaRule,
    max_depth: usize,
}

impl SpreadSpec {
    pub fn new(
        state_grid: Vec<f64>,
        delta: DeltaRule,
        max_depth: usize,
    ) -> Result<Self, SpreadError> {
        if state_grid.len() < 2 {
            return Err(SpreadError::InvalidArgument {
                reason: "state grid needs at least 2 points",
            });
        }
        if state_grid
            .iter()
            .any(|v| !v.is_finite() || !(0.0..=1.0).contains(v))
        {
            return Err(SpreadError::InvalidArgument {
                reason: "grid points must lie in [0, 1]",
            });
        }
        if state_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SpreadError::InvalidArgument {
                reason: "grid points must be strictly increasing",
            });
        }
        if max_depth == 0 {
            return Err(SpreadError::InvalidArgument {
                reason: "max_depth must be at least 1",
            });
        }
        for k in 0..max_depth {
            if !(delta.bound(k) > 0.0) {
                return Err(SpreadError::InvalidArgument {
                    reason: "delta(k) must stay positive below max_depth",
                });
            }
        }
        Ok(Self {
            state_grid,
            delta,
            max_depth,
        })
    }

    /// Grid i * 2^-8 for i = 0..=256 with delta(k) = 2^-(k+2).
    pub fn dyadic_default() -> Self {
        let grid = (0..=256).map(|i| i as f64 / 256.0).collect();
        Self::new(grid, DeltaRule::DyadicDecay, 64).expect("constants are valid")
    }

    pub fn state_grid(&self) -> &[f64] {
        &self.state_grid
    }

    pub fn delta(&self) -> DeltaRule {
        self.delta
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    fn grid_index(&self, value: f64) -> Option<usize> {
        self.state_grid
            .binary_search_by(|g| g.total_cmp(&value))
            .ok()
    }

    /// Indices of grid values within `delta` of `center`, as an inclusive
    /// range; the single source of the admissibility predicate
    /// |v - center| <= delta.
    fn indices_within(&self, center: f64, delta: f64) -> (usize, usize) {
        let lo = self.state_grid.partition_point(|&g| g < center - delta);
        let hi = self.state_grid.partition_point(|&g| g <= center + delta);
        debug_assert!(lo < hi, "center is itself a grid point");
        (lo, hi - 1)
    }
}

/// Admissible finite sequence of grid values. The empty node is the tree
/// root; its one-step extensions are unconstrained over the grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpreadNode {
    seq: Vec<f64>,
}

impl SpreadNode {
    pub fn empty() -> Self {
        Self { seq: Vec::new() }
    }

    /// Validates grid membership of every entry and the bound
    /// |seq[k+1] - seq[k]| <= delta(k) on every consecutive pair. Prefix
    /// admissibility is inherited: every prefix of a valid node is valid.
    pub fn new(spec: &SpreadSpec, seq: Vec<f64>) -> Result<Self, SpreadError> {
        if seq.len() > spec.max_depth() {
            return Err(SpreadError::DepthExhausted {
                depth: seq.len(),
                max_depth: spec.max_depth(),
            });
        }
        for (index, &value) in seq.iter().enumerate() {
            if spec.grid_index(value).is_none() {
                return Err(SpreadError::OffGrid { index, value });
            }
        }
        for (index, pair) in seq.windows(2).enumerate() {
            let gap = (pair[1] - pair[0]).abs();
            let bound = spec.delta.bound(index);
            if gap > bound {
                return Err(SpreadError::StepTooLarge { index, gap, bound });
            }
        }
        Ok(Self { seq })
    }

    pub fn seq(&self) -> &[f64] {
        &self.seq
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.seq.last().copied()
    }
}

/// All one-step admissible extensions of `node`: every grid value within
/// delta(n - 1) of the last entry for a node of length n, or the whole grid
/// for the empty root.
pub fn admissible_children(
    spec: &SpreadSpec,
    node: &SpreadNode,
) -> Result<Vec<SpreadNode>, SpreadError> {
    if node.len() >= spec.max_depth() {
        return Err(SpreadError::DepthExhausted {
            depth: node.len() + 1,
            max_depth: spec.max_depth(),
        });
    }
    let (lo, hi) = match node.last() {
        None => (0, spec.state_grid().len() - 1),
        Some(last) => spec.indices_within(last, spec.delta.bound(node.len() - 1)),
    };
    Ok((lo..=hi)
        .map(|i| {
            let mut seq = node.seq.clone();
            seq.push(spec.state_grid()[i]);
            SpreadNode { seq }
        })
        .collect())
}

/// Distance between two finite sequences under
/// D = sum over k of 2^-(k+1) min(1, |a_k - b_k|), compared up to the
/// shorter length; the omitted tail is bounded by the geometric remainder.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SequenceDistance {
    pub value: f64,
    /// 2^-compared, the largest the omitted terms could add.
    pub tail_bound: f64,
    pub compared: usize,
}

pub fn sequence_metric(a: &SpreadNode, b: &SpreadNode) -> SequenceDistance {
    let compared = a.len().min(b.len());
    let value = a
        .seq()
        .iter()
        .zip(b.seq())
        .enumerate()
        .map(|(k, (&x, &y))| 0.5f64.powi(k as i32 + 1) * (x - y).abs().min(1.0))
        .sum();
    SequenceDistance {
        value,
        tail_bound: 0.5f64.powi(compared as i32),
        compared,
    }
}

/// Reachable-tip interval walk. Starting from grid interval [lo, hi] at
/// step-bound level `first_level`, repeatedly widens by delta(level). The
/// set of tips reachable in j steps is always a contiguous grid interval,
/// because the one-step relation |next - cur| <= delta maps an interval to
/// an interval. Returns the interval at saturation (one more step adds
/// nothing; final because delta never increases) or after `budget` steps,
/// flagging which.
fn reach_interval(
    spec: &SpreadSpec,
    mut lo: usize,
    mut hi: usize,
    first_level: usize,
    budget: usize,
) -> (usize, usize, bool) {
    let grid = spec.state_grid();
    for step in 0.. {
        let delta = spec.delta.bound(first_level + step);
        let next_lo = grid.partition_point(|&g| g < grid[lo] - delta);
        let next_hi = grid.partition_point(|&g| g <= grid[hi] + delta) - 1;
        if (next_lo, next_hi) == (lo, hi) {
            return (lo, hi, true);
        }
        if step >= budget {
            return (lo, hi, false);
        }
        lo = next_lo;
        hi = next_hi;
    }
    unreachable!("loop always returns")
}

fn observe_grid(spec: &SpreadSpec, f: &Observable) -> Vec<f64> {
    spec.state_grid()
        .iter()
        .map(|&v| f.apply(&StateVector::scalar(v)))
        .collect()
}

fn spread_over(values: &[f64], lo: usize, hi: usize) -> f64 {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in &values[lo..=hi] {
        min = min.min(v);
        max = max.max(v);
    }
    max - min
}

/// Oscillation of a tip observable over all admissible extensions of
/// `node` by exactly `horizon` further entries: the largest |F(a) - F(b)|
/// over pairs of extension tips. Horizon 0 gives 0 by convention.
pub fn oscillation(
    spec: &SpreadSpec,
    f: &Observable,
    node: &SpreadNode,
    horizon: usize,
) -> Result<f64, SpreadError> {
    if node.len() + horizon > spec.max_depth() {
        return Err(SpreadError::DepthExhausted {
            depth: node.len() + horizon,
            max_depth: spec.max_depth(),
        });
    }
    if horizon == 0 {
        return Ok(0.0);
    }
    let values = observe_grid(spec, f);
    // The empty root spends its first step reaching the whole grid.
    let (mut lo, mut hi, first_level, steps) = match node.last() {
        None => (0, spec.state_grid().len() - 1, 0, horizon - 1),
        Some(last) => {
            let idx = spec.grid_index(last).ok_or(SpreadError::OffGrid {
                index: node.len() - 1,
                value: last,
            })?;
            (idx, idx, node.len() - 1, horizon)
        }
    };
    let grid = spec.state_grid();
    for step in 0..steps {
        let delta = spec.delta.bound(first_level + step);
        lo = grid.partition_point(|&g| g < grid[lo] - delta);
        hi = grid.partition_point(|&g| g <= grid[hi] + delta) - 1;
    }
    Ok(spread_over(&values, lo, hi))
}

/// Largest oscillation over all admissible nodes at the given depth, taken
/// over unboundedly deep extensions. Oscillation of a node depends only on
/// its last entry and depth, and every grid value occurs as the last entry
/// of some depth-`depth` node (constant sequences are admissible), so the
/// maximum ranges over grid values. Each walk must saturate, which the
/// non-increasing delta guarantees within one sweep of the grid.
pub fn worst_oscillation_at_depth(
    spec: &SpreadSpec,
    f: &Observable,
    depth: usize,
) -> Result<f64, SpreadError> {
    if depth > spec.max_depth() {
        return Err(SpreadError::DepthExhausted {
            depth,
            max_depth: spec.max_depth(),
        });
    }
    let values = observe_grid(spec, f);
    let budget = spec.state_grid().len() + 1;
    if depth == 0 {
        let last = spec.state_grid().len() - 1;
        let (lo, hi, saturated) = reach_interval(spec, 0, last, 0, budget);
        debug_assert!(saturated, "interval growth is bounded by the grid");
        return Ok(spread_over(&values, lo, hi));
    }
    let mut worst: f64 = 0.0;
    for idx in 0..spec.state_grid().len() {
        let (lo, hi, saturated) = reach_interval(spec, idx, idx, depth - 1, budget);
        debug_assert!(saturated, "interval growth is bounded by the grid");
        worst = worst.max(spread_over(&values, lo, hi));
    }
    Ok(worst)
}

/// A certified uniform bar: at depth `bar_depth`, every admissible node has
/// oscillation below epsilon, and bar_depth is minimal with that property.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ModulusResult {
    pub epsilon: f64,
    pub bar_depth: usize,
    /// 2^-bar_depth.
    pub omega: f64,
}

/// Breadth-first uniform-bar search: the least N <= max_depth such that
/// every depth-N node oscillates below epsilon over all deeper extensions.
/// Fails with the deepest level's worst oscillation when no such N exists
/// within the storable depth.
pub fn modulus_of_continuity(
    spec: &SpreadSpec,
    f: &Observable,
    epsilon: f64,
) -> Result<ModulusResult, SpreadError> {
    if !(epsilon > 0.0) {
        return Err(SpreadError::InvalidArgument {
            reason: "epsilon must be positive",
        });
    }
    let mut worst = f64::INFINITY;
    for depth in 0..=spec.max_depth() {
        worst = worst_oscillation_at_depth(spec, f, depth)?;
        if worst < epsilon {
            return Ok(ModulusResult {
                epsilon,
                bar_depth: depth,
                omega: 0.5f64.powi(depth as i32),
            });
        }
    }
    Err(SpreadError::TreeTooShallow {
        epsilon,
        max_depth: spec.max_depth(),
        worst,
    })
}

/// Structural facts about the tree up to the given node depth.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TreeProperties {
    /// Branching never exceeds the grid size; true by construction.
    pub finitely_branching: bool,
    pub max_branching: usize,
    /// Every node with at most `depth` entries has at least 2 children.
    pub nonatomic: bool,
    /// Every node with at most `depth` entries has at least 1 child
    /// (constant continuation is always admissible).
    pub extendable: bool,
}

/// Child counts depend only on (last entry, depth), so the scan covers all
/// grid values at every step level below `depth` plus the root.
pub fn check_tree_properties(
    spec: &SpreadSpec,
    depth: usize,
) -> Result<TreeProperties, SpreadError> {
    if depth > spec.max_depth() {
        return Err(SpreadError::DepthExhausted {
            depth,
            max_depth: spec.max_depth(),
        });
    }
    let grid_len = spec.state_grid().len();
    let mut max_branching = grid_len; // the empty root branches to every grid value
    let mut min_branching = grid_len;
    for level in 0..depth {
        let delta = spec.delta.bound(level);
        for &v in spec.state_grid() {
            let (lo, hi) = spec.indices_within(v, delta);
            let count = hi - lo + 1;
            max_branching = max_branching.max(count);
            min_branching = min_branching.min(count);
        }
    }
    Ok(TreeProperties {
        finitely_branching: max_branching <= grid_len,
        max_branching,
        nonatomic: min_branching >= 2,
        extendable: min_branching >= 1,
    })
}

/// Number of admissible nodes at each depth 0..=depth, by dynamic
/// programming over last entries. Depth 0 counts the single empty root.
pub fn level_node_counts(spec: &SpreadSpec, depth: usize) -> Result<Vec<u128>, SpreadError> {
    if depth > spec.max_depth() {
        return Err(SpreadError::DepthExhausted {
            depth,
            max_depth: spec.max_depth(),
        });
    }
    let grid_len = spec.state_grid().len();
    let mut counts = vec![1u128];
    if depth == 0 {
        return Ok(counts);
    }
    let mut by_last = vec![1u128; grid_len];
    counts.push(grid_len as u128);
    for level in 0..depth.saturating_sub(1) {
        let delta = spec.delta.bound(level);
        let mut next = vec![0u128; grid_len];
        for (i, &v) in spec.state_grid().iter().enumerate() {
            if by_last[i] == 0 {
                continue;
            }
            let (lo, hi) = spec.indices_within(v, delta);
            for slot in next.iter_mut().take(hi + 1).skip(lo) {
                *slot = slot
                    .checked_add(by_last[i])
                    .ok_or(SpreadError::CountOverflow { level })?;
            }
        }
        let total = next
            .iter()
            .try_fold(0u128, |acc, &c| acc.checked_add(c))
            .ok_or(SpreadError::CountOverflow { level })?;
        counts.push(total);
        by_last = next;
    }
    Ok(counts)
}
