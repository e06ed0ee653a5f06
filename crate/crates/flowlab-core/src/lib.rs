//! Numerical and logical machinery for studying state flows.
//!
//! The crate is organized around one idea: a system is a space of states
//! together with a rule that moves states forward, and everything else is a
//! way of interrogating that rule. The modules split as follows:
//!
//! - [`space`]: state vectors, sampled trajectories, flow maps, and checks of
//!   the algebraic laws a flow must satisfy (identity at time zero, the
//!   composition law).
//! - [`picard`]: solutions of `x' = F(x)` built as fixed points of the
//!   integral operator on short time windows, plus equilibrium finding and
//!   linear stability classification.
//! - [`maps`]: concrete discrete-time systems (circle rotation, the quadratic
//!   interval map, the hyperbolic torus automorphism) behind a common trait,
//!   with continued-fraction diagnostics, sensitivity probes, and Lyapunov
//!   exponents.
//! - [`ergodic`]: invariant densities (exact and Ulam-discretized), transfer
//!   operator application, Birkhoff averages, correlation decay, and
//!   recurrence statistics.
//! - [`infogeo`]: the probability simplex as a Riemannian manifold: Fisher
//!   metric, divergence gradients, and natural-gradient descent.
//! - [`spread`]: finitely branching trees of admissible grid sequences and
//!   bar-search moduli of continuity for functions of their limits.
//! - [`logic`]: a two-sorted first-order language over sampled time/state
//!   domains, with parser, evaluator, and functionality checks.
//! - [`provability`]: the modal logic of transitive converse-well-founded
//!   frames: decision procedure with certified countermodels, a proof-object
//!   checker, and consistency-extension hierarchies.

pub mod ergodic;
pub mod infogeo;
pub mod logic;
pub mod maps;
pub mod numeric;
pub mod picard;
pub mod provability;
pub mod space;
pub mod spread;
