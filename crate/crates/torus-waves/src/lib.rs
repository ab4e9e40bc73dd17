//! Simulation toolkit for arithmetic random waves on the unit 2-torus.
//!
//! An arithmetic random wave of index `n` (with `n` a sum of two integer
//! squares) is the real Gaussian Laplace eigenfunction
//!
//! ```text
//! T_n(x) = (1 / sqrt(N_n)) * sum_{lambda in Lambda_n} a_lambda e(<lambda, x>),
//! ```
//!
//! where `Lambda_n` is the set of lattice points on the circle of radius
//! `sqrt(n)`, `N_n = |Lambda_n|`, `e(t) = exp(2 pi i t)`, and the `a_lambda`
//! are i.i.d. standard complex Gaussians constrained by `a_{-lambda} =
//! conj(a_lambda)` so that `T_n` is real valued. The eigenvalue is
//! `E_n = 4 pi^2 n`.
//!
//! The crate computes, per realization of the coefficients:
//!
//! * the nodal length of `T_n` (marching squares on a torus grid, plus a
//!   smoothed band estimator),
//! * the second and fourth Wiener chaos projections of the nodal length,
//!   both from exact lattice sums and from grid quadrature,
//! * Monte Carlo statistics that compare the sampled nodal lengths against
//!   the Gaussian-independent limit laws `M_eta` steered by the arithmetic
//!   parameter `eta = |mu_hat_n(4)|`.
//!
//! Modules are layered bottom-up: [`lattice`] enumerates frequency sets,
//! [`hermite`] supplies the chaos coefficients, [`field`] samples and
//! evaluates the wave, [`nodal`] measures level-set length, [`chaos`]
//! computes projections, [`limits`] samples the limit laws, and [`harness`]
//! orchestrates reproducible experiments.

pub mod chaos;
pub mod field;
pub mod harness;
pub mod hermite;
pub mod lattice;
pub mod limits;
pub mod nodal;
pub(crate) mod quad;
pub mod rng;

/// Cap the global rayon pool, which serves all parallel work outside the
/// experiment harness (the harness builds its own pool). Fails if the
/// global pool was already initialized.
pub fn build_global_pool(threads: usize) -> Result<(), rayon::ThreadPoolBuildError> {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()
}
