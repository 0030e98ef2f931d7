//! Sparse Fourier approximation of two-point boundary value problems with
//! random diffusion coefficients.
//!
//! The solution `u(η, ξ)` of
//!
//! ```text
//! -(a(η, ξ) u'(η, ξ))' = f(η),   u(α₁, ξ) = u(β₁, ξ) = 0
//! ```
//!
//! is approximated as a whole, jointly in the spatial variable and all random
//! variables. Every non-periodic integrand is periodized, handed to a
//! dimension-incremental sparse FFT that samples along (multiple) rank-1
//! lattices, and the resulting sparse trigonometric polynomials are
//! integrated in closed form and mapped back to the original domain.
//!
//! Module map:
//!
//! - [`trig_poly`]: sparse multivariate trigonometric polynomials.
//! - [`lattice`]: rank-1 and multiple rank-1 lattices, lattice FFTs, CBC search.
//! - [`sfft`]: dimension-incremental sparse FFT on a black-box function.
//! - [`periodization`]: tent, spline and cosine periodization maps.
//! - [`ode_solver`]: the full solution pipeline producing a [`ode_solver::SolutionRep`].
//! - [`moments`]: n-th moments of the approximate solution.
//! - [`reference_solver`]: per-sample quadrature reference and Monte-Carlo moments.
//! - [`experiments`]: the trigonometric diffusion model and the error studies.

pub mod experiments;
pub mod lattice;
pub mod moments;
pub mod ode_solver;
pub mod periodization;
pub mod primes;
pub mod quadrature;
pub mod reference_solver;
pub mod sfft;
pub mod trig_poly;

pub use num_complex::Complex64;

pub use lattice::{MultipleRank1Lattice, Rank1Lattice, ReconstructionPlan};
pub use ode_solver::{OdeProblem, SolutionRep, SolverConfig};
pub use periodization::{PeriodizationKind, PeriodizationMap};
pub use sfft::{Backend, BlackBox, SfftConfig};
pub use trig_poly::{AntiderivativeRep, Frequency, SparseTrigPoly};
