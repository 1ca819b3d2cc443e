//! Numerical toolkit for a one-dimensional hydrodynamic model of
//! self-propelled alignment dynamics.
//!
//! The model evolves a density `rho` and a mean heading angle `theta`
//! through a first-order quasilinear system whose coefficients come from
//! the stationary solution of an elliptic two-point problem driven by a
//! single noise intensity `d`. The system is hyperbolic but **not**
//! conservative — products of distributions appear once solutions become
//! discontinuous — which makes the choice of discretization physically
//! meaningful rather than a matter of taste. This crate provides every
//! layer needed to study that question end to end:
//!
//! * [`coefficients`] — the noise-dependent transport coefficients
//!   `c1(d)`, `c2(d)`, `lambda(d)`, computed from a closed form and from
//!   the elliptic solve, plus the rescaled one-parameter normal form.
//! * [`exact_riemann`] — a semi-analytic solver for the Riemann problem
//!   of the rescaled system: shock curves from jump conditions of the
//!   associated conservative form, rarefactions from Riemann invariants,
//!   and a sampled similarity solution.
//! * [`macro_schemes`] — four finite-volume discretizations (conservative
//!   Roe, a splitting method honouring the geometric structure, a plain
//!   nonconservative upwind scheme, and a semi-conservative hybrid) with
//!   shared time stepping, diagnostics, and Courant monitoring.
//! * [`particle_sim`] — the underlying stochastic particle model
//!   (alignment within a radius plus angular diffusion) with
//!   deterministic counter-based noise, ensemble averaging, and
//!   deposition onto profiles comparable with the grid schemes.
//! * [`analysis`] — circular statistics (von Mises law, Bessel ratios,
//!   chi-squared and Kolmogorov–Smirnov tests), shock locating, profile
//!   comparison metrics, and a stationary vortex residual for the
//!   two-dimensional system.
//! * [`suite`] — TOML scenario suites orchestrating all of the above
//!   into a deterministic artifact tree with a JSON summary.
//! * [`numerics`] — the small shared kernel of quadrature, tridiagonal
//!   and bracketed solving, and special functions.
//!
//! The `examples/` directory exercises each capability as a runnable
//! program; the `vicsek-hydro` binary exposes the same functionality as
//! subcommands for scripted use.

pub mod analysis;
pub mod coefficients;
pub mod exact_riemann;
pub mod macro_schemes;
pub mod numerics;
pub mod particle_sim;
pub mod suite;
pub mod system;
