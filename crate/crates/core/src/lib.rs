//! Malliavin calculus laboratory for finite-activity Lévy processes.
//!
//! The crate evaluates the two-parameter Malliavin derivative `D_{t,x}` on
//! smooth functionals `f(X_{t_1}, …, X_{t_n})`, estimates `D_{1,2}` norms by
//! combining exact time/size integration with Monte Carlo over simulated
//! paths, and provides exact chaos-moment oracles to check those estimates.
//!
//! Module map:
//!
//! - [`levy_model`]: the triplet `(b, σ, ν)`, the measures `μ` and `𝕞`, and
//!   integration against `ν`.
//! - [`path_sim`]: path simulation with counter-based per-replicate streams
//!   and a deterministic parallel Monte Carlo reduction.
//! - [`random_measure`]: the random measure `M`, first and multiple integrals
//!   of elementary kernels, and their chaos derivatives.
//! - [`chaos_oracle`]: exact second moments and `D_{1,2}` norms of elementary
//!   chaos sums.
//! - [`malliavin_op`]: smooth functionals, the operator `D`, norm estimation,
//!   the product rule and the Lipschitz chain rule.
//! - [`denseness_lab`]: the constructive approximation experiments.
//! - [`harness`]: configuration, orchestration and CSV reporting used by the
//!   `levy-lab` binary.

pub mod chaos_oracle;
pub mod denseness_lab;
pub mod error;
pub mod harness;
pub mod levy_model;
pub mod malliavin_op;
pub mod path_sim;
pub mod profile;
pub mod quadrature;
pub mod random_measure;

pub use error::{Error, Result};
