//! Equations of motion for dissipative systems from three potentials.
//!
//! A system is given by its kinetic energy `K(x, v)`, Gibbs energy `G(x, t)`
//! and dissipation function `Q(x, v) ≥ 0`. Hamilton's principle applied to
//! `K − G` extended by a dissipative-force work term gives the force balance
//!
//! ```text
//! d/dt ∂K/∂v − ∂K/∂x + ∂G/∂x + q = 0,   q = Q / (∂Q/∂v·v) · ∂Q/∂v,
//! ```
//!
//! where `q` is the force that maximizes dissipation under `q·v = Q`.
//!
//! Modules:
//! - [`autodiff`]: second-order forward-mode duals and differentiable fields.
//! - [`model`]: state, the potential triple and the built-in systems.
//! - [`tep`]: the dissipative force construction.
//! - [`dynamics`]: force decomposition, acceleration solve, time integration.
//! - [`continuum1d`]: a 1D viscous Norton-Hoff bar with strain-dependent density.
//! - [`cli`]: config-driven simulate / verify / sweep commands.

pub mod autodiff;
pub mod cli;
pub mod continuum1d;
pub mod dynamics;
pub mod model;
pub mod quadrature;
pub mod sampling;
pub mod tep;
