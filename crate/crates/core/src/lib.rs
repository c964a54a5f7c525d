//! Spectral-Galerkin simulation of the non-autonomous damped wave equation
//!
//! ```text
//! u_tt + h(u_t) - Δu + f(u) = g(x, t)   in Ω,   u = 0 on ∂Ω
//! ```
//!
//! together with the diagnostics needed to study its uniform attractor:
//! energy functionals and dissipation monitors, absorbing-ball estimation,
//! the difference-energy bound used for uniform asymptotic compactness,
//! ω-limit clouds, Hausdorff semidistances and pullback kernel sections.
//!
//! The domain is an interval `(0, L)` or a rectangle, discretized with the
//! Dirichlet sine eigenbasis of `-Δ`. Nonlinear terms are evaluated by
//! collocation on a 2x oversampled grid and projected back onto the modes.
//!
//! # Layout
//!
//! - [`spectral`]: eigenbasis, transforms and norms.
//! - [`dynamics`]: damping `h` and nonlinearity `f` with hypothesis audits.
//! - [`forcing`]: time-dependent forcing symbols, translations and hulls.
//! - [`process`]: the time integrators realizing `U_σ(t, τ)`.
//! - [`energy`]: energy functionals, dissipation monitor, absorbing ball.
//! - [`compactness`]: contractive-function bound, clouds and pullback.
//! - [`report`]: CSV export with provenance headers.

pub mod compactness;
pub mod dynamics;
pub mod energy;
mod error;
pub mod forcing;
pub mod process;
pub mod report;
pub mod spectral;
mod time;

pub use compactness::{Cloud, CompactnessReport, PairRun};
pub use dynamics::{AuditReport, DampingSpec, NonlinearitySpec, ScalarFn};
pub use energy::{AbsorbReport, EnergyRecord};
pub use error::{Error, Result};
pub use forcing::{HullSample, Symbol, SymbolKind};
pub use process::{Scheme, SolverConfig, State, System, Trajectory};
pub use spectral::{Basis, Norms};
pub use time::Time;

/// Crate version, recorded in report provenance headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
