//! Numerical toolkit for (possibly killed) subordinators.
//!
//! A subordinator is described by its characteristic triplet `(q, a, Π)`:
//! kill rate, drift and Lévy measure. From it the crate evaluates the
//! Bernstein function `φ`, Webster's generalized gamma function `Γ_φ`,
//! the Mellin transforms of the exponential functional `I = ∫ e^{-ξ_s} ds`
//! and of its remainder variable `R`, the harmonic potential density `ρ`,
//! and an infinite-divisibility test for `log I`. A Monte Carlo simulator
//! cross-validates the analytic results.
//!
//! Module map:
//!
//! - [`subordinator`]: specs, `φ` and its transforms (tilt, kill, stable time change, conjugation)
//! - [`gen_gamma`]: `γ_g`, `Γ_g`, moments of `I` and `R`, joint transform, Gordon tails
//! - [`harmonic`]: `ρ`, the `log I` divisibility verdict, undershoot laws, Lévy data of `log R`
//! - [`numerics`]: quadrature, Laplace inversion, Mittag-Leffler, Kolmogorov–Smirnov
//! - [`montecarlo`]: exact-event path simulation and statistical verification

pub mod error;
pub mod gen_gamma;
pub mod harmonic;
pub mod montecarlo;
pub mod numerics;
pub mod subordinator;

pub use error::{Error, Result};
pub use subordinator::{LevyKind, LevyMeasure, SubordinatorSpec};
