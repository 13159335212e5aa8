//! Closed-form harmonic densities.

use std::fmt;
use std::sync::Arc;

use statrs::function::gamma::ln_gamma;

use super::{HarmonicDensity, Provenance, RhoFn};
use crate::error::{Error, Result};
use crate::numerics::mittag_leffler;
use crate::subordinator::{LevyKind, LevyMeasure, Triplet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogRule {
    /// `q + aλ`: `ρ = e^{-qx/a}`.
    KilledDrift,
    /// No drift, `Exp(r)` jumps at rate `m`: `ρ = e^{-r₁x} - e^{-rx}`, `r₁ = qr/(q+m)`.
    ExponentialJumps,
    /// Drift plus `Exp(r)` jumps: `ρ = e^{-s₁x} - e^{-rx} + e^{-s₂x}`.
    DriftExponentialJumps,
    /// `λ^γ`: `ρ = γ`.
    Stable,
    /// `q + λ^γ`: `ρ = γ E_γ(-q x^γ)`.
    KilledStable,
    /// Gamma jumps, no drift, no killing: `ρ = β e^{-rx} (E_β((rx)^β) - 1)`.
    GammaJumps,
    /// Gamma jumps at rate equal to the drift: `ρ = e^{-x}(1 + Σ x^{n(1+β)}/(n Γ(n(1+β))))`.
    DriftGammaJumps,
}

impl fmt::Display for CatalogRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CatalogRule::KilledDrift => "killed_drift",
            CatalogRule::ExponentialJumps => "exponential_jumps",
            CatalogRule::DriftExponentialJumps => "drift_exponential_jumps",
            CatalogRule::Stable => "stable",
            CatalogRule::KilledStable => "killed_stable",
            CatalogRule::GammaJumps => "gamma_jumps",
            CatalogRule::DriftGammaJumps => "drift_gamma_jumps",
        })
    }
}

/// `e^{-ux} - e^{-vx}` for `u < v`, accurate when the two are close.
fn exp_gap(u: f64, v: f64, x: f64) -> f64 {
    -(-u * x).exp() * (-(v - u) * x).exp_m1()
}

/// Sum of `exp(log_term(n))` over `n ≥ start` for terms that rise to one peak and then
/// decay; stops once past the peak and below `1e-17` of the running sum.
fn positive_log_series<F: Fn(f64) -> f64>(log_term: F, start: usize) -> Result<f64> {
    let mut sum = 0.0;
    let mut prev = f64::NEG_INFINITY;
    for n in start..start + 10_000_000 {
        let lt = log_term(n as f64);
        let t = lt.exp();
        sum += t;
        if lt < prev && t <= 1e-17 * sum {
            return Ok(sum);
        }
        prev = lt;
    }
    Err(Error::NonConvergent("positive series did not settle".into()))
}

fn closed(rule: CatalogRule, eval: RhoFn, bound: Option<f64>) -> HarmonicDensity {
    HarmonicDensity::new(eval, Provenance::Catalog(rule)).with_bound(bound)
}

/// Closed form for an untempered triplet `(q, a, kind)` with tempering handled by the
/// caller, except for the gamma-jump rule which takes `θ` directly.
fn base_rule(q: f64, a: f64, kind: &LevyKind, theta: f64) -> Option<HarmonicDensity> {
    match *kind {
        LevyKind::None if theta == 0.0 && a > 0.0 => {
            let k = q / a;
            Some(closed(CatalogRule::KilledDrift, Arc::new(move |x| Ok((-k * x).exp())), Some(1.0)))
        }
        LevyKind::Exponential { rate, arrival } if theta == 0.0 && a == 0.0 => {
            let r1 = q * rate / (q + arrival);
            Some(closed(
                CatalogRule::ExponentialJumps,
                Arc::new(move |x| Ok(exp_gap(r1, rate, x))),
                Some(1.0),
            ))
        }
        LevyKind::Exponential { rate, arrival } if theta == 0.0 => {
            // -s₁, -s₂ are the roots of aλ² + (q + ar + m)λ + qr; s₁ ≤ r ≤ s₂.
            let b = q + a * rate + arrival;
            let c = q * rate;
            let s2 = (b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
            let s1 = c / (a * s2);
            // ρ = e^{-s₁x} - e^{-rx} + e^{-s₂x} ≤ e^{-s₁x} since s₂ ≥ r.
            Some(closed(
                CatalogRule::DriftExponentialJumps,
                Arc::new(move |x| Ok(exp_gap(s1, rate, x) + (-s2 * x).exp())),
                Some(1.0),
            ))
        }
        LevyKind::Stable { gamma } if theta == 0.0 && a == 0.0 => {
            if q == 0.0 {
                Some(closed(CatalogRule::Stable, Arc::new(move |_| Ok(gamma)), Some(gamma)))
            } else {
                Some(closed(
                    CatalogRule::KilledStable,
                    Arc::new(move |x: f64| Ok(gamma * mittag_leffler(gamma, -q * x.powf(gamma))?)),
                    Some(gamma),
                ))
            }
        }
        LevyKind::GammaJumps { beta, .. } if q == 0.0 && a == 0.0 => {
            let r = 1.0 + theta;
            Some(closed(
                CatalogRule::GammaJumps,
                Arc::new(move |x: f64| {
                    let z = r * x;
                    let lz = z.ln();
                    positive_log_series(|n| beta.ln() - z + n * beta * lz - ln_gamma(1.0 + n * beta), 1)
                }),
                None,
            ))
        }
        LevyKind::GammaJumps { c, beta } if q == 0.0 && theta == 0.0 && c == a => {
            let k = 1.0 + beta;
            Some(closed(
                CatalogRule::DriftGammaJumps,
                Arc::new(move |x: f64| {
                    let lx = x.ln();
                    let tail = positive_log_series(|n| -x + n * k * lx - n.ln() - ln_gamma(n * k), 1)?;
                    Ok((-x).exp() + tail)
                }),
                None,
            ))
        }
        _ => None,
    }
}

/// Catalog lookup for a triplet, including tempered measures whose untempered
/// counterpart is in the catalog after solving for the kill rate.
pub(super) fn recognize(t: &Triplet) -> Result<Option<HarmonicDensity>> {
    let kind = t.levy.kind();
    if matches!(kind, LevyKind::Atoms(_) | LevyKind::Tabulated(_)) {
        return Ok(None);
    }
    let theta = t.levy.tempering();
    if let Some(d) = base_rule(t.kill, t.drift, kind, theta) {
        return Ok(Some(d));
    }
    if theta > 0.0 {
        // φ(λ) = φ₀(λ + θ) with φ₀ = q₀ + aλ + ψ_untempered and q₀ = q - aθ - ψ_untempered(θ).
        let untempered = LevyMeasure::new(kind.clone())?;
        let q0 = t.kill - t.drift * theta - untempered.psi(theta);
        if q0 >= -1e-12 * t.kill.max(1.0) {
            if let Some(d) = base_rule(q0.max(0.0), t.drift, kind, 0.0) {
                return Ok(Some(d.tilted(theta)));
            }
        }
    }
    Ok(None)
}
