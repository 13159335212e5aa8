//! Numerical inversion of Laplace transforms.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use super::CompensatedSum;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InversionMethod {
    Talbot,
    GaverStehfest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionConfig {
    pub method: InversionMethod,
    /// Contour nodes (Talbot) or Stehfest terms (Gaver–Stehfest).
    pub nodes: usize,
    /// Maximum tolerated disagreement between the result and its check value.
    pub residual: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            method: InversionMethod::Talbot,
            nodes: 24,
            residual: 1e-7,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 8 || self.nodes % 2 != 0 {
            return Err(Error::InvalidArgument {
                name: "nodes",
                value: self.nodes as f64,
                reason: "must be even and at least 8",
            });
        }
        crate::error::check_positive("residual", self.residual)
    }
}

/// Fixed-Talbot inversion of `F` at `t > 0` with `m` contour nodes.
///
/// In double precision the rounding error grows like `e^{0.4 m}·ε`, so `m` between
/// 16 and 32 is the useful range.
pub fn talbot<F: Fn(Complex64) -> Complex64>(f: F, t: f64, m: usize) -> f64 {
    let r = 2.0 * m as f64 / (5.0 * t);
    let mut acc = CompensatedSum::new();
    acc.add(0.5 * f(Complex64::new(r, 0.0)).re * (r * t).exp());
    for k in 1..m {
        let theta = k as f64 * PI / m as f64;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let term = (s * t).exp() * f(s) * Complex64::new(1.0, sigma);
        acc.add(term.re);
    }
    r / m as f64 * acc.value()
}

/// Stehfest weights `V_k`, `k = 1..=n`, in double precision.
pub fn stehfest_weights(n: usize) -> Vec<f64> {
    assert!(n % 2 == 0 && n >= 2);
    let half = n / 2;
    let fact = |k: usize| -> f64 { (1..=k).map(|i| i as f64).product() };
    (1..=n)
        .map(|k| {
            let lo = (k + 1) / 2;
            let hi = k.min(half);
            let mut s = CompensatedSum::new();
            for j in lo..=hi {
                s.add(
                    (j as f64).powi(half as i32) * fact(2 * j)
                        / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k)),
                );
            }
            let sign = if (k + half) % 2 == 0 { 1.0 } else { -1.0 };
            sign * s.value()
        })
        .collect()
}

/// Gaver–Stehfest inversion of a real transform at `t > 0` with `n` terms.
///
/// Weights alternate with magnitude up to ~1e9 at `n = 16`, so expect about six
/// correct digits for smooth targets.
pub fn gaver_stehfest<F: Fn(f64) -> f64>(f: F, t: f64, n: usize) -> f64 {
    let w = stehfest_weights(n);
    let c = LN_2 / t;
    let mut acc = CompensatedSum::new();
    for (k, v) in w.iter().enumerate() {
        acc.add(v * f(c * (k + 1) as f64));
    }
    c * acc.value()
}

/// Invert `F` at `x`, cross-checking the configured method against a second estimate.
///
/// For Talbot the check value uses `nodes - 4` contour points; for Gaver–Stehfest it
/// uses `nodes - 2` terms. A disagreement above `cfg.residual` (absolute, or relative
/// when the value exceeds one) fails with `ValidationFailed`.
pub fn laplace_invert<F: Fn(Complex64) -> Complex64>(f: F, x: f64, cfg: &InversionConfig) -> Result<f64> {
    cfg.validate()?;
    crate::error::check_positive("x", x)?;
    let (v, check) = match cfg.method {
        InversionMethod::Talbot => (talbot(&f, x, cfg.nodes), talbot(&f, x, cfg.nodes - 4)),
        InversionMethod::GaverStehfest => {
            let g = |s: f64| f(Complex64::new(s, 0.0)).re;
            (gaver_stehfest(g, x, cfg.nodes), gaver_stehfest(g, x, cfg.nodes - 2))
        }
    };
    if !v.is_finite() {
        return Err(Error::ValidationFailed {
            residual: f64::INFINITY,
            threshold: cfg.residual,
        });
    }
    let residual = (v - check).abs() / v.abs().max(1.0);
    if residual > cfg.residual {
        return Err(Error::ValidationFailed {
            residual,
            threshold: cfg.residual,
        });
    }
    Ok(v)
}

/// Forward check: the largest relative gap between `∫ e^{-λx} f(x) dx` and `F(λ)` over `probes`.
pub fn forward_residual<Fx, Fl>(
    f: Fx,
    transform: Fl,
    probes: &[f64],
    qcfg: &super::QuadratureConfig,
) -> Result<f64>
where
    Fx: Fn(f64) -> f64,
    Fl: Fn(f64) -> f64,
{
    let mut worst = 0.0f64;
    for &lam in probes {
        let q = super::integrate_0_inf(|x: f64| (-lam * x).exp() * f(x), qcfg)?;
        let target = transform(lam);
        worst = worst.max((q.value - target).abs() / target.abs().max(1e-300));
    }
    Ok(worst)
}
