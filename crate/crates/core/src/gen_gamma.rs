//! Webster's generalized gamma functions and the Mellin transforms of `I` and `R`.
//!
//! For a log-concave `g` with `g(s+c)/g(s) → 1`,
//! `Γ_g(s) = e^{-γ_g s}/g(s) ∏_{n≥1} g(n)/g(n+s) e^{a_n s}` with `a_n = g'(n)/g(n)` and
//! `γ_g = lim (Σ_{j≤n} a_j - log g(n))`. Both the constant and the product are
//! summed to a cutoff `N` and closed with an Euler–Maclaurin tail.

use statrs::function::gamma::ln_gamma;

use crate::error::{check_positive, Error, Result};
use crate::harmonic::HarmonicDensity;
use crate::numerics::{integrate, CompensatedSum, QuadratureConfig};
use crate::subordinator::{kill, tilt, SubordinatorSpec};

/// The function `g` whose generalized gamma function is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum GFunction {
    /// `g(s) = s`, giving the classical gamma function.
    Identity,
    /// `g = φ`.
    Phi(SubordinatorSpec),
    /// `g = φ* = λ/φ(λ)`.
    Conjugate(SubordinatorSpec),
}

impl GFunction {
    pub fn value(&self, s: f64) -> f64 {
        match self {
            GFunction::Identity => s,
            GFunction::Phi(p) => p.value(s),
            GFunction::Conjugate(p) => s / p.value(s),
        }
    }

    /// `log g(s)`.
    pub fn ln(&self, s: f64) -> f64 {
        match self {
            GFunction::Identity => s.ln(),
            GFunction::Phi(p) => p.value(s).ln(),
            GFunction::Conjugate(p) => s.ln() - p.value(s).ln(),
        }
    }

    /// `g'(s)/g(s)`.
    pub fn log_derivative(&self, s: f64) -> f64 {
        match self {
            GFunction::Identity => 1.0 / s,
            GFunction::Phi(p) => p.derivative(s) / p.value(s),
            GFunction::Conjugate(p) => 1.0 / s - p.derivative(s) / p.value(s),
        }
    }

    /// `(log g)''(s)`.
    pub fn log_second_derivative(&self, s: f64) -> f64 {
        let phi_part = |p: &SubordinatorSpec| {
            let f = p.value(s);
            let d = p.derivative(s) / f;
            p.second_derivative(s) / f - d * d
        };
        match self {
            GFunction::Identity => -1.0 / (s * s),
            GFunction::Phi(p) => phi_part(p),
            GFunction::Conjugate(p) => -1.0 / (s * s) - phi_part(p),
        }
    }

    /// Structural test for `g(s) → 1`, read off the triplet rather than inferred numerically.
    pub fn tends_to_one(&self) -> bool {
        match self {
            GFunction::Identity => false,
            GFunction::Phi(p) => p.limit_at_infinity() == Some(1.0),
            // λ/φ(λ) → 1/a when φ - aλ stays bounded.
            GFunction::Conjugate(p) => {
                p.drift() == 1.0
                    && p.triplet()
                        .is_some_and(|t| t.levy.total_mass().is_some())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenGammaConfig {
    /// First cutoff tried; doubled until the Euler constant settles.
    pub n_start: usize,
    pub n_max: usize,
    /// Stop doubling once successive estimates of `γ_g` differ by less than this.
    pub tolerance: f64,
}

impl Default for GenGammaConfig {
    fn default() -> Self {
        Self {
            n_start: 128,
            n_max: 1 << 20,
            tolerance: 1e-12,
        }
    }
}

/// Cached state for evaluating `Γ_g`.
#[derive(Debug, Clone)]
pub struct GenGammaEvaluator {
    g: GFunction,
    gamma_g: f64,
    cutoff: usize,
    /// `log g(n)` and `a_n` for `n = 1..=cutoff` (index 0 unused).
    ln_g: Vec<f64>,
    a: Vec<f64>,
    shortcut: bool,
}

/// Euler–Maclaurin estimate of `γ_g` at cutoff `n` given `Σ_{j≤n} a_j`.
fn euler_estimate(g: &GFunction, n: usize, partial: f64) -> f64 {
    let x = n as f64;
    partial - g.ln(x) - 0.5 * g.log_derivative(x) - g.log_second_derivative(x) / 12.0
}

impl GenGammaEvaluator {
    pub fn new(g: GFunction, cfg: &GenGammaConfig) -> Result<Self> {
        let mut ln_g = vec![f64::NAN];
        let mut a = vec![f64::NAN];
        let mut partial = CompensatedSum::new();
        let mut n = cfg.n_start.max(8);
        let mut prev: Option<f64> = None;
        loop {
            while a.len() <= n {
                let x = a.len() as f64;
                let (l, d) = (g.ln(x), g.log_derivative(x));
                if !(l.is_finite() && d.is_finite()) {
                    return Err(Error::NonConvergent(format!("g is not finite and positive at {x}")));
                }
                ln_g.push(l);
                a.push(d);
                partial.add(d);
            }
            let est = euler_estimate(&g, n, partial.value());
            if let Some(p) = prev {
                let diff = (est - p).abs();
                if diff < cfg.tolerance * est.abs().max(1.0) {
                    return Ok(Self::finish(g, est, n, ln_g, a));
                }
                if 2 * n > cfg.n_max {
                    // Accept a settled value at the cap, otherwise give up.
                    if diff < 1e-9 * est.abs().max(1.0) {
                        return Ok(Self::finish(g, est, n, ln_g, a));
                    }
                    return Err(Error::NonConvergent(format!(
                        "Euler constant estimates differ by {diff:e} at cutoff {n}"
                    )));
                }
            }
            prev = Some(est);
            n *= 2;
        }
    }

    fn finish(g: GFunction, gamma_g: f64, cutoff: usize, ln_g: Vec<f64>, a: Vec<f64>) -> Self {
        let shortcut = g.tends_to_one();
        Self {
            g,
            gamma_g,
            cutoff,
            ln_g,
            a,
            shortcut,
        }
    }

    pub fn identity() -> Result<Self> {
        Self::new(GFunction::Identity, &GenGammaConfig::default())
    }

    pub fn for_phi(spec: &SubordinatorSpec) -> Result<Self> {
        Self::new(GFunction::Phi(spec.clone()), &GenGammaConfig::default())
    }

    pub fn for_conjugate(spec: &SubordinatorSpec) -> Result<Self> {
        Self::new(GFunction::Conjugate(spec.clone()), &GenGammaConfig::default())
    }

    pub fn g(&self) -> &GFunction {
        &self.g
    }

    /// `γ_g`.
    pub fn euler_constant(&self) -> f64 {
        self.gamma_g
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Whether the `g → 1` product (no exponential factors) is in use.
    pub fn uses_shortcut(&self) -> bool {
        self.shortcut
    }

    /// `a_n` for `1 ≤ n ≤ cutoff`, else computed on the fly.
    pub fn a_n(&self, n: usize) -> f64 {
        if n >= 1 && n < self.a.len() {
            self.a[n]
        } else {
            self.g.log_derivative(n as f64)
        }
    }

    /// `log Γ_g(t)` for `t ∈ (0, 1]` straight from the product.
    fn ln_gamma_unit(&self, t: f64) -> Result<f64> {
        if t == 1.0 {
            return Ok(0.0);
        }
        self.ln_gamma_product(t, self.shortcut)
    }

    /// Product formula at any `s > 0`, without functional-equation reduction.
    pub(crate) fn ln_gamma_product(&self, s: f64, shortcut: bool) -> Result<f64> {
        let g = &self.g;
        let n = self.cutoff;
        let big_n = n as f64;
        let mut sum = CompensatedSum::new();
        for k in 1..=n {
            let mut h = self.ln_g[k] - g.ln(k as f64 + s);
            if !shortcut {
                h += s * self.a[k];
            }
            sum.add(h);
        }
        // Σ_{k>N} h(k) ≈ ∫_N^∞ h - h(N)/2 - h'(N)/12.
        let int_l = integrate(
            |u: f64| g.ln(u),
            big_n,
            big_n + s,
            &QuadratureConfig::default(),
        )?
        .value;
        let (l_n, l_ns) = (self.ln_g[n], g.ln(big_n + s));
        let (a_n, a_ns) = (self.a[n], g.log_derivative(big_n + s));
        let tail = if shortcut {
            // h = L(u) - L(u+s), ∫_N^∞ h = ∫_N^{N+s} L since L(∞) = 0.
            let h = l_n - l_ns;
            let dh = a_n - a_ns;
            int_l - 0.5 * h - dh / 12.0
        } else {
            let h = l_n - l_ns + s * a_n;
            let dh = a_n - a_ns + s * g.log_second_derivative(big_n);
            int_l - s * l_n - 0.5 * h - dh / 12.0
        };
        let gamma_term = if shortcut { 0.0 } else { -self.gamma_g * s };
        let v = gamma_term - g.ln(s) + sum.value() + tail;
        if !v.is_finite() {
            return Err(Error::NonConvergent(format!("log Γ_g({s}) is not finite")));
        }
        Ok(v)
    }

    /// `log Γ_g(s)`, `s > 0`.
    ///
    /// Reduces `s = m + t` with `t ∈ (0, 1]` through `Γ_g(s) = Γ_g(t) ∏_{i<m} g(t+i)`, so
    /// integer arguments are exact finite products.
    pub fn ln_gamma(&self, s: f64) -> Result<f64> {
        check_positive("s", s)?;
        let m = s.ceil() - 1.0;
        let t = s - m;
        let mut acc = CompensatedSum::new();
        acc.add(self.ln_gamma_unit(t)?);
        for i in 0..m as usize {
            acc.add(self.g.ln(t + i as f64));
        }
        Ok(acc.value())
    }

    /// `Γ_g(s)`, `s > 0`.
    pub fn gamma(&self, s: f64) -> Result<f64> {
        self.ln_gamma(s).map(f64::exp)
    }

    /// `|Γ_g(s+1) - g(s)Γ_g(s)| / Γ_g(s+1)`.
    pub fn functional_residual(&self, s: f64) -> Result<f64> {
        let lhs = self.ln_gamma(s + 1.0)?;
        let rhs = self.ln_gamma(s)? + self.g.ln(s);
        Ok((rhs - lhs).exp_m1().abs())
    }
}

/// `γ_g`.
pub fn euler_constant_gen(g: &GFunction) -> Result<f64> {
    GenGammaEvaluator::new(g.clone(), &GenGammaConfig::default()).map(|e| e.euler_constant())
}

/// `Γ_g(s)`, `s > 0`.
pub fn gamma_gen(g: &GFunction, s: f64) -> Result<f64> {
    check_positive("s", s)?;
    GenGammaEvaluator::new(g.clone(), &GenGammaConfig::default())?.gamma(s)
}

fn check_moment_order(s: f64) -> Result<()> {
    if s.is_finite() && s > -1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument {
            name: "s",
            value: s,
            reason: "moment order must exceed -1",
        })
    }
}

/// `E[R^s] = Γ_φ(s+1)`, `s > -1`.
#[allow(non_snake_case)]
pub fn moment_R(spec: &SubordinatorSpec, s: f64) -> Result<f64> {
    check_moment_order(s)?;
    GenGammaEvaluator::for_phi(spec)?.gamma(s + 1.0)
}

/// `E[I^s] = Γ(s+1)/Γ_φ(s+1)`, `s > -1`.
#[allow(non_snake_case)]
pub fn moment_I(spec: &SubordinatorSpec, s: f64) -> Result<f64> {
    check_moment_order(s)?;
    let ev = GenGammaEvaluator::for_phi(spec)?;
    Ok((ln_gamma(s + 1.0) - ev.ln_gamma(s + 1.0)?).exp())
}

/// `E[I^n] = ∏_{i=1}^n i/φ(i)`.
#[allow(non_snake_case)]
pub fn moment_I_integer(spec: &SubordinatorSpec, n: u32) -> f64 {
    (1..=n).map(|i| i as f64 / spec.value(i as f64)).product()
}

/// `E[R^n] = ∏_{i=1}^n φ(i)`.
#[allow(non_snake_case)]
pub fn moment_R_integer(spec: &SubordinatorSpec, n: u32) -> f64 {
    (1..=n).map(|i| spec.value(i as f64)).product()
}

/// `E[I_{e_α}^s e^{-μ ξ_{e_α}}] = α/(α+φ(μ)) · Γ(s+1)/Γ_{φ(·+μ)+α}(s+1)` for `q = 0`.
pub fn joint_transform(spec: &SubordinatorSpec, alpha: f64, mu: f64, s: f64) -> Result<f64> {
    let q = spec.kill_rate();
    if q > 0.0 {
        return Err(Error::KillingNotAllowed(q));
    }
    check_positive("alpha", alpha)?;
    crate::error::check_nonnegative("mu", mu)?;
    check_moment_order(s)?;
    let shifted = if mu > 0.0 { tilt(spec, mu)? } else { spec.clone() };
    let modified = kill(&shifted, alpha)?;
    let ev = GenGammaEvaluator::for_phi(&modified)?;
    let prefactor = alpha / (alpha + spec.value(mu));
    Ok(prefactor * (ln_gamma(s + 1.0) - ev.ln_gamma(s + 1.0)?).exp())
}

/// Deterministic pieces of the truncated product representation of `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GordonTail {
    pub n: u32,
    /// `d_n = -Σ_{k≤n} φ'(k)/φ(k) + log φ(n+1)`.
    pub d_n: f64,
    /// `B_n = ∫ e^{-x}(e^{-x} - 1 + x) e^{-nx} / (1 - e^{-x}) H(dx) ≥ 0`.
    pub b_n: f64,
    pub b_error: f64,
}

/// `e^{-x} - 1 + x` without cancellation near 0.
pub(crate) fn exp_m1_plus_x(x: f64) -> f64 {
    if x < 1e-2 {
        let x2 = x * x;
        x2 * (0.5 - x / 6.0 + x2 / 24.0 - x2 * x / 120.0 + x2 * x2 / 720.0 - x2 * x2 * x / 5040.0)
    } else {
        x + (-x).exp_m1()
    }
}

/// `d_n` and `B_n` for `n ≥ 1`, with `B_n` integrated against the harmonic measure `H`.
pub fn gordon_tail(
    spec: &SubordinatorSpec,
    n: u32,
    density: &HarmonicDensity,
    cfg: &QuadratureConfig,
) -> Result<GordonTail> {
    if n == 0 {
        return Err(Error::InvalidArgument {
            name: "n",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    let mut sum = CompensatedSum::new();
    for k in 1..=n {
        let k = k as f64;
        sum.add(spec.derivative(k) / spec.value(k));
    }
    let d_n = -sum.value() + spec.value(n as f64 + 1.0).ln();
    let nf = n as f64;
    let kernel = move |x: f64| {
        // e^{-x}(e^{-x}-1+x)e^{-nx}/(1-e^{-x})
        (-(nf + 1.0) * x).exp() * exp_m1_plus_x(x) / -(-x).exp_m1()
    };
    let (b_n, b_error) = density.integrate_against(kernel, cfg)?;
    Ok(GordonTail {
        n,
        d_n,
        b_n: b_n.max(0.0),
        b_error,
    })
}
