//! Lévy measures of subordinators.

use num_complex::Complex64;
use statrs::function::gamma::{gamma, gamma_lr, gamma_ur};

use crate::error::{check_positive, Error, Result};
use crate::numerics::{integrate, QuadratureConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Piecewise-linear tail `Π̄₀` on a knot grid.
///
/// `Π̄₀ = tail[0]` on `(0, knots[0]]`, linear between knots, and zero past the last
/// knot; the last tail value must be 0. The measure is therefore uniform on each
/// segment, has finite mass `tail[0]` and compact support.
#[derive(Debug, Clone, PartialEq)]
pub struct TailTable {
    knots: Vec<f64>,
    tail: Vec<f64>,
}

impl TailTable {
    pub fn new(knots: Vec<f64>, tail: Vec<f64>) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidSpec(format!("tabulated tail: {m}")));
        if knots.len() < 2 || knots.len() != tail.len() {
            return bad("need at least two knots and one tail value per knot");
        }
        if !knots.iter().chain(tail.iter()).all(|v| v.is_finite()) {
            return bad("non-finite entry");
        }
        if knots[0] <= 0.0 || knots.windows(2).any(|w| w[1] <= w[0]) {
            return bad("knots must be positive and strictly increasing");
        }
        if tail.iter().any(|&t| t < 0.0) || tail.windows(2).any(|w| w[1] > w[0]) {
            return bad("tail must be nonnegative and nonincreasing");
        }
        if *tail.last().unwrap() != 0.0 {
            return bad("tail must reach 0 at the last knot");
        }
        if tail[0] <= 0.0 {
            return bad("tail is identically zero");
        }
        Ok(Self { knots, tail })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.tail
    }

    pub fn mass(&self) -> f64 {
        self.tail[0]
    }

    fn segments(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.knots
            .windows(2)
            .zip(self.tail.windows(2))
            .map(|(k, t)| (k[0], k[1], t[0], t[1]))
    }

    pub fn tail_at(&self, x: f64) -> f64 {
        if x <= self.knots[0] {
            return self.tail[0];
        }
        for (x0, x1, t0, t1) in self.segments() {
            if x <= x1 {
                return t0 + (t1 - t0) * (x - x0) / (x1 - x0);
            }
        }
        0.0
    }

    pub fn density_at(&self, x: f64) -> f64 {
        for (x0, x1, t0, t1) in self.segments() {
            if x > x0 && x < x1 {
                return (t0 - t1) / (x1 - x0);
            }
        }
        0.0
    }

    /// `λ ∫ e^{-λx} Π̄₀(x) dx` by adaptive quadrature per segment.
    fn psi_c(&self, lam: Complex64) -> Complex64 {
        let cfg = QuadratureConfig {
            abs_tol: 1e-15,
            rel_tol: 1e-13,
            ..QuadratureConfig::default()
        };
        let x0 = self.knots[0];
        // (0, x0]: constant tail integrates in closed form.
        let mut acc = -(-lam * x0).exp_m1() * self.tail[0];
        for (a, b, t0, t1) in self.segments() {
            let q = integrate(
                |x: f64| (-lam * x).exp() * lam * (t0 + (t1 - t0) * (x - a) / (b - a)),
                a,
                b,
                &cfg,
            )
            // A failure here surfaces as a non-finite φ downstream.
            .map_or(Complex64::new(f64::NAN, f64::NAN), |q| q.value);
            acc += q;
        }
        acc
    }
}

impl TailTable {
    /// `∫ x^k e^{-λx} Π₀(dx)` for the uniform segments.
    fn moment(&self, lam: f64, k: i32) -> f64 {
        let cfg = QuadratureConfig {
            abs_tol: 1e-15,
            rel_tol: 1e-13,
            ..QuadratureConfig::default()
        };
        self.segments()
            .map(|(a, b, t0, t1)| {
                let d = (t0 - t1) / (b - a);
                integrate(|x: f64| d * x.powi(k) * (-lam * x).exp(), a, b, &cfg).map_or(f64::NAN, |q| q.value)
            })
            .sum()
    }
}

trait ExpM1 {
    fn exp_m1(self) -> Self;
}

impl ExpM1 for Complex64 {
    fn exp_m1(self) -> Self {
        if self.norm() < 1e-5 {
            self * (1.0 + self * (0.5 + self / 6.0))
        } else {
            self.exp() - 1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LevyKind {
    None,
    /// Jumps `Exp(rate)` arriving at rate `arrival`: `Π(dx) = arrival·rate·e^{-rate x} dx`.
    Exponential { rate: f64, arrival: f64 },
    /// `Π(dx) = c x^{β-1} e^{-x} / Γ(β) dx`: Gamma(β, 1) jumps at rate `c`.
    GammaJumps { c: f64, beta: f64 },
    /// `Π(dx) = γ/Γ(1-γ) x^{-1-γ} dx`, normalized so that `φ(λ) = λ^γ`.
    Stable { gamma: f64 },
    Atoms(Vec<Atom>),
    Tabulated(TailTable),
}

/// A Lévy measure `e^{-θx} Π(dx)` with `Π` from [`LevyKind`] and tempering `θ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyMeasure {
    kind: LevyKind,
    tempering: f64,
}

impl LevyMeasure {
    pub fn none() -> Self {
        Self {
            kind: LevyKind::None,
            tempering: 0.0,
        }
    }

    pub fn exponential(rate: f64, arrival: f64) -> Result<Self> {
        Self::new(LevyKind::Exponential { rate, arrival })
    }

    pub fn gamma_jumps(c: f64, beta: f64) -> Result<Self> {
        Self::new(LevyKind::GammaJumps { c, beta })
    }

    pub fn stable(gamma: f64) -> Result<Self> {
        Self::new(LevyKind::Stable { gamma })
    }

    pub fn atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        Self::new(LevyKind::Atoms(
            atoms
                .iter()
                .map(|&(location, mass)| Atom { location, mass })
                .collect(),
        ))
    }

    pub fn tabulated(knots: Vec<f64>, tail: Vec<f64>) -> Result<Self> {
        Self::new(LevyKind::Tabulated(TailTable::new(knots, tail)?))
    }

    pub fn new(kind: LevyKind) -> Result<Self> {
        let spec_err = |m: String| Err(Error::InvalidSpec(m));
        match &kind {
            LevyKind::None | LevyKind::Tabulated(_) => {}
            LevyKind::Exponential { rate, arrival } => {
                check_positive("levy.rate", *rate)?;
                check_positive("levy.arrival", *arrival)?;
            }
            LevyKind::GammaJumps { c, beta } => {
                check_positive("levy.c", *c)?;
                check_positive("levy.beta", *beta)?;
            }
            LevyKind::Stable { gamma } => {
                if !(*gamma > 0.0 && *gamma < 1.0) {
                    return spec_err(format!("stable index must lie in (0, 1), got {gamma}"));
                }
            }
            LevyKind::Atoms(atoms) => {
                if atoms.is_empty() {
                    return spec_err("atoms kind needs at least one atom".into());
                }
                for a in atoms {
                    check_positive("atom location", a.location)?;
                    check_positive("atom mass", a.mass)?;
                }
            }
        }
        let kind = match kind {
            LevyKind::Atoms(mut atoms) => {
                atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
                LevyKind::Atoms(atoms)
            }
            k => k,
        };
        Ok(Self { kind, tempering: 0.0 })
    }

    /// Multiply the measure by `e^{-c x}`.
    ///
    /// Exponential and atomic kinds absorb the factor into their parameters; the
    /// other kinds carry it as a tempering exponent.
    pub fn tempered_by(&self, c: f64) -> Result<Self> {
        check_positive("tempering", c)?;
        let kind = match &self.kind {
            LevyKind::None => return Ok(self.clone()),
            LevyKind::Exponential { rate, arrival } => LevyKind::Exponential {
                rate: rate + c,
                arrival: arrival * rate / (rate + c),
            },
            LevyKind::Atoms(atoms) => LevyKind::Atoms(
                atoms
                    .iter()
                    .map(|a| Atom {
                        location: a.location,
                        mass: a.mass * (-c * a.location).exp(),
                    })
                    .collect(),
            ),
            other => {
                return Ok(Self {
                    kind: other.clone(),
                    tempering: self.tempering + c,
                })
            }
        };
        Ok(Self {
            kind,
            tempering: self.tempering,
        })
    }

    pub fn kind(&self) -> &LevyKind {
        &self.kind
    }

    pub fn tempering(&self) -> f64 {
        self.tempering
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, LevyKind::None)
    }

    pub fn is_finite_activity(&self) -> bool {
        !matches!(self.kind, LevyKind::Stable { .. })
    }

    /// Total mass `Π(0, ∞)`, `None` when infinite.
    pub fn total_mass(&self) -> Option<f64> {
        if self.is_finite_activity() {
            Some(self.tail(0.0))
        } else {
            None
        }
    }

    /// Supremum of the support, `None` when unbounded.
    pub fn support_bound(&self) -> Option<f64> {
        match &self.kind {
            LevyKind::None => Some(0.0),
            LevyKind::Atoms(atoms) => atoms.last().map(|a| a.location),
            LevyKind::Tabulated(t) => t.knots.last().copied(),
            _ => None,
        }
    }

    /// Tail `Π(x, ∞)` for `x ≥ 0` (infinite at 0 for the stable kind).
    pub fn tail(&self, x: f64) -> f64 {
        let th = self.tempering;
        match &self.kind {
            LevyKind::None => 0.0,
            LevyKind::Exponential { rate, arrival } => arrival * (-rate * x).exp(),
            LevyKind::GammaJumps { c, beta } => {
                let r = 1.0 + th;
                let mass = c * r.powf(-beta);
                if x <= 0.0 {
                    mass
                } else {
                    mass * gamma_ur(*beta, r * x)
                }
            }
            LevyKind::Stable { gamma: g } => {
                if x <= 0.0 {
                    return f64::INFINITY;
                }
                if th == 0.0 {
                    x.powf(-g) / gamma(1.0 - g)
                } else {
                    // c θ^γ Γ(-γ, θx) with Γ(-γ, z) = (z^{-γ} e^{-z} - Γ(1-γ, z)) / γ.
                    let z = th * x;
                    th.powf(*g) * (z.powf(-g) * (-z).exp() / gamma(1.0 - g) - gamma_ur(1.0 - g, z))
                }
            }
            LevyKind::Atoms(atoms) => atoms
                .iter()
                .filter(|a| a.location > x)
                .map(|a| a.mass)
                .sum(),
            LevyKind::Tabulated(t) => {
                if th == 0.0 {
                    return t.tail_at(x);
                }
                // ∫_x^∞ e^{-θy} d_i dy over the uniform segments.
                t.segments()
                    .filter(|s| s.1 > x)
                    .map(|(a, b, t0, t1)| {
                        let lo = a.max(x);
                        let d = (t0 - t1) / (b - a);
                        d * ((-th * lo).exp() - (-th * b).exp()) / th
                    })
                    .sum()
            }
        }
    }

    /// Density of the absolutely continuous kinds, `None` for atoms.
    pub fn density(&self, x: f64) -> Option<f64> {
        let th = self.tempering;
        if x <= 0.0 {
            return Some(0.0);
        }
        let d = match &self.kind {
            LevyKind::None => 0.0,
            LevyKind::Exponential { rate, arrival } => arrival * rate * (-rate * x).exp(),
            LevyKind::GammaJumps { c, beta } => c * x.powf(beta - 1.0) * (-x).exp() / gamma(*beta),
            LevyKind::Stable { gamma: g } => g / gamma(1.0 - g) * x.powf(-1.0 - g),
            LevyKind::Atoms(_) => return None,
            LevyKind::Tabulated(t) => t.density_at(x),
        };
        Some(d * (-th * x).exp())
    }

    /// `ψ(λ) = ∫ (1 - e^{-λx}) Π(dx)` for real `λ ≥ 0`.
    pub fn psi(&self, lam: f64) -> f64 {
        let th = self.tempering;
        match &self.kind {
            LevyKind::None => 0.0,
            LevyKind::Exponential { rate, arrival } => arrival * lam / (lam + rate),
            LevyKind::GammaJumps { c, beta } => {
                // c[(1+θ)^{-β} - (1+θ+λ)^{-β}] = c(1+θ)^{-β}(1 - (1 + λ/(1+θ))^{-β})
                let r = 1.0 + th;
                -c * r.powf(-beta) * (-beta * (lam / r).ln_1p()).exp_m1()
            }
            LevyKind::Stable { gamma: g } => {
                if th == 0.0 {
                    lam.powf(*g)
                } else {
                    th.powf(*g) * ((g * (lam / th).ln_1p()).exp_m1())
                }
            }
            LevyKind::Atoms(atoms) => atoms
                .iter()
                .map(|a| -a.mass * (-lam * a.location).exp_m1())
                .sum(),
            LevyKind::Tabulated(t) => {
                let z = |l: f64| t.psi_c(Complex64::new(l, 0.0)).re;
                if th == 0.0 {
                    z(lam)
                } else {
                    z(lam + th) - z(th)
                }
            }
        }
    }

    /// `ψ'(λ) = ∫ x e^{-λx} Π(dx)`; infinite at `λ = 0` for the untempered stable kind.
    pub fn psi_prime(&self, lam: f64) -> f64 {
        let th = self.tempering;
        match &self.kind {
            LevyKind::None => 0.0,
            LevyKind::Exponential { rate, arrival } => arrival * rate / ((lam + rate) * (lam + rate)),
            LevyKind::GammaJumps { c, beta } => c * beta * (1.0 + th + lam).powf(-beta - 1.0),
            LevyKind::Stable { gamma: g } => g * (lam + th).powf(g - 1.0),
            LevyKind::Atoms(atoms) => atoms
                .iter()
                .map(|a| a.mass * a.location * (-lam * a.location).exp())
                .sum(),
            LevyKind::Tabulated(_) => richardson_first(|l| self.psi(l), lam),
        }
    }

    /// `ψ''(λ) = -∫ x² e^{-λx} Π(dx)`.
    pub fn psi_second(&self, lam: f64) -> f64 {
        let th = self.tempering;
        match &self.kind {
            LevyKind::None => 0.0,
            LevyKind::Exponential { rate, arrival } => -2.0 * arrival * rate / (lam + rate).powi(3),
            LevyKind::GammaJumps { c, beta } => -c * beta * (beta + 1.0) * (1.0 + th + lam).powf(-beta - 2.0),
            LevyKind::Stable { gamma: g } => g * (g - 1.0) * (lam + th).powf(g - 2.0),
            LevyKind::Atoms(atoms) => -atoms
                .iter()
                .map(|a| a.mass * a.location * a.location * (-lam * a.location).exp())
                .sum::<f64>(),
            LevyKind::Tabulated(t) => -t.moment(lam + th, 2),
        }
    }

    /// `ψ` continued to `Re λ > 0`.
    pub fn psi_c(&self, lam: Complex64) -> Complex64 {
        let th = self.tempering;
        let one = Complex64::new(1.0, 0.0);
        match &self.kind {
            LevyKind::None => Complex64::new(0.0, 0.0),
            LevyKind::Exponential { rate, arrival } => lam * *arrival / (lam + rate),
            LevyKind::GammaJumps { c, beta } => {
                let r = 1.0 + th;
                -(((one + lam / r).ln() * -beta).exp_m1()) * (c * r.powf(-beta))
            }
            LevyKind::Stable { gamma: g } => {
                if th == 0.0 {
                    lam.powf(*g)
                } else {
                    ((one + lam / th).ln() * *g).exp_m1() * th.powf(*g)
                }
            }
            LevyKind::Atoms(atoms) => atoms
                .iter()
                .map(|a| -((-lam * a.location).exp_m1()) * a.mass)
                .sum(),
            LevyKind::Tabulated(t) => {
                if th == 0.0 {
                    t.psi_c(lam)
                } else {
                    t.psi_c(lam + th) - t.psi_c(Complex64::new(th, 0.0))
                }
            }
        }
    }

    /// `ψ'` continued to `Re λ > 0`.
    pub fn psi_prime_c(&self, lam: Complex64) -> Complex64 {
        let th = self.tempering;
        match &self.kind {
            LevyKind::None => Complex64::new(0.0, 0.0),
            LevyKind::Exponential { rate, arrival } => {
                let d = lam + rate;
                Complex64::new(arrival * rate, 0.0) / (d * d)
            }
            LevyKind::GammaJumps { c, beta } => (lam + 1.0 + th).powf(-beta - 1.0) * (c * beta),
            LevyKind::Stable { gamma: g } => (lam + th).powf(g - 1.0) * *g,
            LevyKind::Atoms(atoms) => atoms
                .iter()
                .map(|a| (-lam * a.location).exp() * (a.mass * a.location))
                .sum(),
            LevyKind::Tabulated(_) => {
                let h = 1e-5 * (1.0 + lam.norm());
                let d = |h: f64| (self.psi_c(lam + h) - self.psi_c(lam - h)) / (2.0 * h);
                (d(0.5 * h) * 4.0 - d(h)) / 3.0
            }
        }
    }

    /// `∫_0^ε x Π(dx)`: the drift that compensates dropping jumps below `ε`.
    ///
    /// Finite-activity kinds are simulated without truncation and return 0.
    pub fn small_jump_mean(&self, eps: f64) -> f64 {
        match &self.kind {
            LevyKind::Stable { gamma: g } => {
                let th = self.tempering;
                if th == 0.0 {
                    g / gamma(1.0 - g) * eps.powf(1.0 - g) / (1.0 - g)
                } else {
                    g * th.powf(g - 1.0) * gamma_lr(1.0 - g, th * eps)
                }
            }
            _ => 0.0,
        }
    }
}

/// Central difference with step `h = 1e-5(1+λ)` and one Richardson step.
/// Near `λ = 0` the stencil is shifted right so no negative argument is used.
fn richardson_first<F: Fn(f64) -> f64>(f: F, lam: f64) -> f64 {
    let h = 1e-5 * (1.0 + lam);
    if lam >= h {
        let d = |h: f64| (f(lam + h) - f(lam - h)) / (2.0 * h);
        (4.0 * d(0.5 * h) - d(h)) / 3.0
    } else {
        // One-sided second-order formulas, then Richardson.
        let d = |h: f64| (-3.0 * f(lam) + 4.0 * f(lam + h) - f(lam + 2.0 * h)) / (2.0 * h);
        (4.0 * d(0.5 * h) - d(h)) / 3.0
    }
}
