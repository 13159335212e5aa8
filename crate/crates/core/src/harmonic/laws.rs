//! Laws attached to `φ`: the last position below an independent exponential level and
//! its undershoot, the potential measure, and the Lévy data of `log R`.

use statrs::function::gamma::gamma;

use super::{hpm_density, HarmonicDensity};
use crate::error::{check_nonnegative, check_positive, Error, Result};
use crate::gen_gamma::{exp_m1_plus_x, GenGammaEvaluator};
use crate::numerics::{integrate, QuadratureConfig};
use crate::subordinator::{ConjugatePair, LevyKind, SubordinatorSpec};

/// `E e^{-λ G} = φ(α)/φ(α+λ)` for the last position `G` below an `Exp(α)` level.
#[allow(non_snake_case)]
pub fn undershoot_laplace_G(spec: &SubordinatorSpec, alpha: f64, lam: f64) -> Result<f64> {
    check_positive("alpha", alpha)?;
    check_nonnegative("lambda", lam)?;
    if lam == 0.0 {
        return Ok(1.0);
    }
    Ok(spec.value(alpha) / spec.value(alpha + lam))
}

/// `E e^{-λ U} = (α/φ(α)) φ(α+λ)/(α+λ)` for the undershoot `U = e_α - G`.
#[allow(non_snake_case)]
pub fn undershoot_laplace_U(spec: &SubordinatorSpec, alpha: f64, lam: f64) -> Result<f64> {
    check_positive("alpha", alpha)?;
    check_nonnegative("lambda", lam)?;
    if lam == 0.0 {
        return Ok(1.0);
    }
    Ok(alpha / spec.value(alpha) * spec.value(alpha + lam) / (alpha + lam))
}

/// Law of the undershoot: atom `αa/φ(α)` at 0 and density `(α/φ(α)) e^{-αx} (q + Π(x, ∞))`.
pub fn undershoot_density(spec: &SubordinatorSpec, alpha: f64, x: f64) -> Result<(f64, f64)> {
    check_positive("alpha", alpha)?;
    check_nonnegative("x", x)?;
    let t = spec
        .triplet()
        .ok_or_else(|| Error::Unsupported("undershoot density needs the triplet of the spec".into()))?;
    let c = alpha / spec.value(alpha);
    let tail = t.kill + if x > 0.0 { t.levy.tail(x) } else { 0.0 };
    Ok((c * t.drift, c * (-alpha * x).exp() * tail))
}

/// Potential measure `V = ∫ P(ξ_t ∈ ·) dt` for the specs where it has a closed form.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialMeasure {
    /// `atom·δ₀ + Σ c_i e^{-r_i x} dx`.
    Exponential { atom: f64, terms: Vec<(f64, f64)> },
    /// `x^{γ-1}/Γ(γ) dx`.
    Power { gamma: f64 },
}

impl PotentialMeasure {
    pub fn atom(&self) -> f64 {
        match self {
            PotentialMeasure::Exponential { atom, .. } => *atom,
            PotentialMeasure::Power { .. } => 0.0,
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            PotentialMeasure::Exponential { terms, .. } => terms.iter().map(|&(c, r)| c * (-r * x).exp()).sum(),
            PotentialMeasure::Power { gamma: g } => x.powf(g - 1.0) / gamma(*g),
        }
    }
}

/// `V` for killed drift, exponential jumps with or without drift, and the stable spec.
pub fn potential_measure(spec: &SubordinatorSpec) -> Result<PotentialMeasure> {
    let none = || Error::NoClosedFormPotential(spec.to_string());
    let t = spec.triplet().ok_or_else(none)?;
    let (q, a) = (t.kill, t.drift);
    if t.levy.tempering() != 0.0 {
        return Err(none());
    }
    match *t.levy.kind() {
        LevyKind::None => Ok(PotentialMeasure::Exponential {
            atom: 0.0,
            terms: vec![(1.0 / a, q / a)],
        }),
        LevyKind::Exponential { rate, arrival } if a == 0.0 => {
            // 1/φ = (λ + r)/((q + m)(λ + r₁)).
            let r1 = q * rate / (q + arrival);
            Ok(PotentialMeasure::Exponential {
                atom: 1.0 / (q + arrival),
                terms: vec![((rate - r1) / (q + arrival), r1)],
            })
        }
        LevyKind::Exponential { rate, arrival } => {
            // 1/φ = (λ + r)/(a(λ + s₁)(λ + s₂)).
            let b = q + a * rate + arrival;
            let c = q * rate;
            let s2 = (b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
            let s1 = c / (a * s2);
            let d = a * (s2 - s1);
            Ok(PotentialMeasure::Exponential {
                atom: 0.0,
                terms: vec![((rate - s1) / d, s1), ((s2 - rate) / d, s2)],
            })
        }
        LevyKind::Stable { gamma } if q == 0.0 && a == 0.0 => Ok(PotentialMeasure::Power { gamma }),
        _ => Err(none()),
    }
}

/// Law of `G`: atom `φ(α) V({0})` at 0 and density `φ(α) e^{-αx} v(x)`.
#[allow(non_snake_case)]
pub fn G_density(spec: &SubordinatorSpec, alpha: f64, x: f64) -> Result<(f64, f64)> {
    check_positive("alpha", alpha)?;
    check_nonnegative("x", x)?;
    let v = potential_measure(spec)?;
    let f = spec.value(alpha);
    Ok((f * v.atom(), f * (-alpha * x).exp() * v.density(x)))
}

/// Both routes to the Laplace exponent `log E R^λ = log Γ_φ(λ+1)` of `log R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRExponent {
    /// `-λγ_φ + ∫ (e^{-λx} - 1 + λx) e^{-x}/(1 - e^{-x}) H(dx)`.
    pub integral: f64,
    pub integral_error: f64,
    /// `log Γ_φ(λ+1)` from the product formula.
    pub gamma: f64,
}

impl LogRExponent {
    pub fn relative_gap(&self) -> f64 {
        (self.integral - self.gamma).abs() / self.gamma.abs().max(1e-300)
    }
}

#[allow(non_snake_case)]
pub fn logR_exponent(
    spec: &SubordinatorSpec,
    density: &HarmonicDensity,
    lam: f64,
    cfg: &QuadratureConfig,
) -> Result<LogRExponent> {
    check_nonnegative("lambda", lam)?;
    if lam == 0.0 {
        return Ok(LogRExponent {
            integral: 0.0,
            integral_error: 0.0,
            gamma: 0.0,
        });
    }
    let ev = GenGammaEvaluator::for_phi(spec)?;
    let (v, err) = density.integrate_against(|x| exp_m1_plus_x(lam * x) / x.exp_m1(), cfg)?;
    Ok(LogRExponent {
        integral: -lam * ev.euler_constant() + v,
        integral_error: err,
        gamma: ev.ln_gamma(lam + 1.0)?,
    })
}

/// Density of the Lévy measure of `log R` at `-x`: `ρ(x)/(x(e^x - 1))`.
#[allow(non_snake_case)]
pub fn logR_levy_density(density: &HarmonicDensity, x: f64) -> Result<f64> {
    check_positive("x", x)?;
    if x > 700.0 {
        return Ok(0.0);
    }
    Ok(density.eval(x)? / (x * x.exp_m1()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdReport {
    /// `ρ(x)/(e^x - 1)` is nonincreasing along the grid.
    pub monotone: bool,
    /// First grid pair `(x_i, x_{i+1})` where the sequence rises, with the rise.
    pub first_violation: Option<(f64, f64, f64)>,
}

/// Checks that `x ↦ ρ(x)/(e^x - 1)` is nonincreasing on `grid`; a diagnostic, not a proof.
pub fn sd_diagnostic(density: &HarmonicDensity, grid: &[f64]) -> Result<SdReport> {
    let mut prev: Option<(f64, f64)> = None;
    for &x in grid {
        let v = density.eval(x)? / x.exp_m1();
        if let Some((px, pv)) = prev {
            // Allow for rounding in the division.
            if v > pv * (1.0 + 1e-12) + 1e-300 {
                return Ok(SdReport {
                    monotone: false,
                    first_violation: Some((px, x, v - pv)),
                });
            }
        }
        prev = Some((x, v));
    }
    Ok(SdReport {
        monotone: true,
        first_violation: None,
    })
}

/// `max |ρ + ρ* - 1|` over `grid` for a conjugate pair.
pub fn conjugate_check(pair: &ConjugatePair, grid: &[f64]) -> Result<f64> {
    let a = hpm_density(&pair.primal)?;
    let b = hpm_density(&pair.dual)?;
    let mut worst = 0.0f64;
    for &x in grid {
        worst = worst.max((a.eval(x)? + b.eval(x)? - 1.0).abs());
    }
    Ok(worst)
}

/// `max |ρ(x) - a v(x) - V({0}) x π(x) - ∫_0^x y π(y) v(x-y) dy|` over `grid`.
pub fn convolution_identity_check(spec: &SubordinatorSpec, grid: &[f64]) -> Result<f64> {
    let v = potential_measure(spec)?;
    let t = spec.triplet().expect("potential measure implies a triplet");
    let rho = hpm_density(spec)?;
    let levy = &t.levy;
    let pi = |y: f64| levy.density(y).unwrap_or(0.0);
    let cfg = QuadratureConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        max_subdivisions: 20_000,
        ..QuadratureConfig::default()
    };
    let mut worst = 0.0f64;
    for &x in grid {
        check_positive("x", x)?;
        let mut rhs = t.drift * v.density(x) + v.atom() * x * pi(x);
        if !levy.is_zero() {
            // Split at x/2 and map y = m s^8 (resp. x - m s^8) so the algebraic endpoint
            // singularities of the stable case become smooth.
            let m = 0.5 * x;
            let k = 8.0;
            let jac = |s: f64| m * k * s.powf(k - 1.0);
            let left = |s: f64| {
                let y = m * s.powf(k);
                if y <= 0.0 { 0.0 } else { y * pi(y) * v.density(x - y) * jac(s) }
            };
            let right = |s: f64| {
                let w = m * s.powf(k);
                if w <= 0.0 { 0.0 } else { (x - w) * pi(x - w) * v.density(w) * jac(s) }
            };
            rhs += integrate(left, 0.0, 1.0, &cfg)?.value + integrate(right, 0.0, 1.0, &cfg)?.value;
        }
        worst = worst.max((rho.eval(x)? - rhs).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen_gamma::moment_R;
    use crate::numerics::{integrate_0_inf, lin_grid, log_grid};
    use crate::subordinator::{conjugate, LevyMeasure};
    use std::f64::consts::PI;

    /// `Γ(γ)Γ(1-γ) = π/sin(πγ)`.
    fn reflection(g: f64) -> f64 {
        PI / (PI * g).sin()
    }

    fn kd() -> SubordinatorSpec {
        SubordinatorSpec::killed_drift(1.0, 1.0).unwrap()
    }

    fn cp() -> SubordinatorSpec {
        SubordinatorSpec::new(0.0, 0.0, LevyMeasure::exponential(1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn undershoot_transforms() {
        assert!((undershoot_laplace_G(&kd(), 1.0, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((undershoot_laplace_U(&kd(), 1.0, 1.0).unwrap() - 0.75).abs() < 1e-15);
        let st = SubordinatorSpec::stable(0.5).unwrap();
        assert!((undershoot_laplace_G(&st, 1.0, 3.0).unwrap() - 0.5).abs() < 1e-15);
        let pd = SubordinatorSpec::pure_drift(1.0).unwrap();
        for l in [0.3, 1.0, 9.0] {
            assert!((undershoot_laplace_U(&pd, 2.0, l).unwrap() - 1.0).abs() < 1e-15);
        }
        assert_eq!(undershoot_laplace_G(&cp(), 1.0, 0.0).unwrap(), 1.0);
        assert_eq!(undershoot_laplace_U(&cp(), 1.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn undershoot_density_examples_and_mass() {
        let (atom, d) = undershoot_density(&kd(), 1.0, 0.7).unwrap();
        assert_eq!(atom, 0.5);
        assert!((d - 0.5 * (-0.7f64).exp()).abs() < 1e-16);
        let (atom, d) = undershoot_density(&cp(), 1.0, 0.7).unwrap();
        assert_eq!(atom, 0.0);
        assert!((d - 2.0 * (-1.4f64).exp()).abs() < 1e-15);
        assert_eq!(undershoot_density(&SubordinatorSpec::pure_drift(1.0).unwrap(), 1.0, 2.0).unwrap(), (1.0, 0.0));
        let q = QuadratureConfig::default();
        for s in [
            kd(),
            cp(),
            SubordinatorSpec::new(0.3, 0.5, LevyMeasure::gamma_jumps(1.0, 0.5).unwrap()).unwrap(),
            SubordinatorSpec::new(0.0, 0.0, LevyMeasure::atoms(&[(1.0, 1.0), (2.5, 0.5)]).unwrap()).unwrap(),
        ] {
            let atom = undershoot_density(&s, 1.3, 0.0).unwrap().0;
            let mass = integrate_0_inf(|x: f64| undershoot_density(&s, 1.3, x).unwrap().1, &q).unwrap().value;
            assert!((atom + mass - 1.0).abs() < 1e-8, "{s}: {}", atom + mass);
        }
    }

    #[test]
    fn g_law_mass_and_mean() {
        let q = QuadratureConfig::default();
        let specs = [
            kd(),
            cp(),
            SubordinatorSpec::new(0.4, 0.0, LevyMeasure::exponential(2.0, 1.5).unwrap()).unwrap(),
            SubordinatorSpec::new(0.4, 1.2, LevyMeasure::exponential(2.0, 1.5).unwrap()).unwrap(),
            SubordinatorSpec::pure_drift(1.0).unwrap(),
            SubordinatorSpec::stable(0.5).unwrap(),
        ];
        for s in &specs {
            for alpha in [0.5, 1.0, 3.0] {
                let atom = G_density(s, alpha, 0.0).unwrap().0;
                let mass = integrate_0_inf(|x: f64| G_density(s, alpha, x).unwrap().1, &q).unwrap().value;
                assert!((atom + mass - 1.0).abs() < 1e-8, "{s} α={alpha}: {}", atom + mass);
                let mean = integrate_0_inf(|x: f64| x * G_density(s, alpha, x).unwrap().1, &q).unwrap().value;
                let want = s.derivative(alpha) / s.value(alpha);
                assert!((mean - want).abs() < 1e-8, "{s} α={alpha}: {mean} vs {want}");
            }
        }
        let (_, d) = G_density(&kd(), 1.0, 0.4).unwrap();
        assert!((d - 2.0 * (-0.8f64).exp()).abs() < 1e-15);
        let (_, d) = G_density(&SubordinatorSpec::pure_drift(1.0).unwrap(), 1.0, 0.4).unwrap();
        assert!((d - (-0.4f64).exp()).abs() < 1e-15);
        let gj = SubordinatorSpec::new(0.0, 0.0, LevyMeasure::gamma_jumps(1.0, 0.5).unwrap()).unwrap();
        assert!(matches!(G_density(&gj, 1.0, 1.0), Err(Error::NoClosedFormPotential(_))));
    }

    #[test]
    fn potential_transform_is_reciprocal() {
        let q = QuadratureConfig::default();
        for s in [
            kd(),
            cp(),
            SubordinatorSpec::new(0.4, 1.2, LevyMeasure::exponential(2.0, 1.5).unwrap()).unwrap(),
        ] {
            let v = potential_measure(&s).unwrap();
            for l in [0.5, 2.0] {
                let t = v.atom() + integrate_0_inf(|x: f64| (-l * x).exp() * v.density(x), &q).unwrap().value;
                assert!((t * s.value(l) - 1.0).abs() < 1e-10, "{s}");
            }
        }
        // Stable: V has density x^{γ-1}/Γ(γ); at γ = 1/2, Γ(γ)² = π.
        let v = potential_measure(&SubordinatorSpec::stable(0.5).unwrap()).unwrap();
        assert!((v.density(1.0) * v.density(1.0) * reflection(0.5) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn logr_routes_agree() {
        let q = QuadratureConfig::default();
        let k = kd();
        let d = super::super::hpm_density(&k).unwrap();
        let r = logR_exponent(&k, &d, 1.0, &q).unwrap();
        assert!((r.gamma - 2f64.ln()).abs() < 1e-12);
        assert!((r.integral - 2f64.ln()).abs() < 1e-8);
        assert_eq!(logR_exponent(&k, &d, 0.0, &q).unwrap().integral, 0.0);
        for s in [
            cp(),
            SubordinatorSpec::stable(0.5).unwrap(),
            SubordinatorSpec::pure_drift(1.0).unwrap(),
            SubordinatorSpec::new(1.0, 0.0, LevyMeasure::stable(0.6).unwrap()).unwrap(),
        ] {
            let d = super::super::hpm_density(&s).unwrap();
            for l in [0.5, 1.0, 3.0] {
                let r = logR_exponent(&s, &d, l, &q).unwrap();
                assert!(r.relative_gap() < 1e-6 || (r.integral - r.gamma).abs() < 1e-10, "{s} λ={l}: {r:?}");
                assert!((r.gamma.exp() - moment_R(&s, l).unwrap()).abs() < 1e-9);
            }
        }
        let pd = SubordinatorSpec::pure_drift(1.0).unwrap();
        let r = logR_exponent(&pd, &super::super::hpm_density(&pd).unwrap(), 1.0, &q).unwrap();
        assert!(r.gamma.abs() < 1e-14 && r.integral.abs() < 1e-9);
    }

    #[test]
    fn logr_levy_density_examples() {
        let d = super::super::hpm_density(&kd()).unwrap();
        assert!((logR_levy_density(&d, 1.0).unwrap() - 0.214_097_265_697_884_1).abs() < 1e-12);
        let st = super::super::hpm_density(&SubordinatorSpec::stable(0.5).unwrap()).unwrap();
        assert!((logR_levy_density(&st, 1.0).unwrap() - 0.5 / 1f64.exp_m1()).abs() < 1e-15);
        assert!((logR_levy_density(&st, 1.0).unwrap() - 0.290_988_353_434_663_2).abs() < 1e-10);
        assert_eq!(logR_levy_density(&st, 1e4).unwrap(), 0.0);
    }

    #[test]
    fn sd_diagnostic_examples() {
        let grid = log_grid(1e-2, 50.0, 200);
        let d = super::super::hpm_density(&kd()).unwrap();
        assert!(sd_diagnostic(&d, &grid).unwrap().monotone);
        let st = super::super::hpm_density(&SubordinatorSpec::stable(0.5).unwrap()).unwrap();
        assert!(sd_diagnostic(&st, &grid).unwrap().monotone);
        // ρ climbs from 0 to 3 on [0.1, 0.3]: ρ/(e^x - 1) rises on that stretch.
        let bad = HarmonicDensity::from_table(vec![0.1, 0.3, 5.0], vec![0.0, 3.0, 1.0]).unwrap();
        let r = sd_diagnostic(&bad, &lin_grid(0.1, 4.0, 40)).unwrap();
        assert!(!r.monotone);
        let (x0, x1, rise) = r.first_violation.unwrap();
        assert_eq!(x0, 0.1);
        assert!(x1 > x0 && rise > 0.0);
    }

    #[test]
    fn conjugate_pairs_sum_to_one() {
        let grid = log_grid(0.01, 100.0, 300);
        for s in [
            kd(),
            SubordinatorSpec::killed_drift(0.3, 2.0).unwrap(),
            SubordinatorSpec::stable(0.5).unwrap(),
            SubordinatorSpec::stable(0.3).unwrap(),
        ] {
            let p = conjugate(&s).unwrap();
            assert!(conjugate_check(&p, &grid).unwrap() < 1e-12, "{s}");
            assert!(conjugate_check(&p.swapped(), &grid).unwrap() < 1e-12);
        }
    }

    #[test]
    fn convolution_identity() {
        let grid = lin_grid(0.2, 8.0, 12);
        for s in [
            kd(),
            cp(),
            SubordinatorSpec::pure_drift(1.0).unwrap(),
            SubordinatorSpec::new(0.4, 0.0, LevyMeasure::exponential(2.0, 1.5).unwrap()).unwrap(),
            SubordinatorSpec::new(0.4, 1.2, LevyMeasure::exponential(2.0, 1.5).unwrap()).unwrap(),
        ] {
            assert!(convolution_identity_check(&s, &grid).unwrap() < 1e-9, "{s}");
        }
        let st = SubordinatorSpec::stable(0.5).unwrap();
        assert!(convolution_identity_check(&st, &grid).unwrap() < 1e-6);
    }
}
