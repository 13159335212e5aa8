//! Killed subordinators described by their characteristic triplet.

mod conjugate;
mod levy;

pub use conjugate::{conjugate, ConjugatePair, ConjugateRule};
pub use levy::{Atom, LevyKind, LevyMeasure, TailTable};

use std::fmt;

use num_complex::Complex64;

use crate::error::{check_finite, check_nonnegative, check_positive, Error, Result};
use crate::numerics::{integrate_0_inf, QuadratureConfig};

/// Characteristic triplet `(q, a, Π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Triplet {
    pub kill: f64,
    pub drift: f64,
    pub levy: LevyMeasure,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Repr {
    Triplet(Triplet),
    /// Exponent `φ_base^γ`: the base subordinated by an independent γ-stable subordinator.
    TimeChanged { base: Box<SubordinatorSpec>, index: f64 },
    /// Exponent `φ_base(λ + c)`.
    Tilted { base: Box<SubordinatorSpec>, shift: f64 },
    /// Exponent `φ_base + α`.
    Killed { base: Box<SubordinatorSpec>, rate: f64 },
}

/// An immutable subordinator specification.
///
/// Triplet specs stay triplets under `tilt` and `kill`. Stable time changes have no
/// closed-form triplet in general and are kept as wrappers; every evaluation of `φ`
/// and its derivatives works on either form.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorSpec {
    repr: Repr,
    label: String,
}

impl SubordinatorSpec {
    pub fn new(kill: f64, drift: f64, levy: LevyMeasure) -> Result<Self> {
        check_nonnegative("kill", kill)?;
        check_nonnegative("drift", drift)?;
        if drift == 0.0 && levy.is_zero() {
            return Err(Error::InvalidSpec(if kill == 0.0 {
                "all of (q, a, Π) vanish".into()
            } else {
                "constant exponent (pure killing) is not admissible".into()
            }));
        }
        let t = Triplet { kill, drift, levy };
        let label = describe_triplet(&t);
        Ok(Self {
            repr: Repr::Triplet(t),
            label,
        })
    }

    /// `φ(λ) = q + Kλ`.
    pub fn killed_drift(q: f64, k: f64) -> Result<Self> {
        check_positive("drift", k)?;
        Self::new(q, k, LevyMeasure::none())
    }

    /// `φ(λ) = aλ`.
    pub fn pure_drift(a: f64) -> Result<Self> {
        Self::killed_drift(0.0, a)
    }

    /// `φ(λ) = λ^γ`.
    pub fn stable(gamma: f64) -> Result<Self> {
        Self::new(0.0, 0.0, LevyMeasure::stable(gamma)?)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn triplet(&self) -> Option<&Triplet> {
        match &self.repr {
            Repr::Triplet(t) => Some(t),
            _ => None,
        }
    }

    /// `φ(0)`.
    pub fn kill_rate(&self) -> f64 {
        match &self.repr {
            Repr::Triplet(t) => t.kill,
            Repr::TimeChanged { base, index } => base.kill_rate().powf(*index),
            Repr::Tilted { base, shift } => base.value(*shift),
            Repr::Killed { base, rate } => base.kill_rate() + rate,
        }
    }

    /// Drift `lim φ(λ)/λ`.
    pub fn drift(&self) -> f64 {
        match &self.repr {
            Repr::Triplet(t) => t.drift,
            Repr::TimeChanged { .. } => 0.0,
            Repr::Tilted { base, .. } | Repr::Killed { base, .. } => base.drift(),
        }
    }

    /// `φ(∞)` when finite.
    pub fn limit_at_infinity(&self) -> Option<f64> {
        match &self.repr {
            Repr::Triplet(t) => {
                if t.drift > 0.0 {
                    None
                } else {
                    t.levy.total_mass().map(|m| t.kill + m)
                }
            }
            Repr::TimeChanged { base, index } => base.limit_at_infinity().map(|v| v.powf(*index)),
            Repr::Tilted { base, .. } => base.limit_at_infinity(),
            Repr::Killed { base, rate } => base.limit_at_infinity().map(|v| v + rate),
        }
    }

    /// `φ(λ)` for `λ ≥ 0`, without argument checks.
    pub fn value(&self, lam: f64) -> f64 {
        if lam == 0.0 {
            return self.kill_rate();
        }
        match &self.repr {
            Repr::Triplet(t) => t.kill + t.drift * lam + t.levy.psi(lam),
            Repr::TimeChanged { base, index } => base.value(lam).powf(*index),
            Repr::Tilted { base, shift } => base.value(lam + shift),
            Repr::Killed { base, rate } => base.value(lam) + rate,
        }
    }

    /// `φ'(λ)`.
    pub fn derivative(&self, lam: f64) -> f64 {
        match &self.repr {
            Repr::Triplet(t) => t.drift + t.levy.psi_prime(lam),
            Repr::TimeChanged { base, index } => {
                index * base.value(lam).powf(index - 1.0) * base.derivative(lam)
            }
            Repr::Tilted { base, shift } => base.derivative(lam + shift),
            Repr::Killed { base, .. } => base.derivative(lam),
        }
    }

    /// `φ''(λ)`.
    pub fn second_derivative(&self, lam: f64) -> f64 {
        match &self.repr {
            Repr::Triplet(t) => t.levy.psi_second(lam),
            Repr::TimeChanged { base, index } => {
                let (f, d1, d2) = (base.value(lam), base.derivative(lam), base.second_derivative(lam));
                index * (index - 1.0) * f.powf(index - 2.0) * d1 * d1 + index * f.powf(index - 1.0) * d2
            }
            Repr::Tilted { base, shift } => base.second_derivative(lam + shift),
            Repr::Killed { base, .. } => base.second_derivative(lam),
        }
    }

    /// `φ` continued to `Re λ > 0`.
    pub fn value_c(&self, lam: Complex64) -> Complex64 {
        match &self.repr {
            Repr::Triplet(t) => lam * t.drift + t.kill + t.levy.psi_c(lam),
            Repr::TimeChanged { base, index } => base.value_c(lam).powf(*index),
            Repr::Tilted { base, shift } => base.value_c(lam + shift),
            Repr::Killed { base, rate } => base.value_c(lam) + rate,
        }
    }

    /// `φ'` continued to `Re λ > 0`.
    pub fn derivative_c(&self, lam: Complex64) -> Complex64 {
        match &self.repr {
            Repr::Triplet(t) => t.levy.psi_prime_c(lam) + t.drift,
            Repr::TimeChanged { base, index } => {
                base.value_c(lam).powf(index - 1.0) * base.derivative_c(lam) * *index
            }
            Repr::Tilted { base, shift } => base.derivative_c(lam + shift),
            Repr::Killed { base, .. } => base.derivative_c(lam),
        }
    }

    /// `φ'/φ` continued to `Re λ > 0`.
    pub fn log_derivative_c(&self, lam: Complex64) -> Complex64 {
        self.derivative_c(lam) / self.value_c(lam)
    }

    /// `φ'(0+)`, the mean `E ξ_1` of the unkilled process, when finite.
    pub fn mean_rate(&self) -> Option<f64> {
        let v = self.derivative(0.0);
        v.is_finite().then_some(v)
    }
}

impl fmt::Display for SubordinatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn describe_triplet(t: &Triplet) -> String {
    let levy = match t.levy.kind() {
        LevyKind::None => "none".to_string(),
        LevyKind::Exponential { rate, arrival } => format!("exponential(rate={rate}, arrival={arrival})"),
        LevyKind::GammaJumps { c, beta } => format!("gamma_jumps(c={c}, beta={beta})"),
        LevyKind::Stable { gamma } => format!("stable(gamma={gamma})"),
        LevyKind::Atoms(a) => format!("atoms({})", a.len()),
        LevyKind::Tabulated(t) => format!("tabulated({} knots)", t.knots().len()),
    };
    let th = t.levy.tempering();
    if th > 0.0 {
        format!("q={} a={} levy={levy} tempering={th}", t.kill, t.drift)
    } else {
        format!("q={} a={} levy={levy}", t.kill, t.drift)
    }
}

/// `φ(λ)`; `φ(0) = q` exactly.
pub fn phi(spec: &SubordinatorSpec, lam: f64) -> Result<f64> {
    check_nonnegative("lambda", lam)?;
    Ok(spec.value(lam))
}

/// `φ'(λ) = a + ∫ x e^{-λx} Π(dx)`.
pub fn phi_prime(spec: &SubordinatorSpec, lam: f64) -> Result<f64> {
    check_nonnegative("lambda", lam)?;
    let v = spec.derivative(lam);
    if !v.is_finite() {
        return Err(Error::InvalidArgument {
            name: "lambda",
            value: lam,
            reason: "φ'(0+) is infinite for this spec",
        });
    }
    Ok(v)
}

/// `φ'(λ)/φ(λ)`, the Laplace transform of `x H(dx)`.
pub fn log_derivative(spec: &SubordinatorSpec, lam: f64) -> Result<f64> {
    check_positive("lambda", lam)?;
    let f = spec.value(lam);
    if f <= 0.0 {
        return Err(Error::InvalidArgument {
            name: "lambda",
            value: lam,
            reason: "φ vanishes here",
        });
    }
    Ok(spec.derivative(lam) / f)
}

/// `φ(λ)/λ` by direct division.
pub fn phi_over_lambda(spec: &SubordinatorSpec, lam: f64) -> Result<f64> {
    check_positive("lambda", lam)?;
    Ok(spec.value(lam) / lam)
}

/// `φ(λ)/λ = a + ∫ e^{-λx} Π̄(x) dx` through the tail integral (triplet specs only).
pub fn phi_over_lambda_tail(spec: &SubordinatorSpec, lam: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_positive("lambda", lam)?;
    let t = spec
        .triplet()
        .ok_or_else(|| Error::Unsupported("tail integral needs an explicit triplet".into()))?;
    let levy = &t.levy;
    let mut cfg = *cfg;
    cfg.tail_scale = (1.0 / lam).min(1.0);
    let q = match levy.support_bound() {
        Some(b) if b > 0.0 => crate::numerics::integrate(|x: f64| (-lam * x).exp() * levy.tail(x), 0.0, b, &cfg)?,
        Some(_) => crate::numerics::Quadrature {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        },
        None => integrate_0_inf(|x: f64| (-lam * x).exp() * levy.tail(x), &cfg)?,
    };
    Ok(t.drift + t.kill / lam + q.value)
}

/// Exponent `φ(· + c)`: triplet `(φ(c), a, e^{-cx}Π(dx))`.
pub fn tilt(spec: &SubordinatorSpec, c: f64) -> Result<SubordinatorSpec> {
    check_positive("c", c)?;
    let repr = match &spec.repr {
        Repr::Triplet(t) => Repr::Triplet(Triplet {
            kill: spec.value(c),
            drift: t.drift,
            levy: t.levy.tempered_by(c)?,
        }),
        Repr::Tilted { base, shift } => Repr::Tilted {
            base: base.clone(),
            shift: shift + c,
        },
        _ => Repr::Tilted {
            base: Box::new(spec.clone()),
            shift: c,
        },
    };
    Ok(SubordinatorSpec {
        repr,
        label: format!("tilt({}, {c})", spec.label),
    })
}

/// Exponent `φ + α`: triplet `(q + α, a, Π)`.
pub fn kill(spec: &SubordinatorSpec, alpha: f64) -> Result<SubordinatorSpec> {
    check_positive("alpha", alpha)?;
    let repr = match &spec.repr {
        Repr::Triplet(t) => Repr::Triplet(Triplet {
            kill: t.kill + alpha,
            ..t.clone()
        }),
        Repr::Killed { base, rate } => Repr::Killed {
            base: base.clone(),
            rate: rate + alpha,
        },
        _ => Repr::Killed {
            base: Box::new(spec.clone()),
            rate: alpha,
        },
    };
    let label = match &repr {
        Repr::Triplet(t) if spec.label == describe_triplet(spec.triplet().unwrap()) => describe_triplet(t),
        _ => format!("kill({}, {alpha})", spec.label),
    };
    Ok(SubordinatorSpec { repr, label })
}

/// Exponent `φ^γ`, `0 < γ < 1`.
pub fn stable_timechange(spec: &SubordinatorSpec, gamma: f64) -> Result<SubordinatorSpec> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument {
            name: "gamma",
            value: gamma,
            reason: "must lie in (0, 1)",
        });
    }
    let repr = match &spec.repr {
        Repr::TimeChanged { base, index } => Repr::TimeChanged {
            base: base.clone(),
            index: index * gamma,
        },
        _ => Repr::TimeChanged {
            base: Box::new(spec.clone()),
            index: gamma,
        },
    };
    Ok(SubordinatorSpec {
        repr,
        label: format!("timechange({}, {gamma})", spec.label),
    })
}

/// Numeric checks of the Webster conditions on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WebsterDiagnostics {
    /// Largest second divided difference of `log φ` (should be ≤ 0).
    pub max_log_second_difference: f64,
    /// Largest second divided difference of `φ` (concavity, should be ≤ 0).
    pub max_second_difference: f64,
    /// `φ(s+1)/φ(s) - 1` at `s = 1e6` (should be small).
    pub limit_ratio_excess: f64,
}

impl WebsterDiagnostics {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_log_second_difference <= tol && self.max_second_difference <= tol && self.limit_ratio_excess < 1e-3
    }
}

pub fn webster_diagnostics(spec: &SubordinatorSpec, grid: &[f64]) -> Result<WebsterDiagnostics> {
    for &x in grid {
        check_positive("grid point", x)?;
    }
    let second = |f: &dyn Fn(f64) -> f64, w: &[f64]| {
        let (x0, x1, x2) = (w[0], w[1], w[2]);
        let d1 = (f(x1) - f(x0)) / (x1 - x0);
        let d2 = (f(x2) - f(x1)) / (x2 - x1);
        (d2 - d1) / (x2 - x0)
    };
    let phi = |x: f64| spec.value(x);
    let lphi = |x: f64| spec.value(x).ln();
    let mut max_log = f64::NEG_INFINITY;
    let mut max_plain = f64::NEG_INFINITY;
    for w in grid.windows(3) {
        // Scale by the local value so the tolerance is relative.
        let scale = phi(w[1]).abs().max(1e-300);
        max_plain = max_plain.max(second(&phi, w) * (w[2] - w[0]).powi(2) / scale);
        max_log = max_log.max(second(&lphi, w) * (w[2] - w[0]).powi(2));
    }
    let s = 1e6;
    check_finite("phi", spec.value(s))?;
    Ok(WebsterDiagnostics {
        max_log_second_difference: max_log,
        max_second_difference: max_plain,
        limit_ratio_excess: spec.value(s + 1.0) / spec.value(s) - 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::log_grid;
    use proptest::prelude::*;

    pub(crate) fn catalog() -> Vec<SubordinatorSpec> {
        vec![
            SubordinatorSpec::killed_drift(1.0, 1.0).unwrap(),
            SubordinatorSpec::killed_drift(0.5, 2.0).unwrap(),
            SubordinatorSpec::pure_drift(1.0).unwrap(),
            SubordinatorSpec::stable(0.5).unwrap(),
            SubordinatorSpec::stable(0.3).unwrap(),
            SubordinatorSpec::new(0.0, 0.0, LevyMeasure::exponential(1.0, 1.0).unwrap()).unwrap(),
            SubordinatorSpec::new(0.0, 1.0, LevyMeasure::exponential(2.0, 1.5).unwrap()).unwrap(),
            SubordinatorSpec::new(0.2, 0.0, LevyMeasure::gamma_jumps(1.0, 0.5).unwrap()).unwrap(),
            SubordinatorSpec::new(0.0, 1.0, LevyMeasure::gamma_jumps(1.0, 1.0).unwrap()).unwrap(),
            SubordinatorSpec::new(1.0, 0.0, LevyMeasure::stable(0.6).unwrap()).unwrap(),
            SubordinatorSpec::new(0.0, 0.0, LevyMeasure::atoms(&[(1.0, 1.0)]).unwrap()).unwrap(),
            SubordinatorSpec::new(0.3, 0.5, LevyMeasure::tabulated(vec![0.5, 1.0, 2.0], vec![1.0, 0.6, 0.0]).unwrap())
                .unwrap(),
            stable_timechange(&SubordinatorSpec::killed_drift(1.0, 1.0).unwrap(), 0.5).unwrap(),
        ]
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn phi_examples() {
        let kd = SubordinatorSpec::killed_drift(1.0, 1.0).unwrap();
        assert_eq!(phi(&kd, 2.0).unwrap(), 3.0);
        assert_eq!(phi_prime(&kd, 5.0).unwrap(), 1.0);
        assert_eq!(log_derivative(&kd, 1.0).unwrap(), 0.5);
        assert_eq!(phi_over_lambda(&kd, 1.0).unwrap(), 2.0);
        let st = SubordinatorSpec::stable(0.5).unwrap();
        assert!((phi(&st, 4.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((phi_prime(&st, 4.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(phi_prime(&st, 0.0).is_err());
        let h = 1e-5;
        let fd = (st.value(4.0 + h) - st.value(4.0 - h)) / (2.0 * h);
        assert!((fd - 0.25).abs() < 1e-9);
        assert!((log_derivative(&st, 3.0).unwrap() - 0.5 / 3.0).abs() < 1e-15);
        let cp = SubordinatorSpec::new(0.0, 0.0, LevyMeasure::exponential(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(phi_prime(&cp, 1.0).unwrap(), 0.25);
        assert_eq!(phi_over_lambda(&cp, 1.0).unwrap(), 0.5);
        let pd = SubordinatorSpec::pure_drift(1.0).unwrap();
        for &l in &[0.1, 1.0, 10.0] {
            assert!((log_derivative(&pd, l).unwrap() - 1.0 / l).abs() < 1e-15);
        }
    }

    #[test]
    fn phi_at_zero_is_kill_rate() {
        for s in catalog() {
            assert_eq!(phi(&s, 0.0).unwrap(), s.kill_rate());
        }
        assert!(phi(&catalog()[0], -1.0).is_err());
        assert!(phi(&catalog()[0], f64::NAN).is_err());
    }

    #[test]
    fn rejects_degenerate_specs() {
        assert!(SubordinatorSpec::new(0.0, 0.0, LevyMeasure::none()).is_err());
        assert!(SubordinatorSpec::new(2.0, 0.0, LevyMeasure::none()).is_err());
        assert!(SubordinatorSpec::new(-1.0, 1.0, LevyMeasure::none()).is_err());
    }

    #[test]
    fn two_routes_for_phi_over_lambda() {
        let cfg = QuadratureConfig::default();
        for s in catalog().iter().filter(|s| s.triplet().is_some()) {
            for &l in &[0.3, 1.0, 4.0] {
                let direct = phi_over_lambda(s, l).unwrap();
                let tail = phi_over_lambda_tail(s, l, &cfg).unwrap();
                let tol = if matches!(s.triplet().unwrap().levy.kind(), LevyKind::Tabulated(_)) {
                    1e-9
                } else {
                    1e-10
                };
                assert!(close(direct, tail, tol), "{s} λ={l}: {direct} vs {tail}");
            }
        }
        let cp = SubordinatorSpec::new(0.0, 0.0, LevyMeasure::exponential(1.0, 1.0).unwrap()).unwrap();
        assert!((phi_over_lambda_tail(&cp, 1.0, &cfg).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tilt_examples() {
        let kd = SubordinatorSpec::killed_drift(1.0, 1.0).unwrap();
        let t = tilt(&kd, 2.0).unwrap();
        let tr = t.triplet().unwrap();
        assert_eq!((tr.kill, tr.drift), (3.0, 1.0));
        assert!(tr.levy.is_zero());
        let st = tilt(&SubordinatorSpec::stable(0.5).unwrap(), 1.0).unwrap();
        assert!((st.value(3.0) - 2.0).abs() < 1e-14);
        for s in catalog() {
            let t = tilt(&s, 0.7).unwrap();
            assert!(close(t.value(0.0), s.value(0.7), 1e-14));
        }
    }

    #[test]
    fn kill_examples() {
        let pd = SubordinatorSpec::pure_drift(1.0).unwrap();
        let k = kill(&pd, 1.0).unwrap();
        assert_eq!(k, SubordinatorSpec::killed_drift(1.0, 1.0).unwrap());
        let st = kill(&SubordinatorSpec::stable(0.5).unwrap(), 1.0).unwrap();
        assert_eq!(st.value(1.0), 2.0);
    }

    #[test]
    fn timechange_examples() {
        let pd = SubordinatorSpec::pure_drift(1.0).unwrap();
        let t = stable_timechange(&pd, 0.5).unwrap();
        for &l in &[0.5, 2.0, 9.0] {
            assert!(close(t.value(l), l.sqrt(), 1e-15));
        }
        let kd = SubordinatorSpec::killed_drift(1.0, 1.0).unwrap();
        assert_eq!(stable_timechange(&kd, 0.5).unwrap().value(3.0), 2.0);
        assert!(stable_timechange(&kd, 1.0).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for s in catalog() {
            for &l in &[0.5, 2.0, 7.0] {
                let h = 1e-4 * (1.0 + l);
                let fd1 = (s.value(l + h) - s.value(l - h)) / (2.0 * h);
                assert!(close(s.derivative(l), fd1, 1e-6), "{s} λ={l}");
                let fd2 = (s.derivative(l + h) - s.derivative(l - h)) / (2.0 * h);
                assert!((s.second_derivative(l) - fd2).abs() < 1e-5 * (1.0 + fd2.abs()), "{s} λ={l}");
                let z = Complex64::new(l, 0.0);
                assert!(close(s.value_c(z).re, s.value(l), 1e-12));
                assert!(close(s.derivative_c(z).re, s.derivative(l), 1e-6));
            }
        }
    }

    #[test]
    fn webster_conditions_hold_for_catalog() {
        let grid = log_grid(1e-2, 1e2, 60);
        for s in catalog() {
            let d = webster_diagnostics(&s, &grid).unwrap();
            assert!(d.passes(1e-8), "{s}: {d:?}");
        }
    }

    proptest! {
        #[test]
        fn phi_is_nondecreasing_and_concave(idx in 0usize..13, l1 in 0.01f64..50.0, dl in 0.01f64..10.0) {
            let s = &catalog()[idx];
            let (l2, l3) = (l1 + dl, l1 + 2.0 * dl);
            let (f1, f2, f3) = (s.value(l1), s.value(l2), s.value(l3));
            prop_assert!(f2 >= f1 - 1e-12 * f2.abs());
            prop_assert!((f3 - f2) <= (f2 - f1) + 1e-9 * f3.abs());
        }

        #[test]
        fn transforms_commute_with_evaluation(idx in 0usize..13, c in 0.05f64..5.0, l in 0.0f64..30.0) {
            let s = &catalog()[idx];
            let t = tilt(s, c).unwrap();
            prop_assert!(close(t.value(l), s.value(l + c), 1e-10));
            let k = kill(s, c).unwrap();
            prop_assert!(close(k.value(l), s.value(l) + c, 1e-12));
            let kk = kill(&kill(s, c).unwrap(), 0.5).unwrap();
            prop_assert!(close(kk.value(l), kill(s, c + 0.5).unwrap().value(l), 1e-12));
            if l > 0.0 {
                let g = stable_timechange(s, 0.4).unwrap();
                prop_assert!(close(g.value(l), s.value(l).powf(0.4), 1e-12));
            }
        }
    }
}
