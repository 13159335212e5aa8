//! Infinite divisibility of `log I`: it holds exactly when `ρ ≤ 1` on `(0, ∞)` and `H`
//! has no atoms.

use super::{hpm_density, HarmonicDensity};
use crate::error::{check_positive, Error, Result};
use crate::numerics::log_grid;
use crate::subordinator::SubordinatorSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdConfig {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    /// Half-width of the band around 1 in which no verdict is given.
    pub tol: f64,
    pub refine_iterations: usize,
}

impl Default for IdConfig {
    fn default() -> Self {
        Self {
            lo: 1e-3,
            hi: 1e3,
            points: 400,
            tol: 1e-4,
            refine_iterations: 60,
        }
    }
}

impl IdConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("lo", self.lo)?;
        check_positive("hi", self.hi)?;
        check_positive("tol", self.tol)?;
        if self.hi <= self.lo || self.points < 3 {
            return Err(Error::InvalidArgument {
                name: "points",
                value: self.points as f64,
                reason: "need hi > lo and at least three grid points",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub x: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    InfinitelyDivisible,
    /// `ρ` exceeds one somewhere; the witness is absent only when a structural rule fired
    /// and the search window did not reach the violation.
    NotId { witness: Option<Witness> },
    Inconclusive { band: (f64, f64) },
    NotIdAtomic,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::InfinitelyDivisible => "InfinitelyDivisible",
            Verdict::NotId { .. } => "NotID",
            Verdict::Inconclusive { .. } => "Inconclusive",
            Verdict::NotIdAtomic => "NotID_Atomic",
        }
    }
}

/// Which rule decided the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdRule {
    /// `H` has atoms, which `dx` cannot dominate.
    Atomic,
    /// No killing and jumps bounded above.
    BoundedJumps,
    /// The closed form bounds `ρ` by at most 1 on all of `(0, ∞)`.
    CatalogBound,
    /// Supremum of `ρ` over the search window.
    SupSearch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdVerdict {
    pub verdict: Verdict,
    pub rule: IdRule,
    /// Largest `ρ` found in the window (`+∞` for atomic `H`).
    pub sup_rho: f64,
    pub argsup: f64,
    pub notes: Vec<String>,
}

/// Maximize `ρ` on a log grid, then refine by golden section in `log x` around the best point.
fn sup_search(d: &HarmonicDensity, lo: f64, hi: f64, cfg: &IdConfig) -> Result<(f64, f64)> {
    // exp(ln hi) may land one ulp past hi.
    let grid: Vec<f64> = log_grid(lo, hi, cfg.points).into_iter().map(|x| x.clamp(lo, hi)).collect();
    let mut best = (f64::NEG_INFINITY, lo);
    let mut best_i = 0;
    for (i, &x) in grid.iter().enumerate() {
        let r = d.eval(x)?;
        if r > best.0 {
            best = (r, x);
            best_i = i;
        }
    }
    let (mut a, mut b) = (
        grid[best_i.saturating_sub(1)].ln(),
        grid[(best_i + 1).min(grid.len() - 1)].ln(),
    );
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let f = |u: f64| d.eval(u.exp().clamp(lo, hi));
    let mut c = b - g * (b - a);
    let mut e = a + g * (b - a);
    let (mut fc, mut fe) = (f(c)?, f(e)?);
    for _ in 0..cfg.refine_iterations {
        if fc > fe {
            b = e;
            e = c;
            fe = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + g * (b - a);
            fe = f(e)?;
        }
        if b - a < 1e-12 {
            break;
        }
    }
    for (r, u) in [(fc, c), (fe, e)] {
        if r > best.0 {
            best = (r, u.exp().clamp(lo, hi));
        }
    }
    Ok(best)
}

/// Verdict on the infinite divisibility of `log I` for `spec`.
#[allow(non_snake_case)]
pub fn id_test_logI(spec: &SubordinatorSpec, cfg: &IdConfig) -> Result<IdVerdict> {
    let d = hpm_density(spec)?;
    id_test_with_density(spec, &d, cfg)
}

/// As [`id_test_logI`] with a precomputed density.
///
/// Rules in order: atoms of `H`; bounded jumps without killing; a closed-form bound
/// `ρ ≤ 1`; otherwise the window supremum against the band `1 ± tol`.
pub fn id_test_with_density(spec: &SubordinatorSpec, d: &HarmonicDensity, cfg: &IdConfig) -> Result<IdVerdict> {
    cfg.validate()?;
    let mut notes = Vec::new();
    if d.has_atoms() {
        let (x, m) = d.atoms().unwrap()[0];
        notes.push(format!("H has an atom of mass {m:e} at x = {x}"));
        return Ok(IdVerdict {
            verdict: Verdict::NotIdAtomic,
            rule: IdRule::Atomic,
            sup_rho: f64::INFINITY,
            argsup: x,
            notes,
        });
    }
    let hi = cfg.hi.min(d.valid_up_to());
    if hi < cfg.hi {
        notes.push(format!("search window clipped to [{}, {hi}] by the density range", cfg.lo));
    }
    let (sup, argsup) = sup_search(d, cfg.lo, hi, cfg)?;
    let witness = (sup > 1.0 + cfg.tol).then_some(Witness { x: argsup, rho: sup });

    let bounded_jumps = spec.triplet().is_some_and(|t| {
        t.kill == 0.0 && !t.levy.is_zero() && t.levy.support_bound().is_some()
    });
    if bounded_jumps {
        if witness.is_none() {
            notes.push("bounded-jump rule fired but the window holds no point with rho > 1 + tol".into());
        }
        return Ok(IdVerdict {
            verdict: Verdict::NotId { witness },
            rule: IdRule::BoundedJumps,
            sup_rho: sup,
            argsup,
            notes,
        });
    }
    if let Some(bound) = d.sup_bound().filter(|&b| b <= 1.0) {
        notes.push(format!("closed form gives rho <= {bound} on (0, inf)"));
        return Ok(IdVerdict {
            verdict: Verdict::InfinitelyDivisible,
            rule: IdRule::CatalogBound,
            sup_rho: sup,
            argsup,
            notes,
        });
    }
    let verdict = if let Some(w) = witness {
        Verdict::NotId { witness: Some(w) }
    } else if sup < 1.0 - cfg.tol {
        notes.push(format!("rho < 1 on the searched window [{}, {hi}] only", cfg.lo));
        Verdict::InfinitelyDivisible
    } else {
        Verdict::Inconclusive {
            band: (1.0 - cfg.tol, 1.0 + cfg.tol),
        }
    };
    Ok(IdVerdict {
        verdict,
        rule: IdRule::SupSearch,
        sup_rho: sup,
        argsup,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subordinator::{tilt, LevyMeasure};
    use proptest::prelude::*;

    fn run(spec: &SubordinatorSpec) -> IdVerdict {
        id_test_logI(spec, &IdConfig::default()).unwrap()
    }

    #[test]
    fn killed_drift_is_id() {
        let v = run(&SubordinatorSpec::killed_drift(1.0, 1.0).unwrap());
        assert_eq!(v.verdict, Verdict::InfinitelyDivisible);
        assert_eq!(v.rule, IdRule::CatalogBound);
        assert!(v.sup_rho <= 1.0);
    }

    #[test]
    fn single_atom_is_atomic() {
        let s = SubordinatorSpec::new(0.0, 0.0, LevyMeasure::atoms(&[(1.0, 1.0)]).unwrap()).unwrap();
        let v = run(&s);
        assert_eq!(v.verdict, Verdict::NotIdAtomic);
    }

    #[test]
    fn bounded_uniform_jumps_have_a_witness() {
        let s = SubordinatorSpec::new(0.0, 0.0, LevyMeasure::tabulated(vec![0.5, 1.0], vec![1.0, 0.0]).unwrap())
            .unwrap();
        let v = run(&s);
        assert_eq!(v.rule, IdRule::BoundedJumps);
        let Verdict::NotId { witness: Some(w) } = v.verdict else {
            panic!("{v:?}")
        };
        assert!(w.rho > 1.5 && (w.x - 1.0).abs() < 0.05, "{w:?}");
    }

    #[test]
    fn drift_with_atom_jump_has_a_witness() {
        let s = SubordinatorSpec::new(0.0, 1.0, LevyMeasure::atoms(&[(1.0, 1.0)]).unwrap()).unwrap();
        let v = run(&s);
        let Verdict::NotId { witness: Some(w) } = v.verdict else {
            panic!("{v:?}")
        };
        // Just past the atom: e^{-1} + 1.
        assert!(w.rho > 1.3, "{w:?}");
    }

    #[test]
    fn drift_with_exponential_jumps_stays_below_one() {
        // ρ = 1 - e^{-x} + e^{-2x} ≤ 1 for a = 1, Exp(1) jumps at rate 1, q = 0.
        let s = SubordinatorSpec::new(0.0, 1.0, LevyMeasure::exponential(1.0, 1.0).unwrap()).unwrap();
        let v = run(&s);
        assert_eq!(v.verdict, Verdict::InfinitelyDivisible);
        // ρ → 1 as x → ∞ since q = 0.
        assert!(v.sup_rho <= 1.0, "{v:?}");
    }

    #[test]
    fn stable_and_gamma() {
        assert_eq!(run(&SubordinatorSpec::stable(0.4).unwrap()).verdict, Verdict::InfinitelyDivisible);
        let g = SubordinatorSpec::new(0.0, 0.0, LevyMeasure::gamma_jumps(1.0, 0.5).unwrap()).unwrap();
        let v = run(&g);
        // ρ → 1 from below, so the window supremum sits inside the band.
        assert!(matches!(v.verdict, Verdict::Inconclusive { .. }), "{v:?}");
        assert!(v.sup_rho <= 1.0 + 1e-10, "{v:?}");
    }

    #[test]
    fn witnesses_exceed_the_band() {
        let s = SubordinatorSpec::new(0.0, 2.0, LevyMeasure::atoms(&[(0.7, 3.0)]).unwrap()).unwrap();
        let v = run(&s);
        if let Verdict::NotId { witness: Some(w) } = v.verdict {
            assert!(w.rho > 1.0 + IdConfig::default().tol);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn tilting_preserves_divisibility(q in 0.0f64..3.0, k in 0.2f64..3.0, g in 0.1f64..0.9, c in 0.01f64..5.0) {
            for spec in [
                SubordinatorSpec::killed_drift(q, k).unwrap(),
                SubordinatorSpec::stable(g).unwrap(),
                SubordinatorSpec::new(q, k, LevyMeasure::exponential(1.0 + c, k).unwrap()).unwrap(),
            ] {
                if run(&spec).verdict == Verdict::InfinitelyDivisible {
                    let t = tilt(&spec, c).unwrap();
                    prop_assert_eq!(run(&t).verdict, Verdict::InfinitelyDivisible);
                }
            }
        }
    }
}
