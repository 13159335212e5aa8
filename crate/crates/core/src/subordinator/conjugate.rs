use super::{LevyKind, LevyMeasure, Repr, SubordinatorSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConjugateRule {
    /// `q + Kλ` ↔ compound Poisson with `Exp(q/K)` jumps at rate `1/K`.
    KilledDriftToExponentialJumps,
    /// Compound Poisson with exponential jumps ↔ killed drift.
    ExponentialJumpsToKilledDrift,
    /// `λ^γ` ↔ `λ^{1-γ}`.
    StableReflection,
}

/// A special Bernstein function together with `φ*(λ) = λ/φ(λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugatePair {
    pub primal: SubordinatorSpec,
    pub dual: SubordinatorSpec,
    pub rule: ConjugateRule,
}

impl ConjugatePair {
    /// Largest `|φ(λ)φ*(λ)/λ - 1|` over `grid`.
    pub fn product_residual(&self, grid: &[f64]) -> f64 {
        grid.iter()
            .map(|&l| (self.primal.value(l) * self.dual.value(l) / l - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn swapped(&self) -> ConjugatePair {
        let rule = match self.rule {
            ConjugateRule::KilledDriftToExponentialJumps => ConjugateRule::ExponentialJumpsToKilledDrift,
            ConjugateRule::ExponentialJumpsToKilledDrift => ConjugateRule::KilledDriftToExponentialJumps,
            ConjugateRule::StableReflection => ConjugateRule::StableReflection,
        };
        ConjugatePair {
            primal: self.dual.clone(),
            dual: self.primal.clone(),
            rule,
        }
    }
}

/// Conjugate of a spec from the special catalog.
pub fn conjugate(spec: &SubordinatorSpec) -> Result<ConjugatePair> {
    let Repr::Triplet(t) = spec.repr() else {
        return Err(Error::NotSpecialRecognized);
    };
    let (dual, rule) = match (t.kill, t.drift, t.levy.kind(), t.levy.tempering()) {
        (q, k, LevyKind::None, _) if q > 0.0 && k > 0.0 => (
            SubordinatorSpec::new(0.0, 0.0, LevyMeasure::exponential(q / k, 1.0 / k)?)?,
            ConjugateRule::KilledDriftToExponentialJumps,
        ),
        (q, a, &LevyKind::Exponential { rate, arrival }, _) if q == 0.0 && a == 0.0 => (
            SubordinatorSpec::killed_drift(rate / arrival, 1.0 / arrival)?,
            ConjugateRule::ExponentialJumpsToKilledDrift,
        ),
        (q, a, &LevyKind::Stable { gamma }, th) if q == 0.0 && a == 0.0 && th == 0.0 => (
            SubordinatorSpec::stable(1.0 - gamma)?,
            ConjugateRule::StableReflection,
        ),
        _ => return Err(Error::NotSpecialRecognized),
    };
    Ok(ConjugatePair {
        primal: spec.clone(),
        dual,
        rule,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::log_grid;

    #[test]
    fn killed_drift_dual() {
        let kd = SubordinatorSpec::killed_drift(1.0, 1.0).unwrap();
        let p = conjugate(&kd).unwrap();
        assert_eq!(p.dual.value(1.0), 0.5);
        let t = p.dual.triplet().unwrap();
        assert_eq!((t.kill, t.drift), (0.0, 0.0));
        assert_eq!(p.rule, ConjugateRule::KilledDriftToExponentialJumps);
        let back = conjugate(&p.dual).unwrap();
        assert_eq!(back.dual, kd);
    }

    #[test]
    fn stable_self_pair() {
        let st = SubordinatorSpec::stable(0.5).unwrap();
        assert_eq!(conjugate(&st).unwrap().dual, st);
    }

    #[test]
    fn rejects_outside_catalog() {
        let pd = SubordinatorSpec::pure_drift(2.0).unwrap();
        assert_eq!(conjugate(&pd), Err(Error::NotSpecialRecognized));
        let g = SubordinatorSpec::new(0.0, 0.0, LevyMeasure::gamma_jumps(1.0, 0.5).unwrap()).unwrap();
        assert_eq!(conjugate(&g), Err(Error::NotSpecialRecognized));
    }

    #[test]
    fn product_identity_on_grid() {
        let grid = log_grid(1e-3, 1e3, 200);
        let specs = [
            SubordinatorSpec::killed_drift(1.0, 1.0).unwrap(),
            SubordinatorSpec::killed_drift(0.3, 2.5).unwrap(),
            SubordinatorSpec::new(0.0, 0.0, LevyMeasure::exponential(3.0, 0.5).unwrap()).unwrap(),
            SubordinatorSpec::stable(0.5).unwrap(),
            SubordinatorSpec::stable(0.2).unwrap(),
        ];
        for s in &specs {
            let p = conjugate(s).unwrap();
            assert!(p.product_residual(&grid) < 1e-10, "{s}");
            let (pt, dt) = (p.primal.triplet().unwrap(), p.dual.triplet().unwrap());
            assert_eq!(pt.kill * dt.kill, 0.0);
            assert_eq!(pt.drift * dt.drift, 0.0);
        }
    }
}
