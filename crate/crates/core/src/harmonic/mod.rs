//! Harmonic potential measures `H(dx) = ∫ dt/t P(ξ_t ∈ dx)` through their density `ρ`
//! with respect to `dx/x`.
//!
//! `ρ` is the inverse Laplace transform of `φ'/φ`. Specs in the catalog get a closed
//! form; arithmetic and tabulated jump laws get renewal series; everything else is
//! inverted numerically and checked against the forward transform.

mod catalog;
mod idtest;
mod laws;
mod series;

use std::fmt;
use std::sync::Arc;

pub use catalog::CatalogRule;
pub use idtest::{id_test_logI, id_test_with_density, IdConfig, IdRule, IdVerdict, Verdict, Witness};
pub use laws::{
    conjugate_check, convolution_identity_check, logR_exponent, logR_levy_density, potential_measure, sd_diagnostic,
    undershoot_density, undershoot_laplace_G, undershoot_laplace_U, G_density, LogRExponent, PotentialMeasure,
    SdReport,
};

use crate::error::{check_positive, Error, Result};
use crate::numerics::{integrate, integrate_0_inf, laplace_invert, InversionConfig, QuadratureConfig};
use crate::subordinator::{Repr, SubordinatorSpec};

pub(crate) type RhoFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// Where a density came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Catalog(CatalogRule),
    NumericInversion,
    /// Renewal series for arithmetic jumps (`H` atomic when there is no drift).
    AtomSeries,
    /// Renewal series on a grid for tabulated jumps.
    GridSeries,
    /// User-supplied table.
    Table,
    /// `ρ(x) = ∫ e^{-xt} η(t) dt` from a tabulated `η`.
    CompleteBernstein,
    Tilted { inner: Box<Provenance>, shift: f64 },
    TimeChanged { inner: Box<Provenance>, index: f64 },
}

impl Provenance {
    /// Whether the density is exact up to floating point (closed forms and their wrappers).
    pub fn is_closed_form(&self) -> bool {
        match self {
            Provenance::Catalog(_) => true,
            Provenance::Tilted { inner, .. } | Provenance::TimeChanged { inner, .. } => inner.is_closed_form(),
            _ => false,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Catalog(r) => write!(f, "catalog:{r}"),
            Provenance::NumericInversion => f.write_str("numeric_inversion"),
            Provenance::AtomSeries => f.write_str("atom_series"),
            Provenance::GridSeries => f.write_str("grid_series"),
            Provenance::Table => f.write_str("table"),
            Provenance::CompleteBernstein => f.write_str("complete_bernstein"),
            Provenance::Tilted { inner, shift } => write!(f, "tilted({inner};{shift})"),
            Provenance::TimeChanged { inner, index } => write!(f, "time_changed({inner};{index})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HpmConfig {
    pub inversion: InversionConfig,
    pub quadrature: QuadratureConfig,
    /// Largest `x` the series constructions must cover.
    pub horizon: f64,
    /// Cap on the number of convolution powers in the series constructions.
    pub max_terms: usize,
    /// Cap on the number of distinct partial-sum locations kept for atomic jumps.
    pub max_support: usize,
    /// Tolerance of the forward check run on numerically inverted densities.
    pub check_tol: f64,
}

impl Default for HpmConfig {
    fn default() -> Self {
        Self {
            inversion: InversionConfig::default(),
            quadrature: QuadratureConfig::default(),
            horizon: 1e3,
            max_terms: 200,
            max_support: 100_000,
            check_tol: 1e-6,
        }
    }
}

/// Density `ρ` of `H` with respect to `dx/x`, plus any atoms of `H`.
#[derive(Clone)]
pub struct HarmonicDensity {
    eval: RhoFn,
    provenance: Provenance,
    atoms: Option<Vec<(f64, f64)>>,
    sup_bound: Option<f64>,
    valid_up_to: f64,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for HarmonicDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HarmonicDensity")
            .field("provenance", &self.provenance)
            .field("atoms", &self.atoms.as_ref().map(Vec::len))
            .field("sup_bound", &self.sup_bound)
            .field("valid_up_to", &self.valid_up_to)
            .finish()
    }
}

impl HarmonicDensity {
    pub(crate) fn new(eval: RhoFn, provenance: Provenance) -> Self {
        Self {
            eval,
            provenance,
            atoms: None,
            sup_bound: None,
            valid_up_to: f64::INFINITY,
            breakpoints: Vec::new(),
        }
    }

    pub(crate) fn with_bound(mut self, bound: Option<f64>) -> Self {
        self.sup_bound = bound;
        self
    }

    pub(crate) fn with_atoms(mut self, atoms: Vec<(f64, f64)>) -> Self {
        self.atoms = Some(atoms);
        self
    }

    pub(crate) fn with_validity(mut self, valid_up_to: f64, breakpoints: Vec<f64>) -> Self {
        self.valid_up_to = valid_up_to;
        self.breakpoints = breakpoints;
        self
    }

    /// `ρ(x)` for `0 < x ≤ valid_up_to`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        check_positive("x", x)?;
        if x > self.valid_up_to {
            return Err(Error::Unsupported(format!(
                "density only computed up to x = {}",
                self.valid_up_to
            )));
        }
        (self.eval)(x)
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Atoms `(location, H-mass)` when `H` is not absolutely continuous.
    pub fn atoms(&self) -> Option<&[(f64, f64)]> {
        self.atoms.as_deref()
    }

    pub fn has_atoms(&self) -> bool {
        self.atoms.as_ref().is_some_and(|a| !a.is_empty())
    }

    /// A proven upper bound on `ρ` over all of `(0, ∞)`, when the form gives one.
    pub fn sup_bound(&self) -> Option<f64> {
        self.sup_bound
    }

    pub fn valid_up_to(&self) -> f64 {
        self.valid_up_to
    }

    /// `∫ k dH = Σ k(x_i) m_i + ∫ k(x) ρ(x) dx/x`, with its error estimate.
    ///
    /// `ρ` is skipped wherever `k` vanishes, so kernels with fast decay never query it
    /// far out. Densities with a finite range are integrated over that range only.
    pub fn integrate_against<K>(&self, k: K, cfg: &QuadratureConfig) -> Result<(f64, f64)>
    where
        K: Fn(f64) -> f64,
    {
        let mut value = 0.0;
        if let Some(atoms) = &self.atoms {
            value += atoms.iter().map(|&(x, m)| m * k(x)).sum::<f64>();
        }
        // A failure inside the integrand is kept aside and reported afterwards.
        let failure = std::cell::RefCell::new(None);
        let f = |x: f64| {
            if x <= 0.0 {
                return 0.0;
            }
            let kx = k(x);
            if kx == 0.0 || !kx.is_finite() {
                return if kx.is_finite() { 0.0 } else { kx };
            }
            match (self.eval)(x) {
                Ok(r) => kx * r / x,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        };
        let result = if self.valid_up_to.is_finite() {
            let mut cuts: Vec<f64> = self
                .breakpoints
                .iter()
                .copied()
                .filter(|&b| b > 0.0 && b < self.valid_up_to)
                .collect();
            cuts.insert(0, 0.0);
            cuts.push(self.valid_up_to);
            let mut v = 0.0;
            let mut e = 0.0;
            for w in cuts.windows(2) {
                let q = integrate(f, w[0], w[1], cfg);
                if let Some(err) = failure.borrow_mut().take() {
                    return Err(err);
                }
                let q = q?;
                v += q.value;
                e += q.error;
            }
            (v, e)
        } else {
            let q = integrate_0_inf(f, cfg);
            if let Some(err) = failure.borrow_mut().take() {
                return Err(err);
            }
            let q = q?;
            (q.value, q.error)
        };
        Ok((value + result.0, result.1))
    }

    /// `∫ e^{-λx} x H(dx)`, which should equal `φ'(λ)/φ(λ)`.
    pub fn laplace_of_kappa(&self, lam: f64, cfg: &QuadratureConfig) -> Result<f64> {
        check_positive("lambda", lam)?;
        self.integrate_against(|x| x * (-lam * x).exp(), cfg).map(|r| r.0)
    }

    /// `∫ (e^{-x} - e^{-λx}) H(dx)`, which should equal `log(φ(λ)/φ(1))`.
    pub fn log_phi_ratio(&self, lam: f64, cfg: &QuadratureConfig) -> Result<f64> {
        check_positive("lambda", lam)?;
        // e^{-x} - e^{-λx} = e^{-x}(1 - e^{-(λ-1)x}) without cancellation near 0.
        self.integrate_against(|x| -(-x).exp() * (-(lam - 1.0) * x).exp_m1(), cfg)
            .map(|r| r.0)
    }

    /// Largest gap between `∫ (e^{-x} - e^{-λx}) H(dx)` and `log(φ(λ)/φ(1))` over `lams`.
    pub fn laplace_consistency(&self, spec: &SubordinatorSpec, lams: &[f64], cfg: &QuadratureConfig) -> Result<f64> {
        let mut worst = 0.0f64;
        for &l in lams {
            let lhs = self.log_phi_ratio(l, cfg)?;
            let rhs = (spec.value(l) / spec.value(1.0)).ln();
            worst = worst.max((lhs - rhs).abs());
        }
        Ok(worst)
    }

    /// Largest gap between `∫ e^{-λx} ρ(x) dx` and `φ'(λ)/φ(λ)` over `lams`.
    pub fn moment_check(&self, spec: &SubordinatorSpec, lams: &[f64], cfg: &QuadratureConfig) -> Result<f64> {
        let mut worst = 0.0f64;
        for &l in lams {
            let lhs = self.laplace_of_kappa(l, cfg)?;
            let rhs = spec.derivative(l) / spec.value(l);
            worst = worst.max((lhs - rhs).abs());
        }
        Ok(worst)
    }

    /// `ρ(x) = e^{-cx} ρ_inner(x)`: the density of the spec tilted by `c`.
    pub fn tilted(&self, c: f64) -> HarmonicDensity {
        let inner = self.eval.clone();
        let atoms = self
            .atoms
            .as_ref()
            .map(|a| a.iter().map(|&(x, m)| (x, m * (-c * x).exp())).collect());
        HarmonicDensity {
            eval: Arc::new(move |x| Ok((-c * x).exp() * inner(x)?)),
            provenance: Provenance::Tilted {
                inner: Box::new(self.provenance.clone()),
                shift: c,
            },
            atoms,
            sup_bound: self.sup_bound,
            valid_up_to: self.valid_up_to,
            breakpoints: self.breakpoints.clone(),
        }
    }

    /// `ρ_γ = γ ρ`: the density of `φ^γ`.
    pub fn time_changed(&self, index: f64) -> HarmonicDensity {
        let inner = self.eval.clone();
        let atoms = self
            .atoms
            .as_ref()
            .map(|a| a.iter().map(|&(x, m)| (x, index * m)).collect());
        HarmonicDensity {
            eval: Arc::new(move |x| Ok(index * inner(x)?)),
            provenance: Provenance::TimeChanged {
                inner: Box::new(self.provenance.clone()),
                index,
            },
            atoms,
            sup_bound: self.sup_bound.map(|b| index * b),
            valid_up_to: self.valid_up_to,
            breakpoints: self.breakpoints.clone(),
        }
    }

    /// Piecewise-linear `ρ` through `(knots[i], values[i])`, constant below the first knot.
    pub fn from_table(knots: Vec<f64>, values: Vec<f64>) -> Result<HarmonicDensity> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::InvalidSpec("table needs at least two knots and one value per knot".into()));
        }
        if knots[0] <= 0.0 || knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpec("table knots must be positive and increasing".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidSpec("table values must be finite and nonnegative".into()));
        }
        let last = *knots.last().unwrap();
        let bp = knots.clone();
        let eval: RhoFn = Arc::new(move |x| Ok(interpolate(&knots, &values, x)));
        Ok(HarmonicDensity::new(eval, Provenance::Table).with_validity(last, bp))
    }

    /// `ρ(x) = ∫ e^{-xt} η(t) dt` with `η` piecewise linear on `grid` and zero outside it.
    pub fn from_cbf_eta(grid: Vec<f64>, eta: Vec<f64>) -> Result<HarmonicDensity> {
        if grid.len() < 2 || grid.len() != eta.len() {
            return Err(Error::InvalidSpec("eta needs at least two grid points and one value per point".into()));
        }
        if grid[0] < 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpec("eta grid must be nonnegative and increasing".into()));
        }
        if eta.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidSpec("eta must be finite and nonnegative".into()));
        }
        let cfg = QuadratureConfig {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            ..QuadratureConfig::default()
        };
        let eval: RhoFn = Arc::new(move |x| {
            let mut acc = 0.0;
            for (t, e) in grid.windows(2).zip(eta.windows(2)) {
                let (a, b, ea, eb) = (t[0], t[1], e[0], e[1]);
                acc += integrate(|s: f64| (-x * s).exp() * (ea + (eb - ea) * (s - a) / (b - a)), a, b, &cfg)?.value;
            }
            Ok(acc)
        });
        Ok(HarmonicDensity::new(eval, Provenance::CompleteBernstein))
    }
}

pub(crate) fn interpolate(knots: &[f64], values: &[f64], x: f64) -> f64 {
    if x <= knots[0] {
        return values[0];
    }
    let i = knots.partition_point(|&k| k < x);
    if i >= knots.len() {
        return *values.last().unwrap();
    }
    let (x0, x1) = (knots[i - 1], knots[i]);
    values[i - 1] + (values[i] - values[i - 1]) * (x - x0) / (x1 - x0)
}

/// `ρ` for `spec` with default settings.
pub fn hpm_density(spec: &SubordinatorSpec) -> Result<HarmonicDensity> {
    hpm_density_with(spec, &HpmConfig::default())
}

/// `ρ` for `spec`: catalog closed form, renewal series, or checked numeric inversion.
pub fn hpm_density_with(spec: &SubordinatorSpec, cfg: &HpmConfig) -> Result<HarmonicDensity> {
    match spec.repr() {
        Repr::Triplet(t) => {
            if let Some(d) = catalog::recognize(t)? {
                return Ok(d);
            }
            if let Some(d) = series::for_triplet(t, cfg)? {
                return Ok(d);
            }
            hpm_numeric(spec, cfg)
        }
        Repr::TimeChanged { base, index } => Ok(hpm_density_with(base, cfg)?.time_changed(*index)),
        Repr::Tilted { base, shift } => Ok(hpm_density_with(base, cfg)?.tilted(*shift)),
        Repr::Killed { .. } => hpm_numeric(spec, cfg),
    }
}

/// `ρ` by Talbot inversion of `φ'/φ` regardless of the catalog.
///
/// Construction runs a forward check at `λ ∈ {1, 2, 5}` and fails with
/// `InversionUnstable` when `∫ e^{-λx} ρ(x) dx` misses `φ'/φ` by more than `cfg.check_tol`.
pub fn hpm_numeric(spec: &SubordinatorSpec, cfg: &HpmConfig) -> Result<HarmonicDensity> {
    cfg.inversion.validate()?;
    let s = spec.clone();
    let icfg = cfg.inversion;
    let eval: RhoFn = Arc::new(move |x| {
        laplace_invert(|l| s.log_derivative_c(l), x, &icfg)
            .map_err(|e| Error::InversionUnstable(format!("at x = {x}: {e}")))
    });
    let d = HarmonicDensity::new(eval, Provenance::NumericInversion);
    for lam in [1.0, 2.0, 5.0] {
        let got = d.laplace_of_kappa(lam, &cfg.quadrature).map_err(|e| match e {
            Error::InversionUnstable(_) => e,
            other => Error::InversionUnstable(format!("forward check at lambda = {lam}: {other}")),
        })?;
        let want = spec.derivative(lam) / spec.value(lam);
        let gap = (got - want).abs() / want.abs().max(1.0);
        if !(gap <= cfg.check_tol) {
            return Err(Error::InversionUnstable(format!(
                "forward check at lambda = {lam} misses phi'/phi by {gap:e}"
            )));
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gaver_stehfest, lin_grid, log_grid};
    use crate::subordinator::{kill, stable_timechange, tilt, LevyMeasure};

    fn kd() -> SubordinatorSpec {
        SubordinatorSpec::killed_drift(1.0, 1.0).unwrap()
    }

    fn cp_exp(rate: f64, arrival: f64) -> SubordinatorSpec {
        SubordinatorSpec::new(0.0, 0.0, LevyMeasure::exponential(rate, arrival).unwrap()).unwrap()
    }

    #[test]
    fn catalog_examples() {
        let r = hpm_density(&kd()).unwrap();
        assert!((r.eval(1.0).unwrap() - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert_eq!(r.provenance(), &Provenance::Catalog(CatalogRule::KilledDrift));
        let dual = hpm_density(&cp_exp(1.0, 1.0)).unwrap();
        assert!((dual.eval(1.0).unwrap() - 0.632_120_558_828_557_7).abs() < 1e-15);
        let st = hpm_density(&SubordinatorSpec::stable(0.3).unwrap()).unwrap();
        assert_eq!(st.eval(7.0).unwrap(), 0.3);
    }

    #[test]
    fn killed_stable_reduces_to_exponential() {
        // q + λ^γ at γ → 1 is not admissible as a stable kind, so compare γ E_γ(-q x^γ)
        // against numeric inversion instead and check the closed form at a known point.
        let spec = SubordinatorSpec::new(1.0, 0.0, LevyMeasure::stable(0.5).unwrap()).unwrap();
        let r = hpm_density(&spec).unwrap();
        assert_eq!(r.provenance(), &Provenance::Catalog(CatalogRule::KilledStable));
        // E_{1/2}(-1) = e·erfc(1).
        assert!((r.eval(1.0).unwrap() - 0.5 * 0.427_583_576_155_807_0).abs() < 1e-12);
        let n = hpm_numeric(&spec, &HpmConfig::default()).unwrap();
        for x in [0.1, 0.5, 2.0, 8.0] {
            assert!((r.eval(x).unwrap() - n.eval(x).unwrap()).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn numeric_inversion_matches_catalog() {
        let specs = [
            kd(),
            cp_exp(1.0, 1.0),
            SubordinatorSpec::stable(0.5).unwrap(),
            SubordinatorSpec::new(0.5, 1.0, LevyMeasure::exponential(2.0, 1.5).unwrap()).unwrap(),
            SubordinatorSpec::new(0.3, 0.0, LevyMeasure::exponential(2.0, 1.5).unwrap()).unwrap(),
            SubordinatorSpec::new(0.0, 0.0, LevyMeasure::gamma_jumps(1.0, 0.5).unwrap()).unwrap(),
            SubordinatorSpec::new(0.0, 0.0, LevyMeasure::gamma_jumps(2.0, 1.7).unwrap()).unwrap(),
            SubordinatorSpec::new(0.0, 2.0, LevyMeasure::gamma_jumps(2.0, 0.5).unwrap()).unwrap(),
        ];
        let cfg = HpmConfig::default();
        for s in &specs {
            let c = hpm_density(s).unwrap();
            assert!(c.provenance().is_closed_form(), "{s}: {:?}", c.provenance());
            let n = hpm_numeric(s, &cfg).unwrap();
            for x in lin_grid(0.1, 10.0, 34) {
                let (a, b) = (c.eval(x).unwrap(), n.eval(x).unwrap());
                assert!((a - b).abs() < 1e-8, "{s} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn gaver_stehfest_cross_check() {
        let s = SubordinatorSpec::new(0.5, 1.0, LevyMeasure::exponential(2.0, 1.5).unwrap()).unwrap();
        let c = hpm_density(&s).unwrap();
        for x in [0.5, 1.0, 3.0] {
            let gs = gaver_stehfest(|l| s.derivative(l) / s.value(l), x, 16);
            assert!((gs - c.eval(x).unwrap()).abs() < 1e-4);
        }
    }

    #[test]
    fn laplace_consistency_for_catalog_and_series() {
        let q = QuadratureConfig::default();
        let specs = [
            kd(),
            cp_exp(1.0, 1.0),
            SubordinatorSpec::stable(0.5).unwrap(),
            SubordinatorSpec::new(1.0, 0.0, LevyMeasure::stable(0.6).unwrap()).unwrap(),
            SubordinatorSpec::new(0.0, 0.0, LevyMeasure::gamma_jumps(1.0, 0.5).unwrap()).unwrap(),
            SubordinatorSpec::new(0.0, 1.0, LevyMeasure::gamma_jumps(1.0, 0.5).unwrap()).unwrap(),
            SubordinatorSpec::new(0.0, 0.0, LevyMeasure::atoms(&[(1.0, 1.0)]).unwrap()).unwrap(),
            SubordinatorSpec::new(0.4, 0.0, LevyMeasure::atoms(&[(0.5, 1.0), (1.3, 0.5)]).unwrap()).unwrap(),
            SubordinatorSpec::new(0.0, 1.0, LevyMeasure::atoms(&[(1.0, 1.0)]).unwrap()).unwrap(),
            SubordinatorSpec::new(0.2, 0.7, LevyMeasure::atoms(&[(0.6, 2.0), (1.5, 0.5)]).unwrap()).unwrap(),
            tilt(&SubordinatorSpec::stable(0.5).unwrap(), 1.5).unwrap(),
            stable_timechange(&kd(), 0.5).unwrap(),
        ];
        for s in &specs {
            let r = hpm_density(s).unwrap();
            let gap = r.laplace_consistency(s, &[2.0, 5.0, 10.0], &q).unwrap();
            assert!(gap < 1e-8, "{s}: {gap:e} ({})", r.provenance());
            let m = r.moment_check(s, &[1.0, 2.0, 5.0], &q).unwrap();
            assert!(m < 1e-8, "{s}: {m:e}");
        }
    }

    #[test]
    fn grid_series_for_tabulated_jumps() {
        let s = SubordinatorSpec::new(
            0.0,
            0.0,
            LevyMeasure::tabulated(vec![0.5, 1.0], vec![1.0, 0.0]).unwrap(),
        )
        .unwrap();
        let r = hpm_density(&s).unwrap();
        assert_eq!(r.provenance(), &Provenance::GridSeries);
        // One jump: x·f(x) with f = 2 on (1/2, 1).
        assert!((r.eval(0.9).unwrap() - 1.8).abs() < 2e-2);
        assert_eq!(r.eval(0.3).unwrap(), 0.0);
        let gap = r.moment_check(&s, &[1.0, 2.0, 5.0], &QuadratureConfig::default()).unwrap();
        assert!(gap < 1e-3, "{gap:e}");
        // Renewal theorem: ρ(x) → x/(n μ) summed over n, i.e. 1 far out.
        assert!((r.eval(40.0).unwrap() - 1.0).abs() < 2e-2);
    }

    #[test]
    fn atomic_renewal_measure() {
        let s = SubordinatorSpec::new(0.0, 0.0, LevyMeasure::atoms(&[(1.0, 1.0)]).unwrap()).unwrap();
        let r = hpm_density(&s).unwrap();
        let atoms = r.atoms().unwrap();
        // H = Σ δ_n / n.
        assert_eq!(atoms[0], (1.0, 1.0));
        assert!((atoms[4].0 - 5.0).abs() < 1e-12 && (atoms[4].1 - 0.2).abs() < 1e-15);
        assert_eq!(r.eval(2.5).unwrap(), 0.0);
    }

    #[test]
    fn drift_atom_series_against_inversion() {
        // The drift-atom series is exact; compare with numeric inversion away from the jumps.
        let s = SubordinatorSpec::new(0.0, 1.0, LevyMeasure::atoms(&[(1.0, 1.0)]).unwrap()).unwrap();
        let r = hpm_density(&s).unwrap();
        assert_eq!(r.provenance(), &Provenance::AtomSeries);
        assert!((r.eval(0.5).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        // Just past the atom: e^{-x} + x e^{-(x-1)}.
        let x = 1.25f64;
        assert!((r.eval(x).unwrap() - ((-x).exp() + x * (-(x - 1.0)).exp())).abs() < 1e-14);
    }

    #[test]
    fn wrappers_scale_density() {
        let base = hpm_density(&kd()).unwrap();
        let tc = hpm_density(&stable_timechange(&kd(), 0.4).unwrap()).unwrap();
        for x in log_grid(0.01, 50.0, 20) {
            assert_eq!(tc.eval(x).unwrap(), 0.4 * base.eval(x).unwrap());
        }
        let tl = hpm_density(&tilt(&SubordinatorSpec::stable(0.5).unwrap(), 2.0).unwrap()).unwrap();
        assert!((tl.eval(1.0).unwrap() - 0.5 * (-2.0f64).exp()).abs() < 1e-15);
        assert!(tl.provenance().is_closed_form());
    }

    #[test]
    fn killed_wrapper_goes_numeric() {
        let s = kill(&stable_timechange(&kd(), 0.5).unwrap(), 0.7).unwrap();
        let r = hpm_density(&s).unwrap();
        assert_eq!(r.provenance(), &Provenance::NumericInversion);
        let gap = r.moment_check(&s, &[1.5, 3.0], &QuadratureConfig::default()).unwrap();
        assert!(gap < 1e-6);
    }

    #[test]
    fn table_and_cbf_constructors() {
        let t = HarmonicDensity::from_table(vec![1.0, 2.0, 4.0], vec![0.5, 1.5, 0.5]).unwrap();
        assert_eq!(t.eval(0.5).unwrap(), 0.5);
        assert_eq!(t.eval(1.5).unwrap(), 1.0);
        assert!(t.eval(5.0).is_err());
        // η = 1 on [0, 1]: ρ(x) = (1 - e^{-x})/x.
        let c = HarmonicDensity::from_cbf_eta(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        for x in [0.1, 1.0, 7.0] {
            let want = -(-x as f64).exp_m1() / x;
            assert!((c.eval(x).unwrap() - want).abs() < 1e-13);
        }
    }
}
