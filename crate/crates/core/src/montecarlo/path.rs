//! Path samplers.
//!
//! Between jump events the path moves by drift only, so every functional used here
//! integrates in closed form over an inter-event interval. Killing is one more
//! competing exponential clock.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use statrs::function::gamma::gamma;

use super::{SimConfig, EVENT_BUDGET};
use crate::error::{Error, Result};
use crate::gen_gamma::{gordon_tail, GenGammaEvaluator, GordonTail};
use crate::harmonic::hpm_density;
use crate::numerics::QuadratureConfig;
use crate::subordinator::{LevyKind, Repr, SubordinatorSpec, Triplet};

/// Jump proposals at a constant rate; tempered kinds are thinned with `e^{-θJ}`.
#[derive(Debug, Clone)]
enum JumpLaw {
    None,
    Exponential { rate: f64 },
    Gamma(Gamma<f64>),
    /// Untempered stable jumps above `eps`: Pareto with index `gamma`.
    Pareto { eps: f64, inv_gamma: f64, theta: f64 },
    Atoms { cum: Vec<f64>, loc: Vec<f64> },
    /// Uniform segments `(a, b)` of the untempered table with cumulative masses.
    Segments { cum: Vec<f64>, seg: Vec<(f64, f64)>, theta: f64 },
}

/// A spec prepared for simulation: kill rate, effective drift and jump proposals.
#[derive(Debug, Clone)]
pub struct PathModel {
    kill: f64,
    drift: f64,
    rate: f64,
    jumps: JumpLaw,
    /// `∫_0^ε x Π(dx)` of the dropped jumps (0 for finite activity).
    small_jump_mean: f64,
    compensated: bool,
    /// `1/φ(1)`: expected remaining integral from a fresh start at level 0.
    tail_scale: f64,
}

/// A path on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub jumps: Vec<f64>,
    /// Death time, `+∞` when the path survives the horizon.
    pub death: f64,
    /// Drift used between events, including any small-jump compensation.
    pub drift: f64,
    pub horizon: f64,
}

impl PathSample {
    /// `ξ_t`, `+∞` from the death time on.
    pub fn position(&self, t: f64) -> f64 {
        if t >= self.death {
            return f64::INFINITY;
        }
        let k = self.times.partition_point(|&s| s <= t);
        self.drift * t + self.jumps[..k].iter().sum::<f64>()
    }
}

/// First passage above a level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Passage {
    pub level: f64,
    /// Last position strictly below the level.
    pub g: f64,
    /// `level - g`; zero when the level is crept over.
    pub undershoot: f64,
    pub killed_before: bool,
}

/// `I = ∫_0^ζ e^{-ξ_s} ds` and the position at the end of the simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Functional {
    pub i: f64,
    /// `ξ_{ζ-}` when killed; otherwise the level at which the tail rule stopped.
    pub xi_end: f64,
    pub killed: bool,
}

fn exp_time<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    if rate > 0.0 {
        let e: f64 = Exp1.sample(rng);
        e / rate
    } else {
        f64::INFINITY
    }
}

fn build_jumps(t: &Triplet, cfg: &SimConfig) -> Result<(f64, JumpLaw, f64)> {
    let theta = t.levy.tempering();
    Ok(match t.levy.kind() {
        LevyKind::None => (0.0, JumpLaw::None, 0.0),
        LevyKind::Exponential { rate, arrival } => (*arrival, JumpLaw::Exponential { rate: *rate }, 0.0),
        LevyKind::GammaJumps { beta, .. } => {
            let law = Gamma::new(*beta, 1.0 / (1.0 + theta)).map_err(|e| Error::InvalidSpec(e.to_string()))?;
            (t.levy.tail(0.0), JumpLaw::Gamma(law), 0.0)
        }
        LevyKind::Stable { gamma: g } => {
            let eps = cfg.epsilon;
            let rate = eps.powf(-g) / gamma(1.0 - g);
            let law = JumpLaw::Pareto {
                eps,
                inv_gamma: 1.0 / g,
                theta,
            };
            (rate, law, t.levy.small_jump_mean(eps))
        }
        LevyKind::Atoms(atoms) => {
            let mut acc = 0.0;
            let cum = atoms
                .iter()
                .map(|a| {
                    acc += a.mass;
                    acc
                })
                .collect();
            let loc = atoms.iter().map(|a| a.location).collect();
            (acc, JumpLaw::Atoms { cum, loc }, 0.0)
        }
        LevyKind::Tabulated(table) => {
            let (k, v) = (table.knots(), table.values());
            let mut acc = 0.0;
            let mut cum = Vec::new();
            let mut seg = Vec::new();
            for i in 0..k.len() - 1 {
                let m = v[i] - v[i + 1];
                if m > 0.0 {
                    acc += m;
                    cum.push(acc);
                    seg.push((k[i], k[i + 1]));
                }
            }
            (acc, JumpLaw::Segments { cum, seg, theta }, 0.0)
        }
    })
}

impl PathModel {
    /// Triplets, possibly wrapped in extra killing. Stable time changes have no
    /// jump description and are refused.
    pub fn new(spec: &SubordinatorSpec, cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let (t, extra_kill) = match spec.repr() {
            Repr::Triplet(t) => (t, 0.0),
            Repr::Killed { base, rate } => match base.triplet() {
                Some(t) => (t, *rate),
                None => return Err(Error::Unsupported("simulation of a killed non-triplet spec".into())),
            },
            _ => {
                return Err(Error::Unsupported(format!(
                    "simulation needs a Lévy triplet; `{}` has none",
                    spec.label()
                )))
            }
        };
        let (rate, jumps, small) = build_jumps(t, cfg)?;
        let drift = t.drift + if cfg.compensate { small } else { 0.0 };
        Ok(Self {
            kill: t.kill + extra_kill,
            drift,
            rate,
            jumps,
            small_jump_mean: small,
            compensated: cfg.compensate,
            tail_scale: 1.0 / spec.value(1.0),
        })
    }

    pub fn kill_rate(&self) -> f64 {
        self.kill
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// Rate of jump proposals (before thinning).
    pub fn jump_rate(&self) -> f64 {
        self.rate
    }

    pub fn small_jump_mean(&self) -> f64 {
        self.small_jump_mean
    }

    /// Drift per unit time missing from the simulated mean: the dropped small-jump
    /// mean when compensation is off, zero otherwise.
    pub fn mean_bias(&self) -> f64 {
        if self.compensated {
            0.0
        } else {
            self.small_jump_mean
        }
    }

    fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        let thin = |j: f64, theta: f64, rng: &mut R| {
            if theta == 0.0 || rng.random::<f64>() < (-theta * j).exp() {
                Some(j)
            } else {
                None
            }
        };
        match &self.jumps {
            JumpLaw::None => None,
            JumpLaw::Exponential { rate } => Some(exp_time(rng, *rate)),
            JumpLaw::Gamma(g) => Some(g.sample(rng)),
            JumpLaw::Pareto { eps, inv_gamma, theta } => {
                let u = 1.0 - rng.random::<f64>();
                thin(eps * u.powf(-inv_gamma), *theta, rng)
            }
            JumpLaw::Atoms { cum, loc } => {
                let u = rng.random::<f64>() * cum[cum.len() - 1];
                let i = cum.partition_point(|&c| c <= u).min(loc.len() - 1);
                Some(loc[i])
            }
            JumpLaw::Segments { cum, seg, theta } => {
                let u = rng.random::<f64>() * cum[cum.len() - 1];
                let i = cum.partition_point(|&c| c <= u).min(seg.len() - 1);
                let (a, b) = seg[i];
                thin(a + (b - a) * rng.random::<f64>(), *theta, rng)
            }
        }
    }

    /// Next event: waiting time, then `Err(())` for death or the proposed jump.
    fn next_event<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, std::result::Result<Option<f64>, ()>) {
        let total = self.rate + self.kill;
        let dt = exp_time(rng, total);
        if !dt.is_finite() {
            return (dt, Ok(None));
        }
        if self.kill > 0.0 && rng.random::<f64>() * total < self.kill {
            return (dt, Err(()));
        }
        (dt, Ok(self.propose(rng)))
    }

    /// Events on `[0, horizon]`.
    pub fn path<R: Rng + ?Sized>(&self, horizon: f64, rng: &mut R) -> Result<PathSample> {
        let mut out = PathSample {
            times: Vec::new(),
            jumps: Vec::new(),
            death: f64::INFINITY,
            drift: self.drift,
            horizon,
        };
        let mut t = 0.0;
        for _ in 0..EVENT_BUDGET {
            let (dt, ev) = self.next_event(rng);
            t += dt;
            if t > horizon {
                return Ok(out);
            }
            match ev {
                Err(()) => {
                    out.death = t;
                    return Ok(out);
                }
                Ok(Some(j)) => {
                    out.times.push(t);
                    out.jumps.push(j);
                }
                Ok(None) => {}
            }
        }
        Err(Error::HorizonExceeded(EVENT_BUDGET))
    }

    /// Exponential functional, integrated exactly between events.
    ///
    /// Stops at death, or once `e^{-ξ}/φ(1)`, the expected remaining integral, drops
    /// below `1e-12` of the accumulated value.
    pub fn functional<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Functional> {
        let a = self.drift;
        let mut x = 0.0f64;
        let mut acc = 0.0f64;
        for _ in 0..EVENT_BUDGET {
            let (dt, ev) = self.next_event(rng);
            let w = (-x).exp();
            if a > 0.0 {
                acc += w * -(-a * dt).exp_m1() / a;
            } else {
                acc += w * dt;
            }
            if !dt.is_finite() {
                return Ok(Functional {
                    i: acc,
                    xi_end: f64::INFINITY,
                    killed: false,
                });
            }
            x += a * dt;
            match ev {
                Err(()) => {
                    return Ok(Functional {
                        i: acc,
                        xi_end: x,
                        killed: true,
                    })
                }
                Ok(Some(j)) => x += j,
                Ok(None) => {}
            }
            if (-x).exp() * self.tail_scale < 1e-12 * acc {
                return Ok(Functional {
                    i: acc,
                    xi_end: x,
                    killed: false,
                });
            }
        }
        Err(Error::HorizonExceeded(EVENT_BUDGET))
    }

    /// First passage above `level`; creeping gives `g = level`.
    pub fn passage<R: Rng + ?Sized>(&self, level: f64, rng: &mut R) -> Result<Passage> {
        let a = self.drift;
        let mut x = 0.0f64;
        let stop = |g: f64, killed: bool| Passage {
            level,
            g,
            undershoot: level - g,
            killed_before: killed,
        };
        for _ in 0..EVENT_BUDGET {
            let (dt, ev) = self.next_event(rng);
            if a > 0.0 && dt >= (level - x) / a {
                return Ok(stop(level, false));
            }
            x += a * dt;
            match ev {
                Err(()) => return Ok(stop(x, true)),
                Ok(Some(j)) if x + j >= level => return Ok(stop(x, false)),
                Ok(Some(j)) => x += j,
                Ok(None) => {}
            }
        }
        Err(Error::HorizonExceeded(EVENT_BUDGET))
    }

    /// Passage above an `Exp(α)` level drawn from the same stream.
    pub fn passage_exp<R: Rng + ?Sized>(&self, alpha: f64, rng: &mut R) -> Result<Passage> {
        let level = exp_time(rng, alpha);
        self.passage(level, rng)
    }
}

/// One draw of `I` for `spec`.
#[allow(non_snake_case)]
pub fn sample_I<R: Rng + ?Sized>(spec: &SubordinatorSpec, cfg: &SimConfig, rng: &mut R) -> Result<f64> {
    Ok(PathModel::new(spec, cfg)?.functional(rng)?.i)
}

/// One draw of `(G_{e_α}, e_α - G_{e_α}, killed)`.
pub fn sample_passage<R: Rng + ?Sized>(
    spec: &SubordinatorSpec,
    alpha: f64,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<Passage> {
    crate::error::check_positive("alpha", alpha)?;
    PathModel::new(spec, cfg)?.passage_exp(alpha, rng)
}

/// Truncated product sampler for `R`:
/// `log R ≈ -γ_φ + Σ_{k≤n} (E G^{(k)} - G^{(k)}) + B_n`, with `G^{(k)}` the last
/// position below an independent `Exp(k)` level.
///
/// `B_n` is the deterministic part of the dropped tail. The random part
/// `log(R_{(n)}/φ(n+1))` is dropped; it vanishes in probability but comes with no rate.
#[derive(Debug, Clone)]
pub struct GordonSampler {
    model: PathModel,
    means: Vec<f64>,
    euler: f64,
    tail: GordonTail,
}

impl GordonSampler {
    pub fn new(spec: &SubordinatorSpec, n: u32, cfg: &SimConfig) -> Result<Self> {
        let model = PathModel::new(spec, cfg)?;
        let density = hpm_density(spec)?;
        let tail = gordon_tail(spec, n, &density, &QuadratureConfig::default())?;
        let means = (1..=n)
            .map(|k| {
                let k = k as f64;
                spec.derivative(k) / spec.value(k)
            })
            .collect();
        let euler = GenGammaEvaluator::for_phi(spec)?.euler_constant();
        Ok(Self {
            model,
            means,
            euler,
            tail,
        })
    }

    pub fn tail(&self) -> &GordonTail {
        &self.tail
    }

    pub fn euler_constant(&self) -> f64 {
        self.euler
    }

    pub fn log_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let mut sum = -self.euler + self.tail.b_n;
        for (i, m) in self.means.iter().enumerate() {
            let p = self.model.passage_exp((i + 1) as f64, rng)?;
            sum += m - p.g;
        }
        Ok(sum)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(self.log_sample(rng)?.exp())
    }
}

/// One draw of the truncated product for `R`.
#[allow(non_snake_case)]
pub fn sample_R<R: Rng + ?Sized>(spec: &SubordinatorSpec, n_trunc: u32, cfg: &SimConfig, rng: &mut R) -> Result<f64> {
    GordonSampler::new(spec, n_trunc, cfg)?.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::super::{run_blocks, stream, Estimate};
    use super::*;
    use crate::numerics::ks_statistic;
    use crate::subordinator::{conjugate, LevyMeasure};

    fn cfg(n: usize) -> SimConfig {
        SimConfig {
            n_samples: n,
            ..SimConfig::default()
        }
    }

    fn model(spec: &SubordinatorSpec) -> PathModel {
        PathModel::new(spec, &SimConfig::default()).unwrap()
    }

    #[test]
    fn pure_drift_integral_is_exact() {
        let m = model(&SubordinatorSpec::pure_drift(1.0).unwrap());
        let f = m.functional(&mut stream(1, 0, 0)).unwrap();
        assert_eq!(f.i, 1.0);
        let m = model(&SubordinatorSpec::pure_drift(4.0).unwrap());
        assert_eq!(m.functional(&mut stream(1, 0, 0)).unwrap().i, 0.25);
    }

    #[test]
    fn killed_drift_integral_is_uniform() {
        let m = model(&SubordinatorSpec::killed_drift(1.0, 1.0).unwrap());
        let xs = run_blocks(&cfg(100_000), 1, |r| Ok(m.functional(r)?.i)).unwrap();
        let e = Estimate::of(&xs).unwrap();
        assert!((e.mean - 0.5).abs() < 3.0 * e.se, "{e:?}");
        let ks = ks_statistic(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn conjugate_jump_integral_has_mean_two() {
        let pair = conjugate(&SubordinatorSpec::killed_drift(1.0, 1.0).unwrap()).unwrap();
        let m = model(&pair.dual);
        let xs = run_blocks(&cfg(100_000), 2, |r| Ok(m.functional(r)?.i)).unwrap();
        let e = Estimate::of(&xs).unwrap();
        assert!((e.mean - 2.0).abs() < 3.0 * e.se, "{e:?}");
    }

    #[test]
    fn creeping_gives_zero_undershoot() {
        let m = model(&SubordinatorSpec::pure_drift(1.0).unwrap());
        let p = m.passage(2.5, &mut stream(3, 0, 0)).unwrap();
        assert_eq!((p.g, p.undershoot, p.killed_before), (2.5, 0.0, false));
    }

    #[test]
    fn passages_satisfy_the_pathwise_identity() {
        let s = SubordinatorSpec::new(0.3, 0.5, LevyMeasure::exponential(2.0, 1.5).unwrap()).unwrap();
        let m = model(&s);
        let mut rng = stream(4, 0, 0);
        for _ in 0..2000 {
            let p = m.passage_exp(0.7, &mut rng).unwrap();
            assert!(p.g <= p.level);
            assert_eq!(p.undershoot, p.level - p.g);
        }
    }

    #[test]
    fn killed_drift_passage_moments() {
        let m = model(&SubordinatorSpec::killed_drift(1.0, 1.0).unwrap());
        let ps = run_blocks(&cfg(100_000), 5, |r| m.passage_exp(1.0, r)).unwrap();
        let atom = Estimate::of_iter(ps.iter().map(|p| (p.undershoot == 0.0) as u8 as f64)).unwrap();
        assert!((atom.mean - 0.5).abs() < 3.0 * atom.se, "{atom:?}");
        let g = Estimate::of_iter(ps.iter().map(|p| p.g)).unwrap();
        assert!((g.mean - 0.5).abs() < 3.0 * g.se, "{g:?}");
    }

    #[test]
    fn path_positions_are_monotone() {
        let s = SubordinatorSpec::new(0.0, 0.2, LevyMeasure::gamma_jumps(2.0, 0.5).unwrap()).unwrap();
        let p = model(&s).path(10.0, &mut stream(6, 0, 0)).unwrap();
        assert!(p.times.windows(2).all(|w| w[0] < w[1]));
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        assert!(grid.windows(2).all(|w| p.position(w[0]) <= p.position(w[1])));
    }

    #[test]
    fn stable_jumps_respect_the_cutoff() {
        let c = SimConfig {
            epsilon: 1e-3,
            ..SimConfig::default()
        };
        let m = PathModel::new(&SubordinatorSpec::stable(0.5).unwrap(), &c).unwrap();
        let p = m.path(1.0, &mut stream(7, 0, 0)).unwrap();
        assert!(!p.jumps.is_empty() && p.jumps.iter().all(|&j| j >= 1e-3));
        assert!(m.drift() > 0.0);
    }

    #[test]
    fn compensated_mean_matches_the_derivative_at_zero() {
        // Tempered 1/2-stable with θ = 1: φ'(0+) = γθ^{γ-1} = 1/2.
        let levy = LevyMeasure::stable(0.5).unwrap().tempered_by(1.0).unwrap();
        let s = SubordinatorSpec::new(0.0, 0.0, levy).unwrap();
        let target = s.derivative(0.0);
        assert!((target - 0.5).abs() < 1e-12);
        let mut raw_bias = Vec::new();
        for eps in [1e-3, 1e-4] {
            for compensate in [true, false] {
                let c = SimConfig {
                    epsilon: eps,
                    compensate,
                    n_samples: 20_000,
                    ..SimConfig::default()
                };
                let m = PathModel::new(&s, &c).unwrap();
                let xs = run_blocks(&c, 8, |r| m.path(1.0, r).map(|p| p.position(1.0))).unwrap();
                let e = Estimate::of(&xs).unwrap();
                let expected = target - m.mean_bias();
                assert!((e.mean - expected).abs() < 3.0 * e.se, "eps {eps} comp {compensate}: {e:?}");
                if !compensate {
                    raw_bias.push(m.mean_bias());
                }
            }
        }
        assert!(raw_bias[1] < raw_bias[0]);
    }

    #[test]
    fn gordon_sampler_for_pure_drift_is_exponential() {
        let s = SubordinatorSpec::pure_drift(1.0).unwrap();
        let g = GordonSampler::new(&s, 200, &SimConfig::default()).unwrap();
        let xs = run_blocks(&cfg(20_000), 9, |r| g.sample(r)).unwrap();
        let ks = ks_statistic(&xs, |x| -(-x.max(0.0)).exp_m1()).unwrap();
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn time_changes_are_refused() {
        let base = SubordinatorSpec::killed_drift(1.0, 1.0).unwrap();
        let tc = crate::subordinator::stable_timechange(&base, 0.5).unwrap();
        assert!(matches!(PathModel::new(&tc, &SimConfig::default()), Err(Error::Unsupported(_))));
    }
}
