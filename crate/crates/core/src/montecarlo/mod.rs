//! Exact-event simulation of subordinator paths and statistical checks of the
//! analytic results.
//!
//! Samples are produced in fixed blocks of [`BLOCK`] draws. Block `b` of purpose `p`
//! draws from its own ChaCha8 stream keyed by `(seed, p, b)`, and blocks are merged in
//! index order, so results do not depend on how many workers run them.

mod path;
mod verify;

pub use path::{sample_I, sample_R, sample_passage, Functional, GordonSampler, Passage, PathModel, PathSample};
pub use verify::{
    gordon_b_sequence, reference_I_cdf, reference_R_cdf, verify_factorization, verify_gordon, verify_joint,
    verify_moments, verify_undershoot, Cdf, GORDON_TERMS,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_positive, Error, Result};
use crate::numerics::KsResult;

pub type SimRng = ChaCha8Rng;

/// Samples per RNG stream.
pub const BLOCK: usize = 1024;

/// Events allowed on a single path before giving up.
pub const EVENT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub n_samples: usize,
    /// Jumps below `epsilon` are dropped for infinite-activity measures.
    pub epsilon: f64,
    /// Replace dropped jumps by their mean drift `∫_0^ε x Π(dx)`.
    pub compensate: bool,
    /// Worker threads; 0 picks `SUBORDKIT_THREADS` or the machine's parallelism.
    pub workers: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0x5eed_2718,
            n_samples: 100_000,
            epsilon: 1e-5,
            compensate: true,
            workers: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("epsilon", self.epsilon)?;
        if self.n_samples == 0 {
            return Err(Error::EmptySample);
        }
        Ok(())
    }

    /// Worker count after applying the `SUBORDKIT_THREADS` cap.
    pub fn threads(&self) -> usize {
        let cap = std::env::var("SUBORDKIT_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0);
        let base = if self.workers > 0 {
            self.workers
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        };
        cap.map_or(base, |c| base.min(c)).max(1)
    }

    pub fn with_samples(&self, n: usize) -> Self {
        Self {
            n_samples: n,
            ..self.clone()
        }
    }
}

/// The stream for block `block` of purpose `purpose`.
pub fn stream(seed: u64, purpose: u32, block: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 40) | block);
    rng
}

/// Draw `cfg.n_samples` values with `draw`, block by block.
pub(crate) fn run_blocks<T, F>(cfg: &SimConfig, purpose: u32, draw: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut SimRng) -> Result<T> + Sync,
{
    cfg.validate()?;
    let n = cfg.n_samples;
    let blocks = n.div_ceil(BLOCK);
    let work = || {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream(cfg.seed, purpose, b as u64);
                let len = BLOCK.min(n - b * BLOCK);
                (0..len).map(|_| draw(&mut rng)).collect::<Result<Vec<T>>>()
            })
            .collect::<Result<Vec<Vec<T>>>>()
    };
    let threads = cfg.threads();
    let out = if threads == 1 {
        work()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?
            .install(work)?
    };
    Ok(out.into_iter().flatten().collect())
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Ok(Self {
            mean,
            se: (var / n).sqrt(),
            n: values.len(),
        })
    }

    pub fn of_iter(values: impl Iterator<Item = f64>) -> Result<Self> {
        Self::of(&values.collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// `|estimate - reference| ≤ k·se + bias`.
    WithinSe { k: f64, bias: f64 },
    /// Kolmogorov–Smirnov p-value above the threshold.
    MinPValue(f64),
    /// Deterministic `estimate ≤ reference`.
    AtMost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub reference: f64,
    pub criterion: Criterion,
    pub p_value: Option<f64>,
    pub passed: bool,
}

impl Check {
    pub fn within_se(name: impl Into<String>, est: Estimate, reference: f64, k: f64, bias: f64) -> Self {
        // Zero-variance estimators still get rounding room.
        let slack = k * est.se + bias + 1e-12 * reference.abs().max(1.0);
        Self {
            name: name.into(),
            estimate: est.mean,
            se: est.se,
            reference,
            criterion: Criterion::WithinSe { k, bias },
            p_value: None,
            passed: (est.mean - reference).abs() <= slack,
        }
    }

    /// KS check: the estimate is `D`, its SE the asymptotic spread `0.2603/√n`, and the
    /// reference the threshold.
    pub fn ks(name: impl Into<String>, ks: KsResult, min_p: f64) -> Self {
        Self {
            name: name.into(),
            estimate: ks.d,
            se: 0.2603 / (ks.n as f64).sqrt(),
            reference: min_p,
            criterion: Criterion::MinPValue(min_p),
            p_value: Some(ks.p_value),
            passed: ks.p_value > min_p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub suite: String,
    pub label: String,
    pub seed: u64,
    pub n_samples: usize,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl SimReport {
    pub(crate) fn new(suite: &str, label: &str, cfg: &SimConfig) -> Self {
        Self {
            suite: suite.into(),
            label: label.into(),
            seed: cfg.seed,
            n_samples: cfg.n_samples,
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}
