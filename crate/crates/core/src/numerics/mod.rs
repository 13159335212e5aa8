//! Shared numerical kernels.

pub mod ks;
pub mod laplace;
pub mod mittag_leffler;
pub mod quadrature;

pub use ks::{kolmogorov_survival, ks_statistic, ks_two_sample, KsResult};
pub use laplace::{gaver_stehfest, laplace_invert, talbot, InversionConfig, InversionMethod};
pub use mittag_leffler::mittag_leffler;
pub use quadrature::{integrate, integrate_0_inf, Quadrature, QuadratureConfig, TailDecay};

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 1);
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 1);
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let s: CompensatedSum = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn grids_hit_endpoints() {
        let g = log_grid(1e-3, 1e3, 7);
        assert!((g[0] - 1e-3).abs() < 1e-18);
        assert!((g[3] - 1.0).abs() < 1e-14);
        assert!((g[6] - 1e3).abs() < 1e-10);
        assert_eq!(lin_grid(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
    }
}
