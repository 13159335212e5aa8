//! Kolmogorov–Smirnov statistics.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub d: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Kolmogorov survival function `Q(t) = P(K > t)`.
///
/// Uses `2 Σ (-1)^{k-1} e^{-2k²t²}` for `t ≥ 1` and the Jacobi theta form
/// `1 - (√(2π)/t) Σ e^{-(2k-1)²π²/(8t²)}` below, each truncated once terms drop under 1e-12.
pub fn kolmogorov_survival(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        let mut s = 0.0;
        for k in 1..200 {
            let term = (-2.0 * (k * k) as f64 * t * t).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-12 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    } else {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut s = 0.0;
        for k in 1..200 {
            let m = (2 * k - 1) as f64;
            let term = (-m * m * pi2 / (8.0 * t * t)).exp();
            s += term;
            if term < 1e-12 {
                break;
            }
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / t * s).clamp(0.0, 1.0)
    }
}

/// One-sample statistic `D = sup |F_n - F|` and asymptotic p-value.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    let sn = n.sqrt();
    Ok(KsResult {
        d,
        p_value: kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d),
        n: xs.len(),
    })
}

/// Two-sample statistic with the asymptotic p-value at effective size `nm/(n+m)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    Ok(KsResult {
        d,
        p_value: kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d),
        n: xa.len() + xb.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }

    #[test]
    fn exact_quantiles() {
        let n = 1000;
        let s: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let r = ks_statistic(&s, uniform).unwrap();
        assert!((r.d - 0.5 / n as f64).abs() < 1e-15);
        assert!(r.p_value > 0.999);
    }

    #[test]
    fn constant_sample() {
        let r = ks_statistic(&[0.5; 100], uniform).unwrap();
        assert!(r.d >= 0.5);
        assert!(r.p_value < 1e-12);
    }

    #[test]
    fn pinned_seed_uniforms_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
        let s: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        let r = ks_statistic(&s, uniform).unwrap();
        assert!(r.p_value > 0.01, "p = {}", r.p_value);
    }

    #[test]
    fn survival_branches_meet() {
        let lo = kolmogorov_survival(1.0 - 1e-12);
        let hi = kolmogorov_survival(1.0);
        assert!((lo - hi).abs() < 1e-10);
        // Known quantile: P(K > 1.3581) ≈ 0.05.
        assert!((kolmogorov_survival(1.358_099) - 0.05).abs() < 1e-5);
    }

    #[test]
    fn two_sample_detects_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..5000).map(|_| rng.random::<f64>() + 0.1).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value < 1e-6);
        let c: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_two_sample(&a, &c).unwrap().p_value > 1e-3);
    }

    #[test]
    fn empty_sample_errors() {
        assert_eq!(ks_statistic(&[], uniform), Err(Error::EmptySample));
    }
}
